"""MVDR weight computation for both covariance engines.

Weights satisfy the distortionless constraint w^H a(theta0) = 1 by
construction; both paths raise on degenerate denominators instead of
emitting unusable weights.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lowrank import LowRankState

# Weight denominators at or below this are treated as degenerate.
MIN_WEIGHT_DENOM = 1e-14


class SteeringDegeneracyError(ArithmeticError):
    """Steering vector is (numerically) orthogonal to the covariance model."""


@dataclass(frozen=True)
class BeamWeights:
    """Complex weight vector plus provenance (steer angle, engine name)."""

    w: np.ndarray
    steer_doa_deg: float = field(default=np.nan)
    engine: str = "exact"


def mvdr_weights(rinv: np.ndarray, steering: np.ndarray, steer_doa_deg: float = np.nan,
                 engine: str = "exact") -> BeamWeights:
    """w = rinv @ a / (a^H rinv a) for a Hermitian PD inverse covariance.

    Raises ``SteeringDegeneracyError`` when the quadratic form a^H rinv a
    is not safely positive.
    """
    num, denom = kernels.mvdr_numerator(rinv, np.ascontiguousarray(steering, dtype=np.complex128))
    if denom <= MIN_WEIGHT_DENOM:
        raise SteeringDegeneracyError(f"a^H R^-1 a = {denom:.3e} is not positive")
    return BeamWeights(w=num / denom, steer_doa_deg=steer_doa_deg, engine=engine)


def lowrank_weights(state: LowRankState, steering: np.ndarray,
                    steer_doa_deg: float = np.nan) -> BeamWeights:
    """Subspace MVDR weights U (core_inv (U^H a)) / (a^H U core_inv U^H a).

    Computed right-to-left in O(M*K + K^2) without forming the M x M
    surrogate; equals ``mvdr_weights(state.reconstruct_inverse(), a)``.
    Raises ``SteeringDegeneracyError`` when the steering vector is
    orthogonal to the retained subspace (K too small or basis stale).
    """
    num, denom = kernels.lowrank_numerator(
        state.basis, state.core_inv, np.ascontiguousarray(steering, dtype=np.complex128)
    )
    if abs(denom) <= MIN_WEIGHT_DENOM:
        raise SteeringDegeneracyError(
            f"steering vector has negligible energy ({denom:.3e}) in the rank-"
            f"{state.rank} subspace"
        )
    return BeamWeights(w=num / denom, steer_doa_deg=steer_doa_deg, engine="lowrank")


def apply_weights(weights: BeamWeights, x: np.ndarray) -> complex:
    """Beamformer output w^H x for one snapshot."""
    if weights.w.shape != np.shape(x):
        raise ValueError("weight/snapshot length mismatch")
    return complex(np.vdot(weights.w, x))


def distortionless_deviation(weights: BeamWeights, steering: np.ndarray) -> float:
    """|w^H a - 1|; 0 for an exactly distortionless weight vector."""
    return abs(complex(np.vdot(weights.w, steering)) - 1.0)
