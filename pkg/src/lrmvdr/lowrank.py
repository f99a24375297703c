"""Low-rank inverse-covariance surrogate with O(M*K + K^2) per-step updates.

The covariance inverse is approximated as ``U @ core_inv @ U^H`` where the
M x K orthonormal basis ``U`` is frozen at (re)initialization and only the
K x K Hermitian core ``core_inv`` is updated per snapshot, via the same
rank-one inverse update as the exact engine but applied to the projected
snapshot ``U^H x``. Freezing the basis is what makes the update cheap; it is
also why accuracy decays as source directions drift away from the retained
subspace, and why reinitializing from a fresh window restores it.
"""

import numpy as np

from . import kernels
from .covariance import MIN_UPDATE_DENOM, DegenerateUpdateError, sample_covariance
from .linalg import hermitian_eig

# Relative eigenvalue floor: initialization refuses rank K when the K-th
# eigenvalue has collapsed against the first.
RANK_RTOL = 1e-12


class RankDeficiencyError(ValueError):
    """Requested rank exceeds the numerically significant spectrum."""


class LowRankState:
    """Rank-K surrogate of an inverse covariance with a frozen basis.

    Build with :meth:`initialize` (or :meth:`from_window`); advance with
    :meth:`inverse_update`. Single-owner mutable, like ``CovarianceState``.
    """

    def __init__(self, basis: np.ndarray, core_inv: np.ndarray, alpha: float, step: int = 0):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        self.basis = np.ascontiguousarray(basis, dtype=np.complex128)
        self.core_inv = np.array(core_inv, dtype=np.complex128, order="C")
        self.alpha = float(alpha)
        self.step = step

    @classmethod
    def initialize(cls, r: np.ndarray, k: int, alpha: float) -> "LowRankState":
        """Truncated eigendecomposition of a covariance: U, diag(1/lambda).

        ``r`` must be Hermitian PD; the top-``k`` eigenpairs are kept and the
        core inverse starts diagonal. The reconstruction ``U diag(lambda) U^H``
        is the best rank-k Hermitian approximation of ``r``.
        """
        pair = hermitian_eig(r, k)
        if pair.values[-1] <= RANK_RTOL * pair.values[0]:
            raise RankDeficiencyError(
                f"eigenvalue {k} is {pair.values[-1]:.3e}, negligible against "
                f"{pair.values[0]:.3e}; reduce k"
            )
        core_inv = np.diag(1.0 / pair.values).astype(np.complex128)
        return cls(pair.basis, core_inv, alpha)

    @classmethod
    def from_window(cls, snapshots, k: int, alpha: float) -> "LowRankState":
        """``initialize`` on the sample covariance of a snapshot window."""
        snapshots = np.asarray(snapshots, dtype=np.complex128)
        if snapshots.ndim != 2 or snapshots.shape[0] < k:
            raise ValueError(f"need at least k={k} snapshots to initialize")
        return cls.initialize(sample_covariance(snapshots), k, alpha)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        """Subspace coordinates U^H x, O(M*K)."""
        return kernels.project_conj(self.basis, x)

    def inverse_update(self, x: np.ndarray) -> None:
        """Fold one snapshot into the core inverse.

        With ``xt = U^H x`` (computed once), ``core_inv`` becomes the exact
        inverse of ``alpha * core + (1 - alpha) * xt xt^H``. Total cost
        O(M*K + K^2); no M x M object is formed or traversed. Raises
        ``DegenerateUpdateError`` (state untouched) on denominator underflow,
        which callers should treat as a forced-reinitialization signal.
        """
        x = np.ascontiguousarray(x, dtype=np.complex128)
        if x.shape != (self.dim,):
            raise ValueError(f"snapshot length {x.shape} does not match M={self.dim}")
        xt = kernels.project_conj(self.basis, x)
        denom = kernels.sm_update(self.core_inv, xt, self.alpha, MIN_UPDATE_DENOM)
        if denom <= MIN_UPDATE_DENOM:
            raise DegenerateUpdateError(
                f"core update denominator {denom:.3e} underflowed at step {self.step}"
            )
        self.step += 1

    def reconstruct_inverse(self) -> np.ndarray:
        """Materialize the M x M surrogate U core_inv U^H.

        Diagnostic/test use only: O(M^2 K), never on the per-step path.
        """
        out = self.basis @ self.core_inv @ self.basis.conj().T
        return 0.5 * (out + out.conj().T)

    def reinitialize(self, recent_snapshots, k: int | None = None) -> None:
        """Recompute basis and core from a fresh window; step count continues.

        The covariance is formed and decomposed only here, never per step.
        """
        k = self.rank if k is None else k
        fresh = LowRankState.from_window(recent_snapshots, k, self.alpha)
        self.basis = fresh.basis
        self.core_inv = fresh.core_inv
