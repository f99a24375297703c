"""Exact covariance engine: windowed estimate, forgetting-factor recursion,
and the full-rank rank-one inverse update.

``CovarianceState`` owns an M x M Hermitian covariance ``r`` and, when
maintained, its inverse ``rinv``. Updates are strictly sequential per state
(single owner); distinct states may be updated concurrently.
"""

import numpy as np

from . import kernels
from .linalg import check_finite, invert_hermitian

# Below this, a rank-one update denominator is treated as numerically
# singular and the state is left untouched.
MIN_UPDATE_DENOM = 1e-12


class DegenerateUpdateError(ArithmeticError):
    """Rank-one update denominator underflow; caller should reinitialize."""


def sample_covariance(snapshots) -> np.ndarray:
    """Average outer product (1/m) * sum_i x_i x_i^H of a snapshot window.

    Parameters
    ----------
    snapshots : sequence of ndarray or (m, M) ndarray
        At least one snapshot; all the same length.

    Returns
    -------
    ndarray
        Hermitian PSD M x M matrix with trace (1/m) * sum ||x_i||^2.
    """
    x = np.asarray(snapshots, dtype=np.complex128)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("need a non-empty (m, M) snapshot window")
    check_finite(x, "snapshots")
    r = (x.T @ x.conj()) / x.shape[0]
    return 0.5 * (r + r.conj().T)


class CovarianceState:
    """Forgetting-factor covariance recursion with an exact inverse track.

    Parameters
    ----------
    r : ndarray
        Initial Hermitian PD covariance.
    alpha : float
        Forgetting factor in (0, 1); weight of the old estimate per step.
    maintain_inverse : bool
        Keep ``rinv`` in sync via rank-one updates (required for
        ``sm_inverse_update`` and weight computation).
    """

    def __init__(self, r: np.ndarray, alpha: float, maintain_inverse: bool = True, step: int = 0):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        self.r = np.array(r, dtype=np.complex128, order="C")
        self.alpha = float(alpha)
        self.step = step
        self.rinv = invert_hermitian(self.r) if maintain_inverse else None

    @classmethod
    def from_window(cls, snapshots, alpha: float, maintain_inverse: bool = True,
                    diagonal_loading: float = 0.0) -> "CovarianceState":
        """Initialize from a snapshot window via ``sample_covariance``.

        ``diagonal_loading`` adds that multiple of the identity before
        inversion; it defaults to 0 and stays 0 in all stock experiment
        configurations.
        """
        r = sample_covariance(snapshots)
        if diagonal_loading:
            r += diagonal_loading * np.eye(r.shape[0])
        return cls(r, alpha, maintain_inverse=maintain_inverse)

    @property
    def dim(self) -> int:
        return self.r.shape[0]

    def _check_snapshot(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.complex128)
        if x.shape != (self.dim,):
            raise ValueError(f"snapshot length {x.shape} does not match M={self.dim}")
        return x

    def recursive_update(self, x: np.ndarray) -> None:
        """r <- alpha * r + (1 - alpha) * x x^H (Hermitian preserved)."""
        x = self._check_snapshot(x)
        kernels.rank_one_update(self.r, x, self.alpha)
        self.step += 1

    def sm_inverse_update(self, x: np.ndarray) -> None:
        """Update ``rinv`` to the exact inverse of alpha*r + (1-alpha)*x x^H.

        O(M^2): one matrix-vector product and one outer-product correction;
        symmetry is re-enforced afterwards. Raises ``DegenerateUpdateError``
        (state untouched) when the update denominator underflows.
        """
        if self.rinv is None:
            raise ValueError("state does not maintain an inverse")
        x = self._check_snapshot(x)
        denom = kernels.sm_update(self.rinv, x, self.alpha, MIN_UPDATE_DENOM)
        if denom <= MIN_UPDATE_DENOM:
            raise DegenerateUpdateError(
                f"update denominator {denom:.3e} underflowed at step {self.step}"
            )

    def update(self, x: np.ndarray) -> None:
        """Advance both tracks with one snapshot (inverse first)."""
        if self.rinv is not None:
            self.sm_inverse_update(x)
        self.recursive_update(x)
