"""Dense complex Hermitian linear algebra shared by the covariance engines.

Thin, contract-checked wrappers around LAPACK (via numpy/scipy): truncated
Hermitian eigendecomposition and positive-definite inversion. Everything here
operates on plain ``complex128`` ndarrays.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

# Contract tolerances, roughly 1000x double-precision epsilon.
HERMITIAN_TOL = 1e-12
_PD_RTOL = 1e-12


class SingularMatrixError(ValueError):
    """Inversion of a matrix that is not (numerically) Hermitian PD."""

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class EigenPair:
    """Top-K eigenpairs of a Hermitian matrix, eigenvalues descending.

    ``basis`` is d x K with orthonormal columns; ``values`` is length K,
    real, sorted descending. Each column's phase is fixed so that its
    largest-magnitude entry is real and positive.
    """

    basis: np.ndarray
    values: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def check_finite(a: np.ndarray, name: str = "array") -> None:
    if not np.all(np.isfinite(a.view(np.float64) if np.iscomplexobj(a) else a)):
        raise ValueError(f"{name} contains non-finite entries")


def check_hermitian(a: np.ndarray, name: str = "matrix") -> None:
    """Validate that ``a`` is square, finite and Hermitian to HERMITIAN_TOL.

    The tolerance is relative to max(1, ||a||_F).
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    check_finite(a, name)
    scale = max(1.0, float(np.linalg.norm(a)))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > HERMITIAN_TOL * scale:
        raise ValueError(
            f"{name} is not Hermitian: max asymmetry {asym:.3e} exceeds "
            f"{HERMITIAN_TOL * scale:.3e}"
        )


def _fix_phases(basis: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real-positive."""
    out = basis.copy()
    for k in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, k])))
        pivot = out[i, k]
        mag = abs(pivot)
        if mag > 0.0:
            out[:, k] *= pivot.conjugate() / mag
    return out


def hermitian_eig(a: np.ndarray, k: int) -> EigenPair:
    """Top-``k`` eigenpairs of a Hermitian matrix, by descending eigenvalue.

    Parameters
    ----------
    a : ndarray
        Hermitian d x d matrix.
    k : int
        Number of eigenpairs to keep, 1 <= k <= d.

    Returns
    -------
    EigenPair
        Orthonormal d x k basis and the k largest eigenvalues (descending).
        ``basis @ diag(values) @ basis.conj().T`` is the best rank-k
        Hermitian approximation of ``a`` in the Frobenius norm.
    """
    a = np.asarray(a, dtype=np.complex128)
    check_hermitian(a)
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k={k} out of range for a {d}x{d} matrix")
    values, vectors = np.linalg.eigh(a)  # ascending
    order = np.arange(d - 1, d - 1 - k, -1)
    return EigenPair(basis=_fix_phases(vectors[:, order]), values=values[order].copy())


def invert_hermitian(a: np.ndarray) -> np.ndarray:
    """Invert a Hermitian positive-definite matrix via Cholesky (LAPACK).

    Parameters
    ----------
    a : ndarray
        Hermitian PD matrix (smallest eigenvalue > 1e-12 * largest).

    Returns
    -------
    ndarray
        The Hermitian inverse, satisfying ``a @ inv ~= I`` to 1e-8 relative.

    Raises
    ------
    SingularMatrixError
        If the Cholesky factorization fails (singular or indefinite input);
        the error carries a condition-number estimate.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    check_hermitian(a)
    c, info = lapack.zpotrf(a, lower=1)
    if info != 0:
        ev = np.linalg.eigvalsh(a)
        cond = float(ev[-1] / ev[0]) if ev[0] != 0.0 else np.inf
        raise SingularMatrixError(
            "matrix is not positive definite; cannot invert", condition=cond
        )
    inv, info = lapack.zpotri(c, lower=1)
    if info != 0:  # pragma: no cover - zpotri only fails on zero pivots
        raise SingularMatrixError("triangular inversion failed")
    # zpotri fills one triangle; mirror it to a full Hermitian matrix.
    lower = np.tril(inv)
    return lower + np.tril(inv, -1).conj().T


def invert_hermitian_eigh(a: np.ndarray) -> np.ndarray:
    """Hermitian PD inverse via a full eigendecomposition.

    Several times costlier than :func:`invert_hermitian` but with a flop
    count that dominates cache effects even at moderate sizes, so its
    measured runtime scales like its asymptotic M^3 cost. The conventional
    per-step baseline in the timing experiment inverts with this routine.
    No input validation; raises on a non-PD spectrum.
    """
    values, vectors = np.linalg.eigh(a)
    if values[0] <= 0.0:
        raise SingularMatrixError(
            "matrix is not positive definite; cannot invert",
            condition=float(values[-1] / values[0]) if values[0] != 0.0 else np.inf,
        )
    return (vectors * (1.0 / values)) @ vectors.conj().T
