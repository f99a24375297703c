"""Pure-numpy per-step kernels; fallback twin of the compiled extension.

Same signatures and in-place semantics as ``lrmvdr._kernels``. All arrays
are C-contiguous complex128; callers own validation.
"""

import numpy as np


def sm_update(ainv, x, alpha, min_denom):
    """Rank-one inverse update, in place.

    Replaces ``ainv`` by the inverse of ``alpha * A + (1 - alpha) * x x^H``
    (A the matrix currently inverted by ``ainv``) and re-enforces Hermitian
    symmetry. Returns the update denominator; if it is <= ``min_denom`` the
    state is left untouched so the caller can reinitialize.
    """
    u = ainv @ x
    denom = alpha + (1.0 - alpha) * float(np.real(np.vdot(x, u)))
    if denom <= min_denom:
        return denom
    ainv -= ((1.0 - alpha) / denom) * np.outer(u, u.conj())
    ainv *= 1.0 / alpha
    ainv += ainv.conj().T.copy()
    ainv *= 0.5
    return denom


def rank_one_update(r, x, alpha):
    """In place: r <- alpha * r + (1 - alpha) * x x^H."""
    r *= alpha
    r += (1.0 - alpha) * np.outer(x, x.conj())


def project_conj(u, x):
    """Subspace coordinates u^H x of a length-M vector, O(M*K)."""
    return u.conj().T @ x


def mvdr_numerator(ainv, a):
    """Unnormalized MVDR weights: (ainv @ a, Re(a^H ainv a))."""
    num = ainv @ a
    return num, float(np.real(np.vdot(a, num)))


def lowrank_numerator(u, core_inv, a):
    """Unnormalized subspace MVDR weights, never forming an M x M matrix.

    Returns ``(u @ (core_inv @ (u^H a)), Re((u^H a)^H core_inv (u^H a)))``,
    evaluated right-to-left in O(M*K + K^2).
    """
    at = u.conj().T @ a
    y = core_inv @ at
    return u @ y, float(np.real(np.vdot(at, y)))
