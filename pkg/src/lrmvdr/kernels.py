"""Backend selection for the per-step kernels.

The compiled extension is used when it was built; otherwise the numpy
implementations take over with identical semantics. ``BACKEND`` records
which one is active for this process.
"""

from . import _kernels_py

try:
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    _impl = _kernels_py
    BACKEND = "numpy"

sm_update = _impl.sm_update
rank_one_update = _impl.rank_one_update
project_conj = _impl.project_conj
mvdr_numerator = _impl.mvdr_numerator
lowrank_numerator = _impl.lowrank_numerator


def available_backends():
    """Names of the kernel backends importable in this process."""
    names = ["numpy"]
    if BACKEND == "cython":
        names.append("cython")
    return names


def get_backend(name: str):
    """Return the kernel module for ``name`` ("numpy" or "cython")."""
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        if BACKEND != "cython":
            raise ValueError("compiled kernels are not available")
        return _impl
    raise ValueError(f"unknown kernel backend {name!r}")
