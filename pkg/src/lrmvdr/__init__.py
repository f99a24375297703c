"""Recursive MVDR beamforming for large uniform linear arrays.

Two engines share one simulation and metrics stack:

* an exact engine that maintains the full M x M inverse covariance with
  rank-one (Sherman-Morrison) updates, and
* a low-rank engine that freezes a rank-K eigenbasis of the initial
  covariance and updates only the K x K inverse core, at O(M*K + K^2)
  per step instead of O(M^3).

The per-step update kernels are compiled (Cython) when the extension is
available and fall back to numpy otherwise; ``lrmvdr.kernels.BACKEND``
reports which one is active.
"""

from .arrays import ArrayGeometry, steering_vector
from .beamform import BeamWeights, apply_weights, lowrank_weights, mvdr_weights
from .covariance import CovarianceState, DegenerateUpdateError, sample_covariance
from .kernels import BACKEND
from .linalg import EigenPair, SingularMatrixError, hermitian_eig, invert_hermitian
from .lowrank import LowRankState
from .metrics import BeamMetrics, Beampattern, beampattern, extract_metrics, output_sinr_db, sinr_gain_db
from .simulate import ScenarioConfig, SnapshotStream, SourceSpec, analytic_covariance, chirp_sample, doa_at

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BACKEND",
    "BeamMetrics",
    "Beampattern",
    "BeamWeights",
    "CovarianceState",
    "DegenerateUpdateError",
    "EigenPair",
    "LowRankState",
    "ScenarioConfig",
    "SingularMatrixError",
    "SnapshotStream",
    "SourceSpec",
    "analytic_covariance",
    "apply_weights",
    "beampattern",
    "chirp_sample",
    "doa_at",
    "extract_metrics",
    "hermitian_eig",
    "invert_hermitian",
    "lowrank_weights",
    "mvdr_weights",
    "output_sinr_db",
    "sample_covariance",
    "sinr_gain_db",
    "steering_vector",
    "__version__",
]
