"""Per-step engine wrappers used by the experiment runners.

Both engines consume the same snapshot sequence within a run and expose the
same surface: ``initialize(window)``, ``step(x)``, ``weights(steering, doa)``.
Each keeps a ring buffer of the trailing ``window_m`` snapshots so it can
reinitialize from recent data; the low-rank engine also reinitializes itself
when an update denominator underflows.
"""

import numpy as np

from .beamform import BeamWeights, lowrank_weights, mvdr_weights
from .covariance import CovarianceState, DegenerateUpdateError, sample_covariance
from .linalg import invert_hermitian
from .lowrank import LowRankState


class _TrailingWindow:
    """Fixed-capacity ring buffer of the most recent snapshots."""

    def __init__(self, capacity: int, dim: int):
        self._buf = np.zeros((capacity, dim), dtype=np.complex128)
        self._count = 0

    def push(self, x) -> None:
        self._buf[self._count % len(self._buf)] = x
        self._count += 1

    def snapshot_window(self) -> np.ndarray:
        if self._count < len(self._buf):
            return self._buf[: self._count]
        return self._buf


class ExactMvdrEngine:
    """Full-rank engine: forgetting-factor covariance plus exact inverse.

    ``inverse_mode="recursive"`` (default) keeps the inverse in sync with
    O(M^2) rank-one updates. ``inverse_mode="direct"`` re-inverts the
    covariance from scratch every step (O(M^3)); that is the conventional
    baseline the timing experiment measures.
    """

    name = "exact"

    def __init__(self, alpha: float, inverse_mode: str = "recursive",
                 diagonal_loading: float = 0.0):
        if inverse_mode not in ("recursive", "direct"):
            raise ValueError("inverse_mode must be 'recursive' or 'direct'")
        self.alpha = alpha
        self.inverse_mode = inverse_mode
        self.diagonal_loading = diagonal_loading
        self.state = None
        self._window = None
        self.reinit_count = 0

    def initialize(self, window) -> None:
        window = np.asarray(window, dtype=np.complex128)
        self.state = CovarianceState.from_window(
            window, self.alpha, maintain_inverse=True,
            diagonal_loading=self.diagonal_loading,
        )
        self._window = _TrailingWindow(window.shape[0], window.shape[1])
        for x in window:
            self._window.push(x)

    def step(self, x) -> None:
        self._window.push(x)
        if self.inverse_mode == "direct":
            self.state.recursive_update(x)
            self.state.rinv = invert_hermitian(self.state.r)
            return
        try:
            self.state.update(x)
        except DegenerateUpdateError:
            self.reinitialize()

    def reinitialize(self) -> None:
        self.state = CovarianceState.from_window(
            self._window.snapshot_window(), self.alpha, maintain_inverse=True,
            diagonal_loading=self.diagonal_loading,
        )
        self.reinit_count += 1

    def weights(self, steering, doa_deg: float) -> BeamWeights:
        return mvdr_weights(self.state.rinv, steering, steer_doa_deg=doa_deg, engine=self.name)


class LowRankMvdrEngine:
    """Rank-K engine: frozen basis, O(M*K + K^2) core updates per step."""

    name = "lowrank"

    def __init__(self, k: int, alpha: float):
        self.k = k
        self.alpha = alpha
        self.state = None
        self._window = None
        self.reinit_count = 0

    def initialize(self, window) -> None:
        window = np.asarray(window, dtype=np.complex128)
        self.state = LowRankState.initialize(sample_covariance(window), self.k, self.alpha)
        self._window = _TrailingWindow(window.shape[0], window.shape[1])
        for x in window:
            self._window.push(x)

    def step(self, x) -> None:
        self._window.push(x)
        try:
            self.state.inverse_update(x)
        except DegenerateUpdateError:
            # underflow doubles as a forced-reinitialization trigger; the
            # offending snapshot is already in the window
            self.reinitialize()

    def reinitialize(self) -> None:
        step = self.state.step
        self.state = LowRankState.from_window(self._window.snapshot_window(), self.k, self.alpha)
        self.state.step = step
        self.reinit_count += 1

    def weights(self, steering, doa_deg: float) -> BeamWeights:
        return lowrank_weights(self.state, steering, steer_doa_deg=doa_deg)
