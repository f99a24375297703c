"""Uniform linear array geometry and steering vectors.

Angles are degrees from boresight at every public boundary; element spacing
is fixed at half a wavelength, so element k responds to a plane wave from
angle theta with phase exp(-j * k * pi * sin(theta)).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Half-wavelength uniform linear array with ``num_elements`` sensors."""

    num_elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.num_elements < 2:
            raise ValueError("array needs at least 2 elements")
        if self.spacing_wavelengths != 0.5:
            raise ValueError("only half-wavelength spacing is supported")


def steering_vector(geom: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Steering vector a(theta): entry k is exp(-j * k * pi * sin(theta)).

    ``theta_deg`` must lie in [-90, 90]. Every entry has unit modulus.
    """
    if not -90.0 <= theta_deg <= 90.0:
        raise ValueError(f"theta {theta_deg} deg outside [-90, 90]")
    k = np.arange(geom.num_elements)
    return np.exp(-1j * np.pi * k * np.sin(np.deg2rad(theta_deg)))


def steering_matrix(geom: ArrayGeometry, thetas_deg: np.ndarray) -> np.ndarray:
    """Column-stacked steering vectors for a grid of angles (M x n)."""
    thetas_deg = np.asarray(thetas_deg, dtype=float)
    if thetas_deg.size and (thetas_deg.min() < -90.0 or thetas_deg.max() > 90.0):
        raise ValueError("steering angles outside [-90, 90]")
    k = np.arange(geom.num_elements)[:, None]
    return np.exp(-1j * np.pi * k * np.sin(np.deg2rad(thetas_deg))[None, :])
