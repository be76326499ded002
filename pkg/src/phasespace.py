"""Uniform phase space grids and their discrete Fourier transforms.

Fourier convention used throughout the package:

    F(u, v) = (1 / 2 pi) * integral exp(-i (x u + y v)) f(x, y) dx dy
    f(x, y) = (1 / 2 pi) * integral exp(+i (x u + y v)) F(u, v) du dv

so a convolution transforms as (f * g)^ = 2 pi f^ g^ and a probability
density has F(0, 0) = 1 / (2 pi).
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Tuple

import numpy as np

from src.errors import DomainError


logger = logging.getLogger(__name__)

GRID_TOL = 1e-4
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform rectangular grid over [q_min, q_max) x [p_min, p_max).

    Points sit at q_min + i dq, i = 0..n_q-1, so a symmetric range with an even
    point count contains the origin.
    """

    q_min: float = -8.0
    q_max: float = 8.0
    p_min: float = -8.0
    p_max: float = 8.0
    n_q: int = 256
    n_p: int = 256

    def __post_init__(self) -> None:
        if not (self.q_max > self.q_min and self.p_max > self.p_min):
            raise DomainError(f"Empty grid range: {self}")
        if self.n_q < 2 or self.n_p < 2:
            raise DomainError(f"Grid needs at least 2 points per axis, got {self.n_q}x{self.n_p}")

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n_q

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def q_axis(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.n_q)

    @property
    def p_axis(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_q, self.n_p

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q_axis, self.p_axis, indexing="ij")

    def cell_edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Upper cell edges, where cumulative sums of cell-centered values are exact to O(d^2)."""
        return self.q_axis + self.dq / 2, self.p_axis + self.dp / 2

    def u_axis(self) -> np.ndarray:
        return 2 * math.pi * np.fft.fftfreq(self.n_q, d=self.dq)

    def v_axis(self) -> np.ndarray:
        return 2 * math.pi * np.fft.fftfreq(self.n_p, d=self.dp)

    def frequency_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.u_axis(), self.v_axis(), indexing="ij")

    def interior_mask(self, margin: float = 0.1) -> np.ndarray:
        """Points at least a fraction `margin` of the extent away from every edge."""
        q, p = self.mesh()
        wq = margin * (self.q_max - self.q_min)
        wp = margin * (self.p_max - self.p_min)
        return (
            (q >= self.q_min + wq) & (q <= self.q_max - wq)
            & (p >= self.p_min + wp) & (p <= self.p_max - wp)
        )


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Real values (densities or kernels) sampled on a GridSpec."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.spec.shape:
            raise DomainError(f"Grid values shape {values.shape} does not match {self.spec.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, spec: GridSpec, function: Callable[[np.ndarray, np.ndarray], Any]) -> "PhaseSpaceGrid":
        q, p = spec.mesh()
        return cls(spec, np.asarray(function(q, p), dtype=float))

    def with_values(self, values: np.ndarray) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(self.spec, values)

    def mass(self) -> float:
        """Riemann sum of the values."""
        return float(self.values.sum() * self.spec.dq * self.spec.dp)

    def normalized(self) -> "PhaseSpaceGrid":
        mass = self.mass()
        if mass <= 0:
            raise DomainError("Cannot normalize a grid with non-positive mass")
        return self.with_values(self.values / mass)

    def boundary_max(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))

    def marginal_q(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.spec.dp

    def marginal_p(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.spec.dq

    def cumulative(self) -> np.ndarray:
        """Joint CDF evaluated at the upper cell edges."""
        return np.cumsum(np.cumsum(self.values, axis=0), axis=1) * self.spec.dq * self.spec.dp

    def l1_distance(self, other: "PhaseSpaceGrid") -> float:
        return float(np.abs(self.values - other.values).sum() * self.spec.dq * self.spec.dp)

    def relative_l2_error(self, reference: "PhaseSpaceGrid") -> float:
        return float(np.linalg.norm(self.values - reference.values) / np.linalg.norm(reference.values))

    def sup_distance(self, other: "PhaseSpaceGrid") -> float:
        return float(np.max(np.abs(self.values - other.values)))

    def check_coverage(self, name: str = "density") -> bool:
        """Log a warning when the grid cuts off a non-negligible part of the density."""
        boundary = self.boundary_max()
        covered = boundary <= BOUNDARY_TOL
        if not covered:
            logger.warning(f"Grid does not cover the {name}: boundary value {boundary:.2e}")
        mass = self.mass()
        if abs(mass - 1.0) > GRID_TOL:
            logger.warning(f"Grid mass of the {name} is {mass:.6f}, outside tolerance {GRID_TOL}")
            covered = False
        return covered

    def rows(self) -> List[Tuple[float, float, float]]:
        q, p = self.spec.mesh()
        return list(zip(q.ravel().tolist(), p.ravel().tolist(), self.values.ravel().tolist()))


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Fourier transform of a PhaseSpaceGrid in numpy's FFT frequency layout."""

    spec: GridSpec
    values: np.ndarray

    @property
    def du(self) -> float:
        return 2 * math.pi / (self.spec.n_q * self.spec.dq)

    @property
    def dv(self) -> float:
        return 2 * math.pi / (self.spec.n_p * self.spec.dp)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.spec.frequency_mesh()

    def with_values(self, values: np.ndarray) -> "FrequencyGrid":
        return FrequencyGrid(self.spec, values)


def _origin_phase(spec: GridSpec) -> np.ndarray:
    u, v = spec.frequency_mesh()
    return np.exp(-1j * (u * spec.q_min + v * spec.p_min))


def to_frequency(grid: PhaseSpaceGrid) -> FrequencyGrid:
    """Discrete version of F(u, v) = (1/2pi) integral exp(-i(xu + yv)) f dx dy."""
    spec = grid.spec
    scale = spec.dq * spec.dp / (2 * math.pi)
    return FrequencyGrid(spec, scale * _origin_phase(spec) * np.fft.fft2(grid.values))


def from_frequency(frequency: FrequencyGrid) -> PhaseSpaceGrid:
    """Exact inverse of to_frequency; the imaginary residue is discarded."""
    spec = frequency.spec
    scale = frequency.du * frequency.dv / (2 * math.pi) * spec.n_q * spec.n_p
    values = scale * np.fft.ifft2(frequency.values / _origin_phase(spec))
    return PhaseSpaceGrid(spec, np.real(values))


def apply_fourier_multiplier(
    grid: PhaseSpaceGrid, multiplier: Callable[[np.ndarray, np.ndarray], np.ndarray]
) -> PhaseSpaceGrid:
    """Multiply the transform of grid by multiplier(u, v) and transform back."""
    frequency = to_frequency(grid)
    u, v = frequency.mesh()
    return from_frequency(frequency.with_values(frequency.values * multiplier(u, v)))
