"""Tests for phase space grids and the Fourier convention."""

import logging
import math

import numpy as np
import pytest

from src.errors import DomainError
from src.phasespace import (
    GridSpec,
    PhaseSpaceGrid,
    apply_fourier_multiplier,
    from_frequency,
    to_frequency,
)


def gaussian(variance: float, q0: float = 0.0, p0: float = 0.0):
    """Isotropic normal density with the given per-axis variance."""
    def density(q, p):
        return np.exp(-((q - q0) ** 2 + (p - p0) ** 2) / (2 * variance)) / (2 * math.pi * variance)
    return density


@pytest.fixture
def spec():
    """128 x 128 grid over [-8, 8)^2."""
    return GridSpec(n_q=128, n_p=128)


class TestGridSpec:
    """Tests for GridSpec."""

    def test_defaults(self):
        """Test the default grid contains the origin."""
        spec = GridSpec()
        assert spec.shape == (256, 256)
        assert spec.dq == pytest.approx(0.0625)
        assert spec.q_axis[128] == 0.0

    def test_invalid(self):
        """Test empty ranges and degenerate point counts."""
        with pytest.raises(DomainError):
            GridSpec(q_min=1.0, q_max=1.0)
        with pytest.raises(DomainError):
            GridSpec(n_q=1)

    def test_frequency_axes(self, spec):
        """Test the angular frequency spacing 2 pi / (n d)."""
        u = spec.u_axis()
        assert u[0] == 0.0
        assert u[1] == pytest.approx(2 * math.pi / 16.0)

    def test_interior_mask(self, spec):
        """Test the mask excludes the edges."""
        mask = spec.interior_mask(0.25)
        assert not mask[0, 0]
        assert mask[64, 64]


class TestPhaseSpaceGrid:
    """Tests for PhaseSpaceGrid."""

    def test_mass_and_marginals(self, spec):
        """Test Riemann mass and marginal normalization of a normal density."""
        grid = PhaseSpaceGrid.from_function(spec, gaussian(1.0))
        assert grid.mass() == pytest.approx(1.0, abs=1e-10)
        assert grid.marginal_q().sum() * spec.dq == pytest.approx(1.0, abs=1e-10)
        assert grid.cumulative()[-1, -1] == pytest.approx(1.0, abs=1e-10)

    def test_shape_mismatch(self, spec):
        """Test values must match the spec."""
        with pytest.raises(DomainError):
            PhaseSpaceGrid(spec, np.zeros((3, 3)))

    def test_normalized(self, spec):
        """Test normalization and its rejection of zero mass."""
        grid = PhaseSpaceGrid.from_function(spec, lambda q, p: 3 * gaussian(1.0)(q, p))
        assert grid.normalized().mass() == pytest.approx(1.0)
        with pytest.raises(DomainError):
            grid.with_values(np.zeros(spec.shape)).normalized()

    def test_distances(self, spec):
        """Test l1 and sup distances of a constant offset."""
        grid = PhaseSpaceGrid(spec, np.zeros(spec.shape))
        other = grid.with_values(np.full(spec.shape, 0.01))
        assert grid.sup_distance(other) == pytest.approx(0.01)
        assert grid.l1_distance(other) == pytest.approx(0.01 * 256)

    def test_coverage(self, spec, caplog):
        """Test coverage passes for a centered density and warns when cut off."""
        assert PhaseSpaceGrid.from_function(spec, gaussian(1.0)).check_coverage()
        with caplog.at_level(logging.WARNING):
            covered = PhaseSpaceGrid.from_function(spec, gaussian(1.0, q0=7.5)).check_coverage("shifted")
        assert not covered
        assert "shifted" in caplog.text

    def test_rows(self):
        """Test rows enumerate (q, p, value) in q-major order."""
        spec = GridSpec(-1.0, 1.0, -1.0, 1.0, 2, 2)
        rows = PhaseSpaceGrid(spec, np.array([[1.0, 2.0], [3.0, 4.0]])).rows()
        assert rows == [(-1.0, -1.0, 1.0), (-1.0, 0.0, 2.0), (0.0, -1.0, 3.0), (0.0, 0.0, 4.0)]


class TestFourier:
    """Tests for the discrete Fourier transform convention."""

    def test_gaussian_transform(self, spec):
        """Test F(u, v) = exp(-(u^2 + v^2)/2) / (2 pi) for the standard normal density."""
        frequency = to_frequency(PhaseSpaceGrid.from_function(spec, gaussian(1.0)))
        u, v = frequency.mesh()
        expected = np.exp(-(u**2 + v**2) / 2) / (2 * math.pi)
        assert np.allclose(frequency.values, expected, atol=1e-12)

    def test_shift_phase(self, spec):
        """Test a shifted density picks up exp(-i u q0)."""
        frequency = to_frequency(PhaseSpaceGrid.from_function(spec, gaussian(1.0, q0=1.0)))
        u, v = frequency.mesh()
        expected = np.exp(-1j * u - (u**2 + v**2) / 2) / (2 * math.pi)
        assert np.allclose(frequency.values, expected, atol=1e-12)

    def test_inverse(self, spec):
        """Test from_frequency inverts to_frequency."""
        grid = PhaseSpaceGrid.from_function(spec, gaussian(0.7, 0.5, -1.0))
        assert np.allclose(from_frequency(to_frequency(grid)).values, grid.values, atol=1e-14)

    def test_multiplier_convolves(self, spec):
        """Test multiplying by a Gaussian characteristic function adds variances."""
        grid = PhaseSpaceGrid.from_function(spec, gaussian(1.0))
        smeared = apply_fourier_multiplier(grid, lambda u, v: np.exp(-0.5 * (u**2 + v**2) / 2))
        expected = PhaseSpaceGrid.from_function(spec, gaussian(1.5))
        assert smeared.sup_distance(expected) < 1e-9
