"""Tests for deconvolution and state reconstruction."""

import logging
import math

import numpy as np
import pytest

from src.eightport import SmearKernel2D, covariant_density_grid, limit_density
from src.errors import (
    DivisorThresholdError,
    DomainError,
    NoiseAmplificationWarning,
    ReconstructionError,
    ResolutionError,
)
from src.fock import FockDensityMatrix, TruncationBudget, fidelity
from src.phasespace import GridSpec, PhaseSpaceGrid
from src.tomography import (
    DeconvolutionMode,
    DeconvolutionPolicy,
    FrequencyResponse,
    ReconstructionMethod,
    deconvolve,
    deconvolve_with_diagnostics,
    forward_smear,
    histogram_density,
    histogram_noise_level,
    kernel_fourier,
    reconstruct_state,
    reconstruct_state_with_report,
    sample_phase_space,
    smeared_l1_distance,
    weyl_transform_of_state,
)


def normal_density(variance: float):
    def density(q, p):
        return np.exp(-(q**2 + p**2) / (2 * variance)) / (2 * math.pi * variance)
    return density


@pytest.fixture
def spec():
    """Default 256 x 256 grid over [-8, 8)^2."""
    return GridSpec()


@pytest.fixture
def kernel():
    """Equal-efficiency kernel with axis variance 1/4."""
    return SmearKernel2D.from_efficiencies((0.8, 0.8, 0.8, 0.8))


@pytest.fixture
def budget():
    """Cutoff 12 budget."""
    return TruncationBudget(cutoff=12)


class TestDeconvolutionPolicy:
    """Tests for DeconvolutionPolicy."""

    def test_string_mode(self):
        """Test modes given as strings are coerced."""
        policy = DeconvolutionPolicy("tikhonov", regularization=1e-3)
        assert policy.mode is DeconvolutionMode.TIKHONOV
        assert policy.to_dict()["mode"] == "tikhonov"

    def test_invalid(self):
        """Test non-positive thresholds and negative regularization are rejected."""
        with pytest.raises(DomainError):
            DeconvolutionPolicy(DeconvolutionMode.THRESHOLDED, threshold=0.0)
        with pytest.raises(DomainError):
            DeconvolutionPolicy(DeconvolutionMode.TIKHONOV, regularization=-1.0)
        with pytest.raises(ValueError):
            DeconvolutionPolicy("wiener")

    def test_histogram_defaults(self):
        """Test histogram data selects Tikhonov with the sampling noise level."""
        policy = DeconvolutionPolicy.for_histogram(10000)
        assert policy.mode is DeconvolutionMode.TIKHONOV
        assert policy.noise_level == pytest.approx(1 / (2 * math.pi * 100))
        with pytest.raises(DomainError):
            histogram_noise_level(0)


class TestDeconvolution:
    """Tests for forward smearing and its inversion."""

    def test_kernel_fourier(self, kernel):
        """Test the kernel transform is 1/2pi at the origin and stays positive."""
        assert kernel_fourier(kernel, 0.0, 0.0) == pytest.approx(1 / (2 * math.pi))
        assert kernel_fourier(kernel, 1e3, 1e3) > 0

    def test_forward_smear_adds_variance(self, spec, kernel):
        """Test smearing N(0, 1) gives N(0, 1 + axis variance)."""
        g = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        h = forward_smear(g, kernel)
        expected = PhaseSpaceGrid.from_function(spec, normal_density(1.25))
        assert h.sup_distance(expected) < 1e-10

    def test_resolution_check(self, spec):
        """Test a kernel narrower than six grid steps is refused."""
        narrow = SmearKernel2D.from_efficiencies((0.99, 0.99, 0.99, 0.99))
        g = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        with pytest.raises(ResolutionError):
            forward_smear(g, narrow)
        with pytest.raises(ResolutionError):
            deconvolve(g, narrow)

    def test_dirac_passthrough(self, spec):
        """Test ideal detectors leave densities unchanged in both directions."""
        dirac = SmearKernel2D.from_efficiencies((1, 1, 1, 1))
        g = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        assert forward_smear(g, dirac) is g
        assert deconvolve(g, dirac) is g

    def test_thresholded_inverse(self, spec, kernel):
        """Test exact synthetic data is recovered by thresholded division."""
        g = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        estimate, report = deconvolve_with_diagnostics(forward_smear(g, kernel), kernel)
        assert estimate.sup_distance(g) < 1e-8
        assert report.mode == "thresholded"
        assert 0 < report.excluded_fraction < 1
        assert report.amplification <= 1e6

    def test_exact_mode_warns(self, spec, kernel):
        """Test exact division warns about noise amplification."""
        h = PhaseSpaceGrid.from_function(spec, normal_density(1.25))
        policy = DeconvolutionPolicy(DeconvolutionMode.EXACT)
        with pytest.warns(NoiseAmplificationWarning):
            deconvolve(h, kernel, policy)

    def test_fixed_tikhonov(self, spec, kernel):
        """Test an explicit regularization is used as given."""
        h = PhaseSpaceGrid.from_function(spec, normal_density(1.25))
        policy = DeconvolutionPolicy(DeconvolutionMode.TIKHONOV, regularization=1e-4)
        estimate, report = deconvolve_with_diagnostics(h, kernel, policy)
        assert report.regularization == 1e-4
        assert report.excluded_fraction == 0.0
        assert estimate.sup_distance(PhaseSpaceGrid.from_function(spec, normal_density(1.0))) < 1e-2

    def test_histogram_thresholded(self, spec, kernel):
        """Test sampled data deconvolved with a coarse threshold stays close to the truth."""
        truth = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        h = forward_smear(truth, kernel)
        points = sample_phase_space(h, 1_000_000, seed=2024)
        empirical = histogram_density(points, spec)
        policy = DeconvolutionPolicy(DeconvolutionMode.THRESHOLDED, threshold=0.1)
        estimate = deconvolve(empirical, kernel, policy)
        assert estimate.sup_distance(truth) < 0.05 / (2 * math.pi)

    def test_histogram_discrepancy(self, spec, kernel):
        """Test the discrepancy principle picks a positive regularization for sampled data."""
        truth = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        points = sample_phase_space(forward_smear(truth, kernel), 1_000_000, seed=7)
        estimate, report = deconvolve_with_diagnostics(
            histogram_density(points, spec), kernel, DeconvolutionPolicy.for_histogram(1_000_000)
        )
        assert report.regularization > 0
        assert estimate.l1_distance(truth) < 0.25

    def test_exact_roundtrip_unequal_efficiencies(self, spec):
        """Test exact division undoes an anisotropic kernel on noiseless data."""
        kernel = SmearKernel2D.from_efficiencies((0.6, 0.7, 0.8, 0.9))
        g = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        with pytest.warns(NoiseAmplificationWarning):
            estimate = deconvolve(forward_smear(g, kernel), kernel, DeconvolutionPolicy(DeconvolutionMode.EXACT))
        assert estimate.relative_l2_error(g) < 1e-6

    def test_frequency_response(self, spec, kernel):
        """Test the report carries gain and passband but keeps them out of the JSON form."""
        h = PhaseSpaceGrid.from_function(spec, normal_density(1.25))
        _, report = deconvolve_with_diagnostics(h, kernel, DeconvolutionPolicy(threshold=1e-3))
        response = report.response
        assert response.gain.shape == spec.shape
        assert np.allclose(response.passband[response.support], 1.0)
        assert np.all(response.passband[~response.support] == 0.0)
        assert response.support.mean() == pytest.approx(1.0 - report.excluded_fraction)
        assert "response" not in report.to_dict()

    def test_tikhonov_response_noise(self, spec, kernel):
        """Test Tikhonov keeps every frequency with a passband below one and a scaled noise floor."""
        h = PhaseSpaceGrid.from_function(spec, normal_density(1.25))
        policy = DeconvolutionPolicy(DeconvolutionMode.TIKHONOV, regularization=1e-4, noise_level=1e-3)
        _, report = deconvolve_with_diagnostics(h, kernel, policy)
        response = report.response
        assert np.all(response.passband < 1.0)
        assert np.allclose(response.noise_floor(), 2 * math.pi * 1e-3 * response.gain)

    def test_dirac_identity_response(self, spec):
        """Test ideal detectors report a unit response."""
        dirac = SmearKernel2D.from_efficiencies((1, 1, 1, 1))
        h = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        _, report = deconvolve_with_diagnostics(h, dirac)
        assert np.all(report.response.gain == 1.0)
        assert report.response.support.all()
        assert FrequencyResponse.identity((2, 3), 0.5).noise_floor() == pytest.approx(np.full((2, 3), math.pi))


class TestSampling:
    """Tests for phase space sampling and histograms."""

    def test_histogram_mass(self, spec):
        """Test a histogram of samples inside the grid has unit mass."""
        grid = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        empirical = histogram_density(sample_phase_space(grid, 5000, seed=1), spec)
        assert empirical.mass() == pytest.approx(1.0)

    def test_reproducible(self, spec):
        """Test identical seeds give identical samples."""
        grid = PhaseSpaceGrid.from_function(spec, normal_density(1.0))
        assert np.array_equal(sample_phase_space(grid, 10, seed=3), sample_phase_space(grid, 10, seed=3))

    def test_outside_points_logged(self, caplog):
        """Test samples beyond the grid are counted and reported."""
        spec = GridSpec(-1, 1, -1, 1, 4, 4)
        with caplog.at_level(logging.WARNING):
            empirical = histogram_density(np.array([[0.0, 0.0], [5.0, 5.0]]), spec)
        assert "1 of 2 samples" in caplog.text
        assert empirical.mass() == pytest.approx(0.5)

    def test_invalid(self, spec):
        """Test empty densities and zero shots are rejected."""
        with pytest.raises(DomainError):
            sample_phase_space(PhaseSpaceGrid(spec, np.zeros(spec.shape)), 10, seed=1)
        with pytest.raises(DomainError):
            sample_phase_space(PhaseSpaceGrid.from_function(spec, normal_density(1.0)), 0, seed=1)


class TestReconstruction:
    """Tests for state reconstruction from covariant densities."""

    def test_weyl_transform_of_vacuum(self, budget):
        """Test tr[|0><0| W_{p,-q}] = exp(-(q^2 + p^2)/4)."""
        vacuum = FockDensityMatrix.vacuum(budget)
        q = np.array([0.0, 1.0, -2.0])
        p = np.array([0.5, 0.0, 1.0])
        assert np.allclose(weyl_transform_of_state(vacuum, q, p), np.exp(-(q**2 + p**2) / 4))
        assert isinstance(weyl_transform_of_state(vacuum, 0.0, 0.0), complex)

    @pytest.mark.parametrize("make_state", [
        lambda b: FockDensityMatrix.coherent(0.5 + 0.3j, b),
        lambda b: FockDensityMatrix.number_state(1, b),
        lambda b: FockDensityMatrix.from_diagonal([0.5, 0.3, 0.2], b),
    ])
    def test_round_trip_fidelity(self, make_state, budget):
        """Test states are recovered from their vacuum-generated densities."""
        rho = make_state(budget)
        T = FockDensityMatrix.vacuum(budget)
        g = covariant_density_grid(rho, T, GridSpec(n_q=64, n_p=64))
        estimate, report = reconstruct_state_with_report(g, T, budget, truth=rho)
        assert report.fidelity > 0.999
        assert report.trace_before == pytest.approx(1.0, abs=1e-4)
        assert estimate.trace() == pytest.approx(1.0)
        assert report.used_frequencies + report.excluded_frequencies == 64 * 64

    def test_grid_refinement(self, budget):
        """Test a finer grid reconstructs at least as faithfully as a coarse one."""
        rho = FockDensityMatrix.coherent(0.5 + 0.3j, budget)
        T = FockDensityMatrix.vacuum(budget)
        fidelities = []
        for n in (16, 64):
            g = covariant_density_grid(rho, T, GridSpec(n_q=n, n_p=n))
            _, report = reconstruct_state_with_report(g, T, budget, truth=rho)
            fidelities.append(report.fidelity)
        assert fidelities[1] > fidelities[0]
        assert fidelities[1] > 0.999

    def test_divisor_threshold(self, budget, mocker):
        """Test support on excluded frequencies is an error."""
        mocker.patch("src.tomography.DIVISOR_TOL", 0.5)
        rho = FockDensityMatrix.coherent(1.0, budget)
        T = FockDensityMatrix.vacuum(budget)
        g = covariant_density_grid(rho, T, GridSpec(n_q=64, n_p=64))
        with pytest.raises(DivisorThresholdError):
            reconstruct_state(g, T, budget)

    def test_zero_density(self, budget):
        """Test an identically zero density has nothing to reconstruct."""
        spec = GridSpec(n_q=32, n_p=32)
        with pytest.raises(ReconstructionError):
            reconstruct_state(PhaseSpaceGrid(spec, np.zeros(spec.shape)), FockDensityMatrix.vacuum(budget), budget)

    def test_smeared_inputs_reconstruct(self, budget, kernel):
        """Test deconvolving a smeared limit density and reconstructing recovers the state."""
        spec = GridSpec()
        rho = FockDensityMatrix.coherent(0.4 - 0.2j, budget)
        S = FockDensityMatrix.vacuum(budget)
        h = limit_density(rho, S, kernel, spec)
        g = deconvolve(h, kernel)
        estimate = reconstruct_state(g, S, budget)
        assert fidelity(rho, estimate) > 0.999

    def test_smeared_number_state_pipeline(self, budget):
        """Test |1> survives smearing by unequal detectors, deconvolution and inversion."""
        kernel = SmearKernel2D.from_efficiencies((0.6, 0.7, 0.8, 0.9))
        rho = FockDensityMatrix.number_state(1, budget)
        S = FockDensityMatrix.vacuum(budget)
        g, diagnostics = deconvolve_with_diagnostics(limit_density(rho, S, kernel, GridSpec()), kernel)
        estimate = reconstruct_state(g, S, budget, response=diagnostics.response)
        assert fidelity(rho, estimate) > 0.999

    def test_least_squares_exact_data(self):
        """Test the least squares inversion recovers a state from a noiseless density."""
        budget = TruncationBudget(cutoff=3)
        rho = FockDensityMatrix.number_state(1, budget)
        T = FockDensityMatrix.vacuum(budget)
        g = covariant_density_grid(rho, T, GridSpec(n_q=64, n_p=64))
        _, report = reconstruct_state_with_report(g, T, budget, truth=rho, method=ReconstructionMethod.LEAST_SQUARES)
        assert report.fidelity > 0.999
        assert report.method == "least_squares"

    def test_response_shape_mismatch(self, budget):
        """Test a response from another grid is rejected."""
        T = FockDensityMatrix.vacuum(budget)
        g = covariant_density_grid(T, T, GridSpec(n_q=32, n_p=32))
        with pytest.raises(DomainError):
            reconstruct_state(g, T, budget, response=FrequencyResponse.identity((16, 16)))


class TestSampledReconstruction:
    """Tests for reconstruction from Monte Carlo eight-port data."""

    SHOTS = 1_000_000

    @pytest.fixture
    def small_budget(self):
        """Cutoff 2 budget; the sampled fit is only well conditioned on a few Fock levels."""
        return TruncationBudget(cutoff=2, tail_tol=1e-3)

    @pytest.fixture
    def unequal_kernel(self):
        """Kernel of four different detector efficiencies."""
        return SmearKernel2D.from_efficiencies((0.6, 0.7, 0.8, 0.9))

    def deconvolved_samples(self, rho, S, kernel, seed=1):
        h = limit_density(rho, S, kernel, GridSpec())
        empirical = histogram_density(sample_phase_space(h, self.SHOTS, seed=seed), h.spec)
        return deconvolve_with_diagnostics(empirical, kernel, DeconvolutionPolicy.for_histogram(self.SHOTS))

    @pytest.mark.parametrize("make_state", [
        lambda b: FockDensityMatrix.coherent(0.3, b),
        lambda b: FockDensityMatrix.number_state(1, b),
    ])
    def test_sampled_fidelity(self, make_state, small_budget, unequal_kernel):
        """Test a million samples reconstruct the signal with fidelity above 0.98."""
        rho = make_state(small_budget)
        S = FockDensityMatrix.vacuum(small_budget)
        g, diagnostics = self.deconvolved_samples(rho, S, unequal_kernel)
        _, report = reconstruct_state_with_report(
            g, S, small_budget, truth=rho, response=diagnostics.response, method=ReconstructionMethod.LEAST_SQUARES
        )
        assert report.fidelity > 0.98

    def test_noise_is_not_support(self, small_budget, unequal_kernel):
        """Test sampling noise on frequencies beyond the divisor threshold is not mistaken for signal."""
        rho = FockDensityMatrix.number_state(1, small_budget)
        S = FockDensityMatrix.vacuum(small_budget)
        g, diagnostics = self.deconvolved_samples(rho, S, unequal_kernel, seed=5)
        estimate = reconstruct_state(g, S, small_budget, response=diagnostics.response)
        assert estimate.trace() == pytest.approx(1.0)


class TestSmearedDistance:
    """Tests for smeared_l1_distance."""

    def test_identical_states(self, budget, kernel):
        """Test a state is at distance zero from itself."""
        rho = FockDensityMatrix.coherent(0.5, budget)
        spec = GridSpec(n_q=48, n_p=48)
        S = FockDensityMatrix.vacuum(budget)
        assert smeared_l1_distance(rho, rho, S, kernel, spec) == pytest.approx(0.0, abs=1e-14)

    def test_smearing_contracts(self, budget, kernel):
        """Test smearing never increases the distance between two states."""
        spec = GridSpec(n_q=48, n_p=48)
        S = FockDensityMatrix.vacuum(budget)
        a = FockDensityMatrix.coherent(0.5, budget)
        b = FockDensityMatrix.coherent(-0.5, budget)
        dirac = SmearKernel2D.from_efficiencies((1, 1, 1, 1))
        smeared = smeared_l1_distance(a, b, S, kernel, spec)
        sharp = smeared_l1_distance(a, b, S, dirac, spec)
        assert 0 < smeared <= sharp <= 2
