"""Tests for eight-port homodyne statistics and the smeared covariant limit."""

import math

import numpy as np
import pytest

from src.eightport import (
    EightPortConfig,
    Kernel2DKind,
    SmearKernel2D,
    conjugate_generating_operator,
    covariance_check,
    covariant_density,
    covariant_density_grid,
    generating_operator_convolution,
    joint_finite_distribution,
    kernel2d_density,
    ks_distance_analytic,
    limit_density,
    limit_joint_cdf,
    purity_extremality_check,
    reduce_to_double_homodyne,
    sample_eightport_outcomes,
    smeared_vacuum,
    split_local_oscillator,
    vacuum_component_decomposition,
)
from src.errors import DomainError, KindError, TruncationInsufficient, UnsupportedState
from src.fock import CoherentSuperposition, FockDensityMatrix, TruncationBudget
from src.homodyne import (
    LocalOscillator,
    SmearKernel1D,
    beam_splitter_map,
    smeared_quadrature_density,
)
from src.phasespace import GridSpec, PhaseSpaceGrid


ALPHA = 1.0 + 0.5j


@pytest.fixture
def budget():
    """Cutoff 30 budget."""
    return TruncationBudget(cutoff=30, tail_tol=1e-8)


@pytest.fixture
def small_spec():
    """64 x 64 grid over [-8, 8)^2."""
    return GridSpec(n_q=64, n_p=64)


def husimi_like(alpha: complex, variance: float):
    """Normal density centered at (sqrt2 Re alpha, sqrt2 Im alpha) with the given per-axis variance."""
    q0, p0 = math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag

    def density(q, p):
        return np.exp(-((q - q0) ** 2 + (p - p0) ** 2) / (2 * variance)) / (2 * math.pi * variance)
    return density


class TestSmearKernel2D:
    """Tests for the product smearing kernel."""

    def test_kinds(self):
        """Test Dirac, partial and Gaussian kernels."""
        assert SmearKernel2D.from_efficiencies((1, 1, 1, 1)).kind is Kernel2DKind.DIRAC
        assert SmearKernel2D.from_efficiencies((1, 0.8, 1, 1)).kind is Kernel2DKind.PARTIAL
        assert SmearKernel2D.from_efficiencies((0.9, 0.9, 0.9, 0.9)).kind is Kernel2DKind.GAUSSIAN

    def test_arm_pairing(self):
        """Test detectors 1, 3 feed the X kernel and 2, 4 the Y kernel."""
        k = SmearKernel2D.from_efficiencies((0.5, 0.6, 0.7, 0.8))
        assert k.kx == SmearKernel1D(0.5, 0.7)
        assert k.ky == SmearKernel1D(0.6, 0.8)
        assert k.axis_variances == pytest.approx((2 * k.kx.variance, 2 * k.ky.variance))

    def test_density(self):
        """Test the two-dimensional density integrates to one with doubled axis variances."""
        k = SmearKernel2D.from_efficiencies((0.6, 0.7, 0.8, 0.9))
        spec = GridSpec(-6, 6, -6, 6, 120, 120)
        grid = PhaseSpaceGrid.from_function(spec, lambda x, y: kernel2d_density(k, x, y))
        assert grid.mass() == pytest.approx(1.0, abs=1e-8)
        q, _ = spec.mesh()
        assert (q**2 * grid.values).sum() * spec.dq * spec.dp == pytest.approx(k.axis_variances[0], abs=1e-6)

    def test_partial_density_undefined(self):
        """Test a kernel with one Dirac factor has no density."""
        with pytest.raises(KindError):
            kernel2d_density(SmearKernel2D.from_efficiencies((1, 0.8, 1, 0.8)), 0.0, 0.0)


class TestEightPortConfig:
    """Tests for EightPortConfig."""

    def test_invalid_efficiencies(self):
        """Test efficiencies must be four values in (0, 1]."""
        with pytest.raises(DomainError):
            EightPortConfig(efficiencies=(1.0, 1.0, 1.0))
        with pytest.raises(DomainError):
            EightPortConfig(efficiencies=(1.0, 1.0, 0.0, 1.0))

    def test_arm_oscillators(self):
        """Test the Y arm oscillator is phase shifted."""
        cfg = EightPortConfig(lo=LocalOscillator(5.0, 0.2))
        assert cfg.lo_x.theta == pytest.approx(0.2)
        assert cfg.lo_y.theta == pytest.approx(0.2 + math.pi / 2)
        assert cfg.with_amplitude(7.0).lo.r == 7.0

    def test_split_local_oscillator(self):
        """Test |sqrt2 z> splits into |z> and |z e^{i phi}>."""
        first, second = split_local_oscillator(2.0, math.pi / 2)
        assert first == pytest.approx(2.0)
        assert second == pytest.approx(2.0j)


class TestReduction:
    """Tests for the reduction to two homodyne arms."""

    def test_total_weight(self):
        """Test the bilinear weights of normalized inputs sum to one."""
        reduction = reduce_to_double_homodyne(
            CoherentSuperposition.cat(1.0 + 0.5j), CoherentSuperposition.coherent(0.3), EightPortConfig()
        )
        assert len(reduction.terms) == 4
        assert reduction.total_weight() == pytest.approx(1.0)

    def test_fock_inputs_rejected(self, budget):
        """Test Fock density matrices are not reducible."""
        with pytest.raises(UnsupportedState):
            reduce_to_double_homodyne(
                FockDensityMatrix.vacuum(budget), CoherentSuperposition.vacuum(), EightPortConfig()
            )


class TestJointDistribution:
    """Tests for the exact finite-amplitude joint statistics."""

    def test_marginal_moments(self):
        """Test each arm estimates its quadrature with unit variance plus 1/r^2 corrections."""
        cfg = EightPortConfig(lo=LocalOscillator(10.0))
        joint = joint_finite_distribution(CoherentSuperposition.coherent(ALPHA), CoherentSuperposition.vacuum(), cfg)
        assert joint.total() == pytest.approx(1.0, abs=1e-10)
        x = joint.marginal_x()
        y = joint.marginal_y()
        assert x.mean() == pytest.approx(math.sqrt(2) * ALPHA.real, abs=1e-8)
        assert y.mean() == pytest.approx(math.sqrt(2) * ALPHA.imag, abs=1e-8)
        assert x.variance() == pytest.approx(1 + abs(ALPHA) ** 2 / 200, abs=1e-8)

    def test_count_table_matches_detector_geometry(self):
        """Test the all-zero count probability of coherent inputs is exp(-sum of detector means)."""
        cfg = EightPortConfig(lo=LocalOscillator(2.0))
        alpha = 0.5 + 0.2j
        joint = joint_finite_distribution(CoherentSuperposition.coherent(alpha), CoherentSuperposition.vacuum(), cfg)
        table = joint.count_table()
        assert table.sum() == pytest.approx(joint.total(), abs=1e-12)

        mode1, mode2 = beam_splitter_map(alpha, 0.0)
        z_x, z_y = split_local_oscillator(cfg.lo.amplitude, cfg.phase_shift)
        detectors = beam_splitter_map(mode1, z_x) + beam_splitter_map(mode2, z_y)
        expected = math.exp(-sum(abs(d) ** 2 for d in detectors))
        for arm in (joint.arm_x, joint.arm_y):
            assert arm.minus_counts[0] == 0 and arm.plus_counts[0] == 0
        assert table[0, 0, 0, 0] == pytest.approx(expected, rel=1e-10)

        atoms = joint.atoms(min_probability=1e-4)
        assert all(row[4] > 1e-4 for row in atoms)

    def test_cdf_grid_limits(self):
        """Test the joint CDF vanishes far left and reaches the total far right."""
        joint = joint_finite_distribution(
            CoherentSuperposition.coherent(0.3), CoherentSuperposition.vacuum(), EightPortConfig(lo=LocalOscillator(5.0))
        )
        grid = joint.cdf_grid(np.array([-50.0, 50.0]), np.array([-50.0, 50.0]))
        assert grid[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert grid[1, 1] == pytest.approx(joint.total(), abs=1e-12)

    def test_ks_distance_decreases(self):
        """Test the distance to the limit CDF shrinks as the amplitude grows."""
        signal = CoherentSuperposition.coherent(0.5)
        field = CoherentSuperposition.vacuum()
        points = np.linspace(-4, 4, 33)
        distances = []
        for r in (10.0, 20.0, 40.0, 80.0):
            cfg = EightPortConfig(lo=LocalOscillator(r))
            joint = joint_finite_distribution(signal, field, cfg)
            reduction = reduce_to_double_homodyne(signal, field, cfg)
            distances.append(ks_distance_analytic(joint, reduction, points, points))
        assert distances[-1] < distances[0] / 2
        assert distances[-1] < 0.05


class TestLimit:
    """Tests for the limit density and its generating operator."""

    def test_limit_cdf_median(self):
        """Test the X marginal of the limit is centered at sqrt2 Re alpha."""
        reduction = reduce_to_double_homodyne(
            CoherentSuperposition.coherent(ALPHA), CoherentSuperposition.vacuum(), EightPortConfig()
        )
        cdf = limit_joint_cdf(reduction, np.array([math.sqrt(2) * ALPHA.real]), np.array([1e3]))
        assert cdf[0, 0] == pytest.approx(0.5, abs=1e-10)

    def test_covariant_density_closed_form(self, budget):
        """Test (1/2pi) tr[|a><a| W |0><0| W*] = exp(-|a - (q+ip)/sqrt2|^2) / 2pi."""
        rho = FockDensityMatrix.coherent(ALPHA, budget)
        T = FockDensityMatrix.vacuum(budget)
        q = np.array([0.0, 1.0, -0.5])
        p = np.array([0.0, 0.5, 2.0])
        expected = np.exp(-np.abs(ALPHA - (q + 1j * p) / math.sqrt(2)) ** 2) / (2 * math.pi)
        assert np.allclose(covariant_density(rho, T, q, p), expected, atol=1e-12)
        assert isinstance(covariant_density(rho, T, 0.0, 0.0), float)

    def test_covariant_density_grid_mass(self, budget, small_spec):
        """Test the covariant density of a normalized state integrates to one."""
        rho = CoherentSuperposition.cat(1.0).to_density(budget)
        grid = covariant_density_grid(rho, FockDensityMatrix.number_state(1, budget), small_spec)
        assert grid.mass() == pytest.approx(1.0, abs=1e-6)
        assert grid.values.min() > -1e-12

    def test_limit_density_smeared(self, budget, small_spec):
        """Test the smeared limit of a coherent state is normal with variance 1 + kernel variance."""
        rho = FockDensityMatrix.coherent(ALPHA, budget)
        k = SmearKernel2D.from_efficiencies((0.8, 0.8, 0.8, 0.8))
        h = limit_density(rho, FockDensityMatrix.vacuum(budget), k, small_spec)
        expected = PhaseSpaceGrid.from_function(small_spec, husimi_like(ALPHA, 1 + k.axis_variances[0]))
        assert h.sup_distance(expected) < 1e-6

    def test_limit_density_dirac(self, budget, small_spec):
        """Test ideal detectors return the covariant density of the conjugated operator."""
        rho = FockDensityMatrix.coherent(ALPHA, budget)
        h = limit_density(rho, FockDensityMatrix.vacuum(budget), SmearKernel2D.from_efficiencies((1, 1, 1, 1)), small_spec)
        expected = PhaseSpaceGrid.from_function(small_spec, husimi_like(ALPHA, 1.0))
        assert h.sup_distance(expected) < 1e-10

    @pytest.mark.parametrize("make_S", [
        lambda b: FockDensityMatrix.vacuum(b),
        lambda b: FockDensityMatrix.number_state(1, b),
    ])
    def test_limit_density_matches_smeared_operator(self, make_S):
        """Test convolving the density equals the density of the smeared generating operator."""
        budget = TruncationBudget(cutoff=40, tail_tol=1e-8)
        rho = FockDensityMatrix.coherent(0.5 + 0.3j, budget)
        S = make_S(budget)
        k = SmearKernel2D.from_efficiencies((0.6, 0.7, 0.8, 0.9))
        spec = GridSpec(n_q=128, n_p=128)
        smeared = generating_operator_convolution(conjugate_generating_operator(S), k)
        expected = covariant_density_grid(rho, smeared, spec)
        assert limit_density(rho, S, k, spec).sup_distance(expected) < 1e-6

    def test_limit_marginals_are_arm_quadratures(self, budget):
        """Test each marginal of the limit is the smeared quadrature of its arm at sqrt2 scale."""
        eps = (0.6, 0.7, 0.8, 0.9)
        cfg = EightPortConfig(eps)
        spec = GridSpec(n_q=128, n_p=128)
        rho = FockDensityMatrix.coherent(ALPHA, budget)
        h = limit_density(rho, FockDensityMatrix.vacuum(budget), cfg.kernel, spec)
        arm_state = CoherentSuperposition.coherent(ALPHA / math.sqrt(2))

        for marginal, axis, theta, kernel in (
            (h.marginal_q(), spec.q_axis, cfg.lo_x.theta, SmearKernel1D(*cfg.arm_x_efficiencies)),
            (h.marginal_p(), spec.p_axis, cfg.lo_y.theta, SmearKernel1D(*cfg.arm_y_efficiencies)),
        ):
            expected = smeared_quadrature_density(arm_state, theta, kernel, axis / math.sqrt(2)) / math.sqrt(2)
            assert np.max(np.abs(marginal - expected)) < 1e-6

    def test_conjugation(self, budget):
        """Test C S C^-1 conjugates the number basis entries."""
        S = FockDensityMatrix.coherent(0.5j, budget)
        assert np.allclose(conjugate_generating_operator(S).entries, FockDensityMatrix.coherent(-0.5j, budget).entries)

    def test_covariance(self, budget):
        """Test displacing the state translates the density."""
        rho = FockDensityMatrix.coherent(0.5, budget)
        T = FockDensityMatrix.vacuum(budget)
        spec = GridSpec(-4, 4, -4, 4, 16, 16)
        assert covariance_check(rho, T, (1.0, -0.5), spec) < 1e-8


class TestGeneratingOperator:
    """Tests for the smeared generating operator."""

    def test_smeared_vacuum_closed_form(self, budget):
        """Test mu_eps * |0><0| = eps sum (1 - eps)^n |n><n| for equal efficiencies."""
        k = SmearKernel2D.from_efficiencies((0.7, 0.7, 0.7, 0.7))
        smeared = generating_operator_convolution(FockDensityMatrix.vacuum(budget), k)
        assert np.allclose(smeared.entries, smeared_vacuum(0.7, budget).entries, atol=1e-8)

    def test_dirac_is_identity_map(self, budget):
        """Test ideal detectors leave the operator unchanged."""
        T = FockDensityMatrix.number_state(2, budget)
        result = generating_operator_convolution(T, SmearKernel2D.from_efficiencies((1, 1, 1, 1)))
        assert np.array_equal(result.entries, T.entries)

    def test_leakage(self):
        """Test heavy smearing on a tiny cutoff reports the displaced mass."""
        small = TruncationBudget(cutoff=3)
        k = SmearKernel2D.from_efficiencies((0.3, 0.3, 0.3, 0.3))
        with pytest.raises(TruncationInsufficient):
            generating_operator_convolution(FockDensityMatrix.vacuum(small), k)

    def test_output_cutoff(self, budget):
        """Test the output cutoff may not shrink."""
        k = SmearKernel2D.from_efficiencies((0.7, 0.7, 0.7, 0.7))
        with pytest.raises(DomainError):
            generating_operator_convolution(FockDensityMatrix.vacuum(budget), k, TruncationBudget(cutoff=5))

    def test_purity(self, budget):
        """Test pure operators are extremal and smeared ones are not."""
        assert purity_extremality_check(FockDensityMatrix.coherent(1.0, budget)).is_pure
        report = purity_extremality_check(smeared_vacuum(0.6, budget))
        assert not report.is_pure
        assert report.largest_eigenvalue == pytest.approx(0.6)

    @pytest.mark.parametrize("efficiencies", [(1, 1, 1, 1), (1, 0.8, 1, 0.8), (0.8, 0.8, 0.8, 0.8)])
    @pytest.mark.parametrize("make_S, pure", [
        (lambda b: FockDensityMatrix.vacuum(b), True),
        (lambda b: FockDensityMatrix.coherent(0.5, b), True),
        (lambda b: FockDensityMatrix.from_diagonal([0.6, 0.4], b), False),
    ])
    def test_extremal_only_for_pure_and_ideal(self, make_S, pure, efficiencies, budget):
        """Test the smeared operator is a one-dimensional projection only for pure S and ideal detectors."""
        k = SmearKernel2D.from_efficiencies(efficiencies)
        report = purity_extremality_check(generating_operator_convolution(make_S(budget), k))
        assert report.is_pure == (pure and k.kind is Kernel2DKind.DIRAC)
        if not report.is_pure:
            assert report.largest_eigenvalue < 0.99

    def test_vacuum_decomposition(self, budget):
        """Test the smeared vacuum splits into eps |0><0| plus a normalized residual."""
        decomposition = vacuum_component_decomposition(0.6, budget)
        assert decomposition.weight == 0.6
        assert decomposition.residual.trace() == pytest.approx(1.0, abs=1e-10)
        assert decomposition.residual.diagonal[0] == 0.0
        assert np.allclose(decomposition.recombined().entries, smeared_vacuum(0.6, budget).entries)

    @pytest.mark.parametrize("eps", [0.0, 1.0])
    def test_vacuum_decomposition_domain(self, eps, budget):
        """Test the decomposition needs 0 < eps < 1."""
        with pytest.raises(DomainError):
            vacuum_component_decomposition(eps, budget)


class TestSampling:
    """Tests for Monte Carlo eight-port outcomes."""

    def test_means(self):
        """Test sampled outcomes center on the signal's phase space point."""
        cfg = EightPortConfig(lo=LocalOscillator(10.0))
        samples = sample_eightport_outcomes(
            CoherentSuperposition.coherent(ALPHA), CoherentSuperposition.vacuum(), cfg, 20000, seed=11
        )
        assert samples.shape == (20000, 2)
        assert samples[:, 0].mean() == pytest.approx(math.sqrt(2) * ALPHA.real, abs=0.05)
        assert samples[:, 1].mean() == pytest.approx(math.sqrt(2) * ALPHA.imag, abs=0.05)
        assert samples[:, 0].var() == pytest.approx(1.0, abs=0.05)

    def test_superposition_rejected(self):
        """Test detector-level sampling needs single coherent inputs."""
        with pytest.raises(UnsupportedState):
            sample_eightport_outcomes(
                CoherentSuperposition.cat(1.0), CoherentSuperposition.vacuum(), EightPortConfig(), 10, seed=1
            )
