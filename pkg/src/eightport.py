"""Eight-port homodyne detection: reduction to two homodyne arms, smeared covariant limit."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Tuple

import numpy as np

from src.detector import coherent_count_kernel, sample_counts
from src.errors import DomainError, KindError, TruncationInsufficient, UnsupportedState
from src.fock import (
    SQRT2,
    CoherentSuperposition,
    FockDensityMatrix,
    TruncationBudget,
    as_coherent_mixture,
    coherent_overlap,
    displacement_elements,
    displacement_matrix,
)
from src.homodyne import (
    MAX_LATTICE_POINTS,
    KernelKind,
    LocalOscillator,
    ScaledDifferenceDistribution,
    SmearKernel1D,
    beam_splitter_map,
    bilinear_quadrature_interval,
    count_window,
    gaussian_kernel_density,
    merge_lattice,
)
from src.parallel import parallel_map
from src.phasespace import GridSpec, PhaseSpaceGrid, apply_fourier_multiplier


logger = logging.getLogger(__name__)

PURITY_TOL = 1e-9
DEFAULT_QUADRATURE_NODES = 41
DEFAULT_TAIL_TOL = 1e-10
GRID_CHUNK = 512


class Kernel2DKind(Enum):
    """Smearing kind of the two-dimensional kernel."""

    DIRAC = "dirac"
    PARTIAL = "partial"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SmearKernel2D:
    """
    Product measure mu_eps(X x Y) = mu_{eps1,eps3}(X/sqrt2) mu_{eps2,eps4}(Y/sqrt2).

    Attributes:
        kx: Kernel of the arm measuring X (detectors 1 and 3)
        ky: Kernel of the arm measuring Y (detectors 2 and 4)
    """

    kx: SmearKernel1D
    ky: SmearKernel1D

    @classmethod
    def from_efficiencies(cls, efficiencies: Tuple[float, float, float, float]) -> "SmearKernel2D":
        e1, e2, e3, e4 = efficiencies
        return cls(SmearKernel1D(e1, e3), SmearKernel1D(e2, e4))

    @property
    def kind(self) -> Kernel2DKind:
        dirac = [k.kind is KernelKind.DIRAC for k in (self.kx, self.ky)]
        if all(dirac):
            return Kernel2DKind.DIRAC
        if any(dirac):
            return Kernel2DKind.PARTIAL
        return Kernel2DKind.GAUSSIAN

    @property
    def axis_variances(self) -> Tuple[float, float]:
        """Per-axis variances after the sqrt(2) rescaling."""
        return 2 * self.kx.variance, 2 * self.ky.variance

    def characteristic(self, u: Any, v: Any) -> Any:
        """E[e^{i(uX + vY)}] of the kernel; equals 2 pi times its transform in the package convention."""
        var_x, var_y = self.axis_variances
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.exp(-(var_x * u**2 + var_y * v**2) / 2)


@dataclass(frozen=True)
class EightPortConfig:
    """
    Eight-port network settings.

    The physical local oscillator is |sqrt2 z>; after the splitting stage the
    arms see |z> and |z e^{i phase_shift}>.
    """

    efficiencies: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    lo: LocalOscillator = field(default_factory=lambda: LocalOscillator(10.0))
    phase_shift: float = math.pi / 2

    def __post_init__(self) -> None:
        efficiencies = tuple(float(e) for e in self.efficiencies)
        if len(efficiencies) != 4:
            raise DomainError(f"Eight-port scheme needs four efficiencies, got {len(efficiencies)}")
        for eps in efficiencies:
            if not 0.0 < eps <= 1.0:
                raise DomainError(f"Efficiency must lie in (0, 1], got {eps}")
        object.__setattr__(self, "efficiencies", efficiencies)

    @property
    def arm_x_efficiencies(self) -> Tuple[float, float]:
        return self.efficiencies[0], self.efficiencies[2]

    @property
    def arm_y_efficiencies(self) -> Tuple[float, float]:
        return self.efficiencies[1], self.efficiencies[3]

    @property
    def lo_x(self) -> LocalOscillator:
        return self.lo

    @property
    def lo_y(self) -> LocalOscillator:
        return self.lo.shifted(self.phase_shift)

    @property
    def kernel(self) -> SmearKernel2D:
        return SmearKernel2D.from_efficiencies(self.efficiencies)

    def with_amplitude(self, r: float) -> "EightPortConfig":
        return EightPortConfig(self.efficiencies, self.lo.with_amplitude(r), self.phase_shift)


def split_local_oscillator(z: complex, phi: float) -> Tuple[complex, complex]:
    """Resolve |sqrt2 z> (x) |0> through the splitting beam splitter and phase shifter."""
    first, second = beam_splitter_map(SQRT2 * complex(z), 0.0)
    return first, second * complex(math.cos(phi), math.sin(phi))


@dataclass(frozen=True)
class ArmTerm:
    """One bilinear term: weight times arm-X and arm-Y coherent bra/ket labels."""

    weight: complex
    x_bra: complex
    x_ket: complex
    y_bra: complex
    y_ket: complex


@dataclass(frozen=True, eq=False)
class DoubleHomodyneReduction:
    """Two LO-tagged balanced homodyne problems whose bilinear combination gives the joint statistics."""

    terms: Tuple[ArmTerm, ...]
    lo_x: LocalOscillator
    lo_y: LocalOscillator
    eps_x: Tuple[float, float]
    eps_y: Tuple[float, float]

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms], dtype=complex)

    def total_weight(self) -> float:
        """sum_t w_t <x_bra|x_ket> <y_bra|y_ket>, which is 1 for normalized inputs."""
        return float(
            np.real(
                sum(
                    t.weight * coherent_overlap(t.x_bra, t.x_ket) * coherent_overlap(t.y_bra, t.y_ket)
                    for t in self.terms
                )
            )
        )


def reduce_to_double_homodyne(rho: Any, parameter_field: Any, cfg: EightPortConfig) -> DoubleHomodyneReduction:
    """
    Expand the first beam splitter on coherent pairs.

    Args:
        rho: Signal as a CoherentSuperposition or CoherentMixture
        parameter_field: Parameter field S in the same representation
        cfg: Network settings

    Returns:
        DoubleHomodyneReduction with LOs z and z e^{i phi}

    Raises:
        UnsupportedState: If an input is not a finite coherent mixture
    """
    signal = as_coherent_mixture(rho)
    field_state = as_coherent_mixture(parameter_field)
    terms: List[ArmTerm] = []
    for w_signal, (_, psi) in zip(signal.weights, signal.components):
        psi_weights = psi.bilinear_weights()
        for w_field, (_, chi) in zip(field_state.weights, field_state.components):
            chi_weights = chi.bilinear_weights()
            for i, alpha_bra in enumerate(psi.amplitudes):
                for j, alpha_ket in enumerate(psi.amplitudes):
                    for k, beta_bra in enumerate(chi.amplitudes):
                        for l, beta_ket in enumerate(chi.amplitudes):
                            bra = beam_splitter_map(alpha_bra, beta_bra)
                            ket = beam_splitter_map(alpha_ket, beta_ket)
                            weight = w_signal * w_field * psi_weights[i, j] * chi_weights[k, l]
                            terms.append(ArmTerm(complex(weight), bra[0], ket[0], bra[1], ket[1]))
    logger.debug(f"Reduced eight-port statistics to {len(terms)} bilinear arm terms")
    return DoubleHomodyneReduction(
        tuple(terms), cfg.lo_x, cfg.lo_y, cfg.arm_x_efficiencies, cfg.arm_y_efficiencies
    )


@dataclass(frozen=True, eq=False)
class ArmFactors:
    """
    Rank-one count kernels of one homodyne arm for every bilinear term.

    minus[t, i] is the kernel of the detector seeing (a - z)/sqrt2 at count
    minus_counts[i]; plus[t, j] the one seeing (a + z)/sqrt2. Outcomes are
    x = (plus_count/eps_plus - minus_count/eps_minus) / r.
    """

    minus_counts: np.ndarray
    plus_counts: np.ndarray
    minus: np.ndarray
    plus: np.ndarray
    eps_minus: float
    eps_plus: float
    r: float

    def totals(self) -> np.ndarray:
        return self.minus.sum(axis=1) * self.plus.sum(axis=1)

    def outcome_grid(self) -> np.ndarray:
        return (
            self.plus_counts[None, :] / self.eps_plus - self.minus_counts[:, None] / self.eps_minus
        ) / self.r

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """Per-term bilinear CDF at points x, shape (terms, len(x))."""
        x = np.asarray(x, dtype=float)
        cumulative = np.concatenate(
            [np.zeros((self.plus.shape[0], 1)), np.cumsum(self.plus, axis=1)], axis=1
        )
        # largest plus count with outcome <= x for each minus count
        bound = self.eps_plus * (x[None, :] * self.r + self.minus_counts[:, None] / self.eps_minus)
        index = np.floor(bound + 1e-9).astype(np.int64) - self.plus_counts[0] + 1
        index = np.clip(index, 0, len(self.plus_counts))
        return np.einsum("ti,tix->tx", self.minus, cumulative[:, index])


def _arm_factors(
    bras: np.ndarray, kets: np.ndarray, lo: LocalOscillator, eps: Tuple[float, float]
) -> ArmFactors:
    z = lo.amplitude
    minus_bra, minus_ket = (bras - z) / SQRT2, (kets - z) / SQRT2
    plus_bra, plus_ket = (bras + z) / SQRT2, (kets + z) / SQRT2
    lo_minus, hi_minus = count_window(np.concatenate([minus_bra, minus_ket]), eps[0])
    lo_plus, hi_plus = count_window(np.concatenate([plus_bra, plus_ket]), eps[1])
    minus_counts = np.arange(lo_minus, hi_minus + 1)
    plus_counts = np.arange(lo_plus, hi_plus + 1)
    minus = coherent_count_kernel(eps[0], minus_counts[None, :], minus_bra[:, None], minus_ket[:, None])
    plus = coherent_count_kernel(eps[1], plus_counts[None, :], plus_bra[:, None], plus_ket[:, None])
    return ArmFactors(minus_counts, plus_counts, minus, plus, eps[0], eps[1], lo.r)


@dataclass(frozen=True, eq=False)
class JointCountDistribution:
    """
    Four-detector count statistics p(k, l, m, n) in factorized form.

    k, m are the counts of detectors 1 and 3 (arm X); l, n those of detectors
    2 and 4 (arm Y). p = Re sum_t w_t x.minus[t,k] x.plus[t,m] y.minus[t,l] y.plus[t,n].
    """

    weights: np.ndarray
    arm_x: ArmFactors
    arm_y: ArmFactors
    tail_mass: float

    def total(self) -> float:
        return float(np.real(np.sum(self.weights * self.arm_x.totals() * self.arm_y.totals())))

    def _marginal(self, arm: ArmFactors, other: ArmFactors) -> ScaledDifferenceDistribution:
        coefficients = self.weights * other.totals()
        table = np.real(np.einsum("t,ti,tj->ij", coefficients, arm.minus, arm.plus))
        outcomes, inverse = merge_lattice(arm.outcome_grid())
        probabilities = np.clip(np.bincount(inverse, weights=table.ravel()), 0.0, None)
        return ScaledDifferenceDistribution(outcomes, probabilities, self.tail_mass)

    def marginal_x(self) -> ScaledDifferenceDistribution:
        return self._marginal(self.arm_x, self.arm_y)

    def marginal_y(self) -> ScaledDifferenceDistribution:
        return self._marginal(self.arm_y, self.arm_x)

    def count_table(self) -> np.ndarray:
        """Dense array p[k, l, m, n] over the count windows."""
        size = np.prod(
            [len(c) for c in (self.arm_x.minus_counts, self.arm_y.minus_counts,
                              self.arm_x.plus_counts, self.arm_y.plus_counts)]
        )
        if size > MAX_LATTICE_POINTS:
            raise TruncationInsufficient(f"Dense count table of {size} entries is too large")
        return np.real(
            np.einsum(
                "t,tk,tm,tl,tn->klmn",
                self.weights, self.arm_x.minus, self.arm_x.plus, self.arm_y.minus, self.arm_y.plus,
            )
        )

    def atoms(self, min_probability: float = 0.0) -> List[Tuple[int, int, int, int, float]]:
        """Rows (k, l, m, n, probability) of the dense table above min_probability."""
        table = self.count_table()
        rows = []
        for k, l, m, n in zip(*np.nonzero(table > min_probability)):
            rows.append((
                int(self.arm_x.minus_counts[k]),
                int(self.arm_y.minus_counts[l]),
                int(self.arm_x.plus_counts[m]),
                int(self.arm_y.plus_counts[n]),
                float(table[k, l, m, n]),
            ))
        return rows

    def cdf_grid(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Joint CDF P(X <= x_i, Y <= y_j)."""
        cx = self.arm_x.cdf(x)
        cy = self.arm_y.cdf(y)
        return np.real(np.einsum("t,ti,tj->ij", self.weights, cx, cy))


def joint_finite_distribution(
    rho: Any, parameter_field: Any, cfg: EightPortConfig, budget: Optional[TruncationBudget] = None
) -> JointCountDistribution:
    """
    Exact joint statistics of the four detectors at finite LO amplitude.

    Args:
        rho: Signal as a CoherentSuperposition or CoherentMixture
        parameter_field: Parameter field S in the same representation
        cfg: Network settings
        budget: Supplies the admissible tail mass (default 1e-10)

    Returns:
        JointCountDistribution with outcomes scaled by the extra 1/sqrt2

    Raises:
        TruncationInsufficient: If the count windows are too large or the tail too heavy
    """
    tail_tol = budget.tail_tol if budget is not None else DEFAULT_TAIL_TOL
    reduction = reduce_to_double_homodyne(rho, parameter_field, cfg)
    terms = reduction.terms
    arm_x = _arm_factors(
        np.array([t.x_bra for t in terms]), np.array([t.x_ket for t in terms]),
        reduction.lo_x, reduction.eps_x,
    )
    arm_y = _arm_factors(
        np.array([t.y_bra for t in terms]), np.array([t.y_ket for t in terms]),
        reduction.lo_y, reduction.eps_y,
    )
    for name, arm in (("X", arm_x), ("Y", arm_y)):
        points = len(arm.minus_counts) * len(arm.plus_counts)
        if points > MAX_LATTICE_POINTS:
            raise TruncationInsufficient(f"Arm {name} lattice of {points} points is too large")

    joint = JointCountDistribution(reduction.weights, arm_x, arm_y, 0.0)
    tail = max(0.0, 1.0 - joint.total())
    if tail > tail_tol:
        raise TruncationInsufficient(
            f"Eight-port lattice leaves tail {tail:.3e} (tolerance {tail_tol:.1e})",
            leaked_mass=tail,
            tolerance=tail_tol,
        )
    return JointCountDistribution(reduction.weights, arm_x, arm_y, tail)


def limit_joint_cdf(reduction: DoubleHomodyneReduction, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    High-amplitude limit CDF P(X <= x_i, Y <= y_j) for any LO phases.

    Each arm measures its smeared rotated quadrature at X/sqrt2 (resp. Y/sqrt2).
    """
    kx = SmearKernel1D(*reduction.eps_x)
    ky = SmearKernel1D(*reduction.eps_y)
    theta_x = reduction.lo_x.theta
    theta_y = reduction.lo_y.theta

    def arm_cdf(bra: complex, ket: complex, angle: float, kernel: SmearKernel1D, points: np.ndarray) -> np.ndarray:
        return np.array([
            bilinear_quadrature_interval(bra, ket, angle, kernel.variance, -math.inf, value / SQRT2)
            for value in points
        ])

    total = np.zeros((len(x), len(y)), dtype=complex)
    for term in reduction.terms:
        cx = arm_cdf(term.x_bra, term.x_ket, theta_x, kx, x)
        cy = arm_cdf(term.y_bra, term.y_ket, theta_y, ky, y)
        total += term.weight * np.outer(cx, cy)
    return np.real(total)


def ks_distance(joint: JointCountDistribution, limit: PhaseSpaceGrid) -> float:
    """Two-dimensional Kolmogorov-Smirnov distance at the grid's cell edges."""
    x, y = limit.spec.cell_edges()
    return float(np.max(np.abs(joint.cdf_grid(x, y) - limit.cumulative())))


def ks_distance_analytic(
    joint: JointCountDistribution, reduction: DoubleHomodyneReduction, x: np.ndarray, y: np.ndarray
) -> float:
    """Kolmogorov-Smirnov distance to the limit CDF of the same reduction, valid for any phases."""
    return float(np.max(np.abs(joint.cdf_grid(x, y) - limit_joint_cdf(reduction, x, y))))


def kernel2d_density(k: SmearKernel2D, x: Any, y: Any) -> Any:
    """
    Density f_eps(x, y) = f_{eps1,eps3}(x/sqrt2) f_{eps2,eps4}(y/sqrt2) / 2.

    Raises:
        KindError: If either factor is a Dirac measure
    """
    if k.kind is not Kernel2DKind.GAUSSIAN:
        raise KindError(f"{k.kind.value} kernel has no two-dimensional density")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 * gaussian_kernel_density(k.kx, x / SQRT2) * gaussian_kernel_density(k.ky, y / SQRT2)


def conjugate_generating_operator(S: FockDensityMatrix) -> FockDensityMatrix:
    """C S C^-1, which is entrywise conjugation because Hermite functions are real."""
    return FockDensityMatrix(S.entries.conj(), S.budget)


def _displaced_expectations(rho: FockDensityMatrix, T: FockDensityMatrix, alpha: np.ndarray) -> np.ndarray:
    displacements = displacement_elements(alpha, rho.budget.dim)
    displaced = displacements @ T.entries @ np.conj(np.transpose(displacements, (0, 2, 1)))
    return np.real(np.einsum("nm,bmn->b", rho.entries, displaced))


def covariant_density(rho: FockDensityMatrix, T: FockDensityMatrix, q: Any, p: Any) -> Any:
    """
    Density (1/2pi) tr[rho W_qp T W_qp*] of the covariant observable generated by T.

    Entries of W_qp are exact closed forms, so operators supported inside the
    cutoff give exact values; only |alpha|^2 beyond the displacement limit fails.

    Raises:
        TruncationInsufficient: If a displacement exceeds the representable range
    """
    if rho.budget.dim != T.budget.dim:
        raise DomainError("rho and T must share one cutoff")
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    alpha = (q.ravel() + 1j * p.ravel()) / SQRT2
    chunks = [alpha[i : i + GRID_CHUNK] for i in range(0, len(alpha), GRID_CHUNK)]
    values = parallel_map(lambda chunk: _displaced_expectations(rho, T, chunk), chunks)
    result = (np.concatenate(values) if values else np.zeros(0)) / (2 * math.pi)
    return result.reshape(q.shape) if q.shape else float(result[0])


def covariant_density_grid(rho: FockDensityMatrix, T: FockDensityMatrix, spec: GridSpec) -> PhaseSpaceGrid:
    q, p = spec.mesh()
    return PhaseSpaceGrid(spec, covariant_density(rho, T, q, p))


def limit_density(
    rho: FockDensityMatrix, S: FockDensityMatrix, k: SmearKernel2D, spec: GridSpec
) -> PhaseSpaceGrid:
    """
    Density of mu_eps * G^{CSC^-1} in the state rho on a grid.

    Computed as the FFT convolution of the covariant density with the analytic
    kernel transform; a Dirac kernel returns the covariant density itself.
    """
    g = covariant_density_grid(rho, conjugate_generating_operator(S), spec)
    if k.kind is Kernel2DKind.DIRAC:
        h = g
    else:
        h = apply_fourier_multiplier(g, k.characteristic)
    h.check_coverage("limit density")
    return h


def _gauss_hermite_axis(variance: float, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    if variance == 0.0:
        return np.zeros(1), np.ones(1)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return math.sqrt(2 * variance) * x, w / math.sqrt(math.pi)


def generating_operator_convolution(
    T: FockDensityMatrix,
    k: SmearKernel2D,
    budget: Optional[TruncationBudget] = None,
    nodes: int = DEFAULT_QUADRATURE_NODES,
) -> FockDensityMatrix:
    """
    Weak integral mu_eps * T = integral W_qp T W_qp* dmu_eps(q, p).

    Tensorized Gauss-Hermite quadrature matched to the per-axis variances; a
    Dirac axis contributes a single node.

    Args:
        T: Generating operator
        k: Smearing kernel
        budget: Output truncation; defaults to T's
        nodes: Quadrature nodes per Gaussian axis

    Returns:
        Smeared generating operator

    Raises:
        TruncationInsufficient: If displaced copies leak more than tail_tol past the cutoff
    """
    budget = budget or T.budget
    if budget.dim < T.budget.dim:
        raise DomainError("Output cutoff must not be smaller than the input cutoff")
    entries = np.zeros((budget.dim, budget.dim), dtype=complex)
    entries[: T.budget.dim, : T.budget.dim] = T.entries
    operator = FockDensityMatrix(entries, budget)
    if k.kind is Kernel2DKind.DIRAC:
        return operator

    var_x, var_y = k.axis_variances
    qx, wx = _gauss_hermite_axis(var_x, nodes)
    py, wy = _gauss_hermite_axis(var_y, nodes)
    q, p = np.meshgrid(qx, py, indexing="ij")
    weights = np.outer(wx, wy).ravel()
    alpha = (q.ravel() + 1j * p.ravel()) / SQRT2
    logger.debug(f"Convolving generating operator over {len(alpha)} quadrature nodes")

    def chunk_sum(index: np.ndarray) -> np.ndarray:
        displacements = displacement_elements(alpha[index], budget.dim)
        displaced = displacements @ operator.entries @ np.conj(np.transpose(displacements, (0, 2, 1)))
        return np.einsum("b,bmn->mn", weights[index], displaced)

    indices = np.array_split(np.arange(len(alpha)), max(1, len(alpha) // 128))
    result = sum(parallel_map(chunk_sum, indices))
    result = (result + result.conj().T) / 2

    leakage = T.trace() - float(np.real(np.trace(result)))
    if leakage > budget.tail_tol:
        raise TruncationInsufficient(
            f"Quadrature nodes displace {leakage:.3e} of the operator past cutoff {budget.cutoff}",
            leaked_mass=leakage,
            tolerance=budget.tail_tol,
        )
    return FockDensityMatrix(result, budget)


@dataclass(frozen=True)
class PurityReport:
    is_pure: bool
    largest_eigenvalue: float


def purity_extremality_check(T: FockDensityMatrix, purity_tol: float = PURITY_TOL) -> PurityReport:
    """A generating operator gives an extremal observable iff it is a one-dimensional projection."""
    largest = float(T.eigenvalues()[-1])
    return PurityReport(is_pure=largest >= 1.0 - purity_tol, largest_eigenvalue=largest)


@dataclass(frozen=True, eq=False)
class VacuumDecomposition:
    """mu_eps * |0><0| = weight |0><0| + (1 - weight) residual."""

    weight: float
    vacuum: FockDensityMatrix
    residual: FockDensityMatrix

    def recombined(self) -> FockDensityMatrix:
        return FockDensityMatrix(
            self.weight * self.vacuum.entries + (1 - self.weight) * self.residual.entries,
            self.vacuum.budget,
        )


def vacuum_component_decomposition(eps: float, budget: TruncationBudget) -> VacuumDecomposition:
    """
    Split the equal-efficiency smeared vacuum into its vacuum component and a residual.

    Raises:
        DomainError: Unless 0 < eps < 1
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"Vacuum decomposition needs 0 < eps < 1, got {eps}")
    n = np.arange(budget.dim)
    residual = np.where(n >= 1, eps / (1 - eps) * (1 - eps) ** n, 0.0)
    return VacuumDecomposition(
        weight=eps,
        vacuum=FockDensityMatrix.vacuum(budget),
        residual=FockDensityMatrix.from_diagonal(residual, budget),
    )


def smeared_vacuum(eps: float, budget: TruncationBudget) -> FockDensityMatrix:
    """Closed form eps sum_n (1 - eps)^n |n><n| of the equal-efficiency smeared vacuum."""
    n = np.arange(budget.dim)
    return FockDensityMatrix.from_diagonal(eps * (1 - eps) ** n, budget)


def covariance_check(
    rho: FockDensityMatrix, T: FockDensityMatrix, shift: Tuple[float, float], spec: GridSpec
) -> float:
    """
    Sup deviation between the density of the displaced state and the translated density.

    Evaluated on interior grid points; truncation of the displaced state is the
    only source of deviation.
    """
    q0, p0 = shift
    displacement = displacement_matrix(q0, p0, rho.budget)
    shifted = FockDensityMatrix(displacement @ rho.entries @ displacement.conj().T, rho.budget)
    q, p = spec.mesh()
    mask = spec.interior_mask()
    displaced_density = covariant_density(shifted, T, q[mask], p[mask])
    translated_density = covariant_density(rho, T, q[mask] - q0, p[mask] - p0)
    deviation = float(np.max(np.abs(displaced_density - translated_density)))
    logger.debug(f"Covariance deviation for shift {shift}: {deviation:.3e}")
    return deviation


def sample_eightport_outcomes(
    rho: CoherentSuperposition, parameter_field: CoherentSuperposition, cfg: EightPortConfig, shots: int, seed: int
) -> np.ndarray:
    """
    Monte Carlo (X, Y) outcomes for coherent product inputs.

    Returns:
        Array of shape (shots, 2)

    Raises:
        UnsupportedState: Unless both inputs are single coherent states
    """
    if len(rho.terms) != 1 or len(parameter_field.terms) != 1:
        raise UnsupportedState("Detector-level sampling needs single coherent inputs")
    mode1, mode2 = beam_splitter_map(rho.amplitudes[0], parameter_field.amplitudes[0])
    z_x, z_y = split_local_oscillator(cfg.lo.amplitude, cfg.phase_shift)
    d1, d3 = beam_splitter_map(mode1, z_x)
    d2, d4 = beam_splitter_map(mode2, z_y)
    e1, e2, e3, e4 = cfg.efficiencies
    counts = sample_counts([(d1, e1), (d2, e2), (d3, e3), (d4, e4)], shots, seed)
    r = cfg.lo.r
    x = (counts[:, 2] / e3 - counts[:, 0] / e1) / r
    y = (counts[:, 3] / e4 - counts[:, 1] / e2) / r
    return np.stack([x, y], axis=1)
