"""Balanced homodyne detection with inefficient detectors and its high-amplitude limit."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from src.detector import EfficiencyLike, as_efficiency, coherent_count_kernel, sample_counts
from src.errors import DomainError, KindError, TruncationInsufficient
from src.fock import (
    SQRT2,
    CoherentSuperposition,
    TruncationBudget,
    coherent_overlap,
    phase_space_from_amplitude,
)
from src.parallel import parallel_map


logger = logging.getLogger(__name__)

LATTICE_MERGE_TOL = 1e-12
PER_MODE_TAIL_TOL = 1e-12
MAX_LATTICE_POINTS = 10_000_000
DEFAULT_TAIL_TOL = 1e-10
# Errors below this are treated as converged in the order gate
ERROR_FLOOR = 1e-13


@dataclass(frozen=True)
class LocalOscillator:
    """Coherent auxiliary field |z> with z = r e^{i theta}."""

    r: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not (self.r > 0 and math.isfinite(self.r)):
            raise DomainError(f"Local oscillator amplitude must be positive, got {self.r}")
        if not math.isfinite(self.theta):
            raise DomainError(f"Local oscillator phase must be finite, got {self.theta}")
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))

    @property
    def amplitude(self) -> complex:
        return self.r * complex(math.cos(self.theta), math.sin(self.theta))

    def shifted(self, phi: float) -> "LocalOscillator":
        """Same amplitude with the phase advanced by phi."""
        return LocalOscillator(self.r, self.theta + phi)

    def with_amplitude(self, r: float) -> "LocalOscillator":
        return LocalOscillator(r, self.theta)


@dataclass(frozen=True)
class OutcomeLattice:
    """Scaled photon number differences x(m, n) = (n/eps2 - m/eps1) / (sqrt(2) r)."""

    r: float
    eps1: float
    eps2: float

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise DomainError(f"Lattice amplitude must be positive, got {self.r}")
        object.__setattr__(self, "eps1", as_efficiency(self.eps1).value)
        object.__setattr__(self, "eps2", as_efficiency(self.eps2).value)

    def outcome(self, m: Any, n: Any) -> Any:
        return (np.asarray(n) / self.eps2 - np.asarray(m) / self.eps1) / (SQRT2 * self.r)


@dataclass(frozen=True, eq=False)
class ScaledDifferenceDistribution:
    """
    Discrete distribution over the outcome lattice.

    Attributes:
        outcomes: Sorted distinct outcome values
        probabilities: Probability of each outcome
        tail_mass: Probability not represented by the atoms
    """

    outcomes: np.ndarray
    probabilities: np.ndarray
    tail_mass: float

    def total(self) -> float:
        return float(self.probabilities.sum())

    def mean(self) -> float:
        return float(np.dot(self.outcomes, self.probabilities) / self.total())

    def variance(self) -> float:
        mean = self.mean()
        return float(np.dot((self.outcomes - mean) ** 2, self.probabilities) / self.total())

    def cdf(self, x: Any) -> Any:
        """P(outcome <= x)."""
        cumulative = np.concatenate([[0.0], np.cumsum(self.probabilities)])
        return cumulative[np.searchsorted(self.outcomes, x, side="right")]

    def interval_probability(self, lo: float, hi: float) -> float:
        """P(lo < outcome <= hi); an empty interval has probability 0."""
        if hi <= lo:
            return 0.0
        return float(self.cdf(hi) - self.cdf(lo))

    def characteristic_function(self, t: Any) -> Any:
        t = np.asarray(t, dtype=float)
        return np.exp(1j * t[..., None] * self.outcomes) @ self.probabilities

    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.outcomes.tolist(), self.probabilities.tolist()))


class KernelKind(Enum):
    """Smearing kernel kind."""

    DIRAC = "dirac"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SmearKernel1D:
    """
    Smearing measure mu_{eps1,eps2} produced by two inefficient detectors.

    Dirac iff both efficiencies equal 1, otherwise a centered Gaussian with
    variance (eps1 + eps2 - 2 eps1 eps2) / (4 eps1 eps2).
    """

    eps1: float
    eps2: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps1", as_efficiency(self.eps1).value)
        object.__setattr__(self, "eps2", as_efficiency(self.eps2).value)

    @property
    def kind(self) -> KernelKind:
        if self.eps1 == 1.0 and self.eps2 == 1.0:
            return KernelKind.DIRAC
        return KernelKind.GAUSSIAN

    @property
    def variance(self) -> float:
        if self.kind is KernelKind.DIRAC:
            return 0.0
        e1, e2 = self.eps1, self.eps2
        return (e1 + e2 - 2 * e1 * e2) / (4 * e1 * e2)

    @property
    def coefficient(self) -> float:
        """Exponent coefficient 2 eps1 eps2 / (eps1 - 2 eps1 eps2 + eps2) of the density."""
        if self.kind is KernelKind.DIRAC:
            raise KindError("Dirac kernel has no density")
        e1, e2 = self.eps1, self.eps2
        return 2 * e1 * e2 / (e1 - 2 * e1 * e2 + e2)

    def characteristic(self, t: Any) -> Any:
        """Fourier transform E[e^{itX}] of the kernel."""
        return np.exp(-self.variance * np.asarray(t, dtype=float) ** 2 / 2)


@dataclass(frozen=True)
class ConvergenceSchedule:
    """Increasing local oscillator amplitudes and characteristic function evaluation points."""

    amplitudes: Tuple[float, ...]
    t_grid: Tuple[float, ...] = tuple(np.linspace(-5.0, 5.0, 101).tolist())

    def __post_init__(self) -> None:
        amplitudes = tuple(float(r) for r in self.amplitudes)
        if not amplitudes:
            raise DomainError("Convergence schedule needs at least one amplitude")
        if amplitudes[0] <= 0 or any(b <= a for a, b in zip(amplitudes, amplitudes[1:])):
            raise DomainError(f"Amplitudes must be positive and strictly increasing: {amplitudes}")
        if not self.t_grid:
            raise DomainError("Convergence schedule needs a non-empty t grid")
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """
    Characteristic function errors of the finite-amplitude statistics.

    Attributes:
        amplitudes: Local oscillator amplitudes r_k
        t_grid: Evaluation points
        errors: errors[k, j] = |phi_{r_k}(t_j) - phi_limit(t_j)|
    """

    amplitudes: np.ndarray
    t_grid: np.ndarray
    errors: np.ndarray

    @property
    def sup_errors(self) -> np.ndarray:
        return self.errors.max(axis=1)

    def decay_orders(self) -> np.ndarray:
        """Empirical exponents log(e_k / e_{k+1}) / log(r_{k+1} / r_k)."""
        e = np.maximum(self.sup_errors, ERROR_FLOOR)
        r = self.amplitudes
        return np.log(e[:-1] / e[1:]) / np.log(r[1:] / r[:-1])

    def passes_order_gate(self, burn_in: int = 1, rel_tol: float = 0.25) -> bool:
        """
        Check non-increasing errors with at least O(1/r) decay after the burn-in.

        Args:
            burn_in: Number of leading amplitudes excluded from the check
            rel_tol: Relative slack on both conditions
        """
        e = self.sup_errors
        r = self.amplitudes
        for k in range(burn_in, len(e) - 1):
            if e[k] < ERROR_FLOOR and e[k + 1] < ERROR_FLOOR:
                continue
            if e[k + 1] > e[k] * (1 + rel_tol):
                return False
            if r[k + 1] * e[k + 1] > r[k] * e[k] * (1 + rel_tol):
                return False
        return True

    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.amplitudes.tolist(), self.sup_errors.tolist()))


def beam_splitter_map(a: complex, b: complex) -> Tuple[complex, complex]:
    """Action of the 50:50 beam splitter on coherent labels: (a, b) -> ((a-b)/sqrt2, (a+b)/sqrt2)."""
    a = complex(a)
    b = complex(b)
    return (a - b) / SQRT2, (a + b) / SQRT2


def count_window(amplitudes: Any, eps: EfficiencyLike, tail_tol: float = PER_MODE_TAIL_TOL) -> Tuple[int, int]:
    """
    Count range holding all but tail_tol of each Poisson(eps |a|^2) on both sides.

    Cross terms between two amplitudes are bounded by the geometric mean of the
    diagonal terms, so the union window also covers them.
    """
    eps_value = as_efficiency(eps).value
    means = eps_value * np.abs(np.atleast_1d(np.asarray(amplitudes, dtype=complex))) ** 2
    lows, highs = [], []
    for mean in means:
        if mean == 0:
            lows.append(0)
            highs.append(0)
            continue
        lows.append(int(stats.poisson.ppf(tail_tol, mean)))
        highs.append(int(stats.poisson.isf(tail_tol, mean)) + 1)
    return max(0, min(lows)), max(highs)


def bilinear_count_table(
    bra: complex,
    ket: complex,
    lo: LocalOscillator,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
    m: np.ndarray,
    n: np.ndarray,
) -> np.ndarray:
    """
    Kernel <bra| V_z* U* (E^{eps1}_m x E^{eps2}_n) U V_z |ket> on a grid of counts.

    Returns:
        Complex array of shape (len(m), len(n))
    """
    z = lo.amplitude
    bra1, bra2 = beam_splitter_map(bra, z)
    ket1, ket2 = beam_splitter_map(ket, z)
    first = coherent_count_kernel(eps1, m, bra1, ket1)
    second = coherent_count_kernel(eps2, n, bra2, ket2)
    return np.outer(first, second)


def merge_lattice(outcomes: np.ndarray, tol: float = LATTICE_MERGE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Merge outcome values closer than tol.

    Returns:
        (distinct sorted outcomes, index of each input into them)
    """
    outcomes = np.asarray(outcomes, dtype=float).ravel()
    order = np.argsort(outcomes, kind="stable")
    ordered = outcomes[order]
    starts = np.concatenate([[True], np.diff(ordered) > tol])
    groups = np.cumsum(starts) - 1
    inverse = np.empty_like(groups)
    inverse[order] = groups
    return ordered[starts], inverse


def _superposition_count_table(
    signal: CoherentSuperposition,
    lo: LocalOscillator,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    amplitudes = signal.amplitudes
    mode1 = (amplitudes - lo.amplitude) / SQRT2
    mode2 = (amplitudes + lo.amplitude) / SQRT2
    m_lo, m_hi = count_window(mode1, eps1)
    n_lo, n_hi = count_window(mode2, eps2)
    m = np.arange(m_lo, m_hi + 1)
    n = np.arange(n_lo, n_hi + 1)
    if len(m) * len(n) > MAX_LATTICE_POINTS:
        raise TruncationInsufficient(
            f"Count lattice {len(m)}x{len(n)} exceeds {MAX_LATTICE_POINTS} points",
        )
    logger.debug(f"Homodyne count windows m in [{m_lo}, {m_hi}], n in [{n_lo}, {n_hi}]")

    first = coherent_count_kernel(eps1, m[None, None, :], mode1[:, None, None], mode1[None, :, None])
    second = coherent_count_kernel(eps2, n[None, None, :], mode2[:, None, None], mode2[None, :, None])
    table = np.einsum("ij,ijm,ijn->mn", signal.bilinear_weights(), first, second)
    return m, n, np.real(table)


def finite_z_distribution(
    signal: CoherentSuperposition,
    lo: LocalOscillator,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
    budget: Optional[TruncationBudget] = None,
) -> ScaledDifferenceDistribution:
    """
    Exact statistics of the scaled photon number difference at finite amplitude.

    Args:
        signal: Signal state as a coherent superposition
        lo: Local oscillator
        eps1: Efficiency of the detector counting m
        eps2: Efficiency of the detector counting n
        budget: Supplies the admissible tail mass (default 1e-10)

    Returns:
        ScaledDifferenceDistribution over the merged lattice

    Raises:
        TruncationInsufficient: If the lattice is too large or the tail too heavy
    """
    tail_tol = budget.tail_tol if budget is not None else DEFAULT_TAIL_TOL
    m, n, table = _superposition_count_table(signal, lo, eps1, eps2)
    lattice = OutcomeLattice(lo.r, as_efficiency(eps1).value, as_efficiency(eps2).value)
    outcomes, inverse = merge_lattice(lattice.outcome(m[:, None], n[None, :]))
    probabilities = np.clip(np.bincount(inverse, weights=table.ravel()), 0.0, None)

    tail = max(0.0, 1.0 - float(probabilities.sum()))
    if tail > tail_tol:
        raise TruncationInsufficient(
            f"Homodyne lattice leaves tail {tail:.3e} (tolerance {tail_tol:.1e})",
            leaked_mass=tail,
            tolerance=tail_tol,
        )
    return ScaledDifferenceDistribution(outcomes, probabilities, tail)


def _sin_minus_identity(u: np.ndarray) -> np.ndarray:
    """sin(u) - u without cancellation for small u."""
    u = np.asarray(u, dtype=float)
    u2 = u * u
    series = -u * u2 / 6 * (1 - u2 / 20 * (1 - u2 / 42 * (1 - u2 / 72)))
    return np.where(np.abs(u) < 1e-2, series, np.sin(u) - u)


def finite_z_char_fn(
    alpha: complex,
    beta: complex,
    lo: LocalOscillator,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
    t: Any,
) -> Any:
    """
    Closed-form bilinear characteristic function sum_x e^{itx} <alpha|E^z(x)|beta>.

    The terms quadratic in r are combined so the O(r t) imaginary parts cancel
    analytically, keeping the relative error small up to r ~ 1e6.
    """
    e1 = as_efficiency(eps1).value
    e2 = as_efficiency(eps2).value
    a = complex(alpha)
    b = complex(beta)
    r = lo.r
    t = np.asarray(t, dtype=float)

    u1 = t / (SQRT2 * e1 * r)
    u2 = t / (SQRT2 * e2 * r)
    # 1 - e^{-iu1} and 1 - e^{iu2}
    d1 = 2 * np.sin(u1 / 2) ** 2 + 1j * np.sin(u1)
    d2 = 2 * np.sin(u2 / 2) ** 2 - 1j * np.sin(u2)

    rotation = complex(math.cos(lo.theta), math.sin(lo.theta))
    ab = a.conjugate() * b
    s = a.conjugate() * rotation + b * rotation.conjugate()

    quadratic = -(r**2) * (e1 * np.sin(u1 / 2) ** 2 + e2 * np.sin(u2 / 2) ** 2) + 0.5j * r**2 * (
        e2 * _sin_minus_identity(u2) - e1 * _sin_minus_identity(u1)
    )
    linear = r * s / 2 * (e1 * d1 - e2 * d2)
    constant = -(e1 * d1 + e2 * d2) * ab / 2
    exponent = -abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + ab + constant + linear + quadratic
    return np.exp(exponent)


def limit_char_fn(
    alpha: complex, beta: complex, theta: float, eps1: EfficiencyLike, eps2: EfficiencyLike, t: Any
) -> Any:
    """Limit characteristic function of the smeared rotated quadrature, bilinear in (alpha, beta)."""
    e1 = as_efficiency(eps1).value
    e2 = as_efficiency(eps2).value
    a = complex(alpha)
    b = complex(beta)
    t = np.asarray(t, dtype=float)
    rotation = complex(math.cos(theta), math.sin(theta))
    s = a.conjugate() * rotation + b * rotation.conjugate()
    return (
        coherent_overlap(a, b)
        * np.exp(1j * t * s / SQRT2)
        * np.exp(-(t**2) * (1 / e1 + 1 / e2) / 8)
    )


def lemma_limit_probe(a: float, b: float, x: Any) -> Any:
    """
    Evaluate a x^2 (1 - e^{-i/(ax)}) + b x^2 (1 - e^{i/(bx)}).

    Raises:
        DomainError: If a or b is zero or x is not positive
    """
    if a == 0 or b == 0:
        raise DomainError("Parameters a and b must be non-zero")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("Argument x must be positive")
    ua = 1.0 / (a * x)
    ub = 1.0 / (b * x)
    real = 2 * a * x**2 * np.sin(ua / 2) ** 2 + 2 * b * x**2 * np.sin(ub / 2) ** 2
    # the leading +x and -x imaginary parts cancel exactly
    imag = a * x**2 * _sin_minus_identity(ua) - b * x**2 * _sin_minus_identity(ub)
    return real + 1j * imag


def limit_value(a: float, b: float) -> float:
    """Limit (1/a + 1/b) / 2 of lemma_limit_probe as x grows."""
    if a == 0 or b == 0:
        raise DomainError("Parameters a and b must be non-zero")
    return 0.5 * (1.0 / a + 1.0 / b)


def gaussian_kernel_density(k: SmearKernel1D, x: Any) -> Any:
    """
    Density of a Gaussian smearing kernel.

    Raises:
        KindError: For Dirac kernels
    """
    if k.kind is KernelKind.DIRAC:
        raise KindError("Dirac kernel has no density")
    c = k.coefficient
    return math.sqrt(c / math.pi) * np.exp(-c * np.asarray(x, dtype=float) ** 2)


def _quadrature_term(bra: complex, ket: complex, theta: float) -> Tuple[complex, complex]:
    """
    Prefactor B and complex center c with conj(psi_bra) psi_ket = B exp(-(x - c)^2) after rotation.
    """
    rotation = complex(math.cos(theta), -math.sin(theta))
    qa, pa = phase_space_from_amplitude(complex(bra) * rotation)
    qb, pb = phase_space_from_amplitude(complex(ket) * rotation)
    k = pb - pa
    m = (qa + qb) / 2
    prefactor = np.exp(
        1j * (qa * pa - qb * pb) / 2 - (qa - qb) ** 2 / 4 + 1j * k * m - k**2 / 4
    ) / math.sqrt(math.pi)
    return complex(prefactor), complex(m, k / 2)


def _erfc_at(x: float, center: complex, scale: float, flip: bool) -> complex:
    sign = -1.0 if flip else 1.0
    if math.isinf(x):
        return 0.0 if sign * x > 0 else 2.0
    return complex(special.erfc(sign * (x - center) / scale))


def bilinear_quadrature_interval(
    bra: complex, ket: complex, theta: float, variance: float, lo: float, hi: float
) -> complex:
    """
    <bra| (mu * Q_theta)((lo, hi]) |ket> for a centered Gaussian mu of the given variance.

    Variance 0 gives the unsmeared quadrature.
    """
    prefactor, center = _quadrature_term(bra, ket, theta)
    sigma = math.sqrt(0.5 + variance)
    scale = SQRT2 * sigma
    # pick the erfc orientation that keeps both arguments in the accurate tail
    flip = ((lo if math.isfinite(lo) else hi) + (hi if math.isfinite(hi) else lo)) / 2 < center.real
    if flip:
        difference = _erfc_at(hi, center, scale, True) - _erfc_at(lo, center, scale, True)
    else:
        difference = _erfc_at(lo, center, scale, False) - _erfc_at(hi, center, scale, False)
    return prefactor * math.sqrt(math.pi) * difference / 2


def bilinear_quadrature_density(bra: complex, ket: complex, theta: float, variance: float, x: Any) -> Any:
    """Density of <bra| (mu * Q_theta)(dx) |ket>."""
    prefactor, center = _quadrature_term(bra, ket, theta)
    total_variance = 0.5 + variance
    x = np.asarray(x, dtype=float)
    gaussian = np.exp(-((x - center) ** 2) / (2 * total_variance)) / math.sqrt(
        2 * math.pi * total_variance
    )
    return prefactor * math.sqrt(math.pi) * gaussian


def smeared_quadrature_prob(
    signal: CoherentSuperposition, theta: float, k: SmearKernel1D, interval: Sequence[float]
) -> float:
    """
    Probability that the smeared rotated quadrature falls in (x_lo, x_hi].

    Args:
        signal: Signal state
        theta: Quadrature angle
        k: Smearing kernel (Dirac gives the plain quadrature)
        interval: (x_lo, x_hi); infinite endpoints allowed

    Returns:
        Probability in [0, 1]
    """
    lo, hi = float(interval[0]), float(interval[1])
    if hi < lo:
        raise DomainError(f"Interval bounds out of order: ({lo}, {hi})")
    if hi == lo:
        return 0.0
    weights = signal.bilinear_weights()
    amplitudes = signal.amplitudes
    total = 0j
    for i, bra in enumerate(amplitudes):
        for j, ket in enumerate(amplitudes):
            total += weights[i, j] * bilinear_quadrature_interval(bra, ket, theta, k.variance, lo, hi)
    return float(total.real)


def smeared_quadrature_density(signal: CoherentSuperposition, theta: float, k: SmearKernel1D, x: Any) -> Any:
    """Density of the smeared rotated quadrature; with a Dirac kernel the plain quadrature density."""
    weights = signal.bilinear_weights()
    amplitudes = signal.amplitudes
    total = 0.0
    for i, bra in enumerate(amplitudes):
        for j, ket in enumerate(amplitudes):
            total = total + weights[i, j] * bilinear_quadrature_density(bra, ket, theta, k.variance, x)
    return np.real(total)


def signal_char_fn(
    signal: CoherentSuperposition,
    lo: Optional[LocalOscillator],
    theta: float,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
    t: Any,
) -> Any:
    """Characteristic function of the signal: finite amplitude for a given lo, limit when lo is None."""
    weights = signal.bilinear_weights()
    amplitudes = signal.amplitudes
    total = 0.0
    for i, bra in enumerate(amplitudes):
        for j, ket in enumerate(amplitudes):
            if lo is None:
                value = limit_char_fn(bra, ket, theta, eps1, eps2, t)
            else:
                value = finite_z_char_fn(bra, ket, lo, eps1, eps2, t)
            total = total + weights[i, j] * value
    return total


def convergence_report(
    signal: CoherentSuperposition,
    theta: float,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
    schedule: ConvergenceSchedule,
) -> ConvergenceReport:
    """
    Distance between finite-amplitude and limit characteristic functions along a schedule.

    Amplitudes are evaluated in parallel; rows keep schedule order.
    """
    t = np.asarray(schedule.t_grid)
    limit = signal_char_fn(signal, None, theta, eps1, eps2, t)

    def row(r: float) -> np.ndarray:
        finite = signal_char_fn(signal, LocalOscillator(r, theta), theta, eps1, eps2, t)
        return np.abs(finite - limit)

    errors = np.array(parallel_map(row, schedule.amplitudes))
    logger.debug(f"Convergence sup errors: {errors.max(axis=1)}")
    return ConvergenceReport(np.asarray(schedule.amplitudes), t, errors)


def sample_homodyne_outcomes(
    signal: CoherentSuperposition,
    lo: LocalOscillator,
    eps1: EfficiencyLike,
    eps2: EfficiencyLike,
    shots: int,
    seed: int,
) -> np.ndarray:
    """
    Monte Carlo scaled differences of a balanced homodyne detector.

    A single coherent term is simulated detector by detector; superpositions are
    sampled by inverse CDF from the exact lattice distribution so interference is kept.
    """
    lattice = OutcomeLattice(lo.r, as_efficiency(eps1).value, as_efficiency(eps2).value)
    if len(signal.terms) == 1:
        mode1, mode2 = beam_splitter_map(signal.amplitudes[0], lo.amplitude)
        counts = sample_counts([(mode1, eps1), (mode2, eps2)], shots, seed)
        return lattice.outcome(counts[:, 0], counts[:, 1])

    dist = finite_z_distribution(signal, lo, eps1, eps2)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.probabilities)
    cdf /= cdf[-1]
    return dist.outcomes[np.searchsorted(cdf, rng.random(shots), side="right")]
