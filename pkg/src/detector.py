"""Inefficient photon counting: binomially smeared number POVM, coherent kernels, samplers."""

import logging
import math
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special, stats

from src.errors import DomainError, TruncationInsufficient
from src.fock import CoherentSuperposition, FockDensityMatrix, TruncationBudget


logger = logging.getLogger(__name__)

MAX_COUNT_CAP = 100_000
DEFAULT_COUNT_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class Efficiency:
    """Quantum efficiency of a photodetector, 0 < value <= 1."""

    value: float

    def __post_init__(self) -> None:
        value = float(self.value)
        if not (0.0 < value <= 1.0) or math.isnan(value):
            raise DomainError(f"Efficiency must lie in (0, 1], got {self.value}")
        object.__setattr__(self, "value", value)

    @property
    def is_ideal(self) -> bool:
        return self.value == 1.0

    def __float__(self) -> float:
        return self.value


EfficiencyLike = Union[float, Efficiency]


def as_efficiency(eps: EfficiencyLike) -> Efficiency:
    """Coerce a float or Efficiency to a validated Efficiency."""
    return eps if isinstance(eps, Efficiency) else Efficiency(eps)


@dataclass(frozen=True, eq=False)
class CountDistribution:
    """
    Photon count statistics of a single detector.

    Attributes:
        probs: probs[n] is the probability of n counts
        tail_mass: Probability of counts beyond len(probs) - 1
    """

    probs: np.ndarray
    tail_mass: float

    @property
    def max_n(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))

    def variance(self) -> float:
        n = np.arange(len(self.probs))
        return float(np.dot(n**2, self.probs) - self.mean() ** 2)

    def total_variation(self, other: Union["CountDistribution", np.ndarray]) -> float:
        """Total variation distance to another distribution or empirical frequencies."""
        q = other.probs if isinstance(other, CountDistribution) else np.asarray(other, dtype=float)
        size = max(len(self.probs), len(q))
        p = np.pad(self.probs, (0, size - len(self.probs)))
        q = np.pad(q, (0, size - len(q)))
        return 0.5 * float(np.sum(np.abs(p - q))) + 0.5 * self.tail_mass

    def rows(self) -> List[Tuple[int, float]]:
        return [(n, float(p)) for n, p in enumerate(self.probs)]


def smeared_number_povm_element(eps: EfficiencyLike, n: int, budget: TruncationBudget) -> np.ndarray:
    """
    Diagonal matrix of E^eps_n = sum_{m>=n} C(m, n) eps^n (1-eps)^(m-n) |m><m|.

    Args:
        eps: Detector efficiency
        n: Count outcome
        budget: Truncation budget

    Returns:
        Real (cutoff+1) x (cutoff+1) diagonal matrix
    """
    if n < 0:
        raise DomainError(f"Count outcome must be non-negative, got {n}")
    return np.diag(_povm_row(as_efficiency(eps), n, budget.dim))


def _povm_row(eps: Efficiency, n: Any, dim: int) -> np.ndarray:
    m = np.arange(dim)
    n = np.asarray(n)[..., None]
    if eps.is_ideal:
        return (m == n).astype(float)
    return stats.binom.pmf(n, m, eps.value)


def povm_diagonals(eps: EfficiencyLike, budget: TruncationBudget, n_max: Optional[int] = None) -> np.ndarray:
    """Rows n = 0..n_max of the POVM diagonals, shape (n_max+1, cutoff+1)."""
    n_max = budget.cutoff if n_max is None else n_max
    return _povm_row(as_efficiency(eps), np.arange(n_max + 1), budget.dim)


def completeness_defect(eps: EfficiencyLike, budget: TruncationBudget) -> float:
    """Largest deviation of sum_n E^eps_n from the identity on the truncated space."""
    totals = povm_diagonals(eps, budget).sum(axis=0)
    return float(np.max(np.abs(totals - 1.0)))


def coherent_count_kernel(eps: EfficiencyLike, n: Any, gamma: Any, delta: Any) -> Any:
    """
    Exact kernel <gamma|E^eps_n|delta>.

    Equals (eps conj(gamma) delta)^n / n! exp(-(|gamma|^2+|delta|^2)/2) exp((1-eps) conj(gamma) delta).
    Broadcasts over n, gamma and delta.
    """
    eps_value = as_efficiency(eps).value
    n = np.asarray(n)
    gamma = np.asarray(gamma, dtype=complex)
    delta = np.asarray(delta, dtype=complex)
    if np.any(n < 0):
        raise DomainError("Count outcomes must be non-negative")

    w = np.conj(gamma) * delta
    exponent = -(np.abs(gamma) ** 2 + np.abs(delta) ** 2) / 2 + (1 - eps_value) * w
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(n == 0, 0.0, n * np.log(eps_value * w + 0j))
    value = np.exp(exponent + power - special.gammaln(n + 1))
    return np.where((n > 0) & (w == 0), 0.0, value)


def _superposition_counts(state: CoherentSuperposition, eps: Efficiency, max_n: int) -> np.ndarray:
    weights = state.bilinear_weights()
    a = state.amplitudes
    n = np.arange(max_n + 1)
    kernel = coherent_count_kernel(eps, n[None, None, :], a[:, None, None], a[None, :, None])
    return np.real(np.einsum("ij,ijn->n", weights, kernel))


def _density_counts(rho: FockDensityMatrix, eps: Efficiency, max_n: int) -> np.ndarray:
    return _povm_row(eps, np.arange(max_n + 1), rho.budget.dim) @ rho.diagonal


def count_distribution(
    state: Union[CoherentSuperposition, FockDensityMatrix],
    eps: EfficiencyLike,
    max_n: Optional[int] = None,
    tail_tol: Optional[float] = None,
) -> CountDistribution:
    """
    Count statistics tr[rho E^eps_n].

    Superpositions use bilinear kernel sums; density matrices use the diagonal
    contraction. When max_n is omitted it is doubled until the tail drops below tail_tol.

    Args:
        state: Signal state
        eps: Detector efficiency
        max_n: Largest count to tabulate
        tail_tol: Admissible unreported probability

    Returns:
        CountDistribution

    Raises:
        TruncationInsufficient: If the tail exceeds tail_tol
    """
    eps = as_efficiency(eps)
    if isinstance(state, FockDensityMatrix):
        tolerance = tail_tol if tail_tol is not None else max(DEFAULT_COUNT_TAIL_TOL, state.budget.tail_tol)
        compute = lambda size: _density_counts(state, eps, size)  # noqa: E731
        # counts above the cutoff have zero probability
        start = cap = state.cutoff
    else:
        tolerance = tail_tol if tail_tol is not None else DEFAULT_COUNT_TAIL_TOL
        compute = lambda size: _superposition_counts(state, eps, size)  # noqa: E731
        mean = eps.value * state.max_amplitude**2
        start = max(16, int(math.ceil(mean + 10 * math.sqrt(mean) + 10)))
        cap = MAX_COUNT_CAP

    size = max_n if max_n is not None else start
    while True:
        probs = compute(size)
        tail = max(0.0, 1.0 - float(probs.sum()))
        if tail <= tolerance or max_n is not None or size >= cap:
            break
        size = min(2 * size, cap)
        logger.debug(f"Count tail {tail:.2e} above {tolerance:.1e}, widening to {size}")

    if tail > tolerance:
        raise TruncationInsufficient(
            f"Count distribution up to n={size} leaves tail {tail:.3e} (tolerance {tolerance:.1e})",
            leaked_mass=tail,
            tolerance=tolerance,
        )
    return CountDistribution(probs=probs, tail_mass=tail)


def sample_counts(
    mean_list: Sequence[Tuple[complex, EfficiencyLike]], shots: int, seed: int
) -> np.ndarray:
    """
    Sample independent detector counts for coherent inputs.

    Each detector sees Poisson(|amplitude|^2) photons thinned with its efficiency,
    i.e. Poisson(eps |amplitude|^2) counts. Every detector draws from its own
    stream spawned from the seed.

    Args:
        mean_list: (coherent amplitude, efficiency) per detector
        shots: Number of repetitions
        seed: Root seed

    Returns:
        Integer array of shape (shots, detectors)
    """
    if shots < 1:
        raise DomainError(f"shots must be at least 1, got {shots}")
    streams = np.random.SeedSequence(seed).spawn(len(mean_list))
    columns = []
    for (amplitude, eps), stream in zip(mean_list, streams):
        rng = np.random.default_rng(stream)
        columns.append(rng.poisson(as_efficiency(eps).value * abs(amplitude) ** 2, size=shots))
    return np.stack(columns, axis=1) if columns else np.zeros((shots, 0), dtype=int)


def sample_from_distribution(dist: CountDistribution, shots: int, seed: int) -> np.ndarray:
    """Inverse-CDF sampling from an analytic count distribution (interference included)."""
    if shots < 1:
        raise DomainError(f"shots must be at least 1, got {shots}")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(np.clip(dist.probs, 0.0, None))
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(shots), side="right")


def count_events(samples: np.ndarray) -> np.ndarray:
    """Flatten (shots, detectors) samples into (shot, detector, count) rows."""
    shots, detectors = samples.shape
    shot_index, detector_index = np.meshgrid(np.arange(shots), np.arange(detectors), indexing="ij")
    return np.stack([shot_index.ravel(), detector_index.ravel(), samples.ravel()], axis=1)
