"""Forward smearing, Fourier deconvolution and state reconstruction from phase space densities."""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg, optimize

from src.eightport import Kernel2DKind, SmearKernel2D, limit_density
from src.errors import (
    DivisorThresholdError,
    DomainError,
    NoiseAmplificationWarning,
    ReconstructionError,
    ResolutionError,
)
from src.fock import (
    DISPLACEMENT_ENERGY_LIMIT,
    SQRT2,
    FockDensityMatrix,
    TruncationBudget,
    displacement_elements,
    fidelity,
)
from src.parallel import parallel_map
from src.phasespace import (
    FrequencyGrid,
    GridSpec,
    PhaseSpaceGrid,
    from_frequency,
    to_frequency,
)


logger = logging.getLogger(__name__)

SAMPLES_PER_SIGMA = 6.0
EXACT_DIVISION_FLOOR = 1e-8
AMPLIFICATION_WARNING = 1e6
DIVISOR_TOL = 1e-6
SUPPORT_TOL = 1e-8
PASSBAND_TOL = 1e-6
NOISE_SIGMAS = 5.0
LSQ_RCOND = 1e-3
WEYL_CHUNK = 256


class DeconvolutionMode(Enum):
    EXACT = "exact"
    THRESHOLDED = "thresholded"
    TIKHONOV = "tikhonov"


class ReconstructionMethod(Enum):
    """How the Weyl transform is turned back into a density matrix."""

    QUADRATURE = "quadrature"
    LEAST_SQUARES = "least_squares"


@dataclass(frozen=True)
class DeconvolutionPolicy:
    """
    How the kernel transform is divided out.

    Attributes:
        mode: Division strategy
        threshold: Relative cutoff tau; frequencies with kernel below tau * max are zeroed
        regularization: Tikhonov lambda; None selects it by the discrepancy principle
        noise_level: Standard deviation of the transformed data per frequency, if known
    """

    mode: DeconvolutionMode = DeconvolutionMode.THRESHOLDED
    threshold: float = 1e-6
    regularization: Optional[float] = None
    noise_level: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.mode, DeconvolutionMode):
            object.__setattr__(self, "mode", DeconvolutionMode(self.mode))
        if self.mode is DeconvolutionMode.THRESHOLDED and not self.threshold > 0:
            raise DomainError(f"Thresholded deconvolution needs threshold > 0, got {self.threshold}")
        if self.regularization is not None and self.regularization < 0:
            raise DomainError(f"Regularization must be non-negative, got {self.regularization}")
        if self.noise_level is not None and self.noise_level < 0:
            raise DomainError(f"Noise level must be non-negative, got {self.noise_level}")

    @classmethod
    def for_synthetic(cls) -> "DeconvolutionPolicy":
        return cls(DeconvolutionMode.THRESHOLDED, threshold=1e-6)

    @classmethod
    def for_histogram(cls, shots: int) -> "DeconvolutionPolicy":
        return cls(DeconvolutionMode.TIKHONOV, noise_level=histogram_noise_level(shots))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["mode"] = self.mode.value
        return data


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """
    What a deconvolution did to each frequency of the smeared transform.

    Attributes:
        gain: Factor applied to the smeared transform; zero where a frequency was dropped
        passband: gain times the kernel transform, 1 where the kernel was divided out exactly
        noise_level: Standard deviation of the smeared transform per frequency (0 for exact data)
    """

    gain: np.ndarray
    passband: np.ndarray
    noise_level: float = 0.0

    @classmethod
    def identity(cls, shape: Tuple[int, int], noise_level: float = 0.0) -> "FrequencyResponse":
        return cls(np.ones(shape), np.ones(shape), noise_level)

    @property
    def support(self) -> np.ndarray:
        """Frequencies the deconvolved data still carries information on."""
        return self.passband >= PASSBAND_TOL

    def noise_floor(self) -> np.ndarray:
        """Standard deviation of 2 pi times the deconvolved transform."""
        return 2 * math.pi * self.noise_level * np.abs(self.gain)


@dataclass(frozen=True)
class DeconvolutionReport:
    """Condition diagnostics of one deconvolution; the frequency response stays out of JSON."""

    mode: str
    threshold: float
    regularization: float
    amplification: float
    excluded_fraction: float
    response: Optional[FrequencyResponse] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "response"}


def histogram_noise_level(shots: int) -> float:
    """Per-frequency standard deviation bound 1/(2 pi sqrt(N)) of an empirical transform."""
    if shots < 1:
        raise DomainError(f"shots must be at least 1, got {shots}")
    return 1.0 / (2 * math.pi * math.sqrt(shots))


def kernel_fourier(k: SmearKernel2D, u: Any, v: Any) -> Any:
    """Transform (1/2pi) E[e^{-i(uX+vY)}] of the kernel, floored at the smallest positive float."""
    return np.maximum(k.characteristic(u, v) / (2 * math.pi), np.finfo(float).tiny)


def check_resolution(spec: GridSpec, k: SmearKernel2D) -> None:
    """
    Require SAMPLES_PER_SIGMA grid points per kernel standard deviation on every smeared axis.

    Raises:
        ResolutionError: If a Gaussian axis is under-resolved
    """
    var_x, var_y = k.axis_variances
    for name, variance, step in (("q", var_x, spec.dq), ("p", var_y, spec.dp)):
        if variance == 0.0:
            continue
        samples = math.sqrt(variance) / step
        if samples < SAMPLES_PER_SIGMA:
            raise ResolutionError(
                f"Grid step {step:.4g} on the {name} axis gives {samples:.2f} samples per kernel "
                f"standard deviation, need {SAMPLES_PER_SIGMA}"
            )


def forward_smear(g: PhaseSpaceGrid, k: SmearKernel2D) -> PhaseSpaceGrid:
    """
    Convolve a density with the kernel through its analytic transform.

    Raises:
        ResolutionError: If the grid does not resolve the kernel
    """
    if k.kind is Kernel2DKind.DIRAC:
        return g
    check_resolution(g.spec, k)
    frequency = to_frequency(g)
    u, v = frequency.mesh()
    return from_frequency(frequency.with_values(frequency.values * k.characteristic(u, v)))


def _outer_band_noise(frequency: FrequencyGrid) -> float:
    u, v = frequency.mesh()
    outer = (np.abs(u) > 0.75 * np.abs(u).max()) | (np.abs(v) > 0.75 * np.abs(v).max())
    return float(np.sqrt(np.mean(np.abs(frequency.values[outer]) ** 2)))


def _discrepancy_lambda(h_hat: np.ndarray, divisor: np.ndarray, noise: float) -> float:
    """Pick lambda so the residual |D g - h|^2 summed over frequencies equals the expected noise."""
    power = np.abs(h_hat) ** 2
    d2 = divisor**2
    target = h_hat.size * noise**2

    def misfit(log_lambda: float) -> float:
        lam = math.exp(log_lambda)
        return float(np.sum(power * (lam / (d2 + lam)) ** 2)) - target

    lo, hi = math.log(1e-30), math.log(1e2)
    if misfit(lo) >= 0:
        return math.exp(lo)
    if misfit(hi) <= 0:
        return math.exp(hi)
    return math.exp(optimize.brentq(misfit, lo, hi, xtol=1e-3))


def deconvolve_with_diagnostics(
    h: PhaseSpaceGrid, k: SmearKernel2D, policy: Optional[DeconvolutionPolicy] = None
) -> Tuple[PhaseSpaceGrid, DeconvolutionReport]:
    """
    Undo the kernel convolution in the frequency domain.

    Args:
        h: Smeared density
        k: Kernel that produced h
        policy: Division strategy (default thresholded at 1e-6 relative)

    Returns:
        (estimate of the unsmeared density, condition report carrying the frequency response)

    Raises:
        ResolutionError: If the grid does not resolve the kernel
    """
    policy = policy or DeconvolutionPolicy.for_synthetic()
    if k.kind is Kernel2DKind.DIRAC:
        identity = FrequencyResponse.identity(h.spec.shape, policy.noise_level or 0.0)
        return h, DeconvolutionReport(policy.mode.value, policy.threshold, 0.0, 1.0, 0.0, identity)
    check_resolution(h.spec, k)

    frequency = to_frequency(h)
    u, v = frequency.mesh()
    divisor = k.characteristic(u, v)
    h_hat = frequency.values
    lam = 0.0
    noise = policy.noise_level or 0.0

    if policy.mode is DeconvolutionMode.TIKHONOV:
        if policy.regularization is not None:
            lam = policy.regularization
        else:
            noise = policy.noise_level if policy.noise_level is not None else _outer_band_noise(frequency)
            lam = _discrepancy_lambda(h_hat, divisor, noise)
            logger.info(f"Discrepancy principle selected lambda={lam:.3e} for noise {noise:.3e}")
        gain = divisor / (divisor**2 + lam) if lam > 0 else 1 / divisor
        kept = np.ones(divisor.shape, dtype=bool)
        amplification = float(np.max(gain))
    else:
        cutoff = EXACT_DIVISION_FLOOR if policy.mode is DeconvolutionMode.EXACT else policy.threshold
        kept = divisor >= cutoff * divisor.max()
        gain = np.where(kept, 1.0 / np.where(kept, divisor, 1.0), 0.0)
        amplification = float(1.0 / divisor[kept].min())

    if amplification > AMPLIFICATION_WARNING:
        warnings.warn(
            f"Deconvolution amplifies noise by up to {amplification:.2e}",
            NoiseAmplificationWarning,
            stacklevel=2,
        )
    report = DeconvolutionReport(
        mode=policy.mode.value,
        threshold=policy.threshold,
        regularization=lam,
        amplification=amplification,
        excluded_fraction=float(1.0 - kept.mean()),
        response=FrequencyResponse(gain, gain * divisor, noise),
    )
    logger.debug(f"Deconvolution report: {report}")
    return from_frequency(frequency.with_values(h_hat * gain)), report


def deconvolve(
    h: PhaseSpaceGrid, k: SmearKernel2D, policy: Optional[DeconvolutionPolicy] = None
) -> PhaseSpaceGrid:
    return deconvolve_with_diagnostics(h, k, policy)[0]


def _weyl_alpha(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    # W_{p,-q} = D((p - iq)/sqrt2)
    return (np.asarray(p, dtype=float) - 1j * np.asarray(q, dtype=float)) / SQRT2


def weyl_transform_of_state(rho: FockDensityMatrix, q: Any, p: Any) -> Any:
    """
    tr[rho W_{p,-q}] at frequency (q, p).

    Raises:
        TruncationInsufficient: If a displacement exceeds the representable range
    """
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    alpha = _weyl_alpha(q.ravel(), p.ravel())
    chunks = [alpha[i : i + WEYL_CHUNK] for i in range(0, len(alpha), WEYL_CHUNK)]
    values = parallel_map(
        lambda chunk: np.einsum("nm,bmn->b", rho.entries, displacement_elements(chunk, rho.budget.dim)),
        chunks,
    )
    result = np.concatenate(values) if values else np.zeros(0, dtype=complex)
    return result.reshape(q.shape) if q.shape else complex(result[0])


@dataclass(frozen=True)
class ReconstructionReport:
    """Diagnostics of a reconstruction; fidelity is present only when a ground truth was given."""

    trace_before: float
    min_eigenvalue_before: float
    projection_residual: float
    used_frequencies: int
    excluded_frequencies: int
    fidelity: Optional[float] = None
    method: str = ReconstructionMethod.QUADRATURE.value

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _project_to_states(entries: np.ndarray) -> Tuple[np.ndarray, float, float]:
    hermitian = (entries + entries.conj().T) / 2
    values, vectors = linalg.eigh(hermitian)
    clipped = np.clip(values, 0.0, None)
    if clipped.sum() <= 0:
        raise ReconstructionError("Reconstructed operator has no positive spectrum")
    projected = (vectors * (clipped / clipped.sum())) @ vectors.conj().T
    residual = float(np.linalg.norm(projected - hermitian))
    return projected, residual, float(values[0])


def _chunks(size: int) -> List[np.ndarray]:
    return [np.arange(i, min(i + WEYL_CHUNK, size)) for i in range(0, size, WEYL_CHUNK)]


def _inverse_weyl_quadrature(weyl: np.ndarray, alpha: np.ndarray, cell: float, dim: int) -> np.ndarray:
    """Riemann sum (1/2pi) sum_k tr[rho W_k] W_k* dA against displacement matrices."""
    weights = weyl * cell / (2 * math.pi)

    def partial_sum(index: np.ndarray) -> np.ndarray:
        displacements = displacement_elements(alpha[index], dim)
        return np.einsum("b,bnm->mn", weights[index], displacements.conj())

    return sum(parallel_map(partial_sum, _chunks(len(alpha))))


def _least_squares_fit(data: np.ndarray, coefficient: np.ndarray, alpha: np.ndarray, dim: int) -> np.ndarray:
    """
    Operator X on the truncated space minimizing sum_k |data_k - coefficient_k tr[X W_k]|^2.

    Singular directions below LSQ_RCOND of the largest are dropped, so operators
    the frequency data cannot resolve come out as zero instead of noise.
    """

    def design_rows(index: np.ndarray) -> np.ndarray:
        displacements = displacement_elements(alpha[index], dim)
        return coefficient[index, None] * displacements.reshape(len(index), dim * dim)

    design = np.concatenate(parallel_map(design_rows, _chunks(len(alpha))))
    solution, _, rank, _ = linalg.lstsq(design, data, cond=LSQ_RCOND)
    logger.debug(f"Least squares fit of {dim * dim} entries from {len(data)} frequencies, rank {rank}")
    # tr[X D] = sum_mn D_mn X_nm, so the solution holds X transposed
    return solution.reshape(dim, dim).T


def reconstruct_state_with_report(
    g: PhaseSpaceGrid,
    T: FockDensityMatrix,
    budget: TruncationBudget,
    truth: Optional[FockDensityMatrix] = None,
    response: Optional[FrequencyResponse] = None,
    method: ReconstructionMethod = ReconstructionMethod.QUADRATURE,
) -> Tuple[FockDensityMatrix, ReconstructionReport]:
    """
    Invert a covariant phase space density back to a density matrix.

    The Weyl transform of the state is 2 pi g^ / conj(tr[T W]) on frequencies
    where the divisor is at least DIVISOR_TOL. QUADRATURE inverts it by a
    Riemann sum against displacement matrices on the same frequency grid.
    LEAST_SQUARES fits a truncated operator to the smeared data those
    frequencies carry, weighting each by its noise level, which is what
    sampled data needs.

    With a deconvolution response only the frequencies the deconvolution kept
    are used, and g^ counts as support only where it exceeds its noise floor.

    Args:
        g: Density of the covariant observable generated by T
        T: Generating operator of that observable
        budget: Truncation of the reconstructed state
        truth: Optional ground truth for the fidelity report
        response: Frequency response of the deconvolution that produced g
        method: Inversion of the Weyl transform

    Returns:
        (PSD unit-trace estimate, ReconstructionReport)

    Raises:
        DivisorThresholdError: If the signal has support where the divisor vanishes
        ReconstructionError: If the estimate has zero trace
    """
    method = ReconstructionMethod(method)
    frequency = to_frequency(g)
    u, v = frequency.mesh()
    signal = 2 * math.pi * frequency.values

    if response is None:
        support = np.ones(u.shape, dtype=bool)
        tolerance: Any = SUPPORT_TOL
    else:
        if response.gain.shape != u.shape:
            raise DomainError(f"Frequency response of shape {response.gain.shape} does not match grid {u.shape}")
        support = response.support
        tolerance = np.maximum(SUPPORT_TOL, NOISE_SIGMAS * response.noise_floor())

    reachable = support & ((u**2 + v**2) / 2 <= DISPLACEMENT_ENERGY_LIMIT)
    divisor = np.zeros(u.shape, dtype=complex)
    divisor[reachable] = np.conj(weyl_transform_of_state(T, u[reachable], v[reachable]))
    used = support & (np.abs(divisor) >= DIVISOR_TOL)
    leaking = support & ~used & (np.abs(signal) > tolerance)
    if np.any(leaking):
        worst = float(np.max(np.abs(signal[leaking])))
        raise DivisorThresholdError(
            f"Generating operator transform falls below {DIVISOR_TOL} on {int(leaking.sum())} "
            f"frequencies where the density transform reaches {worst:.2e}"
        )
    if not np.any(used):
        raise DivisorThresholdError("Generating operator transform vanishes on the whole frequency grid")

    alpha = _weyl_alpha(u[used], v[used])
    if method is ReconstructionMethod.QUADRATURE:
        cell = frequency.du * frequency.dv
        estimate = _inverse_weyl_quadrature(signal[used] / divisor[used], alpha, cell, budget.dim)
    elif response is None:
        estimate = _least_squares_fit(signal[used], divisor[used], alpha, budget.dim)
    else:
        # dividing by the gain restores the smeared data, whose noise is white
        gain = response.gain[used]
        kernel = response.passband[used] / gain
        estimate = _least_squares_fit(signal[used] / gain, kernel * divisor[used], alpha, budget.dim)

    trace_before = float(np.real(np.trace(estimate)))
    if not abs(trace_before) > SUPPORT_TOL:
        raise ReconstructionError(f"Reconstructed operator has trace {trace_before:.3e}")

    projected, residual, min_eigenvalue = _project_to_states(estimate)
    rho = FockDensityMatrix(projected, budget)
    report = ReconstructionReport(
        trace_before=trace_before,
        min_eigenvalue_before=min_eigenvalue,
        projection_residual=residual,
        used_frequencies=int(used.sum()),
        excluded_frequencies=int((~used).sum()),
        fidelity=fidelity(truth, rho) if truth is not None else None,
        method=method.value,
    )
    logger.info(
        f"Reconstructed state by {method.value} from {report.used_frequencies} frequencies, "
        f"projection residual {residual:.3e}"
    )
    return rho, report


def reconstruct_state(
    g: PhaseSpaceGrid,
    T: FockDensityMatrix,
    budget: TruncationBudget,
    response: Optional[FrequencyResponse] = None,
    method: ReconstructionMethod = ReconstructionMethod.QUADRATURE,
) -> FockDensityMatrix:
    return reconstruct_state_with_report(g, T, budget, response=response, method=method)[0]


def sample_phase_space(grid: PhaseSpaceGrid, shots: int, seed: int) -> np.ndarray:
    """
    Draw (q, p) samples from a gridded density: a cell by its mass, then a uniform point inside it.

    Returns:
        Array of shape (shots, 2)
    """
    if shots < 1:
        raise DomainError(f"shots must be at least 1, got {shots}")
    weights = np.clip(grid.values, 0.0, None).ravel()
    if weights.sum() <= 0:
        raise DomainError("Cannot sample from a density without positive mass")
    rng = np.random.default_rng(seed)
    cells = rng.choice(weights.size, size=shots, p=weights / weights.sum())
    i, j = np.unravel_index(cells, grid.spec.shape)
    spec = grid.spec
    q = spec.q_axis[i] + (rng.random(shots) - 0.5) * spec.dq
    p = spec.p_axis[j] + (rng.random(shots) - 0.5) * spec.dp
    return np.stack([q, p], axis=1)


def histogram_density(points: np.ndarray, spec: GridSpec) -> PhaseSpaceGrid:
    """Bin samples into cells centered on the grid points and normalize by the sample count."""
    points = np.asarray(points, dtype=float)
    q_edges = np.append(spec.q_axis - spec.dq / 2, spec.q_axis[-1] + spec.dq / 2)
    p_edges = np.append(spec.p_axis - spec.dp / 2, spec.p_axis[-1] + spec.dp / 2)
    counts, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=[q_edges, p_edges])
    outside = len(points) - int(counts.sum())
    if outside:
        logger.warning(f"{outside} of {len(points)} samples fall outside the grid")
    return PhaseSpaceGrid(spec, counts / (len(points) * spec.dq * spec.dp))


def smeared_l1_distance(
    rho1: FockDensityMatrix,
    rho2: FockDensityMatrix,
    S: FockDensityMatrix,
    k: SmearKernel2D,
    spec: GridSpec,
) -> float:
    """L1 distance between the smeared densities of two states."""
    return limit_density(rho1, S, k, spec).l1_distance(limit_density(rho2, S, k, spec))
