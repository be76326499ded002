"""Truncated Fock space states, overlaps, displacement operators and rotations."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, special, stats

from src.errors import DomainError, TruncationInsufficient, UnsupportedState


logger = logging.getLogger(__name__)

PSD_TOL = 1e-10
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10

# Above this |alpha|^2 the closed-form displacement elements lose all precision
DISPLACEMENT_ENERGY_LIMIT = 500.0

SQRT2 = math.sqrt(2.0)

# A point z in the complex plane labelling the coherent state |z>, z = (q + ip) / sqrt(2)
ComplexAmplitude = complex


def amplitude_from_phase_space(q: float, p: float) -> complex:
    """Return z = (q + ip)/sqrt(2) for a phase space point (q, p)."""
    return complex(q, p) / SQRT2


def phase_space_from_amplitude(z: complex) -> Tuple[float, float]:
    """Return the phase space point (q, p) labelled by the amplitude z."""
    z = complex(z)
    return SQRT2 * z.real, SQRT2 * z.imag


@dataclass(frozen=True)
class TruncationBudget:
    """
    Size of the retained number basis and the admissible truncated mass.

    Attributes:
        cutoff: Largest photon number N kept (dimension N + 1)
        tail_tol: Probability mass allowed to fall outside the retained basis
    """

    cutoff: int = 40
    tail_tol: float = 1e-6

    def __post_init__(self) -> None:
        if isinstance(self.cutoff, bool) or int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise DomainError(f"cutoff must be a non-negative integer, got {self.cutoff}")
        if not 0.0 < self.tail_tol < 1.0:
            raise DomainError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def dim(self) -> int:
        """Dimension of the truncated space."""
        return self.cutoff + 1

    def with_cutoff(self, cutoff: int) -> "TruncationBudget":
        """Return a copy with a different cutoff."""
        return replace(self, cutoff=cutoff)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Number basis coefficients of a (truncated) state vector."""

    coefficients: np.ndarray

    @property
    def cutoff(self) -> int:
        return len(self.coefficients) - 1

    @property
    def captured_mass(self) -> float:
        return float(np.vdot(self.coefficients, self.coefficients).real)

    @property
    def leaked_mass(self) -> float:
        return max(0.0, 1.0 - self.captured_mass)


def _coherent_coefficients(z: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    coefficients = np.zeros(dim, dtype=complex)
    if z == 0:
        coefficients[0] = 1.0
        return coefficients
    # log-Gamma keeps sqrt(n!) finite far beyond n = 170
    log_magnitude = -abs(z) ** 2 / 2 + n * math.log(abs(z)) - 0.5 * special.gammaln(n + 1)
    return np.exp(log_magnitude + 1j * n * np.angle(z))


def coherent_fock_coefficients(z: ComplexAmplitude, budget: TruncationBudget) -> FockVector:
    """
    Expand the coherent state |z> in the truncated number basis.

    Args:
        z: Coherent amplitude
        budget: Truncation budget

    Returns:
        FockVector with c_n = exp(-|z|^2/2) z^n / sqrt(n!)

    Raises:
        TruncationInsufficient: If the Poisson tail beyond the cutoff exceeds tail_tol
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"Coherent amplitude must be finite, got {z}")

    tail = float(stats.poisson.sf(budget.cutoff, abs(z) ** 2)) if z != 0 else 0.0
    if tail > budget.tail_tol:
        raise TruncationInsufficient(
            f"Cutoff {budget.cutoff} leaks {tail:.3e} of |{z}> (tolerance {budget.tail_tol:.1e})",
            leaked_mass=tail,
            tolerance=budget.tail_tol,
        )
    return FockVector(_coherent_coefficients(z, budget.dim))


def coherent_overlap(a: Any, b: Any) -> Any:
    """
    Exact overlap <a|b> of two coherent states.

    Works elementwise on arrays of amplitudes.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.exp(-np.abs(a) ** 2 / 2 - np.abs(b) ** 2 / 2 + np.conj(a) * b)


def displacement_elements(alpha: Any, dim: int) -> np.ndarray:
    """
    Closed-form number basis elements <m|D(alpha)|n> for a batch of amplitudes.

    Uses <m|D|n> = sqrt(n!/m!) alpha^(m-n) exp(-|alpha|^2/2) L_n^(m-n)(|alpha|^2) for m >= n
    and the (-conj(alpha)) mirror for m < n.

    Args:
        alpha: Scalar or 1-D array of displacement amplitudes
        dim: Dimension of the truncated space

    Returns:
        Array of shape (len(alpha), dim, dim)
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex)).reshape(-1)
    energy = np.abs(alpha) ** 2
    if np.any(energy > DISPLACEMENT_ENERGY_LIMIT):
        raise TruncationInsufficient(
            f"Displacement energy {energy.max():.1f} exceeds {DISPLACEMENT_ENERGY_LIMIT}",
        )

    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    low = np.minimum(m, n)
    order = np.abs(m - n)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs = np.log(np.abs(alpha))[:, None, None]
        power_term = np.where(order[None] == 0, 0.0, order[None] * log_abs)
    log_prefactor = (
        0.5 * (special.gammaln(low + 1) - special.gammaln(low + order + 1))[None]
        + power_term
        - energy[:, None, None] / 2
    )

    laguerre = special.eval_genlaguerre(low[None], order[None], energy[:, None, None])
    angle = np.angle(alpha)[:, None, None]
    phase = np.where(
        (m >= n)[None],
        np.exp(1j * order[None] * angle),
        (-1.0) ** order[None] * np.exp(-1j * order[None] * angle),
    )
    return np.exp(log_prefactor) * laguerre * phase


def displacement_matrix(q: float, p: float, budget: TruncationBudget) -> np.ndarray:
    """
    Truncated number basis matrix of the Weyl operator W_qp = e^{iqp/2} e^{-iqP} e^{ipQ}.

    With this ordering W_qp equals D((q + ip)/sqrt(2)) exactly, so <0|W_qp|0> = e^{-(q^2+p^2)/4}.

    Args:
        q: Position shift
        p: Momentum shift
        budget: Truncation budget

    Returns:
        Complex (cutoff+1) x (cutoff+1) matrix
    """
    return displacement_elements(amplitude_from_phase_space(q, p), budget.dim)[0]


def displacement_matrix_exponential(q: float, p: float, budget: TruncationBudget) -> np.ndarray:
    """Truncated W_qp from the matrix exponential of the truncated generator."""
    alpha = amplitude_from_phase_space(q, p)
    annihilation = np.diag(np.sqrt(np.arange(1, budget.dim)), k=1).astype(complex)
    generator = alpha * annihilation.conj().T - np.conj(alpha) * annihilation
    return linalg.expm(generator)


def column_leakage(matrix: np.ndarray) -> np.ndarray:
    """Per-column mass of a truncated unitary that falls outside the retained block."""
    return np.clip(1.0 - np.sum(np.abs(matrix) ** 2, axis=0), 0.0, None)


def coherent_position_density(z: ComplexAmplitude, x: Any) -> Any:
    """Position density |psi_z(x)|^2."""
    q, _ = phase_space_from_amplitude(z)
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - q) ** 2)) / math.sqrt(math.pi)


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """
    Density operator on the truncated number basis.

    Represents signal states, parameter fields and generating operators alike.
    """

    entries: np.ndarray
    budget: TruncationBudget

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.budget.dim, self.budget.dim):
            raise DomainError(
                f"Density matrix shape {entries.shape} does not match cutoff {self.budget.cutoff}"
            )
        if not np.all(np.isfinite(entries)):
            raise DomainError("Density matrix has non-finite entries")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_vector(cls, vector: Union[FockVector, np.ndarray], budget: TruncationBudget) -> "FockDensityMatrix":
        """Projector onto a state vector."""
        coefficients = vector.coefficients if isinstance(vector, FockVector) else np.asarray(vector)
        coefficients = np.asarray(coefficients, dtype=complex)
        return cls(np.outer(coefficients, coefficients.conj()), budget)

    @classmethod
    def from_diagonal(cls, weights: Sequence[float], budget: TruncationBudget) -> "FockDensityMatrix":
        """Diagonal density matrix; missing trailing weights are zero."""
        weights = np.asarray(weights, dtype=float)
        if len(weights) > budget.dim:
            raise TruncationInsufficient(
                f"Diagonal of length {len(weights)} does not fit cutoff {budget.cutoff}",
                leaked_mass=float(weights[budget.dim:].sum()),
                tolerance=budget.tail_tol,
            )
        diagonal = np.zeros(budget.dim)
        diagonal[: len(weights)] = weights
        return cls(np.diag(diagonal).astype(complex), budget)

    @classmethod
    def number_state(cls, n: int, budget: TruncationBudget) -> "FockDensityMatrix":
        if n < 0 or n > budget.cutoff:
            raise DomainError(f"Number state |{n}> outside cutoff {budget.cutoff}")
        weights = np.zeros(n + 1)
        weights[n] = 1.0
        return cls.from_diagonal(weights, budget)

    @classmethod
    def vacuum(cls, budget: TruncationBudget) -> "FockDensityMatrix":
        return cls.number_state(0, budget)

    @classmethod
    def coherent(cls, z: ComplexAmplitude, budget: TruncationBudget) -> "FockDensityMatrix":
        return cls.from_vector(coherent_fock_coefficients(z, budget), budget)

    @classmethod
    def mixture(cls, components: Iterable[Tuple[float, "FockDensityMatrix"]]) -> "FockDensityMatrix":
        """
        Convex combination sum_k w_k rho_k.

        Args:
            components: Pairs (weight, density) sharing one truncation budget

        Returns:
            The mixed density matrix

        Raises:
            DomainError: If weights are negative, do not sum to 1, or budgets differ
        """
        components = list(components)
        if not components:
            raise DomainError("Mixture needs at least one component")
        weights = np.array([w for w, _ in components], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError(f"Mixture weights must be non-negative and sum to 1, got {weights}")
        budget = components[0][1].budget
        if any(rho.budget.dim != budget.dim for _, rho in components):
            raise DomainError("Mixture components must share one cutoff")
        entries = sum(w * rho.entries for w, rho in components)
        return cls(entries, budget)

    @property
    def cutoff(self) -> int:
        return self.budget.cutoff

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.budget.dim), self.diagonal))

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the Hermitian part, ascending."""
        hermitian = (self.entries + self.entries.conj().T) / 2
        return linalg.eigvalsh(hermitian)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready form: row-major complex pairs plus truncation metadata."""
        return {
            "cutoff": self.budget.cutoff,
            "tail_tol": self.budget.tail_tol,
            "entries": [[[float(v.real), float(v.imag)] for v in row] for row in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FockDensityMatrix":
        budget = TruncationBudget(cutoff=int(data["cutoff"]), tail_tol=float(data["tail_tol"]))
        pairs = np.asarray(data["entries"], dtype=float)
        return cls(pairs[..., 0] + 1j * pairs[..., 1], budget)


def rotate_state(rho: FockDensityMatrix, theta: float) -> FockDensityMatrix:
    """
    Conjugate rho by the phase rotation e^{i theta N}.

    Args:
        rho: Density matrix
        theta: Rotation angle, reduced modulo 2 pi

    Returns:
        Density matrix with entries e^{i theta (m - n)} rho_mn
    """
    if not math.isfinite(theta):
        raise DomainError(f"Rotation angle must be finite, got {theta}")
    phases = np.exp(1j * math.fmod(theta, 2 * math.pi) * np.arange(rho.budget.dim))
    return FockDensityMatrix(rho.entries * np.outer(phases, phases.conj()), rho.budget)


@dataclass(frozen=True)
class DensityReport:
    """Diagnostic report of validate_density."""

    hermiticity_defect: float
    min_eigenvalue: float
    trace: float
    trace_defect: float
    passed: bool


def validate_density(rho: FockDensityMatrix) -> DensityReport:
    """
    Check Hermiticity, positivity and normalization of a density matrix.

    The trace tolerance is the larger of TRACE_TOL and the budget's tail_tol,
    since truncated states legitimately miss up to tail_tol of their mass.
    """
    hermiticity_defect = float(np.max(np.abs(rho.entries - rho.entries.conj().T)))
    min_eigenvalue = float(rho.eigenvalues()[0])
    trace = rho.trace()
    trace_defect = abs(trace - 1.0)
    trace_tolerance = max(TRACE_TOL, rho.budget.tail_tol)
    passed = (
        hermiticity_defect <= HERMITICITY_TOL
        and min_eigenvalue >= -PSD_TOL
        and trace_defect <= trace_tolerance
    )
    if not passed:
        logger.debug(
            f"Density check failed: hermiticity {hermiticity_defect:.2e}, "
            f"min eigenvalue {min_eigenvalue:.2e}, trace defect {trace_defect:.2e}"
        )
    return DensityReport(hermiticity_defect, min_eigenvalue, trace, trace_defect, passed)


def fidelity(rho: FockDensityMatrix, sigma: FockDensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.budget.dim != sigma.budget.dim:
        raise DomainError("Fidelity needs density matrices of equal cutoff")
    values, vectors = linalg.eigh((rho.entries + rho.entries.conj().T) / 2)
    root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    inner = root @ sigma.entries @ root
    inner_values = linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.sum(np.sqrt(np.clip(inner_values, 0.0, None))) ** 2)


@dataclass(frozen=True)
class CoherentSuperposition:
    """
    Finite linear combination sum_i c_i |alpha_i> of coherent states.

    Coefficients need not be normalized; consumers divide by norm_squared().
    """

    terms: Tuple[Tuple[complex, complex], ...]

    def __post_init__(self) -> None:
        terms = tuple((complex(c), complex(a)) for c, a in self.terms)
        if not terms:
            raise DomainError("Coherent superposition needs at least one term")
        for c, a in terms:
            if not all(math.isfinite(v) for v in (c.real, c.imag, a.real, a.imag)):
                raise DomainError(f"Non-finite superposition term ({c}, {a})")
        object.__setattr__(self, "terms", terms)
        if self.norm_squared() <= 0.0:
            raise DomainError("Coherent superposition has zero norm")

    @classmethod
    def coherent(cls, alpha: ComplexAmplitude) -> "CoherentSuperposition":
        return cls(((1.0, alpha),))

    @classmethod
    def vacuum(cls) -> "CoherentSuperposition":
        return cls.coherent(0.0)

    @classmethod
    def cat(cls, alpha: ComplexAmplitude, parity: int = 1) -> "CoherentSuperposition":
        """Cat state |alpha> + parity |-alpha>, normalized."""
        return cls(((1.0, alpha), (float(parity), -complex(alpha)))).normalized()

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=complex)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.terms], dtype=complex)

    @property
    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.amplitudes)))

    def gram_matrix(self) -> np.ndarray:
        """Matrix of overlaps <alpha_i|alpha_j>."""
        a = self.amplitudes
        return coherent_overlap(a[:, None], a[None, :])

    def norm_squared(self) -> float:
        c = self.coefficients
        return float(np.real(c.conj() @ self.gram_matrix() @ c))

    def normalized(self) -> "CoherentSuperposition":
        scale = 1.0 / math.sqrt(self.norm_squared())
        return CoherentSuperposition(tuple((c * scale, a) for c, a in self.terms))

    def rotated(self, theta: float) -> "CoherentSuperposition":
        """Apply e^{i theta N}, which maps |alpha> to |e^{i theta} alpha>."""
        phase = complex(math.cos(theta), math.sin(theta))
        return CoherentSuperposition(tuple((c, a * phase) for c, a in self.terms))

    def conjugated(self) -> "CoherentSuperposition":
        """Image under the position-representation complex conjugation C."""
        return CoherentSuperposition(tuple((c.conjugate(), a.conjugate()) for c, a in self.terms))

    def bilinear_weights(self) -> np.ndarray:
        """Weights conj(c_i) c_j / <psi|psi> for pairwise kernel sums."""
        c = self.coefficients
        return np.outer(c.conj(), c) / self.norm_squared()

    def to_fock(self, budget: TruncationBudget) -> FockVector:
        """
        Number basis expansion of the normalized superposition.

        Raises:
            TruncationInsufficient: If any term leaks more than tail_tol
        """
        state = self.normalized()
        coefficients = sum(
            c * coherent_fock_coefficients(a, budget).coefficients for c, a in state.terms
        )
        return FockVector(np.asarray(coefficients, dtype=complex))

    def to_density(self, budget: TruncationBudget) -> FockDensityMatrix:
        return FockDensityMatrix.from_vector(self.to_fock(budget), budget)


@dataclass(frozen=True)
class CoherentMixture:
    """Finite convex combination of coherent superpositions."""

    components: Tuple[Tuple[float, CoherentSuperposition], ...]

    def __post_init__(self) -> None:
        components = tuple((float(w), s) for w, s in self.components)
        if not components:
            raise DomainError("Coherent mixture needs at least one component")
        if any(w < 0 for w, _ in components) or sum(w for w, _ in components) <= 0:
            raise DomainError("Mixture weights must be non-negative with positive sum")
        object.__setattr__(self, "components", components)

    @classmethod
    def pure(cls, state: CoherentSuperposition) -> "CoherentMixture":
        return cls(((1.0, state),))

    @property
    def weights(self) -> np.ndarray:
        w = np.array([w for w, _ in self.components])
        return w / w.sum()

    @property
    def max_amplitude(self) -> float:
        return max(s.max_amplitude for _, s in self.components)

    def to_density(self, budget: TruncationBudget) -> FockDensityMatrix:
        return FockDensityMatrix.mixture(
            (w, s.to_density(budget)) for w, (_, s) in zip(self.weights, self.components)
        )


def as_coherent_mixture(state: Any) -> CoherentMixture:
    """
    Normalize a state argument to a CoherentMixture.

    Raises:
        UnsupportedState: If the state is not a finite coherent mixture
    """
    if isinstance(state, CoherentMixture):
        return state
    if isinstance(state, CoherentSuperposition):
        return CoherentMixture.pure(state)
    raise UnsupportedState(
        f"{type(state).__name__} is not expressible as a finite mixture of coherent superpositions"
    )
