"""Configuration management for eightport-homodyne experiments."""

import argparse
import logging
import math
import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from src.errors import ConfigError, DomainError
from src.fock import CoherentMixture, CoherentSuperposition, FockDensityMatrix, TruncationBudget
from src.homodyne import ConvergenceSchedule, LocalOscillator
from src.phasespace import GridSpec
from src.serialization import write_json
from src.tomography import DeconvolutionMode, DeconvolutionPolicy, ReconstructionMethod, histogram_noise_level


logger = logging.getLogger(__name__)

STATE_KINDS = ("vacuum", "coherent", "cat", "superposition", "fock")
COMMANDS = ("povm", "homodyne", "converge", "eightport", "genop", "deconvolve", "reconstruct")


def parse_complex(value: Any) -> complex:
    """Accept a number, a [re, im] pair or a string such as "1+0.5j"."""
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(value)
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        return complex(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Cannot read complex amplitude from {value!r}")


@dataclass
class StateSpec:
    """
    A signal or parameter field state.

    kind "vacuum", "coherent" (amplitude), "cat" (amplitude, parity),
    "superposition" (terms of [coefficient, amplitude]) or "fock" (diagonal weights).
    """

    kind: str = "vacuum"
    amplitude: complex = 0j
    parity: int = 1
    terms: List[Tuple[complex, complex]] = field(default_factory=list)
    diagonal: List[float] = field(default_factory=list)

    def to_superposition(self) -> CoherentSuperposition:
        """
        Raises:
            ConfigError: For number-diagonal states other than the vacuum
        """
        if self.kind == "vacuum":
            return CoherentSuperposition.vacuum()
        if self.kind == "coherent":
            return CoherentSuperposition.coherent(self.amplitude)
        if self.kind == "cat":
            return CoherentSuperposition.cat(self.amplitude, self.parity)
        if self.kind == "superposition":
            return CoherentSuperposition(tuple(self.terms)).normalized()
        diagonal = np.asarray(self.diagonal, dtype=float)
        if len(diagonal) and diagonal[0] == 1.0 and not np.any(diagonal[1:]):
            return CoherentSuperposition.vacuum()
        raise ConfigError(f"State kind {self.kind!r} has no coherent-superposition form")

    def to_mixture(self) -> CoherentMixture:
        return CoherentMixture.pure(self.to_superposition())

    def to_density(self, budget: TruncationBudget) -> FockDensityMatrix:
        if self.kind == "fock":
            return FockDensityMatrix.from_diagonal(self.diagonal, budget)
        return self.to_superposition().to_density(budget)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind in ("coherent", "cat"):
            data["amplitude"] = [self.amplitude.real, self.amplitude.imag]
        if self.kind == "cat":
            data["parity"] = self.parity
        if self.kind == "superposition":
            data["terms"] = [[[c.real, c.imag], [a.real, a.imag]] for c, a in self.terms]
        if self.kind == "fock":
            data["diagonal"] = list(self.diagonal)
        return data


@dataclass
class LocalOscillatorSpec:
    """Local oscillator amplitude r, phase theta and the eight-port phase shift phi."""

    r: float = 10.0
    theta: float = 0.0
    phase_shift: float = math.pi / 2

    def to_local_oscillator(self) -> LocalOscillator:
        return LocalOscillator(self.r, self.theta)


@dataclass
class ScheduleSpec:
    """Amplitude schedule and characteristic function grid of a convergence study."""

    amplitudes: List[float] = field(default_factory=lambda: [25.0, 50.0, 100.0, 200.0])
    t_min: float = -5.0
    t_max: float = 5.0
    t_points: int = 101

    def to_schedule(self) -> ConvergenceSchedule:
        return ConvergenceSchedule(
            tuple(self.amplitudes), tuple(np.linspace(self.t_min, self.t_max, self.t_points).tolist())
        )


@dataclass
class PolicySpec:
    """Deconvolution policy; regularization None selects it by the discrepancy principle."""

    mode: Optional[str] = None
    threshold: float = 1e-6
    regularization: Optional[float] = None
    noise_level: Optional[float] = None

    def to_policy(self, shots: int = 0) -> DeconvolutionPolicy:
        """
        Build the deconvolution policy for data from `shots` samples (0 for exact data).

        Without an explicit mode, sampled data is deconvolved by Tikhonov and exact
        data by thresholded division; the noise level defaults to that of the histogram.
        """
        if self.mode is None:
            mode = DeconvolutionMode.TIKHONOV if shots > 0 else DeconvolutionMode.THRESHOLDED
        else:
            try:
                mode = DeconvolutionMode(self.mode)
            except ValueError:
                raise ConfigError(f"Unknown deconvolution mode {self.mode!r}")
        noise_level = self.noise_level
        if noise_level is None and shots > 0:
            noise_level = histogram_noise_level(shots)
        return DeconvolutionPolicy(mode, self.threshold, self.regularization, noise_level)


@dataclass
class ExperimentConfig:
    """Complete configuration of one command run."""

    signal: StateSpec = field(default_factory=StateSpec)
    parameter_field: StateSpec = field(default_factory=StateSpec)
    efficiencies: List[float] = field(default_factory=lambda: [1.0, 1.0, 1.0, 1.0])
    lo: LocalOscillatorSpec = field(default_factory=LocalOscillatorSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    policy: PolicySpec = field(default_factory=PolicySpec)
    reconstruction: Optional[str] = None
    cutoff: int = 40
    tail_tol: float = 1e-6
    n_max: Optional[int] = None
    quadrature_nodes: int = 41
    interval: Optional[List[float]] = None
    shots: int = 0
    seed: Optional[int] = None
    min_fidelity: float = 0.99
    input_grid: Optional[str] = None
    generating_operator: Optional[str] = None
    output_dir: str = "results"
    binary: bool = False
    plot_data: bool = False

    @property
    def budget(self) -> TruncationBudget:
        return TruncationBudget(self.cutoff, self.tail_tol)

    def reconstruction_method(self) -> ReconstructionMethod:
        """Configured Weyl inversion; sampled data defaults to the noise-weighted least squares fit."""
        if self.reconstruction is None:
            return ReconstructionMethod.LEAST_SQUARES if self.shots > 0 else ReconstructionMethod.QUADRATURE
        try:
            return ReconstructionMethod(self.reconstruction)
        except ValueError:
            raise ConfigError(f"Unknown reconstruction method {self.reconstruction!r}")

    def detector_efficiency(self) -> float:
        return self.efficiencies[0]

    def homodyne_efficiencies(self) -> Tuple[float, float]:
        """(eps1, eps2) of a balanced detector; four values select the X arm (eps1, eps3)."""
        e = self.efficiencies
        if len(e) == 1:
            return e[0], e[0]
        if len(e) == 2:
            return e[0], e[1]
        return e[0], e[2]

    def eightport_efficiencies(self) -> Tuple[float, float, float, float]:
        e = self.efficiencies
        if len(e) == 1:
            return e[0], e[0], e[0], e[0]
        if len(e) == 4:
            return e[0], e[1], e[2], e[3]
        raise ConfigError(f"Eight-port runs need 1 or 4 efficiencies, got {len(e)}")


def _check_keys(section: str, data: Dict[str, Any], allowed: List[str]) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"Section {section!r} must be a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown keys in {section!r}: {', '.join(unknown)}")


def _field_names(cls: Any) -> List[str]:
    return [f.name for f in fields(cls)]


class ConfigManager:
    """Manages configuration loading, validation, and merging."""

    DEFAULT_CONFIG_PATH = "experiment.json"

    @staticmethod
    def get_default_config() -> ExperimentConfig:
        """Generate default configuration with standard values."""
        return ExperimentConfig()

    @staticmethod
    def load_config(file_path: str = DEFAULT_CONFIG_PATH) -> ExperimentConfig:
        """
        Load configuration from a JSON (or YAML) document.

        A missing file yields the default configuration.

        Args:
            file_path: Path to the configuration file

        Returns:
            ExperimentConfig object with loaded configuration

        Raises:
            ConfigError: If the document is malformed or has unknown keys
        """
        if not os.path.exists(file_path):
            logger.info(f"No configuration file at {file_path}, using defaults")
            return ConfigManager.get_default_config()

        try:
            with open(file_path, "r") as f:
                config_data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid JSON in configuration file: {e}")

        if config_data is None:
            config_data = {}
        return ConfigManager._parse_config(config_data)

    @staticmethod
    def _parse_state(section: str, data: Dict[str, Any]) -> StateSpec:
        _check_keys(section, data, _field_names(StateSpec))
        kind = data.get("kind", "vacuum")
        if kind not in STATE_KINDS:
            raise ConfigError(f"Unknown state kind {kind!r} in {section!r}")
        terms = []
        for term in data.get("terms", []):
            if not isinstance(term, (list, tuple)) or len(term) != 2:
                raise ConfigError(f"Superposition terms in {section!r} must be [coefficient, amplitude]")
            terms.append((parse_complex(term[0]), parse_complex(term[1])))
        return StateSpec(
            kind=kind,
            amplitude=parse_complex(data.get("amplitude", 0)),
            parity=int(data.get("parity", 1)),
            terms=terms,
            diagonal=[float(w) for w in data.get("diagonal", [])],
        )

    @staticmethod
    def _parse_config(config_data: dict) -> ExperimentConfig:
        """Parse configuration dictionary into ExperimentConfig object."""
        _check_keys("config", config_data, _field_names(ExperimentConfig))
        config = ConfigManager.get_default_config()

        if "signal" in config_data:
            config.signal = ConfigManager._parse_state("signal", config_data["signal"])
        if "parameter_field" in config_data:
            config.parameter_field = ConfigManager._parse_state("parameter_field", config_data["parameter_field"])

        lo_data = config_data.get("lo", {})
        _check_keys("lo", lo_data, _field_names(LocalOscillatorSpec))
        config.lo = LocalOscillatorSpec(**{k: float(v) for k, v in lo_data.items()})

        schedule_data = config_data.get("schedule", {})
        _check_keys("schedule", schedule_data, _field_names(ScheduleSpec))
        config.schedule = ScheduleSpec(
            amplitudes=[float(r) for r in schedule_data.get("amplitudes", config.schedule.amplitudes)],
            t_min=float(schedule_data.get("t_min", -5.0)),
            t_max=float(schedule_data.get("t_max", 5.0)),
            t_points=int(schedule_data.get("t_points", 101)),
        )

        grid_data = config_data.get("grid", {})
        _check_keys("grid", grid_data, _field_names(GridSpec))
        try:
            config.grid = GridSpec(**grid_data)
        except DomainError as e:
            raise ConfigError(f"Invalid grid: {e}")

        policy_data = config_data.get("policy", {})
        _check_keys("policy", policy_data, _field_names(PolicySpec))
        config.policy = PolicySpec(**policy_data)

        scalars = {
            name: config_data[name]
            for name in _field_names(ExperimentConfig)
            if name in config_data and name not in ("signal", "parameter_field", "lo", "schedule", "grid", "policy")
        }
        for name, value in scalars.items():
            setattr(config, name, value)
        config.efficiencies = [float(e) for e in config.efficiencies]
        return config

    @staticmethod
    def to_dict(config: ExperimentConfig) -> Dict[str, Any]:
        """Plain-data form of a configuration, loadable by _parse_config."""
        return {
            "signal": config.signal.to_dict(),
            "parameter_field": config.parameter_field.to_dict(),
            "efficiencies": list(config.efficiencies),
            "lo": {"r": config.lo.r, "theta": config.lo.theta, "phase_shift": config.lo.phase_shift},
            "schedule": {
                "amplitudes": list(config.schedule.amplitudes),
                "t_min": config.schedule.t_min,
                "t_max": config.schedule.t_max,
                "t_points": config.schedule.t_points,
            },
            "grid": {f.name: getattr(config.grid, f.name) for f in fields(GridSpec)},
            "policy": {
                "mode": config.policy.mode,
                "threshold": config.policy.threshold,
                "regularization": config.policy.regularization,
                "noise_level": config.policy.noise_level,
            },
            "reconstruction": config.reconstruction,
            "cutoff": config.cutoff,
            "tail_tol": config.tail_tol,
            "n_max": config.n_max,
            "quadrature_nodes": config.quadrature_nodes,
            "interval": config.interval,
            "shots": config.shots,
            "seed": config.seed,
            "min_fidelity": config.min_fidelity,
            "input_grid": config.input_grid,
            "generating_operator": config.generating_operator,
            "output_dir": config.output_dir,
            "binary": config.binary,
            "plot_data": config.plot_data,
        }

    @staticmethod
    def _save_config(config: ExperimentConfig, file_path: str) -> None:
        """Save the effective configuration next to the results."""
        write_json(file_path, ConfigManager.to_dict(config))

    @staticmethod
    def validate_config(config: ExperimentConfig) -> bool:
        """
        Validate configuration for correctness.

        Args:
            config: Configuration to validate

        Returns:
            True if configuration is valid

        Raises:
            ConfigError: If configuration is invalid
        """
        if len(config.efficiencies) not in (1, 2, 4):
            raise ConfigError(f"Expected 1, 2 or 4 efficiencies, got {len(config.efficiencies)}")
        for eps in config.efficiencies:
            if not 0.0 < eps <= 1.0:
                raise ConfigError(f"Efficiency must lie in (0, 1], got {eps}")

        if not config.lo.r > 0:
            raise ConfigError(f"Local oscillator amplitude must be positive, got {config.lo.r}")
        if not config.schedule.amplitudes:
            raise ConfigError("Convergence schedule needs at least one amplitude")
        if any(b <= a for a, b in zip(config.schedule.amplitudes, config.schedule.amplitudes[1:])):
            raise ConfigError(f"Schedule amplitudes must increase: {config.schedule.amplitudes}")
        if config.schedule.t_points < 1:
            raise ConfigError("Characteristic function grid needs at least one point")

        if not isinstance(config.cutoff, int) or config.cutoff < 0:
            raise ConfigError(f"cutoff must be a non-negative integer, got {config.cutoff}")
        if not 0.0 < config.tail_tol < 1.0:
            raise ConfigError(f"tail_tol must lie in (0, 1), got {config.tail_tol}")
        if config.n_max is not None and config.n_max < 0:
            raise ConfigError(f"n_max must be non-negative, got {config.n_max}")
        if config.quadrature_nodes < 1:
            raise ConfigError(f"quadrature_nodes must be positive, got {config.quadrature_nodes}")
        if config.interval is not None and len(config.interval) != 2:
            raise ConfigError(f"interval must be [lo, hi], got {config.interval}")
        if config.shots < 0:
            raise ConfigError(f"shots must be non-negative, got {config.shots}")
        if config.shots > 0 and config.seed is None:
            raise ConfigError("Sampling (shots > 0) requires --seed")

        for name in ("signal", "parameter_field"):
            state = getattr(config, name)
            if state.kind == "fock" and not state.diagonal:
                raise ConfigError(f"{name} of kind 'fock' needs a diagonal")
            if state.kind == "superposition" and not state.terms:
                raise ConfigError(f"{name} of kind 'superposition' needs terms")
        config.policy.to_policy(config.shots)
        config.reconstruction_method()
        return True

    @staticmethod
    def parse_state_argument(text: str) -> StateSpec:
        """
        Parse a command-line state: vacuum, coherent:A, cat:A[:odd], fock:w0,w1,...

        Raises:
            ConfigError: For an unknown kind or malformed amplitude
        """
        kind, _, rest = text.partition(":")
        if kind == "vacuum":
            return StateSpec()
        if kind == "coherent":
            return StateSpec("coherent", parse_complex(rest))
        if kind == "cat":
            amplitude, _, parity = rest.partition(":")
            return StateSpec("cat", parse_complex(amplitude), -1 if parity == "odd" else 1)
        if kind == "fock":
            try:
                return StateSpec("fock", diagonal=[float(w) for w in rest.split(",")])
            except ValueError:
                raise ConfigError(f"Cannot read Fock diagonal from {rest!r}")
        raise ConfigError(f"Unknown state {text!r}; expected vacuum, coherent:A, cat:A or fock:w0,w1,...")

    @staticmethod
    def merge_cli_args(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
        """
        Merge command-line arguments into configuration.

        CLI arguments override configuration file values.

        Args:
            config: Base configuration from file
            args: Parsed command-line arguments

        Returns:
            Updated ExperimentConfig with CLI overrides applied
        """
        if hasattr(args, "eps") and args.eps:
            config.efficiencies = list(args.eps)
        if hasattr(args, "signal") and args.signal:
            config.signal = ConfigManager.parse_state_argument(args.signal)
        if hasattr(args, "parameter_field") and args.parameter_field:
            config.parameter_field = ConfigManager.parse_state_argument(args.parameter_field)

        if hasattr(args, "r") and args.r is not None:
            config.lo.r = args.r
        if hasattr(args, "theta") and args.theta is not None:
            config.lo.theta = args.theta
        if hasattr(args, "phase_shift") and args.phase_shift is not None:
            config.lo.phase_shift = args.phase_shift
        if hasattr(args, "amplitudes") and args.amplitudes:
            config.schedule.amplitudes = list(args.amplitudes)

        if hasattr(args, "cutoff") and args.cutoff is not None:
            config.cutoff = args.cutoff
        if hasattr(args, "tail_tol") and args.tail_tol is not None:
            config.tail_tol = args.tail_tol
        if hasattr(args, "n_max") and args.n_max is not None:
            config.n_max = args.n_max
        if hasattr(args, "nodes") and args.nodes is not None:
            config.quadrature_nodes = args.nodes
        if hasattr(args, "interval") and args.interval:
            config.interval = list(args.interval)
        if hasattr(args, "mode") and args.mode:
            config.policy.mode = args.mode
        if hasattr(args, "threshold") and args.threshold is not None:
            config.policy.threshold = args.threshold
        if hasattr(args, "method") and args.method:
            config.reconstruction = args.method

        if hasattr(args, "shots") and args.shots is not None:
            config.shots = args.shots
        if hasattr(args, "seed") and args.seed is not None:
            config.seed = args.seed
        if hasattr(args, "input") and args.input:
            config.input_grid = args.input
        if hasattr(args, "generating_operator") and args.generating_operator:
            config.generating_operator = args.generating_operator
        if hasattr(args, "output_dir") and args.output_dir:
            config.output_dir = args.output_dir
        if hasattr(args, "binary") and args.binary:
            config.binary = True
        if hasattr(args, "emit_plot_data") and args.emit_plot_data:
            config.plot_data = True
        return config

    @staticmethod
    def create_argument_parser() -> argparse.ArgumentParser:
        """
        Create command-line argument parser with one sub-command per analysis.

        Returns:
            Configured ArgumentParser instance
        """
        parser = argparse.ArgumentParser(
            prog="eightport-homodyne",
            description="Eight-port homodyne simulator - inefficient homodyne detection and phase space tomography",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  # Smeared number POVM and its completeness
  eightport-homodyne povm --eps 0.5 --n-max 64 --cutoff 64

  # Balanced homodyne statistics of a coherent signal
  eightport-homodyne homodyne --signal coherent:1+0.5j --r 3 --eps 0.9 0.8

  # Convergence towards the high-amplitude limit
  eightport-homodyne converge --eps 0.7 0.9 --amplitudes 25 50 100 200

  # Eight-port joint statistics against the smeared covariant limit
  eightport-homodyne eightport --signal coherent:1 --eps 0.5 --r 20

  # Smeared generating operator of the vacuum parameter field
  eightport-homodyne genop --eps 0.5 --cutoff 40

  # Undo the smearing of Monte Carlo data and reconstruct the state
  eightport-homodyne deconvolve --signal fock:0,1 --eps 0.6 0.7 0.8 0.9 --shots 1000000 --seed 7
  eightport-homodyne reconstruct --signal coherent:1 --eps 0.6 0.7 0.8 0.9
            """,
        )

        parser.add_argument(
            "--version",
            action="version",
            version=f"%(prog)s {__import__('src').__version__}",
            help="Show version information and exit",
        )

        common = argparse.ArgumentParser(add_help=False)
        common.add_argument(
            "--config",
            "-c",
            type=str,
            default=ConfigManager.DEFAULT_CONFIG_PATH,
            help=f"Path to configuration file (default: {ConfigManager.DEFAULT_CONFIG_PATH})",
        )
        common.add_argument("--verbose", action="store_true", help="Enable verbose logging")

        physics = common.add_argument_group("Physics")
        physics.add_argument(
            "--eps",
            type=float,
            nargs="+",
            metavar="EPS",
            help="Detector efficiencies: 1 value, 2 (balanced detector) or 4 (eight-port)",
        )
        physics.add_argument("--signal", type=str, help="Signal state: vacuum, coherent:A, cat:A[:odd], fock:w0,w1,...")
        physics.add_argument("--parameter-field", type=str, help="Parameter field state (same syntax as --signal)")
        physics.add_argument("--r", type=float, help="Local oscillator amplitude")
        physics.add_argument("--theta", type=float, help="Local oscillator phase")
        physics.add_argument("--phase-shift", type=float, help="Eight-port phase shifter phi")

        numerics = common.add_argument_group("Numerics")
        numerics.add_argument("--cutoff", type=int, help="Largest photon number kept")
        numerics.add_argument("--tail-tol", type=float, help="Admissible truncated probability mass")

        output = common.add_argument_group("Output")
        output.add_argument("--output-dir", "-o", type=str, help="Directory for result files (default: results)")
        output.add_argument("--binary", action="store_true", help="Write grids as JSON header + float64 payload")
        output.add_argument("--emit-plot-data", action="store_true", help="Write grids in gnuplot block layout")

        sampling = argparse.ArgumentParser(add_help=False)
        sampling_group = sampling.add_argument_group("Sampling")
        sampling_group.add_argument("--shots", type=int, help="Number of Monte Carlo repetitions")
        sampling_group.add_argument("--seed", type=int, help="Root seed (mandatory when sampling)")

        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True

        povm = subparsers.add_parser("povm", parents=[common], help="Smeared number POVM diagonals")
        povm.add_argument("--n-max", type=int, help="Largest count outcome (default: cutoff)")

        homodyne = subparsers.add_parser(
            "homodyne", parents=[common, sampling], help="Balanced homodyne statistics at finite amplitude"
        )
        homodyne.add_argument(
            "--interval", type=float, nargs=2, metavar=("LO", "HI"), help="Probability of the outcome interval (LO, HI]"
        )

        converge = subparsers.add_parser("converge", parents=[common], help="Convergence to the high-amplitude limit")
        converge.add_argument("--amplitudes", type=float, nargs="+", metavar="R", help="Local oscillator schedule")

        subparsers.add_parser(
            "eightport", parents=[common, sampling], help="Eight-port joint statistics and their limit"
        )

        genop = subparsers.add_parser("genop", parents=[common], help="Smeared generating operator")
        genop.add_argument("--nodes", type=int, help="Gauss-Hermite nodes per smeared axis")

        for name, help_text in (
            ("deconvolve", "Undo efficiency smearing of a phase space density"),
            ("reconstruct", "Reconstruct the signal state from a covariant density"),
        ):
            sub = subparsers.add_parser(name, parents=[common, sampling], help=help_text)
            sub.add_argument("--input", type=str, help="Grid file (CSV or binary) instead of synthetic data")
            sub.add_argument(
                "--mode",
                choices=[m.value for m in DeconvolutionMode],
                help="Deconvolution mode (default: tikhonov when sampling, else thresholded)",
            )
            sub.add_argument("--threshold", type=float, help="Relative kernel threshold tau")
            if name == "reconstruct":
                sub.add_argument(
                    "--generating-operator", type=str, help="Density matrix JSON of the generating operator"
                )
                sub.add_argument(
                    "--method",
                    choices=[m.value for m in ReconstructionMethod],
                    help="Weyl inversion (default: least_squares for sampled data, else quadrature)",
                )

        return parser
