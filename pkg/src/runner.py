"""Experiment orchestration: one method per command, results written to the output directory."""

import logging
import math
import os
import shutil
import tempfile
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src import __version__
from src.config import COMMANDS, ConfigManager, ExperimentConfig
from src.detector import povm_diagonals
from src.eightport import (
    EightPortConfig,
    Kernel2DKind,
    SmearKernel2D,
    conjugate_generating_operator,
    covariant_density_grid,
    generating_operator_convolution,
    joint_finite_distribution,
    ks_distance,
    ks_distance_analytic,
    limit_density,
    purity_extremality_check,
    reduce_to_double_homodyne,
    sample_eightport_outcomes,
    smeared_vacuum,
    vacuum_component_decomposition,
)
from src.errors import ConfigError, EightPortError
from src.fock import FockDensityMatrix, validate_density
from src.formatter import SummaryFormatter
from src.homodyne import (
    SmearKernel1D,
    convergence_report,
    finite_z_distribution,
    sample_homodyne_outcomes,
    signal_char_fn,
    smeared_quadrature_prob,
)
from src.phasespace import PhaseSpaceGrid
from src.serialization import read_density, read_grid, write_csv, write_density, write_grid, write_json
from src.tomography import (
    DeconvolutionPolicy,
    DeconvolutionReport,
    deconvolve_with_diagnostics,
    histogram_density,
    reconstruct_state_with_report,
    sample_phase_space,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 2

STAGING_PREFIX = ".staging-"

COMPLETENESS_TOL = 1e-12
TWO_PATH_TOL = 1e-8
TOTAL_MASS_TOL = 1e-10
CLOSED_FORM_TOL = 1e-6
JOINT_TABLE_LIMIT = 2_000_000
KS_POINTS = 65


class ExperimentRunner:
    """
    Runs one command against a validated configuration.

    Each cmd_* method computes its analysis, writes result files and records
    PASS/FAIL checks; run() turns the outcome into an exit code.
    """

    def __init__(self, config: ExperimentConfig, formatter: Optional[SummaryFormatter] = None):
        """
        Initialize experiment runner.

        Args:
            config: Validated experiment configuration
            formatter: Console formatter (default: colour when stdout is a terminal)
        """
        self.config = config
        self.formatter = formatter or SummaryFormatter()
        self.outputs: List[str] = []
        self.reports: List[Tuple[str, Dict[str, Any]]] = []
        self.checks: List[Tuple[str, bool, str]] = []
        self._staging: Optional[str] = None

    def run(self, command: str) -> int:
        """
        Execute a command and return its exit code.

        Result files are written to a staging directory inside the output
        directory and moved into place only when the command completes, so a
        failed command leaves no partial results behind.

        Domain errors map to their exit codes: 1 usage, 2 invariant failure,
        3 truncation or resolution failure.
        """
        if command not in COMMANDS:
            raise ConfigError(f"Unknown command {command!r}")
        self._display_startup_info(command)
        os.makedirs(self.config.output_dir, exist_ok=True)
        self._staging = tempfile.mkdtemp(prefix=STAGING_PREFIX, dir=self.config.output_dir)

        try:
            ConfigManager._save_config(self.config, self._record_path(self._path("config.json")))
            logger.info(f"Running {command}")
            getattr(self, f"cmd_{command}")()
            self._publish()
        except EightPortError as e:
            logger.error(f"{command} failed: {e}")
            print(self.formatter.format_check(command, False, str(e)))
            return e.exit_code
        finally:
            shutil.rmtree(self._staging, ignore_errors=True)
            self._staging = None

        print(self.formatter.format_outputs(self.outputs))
        for name, report in self.reports:
            print(f"{name}:")
            print(self.formatter.format_report(report))
        for name, passed, detail in self.checks:
            print(self.formatter.format_check(name, passed, detail))
        passed = all(passed for _, passed, _ in self.checks)
        logger.info(f"{command} finished, {'all checks passed' if passed else 'checks failed'}")
        return EXIT_OK if passed else EXIT_INVARIANT

    def _display_startup_info(self, command: str) -> None:
        """Display version, command and the main configuration values."""
        print(self.formatter.format_header(f"eightport-homodyne v{__version__} - {command}"))
        cfg = self.config
        print(f"Efficiencies: {', '.join(f'{e:g}' for e in cfg.efficiencies)}")
        print(f"Signal: {cfg.signal.kind}  Parameter field: {cfg.parameter_field.kind}")
        print(f"Local oscillator: r={cfg.lo.r:g}, theta={cfg.lo.theta:g}, phi={cfg.lo.phase_shift:g}")
        print(f"Cutoff: {cfg.cutoff}  tail_tol: {cfg.tail_tol:g}")
        if cfg.shots:
            print(f"Sampling: {cfg.shots} shots, seed {cfg.seed}")
        print(f"Output directory: {cfg.output_dir}")

    def _path(self, name: str) -> str:
        return os.path.join(self._staging or self.config.output_dir, name)

    def _record_path(self, path: str) -> str:
        self.outputs.append(path)
        return path

    def _publish(self) -> None:
        """Move every staged result into the output directory."""
        published = []
        for path in self.outputs:
            target = os.path.join(self.config.output_dir, os.path.basename(path))
            os.replace(path, target)
            published.append(target)
        self.outputs = published
        logger.debug(f"Published {len(published)} result files to {self.config.output_dir}")

    def _check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(passed), detail))
        return bool(passed)

    def _write_csv(self, name: str, columns: List[str], rows: Any) -> None:
        write_csv(self._record_path(self._path(name)), columns, rows)

    def _write_json(self, name: str, data: Dict[str, Any]) -> None:
        write_json(self._record_path(self._path(name)), data)
        self.reports.append((name, data))

    def _write_grid(self, stem: str, grid: PhaseSpaceGrid) -> None:
        name = f"{stem}.bin" if self.config.binary else f"{stem}.csv"
        write_grid(self._record_path(self._path(name)), grid, self.config.binary, self.config.plot_data)

    def _require_seed(self) -> int:
        if self.config.seed is None:
            raise ConfigError("Sampling requires --seed")
        return self.config.seed

    def _eightport_config(self) -> EightPortConfig:
        cfg = self.config
        return EightPortConfig(cfg.eightport_efficiencies(), cfg.lo.to_local_oscillator(), cfg.lo.phase_shift)

    def _kernel(self) -> SmearKernel2D:
        return SmearKernel2D.from_efficiencies(self.config.eightport_efficiencies())

    def cmd_povm(self) -> None:
        """Smeared number POVM diagonals and the completeness defect."""
        cfg = self.config
        budget = cfg.budget
        eps = cfg.detector_efficiency()
        n_max = cfg.n_max if cfg.n_max is not None else budget.cutoff
        diagonals = povm_diagonals(eps, budget, n_max)
        self._write_csv(
            "povm.csv",
            ["n", "m", "value"],
            ((n, m, diagonals[n, m]) for n in range(n_max + 1) for m in range(budget.dim)),
        )
        # sum_n E_n is complete on photon numbers m <= n_max
        covered = min(n_max, budget.cutoff) + 1
        defect = float(np.max(np.abs(diagonals[:, :covered].sum(axis=0) - 1.0)))
        self._write_json(
            "povm_report.json",
            {"eps": eps, "n_max": n_max, "cutoff": budget.cutoff, "completeness_defect": defect},
        )
        self._check("completeness", defect < COMPLETENESS_TOL, f"defect {defect:.3e}")

    def cmd_homodyne(self) -> None:
        """Finite-amplitude balanced homodyne statistics, characteristic functions, interval queries."""
        cfg = self.config
        signal = cfg.signal.to_superposition()
        lo = cfg.lo.to_local_oscillator()
        eps1, eps2 = cfg.homodyne_efficiencies()
        kernel = SmearKernel1D(eps1, eps2)

        dist = finite_z_distribution(signal, lo, eps1, eps2, cfg.budget)
        self._write_csv("homodyne_distribution.csv", ["x", "probability"], dist.rows())

        t = np.linspace(cfg.schedule.t_min, cfg.schedule.t_max, cfg.schedule.t_points)
        finite = signal_char_fn(signal, lo, lo.theta, eps1, eps2, t)
        limit = signal_char_fn(signal, None, lo.theta, eps1, eps2, t)
        self._write_csv(
            "homodyne_charfn.csv",
            ["t", "finite_re", "finite_im", "limit_re", "limit_im"],
            zip(t, finite.real, finite.imag, limit.real, limit.imag),
        )
        two_path = float(np.max(np.abs(dist.characteristic_function(t) - finite)))

        report: Dict[str, Any] = {
            "mean": dist.mean(),
            "variance": dist.variance(),
            "tail_mass": dist.tail_mass,
            "limit_kernel_variance": kernel.variance,
            "two_path_deviation": two_path,
            "limit_sup_distance": float(np.max(np.abs(finite - limit))),
        }
        if cfg.interval is not None:
            lo_x, hi_x = cfg.interval
            report["interval"] = [lo_x, hi_x]
            report["interval_probability"] = dist.interval_probability(lo_x, hi_x)
            report["limit_interval_probability"] = smeared_quadrature_prob(signal, lo.theta, kernel, (lo_x, hi_x))
        if cfg.shots:
            samples = sample_homodyne_outcomes(signal, lo, eps1, eps2, cfg.shots, self._require_seed())
            self._write_csv("homodyne_samples.csv", ["shot", "x"], enumerate(samples))
            report["sample_mean"] = float(np.mean(samples))
        self._write_json("homodyne_report.json", report)
        self._check(
            "characteristic function two-path",
            two_path < max(TWO_PATH_TOL, 2 * dist.tail_mass),
            f"deviation {two_path:.3e}",
        )

    def cmd_converge(self) -> None:
        """Characteristic function errors along the amplitude schedule and the O(1/r) gate."""
        cfg = self.config
        eps1, eps2 = cfg.homodyne_efficiencies()
        report = convergence_report(
            cfg.signal.to_superposition(), cfg.lo.theta, eps1, eps2, cfg.schedule.to_schedule()
        )
        orders = np.concatenate([[math.nan], report.decay_orders()])
        self._write_csv(
            "converge.csv",
            ["r", "sup_error", "decay_order"],
            ((r, e, o) for (r, e), o in zip(report.rows(), orders)),
        )
        print(self.formatter.format_table(["r", "sup_error", "decay_order"], [
            (r, e, o) for (r, e), o in zip(report.rows(), orders)
        ]))
        self._check("O(1/r) convergence", report.passes_order_gate(), f"final error {report.sup_errors[-1]:.3e}")

    def cmd_eightport(self) -> None:
        """Joint four-detector statistics, their limit and the Kolmogorov-Smirnov comparison."""
        cfg = self.config
        network = self._eightport_config()
        rho = cfg.signal.to_mixture()
        parameter_field = cfg.parameter_field.to_mixture()

        joint = joint_finite_distribution(rho, parameter_field, network, cfg.budget)
        self._write_csv("eightport_marginal_x.csv", ["x", "probability"], joint.marginal_x().rows())
        self._write_csv("eightport_marginal_y.csv", ["y", "probability"], joint.marginal_y().rows())
        table_size = np.prod([
            len(joint.arm_x.minus_counts), len(joint.arm_y.minus_counts),
            len(joint.arm_x.plus_counts), len(joint.arm_y.plus_counts),
        ])
        if table_size <= JOINT_TABLE_LIMIT:
            self._write_csv("eightport_joint.csv", ["k", "l", "m", "n", "probability"], joint.atoms())
        else:
            logger.warning(f"Joint count table of {table_size} entries not written; marginals only")

        spec = cfg.grid
        x = np.linspace(spec.q_min, spec.q_max, KS_POINTS)
        y = np.linspace(spec.p_min, spec.p_max, KS_POINTS)
        reduction = reduce_to_double_homodyne(rho, parameter_field, network)
        report: Dict[str, Any] = {
            "total": joint.total(),
            "tail_mass": joint.tail_mass,
            "ks_distance": ks_distance_analytic(joint, reduction, x, y),
        }

        standard_phases = cfg.lo.theta == 0.0 and math.isclose(
            math.remainder(cfg.lo.phase_shift - math.pi / 2, 2 * math.pi), 0.0, abs_tol=1e-12
        )
        if standard_phases:
            budget = cfg.budget
            h = limit_density(
                cfg.signal.to_density(budget), cfg.parameter_field.to_density(budget), network.kernel, spec
            )
            self._write_grid("limit_density", h)
            q, p = spec.mesh()
            mass = h.mass()
            mean_q = float((h.values * q).sum() * spec.dq * spec.dp / mass)
            mean_p = float((h.values * p).sum() * spec.dq * spec.dp / mass)
            report["limit_axis_variances"] = [
                float((h.values * (q - mean_q) ** 2).sum() * spec.dq * spec.dp / mass),
                float((h.values * (p - mean_p) ** 2).sum() * spec.dq * spec.dp / mass),
            ]
            report["ks_distance_grid"] = ks_distance(joint, h)
        else:
            logger.info("Limit density grid needs theta=0 and phi=pi/2; reporting the analytic limit only")

        if cfg.shots:
            samples = sample_eightport_outcomes(
                cfg.signal.to_superposition(), cfg.parameter_field.to_superposition(), network,
                cfg.shots, self._require_seed(),
            )
            self._write_csv("eightport_samples.csv", ["x", "y"], samples)
        self._write_json("eightport_report.json", report)
        total_defect = abs(joint.total() + joint.tail_mass - 1.0)
        self._check("total probability", total_defect <= TOTAL_MASS_TOL, f"defect {total_defect:.3e}")

    def cmd_genop(self) -> None:
        """Smeared generating operator, its validity, purity and the vacuum closed form."""
        cfg = self.config
        budget = cfg.budget
        S = cfg.parameter_field.to_density(budget)
        kernel = self._kernel()
        smeared = generating_operator_convolution(
            conjugate_generating_operator(S), kernel, budget, cfg.quadrature_nodes
        )
        self._record_path(self._path("genop.json"))
        write_density(self.outputs[-1], smeared)

        density = validate_density(smeared)
        purity = purity_extremality_check(smeared)
        expected_pure = purity_extremality_check(S).is_pure and kernel.kind is Kernel2DKind.DIRAC
        report: Dict[str, Any] = {
            "trace": density.trace,
            "min_eigenvalue": density.min_eigenvalue,
            "hermiticity_defect": density.hermiticity_defect,
            "mean_photon_number": smeared.mean_photon_number(),
            "is_pure": purity.is_pure,
            "largest_eigenvalue": purity.largest_eigenvalue,
        }
        self._check("valid density", density.passed, f"min eigenvalue {density.min_eigenvalue:.3e}")
        self._check("extremality", purity.is_pure == expected_pure, f"largest eigenvalue {purity.largest_eigenvalue:.6f}")

        eps = cfg.eightport_efficiencies()
        vacuum = FockDensityMatrix.vacuum(budget)
        if len(set(eps)) == 1 and eps[0] < 1.0 and np.allclose(S.entries, vacuum.entries):
            closed = smeared_vacuum(eps[0], budget)
            deviation = float(np.max(np.abs(smeared.entries - closed.entries)))
            recombined = vacuum_component_decomposition(eps[0], budget).recombined()
            report["closed_form_deviation"] = deviation
            report["decomposition_deviation"] = float(np.max(np.abs(recombined.entries - closed.entries)))
            self._check("vacuum closed form", deviation < CLOSED_FORM_TOL, f"deviation {deviation:.3e}")
        self._write_json("genop_report.json", report)

    def _smeared_input(self) -> Tuple[PhaseSpaceGrid, Optional[FockDensityMatrix]]:
        """Smeared density to invert: an input file, or synthetic data from the configured states."""
        cfg = self.config
        if cfg.input_grid:
            logger.info(f"Reading smeared density from {cfg.input_grid}")
            return read_grid(cfg.input_grid), None
        budget = cfg.budget
        rho = cfg.signal.to_density(budget)
        h = limit_density(rho, cfg.parameter_field.to_density(budget), self._kernel(), cfg.grid)
        if cfg.shots:
            points = sample_phase_space(h, cfg.shots, self._require_seed())
            h = histogram_density(points, h.spec)
        self._write_grid("smeared_density", h)
        return h, rho

    def _policy(self) -> DeconvolutionPolicy:
        return self.config.policy.to_policy(self.config.shots)

    def _deconvolved(self) -> Tuple[PhaseSpaceGrid, Optional[FockDensityMatrix], DeconvolutionReport]:
        h, rho = self._smeared_input()
        g, diagnostics = deconvolve_with_diagnostics(h, self._kernel(), self._policy())
        self._write_grid("deconvolved_density", g)
        return g, rho, diagnostics

    def cmd_deconvolve(self) -> None:
        """Recover the unsmeared covariant density and compare it with the truth when known."""
        cfg = self.config
        g, rho, diagnostics = self._deconvolved()
        report: Dict[str, Any] = {"policy": self._policy().to_dict(), "diagnostics": diagnostics.to_dict()}
        if rho is not None:
            truth = covariant_density_grid(
                rho, conjugate_generating_operator(cfg.parameter_field.to_density(cfg.budget)), cfg.grid
            )
            report["relative_l2_error"] = g.relative_l2_error(truth)
            report["sup_error"] = g.sup_distance(truth)
        self._write_json("deconvolve_report.json", report)
        mass = g.mass()
        self._check("deconvolved mass", abs(mass - 1.0) < 1e-2, f"mass {mass:.6f}")

    def cmd_reconstruct(self) -> None:
        """Deconvolve, then invert the covariant density to a density matrix."""
        cfg = self.config
        budget = cfg.budget
        g, rho, diagnostics = self._deconvolved()
        if cfg.generating_operator:
            T = read_density(cfg.generating_operator)
        else:
            T = conjugate_generating_operator(cfg.parameter_field.to_density(budget))
        estimate, report = reconstruct_state_with_report(
            g, T, budget, truth=rho, response=diagnostics.response, method=cfg.reconstruction_method()
        )
        self._record_path(self._path("reconstructed.json"))
        write_density(self.outputs[-1], estimate)
        self._write_json(
            "reconstruct_report.json",
            {
                "policy": self._policy().to_dict(),
                "reconstruction": report.to_dict(),
                "deconvolution": diagnostics.to_dict(),
            },
        )
        if report.fidelity is not None:
            self._check(
                "fidelity", report.fidelity >= cfg.min_fidelity, f"{report.fidelity:.6f} (min {cfg.min_fidelity})"
            )
