"""nhfp command-line front end"""

import argparse
import copy
import csv
import json
import logging
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence

import numpy as np
import yaml

from nhfp import dynamics, floquet, model, oracle
from nhfp.nhfp_base import (
    BIORTHO_TOL,
    CONVERGENCE_TOL,
    EXIT_CODE_NAMES,
    EXPERIMENT_J0_PER_UM,
    SUBLATTICE_NAMES,
    TASK_NAMES,
    CheckFailedError,
    ConfigError,
    ExitCode,
    InvalidArgumentError,
    NhfpError,
    Sublattice,
    Task,
    WindingUndefinedError,
    exit_code_for,
    sublattice_from_name,
    zone_energy_grid,
    zone_momentum_grid,
)

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-8
OVERLAP_TOL = 1e-8
REALITY_TOL = 1e-10
GAP_RECOMPUTE_TOL = 1e-6

DEFAULT_CONFIG: Dict[str, Any] = {
    "model": {
        "u0": 1.0,
        "J0": 1.0,
        "lambda": 1.75,
        "gamma0": 0.4,
        "phi": 0.0,
        "omega": 1.1,
        "a0": 1.0,
    },
    "bands": {"k_points": 256, "n_harmonics": 40},
    "gapscan": {
        "omega": {"start": 0.5, "stop": 2.0, "num": 20},
        "gamma0": {"start": 0.0, "stop": 0.6, "num": 61},
        "k_points": 128,
        "n_harmonics": None,
        "tol": 1e-3,
    },
    "evolve": {
        "inputs": ["A"],
        "n_cells": 201,
        "cycles": 5,
        "steps_per_cycle": 2000,
        "store_per_cycle": 100,
        "write_amplitudes": True,
        "spectrum": False,
    },
    "spectrum": {
        "inputs": ["A"],
        "source": "analytic",
        "e_points": 64,
        "k_points": 128,
        "eta": 0.02,
        "replicas": 3,
        "n_harmonics": 40,
        "n_cells": 201,
        "cycles": 5,
        "steps_per_cycle": 2000,
    },
    "check": {"k_points": 64, "n_harmonics": 40, "steps": 8192},
    "cycle": {"samples": 256},
    "output": {"dir": ".", "si": False},
}

PRESETS: Dict[str, Dict[str, float]] = {
    "weak": {"u0": 0.3, "gamma0": 0.1},
    "reference": {"u0": 1.0, "gamma0": 0.4, "omega": 1.1},
    "strong": {"u0": 1.1, "gamma0": 0.8},
    "stronger": {"u0": 1.5, "gamma0": 1.1},
    "unmodulated": {"u0": 0.0, "gamma0": 0.0},
    "hermitian": {"gamma0": 0.0},
}

SPECTRUM_SOURCES = ("analytic", "simulated", "both")


# ==============================================================================
# CONFIGURATION
# ==============================================================================
def _merge(base: Dict[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    """Overlay sections of update onto base; grid values are replaced whole"""
    out = copy.deepcopy(base)
    for section, values in update.items():
        if section not in out:
            raise ConfigError(section, "unknown section")
        if not isinstance(values, Mapping):
            raise ConfigError(section, "expected a section")
        for key, value in values.items():
            if key not in out[section]:
                raise ConfigError(f"{section}.{key}", "unknown field")
            out[section][key] = copy.deepcopy(value)
    return out


def load_config_file(path: str | Path) -> Dict[str, Any]:
    """Read a JSON, YAML or nhfp CSV output file into a config dict"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}")
    suffix = path.suffix.lower()
    if suffix == ".csv":
        first = text.splitlines()[0] if text else ""
        if not first.startswith("#"):
            raise ConfigError(str(path), "CSV file has no embedded configuration header", 1)
        text = first[1:]
        suffix = ".json"
    if suffix in (".yaml", ".yml"):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(str(path), f"invalid YAML: {exc}", line)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON: {exc.msg}", exc.lineno)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    data.pop("task", None)
    return data


def _grid(value: Any, field: str) -> np.ndarray:
    if isinstance(value, Mapping):
        try:
            start = float(value["start"])
            stop = float(value["stop"])
            num = int(value["num"])
        except KeyError as exc:
            raise ConfigError(f"{field}.{exc.args[0]}", "missing grid field")
        except (TypeError, ValueError):
            raise ConfigError(field, "grid start/stop must be numbers and num an integer")
        if num < 1:
            raise ConfigError(f"{field}.num", "grid must contain at least one point")
        return np.linspace(start, stop, num)
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(field, "grid must contain at least one point")
        try:
            return np.asarray([float(v) for v in value])
        except (TypeError, ValueError):
            raise ConfigError(field, "grid entries must be numbers")
    raise ConfigError(field, "grid must be a list or {start, stop, num}")


@dataclass
class RunConfig:
    """Resolved run configuration"""

    data: Dict[str, Any]

    @property
    def params(self) -> model.DriveParams:
        try:
            return model.DriveParams(
                u0=self.number("model", "u0"),
                j0=self.number("model", "J0"),
                lam=self.number("model", "lambda"),
                gamma0=self.number("model", "gamma0"),
                phi=self.number("model", "phi"),
                omega=self.number("model", "omega"),
                a0=self.number("model", "a0"),
            )
        except InvalidArgumentError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("model", str(exc)) from exc

    def value(self, section: str, key: str) -> Any:
        return self.data[section][key]

    def number(self, section: str, key: str) -> float:
        value = self.data[section][key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key}", f"expected a number, got {value!r}")
        return float(value)

    def count(self, section: str, key: str, minimum: int = 1) -> int:
        value = self.data[section][key]
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            raise ConfigError(
                f"{section}.{key}", f"expected an integer >= {minimum}, got {value!r}"
            )
        return int(value)

    def flag(self, section: str, key: str) -> bool:
        value = self.data[section][key]
        if not isinstance(value, bool):
            raise ConfigError(f"{section}.{key}", f"expected true/false, got {value!r}")
        return value

    def grid(self, section: str, key: str) -> np.ndarray:
        return _grid(self.data[section][key], f"{section}.{key}")

    def inputs(self, section: str) -> List[Sublattice]:
        value = self.data[section]["inputs"]
        names = [value] if isinstance(value, str) else value
        if not isinstance(names, list) or not names:
            raise ConfigError(f"{section}.inputs", "expected a nonempty list of A/B")
        try:
            return [sublattice_from_name(str(n)) for n in names]
        except InvalidArgumentError as exc:
            raise ConfigError(f"{section}.inputs", str(exc))

    def k_grid(self, section: str) -> np.ndarray:
        return zone_momentum_grid(self.count(section, "k_points"), self.params.a0)

    def validate(self) -> model.DriveParams:
        """Check the fields every command needs"""
        self.flag("output", "si")
        if not isinstance(self.data["output"]["dir"], str):
            raise ConfigError("output.dir", "expected a directory path")
        return self.params

    def header(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))


def resolve_config(
    file_data: Optional[Mapping[str, Any]] = None,
    preset: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Defaults, then preset, then file values, then command-line overrides"""
    data = copy.deepcopy(DEFAULT_CONFIG)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}, expected {sorted(PRESETS)}")
        data["model"].update(PRESETS[preset])
    if file_data:
        data = _merge(data, file_data)
    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        data[section][key] = value
    config = RunConfig(data)
    config.validate()
    return config


# ==============================================================================
# OUTPUT
# ==============================================================================
def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        # adding 0.0 turns -0.0 into 0.0
        return format(float(value) + 0.0, ".17g")
    return str(value)


def write_csv(path: Path, config: RunConfig, columns: Sequence[str], rows: Any) -> Path:
    """CSV with the resolved config as a '#' JSON header line"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write("#" + config.header() + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info(f"Wrote {path}")
    return path


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    message: str = ""


# ==============================================================================
class NhfpRunner:
    """Runs one command from a resolved configuration"""

    def __init__(self, config: RunConfig, logger: Optional[logging.Logger] = None):
        self.config = config
        self.logger = logger or logging.getLogger("nhfp")
        self.params = config.params
        self.out_dir = Path(str(config.value("output", "dir")))
        self.si = config.flag("output", "si")
        self.energy_scale = EXPERIMENT_J0_PER_UM if self.si else 1.0
        self.time_scale = 1.0 / EXPERIMENT_J0_PER_UM if self.si else 1.0

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        self.logger.info(f"[{name}] begin")
        yield
        self.logger.info(f"[{name}] end ({time.perf_counter() - start:.2f} s)")

    def run(self, task: Task) -> List[Path]:
        handlers = {
            Task.BANDS: self.cmd_bands,
            Task.GAPSCAN: self.cmd_gapscan,
            Task.EVOLVE: self.cmd_evolve,
            Task.SPECTRUM: self.cmd_spectrum,
            Task.CHECK: self.cmd_check,
            Task.CYCLE: self.cmd_cycle,
        }
        with self.stage(TASK_NAMES[task]):
            return handlers[task]()

    def _winding_summary(self, structure: floquet.BandStructure) -> List[List[Any]]:
        rows: List[List[Any]] = []
        for band in range(2):
            try:
                z, residual = floquet.winding_number(structure, band)
                rows.append([f"winding_{band + 1}", z])
            except WindingUndefinedError as exc:
                residual = exc.residual
                rows.append([f"winding_{band + 1}", "undefined"])
            rows.append([f"residual_{band + 1}", residual])
        return rows

    def cmd_bands(self) -> List[Path]:
        k_grid = self.config.k_grid("bands")
        n_h = self.config.count("bands", "n_harmonics")
        structure = floquet.band_structure(self.params, k_grid, n_h, log=self.logger)
        change = floquet.check_truncation(self.params, 0.0, n_h)
        if change > CONVERGENCE_TOL:
            self.logger.warning(f"Truncation N_h={n_h} not converged (change {change:.3g})")
        rates = floquet.decay_rates(structure)
        es = self.energy_scale
        rows = []
        for i, k in enumerate(structure.k_grid):
            for band in range(2):
                eps = structure.quasienergies[i, band]
                rows.append(
                    [k, band + 1, eps.real * es, eps.imag * es,
                     structure.unfolded[i, band] * es, rates[i, band] * es]
                )
        bands_path = write_csv(
            self.out_dir / "bands.csv",
            self.config,
            ["k", "band", "re_eps", "im_eps", "unfolded_re_eps", "decay_rate"],
            rows,
        )
        summary = [
            ["gap", structure.gap * es],
            ["gap_status", "closed" if structure.gap_closed else "open"],
        ] + self._winding_summary(structure)
        for name, value in summary:
            self.logger.info(f"{name}: {value}")
        summary_path = write_csv(
            self.out_dir / "bands_summary.csv", self.config, ["quantity", "value"], summary
        )
        return [bands_path, summary_path]

    def cmd_gapscan(self) -> List[Path]:
        section = "gapscan"
        n_h = self.config.value(section, "n_harmonics")
        if n_h is not None:
            n_h = self.config.count(section, "n_harmonics")
        result = floquet.gap_scan(
            self.params,
            self.config.grid(section, "omega"),
            self.config.grid(section, "gamma0"),
            k_points=self.config.count(section, "k_points", 2),
            n_harmonics=n_h,
            tol=self.config.number(section, "tol"),
            log=self.logger,
        )
        es = self.energy_scale
        rows = []
        for i, w in enumerate(result.omega_grid):
            for j, g in enumerate(result.gamma_grid):
                rows.append([w * es, g * es, result.gap[i, j] * es, result.flags[i][j]])
        scan_path = write_csv(
            self.out_dir / "gapscan.csv", self.config, ["omega", "gamma0", "gap", "flag"], rows
        )
        threshold_rows = [[w * es, g * es] for w, g in zip(result.omega_grid, result.threshold)]
        threshold_path = write_csv(
            self.out_dir / "gapscan_threshold.csv",
            self.config,
            ["omega", "gamma0_threshold"],
            threshold_rows,
        )
        return [scan_path, threshold_path]

    def _trajectory(self, section: str, sublattice: Sublattice) -> dynamics.Trajectory:
        store = self.config.count(section, "store_per_cycle") if section == "evolve" else 100
        return dynamics.propagate(
            self.params,
            n_cells=self.config.count(section, "n_cells", 2),
            sublattice=sublattice,
            n_cycles=self.config.count(section, "cycles"),
            steps_per_cycle=self.config.count(section, "steps_per_cycle"),
            store_per_cycle=store,
            log=self.logger,
        )

    def cmd_evolve(self) -> List[Path]:
        paths = []
        ts = self.time_scale
        for sublattice in self.config.inputs("evolve"):
            name = SUBLATTICE_NAMES[sublattice]
            trajectory = self._trajectory("evolve", sublattice)
            if self.config.flag("evolve", "write_amplitudes"):
                rows = (
                    [t * ts, site, site // 2, SUBLATTICE_NAMES[Sublattice(site % 2)],
                     amp.real, amp.imag]
                    for t, psi in zip(trajectory.times, trajectory.amplitudes)
                    for site, amp in enumerate(psi)
                )
                paths.append(write_csv(
                    self.out_dir / f"trajectory_{name}.csv",
                    self.config,
                    ["t", "site", "cell", "sublattice", "re_psi", "im_psi"],
                    rows,
                ))
            com = dynamics.center_of_mass(trajectory)
            norms = trajectory.norms()
            displacement = dynamics.per_cycle_displacement(com)
            decay = dynamics.norm_decay(trajectory)
            self.logger.info(
                f"Input {name}: displacement {displacement:+.4f} cells/cycle, "
                f"decay rate {decay.rate:.6g}"
            )
            rows_com: List[List[Any]] = [
                ["step", i, t * ts, x, n]
                for i, (t, x, n) in enumerate(zip(com.times, com.positions, norms))
            ]
            cycles = trajectory.cycle_indices()
            rows_com += [
                ["cycle", c, com.times[idx] * ts, com.positions[idx], norms[idx]]
                for c, idx in enumerate(cycles)
            ]
            rows_com.append(["displacement_per_cycle", 0, math.nan, displacement, math.nan])
            rows_com.append(
                ["decay_rate", 0, math.nan, math.nan, decay.rate * self.energy_scale]
            )
            paths.append(write_csv(
                self.out_dir / f"com_{name}.csv",
                self.config,
                ["kind", "index", "t", "com", "norm"],
                rows_com,
            ))
            if self.config.flag("evolve", "spectrum"):
                smap = dynamics.spacetime_spectrum(trajectory)
                paths.append(self._write_map(f"spacetime_{name}.csv", [smap], ["simulated"]))
        return paths

    def _write_map(
        self, filename: str, maps: Sequence[floquet.SpectralMap], names: Sequence[str]
    ) -> Path:
        base = maps[0]
        es = self.energy_scale
        rows = []
        for ik, k in enumerate(base.k_grid):
            for ie, e in enumerate(base.energies):
                rows.append([e * es, k] + [m.intensity[ie, ik] for m in maps])
        return write_csv(self.out_dir / filename, self.config, ["E", "k"] + list(names), rows)

    def cmd_spectrum(self) -> List[Path]:
        section = "spectrum"
        source = self.config.value(section, "source")
        if source not in SPECTRUM_SOURCES:
            raise ConfigError(f"{section}.source", f"expected one of {SPECTRUM_SOURCES}")
        energies = zone_energy_grid(self.config.count(section, "e_points"), self.params.omega)
        k_grid = self.config.k_grid(section)
        paths = []
        for sublattice in self.config.inputs(section):
            maps = []
            names = []
            if source in ("analytic", "both"):
                maps.append(floquet.spectral_density(
                    self.params,
                    k_grid,
                    energies,
                    sublattice,
                    n_harmonics=self.config.count(section, "n_harmonics"),
                    eta=self.config.number(section, "eta"),
                    replicas=self.config.count(section, "replicas", 0),
                ))
                names.append("analytic")
            if source in ("simulated", "both"):
                trajectory = self._trajectory(section, sublattice)
                maps.append(dynamics.spacetime_spectrum(trajectory, energies, k_grid))
                names.append("simulated")
            filename = f"spectrum_{SUBLATTICE_NAMES[sublattice]}.csv"
            paths.append(self._write_map(filename, maps, names))
        return paths

    def _check(self, name: str, tolerance: float, compute: Any, lower: bool = True) -> CheckResult:
        """Run one check; numerical failures count as a failed check"""
        try:
            value = float(compute())
        except NhfpError as exc:
            self.logger.error(f"Check {name} failed: {type(exc).__name__}: {exc}")
            return CheckResult(name, math.nan, tolerance, False, type(exc).__name__)
        passed = value < tolerance if lower else value > tolerance
        level = logging.INFO if passed else logging.ERROR
        self.logger.log(level, f"Check {name}: {value:.3g} (tolerance {tolerance:g})")
        return CheckResult(name, value, tolerance, passed)

    def cmd_check(self) -> List[Path]:
        section = "check"
        params = self.params
        k_grid = self.config.k_grid(section)
        n_h = self.config.count(section, "n_harmonics")
        steps = self.config.count(section, "steps", 1000)
        solver = floquet.FloquetSolver(params, n_h, logger=self.logger)
        results: List[CheckResult] = []

        def biortho() -> float:
            return max(solver.eigensystem(float(k)).biorthonormality_residual() for k in k_grid)

        def first_zone() -> np.ndarray:
            return solver.quasienergies_on_grid(k_grid)

        results.append(self._check("biorthonormality", BIORTHO_TOL, biortho))
        results.append(self._check(
            "truncation_convergence", CONVERGENCE_TOL,
            lambda: floquet.check_truncation(params, 0.0, n_h),
        ))
        report: List[oracle.CrossCheckReport] = []

        def deviation() -> float:
            report.append(oracle.cross_check(params, k_grid, n_h, steps))
            return report[0].max_deviation

        results.append(self._check("oracle_deviation", ORACLE_TOL, deviation))
        if report:
            results.append(self._check(
                "eigenvector_overlap", 1.0 - OVERLAP_TOL, lambda: report[0].min_overlap, False
            ))
        if params.gamma0 == 0.0:
            results.append(self._check(
                "hermitian_reality", REALITY_TOL, lambda: np.max(np.abs(first_zone().imag))
            ))
        results.append(self._check(
            "loss_sign", REALITY_TOL, lambda: max(0.0, float(np.max(first_zone().imag)))
        ))

        structures: List[floquet.BandStructure] = []

        def gap_recompute() -> float:
            floq = floquet.band_structure(params, k_grid, n_h, log=self.logger)
            mono = floquet.band_structure(
                params, k_grid, solver=oracle.MonodromySolver(params, steps), log=self.logger
            )
            structures.extend([floq, mono])
            return abs(floq.gap - mono.gap)

        results.append(self._check("gap_recomputed", GAP_RECOMPUTE_TOL, gap_recompute))
        if structures:
            floq, mono = structures

            def winding_mismatch() -> float:
                diff = np.abs(np.round(floq.raw_windings) - np.round(mono.raw_windings))
                return float(np.max(diff))

            results.append(self._check("winding_recomputed", 0.5, winding_mismatch))
            if floq.gap_closed:
                results.append(self._check(
                    "winding_additivity", 0.5,
                    lambda: abs(sum(floquet.winding_number(floq, b)[0] for b in range(2))),
                ))

        path = write_csv(
            self.out_dir / "check.csv",
            self.config,
            ["check", "value", "tolerance", "passed", "message"],
            [[r.name, r.value, r.tolerance, r.passed, r.message] for r in results],
        )
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise CheckFailedError(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return [path]

    def cmd_cycle(self) -> List[Path]:
        cycle = model.drive_cycle(self.params, self.config.count("cycle", "samples", 2))
        d = model.drive_at(self.params, cycle.times)
        es = self.energy_scale
        rows = [
            [t * self.time_scale] + [float(v) * es for v in values]
            for t, *values in zip(
                cycle.times, d.j1, d.j2, d.ua, d.ub, d.ga, d.gb, cycle.dj, cycle.du, cycle.dg
            )
        ]
        return [write_csv(
            self.out_dir / "cycle.csv",
            self.config,
            ["t", "j1", "j2", "ua", "ub", "ga", "gb", "dj", "du", "dg"],
            rows,
        )]


# ==============================================================================
class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> Any:
        raise InvalidArgumentError(message)


OVERRIDES = {
    "omega": ["model.omega"],
    "gamma0": ["model.gamma0"],
    "u0": ["model.u0"],
    "j0": ["model.J0"],
    "lambda_": ["model.lambda"],
    "phi": ["model.phi"],
    "a0": ["model.a0"],
    "n_harmonics": ["bands.n_harmonics", "gapscan.n_harmonics", "spectrum.n_harmonics",
                    "check.n_harmonics"],
    "k_points": ["bands.k_points", "gapscan.k_points", "spectrum.k_points", "check.k_points"],
    "input": ["evolve.inputs", "spectrum.inputs"],
    "n_cells": ["evolve.n_cells", "spectrum.n_cells"],
    "cycles": ["evolve.cycles", "spectrum.cycles"],
    "steps_per_cycle": ["evolve.steps_per_cycle", "spectrum.steps_per_cycle"],
    "out": ["output.dir"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="nhfp", description="Non-Hermitian Floquet pumping in the driven lossy Rice-Mele chain"
    )
    parser.add_argument("task", choices=list(TASK_NAMES.values()))
    parser.add_argument("--config", help="JSON, YAML or nhfp CSV output file")
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--si", action="store_true", default=None,
                        help="report energies in 1/um and times as propagation length in um")
    parser.add_argument("-v", "--verbose", action="store_true")
    for name in ("omega", "gamma0", "u0", "j0", "phi", "a0"):
        parser.add_argument(f"--{name}", type=float)
    parser.add_argument("--lambda", dest="lambda_", type=float)
    for name in ("n_harmonics", "k_points", "n_cells", "cycles", "steps_per_cycle"):
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    parser.add_argument("--input", choices=["A", "B", "AB"])
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for attr, paths in OVERRIDES.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        if attr == "input":
            value = list(value)
        for path in paths:
            out[path] = value
    if args.si:
        out["output.si"] = True
    return out


def main(args: Optional[Sequence[str]] = None) -> int:
    """Entry point of the nhfp console script"""
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    log = logging.getLogger("nhfp")
    try:
        ns = build_parser().parse_args(args)
        if ns.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        file_data = load_config_file(ns.config) if ns.config else None
        config = resolve_config(file_data, ns.preset, _overrides(ns))
        task = {v: k for k, v in TASK_NAMES.items()}[ns.task]
        NhfpRunner(config, logger=log).run(task)
    except NhfpError as exc:
        code = exit_code_for(exc)
        log.error(f"{EXIT_CODE_NAMES[code]}: {exc}")
        return int(code)
    except Exception as exc:
        log.exception(f"{EXIT_CODE_NAMES[ExitCode.RUNTIME]}: {exc}")
        return int(ExitCode.RUNTIME)
    return int(ExitCode.OK)


if __name__ == "__main__":
    sys.exit(main())
