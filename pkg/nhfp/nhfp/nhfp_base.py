"""Shared constants, codes, exceptions and the solver base class for nhfp"""

import math
import os
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Dict, List, Sequence, TypeVar

import numpy as np
import numpy.typing as npt

ComplexArray = npt.NDArray[np.complex128]
FloatArray = npt.NDArray[np.float64]

T = TypeVar("T")
R = TypeVar("R")

# Truncation and tolerances
DEFAULT_N_HARMONICS = 40
CONVERGENCE_STEP = 5
CONVERGENCE_TOL = 1e-8
DEFAULT_M_MAX = 64
DEFAULT_N_SAMPLES = 1024
FLOQUET_N_SAMPLES = 1 << 16
BIORTHO_TOL = 1e-10
PAIRING_REL_TOL = 1e-8
EXCEPTIONAL_POINT_TOL = 1e-8
ZONE_SNAP_TOL = 1e-9

# Bands
DEFAULT_K_POINTS = 256
GAP_CLOSURE_TOL = 1e-3
WINDING_TOL = 0.05
TRACKING_MIN_OVERLAP = 0.5
TRACKING_REFINE_LEVELS = 3
SPECTRAL_BROADENING = 0.02
SINGLE_BAND_TOL = 1e-6
DEFAULT_E_POINTS = 64
DEFAULT_REPLICAS = 3

# Dynamics
DEFAULT_N_CELLS = 201
DEFAULT_N_CYCLES = 5
DEFAULT_STEPS_PER_CYCLE = 2000
MIN_STEPS_PER_CYCLE = 500
DEFAULT_STORE_PER_CYCLE = 100
LIGHT_CONE_CELLS_PER_CYCLE = 2
BOUNDARY_MARGIN_CELLS = 4
BOUNDARY_CELLS = 2
BOUNDARY_REL_TOL = 1e-6
NORM_STEP_TOL = 1e-9

# Oracle
DEFAULT_MONODROMY_STEPS = 8192
MIN_MONODROMY_STEPS = 1000

# Experimental hopping scale of the plasmonic waveguide arrays, in 1/um
EXPERIMENT_J0_PER_UM = 0.144

THREADS_ENV_VAR = "NHFP_THREADS"


# ==============================================================================
class Sublattice(IntEnum):
    """Sublattice index inside a unit cell"""

    A = 0
    B = 1


SUBLATTICE_NAMES = {
    Sublattice.A: "A",
    Sublattice.B: "B",
}


# ==============================================================================
class ExitCode(IntEnum):
    """Process exit codes of the command-line tool"""

    OK = 0
    VALIDATION = 1
    CHECK_FAILED = 2
    RUNTIME = 3


EXIT_CODE_NAMES = {
    ExitCode.OK: "",
    ExitCode.VALIDATION: "VALIDATION_ERROR",
    ExitCode.CHECK_FAILED: "CHECK_FAILED",
    ExitCode.RUNTIME: "RUNTIME_ERROR",
}


# ==============================================================================
class Task(IntEnum):
    """Commands understood by the runner"""

    BANDS = 0
    GAPSCAN = 1
    EVOLVE = 2
    SPECTRUM = 3
    CHECK = 4
    CYCLE = 5


TASK_NAMES = {
    Task.BANDS: "bands",
    Task.GAPSCAN: "gapscan",
    Task.EVOLVE: "evolve",
    Task.SPECTRUM: "spectrum",
    Task.CHECK: "check",
    Task.CYCLE: "cycle",
}


# ==============================================================================
# EXCEPTIONS
# ==============================================================================
class NhfpError(Exception):
    """Base class of every error raised by nhfp"""


class InvalidArgumentError(NhfpError, ValueError):
    """An argument violates a documented precondition"""


class ConfigError(InvalidArgumentError):
    """A run configuration field is missing or malformed"""

    def __init__(self, field: str, message: str, line: int | None = None):
        where = f"{field} (line {line})" if line is not None else field
        super().__init__(f"{where}: {message}")
        self.field = field
        self.line = line


class DegenerateSpectrumError(NhfpError):
    """Left and right eigenvectors cannot be paired unambiguously"""


class ExceptionalPointError(NhfpError):
    """Biorthogonal normalization diverges (eigenvectors coalesce)"""


class TruncationError(NhfpError):
    """Harmonic truncation too small to resolve the first Floquet zone"""


class TrackingError(NhfpError):
    """Band tracking by overlap failed between two momenta"""

    def __init__(self, k: float, overlap: float):
        super().__init__(f"Band tracking failed near k={k:.6g} (best overlap {overlap:.3g})")
        self.k = k
        self.overlap = overlap


class WindingUndefinedError(NhfpError):
    """A band does not return to itself modulo the driving frequency"""

    def __init__(self, band: int, raw: float, residual: float):
        super().__init__(
            f"Winding of band {band} undefined (raw {raw:.6g}, residual {residual:.3g})"
        )
        self.band = band
        self.raw = raw
        self.residual = residual


class LatticeTooSmallError(NhfpError):
    """Wave packet reaches the open boundary of the lattice"""

    def __init__(self, message: str, suggested_n_cells: int):
        super().__init__(f"{message}; enlarge lattice to n_cells >= {suggested_n_cells}")
        self.suggested_n_cells = suggested_n_cells


class IntegratorError(NhfpError):
    """Time integration produced an unphysical result"""


class AbsorptionError(NhfpError):
    """A monodromy eigenvalue vanished (total absorption)"""


class CheckFailedError(NhfpError):
    """A numerical cross-check exceeded its tolerance"""


def exit_code_for(exc: BaseException) -> ExitCode:
    """Map an exception onto the process exit code."""
    if isinstance(exc, InvalidArgumentError):
        return ExitCode.VALIDATION
    if isinstance(exc, CheckFailedError):
        return ExitCode.CHECK_FAILED
    return ExitCode.RUNTIME


# ==============================================================================
@dataclass(frozen=True)
class FirstZoneModes:
    """The two physical Floquet modes at one momentum.

    quasienergies are folded into [-omega/2, omega/2). Columns of right hold
    the mode functions phi_alpha(0), columns of left the dual states, scaled so
    that left^H right = identity. harmonics (optional) keeps the extended-space
    components u^n of each mode for the folded replica, shape (2, 2N+1, 2).
    """

    k: float
    omega: float
    quasienergies: ComplexArray
    right: ComplexArray
    left: ComplexArray
    harmonics: ComplexArray | None = None

    @property
    def decay_rates(self) -> FloatArray:
        """Gamma = -2 Im(eps) for both modes."""
        return np.asarray(-2.0 * self.quasienergies.imag, dtype=np.float64)

    def projector(self, band: int) -> ComplexArray:
        """Gauge-invariant projector |phi><phi~| of one mode."""
        return np.asarray(
            np.outer(self.right[:, band], self.left[:, band].conj()), dtype=np.complex128
        )

    def biorthonormality_residual(self) -> float:
        """max |<phi~_a|phi_b> - delta_ab|"""
        gram = self.left.conj().T @ self.right
        return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


# ==============================================================================
class QuasienergySolver(ABC):
    """A base/abstract class for anything that yields first-zone Floquet modes"""

    def __init__(self, omega: float, threads: int | None = None):
        self.omega = omega
        self._threads = threads

    @abstractmethod
    def modes(self, k: float) -> FirstZoneModes:
        """Both first-zone modes at momentum k"""

    def quasienergies(self, k: float) -> ComplexArray:
        """Folded quasienergies at momentum k"""
        return self.modes(k).quasienergies

    def modes_on_grid(self, k_grid: Sequence[float]) -> List[FirstZoneModes]:
        """Evaluate modes over a grid, in grid order"""
        return parallel_map(self.modes, [float(k) for k in k_grid], self._threads)

    def quasienergies_on_grid(self, k_grid: Sequence[float]) -> ComplexArray:
        """Folded quasienergies over a grid, shape (len(k_grid), 2)"""
        return np.array([m.quasienergies for m in self.modes_on_grid(k_grid)])


# ==============================================================================
# HELPER FUNCTIONS
# ==============================================================================
def fold(energy: npt.ArrayLike, omega: float) -> npt.NDArray[np.float64]:
    """Fold real energies into the first zone [-omega/2, omega/2)."""
    e = np.asarray(energy, dtype=np.float64)
    return np.asarray(e - omega * np.floor((e + 0.5 * omega) / omega), dtype=np.float64)


def fold_complex(energy: npt.ArrayLike, omega: float) -> ComplexArray:
    """Fold the real part of complex quasienergies, leaving Im untouched."""
    e = np.asarray(energy, dtype=np.complex128)
    return np.asarray(fold(e.real, omega) + 1j * e.imag, dtype=np.complex128)


def circular_distance(a: npt.ArrayLike, b: npt.ArrayLike, omega: float) -> FloatArray:
    """Distance between energies on the circle of circumference omega."""
    return np.asarray(np.abs(fold(np.asarray(a) - np.asarray(b), omega)), dtype=np.float64)


def zone_momentum_grid(n_points: int, a0: float = 1.0) -> FloatArray:
    """Uniform half-open grid over [-pi/a0, pi/a0)."""
    if n_points < 1:
        raise InvalidArgumentError("k grid must contain at least one point")
    return np.asarray(-math.pi / a0 + (2.0 * math.pi / a0) * np.arange(n_points) / n_points)


def zone_energy_grid(n_points: int, omega: float) -> FloatArray:
    """Uniform half-open grid over [-omega/2, omega/2)."""
    if n_points < 1:
        raise InvalidArgumentError("energy grid must contain at least one point")
    return np.asarray(-0.5 * omega + omega * np.arange(n_points) / n_points)


def thread_count(requested: int | None = None) -> int:
    """Worker count, capped by the NHFP_THREADS environment variable."""
    count = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV_VAR, "")
    if cap.strip():
        try:
            count = min(count, int(cap))
        except ValueError:
            raise InvalidArgumentError(f"{THREADS_ENV_VAR} must be an integer, got {cap!r}")
    return max(1, count)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int | None = None) -> List[R]:
    """Map fn over items with a thread pool; results keep the input order."""
    workers = thread_count(threads)
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sublattice_from_name(name: str) -> Sublattice:
    """Parse 'A'/'B' (case-insensitive) into a Sublattice."""
    lookup: Dict[str, Sublattice] = {v: k for k, v in SUBLATTICE_NAMES.items()}
    try:
        return lookup[name.strip().upper()]
    except KeyError:
        raise InvalidArgumentError(f"Unknown sublattice {name!r}, expected A or B")
