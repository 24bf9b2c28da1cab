"""Real-space propagation of single-site excitations"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import numpy.typing as npt

from nhfp.floquet import FloquetSolver, SpectralMap, normalize_per_k
from nhfp.model import DriveParams, RealspaceLattice, drive_at
from nhfp.nhfp_base import (
    BOUNDARY_CELLS,
    BOUNDARY_MARGIN_CELLS,
    BOUNDARY_REL_TOL,
    DEFAULT_E_POINTS,
    DEFAULT_MONODROMY_STEPS,
    DEFAULT_N_CELLS,
    DEFAULT_N_CYCLES,
    DEFAULT_N_HARMONICS,
    DEFAULT_STEPS_PER_CYCLE,
    DEFAULT_STORE_PER_CYCLE,
    LIGHT_CONE_CELLS_PER_CYCLE,
    MIN_STEPS_PER_CYCLE,
    NORM_STEP_TOL,
    ComplexArray,
    FloatArray,
    IntegratorError,
    InvalidArgumentError,
    LatticeTooSmallError,
    Sublattice,
    fold,
    zone_energy_grid,
    zone_momentum_grid,
)
from nhfp.oracle import expm_batched, kink_times, time_ordered_product

logger = logging.getLogger(__name__)

SPECTRUM_REPLICAS = 4
MIN_SPECTRUM_CYCLES = 4


@dataclass(frozen=True)
class Trajectory:
    """Site amplitudes of one propagation, amplitudes[s, site] at times[s]"""

    params: DriveParams
    n_cells: int
    input_cell: int
    input_sublattice: Sublattice
    times: FloatArray
    positions: FloatArray
    amplitudes: ComplexArray
    steps_per_cycle: int
    store_per_cycle: int
    periodic: bool = False

    @property
    def n_cycles(self) -> int:
        return (self.times.shape[0] - 1) // self.store_per_cycle

    def norms(self) -> FloatArray:
        return np.asarray(np.sum(np.abs(self.amplitudes) ** 2, axis=1))

    def cycle_indices(self) -> npt.NDArray[np.intp]:
        """Stored-sample indices at t = 0, T, 2T, ..."""
        return np.arange(self.n_cycles + 1) * self.store_per_cycle


@dataclass(frozen=True)
class CenterOfMass:
    """<x>(t) in unit cells, relative to the injected site"""

    times: FloatArray
    positions: FloatArray
    cycle_times: FloatArray
    cycle_positions: FloatArray


@dataclass(frozen=True)
class NormDecay:
    rate: float
    residual: float


def _suggested_cells(n_cycles: int) -> int:
    return 2 * (LIGHT_CONE_CELLS_PER_CYCLE * n_cycles + BOUNDARY_MARGIN_CELLS + BOUNDARY_CELLS) + 1


def propagate(
    params: DriveParams,
    n_cells: int = DEFAULT_N_CELLS,
    input_cell: Optional[int] = None,
    sublattice: Sublattice = Sublattice.A,
    n_cycles: int = DEFAULT_N_CYCLES,
    steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE,
    store_per_cycle: int = DEFAULT_STORE_PER_CYCLE,
    initial_state: Optional[ComplexArray] = None,
    periodic: bool = False,
    log: Optional[logging.Logger] = None,
) -> Trajectory:
    """Fixed-step RK4 integration of i dpsi/dt = H(t) psi.

    The initial state is a unit amplitude on the input site unless
    initial_state is given.
    """
    log = log or logger
    if steps_per_cycle < MIN_STEPS_PER_CYCLE:
        raise InvalidArgumentError(
            f"steps_per_cycle must be >= {MIN_STEPS_PER_CYCLE}, got {steps_per_cycle}"
        )
    if n_cycles < 1:
        raise InvalidArgumentError(f"n_cycles must be >= 1, got {n_cycles}")
    if store_per_cycle < 1 or steps_per_cycle % store_per_cycle:
        raise InvalidArgumentError(
            f"store_per_cycle ({store_per_cycle}) must divide steps_per_cycle ({steps_per_cycle})"
        )
    lattice = RealspaceLattice(params, n_cells, periodic=periodic)
    cell = n_cells // 2 if input_cell is None else input_cell
    site = lattice.site_index(cell, sublattice)
    if not periodic:
        margin = min(cell, n_cells - 1 - cell) - LIGHT_CONE_CELLS_PER_CYCLE * n_cycles
        if margin < BOUNDARY_MARGIN_CELLS:
            raise LatticeTooSmallError(
                f"light cone of {n_cycles} cycles from cell {cell} reaches the boundary",
                _suggested_cells(n_cycles),
            )

    if initial_state is None:
        psi = np.zeros(lattice.n_sites, dtype=np.complex128)
        psi[site] = 1.0
    else:
        psi = np.array(initial_state, dtype=np.complex128)
        if psi.shape != (lattice.n_sites,):
            raise InvalidArgumentError(
                f"initial state has shape {psi.shape}, expected ({lattice.n_sites},)"
            )

    total = n_cycles * steps_per_cycle
    dt = params.period / steps_per_cycle
    # couplings on the half-step grid t = s*dt/2
    d = drive_at(params, 0.5 * dt * np.arange(2 * total + 1))
    j1 = d.j1
    j2 = d.j2
    onsite_a = d.onsite(Sublattice.A)
    onsite_b = d.onsite(Sublattice.B)

    def rhs(state: ComplexArray, s: int) -> ComplexArray:
        return -1j * lattice.apply(state, j1[s], j2[s], onsite_a[s], onsite_b[s])

    stride = steps_per_cycle // store_per_cycle
    stored = [psi.copy()]
    edge = BOUNDARY_CELLS * 2
    log.info(
        f"Propagating {n_cells} cells for {n_cycles} cycles, dt={dt:.4g}, "
        f"input cell {cell} sublattice {sublattice.name}"
    )
    for step in range(total):
        s = 2 * step
        k1 = rhs(psi, s)
        k2 = rhs(psi + 0.5 * dt * k1, s + 1)
        k3 = rhs(psi + 0.5 * dt * k2, s + 1)
        k4 = rhs(psi + dt * k3, s + 2)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (step + 1) % stride:
            continue
        if not np.all(np.isfinite(psi)):
            raise IntegratorError(f"non-finite amplitudes at t={(step + 1) * dt:.6g}")
        if not periodic:
            peak = float(np.max(np.abs(psi)))
            boundary = max(float(np.max(np.abs(psi[:edge]))), float(np.max(np.abs(psi[-edge:]))))
            if boundary >= BOUNDARY_REL_TOL * peak:
                raise LatticeTooSmallError(
                    f"boundary amplitude {boundary:.3g} exceeds {BOUNDARY_REL_TOL:g} of peak "
                    f"at t={(step + 1) * dt:.6g}",
                    max(_suggested_cells(n_cycles), 2 * n_cells + 1),
                )
        stored.append(psi.copy())

    amplitudes = np.array(stored)
    norms = np.sum(np.abs(amplitudes) ** 2, axis=1)
    growth = float(np.max(np.diff(norms), initial=0.0))
    if growth > NORM_STEP_TOL:
        log.warning(f"Norm grew by {growth:.3g} between stored steps")
    times = dt * stride * np.arange(amplitudes.shape[0])
    return Trajectory(
        params=params,
        n_cells=n_cells,
        input_cell=cell,
        input_sublattice=sublattice,
        times=times,
        positions=lattice.positions,
        amplitudes=amplitudes,
        steps_per_cycle=steps_per_cycle,
        store_per_cycle=store_per_cycle,
        periodic=periodic,
    )


def center_of_mass(trajectory: Trajectory) -> CenterOfMass:
    """Density-weighted mean position, sublattice offsets included"""
    density = np.abs(trajectory.amplitudes) ** 2
    origin = trajectory.input_cell + 0.5 * int(trajectory.input_sublattice)
    com = density @ (trajectory.positions - origin) / np.sum(density, axis=1)
    cycles = trajectory.cycle_indices()
    return CenterOfMass(
        times=trajectory.times,
        positions=np.asarray(com),
        cycle_times=trajectory.times[cycles],
        cycle_positions=np.asarray(com[cycles]),
    )


def per_cycle_displacement(com: CenterOfMass, first_cycle: int = 1) -> float:
    """Least-squares slope of <x>(nT) over n >= first_cycle, in cells per cycle"""
    cycles = np.arange(com.cycle_positions.shape[0])
    use = cycles >= first_cycle
    if np.count_nonzero(use) < 2:
        raise InvalidArgumentError("need at least two integer-period samples for a slope")
    return float(np.polyfit(cycles[use], com.cycle_positions[use], 1)[0])


def norm_decay(trajectory: Trajectory, first_cycle: int = 1) -> NormDecay:
    """Fit <psi|psi> = exp(-Gamma t) on integer-period samples"""
    norms = trajectory.norms()
    growth = float(np.max(np.diff(norms), initial=0.0))
    if growth > NORM_STEP_TOL:
        raise IntegratorError(f"norm is not monotone (grew by {growth:.3g})")
    cycles = trajectory.cycle_indices()[first_cycle:]
    if cycles.shape[0] < 2:
        raise InvalidArgumentError("trajectory too short for a decay fit")
    t = trajectory.times[cycles]
    log_norm = np.log(norms[cycles])
    coeffs, residuals, *_ = np.polyfit(t, log_norm, 1, full=True)
    residual = float(np.sqrt(residuals[0] / t.shape[0])) if residuals.size else 0.0
    return NormDecay(rate=float(-coeffs[0]), residual=residual)


def spacetime_spectrum(
    trajectory: Trajectory,
    energies: Optional[Sequence[float]] = None,
    k_grid: Optional[Sequence[float]] = None,
    replicas: int = SPECTRUM_REPLICAS,
    normalize: bool = True,
) -> SpectralMap:
    """Space-time Fourier intensity folded into the first Floquet-Bloch zone"""
    params = trajectory.params
    omega = params.omega
    if trajectory.n_cycles < MIN_SPECTRUM_CYCLES:
        raise InvalidArgumentError(
            f"space-time spectrum needs >= {MIN_SPECTRUM_CYCLES} cycles, got {trajectory.n_cycles}"
        )
    e_grid = zone_energy_grid(DEFAULT_E_POINTS, omega) if energies is None else np.asarray(
        energies, float
    )
    grid = (
        zone_momentum_grid(trajectory.n_cells, params.a0)
        if k_grid is None
        else np.asarray(k_grid, float)
    )
    x = trajectory.positions * params.a0
    intensity = np.zeros((e_grid.size, grid.size))
    dt = float(trajectory.times[1] - trajectory.times[0])
    # flat window, last sample excluded so the window spans whole periods
    times = trajectory.times[:-1]
    shifts = np.arange(-replicas, replicas + 1) * omega
    for sub in (0, 1):
        spatial = np.exp(-1j * np.outer(grid, x[sub::2]))
        psi_kt = trajectory.amplitudes[:-1, sub::2] @ spatial.T
        e_all = (e_grid[:, None] + shifts[None, :]).ravel()
        temporal = np.exp(1j * np.outer(e_all, times)) * dt
        psi_ek = (temporal @ psi_kt).reshape(e_grid.size, shifts.size, grid.size)
        intensity += np.sum(np.abs(psi_ek) ** 2, axis=1)
    if normalize:
        intensity = normalize_per_k(intensity, e_grid, omega)
    return SpectralMap(
        energies=e_grid,
        k_grid=grid,
        intensity=intensity,
        omega=omega,
        normalized=normalize,
        source="spacetime",
    )


# ==============================================================================
# RING STATES
# ==============================================================================
def floquet_mode_state(
    params: DriveParams,
    n_cells: int,
    k_index: int,
    band: int,
    n_harmonics: int = DEFAULT_N_HARMONICS,
) -> tuple[ComplexArray, complex]:
    """Ring state equal to one Floquet-Bloch mode phi(0), and its quasienergy"""
    lattice = RealspaceLattice(params, n_cells, periodic=True)
    k_raw = 2.0 * math.pi * k_index / (n_cells * params.a0)
    k = float(fold(k_raw, 2.0 * math.pi / params.a0))
    modes = FloquetSolver(params, n_harmonics).modes(k)
    x = lattice.positions * params.a0
    phases = np.exp(1j * k * x)
    state = np.tile(modes.right[:, band], n_cells) * phases
    state /= np.linalg.norm(state)
    return np.asarray(state), complex(modes.quasienergies[band])


def ring_monodromy(
    params: DriveParams, n_cells: int = 8, steps: int = DEFAULT_MONODROMY_STEPS
) -> ComplexArray:
    """One-period propagator of a ring from batched matrix exponentials"""
    lattice = RealspaceLattice(params, n_cells, periodic=True)
    return time_ordered_product(
        lattice.dense_hamiltonians, params.period, kink_times(params), steps, expm_batched
    )
