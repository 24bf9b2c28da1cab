"""Truncated non-Hermitian Floquet matrix, biorthogonal modes and band topology"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from nhfp.model import (
    DriveParams,
    HarmonicSet,
    SIGMA_Z,
    bloch_harmonics,
    drive_harmonics,
)
from nhfp.nhfp_base import (
    CONVERGENCE_STEP,
    CONVERGENCE_TOL,
    DEFAULT_E_POINTS,
    DEFAULT_K_POINTS,
    DEFAULT_N_HARMONICS,
    DEFAULT_REPLICAS,
    EXCEPTIONAL_POINT_TOL,
    FLOQUET_N_SAMPLES,
    GAP_CLOSURE_TOL,
    PAIRING_REL_TOL,
    SINGLE_BAND_TOL,
    SPECTRAL_BROADENING,
    TRACKING_MIN_OVERLAP,
    TRACKING_REFINE_LEVELS,
    WINDING_TOL,
    ZONE_SNAP_TOL,
    ComplexArray,
    DegenerateSpectrumError,
    ExceptionalPointError,
    FirstZoneModes,
    FloatArray,
    InvalidArgumentError,
    NhfpError,
    QuasienergySolver,
    Sublattice,
    TrackingError,
    TruncationError,
    WindingUndefinedError,
    circular_distance,
    fold,
    parallel_map,
    zone_energy_grid,
    zone_momentum_grid,
)

logger = logging.getLogger(__name__)


# ==============================================================================
@dataclass(frozen=True)
class FloquetEigensystem:
    """Eigenpairs of the truncated Floquet matrix at one momentum.

    Index of a vector component is 2*(n + N) + beta for harmonic n in [-N, N]
    and sublattice beta. Column i of left is paired with column i of right.
    """

    k: float
    n_harmonics: int
    omega: float
    quasienergies: ComplexArray
    right: ComplexArray
    left: ComplexArray

    @property
    def dimension(self) -> int:
        return int(self.quasienergies.shape[0])

    def harmonic_components(self, index: int, left: bool = False) -> ComplexArray:
        """Components u^n of one eigenvector, shape (2N+1, 2)"""
        vectors = self.left if left else self.right
        return np.asarray(vectors[:, index].reshape(2 * self.n_harmonics + 1, 2))

    def biorthonormality_residual(self) -> float:
        gram = self.left.conj().T @ self.right
        return float(np.max(np.abs(gram - np.eye(self.dimension))))


@dataclass(frozen=True)
class BandStructure:
    """Two continuity-tracked quasienergy bands over a momentum grid.

    Band 0 is the one with the larger net winding. unfolded holds the
    accumulated real part on the grid and closure the value reached at
    k_grid[0] + 2 pi / a0.
    """

    k_grid: FloatArray
    omega: float
    a0: float
    quasienergies: ComplexArray
    unfolded: FloatArray
    closure: FloatArray
    right: ComplexArray
    left: ComplexArray
    gap: float
    raw_windings: FloatArray

    @property
    def gap_closed(self) -> bool:
        return self.gap <= GAP_CLOSURE_TOL

    @property
    def residuals(self) -> FloatArray:
        return np.asarray(np.abs(self.raw_windings - np.round(self.raw_windings)))


@dataclass(frozen=True)
class SpectralMap:
    """Intensity I(E, k), shape (len(energies), len(k_grid))"""

    energies: FloatArray
    k_grid: FloatArray
    intensity: FloatArray
    omega: float
    normalized: bool
    source: str = "floquet"
    band: Optional[int] = None

    @property
    def energy_step(self) -> float:
        if self.energies.shape[0] > 1:
            return float(self.energies[1] - self.energies[0])
        return self.omega

    def peak_energies(self) -> FloatArray:
        """Energy of maximal intensity at every momentum"""
        return np.asarray(self.energies[np.argmax(self.intensity, axis=0)])


@dataclass(frozen=True)
class GapScanResult:
    omega_grid: FloatArray
    gamma_grid: FloatArray
    gap: FloatArray
    flags: List[List[str]]
    threshold: FloatArray
    n_harmonics: int


# ==============================================================================
# FLOQUET MATRIX
# ==============================================================================
@lru_cache(maxsize=64)
def _floquet_harmonics(params: DriveParams, m_max: int) -> HarmonicSet:
    return drive_harmonics(params, m_max=m_max, n_samples=FLOQUET_N_SAMPLES)


def build_floquet_matrix(
    params: DriveParams,
    k: float,
    n_harmonics: int = DEFAULT_N_HARMONICS,
    harmonics: Optional[HarmonicSet] = None,
) -> ComplexArray:
    """Assemble the D x D Floquet matrix, D = 2(2N+1).

    The (n, l) block is the (n - l)-th harmonic of H_k(t) minus n*omega on
    the diagonal blocks.
    """
    if n_harmonics < 1:
        raise InvalidArgumentError(f"n_harmonics must be >= 1, got {n_harmonics}")
    m_max = 2 * n_harmonics
    if harmonics is None:
        harmonics = _floquet_harmonics(params, m_max)
    h_m = bloch_harmonics(harmonics, k, params.a0, m_max)
    n = np.arange(-n_harmonics, n_harmonics + 1)
    blocks = h_m[n[:, None] - n[None, :] + m_max]
    dim = 2 * n.shape[0]
    matrix = blocks.transpose(0, 2, 1, 3).reshape(dim, dim)
    matrix[np.diag_indices(dim)] -= np.repeat(n, 2) * params.omega
    return np.asarray(matrix)


def diagonalize_biorthogonal(
    matrix: ComplexArray, k: float = 0.0, n_harmonics: int = 0, omega: float = 0.0
) -> FloquetEigensystem:
    """Right and paired left eigenvectors, scaled so that <left_i|right_j> = delta_ij"""
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError("matrix contains non-finite entries")
    norm = float(np.linalg.norm(matrix, 2)) or 1.0
    herm = matrix.conj().T
    if np.allclose(matrix, herm, rtol=0.0, atol=1e-14 * norm):
        values, vectors = scipy.linalg.eigh(0.5 * (matrix + herm))
        return FloquetEigensystem(
            k=k,
            n_harmonics=n_harmonics,
            omega=omega,
            quasienergies=values.astype(np.complex128),
            right=vectors,
            left=vectors.copy(),
        )

    values, right = scipy.linalg.eig(matrix)
    adjoint_values, left = scipy.linalg.eig(herm)
    cost = np.abs(values[:, None] - np.conj(adjoint_values)[None, :])
    tol = PAIRING_REL_TOL * norm
    ambiguous = np.count_nonzero(cost < tol, axis=1)
    if np.any(ambiguous > 1):
        i = int(np.argmax(ambiguous))
        raise DegenerateSpectrumError(
            f"{int(ambiguous[i])} adjoint eigenvalues within {tol:.3g} of {values[i]:.12g}"
        )
    rows, cols = linear_sum_assignment(cost)
    order = np.empty_like(cols)
    order[rows] = cols
    worst_pair = float(np.max(cost[rows, cols]))
    if worst_pair > tol:
        raise DegenerateSpectrumError(
            f"left and right spectra do not pair up "
            f"(mismatch {worst_pair:.3g}, tolerance {tol:.3g})"
        )
    left = left[:, order]

    right = right / np.linalg.norm(right, axis=0)
    left = left / np.linalg.norm(left, axis=0)
    overlap = np.einsum("ij,ij->j", left.conj(), right)
    worst = int(np.argmin(np.abs(overlap)))
    if abs(overlap[worst]) < EXCEPTIONAL_POINT_TOL:
        raise ExceptionalPointError(
            f"|<left|right>| = {abs(overlap[worst]):.3g} at eigenvalue {values[worst]:.12g}"
        )
    left = left / np.conj(overlap)
    return FloquetEigensystem(
        k=k, n_harmonics=n_harmonics, omega=omega, quasienergies=values, right=right, left=left
    )


def _shift_harmonics(components: ComplexArray, shift: int) -> ComplexArray:
    """u'^n = u^(n + shift) with zeros outside the window"""
    out = np.zeros_like(components)
    size = components.shape[0]
    if shift >= 0:
        out[: size - shift] = components[shift:]
    else:
        out[-shift:] = components[: size + shift]
    return out


def first_zone_modes(
    eigensystem: FloquetEigensystem,
    omega: Optional[float] = None,
    zone_tol: float = ZONE_SNAP_TOL,
) -> FirstZoneModes:
    """Pick the two physical modes whose quasienergy lies in the first zone.

    Returns folded quasienergies, phi(0) = sum_n u^n and its dual, ordered by
    folded real part.
    """
    omega = eigensystem.omega if omega is None else omega
    values = eigensystem.quasienergies
    in_zone = np.flatnonzero(
        (values.real >= -0.5 * omega - zone_tol) & (values.real < 0.5 * omega - zone_tol)
    )
    if in_zone.shape[0] != 2:
        raise TruncationError(
            f"{in_zone.shape[0]} quasienergies in the first zone at k={eigensystem.k:.6g} "
            f"with N_h={eigensystem.n_harmonics}, expected 2"
        )
    folded_re = fold(values[in_zone].real, omega)
    order = np.argsort(folded_re, kind="stable")
    chosen = in_zone[order]

    quasienergies = np.empty(2, dtype=np.complex128)
    right = np.empty((2, 2), dtype=np.complex128)
    harmonics = np.empty((2, 2 * eigensystem.n_harmonics + 1, 2), dtype=np.complex128)
    for band, index in enumerate(chosen):
        eps = values[index]
        shift = int(round((fold(eps.real, omega) - eps.real) / omega))
        quasienergies[band] = eps + shift * omega
        u = eigensystem.harmonic_components(index)
        right[:, band] = u.sum(axis=0)
        harmonics[band] = _shift_harmonics(u, shift)
    # the dual basis of two vectors in C^2 is unique
    unit = right / np.linalg.norm(right, axis=0)
    if abs(np.linalg.det(unit)) < EXCEPTIONAL_POINT_TOL:
        raise ExceptionalPointError(f"physical modes coalesce at k={eigensystem.k:.6g}")
    left = np.linalg.inv(right).conj().T
    return FirstZoneModes(
        k=eigensystem.k,
        omega=omega,
        quasienergies=quasienergies,
        right=right,
        left=left,
        harmonics=harmonics,
    )


class FloquetSolver(QuasienergySolver):
    """First-zone modes from the truncated Floquet matrix"""

    def __init__(
        self,
        params: DriveParams,
        n_harmonics: int = DEFAULT_N_HARMONICS,
        logger: Optional[logging.Logger] = None,
        threads: Optional[int] = None,
    ):
        super().__init__(params.omega, threads)
        self.params = params
        self.n_harmonics = n_harmonics
        self.logger = logger or logging.getLogger(__name__)

    def eigensystem(self, k: float) -> FloquetEigensystem:
        matrix = build_floquet_matrix(self.params, k, self.n_harmonics)
        return diagonalize_biorthogonal(matrix, k, self.n_harmonics, self.params.omega)

    def modes(self, k: float) -> FirstZoneModes:
        return first_zone_modes(self.eigensystem(k), self.params.omega)


def check_truncation(
    params: DriveParams, k: float = 0.0, n_harmonics: int = DEFAULT_N_HARMONICS
) -> float:
    """Largest first-zone quasienergy change when N_h grows by CONVERGENCE_STEP"""
    low = FloquetSolver(params, n_harmonics).quasienergies(k)
    high = FloquetSolver(params, n_harmonics + CONVERGENCE_STEP).quasienergies(k)
    best = math.inf
    for perm in ((0, 1), (1, 0)):
        diff = high[list(perm)] - low
        dist = np.hypot(circular_distance(diff.real, 0.0, params.omega), diff.imag)
        best = min(best, float(np.max(dist)))
    return best


def expansion_coefficients(modes: FirstZoneModes, psi0: npt.ArrayLike) -> ComplexArray:
    """C_alpha = <phi~_alpha(0)|psi0>"""
    psi = np.asarray(psi0, dtype=np.complex128)
    if psi.shape != (2,):
        raise InvalidArgumentError(f"psi0 must be a 2-component amplitude, got shape {psi.shape}")
    return np.asarray(modes.left.conj().T @ psi)


def input_state(sublattice: Sublattice) -> ComplexArray:
    psi = np.zeros(2, dtype=np.complex128)
    psi[int(sublattice)] = 1.0
    return psi


# ==============================================================================
# BAND TRACKING
# ==============================================================================
def _closure_modes(modes: FirstZoneModes, a0: float) -> FirstZoneModes:
    """Modes at k + 2 pi / a0, where H(k + G) = sz H(k) sz"""
    harmonics = None if modes.harmonics is None else modes.harmonics @ SIGMA_Z
    return FirstZoneModes(
        k=modes.k + 2.0 * math.pi / a0,
        omega=modes.omega,
        quasienergies=modes.quasienergies,
        right=SIGMA_Z @ modes.right,
        left=SIGMA_Z @ modes.left,
        harmonics=harmonics,
    )


def _overlap_scores(first: FirstZoneModes, second: FirstZoneModes) -> FloatArray:
    """Gauge-invariant |<phi~_a|phi_b'><phi~_b'|phi_a>|"""
    cross = first.left.conj().T @ second.right
    back = second.left.conj().T @ first.right
    return np.asarray(np.abs(cross * back.T))


def _link(
    solver: QuasienergySolver,
    first: FirstZoneModes,
    second: FirstZoneModes,
    depth: int,
) -> Tuple[npt.NDArray[np.intp], FloatArray]:
    """Band permutation and unfolded real-part increments between two momenta"""
    omega = solver.omega
    scores = _overlap_scores(first, second)
    rows, cols = linear_sum_assignment(-scores)
    perm = np.empty(2, dtype=np.intp)
    perm[rows] = cols
    best = float(np.min(scores[rows, cols]))
    delta = fold(second.quasienergies.real[perm] - first.quasienergies.real, omega)
    if best >= TRACKING_MIN_OVERLAP and np.all(np.abs(delta) < 0.25 * omega):
        return perm, delta
    if depth >= TRACKING_REFINE_LEVELS:
        raise TrackingError(0.5 * (first.k + second.k), best)
    k_mid = 0.5 * (first.k + second.k)
    middle = solver.modes(k_mid)
    perm1, delta1 = _link(solver, first, middle, depth + 1)
    perm2, delta2 = _link(solver, middle, second, depth + 1)
    return perm2[perm1], delta1 + delta2[perm1]


def track_gap(unfolded: FloatArray, closure: FloatArray, omega: float) -> float:
    """Splitting across the zone edge E = +-omega/2 between two unfolded tracks.

    Zero once a band crosses the zone edge or the two bands coincide.
    Crossings inside the zone, around E = 0, leave the edge gap open.
    """
    tracks = np.vstack([unfolded, closure])
    zone = np.floor((tracks + 0.5 * omega) / omega)
    if np.any(zone != zone[0]):
        return 0.0
    folded = fold(tracks, omega)
    spread = np.abs(folded[:, 0] - folded[:, 1])
    if np.any(spread == 0.0):
        return 0.0
    return float(np.min(omega - spread))


def band_structure(
    params: DriveParams,
    k_grid: Optional[Sequence[float]] = None,
    n_harmonics: int = DEFAULT_N_HARMONICS,
    solver: Optional[QuasienergySolver] = None,
    log: Optional[logging.Logger] = None,
    threads: Optional[int] = None,
) -> BandStructure:
    """Track both bands across the zone and fill gap and windings"""
    log = log or logger
    grid = (
        zone_momentum_grid(DEFAULT_K_POINTS, params.a0)
        if k_grid is None
        else np.asarray(k_grid, float)
    )
    if grid.ndim != 1 or grid.shape[0] < 2:
        raise InvalidArgumentError("k grid must contain at least two momenta")
    if np.any(np.diff(grid) <= 0.0):
        raise InvalidArgumentError("k grid must be strictly ascending")
    if grid[-1] - grid[0] >= 2.0 * math.pi / params.a0:
        raise InvalidArgumentError("k grid must span less than one reciprocal lattice vector")
    if solver is None:
        solver = FloquetSolver(params, n_harmonics, logger=log, threads=threads)
    log.info(f"Band structure: {grid.shape[0]} k-points, solver {type(solver).__name__}")

    modes = solver.modes_on_grid(grid)
    modes.append(_closure_modes(modes[0], params.a0))
    n_k = grid.shape[0]

    index = np.empty((n_k + 1, 2), dtype=np.intp)
    unfolded = np.empty((n_k + 1, 2))
    index[0] = (0, 1)
    unfolded[0] = modes[0].quasienergies.real
    for i in range(n_k):
        perm, delta = _link(solver, modes[i], modes[i + 1], 0)
        index[i + 1] = perm[index[i]]
        unfolded[i + 1] = unfolded[i] + delta[index[i]]

    raw = (unfolded[-1] - unfolded[0]) / params.omega
    first_re = unfolded[0]
    band_order = sorted(range(2), key=lambda b: (-round(raw[b]), first_re[b]))

    quasienergies = np.empty((n_k, 2), dtype=np.complex128)
    right = np.empty((n_k, 2, 2), dtype=np.complex128)
    left = np.empty((n_k, 2, 2), dtype=np.complex128)
    for i in range(n_k):
        idx = index[i, band_order]
        quasienergies[i] = modes[i].quasienergies[idx]
        right[i] = modes[i].right[:, idx]
        left[i] = modes[i].left[:, idx]
    tracks = unfolded[:, band_order]
    gap = track_gap(tracks[:-1], tracks[-1], params.omega)
    structure = BandStructure(
        k_grid=grid,
        omega=params.omega,
        a0=params.a0,
        quasienergies=quasienergies,
        unfolded=np.asarray(tracks[:-1]),
        closure=np.asarray(tracks[-1]),
        right=right,
        left=left,
        gap=gap,
        raw_windings=np.asarray(raw[band_order]),
    )
    log.info(
        f"Gap G={gap:.6g} ({'closed' if structure.gap_closed else 'open'}), "
        f"raw windings {structure.raw_windings[0]:+.4f}, {structure.raw_windings[1]:+.4f}"
    )
    return structure


def gap(structure: BandStructure) -> float:
    """Gap G of the band structure at the zone edge"""
    return track_gap(structure.unfolded, structure.closure, structure.omega)


def winding_number(structure: BandStructure, band: int) -> Tuple[int, float]:
    """Net number of times a band wraps the quasienergy zone"""
    raw = float(structure.raw_windings[band])
    residual = abs(raw - round(raw))
    if residual > WINDING_TOL:
        raise WindingUndefinedError(band, raw, residual)
    return int(round(raw)), residual


def decay_rates(structure: BandStructure) -> FloatArray:
    """Gamma = -2 Im(eps), shape (len(k_grid), 2)"""
    return np.asarray(-2.0 * structure.quasienergies.imag)


# ==============================================================================
# GAP SCAN
# ==============================================================================
def select_n_harmonics(
    template: DriveParams,
    omega_grid: Sequence[float],
    gamma_grid: Sequence[float],
    candidates: Sequence[int] = (10, 15, 20, 25, 30, 35, DEFAULT_N_HARMONICS),
) -> int:
    """Smallest N_h whose +5 change stays below the convergence tolerance.

    Tested at the hardest corner of the scan, lowest omega and largest loss.
    """
    params = replace(template, omega=float(min(omega_grid)), gamma0=float(max(gamma_grid)))
    change = math.nan
    for n_h in candidates:
        change = check_truncation(params, 0.0, n_h)
        if change < CONVERGENCE_TOL:
            return n_h
    logger.warning(f"Truncation not converged at N_h={candidates[-1]} (change {change:.3g})")
    return candidates[-1]


def gap_scan(
    template: DriveParams,
    omega_grid: Sequence[float],
    gamma_grid: Sequence[float],
    k_points: int = 128,
    n_harmonics: Optional[int] = None,
    tol: float = GAP_CLOSURE_TOL,
    threads: Optional[int] = None,
    log: Optional[logging.Logger] = None,
) -> GapScanResult:
    """Gap G over an (omega, gamma0) grid plus the closure threshold per omega.

    Failed cells hold NaN and the exception class name as flag.
    """
    log = log or logger
    omegas = np.asarray(omega_grid, dtype=np.float64)
    gammas = np.asarray(gamma_grid, dtype=np.float64)
    if omegas.size == 0 or gammas.size == 0:
        raise InvalidArgumentError("gap scan grids must be nonempty")
    if n_harmonics is None:
        n_harmonics = select_n_harmonics(template, omegas, gammas)
    log.info(f"Gap scan: {omegas.size}x{gammas.size} cells, N_h={n_harmonics}")
    cells = [(float(w), float(g)) for w in omegas for g in gammas]

    def evaluate(cell: Tuple[float, float]) -> Tuple[float, str]:
        params = replace(template, omega=cell[0], gamma0=cell[1])
        try:
            grid = zone_momentum_grid(k_points, params.a0)
            structure = band_structure(params, grid, n_harmonics, log=log, threads=1)
        except NhfpError as exc:
            log.warning(f"Cell omega={cell[0]:.6g} gamma0={cell[1]:.6g} flagged: {exc}")
            return math.nan, type(exc).__name__
        return structure.gap, ""

    results = parallel_map(evaluate, cells, threads)
    gap_matrix = np.array([r[0] for r in results]).reshape(omegas.size, gammas.size)
    flat_flags = [r[1] for r in results]
    flags = [flat_flags[i * gammas.size : (i + 1) * gammas.size] for i in range(omegas.size)]

    threshold = np.full(omegas.size, math.nan)
    for i in range(omegas.size):
        seen_open = False
        for j in range(gammas.size):
            value = gap_matrix[i, j]
            if not math.isfinite(value):
                continue
            if value > tol:
                seen_open = True
            elif seen_open:
                threshold[i] = gammas[j]
                break
    return GapScanResult(
        omega_grid=omegas,
        gamma_grid=gammas,
        gap=gap_matrix,
        flags=flags,
        threshold=threshold,
        n_harmonics=n_harmonics,
    )


# ==============================================================================
# SPECTRAL DENSITY AND TRANSPORT
# ==============================================================================
def spectral_density(
    params: DriveParams,
    k_grid: Optional[Sequence[float]] = None,
    energies: Optional[Sequence[float]] = None,
    input_site: Sublattice = Sublattice.A,
    n_harmonics: int = DEFAULT_N_HARMONICS,
    eta: float = SPECTRAL_BROADENING,
    replicas: int = DEFAULT_REPLICAS,
    band: Optional[int] = None,
    normalize: bool = True,
    structure: Optional[BandStructure] = None,
    threads: Optional[int] = None,
) -> SpectralMap:
    """Population density I(E, k) of a single-sublattice input.

    Each band contributes C_a u_a^(r+j) / (E - j*omega - eps_a + i*eta)
    summed over replicas j; intensities add over zones r and sublattices.
    With band given, only that band of structure (or of the solver order
    when structure is None) is kept.
    """
    omega = params.omega
    grid = (
        zone_momentum_grid(DEFAULT_K_POINTS, params.a0)
        if k_grid is None
        else np.asarray(k_grid, float)
    )
    e_grid = zone_energy_grid(DEFAULT_E_POINTS, omega) if energies is None else np.asarray(
        energies, float
    )
    if grid.size == 0 or e_grid.size == 0:
        raise InvalidArgumentError("spectral grids must be nonempty")
    if eta < 0.0:
        raise InvalidArgumentError(f"eta must be >= 0, got {eta}")
    solver = FloquetSolver(params, n_harmonics, threads=threads)
    all_modes = solver.modes_on_grid(grid)
    psi0 = input_state(input_site)
    j = np.arange(-replicas, replicas + 1)
    size = 2 * n_harmonics + 1
    intensity = np.zeros((e_grid.size, grid.size))

    for ik, modes in enumerate(all_modes):
        assert modes.harmonics is not None
        coeffs = expansion_coefficients(modes, psi0)
        keep = np.abs(coeffs) >= SINGLE_BAND_TOL * max(float(np.max(np.abs(coeffs))), 1e-300)
        if band is not None:
            keep &= _band_mask(structure, modes, ik, band)
        if not np.any(keep) or float(np.max(np.abs(coeffs))) == 0.0:
            continue
        bands = np.flatnonzero(keep)
        eps = modes.quasienergies[bands]
        # weight[r, j, a, c] = C_a u_a^(r+j)[c]
        u = modes.harmonics[bands]
        r_idx = np.arange(size)[:, None] + j[None, :]
        valid = (r_idx >= 0) & (r_idx < size)
        shifted = u[:, np.clip(r_idx, 0, size - 1), :] * valid[None, :, :, None]
        weight = coeffs[bands][:, None, None, None] * shifted
        denom = e_grid[:, None, None] - j[None, :, None] * omega - eps[None, None, :] + 1j * eta
        amplitude = np.einsum("arjc,eja->erc", weight, 1.0 / denom)
        intensity[:, ik] = np.sum(np.abs(amplitude) ** 2, axis=(1, 2))

    if normalize:
        intensity = normalize_per_k(intensity, e_grid, omega)
    return SpectralMap(
        energies=e_grid,
        k_grid=grid,
        intensity=intensity,
        omega=omega,
        normalized=normalize,
        source="floquet",
        band=band,
    )


def _band_mask(
    structure: Optional[BandStructure], modes: FirstZoneModes, ik: int, band: int
) -> npt.NDArray[np.bool_]:
    mask = np.zeros(2, dtype=bool)
    if structure is None:
        mask[band] = True
        return mask
    target = structure.quasienergies[ik, band]
    mask[int(np.argmin(np.abs(modes.quasienergies - target)))] = True
    return mask


def normalize_per_k(intensity: FloatArray, energies: FloatArray, omega: float) -> FloatArray:
    step = float(energies[1] - energies[0]) if energies.size > 1 else omega
    weight = np.sum(intensity, axis=0) * step / omega
    scale = np.where(weight > 0.0, weight, 1.0)
    return np.asarray(intensity / scale[None, :])


def homogeneous_filling(
    structure: BandStructure, energies: Optional[Sequence[float]] = None, band: int = 0
) -> SpectralMap:
    """Unit population placed on one band at every momentum"""
    omega = structure.omega
    e_grid = zone_energy_grid(DEFAULT_E_POINTS, omega) if energies is None else np.asarray(
        energies, float
    )
    step = float(e_grid[1] - e_grid[0]) if e_grid.size > 1 else omega
    intensity = np.zeros((e_grid.size, structure.k_grid.size))
    folded = fold(structure.quasienergies[:, band].real, omega)
    nearest = np.argmin(circular_distance(e_grid[:, None], folded[None, :], omega), axis=0)
    intensity[nearest, np.arange(structure.k_grid.size)] = omega / step
    return SpectralMap(
        energies=e_grid,
        k_grid=structure.k_grid,
        intensity=intensity,
        omega=omega,
        normalized=True,
        source="filling",
        band=band,
    )


def group_velocity(structure: BandStructure, band: int) -> FloatArray:
    """d Re(eps) / dk by centered differences on the periodically extended band"""
    period_k = 2.0 * math.pi / structure.a0
    k = structure.k_grid
    u = structure.unfolded[:, band]
    end = structure.closure[band]
    u_ext = np.concatenate(([u[-1] - (end - u[0])], u, [end]))
    k_ext = np.concatenate(([k[-1] - period_k], k, [k[0] + period_k]))
    return np.asarray((u_ext[2:] - u_ext[:-2]) / (k_ext[2:] - k_ext[:-2]))


def pumped_shift(structure: BandStructure, spectral_map: SpectralMap, band: int) -> float:
    """Displacement per cycle L/a0 carried by one band"""
    if spectral_map.k_grid.shape != structure.k_grid.shape or not np.allclose(
        spectral_map.k_grid, structure.k_grid
    ):
        raise InvalidArgumentError("spectral map and band structure use different momenta")
    period_k = 2.0 * math.pi / structure.a0
    k = structure.k_grid
    k_ext = np.concatenate(([k[-1] - period_k], k, [k[0] + period_k]))
    dk = 0.5 * (k_ext[2:] - k_ext[:-2])
    velocity = group_velocity(structure, band)
    occupation = np.sum(spectral_map.intensity, axis=0) * spectral_map.energy_step / structure.omega
    period = 2.0 * math.pi / structure.omega
    shift = np.sum(occupation * dk * structure.a0 / (2.0 * math.pi) * velocity * period)
    return float(shift / structure.a0)


def green_function(
    eigensystem: FloquetEigensystem, energy: complex, eta: float = 0.0
) -> ComplexArray:
    """Spectral representation sum_g |u_g><u~_g| / (E - eps_g + i*eta)"""
    poles = 1.0 / (energy - eigensystem.quasienergies + 1j * eta)
    return np.asarray((eigensystem.right * poles[None, :]) @ eigensystem.left.conj().T)
