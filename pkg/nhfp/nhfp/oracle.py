"""Truncation-free quasienergies from the one-period monodromy matrix"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from nhfp.floquet import FloquetSolver
from nhfp.model import DriveParams, bloch_matrices
from nhfp.nhfp_base import (
    DEFAULT_MONODROMY_STEPS,
    DEFAULT_N_HARMONICS,
    MIN_MONODROMY_STEPS,
    AbsorptionError,
    ComplexArray,
    FirstZoneModes,
    FloatArray,
    InvalidArgumentError,
    QuasienergySolver,
    circular_distance,
    fold,
    parallel_map,
)

logger = logging.getLogger(__name__)

ABSORPTION_TOL = 1e-12

HamiltonianFn = Callable[[FloatArray], ComplexArray]
ExponentialFn = Callable[[ComplexArray, FloatArray], ComplexArray]


@dataclass(frozen=True)
class Monodromy:
    k: float
    matrix: ComplexArray
    steps: int


@dataclass(frozen=True)
class CrossCheckReport:
    """Floquet-matrix modes compared against monodromy modes"""

    k_grid: FloatArray
    max_deviation: float
    min_overlap: float
    deviations: FloatArray


# ==============================================================================
# TIME-ORDERED PRODUCTS
# ==============================================================================
def expm_2x2(hamiltonians: ComplexArray, dt: FloatArray) -> ComplexArray:
    """exp(-i dt H) for a stack of 2x2 matrices.

    H = a I + K with K traceless, K^2 = -det(K) I.
    """
    a = 0.5 * (hamiltonians[:, 0, 0] + hamiltonians[:, 1, 1])
    k = hamiltonians.copy()
    k[:, 0, 0] -= a
    k[:, 1, 1] -= a
    q = np.sqrt(k[:, 0, 0] ** 2 + k[:, 0, 1] * k[:, 1, 0])
    theta = dt * q
    cos_t = np.cos(theta)
    sinc_t = np.sinc(theta / np.pi)
    out = -1j * (dt * sinc_t)[:, None, None] * k
    out[:, 0, 0] += cos_t
    out[:, 1, 1] += cos_t
    return np.asarray(np.exp(-1j * dt * a)[:, None, None] * out)


def expm_batched(hamiltonians: ComplexArray, dt: FloatArray) -> ComplexArray:
    """exp(-i dt H) for a stack of dense matrices"""
    return np.asarray(scipy.linalg.expm(-1j * dt[:, None, None] * hamiltonians))


def _ordered_product(mats: ComplexArray) -> ComplexArray:
    """M[n-1] @ ... @ M[1] @ M[0] by pairwise reduction"""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            paired = mats[1::2] @ mats[0:-1:2]
            mats = np.concatenate([paired, mats[-1:]])
        else:
            mats = mats[1::2] @ mats[0::2]
    return np.asarray(mats[0])


def _slices(
    period: float, breakpoints: Sequence[float], steps: int
) -> tuple[FloatArray, FloatArray]:
    """Midpoints and widths of slices whose edges include every breakpoint"""
    edges = np.unique(np.concatenate(([0.0], np.asarray(breakpoints, float), [period])))
    edges = edges[(edges >= 0.0) & (edges <= period)]
    widths = np.diff(edges)
    widths_ok = widths > 1e-15 * period
    starts, lengths = edges[:-1][widths_ok], widths[widths_ok]
    counts = np.maximum(1, np.round(steps * lengths / period).astype(int))
    mids = []
    dts = []
    for start, length, count in zip(starts, lengths, counts):
        dt = length / count
        mids.append(start + dt * (np.arange(count) + 0.5))
        dts.append(np.full(count, dt))
    return np.concatenate(mids), np.concatenate(dts)


def time_ordered_product(
    hamiltonian_at: HamiltonianFn,
    period: float,
    breakpoints: Sequence[float],
    steps: int,
    exponentiate: ExponentialFn,
    richardson: bool = True,
) -> ComplexArray:
    """One-period propagator from midpoint exponentials.

    Slices never straddle a breakpoint. With richardson the result is
    (4 U(2n) - U(n)) / 3, cancelling the dt^2 error of the midpoint rule.
    """
    mids, dts = _slices(period, breakpoints, steps)
    coarse = _ordered_product(exponentiate(hamiltonian_at(mids), dts))
    if not richardson:
        return coarse
    fine_mids = np.concatenate([mids - 0.25 * dts, mids + 0.25 * dts])
    fine_dts = np.concatenate([0.5 * dts, 0.5 * dts])
    order = np.argsort(fine_mids, kind="stable")
    fine = _ordered_product(exponentiate(hamiltonian_at(fine_mids[order]), fine_dts[order]))
    return np.asarray((4.0 * fine - coarse) / 3.0)


def kink_times(params: DriveParams) -> FloatArray:
    """Instants in [0, T) where the loss switches on or off"""
    if params.u0 == 0.0:
        return np.empty(0)
    half = 0.5 * params.period
    first = ((0.5 * math.pi - params.phi) / params.omega) % half
    return np.asarray([first, first + half])


# ==============================================================================
# MONODROMY
# ==============================================================================
def monodromy(params: DriveParams, k: float, steps: int = DEFAULT_MONODROMY_STEPS) -> Monodromy:
    """U(T) of the Bloch Hamiltonian at momentum k"""
    if steps < MIN_MONODROMY_STEPS:
        raise InvalidArgumentError(f"steps must be >= {MIN_MONODROMY_STEPS}, got {steps}")

    def hamiltonian_at(times: FloatArray) -> ComplexArray:
        return bloch_matrices(params, k, times)

    matrix = time_ordered_product(
        hamiltonian_at, params.period, kink_times(params), steps, expm_2x2
    )
    return Monodromy(k=k, matrix=matrix, steps=steps)


def monodromy_eigensystem(
    m: Monodromy, omega: float
) -> tuple[npt.NDArray[np.complex128], ComplexArray, ComplexArray]:
    """Folded quasienergies, right vectors and biorthonormal duals, sorted by Re"""
    multipliers, right = scipy.linalg.eig(m.matrix)
    if np.min(np.abs(multipliers)) < ABSORPTION_TOL:
        raise AbsorptionError(f"monodromy eigenvalue {multipliers} at k={m.k:.6g} vanishes")
    period = 2.0 * math.pi / omega
    eps = 1j * np.log(multipliers) / period
    eps = fold(eps.real, omega) + 1j * eps.imag
    order = np.argsort(eps.real, kind="stable")
    right = right[:, order]
    left = np.linalg.inv(right).conj().T
    return eps[order], right, left


def quasienergies_from_monodromy(m: Monodromy, omega: float) -> npt.NDArray[np.complex128]:
    """eps = i log(mu) / T, real part folded into the first zone"""
    return monodromy_eigensystem(m, omega)[0]


class MonodromySolver(QuasienergySolver):
    """First-zone modes from the exact one-period propagator"""

    def __init__(
        self,
        params: DriveParams,
        steps: int = DEFAULT_MONODROMY_STEPS,
        logger: Optional[logging.Logger] = None,
        threads: Optional[int] = None,
    ):
        super().__init__(params.omega, threads)
        self.params = params
        self.steps = steps
        self.logger = logger or logging.getLogger(__name__)

    def modes(self, k: float) -> FirstZoneModes:
        eps, right, left = monodromy_eigensystem(monodromy(self.params, k, self.steps), self.omega)
        return FirstZoneModes(k=k, omega=self.omega, quasienergies=eps, right=right, left=left)


def cross_check(
    params: DriveParams,
    k_grid: Sequence[float],
    n_harmonics: int = DEFAULT_N_HARMONICS,
    steps: int = DEFAULT_MONODROMY_STEPS,
    threads: Optional[int] = None,
) -> CrossCheckReport:
    """Compare Floquet-matrix and monodromy modes over a momentum grid"""
    floquet = FloquetSolver(params, n_harmonics, threads=threads)
    oracle = MonodromySolver(params, steps, threads=threads)
    grid = np.asarray(k_grid, dtype=np.float64)

    def compare(k: float) -> tuple[float, float]:
        a = floquet.modes(k)
        b = oracle.modes(k)
        dist = np.hypot(
            circular_distance(
                a.quasienergies.real[:, None], b.quasienergies.real[None, :], params.omega
            ),
            a.quasienergies.imag[:, None] - b.quasienergies.imag[None, :],
        )
        rows, cols = linear_sum_assignment(dist)
        deviation = float(np.max(dist[rows, cols]))
        overlaps = []
        for i, j in zip(rows, cols):
            u = a.right[:, i]
            v = b.right[:, j]
            overlaps.append(abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))
        return deviation, float(min(overlaps))

    results = parallel_map(compare, [float(k) for k in grid], threads)
    deviations = np.array([r[0] for r in results])
    overlap = min(r[1] for r in results)
    logger.info(
        f"Cross-check over {grid.size} k-points: max deviation {np.max(deviations):.3g}, "
        f"min overlap {overlap:.12f}"
    )
    return CrossCheckReport(
        k_grid=grid,
        max_deviation=float(np.max(deviations)),
        min_overlap=overlap,
        deviations=deviations,
    )
