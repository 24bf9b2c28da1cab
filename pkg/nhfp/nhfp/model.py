"""Drive protocol and Hamiltonians of the driven lossy Rice-Mele chain"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
import numpy.typing as npt
import scipy.fft
import scipy.sparse

from nhfp.nhfp_base import (
    DEFAULT_M_MAX,
    DEFAULT_N_SAMPLES,
    ComplexArray,
    FloatArray,
    InvalidArgumentError,
    Sublattice,
)

logger = logging.getLogger(__name__)

COUPLING_NAMES = ["j1", "j2", "ua", "ub", "ga", "gb"]
SMOOTH_COUPLINGS = ["j1", "j2", "ua", "ub"]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class DriveParams:
    """Parameters of the driven lossy Rice-Mele model, energies in units of J0"""

    u0: float = 1.0
    j0: float = 1.0
    lam: float = 1.75
    gamma0: float = 0.4
    phi: float = 0.0
    omega: float = 1.1
    a0: float = 1.0

    def __post_init__(self) -> None:
        values = {
            "u0": self.u0,
            "j0": self.j0,
            "lambda": self.lam,
            "gamma0": self.gamma0,
            "phi": self.phi,
            "omega": self.omega,
            "a0": self.a0,
        }
        for name, value in values.items():
            if not math.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite, got {value}")
        if self.u0 < 0.0:
            raise InvalidArgumentError(f"u0 must be >= 0, got {self.u0}")
        if self.gamma0 < 0.0:
            raise InvalidArgumentError(f"gamma0 must be >= 0, got {self.gamma0}")
        for name in ("j0", "lambda", "omega", "a0"):
            if values[name] <= 0.0:
                raise InvalidArgumentError(f"{name} must be > 0, got {values[name]}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def as_dict(self) -> Dict[str, float]:
        """Field names as used in run configurations"""
        return {
            "u0": self.u0,
            "J0": self.j0,
            "lambda": self.lam,
            "gamma0": self.gamma0,
            "phi": self.phi,
            "omega": self.omega,
            "a0": self.a0,
        }


@dataclass(frozen=True)
class DriveSample:
    """The six couplings at one instant (or arrays of them over a time grid)"""

    j1: npt.NDArray[np.float64]
    j2: npt.NDArray[np.float64]
    ua: npt.NDArray[np.float64]
    ub: npt.NDArray[np.float64]
    ga: npt.NDArray[np.float64]
    gb: npt.NDArray[np.float64]

    def onsite(self, sublattice: Sublattice) -> npt.NDArray[np.complex128]:
        """Complex onsite energy u - i*gamma of one sublattice"""
        if sublattice == Sublattice.A:
            return np.asarray(self.ua - 1j * self.ga)
        return np.asarray(self.ub - 1j * self.gb)


@dataclass(frozen=True)
class HamiltonianSample:
    k: float
    matrix: ComplexArray


@dataclass(frozen=True)
class DriveCycle:
    """The pumping loop over one period in (J1-J2, ua-ub, ga-gb) space"""

    times: FloatArray
    dj: FloatArray
    du: FloatArray
    dg: FloatArray


# ==============================================================================
# DRIVE
# ==============================================================================
def drive_at(params: DriveParams, t: npt.ArrayLike) -> DriveSample:
    """Evaluate all couplings from their closed forms.

    A sublattice loses only while its onsite energy is positive, with
    heaviside(0) = 0, so there is no loss at all when u0 = 0.
    """
    tt = np.asarray(t, dtype=np.float64)
    phase = params.omega * tt
    c = np.cos(phase + params.phi)
    s = np.sin(phase)
    ua = -params.u0 * c
    ub = params.u0 * c
    return DriveSample(
        j1=params.j0 * np.exp(-params.lam * (1.0 - s)),
        j2=params.j0 * np.exp(-params.lam * (1.0 + s)),
        ua=ua,
        ub=ub,
        ga=np.where(ua > 0.0, -params.gamma0 * c, 0.0),
        gb=np.where(ub > 0.0, params.gamma0 * c, 0.0),
    )


def drive_cycle(params: DriveParams, n_samples: int = 256) -> DriveCycle:
    """Sample the pumping loop uniformly over one period"""
    if n_samples < 2:
        raise InvalidArgumentError("drive cycle needs at least two samples")
    times = params.period * np.arange(n_samples) / n_samples
    d = drive_at(params, times)
    return DriveCycle(times=times, dj=d.j1 - d.j2, du=d.ua - d.ub, dg=d.ga - d.gb)


# ==============================================================================
# HAMILTONIANS
# ==============================================================================
def _bloch_from_sample(d: DriveSample, k: float, a0: float) -> ComplexArray:
    c = math.cos(0.5 * k * a0)
    s = math.sin(0.5 * k * a0)
    j1 = np.asarray(d.j1, dtype=np.complex128)
    j2 = np.asarray(d.j2, dtype=np.complex128)
    h = np.empty(j1.shape + (2, 2), dtype=np.complex128)
    # A at j*a0, B at j*a0 + a0/2, Bloch waves exp(ikx)
    h[..., 0, 1] = (j1 + j2) * c + 1j * (j1 - j2) * s
    h[..., 1, 0] = (j1 + j2) * c - 1j * (j1 - j2) * s
    h[..., 0, 0] = d.onsite(Sublattice.A)
    h[..., 1, 1] = d.onsite(Sublattice.B)
    return h


def bloch_hamiltonian(params: DriveParams, k: float, t: float) -> HamiltonianSample:
    """2x2 momentum-space Hamiltonian in (A, B) sublattice space"""
    matrix = _bloch_from_sample(drive_at(params, t), k, params.a0)
    return HamiltonianSample(k=k, matrix=matrix)


def bloch_matrices(params: DriveParams, k: float, times: npt.ArrayLike) -> ComplexArray:
    """Stack of Bloch Hamiltonians over a time grid, shape (len(times), 2, 2)"""
    return _bloch_from_sample(drive_at(params, np.atleast_1d(times)), k, params.a0)


def realspace_hamiltonian(
    params: DriveParams, n_cells: int, t: float, periodic: bool = False
) -> scipy.sparse.csr_matrix:
    """Banded real-space Hamiltonian, site 2j = A_j and 2j+1 = B_j"""
    return RealspaceLattice(params, n_cells, periodic=periodic).hamiltonian(t)


class RealspaceLattice:
    """Finite chain (or ring) of n_cells unit cells"""

    def __init__(self, params: DriveParams, n_cells: int, periodic: bool = False):
        if n_cells < 2:
            raise InvalidArgumentError(f"n_cells must be >= 2, got {n_cells}")
        self.params = params
        self.n_cells = n_cells
        self.periodic = periodic

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells

    @property
    def positions(self) -> FloatArray:
        """Site coordinates in units of a0"""
        cells = np.repeat(np.arange(self.n_cells, dtype=np.float64), 2)
        return np.asarray(cells + np.tile([0.0, 0.5], self.n_cells))

    def site_index(self, cell: int, sublattice: Sublattice) -> int:
        if not 0 <= cell < self.n_cells:
            raise InvalidArgumentError(f"cell {cell} outside lattice of {self.n_cells} cells")
        return 2 * cell + int(sublattice)

    def hamiltonian(self, t: float) -> scipy.sparse.csr_matrix:
        d = drive_at(self.params, t)
        n = self.n_sites
        diag = np.tile([complex(d.onsite(Sublattice.A)), complex(d.onsite(Sublattice.B))],
                       self.n_cells)
        bonds = np.tile([float(d.j1), float(d.j2)], self.n_cells)[: n - 1]
        h = scipy.sparse.diags(
            [bonds.astype(np.complex128), diag, bonds.astype(np.complex128)],
            [-1, 0, 1],
            shape=(n, n),
            format="lil",
            dtype=np.complex128,
        )
        if self.periodic:
            h[0, n - 1] = float(d.j2)
            h[n - 1, 0] = float(d.j2)
        return h.tocsr()

    def dense_hamiltonians(self, times: npt.ArrayLike) -> ComplexArray:
        """Dense Hamiltonians over a time grid, shape (len(times), n_sites, n_sites)"""
        d = drive_at(self.params, np.atleast_1d(times))
        n = self.n_sites
        h = np.zeros((d.j1.shape[0], n, n), dtype=np.complex128)
        h[:, np.arange(0, n, 2), np.arange(0, n, 2)] = d.onsite(Sublattice.A)[:, None]
        h[:, np.arange(1, n, 2), np.arange(1, n, 2)] = d.onsite(Sublattice.B)[:, None]
        a = np.arange(0, n, 2)
        h[:, a, a + 1] = d.j1[:, None]
        h[:, a + 1, a] = d.j1[:, None]
        b = np.arange(1, n - 1, 2)
        h[:, b, b + 1] = d.j2[:, None]
        h[:, b + 1, b] = d.j2[:, None]
        if self.periodic:
            h[:, 0, n - 1] = d.j2
            h[:, n - 1, 0] = d.j2
        return h

    def apply(
        self, psi: ComplexArray, j1: float, j2: float, onsite_a: complex, onsite_b: complex
    ) -> ComplexArray:
        """Matrix-free H @ psi for given couplings"""
        psi_a = psi[0::2]
        psi_b = psi[1::2]
        out = np.empty_like(psi)
        out_a = out[0::2]
        out_b = out[1::2]
        out_a[:] = onsite_a * psi_a + j1 * psi_b
        out_b[:] = onsite_b * psi_b + j1 * psi_a
        out_a[1:] += j2 * psi_b[:-1]
        out_b[:-1] += j2 * psi_a[1:]
        if self.periodic:
            out_a[0] += j2 * psi_b[-1]
            out_b[-1] += j2 * psi_a[0]
        return out


# ==============================================================================
# HARMONICS
# ==============================================================================
@dataclass(frozen=True)
class HarmonicSet:
    """Fourier coefficients c_m, m in [-m_max, m_max], of every coupling.

    Convention: f(t) = sum_m c_m exp(-i m omega t).
    """

    omega: float
    m_max: int
    coefficients: Dict[str, ComplexArray] = field(default_factory=dict)

    def coefficient(self, name: str, m: int) -> complex:
        if abs(m) > self.m_max:
            return 0j
        return complex(self.coefficients[name][m + self.m_max])

    def padded(self, name: str, m_max: int) -> ComplexArray:
        """Coefficients of one coupling over [-m_max, m_max], zero beyond self.m_max"""
        out = np.zeros(2 * m_max + 1, dtype=np.complex128)
        m = min(m_max, self.m_max)
        src = self.coefficients[name]
        out[m_max - m : m_max + m + 1] = src[self.m_max - m : self.m_max + m + 1]
        return out

    def evaluate(self, name: str, t: npt.ArrayLike) -> ComplexArray:
        """Reconstruct a coupling from its coefficients"""
        tt = np.atleast_1d(np.asarray(t, dtype=np.float64))
        m = np.arange(-self.m_max, self.m_max + 1)
        phases = np.exp(-1j * self.omega * np.outer(tt, m))
        return np.asarray(phases @ self.coefficients[name])

    def static_part(self) -> "HarmonicSet":
        """Same set with every m != 0 coefficient removed"""
        kept = {}
        for name, c in self.coefficients.items():
            only0 = np.zeros_like(c)
            only0[self.m_max] = c[self.m_max]
            kept[name] = only0
        return HarmonicSet(omega=self.omega, m_max=self.m_max, coefficients=kept)


def drive_harmonics(
    params: DriveParams, m_max: int = DEFAULT_M_MAX, n_samples: int = DEFAULT_N_SAMPLES
) -> HarmonicSet:
    """Fourier coefficients of every coupling from one uniformly sampled period"""
    if m_max < 0:
        raise InvalidArgumentError(f"m_max must be >= 0, got {m_max}")
    if n_samples < 4 * max(m_max, 1) or n_samples & (n_samples - 1):
        raise InvalidArgumentError(
            f"n_samples must be a power of two >= 4*m_max, got {n_samples} for m_max={m_max}"
        )
    times = params.period * np.arange(n_samples) / n_samples
    sample = drive_at(params, times)
    coefficients: Dict[str, ComplexArray] = {}
    m = np.arange(0, m_max + 1)
    for name in COUPLING_NAMES:
        # ifft carries the 1/N and the exp(+2 pi i m s / N) kernel
        positive = scipy.fft.ifft(getattr(sample, name))[m]
        full = np.empty(2 * m_max + 1, dtype=np.complex128)
        full[m_max:] = positive
        full[:m_max] = np.conj(positive[:0:-1])
        full[m_max] = positive[0].real
        coefficients[name] = full
    return HarmonicSet(omega=params.omega, m_max=m_max, coefficients=coefficients)


def reconstruction_error(
    params: DriveParams, harmonics: HarmonicSet, n_samples: int = DEFAULT_N_SAMPLES
) -> Dict[str, float]:
    """Max abs error of every reconstructed coupling on a uniform period grid"""
    times = params.period * np.arange(n_samples) / n_samples
    sample = drive_at(params, times)
    errors = {}
    for name in COUPLING_NAMES:
        delta = harmonics.evaluate(name, times) - getattr(sample, name)
        errors[name] = float(np.max(np.abs(delta)))
    return errors


def bloch_harmonics(harmonics: HarmonicSet, k: float, a0: float, m_max: int) -> ComplexArray:
    """Harmonics H_m of the Bloch Hamiltonian, shape (2*m_max+1, 2, 2), index m + m_max"""
    c = math.cos(0.5 * k * a0)
    s = math.sin(0.5 * k * a0)
    coeff: Dict[str, ComplexArray] = {n: harmonics.padded(n, m_max) for n in COUPLING_NAMES}
    h = np.empty((2 * m_max + 1, 2, 2), dtype=np.complex128)
    h[:, 0, 0] = coeff["ua"] - 1j * coeff["ga"]
    h[:, 1, 1] = coeff["ub"] - 1j * coeff["gb"]
    h[:, 0, 1] = (coeff["j1"] + coeff["j2"]) * c + 1j * (coeff["j1"] - coeff["j2"]) * s
    h[:, 1, 0] = (coeff["j1"] + coeff["j2"]) * c - 1j * (coeff["j1"] - coeff["j2"]) * s
    return h
