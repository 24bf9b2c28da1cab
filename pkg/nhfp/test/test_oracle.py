import math

import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import quad

from nhfp import floquet, model, oracle
from nhfp.model import DriveParams
from nhfp.nhfp_base import (
    AbsorptionError,
    InvalidArgumentError,
    zone_momentum_grid,
)

PARAMETER_SETS = [
    DriveParams(),
    DriveParams(gamma0=0.0),
    DriveParams(u0=0.3, gamma0=0.1),
    DriveParams(u0=1.1, gamma0=0.8, omega=1.45),
    DriveParams(u0=1.5, gamma0=1.1, omega=1.45),
    DriveParams(gamma0=0.0, phi=0.4, omega=1.6),
]


def test_closed_form_exponential_matches_scipy():
    rng = np.random.default_rng(11)
    h = rng.normal(size=(20, 2, 2)) + 1j * rng.normal(size=(20, 2, 2))
    dt = rng.uniform(0.01, 0.5, size=20)
    expected = np.array([scipy.linalg.expm(-1j * d * m) for d, m in zip(dt, h)])
    np.testing.assert_allclose(oracle.expm_2x2(h, dt), expected, atol=1e-13)
    np.testing.assert_allclose(oracle.expm_batched(h, dt), expected, atol=1e-13)


def test_constant_hamiltonian_gives_one_exponential():
    h = np.array([[0.3, 0.7 - 0.1j], [0.2 + 0.4j, -0.5 - 0.2j]])

    def hamiltonian_at(times):
        return np.broadcast_to(h, (times.shape[0], 2, 2)).copy()

    u = oracle.time_ordered_product(hamiltonian_at, 2.0, [], 1000, oracle.expm_2x2)
    np.testing.assert_allclose(u, scipy.linalg.expm(-2j * h), atol=1e-12)


def test_decoupled_sites_integrate_the_onsite_energy(lossy_params):
    def hamiltonian_at(times):
        d = model.drive_at(lossy_params, times)
        h = np.zeros((times.shape[0], 2, 2), dtype=complex)
        h[:, 0, 0] = d.ua - 1j * d.ga
        h[:, 1, 1] = d.ub - 1j * d.gb
        return h

    period = lossy_params.period
    kinks = oracle.kink_times(lossy_params)
    u = oracle.time_ordered_product(hamiltonian_at, period, kinks, 4096, oracle.expm_2x2)
    loss = quad(
        lambda t: float(model.drive_at(lossy_params, t).ga), 0.0, period, points=list(kinks)
    )[0]
    # ua averages to zero over a period
    assert u[0, 0] == pytest.approx(math.exp(-loss), abs=1e-10)
    assert u[1, 1] == pytest.approx(math.exp(-loss), abs=1e-10)
    assert u[0, 1] == 0.0


def test_kinks_are_where_the_loss_switches():
    params = DriveParams(phi=0.7)
    for t in oracle.kink_times(params):
        d = model.drive_at(params, t)
        assert float(d.ga) == pytest.approx(0.0, abs=1e-12)
        assert float(d.gb) == pytest.approx(0.0, abs=1e-12)
        assert 0.0 <= t < params.period
    assert oracle.kink_times(DriveParams(u0=0.0)).size == 0


def test_monodromy_is_unitary_without_loss(hermitian_params):
    m = oracle.monodromy(hermitian_params, 0.9)
    assert abs(np.linalg.det(m.matrix)) == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.abs(np.abs(np.linalg.eigvals(m.matrix)) - 1.0) < 1e-9)


def test_monodromy_contracts_with_loss(lossy_params):
    m = oracle.monodromy(lossy_params, 0.9)
    assert np.all(np.abs(np.linalg.eigvals(m.matrix)) <= 1.0 + 1e-12)


def test_monodromy_converges_under_step_halving(lossy_params):
    coarse = oracle.monodromy(lossy_params, -1.3, steps=8192).matrix
    fine = oracle.monodromy(lossy_params, -1.3, steps=16384).matrix
    assert np.linalg.norm(fine - coarse, 2) < 1e-10


def test_monodromy_rejects_few_steps(lossy_params):
    with pytest.raises(InvalidArgumentError):
        oracle.monodromy(lossy_params, 0.0, steps=999)


def test_vanishing_multiplier_is_an_absorption_error():
    m = oracle.Monodromy(k=0.0, matrix=np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex), steps=0)
    with pytest.raises(AbsorptionError):
        oracle.quasienergies_from_monodromy(m, 1.1)


def test_monodromy_modes_are_biorthonormal(lossy_params):
    modes = oracle.MonodromySolver(lossy_params).modes(0.4)
    assert modes.biorthonormality_residual() < 1e-12
    assert np.all(modes.quasienergies.imag <= 1e-12)
    assert modes.quasienergies[0].real <= modes.quasienergies[1].real


@pytest.mark.parametrize("params", PARAMETER_SETS[:2], ids=["lossy", "hermitian"])
def test_floquet_matrix_agrees_with_monodromy(params):
    report = oracle.cross_check(params, [-2.9, -0.5, 0.0, 1.7])
    assert report.max_deviation < 1e-8
    assert report.min_overlap > 1.0 - 1e-8
    assert report.deviations.shape == (4,)


@pytest.mark.slow
@pytest.mark.parametrize("params", PARAMETER_SETS)
def test_floquet_matrix_agrees_with_monodromy_across_the_zone(params):
    report = oracle.cross_check(params, zone_momentum_grid(64))
    assert report.max_deviation < 1e-8


def test_folded_quasienergies_lie_in_the_zone(lossy_params):
    eps = oracle.quasienergies_from_monodromy(oracle.monodromy(lossy_params, 2.2), 1.1)
    assert np.all(eps.real >= -0.55) and np.all(eps.real < 0.55)


@pytest.mark.slow
def test_monodromy_bands_reproduce_gap_and_windings(lossy_params, lossy_bands):
    structure = floquet.band_structure(
        lossy_params, lossy_bands.k_grid, solver=oracle.MonodromySolver(lossy_params)
    )
    assert abs(structure.gap - lossy_bands.gap) < 1e-6
    for band in range(2):
        assert floquet.winding_number(structure, band)[0] == floquet.winding_number(
            lossy_bands, band
        )[0]
