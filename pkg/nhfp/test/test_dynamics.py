import math

import numpy as np
import pytest

from nhfp import dynamics, floquet
from nhfp.model import DriveParams
from nhfp.nhfp_base import (
    IntegratorError,
    InvalidArgumentError,
    LatticeTooSmallError,
    Sublattice,
    circular_distance,
)


@pytest.fixture(scope="module")
def lossy_trajectory(lossy_params):
    return dynamics.propagate(lossy_params, n_cells=81, n_cycles=4)


def test_unitary_limit_conserves_the_norm(hermitian_params):
    trajectory = dynamics.propagate(hermitian_params)
    assert trajectory.n_cycles == 5
    assert trajectory.times.shape == (501,)
    assert trajectory.norms()[-1] == pytest.approx(1.0, abs=1e-9)
    assert abs(dynamics.norm_decay(trajectory).rate) < 1e-9


def test_loss_makes_the_norm_decrease(lossy_trajectory):
    norms = lossy_trajectory.norms()
    assert norms[0] == pytest.approx(1.0)
    assert np.all(np.diff(norms) <= 1e-9)
    assert norms[-1] < norms[0]


def test_center_of_mass_starts_at_the_input(lossy_trajectory):
    com = dynamics.center_of_mass(lossy_trajectory)
    assert com.positions[0] == pytest.approx(0.0)
    assert com.cycle_positions.shape == (5,)
    np.testing.assert_array_equal(com.cycle_times, lossy_trajectory.times[::100])


def test_per_cycle_displacement_is_a_slope():
    cycles = np.arange(6, dtype=float)
    com = dynamics.CenterOfMass(
        times=cycles, positions=cycles, cycle_times=cycles, cycle_positions=0.3 + 0.9 * cycles
    )
    assert dynamics.per_cycle_displacement(com) == pytest.approx(0.9)
    short = dynamics.CenterOfMass(
        times=cycles[:2], positions=cycles[:2], cycle_times=cycles[:2],
        cycle_positions=cycles[:2],
    )
    with pytest.raises(InvalidArgumentError):
        dynamics.per_cycle_displacement(short)


def test_growing_norm_is_an_integrator_error(lossy_trajectory):
    grown = np.array(lossy_trajectory.amplitudes)
    grown[-1] *= 2.0
    broken = dynamics.Trajectory(
        params=lossy_trajectory.params,
        n_cells=lossy_trajectory.n_cells,
        input_cell=lossy_trajectory.input_cell,
        input_sublattice=lossy_trajectory.input_sublattice,
        times=lossy_trajectory.times,
        positions=lossy_trajectory.positions,
        amplitudes=grown,
        steps_per_cycle=lossy_trajectory.steps_per_cycle,
        store_per_cycle=lossy_trajectory.store_per_cycle,
    )
    with pytest.raises(IntegratorError):
        dynamics.norm_decay(broken)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"steps_per_cycle": 400},
        {"n_cycles": 0},
        {"store_per_cycle": 7},
        {"input_cell": 500},
        {"initial_state": np.ones(5)},
    ],
)
def test_invalid_propagation_arguments(lossy_params, kwargs):
    with pytest.raises(InvalidArgumentError):
        dynamics.propagate(lossy_params, **kwargs)


def test_short_chain_is_rejected_before_integrating(lossy_params):
    with pytest.raises(LatticeTooSmallError) as info:
        dynamics.propagate(lossy_params, n_cells=11)
    assert info.value.suggested_n_cells >= 2 * (2 * 5 + 4) + 1


def test_rk4_is_fourth_order(lossy_params):
    n_cells = 8
    state, _ = dynamics.floquet_mode_state(lossy_params, n_cells, 1, 0)

    def final(steps):
        trajectory = dynamics.propagate(
            lossy_params, n_cells, n_cycles=1, steps_per_cycle=steps, store_per_cycle=steps,
            initial_state=state, periodic=True,
        )
        return trajectory.amplitudes[-1]

    reference = final(8000)
    coarse = np.linalg.norm(final(500) - reference)
    fine = np.linalg.norm(final(1000) - reference)
    assert 10.0 < coarse / fine < 22.0


def test_stepping_matches_monodromy_powers(lossy_params):
    n_cells = 8
    rng = np.random.default_rng(5)
    state = rng.normal(size=2 * n_cells) + 1j * rng.normal(size=2 * n_cells)
    state /= np.linalg.norm(state)
    trajectory = dynamics.propagate(
        lossy_params, n_cells, n_cycles=5, steps_per_cycle=4000, initial_state=state, periodic=True
    )
    u = dynamics.ring_monodromy(lossy_params, n_cells, steps=2048)
    expected = np.linalg.matrix_power(u, 5) @ state
    np.testing.assert_allclose(trajectory.amplitudes[-1], expected, atol=1e-8)


@pytest.mark.parametrize("band", [0, 1])
def test_floquet_mode_decays_at_its_rate(lossy_params, band):
    state, eps = dynamics.floquet_mode_state(lossy_params, 16, 3, band)
    trajectory = dynamics.propagate(
        lossy_params, 16, n_cycles=5, initial_state=state, periodic=True
    )
    decay = dynamics.norm_decay(trajectory)
    assert decay.rate == pytest.approx(-2.0 * eps.imag, rel=0.01, abs=1e-5)
    assert decay.residual < 1e-3


def test_spacetime_spectrum_needs_whole_cycles(lossy_params):
    trajectory = dynamics.propagate(lossy_params, n_cells=81, n_cycles=2)
    with pytest.raises(InvalidArgumentError):
        dynamics.spacetime_spectrum(trajectory)


def test_spacetime_spectrum_is_normalized(lossy_trajectory):
    smap = dynamics.spacetime_spectrum(lossy_trajectory)
    assert smap.source == "spacetime"
    assert smap.intensity.shape == (64, 81)
    assert np.all(smap.intensity >= 0.0)
    weight = np.sum(smap.intensity, axis=0) * smap.energy_step / smap.omega
    np.testing.assert_allclose(weight, 1.0, atol=1e-3)


@pytest.mark.slow
@pytest.mark.parametrize("gamma0", [0.3, 0.4])
def test_lossy_pump_moves_one_cell_per_cycle(gamma0):
    trajectory = dynamics.propagate(DriveParams(gamma0=gamma0))
    com = dynamics.center_of_mass(trajectory)
    assert dynamics.per_cycle_displacement(com) == pytest.approx(1.0, abs=0.03)


@pytest.mark.slow
def test_hermitian_pump_falls_short(hermitian_params):
    com = dynamics.center_of_mass(dynamics.propagate(hermitian_params))
    assert dynamics.per_cycle_displacement(com) < 0.9


@pytest.mark.slow
@pytest.mark.parametrize("u0, gamma0", [(1.1, 0.8), (1.5, 1.1)])
def test_b_input_dips_backward_then_moves_forward(u0, gamma0):
    params = DriveParams(u0=u0, gamma0=gamma0, omega=1.45)
    trajectory = dynamics.propagate(params, sublattice=Sublattice.B)
    com = dynamics.center_of_mass(trajectory)
    # backward during the first half cycle, forward afterwards
    half = trajectory.store_per_cycle // 2
    assert np.min(com.positions[: half + 1]) < -0.05
    assert com.cycle_positions[5] > com.cycle_positions[1]
    assert com.cycle_positions[5] > 1.0


@pytest.mark.slow
def test_b_input_decays_faster():
    params = DriveParams(u0=1.1, gamma0=0.8, omega=1.45)
    rate_a = dynamics.norm_decay(dynamics.propagate(params, sublattice=Sublattice.A)).rate
    rate_b = dynamics.norm_decay(dynamics.propagate(params, sublattice=Sublattice.B)).rate
    assert rate_b > rate_a


@pytest.mark.slow
def test_simulated_and_analytic_peaks_coincide(lossy_params):
    trajectory = dynamics.propagate(lossy_params)
    k_grid = np.linspace(-math.pi, math.pi, 64, endpoint=False)
    simulated = dynamics.spacetime_spectrum(trajectory, k_grid=k_grid)
    analytic = floquet.spectral_density(lossy_params, k_grid, simulated.energies)
    distance = circular_distance(
        simulated.peak_energies(), analytic.peak_energies(), lossy_params.omega
    )
    assert np.mean(distance <= analytic.energy_step + 1e-12) > 0.8


@pytest.mark.slow
def test_adiabatic_pump_moves_one_cell_per_cycle():
    params = DriveParams(gamma0=0.0, omega=0.05)
    com = dynamics.center_of_mass(dynamics.propagate(params))
    assert com.cycle_positions[5] - com.cycle_positions[0] == pytest.approx(5.0, rel=0.05)
