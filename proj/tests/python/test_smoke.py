import math

import numpy as np
import pytest

import bdbkit


@pytest.fixture
def setup():
    grid = bdbkit.PhaseGrid(d=1, nx=16, np=32)
    params = bdbkit.ModelParams(U=1.0, tau=0.05)
    return grid, params


def perturbed(grid, params, amplitude):
    F = bdbkit.equilibrium(grid, params)
    x = np.array([grid.x_node(i)[0] for i in range(grid.shape[0])])
    p = np.array([grid.p_node(j)[0] for j in range(grid.shape[1])])
    bump = np.outer(np.cos(2 * np.pi * x / grid.lx), 1 + 0.5 * np.cos(2 * np.pi * p))
    return F + amplitude * bump


def test_equilibrium_matches_energy_profile(setup):
    grid, params = setup
    F = bdbkit.equilibrium(grid, params)
    assert F.shape == grid.shape
    assert np.allclose(F, F[0])  # constant in x
    for j in (0, 5, 17):
        e = bdbkit.band_energy(grid.p_node(j), params.band)
        assert F[0, j] == pytest.approx(bdbkit.equilibrium_of_energy(e, params.entropy), rel=1e-14)
        assert 0.0 < F[0, j] < 1.0 / params.entropy.eta


def test_equilibrium_is_stationary(setup):
    grid, params = setup
    F = bdbkit.equilibrium(grid, params)
    rec = bdbkit.evolve(F, grid, params, dt=5e-4, t_end=0.02, record_every=5)
    assert np.max(rec["norm_X"]) < 1e-12
    assert np.max(np.abs(rec["final_state"] - F)) < 1e-12


def test_relaxation_decays_at_the_collision_rate(setup):
    grid, params = setup
    f0 = perturbed(grid, params, 1e-4)
    rec = bdbkit.evolve(f0, grid, params, dt=2.5e-4, t_end=0.25, record_every=4)
    fit = bdbkit.decay_fit(rec["t"], rec["norm_X"])
    assert fit["rate"] == pytest.approx(1.0 / params.physical.tau, rel=0.02)
    assert rec["t"][-1] == pytest.approx(0.25)
    assert np.all(np.isnan(rec["norm_gevrey"]))


def test_norms_and_group(setup):
    grid, params = setup
    g = perturbed(grid, params, 1e-3) - bdbkit.equilibrium(grid, params)
    n0 = bdbkit.x_norm(g, grid, params)
    assert n0 > 0
    moved = bdbkit.group_action(g, 0.3, grid, params)
    assert bdbkit.x_norm(moved, grid, params) == pytest.approx(n0, rel=1e-10)
    back = bdbkit.group_action(moved, -0.3, grid, params)
    assert np.max(np.abs(back - g)) < 1e-12
    small, _ = bdbkit.analytic_seminorm(g, grid, params, nu=0.01, n_max=4)
    large, _ = bdbkit.analytic_seminorm(g, grid, params, nu=0.05, n_max=4)
    assert n0 <= small <= large


def test_stability_quantities():
    free = bdbkit.ModelParams(lambda1=0.0)
    assert bdbkit.criticality(free) == 0.0
    a = bdbkit.criticality(bdbkit.ModelParams(U=0.5), np=64)
    b = bdbkit.criticality(bdbkit.ModelParams(U=1.0), np=64)
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_battery_is_deterministic():
    first = bdbkit.verification_battery(3, trials=5, max_order=3)
    second = bdbkit.verification_battery(3, trials=5, max_order=3)
    assert first == second
    assert all(c["passed"] for c in first)
    assert {c["seed"] for c in first} == {3}


def test_snapshot_round_trip(setup, tmp_path):
    grid, params = setup
    f = perturbed(grid, params, 1e-3)
    path = str(tmp_path / "state.snap")
    bdbkit.write_snapshot(path, f, grid, 0.125, params)
    g, grid2, t, params2 = bdbkit.read_snapshot(path)
    assert np.array_equal(f, g)
    assert t == 0.125
    assert grid2.shape == grid.shape
    assert params2.physical.tau == params.physical.tau


def test_errors_are_reported(setup):
    grid, params = setup
    with pytest.raises(bdbkit.BdbError, match="shape"):
        bdbkit.x_norm(np.zeros((3, 3)), grid, params)
    with pytest.raises(bdbkit.BdbError):
        bdbkit.ModelParams(tau=0.0)
    bad = bdbkit.equilibrium(grid, params)
    bad[0, 0] = math.nan
    with pytest.raises(bdbkit.BdbError):
        bdbkit.evolve(bad, grid, params, dt=5e-4, t_end=0.01)
