import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mgrit_conslaw.exact_solutions import cell_average_exact
from mgrit_conslaw.flux import DissipationSpec, burgers_flux, linear_flux
from mgrit_conslaw.grid import Grid
from mgrit_conslaw.problems import initial_cell_averages, make_discretization
from mgrit_conslaw.reconstruction import ReconstructionConfig
from mgrit_conslaw.time_integration import (
    BlowUpError,
    DiscretizationConfig,
    batched_step,
    erk_step,
    nonlinear_residual,
    spatial_operator,
    time_march,
)

CONFIGS = [(problem, k, flux) for problem in ("burgers", "bl") for k in (1, 2) for flux in ("glf", "llf")]


def test_four_cell_operator_hand_value():
    cfg = DiscretizationConfig(Grid(4, 2, 0.1), ReconstructionConfig(k=1), burgers_flux(),
                               DissipationSpec("global", 1.0))
    # frozen from tests/oracles/generate_golden.py (exact rationals)
    np.testing.assert_allclose(spatial_operator(np.array([1.0, 0.0, 0.0, 0.0]), cfg), [-2.0, 1.5, 0.0, 0.5],
                               atol=1e-15)


@pytest.mark.parametrize("problem, k, flux", CONFIGS)
@settings(max_examples=20, deadline=None)
@given(data=arrays(np.float64, 16, elements=st.floats(0.0, 1.0)))
def test_every_step_conserves_mass(problem, k, flux, data):
    cfg = make_discretization(problem, k, flux, 16, n_t=65)
    stepped = erk_step(data, cfg).state
    assert abs(stepped.sum() - data.sum()) <= 1e-12 * max(1.0, np.abs(data).sum())


def test_ssp_rk3_matches_its_stability_polynomial():
    # linear advection with optimal weights makes the operator a matrix L
    cfg = DiscretizationConfig(Grid(12, 11, 0.1), ReconstructionConfig(k=2, weight_mode="optimal_linear"),
                               linear_flux(0.9), DissipationSpec("global", 0.9))
    L = np.column_stack([spatial_operator(col, cfg) for col in np.eye(12)])
    A = cfg.grid.dt * L
    # stability polynomial coefficients (1, 1, 1/2, 1/6) from a symbolic expansion
    R = np.eye(12) + A + A @ A / 2 + A @ A @ A / 6
    u = np.random.default_rng(0).normal(size=12)
    np.testing.assert_allclose(erk_step(u, cfg).state, R @ u, atol=1e-13)


def test_rk3_stages_are_returned():
    cfg = make_discretization("burgers", 2, "llf", 64)
    u0 = initial_cell_averages("square", cfg.grid)
    res = erk_step(u0, cfg)
    assert len(res.stages) == 2
    np.testing.assert_allclose(res.stages[0], u0 + cfg.grid.dt * spatial_operator(u0, cfg))


def test_batched_step_matches_single_steps():
    cfg = make_discretization("bl", 2, "llf", 64)
    states = np.random.default_rng(1).uniform(size=(5, 64))
    batch, stages = batched_step(states, cfg, with_stages=True)
    assert stages.shape == (2, 5, 64)
    for row in range(5):
        single = erk_step(states[row], cfg)
        np.testing.assert_allclose(batch[row], single.state, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(stages[1, row], single.stages[1], rtol=1e-14, atol=1e-15)


def test_time_march_solution_has_zero_residual():
    cfg = make_discretization("burgers", 2, "llf", 64)
    u0 = initial_cell_averages("square", cfg.grid)
    state = time_march(u0, cfg, cache_stages=True)
    assert state.n_t == cfg.grid.n_t
    assert state.stages.shape == (2, cfg.grid.n_t - 1, 64)
    np.testing.assert_array_equal(nonlinear_residual(state.levels, u0, cfg), 0.0)


def test_residual_first_row_is_initial_mismatch():
    cfg = make_discretization("burgers", 1, "glf", 64)
    u0 = initial_cell_averages("square", cfg.grid)
    U = np.zeros((cfg.grid.n_t, 64))
    np.testing.assert_array_equal(nonlinear_residual(U, u0, cfg)[0], u0)


def test_time_march_with_single_level_returns_initial_data():
    cfg = make_discretization("burgers", 1, "glf", 64, n_t=1)
    u0 = initial_cell_averages("square", cfg.grid)
    np.testing.assert_array_equal(time_march(u0, cfg).levels, u0[None, :])


def test_blow_up_is_reported_with_step():
    cfg = make_discretization("burgers", 1, "glf", 64, n_t=3, final_time=50.0)
    u0 = initial_cell_averages("square", cfg.grid)
    with pytest.raises(BlowUpError) as info:
        time_march(u0, cfg.with_grid(Grid(64, 200, 500.0)))
    assert info.value.step is not None


def test_second_order_burgers_discretization_error():
    cfg = make_discretization("burgers", 2, "llf", 1024)
    U = time_march(initial_cell_averages("square", cfg.grid), cfg).levels
    error = cfg.grid.h * np.abs(U[-1] - cell_average_exact(4.0, cfg.grid)).sum()
    # regression value from the oracle run; the band is the expected magnitude
    assert 1e-3 <= error <= 1e-2
    assert error == pytest.approx(0.0010021418527535835, rel=1e-8)
