import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from mgrit_conslaw.coarse_correction import g_poly, weighted_difference
from mgrit_conslaw.mgrit import (
    IdealCoarseLevel,
    PropagatorLevel,
    build_sl_hierarchy,
    cycle,
    hierarchy_sizes,
    mgrit_solve,
    sequential_solve,
    system_residual,
    two_level_iteration,
)


class MatrixLevel:
    """Test level with an explicit small matrix per time step."""

    def __init__(self, matrices):
        self.matrices = np.asarray(matrices)
        self.n_points = len(matrices) + 1

    def step(self, e, idx):
        return np.einsum("rij,rj->ri", self.matrices[np.atleast_1d(idx)], e)


def random_level(n_points, size=5, seed=0, scale=0.4):
    rng = np.random.default_rng(seed)
    return MatrixLevel(np.eye(size) * 0.9 + scale * rng.normal(size=(n_points - 1, size, size)) / np.sqrt(size))


def random_rhs(n_points, size=5, seed=1):
    return np.random.default_rng(seed).normal(size=(n_points, size))


@settings(max_examples=20, deadline=None)
@given(n_points=st.integers(2, 60), m=st.integers(2, 6), seed=st.integers(0, 1000))
def test_ideal_coarse_operator_gives_exact_solution_in_one_iteration(n_points, m, seed):
    fine = random_level(n_points, seed=seed)
    g = random_rhs(n_points, seed=seed + 1)
    E = two_level_iteration(fine, IdealCoarseLevel(fine, m), m, np.zeros_like(g), g)
    np.testing.assert_allclose(E, sequential_solve(fine, g), rtol=1e-9, atol=1e-9)


def test_exact_solution_is_a_fixed_point():
    fine = random_level(41)
    coarse = PropagatorLevel([np.eye(5)] * 5, apply=lambda row, A: A @ row)
    g = random_rhs(41)
    exact = sequential_solve(fine, g)
    np.testing.assert_allclose(system_residual(fine, exact, g), 0.0, atol=1e-12)
    E = cycle([fine, coarse], 8, exact.copy(), g, ("FCF",))
    np.testing.assert_allclose(E, exact, atol=1e-12)


@pytest.mark.parametrize("pattern, bound", [("F", lambda n_c: n_c), ("FCF", lambda n_c: (n_c + 1) // 2)])
def test_two_level_finite_termination(pattern, bound):
    n_points, m = 57, 4
    n_coarse = (n_points - 1) // m + 1
    fine = random_level(n_points, seed=3)
    # deliberately poor coarse propagator
    coarse = PropagatorLevel([np.zeros((5, 5))] * (n_coarse - 1), apply=lambda row, A: A @ row)
    g = random_rhs(n_points, seed=4)
    exact = sequential_solve(fine, g)
    E = np.zeros_like(g)
    for _ in range(bound(n_coarse)):
        E = cycle([fine, coarse], m, E, g, (pattern,))
    np.testing.assert_allclose(E, exact, atol=1e-8)


def test_multilevel_cycle_with_ideal_levels_is_exact():
    fine = random_level(129, seed=5, scale=0.2)
    level1 = IdealCoarseLevel(fine, 4)
    level2 = IdealCoarseLevel(level1, 4)
    g = random_rhs(129, seed=6)
    E = cycle([fine, level1, level2], 4, np.zeros_like(g), g, ("F", "FCF"))
    np.testing.assert_allclose(E, sequential_solve(fine, g), atol=1e-8)


def test_unknown_relaxation_rejected():
    fine = random_level(9)
    with pytest.raises(ValueError):
        cycle([fine, IdealCoarseLevel(fine, 2)], 2, np.zeros((9, 5)), random_rhs(9), ("CF",))


def test_hierarchy_sizes():
    assert hierarchy_sizes(161, 8) == [161, 21, 3]
    assert hierarchy_sizes(2561, 8) == [2561, 321, 41, 6]
    assert hierarchy_sizes(188, 8) == [188, 24, 3]
    assert hierarchy_sizes(2561, 8, 2) == [2561, 321]
    assert hierarchy_sizes(5, 8) == [5]


def test_solve_history_for_zero_residual_and_divergence():
    fine = random_level(17)
    g = random_rhs(17)
    exact = sequential_solve(fine, g)
    coarse = IdealCoarseLevel(fine, 4)
    _, history = mgrit_solve([fine, coarse], 4, g, exact)
    assert history.converged and history.iterations == 0
    bad = PropagatorLevel([-50.0 * np.eye(5)] * 4, apply=lambda row, A: A @ row)
    _, history = mgrit_solve([random_level(17, seed=9, scale=0.1), bad], 4, g, np.zeros_like(g), ("F",))
    assert history.termination == "diverged"
    assert history.rel_residuals[-1] > 1e5


def test_mgrit_solve_converges_with_reasonable_coarse_level():
    fine = random_level(81, seed=10, scale=0.1)
    coarse = PropagatorLevel([np.eye(5) * 0.9**4] * 20, apply=lambda row, A: A @ row)
    g = random_rhs(81)
    E, history = mgrit_solve([fine, coarse], 4, g, np.zeros_like(g), ("FCF",), tol=1e-10)
    assert history.converged
    np.testing.assert_allclose(E, sequential_solve(fine, g), atol=1e-8)


def _constant_speed_hierarchy(correct=True, n_levels=None):
    n_x, m, c = 32, 4, 0.6
    h = 2.0 / n_x
    dt = 0.5 * h
    fine = random_level(65, size=n_x, scale=0.0)
    coeffs = np.full((64, n_x), -0.5 * (dt * c) ** 2 + 0.5 * h * dt * c)

    def lookup(ends):
        return lambda x, j: np.full_like(x, c)

    hierarchy = build_sl_hierarchy(fine, m, n_levels, dt, h, 1, lookup, step_coeffs=coeffs, correct=correct)
    return hierarchy, coeffs, dt, h, c, m


def test_second_coarse_level_accumulates_fine_coefficients():
    hierarchy, coeffs, dt, h, c, m = _constant_speed_hierarchy()
    assert [lvl.n_points for lvl in hierarchy] == [65, 17, 5, 2]
    level2 = hierarchy[2].propagators[0]
    eps2 = np.mod(c * dt * m * m / h, 1.0)
    expected = sp.identity(32) + weighted_difference(
        m * m * coeffs[0] + h * h * g_poly(np.full(32, eps2), 1), 1, h)
    np.testing.assert_allclose(level2.matrix.toarray(), expected.toarray(), atol=1e-12)


def test_uncorrected_hierarchy_has_bare_steps():
    hierarchy, *_ = _constant_speed_hierarchy(correct=False)
    assert all(prop.solver == "none" for lvl in hierarchy[1:] for prop in lvl.propagators)


def test_hierarchy_argument_validation():
    fine = random_level(65, size=8)
    lookup = lambda ends: (lambda x, j: np.zeros_like(x))  # noqa: E731
    with pytest.raises(ValueError):
        build_sl_hierarchy(fine, 4, None, 0.01, 0.25, 1, lookup)
    with pytest.raises(ValueError):
        build_sl_hierarchy(fine, 4, None, 0.01, 0.25, 1, lookup, ideal_matrices=[sp.identity(8)] * 16)
