"""MGRIT for linear advection ``e_t + (alpha(x, t) e)_x = 0`` with exactly evaluated speeds.

The fine discretization is the linear finite-volume scheme with central
(optimal-weight) reconstructions and an LF flux; coarse levels are corrected
semi-Lagrangian steps whose systems are solved approximately with GMRES.
"""

from dataclasses import dataclass
from math import ceil, factorial

import numpy as np

from .coarse_correction import weighted_difference
from .flux import linear_lf_flux
from .grid import Grid
from .mgrit import build_sl_hierarchy, mgrit_solve
from .reconstruction import combine_with_weights, optimal_weights


def _const(x, t):
    return np.ones(np.broadcast(x, t).shape)


def _cos2(x, t):
    return 0.5 * (1.0 + np.cos(np.pi * x) ** 2) + 0.0 * t


def _sin2moving(x, t):
    return -np.sin(np.pi * (x - t)) ** 2


def _cosxcost(x, t):
    return np.cos(2 * np.pi * x) * np.cos(2 * np.pi * t)


WAVE_SPEEDS = {"const": _const, "cos2": _cos2, "sin2moving": _sin2moving, "cosxcost": _cosxcost}

# Leading error constant of the Runge-Kutta stability function.
RK_ERROR_CONSTANT = {1: -0.5, 3: -1.0 / 24.0}


def sin4(x):
    return np.sin(np.pi * x) ** 4


def sin4_cell_averages(grid):
    """Exact averages of sin^4(pi x) = 3/8 - cos(2 pi x)/2 + cos(4 pi x)/8."""
    edges = grid.cell_edges
    primitive = 3.0 * edges / 8.0 - np.sin(2 * np.pi * edges) / (4 * np.pi) + np.sin(4 * np.pi * edges) / (32 * np.pi)
    return np.diff(primitive) / grid.h


@dataclass(frozen=True)
class LinearTestConfig:
    alpha: str = "const"
    p: int = 1
    flux: str = "glf"
    n_x: int = 64
    m: int = 8
    theta: float = 0.0
    final_time: float = 4.0
    courant: float = 0.85

    def __post_init__(self):
        if self.alpha not in WAVE_SPEEDS:
            raise ValueError(f"unknown wave speed {self.alpha!r}")
        if self.p not in (1, 3):
            raise ValueError(f"p must be 1 or 3, got {self.p}")
        if self.flux not in ("glf", "llf"):
            raise ValueError(f"flux must be 'glf' or 'llf', got {self.flux!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    @property
    def k(self):
        return (self.p + 1) // 2

    @property
    def speed(self):
        return WAVE_SPEEDS[self.alpha]

    def grid(self):
        h = 2.0 / self.n_x
        return Grid(self.n_x, ceil(self.final_time / (self.courant * h)) + 1, self.final_time)


def global_speed_bound(speed, final_time, samples=401):
    x = np.linspace(-1.0, 1.0, samples)[None, :]
    t = np.linspace(0.0, final_time, samples)[:, None]
    return float(np.max(np.abs(speed(x, t))))


class LinearMOLLevel:
    """Fine level: one explicit Runge-Kutta step of the linear scheme per time interval."""

    def __init__(self, cfg, grid=None):
        self.cfg = cfg
        self.grid = grid or cfg.grid()
        self.n_points = self.grid.n_t
        self.interfaces = self.grid.interfaces
        self.nu_global = global_speed_bound(cfg.speed, cfg.final_time) if cfg.flux == "glf" else None

    def _operator(self, e, t, nu):
        a = self.cfg.speed(self.interfaces, t)
        k = self.cfg.k
        if k == 1:
            e_minus, e_plus = e, np.roll(e, -1, axis=-1)
        else:
            e_minus, e_plus = combine_with_weights(
                e, k, optimal_weights(e.shape, k, "right"), optimal_weights(e.shape, k, "left"))
        flux = linear_lf_flux(a, e_minus, a, e_plus, nu)
        return -(flux - np.roll(flux, 1, axis=-1)) / self.grid.h

    def step(self, e, idx):
        e = np.asarray(e, dtype=float)
        t = (np.atleast_1d(idx) * self.grid.dt)[:, None]
        dt = self.grid.dt
        nu = self.nu_global if self.nu_global is not None else np.abs(self.cfg.speed(self.interfaces, t))
        if self.cfg.k == 1:
            return e + dt * self._operator(e, t, nu)
        e1 = e + dt * self._operator(e, t, nu)
        e2 = 0.75 * e + 0.25 * (e1 + dt * self._operator(e1, t + dt, nu))
        return e / 3.0 + (2.0 / 3.0) * (e2 + dt * self._operator(e2, t + 0.5 * dt, nu))


def linear_mol_step(e, cfg, t_index, grid=None):
    level = LinearMOLLevel(cfg, grid)
    e = np.atleast_2d(e)
    return level.step(e, np.full(e.shape[0], t_index))


def ideal_step_coefficients(alpha, nu, p, dt, h):
    """Per-step truncation coefficients c with T_ideal = D1 diag(sum c) D_p^T."""
    k = (p + 1) // 2
    dissipative = h**p * dt * (-1) ** (k + 1) * factorial(k) * factorial(k - 1) / factorial(2 * k)
    return dissipative * nu + (-dt) ** (p + 1) * RK_ERROR_CONSTANT[p] * alpha ** (p + 1)


def assemble_T_ideal_linear(alpha, nu, p, dt, h):
    """``alpha``/``nu`` have the fine steps of one coarse interval on the leading axis."""
    return weighted_difference(ideal_step_coefficients(alpha, nu, p, dt, h).sum(axis=0), p, h)


def frozen_coefficients(cfg, grid, nu_global=None):
    """Interface speeds and dissipation at t_n + theta*dt for every fine step."""
    t = (grid.times[:-1] + cfg.theta * grid.dt)[:, None]
    alpha = cfg.speed(grid.interfaces[None, :], t)
    nu = np.full_like(alpha, nu_global) if nu_global is not None else np.abs(alpha)
    return alpha, nu


def build_linear_hierarchy(cfg, correct=True, solver="gmres", gmres_tol=0.01, gmres_iters=10,
                           n_levels=None):
    """Deep levels may span several periods; exact speeds keep the backtracking meaningful."""
    fine = LinearMOLLevel(cfg)
    grid = fine.grid
    alpha, nu = frozen_coefficients(cfg, grid, fine.nu_global)
    coeffs = ideal_step_coefficients(alpha, nu, cfg.p, grid.dt, grid.h)
    times = grid.times

    def lookup(ends):
        def speed_at(x, j):
            return cfg.speed(x, times[ends - j][:, None])
        return speed_at

    return build_sl_hierarchy(fine, cfg.m, n_levels, grid.dt, grid.h, cfg.p, lookup,
                              step_coeffs=coeffs, correct=correct, solver=solver,
                              gmres_tol=gmres_tol, gmres_iters=gmres_iters, max_displacement=None)


def run_linear_mgrit(cfg, seed=0, correct=True, tol=1e-10, max_cycles=100, solver="gmres",
                     hierarchy=None):
    """V-cycles with FCF relaxation on every level from a seeded uniform random iterate."""
    hierarchy = hierarchy or build_linear_hierarchy(cfg, correct=correct, solver=solver)
    grid = hierarchy[0].grid
    g = np.zeros((grid.n_t, grid.n_x))
    g[0] = sin4_cell_averages(grid)
    rng = np.random.default_rng(seed)
    E0 = rng.uniform(size=g.shape)
    return mgrit_solve(hierarchy, cfg.m, g, E0, ("FCF",), tol=tol, max_cycles=max_cycles)
