"""Linearly preconditioned residual-correction iteration for the nonlinear space-time system.

Each outer iteration relaxes the nonlinear residual at F-points, rebuilds the
linearization at the relaxed iterate, approximately solves ``P e = r`` and
updates ``U += e``.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coarse_correction import (
    DEFAULT_S_FV,
    DEFAULT_S_RK,
    assemble_T_ideal,
    ideal_coefficients_k1,
    level_data,
)
from .grid import CFSplitting, Grid, tabulated_n_t
from .linearization import LinearizationMode, solve_linearized_direct, stage_points
from .mgrit import FineLinearizedLevel, SolveHistory, build_sl_hierarchy, cycle
from .semi_lagrangian import interface_speed_lookup
from .time_integration import BlowUpError, batched_step, nonlinear_residual, time_march

INNER_SOLVERS = ("direct", "mgrit_two_level", "mgrit_vcycle")


@dataclass(frozen=True)
class SolverConfig:
    inner: str = "mgrit_two_level"
    m: int = 8
    tol: float = 1e-10
    max_iters: int = 20
    divergence_cutoff: float = 1e3
    lin_mode: LinearizationMode = field(default_factory=LinearizationMode)
    relax: bool = True
    correct: bool = True
    s_rk: Optional[float] = None
    s_fv: Optional[float] = None
    g_normalization: str = "factorial"
    freeze_after: Optional[int] = None

    def __post_init__(self):
        if self.inner not in INNER_SOLVERS:
            raise ValueError(f"inner solver must be one of {INNER_SOLVERS}, got {self.inner!r}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.m < 2:
            raise ValueError("m must be at least 2")


def nonlinear_f_relaxation(U, cfg, m):
    """Re-march every coarse interval from its C-point; C-points are left alone."""
    U = np.asarray(U, dtype=float)
    split = CFSplitting(U.shape[0], m)
    starts = split.interval_starts()
    for j in range(1, m):
        idx = starts + j - 1
        idx = idx[idx + 1 < U.shape[0]]
        if idx.size == 0:
            break
        U[idx + 1] = batched_step(U[idx], cfg)
    return U


def build_inner_hierarchy(U, points, cfg, scfg):
    """Fine linearized level and semi-Lagrangian coarse levels at the current iterate."""
    grid = cfg.grid
    if scfg.inner == "mgrit_vcycle" and cfg.k != 1:
        raise ValueError("multilevel cycles are supported for k=1 only")
    n_levels = 2 if scfg.inner == "mgrit_two_level" else None
    fine = FineLinearizedLevel(points, cfg, scfg.lin_mode)
    data = level_data(U, cfg)
    lookup = lambda ends: interface_speed_lookup(data.speed, ends, grid.h)  # noqa: E731
    common = dict(correct=scfg.correct, normalization=scfg.g_normalization)
    if cfg.k == 1:
        coeffs = ideal_coefficients_k1(data.take(slice(0, grid.n_t - 1)), grid.dt, grid.h)
        return build_sl_hierarchy(fine, scfg.m, n_levels, grid.dt, grid.h, 1, lookup,
                                  step_coeffs=coeffs, **common)
    m = scfg.m
    s_rk = DEFAULT_S_RK if scfg.s_rk is None else scfg.s_rk
    s_fv = DEFAULT_S_FV if scfg.s_fv is None else scfg.s_fv
    n_intervals = (grid.n_t - 1) // m
    ideal = [
        assemble_T_ideal(data.take(slice(j * m + 1, (j + 1) * m + 1)), 2, grid.dt, grid.h, s_rk, s_fv)
        for j in range(n_intervals)
    ] if scfg.correct else None
    return build_sl_hierarchy(fine, m, n_levels, grid.dt, grid.h, 3, lookup,
                              ideal_matrices=ideal, **common)


def inner_solve(U, r, stages, cfg, scfg, cached=None):
    """Approximate solution of the linearized system; returns (e, reusable data)."""
    if cached is None:
        points = stage_points(U, stages, cfg, scfg.lin_mode)
        hierarchy = None if scfg.inner == "direct" else build_inner_hierarchy(U, points, cfg, scfg)
        cached = (points, hierarchy)
    points, hierarchy = cached
    if scfg.inner == "direct":
        return solve_linearized_direct(points, r, cfg, scfg.lin_mode), cached
    relaxation = ("F",) if scfg.inner == "mgrit_two_level" else ("F", "FCF")
    return cycle(hierarchy, scfg.m, r.copy(), r, relaxation), cached


def outer_solve(U0, u0, cfg, scfg=None, callback=None):
    """Run the outer iteration; ``rel_residuals[j]`` is measured after j corrections.

    The reference residual is the one after the first nonlinear relaxation.
    ``callback(iteration, U)`` sees every relaxed iterate before its residual
    is evaluated.
    """
    scfg = scfg or SolverConfig()
    U = np.array(U0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    history = SolveHistory()
    r0 = None
    cached = None
    zero_floor = 1e-14 * max(1.0, float(np.linalg.norm(U)))
    for iteration in range(scfg.max_iters + 1):
        start = time.perf_counter()
        try:
            if scfg.relax:
                nonlinear_f_relaxation(U, cfg, scfg.m)
            if callback is not None:
                callback(iteration, U)
            stepped, stages = batched_step(U[:-1], cfg, with_stages=True)
        except BlowUpError:
            history.rel_residuals.append(float("inf"))
            history.wall_ms.append(1e3 * (time.perf_counter() - start))
            history.termination = "diverged"
            break
        r = nonlinear_residual(U, u0, cfg, stepped)
        norm = float(np.linalg.norm(r))
        if r0 is None:
            r0 = norm
            history.absolute_initial = norm
            rel = 1.0
        else:
            rel = norm / r0
        history.rel_residuals.append(rel)
        if r0 <= zero_floor:
            history.wall_ms.append(1e3 * (time.perf_counter() - start))
            history.termination = "converged"
            break
        if iteration > 0 and rel < scfg.tol:
            history.wall_ms.append(1e3 * (time.perf_counter() - start))
            history.termination = "converged"
            break
        if not np.isfinite(rel) or rel > scfg.divergence_cutoff:
            history.wall_ms.append(1e3 * (time.perf_counter() - start))
            history.termination = "diverged"
            break
        if iteration == scfg.max_iters:
            history.wall_ms.append(1e3 * (time.perf_counter() - start))
            break
        frozen = scfg.freeze_after is not None and iteration >= scfg.freeze_after
        try:
            e, data = inner_solve(U, r, stages, cfg, scfg, cached if frozen else None)
        except BlowUpError:
            history.wall_ms.append(1e3 * (time.perf_counter() - start))
            history.termination = "diverged"
            break
        if scfg.freeze_after is not None and iteration <= scfg.freeze_after:
            cached = data
        U += e
        history.wall_ms.append(1e3 * (time.perf_counter() - start))
    return U, history


def interpolate_space(levels, n_x_fine):
    """Periodic linear interpolation between cell centres."""
    n_x = levels.shape[-1]
    ratio = n_x / n_x_fine
    # fine centre positions measured in coarse cells from the first coarse centre
    s = (np.arange(n_x_fine) + 0.5) * ratio - 0.5
    left = np.floor(s).astype(int)
    theta = s - left
    return (1.0 - theta) * levels[..., np.mod(left, n_x)] + theta * levels[..., np.mod(left + 1, n_x)]


def interpolate_time(levels, coarse_times, fine_times):
    idx = np.clip(np.searchsorted(coarse_times, fine_times, side="right") - 1, 0, len(coarse_times) - 2)
    theta = (fine_times - coarse_times[idx]) / (coarse_times[idx + 1] - coarse_times[idx])
    theta = np.clip(theta, 0.0, 1.0)[:, None]
    return (1.0 - theta) * levels[idx] + theta * levels[idx + 1]


def nested_initial_guess(U_coarse, coarse_grid, fine_grid):
    """Bilinear space-time interpolation of a coarse-mesh solution onto the fine mesh."""
    U_coarse = np.asarray(U_coarse, dtype=float)
    if fine_grid.n_x != 2 * coarse_grid.n_x or not np.isclose(fine_grid.final_time, coarse_grid.final_time):
        raise ValueError("fine mesh must double the cells of the coarse mesh over the same time interval")
    if U_coarse.shape != (coarse_grid.n_t, coarse_grid.n_x):
        raise ValueError("coarse solution does not match its grid")
    spatial = interpolate_space(U_coarse, fine_grid.n_x)
    if coarse_grid.n_t == 1:
        return np.repeat(spatial, fine_grid.n_t, axis=0)
    return interpolate_time(spatial, coarse_grid.times, fine_grid.times)


def coarse_mesh_for(cfg, problem=None, ic="square"):
    """Half-resolution mesh: the tabulated one when available, else half the intervals."""
    grid = cfg.grid
    n_x = grid.n_x // 2
    try:
        n_t = tabulated_n_t(problem, ic, n_x) if problem is not None else None
    except ValueError:
        n_t = None
    if n_t is None:
        n_t = (grid.n_t - 1) // 2 + 1
    return Grid(n_x, n_t, grid.final_time)


def initial_iterate(u0_fine, cfg, nested=True, coarse_u0=None, coarse_grid=None):
    """Starting iterate: nested interpolation of a sequential coarse solve, or u0 copied in time."""
    if not nested:
        return np.repeat(np.asarray(u0_fine, dtype=float)[None, :], cfg.grid.n_t, axis=0)
    coarse_cfg = cfg.with_grid(coarse_grid)
    coarse = time_march(coarse_u0, coarse_cfg).levels
    return nested_initial_guess(coarse, coarse_grid, cfg.grid)
