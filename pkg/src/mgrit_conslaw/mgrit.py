"""Multigrid reduction in time for block-bidiagonal systems ``e^{n+1} = Phi^n e^n + g^{n+1}``.

A hierarchy is a list of levels, finest first, each exposing ``n_points`` and
a batched ``step(e, idx)`` that advances rows ``e[r]`` from point ``idx[r]``
to ``idx[r] + 1``.  Level l+1 keeps every m-th point of level l; trailing
points after the last C-point are F-points reached only by F-relaxation.
"""

import time
from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.sparse as sp

from .coarse_correction import CoarseStepData, coarse_step, g_poly, weighted_difference
from .grid import DOMAIN_LENGTH, CFSplitting
from .linearization import linearized_step, take_points
from .semi_lagrangian import DepartureData, coarse_departure_offsets


class FineLinearizedLevel:
    """The linearized nonlinear-discretization steps."""

    def __init__(self, points, cfg, mode):
        self.points, self.cfg, self.mode = points, cfg, mode
        self.n_points = points[0].nu.shape[0] + 1

    def step(self, e, idx):
        return linearized_step(e, take_points(self.points, idx), self.cfg, self.mode)


class PropagatorLevel:
    """A level whose steps are independent propagators, e.g. corrected SL steps."""

    def __init__(self, propagators, apply=coarse_step):
        self.propagators = list(propagators)
        self.apply = apply
        self.n_points = len(self.propagators) + 1

    def step(self, e, idx):
        return np.stack([self.apply(row, self.propagators[i]) for row, i in zip(e, np.atleast_1d(idx))])


class IdealCoarseLevel:
    """Composition of ``m`` steps of a finer level: the exact coarse operator."""

    def __init__(self, finer, m):
        self.finer, self.m = finer, m
        self.n_points = (finer.n_points - 1) // m + 1

    def step(self, e, idx):
        idx = np.atleast_1d(idx)
        for j in range(self.m):
            e = self.finer.step(e, idx * self.m + j)
        return e


def _f_relax(level, E, g, split):
    starts = split.interval_starts()
    for j in range(1, split.m):
        idx = starts + j - 1
        idx = idx[idx + 1 < level.n_points]
        if idx.size == 0:
            break
        E[idx + 1] = level.step(E[idx], idx) + g[idx + 1]


def _c_relax(level, E, g, split):
    c = split.c_points[1:]
    if c.size:
        E[c] = level.step(E[c - 1], c - 1) + g[c]


def c_point_residual(level, E, g, split):
    res = np.empty((split.n_coarse,) + E.shape[1:])
    res[0] = g[0] - E[0]
    c = split.c_points[1:]
    if c.size:
        res[1:] = g[c] + level.step(E[c - 1], c - 1) - E[c]
    return res


def sequential_solve(level, g):
    E = np.empty_like(g)
    E[0] = g[0]
    for n in range(level.n_points - 1):
        E[n + 1] = level.step(E[n:n + 1], np.array([n]))[0] + g[n + 1]
    return E


def cycle(hierarchy, m, E, g, relaxation=("F",), depth=0):
    """One V-cycle from level ``depth``; ``relaxation[l]`` is 'F' or 'FCF' (last entry repeats)."""
    level = hierarchy[depth]
    if depth == len(hierarchy) - 1:
        return sequential_solve(level, g)
    split = CFSplitting(level.n_points, m)
    pattern = relaxation[min(depth, len(relaxation) - 1)]
    _f_relax(level, E, g, split)
    if pattern == "FCF":
        _c_relax(level, E, g, split)
        _f_relax(level, E, g, split)
    elif pattern != "F":
        raise ValueError(f"unknown relaxation {pattern!r}")
    res = c_point_residual(level, E, g, split)
    correction = cycle(hierarchy, m, np.zeros_like(res), res, relaxation, depth + 1)
    E[split.c_points] += correction
    _f_relax(level, E, g, split)
    return E


def two_level_iteration(fine, coarse, m, E, g):
    return cycle([fine, coarse], m, E, g, ("F",))


def system_residual(level, E, g):
    """g - P E on the given level."""
    res = np.empty_like(E)
    res[0] = g[0] - E[0]
    idx = np.arange(level.n_points - 1)
    res[1:] = g[1:] + level.step(E[:-1], idx) - E[1:]
    return res


@dataclass
class SolveHistory:
    rel_residuals: List[float] = field(default_factory=list)
    wall_ms: List[float] = field(default_factory=list)
    termination: str = "max_iters"
    absolute_initial: float = float("nan")

    @property
    def iterations(self):
        return len(self.rel_residuals) - 1

    @property
    def converged(self):
        return self.termination == "converged"


def mgrit_solve(hierarchy, m, g, E0, relaxation=("FCF",), tol=1e-10, max_cycles=100,
                divergence_cutoff=1e5):
    """Repeated V-cycles until the residual drops by ``tol`` relative to the start."""
    E = np.array(E0, dtype=float)
    fine = hierarchy[0]
    r0 = np.linalg.norm(system_residual(fine, E, g))
    history = SolveHistory([1.0], [0.0])
    if r0 == 0.0:
        history.termination = "converged"
        return E, history
    for _ in range(max_cycles):
        start = time.perf_counter()
        E = cycle(hierarchy, m, E, g, relaxation)
        rel = np.linalg.norm(system_residual(fine, E, g)) / r0
        history.rel_residuals.append(float(rel))
        history.wall_ms.append(1e3 * (time.perf_counter() - start))
        if not np.isfinite(rel) or rel > divergence_cutoff:
            history.termination = "diverged"
            break
        if rel < tol:
            history.termination = "converged"
            break
    return E, history


def hierarchy_sizes(n_points, m, max_levels=None):
    """Point counts per level, coarsening while the coarse level keeps two points."""
    sizes = [n_points]
    while (max_levels is None or len(sizes) < max_levels) and (sizes[-1] - 1) // m + 1 >= 2:
        sizes.append((sizes[-1] - 1) // m + 1)
    return sizes


def _group_sum(values, n_groups, m):
    return values[: n_groups * m].reshape(n_groups, m, -1).sum(axis=1)


def build_sl_hierarchy(fine, m, n_levels, dt, h, p, speed_lookup, step_coeffs=None,
                       ideal_matrices=None, correct=True, normalization="factorial",
                       solver="lu", gmres_tol=0.01, gmres_iters=10,
                       max_displacement=DOMAIN_LENGTH):
    """Fine level plus coarse levels of corrected semi-Lagrangian propagators.

    ``speed_lookup(ends)`` returns a ``speed_at(x, j)`` callback giving speeds
    on fine level ``ends - j``.  The ideal-error model is either per-fine-step
    coefficients ``step_coeffs`` of ``D1 diag(c) D_p^T`` (any number of
    levels) or explicit first-coarse-level matrices ``ideal_matrices``
    (two levels only).  With ``correct=False`` the coarse steps are bare SL steps.
    """
    sizes = hierarchy_sizes(fine.n_points, m, n_levels)
    if correct and (step_coeffs is None) == (ideal_matrices is None):
        raise ValueError("give exactly one of step_coeffs and ideal_matrices")
    if ideal_matrices is not None and len(sizes) > 2:
        raise ValueError("explicit truncation matrices support two-level hierarchies only")
    scale = h ** (p + 1)
    hierarchy = [fine]
    sigma = g_prev = None
    for level in range(1, len(sizes)):
        span = m**level
        n_intervals = sizes[level] - 1
        ends = span * (np.arange(n_intervals) + 1)
        dep = coarse_departure_offsets(speed_lookup(ends), span, dt, h, ends, max_displacement)
        g_now = g_poly(dep.eps, p, normalization)
        if correct and step_coeffs is not None:
            if level == 1:
                sigma = _group_sum(step_coeffs, n_intervals, m) + scale * g_now
            else:
                sigma = scale * (g_now - _group_sum(g_prev, n_intervals, m)) + _group_sum(sigma, n_intervals, m)
        g_prev = g_now
        n_x = dep.eps.shape[-1]
        props = []
        for j in range(n_intervals):
            if not correct:
                matrix = None
            elif ideal_matrices is not None:
                matrix = sp.identity(n_x, format="csr") + ideal_matrices[j] + weighted_difference(scale * g_now[j], p, h)
            else:
                matrix = sp.identity(n_x, format="csr") + weighted_difference(sigma[j], p, h)
            piece = DepartureData(dep.eps[j], dep.shift[j])
            props.append(CoarseStepData(piece, p, matrix, solver, gmres_tol, gmres_iters))
        hierarchy.append(PropagatorLevel(props))
    return hierarchy


def vcycle_iteration(hierarchy, m, E, g):
    """Multilevel cycle: F-relaxation on the finest level, FCF below."""
    return cycle(hierarchy, m, E, g, ("F", "FCF"))
