"""Finite-volume spatial operator, explicit Runge-Kutta steps and the space-time residual.

Forward Euler is paired with the first-order scheme (k=1) and the three-stage
SSP Runge-Kutta method with the third-order WENO scheme (k=2).
"""

from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from .flux import DissipationSpec, FluxFunction, dissipation, lf_flux
from .grid import Grid
from .reconstruction import ReconstructionConfig, weighted_reconstruct

BLOWUP_THRESHOLD = 1e10

# Rows processed per batched call; bounds temporary memory.
BATCH_ELEMENTS = 1 << 21


class BlowUpError(FloatingPointError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class DiscretizationConfig:
    grid: Grid
    recon: ReconstructionConfig
    flux: FluxFunction
    dissipation: DissipationSpec

    @property
    def k(self):
        return self.recon.k

    @property
    def order(self):
        return self.recon.order

    @property
    def n_stages(self):
        return 1 if self.k == 1 else 3

    def with_grid(self, grid):
        return DiscretizationConfig(grid, self.recon, self.flux, self.dissipation)


def check_finite(values, what="state", step=None):
    if not np.all(np.isfinite(values)) or np.max(np.abs(values), initial=0.0) > BLOWUP_THRESHOLD:
        where = "" if step is None else f" at step {step}"
        raise BlowUpError(f"{what} blew up{where}", step)


def numerical_flux(ubar, cfg):
    """LF flux at every interface i+1/2 (slot i)."""
    rec = weighted_reconstruct(ubar, cfg.recon)
    nu = dissipation(cfg.flux, cfg.dissipation, rec.minus, rec.plus)
    return lf_flux(rec.minus, rec.plus, nu, cfg.flux)


def spatial_operator(ubar, cfg):
    flux = numerical_flux(np.asarray(ubar, dtype=float), cfg)
    out = -(flux - np.roll(flux, 1, axis=-1)) / cfg.grid.h
    check_finite(out, "spatial operator")
    return out


class StepResult(NamedTuple):
    state: np.ndarray
    stages: Tuple[np.ndarray, ...]


def erk_step(ubar, cfg, check=True):
    """One time step; returns the new state and the intermediate stage states."""
    u = np.asarray(ubar, dtype=float)
    dt = cfg.grid.dt
    if cfg.k == 1:
        out = u + dt * spatial_operator(u, cfg)
        stages = ()
    else:
        u1 = u + dt * spatial_operator(u, cfg)
        u2 = 0.75 * u + 0.25 * (u1 + dt * spatial_operator(u1, cfg))
        out = u / 3.0 + (2.0 / 3.0) * (u2 + dt * spatial_operator(u2, cfg))
        stages = (u1, u2)
    if check:
        check_finite(out, "time step")
    return StepResult(out, stages)


def batched_step(states, cfg, with_stages=False):
    """Apply one step to each row of ``states``, in memory-bounded chunks."""
    states = np.asarray(states, dtype=float)
    out = np.empty_like(states)
    stages = np.empty((cfg.n_stages - 1,) + states.shape) if with_stages else None
    rows = max(1, BATCH_ELEMENTS // states.shape[-1])
    for start in range(0, states.shape[0], rows):
        chunk = slice(start, start + rows)
        res = erk_step(states[chunk], cfg)
        out[chunk] = res.state
        if with_stages:
            for s, stage in enumerate(res.stages):
                stages[s, chunk] = stage
    return (out, stages) if with_stages else out


@dataclass
class SpaceTimeState:
    """Cell averages at every time level; ``stages[s, n]`` is stage s+1 of step n."""

    levels: np.ndarray
    stages: np.ndarray = None

    @property
    def n_t(self):
        return self.levels.shape[0]


def time_march(u0, cfg, cache_stages=False):
    u0 = np.asarray(u0, dtype=float)
    n_t = cfg.grid.n_t
    levels = np.empty((n_t, u0.size))
    levels[0] = u0
    stages = np.empty((cfg.n_stages - 1, max(n_t - 1, 0), u0.size)) if cache_stages else None
    for n in range(n_t - 1):
        try:
            res = erk_step(levels[n], cfg)
        except BlowUpError as err:
            raise BlowUpError(str(err), n) from None
        levels[n + 1] = res.state
        if cache_stages:
            for s, stage in enumerate(res.stages):
                stages[s, n] = stage
    return SpaceTimeState(levels, stages)


def nonlinear_residual(levels, u0, cfg, stepped=None):
    """r^0 = u0 - U^0 and r^{n+1} = Phi(U^n) - U^{n+1}.

    ``stepped`` may carry precomputed Phi(U^n) rows to avoid recomputation.
    """
    levels = np.asarray(levels, dtype=float)
    if stepped is None:
        stepped = batched_step(levels[:-1], cfg)
    r = np.empty_like(levels)
    r[0] = u0 - levels[0]
    r[1:] = stepped - levels[1:]
    return r
