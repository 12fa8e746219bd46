"""Linearized time-step operators and the block-bidiagonal space-time system.

Dissipation is frozen at the linearization state (for the local flux this is a
Picard treatment of the non-smooth maximum).  The WENO reconstruction is
linearized either by freezing its weights (``picard``) or by a one-sided
finite difference of the full nonlinear reconstruction (``newton_fd``).
"""

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .flux import dissipation, linear_lf_flux
from .reconstruction import combine_with_weights, weighted_reconstruct
from .time_integration import check_finite

RECON_MODES = ("exact_k1", "newton_fd", "picard")


@dataclass(frozen=True)
class LinearizationMode:
    recon_lin: str = "newton_fd"
    fd_mu: float = 0.1

    def __post_init__(self):
        if self.recon_lin not in RECON_MODES:
            raise ValueError(f"unknown reconstruction linearization {self.recon_lin!r}")
        if self.fd_mu <= 0:
            raise ValueError("fd_mu must be positive")

    def resolved(self, k):
        """The mode actually used for stencil order ``k``."""
        if k == 1:
            return "exact_k1"
        if self.recon_lin == "exact_k1":
            raise ValueError("exact_k1 linearization applies to k=1 only")
        return self.recon_lin


@dataclass
class LinearizationPoint:
    """Frozen data defining the linearized flux at one or many states.

    All arrays share a leading batch shape followed by the cell axis; fields not
    needed by the chosen mode are left as ``None``.
    """

    alpha_minus: np.ndarray
    alpha_plus: np.ndarray
    nu: np.ndarray
    state: Optional[np.ndarray] = None
    minus: Optional[np.ndarray] = None
    plus: Optional[np.ndarray] = None
    right_weights: Optional[np.ndarray] = None
    left_weights: Optional[np.ndarray] = None

    def take(self, index):
        """Sub-batch along the leading axis; weights keep their stencil axis first."""
        picked = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                picked[f.name] = None
            elif f.name.endswith("weights"):
                picked[f.name] = value[:, index]
            else:
                picked[f.name] = value[index]
        return LinearizationPoint(**picked)

    @property
    def mean_speed(self):
        return 0.5 * (self.alpha_minus + self.alpha_plus)


def build_linearization_point(stage_state, cfg, mode=None, keep_weights=None):
    mode = mode or LinearizationMode()
    recon_mode = mode.resolved(cfg.k)
    state = np.asarray(stage_state, dtype=float)
    rec = weighted_reconstruct(state, cfg.recon)
    nu = dissipation(cfg.flux, cfg.dissipation, rec.minus, rec.plus)
    point = LinearizationPoint(cfg.flux.fprime(rec.minus), cfg.flux.fprime(rec.plus), nu)
    if recon_mode == "newton_fd":
        point.state, point.minus, point.plus = state, rec.minus, rec.plus
    if recon_mode == "picard" or keep_weights:
        point.right_weights, point.left_weights = rec.right_weights, rec.left_weights
    return point


def linearized_reconstruct(e, point, cfg, mode=None):
    """Interface values (e^-, e^+) of the linearized reconstruction."""
    mode = mode or LinearizationMode()
    recon_mode = mode.resolved(cfg.k)
    e = np.asarray(e, dtype=float)
    if recon_mode == "exact_k1":
        return e, np.roll(e, -1, axis=-1)
    if recon_mode == "picard":
        return combine_with_weights(e, cfg.k, point.right_weights, point.left_weights)
    mu = mode.fd_mu
    shifted = weighted_reconstruct(point.state + mu * e, cfg.recon)
    return (shifted.minus - point.minus) / mu, (shifted.plus - point.plus) / mu


def linearized_spatial_operator(e, point, cfg, mode=None):
    e_minus, e_plus = linearized_reconstruct(e, point, cfg, mode)
    flux = linear_lf_flux(point.alpha_minus, e_minus, point.alpha_plus, e_plus, point.nu)
    return -(flux - np.roll(flux, 1, axis=-1)) / cfg.grid.h


def _euler(e, point, cfg, mode):
    return e + cfg.grid.dt * linearized_spatial_operator(e, point, cfg, mode)


def linearized_step(e, points, cfg, mode=None):
    """Apply the linearized step; ``points`` holds one point per Runge-Kutta stage."""
    e = np.asarray(e, dtype=float)
    if len(points) < cfg.n_stages:
        raise ValueError(f"need {cfg.n_stages} stage points, got {len(points)}")
    if cfg.k == 1:
        return _euler(e, points[0], cfg, mode)
    e1 = _euler(e, points[0], cfg, mode)
    e2 = 0.75 * e + 0.25 * _euler(e1, points[1], cfg, mode)
    return e / 3.0 + (2.0 / 3.0) * _euler(e2, points[2], cfg, mode)


def stage_points(levels, stages, cfg, mode=None, keep_weights=None):
    """Per-stage linearization points for every step n = 0..n_t-2.

    ``stages[s]`` holds stage s+1 of every step (unused for k=1).
    """
    states = [np.asarray(levels)[:-1]] + ([] if cfg.k == 1 else [stages[0], stages[1]])
    return tuple(build_linearization_point(s, cfg, mode, keep_weights) for s in states)


def take_points(points, index):
    return tuple(p.take(index) for p in points)


def apply_linearized_system(points, e, cfg, mode=None):
    """(P e)^0 = e^0 and (P e)^{n+1} = e^{n+1} - Phi_lin^n e^n."""
    e = np.asarray(e, dtype=float)
    out = np.empty_like(e)
    out[0] = e[0]
    out[1:] = e[1:] - linearized_step(e[:-1], points, cfg, mode)
    return out


def solve_linearized_direct(points, r, cfg, mode=None):
    """Forward substitution e^{n+1} = Phi_lin^n e^n + r^{n+1}."""
    r = np.asarray(r, dtype=float)
    e = np.empty_like(r)
    e[0] = r[0]
    for n in range(r.shape[0] - 1):
        e[n + 1] = linearized_step(e[n], take_points(points, n), cfg, mode) + r[n + 1]
        check_finite(e[n + 1], "linearized solve", n)
    return e
