"""Physical flux functions and Lax-Friedrichs numerical fluxes."""

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import brentq


def critical_points(fsecond, lo=0.0, hi=1.0, samples=2001):
    """Roots of ``fsecond`` on [lo, hi], bracketed on a uniform sample grid."""
    grid = np.linspace(lo, hi, samples)
    values = fsecond(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(brentq(fsecond, a, b, xtol=1e-15))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return tuple(sorted(roots))


@dataclass(frozen=True)
class FluxFunction:
    name: str
    f: Callable
    fprime: Callable
    critical_points_of_fprime: Tuple[float, ...] = field(default=())

    def max_abs_speed(self, lo, hi):
        """max |f'| over [lo, hi], elementwise for array bounds."""
        lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
        best = np.maximum(np.abs(self.fprime(lo)), np.abs(self.fprime(hi)))
        for c in self.critical_points_of_fprime:
            inside = (lo <= c) & (c <= hi)
            best = np.where(inside, np.maximum(best, abs(self.fprime(c))), best)
        return best


def _bl_denominator(u):
    return 5.0 * u * u - 2.0 * u + 1.0


def _bl_f(u):
    return 4.0 * u * u / _bl_denominator(u)


def _bl_fprime(u):
    return 8.0 * u * (1.0 - u) / _bl_denominator(u) ** 2


def _bl_fsecond(u):
    d = _bl_denominator(u)
    return 8.0 * ((1.0 - 2.0 * u) * d - 2.0 * u * (1.0 - u) * (10.0 * u - 2.0)) / d**3


def burgers_flux():
    return FluxFunction("burgers", lambda u: 0.5 * u * u, lambda u: u * 1.0)


def buckley_leverett_flux():
    return FluxFunction("bl", _bl_f, _bl_fprime, critical_points(_bl_fsecond))


def linear_flux(speed):
    return FluxFunction("linear", lambda u: speed * u, lambda u: speed + 0.0 * u)


FLUXES = {"burgers": burgers_flux, "bl": buckley_leverett_flux}


@dataclass(frozen=True)
class DissipationSpec:
    mode: str
    nu_global: float = 0.0
    u0_range: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.mode not in ("global", "local"):
            raise ValueError(f"dissipation mode must be 'global' or 'local', got {self.mode!r}")
        if self.nu_global < 0:
            raise ValueError("nu_global must be non-negative")


def glf_coefficient(flux, u0_range):
    lo, hi = u0_range
    if not np.isfinite(lo) or not np.isfinite(hi) or lo > hi:
        raise ValueError(f"empty or invalid range {u0_range}")
    return float(flux.max_abs_speed(lo, hi))


def llf_coefficient(flux, u_minus, u_plus):
    return flux.max_abs_speed(np.asarray(u_minus, float), np.asarray(u_plus, float))


def dissipation(flux, spec, u_minus, u_plus):
    if spec.mode == "global":
        return np.full(np.shape(u_minus), spec.nu_global)
    return llf_coefficient(flux, u_minus, u_plus)


def lf_flux(u_minus, u_plus, nu, flux):
    return 0.5 * (flux.f(u_minus) + flux.f(u_plus) + nu * (u_minus - u_plus))


def linear_lf_flux(alpha_minus, e_minus, alpha_plus, e_plus, nu):
    return 0.5 * ((alpha_minus + nu) * e_minus + (alpha_plus - nu) * e_plus)
