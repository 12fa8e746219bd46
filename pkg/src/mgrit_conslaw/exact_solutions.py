"""Exact entropy solution of periodic Burgers from the square wave, and error norms.

Up to t = 1 the solution is a rarefaction fan from x = -1/2, a plateau of 1
and a shock moving at speed 1/2.  Once the fan catches the shock, only the fan
remains, cut off by a shock at sqrt(t) - 1/2.  The formula is valid while
the shock has not reached the foot of the next period's fan, i.e. t <= 4.
"""

from typing import NamedTuple

import numpy as np

MAX_TIME = 4.0


def _check_time(t):
    if not 0.0 <= t <= MAX_TIME:
        raise ValueError(f"exact solution available for 0 <= t <= {MAX_TIME}, got {t}")


def shock_position(t):
    _check_time(t)
    return 0.5 * t if t <= 1.0 else np.sqrt(t) - 0.5


def _single_period(x, t):
    if t == 0.0:
        return ((x > -0.5) & (x < 0.0)).astype(float)
    shock = shock_position(t)
    fan_end = min(t - 0.5, shock)
    fan = (x + 0.5) / t
    u = np.where((x >= -0.5) & (x < fan_end), fan, 0.0)
    if t < 1.0:
        u = np.where((x >= fan_end) & (x < shock), 1.0, u)
    return u


def burgers_exact(x, t):
    """Pointwise solution on (-1, 1), periodically extended."""
    _check_time(t)
    x = np.asarray(x, dtype=float)
    local = x - 2.0 * np.floor((x + 1.0) / 2.0)
    return _single_period(local, t) + _single_period(local + 2.0, t)


def _primitive(x, t):
    """Integral of the single-period solution from -infinity to x."""
    if t == 0.0:
        return np.clip(x + 0.5, 0.0, 0.5)
    shock = shock_position(t)
    fan_end = min(t - 0.5, shock)
    y = np.clip(x, -0.5, shock)
    ramp = (np.minimum(y, fan_end) + 0.5) ** 2 / (2.0 * t)
    plateau = np.maximum(y - fan_end, 0.0) if t < 1.0 else 0.0
    return ramp + plateau


def cell_average_exact(t, grid):
    """Exact cell averages, integrating the piecewise-linear solution in closed form."""
    _check_time(t)
    edges = grid.cell_edges
    total = _primitive(edges, t) + _primitive(edges + 2.0, t)
    return np.diff(total) / grid.h


def exact_space_time(grid):
    return np.stack([cell_average_exact(t, grid) for t in grid.times])


class ErrorMetrics(NamedTuple):
    l1_per_level: np.ndarray
    linf_per_level: np.ndarray
    l1: float
    linf: float


def error_metrics(values, reference, h):
    """Discrete L1 (cell-width weighted, summed over levels) and max-norm of ``reference - values``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    if values.shape != reference.shape:
        raise ValueError(f"shape mismatch {values.shape} vs {reference.shape}")
    diff = np.abs(reference - values)
    l1 = h * diff.sum(axis=-1)
    linf = diff.max(axis=-1)
    return ErrorMetrics(l1, linf, float(l1.sum()), float(linf.max()))


def characteristic_solution(x, t, u0, u0_prime, tol=1e-14, max_newton=50):
    """Smooth Burgers solution before shock formation: solve u = u0(x - u t) by Newton."""
    x = np.asarray(x, dtype=float)
    foot = x - u0(x) * t
    for _ in range(max_newton):
        residual = foot + u0(foot) * t - x
        update = residual / (1.0 + u0_prime(foot) * t)
        foot = foot - update
        if np.max(np.abs(update)) < tol:
            break
    else:
        raise RuntimeError("characteristic foot did not converge; is t past the shock time?")
    return u0(foot)


def characteristic_cell_averages(t, grid, u0, u0_prime, points=8):
    """Cell averages of the characteristic solution by Gauss-Legendre quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(points)
    centres = grid.cell_centers[:, None]
    x = centres + 0.5 * grid.h * nodes[None, :]
    return characteristic_solution(x, t, u0, u0_prime) @ weights / 2.0
