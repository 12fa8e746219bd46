"""Conservative finite-volume semi-Lagrangian step used as a coarse propagator.

The flux through interface i+1/2 over a coarse step is the integral of the
data between the departure point and the interface.  It splits into whole
cells between x_{i+1/2} and the interface ``shift`` cells upwind of it, plus
a fractional piece of width ``eps * h`` inside the departure cell
``i - shift``.
"""

from typing import NamedTuple

import numpy as np

from .grid import DOMAIN_LEFT, DOMAIN_LENGTH

# Offsets closer than this to an integer are snapped to it.
SNAP_TOLERANCE = 1e-12


class DepartureData(NamedTuple):
    eps: np.ndarray
    shift: np.ndarray


def interpolate_interface_values(values, x, h):
    """Periodic piecewise-linear interpolation of interface data at positions ``x``.

    ``values[..., i]`` lives at x_{i+1/2}; ``x`` has the same leading shape.
    """
    n_x = values.shape[-1]
    s = (x - (DOMAIN_LEFT + h)) / h
    left = np.floor(s)
    theta = s - left
    left = np.mod(left.astype(np.int64), n_x)
    right = np.mod(left + 1, n_x)
    lo = np.take_along_axis(values, left, axis=-1)
    hi = np.take_along_axis(values, right, axis=-1)
    return (1.0 - theta) * lo + theta * hi


def fine_departure_step(x_arrival, interface_speeds, dt, h):
    """One backward Euler-characteristic step with linearly interpolated speeds."""
    x_arrival = np.asarray(x_arrival, dtype=float)
    return x_arrival - dt * interpolate_interface_values(interface_speeds, x_arrival, h)


def decompose_displacement(displacement):
    """Split a mesh-normalized displacement into whole cells and a fraction in [0, 1)."""
    shift = np.floor(displacement)
    eps = displacement - shift
    up = eps > 1.0 - SNAP_TOLERANCE
    shift = np.where(up, shift + 1, shift)
    eps = np.where(up | (eps < SNAP_TOLERANCE), 0.0, eps)
    return DepartureData(eps, shift.astype(np.int64))


def coarse_departure_offsets(speed_at, n_steps, dt, h, arrival, max_displacement=DOMAIN_LENGTH):
    """Backtrack interface arrivals through ``n_steps`` fine levels.

    ``speed_at(x, j)`` returns speeds at positions ``x`` on fine level
    ``arrival - j`` for j = 0..n_steps-1, i.e. the level being left.
    ``arrival`` fixes the leading batch shape of the positions.  Travel
    beyond ``max_displacement`` is rejected unless it is ``None``.
    """
    n_x = int(round(DOMAIN_LENGTH / h))
    start = DOMAIN_LEFT + h * (np.arange(n_x) + 1.0)
    x = np.broadcast_to(start, np.shape(arrival) + (n_x,)).copy()
    for j in range(n_steps):
        x = x - dt * speed_at(x, j)
    displacement = (start - x) / h
    if max_displacement is not None and np.any(np.abs(displacement) * h > max_displacement):
        raise ValueError("characteristics travel further than the domain length in one coarse step")
    return decompose_displacement(displacement)


def interface_speed_lookup(level_speeds, interval_ends, h):
    """``speed_at`` callback for backtracking through tabulated interface speeds.

    ``level_speeds[n]`` holds interface speeds on fine level n and
    ``interval_ends`` the arrival level of each batch row.
    """
    ends = np.asarray(interval_ends)

    def speed_at(x, j):
        return interpolate_interface_values(level_speeds[ends - j], x, h)

    return speed_at


def fractional_weights(eps, p):
    """Weights on cells (c-1, c, c+1) for the right-end integral of width eps in cell c.

    The integral of the cell-average-preserving reconstruction over the
    rightmost ``eps`` fraction of cell c, divided by h.
    """
    if p == 1:
        zero = np.zeros_like(eps)
        return zero, eps, zero
    if p == 3:
        west = eps * (eps * eps - 1.0) / 6.0
        centre = -eps * (eps + 1.0) * (2.0 * eps - 5.0) / 6.0
        east = eps * (eps - 1.0) * (eps - 2.0) / 6.0
        return west, centre, east
    raise ValueError(f"order p must be 1 or 3, got {p}")


def _prefix_sum(values, index):
    """Sum of cells j < index of the periodic extension of ``values``."""
    n_x = values.shape[-1]
    cum = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)], axis=-1)
    total = cum[..., -1:]
    q, r = np.divmod(index, n_x)
    return q * total + np.take_along_axis(cum, r, axis=-1)


def sl_fluxes(ebar, dep, p):
    """Integrated flux (divided by h) through each interface over the coarse step."""
    ebar = np.asarray(ebar, dtype=float)
    n_x = ebar.shape[-1]
    cells = np.broadcast_to(np.arange(n_x), dep.shift.shape)
    whole = _prefix_sum(ebar, cells + 1) - _prefix_sum(ebar, cells - dep.shift + 1)
    departure = np.mod(cells - dep.shift, n_x)
    west, centre, east = fractional_weights(dep.eps, p)
    frac = centre * np.take_along_axis(ebar, departure, axis=-1)
    if p > 1:
        frac = frac + west * np.take_along_axis(ebar, np.mod(departure - 1, n_x), axis=-1)
        frac = frac + east * np.take_along_axis(ebar, np.mod(departure + 1, n_x), axis=-1)
    return whole + frac


def sl_step(ebar, dep, p):
    ebar = np.asarray(ebar, dtype=float)
    ebar, eps, shift = np.broadcast_arrays(ebar, dep.eps, dep.shift)
    flux = sl_fluxes(ebar, DepartureData(eps, shift), p)
    return ebar - (flux - np.roll(flux, 1, axis=-1))
