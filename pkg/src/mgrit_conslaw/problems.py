"""Initial conditions and ready-made discretizations of the two model problems."""

import numpy as np

from .flux import FLUXES, DissipationSpec, glf_coefficient
from .grid import FINAL_TIMES, Grid, tabulated_n_t
from .reconstruction import ReconstructionConfig
from .time_integration import DiscretizationConfig


def square_wave_primitive(x):
    """Antiderivative of the indicator of (-1/2, 0), extended periodically."""
    x = np.asarray(x, dtype=float)
    periods = np.floor((x + 1.0) / 2.0)
    local = x - 2.0 * periods
    return 0.5 * periods + np.clip(local + 0.5, 0.0, 0.5)


def smooth_wave(x):
    return 0.5 + 0.4 * np.cos(np.pi * x) + 0.1 * np.sin(3 * np.pi * x)


def smooth_wave_primitive(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * x + 0.4 * np.sin(np.pi * x) / np.pi - 0.1 * np.cos(3 * np.pi * x) / (3 * np.pi)


def square_wave(x):
    x = np.asarray(x, dtype=float)
    local = x - 2.0 * np.floor((x + 1.0) / 2.0)
    return ((local > -0.5) & (local < 0.0)).astype(float)


INITIAL_CONDITIONS = {
    "square": (square_wave, square_wave_primitive),
    "smooth": (smooth_wave, smooth_wave_primitive),
}


def initial_cell_averages(name, grid):
    """Exact cell averages of a named initial condition."""
    try:
        _, primitive = INITIAL_CONDITIONS[name]
    except KeyError:
        raise ValueError(f"unknown initial condition {name!r}") from None
    edges = grid.cell_edges
    return np.diff(primitive(edges)) / grid.h


def initial_range(name, samples=200001):
    """Range of the pointwise initial condition, by dense sampling."""
    pointwise, _ = INITIAL_CONDITIONS[name]
    values = pointwise(np.linspace(-1.0, 1.0, samples))
    return float(values.min()), float(values.max())


def make_discretization(problem, k, flux_mode, n_x, n_t=None, ic="square",
                        weight_mode="weno", final_time=None):
    """Discretization of Burgers ('burgers') or Buckley-Leverett ('bl').

    Buckley-Leverett with local dissipation clamps reconstructions to [0, 1].
    """
    if problem not in FLUXES:
        raise ValueError(f"unknown problem {problem!r}")
    if flux_mode not in ("glf", "llf"):
        raise ValueError(f"flux must be 'glf' or 'llf', got {flux_mode!r}")
    if n_t is None:
        n_t = tabulated_n_t(problem, ic, n_x)
    grid = Grid(n_x, n_t, FINAL_TIMES[problem] if final_time is None else final_time)
    flux = FLUXES[problem]()
    u0_range = initial_range(ic)
    if flux_mode == "glf":
        spec = DissipationSpec("global", glf_coefficient(flux, u0_range), u0_range)
    else:
        spec = DissipationSpec("local", 0.0, u0_range)
    clamp = (0.0, 1.0) if problem == "bl" and flux_mode == "llf" else None
    recon = ReconstructionConfig(k=k, weight_mode=weight_mode, clamp=clamp)
    return DiscretizationConfig(grid, recon, flux, spec)


def smooth_wave_derivative(x):
    return -0.4 * np.pi * np.sin(np.pi * x) + 0.3 * np.pi * np.cos(3 * np.pi * x)


def pre_shock_grid(n_x, final_time=0.25, courant=0.8, max_speed=None):
    """Time grid for a smooth-data study with a target Courant number."""
    if max_speed is None:
        max_speed = max(abs(v) for v in initial_range("smooth"))
    h = 2.0 / n_x
    n_steps = int(np.ceil(final_time * max_speed / (courant * h)))
    return Grid(n_x, n_steps + 1, final_time)
