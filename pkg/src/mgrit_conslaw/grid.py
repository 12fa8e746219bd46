"""Uniform periodic space-time meshes, coarse/fine time splittings and norms."""

from dataclasses import dataclass

import numpy as np

DOMAIN_LEFT = -1.0
DOMAIN_LENGTH = 2.0


@dataclass(frozen=True)
class Grid:
    """Cell-centred periodic mesh on (-1, 1) paired with a uniform time grid.

    Interface ``i + 1/2`` (the right edge of cell ``i``) is stored at slot ``i``.
    """

    n_x: int
    n_t: int
    final_time: float

    def __post_init__(self):
        if self.n_x < 4:
            raise ValueError(f"n_x must be at least 4, got {self.n_x}")
        if self.n_t < 1:
            raise ValueError(f"n_t must be at least 1, got {self.n_t}")
        if self.final_time <= 0:
            raise ValueError("final_time must be positive")

    @property
    def h(self):
        return DOMAIN_LENGTH / self.n_x

    @property
    def dt(self):
        if self.n_t < 2:
            return 0.0
        return self.final_time / (self.n_t - 1)

    @property
    def cell_edges(self):
        return DOMAIN_LEFT + self.h * np.arange(self.n_x + 1)

    @property
    def cell_centers(self):
        return DOMAIN_LEFT + self.h * (np.arange(self.n_x) + 0.5)

    @property
    def interfaces(self):
        """Positions x_{i+1/2}, slot i."""
        return DOMAIN_LEFT + self.h * (np.arange(self.n_x) + 1.0)

    @property
    def times(self):
        return self.dt * np.arange(self.n_t)

    def refined(self, n_t=None):
        """Mesh with twice the cells and, unless given, twice the time intervals."""
        if n_t is None:
            n_t = 2 * (self.n_t - 1) + 1
        return Grid(2 * self.n_x, n_t, self.final_time)


def periodic_index(i, n_x):
    if n_x < 1:
        raise ValueError("n_x must be positive")
    return np.mod(i, n_x)


def space_time_norm(values, kind="two", h=1.0):
    """Norm of a (levels, cells) array; ``one`` is the cell-width weighted sum."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite entries in norm argument")
    if kind == "two":
        return float(np.sqrt(np.sum(values * values)))
    if kind == "one":
        return float(h * np.sum(np.abs(values)))
    if kind == "inf":
        return float(np.max(np.abs(values))) if values.size else 0.0
    raise ValueError(f"unknown norm kind {kind!r}")


class CFSplitting:
    """Every ``m``-th time index is a C-point, starting from 0.

    When ``n_t - 1`` is not a multiple of ``m`` the trailing points after the
    last C-point are F-points that only F-relaxation ever updates.
    """

    def __init__(self, n_points, m):
        if m < 2:
            raise ValueError(f"coarsening factor must be at least 2, got {m}")
        if n_points < 1:
            raise ValueError("need at least one time point")
        self.n_points = n_points
        self.m = m
        self.c_points = np.arange(0, n_points, m)

    @property
    def n_coarse(self):
        return len(self.c_points)

    @property
    def is_exact_multiple(self):
        return (self.n_points - 1) % self.m == 0

    def is_c_point(self, index):
        return index % self.m == 0

    def interval_starts(self):
        """C-points that are followed by at least one fine step."""
        return self.c_points[self.c_points < self.n_points - 1]


# Mesh families as (n_x, n_t) pairs.
BURGERS_MESHES = {
    64: 161, 128: 321, 256: 641, 512: 1281, 1024: 2561, 2048: 5121, 4096: 10241,
}
BUCKLEY_LEVERETT_MESHES = {
    64: 188, 128: 375, 256: 748, 512: 1494, 1024: 2986, 2048: 5971, 4096: 11941,
}
BURGERS_SMOOTH_MESHES = {
    64: 78, 128: 309, 256: 617, 512: 1233, 1024: 2465, 2048: 4929, 4096: 9857,
}
FINAL_TIMES = {"burgers": 4.0, "bl": 2.0}


def tabulated_n_t(problem, initial_condition, n_x):
    """Number of time points used for a mesh family, keyed by cell count."""
    if problem == "burgers":
        table = BURGERS_SMOOTH_MESHES if initial_condition == "smooth" else BURGERS_MESHES
    elif problem == "bl":
        table = BUCKLEY_LEVERETT_MESHES
    else:
        raise ValueError(f"unknown problem {problem!r}")
    if n_x not in table:
        raise ValueError(f"no tabulated time grid for n_x={n_x}; pass n_t explicitly")
    return table[n_x]
