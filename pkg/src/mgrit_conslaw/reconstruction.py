"""Shifted-stencil and WENO interface reconstructions from cell averages.

Arrays carry cells on the last axis, so every routine also works on a stack
of time levels.  Two-cell stencil coefficients for ``k = 2``:

======  ===================  ===================
shift   right value (i+1/2)  left value (i-1/2)
======  ===================  ===================
0       (u_i + u_{i+1})/2    (3u_i - u_{i+1})/2
1       (3u_i - u_{i-1})/2   (u_{i-1} + u_i)/2
======  ===================  ===================
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple

import numpy as np

DEFAULT_WENO_EPSILON = 1e-6

# Optimal linear weights for the right (u^-) and left (u^+) reconstructions.
OPTIMAL_RIGHT = {1: (1.0,), 2: (2.0 / 3.0, 1.0 / 3.0)}
OPTIMAL_LEFT = {1: (1.0,), 2: (1.0 / 3.0, 2.0 / 3.0)}

# Stencil coefficients on cells (i-1, i, i+1) for each shift.
_RIGHT_COEFFS = {0: (Fraction(0), Fraction(1, 2), Fraction(1, 2)),
                 1: (Fraction(-1, 2), Fraction(3, 2), Fraction(0))}
_LEFT_COEFFS = {0: (Fraction(0), Fraction(3, 2), Fraction(-1, 2)),
                1: (Fraction(1, 2), Fraction(1, 2), Fraction(0))}


def _east(u):
    return np.roll(u, -1, axis=-1)


def _west(u):
    return np.roll(u, 1, axis=-1)


def _primitive_stencil_coefficients(shift):
    """Interface values of the quadratic primitive interpolant, exact rationals.

    The primitive of the data is interpolated at the three interfaces bounding
    cells ``i - shift`` and ``i - shift + 1`` (cell width 1, cell ``i`` is
    ``[0, 1]``) and differentiated at ``x = 1`` (right) and ``x = 0`` (left).
    """
    left_cell = -shift
    nodes = [Fraction(left_cell + j) for j in range(3)]
    right, left = [Fraction(0)] * 3, [Fraction(0)] * 3
    # primitive value at node j is the sum of the averages of the cells left of it
    for cell in range(2):
        weights = [Fraction(1) if j > cell else Fraction(0) for j in range(3)]
        for at, out in ((Fraction(1), right), (Fraction(0), left)):
            derivative = Fraction(0)
            for j in range(3):
                others = [nodes[q] for q in range(3) if q != j]
                denom = (nodes[j] - others[0]) * (nodes[j] - others[1])
                derivative += weights[j] * ((at - others[0]) + (at - others[1])) / denom
            out[left_cell + cell + 1] += derivative
    return tuple(right), tuple(left)


def check_stencil_coefficients():
    """Raise if the hard-coded two-cell coefficients disagree with the interpolant."""
    for shift in (0, 1):
        right, left = _primitive_stencil_coefficients(shift)
        if right != _RIGHT_COEFFS[shift] or left != _LEFT_COEFFS[shift]:
            raise RuntimeError(f"reconstruction coefficients wrong for shift {shift}")


check_stencil_coefficients()


def _apply_coeffs(u, coeffs):
    west, centre, east = (float(c) for c in coeffs)
    out = centre * u
    if west:
        out = out + west * _west(u)
    if east:
        out = out + east * _east(u)
    return out


def linear_reconstruct(ubar, k, shift, side):
    """Stencil reconstruction at the right (i+1/2) or left (i-1/2) edge of each cell."""
    ubar = np.asarray(ubar, dtype=float)
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    if not 0 <= shift <= k - 1:
        raise ValueError(f"shift {shift} out of range for k={k}")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if k == 1:
        return ubar.copy()
    table = _RIGHT_COEFFS if side == "right" else _LEFT_COEFFS
    return _apply_coeffs(ubar, table[shift])


def smoothness_indicators(ubar, k):
    """Per-cell indicators, stacked on a new leading axis of length ``k``."""
    ubar = np.asarray(ubar, dtype=float)
    if k == 1:
        return np.zeros((1,) + ubar.shape)
    if k != 2:
        raise ValueError(f"k must be 1 or 2, got {k}")
    forward = (_east(ubar) - ubar) ** 2
    backward = (ubar - _west(ubar)) ** 2
    return np.stack([forward, backward])


def weno_weights(ubar, k, side, epsilon=DEFAULT_WENO_EPSILON):
    """Nonlinear weights per cell; ``side='left'`` gives the tilde weights."""
    ubar = np.asarray(ubar, dtype=float)
    optimal = OPTIMAL_RIGHT[k] if side == "right" else OPTIMAL_LEFT[k]
    if k == 1:
        return np.ones((1,) + ubar.shape)
    beta = smoothness_indicators(ubar, k)
    # blown-up iterates turn into NaN here and are caught by the caller's finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        raw = np.stack([d / (epsilon + b) ** 2 for d, b in zip(optimal, beta)])
        return raw / raw.sum(axis=0)


def optimal_weights(shape, k, side):
    optimal = OPTIMAL_RIGHT[k] if side == "right" else OPTIMAL_LEFT[k]
    return np.stack([np.full(shape, d) for d in optimal])


@dataclass(frozen=True)
class ReconstructionConfig:
    k: int = 1
    weight_mode: str = "weno"
    epsilon_weno: float = DEFAULT_WENO_EPSILON
    clamp: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.k not in (1, 2):
            raise ValueError(f"k must be 1 or 2, got {self.k}")
        if self.weight_mode not in ("weno", "optimal_linear"):
            raise ValueError(f"unknown weight mode {self.weight_mode!r}")
        if self.epsilon_weno <= 0:
            raise ValueError("epsilon_weno must be positive")
        if self.clamp is not None and self.clamp[0] > self.clamp[1]:
            raise ValueError("clamp range is empty")

    @property
    def order(self):
        return 2 * self.k - 1


class InterfaceValues(NamedTuple):
    """Reconstructions at every interface plus the weights that produced them.

    ``right_weights[l][i]`` combines the stencils of cell ``i`` for ``u^-_{i+1/2}``;
    ``left_weights[l][i]`` combines those of cell ``i`` for ``u^+_{i-1/2}``.
    """

    minus: np.ndarray
    plus: np.ndarray
    right_weights: np.ndarray
    left_weights: np.ndarray


def combine_with_weights(values, k, right_weights, left_weights):
    """Weighted reconstruction of ``values`` using externally supplied weights."""
    values = np.asarray(values, dtype=float)
    if k == 1:
        return values.copy(), _east(values)
    minus = sum(right_weights[s] * linear_reconstruct(values, k, s, "right") for s in range(k))
    left_edge = sum(left_weights[s] * linear_reconstruct(values, k, s, "left") for s in range(k))
    return minus, _east(left_edge)


def weighted_reconstruct(ubar, cfg):
    ubar = np.asarray(ubar, dtype=float)
    if cfg.weight_mode == "weno":
        right = weno_weights(ubar, cfg.k, "right", cfg.epsilon_weno)
        left = weno_weights(ubar, cfg.k, "left", cfg.epsilon_weno)
    else:
        right = optimal_weights(ubar.shape, cfg.k, "right")
        left = optimal_weights(ubar.shape, cfg.k, "left")
    minus, plus = combine_with_weights(ubar, cfg.k, right, left)
    if cfg.clamp is not None:
        minus = np.clip(minus, *cfg.clamp)
        plus = np.clip(plus, *cfg.clamp)
    return InterfaceValues(minus, plus, right, left)
