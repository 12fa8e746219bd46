"""Truncation-error corrected semi-Lagrangian coarse propagators.

A coarse step is ``Psi e = M^{-1} S e`` with ``S`` the semi-Lagrangian step and
``M = I + T_ideal - T_direct``.  ``T_ideal`` models the leading truncation
error of ``m`` fine steps and ``T_direct`` that of the single SL step; both
are periodic difference stencils of the form ``D1 diag(c) D_p^T``.
"""

from math import factorial
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .flux import dissipation
from .reconstruction import weighted_reconstruct
from .semi_lagrangian import DepartureData, sl_step

DEFAULT_S_RK = 16.0 / 3.0
DEFAULT_S_FV = 4.0 / 3.0


def periodic_stencil(n_x, coeffs):
    """Sparse circulant with ``(A e)_i = sum coeffs[o] * e_{i+o}``."""
    rows = np.arange(n_x)
    data, cols, all_rows = [], [], []
    for offset, c in coeffs.items():
        all_rows.append(rows)
        cols.append(np.mod(rows + offset, n_x))
        data.append(np.full(n_x, float(c)))
    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(all_rows), np.concatenate(cols))), shape=(n_x, n_x)
    )
    return matrix.tocsr()


def d1(n_x, h):
    return periodic_stencil(n_x, {0: 1.0 / h, -1: -1.0 / h})


def d2_forward(n_x, h):
    """(e_i - 2 e_{i+1} + e_{i+2}) / h^2."""
    return periodic_stencil(n_x, {0: 1.0 / h**2, 1: -2.0 / h**2, 2: 1.0 / h**2})


def d2_central(n_x, h):
    """(e_{i-1} - 2 e_i + e_{i+1}) / h^2."""
    return periodic_stencil(n_x, {-1: 1.0 / h**2, 0: -2.0 / h**2, 1: 1.0 / h**2})


def d_left_biased(n_x, h, p):
    """First-order difference for the p-th derivative, one point biased to the left."""
    if p == 1:
        return d1(n_x, h)
    if p == 3:
        return periodic_stencil(n_x, {1: 1.0, 0: -3.0, -1: 3.0, -2: -1.0}) / h**3
    raise ValueError(f"order p must be 1 or 3, got {p}")


def g_poly(eps, p, normalization="factorial"):
    """Polynomial with roots at the integer offsets -k+1..k, scaled by 1/(p+1)! or 1/(p+1)."""
    if p not in (1, 3):
        raise ValueError(f"order p must be 1 or 3, got {p}")
    if normalization not in ("factorial", "linear"):
        raise ValueError(f"unknown normalization {normalization!r}")
    k = (p + 1) // 2
    eps = np.asarray(eps, dtype=float)
    product = np.ones_like(eps)
    for j in range(-k, k):
        product = product * (eps + j)
    scale = factorial(p + 1) if normalization == "factorial" else p + 1
    return product / scale


def weighted_difference(coeffs, p, h):
    """``D1 diag(coeffs) D_p^T`` as a sparse matrix."""
    n_x = coeffs.shape[-1]
    return (d1(n_x, h) @ sp.diags(coeffs) @ d_left_biased(n_x, h, p).T).tocsr()


def assemble_T_direct(dep, p, h, normalization="factorial"):
    return weighted_difference(-h ** (p + 1) * g_poly(dep.eps, p, normalization), p, h)


class LevelData(NamedTuple):
    """Per-level interface speeds, dissipation and reconstruction weights.

    ``right_weights``/``left_weights`` carry a leading stencil axis and are
    ``None`` for k=1.
    """

    speed: np.ndarray
    nu: np.ndarray
    right_weights: Optional[np.ndarray] = None
    left_weights: Optional[np.ndarray] = None

    def take(self, index):
        weights = (None, None) if self.right_weights is None else (
            self.right_weights[:, index], self.left_weights[:, index])
        return LevelData(self.speed[index], self.nu[index], *weights)


def level_data(levels, cfg):
    """Interface data of the nonlinear discretization on each time level."""
    rec = weighted_reconstruct(levels, cfg.recon)
    speed = 0.5 * (cfg.flux.fprime(rec.minus) + cfg.flux.fprime(rec.plus))
    nu = dissipation(cfg.flux, cfg.dissipation, rec.minus, rec.plus)
    if cfg.k == 1:
        return LevelData(speed, nu)
    return LevelData(speed, nu, rec.right_weights, rec.left_weights)


def ideal_coefficients_k1(data, dt, h):
    """Per-level beta for k=1; entries sum over the level axis for a coarse step."""
    return -0.5 * (dt * data.speed) ** 2 + 0.5 * h * dt * data.nu


def ideal_coefficients_k2(data, dt, h, s_rk=DEFAULT_S_RK, s_fv=DEFAULT_S_FV):
    """(beta^0, beta^1) for k=2 built from WENO weights at each level."""
    b, bt = data.right_weights, data.left_weights
    gamma0 = 2.0 * np.roll(bt[0], -1, axis=-1) + b[0]
    gamma1 = np.roll(bt[1], -1, axis=-1) + 2.0 * b[1]
    base = 0.75 * (s_rk * (dt * data.speed) ** 4 / (24.0 * h) + s_fv * h * h * dt * data.nu / 12.0)
    return base * gamma0, base * gamma1


def assemble_T_ideal(data, k, dt, h, s_rk=None, s_fv=None):
    """T_ideal from the interface data of the fine levels spanned by one coarse step.

    ``data`` arrays have the fine levels on their leading axis.  For k=2 the
    operator is ``D1 [diag(sum beta^0) D2_fwd - diag(sum beta^1) D2_central]``.
    """
    n_x = data.speed.shape[-1]
    if k == 1:
        if s_rk not in (None, 1.0) or s_fv not in (None, 1.0):
            raise ValueError("k=1 truncation model has no scaling parameters")
        return weighted_difference(ideal_coefficients_k1(data, dt, h).sum(axis=0), 1, h)
    if k != 2:
        raise ValueError(f"k must be 1 or 2, got {k}")
    s_rk = DEFAULT_S_RK if s_rk is None else s_rk
    s_fv = DEFAULT_S_FV if s_fv is None else s_fv
    beta0, beta1 = ideal_coefficients_k2(data, dt, h, s_rk, s_fv)
    inner = sp.diags(beta0.sum(axis=0)) @ d2_forward(n_x, h) - sp.diags(beta1.sum(axis=0)) @ d2_central(n_x, h)
    return (d1(n_x, h) @ inner).tocsr()


class CorrectionFactorization:
    """Sparse LU of ``I + T_ideal - T_direct``."""

    def __init__(self, matrix):
        self.matrix = sp.csc_matrix(matrix)
        try:
            self._lu = splu(self.matrix)
        except RuntimeError as err:
            dense = self.matrix.toarray()
            raise np.linalg.LinAlgError(
                f"singular correction matrix (condition estimate {np.linalg.cond(dense):.3e})"
            ) from err

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.ndim == 1:
            return self._lu.solve(rhs)
        return self._lu.solve(rhs.reshape(-1, rhs.shape[-1]).T).T.reshape(rhs.shape)


def correction_matrix(T_ideal, T_direct):
    n_x = T_ideal.shape[0]
    if T_direct.shape != T_ideal.shape:
        raise ValueError("correction operators differ in size")
    return sp.identity(n_x, format="csr") + T_ideal - T_direct


def factor_correction(T_ideal, T_direct):
    return CorrectionFactorization(correction_matrix(T_ideal, T_direct))


def gmres_solve(apply, rhs, rel_tol=0.01, max_iters=10):
    """Unrestarted GMRES from a zero guess; returns (solution, relative residual)."""
    rhs = np.asarray(rhs, dtype=float)
    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return np.zeros_like(rhs), 0.0
    n = rhs.size
    operator = LinearOperator((n, n), matvec=lambda v: apply(np.ravel(v)), dtype=float)
    x, _ = gmres(operator, rhs, rtol=rel_tol, atol=0.0, restart=max_iters, maxiter=1)
    return x, float(np.linalg.norm(rhs - apply(x)) / norm)


class CoarseStepData:
    """One coarse propagator ``Psi``; ``solver`` is 'lu', 'gmres' or 'none'."""

    def __init__(self, dep, p, matrix=None, solver="lu", gmres_tol=0.01, gmres_iters=10):
        if solver not in ("lu", "gmres", "none"):
            raise ValueError(f"unknown correction solver {solver!r}")
        self.dep = dep
        self.p = p
        self.solver = solver if matrix is not None else "none"
        self.matrix = None if matrix is None else sp.csr_matrix(matrix)
        self.gmres_tol = gmres_tol
        self.gmres_iters = gmres_iters
        self._factor = CorrectionFactorization(matrix) if self.solver == "lu" else None

    def correct(self, v):
        if self.solver == "none":
            return v
        if self.solver == "lu":
            return self._factor.solve(v)
        return gmres_solve(self.matrix.dot, v, self.gmres_tol, self.gmres_iters)[0]


def coarse_step(ebar, csd):
    return csd.correct(sl_step(ebar, csd.dep, csd.p))


def single_departure(dep, index):
    return DepartureData(dep.eps[index], dep.shift[index])
