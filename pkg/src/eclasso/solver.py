"""Cyclic coordinate descent for the lasso, warm-started paths and KKT certificates.

The objective is (1/2)||y - X b||^2 + lam ||b||_1 with no 1/n scaling, so
``lambda_max`` is ||X'y||_inf rather than the glmnet-style ||X'y||_inf / n.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numba
import numpy as np

from .core import SUPPORT_TOL, _as_design, objective, support_of
from .exceptions import ConvergenceError, InvalidInputError

KKT_RTOL = 1e-6
CHANGE_RTOL = 1e-10
MAX_SWEEPS = 100_000
GRID_COUNT = 100
GRID_RATIO = 1e-3


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0); vectorised over ``z``."""
    if np.any(np.asarray(t) < 0):
        raise InvalidInputError("threshold must be nonnegative")
    z = np.asarray(z, dtype=float)
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def lambda_max(X, y):
    X = _as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise InvalidInputError(f"len(y)={y.shape[0]} but X has {X.shape[0]} rows")
    return float(np.max(np.abs(X.T @ y)))


def kkt_tolerance(X, y, rtol=KKT_RTOL):
    return rtol * (1.0 + lambda_max(X, y))


@numba.njit(cache=True)
def _kkt_from_grad(grad, beta, lam):
    worst = 0.0
    for j in range(beta.shape[0]):
        b = beta[j]
        if b > 0.0:
            v = abs(grad[j] - lam)
        elif b < 0.0:
            v = abs(grad[j] + lam)
        else:
            v = abs(grad[j]) - lam
        if v > worst:
            worst = v
    return worst


def kkt_check(X, y, lam, beta):
    """Largest violation of the lasso subgradient conditions at ``beta``.

    Zero exactly when ``beta`` minimises the objective for this ``lam``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    beta = np.asarray(beta, dtype=float).ravel()
    grad = X.T @ (y - X @ beta)
    return float(_kkt_from_grad(grad, beta, float(lam)))


@numba.njit(cache=True)
def _sweep(X, col_sq, lam, beta, r, idx):
    """One cyclic pass over ``idx``; returns the largest |coefficient change|."""
    n = X.shape[0]
    max_change = 0.0
    for k in range(idx.shape[0]):
        j = idx[k]
        cj = col_sq[j]
        if cj == 0.0:
            continue
        old = beta[j]
        rho = 0.0
        for i in range(n):
            rho += X[i, j] * r[i]
        z = rho + cj * old
        if z > lam:
            new = (z - lam) / cj
        elif z < -lam:
            new = (z + lam) / cj
        else:
            new = 0.0
        delta = new - old
        if delta != 0.0:
            for i in range(n):
                r[i] -= delta * X[i, j]
            beta[j] = new
            if abs(delta) > max_change:
                max_change = abs(delta)
    return max_change


@numba.njit(cache=True)
def _max_abs(v):
    m = 0.0
    for i in range(v.shape[0]):
        a = abs(v[i])
        if a > m:
            m = a
    return m


@numba.njit(cache=True)
def _cd(X, y, col_sq, lam, beta, max_sweeps, change_rtol, kkt_tol):
    """Active-set cyclic coordinate descent.

    A full sweep refreshes the active set, inner sweeps run over the nonzero
    coordinates until the coefficient change stalls, and a KKT evaluation
    over every coordinate decides whether another full sweep is needed.
    Returns ``(sweeps, kkt_residual, converged)``; ``beta`` is updated in place.
    """
    p = X.shape[1]
    r = y - X @ beta
    all_idx = np.arange(p)
    sweeps = 0
    kkt = np.inf
    while sweeps < max_sweeps:
        change = _sweep(X, col_sq, lam, beta, r, all_idx)
        sweeps += 1
        if change > change_rtol * (1.0 + _max_abs(beta)):
            active = np.flatnonzero(beta)
            while sweeps < max_sweeps:
                change = _sweep(X, col_sq, lam, beta, r, active)
                sweeps += 1
                if change <= change_rtol * (1.0 + _max_abs(beta)):
                    break
        # recompute the residual so roundoff from incremental updates does not accumulate
        r = y - X @ beta
        grad = X.T @ r
        kkt = _kkt_from_grad(grad, beta, lam)
        if kkt <= kkt_tol and change <= change_rtol * (1.0 + _max_abs(beta)):
            return sweeps, kkt, True
    return sweeps, kkt, False


@dataclass(frozen=True)
class LassoFit:
    beta_hat: np.ndarray
    lam: float
    kkt_residual: float
    objective: float
    iterations: int
    support_hat: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "support_hat", support_of(self.beta_hat, SUPPORT_TOL))


def solve_lasso(X, y, lam, max_iterations=MAX_SWEEPS, kkt_rtol=KKT_RTOL,
                change_rtol=CHANGE_RTOL, warm_start=None):
    """Minimise (1/2)||y - X b||^2 + lam ||b||_1 by coordinate descent.

    The returned fit is certified: its KKT residual is at most
    ``kkt_rtol * (1 + ||X'y||_inf)``. Raises ConvergenceError otherwise.
    """
    if lam < 0:
        raise InvalidInputError("lambda must be nonnegative")
    X = _as_design(X)
    y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
    n, p = X.shape
    if y.shape[0] != n:
        raise InvalidInputError(f"len(y)={n} expected, got {y.shape[0]}")
    if warm_start is None:
        beta = np.zeros(p)
    else:
        beta = np.array(warm_start, dtype=float).ravel()
        if beta.shape[0] != p:
            raise InvalidInputError("warm start has wrong length")
    col_sq = np.einsum("ij,ij->j", X, X)
    kkt_tol = kkt_rtol * (1.0 + float(np.max(np.abs(X.T @ y))))
    sweeps, kkt, ok = _cd(X, y, col_sq, float(lam), beta, int(max_iterations),
                          float(change_rtol), float(kkt_tol))
    if not ok:
        raise ConvergenceError(
            f"no certified solution at lambda={lam:g} after {sweeps} sweeps "
            f"(kkt residual {kkt:.3g} vs tolerance {kkt_tol:.3g})",
            beta=beta, kkt_residual=kkt, lam=lam,
        )
    return LassoFit(beta_hat=beta, lam=float(lam), kkt_residual=float(kkt),
                    objective=objective(X, y, beta, lam), iterations=int(sweeps))


@dataclass(frozen=True)
class PathResult:
    lambdas: np.ndarray
    fits: List[LassoFit]
    recovery_lambda_set: Optional[np.ndarray] = None
    truncated: bool = False

    @property
    def coefs(self):
        """(len(lambdas), p) array of fitted coefficients."""
        return np.vstack([f.beta_hat for f in self.fits])


def lambda_grid(lam_max, count=GRID_COUNT, ratio=GRID_RATIO):
    if count < 2:
        raise InvalidInputError("grid needs at least two points")
    if not 0 < ratio < 1:
        raise InvalidInputError("grid ratio must lie in (0, 1)")
    if not lam_max > 0:
        raise InvalidInputError("lambda_max is zero; the path is degenerate (y orthogonal to X)")
    return lam_max * ratio ** (np.arange(count) / (count - 1))


def lasso_path(X, y, count=GRID_COUNT, ratio=GRID_RATIO, lambdas=None,
               target_support=None, max_support=None, **solver_options):
    """Warm-started lasso fits over a decreasing lambda grid.

    By default the grid is ``count`` log-spaced values from lambda_max down to
    ``ratio * lambda_max``. ``max_support`` stops the path once a fit selects
    more than that many variables (glmnet's ``dfmax``); the result is then
    marked ``truncated``. When ``target_support`` is given,
    ``recovery_lambda_set`` lists the grid indices whose fitted support equals it.
    """
    X = _as_design(X)
    y = np.asarray(y, dtype=float).ravel()
    if lambdas is None:
        lambdas = lambda_grid(lambda_max(X, y), count, ratio)
    else:
        lambdas = np.asarray(lambdas, dtype=float)
        if np.any(np.diff(lambdas) >= 0):
            raise InvalidInputError("lambdas must be strictly decreasing")
    fits = []
    warm = None
    truncated = False
    for lam in lambdas:
        try:
            fit = solve_lasso(X, y, lam, warm_start=warm, **solver_options)
        except ConvergenceError as err:
            raise ConvergenceError(f"path failed at lambda={lam:g}: {err}",
                                   beta=err.beta, kkt_residual=err.kkt_residual,
                                   lam=lam) from err
        fits.append(fit)
        warm = fit.beta_hat
        if max_support is not None and len(fit.support_hat) > max_support:
            truncated = len(fits) < len(lambdas)
            break
    lambdas = lambdas[:len(fits)]
    recovery = None
    if target_support is not None:
        target = np.sort(np.asarray(target_support, dtype=np.int64))
        recovery = np.array([i for i, f in enumerate(fits)
                             if np.array_equal(f.support_hat, target)], dtype=np.int64)
    return PathResult(lambdas=lambdas, fits=fits, recovery_lambda_set=recovery,
                      truncated=truncated)
