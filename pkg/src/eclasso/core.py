"""Regression instances and the Gram-matrix quantities built from them.

Index sets are 0-based numpy integer arrays throughout the library; the CLI
and file formats translate to 1-based column numbers at the boundary.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DegeneratePartitionError, InvalidInputError, MissingGroundTruthError

SUPPORT_TOL = 1e-8


def support_of(beta, tol=SUPPORT_TOL):
    """Indices j with |beta[j]| > tol."""
    return np.flatnonzero(np.abs(np.asarray(beta)) > tol)


def _as_design(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.size == 0:
        raise InvalidInputError(f"design must be a nonempty 2-d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("design contains non-finite entries")
    return np.asfortranarray(X)


@dataclass(frozen=True)
class RegressionInstance:
    X: np.ndarray
    y: np.ndarray
    beta_true: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None
    sigma: float = 1.0
    support_true: np.ndarray = field(init=False)

    def __post_init__(self):
        X = _as_design(self.X)
        y = np.asarray(self.y, dtype=float).ravel()
        if y.shape[0] != X.shape[0]:
            raise InvalidInputError(f"len(y)={y.shape[0]} but X has {X.shape[0]} rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.beta_true is not None:
            b = np.asarray(self.beta_true, dtype=float).ravel()
            if b.shape[0] != X.shape[1]:
                raise InvalidInputError(f"len(beta_true)={b.shape[0]} but X has {X.shape[1]} columns")
            object.__setattr__(self, "beta_true", b)
            object.__setattr__(self, "support_true", np.flatnonzero(b != 0))
        else:
            object.__setattr__(self, "support_true", None)
        if self.noise is not None:
            e = np.asarray(self.noise, dtype=float).ravel()
            if e.shape[0] != X.shape[0]:
                raise InvalidInputError(f"len(noise)={e.shape[0]} but X has {X.shape[0]} rows")
            object.__setattr__(self, "noise", e)
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        for arr in (self.X, self.y, self.beta_true, self.noise):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return None if self.support_true is None else len(self.support_true)

    @property
    def has_ground_truth(self):
        return self.beta_true is not None and self.noise is not None


@dataclass(frozen=True)
class GramPartition:
    """Signal/noise blocks of C = X'X/n after moving the support to the front.

    ``perm`` maps block position to original column: ``C[np.ix_(perm, perm)]``
    equals the reassembled block matrix.
    """

    C11: np.ndarray
    C12: np.ndarray
    C21: np.ndarray
    C22: np.ndarray
    perm: np.ndarray

    @property
    def q(self):
        return self.C11.shape[0]

    def assemble(self):
        return np.block([[self.C11, self.C12], [self.C21, self.C22]])


def gram(X):
    """C = X'X / n, symmetric by construction."""
    X = _as_design(X)
    n = X.shape[0]
    C = (X.T @ X) / n
    upper = np.triu(C)
    return upper + np.triu(C, 1).T


def check_support(S, p):
    S = np.asarray(S, dtype=np.int64).ravel()
    if S.size and (S.min() < 0 or S.max() >= p):
        raise InvalidInputError(f"support indices must lie in [0, {p})")
    if np.unique(S).size != S.size:
        raise InvalidInputError("support contains duplicate indices")
    return np.sort(S)


def partition_gram(C, S):
    C = np.asarray(C, dtype=float)
    p = C.shape[0]
    S = check_support(S, p)
    if S.size == 0 or S.size == p:
        raise DegeneratePartitionError(
            f"support of size {S.size} leaves an empty block for p={p}"
        )
    rest = np.setdiff1d(np.arange(p), S)
    perm = np.concatenate([S, rest])
    q = S.size
    Cp = C[np.ix_(perm, perm)]
    return GramPartition(
        C11=Cp[:q, :q].copy(),
        C12=Cp[:q, q:].copy(),
        C21=Cp[q:, :q].copy(),
        C22=Cp[q:, q:].copy(),
        perm=perm,
    )


def noise_score(X, eps):
    """W = X' eps / sqrt(n)."""
    X = _as_design(X)
    eps = np.asarray(eps, dtype=float).ravel()
    if eps.shape[0] != X.shape[0]:
        raise InvalidInputError(f"len(eps)={eps.shape[0]} but X has {X.shape[0]} rows")
    return X.T @ eps / np.sqrt(X.shape[0])


def objective(X, y, beta, lam):
    """(1/2)||y - X beta||^2 + lam * ||beta||_1."""
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[1] != beta.shape[0] or X.shape[0] != y.shape[0]:
        raise InvalidInputError(
            f"shape mismatch: X {X.shape}, y {y.shape}, beta {beta.shape}"
        )
    if lam < 0:
        raise InvalidInputError("lambda must be nonnegative")
    r = y - X @ beta
    return 0.5 * float(r @ r) + lam * float(np.abs(beta).sum())


def _scaled_error(instance, beta_hat):
    if not instance.has_ground_truth:
        raise MissingGroundTruthError("instance carries no beta_true/noise")
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    return np.sqrt(instance.n) * (beta_hat - instance.beta_true)


def vn_value(instance, beta_hat, lam):
    """F(beta_hat) - F(beta_true) for the lasso objective F."""
    _scaled_error(instance, beta_hat)
    X, y = instance.X, instance.y
    return objective(X, y, beta_hat, lam) - objective(X, y, instance.beta_true, lam)


def vn_decomposition(instance, beta_hat, lam):
    """Split V_n(u), u = sqrt(n)(beta_hat - beta_true), into three terms.

    Returns ``(quadratic, noise, penalty)`` with quadratic = u'Cu/2,
    noise = -u'W and penalty = lam(||beta + u/sqrt(n)||_1 - ||beta||_1).
    The split relies on y = X beta_true + noise, so it only holds for
    synthetic instances.
    """
    u = _scaled_error(instance, beta_hat)
    n = instance.n
    Xu = instance.X @ u
    quadratic = 0.5 * float(Xu @ Xu) / n
    W = noise_score(instance.X, instance.noise)
    noise_term = -float(u @ W)
    beta = instance.beta_true
    penalty = lam * (float(np.abs(beta + u / np.sqrt(n)).sum()) - float(np.abs(beta).sum()))
    return quadratic, noise_term, penalty
