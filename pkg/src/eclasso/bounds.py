"""Closed-form selection-failure bounds and the lambda levels that trigger them.

Big-O constants are taken as 1, so the rate functions are rates up to
constants; only ``theorem2_failure_bound`` is a literal inequality.
Logarithms are natural.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import noise_score
from .exceptions import InsufficientSampleError, InvalidInputError, RegimeViolationError


@dataclass(frozen=True)
class RegimeSpec:
    n: int
    c: float
    eta: float
    b: float = 0.0
    regime: str = "polynomial"

    def __post_init__(self):
        if self.regime == "polynomial":
            if not self.eta > self.c:
                raise RegimeViolationError(f"polynomial regime needs eta > c (eta={self.eta}, c={self.c})")
        elif self.regime == "ultra_high":
            if not 0 < self.c < 1:
                raise RegimeViolationError(f"ultra-high regime needs 0 < c < 1 (c={self.c})")
        else:
            raise InvalidInputError(f"unknown regime {self.regime!r}")


def theorem2_failure_bound(n, c, eta):
    """Markov bound n^(c - eta) on P(wrong support) when p = O(n^c)."""
    if not eta > c:
        raise RegimeViolationError(f"need eta > c (eta={eta}, c={c})")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return float(n) ** (c - eta)


def theorem2_lambda(n, eta):
    """Smallest lambda with lambda / sqrt(n) >= n^(eta/2)."""
    if not eta > 0:
        raise InvalidInputError("eta must be positive")
    return math.sqrt(n) * float(n) ** (eta / 2)


def gaussian_failure_bound_polynomial(n, c, eta):
    if not eta > 0:
        raise InvalidInputError("eta must be positive")
    return float(n) ** (c - eta / 2) * math.exp(-0.5 * float(n) ** eta)


def gaussian_failure_bound_ultrahigh(n, c, eta):
    """n^(-eta) * exp(n^c - n^(2 eta) / 2), for p = O(exp(n^c)) and 2 eta > c.

    Evaluated in log space so that huge n does not overflow the intermediate.
    """
    if not 2 * eta > c:
        raise RegimeViolationError(f"need 2*eta > c (eta={eta}, c={c})")
    n = float(n)
    return math.exp(-eta * math.log(n) + n**c - 0.5 * n ** (2 * eta))


def bernstein_alpha(L, n, p):
    """sqrt(2 log(2p) / n) + L log(2p) / n."""
    if not L > 0 or p < 1 or n < 1:
        raise InvalidInputError("need L > 0, p >= 1, n >= 1")
    lg = math.log(2 * p)
    return math.sqrt(2 * lg / n) + L * lg / n


def bernstein_alpha_log(L, n, log_p):
    """``bernstein_alpha`` with p passed as log(p), for p = exp(n^c) beyond float range."""
    if not L > 0 or log_p < 0 or n < 1:
        raise InvalidInputError("need L > 0, log_p >= 0, n >= 1")
    lg = math.log(2) + log_p
    return math.sqrt(2 * lg / n) + L * lg / n


def theorem3_failure_bound(n, t):
    if not t > 0:
        raise InvalidInputError("t must be positive")
    return math.exp(-n * t)


def theorem3_lambda(n, t, K):
    """lambda = sqrt(n) * K * n * (1 + t), as printed for the ultra-high regime."""
    if not t > 0 or not K > 0:
        raise InvalidInputError("need t > 0 and K > 0")
    return math.sqrt(n) * K * n * (1 + t)


def c2_moment_bound(m, L):
    return math.factorial(m) / 2 * L ** (m - 2)


def check_c2_empirical(X, noise_sampler, L=1.0, m_max=6, replicates=1000):
    """Monte Carlo check of (1/n) E|W_j|^m <= (m!/2) L^(m-2) for m = 2..m_max.

    ``noise_sampler(r)`` must return the r-th noise vector (length n).
    Returns a dict with ``moments`` (m_max-1, p), ``bounds`` (m_max-1,),
    ``margins`` = bounds - moments and the overall ``holds`` verdict.
    """
    if replicates < 100:
        raise InsufficientSampleError("need at least 100 replicates")
    if m_max < 2:
        raise InvalidInputError("m_max must be >= 2")
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    orders = np.arange(2, m_max + 1)
    sums = np.zeros((orders.size, p))
    for r in range(replicates):
        absW = np.abs(noise_score(X, noise_sampler(r)))
        sums += absW[None, :] ** orders[:, None]
    moments = sums / replicates / n
    bounds = np.array([c2_moment_bound(int(m), L) for m in orders])
    margins = bounds[:, None] - moments
    return {
        "orders": orders,
        "moments": moments,
        "bounds": bounds,
        "margins": margins,
        "holds": bool(np.all(margins >= 0)),
    }
