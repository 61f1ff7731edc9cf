"""Seeded synthetic designs: the two correlated-column examples, the twelve
(n, p, q) sparsity settings and the four-noise study.

Column j (0-based) of every Gaussian design is drawn from substream
``("x", j)`` of the instance seed, the auxiliary Gaussian used to build a
correlated column from ``("e",)`` and the model noise from ``("noise",)``.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import RegressionInstance
from .exceptions import InvalidInputError, UnsupportedSparsityError
from .rng import standard_normal, stream, uniform_open

BETA_SEQUENCE = (9, 6, 8, 12, 19, 8, 19, 9, 6, 8, 12, 19, 8, 19)

TABLE1_SETTINGS = {
    1: (100, 400, 4),
    2: (100, 500, 5),
    3: (200, 500, 7),
    4: (200, 1000, 7),
    5: (500, 500, 14),
    6: (500, 2000, 14),
    7: (100, 400, 5),
    8: (100, 500, 6),
    9: (100, 500, 7),
    10: (100, 1000, 7),
    11: (100, 2000, 7),
    12: (300, 2000, 14),
}

NOISE_DISTRIBUTIONS = ("gaussian", "exponential", "uniform", "student_t")
NOISE_MEANS = {"gaussian": 0.0, "exponential": 1.0, "uniform": 0.5, "student_t": 0.0}
STUDENT_T_DF = 100

NOISE_STUDY_N = 100
NOISE_STUDY_P = 1000
NOISE_STUDY_Q = 3

KINDS = ("example1_case1", "example1_case2", "example2_case1", "example2_case2",
         "table1", "noise_study")

EXAMPLE1_BETA = (2.0, 3.0, 0.0)
EXAMPLE2_BETA = (2.0, 3.0, 1.0, 4.0)
EXAMPLE2_P = 400


def make_beta(q, p=None):
    if q < 1:
        raise InvalidInputError("q must be >= 1")
    if q > len(BETA_SEQUENCE):
        raise UnsupportedSparsityError(f"only {len(BETA_SEQUENCE)} preset coefficients, asked for q={q}")
    p = q if p is None else p
    if p < q:
        raise InvalidInputError("p must be >= q")
    beta = np.zeros(p)
    beta[:q] = BETA_SEQUENCE[:q]
    return beta


def gen_noise(distribution, n, center=True, seed=0):
    """i.i.d. noise draws; ``center`` subtracts the law's mean."""
    if distribution not in NOISE_DISTRIBUTIONS:
        raise InvalidInputError(f"unknown noise distribution {distribution!r}; "
                                f"choose from {', '.join(NOISE_DISTRIBUTIONS)}")
    gen = stream(seed, "noise")
    if distribution == "gaussian":
        eps = standard_normal(gen, n)
    elif distribution == "exponential":
        eps = -np.log(uniform_open(gen, n))
    elif distribution == "uniform":
        eps = uniform_open(gen, n)
    else:
        z = standard_normal(gen, n)
        chi = standard_normal(stream(seed, "noise", "chi2"), (n, STUDENT_T_DF))
        eps = z / np.sqrt(np.einsum("ij,ij->i", chi, chi) / STUDENT_T_DF)
    if center:
        eps = eps - NOISE_MEANS[distribution]
    return eps


def _gaussian_design(seed, n, p):
    X = np.empty((n, p), order="F")
    for j in range(p):
        X[:, j] = standard_normal(stream(seed, "x", j), n)
    return X


def _finish(X, beta, seed, noise_scale=1.0, distribution="gaussian", center=True):
    eps = noise_scale * gen_noise(distribution, X.shape[0], center, seed)
    y = X @ beta + eps
    return RegressionInstance(X=X, y=y, beta_true=beta, noise=eps,
                              sigma=noise_scale if noise_scale > 0 else 1.0)


def gen_example1(case, n=100, seed=0, noise_scale=1.0):
    """p = 3, beta = (2, 3, 0); X3 is a noisy combination of X1 and X2."""
    if case not in (1, 2):
        raise InvalidInputError("case must be 1 or 2")
    if n < 3:
        raise InvalidInputError("need n >= 3")
    X = _gaussian_design(seed, n, 3)
    e = standard_normal(stream(seed, "e"), n)
    if case == 1:
        X[:, 2] = (2 / 3) * X[:, 0] + (2 / 3) * X[:, 1] + (1 / 3) * e
    else:
        X[:, 2] = 0.5 * X[:, 0] + 0.5 * X[:, 1] + np.sqrt(0.5) * e
    return _finish(X, np.array(EXAMPLE1_BETA), seed, noise_scale)


def gen_example2(case, n=100, seed=0, noise_scale=1.0):
    """p = 400, beta = (2, 3, 1, 4, 0, ...); the last column mixes X1..X7."""
    if case not in (1, 2):
        raise InvalidInputError("case must be 1 or 2")
    if n < 8:
        raise InvalidInputError("need n >= 8")
    X = _gaussian_design(seed, n, EXAMPLE2_P)
    e = standard_normal(stream(seed, "e"), n)
    if case == 1:
        weights = np.array([7, 3, 1, 1, 1, 1, 1]) / 8
        last = X[:, :7] @ weights + e / 8
    else:
        last = X[:, :7] @ np.full(7, 0.25) + 0.75 * e
    X[:, EXAMPLE2_P - 1] = last
    beta = np.zeros(EXAMPLE2_P)
    beta[:4] = EXAMPLE2_BETA
    return _finish(X, beta, seed, noise_scale)


def gen_table1(setting_id, seed=0, noise_scale=1.0):
    if setting_id not in TABLE1_SETTINGS:
        raise InvalidInputError(f"setting_id must be in 1..12, got {setting_id}")
    n, p, q = TABLE1_SETTINGS[setting_id]
    return _finish(_gaussian_design(seed, n, p), make_beta(q, p), seed, noise_scale)


def gen_noise_study(distribution, seed=0, center=True, noise_scale=1.0):
    n, p, q = NOISE_STUDY_N, NOISE_STUDY_P, NOISE_STUDY_Q
    return _finish(_gaussian_design(seed, n, p), make_beta(q, p), seed, noise_scale,
                   distribution, center)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int = 100
    setting_id: Optional[int] = None
    noise_distribution: str = "gaussian"
    center_noise: bool = True
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown generator kind {self.kind!r}")
        if self.kind == "table1":
            if self.setting_id not in TABLE1_SETTINGS:
                raise InvalidInputError("table1 generator needs setting_id in 1..12")
            object.__setattr__(self, "n", TABLE1_SETTINGS[self.setting_id][0])
        if self.kind == "noise_study":
            if self.noise_distribution not in NOISE_DISTRIBUTIONS:
                raise InvalidInputError(f"unknown noise distribution {self.noise_distribution!r}")
            object.__setattr__(self, "n", NOISE_STUDY_N)

    @property
    def sizes(self):
        """(n, p, q) of the instances this spec produces."""
        if self.kind.startswith("example1"):
            return self.n, 3, 2
        if self.kind.startswith("example2"):
            return self.n, EXAMPLE2_P, 4
        if self.kind == "table1":
            return TABLE1_SETTINGS[self.setting_id]
        return NOISE_STUDY_N, NOISE_STUDY_P, NOISE_STUDY_Q

    def to_dict(self):
        d = asdict(self)
        d["n"], d["p"], d["q"] = self.sizes
        return d


def generate(spec, seed):
    """Instance for ``spec`` drawn from the 64-bit ``seed``."""
    if spec.kind.startswith("example"):
        case = int(spec.kind[-1])
        fn = gen_example1 if spec.kind.startswith("example1") else gen_example2
        return fn(case, spec.n, seed, spec.noise_scale)
    if spec.kind == "table1":
        return gen_table1(spec.setting_id, seed, spec.noise_scale)
    return gen_noise_study(spec.noise_distribution, seed, spec.center_noise, spec.noise_scale)
