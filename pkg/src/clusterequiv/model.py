"""Data types, signal calibration, clustering loss and data generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Hypothesis",
    "Calibration",
    "ModelParams",
    "LabelPair",
    "PairedSample",
    "ProjectedSample",
    "MixturePairSample",
    "hamming_loss",
    "calibrate_scales",
    "scales_to_rs",
    "random_params",
    "gen_paired_sample",
    "gen_label_config",
    "gen_mixture_pair",
    "alternative_flips",
]


class Hypothesis(str, Enum):
    NULL = "null"
    ALTERNATIVE = "alternative"


def _check_log_n(n) -> float:
    if int(n) != n or n < 3:
        raise ValueError(f"n must be an integer >= 3, got {n}")
    return math.log(n)


def calibrate_scales(n: int, r: float, s: float) -> tuple[float, float]:
    """Signal norms ``(a, b)`` with ``a >= b`` matching the calibration ``(r, s)``."""
    log_n = _check_log_n(n)
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    if not s >= 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    cross = math.sqrt(s) * math.sqrt(r + s)
    a = math.sqrt((r + s + cross) * log_n)
    # r + s - cross = r (r + s) / (r + s + cross), which avoids cancellation for large s
    b = math.sqrt(r * (r + s) / (r + s + cross) * log_n)
    return a, b


def scales_to_rs(a: float, b: float, n: int) -> tuple[float, float]:
    """Invert :func:`calibrate_scales`; symmetric in ``a`` and ``b``."""
    log_n = _check_log_n(n)
    if not (a > 0 and b > 0):
        raise ValueError(f"scales must be positive, got a={a}, b={b}")
    total = a * a + b * b
    r = (2.0 * a * b) ** 2 / (2.0 * log_n * total)
    s = (a * a - b * b) ** 2 / (2.0 * log_n * total)
    return r, s


@dataclass(frozen=True)
class Calibration:
    n: int
    r: float
    s: float
    beta: float

    def __post_init__(self) -> None:
        _check_log_n(self.n)
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if not self.s >= 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")
        if not (0 < self.beta <= 1):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def epsilon(self) -> float:
        return float(self.n) ** (-self.beta)

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    @property
    def scales(self) -> tuple[float, float]:
        return calibrate_scales(self.n, self.r, self.s)

    def to_dict(self) -> dict:
        return {"n": int(self.n), "r": self.r, "s": self.s, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "Calibration":
        return cls(n=int(d["n"]), r=float(d["r"]), s=float(d["s"]), beta=float(d["beta"]))


@dataclass(frozen=True)
class ModelParams:
    theta: np.ndarray
    eta: np.ndarray

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        eta = np.asarray(self.eta, dtype=float).reshape(-1)
        if not (np.linalg.norm(theta) > 0 and np.linalg.norm(eta) > 0):
            raise ValueError("theta and eta must be nonzero")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "eta", eta)

    @property
    def norms(self) -> tuple[float, float]:
        return float(np.linalg.norm(self.theta)), float(np.linalg.norm(self.eta))


def _as_labels(v) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("labels must be a vector")
    if not np.all((v == 1) | (v == -1)):
        raise ValueError("labels must take values in {-1, +1}")
    return v.astype(np.int8)


@dataclass(frozen=True)
class LabelPair:
    z: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        z, sigma = _as_labels(self.z), _as_labels(self.sigma)
        if z.shape != sigma.shape:
            raise ValueError("z and sigma must have the same length")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def to_dict(self) -> dict:
        return {"z": self.z.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelPair":
        return cls(z=np.asarray(d["z"]), sigma=np.asarray(d["sigma"]))


@dataclass(frozen=True)
class PairedSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValueError(f"x and y need equal row counts, got {x.shape} and {y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def subset(self, idx) -> "PairedSample":
        return PairedSample(self.x[idx], self.y[idx])


@dataclass(frozen=True)
class ProjectedSample:
    """Scalar reductions ``theta'X_i/|theta|`` and ``eta'Y_i/|eta|``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError("projections must have equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.shape[0])


@dataclass(frozen=True)
class MixturePairSample:
    u: np.ndarray
    v: np.ndarray
    hypothesis: Hypothesis = field(default=Hypothesis.NULL)

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float).reshape(-1)
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if u.shape != v.shape:
            raise ValueError("u and v must have equal length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "hypothesis", Hypothesis(self.hypothesis))


def hamming_loss(z, sigma) -> float:
    """Fraction of mismatched labels, minimised over the global sign flip."""
    z, sigma = _as_labels(z), _as_labels(sigma)
    if z.shape != sigma.shape:
        raise ValueError("label vectors must have the same length")
    n = z.shape[0]
    if n == 0:
        raise ValueError("label vectors must be nonempty")
    mismatches = int(np.count_nonzero(z != sigma))
    return min(mismatches, n - mismatches) / n


def _random_unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def random_params(a: float, b: float, p: int, q: int, rng: np.random.Generator) -> ModelParams:
    """Mean vectors of norms ``a`` and ``b`` pointing in uniformly random directions."""
    return ModelParams(theta=a * _random_unit(p, rng), eta=b * _random_unit(q, rng))


def gen_paired_sample(params: ModelParams, labels: LabelPair, rng: np.random.Generator) -> PairedSample:
    n = labels.n
    p, q = params.theta.shape[0], params.eta.shape[0]
    x = labels.z[:, None] * params.theta[None, :] + rng.standard_normal((n, p))
    y = labels.sigma[:, None] * params.eta[None, :] + rng.standard_normal((n, q))
    return PairedSample(x, y)


def gen_label_config(n: int, m_flips: int, rng: np.random.Generator) -> LabelPair:
    """Random ``z`` and a copy ``sigma`` with exactly ``m_flips`` entries negated."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if int(m_flips) != m_flips or m_flips < 0 or 2 * m_flips > n:
        raise ValueError(f"m_flips must be an integer in [0, n/2], got {m_flips}")
    n, m_flips = int(n), int(m_flips)
    z = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    sigma = z.copy()
    if m_flips:
        flipped = rng.choice(n, size=m_flips, replace=False)
        sigma[flipped] = -sigma[flipped]
    return LabelPair(z, sigma)


def alternative_flips(n: int, epsilon: float) -> int:
    """Flip count used for alternatives; guarantees a loss strictly above ``epsilon``."""
    return max(2 * math.ceil(n * epsilon), 2)


def gen_mixture_pair(
    cal: Calibration,
    hypothesis: Hypothesis | str,
    rng: np.random.Generator,
    epsilon: float | None = None,
) -> MixturePairSample:
    """Draw ``n`` pairs ``(U_i, V_i)`` from the null or sparse alternative mixture.

    Both hypotheses consume the generator identically, so an alternative with
    ``epsilon=0`` reproduces the null draw exactly.
    """
    hypothesis = Hypothesis(hypothesis)
    eps = cal.epsilon if epsilon is None else float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
    n, log_n = cal.n, cal.log_n
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    signal = rng.random(n) < eps
    noise = rng.standard_normal((2, n))
    v_shift = math.sqrt(2.0 * (cal.r + cal.s) * log_n)
    u_mean = np.zeros(n)
    v_mean = sign * v_shift
    if hypothesis is Hypothesis.ALTERNATIVE:
        u_mean = np.where(signal, sign * math.sqrt(2.0 * cal.r * log_n), 0.0)
        v_mean = np.where(signal, sign * math.sqrt(2.0 * cal.s * log_n), v_mean)
    return MixturePairSample(u=u_mean + noise[0], v=v_mean + noise[1], hypothesis=hypothesis)
