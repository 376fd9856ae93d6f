"""The warden's hypothesis test and its empirical operating curve."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelPair, GaussianPair
from .divergence import binary_kl, jensen_shannon_binary, mixture
from .errors import AssumptionError, ConfigError
from .streams import stream

__all__ = [
    "lrt_statistic",
    "detection_floor",
    "RocCurve",
    "empirical_roc",
    "exact_roc",
    "JsdReport",
    "jsd_effectiveness",
]


def _llr_vector(model_h1, Q0) -> np.ndarray:
    h1, q0 = np.asarray(model_h1, dtype=float), np.asarray(Q0, dtype=float)
    if h1.shape != q0.shape:
        raise ValueError(f"dimension mismatch: {h1.shape} vs {q0.shape}")
    if np.any((q0 == 0) & (h1 > 0)):
        raise AssumptionError("H1 model is not absolutely continuous w.r.t. Q0")
    llr = np.zeros(q0.shape)
    on = q0 > 0
    with np.errstate(divide="ignore"):
        llr[on] = np.log(h1[on]) - np.log(q0[on])
    return llr


def lrt_statistic(z, model_h1, Q0) -> float:
    """sum_i log model_h1(z_i)/Q0(z_i) for a finite-alphabet observation."""
    llr = _llr_vector(model_h1, Q0)
    return math.fsum(llr[np.asarray(z)].tolist())


def detection_floor(divergence_budget: float, form: str = "kl") -> float:
    """Lower bound on alpha + beta for every test.

    ``form="kl"`` takes a divergence D and returns 1 - sqrt(D);
    ``form="tv"`` takes a total variation V and returns 1 - V. Both are
    clamped to [0, 1].
    """
    if divergence_budget < 0:
        raise ValueError(f"budget must be non-negative, got {divergence_budget}")
    if form == "kl":
        v = 1.0 - math.sqrt(divergence_budget)
    elif form == "tv":
        v = 1.0 - divergence_budget
    else:
        raise ValueError(f"unknown floor form {form!r}")
    return min(1.0, max(0.0, v))


@dataclass(frozen=True)
class RocCurve:
    """alpha_hat(t) = P[stat > t | H0] and beta_hat(t) = P[stat <= t | H1]."""

    thresholds: np.ndarray
    alpha_hat: np.ndarray
    alpha_se: np.ndarray
    beta_hat: np.ndarray
    beta_se: np.ndarray
    trials_h0: int
    trials_h1: int

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.alpha_hat.tolist(), self.beta_hat.tolist()))

    def min_error_sum(self) -> tuple[float, float, float]:
        """(min alpha+beta, its combined standard error, threshold)."""
        s = self.alpha_hat + self.beta_hat
        k = int(np.argmin(s))
        return float(s[k]), float(math.hypot(self.alpha_se[k], self.beta_se[k])), float(self.thresholds[k])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "alpha_hat", "alpha_se", "beta_hat", "beta_se"])
        for row in zip(self.thresholds, self.alpha_hat, self.alpha_se, self.beta_hat, self.beta_se):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _binomial_se(p: np.ndarray, trials: int) -> np.ndarray:
    return np.sqrt(p * (1 - p) / trials)


def _curve(h0: np.ndarray, h1: np.ndarray, thresholds) -> RocCurve:
    h0s, h1s = np.sort(h0), np.sort(h1)
    if thresholds is None:
        m, sd = float(h0.mean()), float(h0.std())
        sd = sd if sd > 0 else 1.0
        thresholds = np.linspace(m - 5 * sd, m + 5 * sd, 41)
    t = np.sort(np.asarray(thresholds, dtype=float))
    a = 1.0 - np.searchsorted(h0s, t, side="right") / h0.size
    b = np.searchsorted(h1s, t, side="right") / h1.size
    return RocCurve(t, a, _binomial_se(a, h0.size), b, _binomial_se(b, h1.size), h0.size, h1.size)


def _finite_statistics(pair: ChannelPair, n: int, supports: np.ndarray, llr: np.ndarray, seed: int, label: str) -> np.ndarray:
    q0, q1 = np.asarray(pair.Q0, dtype=float), np.asarray(pair.Q1, dtype=float)
    out = np.empty(supports.size)
    for t, s in enumerate(supports):
        rng = stream(seed, "roc", label, t)
        counts = rng.multinomial(n - int(s), q0) + (rng.multinomial(int(s), q1) if s else 0)
        out[t] = math.fsum((counts * llr).tolist())
    return out


def _gaussian_statistics(pair: GaussianPair, n: int, alpha: float, supports: list, seed: int, label: str) -> np.ndarray:
    sig, x = pair.sigma_warden, pair.x1
    out = np.empty(len(supports))
    for t, sup in enumerate(supports):
        rng = stream(seed, "roc", label, t)
        z = sig * rng.standard_normal(n)
        if sup is not None and len(sup):
            z[sup] += x
        r = np.expm1((x * z - x * x / 2) / sig**2)
        out[t] = math.fsum(np.log1p(alpha * r).tolist())
    return out


def empirical_roc(pair, codec, alpha: float, thresholds=None, trials: int = 10_000, seed: int = 0, n: int | None = None) -> RocCurve:
    """Monte Carlo operating curve of the product-model likelihood-ratio test.

    The warden tests Q0^n against Q_alpha^n. H0 observations are innocent
    noise; H1 observations come from ``codec.random_word`` (any object with
    ``n`` and ``random_word(rng)``), or from the i.i.d. Bernoulli(alpha)
    process when ``codec`` is None. For finite channels the statistic only
    depends on output counts, so observations are drawn as counts.
    """
    if trials < 100:
        raise ConfigError(f"need at least 100 trials per hypothesis, got {trials}")
    n = codec.n if codec is not None else n
    if n is None:
        raise ConfigError("blocklength n is required without a codec")

    def h1_support(t):
        rng = stream(seed, "roc", "h1_word", t)
        if codec is not None:
            return codec.random_word(rng).support
        return np.flatnonzero(rng.random(n) < alpha)

    supports = [h1_support(t) for t in range(trials)]
    if isinstance(pair, GaussianPair):
        h0 = _gaussian_statistics(pair, n, alpha, [None] * trials, seed, "h0")
        h1 = _gaussian_statistics(pair, n, alpha, supports, seed, "h1")
    else:
        llr = _llr_vector(mixture(alpha, pair.Q1, pair.Q0), pair.Q0)
        h0 = _finite_statistics(pair, n, np.zeros(trials, dtype=np.int64), llr, seed, "h0")
        h1 = _finite_statistics(pair, n, np.array([len(s) for s in supports], dtype=np.int64), llr, seed, "h1")
    return _curve(h0, h1, thresholds)


def exact_roc(law_h0, law_h1, statistic, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Exact (alpha, beta) of the test "stat > t" for enumerable observation laws."""
    p0, p1, s = (np.asarray(v, dtype=float) for v in (law_h0, law_h1, statistic))
    t = np.asarray(thresholds, dtype=float)
    above = s[None, :] > t[:, None]
    return (above * p0[None, :]).sum(axis=1), (~above * p1[None, :]).sum(axis=1)


@dataclass(frozen=True)
class JsdReport:
    jsd: float
    upper: float
    kl_pair: float


def jsd_effectiveness(alpha_hat: float, beta_hat: float, divergence_budget: float) -> JsdReport:
    """Jensen-Shannon divergence of the test's decision laws against budget/2.

    Any test of the true system satisfies 2 J(B_a, B_{1-b}) <= D(B_{1-b} || B_a)
    <= budget; ``kl_pair`` reports the middle term.
    """
    a, b = float(alpha_hat), 1.0 - float(beta_hat)
    return JsdReport(jensen_shannon_binary(a, b), divergence_budget / 2, binary_kl(b, a))
