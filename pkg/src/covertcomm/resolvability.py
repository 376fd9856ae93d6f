"""Keyed sparse random codebooks with threshold decoding.

Codewords are drawn i.i.d. from the low-weight product law and stored only
through their x1-positions. The decoder scores each candidate by the
relative-entropy density sum over its support, which is the only part of
the likelihood ratio that differs from the innocent hypothesis.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .channels import ChannelPair, GaussianPair, gaussian_closed_forms
from .divergence import kl
from .errors import AssumptionError, ConfigError, InfeasibleError
from .process import CovertParameters, parse_schedule, summarize_channel
from .streams import stream

__all__ = [
    "DEFAULT_MAX_POSITIONS",
    "SparseCodeword",
    "Codebook",
    "TrialOutcome",
    "equal_split",
    "design",
    "generate_codebook",
    "llr_table",
    "transmit_and_receive",
    "score",
    "decode",
    "ResolvabilityCodec",
    "support_size_tail",
    "decoding_error_bound",
    "resolvability_kl_bound",
    "resolvability_tv_bound",
    "enumerate_outputs",
    "exact_induced_distribution",
    "product_distribution",
    "SecrecyDesign",
    "secrecy_design",
    "secrecy_encode",
    "secrecy_leakage_exact",
    "pad_leakage_exact",
    "SupportRevealingCodec",
    "support_revealing_codec",
]

DEFAULT_MAX_POSITIONS = 60_000_000
ENUMERATION_CEILING = 2**22
BLOCK_WORDS = 1 << 16


@dataclass(frozen=True)
class SparseCodeword:
    """A length-n word over {x0, x1}, kept as the sorted x1-positions."""

    n: int
    support: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64)
        if s.ndim != 1:
            raise ValueError("support must be one-dimensional")
        if s.size and (s[0] < 0 or s[-1] >= self.n or np.any(np.diff(s) <= 0)):
            raise ValueError("support must be sorted, unique and inside [0, n)")
        s.setflags(write=False)
        object.__setattr__(self, "support", s)

    @property
    def weight(self) -> int:
        return int(self.support.size)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.n, dtype=np.int8)
        x[self.support] = 1
        return x


@dataclass(frozen=True, eq=False)
class Codebook:
    """M*K sparse words in compressed-row form, key-major.

    Word (i, j) (message i, key j) is row ``j*M + i``; its positions are
    ``positions[offsets[r]:offsets[r+1]]``.
    """

    n: int
    M: int
    K: int
    alpha_n: float
    seed: int
    offsets: np.ndarray
    positions: np.ndarray

    def row(self, i: int, j: int = 0) -> int:
        if not (0 <= i < self.M and 0 <= j < self.K):
            raise IndexError(f"word ({i}, {j}) outside {self.M}x{self.K} codebook")
        return j * self.M + i

    def word(self, i: int, j: int = 0) -> SparseCodeword:
        r = self.row(i, j)
        return SparseCodeword(self.n, self.positions[self.offsets[r] : self.offsets[r + 1]])

    def words(self):
        for r in range(self.M * self.K):
            yield SparseCodeword(self.n, self.positions[self.offsets[r] : self.offsets[r + 1]])

    @property
    def weights(self) -> np.ndarray:
        return np.diff(self.offsets)

    def key_slice(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(positions, local word ids) for every message under key j."""
        lo, hi = self.offsets[j * self.M], self.offsets[(j + 1) * self.M]
        sizes = np.diff(self.offsets[j * self.M : (j + 1) * self.M + 1])
        return self.positions[lo:hi], np.repeat(np.arange(self.M), sizes)

    def position_index(self, j: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Transposed key slice: words containing position p are
        ``ids[ptr[p]:ptr[p+1]]``. Built once per key and cached."""
        cache = self.__dict__.setdefault("_position_cache", {})
        if j not in cache:
            pos, owner = self.key_slice(j)
            order = np.argsort(pos)
            ptr = np.concatenate([[0], np.cumsum(np.bincount(pos, minlength=self.n))]).astype(np.int64)
            cache[j] = (ptr, owner[order].astype(np.int32))
        return cache[j]

    def to_json(self) -> str:
        """Plain JSON of the support lists; intended for tiny codebooks."""
        return json.dumps(
            {
                "n": self.n,
                "M": self.M,
                "K": self.K,
                "alpha_n": self.alpha_n,
                "seed": self.seed,
                "supports": [w.support.tolist() for w in self.words()],
            }
        )

    @classmethod
    def from_supports(cls, n: int, supports, M: int | None = None, K: int = 1, alpha_n: float = math.nan, seed: int = 0):
        supports = [sorted(set(int(p) for p in s)) for s in supports]
        M = len(supports) // K if M is None else M
        if M * K != len(supports):
            raise ValueError(f"{len(supports)} supports do not fill a {M}x{K} codebook")
        sizes = np.array([len(s) for s in supports], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        flat = np.array(list(itertools.chain.from_iterable(supports)), dtype=np.int32)
        for s in supports:
            SparseCodeword(n, s)
        return cls(n, M, K, alpha_n, seed, offsets, flat)


@dataclass(frozen=True)
class TrialOutcome:
    t_true: int
    t_hat: int
    w_true: Optional[int]
    w_hat: Optional[int]
    status: str
    score_margin: float = math.nan
    support_size: Optional[int] = None

    STATUSES = ("ok", "missed_detection", "false_alarm", "wrong_message", "ambiguous")

    @property
    def is_error(self) -> bool:
        return self.status != "ok"


def _classify(t_true: int, w_true, t_hat: int, w_hat, ambiguous: bool = False) -> str:
    if t_true == 0:
        return "false_alarm" if t_hat else "ok"
    if ambiguous:
        return "ambiguous"
    if not t_hat:
        return "missed_detection"
    return "ok" if w_hat == w_true else "wrong_message"


def equal_split(xi: float) -> float:
    """t with mu = nu = delta = t reproducing xi = ((1+t)^3 - (1-t)^3) / 2."""
    if not 0.0 < xi < 1.0:
        raise ConfigError(f"xi must lie in ]0, 1[, got {xi}")
    return optimize.brentq(lambda t: 3 * t + t**3 - xi, 0.0, 1.0, xtol=1e-15)


def _xi_of(mu: float, nu: float, delta: float) -> float:
    return 0.5 * ((1 + delta) * (1 + mu) * (1 + nu) - (1 - delta) * (1 - mu) * (1 - nu))


def _ceil_exp(log_size: float) -> int:
    # guard against exp(k) landing a hair above an integer
    return max(1, math.ceil(math.exp(log_size) * (1 - 1e-12)))


def design(
    pair: ChannelPair | GaussianPair,
    n: int,
    omega_kind="inv_log",
    xi: float | None = None,
    mu: float | None = None,
    nu: float | None = None,
    delta: float | None = None,
    epsilon: float = 0.1,
    max_positions: int | None = DEFAULT_MAX_POSITIONS,
) -> CovertParameters:
    """Message and key sizes plus decoder/resolvability thresholds.

    Leave ``mu``, ``nu`` and ``delta`` unset to split ``xi`` (default 0.5)
    evenly between them; pass all three to fix the split, in which case
    ``xi`` follows from them.
    """
    given = [v is not None for v in (mu, nu, delta)]
    if any(given) and not all(given):
        raise ConfigError("give all of mu, nu, delta or none of them")
    if all(given):
        for name, v in (("mu", mu), ("nu", nu), ("delta", delta)):
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in ]0, 1[, got {v}")
        implied = _xi_of(mu, nu, delta)
        if xi is not None and abs(xi - implied) > 1e-9:
            raise ConfigError(f"xi={xi} disagrees with the split (implies {implied})")
        xi = implied
    else:
        xi = 0.5 if xi is None else xi
        mu = nu = delta = equal_split(xi)
    if not 0.0 < xi < 1.0:
        raise ConfigError(f"xi must lie in ]0, 1[, got {xi}")
    if isinstance(pair, ChannelPair):
        if not pair.q1_ac_q0 or pair.q1_eq_q0 or not pair.p1_ac_p0:
            raise AssumptionError("design needs P1 << P0, Q1 << Q0 and Q1 != Q0")
    s = summarize_channel(pair)
    base = CovertParameters.from_schedule(n, omega_kind)
    w = base.mean_weight
    logM = (1 - xi) * w * s.kl_main
    logK = w * max((1 + xi) * s.kl_warden - (1 - xi) * s.kl_main, 0.0)
    M, K = _ceil_exp(logM), _ceil_exp(logK)
    if max_positions is not None and M * K * w > max_positions:
        raise InfeasibleError(f"M*K*omega*sqrt(n) = {M * K * w:.3g} exceeds the ceiling {max_positions:.3g}")
    return replace(
        base,
        xi=xi,
        mu=mu,
        nu=nu,
        delta=delta,
        epsilon=epsilon,
        gamma=(1 - mu) * (1 - nu) * w * s.kl_main,
        tau=(1 + mu) * (1 + nu) * w * s.kl_warden,
        logM=logM,
        logK=logK,
        M=M,
        K=K,
    )


def generate_codebook(
    params: CovertParameters,
    seed: int,
    M: int | None = None,
    K: int | None = None,
    max_positions: int | None = DEFAULT_MAX_POSITIONS,
    tag: str = "codebook",
) -> Codebook:
    """Draw M*K words i.i.d. from the Bernoulli(alpha_n) product law.

    Words are produced in blocks; block b uses its own counter-based stream
    keyed by (seed, tag, b), so the result depends only on the arguments.
    Within a block, each word gets a binomial weight and then a uniform
    subset of that size, which is the same law as per-position Bernoulli.
    """
    n, alpha = params.n, params.alpha_n
    M = params.M if M is None else M
    K = params.K if K is None else K
    total = M * K
    if max_positions is not None and total * n * alpha > max_positions:
        raise InfeasibleError(f"expected {total * n * alpha:.3g} stored positions exceed the ceiling {max_positions:.3g}")
    sizes_all, pos_all = [], []
    for b, start in enumerate(range(0, total, BLOCK_WORDS)):
        count = min(BLOCK_WORDS, total - start)
        rng = stream(seed, tag, b)
        sizes = rng.binomial(n, alpha, size=count).astype(np.int64)
        owner = np.repeat(np.arange(count, dtype=np.int64), sizes)
        keys = np.sort(owner * n + rng.integers(0, n, size=owner.size))
        pos = keys % n
        dup = np.flatnonzero((np.diff(keys) == 0))
        if dup.size:
            offs = np.concatenate([[0], np.cumsum(sizes)])
            for wdx in np.unique(owner[dup]):
                pos[offs[wdx] : offs[wdx + 1]] = np.sort(rng.choice(n, size=int(sizes[wdx]), replace=False))
        sizes_all.append(sizes)
        pos_all.append(pos.astype(np.int32))
    sizes = np.concatenate(sizes_all) if sizes_all else np.zeros(0, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    positions = np.concatenate(pos_all) if pos_all else np.zeros(0, dtype=np.int32)
    positions.setflags(write=False)
    offsets.setflags(write=False)
    return Codebook(n, M, K, alpha, int(seed), offsets, positions)


def llr_table(P1, P0) -> np.ndarray:
    """log P1(y)/P0(y) per output with +-inf where one side vanishes."""
    p1, p0 = np.asarray(P1, dtype=float), np.asarray(P0, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(p1) - np.log(p0)
    out[(p1 == 0) & (p0 == 0)] = 0.0
    return out


def _sample_rows(row0: np.ndarray, row1: np.ndarray, n: int, support: np.ndarray, rng) -> np.ndarray:
    u = rng.random(n)
    c0, c1 = np.cumsum(row0), np.cumsum(row1)
    c0[-1] = c1[-1] = 1.0
    y = np.searchsorted(c0, u, side="right")
    if support.size:
        y[support] = np.searchsorted(c1, u[support], side="right")
    return y.astype(np.int32)


def transmit_and_receive(word: SparseCodeword | None, pair: ChannelPair | GaussianPair, side: str, rng, n: int | None = None):
    """Channel output for a sparse word (``None`` means no transmission).

    ``side`` is ``"main"`` or ``"warden"``. Finite channels return symbol
    indices, Gaussian channels return real samples.
    """
    if side not in ("main", "warden"):
        raise ValueError(f"side must be 'main' or 'warden', got {side!r}")
    if word is None:
        if n is None:
            raise ValueError("n is required when nothing is transmitted")
        support = np.zeros(0, dtype=np.int64)
    else:
        n, support = word.n, word.support
    if isinstance(pair, GaussianPair):
        sigma = pair.sigma_main if side == "main" else pair.sigma_warden
        y = sigma * rng.standard_normal(n)
        y[support] += pair.x1
        return y
    r0, r1 = (pair.P0, pair.P1) if side == "main" else (pair.Q0, pair.Q1)
    return _sample_rows(np.asarray(r0), np.asarray(r1), n, support, rng)


def _llr_of(pair: ChannelPair | GaussianPair, y_values, side: str = "main") -> np.ndarray:
    if isinstance(pair, GaussianPair):
        f = gaussian_closed_forms(pair)[side]
        return f.llr_slope * np.asarray(y_values, dtype=float) - f.kl
    table = llr_table(pair.P1, pair.P0) if side == "main" else llr_table(pair.Q1, pair.Q0)
    y = np.asarray(y_values)
    if y.size and (y.min() < 0 or y.max() >= table.size):
        raise ValueError("output symbol outside the channel alphabet")
    return table[y]


def score(word: SparseCodeword, y, pair: ChannelPair | GaussianPair) -> float:
    """Relative-entropy density of (word, y): sum over the support of log P1/P0."""
    y = np.asarray(y)
    if y.shape[0] != word.n:
        raise ValueError(f"output length {y.shape[0]} differs from n={word.n}")
    if word.weight == 0:
        return 0.0
    return math.fsum(_llr_of(pair, y[word.support]).tolist())


@dataclass(frozen=True)
class DecodeResult:
    t_hat: int
    w_hat: Optional[int]
    ambiguous: bool
    score_margin: float


def _gather_ranges(ptr: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    starts, lens = ptr[rows], ptr[rows + 1] - ptr[rows]
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), lens
    shift = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
    return np.arange(total, dtype=np.int64) + shift, lens


def _scores(y, key: int, codebook: Codebook, pair) -> np.ndarray:
    if not isinstance(pair, GaussianPair):
        table = llr_table(pair.P1, pair.P0)
        ref = int(np.argmax(np.asarray(pair.P0)))
    if isinstance(pair, GaussianPair) or not np.isfinite(table[ref]):
        pos, owner = codebook.key_slice(key)
        vals = _llr_of(pair, np.asarray(y)[pos])
        return np.bincount(owner, weights=vals, minlength=codebook.M)
    # Every word scores llr[ref] per support position, corrected at the
    # (few) positions whose output differs from the dominant innocent symbol.
    y = np.asarray(y)
    if y.size and (y.min() < 0 or y.max() >= table.size):
        raise ValueError("output symbol outside the channel alphabet")
    sizes = np.diff(codebook.offsets[key * codebook.M : (key + 1) * codebook.M + 1])
    base = table[ref] * sizes
    active = np.flatnonzero(y != ref)
    if active.size == 0:
        return base.astype(float)
    ptr, ids = codebook.position_index(key)
    idx, lens = _gather_ranges(ptr, active)
    with np.errstate(invalid="ignore"):
        delta = np.repeat(table[y[active]] - table[ref], lens)
    return base + np.bincount(ids[idx], weights=delta, minlength=codebook.M)


def decode(y, key: int, codebook: Codebook, gamma: float, pair: ChannelPair | GaussianPair) -> DecodeResult:
    """Threshold decoder: unique score above gamma wins, none means silence."""
    if not 0 <= key < codebook.K:
        raise IndexError(f"key {key} outside [0, {codebook.K})")
    s = _scores(y, key, codebook, pair)
    above = np.flatnonzero(s > gamma)
    margin = float(s.max() - gamma) if s.size else -math.inf
    if above.size == 0:
        return DecodeResult(0, None, False, margin)
    if above.size > 1:
        return DecodeResult(1, None, True, margin)
    return DecodeResult(1, int(above[0]), False, margin)


@dataclass
class ResolvabilityCodec:
    """Encoder/decoder pair around one generated codebook."""

    pair: ChannelPair | GaussianPair
    params: CovertParameters
    codebook: Codebook
    gamma: float = math.nan

    def __post_init__(self):
        if math.isnan(self.gamma):
            self.gamma = self.params.gamma

    @classmethod
    def build(cls, pair, params: CovertParameters, seed: int, **kw) -> "ResolvabilityCodec":
        return cls(pair, params, generate_codebook(params, seed, **kw))

    @property
    def n(self) -> int:
        return self.params.n

    def random_word(self, rng) -> SparseCodeword:
        i = int(rng.integers(self.codebook.M))
        j = int(rng.integers(self.codebook.K))
        return self.codebook.word(i, j)

    def run_trial(self, t_true: int, rng) -> TrialOutcome:
        cb = self.codebook
        i = int(rng.integers(cb.M))
        j = int(rng.integers(cb.K))
        word = cb.word(i, j) if t_true else None
        y = transmit_and_receive(word, self.pair, "main", rng, n=self.n)
        d = decode(y, j, cb, self.gamma, self.pair)
        w_true = i if t_true else None
        status = _classify(t_true, w_true, d.t_hat, d.w_hat, d.ambiguous)
        return TrialOutcome(t_true, d.t_hat, w_true, d.w_hat, status, d.score_margin)


# --- bounds -----------------------------------------------------------------


def _support_law(n: int, alpha: float, cap_factor: float = 8.0) -> tuple[np.ndarray, np.ndarray, float]:
    """Binomial(n, alpha) masses over 0..cap and the mass beyond cap."""
    mean = n * alpha
    cap = int(min(n, max(math.ceil(cap_factor * mean), math.ceil(mean + 12 * math.sqrt(mean + 1)) + 10)))
    ell = np.arange(cap + 1)
    return ell, stats.binom.pmf(ell, n, alpha), float(stats.binom.sf(cap, n, alpha))


def _inner_tail(values: np.ndarray, probs: np.ndarray, ell: np.ndarray, thr: float, upper: bool, strict: bool) -> np.ndarray:
    """P[sum of ell i.i.d. draws (values, probs) vs thr], exact for <= 2 atoms, else Hoeffding."""
    keep = probs > 0
    values, probs = values[keep], probs[keep]
    order = np.argsort(values)
    values, probs = values[order], probs[order]
    uniq = np.unique(values)
    if uniq.size == 1:
        s = ell * uniq[0]
        hit = (s > thr if strict else s >= thr) if upper else (s < thr if strict else s <= thr)
        return hit.astype(float)
    if uniq.size == 2:
        a, b = uniq
        pb = float(probs[values == b].sum())
        x = (thr - ell * a) / (b - a)  # count of b-atoms at the threshold
        tol = 1e-9
        if upper:
            k = np.floor(x + tol) + 1 if strict else np.ceil(x - tol)
            return stats.binom.sf(k - 1, ell, pb)
        k = np.ceil(x - tol) - 1 if strict else np.floor(x + tol)
        return stats.binom.cdf(k, ell, pb)
    mean = float(np.dot(values, probs))
    span = float(values[-1] - values[0])
    gap = (thr - ell * mean) if upper else (ell * mean - thr)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(gap > 0, np.exp(-2 * gap**2 / (np.maximum(ell, 1) * span**2)), 1.0)
    return np.where(ell == 0, ((0 > thr if strict else 0 >= thr) if upper else (0 < thr if strict else 0 <= thr)) * 1.0, h)


def support_size_tail(n: int, alpha: float, pair, thr: float, side: str, upper: bool, strict: bool = False) -> float:
    """P[sum of per-symbol LLRs over a Bernoulli(alpha) support crosses thr].

    The support size is conditioned on exactly (binomial masses up to a
    generous cap, the rest counted as 1). For the inner i.i.d. sum the law
    is exact for Gaussian channels and finite channels with at most two LLR
    atoms; otherwise Hoeffding's inequality is used, so the result stays an
    upper bound.
    """
    ell, pmf, rest = _support_law(n, alpha)
    if isinstance(pair, GaussianPair):
        f = gaussian_closed_forms(pair)[side]
        s2 = 2 * f.kl  # LLR under the x1 law is N(s2/2, s2)
        m, sd = ell * s2 / 2, np.sqrt(ell * s2)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(sd > 0, (thr - m) / np.where(sd > 0, sd, 1), np.inf if thr >= 0 else -np.inf)
        inner = stats.norm.sf(z) if upper else stats.norm.cdf(z)
        zero_hit = (0 > thr if strict else 0 >= thr) if upper else (0 < thr if strict else 0 <= thr)
        inner = np.where(ell == 0, float(zero_hit), inner)
    else:
        r0, r1 = (pair.P0, pair.P1) if side == "main" else (pair.Q0, pair.Q1)
        values = llr_table(r1, r0)
        probs = np.asarray(r1, dtype=float)
        if np.any(np.isinf(values[probs > 0])):
            raise AssumptionError(f"{side} LLR is unbounded on the x1 law (absolute continuity fails)")
        inner = _inner_tail(values, probs, ell, thr, upper, strict)
    return min(1.0, math.fsum((pmf * inner).tolist()) + rest)


def decoding_error_bound(params: CovertParameters, pair, gamma: float | None = None, M: int | None = None) -> float:
    """Average error bound of the threshold decoder at threshold gamma.

    P[density <= gamma] + M e^-gamma (1 + exp(omega^2 (zeta - 1))).
    """
    gamma = params.gamma if gamma is None else gamma
    M = params.M if M is None else M
    zeta = summarize_channel(pair).zeta
    if not math.isfinite(zeta):
        raise AssumptionError("zeta is infinite; use the support-revealing decoder instead")
    tail = support_size_tail(params.n, params.alpha_n, pair, gamma, "main", upper=False)
    return tail + M * math.exp(-gamma) * (1 + math.exp(params.omega_n**2 * (zeta - 1)))


def resolvability_kl_bound(params: CovertParameters, pair: ChannelPair, tau: float | None = None, MK: int | None = None) -> float:
    """Average-divergence resolvability bound n log(4/mu0) P[density >= tau] + e^tau/(MK)."""
    if isinstance(pair, GaussianPair):
        raise AssumptionError("the divergence bound needs mu0 > 0; use resolvability_tv_bound for Gaussian channels")
    if not pair.q1_ac_q0:
        raise AssumptionError("Q1 is not absolutely continuous w.r.t. Q0")
    if params.alpha_n > 0.5:
        raise ConfigError(f"bound requires alpha_n <= 1/2, got {params.alpha_n}")
    tau = params.tau if tau is None else tau
    MK = params.M * params.K if MK is None else MK
    tail = support_size_tail(params.n, params.alpha_n, pair, tau, "warden", upper=True)
    return params.n * math.log(4 / pair.mu0) * tail + math.exp(tau) / MK


def resolvability_tv_bound(params: CovertParameters, pair, tau: float | None = None, MK: int | None = None) -> float:
    """Average total-variation resolvability bound P[density > tau] + sqrt(e^tau/(MK))/2."""
    tau = params.tau if tau is None else tau
    MK = params.M * params.K if MK is None else MK
    tail = support_size_tail(params.n, params.alpha_n, pair, tau, "warden", upper=True, strict=True)
    return tail + 0.5 * math.sqrt(math.exp(tau) / MK)


# --- exact enumeration at tiny n -----------------------------------------------


def enumerate_outputs(alphabet: int, n: int) -> np.ndarray:
    """All |Z|^n output strings as rows of symbol indices, lexicographic."""
    if alphabet**n > ENUMERATION_CEILING:
        raise InfeasibleError(f"|Z|^n = {alphabet}^{n} exceeds the enumeration ceiling 2^22")
    return np.array(list(itertools.product(range(alphabet), repeat=n)), dtype=np.int32).reshape(-1, n)


def _word_output_law(support: np.ndarray, rows: np.ndarray, digits: np.ndarray) -> np.ndarray:
    x = np.zeros(digits.shape[1], dtype=np.int64)
    x[support] = 1
    return np.prod(rows[x, digits], axis=1)


def exact_induced_distribution(codebook: Codebook, Q0, Q1, words: np.ndarray | None = None) -> np.ndarray:
    """Output law (1/|words|) sum_w W(z|x_w) over all of Z^n.

    ``words`` selects codebook rows (default: all M*K, uniformly).
    """
    rows = np.vstack([np.asarray(Q0, dtype=float), np.asarray(Q1, dtype=float)])
    digits = enumerate_outputs(rows.shape[1], codebook.n)
    sel = range(codebook.M * codebook.K) if words is None else words
    acc = np.zeros(digits.shape[0])
    count = 0
    for r in sel:
        acc += _word_output_law(codebook.positions[codebook.offsets[r] : codebook.offsets[r + 1]], rows, digits)
        count += 1
    return acc / count


def product_distribution(row, n: int) -> np.ndarray:
    """row^(tensor n) over Z^n in the same order as :func:`enumerate_outputs`."""
    row = np.asarray(row, dtype=float)
    digits = enumerate_outputs(row.size, n)
    return np.prod(row[digits], axis=1)


# --- secrecy variant -----------------------------------------------------------


@dataclass(frozen=True)
class SecrecyDesign:
    """Sizes of a secret covert code.

    ``mode`` is ``wiretap`` (M x M' codebook with a uniform junk index, no
    extra key) or ``pad`` (plain design plus a one-time pad on the message).
    Key and pad sizes are given in nats and in bits.
    """

    mode: str
    params: CovertParameters
    logM: float
    logM_prime: float
    M: int
    M_prime: int
    logK_total: float
    pad_nats: float
    pad_bits: float


def secrecy_design(pair: ChannelPair | GaussianPair, params: CovertParameters) -> SecrecyDesign:
    """Choose between wiretap binning and one-time padding for message secrecy."""
    s = summarize_channel(pair)
    xi, w = params.xi, params.mean_weight
    main, warden = (1 - xi) * s.kl_main, (1 + xi) * s.kl_warden
    if main > warden:
        log_mp = w * warden
        log_m = w * main - log_mp
        M, Mp = _ceil_exp(log_m), _ceil_exp(log_mp)
        p = replace(params, logM=log_m, logK=0.0, M=M, K=Mp)
        return SecrecyDesign("wiretap", p, log_m, log_mp, M, Mp, w * warden, w * warden, w * warden / math.log(2))
    pad = params.logM
    return SecrecyDesign(
        "pad", params, params.logM, 0.0, params.M, 1, params.logK + pad, pad, pad / math.log(2)
    )


def secrecy_encode(design_: SecrecyDesign, message: int, rng, pad_key: int | None = None) -> tuple[int, int]:
    """Codebook (row index, key/junk index) for a message.

    Wiretap mode draws the junk index uniformly. Pad mode XORs the message
    with ``pad_key`` (M must be a power of two) and draws the covertness key.
    """
    if design_.mode == "wiretap":
        return message, int(rng.integers(design_.M_prime))
    M = design_.M
    if M & (M - 1):
        raise ConfigError(f"one-time pad needs M to be a power of two, got {M}")
    key = int(rng.integers(M)) if pad_key is None else pad_key
    return message ^ key, int(rng.integers(design_.params.K))


def _mutual_information(conditionals: list[np.ndarray]) -> float:
    marginal = np.sum(conditionals, axis=0) / len(conditionals)
    return math.fsum(kl(c, marginal) for c in conditionals) / len(conditionals)


def secrecy_leakage_exact(codebook: Codebook, Q0, Q1) -> float:
    """I(W; Z^n) for uniform W when the key index acts as uniform junk."""
    conds = [
        exact_induced_distribution(codebook, Q0, Q1, words=[codebook.row(i, j) for j in range(codebook.K)])
        for i in range(codebook.M)
    ]
    return _mutual_information(conds)


def pad_leakage_exact(codebook: Codebook, Q0, Q1) -> float:
    """I(W; Z^n) for uniform W sent as codeword W xor S with a uniform pad S.

    The conditional law of each message sums the same codewords; they are
    visited in sorted order so every conditional is bit-identical.
    """
    M = codebook.M
    if M & (M - 1):
        raise ConfigError(f"one-time pad needs M to be a power of two, got {M}")
    conds = []
    for w in range(M):
        rows = sorted(codebook.row(w ^ s, j) for s in range(M) for j in range(codebook.K))
        conds.append(exact_induced_distribution(codebook, Q0, Q1, words=rows))
    return _mutual_information(conds)


# --- support-revealing decoder -------------------------------------------------


@dataclass
class SupportRevealingCodec:
    """Keyless code for a main channel where some outputs reveal x1.

    The decoder collects the positions whose output is impossible under x0.
    Too few such positions means silence; otherwise the unique codeword
    covering all of them is returned.
    """

    pair: ChannelPair
    params: CovertParameters
    codebook: Codebook
    revealing: np.ndarray = field(init=False)
    min_hits: float = field(init=False)

    def __post_init__(self):
        self.revealing = np.zeros(len(self.pair.P0), dtype=bool)
        self.revealing[self.pair.revealing_outputs] = True
        self.min_hits = (1 - self.params.delta) * self.params.n * self.pair.kappa * self.params.alpha_n

    @property
    def n(self) -> int:
        return self.params.n

    def random_word(self, rng) -> SparseCodeword:
        return self.codebook.word(int(rng.integers(self.codebook.M)))

    def decode(self, y) -> DecodeResult:
        hits = np.flatnonzero(self.revealing[np.asarray(y)])
        if hits.size < self.min_hits or hits.size == 0:
            return DecodeResult(0, None, False, float(hits.size - self.min_hits))
        mark = np.zeros(self.n, dtype=bool)
        mark[hits] = True
        pos, owner = self.codebook.key_slice(0)
        covered = np.bincount(owner, weights=mark[pos], minlength=self.codebook.M)
        winners = np.flatnonzero(covered == hits.size)
        margin = float(hits.size - self.min_hits)
        if winners.size == 1:
            return DecodeResult(1, int(winners[0]), False, margin)
        return DecodeResult(1, None, winners.size > 1, margin)

    def run_trial(self, t_true: int, rng) -> TrialOutcome:
        i = int(rng.integers(self.codebook.M))
        word = self.codebook.word(i) if t_true else None
        y = transmit_and_receive(word, self.pair, "main", rng, n=self.n)
        d = self.decode(y)
        w_true = i if t_true else None
        status = _classify(t_true, w_true, d.t_hat, d.w_hat, d.ambiguous)
        return TrialOutcome(t_true, d.t_hat, w_true, d.w_hat, status, d.score_margin)


def support_revealing_sizes(pair: ChannelPair, n: int, omega_kind="inv_log", mu: float = 0.5, delta: float = 0.5) -> CovertParameters:
    if not pair.kappa > 0:
        raise AssumptionError("kappa = 0: no main-channel output reveals x1")
    if not pair.q1_ac_q0 or pair.q1_eq_q0:
        raise AssumptionError("need Q1 << Q0 and Q1 != Q0")
    for name, v in (("mu", mu), ("delta", delta)):
        if not 0.0 < v < 1.0:
            raise ConfigError(f"{name} must lie in ]0, 1[, got {v}")
    base = CovertParameters.from_schedule(n, parse_schedule(omega_kind))
    log_n = math.log(n)
    logM = (1 - mu) * (1 - delta) * pair.kappa * (0.5 + math.log(1 / base.omega_n) / log_n) * base.mean_weight * log_n
    return replace(base, mu=mu, delta=delta, nu=math.nan, xi=math.nan, logM=logM, M=_ceil_exp(logM), K=1)


def support_revealing_codec(
    pair: ChannelPair, n: int, omega_kind="inv_log", mu: float = 0.5, delta: float = 0.5, seed: int = 0, **kw
) -> SupportRevealingCodec:
    params = support_revealing_sizes(pair, n, omega_kind, mu, delta)
    return SupportRevealingCodec(pair, params, generate_codebook(params, seed, tag="support_revealing", **kw))
