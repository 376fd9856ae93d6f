"""Key-driven spreading sequences modulated by a short inner code.

A secret key selects a sparse spreading sequence whose weight lies in a
window around omega_n sqrt(n). The message is encoded by a binary inner
code, padded with further key bits and written onto the x1-positions of the
spreading sequence. Each x1-position survives with probability 1/2, so the
warden sees the low-weight process at half the input weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .channels import ChannelPair, GaussianPair, capacity_binary_input
from .errors import ConfigError, InfeasibleError
from .process import CovertParameters, covertness_budget, parse_schedule
from .resolvability import (
    DecodeResult,
    SparseCodeword,
    TrialOutcome,
    _classify,
    transmit_and_receive,
)
from .streams import stream

__all__ = [
    "SpreadingCode",
    "generate_spreading_code",
    "KeySizes",
    "key_sizes",
    "ModulationPlan",
    "modulation_plan",
    "modulate",
    "InnerCode",
    "demodulate_and_decode",
    "spreading_threshold",
    "spreading_divergence_bound",
    "SchemeSizes",
    "spreading_scheme_sizes",
    "SpreadSpectrumCodec",
]

MAX_ATTEMPTS = 1_000_000
MIN_ACCEPTANCE = 1e-3


def _key_words(index: int) -> tuple[int, ...]:
    # split an arbitrarily large key index into 32-bit stream labels
    words = []
    while True:
        words.append(index & 0xFFFFFFFF)
        index >>= 32
        if not index:
            return tuple(words)


@dataclass(frozen=True)
class SpreadingCode:
    """K_tilde spreading sequences drawn from the weight-truncated product law.

    Sequences are generated on demand from ``(seed, key)``; the code is fully
    determined by its fields. ``lambda_exact`` is the acceptance probability
    of the weight window, ``lambda_n_estimate`` the empirical acceptance
    measured over the first ``probe`` keys.
    """

    n: int
    alpha_n: float
    epsilon: float
    K_tilde: int
    seed: int
    lambda_exact: float
    lambda_n_estimate: float = math.nan
    probe: int = 0

    @property
    def mean_weight(self) -> float:
        return self.n * self.alpha_n

    @property
    def window(self) -> tuple[int, int]:
        """Inclusive integer weight range of the truncation set."""
        w = self.mean_weight
        return math.ceil((1 - self.epsilon) * w - 1e-9), math.floor((1 + self.epsilon) * w + 1e-9)

    def _draw(self, key: int) -> tuple[SparseCodeword, int]:
        if not 0 <= key < self.K_tilde:
            raise IndexError(f"key {key} outside [0, {self.K_tilde})")
        rng = stream(self.seed, "spreading", *_key_words(key))
        lo, hi = self.window
        for attempt in range(1, MAX_ATTEMPTS + 1):
            size = int(rng.binomial(self.n, self.alpha_n))
            if lo <= size <= hi:
                support = np.sort(rng.choice(self.n, size=size, replace=False))
                return SparseCodeword(self.n, support), attempt
        raise InfeasibleError(f"no sequence in the weight window after {MAX_ATTEMPTS} attempts")

    def sequence(self, key: int) -> SparseCodeword:
        return self._draw(key)[0]

    def random_key(self, rng) -> int:
        bits = self.K_tilde.bit_length()
        while True:
            k = int.from_bytes(rng.bytes((bits + 7) // 8), "little") & ((1 << bits) - 1)
            if k < self.K_tilde:
                return k


def generate_spreading_code(
    n: int, alpha_n: float, epsilon: float, K_tilde: int, seed: int, probe: int = 200
) -> SpreadingCode:
    """Build a spreading code and measure its rejection-sampling acceptance."""
    if K_tilde < 1:
        raise ConfigError(f"K_tilde must be at least 1, got {K_tilde}")
    if not 0.0 < alpha_n <= 0.5:
        raise ConfigError(f"alpha_n must lie in ]0, 1/2], got {alpha_n}")
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"epsilon must lie in [0, 1], got {epsilon}")
    code = SpreadingCode(n, alpha_n, epsilon, int(K_tilde), int(seed), math.nan)
    lo, hi = code.window
    lam = float(stats.binom.cdf(hi, n, alpha_n) - stats.binom.cdf(lo - 1, n, alpha_n)) if hi >= lo else 0.0
    if lam < MIN_ACCEPTANCE:
        raise InfeasibleError(f"weight window [{lo}, {hi}] has acceptance {lam:.3g} < {MIN_ACCEPTANCE}")
    probe = min(probe, int(K_tilde))
    attempts = sum(code._draw(k)[1] for k in range(probe))
    est = probe / attempts if attempts else math.nan
    return SpreadingCode(n, alpha_n, epsilon, int(K_tilde), int(seed), lam, est, probe)


@dataclass(frozen=True)
class KeySizes:
    log_K_tilde: float
    log_K_hat: float

    @property
    def log_K_total(self) -> float:
        return self.log_K_tilde + self.log_K_hat


def key_sizes(n: int, omega_kind="inv_log", mu: float = 0.1, delta: float = 0.1, epsilon: float = 0.1) -> KeySizes:
    """Spreading-key and pad-key sizes in nats."""
    w = parse_schedule(omega_kind)(n) * math.sqrt(n)
    return KeySizes((1 + delta) * (1 + 2 * mu) * w * math.log(n), (1 + epsilon) * w)


@dataclass(frozen=True)
class ModulationPlan:
    n_prime: int
    inner_logM: float
    pad_key_bits: int


def modulation_plan(n: int, omega_kind="inv_log", epsilon: float = 0.1, inner_logM: float = 0.0) -> ModulationPlan:
    w = parse_schedule(omega_kind)(n) * math.sqrt(n)
    return ModulationPlan(math.ceil((1 - epsilon) * w - 1e-9), inner_logM, math.floor((1 + epsilon) * w + 1e-9))


def modulate(x_tilde: SparseCodeword, b, s_hat) -> SparseCodeword:
    """Write code bits onto the x1-positions of a spreading sequence.

    The j-th x1-position keeps x1 iff b_j xor s_j = 1 while j < len(b), and
    iff s_j = 1 afterwards. Every other position carries x0.
    """
    b = np.asarray(b, dtype=np.uint8)
    s = np.asarray(s_hat, dtype=np.uint8)
    w = x_tilde.weight
    if s.size < w:
        raise ValueError(f"pad has {s.size} bits but the sequence has {w} x1-positions")
    keep = s[:w].copy()
    head = min(w, b.size)
    keep[:head] ^= b[:head]
    return SparseCodeword(x_tilde.n, x_tilde.support[keep.astype(bool)])


@dataclass(frozen=True, eq=False)
class InnerCode:
    """Random binary code of length n_prime with an information-density decoder."""

    bits: np.ndarray
    threshold: float
    density: np.ndarray  # density[x, y] = log W(y|x) / P_half(y)

    @classmethod
    def random(cls, pair: ChannelPair, M: int, n_prime: int, seed: int, threshold: float | None = None) -> "InnerCode":
        rng = stream(seed, "inner_code", M, n_prime)
        bits = rng.integers(0, 2, size=(M, n_prime), dtype=np.uint8)
        rows = np.vstack([np.asarray(pair.P0), np.asarray(pair.P1)])
        half = rows.mean(axis=0)
        with np.errstate(divide="ignore"):
            dens = np.where(rows > 0, np.log(rows) - np.log(np.where(half > 0, half, 1.0)), -np.inf)
        if threshold is None:
            i_half = float(np.sum(np.where(rows > 0, rows * np.nan_to_num(dens, neginf=0.0), 0.0)) / 2)
            threshold = 0.5 * (math.log(M) + n_prime * i_half)
        bits.setflags(write=False)
        return cls(bits, threshold, dens)

    @property
    def M(self) -> int:
        return self.bits.shape[0]

    @property
    def n_prime(self) -> int:
        return self.bits.shape[1]

    def scores(self, y_hat, pad) -> np.ndarray:
        c = self.bits ^ np.asarray(pad, dtype=np.uint8)[None, :]
        d0, d1 = self.density[0, y_hat], self.density[1, y_hat]
        with np.errstate(invalid="ignore"):
            return np.where(c == 1, d1[None, :], d0[None, :]).sum(axis=1)


def demodulate_and_decode(y, x_tilde: SparseCodeword, s_hat, inner: InnerCode) -> DecodeResult:
    """Read the outputs at the x1-positions, strip the pad, threshold-decode."""
    if x_tilde.weight < inner.n_prime:
        return DecodeResult(1, None, False, -math.inf)
    y_hat = np.asarray(y)[x_tilde.support[: inner.n_prime]]
    s = inner.scores(y_hat, np.asarray(s_hat, dtype=np.uint8)[: inner.n_prime])
    above = np.flatnonzero(s > inner.threshold)
    margin = float(s.max() - inner.threshold)
    if above.size == 0:
        return DecodeResult(0, None, False, margin)
    if above.size > 1:
        return DecodeResult(1, None, True, margin)
    return DecodeResult(1, int(above[0]), False, margin)


def spreading_threshold(n: int, alpha_n: float, mu: float) -> float:
    """Threshold making the weight tail equal P[supp > (1+mu) n alpha_n]."""
    return (1 + mu) * n * alpha_n * math.log(1 / alpha_n - 1) - n * math.log1p(-alpha_n)


def spreading_divergence_bound(
    n: int, alpha_n: float, K_tilde: float | None, gamma: float, lambda_n: float, log_K_tilde: float | None = None
) -> float:
    """Average divergence between the spreading-sequence law and the product law.

    (n/lambda) log(2/alpha) P[supp >= (gamma + n log(1-alpha)) / log((1-alpha)/alpha)]
    + log(1/lambda + e^gamma / K_tilde). Give ``log_K_tilde`` for huge codes.
    """
    if not 0.0 < alpha_n < 0.5:
        raise ConfigError(f"bound requires 0 < alpha_n < 1/2, got {alpha_n}")
    if not 0.0 < lambda_n <= 1.0:
        raise ConfigError(f"lambda_n must lie in ]0, 1], got {lambda_n}")
    if n * math.log(alpha_n) > math.log(lambda_n):
        raise ConfigError("bound requires alpha_n^n <= lambda_n")
    if log_K_tilde is None:
        if K_tilde is None or K_tilde < 1:
            raise ConfigError("give K_tilde >= 1 or log_K_tilde")
        log_K_tilde = math.log(K_tilde)
    cut = (gamma + n * math.log1p(-alpha_n)) / math.log((1 - alpha_n) / alpha_n)
    k = max(math.ceil(cut - 1e-9), 0)
    tail = float(stats.binom.sf(k - 1, n, alpha_n))
    return n / lambda_n * math.log(2 / alpha_n) * tail + math.log(1 / lambda_n + math.exp(gamma - log_K_tilde))


@dataclass(frozen=True)
class SchemeSizes:
    logM: float
    logK_total: float
    capacity: float
    beta_n: float
    budget: Optional[float] = None


def spreading_scheme_sizes(pair, n: int, omega_kind="inv_log", xi: float = 0.5) -> SchemeSizes:
    """Message and total key sizes of the spreading scheme.

    Only the main-channel rows are needed. The covertness budget at half
    the input weight is added when the warden rows are available.
    """
    if not 0.0 < xi < 1.0:
        raise ConfigError(f"xi must lie in ]0, 1[, got {xi}")
    p = CovertParameters.from_schedule(n, omega_kind)
    C, _ = capacity_binary_input(pair)
    budget = None
    if getattr(pair, "Q0", None) is not None and getattr(pair, "Q1", None) is not None:
        budget = covertness_budget(p, pair, alpha=p.beta_n)
    w = p.mean_weight
    return SchemeSizes((1 - xi) * w * C, (1 + xi) * w * math.log(n), C, p.beta_n, budget)


@dataclass
class SpreadSpectrumCodec:
    """Spreading code plus inner code for one blocklength."""

    pair: ChannelPair
    params: CovertParameters
    code: SpreadingCode
    inner: InnerCode
    keys: KeySizes = field(default=None)

    @classmethod
    def build(
        cls,
        pair: ChannelPair,
        n: int,
        omega_kind="inv_log",
        xi: float = 0.5,
        mu: float = 0.1,
        delta: float = 0.1,
        epsilon: float = 0.1,
        seed: int = 0,
        max_inner_words: int = 2_000_000,
    ) -> "SpreadSpectrumCodec":
        if isinstance(pair, GaussianPair):
            raise ConfigError("the spreading scheme is implemented for finite channels only")
        sizes = spreading_scheme_sizes(pair, n, omega_kind, xi)
        keys = key_sizes(n, omega_kind, mu, delta, epsilon)
        p = CovertParameters.from_schedule(n, omega_kind)
        plan = modulation_plan(n, omega_kind, epsilon, sizes.logM)
        M = max(1, math.ceil(math.exp(sizes.logM) * (1 - 1e-12)))
        if M * plan.n_prime > max_inner_words * 64:
            raise InfeasibleError(f"inner code with M={M} words is too large")
        K_tilde = max(1, math.ceil(math.exp(keys.log_K_tilde)))
        code = generate_spreading_code(n, p.alpha_n, epsilon, K_tilde, seed)
        inner = InnerCode.random(pair, M, plan.n_prime, seed)
        params = CovertParameters(
            n=n,
            omega_kind=p.omega_kind,
            omega_n=p.omega_n,
            alpha_n=p.alpha_n,
            beta_n=p.beta_n,
            xi=xi,
            mu=mu,
            nu=math.nan,
            delta=delta,
            epsilon=epsilon,
            gamma=inner.threshold,
            logM=sizes.logM,
            logK=keys.log_K_total,
            M=M,
            K=K_tilde,
            extra={"n_prime": plan.n_prime, "log_K_tilde": keys.log_K_tilde, "log_K_hat": keys.log_K_hat},
        )
        return cls(pair, params, code, inner, keys)

    @property
    def n(self) -> int:
        return self.params.n

    def _pad(self, rng) -> np.ndarray:
        return rng.integers(0, 2, size=self.code.window[1], dtype=np.uint8)

    def random_word(self, rng) -> SparseCodeword:
        x = self.code.sequence(self.code.random_key(rng))
        b = self.inner.bits[int(rng.integers(self.inner.M))]
        return modulate(x, b, self._pad(rng))

    def run_trial(self, t_true: int, rng) -> TrialOutcome:
        x = self.code.sequence(self.code.random_key(rng))
        s_hat = self._pad(rng)
        w = int(rng.integers(self.inner.M))
        sent = modulate(x, self.inner.bits[w], s_hat) if t_true else None
        y = transmit_and_receive(sent, self.pair, "main", rng, n=self.n)
        d = demodulate_and_decode(y, x, s_hat, self.inner)
        w_true = w if t_true else None
        status = _classify(t_true, w_true, d.t_hat, d.w_hat, d.ambiguous)
        return TrialOutcome(t_true, d.t_hat, w_true, d.w_hat, status, d.score_margin, x.weight)
