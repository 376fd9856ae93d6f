"""Low-weight input processes: schedules, covertness budgets and scaling constants.

A covert transmitter sends x1 with probability alpha_n = omega_n / sqrt(n),
where omega_n -> 0 and omega_n sqrt(n) -> infinity. The warden then sees the
product law Q_alpha^n whose divergence from Q0^n is the covertness budget.
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .channels import ChannelPair, GaussianPair, MultiSymbolChannel, gaussian_closed_forms
from .divergence import chi_k, kl, mixture_divergence_exact
from .errors import AssumptionError, ConfigError

__all__ = [
    "Schedule",
    "parse_schedule",
    "omega_schedule",
    "CovertParameters",
    "ChannelSummary",
    "summarize_channel",
    "single_letter_budget",
    "covertness_budget",
    "solve_alpha_for_budget",
    "AsymptoticConstants",
    "asymptotic_constants",
    "multi_symbol_constants",
    "ScalingClass",
    "scaling_class",
    "support_revealing_constant",
]


@dataclass(frozen=True)
class Schedule:
    """A sequence omega_n with omega_n -> 0 and omega_n sqrt(n) -> infinity.

    ``kind`` is ``inv_log`` (1/ln n), ``log_over_sqrt`` (ln n / sqrt n) or
    ``power`` (n^(epsilon - 1/2), epsilon in ]0, 1/2[).
    """

    kind: str
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in ("inv_log", "log_over_sqrt", "power"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "power":
            if self.epsilon is None or not 0.0 < self.epsilon < 0.5:
                raise ConfigError(f"power schedule needs epsilon in ]0, 1/2[, got {self.epsilon}")
        elif self.epsilon is not None:
            raise ConfigError(f"schedule {self.kind} takes no epsilon")

    def __call__(self, n: int) -> float:
        if n < 3:
            raise ConfigError(f"blocklength must be at least 3, got {n}")
        if self.kind == "inv_log":
            return 1.0 / math.log(n)
        if self.kind == "log_over_sqrt":
            return math.log(n) / math.sqrt(n)
        return n ** (self.epsilon - 0.5)

    @property
    def log_inverse_limit(self) -> float:
        """lim log(1/omega_n) / log n, evaluated symbolically."""
        if self.kind == "inv_log":
            return 0.0  # log log n / log n
        if self.kind == "log_over_sqrt":
            return 0.5  # (log n / 2 - log log n) / log n
        return 0.5 - self.epsilon

    def __str__(self) -> str:
        return f"power({self.epsilon:g})" if self.kind == "power" else self.kind


_POWER = re.compile(r"^power[(:]\s*([0-9.eE+-]+)\s*\)?$")


def parse_schedule(kind: str | Schedule) -> Schedule:
    """Accept ``inv_log``, ``log_over_sqrt``, ``power(0.25)`` or ``power:0.25``."""
    if isinstance(kind, Schedule):
        return kind
    m = _POWER.match(kind.strip())
    if m:
        return Schedule("power", float(m.group(1)))
    return Schedule(kind.strip())


def omega_schedule(kind: str | Schedule, n: int) -> float:
    return parse_schedule(kind)(n)


@dataclass(frozen=True)
class CovertParameters:
    """Blocklength, input weight and the full slack/threshold/size pack.

    Sizes are natural logarithms. ``M`` and ``K`` are the integer counts
    obtained by rounding ``exp(logM)`` and ``exp(logK)`` up.
    """

    n: int
    omega_kind: str
    omega_n: float
    alpha_n: float
    beta_n: float
    xi: float = 0.5
    mu: float = 0.1
    nu: float = 0.1
    delta: float = 0.1
    epsilon: float = 0.1
    gamma: float = math.nan
    tau: float = math.nan
    logM: float = 0.0
    logK: float = 0.0
    M: int = 1
    K: int = 1
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_schedule(cls, n: int, kind: str | Schedule, **kw) -> "CovertParameters":
        sched = parse_schedule(kind)
        omega = sched(n)
        alpha = omega / math.sqrt(n)
        return cls(n=n, omega_kind=str(sched), omega_n=omega, alpha_n=alpha, beta_n=alpha / 2, **kw)

    @classmethod
    def from_alpha(cls, n: int, alpha: float, **kw) -> "CovertParameters":
        return cls(n=n, omega_kind="fixed", omega_n=alpha * math.sqrt(n), alpha_n=alpha, beta_n=alpha / 2, **kw)

    @property
    def mean_weight(self) -> float:
        """omega_n sqrt(n), the expected number of x1 symbols."""
        return self.omega_n * math.sqrt(self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in list(d.items()):
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = repr(v)
        return d


@dataclass(frozen=True)
class ChannelSummary:
    """Single-letter quantities of a channel pair, finite or Gaussian."""

    kl_main: float
    kl_warden: float
    chi2_warden: float
    zeta: float
    gaussian: bool


def summarize_channel(pair: ChannelPair | GaussianPair) -> ChannelSummary:
    if isinstance(pair, GaussianPair):
        f = gaussian_closed_forms(pair)
        return ChannelSummary(f["main"].kl, f["warden"].kl, f["warden"].chi2, f["main"].zeta, True)
    chi2 = chi_k(pair.Q1, pair.Q0, 2) if pair.q1_ac_q0 else math.inf
    return ChannelSummary(kl(pair.P1, pair.P0), kl(pair.Q1, pair.Q0), chi2, pair.zeta, False)


def _require_standing(pair, need_main_ac: bool = True) -> None:
    if isinstance(pair, GaussianPair):
        return
    if not pair.q1_ac_q0:
        raise AssumptionError("warden row Q1 is not absolutely continuous w.r.t. Q0")
    if pair.q1_eq_q0:
        raise AssumptionError("warden rows coincide (Q1 = Q0); covertness is free")
    if need_main_ac and not pair.p1_ac_p0:
        raise AssumptionError("main row P1 is not absolutely continuous w.r.t. P0")


def _gaussian_mixture_divergence(alpha: float, snr_amp: float) -> float:
    # D(alpha N(s,1) + (1-alpha) N(0,1) || N(0,1)) with s = x1 / sigma.
    s = snr_amp
    if alpha == 0.0 or s == 0.0:
        return 0.0

    def integrand(u):
        x = alpha * math.expm1(s * u - s * s / 2)
        if abs(x) < 1e-4:
            g = x * x * (0.5 - x / 6 + x * x / 12)
        else:
            g = (1 + x) * math.log1p(x) - x
        return math.exp(-u * u / 2) * g

    lo, hi = -12.0 - abs(s), 12.0 + 2 * abs(s)
    val, _ = integrate.quad(integrand, lo, hi, points=[0.0, s / 2, s], epsabs=0.0, epsrel=1e-13, limit=400)
    return val / math.sqrt(2 * math.pi)


def single_letter_budget(alpha: float, pair: ChannelPair | GaussianPair) -> float:
    """D(Q_alpha || Q0) for one channel use."""
    if isinstance(pair, GaussianPair):
        return _gaussian_mixture_divergence(alpha, pair.x1 / pair.sigma_warden)
    return mixture_divergence_exact(alpha, pair.Q1, pair.Q0)


def covertness_budget(params: CovertParameters, pair: ChannelPair | GaussianPair, alpha: float | None = None) -> float:
    """n D(Q_alpha || Q0), the divergence of the target product process.

    ``alpha`` defaults to ``params.alpha_n``; pass ``params.beta_n`` for the
    spread-spectrum scheme.
    """
    a = params.alpha_n if alpha is None else alpha
    return params.n * single_letter_budget(a, pair)


def solve_alpha_for_budget(pair: ChannelPair | GaussianPair, n: int, delta_target: float, max_iter: int = 200) -> float:
    """Input weight alpha with n D(Q_alpha || Q0) = delta_target, by bisection."""
    if not delta_target > 0:
        raise ConfigError(f"target budget must be positive, got {delta_target}")
    _require_standing(pair, need_main_ac=False)
    target = delta_target / n
    lo, hi = 1e-12, 0.5
    if single_letter_budget(hi, pair) < target:
        raise AssumptionError(f"budget {delta_target} unreachable with alpha <= 0.5 at n={n}")
    if single_letter_budget(lo, pair) >= target:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if single_letter_budget(mid, pair) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AsymptoticConstants:
    """Limits of log M / sqrt(n D) and log K / sqrt(n D) for slack ``xi``."""

    xi: float
    msg_const: float
    key_const: float
    converse_msg_ceiling: float
    converse_sum_floor: float


def _constants(xi: float, d_main: float, d_warden: float, chi2: float) -> AsymptoticConstants:
    if not 0.0 <= xi < 1.0:
        raise ConfigError(f"xi must lie in [0, 1[, got {xi}")
    scale = math.sqrt(2.0 / chi2)
    return AsymptoticConstants(
        xi=xi,
        msg_const=(1 - xi) * scale * d_main,
        key_const=scale * max((1 + xi) * d_warden - (1 - xi) * d_main, 0.0),
        converse_msg_ceiling=scale * d_main,
        converse_sum_floor=scale * d_warden,
    )


def asymptotic_constants(pair: ChannelPair | GaussianPair, xi: float = 0.5) -> AsymptoticConstants:
    _require_standing(pair)
    s = summarize_channel(pair)
    return _constants(xi, s.kl_main, s.kl_warden, s.chi2_warden)


def multi_symbol_constants(ch: MultiSymbolChannel, xi: float = 0.5) -> AsymptoticConstants:
    """Constants when x1 is replaced by several symbols used with weights p_i."""
    w = np.asarray(ch.weights, dtype=float)
    q0, p0 = np.asarray(ch.Q0), np.asarray(ch.P0)
    for i, (p, q) in enumerate(zip(ch.P, ch.Q)):
        if np.any((q0 == 0) & (np.asarray(q) > 0)):
            raise AssumptionError(f"Q_{i + 1} is not absolutely continuous w.r.t. Q0")
        if np.any((p0 == 0) & (np.asarray(p) > 0)):
            raise AssumptionError(f"P_{i + 1} is not absolutely continuous w.r.t. P0")
    q_bar = w @ np.vstack([np.asarray(q) for q in ch.Q])
    chi2 = chi_k(q_bar, q0, 2)
    if chi2 == 0.0:
        raise AssumptionError("Q0 is a mixture of the active warden rows; covertness is free")
    d_main = math.fsum(float(wi) * kl(p, ch.P0) for wi, p in zip(w, ch.P))
    d_warden = math.fsum(float(wi) * kl(q, ch.Q0) for wi, q in zip(w, ch.Q))
    return _constants(xi, d_main, d_warden, chi2)


@dataclass(frozen=True)
class ScalingClass:
    logM_class: str
    logK_class: str


SQRT_N, SQRT_N_LOG_N, LINEAR, ZERO = "Theta(sqrt(n))", "Theta(sqrt(n) log n)", "Theta(n)", "0"


def scaling_class(pair: ChannelPair, vanishing: bool = True) -> ScalingClass:
    """Optimal growth of log M and log K for the channel's support structure.

    With ``vanishing=False`` the covertness budget tends to a positive
    constant instead of zero; this only changes the key column.
    """
    if not pair.q1_ac_q0:
        return ScalingClass(ZERO, ZERO)
    if np.array_equal(np.asarray(pair.P1), np.asarray(pair.P0)):
        return ScalingClass(ZERO, ZERO)
    if pair.q1_eq_q0:
        return ScalingClass(LINEAR, ZERO)
    if not pair.p1_ac_p0:
        return ScalingClass(SQRT_N_LOG_N, ZERO)
    if vanishing and kl(pair.P1, pair.P0) >= kl(pair.Q1, pair.Q0):
        return ScalingClass(SQRT_N, ZERO)
    return ScalingClass(SQRT_N, SQRT_N)


def support_revealing_constant(pair: ChannelPair, omega_kind: str | Schedule, xi: float = 0.5) -> float:
    """Limit of log M / (sqrt(n D) log n) for a support-revealing main channel."""
    if not pair.kappa > 0:
        raise AssumptionError("kappa = 0: P1 is absolutely continuous w.r.t. P0")
    _require_standing(pair, need_main_ac=False)
    sched = parse_schedule(omega_kind)
    chi2 = chi_k(pair.Q1, pair.Q0, 2)
    return (1 - xi) * pair.kappa * math.sqrt(2.0 / chi2) * (0.5 + sched.log_inverse_limit)
