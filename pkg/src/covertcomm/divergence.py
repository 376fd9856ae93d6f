"""Information measures for covert-communication budgets.

All quantities are in nats. Sums go through :func:`math.fsum` because the
terms of a mixture divergence at small weights span many orders of
magnitude. Inputs are any array-likes of probability masses (including
:class:`covertcomm.channels.FiniteDistribution`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "AbsoluteContinuityError",
    "MixtureBounds",
    "kl",
    "tv",
    "chi_k",
    "eta_k",
    "mixture",
    "mixture_divergence_exact",
    "mixture_divergence_bounds",
    "mutual_info_binary",
    "binary_kl",
    "jensen_shannon_binary",
    "to_bits",
]

LN2 = math.log(2.0)


class AbsoluteContinuityError(ValueError):
    """Q1 puts mass where the reference distribution Q0 has none."""


def _pair(P, Q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(P, dtype=float)
    q = np.asarray(Q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return p, q


def _check_ac(q1: np.ndarray, q0: np.ndarray) -> None:
    if np.any((q0 == 0) & (q1 > 0)):
        raise AbsoluteContinuityError("Q1 is not absolutely continuous w.r.t. Q0")


def to_bits(nats: float) -> float:
    return nats / LN2


def kl(P, Q) -> float:
    """Relative entropy D(P||Q) with 0 log 0 = 0; ``math.inf`` if P is not << Q."""
    p, q = _pair(P, Q)
    on = p > 0
    if np.any(q[on] == 0):
        return math.inf
    # rounding can push near-equal laws a hair below zero
    return max(0.0, math.fsum((p[on] * (np.log(p[on]) - np.log(q[on]))).tolist()))


def tv(P, Q) -> float:
    p, q = _pair(P, Q)
    return 0.5 * math.fsum(np.abs(p - q).tolist())


def _moment_terms(Q1, Q0, k: int) -> tuple[np.ndarray, np.ndarray]:
    if k < 2 or k > 8:
        raise ValueError(f"order k must lie in [2, 8], got {k}")
    q1, q0 = _pair(Q1, Q0)
    _check_ac(q1, q0)
    on = q0 > 0
    d = q1[on] - q0[on]
    return d, d**k / q0[on] ** (k - 1)


def chi_k(Q1, Q0, k: int = 2) -> float:
    """Sum over supp(Q0) of (Q1 - Q0)^k / Q0^(k-1)."""
    _, terms = _moment_terms(Q1, Q0, k)
    return math.fsum(terms.tolist())


def eta_k(Q1, Q0, k: int) -> float:
    """Same sum as :func:`chi_k` restricted to outputs where Q1 < Q0."""
    d, terms = _moment_terms(Q1, Q0, k)
    return math.fsum(terms[d < 0].tolist())


def mixture(alpha: float, Q1, Q0) -> np.ndarray:
    q1, q0 = _pair(Q1, Q0)
    return alpha * q1 + (1.0 - alpha) * q0


def _one_plus_x_log_one_plus_x_minus_x(x: np.ndarray) -> np.ndarray:
    # (1+x)log(1+x) - x >= 0; power series near 0 avoids cancellation.
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = xs**2 * (0.5 + xs * (-1.0 / 6.0 + xs * (1.0 / 12.0 + xs * (-1.0 / 20.0 + xs / 30.0))))
    xl = x[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(xl == -1.0, 1.0, (1.0 + xl) * np.log1p(xl) - xl)
    out[~small] = big
    return out


def mixture_divergence_exact(alpha: float, Q1, Q0) -> float:
    """D(Q_alpha || Q0) where Q_alpha = alpha*Q1 + (1-alpha)*Q0.

    Uses the identity sum Q0 * x = 0 with x = alpha (Q1-Q0)/Q0, so every
    summand Q0 * [(1+x) log(1+x) - x] is non-negative and no cancellation
    occurs even for alpha around 1e-8.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    q1, q0 = _pair(Q1, Q0)
    _check_ac(q1, q0)
    if alpha == 0.0:
        return 0.0
    on = q0 > 0
    x = alpha * (q1[on] - q0[on]) / q0[on]
    return math.fsum((q0[on] * _one_plus_x_log_one_plus_x_minus_x(x)).tolist())


@dataclass(frozen=True)
class MixtureBounds:
    """Third/fourth-order sandwich on D(Q_alpha || Q0).

    ``lower`` is only meaningful when ``lower_valid``: every output with
    Q0 > 0 must satisfy alpha (Q0 - Q1) <= Q0 / 2.
    """

    alpha: float
    upper: float
    lower: float
    lower_valid: bool
    loose_upper: float
    loose_lower: float


def mixture_divergence_bounds(alpha: float, Q1, Q0) -> MixtureBounds:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in ]0, 1[, got {alpha}")
    q1, q0 = _pair(Q1, Q0)
    _check_ac(q1, q0)
    c2, c3, c4 = (chi_k(q1, q0, k) for k in (2, 3, 4))
    e3, e4 = eta_k(q1, q0, 3), eta_k(q1, q0, 4)
    a2, a3, a4 = alpha**2, alpha**3, alpha**4
    upper = a2 / 2 * c2 - a3 / 6 * c3 + a4 / 3 * c4
    lower = a2 / 2 * c2 - a3 * (c3 / 2 - 2 * e3 / 3) + 2 * a4 / 3 * e4
    on = q0 > 0
    lower_valid = bool(np.all(alpha * (q0[on] - q1[on]) <= q0[on] / 2))
    lead = a2 / 2 * c2
    root = math.sqrt(alpha)
    return MixtureBounds(
        alpha=alpha,
        upper=upper,
        lower=lower,
        lower_valid=lower_valid,
        loose_upper=lead * (1 + root),
        loose_lower=lead * (1 - root),
    )


def mutual_info_binary(alpha: float, Q1, Q0) -> float:
    """I(X;Z) for X ~ Bernoulli(alpha) on {x0, x1} through the rows (Q0, Q1).

    Computed directly as (1-alpha) D(Q0||Q_alpha) + alpha D(Q1||Q_alpha);
    it equals alpha D(Q1||Q0) - D(Q_alpha||Q0).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    q1, q0 = _pair(Q1, Q0)
    _check_ac(q1, q0)
    qa = mixture(alpha, q1, q0)
    parts = []
    if alpha < 1.0:
        on = q0 > 0
        parts.append((1.0 - alpha) * q0[on] * -np.log(qa[on] / q0[on]))
    if alpha > 0.0:
        on = q1 > 0
        parts.append(alpha * q1[on] * np.log(q1[on] / qa[on]))
    if not parts:
        return 0.0
    return math.fsum(np.concatenate(parts).tolist())


def binary_kl(a: float, b: float) -> float:
    """D(Bernoulli(a) || Bernoulli(b))."""
    return kl([1.0 - a, a], [1.0 - b, b])


def jensen_shannon_binary(a: float, b: float) -> float:
    """Jensen-Shannon divergence between Bernoulli(a) and Bernoulli(b), in nats.

    Half the sum of the divergences to the midpoint, so the value lies in
    [0, ln 2] and 2 J(a, b) <= D(B_b || B_a).
    """
    for v in (a, b):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"Bernoulli parameter outside [0, 1]: {v}")
    # entropy form stays finite when the midpoint underflows
    def h(p):
        return float(special.entr(p) + special.entr(1.0 - p))

    return max(0.0, h(0.5 * a + 0.5 * b) - 0.5 * h(a) - 0.5 * h(b))
