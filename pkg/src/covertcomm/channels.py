"""Binary-input covert channels: finite (DMC) pairs and Gaussian pairs.

A covert channel has an innocent input x0 and an active input x1. The main
(legitimate) channel maps them to P0, P1 and the warden's channel to Q0, Q1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Any, Sequence

import numpy as np

from .divergence import kl
from .errors import ChannelSpecError

__all__ = [
    "ChannelSpecError",
    "FiniteDistribution",
    "ChannelPair",
    "MultiSymbolChannel",
    "GaussianPair",
    "GaussianDivergences",
    "load_channel_pair",
    "bsc_pair",
    "capacity_binary_input",
    "gaussian_closed_forms",
]

STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Probability masses over a finite output alphabet (read-only)."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ChannelSpecError("a distribution needs a non-empty 1-D mass vector")
        if np.any(p < 0):
            raise ChannelSpecError(f"negative probability mass in {p.tolist()}")
        if abs(math.fsum(p.tolist()) - 1.0) > STOCHASTIC_TOL:
            raise ChannelSpecError(f"masses sum to {math.fsum(p.tolist())!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __array__(self, dtype=None, copy=None):
        return self.probabilities if dtype is None else self.probabilities.astype(dtype)

    def __len__(self) -> int:
        return self.probabilities.size

    def __getitem__(self, i):
        return self.probabilities[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return np.array_equal(self.probabilities, other.probabilities)

    def __hash__(self):
        return hash(self.probabilities.tobytes())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probabilities > 0)

    def __repr__(self) -> str:
        return f"FiniteDistribution({self.probabilities.tolist()})"


def _absolutely_continuous(p1: np.ndarray, p0: np.ndarray) -> bool:
    return not bool(np.any((p0 == 0) & (p1 > 0)))


def _zeta(p1: np.ndarray, p0: np.ndarray) -> float:
    if not _absolutely_continuous(p1, p0):
        return math.inf
    on = p0 > 0
    return math.fsum((p1[on] ** 2 / p0[on]).tolist())


@dataclass(frozen=True)
class ChannelPair:
    """Main and warden output laws for the two inputs, with derived scalars.

    Build with :meth:`from_distributions`; the derived fields are filled in
    there and never recomputed.
    """

    P0: FiniteDistribution
    P1: FiniteDistribution
    Q0: FiniteDistribution
    Q1: FiniteDistribution
    output_alphabet_main: tuple = ()
    output_alphabet_warden: tuple = ()
    mu0: float = field(default=math.nan)
    zeta: float = field(default=math.nan)
    kappa: float = field(default=math.nan)
    p1_ac_p0: bool = False
    q1_ac_q0: bool = False
    q1_eq_q0: bool = False

    @classmethod
    def from_distributions(cls, P0, P1, Q0, Q1, main_alphabet=None, warden_alphabet=None) -> "ChannelPair":
        P0, P1, Q0, Q1 = (d if isinstance(d, FiniteDistribution) else FiniteDistribution(d) for d in (P0, P1, Q0, Q1))
        if len(P0) != len(P1) or len(Q0) != len(Q1):
            raise ChannelSpecError("rows of one channel must share an output alphabet")
        p0, p1, q0, q1 = (np.asarray(d) for d in (P0, P1, Q0, Q1))
        revealing = (p1 > 0) & (p0 == 0)
        return cls(
            P0=P0,
            P1=P1,
            Q0=Q0,
            Q1=Q1,
            output_alphabet_main=tuple(main_alphabet) if main_alphabet is not None else tuple(range(len(P0))),
            output_alphabet_warden=tuple(warden_alphabet) if warden_alphabet is not None else tuple(range(len(Q0))),
            mu0=float(q0[q0 > 0].min()),
            zeta=_zeta(p1, p0),
            kappa=math.fsum(p1[revealing].tolist()),
            p1_ac_p0=_absolutely_continuous(p1, p0),
            q1_ac_q0=_absolutely_continuous(q1, q0),
            q1_eq_q0=bool(np.array_equal(q1, q0)),
        )

    @property
    def revealing_outputs(self) -> np.ndarray:
        """Main-channel outputs that are impossible under x0 but possible under x1."""
        p0, p1 = np.asarray(self.P0), np.asarray(self.P1)
        return np.flatnonzero((p1 > 0) & (p0 == 0))

    def main_rows(self) -> np.ndarray:
        return np.vstack([np.asarray(self.P0), np.asarray(self.P1)])

    def warden_rows(self) -> np.ndarray:
        return np.vstack([np.asarray(self.Q0), np.asarray(self.Q1)])

    def kl_main(self) -> float:
        return kl(self.P1, self.P0)

    def kl_warden(self) -> float:
        return kl(self.Q1, self.Q0)

    def to_document(self) -> dict:
        return {
            "input_alphabet": ["x0", "x1"],
            "innocent_index": 0,
            "x1_index": 1,
            "main": self.main_rows().tolist(),
            "warden": self.warden_rows().tolist(),
        }


@dataclass(frozen=True)
class MultiSymbolChannel:
    """Innocent rows P0/Q0 plus N active symbols used with weights ``weights``."""

    P0: FiniteDistribution
    Q0: FiniteDistribution
    P: tuple
    Q: tuple
    weights: tuple

    def __post_init__(self):
        if not (len(self.P) == len(self.Q) == len(self.weights) >= 1):
            raise ChannelSpecError("need one weight and one row per active symbol")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(math.fsum(w.tolist()) - 1.0) > 1e-12:
            raise ChannelSpecError(f"symbol weights must be a probability vector, got {w.tolist()}")
        object.__setattr__(self, "P", tuple(FiniteDistribution(p) for p in self.P))
        object.__setattr__(self, "Q", tuple(FiniteDistribution(q) for q in self.Q))
        for name in ("P0", "Q0"):
            v = getattr(self, name)
            if not isinstance(v, FiniteDistribution):
                object.__setattr__(self, name, FiniteDistribution(v))

    @property
    def N(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class GaussianPair:
    """Input amplitude x1 (x0 = 0) over AWGN main and warden channels."""

    x1: float
    sigma_main: float
    sigma_warden: float

    def __post_init__(self):
        if not (self.sigma_main > 0 and self.sigma_warden > 0):
            raise ChannelSpecError("noise standard deviations must be positive")
        if self.x1 == 0:
            raise ChannelSpecError("x1 must differ from the innocent amplitude 0")


@dataclass(frozen=True)
class GaussianDivergences:
    kl: float
    chi2: float
    zeta: float
    llr_slope: float


def _gaussian_forms(x1: float, sigma: float) -> GaussianDivergences:
    snr = x1 * x1 / (sigma * sigma)
    return GaussianDivergences(kl=snr / 2, chi2=math.expm1(snr), zeta=math.exp(snr), llr_slope=x1 / sigma**2)


def gaussian_closed_forms(g: GaussianPair) -> dict[str, GaussianDivergences]:
    """Closed-form divergences of N(x1, s^2) from N(0, s^2), per channel.

    ``zeta`` is the integral of P1^2/P0, which equals exp(+x1^2/s^2).
    """
    return {"main": _gaussian_forms(g.x1, g.sigma_main), "warden": _gaussian_forms(g.x1, g.sigma_warden)}


def _rows(doc: dict, key: str) -> np.ndarray:
    try:
        m = np.asarray(doc[key], dtype=float)
    except KeyError as exc:
        raise ChannelSpecError(f"channel document lacks '{key}'") from exc
    except (TypeError, ValueError) as exc:
        raise ChannelSpecError(f"'{key}' is not a numeric matrix") from exc
    if m.ndim != 2:
        raise ChannelSpecError(f"'{key}' must be a matrix")
    if np.any(m < 0):
        raise ChannelSpecError(f"'{key}' has a negative transition probability")
    bad = np.abs(m.sum(axis=1) - 1.0) > STOCHASTIC_TOL
    if np.any(bad):
        raise ChannelSpecError(f"'{key}' rows {np.flatnonzero(bad).tolist()} are not stochastic")
    return m


_FINITE_KEYS = {"input_alphabet", "innocent_index", "x1_index", "main", "warden", "schema_version", "name"}
_GAUSSIAN_KEYS = {"gaussian", "schema_version", "name"}


def load_channel_pair(spec: dict | str | PathLike) -> ChannelPair | GaussianPair:
    """Parse a channel document (dict, JSON path) into a channel pair."""
    if not isinstance(spec, dict):
        try:
            with open(spec) as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise ChannelSpecError(f"cannot read channel file {spec}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ChannelSpecError(f"channel file {spec} is not JSON: {exc}") from exc
    if "gaussian" in spec:
        extra = set(spec) - _GAUSSIAN_KEYS
        if extra:
            raise ChannelSpecError(f"unknown channel fields: {sorted(extra)}")
        g = spec["gaussian"]
        try:
            return GaussianPair(float(g["x1"]), float(g["sigma_main"]), float(g["sigma_warden"]))
        except (KeyError, TypeError) as exc:
            raise ChannelSpecError(f"gaussian channel needs x1, sigma_main, sigma_warden: {exc}") from exc
    extra = set(spec) - _FINITE_KEYS
    if extra:
        raise ChannelSpecError(f"unknown channel fields: {sorted(extra)}")
    alphabet = spec.get("input_alphabet")
    if not alphabet:
        raise ChannelSpecError("channel document lacks 'input_alphabet'")
    idx = {}
    for key in ("innocent_index", "x1_index"):
        if key not in spec:
            raise ChannelSpecError(f"channel document lacks '{key}'")
        i = spec[key]
        if not isinstance(i, int) or not 0 <= i < len(alphabet):
            raise ChannelSpecError(f"'{key}'={i!r} is not a valid input index")
        idx[key] = i
    if idx["innocent_index"] == idx["x1_index"]:
        raise ChannelSpecError("x1 must differ from the innocent symbol")
    main, warden = _rows(spec, "main"), _rows(spec, "warden")
    for key, m in (("main", main), ("warden", warden)):
        if m.shape[0] != len(alphabet):
            raise ChannelSpecError(f"'{key}' has {m.shape[0]} rows for {len(alphabet)} inputs")
    x0, x1 = idx["innocent_index"], idx["x1_index"]
    return ChannelPair.from_distributions(main[x0], main[x1], warden[x0], warden[x1])


def bsc_pair(p_main: float, p_warden: float) -> ChannelPair:
    """Binary symmetric main and warden channels with x0 = 0."""
    return ChannelPair.from_distributions([1 - p_main, p_main], [p_main, 1 - p_main], [1 - p_warden, p_warden], [p_warden, 1 - p_warden])


def _binary_input_information(alpha: float, p0: np.ndarray, p1: np.ndarray) -> float:
    pa = alpha * p1 + (1 - alpha) * p0
    total = []
    for w, row in ((1 - alpha, p0), (alpha, p1)):
        if w == 0:
            continue
        on = row > 0
        total.append(w * row[on] * np.log(row[on] / pa[on]))
    return math.fsum(np.concatenate(total).tolist()) if total else 0.0


def capacity_binary_input(pair: Any, tol: float = 1e-10) -> tuple[float, float]:
    """Capacity (nats) of the main channel with inputs restricted to {x0, x1}.

    Only ``pair.P0`` and ``pair.P1`` are read. Returns ``(C, alpha_star)``
    where alpha_star is the maximizing probability of x1; the mutual
    information is concave in alpha so a ternary search suffices.
    """
    p0, p1 = np.asarray(pair.P0, dtype=float), np.asarray(pair.P1, dtype=float)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if _binary_input_information(m1, p0, p1) < _binary_input_information(m2, p0, p1):
            lo = m1
        else:
            hi = m2
    a = 0.5 * (lo + hi)
    return max(_binary_input_information(a, p0, p1), 0.0), a


def matrix_pair(main: Sequence[Sequence[float]], warden: Sequence[Sequence[float]], x0: int = 0, x1: int = 1) -> ChannelPair:
    """Convenience wrapper around :func:`load_channel_pair` for in-memory matrices."""
    return load_channel_pair(
        {"input_alphabet": list(range(len(main))), "innocent_index": x0, "x1_index": x1, "main": main, "warden": warden}
    )
