"""Reproducible experiments: reliability, covertness audits, detection, sweeps.

Each trial owns a random stream keyed by (master seed, experiment, n,
hypothesis, trial index). Trials may run on a thread pool; results are
folded in trial order, so output bytes do not depend on the pool size.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
from scipy import stats

from .channels import ChannelPair, GaussianPair, load_channel_pair
from .divergence import kl, mixture, tv
from .errors import ConfigError
from .process import CovertParameters, parse_schedule, single_letter_budget
from .resolvability import (
    ENUMERATION_CEILING,
    Codebook,
    ResolvabilityCodec,
    TrialOutcome,
    support_revealing_codec,
    support_revealing_sizes,
    design,
    exact_induced_distribution,
    generate_codebook,
    resolvability_kl_bound,
    resolvability_tv_bound,
    product_distribution,
    secrecy_design,
)
from .spread_spectrum import SpreadSpectrumCodec, key_sizes, spreading_scheme_sizes
from .streams import resolve_seed, stream
from .warden import detection_floor, empirical_roc

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "load_config",
    "build_codec",
    "ReliabilityResult",
    "run_reliability",
    "CovertnessReport",
    "run_covertness_audit",
    "ChernoffRow",
    "run_chernoff_check",
    "ScalingRecord",
    "SWEEP_HEADER",
    "run_scaling_sweep",
    "sweep_csv",
    "run_detection",
]

SCHEMA_VERSION = 1
SCHEMES = ("resolvability", "spread_spectrum", "support_revealing", "secrecy")
OVERRIDE_KEYS = {"xi", "mu", "nu", "delta", "epsilon", "gamma"}
SWEEP_HEADER = ["n", "omega_n", "alpha_n", "logM_nats", "logK_nats", "p_err_hat", "p_err_se", "budget_nats", "ratio", "floor"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


@dataclass
class ExperimentConfig:
    """One experiment document.

    ``channel`` is either an inline channel document or a path (relative
    paths resolve against the config file's directory).
    """

    channel: Any
    scheme: str = "resolvability"
    schedule: str = "inv_log"
    overrides: dict = field(default_factory=dict)
    n: list = field(default_factory=lambda: [10_000])
    trials: int = 200
    detection_trials: int = 10_000
    master_seed: Optional[int] = None
    output: Optional[str] = None
    analytic_only: bool = False
    workers: int = 1
    codebook_seed: Optional[int] = None
    schema_version: int = SCHEMA_VERSION
    base_dir: str = field(default=".", repr=False)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        parse_schedule(self.schedule)
        unknown = set(self.overrides) - OVERRIDE_KEYS
        if unknown:
            raise ConfigError(f"unknown parameter overrides: {sorted(unknown)}")
        if isinstance(self.n, int):
            self.n = [self.n]
        if not self.n or any(not isinstance(v, int) or v < 3 for v in self.n):
            raise ConfigError(f"n must be a list of integers >= 3, got {self.n}")
        if any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise ConfigError(f"n list must be strictly increasing, got {self.n}")
        if self.trials < 1 or self.detection_trials < 1:
            raise ConfigError("trial counts must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if isinstance(self.channel, str):
            path = Path(self.channel)
            if not path.is_absolute():
                path = Path(self.base_dir) / path
            if not path.exists():
                raise ConfigError(f"channel file {path} does not exist")
            self.channel = str(path)

    @property
    def seed(self) -> int:
        return resolve_seed(self.master_seed)

    def pair(self) -> ChannelPair | GaussianPair:
        return load_channel_pair(self.channel)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "base_dir"}
        return d


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}


def load_config(path: str | os.PathLike, seed: int | str | None = None) -> ExperimentConfig:
    """Read an experiment document; a bare channel document is also accepted."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if "input_alphabet" in doc or "gaussian" in doc:
        doc = {"channel": doc}
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "channel" not in doc:
        raise ConfigError("config lacks 'channel'")
    cfg = ExperimentConfig(**doc, base_dir=str(path.parent))
    if seed is not None:
        cfg.master_seed = resolve_seed(seed)
    return cfg


def _design_kwargs(cfg: ExperimentConfig) -> dict:
    o = cfg.overrides
    return {k: o[k] for k in ("xi", "mu", "nu", "delta", "epsilon") if k in o}


def _codebook_seed(cfg: ExperimentConfig, n: int) -> int:
    base = cfg.seed if cfg.codebook_seed is None else cfg.codebook_seed
    return int(stream(base, "codebook_seed", n).integers(2**63))


class _SecrecyCodec(ResolvabilityCodec):
    """Wiretap code: all M*M' words are decoded; the message is the row index mod M."""

    def run_trial(self, t_true: int, rng) -> TrialOutcome:
        out = super().run_trial(t_true, rng)
        M = self.params.extra["messages"]
        w_true = None if out.w_true is None else out.w_true % M
        w_hat = None if out.w_hat is None else out.w_hat % M
        status = out.status
        if status == "wrong_message" and w_hat == w_true:
            status = "ok"
        return replace(out, w_true=w_true, w_hat=w_hat, status=status)


def build_codec(cfg: ExperimentConfig, pair, n: int):
    """Codec for one blocklength; sizes follow the configured scheme."""
    seed = _codebook_seed(cfg, n)
    o = cfg.overrides
    if cfg.scheme == "resolvability":
        p = design(pair, n, cfg.schedule, **_design_kwargs(cfg))
        codec = ResolvabilityCodec.build(pair, p, seed)
    elif cfg.scheme == "secrecy":
        sd = secrecy_design(pair, design(pair, n, cfg.schedule, **_design_kwargs(cfg)))
        if sd.mode == "wiretap":
            p = replace(sd.params, M=sd.M * sd.M_prime, K=1, extra={"messages": sd.M})
            codec = _SecrecyCodec.build(pair, p, seed)
        else:
            codec = ResolvabilityCodec.build(pair, sd.params, seed)
    elif cfg.scheme == "support_revealing":
        kw = {k: o[k] for k in ("mu", "delta") if k in o}
        codec = support_revealing_codec(pair, n, cfg.schedule, seed=seed, **kw)
    else:
        kw = {k: o[k] for k in ("xi", "mu", "delta", "epsilon") if k in o}
        codec = SpreadSpectrumCodec.build(pair, n, cfg.schedule, seed=seed, **kw)
    if "gamma" in o and hasattr(codec, "gamma"):
        codec.gamma = float(o["gamma"])
    return codec


# --- reliability --------------------------------------------------------------


@dataclass(frozen=True)
class ReliabilityResult:
    n: int
    params: CovertParameters
    trials: int
    message_error_rate: float
    false_alarm_rate: float
    p_err_hat: float
    p_err_se: float
    outcomes: tuple = field(repr=False)

    def transcript_csv(self) -> str:
        header = ["trial_id", "t_true", "t_hat", "w_true", "w_hat", "status", "score_margin"]
        extra = any(o.support_size is not None for o in self.outcomes)
        if extra:
            header += ["support_size", "n_prime"]
        n_prime = self.params.extra.get("n_prime")
        rows = []
        for k, o in enumerate(self.outcomes):
            r = [k, o.t_true, o.t_hat, o.w_true, o.w_hat, o.status, o.score_margin]
            if extra:
                r += [o.support_size, n_prime]
            rows.append(r)
        return _csv(header, rows)


def _run_trials(codec, seed: int, n: int, trials: int, workers: int) -> list[TrialOutcome]:
    jobs = [(t_true, k) for k in range(trials) for t_true in (1, 0)]

    def one(job):
        t_true, k = job
        return codec.run_trial(t_true, stream(seed, "trial", n, t_true, k))

    if workers == 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))


def run_reliability(cfg: ExperimentConfig, n: int | None = None, codec=None) -> ReliabilityResult:
    """Estimate P_err = P[error | T=1] + P[false alarm | T=0] with equal trial counts."""
    n = cfg.n[0] if n is None else n
    pair = cfg.pair()
    codec = build_codec(cfg, pair, n) if codec is None else codec
    outs = _run_trials(codec, cfg.seed, n, cfg.trials, cfg.workers)
    t1 = [o for o in outs if o.t_true == 1]
    t0 = [o for o in outs if o.t_true == 0]
    p1 = sum(o.is_error for o in t1) / len(t1)
    p0 = sum(o.is_error for o in t0) / len(t0)
    se = math.sqrt(p1 * (1 - p1) / len(t1) + p0 * (1 - p0) / len(t0))
    return ReliabilityResult(n, codec.params, cfg.trials, p1, p0, p1 + p0, se, tuple(outs))


# --- covertness ---------------------------------------------------------------


@dataclass(frozen=True)
class CovertnessReport:
    """Divergence budget, bound values and (at tiny n) exact induced-law terms."""

    n: int
    alpha: float
    budget: float
    floor: float
    kl_bound: Optional[float] = None
    tv_bound: Optional[float] = None
    exact_d_target: Optional[float] = None
    exact_d_innocent: Optional[float] = None
    exact_tv: Optional[float] = None
    triangle_gap: Optional[float] = None
    triangle_bound: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def audit_codebook(pair: ChannelPair, codebook: Codebook, alpha: float) -> dict:
    """Exact terms of the triangle decomposition for an enumerable codebook."""
    n = codebook.n
    q_hat = exact_induced_distribution(codebook, pair.Q0, pair.Q1)
    target = product_distribution(mixture(alpha, pair.Q1, pair.Q0), n)
    innocent = product_distribution(pair.Q0, n)
    d_target, d_innocent, v = kl(q_hat, target), kl(q_hat, innocent), tv(q_hat, target)
    budget = n * single_letter_budget(alpha, pair)
    return {
        "exact_d_target": d_target,
        "exact_d_innocent": d_innocent,
        "exact_tv": v,
        "triangle_gap": abs(d_innocent - budget),
        "triangle_bound": d_target + 2 * n * v * math.log(1 / pair.mu0),
    }


def run_covertness_audit(cfg: ExperimentConfig, n: int | None = None) -> CovertnessReport:
    n = cfg.n[0] if n is None else n
    pair = cfg.pair()
    gaussian = isinstance(pair, GaussianPair)
    if cfg.scheme == "spread_spectrum":
        p = CovertParameters.from_schedule(n, cfg.schedule)
        alpha = p.beta_n
    elif cfg.scheme == "support_revealing":
        p = support_revealing_sizes(pair, n, cfg.schedule, **{k: cfg.overrides[k] for k in ("mu", "delta") if k in cfg.overrides})
        alpha = p.alpha_n
    else:
        p = design(pair, n, cfg.schedule, max_positions=None, **_design_kwargs(cfg))
        alpha = p.alpha_n
    budget = n * single_letter_budget(alpha, pair)
    extra: dict = {}
    if cfg.scheme in ("resolvability", "secrecy") and not math.isnan(p.tau):
        extra["tv_bound"] = resolvability_tv_bound(p, pair)
        if not gaussian:
            extra["kl_bound"] = resolvability_kl_bound(p, pair)
    if gaussian:
        floor = detection_floor(min(1.0, math.sqrt(budget / 2)), "tv")
    else:
        floor = detection_floor(budget)
        if len(pair.Q0) ** n <= ENUMERATION_CEILING and p.M * p.K <= 4096 and cfg.scheme != "spread_spectrum":
            cb = generate_codebook(p, _codebook_seed(cfg, n))
            extra.update(audit_codebook(pair, cb, alpha))
    return CovertnessReport(n=n, alpha=alpha, budget=budget, floor=floor, **extra)


# --- Chernoff -----------------------------------------------------------------


@dataclass(frozen=True)
class ChernoffRow:
    mu: float
    trials: int
    empirical: float
    se: float
    bound: float
    exact: float


def run_chernoff_check(n: int, alpha_n: float, mus, trials: int, seed: int) -> list[ChernoffRow]:
    """Weight deviations P[|L - n alpha| > mu n alpha] against 2 exp(-mu^2 n alpha / 3).

    L is a sum of n Bernoulli(alpha) indicators, drawn as one binomial per
    trial. The exact binomial tail is reported as the sharp reference.
    """
    mean = n * alpha_n
    rng = stream(seed, "chernoff", n)
    L = rng.binomial(n, alpha_n, size=trials)
    rows = []
    for mu in mus:
        dev = np.abs(L - mean) > mu * mean
        p = float(dev.mean())
        lo = math.ceil((1 - mu) * mean) - 1  # largest L strictly below the band
        hi = math.floor((1 + mu) * mean)  # largest L not above it
        exact = (float(stats.binom.cdf(lo, n, alpha_n)) if lo >= 0 else 0.0) + float(stats.binom.sf(hi, n, alpha_n))
        rows.append(ChernoffRow(mu, trials, p, math.sqrt(max(p * (1 - p), 1e-300) / trials), 2 * math.exp(-mu * mu * mean / 3), exact))
    return rows


def chernoff_csv(rows: list[ChernoffRow]) -> str:
    return _csv(["mu", "trials", "empirical", "se", "bound", "exact"], [[r.mu, r.trials, r.empirical, r.se, r.bound, r.exact] for r in rows])


# --- scaling sweep -------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRecord:
    n: int
    omega_n: float
    alpha_n: float
    logM_nats: float
    logK_nats: float
    p_err_hat: Optional[float]
    p_err_se: Optional[float]
    budget_nats: float
    ratio: float
    floor: float

    def row(self) -> list:
        return [getattr(self, k) for k in SWEEP_HEADER]


def _sizes(cfg: ExperimentConfig, pair, n: int) -> tuple[CovertParameters, float, float]:
    """(parameter pack, logK, input weight seen by the warden)."""
    o = cfg.overrides
    if cfg.scheme == "spread_spectrum":
        xi = o.get("xi", 0.5)
        t1 = spreading_scheme_sizes(pair, n, cfg.schedule, xi)
        ks = key_sizes(n, cfg.schedule, o.get("mu", 0.1), o.get("delta", 0.1), o.get("epsilon", 0.1))
        p = replace(CovertParameters.from_schedule(n, cfg.schedule), xi=xi, logM=t1.logM, logK=ks.log_K_total)
        return p, ks.log_K_total, p.beta_n
    if cfg.scheme == "support_revealing":
        p = support_revealing_sizes(pair, n, cfg.schedule, **{k: o[k] for k in ("mu", "delta") if k in o})
        return p, 0.0, p.alpha_n
    p = design(pair, n, cfg.schedule, max_positions=None, **_design_kwargs(cfg))
    if cfg.scheme == "secrecy":
        sd = secrecy_design(pair, p)
        return sd.params, sd.logK_total, p.alpha_n
    return p, p.logK, p.alpha_n


def run_scaling_sweep(cfg: ExperimentConfig) -> tuple[list[ScalingRecord], list[dict]]:
    """One record per blocklength plus the parameter pack that produced it."""
    pair = cfg.pair()
    records, packs = [], []
    for n in cfg.n:
        p, logK, weight = _sizes(cfg, pair, n)
        budget = n * single_letter_budget(weight, pair)
        if isinstance(pair, GaussianPair):
            floor = detection_floor(min(1.0, math.sqrt(budget / 2)), "tv")
        else:
            floor = detection_floor(budget)
        p_hat = se = None
        if not cfg.analytic_only:
            r = run_reliability(cfg, n)
            p_hat, se, p = r.p_err_hat, r.p_err_se, r.params
        ratio = p.logM / math.sqrt(n * budget) if budget > 0 else math.inf
        records.append(ScalingRecord(n, p.omega_n, p.alpha_n, p.logM, logK, p_hat, se, budget, ratio, floor))
        packs.append({"n": n, "scheme": cfg.scheme, "master_seed": cfg.seed, "params": p.to_dict()})
    return records, packs


def sweep_csv(records: list[ScalingRecord]) -> str:
    return _csv(SWEEP_HEADER, [r.row() for r in records])


# --- detection ----------------------------------------------------------------


def run_detection(cfg: ExperimentConfig, n: int | None = None, codec=None):
    """Empirical ROC of the product-model test against the configured codec."""
    n = cfg.n[0] if n is None else n
    pair = cfg.pair()
    codec = build_codec(cfg, pair, n) if codec is None else codec
    alpha = codec.params.beta_n if cfg.scheme == "spread_spectrum" else codec.params.alpha_n
    roc = empirical_roc(pair, codec, alpha, trials=cfg.detection_trials, seed=int(stream(cfg.seed, "detect", n).integers(2**63)))
    budget = n * single_letter_budget(alpha, pair)
    if isinstance(pair, GaussianPair):
        floor = detection_floor(min(1.0, math.sqrt(budget / 2)), "tv")
    else:
        floor = detection_floor(budget)
    return roc, budget, floor
