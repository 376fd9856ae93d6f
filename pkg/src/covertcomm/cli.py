"""Command-line entry point.

Exit codes: 0 on success, 2 on a configuration error, 3 when the requested
parameters are infeasible (memory or enumeration ceilings).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import harness
from .channels import GaussianPair, capacity_binary_input, gaussian_closed_forms
from .errors import ConfigError, InfeasibleError
from .process import CovertParameters, asymptotic_constants, parse_schedule, scaling_class, summarize_channel
from .streams import resolve_seed

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class _Sink:
    """Writes named artifacts under --out (if given) and reports them on stdout."""

    def __init__(self, out: str | None):
        self.dir = Path(out) if out else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        if self.dir is None:
            return
        (self.dir / name).write_text(text, newline="")
        print(f"wrote {self.dir / name}", file=sys.stderr)


def _config(args) -> harness.ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = harness.load_config(args.config, args.seed)
    if cfg.master_seed is None:
        cfg.master_seed = resolve_seed(None)
    print(f"master_seed={cfg.seed}", file=sys.stderr)
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "n", None):
        cfg.n = sorted(set(args.n))
    return cfg


def _out_dir(args, cfg=None):
    return args.out or (cfg.output if cfg is not None else None)


def cmd_divergence(args) -> int:
    cfg = _config(args)
    pair = cfg.pair()
    doc = {"summary": asdict(summarize_channel(pair))}
    if isinstance(pair, GaussianPair):
        doc["closed_forms"] = {k: asdict(v) for k, v in gaussian_closed_forms(pair).items()}
    else:
        c, a = capacity_binary_input(pair)
        doc["capacity_nats"], doc["capacity_alpha"] = c, a
        doc["kappa"] = pair.kappa
        doc["scaling_class"] = asdict(scaling_class(pair))
        if pair.p1_ac_p0 and pair.q1_ac_q0 and not pair.q1_eq_q0:
            xi = cfg.overrides.get("xi", 0.5)
            doc["asymptotic_constants"] = asdict(asymptotic_constants(pair, xi))
    text = _dump(doc)
    sys.stdout.write(text)
    _Sink(_out_dir(args, cfg)).write("divergence.json", text)
    return EXIT_OK


def cmd_design(args) -> int:
    cfg = _config(args)
    pair = cfg.pair()
    packs = []
    for n in cfg.n:
        p, logK, weight = harness._sizes(cfg, pair, n)
        packs.append({"n": n, "scheme": cfg.scheme, "logK_total": logK, "input_weight": weight, "params": p.to_dict()})
    text = _dump({"master_seed": cfg.seed, "config": cfg.to_dict(), "designs": packs})
    sys.stdout.write(text)
    _Sink(_out_dir(args, cfg)).write("params.json", text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    sink = _Sink(_out_dir(args, cfg))
    rows, packs = [], []
    for n in cfg.n:
        r = harness.run_reliability(cfg, n)
        rows.append([n, r.trials, r.message_error_rate, r.false_alarm_rate, r.p_err_hat, r.p_err_se])
        packs.append({"n": n, "params": r.params.to_dict()})
        sink.write(f"transcript_n{n}.csv", r.transcript_csv())
    text = harness._csv(["n", "trials", "message_error_rate", "false_alarm_rate", "p_err_hat", "p_err_se"], rows)
    sys.stdout.write(text)
    sink.write("reliability.csv", text)
    sink.write("params.json", _dump({"master_seed": cfg.seed, "config": cfg.to_dict(), "runs": packs}))
    return EXIT_OK


def cmd_covertness(args) -> int:
    cfg = _config(args)
    reports = [harness.run_covertness_audit(cfg, n).to_dict() for n in cfg.n]
    header = list(reports[0])
    text = harness._csv(header, [[r[k] for k in header] for r in reports])
    sys.stdout.write(text)
    sink = _Sink(_out_dir(args, cfg))
    sink.write("covertness.csv", text)
    sink.write("params.json", _dump({"master_seed": cfg.seed, "config": cfg.to_dict()}))
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _config(args)
    if args.detection_trials is not None:
        cfg.detection_trials = args.detection_trials
    sink = _Sink(_out_dir(args, cfg))
    rows = []
    for n in cfg.n:
        roc, budget, floor = harness.run_detection(cfg, n)
        s, se, t = roc.min_error_sum()
        rows.append([n, cfg.detection_trials, budget, floor, s, se, t])
        sink.write(f"roc_n{n}.csv", roc.to_csv())
    text = harness._csv(["n", "trials", "budget_nats", "floor", "min_error_sum", "min_error_se", "threshold"], rows)
    sys.stdout.write(text)
    sink.write("detection.csv", text)
    sink.write("params.json", _dump({"master_seed": cfg.seed, "config": cfg.to_dict()}))
    return EXIT_OK


def cmd_chernoff(args) -> int:
    seed = resolve_seed(args.seed)
    if args.config:
        cfg = _config(args)
        schedule, seed = cfg.schedule, cfg.seed
    else:
        schedule = args.schedule
        print(f"master_seed={seed}", file=sys.stderr)
    n = args.n[0] if args.n else 10_000
    alpha = CovertParameters.from_schedule(n, schedule).alpha_n
    rows = harness.run_chernoff_check(n, alpha, args.mu, args.chernoff_trials, seed)
    text = harness.chernoff_csv(rows)
    sys.stdout.write(text)
    sink = _Sink(args.out)
    sink.write("chernoff.csv", text)
    sink.write("params.json", _dump({"master_seed": seed, "n": n, "alpha_n": alpha, "schedule": str(parse_schedule(schedule))}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.analytic_only:
        cfg.analytic_only = True
    records, packs = harness.run_scaling_sweep(cfg)
    text = harness.sweep_csv(records)
    sys.stdout.write(text)
    sink = _Sink(_out_dir(args, cfg))
    sink.write("sweep.csv", text)
    sink.write("params.json", _dump({"master_seed": cfg.seed, "config": cfg.to_dict(), "records": packs}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment or channel JSON document")
    common.add_argument("--seed", help="master seed (default: $COVERT_SEED, then 0x5EEDC0DE)")
    common.add_argument("--out", help="directory for CSV and params.json outputs")
    common.add_argument("--n", type=int, action="append", help="blocklength; repeat to override the config list")

    p = argparse.ArgumentParser(prog="covertcomm", description="Covert communication simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("divergence", parents=[common], help="channel divergences and constants")
    sub.add_parser("design", parents=[common], help="print and save the parameter pack")
    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo reliability")
    s.add_argument("--trials", type=int)
    s.add_argument("--workers", type=int)
    sub.add_parser("covertness", parents=[common], help="divergence budget and bound audit")
    d = sub.add_parser("detect", parents=[common], help="empirical warden ROC")
    d.add_argument("--detection-trials", type=int)
    c = sub.add_parser("chernoff", parents=[common], help="weight concentration check")
    c.add_argument("--schedule", default="inv_log")
    c.add_argument("--mu", type=float, nargs="+", default=[0.3, 0.5, 1.0])
    c.add_argument("--chernoff-trials", type=int, default=100_000)
    w = sub.add_parser("sweep", parents=[common], help="scaling sweep over the n list")
    w.add_argument("--trials", type=int)
    w.add_argument("--workers", type=int)
    w.add_argument("--analytic-only", action="store_true")
    return p


COMMANDS = {
    "divergence": cmd_divergence,
    "design": cmd_design,
    "simulate": cmd_simulate,
    "covertness": cmd_covertness,
    "detect": cmd_detect,
    "chernoff": cmd_chernoff,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
