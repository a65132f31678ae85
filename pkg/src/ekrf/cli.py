"""Command-line surface: simulate / count / functional / stats.

Configuration precedence is flags > environment > config file; every flag is
mirrored by an EKRF_-prefixed environment variable and a key=value line in
the optional config file.  Trial records are written as JSON lines with a
fixed field order so identical runs produce byte-identical output; exact
counts are serialized as decimal strings because they exceed 64-bit JSON
number safety.  Human-readable summaries go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import PhaseRecord, TrialRecord, Verdict
from .counting import (
    DEFAULT_IE_CAP,
    CapError,
    ConstraintInstance,
    final_family_size,
    nu_all,
    nu_split,
)
from .functionals import (
    GRAPH_CLASSES,
    FunctionalParams,
    graph_sum_class,
    graph_sum_f1,
    grid_leading,
    grid_sum,
)
from .process import (
    EXACT_COMPLETION,
    STRUCTURAL,
    StoppingPolicy,
    TrialConfig,
    TrialError,
    config_from_dict,
    run_trial,
)
from .sampler import DEFAULT_POOL_CAP, DEFAULT_REJECTION_CAP, DEFAULT_REJECTION_FLOOR, SamplerStrategy, trial_seed
from .stats import LawSpec, Summary, empirical_tail, exp1_cdf, ks_distance, law_value, summarize

ENV_PREFIX = "EKRF_"

EXIT_OK = 0
EXIT_TRIAL_FAILURE = 1
EXIT_BAD_CONFIG = 2


@dataclass
class RunConfig:
    """Validated configuration of a simulate run (echoed into every record)."""

    n: int
    r: int
    trials: int
    seed_base: int
    strategy: str = "auto"
    mode: str = STRUCTURAL
    t_max: Optional[int] = None
    delta_stop: Optional[int] = None
    eps_fix: float = 1e-6
    continue_after_verdict: bool = False
    workers: int = 1
    out: Optional[str] = None
    ie_cap: int = DEFAULT_IE_CAP
    pool_cap: int = DEFAULT_POOL_CAP
    rejection_cap: int = DEFAULT_REJECTION_CAP
    rejection_floor: float = DEFAULT_REJECTION_FLOOR

    def validate(self) -> None:
        if not (1 <= self.r < self.n):
            raise ValueError(f"need 1 <= r < n, got r={self.r}, n={self.n}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.mode not in (EXACT_COMPLETION, STRUCTURAL, "exact"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.strategy not in SamplerStrategy.KINDS:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not (0 <= self.eps_fix < 1):
            raise ValueError("eps_fix must be in [0, 1)")

    def trial_config(self) -> TrialConfig:
        mode = EXACT_COMPLETION if self.mode == "exact" else self.mode
        return TrialConfig(
            n=self.n,
            r=self.r,
            strategy=SamplerStrategy(
                kind=self.strategy,
                attempt_cap=self.rejection_cap,
                ie_cap=self.ie_cap,
                pool_cap=self.pool_cap,
                rejection_floor=self.rejection_floor,
            ),
            stopping=StoppingPolicy(
                mode=mode,
                t_max=self.t_max,
                delta_stop=self.delta_stop,
                eps_fix=self.eps_fix,
                continue_after_verdict=self.continue_after_verdict,
            ),
        )


# ---------------------------------------------------------------------------
# Record serialization (fixed field order; BigCounts as decimal strings)

_RECORD_FIELDS = (
    "trial",
    "n",
    "r",
    "seed",
    "t3",
    "t4",
    "t_k",
    "t_nonsimple",
    "t_delta0",
    "simple_at_t4",
    "unique_v",
    "t3_multiplicity",
    "verdict",
    "fixed_vertex",
    "final_size_exact",
    "final_size_predicted",
    "residual_ratio",
    "stop_reason",
    "steps",
    "strategy_log",
    "config",
)


def record_to_dict(rec: TrialRecord) -> dict:
    return {
        "trial": rec.trial_index,
        "n": rec.n,
        "r": rec.r,
        "seed": rec.seed,
        "t3": rec.phases.t3,
        "t4": rec.phases.t4,
        "t_k": {str(k): v for k, v in sorted(rec.phases.t_k.items())},
        "t_nonsimple": rec.phases.t_nonsimple,
        "t_delta0": rec.phases.t_delta0,
        "simple_at_t4": rec.simple_at_t4,
        "unique_v": rec.unique_v_at_t4,
        "t3_multiplicity": rec.t3_multiplicity,
        "verdict": rec.verdict.kind,
        "fixed_vertex": rec.verdict.vertex,
        "final_size_exact": (
            str(rec.final_size_exact) if rec.final_size_exact is not None else None
        ),
        "final_size_predicted": (
            str(rec.final_size_predicted)
            if rec.final_size_predicted is not None
            else None
        ),
        "residual_ratio": rec.verdict.residual_ratio,
        "stop_reason": rec.stop_reason,
        "steps": rec.steps_executed,
        "strategy_log": [[k, c] for k, c in rec.strategy_log],
        "config": rec.config,
    }


def record_to_json(rec: TrialRecord) -> str:
    d = record_to_dict(rec)
    return json.dumps({k: d[k] for k in _RECORD_FIELDS}, separators=(",", ":"))


def record_from_dict(d: dict) -> TrialRecord:
    phases = PhaseRecord(
        t_k={int(k): v for k, v in d.get("t_k", {}).items()},
        t_nonsimple=d["t_nonsimple"],
        t_delta0=d["t_delta0"],
    )
    size_exact = d["final_size_exact"]
    size_pred = d["final_size_predicted"]
    verdict = Verdict(
        kind=d["verdict"],
        vertex=d["fixed_vertex"],
        size=(
            int(size_exact)
            if size_exact is not None
            else (int(size_pred) if size_pred is not None else None)
        ),
        residual_ratio=d["residual_ratio"],
    )
    return TrialRecord(
        n=d["n"],
        r=d["r"],
        seed=d["seed"],
        trial_index=d["trial"],
        config=d["config"],
        phases=phases,
        simple_at_t4=d["simple_at_t4"],
        unique_v_at_t4=d["unique_v"],
        t3_multiplicity=d["t3_multiplicity"],
        verdict=verdict,
        final_size_exact=int(size_exact) if size_exact is not None else None,
        final_size_predicted=int(size_pred) if size_pred is not None else None,
        stop_reason=d["stop_reason"],
        steps_executed=d["steps"],
        strategy_log=[(k, c) for k, c in d["strategy_log"]],
    )


def load_records(path: str) -> list[TrialRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records


# ---------------------------------------------------------------------------
# Edge files: one edge per line, space-separated ascending 1-based vertices.


def read_edge_file(path: str) -> list[tuple[int, ...]]:
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals = tuple(int(tok) for tok in line.split())
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed edge line") from exc
            if list(vals) != sorted(set(vals)):
                raise ValueError(
                    f"{path}:{lineno}: vertices must be distinct and ascending"
                )
            edges.append(vals)
    return edges


def write_edge_file(path: str, edges) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in edges:
            fh.write(" ".join(str(v) for v in e) + "\n")


# ---------------------------------------------------------------------------
# Config sources: flags > environment > file.

_FLAG_TYPES = {
    "n": int,
    "r": int,
    "trials": int,
    "seed": int,
    "strategy": str,
    "mode": str,
    "t_max": int,
    "delta_stop": int,
    "eps_fix": float,
    "continue_after_verdict": bool,
    "workers": int,
    "out": str,
    "ie_cap": int,
    "pool_cap": int,
    "rejection_cap": int,
    "rejection_floor": float,
}


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _read_config_file(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def _coerce(key: str, raw: str):
    typ = _FLAG_TYPES[key]
    if typ is bool:
        return _parse_bool(raw)
    return typ(raw)


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge file, environment, and flag values into a RunConfig."""
    merged: dict = {}
    config_path = args.config or os.environ.get(ENV_PREFIX + "CONFIG")
    if config_path:
        for key, raw in _read_config_file(config_path).items():
            if key not in _FLAG_TYPES:
                raise ValueError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, raw)
    for key in _FLAG_TYPES:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            merged[key] = _coerce(key, env)
    for key in _FLAG_TYPES:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    for required in ("n", "r"):
        if required not in merged:
            raise ValueError(f"missing required option --{required}")
    cfg = RunConfig(
        n=merged["n"],
        r=merged["r"],
        trials=merged.get("trials", 1),
        seed_base=merged.get("seed", 0),
        strategy=merged.get("strategy", "auto"),
        mode=merged.get("mode", STRUCTURAL),
        t_max=merged.get("t_max"),
        delta_stop=merged.get("delta_stop"),
        eps_fix=merged.get("eps_fix", 1e-6),
        continue_after_verdict=merged.get("continue_after_verdict", False),
        workers=merged.get("workers", 1),
        out=merged.get("out"),
        ie_cap=merged.get("ie_cap", DEFAULT_IE_CAP),
        pool_cap=merged.get("pool_cap", DEFAULT_POOL_CAP),
        rejection_cap=merged.get("rejection_cap", DEFAULT_REJECTION_CAP),
        rejection_floor=merged.get("rejection_floor", DEFAULT_REJECTION_FLOOR),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# simulate


def _worker(job: tuple[dict, int, int]) -> dict:
    cfg_dict, seed, index = job
    config = config_from_dict(cfg_dict)
    rec = run_trial(config, seed, index)
    return record_to_dict(rec)


def run_simulation(cfg: RunConfig) -> list[dict]:
    """Run all trials (possibly in parallel); results in trial-index order."""
    tc = cfg.trial_config()
    from .process import config_as_dict

    tc_dict = config_as_dict(tc)
    jobs = [
        (tc_dict, trial_seed(cfg.seed_base, i), i) for i in range(cfg.trials)
    ]
    if cfg.workers == 1:
        return [_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_worker, jobs, chunksize=max(1, cfg.trials // (8 * cfg.workers))))


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_run_config(args)
    except (ValueError, OSError) as exc:
        print(f"ekrf: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        dicts = run_simulation(cfg)
    except TrialError as exc:
        print(f"ekrf: trial failed: {exc}", file=sys.stderr)
        print(f"ekrf: replay seed {exc.seed}", file=sys.stderr)
        return EXIT_TRIAL_FAILURE
    lines = [
        json.dumps({k: d[k] for k in _RECORD_FIELDS}, separators=(",", ":"))
        for d in dicts
    ]
    payload = "\n".join(lines) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    records = [record_from_dict(d) for d in dicts]
    summ = summarize(records)
    print(_summary_line(summ), file=sys.stderr)
    return EXIT_OK


def _summary_line(s: Summary) -> str:
    parts = [
        f"n={s.n} r={s.r} trials={s.n_records}",
        f"fixed={s.fixation_freq:.3f}",
        f"predicted={s.predicted_fix_freq:.3f}",
        f"not_fixed={s.not_fixed_freq:.3f}",
        f"mean_steps={s.mean_steps:.1f}",
    ]
    if s.simple_at_t4_freq is not None:
        parts.append(f"simple_at_t4={s.simple_at_t4_freq:.3f}")
    if s.gap_is_one_freq is not None:
        parts.append(f"gap1={s.gap_is_one_freq:.3f}")
    return "summary: " + " ".join(parts)


# ---------------------------------------------------------------------------
# count


def cmd_count(args: argparse.Namespace) -> int:
    try:
        if args.final_size:
            if args.tbar is None:
                raise ValueError("--final-size requires --tbar")
            val = final_family_size(args.n, args.r, args.tbar)
            print(f"final_family_size {val}")
            return EXIT_OK
        edges = read_edge_file(args.edges) if args.edges else []
        inst = ConstraintInstance.of(
            args.n,
            args.r,
            edges,
            required_vertex=args.required_vertex,
            excluded_vertex=args.excluded_vertex,
        )
        if args.split is not None:
            a, b = nu_split(inst, args.split, args.ie_cap)
            print(f"nu_A {a}")
            print(f"nu_B {b}")
        else:
            print(f"nu_all {nu_all(inst, args.ie_cap)}")
        return EXIT_OK
    except (ValueError, OSError, CapError) as exc:
        print(f"ekrf: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


# ---------------------------------------------------------------------------
# functional


def cmd_functional(args: argparse.Namespace) -> int:
    try:
        if args.kind == "graph":
            params = FunctionalParams(x=args.x, y=args.y, t=args.t)
            if args.cls in ("f1", "all"):
                print(f"graph_f1 {graph_sum_f1(params)!r}")
            if args.cls in ("matching2", "all"):
                print(
                    f"graph_matching_f2plus "
                    f"{graph_sum_class(params, 'matching_f2plus')!r}"
                )
            if args.cls in ("nonmatching", "all"):
                print(
                    f"graph_nonmatching_nonempty "
                    f"{graph_sum_class(params, 'nonmatching_nonempty')!r}"
                )
            return EXIT_OK
        params = FunctionalParams(x=args.x, y=args.y, tbar=args.tbar, delta=args.delta)
        print(f"grid_sum {grid_sum(params)!r}")
        print(f"grid_leading {grid_leading(params)!r}")
        return EXIT_OK
    except (ValueError, CapError) as exc:
        print(f"ekrf: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


# ---------------------------------------------------------------------------
# stats


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        records = load_records(args.infile)
        if not records:
            raise ValueError(f"no records in {args.infile}")
        n, r = records[0].n, records[0].r
        if any(rec.n != n or rec.r != r for rec in records):
            raise ValueError("mixed configurations in input")
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"ekrf: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    scale = r / n ** (1.0 / 3.0)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["law", "parameter", "empirical", "se", "theory", "N"])
    law = args.law
    if law == "t3":
        t3s = [rec.phases.t3 for rec in records if rec.phases.t3 is not None]
        emp, se = empirical_tail(t3s, args.alpha * scale)
        theory = law_value(LawSpec("t3_tail", args.alpha))
        writer.writerow(["t3_tail", args.alpha, f"{emp:.6f}", f"{se:.6f}", f"{theory:.6f}", len(t3s)])
    elif law == "t4":
        t4s = [rec.phases.t4 for rec in records if rec.phases.t4 is not None]
        emp, se = empirical_tail(t4s, args.c * scale)
        theory = law_value(LawSpec("t4_tail", args.c))
        writer.writerow(["t4_tail", args.c, f"{emp:.6f}", f"{se:.6f}", f"{theory:.6f}", len(t4s)])
    elif law == "t4exp":
        t4s = [rec.phases.t4 for rec in records if rec.phases.t4 is not None]
        scaled = [n * t**3 / (6.0 * r**3) for t in t4s]
        d = ks_distance(scaled, exp1_cdf)
        writer.writerow(["t4_scaled_exponential", "", f"{d:.6f}", "", "0.000000", len(t4s)])
    elif law == "fix":
        fixed = [1 if rec.verdict.kind == Verdict.FIXED else 0 for rec in records]
        emp = sum(fixed) / len(fixed)
        se = (emp * (1 - emp) / len(fixed)) ** 0.5
        theory = law_value(LawSpec("fix_probability", args.c))
        writer.writerow(["fix_probability", args.c, f"{emp:.6f}", f"{se:.6f}", f"{theory:.6f}", len(fixed)])
    elif law == "gap":
        gaps = [
            rec.phases.t4 - rec.phases.t3
            for rec in records
            if rec.phases.t3 is not None and rec.phases.t4 is not None
        ]
        if not gaps:
            print("ekrf: no trials with both t3 and t4 recorded", file=sys.stderr)
            return EXIT_BAD_CONFIG
        emp = sum(1 for g in gaps if g > args.xi) / len(gaps)
        se = (emp * (1 - emp) / len(gaps)) ** 0.5
        theory = law_value(LawSpec("t4_gap_geometric", args.xi, n=n, r=r))
        writer.writerow(["t4_gap_geometric", args.xi, f"{emp:.6f}", f"{se:.6f}", f"{theory:.6f}", len(gaps)])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ekrf",
        description="random greedy intersecting-hypergraph process laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded trials, write JSONL records")
    sim.add_argument("--n", type=int)
    sim.add_argument("--r", type=int)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--strategy", choices=SamplerStrategy.KINDS)
    sim.add_argument("--mode", choices=(EXACT_COMPLETION, "exact", STRUCTURAL))
    sim.add_argument("--t-max", dest="t_max", type=int)
    sim.add_argument("--delta-stop", dest="delta_stop", type=int)
    sim.add_argument("--eps-fix", dest="eps_fix", type=float)
    sim.add_argument(
        "--continue-after-verdict",
        dest="continue_after_verdict",
        action="store_const",
        const=True,
        default=None,
    )
    sim.add_argument("--workers", type=int)
    sim.add_argument("--out", type=str)
    sim.add_argument("--ie-cap", dest="ie_cap", type=int)
    sim.add_argument("--pool-cap", dest="pool_cap", type=int)
    sim.add_argument("--rejection-cap", dest="rejection_cap", type=int)
    sim.add_argument("--rejection-floor", dest="rejection_floor", type=float)
    sim.add_argument("--config", type=str, help="key=value config file")
    sim.set_defaults(func=cmd_simulate)

    cnt = sub.add_parser("count", help="exact counts for an edge set")
    cnt.add_argument("--n", type=int, required=True)
    cnt.add_argument("--r", type=int, required=True)
    cnt.add_argument("--edges", type=str, help="edge file (one edge per line)")
    cnt.add_argument("--required-vertex", dest="required_vertex", type=int)
    cnt.add_argument("--excluded-vertex", dest="excluded_vertex", type=int)
    cnt.add_argument("--split", type=int, metavar="V", help="report contain/avoid split at V")
    cnt.add_argument("--final-size", dest="final_size", action="store_true")
    cnt.add_argument("--tbar", type=int)
    cnt.add_argument("--ie-cap", dest="ie_cap", type=int, default=DEFAULT_IE_CAP)
    cnt.set_defaults(func=cmd_count)

    fun = sub.add_parser("functional", help="appendix functional evaluators")
    fsub = fun.add_subparsers(dest="kind", required=True)
    fg = fsub.add_parser("graph")
    fg.add_argument("--t", type=int, required=True)
    fg.add_argument("--x", type=float, required=True)
    fg.add_argument("--y", type=float, required=True)
    fg.add_argument("--class", dest="cls", choices=("f1", "matching2", "nonmatching", "all"), default="all")
    fg.set_defaults(func=cmd_functional, kind="graph")
    fr = fsub.add_parser("grid")
    fr.add_argument("--tbar", type=int, required=True)
    fr.add_argument("--delta", type=int, required=True)
    fr.add_argument("--x", type=float, required=True)
    fr.add_argument("--y", type=float, required=True)
    fr.set_defaults(func=cmd_functional, kind="grid")

    st = sub.add_parser("stats", help="law comparisons over JSONL records (CSV out)")
    st.add_argument("--in", dest="infile", type=str, required=True)
    st.add_argument("--law", choices=("t3", "t4", "t4exp", "fix", "gap"), required=True)
    st.add_argument("--alpha", type=float, default=1.0)
    st.add_argument("--c", type=float, default=1.0)
    st.add_argument("--xi", type=int, default=1)
    st.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
