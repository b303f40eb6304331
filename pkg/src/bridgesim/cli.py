"""Command-line entry point: ``bridgesim analyze|simulate|evaluate|sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .chaudhuri import LossyChannelError
from .artifacts import MissingArtifactError, header_line, read_run, write_csv, write_run
from .config import ConfigError, ScenarioConfig, rule_name
from .evaluator import SCORE_COLUMNS, SUMMARY_COLUMNS, score_row_values, score_rows
from .graph import GraphFormatError, connected_components, etx_cut, parse_graph_text, tarjan_report
from .scenarios import run_schedule
from .voting import Rule, RuleConfig

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _edges_text(edges) -> str:
    return " ".join(f"{u}-{v}" for u, v in sorted(edges))


def cmd_analyze(args) -> int:
    try:
        g, etx = parse_graph_text(Path(args.graph).read_text(encoding="utf-8"))
    except GraphFormatError as exc:
        print(f"{args.graph}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.etx_threshold is not None:
        g = etx_cut(g, etx, args.etx_threshold)
    r = tarjan_report(g)
    print(f"bridges: {_edges_text(r.bridges)}".rstrip())
    print(f"articulation: {' '.join(map(str, sorted(r.articulation_points)))}".rstrip())
    print(f"components: {len(connected_components(g))}")
    for comp in connected_components(g):
        print("  " + " ".join(map(str, sorted(comp))))
    return EXIT_OK


def _load_config(path) -> ScenarioConfig:
    return ScenarioConfig.from_file(path) if path else ScenarioConfig()


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if args.protocol:
        cfg = cfg.with_value("run.algorithm", args.protocol)
        cfg.validate()
    seed = args.seed if args.seed is not None else cfg.seed(0)
    art = run_schedule(cfg.topology(seed), cfg.schedule(), cfg.protocol(), seed, cfg.channel(),
                       algorithm=cfg.algorithm(), log_events=args.events)
    out = write_run(args.out, art, seed, cfg.digest(), extra={"config": cfg.to_text(), "seed": seed})
    s = art.stats
    print(f"wrote {out} ({len(art.snapshots)} snapshot rows, "
          f"{s.get('searches_started', 0)} searches started)")
    return EXIT_OK


def _rules(names) -> list:
    out = []
    for n in names or ["none"]:
        out.append(None if n.lower() == "none" else RuleConfig(Rule.parse(n)))
    return out


def cmd_evaluate(args) -> int:
    try:
        art = read_run(args.run_dir)
    except MissingArtifactError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAILED
    import json

    meta = json.loads((Path(args.run_dir) / "stats.json").read_text(encoding="utf-8"))
    seed = int(meta.get("seed", 0))
    digest = meta.get("header", "").rsplit("config=", 1)[-1] or "unknown"
    if not art.snapshots:
        print("warning: empty snapshot log; all counts are zero", file=sys.stderr)
    rows = []
    for rule in _rules(args.rule):
        for r in score_rows(Path(args.run_dir).name, seed, art, args.etx, rule=rule,
                            detected_twice=not args.single_claim):
            vals = score_row_values(r)
            vals[2] = f"{vals[2]}:{rule_name(rule)}"
            rows.append(vals)
    out = Path(args.out) if args.out else Path(args.run_dir) / "scores.csv"
    write_csv(out, header_line(seed, digest), SCORE_COLUMNS, rows)
    for v in rows:
        print(f"{v[2]:<40} P={float(v[8]):.3f} R={float(v[9]):.3f} F1={float(v[10]):.3f} excluded={v[7]}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import SweepSpec, plot_data, run_sweep, summarize

    cfg = _load_config(args.config)
    plan = SweepSpec.from_config(cfg)
    if args.repetitions is not None:
        plan = SweepSpec(plan.base, plan.parameter, plan.values, args.repetitions, plan.base_seed, plan.name)
    if plan.repetitions < 30:
        logging.warning("%d repetitions per value; confidence intervals need at least 30", plan.repetitions)
    metrics, failures = run_sweep(plan, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    head = header_line(plan.base_seed, cfg.digest())
    runs = [[m.value, m.seed, m.metric, repr(m.x)] for m in metrics]
    write_csv(out / f"{plan.name}_runs.csv", head, ["param_value", "seed", "metric", "value"], runs)
    summary = summarize(metrics, plan.values)
    write_csv(out / f"{plan.name}_summary.csv", head, SUMMARY_COLUMNS, summary)
    (out / f"{plan.name}.dat").write_text(plot_data(summary, head) + "\n", encoding="utf-8")
    for f in failures:
        print(f"failed: {f}", file=sys.stderr)
    print(f"wrote {out / (plan.name + '_summary.csv')} ({len(failures)} failed runs)")
    return EXIT_FAILED if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bridgesim", description=__doc__)
    p.add_argument("--version", action="version", version=f"bridgesim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="bridges and articulation points of a graph file")
    a.add_argument("graph")
    a.add_argument("--etx-threshold", type=float, default=None,
                   help="drop annotated edges whose ETX exceeds this value first")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run one scheduled simulation")
    s.add_argument("--config", help="scenario config file (INI)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True, help="output run directory")
    s.add_argument("--protocol", choices=("dibadawn", "chaudhuri"), default=None)
    s.add_argument("--events", action="store_true", help="also write the event log")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="score a run directory against ETX reference graphs")
    e.add_argument("run_dir")
    e.add_argument("--etx", type=float, nargs="+", default=[10.0, 100.0])
    e.add_argument("--rule", action="append", help="voting rule to replay (repeatable; 'none' = raw)")
    e.add_argument("--single-claim", action="store_true", help="count one-sided bridge claims")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("sweep", help="repeat simulations over a parameter's values")
    w.add_argument("--config", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--repetitions", type=int, default=None)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, LossyChannelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
