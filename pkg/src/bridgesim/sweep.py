"""Parameter sweeps: repeated runs per value, aggregated into mean and CI."""

from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .config import ScenarioConfig, rule_name
from .evaluator import mean_ci, score_rows
from .scenarios import run_schedule

log = logging.getLogger(__name__)

MIN_REPETITIONS = 30


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    parameter: str
    values: tuple[str, ...]
    repetitions: int = MIN_REPETITIONS
    base_seed: int = 0
    name: str = "sweep"

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "SweepSpec":
        param = cfg.get_str("sweep", "parameter")
        values = tuple(cfg.get_list("sweep", "values"))
        if not param or not values:
            raise ValueError("sweep.parameter and sweep.values are required")
        return cls(cfg, param, values, cfg.get_int("sweep", "repetitions", MIN_REPETITIONS),
                   cfg.get_int("sweep", "base_seed", cfg.seed(0)), cfg.get_str("sweep", "name", "sweep"))

    def seeds(self) -> list[int]:
        # the same seeds for every value, so values are compared on the same topologies
        return [self.base_seed + r for r in range(self.repetitions)]


@dataclass(frozen=True)
class RunMetric:
    value: str
    seed: int
    metric: str
    x: float


def _evaluate(cfg: ScenarioConfig, seed: int, art) -> dict[str, float]:
    out = {}
    for rule in cfg.rules():
        for row in score_rows(f"s{seed}", seed, art, cfg.thresholds(), rule=rule,
                              detected_twice=cfg.detected_twice()):
            m = row.sample
            key = f"{row.scope}:{rule_name(rule)}"
            out[f"{key}:f1"] = m.f1
            out[f"{key}:precision"] = m.precision
            out[f"{key}:recall"] = m.recall
    return out


def run_one(cfg: ScenarioConfig, seed: int, eval_variants: Optional[list[tuple[str, ScenarioConfig]]] = None):
    """Simulate once; evaluate under ``cfg`` or under each ``(value, variant)`` config."""
    art = run_schedule(cfg.topology(seed), cfg.schedule(), cfg.protocol(), seed, cfg.channel(),
                       algorithm=cfg.algorithm())
    if eval_variants is None:
        return {None: _evaluate(cfg, seed, art)}
    return {value: _evaluate(variant, seed, art) for value, variant in eval_variants}


def _job(args):
    cfg_text, seed, variants = args
    cfg = ScenarioConfig.from_text(cfg_text)
    vs = None if variants is None else [(v, ScenarioConfig.from_text(t)) for v, t in variants]
    try:
        return seed, run_one(cfg, seed, vs), None
    except Exception as exc:  # noqa: BLE001 - reported per seed, sweep continues
        return seed, None, f"{type(exc).__name__}: {exc}"


def run_sweep(plan: SweepSpec, jobs: int = 1) -> tuple[list[RunMetric], list[str]]:
    """Run every (value, seed) pair.  Returns metrics and failure messages."""
    evaluation_only = plan.parameter.startswith("evaluation.")
    tasks = []
    if evaluation_only:
        variants = [(v, plan.base.with_value(plan.parameter, v).to_text()) for v in plan.values]
        tasks = [(None, (plan.base.to_text(), s, variants)) for s in plan.seeds()]
    else:
        for v in plan.values:
            text = plan.base.with_value(plan.parameter, v).to_text()
            tasks.extend((v, (text, s, None)) for s in plan.seeds())
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_job, [t for _, t in tasks]))
    else:
        results = [_job(t) for _, t in tasks]
    metrics: list[RunMetric] = []
    failures: list[str] = []
    for (value, _), (seed, res, err) in zip(tasks, results):
        if err is not None:
            msg = f"value={value if value is not None else '*'} seed={seed}: {err}"
            log.warning("run failed: %s", msg)
            failures.append(msg)
            continue
        for v, ms in res.items():
            label = value if v is None else v
            metrics.extend(RunMetric(label, seed, k, x) for k, x in sorted(ms.items()))
    return metrics, failures


def summarize(metrics: list[RunMetric], values: tuple[str, ...], level: float = 0.95) -> list[list]:
    grouped: dict[tuple[str, str], list[float]] = defaultdict(list)
    for m in metrics:
        grouped[(m.value, m.metric)].append(m.x)
    rows = []
    for v in values:
        for metric in sorted(k[1] for k in grouped if k[0] == v):
            xs = grouped[(v, metric)]
            if len(xs) >= 2:
                mean, half = mean_ci(xs, level)
            else:
                mean, half = (xs[0], float("nan"))
            rows.append([v, metric, repr(mean), repr(half), len(xs)])
    return rows


def plot_data(summary: list[list], header: str) -> str:
    """Whitespace blocks, one per metric, each ``value mean halfwidth``."""
    series: dict[str, list[list]] = defaultdict(list)
    for v, metric, mean, half, n in summary:
        series[metric].append([v, mean, half])
    out = [header.rstrip("\n")]
    for metric in sorted(series):
        out.append(f"# {metric}")
        out.extend(" ".join(map(str, r)) for r in series[metric])
        out.append("")
        out.append("")
    return "\n".join(out)
