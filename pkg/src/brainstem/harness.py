"""Benchmark harness: seeded trial batches, aggregation, table emission.

A batch runs ``evals`` independent evaluation blocks of ``trials_per_eval``
seeded trials per task, mirroring the reference protocol of eight evaluation
columns per category. Aggregation is arithmetic mean plus sample standard
deviation (n-1); the shipped reference tables carry four printed averages
that disagree with their own raw arrays, and the raw arrays are treated as
ground truth.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Optional, Sequence

from .episode import EpisodeConfig, Outcome, TrialResult, run_trial
from .errors import ConfigError, EmptyInput, IoError
from .simenv import TASK_IDS

MODES = ("full", "reactive_only", "no_inspector")


def aggregate(values: Sequence[float],
              expected_n: Optional[int] = None) -> tuple:
    """(mean, sample std) of eval percentages; std uses the n-1 convention."""
    values = list(values)
    if not values:
        raise EmptyInput("no values to aggregate")
    if expected_n is not None and len(values) != expected_n:
        raise ConfigError(f"expected {expected_n} values, got {len(values)}")
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


@dataclass
class BenchConfig:
    tasks: tuple = TASK_IDS
    mode: str = "full"
    trials_per_eval: int = 25
    evals: int = 8
    base_seed: int = 0
    backend: str = "scripted"
    memory_period: int = 100
    deliberative_period: int = 1000
    seconds_per_tick: Optional[float] = None
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = [t for t in self.tasks if t not in TASK_IDS]
        if bad:
            raise ConfigError(f"unknown task ids {bad}")
        if self.trials_per_eval < 1 or self.evals < 1:
            raise ConfigError("trials_per_eval and evals must be >= 1")
        if self.backend not in ("scripted", "remote"):
            raise ConfigError(f"backend must be scripted or remote, "
                              f"got {self.backend!r}")

    def digest(self) -> str:
        doc = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(doc.encode()).hexdigest()[:12]

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(mode=self.mode,
                             memory_period=self.memory_period,
                             deliberative_period=self.deliberative_period,
                             seconds_per_tick=self.seconds_per_tick)


@dataclass
class TaskRow:
    task_id: int
    category: str
    eval_percentages: list
    avg: float
    std: float
    outcomes: dict


@dataclass
class EvalBatch:
    config_digest: str
    mode: str
    seeds: list
    rows: list = field(default_factory=list)   # TaskRow
    trials: list = field(default_factory=list)  # TrialResult

    def row_for(self, task_id: int) -> TaskRow:
        for row in self.rows:
            if row.task_id == task_id:
                return row
        raise KeyError(task_id)

    def to_doc(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "mode": self.mode,
            "seeds": self.seeds,
            "rows": [asdict(r) for r in self.rows],
            "trials": [{"task_id": t.task_id, "seed": t.seed,
                        "outcome": t.outcome.value,
                        "ticks_elapsed": t.ticks_elapsed,
                        "detail": t.detail} for t in self.trials],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "EvalBatch":
        batch = cls(doc["config_digest"], doc["mode"], doc["seeds"])
        batch.rows = [TaskRow(**r) for r in doc["rows"]]
        batch.trials = [TrialResult(t["task_id"], t["seed"],
                                    Outcome(t["outcome"]), t["ticks_elapsed"],
                                    None, t.get("detail", ""))
                        for t in doc["trials"]]
        return batch


def _make_backend(config: BenchConfig):
    if config.backend == "remote":
        import os

        from .backends import RemoteBackend
        return RemoteBackend.from_env(os.environ)
    from .backends import ScriptedBackend
    return ScriptedBackend()


def run_bench(config: BenchConfig) -> EvalBatch:
    """Execute the configured trial grid; deterministic given the seeds."""
    from .simenv import load_scenario

    backend = _make_backend(config)
    episode_config = config.episode_config()
    seeds = [config.base_seed + i
             for i in range(config.evals * config.trials_per_eval)]
    batch = EvalBatch(config.digest(), config.mode, seeds)
    for task_id in config.tasks:
        category = load_scenario(task_id, 0)[0].category
        percentages = []
        outcomes: dict = {}
        for block in range(config.evals):
            hits = 0
            for trial in range(config.trials_per_eval):
                seed = seeds[block * config.trials_per_eval + trial]
                result = run_trial(task_id, seed, episode_config, backend)
                batch.trials.append(result)
                outcomes[result.outcome.value] = \
                    outcomes.get(result.outcome.value, 0) + 1
                if result.outcome is Outcome.SUCCESS:
                    hits += 1
            percentages.append(100.0 * hits / config.trials_per_eval)
        avg, std = aggregate(percentages)
        batch.rows.append(TaskRow(task_id, category, percentages, avg, std,
                                  outcomes))
    if config.out_dir:
        import os
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, "batch.json")
        with open(path, "w", encoding="utf-8") as sink:
            json.dump(batch.to_doc(), sink, indent=2, sort_keys=True)
    return batch


# ---------------------------------------------------------------------------
# reference tables
# ---------------------------------------------------------------------------

def load_reference_tables() -> dict:
    """The shipped raw eval arrays with their printed averages."""
    with resources.files("brainstem.fixtures").joinpath(
            "eval_tables.json").open("r", encoding="utf-8") as handle:
        return json.load(handle)


def reference_aggregates() -> list:
    """One record per (model, category): computed vs printed average.

    ``consistent`` is False for the four cells whose printed average cannot
    be reproduced from the printed raw array; the recomputed mean is
    authoritative there.
    """
    doc = load_reference_tables()
    records = []
    for model, rows in doc["tables"].items():
        for category, cell in rows.items():
            avg, std = aggregate(cell["values"],
                                 expected_n=doc["evals_per_row"])
            records.append({
                "model": model,
                "category": category,
                "values": cell["values"],
                "computed_avg": avg,
                "computed_std": std,
                "printed_avg": cell["printed_avg"],
                "consistent": not cell.get("known_inconsistent", False),
            })
    return records


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def _fmt(avg: float, std: float) -> str:
    def short(x):
        return f"{x:.10g}" if x != int(x) else str(int(x))
    return f"{short(round(avg, 2))}±{short(round(std, 2))}"


def emit_report(batch: EvalBatch, fmt: str = "md",
                path: Optional[str] = None) -> str:
    """Render (Category, Task, mean±std) rows as markdown, CSV, or JSON."""
    if fmt == "md":
        lines = ["| Category | Task | Success (mean±std) |",
                 "| --- | --- | --- |"]
        for row in batch.rows:
            lines.append(f"| {row.category} | task {row.task_id} | "
                         f"{_fmt(row.avg, row.std)} |")
        lines.append("")
        lines.append(f"mode: {batch.mode}; config: {batch.config_digest}; "
                     f"seeds: {batch.seeds[0]}..{batch.seeds[-1]} "
                     f"({len(batch.seeds)} per task)")
        lines.append("std convention: sample standard deviation (n-1) over "
                     "the evaluation columns")
        text = "\n".join(lines) + "\n"
    elif fmt == "csv":
        lines = ["category,task,avg,std,evals"]
        for row in batch.rows:
            evals = ";".join(f"{p:g}" for p in row.eval_percentages)
            lines.append(f"{row.category},{row.task_id},{row.avg:g},"
                         f"{row.std:.6g},{evals}")
        lines.append(f"# mode={batch.mode} config={batch.config_digest} "
                     f"n_seeds={len(batch.seeds)}")
        text = "\n".join(lines) + "\n"
    elif fmt in ("json", "json-doc"):
        text = json.dumps(batch.to_doc(), indent=2, sort_keys=True) + "\n"
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as sink:
                sink.write(text)
        except OSError as exc:
            raise IoError(f"cannot write report to {path}: {exc}") from None
    return text
