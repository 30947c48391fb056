"""Experiment orchestration for comparing RL-MTD, GA-RL and PSO-RL.

For each seed the optimizers run once to pick a ``lim``; the base game is
then replayed with that ``lim`` at every point of an episode sweep. All
three models share the same random stream at a given (seed, episodes) point,
so differences come from the ``lim`` alone.
"""

from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .env import BASELINE_LIM, McConfig, PolicyConfig, run_rl_mtd
from .errors import IncomparableResultsError, InvalidPlanError
from .ga import GaConfig, run_ga
from .pso import PROFILES, PsoConfig, run_pso
from .sut import DEFAULT_SCORING, ScoringConfig, SutSpec, generate_synthetic_sut, load_sut_spec, normalize_fitness

log = logging.getLogger(__name__)

MODELS = ("rl", "ga-rl", "pso-rl")
MODEL_LABELS = {"rl": "RL", "ga-rl": "GA-RL", "pso-rl": "PSO-RL"}

# name -> (parameter count, generator seed)
PRESETS = {
    "windows10": (59, 59),
    "mcafee": (14, 14),
    "excel2016": (20, 20),
    "office2007": (21, 21),
}

_SWEEP_STREAM = 1
_OPTIMIZER_STREAM = 2
_MODEL_TAG = {"rl": 0, "ga-rl": 1, "pso-rl": 2}


def load_preset(name: str) -> SutSpec:
    n, seed = PRESETS[name]
    return generate_synthetic_sut(n, seed, name=name)


def resolve_sut(source: str) -> SutSpec:
    """A preset name or a path to a SUT spec file."""
    if source in PRESETS:
        return load_preset(source)
    return load_sut_spec(source)


def parse_sweep(text: str) -> tuple[int, int, int]:
    try:
        start, stop, step = (int(x) for x in text.split(":"))
    except ValueError:
        raise InvalidPlanError(f"sweep must look like start:stop:step, got {text!r}") from None
    return start, stop, step


def sweep_points(sweep: tuple[int, int, int]) -> list[int]:
    start, stop, step = sweep
    if step <= 0:
        return []
    return [e for e in range(start, stop + 1, step) if e >= 1]


@dataclass(frozen=True)
class ExperimentPlan:
    sut: str
    models: tuple[str, ...] = MODELS
    sweep: tuple[int, int, int] = (20, 500, 20)
    seeds: tuple[int, ...] = (0,)
    ga: GaConfig = GaConfig()
    pso: Optional[PsoConfig] = None
    baseline_lim: float = BASELINE_LIM
    scoring: ScoringConfig = DEFAULT_SCORING
    p_high: float = 0.8
    output_dir: Optional[str] = None

    def validate(self) -> None:
        if not self.models:
            raise InvalidPlanError("at least one model is required")
        unknown = set(self.models) - set(MODELS)
        if unknown:
            raise InvalidPlanError(f"unknown model(s) {sorted(unknown)}")
        if not sweep_points(self.sweep):
            raise InvalidPlanError(f"episode sweep {self.sweep} is empty")
        if not self.seeds:
            raise InvalidPlanError("at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise InvalidPlanError("seeds must be non-negative")
        if not self.baseline_lim > 0:
            raise InvalidPlanError("baseline lim must be positive")

    def pso_config(self) -> PsoConfig:
        if self.pso is not None:
            return self.pso
        return PsoConfig.from_profile(self.sut if self.sut in PROFILES else "mcafee")


@dataclass(frozen=True)
class RunResult:
    model: str
    episodes: int
    seed: int
    raw_fitness: int
    normalized: float
    lim: float
    ms: float = 0.0


def sweep_rng(seed: int, episodes: int) -> np.random.Generator:
    """Stream for one sweep point; shared by every model at that point."""
    return np.random.default_rng([_SWEEP_STREAM, seed, episodes])


def optimizer_rng(seed: int, model: str) -> np.random.Generator:
    return np.random.default_rng([_OPTIMIZER_STREAM, seed, _MODEL_TAG[model]])


def optimize_lim(model: str, sut: SutSpec, seed: int, plan: ExperimentPlan, policy: PolicyConfig) -> float:
    if model == "rl":
        return float(plan.baseline_lim)
    rng = optimizer_rng(seed, model)
    if model == "ga-rl":
        return run_ga(plan.ga, sut, rng, plan.scoring, policy).best_lim
    return run_pso(plan.pso_config(), sut, rng, plan.scoring, policy).best_lim


def _run_model_seed(sut: SutSpec, model: str, seed: int, plan: ExperimentPlan) -> list[RunResult]:
    policy = PolicyConfig.for_sut(sut, plan.scoring, plan.p_high)
    lim = optimize_lim(model, sut, seed, plan, policy)
    log.info("%s seed=%d lim=%.4f", model, seed, lim)
    out = []
    for episodes in sweep_points(plan.sweep):
        rng = sweep_rng(seed, episodes)
        t0 = time.perf_counter()
        result = run_rl_mtd(sut, lim, McConfig(episodes), rng, plan.scoring, policy)
        ms = (time.perf_counter() - t0) * 1000
        raw = result.best_fitness
        out.append(RunResult(model, episodes, seed, raw, normalize_fitness(raw, sut, plan.scoring), lim, ms))
    return out


def max_workers() -> int:
    cap = os.environ.get("MTDLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_experiment(plan: ExperimentPlan, sut: Optional[SutSpec] = None, workers: Optional[int] = None) -> list[RunResult]:
    plan.validate()
    if sut is None:
        sut = resolve_sut(plan.sut)
    tasks = [(m, s) for m in MODELS if m in plan.models for s in plan.seeds]
    workers = max_workers() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            futures = [pool.submit(_run_model_seed, sut, m, s, plan) for m, s in tasks]
            chunks = [f.result() for f in futures]
    else:
        chunks = [_run_model_seed(sut, m, s, plan) for m, s in tasks]
    results = [r for chunk in chunks for r in chunk]
    return sorted(results, key=_result_order)


def _result_order(r: RunResult):
    return (MODELS.index(r.model), r.episodes, r.seed)


# --- comparison ------------------------------------------------------------

@dataclass
class PointOutcome:
    episodes: int
    means: dict[str, float]
    winners: tuple[str, ...]

    @property
    def is_tie(self) -> bool:
        return len(self.winners) > 1

    @property
    def winner_label(self) -> str:
        if self.is_tie:
            return "tie:" + "+".join(self.winners)
        return self.winners[0]


@dataclass
class ComparisonReport:
    points: list[PointOutcome]
    wins: dict[str, int]
    tie_credits: dict[str, int]
    ties: int
    models: tuple[str, ...] = field(default=MODELS)

    @property
    def win_tuple(self) -> tuple[int, int, int]:
        return tuple(self.wins.get(m, 0) for m in MODELS)

    def render(self) -> str:
        return "(" + ", ".join(str(w) for w in self.win_tuple) + ")"

    @property
    def best_label(self) -> str:
        top = max(self.win_tuple)
        if top == 0:
            return "tie"
        return ", ".join(MODEL_LABELS[m] for m, w in zip(MODELS, self.win_tuple) if w == top)

    def reconciles(self) -> bool:
        return sum(self.win_tuple) + self.ties == len(self.points)


def count_wins(results: Sequence[RunResult]) -> ComparisonReport:
    """Per sweep point, the model with the strictly greatest seed-mean
    normalized fitness takes an exclusive win; exact ties credit every tied
    model but count towards no one's exclusive wins."""
    by_model: dict[str, dict[int, dict[int, float]]] = {}
    for r in results:
        by_model.setdefault(r.model, {}).setdefault(r.episodes, {})[r.seed] = r.normalized
    models = tuple(m for m in MODELS if m in by_model)
    if len(models) < 2:
        raise IncomparableResultsError(f"need at least two models to compare, got {list(models)}")
    grids = {m: {e: tuple(sorted(seeds)) for e, seeds in by_model[m].items()} for m in models}
    reference = grids[models[0]]
    for m in models[1:]:
        if grids[m] != reference:
            raise IncomparableResultsError(f"{m} was run on a different sweep or seed set than {models[0]}")

    points, ties = [], 0
    wins = {m: 0 for m in models}
    tie_credits = {m: 0 for m in models}
    for episodes in sorted(reference):
        means = {m: float(np.mean([by_model[m][episodes][s] for s in reference[episodes]])) for m in models}
        top = max(means.values())
        winners = tuple(m for m in models if means[m] == top)
        points.append(PointOutcome(episodes, means, winners))
        if len(winners) == 1:
            wins[winners[0]] += 1
        else:
            ties += 1
            for m in winners:
                tie_credits[m] += 1
    return ComparisonReport(points, wins, tie_credits, ties, models)


# --- output ------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _check_normalized(results: Sequence[RunResult]) -> None:
    for r in results:
        if not 0.0 <= r.normalized <= 1.0:
            raise ValueError(f"normalized fitness {r.normalized} outside [0, 1] for {r}")


def write_results_csv(results: Sequence[RunResult], directory, timing: bool = False) -> Path:
    """``timing=False`` writes ms as zero so repeated runs stay byte-identical."""
    _check_normalized(results)
    path = Path(directory) / "results.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "episodes", "seed", "raw_fitness", "normalized", "lim", "ms"])
        for r in sorted(results, key=_result_order):
            w.writerow([r.model, r.episodes, r.seed, r.raw_fitness, _fmt(r.normalized), _fmt(r.lim),
                        _fmt(r.ms if timing else 0.0)])
    return path


def write_report_csv(report: ComparisonReport, directory) -> Path:
    path = Path(directory) / "report.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {"rl": "rl", "ga-rl": "ga_rl", "pso-rl": "pso_rl"}
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episodes", "winner", *columns.values()])
        for p in report.points:
            w.writerow([p.episodes, p.winner_label, *(_fmt(p.means[m]) if m in p.means else "" for m in columns)])
    return path


def emit_csv(results: Sequence[RunResult], report: ComparisonReport, directory, timing: bool = False) -> tuple[Path, Path]:
    return write_results_csv(results, directory, timing), write_report_csv(report, directory)


def emit_plot_data(results: Sequence[RunResult], directory) -> list[Path]:
    """One ``plot_<model>.csv`` per model: episodes vs seed-mean normalized fitness."""
    if not results:
        raise ValueError("no results to plot")
    _check_normalized(results)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    series: dict[str, dict[int, list[float]]] = {}
    for r in sorted(results, key=_result_order):
        series.setdefault(r.model, {}).setdefault(r.episodes, []).append(r.normalized)
    paths = []
    for model in (m for m in MODELS if m in series):
        path = directory / f"plot_{model.replace('-', '_')}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episodes", "normalized"])
            for episodes, values in sorted(series[model].items()):
                w.writerow([episodes, _fmt(float(np.mean(values)))])
        paths.append(path)
    return paths

