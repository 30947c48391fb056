"""``mtdlab`` command line.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .env import BASELINE_LIM, McConfig, PolicyConfig, run_rl_mtd
from .ga import GaConfig, run_ga
from .harness import (
    MODELS,
    ExperimentPlan,
    RunResult,
    count_wins,
    emit_csv,
    emit_plot_data,
    optimize_lim,
    optimizer_rng,
    parse_sweep,
    resolve_sut,
    run_experiment,
    sweep_rng,
    write_results_csv,
)
from .pso import PROFILES, PsoConfig, run_pso
from .sut import generate_synthetic_sut, normalize_fitness, save_sut_spec

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None


def _ga_config(args) -> GaConfig:
    overrides = {}
    if args.generations is not None:
        overrides["generations"] = args.generations
    if args.agents is not None:
        overrides["num_agents"] = args.agents
    if args.top_k is not None:
        overrides["top_k"] = args.top_k
    return GaConfig(**overrides)


def _pso_config(args, sut_source: str) -> PsoConfig:
    profile = args.profile or (sut_source if sut_source in PROFILES else "mcafee")
    overrides = {}
    if args.generations is not None:
        overrides["generations"] = args.generations
    if args.swarm is not None:
        overrides["swarm_size"] = args.swarm
    return PsoConfig.from_profile(profile, **overrides)


def _add_optimizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=sorted(PROFILES), help="PSO (optimal difference, velocity) preset")
    p.add_argument("--generations", type=int, help="GA/PSO generations (default 100)")
    p.add_argument("--agents", type=int, help="GA population size (default 25)")
    p.add_argument("--top-k", type=int, help="GA parents kept per generation (default 5)")
    p.add_argument("--swarm", type=int, help="PSO swarm size (default 30)")


def cmd_gen_sut(args) -> int:
    sut = generate_synthetic_sut(args.params, args.seed, name=args.name)
    path = save_sut_spec(sut, args.out)
    print(f"wrote {sut.n}-parameter SUT {sut.name!r} to {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    sut = resolve_sut(args.sut)
    plan = ExperimentPlan(sut=args.sut, models=(args.model,), sweep=(args.episodes, args.episodes, 1),
                          seeds=(args.seed,), ga=_ga_config(args), pso=_pso_config(args, args.sut))
    plan.validate()
    policy = PolicyConfig.for_sut(sut)
    if args.lim is not None:
        lim = args.lim
    else:
        lim = optimize_lim(args.model, sut, args.seed, plan, policy)
    rng = sweep_rng(args.seed, args.episodes)
    result = run_rl_mtd(sut, lim, McConfig(args.episodes), rng, policy=policy)
    run = RunResult(args.model, args.episodes, args.seed, result.best_fitness,
                    normalize_fitness(result.best_fitness, sut), lim)
    path = write_results_csv([run], args.out)
    print(f"{args.model} lim={lim:.4f} best_fitness={run.raw_fitness} normalized={run.normalized:.6f} -> {path}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    sut = resolve_sut(args.sut)
    rng = optimizer_rng(args.seed, "ga-rl" if args.algo == "ga" else "pso-rl")
    rows = []
    if args.algo == "ga":
        result = run_ga(_ga_config(args), sut, rng)
        header = ["generation", "best_reward", "mean_reward", "best_lim"]
        for g in result.history:
            rows.append([g.generation, f"{g.best_reward:.6f}", f"{g.mean_reward:.6f}", f"{g.best_lim:.6f}"])
        best, score = result.best_lim, result.best_reward
    else:
        result = run_pso(_pso_config(args, args.sut), sut, rng)
        header = ["generation", "global_best", "best_lim", "min_velocity"]
        for g in result.history:
            rows.append([g.generation, f"{g.global_best:.6f}", f"{g.best_lim:.6f}", f"{g.min_velocity:.6f}"])
        best, score = result.best_lim, result.global_best
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / f"history_{args.algo}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    print(f"{args.algo} best_lim={best:.6f} score={score:.6f} normalized={normalize_fitness(score, sut):.6f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    plan = ExperimentPlan(sut=args.sut, models=MODELS, sweep=parse_sweep(args.sweep), seeds=args.seeds,
                          ga=_ga_config(args), pso=_pso_config(args, args.sut), baseline_lim=args.lim,
                          output_dir=args.out)
    results = run_experiment(plan)
    report = count_wins(results)
    emit_csv(results, report, args.out, timing=args.timing)
    emit_plot_data(results, args.out)
    print(f"{args.sut} {report.render()} best={report.best_label} ties={report.ties}/{len(report.points)}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtdlab", description="Moving target defense configuration game")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sut", help="write a synthetic SUT spec file")
    p.add_argument("--params", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name")
    p.set_defaults(func=cmd_gen_sut)

    p = sub.add_parser("run", help="play the game once with a fixed or optimized lim")
    p.add_argument("--sut", required=True, help="preset name or SUT spec file")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lim", type=float, help="skip optimization and use this lim")
    p.add_argument("--out", required=True)
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("optimize", help="search for the best lim with GA or PSO")
    p.add_argument("--sut", required=True)
    p.add_argument("--algo", choices=("ga", "pso"), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="directory for the per-generation history CSV")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="sweep episode counts for all three models")
    p.add_argument("--sut", required=True)
    p.add_argument("--sweep", default="20:500:20", help="start:stop:step (inclusive)")
    p.add_argument("--seeds", type=_seeds, default=(0,))
    p.add_argument("--lim", type=float, default=BASELINE_LIM, help="lim for the base RL model")
    p.add_argument("--out", required=True)
    p.add_argument("--timing", action="store_true", help="record wall-clock ms (breaks byte-identical output)")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"mtdlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"mtdlab: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
