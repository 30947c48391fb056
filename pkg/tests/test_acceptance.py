"""Exit-criteria checks. Run alone with ``pytest -m acceptance -s``.

Each test prints one ``PASS``/``FAIL`` line; the terminal summary repeats
them under "acceptance criteria".
"""

import itertools
import re
import time

import numpy as np
import pytest

from mtdlab.cli import main
from mtdlab.env import (
    Action,
    EpisodeStep,
    McConfig,
    PolicyConfig,
    ValueFunction,
    accumulate_first_visit,
    choose_action,
    generate_episode,
    initial_state,
    mc_prediction,
    run_rl_mtd,
    step,
)
from mtdlab.ga import LIM_FLOOR, GaConfig, run_ga, select_top_k
from mtdlab.harness import ExperimentPlan, count_wins, load_preset, run_experiment, sweep_points
from mtdlab.pso import PsoConfig, run_pso
from mtdlab.sut import (
    Configuration,
    build_search_space,
    fitness,
    generate_synthetic_sut,
    max_fitness,
    min_fitness,
    normalize_fitness,
)

pytestmark = pytest.mark.acceptance


def report(criterion, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}: {criterion} {detail}".rstrip())
    assert ok, f"{criterion}: {detail}"


# --- invariant suite ---------------------------------------------------------

def _game_invariants(seed):
    rng = np.random.default_rng(seed)
    sut = generate_synthetic_sut(int(rng.integers(1, 30)), seed)
    lim = float(rng.uniform(0.05, 30))
    space = build_search_space(sut, lim)
    top, bottom = max_fitness(sut), min_fitness(sut)

    assert normalize_fitness(top, sut) == 1.0
    assert normalize_fitness(bottom, sut) == 0.0
    goal = Configuration.from_values(sut, sut.secure_values)
    assert fitness(sut, goal) == top

    state = initial_state(sut, space, rng)
    for _ in range(10):
        action = Action(int(rng.integers(2)))
        nxt, reward = step(sut, space, state, action, rng)
        assert reward in (-1, 0, 1)
        assert bottom <= fitness(sut, nxt) <= top
        for p, a, b in zip(sut.parameters, state.values, nxt.values):
            if a == p.secure:
                assert b == a
        state = nxt

    policy = PolicyConfig.for_sut(sut)
    ep = generate_episode(sut, space, policy, rng)
    assert 1 <= len(ep) <= 100
    assert all(bottom <= s.fitness <= top and s.reward in (-1, 0, 1) for s in ep)

    vf = mc_prediction(sut, space, policy, McConfig(5), rng)
    for k, v in vf.values.items():
        assert abs(v * vf.returns_count[k] - vf.returns_sum[k]) <= 1e-9 * max(1.0, abs(vf.returns_sum[k]))


def _ga_invariants(seed):
    sut = generate_synthetic_sut(6, seed)
    cfg = GaConfig(num_agents=4, top_k=2, generations=3, genome_range=15, episode_counts=(1, 2))
    hist = run_ga(cfg, sut, np.random.default_rng(seed)).history
    for g, nxt in zip(hist, hist[1:]):
        assert len(g.population) == len(nxt.population) == cfg.num_agents
        assert nxt.population[0] == g.population[int(np.argmax(g.rewards))]
        parents = select_top_k(g.rewards, g.population, cfg.top_k)
        for child in nxt.population[1:]:
            assert child == LIM_FLOOR or any(abs(abs(child - p) - cfg.noise) < 1e-9 for p in parents)


def _pso_invariants(seed):
    sut = generate_synthetic_sut(6, seed)
    cfg = PsoConfig(20, 5000, swarm_size=3, generations=3, num_episodes=2)
    hist = run_pso(cfg, sut, np.random.default_rng(seed)).history
    for a, b in zip(hist, hist[1:]):
        assert a.global_best <= b.global_best
        assert all(y <= x for x, y in zip(a.velocities, b.velocities))


@pytest.mark.acceptance(criterion="invariant suite over >=100 seeds in < 2 min")
def test_invariant_suite():
    t0 = time.perf_counter()
    seeds = range(100)
    for seed in seeds:
        _game_invariants(seed)
        _ga_invariants(seed)
        _pso_invariants(seed)
    elapsed = time.perf_counter() - t0
    report("invariant suite", elapsed < 120, f"({len(seeds)} seeds, {elapsed:.1f}s)")


# --- MC oracle -----------------------------------------------------------------

def _oracle(episodes, df):
    """Brute-force first-visit accumulation: scan for each state's first index."""
    sums, counts = {}, {}
    for ep in episodes:
        states = [s for s, _ in ep]
        for state in dict.fromkeys(states):
            i = states.index(state)
            g = 0
            for _, r in ep[i:]:
                g += r
            sums[state] = sums.get(state, 0.0) + g
            counts[state] = counts.get(state, 0.0) + df
    return {s: sums[s] / counts[s] for s in sums}


def _as_steps(ep):
    return [EpisodeStep(s, Action.CHANGE, r) for s, r in ep]


@pytest.mark.acceptance(criterion="MC oracle equivalence (df=1 and df=0.5, exact)")
def test_mc_oracle_equivalence():
    checked = 0
    for df in (1.0, 0.5):
        for length in range(1, 6):
            for states in itertools.product("ABC", repeat=length):
                for rewards in itertools.product((-1, 0, 1), repeat=length):
                    ep = list(zip(states, rewards))
                    vf = accumulate_first_visit(ValueFunction(), _as_steps(ep), df)
                    assert vf.values == _oracle([ep], df), ep
                    checked += 1
        # multi-episode accumulation through mc_prediction itself, replayed
        sut = generate_synthetic_sut(3, 1)
        space = build_search_space(sut, 1)
        policy = PolicyConfig.for_sut(sut)
        vf = mc_prediction(sut, space, policy, McConfig(40, df), np.random.default_rng(3))
        replay = np.random.default_rng(3)
        eps = [[(s.state, s.reward) for s in generate_episode(sut, space, policy, replay)] for _ in range(40)]
        assert vf.values == _oracle(eps, df)
    report("MC oracle equivalence", True, f"({checked} hand-built episodes)")


# --- action policy -------------------------------------------------------------

@pytest.mark.acceptance(criterion="action frequency 0.8 +/- 0.02 over 1e4 draws")
def test_action_frequency():
    sut = load_preset("mcafee")
    policy = PolicyConfig.for_sut(sut)
    rng = np.random.default_rng(2024)
    below = policy.threshold_lo - 792
    above = max_fitness(sut)
    change = np.mean([choose_action(below, policy, rng) == Action.CHANGE for _ in range(10_000)])
    hold = np.mean([choose_action(above, policy, rng) == Action.HOLD for _ in range(10_000)])
    ok = abs(change - 0.8) <= 0.02 and abs(hold - 0.8) <= 0.02
    report("action frequency", ok, f"(change below={change:.4f}, hold above={hold:.4f})")


# --- trend reproduction --------------------------------------------------------

TREND_PLAN = ExperimentPlan(
    sut="mcafee",
    sweep=(20, 100, 20),
    seeds=(0, 1, 2, 3, 4),
    ga=GaConfig(num_agents=8, generations=10),
    pso=PsoConfig.from_profile("mcafee", swarm_size=8, generations=10),
)


@pytest.fixture(scope="module")
def trend_results():
    t0 = time.perf_counter()
    results = run_experiment(TREND_PLAN)
    print(f"trend experiment took {time.perf_counter() - t0:.1f}s")
    return results


@pytest.mark.acceptance(criterion="trend: GA-RL and PSO-RL >= RL at >= 70% of sweep points")
def test_trend(trend_results):
    rep = count_wins(trend_results)
    n = len(rep.points)
    ga_ok = sum(p.means["ga-rl"] >= p.means["rl"] for p in rep.points)
    pso_ok = sum(p.means["pso-rl"] >= p.means["rl"] for p in rep.points)
    for p in rep.points:
        print("  " + " ".join(f"{m}={v:.4f}" for m, v in p.means.items()) + f" @ {p.episodes}")
    ok = ga_ok >= 0.7 * n and pso_ok >= 0.7 * n
    report("trend", ok, f"(GA>=RL {ga_ok}/{n}, PSO>=RL {pso_ok}/{n})")


# --- reachability --------------------------------------------------------------

@pytest.mark.acceptance(criterion="reachability: >= 0.95 normalized within 500 episodes for >= 4/5 seeds")
def test_reachability():
    sut = load_preset("mcafee")
    space = build_search_space(sut, 10)
    assert space.admits(sut.secure_values), "precondition: secure settings lie inside the lim=10 space"
    scores = [normalize_fitness(run_rl_mtd(sut, 10, McConfig(500), np.random.default_rng(s)).best_fitness, sut)
              for s in range(5)]
    hits = sum(s >= 0.95 for s in scores)
    report("reachability", hits >= 4, f"({hits}/5 seeds, scores={[round(s, 4) for s in scores]})")


# --- determinism ---------------------------------------------------------------

@pytest.mark.acceptance(criterion="determinism: compare twice gives byte-identical CSVs")
def test_compare_determinism(tmp_path):
    args = ["compare", "--sut", "excel2016", "--sweep", "10:30:10", "--seeds", "0,1",
            "--generations", "2", "--agents", "4", "--top-k", "2", "--swarm", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = [(tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names]
    report("determinism", len(names) == 5 and all(same), f"({sum(same)}/{len(names)} files identical)")


# --- win-tuple format --------------------------------------------------------------

@pytest.mark.acceptance(criterion="win-count tuple renders as (rl, ga, pso) and reconciles")
def test_table_format(trend_results):
    rep = count_wins(trend_results)
    text = rep.render()
    n = len(sweep_points(TREND_PLAN.sweep))
    ok = (re.fullmatch(r"\(\d+, \d+, \d+\)", text) is not None and rep.reconciles()
          and sum(rep.win_tuple) + rep.ties == n == len(rep.points))
    report("table format", ok, f"(mcafee {text}, ties={rep.ties}, points={n}, best={rep.best_label})")
