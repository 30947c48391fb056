import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtdlab.pso import (
    LIM_FLOOR,
    PROFILES,
    Particle,
    PsoConfig,
    SwarmState,
    apply_positions,
    apply_social_influence,
    initialize_swarm,
    run_pso,
    update_positions,
    update_velocities,
)
from mtdlab.sut import generate_synthetic_sut, max_fitness

SMALL = PsoConfig(300, 500, swarm_size=5, generations=4, num_episodes=3)


def _state(*particles, best=None, gbest=0.0):
    return SwarmState([Particle(*p) for p in particles], gbest, best)


def test_profiles():
    assert PROFILES == {
        "windows10": (20, 300),
        "mcafee": (300, 500),
        "excel2016": (160, 200),
        "office2007": (120, 1000),
    }
    cfg = PsoConfig.from_profile("windows10")
    assert (cfg.optimal_difference, cfg.initial_velocity) == (20, 300)
    assert (cfg.swarm_size, cfg.generations, cfg.influence) == (30, 100, 0.05)
    with pytest.raises(ValueError):
        PsoConfig.from_profile("linux")


def test_initialize_swarm():
    state = initialize_swarm(PsoConfig(300, 500))
    assert [p.lim for p in state.particles] == [float(i) for i in range(1, 31)]
    assert all(p.position == 0 and p.velocity == 500 for p in state.particles)
    assert state.global_best == 0
    single = initialize_swarm(PsoConfig(300, 500, swarm_size=1))
    assert [p.lim for p in single.particles] == [1.0]


def test_position_update_branches():
    state = _state((3.0, 0.0, 1000.0), (4.0, 10400.0, 1000.0))
    nxt = apply_positions(state, [10400, 9000])
    assert [p.position for p in nxt.particles] == [10400, 10400]
    assert nxt.global_best == 10400
    assert nxt.best_particle_lim == 3.0


def test_global_best_is_monotone():
    state = _state((3.0, 0.0, 1000.0), (4.0, 0.0, 1000.0))
    state = apply_positions(state, [500, 900])
    assert (state.global_best, state.best_particle_lim) == (900, 4.0)
    state = apply_positions(state, [700, 100])
    assert (state.global_best, state.best_particle_lim) == (900, 4.0)


def test_velocity_update_branches():
    cfg = PsoConfig(300, 1000)
    state = _state((1.0, 10400.0, 1000.0))
    assert update_velocities(state, cfg, 11200).particles[0].velocity == 800
    state = _state((1.0, 11000.0, 1000.0))
    assert update_velocities(state, cfg, 11200).particles[0].velocity == 1000
    state = _state((1.0, 10000.0, 1000.0))
    assert update_velocities(state, cfg, 11200).particles[0].velocity == 1000


def test_social_influence_branches():
    cfg = PsoConfig(300, 500)
    state = _state((12.0, 0, 0), (8.0, 0, 0), (10.0, 0, 0), (0.05, 0, 0), best=10.0)
    lims = [p.lim for p in apply_social_influence(state, cfg).particles]
    assert lims == pytest.approx([11.95, 8.05, 10.05, 0.1])


def test_social_influence_floor():
    cfg = PsoConfig(300, 500, influence=0.5)
    state = _state((0.3, 0, 0), best=0.1)
    assert apply_social_influence(state, cfg).particles[0].lim == LIM_FLOOR


def test_social_influence_requires_best():
    with pytest.raises(ValueError):
        apply_social_influence(_state((1.0, 0, 0)), PsoConfig(300, 500))


@given(lims=st.lists(st.floats(0.05, 40), min_size=1, max_size=10), best=st.floats(0.05, 40))
def test_social_influence_moves_at_most_influence(lims, best):
    cfg = PsoConfig(300, 500)
    state = SwarmState([Particle(l, 0, 0) for l in lims], 0, best)
    after = apply_social_influence(state, cfg)
    for before, p in zip(lims, after.particles):
        assert abs(p.lim - best) <= abs(before - best) + cfg.influence + 1e-12
        assert p.lim > 0


def test_update_positions_runs_the_game():
    sut = generate_synthetic_sut(6, 0)
    state = initialize_swarm(SMALL)
    nxt = update_positions(state, sut, np.random.default_rng(0))
    assert all(0 < p.position <= max_fitness(sut) for p in nxt.particles)
    assert nxt.global_best == max(p.position for p in nxt.particles)


def _check_history(result, cfg):
    hist = result.history
    assert len(hist) == cfg.generations
    assert all(a.global_best <= b.global_best for a, b in zip(hist, hist[1:]))
    for a, b in zip(hist, hist[1:]):
        assert all(x <= y for x, y in zip(a.positions, b.positions))
        assert all(y <= x for x, y in zip(a.velocities, b.velocities))
    for g in hist:
        assert g.global_best == max(max(h.positions) for h in hist[: g.generation + 1])
        assert all(v == cfg.initial_velocity or v > cfg.optimal_difference for v in g.velocities)
        assert all(l > 0 for l in g.lims)


def test_run_pso_invariants():
    sut = generate_synthetic_sut(10, 3)
    result = run_pso(SMALL, sut, np.random.default_rng(1))
    _check_history(result, SMALL)
    assert result.global_best == result.history[-1].global_best


def test_run_pso_reproducible():
    sut = generate_synthetic_sut(10, 3)
    a = run_pso(SMALL, sut, np.random.default_rng(5))
    b = run_pso(SMALL, sut, np.random.default_rng(5))
    assert a.best_lim == b.best_lim
    assert a.history == b.history


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_run_pso_velocity_tracks_distance(seed):
    sut = generate_synthetic_sut(12, seed)
    cfg = PsoConfig(20, 5000, swarm_size=4, generations=3, num_episodes=2)
    result = run_pso(cfg, sut, np.random.default_rng(seed))
    _check_history(result, cfg)
    top = max_fitness(sut)
    for g in result.history:
        for pos, vel in zip(g.positions, g.velocities):
            if top - pos > cfg.optimal_difference:
                assert vel <= max(top - pos, 0) or vel == cfg.initial_velocity
