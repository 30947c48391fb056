"""Particle swarm search over the search-space limit.

Particles are ``lim`` values. A particle's position is the best game fitness
its ``lim`` has produced; its velocity is the remaining distance to the ideal
fitness, lowered only while it stays above the optimal difference ``d``.
Lims move only through social influence: a fixed ``influence`` step toward
the lim that produced the global best.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .env import McConfig, PolicyConfig, run_rl_mtd
from .sut import DEFAULT_SCORING, ScoringConfig, SutSpec, max_fitness

LIM_FLOOR = 0.05

# (optimal difference, initial velocity) tuned per case-study SUT
PROFILES = {
    "windows10": (20, 300),
    "mcafee": (300, 500),
    "excel2016": (160, 200),
    "office2007": (120, 1000),
}


@dataclass(frozen=True)
class PsoConfig:
    optimal_difference: float
    initial_velocity: float
    swarm_size: int = 30
    generations: int = 100
    influence: float = 0.05
    initial_position: float = 0.0
    num_episodes: int = 60
    df: float = 1.0

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ValueError("swarm_size must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.optimal_difference < 0:
            raise ValueError("optimal_difference must be >= 0")
        if not self.influence > 0:
            raise ValueError("influence must be positive")

    @classmethod
    def from_profile(cls, name: str, **overrides) -> "PsoConfig":
        try:
            d, v0 = PROFILES[name]
        except KeyError:
            raise ValueError(f"unknown PSO profile {name!r}; choose from {sorted(PROFILES)}") from None
        return cls(d, v0, **overrides)

    def replace(self, **changes) -> "PsoConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class Particle:
    lim: float
    position: float
    velocity: float


@dataclass
class SwarmState:
    particles: list[Particle]
    global_best: float = 0.0
    best_particle_lim: Optional[float] = None


@dataclass
class PsoGeneration:
    generation: int
    global_best: float
    best_lim: float
    min_velocity: float
    lims: tuple[float, ...]
    positions: tuple[float, ...]
    velocities: tuple[float, ...]


@dataclass
class PsoResult:
    best_lim: float
    global_best: float
    history: list[PsoGeneration] = field(default_factory=list)


def initialize_swarm(config: PsoConfig, rng: Optional[np.random.Generator] = None) -> SwarmState:
    # lims are the enumerated integers 1..swarm_size, so rng is unused
    particles = [Particle(float(i), config.initial_position, float(config.initial_velocity))
                 for i in range(1, config.swarm_size + 1)]
    return SwarmState(particles, 0.0, None)


def update_positions(state: SwarmState, sut: SutSpec, rng: np.random.Generator,
                     scoring: ScoringConfig = DEFAULT_SCORING, policy: Optional[PolicyConfig] = None,
                     mc: McConfig = McConfig(60)) -> SwarmState:
    streams = rng.spawn(len(state.particles))
    scores = [run_rl_mtd(sut, p.lim, mc, s, scoring, policy).best_fitness
              for p, s in zip(state.particles, streams)]
    return apply_positions(state, scores)


def apply_positions(state: SwarmState, scores) -> SwarmState:
    """Fold one generation of game scores into positions and the global best."""
    particles = [Particle(p.lim, max(p.position, new_pp), p.velocity) for p, new_pp in zip(state.particles, scores)]
    best_i = max(range(len(scores)), key=lambda i: (scores[i], -i))
    if state.best_particle_lim is None or scores[best_i] > state.global_best:
        return SwarmState(particles, max(state.global_best, scores[best_i]), state.particles[best_i].lim)
    return SwarmState(particles, state.global_best, state.best_particle_lim)


def update_velocities(state: SwarmState, config: PsoConfig, ideal_fitness: float) -> SwarmState:
    particles = []
    for p in state.particles:
        new_pv = ideal_fitness - p.position
        velocity = new_pv if config.optimal_difference < new_pv < p.velocity else p.velocity
        particles.append(Particle(p.lim, p.position, velocity))
    return SwarmState(particles, state.global_best, state.best_particle_lim)


def apply_social_influence(state: SwarmState, config: PsoConfig) -> SwarmState:
    best = state.best_particle_lim
    if best is None:
        raise ValueError("social influence needs a best particle; update positions first")
    particles = []
    for p in state.particles:
        lim = p.lim - config.influence if p.lim > best else p.lim + config.influence
        particles.append(Particle(max(LIM_FLOOR, lim), p.position, p.velocity))
    return SwarmState(particles, state.global_best, best)


def run_pso(config: PsoConfig, sut: SutSpec, rng: np.random.Generator, scoring: ScoringConfig = DEFAULT_SCORING,
            policy: Optional[PolicyConfig] = None, log=None) -> PsoResult:
    if policy is None:
        policy = PolicyConfig.for_sut(sut, scoring)
    ideal = max_fitness(sut, scoring)
    mc = McConfig(config.num_episodes, config.df)
    state = initialize_swarm(config, rng)
    history = []
    for gen in range(config.generations):
        state = update_positions(state, sut, rng, scoring, policy, mc)
        state = update_velocities(state, config, ideal)
        history.append(PsoGeneration(
            gen, state.global_best, state.best_particle_lim, min(p.velocity for p in state.particles),
            tuple(p.lim for p in state.particles), tuple(p.position for p in state.particles),
            tuple(p.velocity for p in state.particles)))
        if log is not None:
            log(history[-1])
        state = apply_social_influence(state, config)
    return PsoResult(state.best_particle_lim, state.global_best, history)
