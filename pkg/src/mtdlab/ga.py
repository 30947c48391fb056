"""Genetic algorithm over the search-space limit.

Each agent's single gene is its ``lim``. A generation evaluates every agent
with the RL-MTD game, keeps the top ``k`` as parents, replicates them (no
gene swapping) to refill the population, nudges each child by ``noise`` and
carries the best agent over unmutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .env import McConfig, PolicyConfig, run_rl_mtd
from .sut import DEFAULT_SCORING, ScoringConfig, SutSpec

LIM_FLOOR = 0.05


@dataclass(frozen=True)
class GaConfig:
    num_agents: int = 25
    top_k: int = 5
    generations: int = 100
    genome_range: int = 25
    noise: float = 0.05
    episode_counts: tuple[int, ...] = (20, 60)
    df: float = 1.0

    def __post_init__(self):
        if not 1 <= self.top_k < self.num_agents:
            raise ValueError(f"need 1 <= top_k < num_agents, got top_k={self.top_k} num_agents={self.num_agents}")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.genome_range < 1:
            raise ValueError("genome_range must be >= 1")
        if not self.noise > 0:
            raise ValueError("noise must be positive")
        if not self.episode_counts or min(self.episode_counts) < 1:
            raise ValueError("episode_counts must be non-empty positive integers")


@dataclass
class GenerationStats:
    generation: int
    population: tuple[float, ...]
    rewards: tuple[float, ...]
    best_reward: float
    best_lim: float

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.rewards))


@dataclass
class GaResult:
    best_lim: float
    best_reward: float
    history: list[GenerationStats] = field(default_factory=list)


def generate_random_agents(num: int, N: int, rng: np.random.Generator) -> list[float]:
    if num < 1 or N < 1:
        raise ValueError(f"num and N must be >= 1, got num={num} N={N}")
    return [float(x) for x in rng.integers(1, N, size=num, endpoint=True)]


def evaluate_agent(lim: float, sut: SutSpec, rng: np.random.Generator, scoring: ScoringConfig = DEFAULT_SCORING,
                   policy: Optional[PolicyConfig] = None, episode_counts: Sequence[int] = (20, 60),
                   df: float = 1.0) -> float:
    """Mean best-fitness of the RL-MTD game over each episode budget."""
    scores = [run_rl_mtd(sut, lim, McConfig(c, df), rng, scoring, policy).best_fitness for c in episode_counts]
    return float(np.mean(scores))


def select_top_k(rewards: Sequence[float], agents: Sequence[float], k: int) -> list[float]:
    if len(rewards) != len(agents):
        raise ValueError(f"{len(rewards)} rewards for {len(agents)} agents")
    if not 1 <= k <= len(agents):
        raise ValueError(f"k={k} out of range for {len(agents)} agents")
    order = sorted(range(len(agents)), key=lambda i: -rewards[i])
    return [agents[i] for i in order[:k]]


def crossover_replicate(selected: Sequence[float], n: int, rng: np.random.Generator) -> list[float]:
    """``n - 1`` children copied uniformly (with replacement) from ``selected``;
    the remaining slot belongs to the elite."""
    if not selected:
        raise ValueError("no parents to replicate")
    picks = rng.integers(len(selected), size=n - 1)
    return [selected[i] for i in picks]


def mutate(lim: float, noise: float, rng: np.random.Generator) -> float:
    # verbatim rule: the gene itself is compared to a uniform draw
    if lim > rng.random():
        lim = lim - noise
    else:
        lim = lim + noise
    return max(LIM_FLOOR, lim)


def _evaluate_population(agents, sut, scoring, policy, config: GaConfig, rng) -> list[float]:
    streams = rng.spawn(len(agents))
    return [evaluate_agent(a, sut, s, scoring, policy, config.episode_counts, config.df)
            for a, s in zip(agents, streams)]


def _argmax(values: Sequence[float]) -> int:
    return max(range(len(values)), key=lambda i: (values[i], -i))


def run_ga(config: GaConfig, sut: SutSpec, rng: np.random.Generator, scoring: ScoringConfig = DEFAULT_SCORING,
           policy: Optional[PolicyConfig] = None, log=None) -> GaResult:
    if policy is None:
        policy = PolicyConfig.for_sut(sut, scoring)
    agents = generate_random_agents(config.num_agents, config.genome_range, rng)
    history = []
    for gen in range(config.generations):
        rewards = _evaluate_population(agents, sut, scoring, policy, config, rng)
        elite = _argmax(rewards)
        history.append(GenerationStats(gen, tuple(agents), tuple(rewards), rewards[elite], agents[elite]))
        if log is not None:
            log(history[-1])
        parents = select_top_k(rewards, agents, config.top_k)
        children = crossover_replicate(parents, config.num_agents, rng)
        agents = [agents[elite]] + [mutate(c, config.noise, rng) for c in children]

    # the last replacement produced unevaluated agents; score them once more
    rewards = _evaluate_population(agents, sut, scoring, policy, config, rng)
    best = _argmax(rewards)
    return GaResult(agents[best], rewards[best], history)
