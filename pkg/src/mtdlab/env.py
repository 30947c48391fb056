"""Single-player MTD game and first-visit Monte Carlo prediction.

The agent holds or changes the current configuration according to a fixed
threshold policy. A Change re-samples the LOW-scored parameters from the
search space; HIGH-scored parameters stay frozen. Rewards are the sign of
the fitness delta.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .sut import (
    DEFAULT_SCORING,
    Configuration,
    ScoringConfig,
    SearchSpace,
    Setting,
    SutSpec,
    build_search_space,
    max_fitness,
    sample_indices,
)

EPISODE_LENGTH = 100
BASELINE_LIM = 10


class Action(IntEnum):
    HOLD = 0
    CHANGE = 1


@dataclass(frozen=True)
class PolicyConfig:
    """Threshold policy.

    Below ``threshold_lo`` the agent changes with probability ``p_high``; at or
    above it the agent holds with probability ``p_high``. ``change_mode``
    selects whether a Change re-samples every LOW parameter (``"all"``) or a
    single randomly chosen one (``"single"``).
    """

    threshold_lo: int
    p_high: float = 0.8
    change_mode: str = "all"

    def __post_init__(self):
        if not 0.5 < self.p_high < 1:
            raise ValueError(f"p_high must lie in (0.5, 1), got {self.p_high}")
        if self.change_mode not in ("all", "single"):
            raise ValueError(f"unknown change_mode {self.change_mode!r}")

    @property
    def p_low(self) -> float:
        return 1.0 - self.p_high

    @classmethod
    def for_sut(cls, sut: SutSpec, scoring: ScoringConfig = DEFAULT_SCORING, p_high: float = 0.8,
                change_mode: str = "all") -> "PolicyConfig":
        top = max_fitness(sut, scoring)
        if scoring.val > top:
            raise ValueError(f"val={scoring.val} exceeds the maximum fitness {top}")
        return cls(top - scoring.val, p_high, change_mode)


class EpisodeStep(NamedTuple):
    state: tuple
    action: Action
    reward: int
    delta: int = 0
    fitness: Optional[int] = None


@dataclass
class Episode:
    steps: list[EpisodeStep] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    @property
    def rewards(self) -> list[int]:
        return [s.reward for s in self.steps]

    def best_fitness(self) -> int:
        return max(s.fitness for s in self.steps)

    def trace_lines(self) -> list[str]:
        """One ``state-hash action reward`` line per step."""
        return [f"{state_hash(s.state)} {int(s.action)} {s.reward}" for s in self.steps]


def state_hash(state: Sequence[Setting]) -> str:
    return hashlib.blake2b(json.dumps(list(state)).encode(), digest_size=8).hexdigest()


@dataclass(frozen=True)
class McConfig:
    num_episodes: int
    df: float = 1.0

    def __post_init__(self):
        if self.num_episodes < 1:
            raise ValueError(f"num_episodes must be >= 1, got {self.num_episodes}")
        if not self.df > 0:
            raise ValueError(f"df must be positive, got {self.df}")


@dataclass
class ValueFunction:
    values: dict = field(default_factory=dict)
    returns_sum: dict = field(default_factory=dict)
    returns_count: dict = field(default_factory=dict)

    def update(self, state, g: float, df: float) -> None:
        self.returns_sum[state] = self.returns_sum.get(state, 0.0) + g
        self.returns_count[state] = self.returns_count.get(state, 0.0) + df
        self.values[state] = self.returns_sum[state] / self.returns_count[state]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, state):
        return self.values[state]

    def mean_value(self) -> float:
        return sum(self.values.values()) / len(self.values)


def accumulate_first_visit(vf: ValueFunction, steps: Iterable[EpisodeStep], df: float = 1.0) -> ValueFunction:
    """Fold one episode into ``vf``: each distinct state contributes the
    undiscounted reward sum from its first occurrence to the episode end."""
    steps = list(steps)
    tail = [0] * (len(steps) + 1)
    for t in range(len(steps) - 1, -1, -1):
        tail[t] = tail[t + 1] + steps[t].reward
    first: dict = {}
    for t, s in enumerate(steps):
        first.setdefault(s.state, t)
    for state, t in first.items():
        vf.update(state, tail[t], df)
    return vf


class _Game:
    """Per-(SUT, space, scoring) lookup tables shared by the episode loop."""

    __slots__ = ("secure", "high", "low", "space", "top")

    def __init__(self, sut: SutSpec, space: SearchSpace, scoring: ScoringConfig):
        if space.names != sut.names:
            raise ValueError("search space was built for a different SUT")
        self.secure = sut.secure_values
        self.high = scoring.high
        self.low = scoring.low
        self.space = space
        self.top = max_fitness(sut, scoring)

    def fitness(self, values) -> int:
        high, low = self.high, self.low
        return sum(high if v == s else low for v, s in zip(values, self.secure))

    def insecure(self, values) -> list[int]:
        return [i for i, (v, s) in enumerate(zip(values, self.secure)) if v != s]

    def transition(self, values: tuple, action: Action, rng, change_mode: str = "all") -> tuple:
        if action == Action.HOLD:
            return values
        low = self.insecure(values)
        if not low:
            return values
        if change_mode == "single":
            low = [low[int(rng.integers(len(low)))]]
        drawn = sample_indices(self.space, low, rng)
        nxt = list(values)
        for i, v in zip(low, drawn):
            nxt[i] = v
        return tuple(nxt)


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def initial_state(sut: SutSpec, space: SearchSpace, rng: np.random.Generator) -> Configuration:
    return Configuration.from_values(sut, sample_indices(space, range(sut.n), rng))


def choose_action(fit: int, policy: PolicyConfig, rng: np.random.Generator) -> Action:
    favoured = rng.random() < policy.p_high
    if fit < policy.threshold_lo:
        return Action.CHANGE if favoured else Action.HOLD
    return Action.HOLD if favoured else Action.CHANGE


def step(sut: SutSpec, space: SearchSpace, state: Configuration, action: Action, rng: np.random.Generator,
         scoring: ScoringConfig = DEFAULT_SCORING, change_mode: str = "all") -> tuple[Configuration, int]:
    game = _Game(sut, space, scoring)
    values = Configuration.from_values(sut, state.values).values
    nxt = game.transition(values, Action(action), rng, change_mode)
    return Configuration(sut.names, nxt), _sign(game.fitness(nxt) - game.fitness(values))


def _episode(game: _Game, policy: PolicyConfig, rng, max_steps: int) -> Episode:
    state = tuple(sample_indices(game.space, range(len(game.secure)), rng))
    fit = game.fitness(state)
    steps = []
    for _ in range(max_steps):
        action = choose_action(fit, policy, rng)
        nxt = game.transition(state, action, rng, policy.change_mode)
        nfit = fit if nxt is state else game.fitness(nxt)
        delta = nfit - fit
        steps.append(EpisodeStep(state, action, _sign(delta), delta, fit))
        if fit == game.top:
            break
        state, fit = nxt, nfit
    return Episode(steps)


def generate_episode(sut: SutSpec, space: SearchSpace, policy: PolicyConfig, rng: np.random.Generator,
                     scoring: ScoringConfig = DEFAULT_SCORING, max_steps: int = EPISODE_LENGTH) -> Episode:
    return _episode(_Game(sut, space, scoring), policy, rng, max_steps)


@dataclass
class RlMtdResult:
    lim: float
    best_fitness: int
    best_state: tuple
    value_function: ValueFunction
    num_episodes: int


def _mc(game: _Game, policy: PolicyConfig, mc: McConfig, rng) -> RlMtdResult:
    vf = ValueFunction()
    best_fit, best_state = -1, ()
    for _ in range(mc.num_episodes):
        episode = _episode(game, policy, rng, EPISODE_LENGTH)
        accumulate_first_visit(vf, episode.steps, mc.df)
        for s in episode.steps:
            if s.fitness > best_fit:
                best_fit, best_state = s.fitness, s.state
    return RlMtdResult(game.space.lim, best_fit, best_state, vf, mc.num_episodes)


def mc_prediction(sut: SutSpec, space: SearchSpace, policy: PolicyConfig, mc: McConfig,
                  rng: np.random.Generator, scoring: ScoringConfig = DEFAULT_SCORING) -> ValueFunction:
    return _mc(_Game(sut, space, scoring), policy, mc, rng).value_function


def run_rl_mtd(sut: SutSpec, lim: float, mc: McConfig, rng: np.random.Generator,
               scoring: ScoringConfig = DEFAULT_SCORING, policy: Optional[PolicyConfig] = None) -> RlMtdResult:
    """Build the lim search space, run MC prediction, and report the best
    fitness reached by any visited state together with the value function."""
    if policy is None:
        policy = PolicyConfig.for_sut(sut, scoring)
    space = build_search_space(sut, lim)
    return _mc(_Game(sut, space, scoring), policy, mc, rng)
