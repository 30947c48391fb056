"""Moving target defense game for misconfigured software, with GA and PSO
optimizers for the search-space limit."""

from .env import (
    Action,
    Episode,
    EpisodeStep,
    McConfig,
    PolicyConfig,
    RlMtdResult,
    ValueFunction,
    accumulate_first_visit,
    choose_action,
    generate_episode,
    initial_state,
    mc_prediction,
    run_rl_mtd,
    step,
)
from .ga import GaConfig, GaResult, GenerationStats, run_ga
from .harness import ComparisonReport, ExperimentPlan, RunResult, count_wins, emit_csv, emit_plot_data, run_experiment
from .pso import PROFILES, PsoConfig, PsoResult, run_pso
from .sut import (
    Configuration,
    ListDomain,
    NumericDomain,
    ParameterSpec,
    ScoringConfig,
    SearchSpace,
    SutSpec,
    build_search_space,
    fitness,
    generate_synthetic_sut,
    load_sut_spec,
    max_fitness,
    min_fitness,
    normalize_fitness,
    sample_setting,
    save_sut_spec,
    score_parameter,
)

__version__ = "0.1.0"
