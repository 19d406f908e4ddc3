"""Schedules for portfolios of heuristics: offline greedy, online learners,
feature-aware selection and anytime objectives."""

from .anytime import ObjectiveSpec, expand_instances, speedup_factors
from .core import (
    RESTART,
    SR,
    ExecutionModel,
    Instance,
    RunSegment,
    RuntimeProfile,
    Schedule,
    evaluate,
    expected_capped_time,
    expected_capped_times,
    simulate_capped_time,
)
from .data import Dataset, InputError, load_anytime, load_features, load_runtimes, load_schedule
from .experiments import ExperimentConfig, ExperimentReport, run_curve, run_feature_curve, run_training_curve
from .experts import FeatureGreedy, FeaturesOnly, SleepingExperts, features_only_baseline, run_ogse
from .offline import (
    best_single_heuristic,
    greedy_schedule,
    greedy_step,
    optimal_schedule_oracle,
    parallel_schedule,
)
from .online import OnlineGreedy, run_online
from .synth import SynthSpec, synth_generate

__version__ = "0.1.0"
