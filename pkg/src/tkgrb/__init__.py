"""Recurrency baselines for temporal knowledge graph forecasting."""

from .datasets import Dataset, DatasetStats, DataError, augment_inverses, compute_stats, load_dataset, load_split
from .estimator import RecurrencyBaseline
from .evaluation import EvalReport, RankOutcome, TieProtocol, evaluate, filter_set, rank_gold
from .kg import Quadruple, Query, TemporalKG, make_query
from .scoring import (
    ConfigError,
    RelationParams,
    combined_score,
    decay_weight,
    relaxed_score,
    strict_score,
    strict_score_last,
)
from .tuning import ALPHA_GRID, LAMBDA_GRID, TuningResult, load_params, sweep_fixed, tune

__version__ = "0.1.0"
