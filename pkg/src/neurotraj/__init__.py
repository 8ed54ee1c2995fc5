"""Multi-objective evolutionary search over trajectory-prediction
hyperparameters, evaluated by a deterministic surrogate on synthetic
highway data."""

__version__ = "0.1.0"

from .genome import AlleleTable, GeneticOperators, Genome, default_allele_table
from .objectives import ObjectiveId, ObjectiveVector
from .trajectory import Dataset, TrajectoryPoint, TrajectorySequence
from .evaluator import EvaluationResult, SurrogateConfig, evaluate
from .experiment import ExperimentConfig, PRESETS, preset_config, run_experiment, summarize

__all__ = [
    "AlleleTable",
    "Dataset",
    "EvaluationResult",
    "ExperimentConfig",
    "GeneticOperators",
    "Genome",
    "ObjectiveId",
    "ObjectiveVector",
    "PRESETS",
    "SurrogateConfig",
    "TrajectoryPoint",
    "TrajectorySequence",
    "default_allele_table",
    "evaluate",
    "preset_config",
    "run_experiment",
    "summarize",
]
