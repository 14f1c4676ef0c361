"""Simulator and decision engine for online collaborative AI systems.

A synthetic object stream feeds an online classifier one instance per
iteration; an autonomy-ratio state machine detects performance degradation;
four recovery policies (internal threshold, weighted-sum, two-player game,
Q-learning) steer human involvement while a measurement layer scores each
policy's resilience and greenness.
"""

from .config import ExperimentConfig, from_dict, load
from .evaluator import ActionEstimate, ActionKind, EnergyModel
from .learner import OnlineClassifier, confidence_threshold
from .measurements import MetricsReport, compare_policies
from .resilience import AcrWindow, StateTracker, SystemState
from .runner import (ExperimentResult, ExperimentRun, dump_csv,
                     run_experiment, run_replications)
from .simulator import (Darkness, FeatureInstance, FeedSchedule,
                        HistogramEqualization, Mode, ObjectClass,
                        SyntheticImage, extract_histogram, generate_object)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "from_dict", "load",
    "ActionEstimate", "ActionKind", "EnergyModel",
    "OnlineClassifier", "confidence_threshold",
    "MetricsReport", "compare_policies",
    "AcrWindow", "StateTracker", "SystemState",
    "ExperimentResult", "ExperimentRun", "dump_csv",
    "run_experiment", "run_replications",
    "Darkness", "FeatureInstance", "FeedSchedule", "HistogramEqualization",
    "Mode", "ObjectClass", "SyntheticImage", "extract_histogram",
    "generate_object",
]
