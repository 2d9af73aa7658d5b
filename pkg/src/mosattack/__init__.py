"""Adversarial stress tests for observer screening and MOS reconstruction."""

__version__ = "0.1.0"

from .core import AttackMatrix, Dataset, DetectionResult, Rating, SubjectParams, stack
from .ga_attack import AttackOutcome, GaConfig, brute_force_best, fitness, ga_optimize, random_search
from .hard_detect import HardDetectorConfig
from .harness import ExperimentConfig, ExperimentReport, run_ablation, run_spammers, run_worst_case
from .methods import METHOD_NAMES, MethodUnderTest
from .sim import ParameterPool, SimConfig, make_spammers, sample_dataset, synth_pool
from .soft_recon import SoftConfig
