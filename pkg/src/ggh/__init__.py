"""Gradient-guided hypotheses: training on tables with missing or noisy values.

Incomplete rows are expanded into one candidate row per plausible value of
the missing variable; each epoch only candidates whose enriched gradients
look like those of the complete rows are backpropagated. The same enriched
gradients, clustered with DBSCAN, flag noisy training rows.
"""
from .data import (DataMatrix, HypothesisSpec, SplitPlan, derive_hypothesis_classes, inject_noise,
                   load_airfoil, load_csv, mask_column, split_dataset, standardize)
from .expansion import ExpandedBatch, expand_hypotheses
from .harness import ExperimentConfig, load_dataset, run_experiment
from .metrics import Metrics, compute_metrics, early_stop
from .model import MlpModel, forward_batch, init_model, predict, sgd_step
from .noise import noise_filtered_train
from .oneclass import fit_one_class, score_membership
from .selection import GGHConfig, SelectionHistory, ggh_train, train_regressor

__version__ = "0.1.0"
