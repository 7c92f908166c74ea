"""Classifier-induced distribution shifts."""

from .base import COVARIATE, NONE, OTHER, TARGET, IdentityShift, ShiftModel, truncnorm_cdf, truncnorm_sample
from .dag import (CovariateDagConfig, CovariateDagShift, TargetDagConfig, TargetDagShift, covariate_dag_adapt,
                  covariate_dag_sample, target_dag_adapt, target_dag_sample)
from .fico import (FicoConfig, FicoState, FicoStep, balanced_population, densities_from_cdf, fico_features, fico_update,
                   ingest_group_cdf, synthetic_group_cdf, write_group_cdf)
from .replicator import (ReplicatorConfig, ReplicatorShift, fitness_accuracy, fitness_from_rates, fitness_utility,
                         replicator_induce, replicator_update)
from .strategic import (LabelConditional, StrategicConfig, StrategicShift, strategic_agent_response,
                        strategic_bin_weights, strategic_induced_density, strategic_source, strategic_weight,
                        strategic_weight_moments)

__all__ = [
    "COVARIATE",
    "CovariateDagConfig",
    "CovariateDagShift",
    "FicoConfig",
    "FicoState",
    "FicoStep",
    "IdentityShift",
    "LabelConditional",
    "NONE",
    "OTHER",
    "ReplicatorConfig",
    "ReplicatorShift",
    "ShiftModel",
    "StrategicConfig",
    "StrategicShift",
    "TARGET",
    "TargetDagConfig",
    "TargetDagShift",
    "balanced_population",
    "covariate_dag_adapt",
    "covariate_dag_sample",
    "densities_from_cdf",
    "fico_features",
    "fico_update",
    "fitness_accuracy",
    "fitness_from_rates",
    "fitness_utility",
    "ingest_group_cdf",
    "replicator_induce",
    "replicator_update",
    "strategic_agent_response",
    "strategic_bin_weights",
    "strategic_induced_density",
    "strategic_source",
    "strategic_weight",
    "strategic_weight_moments",
    "synthetic_group_cdf",
    "target_dag_adapt",
    "target_dag_sample",
    "truncnorm_cdf",
    "truncnorm_sample",
    "write_group_cdf",
]
