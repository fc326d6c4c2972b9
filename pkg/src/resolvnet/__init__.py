"""Resolvent-based multi-scale graph networks.

Weighted graphs with node-weight geometry, two-scale decompositions and
coarse-graining, resolvent filters and the network built from them, the
baseline limit operators, and an executable verification suite for every
convergence and stability statement.
"""

from .graphs import (GraphDocumentError, WeightedGraph, WeightedNormContext,
                     graph_to_document, laplacian, load_graph,
                     weighted_operator_norm, weighted_vector_norm)
from .multiscale import (Coarsening, ScaleDecomposition, coarsen,
                         coarsening_to_document, decompose,
                         decompose_by_partition, excl_reg_graph,
                         high_components, lift_up, project_down,
                         separation_ratio, zero_projection)
from .spectral import (ResolventFactorization, eigenvalue_lipschitz_check,
                       gershgorin_bound, lambda_1_nonzero, lambda_max,
                       resolvent_apply, resolvent_gap, resolvent_power_apply,
                       second_resolvent_identity_check, spectrum)
from .filters import (ResolventFilterSpec, filter_apply, filter_scalar_eval,
                      fit_filter_to_function)
from .model import (ResolvNetLayer, ResolvNetModel, aggregate, backward,
                    layer_forward, model_forward)
from .training import (GraphRegressionTask, NodeClassificationTask,
                       TrainConfig, TrainResult, train)
from .baselines import (ShiftOperatorKind, limit_gap_scan, limit_operator,
                        mpnn_scale_demo, shift_operator)
from .stability import (StabilityConstants, assemble_constants,
                        forward_norm_bound_check, graph_consistency_check,
                        input_stability_check, laplacian_perturbation_check,
                        scale_consistency_check, weight_norm_z)
from .datasets import (MoleculeLikeGraph, molecule_collapse, molecule_deflect,
                       random_molecule_set, sbm_classification_data,
                       synth_two_scale_family)
from .experiments import (ExperimentConfig, ShiftOperatorModel, clique_expand,
                          run_clique_experiment, run_collapse_experiment)
from .reports import CheckReport

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
