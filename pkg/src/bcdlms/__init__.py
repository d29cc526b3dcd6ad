"""Bias-compensated diffusion LMS over sensor networks with noisy regressors.

Library layout:

* :mod:`bcdlms.blockmat` -- block Kronecker algebra underlying the analysis
* :mod:`bcdlms.network` -- topologies and combination matrices
* :mod:`bcdlms.datamodel` -- signal/noise profiles and seeded data streams
* :mod:`bcdlms.algorithms` -- the adaptive estimators
* :mod:`bcdlms.theory` -- closed-form mean and mean-square predictions
* :mod:`bcdlms.harness` -- Monte-Carlo experiments, CSV output, presets
* :mod:`bcdlms.cli` -- the ``bcdlms`` command
"""

from .algorithms import (AdaptiveVariances, AlgorithmConfig, KnownVariances,
                         NetworkState, centralized_step, diffusion_step,
                         non_cooperative_step, stochastic_gradient,
                         variance_update)
from .blockmat import (BlockSpec, ShapeError, SingularMatrixError, block_kron,
                       bvec, kron, solve, spectral_radius, unbvec)
from .datamodel import (DataStream, NodeObservation, SystemProfile,
                        complex_profile, table1_profile)
from .harness import (AlgorithmSpec, ExperimentConfig, ExperimentResult,
                      LearningCurves, compare_known_vs_adaptive, preset,
                      preset_names, run_experiment, variance_trace)
from .network import (CombinationMatrix, Topology, TopologyError, extend,
                      identity_combination, metropolis_weights,
                      random_geometric_topology, relative_variance_weights)
from .theory import (InstabilityError, PerformancePrediction, StepSizeBounds,
                     TheoryOperators, build_operators, centralized_bias,
                     empirical_variance_transition,
                     small_step_variance_transition, standard_diffusion_bias,
                     steady_state, step_size_bounds, to_db, transient)

__version__ = "0.1.0"
