"""
Distributed online convex optimization with time-varying constraints.

Agents on a time-varying graph each see a local loss and local constraints
every round. They mix decisions with neighbours and run a primal-dual
update, from either subgradients (full information) or two function values
(bandit feedback). The package provides the problem model, graphs, the two
algorithms, regret and violation metrics, and an experiment harness.
"""

from .problem import (AffineConstraint, DecisionSet, ProblemInstance, QuadraticRegressionLoss,
                      clipped_subgradient, clipped_value, generate_regression_stream, project,
                      shrink_set)
from .network import (GraphSequence, MixingMatrix, er_path_sequence, generate_er_path_mixing,
                      mix_states, mixing_constants, validate_mixing_sequence)
from .algorithms import (StepSchedule, bandit_round, full_info_round, initial_states,
                         two_point_constraint_jacobian, two_point_loss_gradient)
from .metrics import (cumulative_violation, disagreement, empirical_rate, network_regret,
                      path_length, standard_violation)
from .comparators import dynamic_comparator, static_comparator
from .harness import ExperimentConfig, run_experiment, simulate, sweep

__version__ = "0.1.0"
