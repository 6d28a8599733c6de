"""Adaptive and collective discrimination of product qubit ensembles."""
from .actions import Action, ActionSet, build_action_set, decode_action, encode_action
from .collective import (
    DiscriminationSolution,
    helstrom_binary,
    min_entropy,
    pretty_good_measurement,
    sdp_min_error,
    success_probability,
)
from .errors import (
    BoundViolation,
    ConvergenceError,
    DimensionError,
    EmptySubset,
    ImpossibleOutcome,
    InvalidPovm,
    InvalidState,
    NumericsError,
    PolicyGap,
)
from .local import AdaptivePolicy, dp_optimal_local, evaluate_policy, locally_greedy, minentropy_local
from .qstate import BeliefState, Ensemble, Povm, joint_density, posterior_update

__version__ = "0.1.0"
