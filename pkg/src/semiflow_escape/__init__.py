"""Escape rates for subshifts of finite type and their suspension semi-flows."""

__version__ = "0.1.0"

from .escape_flow import (
    FlowEscapeResult,
    escape_rate_flow,
    flow_hole,
    flow_survival_log_measure,
    monte_carlo_survival,
    theorem_a_curve,
)
from .estimators import DiscreteEscapeRate, EquilibriumState, FlowEscapeRate
from .exceptions import EscapeRateError, NumericalError, ValidationError
from .gibbs import certify_gibbs, equilibrium_state, gamma, pressure
from .open_system import Hole, escape_rate_discrete, make_nested_cylinders, survivor_log_measure, validate_nested
from .sft import (
    AperiodicPoint,
    LocallyConstantFunction,
    PeriodicPoint,
    full_shift,
    golden_mean_shift,
    validate_transition_matrix,
)
from .suspension import DiscretizationParams, RoofFunction, choose_discretization, discretize, roof_lower, roof_upper

__all__ = [
    "AperiodicPoint", "DiscreteEscapeRate", "DiscretizationParams", "EquilibriumState", "EscapeRateError",
    "FlowEscapeRate", "FlowEscapeResult", "Hole", "LocallyConstantFunction", "NumericalError", "PeriodicPoint",
    "RoofFunction", "ValidationError", "certify_gibbs", "choose_discretization", "discretize",
    "equilibrium_state", "escape_rate_discrete", "escape_rate_flow", "flow_hole", "flow_survival_log_measure",
    "full_shift", "gamma", "golden_mean_shift", "make_nested_cylinders", "monte_carlo_survival", "pressure",
    "roof_lower", "roof_upper", "survivor_log_measure", "theorem_a_curve", "validate_nested",
    "validate_transition_matrix",
]
