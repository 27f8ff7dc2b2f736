"""Opportunistic random medium access for Poisson bipolar full-duplex networks."""

from .model import (ChannelRealization, Deployment, Duplex, PolicyDecision, SystemParams,
                    db_to_linear, linear_to_db, sample_deployment, sir, toroidal_distance)
from .opportunity import OpportunityEstimate, empty_ball_radius, estimate, opportunistic_probability
from .optimizer import (QuadraticCoefficients, SolverError, SolverResult, Variant, arctan_approx,
                        closed_form_p, fixed_point_rhs, quadratic_coefficients, solve_optimal_p)
from .schemes import RandomRule, SchemeConfig, SchemeKind, csma_schedule, decide
from .simulator import MeasureMode, ThroughputReport, measure_interference, replicate, run, simulate

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization", "Deployment", "Duplex", "PolicyDecision", "SystemParams", "db_to_linear",
    "linear_to_db", "sample_deployment", "sir", "toroidal_distance",
    "OpportunityEstimate", "empty_ball_radius", "estimate", "opportunistic_probability",
    "QuadraticCoefficients", "SolverError", "SolverResult", "Variant", "arctan_approx", "closed_form_p",
    "fixed_point_rhs", "quadratic_coefficients", "solve_optimal_p",
    "RandomRule", "SchemeConfig", "SchemeKind", "csma_schedule", "decide",
    "MeasureMode", "ThroughputReport", "measure_interference", "replicate", "run", "simulate",
]
