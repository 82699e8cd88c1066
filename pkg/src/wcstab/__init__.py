"""Stability of weighted composition semigroups ``T(t) f = h_t * f(phi(t, .))``.

The package builds the semiflow of ``x' = F(x)``, transports weights along it,
and decides stability on ``L^p_rho`` and on first-order Sobolev spaces from the
behaviour of the transported weight ``rho_{t,p}``.
"""

__version__ = "0.1.0"

from .config import ConfigError, load_problem, parse_problem, serialize_problem
from .evidence import INCONCLUSIVE, STABLE, UNSTABLE, CriterionResult, DecayEvidence, Verdict
from .families import FAMILIES, family_domain, family_field, make_semiflow
from .functions import SampledFunction, SobolevFunction, lp_norm, sobolev_norm
from .lasota import (LasotaProblem, decay_rate_experiment, hypercyclicity_check, lasota_semigroup,
                     lasota_threshold, stability_vs_hypercyclicity)
from .model import Domain, Multiplier, ProblemError, ProblemSpec, Tolerances, VectorField
from .partition import partition_domain, validate_hypotheses
from .semiflow import escape_time, flow, flow_jacobian, image_indicator, inverse_flow
from .sobolev import HypothesisError, classify_stability_sobolev
from .stability import (NotASemigroupError, classify, classify_stability_1d, classify_stability_general,
                        classify_stability_rho1, stability_integral)
from .weights import WeightEvolution, time_grid

__all__ = [
    "ConfigError", "load_problem", "parse_problem", "serialize_problem",
    "STABLE", "UNSTABLE", "INCONCLUSIVE", "CriterionResult", "DecayEvidence", "Verdict",
    "FAMILIES", "family_domain", "family_field", "make_semiflow",
    "SampledFunction", "SobolevFunction", "lp_norm", "sobolev_norm",
    "LasotaProblem", "decay_rate_experiment", "hypercyclicity_check", "lasota_semigroup",
    "lasota_threshold", "stability_vs_hypercyclicity",
    "Domain", "Multiplier", "ProblemError", "ProblemSpec", "Tolerances", "VectorField",
    "partition_domain", "validate_hypotheses",
    "escape_time", "flow", "flow_jacobian", "image_indicator", "inverse_flow",
    "HypothesisError", "classify_stability_sobolev",
    "NotASemigroupError", "classify", "classify_stability_1d", "classify_stability_general",
    "classify_stability_rho1", "stability_integral",
    "WeightEvolution", "time_grid",
]
