"""Half-space renormalization toolkit.

Heat kernels with walls, regularized propagators, forest enumeration with
weight-factor estimates, and one-loop renormalization flows for bulk and
surface correlation objects.
"""

from .kernels import (BoundaryKind, KernelContext, KernelQuery, Wall, bulk,
                      star_kernel, surface_kernel)
from .propagators import (CutoffPair, Part, PropagatorQuery, cdot,
                          closed_form_propagator, flowing_propagator,
                          propagator_derivative)
from .forests import enumerate_forests
from .weights import (LineParams, Scales, WeightQuery, global_weight_factor,
                      integrated_weight_factor, weight_factor)
from .flow import (CorrelationObject, CountertermSet, GridSpec,
                   TestFunctionSpec, amputation_comparison,
                   dirichlet_surface_check, extract_relevant_terms,
                   integrate_bulk_tadpole, integrate_surface_tadpole,
                   one_loop_four_point, power_counting_probe,
                   robin_dirichlet_limit, tree_level_init)

__version__ = "0.1.0"

__all__ = [
    "BoundaryKind", "KernelContext", "KernelQuery", "Wall", "bulk",
    "star_kernel", "surface_kernel",
    "CutoffPair", "Part", "PropagatorQuery", "cdot",
    "closed_form_propagator", "flowing_propagator", "propagator_derivative",
    "enumerate_forests",
    "LineParams", "Scales", "WeightQuery", "global_weight_factor",
    "integrated_weight_factor", "weight_factor",
    "CorrelationObject", "CountertermSet", "GridSpec", "TestFunctionSpec",
    "amputation_comparison", "dirichlet_surface_check",
    "extract_relevant_terms", "integrate_bulk_tadpole",
    "integrate_surface_tadpole", "one_loop_four_point",
    "power_counting_probe", "robin_dirichlet_limit", "tree_level_init",
    "__version__",
]
