"""Exact and Monte Carlo tools for exchangeable and multi-exchangeable systems."""

__version__ = "0.1.0"

from .combinatorics import (
    GapBounds,
    Urn,
    check_equality_condition,
    decompose_product_power,
    falling_factorial,
    law_with_replacement,
    law_without_replacement,
    law_without_replacement_from_empirical,
    tv_gap_bounds,
)
from .convergence import LIMIT, ConvergenceReport, SystemFamily, convergence_report, fdd_moment, vector_moment
from .measures import (
    DiscreteMeasure,
    IndexPattern,
    make_measure,
    push_forward_pattern,
    tensor_power,
    tv_distance,
)
from .multiclass import (
    ClassSpec,
    MeasureVector,
    SystemRealization,
    SystemSpec,
    check_multi_exchangeability,
    conditional_resample,
    empirical_measure,
    estimate_directing_measure,
    joint_law_exact,
    measure_vector,
    verify_sufficiency,
    verify_sufficiency_mc,
)
from .sampling import (
    MixtureModel,
    RngStream,
    random_permutation,
    sample_directing_measure,
    sample_iid,
    sample_without_replacement,
)
