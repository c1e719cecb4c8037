"""Shooting from the end, region scans and the boundary of the complete region."""

from .ends import (
    AsymptoticCoefficients,
    BackwardResult,
    EndConditions,
    EndSeed,
    backward_box_radius,
    backward_contraction_rate,
    end_grid,
    end_seed,
    end_seed_state,
    shoot_backward,
)
from .scan import (
    BoundaryPoint,
    Cell,
    ClassificationMap,
    ComparisonReport,
    boundary_curve,
    boundary_curve_many,
    classify_with_escalation,
    comparison_order,
    default_bracket,
    guaranteed_complete,
    guaranteed_incomplete,
    scan_region,
    sup_H,
)

__all__ = [
    "AsymptoticCoefficients",
    "BackwardResult",
    "EndConditions",
    "EndSeed",
    "backward_box_radius",
    "backward_contraction_rate",
    "end_grid",
    "end_seed",
    "end_seed_state",
    "shoot_backward",
    "BoundaryPoint",
    "Cell",
    "ClassificationMap",
    "ComparisonReport",
    "boundary_curve",
    "boundary_curve_many",
    "classify_with_escalation",
    "comparison_order",
    "default_bracket",
    "guaranteed_complete",
    "guaranteed_incomplete",
    "scan_region",
    "sup_H",
]
