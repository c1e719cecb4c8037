"""
g2flow

Numerical construction and classification of G2-instantons on the B7 family
of asymptotically locally conical G2-manifolds.
"""

__version__ = "0.1.0"

from .classify.scan import boundary_curve, scan_region
from .config import RunConfig, settings
from .instanton.flow import flow_instanton
from .instanton.models import InstantonInit, Verdict, VerdictKind
from .metric.b7 import B7Params
from .metric.flow import MetricTrajectory, flow_metric, flow_metric_rescaled
from .taubnut.closed_form import AsdParams, asd_eval, tn_metric

# Make the main entry points available at package level
__all__ = [
    "AsdParams",
    "B7Params",
    "InstantonInit",
    "MetricTrajectory",
    "RunConfig",
    "Verdict",
    "VerdictKind",
    "asd_eval",
    "boundary_curve",
    "flow_instanton",
    "flow_metric",
    "flow_metric_rescaled",
    "scan_region",
    "settings",
    "tn_metric",
]
