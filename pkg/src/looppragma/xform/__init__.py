"""Loop transformations, their scheduling and the policy gate."""
from .engine import ApplyResult, Engine, apply_all
from .plan import (ABORT, APPLIED, ERROR, PROCEED, RECORDED, SKIP, SKIPPED, PlannedTransform,
                   TransformReport, apply_policy, reports_json, reports_text)
from . import transforms

__all__ = ["ApplyResult", "Engine", "apply_all", "PlannedTransform", "TransformReport",
           "apply_policy", "reports_json", "reports_text", "transforms", "ABORT", "APPLIED",
           "ERROR", "PROCEED", "RECORDED", "SKIP", "SKIPPED"]
