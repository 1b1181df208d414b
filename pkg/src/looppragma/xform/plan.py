"""Planned transformations, the policy table and per-directive reports."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from ..deps import DISPROVEN, PROVEN, UNKNOWN, Verdict
from ..diagnostics import Level
from ..frontend.directive import Directive, Policy

PROCEED, SKIP, ABORT = "proceed", "skip", "abort"
APPLIED, SKIPPED, ERROR, RECORDED = "applied", "skipped", "error", "recorded"

# transformations that may change the relative order of statement instances
REORDERING = frozenset({"interchange", "tile", "reverse", "fuse", "distribute",
                        "reorder", "unrollandjam"})


@dataclass(frozen=True)
class PlannedTransform:
    kind: str
    targets: tuple[tuple[int, ...], ...]
    params: dict[str, Any] = field(default_factory=dict, compare=False)
    policy: Policy = Policy()
    names: tuple[str, ...] = ()


def apply_policy(verdict: Verdict | str, policy: Policy) -> tuple[str, Level]:
    """Decision and diagnostic level for a legality verdict under a clause policy."""
    status = verdict.status if isinstance(verdict, Verdict) else verdict
    if policy.suggest_only:
        return SKIP, Level.INFO if status == PROVEN else Level.WARNING
    if policy.assume_safety or status == PROVEN:
        return PROCEED, Level.INFO
    if policy.abort_on_failure:
        return ABORT, Level.ERROR
    return SKIP, Level.WARNING


@dataclass
class TransformReport:
    directive: Directive
    outcome: str
    verdict: str | None = None
    reason: str = ""
    witness: str | None = None
    names: tuple[str, ...] = ()
    level: Level = Level.INFO

    @property
    def kind(self) -> str:
        return self.directive.kind

    def line_text(self) -> str:
        loc = self.directive.location
        verdict = f" [{self.verdict}]" if self.verdict else ""
        names = f" names({', '.join(self.names)})" if self.names else ""
        reason = f": {self.reason}" if self.reason else ""
        witness = f" (witness {self.witness})" if self.witness else ""
        return f"{loc}: {self.level.value}: {self.kind} {self.outcome}{verdict}{names}{reason}{witness}"

    def record(self) -> dict:
        return {
            "file": self.directive.file,
            "line": self.directive.line,
            "kind": self.kind,
            "directive": self.directive.text(),
            "policy": self.directive.policy.switches(),
            "verdict": self.verdict,
            "outcome": self.outcome,
            "reason": self.reason,
            "witness": self.witness,
            "names_introduced": list(self.names),
        }


def reports_text(reports: list[TransformReport]) -> str:
    return "\n".join(r.line_text() for r in reports)


def reports_json(reports: list[TransformReport]) -> str:
    return json.dumps([r.record() for r in reports], indent=2)


__all__ = ["PlannedTransform", "TransformReport", "apply_policy", "reports_text", "reports_json",
           "PROCEED", "SKIP", "ABORT", "APPLIED", "SKIPPED", "ERROR", "RECORDED", "REORDERING",
           "PROVEN", "UNKNOWN", "DISPROVEN"]
