"""JSON-ready dicts for verification results, shared by the CLI and the API."""

from __future__ import annotations

from typing import Any

from .helpers import (
    format_ratio,
    format_rational,
    instance_to_dict,
    outcome_to_dict,
    placement_to_dict,
    rational_field,
)
from .opt import OptResult
from .verification import (
    GroupSpViolation,
    InstanceCheck,
    KnownBound,
    ProbeReport,
    RatioReport,
    SpViolation,
)


def _optional(q) -> dict[str, str] | None:
    return None if q is None else rational_field(q)


def ratio_report_to_dict(report: RatioReport) -> dict[str, Any]:
    return {
        "mechanism": report.mechanism,
        "instance_digest": report.instance_digest,
        "outcome": outcome_to_dict(report.outcome),
        "mechanism_value": rational_field(report.mechanism_value),
        "opt_placement": placement_to_dict(report.opt_placement),
        "opt_value": rational_field(report.opt_value),
        "ratio": rational_field(report.ratio),
    }


def opt_result_to_dict(result: OptResult) -> dict[str, Any]:
    return {
        "placement": placement_to_dict(result.placement),
        "value": rational_field(result.value),
        "candidates_evaluated": result.candidates_evaluated,
    }


def sp_violation_to_dict(v: SpViolation) -> dict[str, Any]:
    return {
        "agent": v.agent,
        "true_location": format_rational(v.true_location),
        "misreport": format_rational(v.misreport),
        "truthful_utility": format_rational(v.truthful_utility),
        "misreport_utility": format_rational(v.misreport_utility),
        "gain": format_rational(v.gain),
    }


def group_violation_to_dict(v: GroupSpViolation) -> dict[str, Any]:
    return {
        "coalition": list(v.coalition),
        "misreports": [format_rational(x) for x in v.misreports],
        "truthful_utilities": [format_rational(u) for u in v.truthful_utilities],
        "misreport_utilities": [format_rational(u) for u in v.misreport_utilities],
    }


def instance_check_to_dict(check: InstanceCheck) -> dict[str, Any]:
    return {
        "mechanism": check.mechanism,
        "instance_digest": check.instance_digest,
        "passed": check.passed,
        "skipped": check.skipped,
        "ratio": _optional(check.ratio),
        "cap": _optional(check.cap),
        "cap_ok": check.cap_ok,
        "bound_ok": check.bound_ok,
        "guarantee_ok": check.guarantee_ok,
        "sp_violations": [sp_violation_to_dict(v) for v in check.sp_violations],
        "group_violations": [group_violation_to_dict(v) for v in check.group_violations],
    }


def probe_report_to_dict(report: ProbeReport) -> dict[str, Any]:
    body: dict[str, Any] = {
        "mechanism": report.mechanism,
        "kind": report.kind,
        "ratio": rational_field(report.ratio),
        "universal_bound": format_rational(report.universal_bound),
        "meets_bound": report.meets_bound,
        "steps": [
            {
                "label": step.label,
                "instance": instance_to_dict(step.instance),
                "outcome": outcome_to_dict(step.outcome),
                "ratio": format_ratio(step.ratio),
            }
            for step in report.steps
        ],
    }
    if report.q is not None:
        body["q"] = format_rational(report.q)
        body["implied_bound"] = rational_field(report.implied_bound)
    return body


def known_bound_to_dict(bound: KnownBound) -> dict[str, str]:
    return {
        "mechanism": bound.mechanism,
        "setting": bound.setting,
        "kind": bound.kind,
        "upper_bound": format_rational(bound.upper_bound),
        "universal_lower_bound": format_rational(bound.universal_lower_bound),
    }
