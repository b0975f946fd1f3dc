from flask import Blueprint, current_app, jsonify, request

from . import __version__
from .core import (
    ApplicabilityError,
    FeasibilityError,
    Preference,
    UnknownMechanismError,
    ValidationError,
    partition_counts,
    social_utility,
)
from .extensions import cache
from .harness import adversarial_search, search_result_to_dict
from .helpers import (
    format_rational,
    instance_digest,
    instance_from_dict,
    outcome_to_dict,
    parse_rational,
    rational_field,
)
from .mechanisms import get_mechanism, registered_mechanisms
from .opt import brute_force_opt, optimal_placement, welfare_upper_bound
from .reports import (
    instance_check_to_dict,
    opt_result_to_dict,
    probe_report_to_dict,
    ratio_report_to_dict,
    sp_violation_to_dict,
)
from .verification import (
    approximation_ratio,
    check_group_strategyproof,
    check_strategyproof,
    default_misreports,
    run_deterministic_probe,
    run_randomized_probe,
    verify_instance,
)

api_bp = Blueprint("api", __name__)


def _error(message: str, status: int, **extra):
    return jsonify({"success": False, "error": message, **extra}), status


@api_bp.errorhandler(ValidationError)
def _validation_error(e):
    return _error(str(e), 400, violations=getattr(e, "violations", []))


@api_bp.errorhandler(ApplicabilityError)
def _applicability_error(e):
    return _error(str(e), 422)


@api_bp.errorhandler(FeasibilityError)
def _feasibility_error(e):
    return _error(str(e), 422)


@api_bp.errorhandler(UnknownMechanismError)
def _unknown_mechanism(e):
    return _error(str(e), 404)


def _payload() -> dict:
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise ValidationError("request body must be a JSON object")
    return data


def _instance_from(data: dict):
    if "instance" not in data:
        raise ValidationError("missing 'instance'")
    instance = instance_from_dict(data["instance"])
    limit = int(current_app.config.get("MAX_AGENTS", 500))
    if instance.n > limit:
        raise ValidationError(f"instance has {instance.n} agents; limit is {limit}")
    return instance


def _group_check_allowed(instance) -> bool:
    return instance.n <= int(current_app.config.get("SP_GROUP_MAX_AGENTS", 12))


def _cached_opt(instance):
    key = f"opt:{instance_digest(instance)}"
    hit = cache.get(key)
    if hit is not None:
        return hit
    result = optimal_placement(instance)
    cache.set(key, result)
    return result


@api_bp.route("/status")
def api_status():
    return jsonify(
        {
            "version": __version__,
            "mechanisms": [m.id for m in registered_mechanisms()],
        }
    )


@api_bp.route("/mechanisms")
def api_mechanisms():
    items = [
        {
            "id": m.id,
            "kind": m.kind,
            "zero_distance_only": m.zero_distance_only,
            "anonymous": m.anonymous,
            "description": m.description,
        }
        for m in registered_mechanisms()
    ]
    return jsonify({"items": items, "count": len(items)})


@api_bp.route("/eval", methods=["POST"])
def api_eval():
    data = _payload()
    instance = _instance_from(data)
    mech = get_mechanism(str(data.get("mechanism", "")))
    outcome = mech(instance)
    return jsonify(
        {
            "success": True,
            "mechanism": mech.id,
            "outcome": outcome_to_dict(outcome),
            "social_utility": rational_field(social_utility(instance, outcome)),
        }
    )


@api_bp.route("/opt", methods=["POST"])
def api_opt():
    data = _payload()
    instance = _instance_from(data)
    opt = _cached_opt(instance)
    counts = partition_counts(instance)
    body = {
        "success": True,
        **opt_result_to_dict(opt),
        "upper_bound": rational_field(welfare_upper_bound(instance)),
        "partition": dict(zip(("n1", "n2", "both", "only1", "only2"), counts.as_tuple())),
    }
    resolution = data.get("resolution")
    if resolution is not None:
        try:
            m = max(1, min(int(resolution), 1000))
        except Exception:
            raise ValidationError("resolution must be an integer") from None
        grid = brute_force_opt(
            instance, m, include_vertices=bool(data.get("include_vertices", True))
        )
        body["grid"] = {"resolution": m, **opt_result_to_dict(grid)}
    return jsonify(body)


@api_bp.route("/ratio", methods=["POST"])
def api_ratio():
    data = _payload()
    instance = _instance_from(data)
    report = approximation_ratio(str(data.get("mechanism", "")), instance)
    return jsonify({"success": True, **ratio_report_to_dict(report)})


@api_bp.route("/verify", methods=["POST"])
def api_verify():
    data = _payload()
    instance = _instance_from(data)
    ids = data.get("mechanisms") or ["M1", "M2", "M3", "M4"]
    grid = int(current_app.config.get("GRID_DENSITY", 32))
    group_max = int(current_app.config.get("SP_GROUP_MAX", 2))
    misreports = default_misreports(instance, grid)
    results = []
    group_allowed = _group_check_allowed(instance)
    if not group_allowed:
        current_app.logger.info(
            "[verify] %d agents exceeds the group check limit; unilateral checks only", instance.n
        )
    for mech_id in ids:
        mech = get_mechanism(str(mech_id))
        group = group_allowed and not mech.deterministic
        check = verify_instance(
            mech,
            instance,
            misreports=misreports,
            group=group,
            max_coalition=group_max,
        )
        body = instance_check_to_dict(check)
        body["group_checked"] = group and not check.skipped
        results.append(body)
    passed = all(r["passed"] for r in results)
    return jsonify({"success": True, "passed": passed, "results": results})


@api_bp.route("/sp", methods=["POST"])
def api_sp():
    data = _payload()
    instance = _instance_from(data)
    mech = get_mechanism(str(data.get("mechanism", "")))
    raw = data.get("misreports")
    misreports = (
        [parse_rational(str(x)) for x in raw]
        if isinstance(raw, list)
        else default_misreports(instance, int(current_app.config.get("GRID_DENSITY", 32)))
    )
    violations = check_strategyproof(mech, instance, misreports)
    body = {
        "success": True,
        "mechanism": mech.id,
        "violations": [sp_violation_to_dict(v) for v in violations],
    }
    if data.get("group"):
        if not _group_check_allowed(instance):
            limit = current_app.config.get("SP_GROUP_MAX_AGENTS", 12)
            return _error(f"group check is limited to {limit} agents", 400)
        group = check_group_strategyproof(
            mech, instance, max_coalition=int(current_app.config.get("SP_GROUP_MAX", 2))
        )
        body["group_violations"] = len(group)
    return jsonify(body)


@api_bp.route("/probe/<kind>/<mech_id>")
def api_probe(kind: str, mech_id: str):
    mech = get_mechanism(mech_id)
    if kind not in ("det", "rand"):
        return _error("probe kind must be 'det' or 'rand'", 400)
    key = f"probe:{kind}:{mech.id}"
    cached = cache.get(key)
    if cached is not None:
        return jsonify(cached)
    if kind == "det":
        report = run_deterministic_probe(mech)
    else:
        report = run_randomized_probe(mech)
    body = {"success": True, **probe_report_to_dict(report)}
    cache.set(key, body)
    return jsonify(body)


@api_bp.route("/search", methods=["POST"])
def api_search():
    data = _payload()
    mech = get_mechanism(str(data.get("mechanism", "")))
    d = parse_rational(str(data.get("d", "0")))
    profile = data.get("profile")
    prefs = [Preference.from_label(str(p)) for p in profile] if profile else None
    try:
        n = max(0, min(int(data.get("n", 2)), int(current_app.config["MAX_AGENTS"])))
    except Exception:
        n = 2
    try:
        budget = max(1, min(int(data.get("budget", 1000)), int(current_app.config["MAX_BUDGET"])))
    except Exception:
        budget = 1000
    try:
        seed = max(0, int(data.get("seed", 0)))
    except Exception:
        seed = 0
    current_app.logger.info(
        "[api] search %s n=%d d=%s budget=%d seed=%d", mech.id, n, format_rational(d), budget, seed
    )
    result = adversarial_search(
        mech, n, d, profile=prefs, budget=budget, seed=seed,
        m=int(current_app.config.get("GRID_DENSITY", 32)),
    )
    return jsonify({"success": True, **search_result_to_dict(result)})
