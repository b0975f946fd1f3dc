import hashlib
import json
import math
import os
import re
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any

from .core import (
    Agent,
    Instance,
    Lottery,
    MechanismOutcome,
    Placement,
    Preference,
    ValidationError,
)

RATIONAL_RE = re.compile(r"^(-?\d+)(?:/(\d+))?$")


def parse_rational(text: str) -> Fraction:
    """Parse "a/b" or "a" into a Fraction. Decimal notation is rejected."""
    if not isinstance(text, str):
        raise ValidationError(f"rational must be a string, got {type(text).__name__}")
    m = RATIONAL_RE.match(text.strip())
    if not m:
        raise ValidationError(f"malformed rational {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValidationError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(q: Fraction) -> str:
    return str(q)


def rational_to_decimal(q, digits: int = 12) -> str:
    """Decimal companion for display; never fed back into computation."""
    if isinstance(q, float) and math.isinf(q):
        return "inf"
    q = Fraction(q)
    with localcontext() as ctx:
        ctx.prec = max(50, digits + len(str(abs(q.numerator))) + 5)
        value = Decimal(q.numerator) / Decimal(q.denominator)
        return str(value.quantize(Decimal(1).scaleb(-digits)))


def format_ratio(r) -> str:
    if isinstance(r, float) and math.isinf(r):
        return "inf"
    return format_rational(r)


def parse_rational_list(text: str) -> list[Fraction]:
    items = [t for t in (text or "").split(",") if t.strip()]
    if not items:
        raise ValidationError("expected a comma-separated list of rationals")
    return [parse_rational(t) for t in items]


# --- Instance wire format ---


def instance_to_dict(instance: Instance) -> dict[str, Any]:
    return {
        "d": format_rational(instance.d),
        "agents": [
            {"x": format_rational(a.x), "p": [a.p.p1, a.p.p2]} for a in instance.agents
        ],
    }


def instance_from_dict(data: Any) -> Instance:
    if not isinstance(data, dict):
        raise ValidationError("instance must be a JSON object")
    missing = [k for k in ("d", "agents") if k not in data]
    if missing:
        raise ValidationError(f"instance missing keys: {', '.join(missing)}")
    d = parse_rational(data["d"])
    raw_agents = data["agents"]
    if not isinstance(raw_agents, list):
        raise ValidationError("instance 'agents' must be a list")
    agents = []
    for i, entry in enumerate(raw_agents):
        if not isinstance(entry, dict) or "x" not in entry or "p" not in entry:
            raise ValidationError(f"agent {i} must have 'x' and 'p'")
        p = entry["p"]
        if (
            not isinstance(p, list)
            or len(p) != 2
            or any(type(b) is not int or b not in (0, 1) for b in p)
        ):
            raise ValidationError(f"agent {i} preference must be [0|1, 0|1]")
        agents.append(Agent(parse_rational(entry["x"]), Preference(p[0], p[1])))
    return Instance(tuple(agents), d)


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def loads_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"instance is not valid JSON: {e}") from e
    return instance_from_dict(data)


def load_instance(path: str | Path) -> Instance:
    """Read an instance file. OSError propagates so callers can tell I/O from parse failures."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ValidationError(f"instance file {path} is not UTF-8: {e}") from e
    return loads_instance(text)


def instance_digest(instance: Instance) -> str:
    canonical = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# --- Outcomes ---


def placement_to_dict(pl: Placement) -> dict[str, str]:
    return {"y1": format_rational(pl.y1), "y2": format_rational(pl.y2)}


def outcome_to_dict(outcome: MechanismOutcome) -> dict[str, Any]:
    if isinstance(outcome, Placement):
        return {"type": "placement", **placement_to_dict(outcome)}
    return {
        "type": "lottery",
        "support": [
            {**placement_to_dict(pl), "prob": format_rational(prob)}
            for pl, prob in outcome.support
        ],
    }


def outcome_from_dict(data: dict[str, Any]) -> MechanismOutcome:
    kind = data.get("type")
    if kind == "placement":
        return Placement(parse_rational(data["y1"]), parse_rational(data["y2"]))
    if kind == "lottery":
        return Lottery.of(
            (
                Placement(parse_rational(item["y1"]), parse_rational(item["y2"])),
                parse_rational(item["prob"]),
            )
            for item in data.get("support") or []
        )
    raise ValidationError(f"unknown outcome type {kind!r}")


def rational_field(q) -> dict[str, str]:
    """Exact string plus decimal companion."""
    return {"exact": format_ratio(q), "decimal": rational_to_decimal(q)}


def dumps_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


# --- Environment parsing ---

_TRUTHY = ("1", "true", "yes", "on")


def env_flag(name: str, default: bool = False) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() in _TRUTHY


def env_int(name: str, default: int, minimum: int | None = None) -> int:
    try:
        value = int(os.environ.get(name, str(default)))
    except Exception:
        value = default
    if minimum is not None and value < minimum:
        value = default
    return value
