"""Strategyproof mechanisms and the registry used for CLI/API dispatch.

A mechanism is a pure function from a reported instance to an outcome.
Randomized mechanisms return the whole lottery, never a sample.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    HALF,
    ONE,
    ZERO,
    ApplicabilityError,
    Instance,
    Lottery,
    MechanismOutcome,
    Placement,
    UnknownMechanismError,
    is_left,
    partition_counts,
)

logger = logging.getLogger(__name__)

QUARTER = Fraction(1, 4)


@dataclass(frozen=True)
class Mechanism:
    id: str
    evaluate: Callable[[Instance], MechanismOutcome]
    deterministic: bool
    zero_distance_only: bool = False
    anonymous: bool = True
    description: str = ""

    def __call__(self, instance: Instance) -> MechanismOutcome:
        return self.evaluate(instance)

    def applicable(self, instance: Instance) -> bool:
        return not (self.zero_distance_only and instance.d != 0)

    @property
    def kind(self) -> str:
        return "deterministic" if self.deterministic else "randomized"


_REGISTRY: dict[str, Mechanism] = {}


def register_mechanism(
    mech_id: str,
    *,
    deterministic: bool,
    zero_distance_only: bool = False,
    anonymous: bool = True,
    description: str = "",
    replace: bool = False,
):
    """Decorator registering ``fn(instance) -> outcome`` under ``mech_id``."""

    def decorator(fn: Callable[[Instance], MechanismOutcome]):
        key = mech_id.upper()
        if key in _REGISTRY and not replace:
            raise ValueError(f"mechanism {key} already registered")
        summary = description or (fn.__doc__ or "").strip().split("\n")[0]
        _REGISTRY[key] = Mechanism(
            id=key,
            evaluate=fn,
            deterministic=deterministic,
            zero_distance_only=zero_distance_only,
            anonymous=anonymous,
            description=summary,
        )
        logger.debug("[registry] registered mechanism %s", key)
        return fn

    return decorator


def get_mechanism(mech_id: str) -> Mechanism:
    try:
        return _REGISTRY[mech_id.strip().upper()]
    except KeyError:
        raise UnknownMechanismError(
            f"unknown mechanism {mech_id!r}; known: {', '.join(sorted(_REGISTRY))}"
        ) from None


def unregister_mechanism(mech_id: str) -> Mechanism | None:
    mech = _REGISTRY.pop(mech_id.strip().upper(), None)
    if mech is not None:
        logger.debug("[registry] removed mechanism %s", mech.id)
    return mech


def registered_mechanisms() -> list[Mechanism]:
    return [_REGISTRY[k] for k in sorted(_REGISTRY)]


def _require_zero_distance(instance: Instance, name: str) -> None:
    if instance.d != 0:
        raise ApplicabilityError(f"{name} requires d = 0, got d = {instance.d}")


def _majority_left(xs) -> bool:
    """Strictly more than half of the given locations lie in [0, 1/2]."""
    xs = list(xs)
    left = sum(1 for x in xs if is_left(x))
    return 2 * left > len(xs)


def mechanism1(instance: Instance) -> Placement:
    """Push each facility to the end opposite its affected majority."""
    _require_zero_distance(instance, "M1")
    ys = []
    for j in (1, 2):
        affected = [a.x for a in instance.agents if (a.p.p1 if j == 1 else a.p.p2)]
        ys.append(ONE if _majority_left(affected) else ZERO)
    return Placement(ys[0], ys[1])


CORNER_LOTTERY = Lottery.of(
    (Placement(y1, y2), QUARTER) for y1 in (ZERO, ONE) for y2 in (ZERO, ONE)
)
OPPOSITE_ENDS_LOTTERY = Lottery.of(
    ((Placement(ZERO, ONE), HALF), (Placement(ONE, ZERO), HALF))
)


def mechanism2(instance: Instance) -> Lottery:
    """Uniform lottery over the four corners of the unit square."""
    _require_zero_distance(instance, "M2")
    return CORNER_LOTTERY


@dataclass(frozen=True)
class M3Branch:
    case: int
    j_star: int
    left: int
    right: int


def mechanism3_branch(instance: Instance) -> M3Branch:
    """Which case and majority side mechanism 3 takes on this instance."""
    counts = partition_counts(instance)
    # Ties in the argmax go to facility 1.
    j_star = 1 if counts.only1 >= counts.only2 else 2
    exclusive = counts.only1 if j_star == 1 else counts.only2
    if counts.both >= exclusive:
        group = [a.x for a in instance.agents if a.p.both]
        case = 1
    else:
        group = [
            a.x
            for a in instance.agents
            if not a.p.both and (a.p.p1 if j_star == 1 else a.p.p2)
        ]
        case = 2
    left = sum(1 for x in group if is_left(x))
    return M3Branch(case=case, j_star=j_star, left=left, right=len(group) - left)


def mechanism3(instance: Instance) -> Placement:
    """Serve the larger preference group; separate by d or by the full interval."""
    branch = mechanism3_branch(instance)
    d = instance.d
    if branch.case == 1:
        star, other = (ONE, ONE - d) if branch.left >= branch.right else (ZERO, d)
    else:
        star, other = (ONE, ZERO) if branch.left >= branch.right else (ZERO, ONE)
    if branch.j_star == 1:
        return Placement(star, other)
    return Placement(other, star)


def mechanism4(instance: Instance) -> Lottery:
    """Facilities at opposite ends, each orientation with probability 1/2."""
    return OPPOSITE_ENDS_LOTTERY


def follow_first_agent(instance: Instance) -> Placement:
    """Negative control: F1 sits on agent 0's report. Not strategyproof."""
    if instance.d > HALF:
        raise ApplicabilityError("negative control requires d <= 1/2")
    if not instance.agents:
        return Placement(ZERO, ONE)
    y1 = instance.agents[0].x
    return Placement(y1, ZERO if y1 >= HALF else ONE)


register_mechanism("M1", deterministic=True, zero_distance_only=True)(mechanism1)
register_mechanism("M2", deterministic=False, zero_distance_only=True)(mechanism2)
register_mechanism("M3", deterministic=True)(mechanism3)
register_mechanism("M4", deterministic=False)(mechanism4)
register_mechanism("NC", deterministic=True, anonymous=False)(follow_first_agent)

BUILTIN_IDS = ("M1", "M2", "M3", "M4")
