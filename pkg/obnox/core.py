"""Exact domain model for two-obnoxious-facility location on [0, 1].

Every quantity is a ``fractions.Fraction``. Instances, placements and
lotteries are immutable, so all functions here are pure and safe to call
from any number of workers.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class ObnoxError(Exception):
    """Base error for the package."""


class ValidationError(ObnoxError, ValueError):
    """Malformed input: rationals, instances, lotteries, configs."""

    def __init__(self, message: str, violations: Sequence[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


class FeasibilityError(ObnoxError):
    """A placement violates the minimum distance constraint."""


class ApplicabilityError(ObnoxError):
    """A mechanism or probe cannot run on the given input."""


class UnknownMechanismError(ObnoxError, KeyError):
    """No mechanism registered under the requested id."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown mechanism"


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise ValidationError(f"refusing inexact value {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        # Local import keeps helpers free to import core.
        from .helpers import parse_rational

        return parse_rational(value)
    raise ValidationError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True, order=True)
class Preference:
    p1: int
    p2: int

    def __post_init__(self):
        # (0,0) stays representable so validate_instance can report it.
        if self.p1 not in (0, 1) or self.p2 not in (0, 1):
            raise ValidationError(f"preference ({self.p1},{self.p2}) must be bits")

    @property
    def both(self) -> bool:
        return self.p1 == 1 and self.p2 == 1

    def label(self) -> str:
        return f"{self.p1}{self.p2}"

    @classmethod
    def from_label(cls, label: str) -> "Preference":
        text = label.strip().strip("()").replace(",", "")
        if len(text) != 2 or any(ch not in "01" for ch in text):
            raise ValidationError(f"bad preference label {label!r}")
        return cls(int(text[0]), int(text[1]))


ONLY_F1 = Preference(1, 0)
ONLY_F2 = Preference(0, 1)
BOTH = Preference(1, 1)
ALL_PREFERENCES = (ONLY_F1, ONLY_F2, BOTH)


@dataclass(frozen=True)
class Agent:
    x: Fraction
    p: Preference

    def moved_to(self, x: Fraction) -> "Agent":
        return replace(self, x=x)


@dataclass(frozen=True, order=True)
class Placement:
    y1: Fraction
    y2: Fraction

    @property
    def separation(self) -> Fraction:
        return abs(self.y1 - self.y2)

    def reflected(self) -> "Placement":
        return Placement(ONE - self.y1, ONE - self.y2)

    def __str__(self) -> str:
        return f"({self.y1}, {self.y2})"


def placement(y1, y2) -> Placement:
    return Placement(as_fraction(y1), as_fraction(y2))


@dataclass(frozen=True)
class Lottery:
    """Finite-support distribution over placements, kept in canonical order."""

    support: tuple[tuple[Placement, Fraction], ...]

    def __post_init__(self):
        if not self.support:
            raise ValidationError("lottery support is empty")
        seen: set[Placement] = set()
        total = ZERO
        for pl, prob in self.support:
            if prob < 0:
                raise ValidationError(f"negative probability {prob} at {pl}")
            if pl in seen:
                raise ValidationError(f"duplicate placement {pl} in lottery")
            seen.add(pl)
            total += prob
        if total != ONE:
            raise ValidationError(f"lottery probabilities sum to {total}, not 1")
        ordered = tuple(sorted(self.support, key=lambda item: item[0]))
        object.__setattr__(self, "support", ordered)

    @classmethod
    def of(cls, items: Iterable[tuple[Placement, Fraction]]) -> "Lottery":
        return cls(tuple((pl, as_fraction(prob)) for pl, prob in items))

    @classmethod
    def point(cls, pl: Placement) -> "Lottery":
        return cls(((pl, ONE),))

    def placements(self) -> list[Placement]:
        return [pl for pl, _ in self.support]

    def expectation(self, fn) -> Fraction:
        return sum((prob * fn(pl) for pl, prob in self.support), ZERO)

    def probability(self, predicate) -> Fraction:
        return sum((prob for pl, prob in self.support if predicate(pl)), ZERO)


MechanismOutcome = Union[Placement, Lottery]


def as_lottery(outcome: MechanismOutcome) -> Lottery:
    if isinstance(outcome, Lottery):
        return outcome
    return Lottery.point(outcome)


def is_randomized(outcome: MechanismOutcome) -> bool:
    return isinstance(outcome, Lottery)


@dataclass(frozen=True)
class Instance:
    agents: tuple[Agent, ...] = ()
    d: Fraction = ZERO
    _checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self._checked:
            violations = validate_instance(self)
            if violations:
                raise ValidationError(
                    "invalid instance: " + "; ".join(violations), violations
                )

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def locations(self) -> tuple[Fraction, ...]:
        return tuple(a.x for a in self.agents)

    @property
    def preferences(self) -> tuple[Preference, ...]:
        return tuple(a.p for a in self.agents)

    @classmethod
    def unchecked(cls, agents: Iterable[Agent], d) -> "Instance":
        """Build without validation, for reporting violations."""
        return cls(tuple(agents), d, _checked=False)

    def with_location(self, index: int, x: Fraction) -> "Instance":
        agents = list(self.agents)
        agents[index] = agents[index].moved_to(x)
        return Instance(tuple(agents), self.d)

    def with_locations(self, xs: Sequence[Fraction]) -> "Instance":
        if len(xs) != self.n:
            raise ValidationError(f"expected {self.n} locations, got {len(xs)}")
        return Instance(
            tuple(a.moved_to(x) for a, x in zip(self.agents, xs)), self.d
        )

    def with_d(self, d: Fraction) -> "Instance":
        return Instance(self.agents, as_fraction(d))

    def reflected(self) -> "Instance":
        return Instance(tuple(a.moved_to(ONE - a.x) for a in self.agents), self.d)


def make_instance(xs: Sequence, prefs: Sequence, d=0) -> Instance:
    """Build an instance from plain locations and (p1, p2) pairs or labels."""
    if len(xs) != len(prefs):
        raise ValidationError("locations and preferences differ in length")
    agents = []
    for x, p in zip(xs, prefs):
        if isinstance(p, Preference):
            pref = p
        elif isinstance(p, str):
            pref = Preference.from_label(p)
        else:
            pref = Preference(int(p[0]), int(p[1]))
        agents.append(Agent(as_fraction(x), pref))
    return Instance(tuple(agents), as_fraction(d))


def validate_instance(instance: Instance) -> list[str]:
    """Return every violated invariant; an empty list means the instance is ok."""
    violations: list[str] = []
    d = instance.d
    if not isinstance(d, Fraction):
        violations.append(f"d {d!r} is not a rational")
    elif not ZERO <= d <= ONE:
        violations.append(f"d {d} out of [0,1]")
    for i, agent in enumerate(instance.agents):
        x = agent.x
        if not isinstance(x, Fraction):
            violations.append(f"location {x!r} is not a rational at index {i}")
        elif not ZERO <= x <= ONE:
            violations.append(f"location out of [0,1] at index {i}")
        p = agent.p
        if p.p1 + p.p2 < 1:
            violations.append(f"preference (0,0) forbidden at index {i}")
    return violations


def check_feasible(pl: Placement, d: Fraction) -> None:
    for y in (pl.y1, pl.y2):
        if not ZERO <= y <= ONE:
            raise FeasibilityError(f"facility at {y} lies outside [0,1]")
    if pl.separation < d:
        raise FeasibilityError(
            f"placement {pl} has separation {pl.separation} < d={d}"
        )


def agent_utility(agent: Agent, pl: Placement) -> Fraction:
    return agent.p.p1 * abs(agent.x - pl.y1) + agent.p.p2 * abs(agent.x - pl.y2)


def expected_agent_utility(agent: Agent, outcome: MechanismOutcome) -> Fraction:
    if isinstance(outcome, Placement):
        return agent_utility(agent, outcome)
    return outcome.expectation(lambda pl: agent_utility(agent, pl))


def placement_social_utility(instance: Instance, pl: Placement) -> Fraction:
    """Social utility of a single placement, without the feasibility check."""
    return sum((agent_utility(a, pl) for a in instance.agents), ZERO)


def social_utility(instance: Instance, outcome: MechanismOutcome) -> Fraction:
    lottery = as_lottery(outcome)
    for pl in lottery.placements():
        check_feasible(pl, instance.d)
    return lottery.expectation(lambda pl: placement_social_utility(instance, pl))


@dataclass(frozen=True)
class PartitionCounts:
    n1: int
    n2: int
    both: int
    only1: int
    only2: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.n1, self.n2, self.both, self.only1, self.only2)

    @property
    def n(self) -> int:
        return self.only1 + self.only2 + self.both


def partition_counts(instance: Instance) -> PartitionCounts:
    only1 = only2 = both = 0
    for agent in instance.agents:
        if agent.p.both:
            both += 1
        elif agent.p.p1:
            only1 += 1
        else:
            only2 += 1
    return PartitionCounts(
        n1=only1 + both, n2=only2 + both, both=both, only1=only1, only2=only2
    )


def is_left(x: Fraction) -> bool:
    """Location in the closed left half [0, 1/2]."""
    return x <= HALF
