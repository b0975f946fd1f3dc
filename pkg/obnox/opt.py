"""Optimal social utility.

Social utility is a sum of convex functions of (y1, y2), so over each convex
piece of the feasible region its maximum sits at a vertex. The exact solver
enumerates those vertices; the grid oracle checks it independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .core import (
    ONE,
    ZERO,
    Instance,
    Placement,
    ValidationError,
    partition_counts,
    placement_social_utility,
)


@dataclass(frozen=True)
class OptResult:
    placement: Placement
    value: Fraction
    candidates_evaluated: int


def feasible_vertices(d: Fraction) -> list[Placement]:
    if not ZERO <= d <= ONE:
        raise ValidationError(f"d {d} out of [0,1]")
    if d == 0:
        points = [(ZERO, ZERO), (ZERO, ONE), (ONE, ZERO), (ONE, ONE)]
    else:
        # Two triangles: y2 >= y1 + d and y1 >= y2 + d.
        points = [
            (ZERO, d),
            (ZERO, ONE),
            (ONE - d, ONE),
            (d, ZERO),
            (ONE, ZERO),
            (ONE, ONE - d),
        ]
    return sorted({Placement(y1, y2) for y1, y2 in points})


def _best(candidates, instance: Instance) -> tuple[Placement, Fraction, int]:
    best_pl = None
    best_val = None
    count = 0
    # Candidates arrive sorted, so a strict improvement keeps the lexicographic smallest.
    for pl in candidates:
        count += 1
        val = placement_social_utility(instance, pl)
        if best_val is None or val > best_val:
            best_pl, best_val = pl, val
    return best_pl, best_val, count


def optimal_placement(instance: Instance) -> OptResult:
    pl, val, count = _best(feasible_vertices(instance.d), instance)
    return OptResult(placement=pl, value=val, candidates_evaluated=count)


def optimal_value(instance: Instance) -> Fraction:
    return optimal_placement(instance).value


def _grid_profile(instance: Instance, m: int, scale: int, facility: int) -> list[int]:
    """Scaled sum of distances from the affected agents to k/m, for k = 0..m."""
    xs = [
        a.x for a in instance.agents if (a.p.p1 if facility == 1 else a.p.p2)
    ]
    scaled = [x.numerator * (scale // x.denominator) for x in xs]
    step = scale // m
    return [sum(abs(k * step - sx) for sx in scaled) for k in range(m + 1)]


def brute_force_opt(
    instance: Instance, resolution: int, include_vertices: bool = True
) -> OptResult:
    """Exhaustive search over the k/m grid, optionally with the vertex set added.

    Social utility separates into g1(y1) + g2(y2), so both profiles are
    tabulated once in integers over a common denominator and every feasible
    grid pair is scored by one integer addition.
    """
    m = int(resolution)
    if m < 1:
        raise ValidationError(f"resolution must be >= 1, got {resolution}")
    d = instance.d
    scale = lcm(m, *(a.x.denominator for a in instance.agents))
    g1 = _grid_profile(instance, m, scale, 1)
    g2 = _grid_profile(instance, m, scale, 2)

    best_key = None
    best_val = None
    count = 0
    for k in range(m + 1):
        for l in range(m + 1):
            # |k - l| / m >= d, in integers.
            if abs(k - l) * d.denominator < d.numerator * m:
                continue
            count += 1
            val = g1[k] + g2[l]
            if best_val is None or val > best_val:
                best_val, best_key = val, (k, l)

    best_pl = None
    best_frac = None
    if best_key is not None:
        best_pl = Placement(Fraction(best_key[0], m), Fraction(best_key[1], m))
        best_frac = Fraction(best_val, scale)

    if include_vertices:
        for pl in feasible_vertices(d):
            count += 1
            val = placement_social_utility(instance, pl)
            if best_frac is None or val > best_frac or (val == best_frac and pl < best_pl):
                best_pl, best_frac = pl, val

    if best_pl is None:
        raise ValidationError(f"no grid point at resolution {m} satisfies d={d}")
    return OptResult(placement=best_pl, value=best_frac, candidates_evaluated=count)


def welfare_upper_bound(instance: Instance) -> Fraction:
    """n + (1 - d) * |N1 ∩ N2|; at d = 0 this is n + |N1 ∩ N2|."""
    counts = partition_counts(instance)
    return instance.n + (ONE - instance.d) * counts.both
