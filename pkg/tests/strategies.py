"""Hypothesis strategies producing exact rational instances."""

from fractions import Fraction

from hypothesis import strategies as st

from obnox.core import ALL_PREFERENCES, HALF, Agent, Instance, Placement

D_VALUES = [Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(3, 4), Fraction(1)]

locations = st.fractions(min_value=0, max_value=1, max_denominator=12)
left_locations = st.fractions(min_value=0, max_value=HALF, max_denominator=12)
right_locations = st.fractions(min_value=HALF, max_value=1, max_denominator=12).filter(
    lambda x: x > HALF
)


@st.composite
def instances(draw, max_n=6, d=None, min_n=0):
    n = draw(st.integers(min_value=min_n, max_value=max_n))
    agents = tuple(
        Agent(draw(locations), draw(st.sampled_from(ALL_PREFERENCES))) for _ in range(n)
    )
    dist = draw(st.sampled_from(D_VALUES)) if d is None else Fraction(d)
    return Instance(agents, dist)


@st.composite
def same_side_moves(draw, max_n=6, d=None):
    """An instance and a copy with one agent moved within its half of [0, 1]."""
    inst = draw(instances(max_n=max_n, d=d, min_n=1))
    i = draw(st.integers(min_value=0, max_value=inst.n - 1))
    side = left_locations if inst.agents[i].x <= HALF else right_locations
    return inst, inst.with_location(i, draw(side))


def twelfths_placements(d: Fraction) -> list[Placement]:
    """Feasible placements on the k/12 lattice; every value in D_VALUES lies on it."""
    points = [Fraction(k, 12) for k in range(13)]
    return [Placement(y1, y2) for y1 in points for y2 in points if abs(y1 - y2) >= d]
