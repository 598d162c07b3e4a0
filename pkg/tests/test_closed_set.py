import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wvn.closed_set import (
    ClosedSetSpec,
    EmptySet,
    Gap,
    MalformedTailRule,
    OverlappingGaps,
    validate,
)

from conftest import FIXTURES, fixture_set

RULE_FIXTURES = [
    "example-b", "example-b-geometric", "quarter-holes", "half-holes-left",
    "wide-holes", "table-holes", "table-finite", "naturals",
]
ALL_FIXTURES = sorted(p.stem for p in FIXTURES.glob("*.json") if p.stem != "empty")


def tail(alpha, beta, k0, kind="constant", direction="+inf", **radius):
    return {"direction": direction, "center": {"alpha": alpha, "beta": beta, "k0": k0},
            "radius": {"kind": kind, **radius}}


# -- oracles -----------------------------------------------------------------

def brute_distance(M, x, radius=3.0, scale=1024):
    """min |x - t| over t in M on the dyadic grid of step 1/scale near x.

    A dyadic grid contains every integer, so isolated integer points of M
    are seen exactly."""
    centre = round(x * scale)
    grid = np.arange(centre - radius * scale, centre + radius * scale + 1) / scale
    inside = [t for t in grid if M.contains(float(t))]
    return min(abs(x - t) for t in inside) if inside else math.inf


def brute_truncated_defect(M, n, lo=-40.0, hi=40.0, steps=8001):
    best = 0.0
    for x in np.linspace(lo, hi, steps):
        if abs(x) > n and not M.contains(float(x)):
            best = max(best, float(M.distance(float(x))))
    return min(best, 1.0)


# -- validate ----------------------------------------------------------------

def test_disjoint_finite_gaps_are_valid():
    M = validate({"finite_gaps": [[0, 1], [2, 3]]})
    assert [(g.lo, g.hi) for g in M.gaps] == [(0, 1), (2, 3)]
    assert M.contains(-5) and M.contains(1.5) and M.contains(10)
    assert not M.contains(0.5) and not M.contains(2.5)


def test_gaps_are_sorted_on_validation():
    M = validate({"finite_gaps": [[2, 3], [0, 1]]})
    assert M.gaps[0] == Gap(Fraction(0), Fraction(1))


def test_whole_line_gap_is_empty_set():
    with pytest.raises(EmptySet):
        validate({"finite_gaps": [["-inf", "+inf"]]})


def test_overlapping_gaps_rejected():
    with pytest.raises(OverlappingGaps):
        validate({"finite_gaps": [[0, 2], [1, 3]]})


def test_touching_gaps_leave_the_shared_endpoint():
    M = validate({"finite_gaps": [[0, 1], [1, 2]]})
    assert M.contains(1)


def test_constant_tail_overlap_is_malformed():
    # k + 0.6 > (k + 1) - 0.6
    with pytest.raises(MalformedTailRule):
        validate({"tails": [tail(1, 0, 1, rho=0.6)]})


@pytest.mark.parametrize("radius, ok", [
    ({"kind": "harmonic", "rho": 1}, False),   # r(1) + r(2) = 1.5 > 1
    ({"kind": "harmonic", "rho": 0.6}, True),  # 0.9 <= 1
    ({"kind": "geometric", "rho": 1, "q": 0.5}, True),  # 0.5 + 0.25
    ({"kind": "geometric", "rho": 2, "q": 0.5}, False),  # 1 + 0.5
    ({"kind": "table", "table": [0.4, 0.7], "limit": 0.1}, False),
    ({"kind": "table", "table": [0.4, 0.5], "limit": 0.5}, True),
    ({"kind": "table", "table": [0.4], "limit": 0.6}, False),
])
def test_tail_disjointness_per_kind(radius, ok):
    doc = {"tails": [{"direction": "+inf", "center": {"alpha": 1, "beta": 0, "k0": 1}, "radius": radius}]}
    if ok:
        validate(doc)
    else:
        with pytest.raises(MalformedTailRule):
            validate(doc)


@pytest.mark.parametrize("doc", [
    {"tails": [tail(0, 0, 1, rho=0.1)]},
    {"tails": [tail(1, 0, 1, kind="geometric", rho=0.1, q=1.5)]},
    {"tails": [tail(1, 0, 0, kind="harmonic", rho=0.1)]},
    {"tails": [tail(1, 0, 1, rho=-0.1)]},
    {"tails": [tail(1, 0, 1, rho=0.1), tail(1, 5, 1, rho=0.1)]},
    {"tails": [{"direction": "+inf"}]},
])
def test_malformed_tails(doc):
    with pytest.raises(MalformedTailRule):
        validate(doc)


def test_tail_must_lie_beyond_finite_gaps():
    with pytest.raises(OverlappingGaps):
        validate({"finite_gaps": [[5, 7]], "tails": [tail(1, 0, 1, rho=0.25)]})
    with pytest.raises(OverlappingGaps):
        validate({"finite_gaps": [[-7, -5]], "tails": [tail(1, 0, 1, rho=0.25, direction="-inf")]})


# -- contains / distance --------------------------------------------------------

def test_contains_examples():
    M = validate({"finite_gaps": [[0, 1]]})
    assert M.contains(0)
    assert not M.contains(0.5)
    N = fixture_set("naturals")
    assert N.contains(3) and not N.contains(3.5) and not N.contains(-1)


def test_distance_examples():
    M = validate({"finite_gaps": [[0, 4]]})
    assert M.distance(1) == 1
    assert M.distance(2) == 2
    H = validate({"finite_gaps": [["-inf", 0]]})
    assert H.distance(-7) == 7


def test_distance_into_tail_gaps():
    Q = fixture_set("quarter-holes")
    assert Q.distance(3) == Fraction(1, 4)
    assert Q.distance(-3.125) == Fraction(1, 8)
    assert Q.distance(2.5) == 0
    B = fixture_set("example-b")
    assert B.distance(5) == Fraction(1, 5)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_distance_matches_grid_oracle(name):
    M = fixture_set(name)
    rng = np.random.default_rng(7)
    for x in rng.uniform(-12, 12, 12):
        got = float(M.distance(float(x)))
        want = brute_distance(M, float(x))
        if want == math.inf:
            assert got > 3.0
        else:
            assert abs(got - want) <= 1e-3 + 1e-9


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_distance_zero_iff_contained(name):
    M = fixture_set(name)
    for x in np.linspace(-20, 20, 801):
        assert (M.distance(float(x)) == 0) == M.contains(float(x))


# -- truncated defect and d_M -------------------------------------------------------

def test_truncated_defect_reals_is_zero():
    R = fixture_set("reals")
    assert all(R.truncated_defect(n) == 0 for n in (0, 1, 1e6))


def test_truncated_defect_single_gap():
    G = validate({"finite_gaps": [[10, 12]]})
    assert G.truncated_defect(0) == 1
    assert G.truncated_defect(20) == 0
    assert G.truncated_defect(11) == 1


def test_truncated_defect_clipped_gap():
    G = validate({"finite_gaps": [[10, "52/5"]]})
    assert G.truncated_defect(Fraction(103, 10)) == Fraction(1, 10)
    F = validate({"finite_gaps": [[10, 10.4]]})
    assert float(F.truncated_defect(10.3)) == pytest.approx(0.1, abs=1e-12)


@pytest.mark.parametrize("name", ["example-a", "unit-interval", "quarter-holes", "table-holes",
                                  "example-b", "half-holes-left"])
@pytest.mark.parametrize("n", [0, 0.3, 2.5, 7, 12.2])
def test_truncated_defect_matches_grid_oracle(name, n):
    M = fixture_set(name)
    want = brute_truncated_defect(M, n)
    got = float(M.truncated_defect(n))
    # grid step is 0.01; an unbounded gap is capped at 1 either way
    assert got == pytest.approx(want, abs=0.011)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_truncated_defect_non_increasing(name):
    M = fixture_set(name)
    values = [M.truncated_defect(n) for n in np.linspace(0, 60, 241)]
    assert all(a >= b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("name, d, holds", [
    ("reals", 0, True),
    ("naturals", 1, False),
    ("example-a", 0, True),
    ("example-b", 0, True),
    ("example-b-geometric", 0, True),
    ("unit-interval", 1, False),
    ("right-half-line", 1, False),
    ("single-point", 1, False),
    ("quarter-holes", Fraction(1, 4), False),
    ("half-holes-left", Fraction(1, 2), False),
    ("wide-holes", 1, False),
    ("table-holes", Fraction(1, 2), False),
    ("table-finite", 1, False),
])
def test_d_M(name, d, holds):
    verdict = fixture_set(name).d_M()
    assert verdict.d_M == d
    assert verdict.holds is holds
    assert verdict.exact


def test_table_with_zero_limit_and_no_unbounded_gap_holds():
    M = validate({"tails": [tail(1, 0, 1, kind="table", table=[0.25, 0.125], limit=0)]})
    assert M.d_M().holds
    assert M.truncated_defect(2) == Fraction(1, 8)
    assert M.truncated_defect(3) == 0


@pytest.mark.parametrize("name", RULE_FIXTURES)
@pytest.mark.parametrize("eps", [Fraction(1, 10), Fraction(1, 10 ** 4), Fraction(1, 10 ** 9)])
def test_defect_threshold_is_a_valid_N_eps(name, eps):
    M = fixture_set(name)
    d = M.d_M().d_M
    start = M.defect_threshold(eps)
    for n in (start, start + Fraction(1, 3), start * 2 + 1, start * 17 + 5):
        assert abs(M.truncated_defect(n) - d) < eps


# -- dense sequence ----------------------------------------------------------------

def test_dense_single_point_repeats():
    assert fixture_set("single-point").dense_sequence(3) == [5, 5, 5]


def test_dense_unit_interval_order():
    assert fixture_set("unit-interval").dense_sequence(3) == [0, 1, 0.5]


def test_dense_naturals_by_magnitude():
    assert fixture_set("naturals").dense_sequence(4) == [0, 1, 2, 3]


def test_dense_is_deterministic():
    M = fixture_set("example-b-geometric")
    assert M.dense_sequence(300) == M.dense_sequence(300)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_dense_points_lie_in_M(name):
    M = fixture_set(name)
    assert all(M.contains(p) for p in M.dense_sequence(400, exact=True))


@pytest.mark.parametrize("name", ["naturals", "example-b", "quarter-holes", "example-a", "table-holes"])
def test_dense_points_approach_gap_endpoints(name):
    M = fixture_set(name)
    pts = M.dense_sequence(400, exact=True)
    endpoints = [e for g in M.gaps for e in (g.lo, g.hi) if not math.isinf(e) and abs(e) < 4]
    for t in (M.plus, M.minus):
        if t is not None:
            for k in range(t.k0, t.k0 + 3):
                g = t.gap(k)
                endpoints += [g.lo, g.hi]
    for p in endpoints:
        assert min(abs(p - q) for q in pts) == 0


def test_dense_fills_interval():
    pts = np.array(fixture_set("unit-interval").dense_sequence(257))
    assert np.max(np.diff(np.sort(pts))) <= 1 / 256


# -- serialization -------------------------------------------------------------------

@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_json_round_trip(name):
    doc = json.loads((FIXTURES / f"{name}.json").read_text())
    M = validate(doc)
    assert M.to_json() == doc
    assert validate(json.loads(json.dumps(M.to_json()))).to_json() == doc


def test_fraction_strings_survive_round_trip():
    doc = {"name": "thirds", "finite_gaps": [["1/3", "2/3"]], "tails": []}
    M = validate(doc)
    assert M.gaps[0].lo == Fraction(1, 3)
    assert M.to_json() == doc


def test_spec_from_json_string():
    spec = ClosedSetSpec.from_json('{"finite_gaps": [[0, 1]]}')
    assert spec.finite_gaps[0].hi == 1


# -- properties -----------------------------------------------------------------------

gap_lists = st.lists(
    st.tuples(st.integers(-40, 40), st.integers(1, 6)), min_size=0, max_size=6
).map(lambda pairs: sorted({lo: w for lo, w in pairs}.items()))


def _disjoint(pairs):
    out, end = [], -math.inf
    for lo, w in pairs:
        lo = Fraction(lo, 2)
        if lo >= end:
            out.append([lo, lo + Fraction(w, 3)])
            end = lo + Fraction(w, 3)
    return out


@settings(max_examples=60, deadline=None)
@given(gap_lists, st.floats(-30, 30, allow_nan=False))
def test_distance_property(pairs, x):
    gaps = _disjoint(pairs)
    M = validate({"finite_gaps": [[str(a), str(b)] for a, b in gaps]})
    d = M.distance(x)
    assert (d == 0) == M.contains(x)
    if d > 0:
        assert M.contains(Fraction(x) - d) or M.contains(Fraction(x) + d)
        assert not M.contains(Fraction(x) - d / 2) and not M.contains(Fraction(x) + d / 2)


@settings(max_examples=60, deadline=None)
@given(gap_lists, st.integers(0, 50), st.integers(0, 50))
def test_truncated_defect_monotone_property(pairs, a, b):
    M = validate({"finite_gaps": [[str(x), str(y)] for x, y in _disjoint(pairs)]})
    lo, hi = sorted((Fraction(a, 2), Fraction(b, 2)))
    assert M.truncated_defect(lo) >= M.truncated_defect(hi)
    assert 0 <= M.d_M().d_M <= 1
