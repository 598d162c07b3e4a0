import json
from fractions import Fraction

import numpy as np
import pytest

from wvn.closed_set import validate
from wvn.counterexample import (
    CounterexamplePair,
    NotObstructed,
    SeparationViolated,
    TailExhausted,
    build_counterexample,
    check_lambdas,
    choose_lambdas,
    obstruction_bound,
    separation_check,
)
from wvn.spectra import ess_spectrum_estimate, hausdorff_distance, pairing_decode, set_window, clip_intervals

from conftest import fixture_set

OBSTRUCTED = ["naturals", "unit-interval", "right-half-line", "single-point", "quarter-holes",
              "half-holes-left", "wide-holes", "table-holes", "table-finite"]


def test_quarter_holes_walker():
    lams, direction = choose_lambdas(fixture_set("quarter-holes"), 6)
    assert direction == 1
    assert lams == [2, 5, 11, 23, 47, 95]


def test_naturals_go_negative():
    lams, direction = choose_lambdas(fixture_set("naturals"), 4)
    assert direction == -1
    assert lams == [Fraction(-3, 2), Fraction(-7, 2), Fraction(-15, 2), Fraction(-31, 2)]


def test_positive_direction_preferred():
    # both directions have large holes; the walker takes +inf
    _, direction = choose_lambdas(fixture_set("unit-interval"), 3)
    assert direction == 1


@pytest.mark.parametrize("name", ["reals", "example-a", "example-b", "example-b-geometric"])
def test_no_large_holes(name):
    with pytest.raises(NotObstructed):
        choose_lambdas(fixture_set(name), 3)


def test_finite_table_runs_out():
    # radii above d_M/2 only at finitely many gaps, then the set closes up
    M = validate({"tails": [{"direction": "+inf", "center": {"alpha": 4, "beta": 0, "k0": 1},
                             "radius": {"kind": "table", "table": [1.5, 1.5], "limit": 0}}],
                  "finite_gaps": [["-inf", -10]]})
    assert M.d_M().d_M == 1
    lams, direction = choose_lambdas(M, 3)
    assert direction == -1
    with pytest.raises(TailExhausted):
        _walk_only_positive(M, 3)


def _walk_only_positive(M, K):
    from wvn.counterexample import _walk_positive
    return _walk_positive(M, K, M.d_M().d_M)


@pytest.mark.parametrize("name", OBSTRUCTED)
def test_lambda_conditions_as_numbers(name):
    M = fixture_set(name)
    d = M.d_M().d_M
    lams, direction = choose_lambdas(M, 65)
    frame = [direction * lam for lam in lams]
    assert frame[0] > 1
    assert all(b > 2 * a for a, b in zip(frame, frame[1:]))
    assert all(M.distance(lam) > d / 2 for lam in lams)
    # growth: lambda_k > 2**(k-1) lambda_1 > 2**(k-1)
    assert all(frame[k] > 2 ** k * frame[0] > 2 ** k for k in range(1, 65))


@pytest.mark.parametrize("name", OBSTRUCTED)
def test_separation_for_all_fixtures(name):
    pair = build_counterexample(fixture_set(name), K=64)
    report = separation_check(pair, 64, dense_samples=128)
    assert report.shift_margin == pair.d_M / 4
    assert report.cross_margin > pair.d_M / 4
    assert report.dense_margin > pair.d_M / 4


@pytest.mark.parametrize("kmax", [1, 2, 7, 64])
def test_separation_every_kmax(kmax):
    pair = build_counterexample(fixture_set("table-holes"), K=64)
    assert separation_check(pair, kmax, dense_samples=32).Kmax == kmax


def test_separation_rejects_tampered_pair():
    pair = build_counterexample(fixture_set("quarter-holes"), K=8)
    bad = CounterexamplePair(pair.M, pair.d_M, (pair.lambdas[0], pair.lambdas[0] * 2) + pair.lambdas[2:],
                             pair.direction, pair.A, pair.B)
    with pytest.raises(SeparationViolated) as info:
        check_lambdas(bad)
    assert info.value.witness == (1, 2)


def test_operators_follow_the_formula():
    pair = build_counterexample(fixture_set("half-holes-left"), K=8)
    mu = pair.M.dense_sequence(8)
    for n in range(1, 8):
        k, m = pairing_decode(n)
        if m == 1:
            assert pair.A.eigenvalue(n) == float(pair.lambdas[k - 1])
            assert pair.B.eigenvalue(n) == float(pair.b_value(k))
        else:
            assert pair.A.eigenvalue(n) == pair.B.eigenvalue(n) == mu[k - 1]
    assert pair.B.eigenvalue(1) == float(pair.lambdas[1] - pair.direction * pair.d_M / 4)


def test_A_has_the_right_essential_spectrum():
    pair = build_counterexample(fixture_set("single-point"), K=20)
    est = ess_spectrum_estimate(pair.A.truncation(4096), 0.05, 8)
    assert hausdorff_distance(clip_intervals(est, -20, 20), set_window(pair.M, -20, 20)) < 0.1


def test_single_slot_bound():
    pair = build_counterexample(fixture_set("half-holes-left"), K=4)
    cert = obstruction_bound(pair, (1,))
    assert cert.bottlenecks[0] == abs(float(pair.b_value(1) - pair.lambdas[0]))
    assert cert.bottlenecks[0] >= 0.125


def test_mirrored_bound_is_symmetric():
    M = fixture_set("quarter-holes")
    mirrored = M.negated()
    a = obstruction_bound(build_counterexample(M, K=12), (16, 256, 1024))
    b = obstruction_bound(build_counterexample(mirrored, K=12), (16, 256, 1024))
    assert a.bound == b.bound == Fraction(1, 16)


def test_bound_needs_enough_slots():
    pair = build_counterexample(fixture_set("quarter-holes"), K=8)
    with pytest.raises(ValueError):
        obstruction_bound(pair, (256, 1024))


def test_pair_json_round_trip():
    pair = build_counterexample(fixture_set("naturals"), K=10)
    doc = json.loads(json.dumps(pair.to_json()))
    back = CounterexamplePair.from_json(doc)
    assert back.lambdas == pair.lambdas
    assert np.array_equal(back.A.truncation(300), pair.A.truncation(300))
    doc["truncation_B"][0] += 1
    with pytest.raises(ValueError):
        CounterexamplePair.from_json(doc)


def test_pair_json_checks_d_M():
    doc = build_counterexample(fixture_set("quarter-holes"), K=4).to_json()
    doc["d_M"] = 0.5
    with pytest.raises(ValueError):
        CounterexamplePair.from_json(doc)
