"""The non-equivalent pair for sets with a large hole at infinity.

Outliers ``lambda_1 < lambda_2 < ...`` sit deep in the holes (distance to
``M`` above ``d_M / 2``) and at least double each step.  ``A`` puts
``lambda_k`` at slot ``<k, 1>``, ``B`` puts ``lambda_{k+1} - d_M/4`` there,
and both share the dense part ``mu_k`` at slots ``<k, m>``, ``m >= 2``.
Everything about the outliers is kept in exact rationals.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .closed_set import INF, ClosedSet, TailRule, number_to_json, to_fraction, validate
from .equivalence import DEFAULT_CHECKPOINTS, ObstructionCertificate, truncation_hash
from .matching import bottleneck_match
from .spectra import DiagonalOperator, synth_with_ess_spectrum

WIDTH_SLACK = Fraction(1, 10 ** 9)


class NotObstructed(ValueError):
    pass


class TailExhausted(ValueError):
    pass


class SeparationViolated(AssertionError):
    def __init__(self, message: str, witness: tuple):
        super().__init__(message)
        self.witness = witness


def _direction_qualifies(M: ClosedSet, direction: int, width: Fraction) -> bool:
    """Whether holes of half-width above ``width`` recur toward ``direction``."""
    for g in M.gaps:
        if (direction == 1 and g.hi == INF) or (direction == -1 and g.lo == -INF):
            return True
    tail = M.plus if direction == 1 else M.minus
    return tail is not None and tail.limsup_radius > width


def _tail_candidates(tail: TailRule, floor: Fraction, width: Fraction) -> Iterator[Fraction]:
    """Midpoints of tail gaps with half-width > width and midpoint > floor,
    in increasing order.  ``floor`` is re-read through the generator protocol."""
    k = tail.k0
    while tail.has(k):
        jump = math.floor((floor - tail.beta) / tail.alpha) + 1
        k = max(k, jump)
        if not tail.has(k):
            return
        if k >= tail.radius_nonincreasing_from and tail.radius(k) <= width:
            return  # radii never grow again
        if tail.radius(k) > width and tail.center(k) > floor:
            new_floor = yield tail.center(k)
            if new_floor is not None:
                floor = new_floor
        k += 1


def _walk_positive(M: ClosedSet, K: int, d: Fraction) -> list:
    width = d / 2 * (1 + WIDTH_SLACK)
    lambdas: list = []

    def floor():
        return max(Fraction(1), 2 * lambdas[-1]) if lambdas else Fraction(1)

    for g in M.gaps:
        if len(lambdas) == K:
            return lambdas
        if g.hi == INF:
            while len(lambdas) < K:
                base = max(floor(), g.lo + d) if g.lo != -INF else floor()
                lambdas.append(base + Fraction(1, 2))
            return lambdas
        if g.lo == -INF:
            continue
        mid = (g.lo + g.hi) / 2
        if g.half_width > width and mid > floor():
            lambdas.append(mid)
    if len(lambdas) < K and M.plus is not None:
        gen = _tail_candidates(M.plus, floor(), width)
        try:
            lam = next(gen)
            while True:
                lambdas.append(lam)
                if len(lambdas) == K:
                    break
                lam = gen.send(floor())
        except StopIteration:
            pass
    if len(lambdas) < K:
        raise TailExhausted(f"only {len(lambdas)} of {K} outliers fit in {M.name}")
    return lambdas


def choose_lambdas(M: ClosedSet, K: int) -> tuple:
    """``K`` exact outliers and the direction (+1 or -1) they head to."""
    if K < 1:
        raise ValueError("K must be positive")
    d = M.d_M().d_M
    if d == 0:
        raise NotObstructed(f"{M.name} has no large holes at infinity (d_M = 0)")
    width = d / 2 * (1 + WIDTH_SLACK)
    if _direction_qualifies(M, 1, width):
        return _walk_positive(M, K, d), 1
    if _direction_qualifies(M, -1, width):
        return [-lam for lam in _walk_positive(M.negated(), K, d)], -1
    raise TailExhausted(f"no direction of {M.name} has holes wider than d_M")


@dataclass(frozen=True)
class CounterexamplePair:
    M: ClosedSet
    d_M: Fraction
    lambdas: tuple  # exact, real frame, K + 1 of them
    direction: int
    A: DiagonalOperator
    B: DiagonalOperator

    @property
    def K(self) -> int:
        return len(self.lambdas) - 1

    def b_value(self, k: int) -> Fraction:
        """Exact eigenvalue of B at slot ``<k, 1>``."""
        return self.lambdas[k] - self.direction * self.d_M / 4

    def to_json(self, sample: int = 16) -> dict:
        return {
            "set": self.M.to_json(),
            "d_M": number_to_json(self.d_M),
            "direction": "+inf" if self.direction == 1 else "-inf",
            "lambdas": [number_to_json(x) for x in self.lambdas],
            "truncation_A": self.A.truncation(sample).tolist(),
            "truncation_B": self.B.truncation(sample).tolist(),
        }

    @classmethod
    def from_json(cls, doc) -> "CounterexamplePair":
        if isinstance(doc, str):
            doc = json.loads(doc)
        M = validate(doc["set"])
        lambdas = [to_fraction(x) for x in doc["lambdas"]]
        direction = 1 if doc["direction"] in ("+inf", 1, "+") else -1
        pair = _assemble(M, lambdas, direction)
        if pair.d_M != to_fraction(doc["d_M"]):
            raise ValueError(f"stored d_M {doc['d_M']} disagrees with the set ({pair.d_M})")
        for key, op in (("truncation_A", pair.A), ("truncation_B", pair.B)):
            stored = doc.get(key)
            if stored is not None and op.truncation(len(stored)).tolist() != stored:
                raise ValueError(f"{key} does not match the rebuilt operator")
        return pair


def _assemble(M: ClosedSet, lambdas: Sequence[Fraction], direction: int) -> CounterexamplePair:
    d = M.d_M().d_M
    lambdas = tuple(lambdas)
    K = len(lambdas) - 1
    if K < 1:
        raise ValueError("need at least two outliers")
    a_out = list(lambdas[:K])
    b_out = [lam - direction * d / 4 for lam in lambdas[1:]]
    A = synth_with_ess_spectrum(M, a_out, name=f"A[{M.name}]")
    B = synth_with_ess_spectrum(M, b_out, name=f"B[{M.name}]")
    return CounterexamplePair(M, d, lambdas, direction, A, B)


def build_counterexample(M: ClosedSet, K: int = 64) -> CounterexamplePair:
    """A and B with ``K`` outlier slots each (``K + 1`` lambdas are chosen)."""
    lambdas, direction = choose_lambdas(M, K + 1)
    return _assemble(M, lambdas, direction)


def check_lambdas(pair: CounterexamplePair, Kmax: int = None) -> None:
    """Raise unless ``lambda_1 > 1``, ``lambda_{k+1} > 2 lambda_k`` and
    ``dist(lambda_k, M) > d_M / 2`` (in the direction's frame)."""
    lams = [pair.direction * lam for lam in pair.lambdas[:Kmax]]
    if not lams[0] > 1:
        raise SeparationViolated(f"lambda_1 = {lams[0]} is not > 1", (1,))
    for k, (a, b) in enumerate(zip(lams, lams[1:]), start=1):
        if not b > 2 * a:
            raise SeparationViolated(f"lambda_{k + 1} = {b} is not > 2 lambda_{k}", (k, k + 1))
    for k, lam in enumerate(pair.lambdas[:Kmax], start=1):
        if not pair.M.distance(lam) > pair.d_M / 2:
            raise SeparationViolated(f"dist(lambda_{k}, M) is not > d_M/2", (k,))


@dataclass(frozen=True)
class SeparationReport:
    Kmax: int
    shift_margin: Fraction  # min over k = k'+1, should equal d_M/4
    cross_margin: Fraction  # min over k != k'+1
    dense_margin: Fraction  # min |lambda_k - mu| over the dense samples
    dense_samples: int

    def to_json(self) -> dict:
        return {
            "Kmax": self.Kmax,
            "shift_margin": float(self.shift_margin),
            "cross_margin": float(self.cross_margin),
            "dense_margin": float(self.dense_margin),
            "dense_samples": self.dense_samples,
        }


def separation_check(pair: CounterexamplePair, Kmax: int, dense_samples: int = 256) -> SeparationReport:
    """Exact check of the outlier separation inequalities for ``k, k' <= Kmax``."""
    if Kmax > pair.K:
        raise ValueError(f"pair only has {pair.K} outlier slots")
    check_lambdas(pair, Kmax + 1)
    quarter = pair.d_M / 4
    shift = cross = None
    for k, kp in itertools.product(range(1, Kmax + 1), repeat=2):
        gap = abs(pair.b_value(kp) - pair.lambdas[k - 1])
        if k == kp + 1:
            if gap != quarter:
                raise SeparationViolated(f"|B<{kp},1> - A<{k},1>| = {gap} != d_M/4", (k, kp))
            shift = gap if shift is None else min(shift, gap)
        else:
            if not gap > quarter:
                raise SeparationViolated(f"|B<{kp},1> - A<{k},1>| = {gap} <= d_M/4", (k, kp))
            cross = gap if cross is None else min(cross, gap)
    mus = pair.M.dense_sequence(dense_samples, exact=True)
    dense = None
    for k in range(1, Kmax + 1):
        lam = pair.lambdas[k - 1]
        for i, mu in enumerate(mus, start=1):
            gap = abs(lam - mu)
            if not gap > quarter:
                raise SeparationViolated(f"|lambda_{k} - mu_{i}| = {gap} <= d_M/4", (k, i))
            dense = gap if dense is None else min(dense, gap)
    if shift is None:
        shift = quarter  # Kmax = 1 has no k = k'+1 pair
    return SeparationReport(Kmax, shift, cross, dense, len(mus))


def obstruction_bound(pair: CounterexamplePair, checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS) -> ObstructionCertificate:
    """Exact optimal bottlenecks of truncations; each must be >= d_M/4."""
    checkpoints = tuple(checkpoints)
    needed = max(checkpoints).bit_length()
    if needed > pair.K:
        raise ValueError(f"checkpoint {max(checkpoints)} needs {needed} outlier slots, pair has {pair.K}")
    top = max(checkpoints)
    xs_all, ys_all = pair.A.truncation(top), pair.B.truncation(top)
    results = [bottleneck_match(xs_all[:N], ys_all[:N]) for N in checkpoints]
    return ObstructionCertificate(
        d_M=pair.d_M,
        bound=pair.d_M / 4,
        checkpoints=checkpoints,
        bottlenecks=tuple(r.bottleneck for r in results),
        hashes=tuple((truncation_hash(xs_all[:N]), truncation_hash(ys_all[:N])) for N in checkpoints),
        tail_bottlenecks=tuple(r.tail_bottleneck() for r in results),
        set_name=pair.M.name,
        notes=("direction +inf" if pair.direction == 1 else "direction -inf (mirrored)",),
    )
