"""Closed subsets of the real line described by their complement.

A set ``M`` is stored as the open gaps of ``R \\ M``: a finite ordered list
plus at most one parametric tail family per direction.  All rule parameters
are held as :class:`fractions.Fraction` so that distances, truncated defects
and ``d_M`` are evaluated exactly; ``math.inf`` appears only as an endpoint
sentinel and never takes part in arithmetic.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

Number = Union[int, float, Fraction]
INF = math.inf

RADIUS_KINDS = ("constant", "harmonic", "geometric", "table")
GEOMETRIC_EXACT_LIMIT = 200_000


class ClosedSetError(ValueError):
    """Base class for invalid set descriptions."""


class OverlappingGaps(ClosedSetError):
    pass


class EmptySet(ClosedSetError):
    pass


class MalformedTailRule(ClosedSetError):
    pass


def to_fraction(value) -> Union[Fraction, float]:
    """Parse a number, a ``"p/q"`` string or an infinity sentinel."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("+inf", "inf", "infinity", "+infinity"):
            return INF
        if text in ("-inf", "-infinity"):
            return -INF
        return Fraction(text)
    if isinstance(value, bool):
        raise TypeError(f"not a number: {value!r}")
    if isinstance(value, float):
        if math.isinf(value):
            return value
        if math.isnan(value):
            raise ValueError("NaN is not a valid endpoint")
    return Fraction(value)


def number_to_json(value):
    """Inverse of :func:`to_fraction` that keeps the value identical."""
    if isinstance(value, float) and math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return int(value)
    as_float = float(value)
    if Fraction(as_float) == value:
        return as_float
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, order=True)
class Gap:
    """Open interval ``(lo, hi)``; either end may be an infinite sentinel."""

    lo: Union[Fraction, float]
    hi: Union[Fraction, float]

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ClosedSetError(f"gap needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def bounded(self) -> bool:
        return not (math.isinf(self.lo) or math.isinf(self.hi))

    @property
    def half_width(self):
        if not self.bounded:
            return INF
        return (self.hi - self.lo) / 2

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi

    def distance(self, x):
        """Distance from ``x`` (inside the gap) to the complement of the gap."""
        if self.lo == -INF:
            return self.hi - x
        if self.hi == INF:
            return x - self.lo
        return min(x - self.lo, self.hi - x)

    def sup_outside(self, n):
        """``sup dist(x, M)`` over ``x`` in this gap with ``|x| > n``.

        Returns 0 when that region is empty and ``INF`` when it is unbounded.
        """
        best = Fraction(0)
        if self.hi > n:
            if self.hi == INF:
                return INF
            start = max(self.lo, n)
            if self.lo == -INF:
                best = max(best, self.hi - start)
            else:
                mid = (self.lo + self.hi) / 2
                best = max(best, self.half_width if start <= mid else self.hi - start)
        if self.lo < -n:
            if self.lo == -INF:
                return INF
            end = min(self.hi, -n)
            if self.hi == INF:
                best = max(best, end - self.lo)
            else:
                mid = (self.lo + self.hi) / 2
                best = max(best, self.half_width if end >= mid else end - self.lo)
        return best

    def negated(self) -> "Gap":
        return Gap(-self.hi, -self.lo)


@dataclass(frozen=True)
class TailRule:
    """Gap family ``(c(k) - r(k), c(k) + r(k))``, ``k >= k0``, ``c(k) = alpha*k + beta``.

    Positions are given in the frame of the direction: for ``direction = -1``
    the gaps in the real line are the mirror images ``(-c(k) - r(k), -c(k) + r(k))``.
    A ``table`` radius uses the stored values for the first indices and the
    declared ``limit`` afterwards; a zero limit ends the family after the table.
    """

    direction: int
    alpha: Fraction
    beta: Fraction
    k0: int
    kind: str
    rho: Optional[Fraction] = None
    q: Optional[Fraction] = None
    table: tuple = ()
    limit: Optional[Fraction] = None

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise MalformedTailRule(f"direction must be +1 or -1, got {self.direction}")
        if self.kind not in RADIUS_KINDS:
            raise MalformedTailRule(f"unknown radius kind {self.kind!r}")
        if not self.alpha > 0:
            raise MalformedTailRule("centers must be increasing (alpha > 0)")
        if self.kind == "table":
            if not self.table:
                raise MalformedTailRule("table radius needs at least one entry")
            if self.limit is None or self.limit < 0:
                raise MalformedTailRule("table radius needs a declared limit >= 0")
            if any(r <= 0 for r in self.table):
                raise MalformedTailRule("table radii must be positive")
        else:
            if self.rho is None or not self.rho > 0:
                raise MalformedTailRule("radius rule needs rho > 0")
        if self.kind == "harmonic" and self.k0 < 1:
            raise MalformedTailRule("harmonic radius needs k0 >= 1")
        if self.kind == "geometric" and (self.q is None or not 0 < self.q < 1):
            raise MalformedTailRule("geometric radius needs 0 < q < 1")

    @property
    def last_index(self) -> Optional[int]:
        """Index of the final gap, or None for an infinite family."""
        if self.kind == "table" and self.limit == 0:
            return self.k0 + len(self.table) - 1
        return None

    def has(self, k: int) -> bool:
        last = self.last_index
        return k >= self.k0 and (last is None or k <= last)

    def center(self, k: int) -> Fraction:
        return self.alpha * k + self.beta

    def radius(self, k: int) -> Fraction:
        if self.kind == "constant":
            return self.rho
        if self.kind == "harmonic":
            return self.rho / k
        if self.kind == "geometric":
            if k - self.k0 > GEOMETRIC_EXACT_LIMIT:
                raise OverflowError(f"exact geometric radius at index {k} is too large to form")
            return self.rho * self.q ** k
        i = k - self.k0
        return self.table[i] if i < len(self.table) else self.limit

    def local_gap(self, k: int) -> Gap:
        """Gap ``k`` in the direction's own frame (centers increasing)."""
        c, r = self.center(k), self.radius(k)
        return Gap(c - r, c + r)

    def gap(self, k: int) -> Gap:
        g = self.local_gap(k)
        return g if self.direction == 1 else g.negated()

    @property
    def limsup_radius(self) -> Fraction:
        if self.kind == "constant":
            return self.rho
        if self.kind == "table":
            return self.limit
        return Fraction(0)

    @property
    def radius_nonincreasing_from(self) -> int:
        """First index from which the radius never increases again."""
        if self.kind == "table":
            return self.k0 + len(self.table)
        return self.k0

    def check_disjoint(self) -> None:
        # c(k) + r(k) <= c(k+1) - r(k+1)  <=>  alpha >= r(k) + r(k+1)
        a = self.alpha
        if self.kind in ("constant", "harmonic", "geometric"):
            # radius is non-increasing, so the first pair is the binding one
            worst = self.radius(self.k0) + self.radius(self.k0 + 1)
            if worst > a:
                raise MalformedTailRule(
                    f"tail gaps {self.k0} and {self.k0 + 1} overlap: "
                    f"r sum {worst} exceeds center spacing {a}"
                )
            return
        stop = self.k0 + len(self.table) - (1 if self.limit == 0 else 0)
        for k in range(self.k0, stop):
            if self.radius(k) + self.radius(k + 1) > a:
                raise MalformedTailRule(f"tail gaps {k} and {k + 1} overlap")
        if self.limit > 0 and 2 * self.limit > a:
            raise MalformedTailRule("tail gaps beyond the table overlap")

    def find_local(self, x) -> Optional[int]:
        """Index of the local-frame gap containing ``x``, if any."""
        # r(k) <= alpha, so only centers within alpha of x can contain it
        base = math.floor((x - self.beta) / self.alpha)
        for k in range(base - 1, base + 3):
            if not self.has(k):
                continue
            offset = abs(x - self.center(k))
            if offset == 0:
                return k
            if self.kind == "geometric" and k - self.k0 > 64:
                log_r = math.log(self.rho) + k * math.log(self.q)
                if math.log(offset) > log_r + 1e-3:
                    continue
            if x in self.local_gap(k):
                return k
        return None

    def first_reaching(self, n) -> Optional[int]:
        """Smallest index whose local gap has right end beyond ``n``."""
        k = max(self.k0, math.floor((n - self.beta) / self.alpha) - 2)
        while self.has(k):
            if self.local_gap(k).hi > n:
                return k
            k += 1
        return None

    def dominated(self, n, floor) -> bool:
        """True when no gap reaching past ``n`` can beat ``floor``.

        Only used for geometric radii, whose exact values far out are huge
        rationals; the comparison is done on logarithms with a wide margin.
        """
        if self.kind != "geometric" or floor <= 0 or self.local_gap(self.k0).lo < -n:
            return False
        k = max(self.k0, math.floor((n - self.beta) / self.alpha) - 2)
        if k < self.k0 + 64:
            return False
        log_ub = math.log(self.rho) + k * math.log(self.q)
        return log_ub < math.log(floor) - 1e-3

    def sup_outside(self, n, floor=Fraction(0)):
        """Largest ``sup dist`` contributed by any gap of the family beyond ``n``.

        When the family provably cannot exceed ``floor`` the result is 0.
        """
        if self.dominated(n, floor):
            return Fraction(0)
        best = Fraction(0)
        k = self.k0
        # gaps reaching left of -n in the local frame: finitely many at the start
        while self.has(k) and self.local_gap(k).lo < -n:
            best = max(best, self.local_gap(k).sup_outside(n))
            k += 1
        k = self.first_reaching(n)
        while k is not None and self.has(k):
            g = self.local_gap(k)
            best = max(best, g.sup_outside(n))
            if g.lo >= n and k >= self.radius_nonincreasing_from:
                # every later gap is fully outside with half-width <= r(k)
                break
            k += 1
        return best

    def threshold(self, eps: Fraction):
        """Some ``n`` beyond which every gap still reaching past ``n`` has r < eps
        (or, for positive limit, beyond which only limit-radius gaps remain)."""
        start = max(Fraction(0), -self.local_gap(self.k0).lo)
        if self.kind == "constant":
            return start
        if self.kind == "table":
            last_table = self.k0 + len(self.table) - 1
            return max(start, self.local_gap(last_table).hi)
        if self.kind == "harmonic":
            k_eps = max(self.k0, math.floor(self.rho / eps) + 1)
        else:
            guess = math.log(eps / self.rho) / math.log(self.q)
            k_eps = max(self.k0, math.floor(guess) - 1)
            while self.radius(k_eps) >= eps:
                k_eps += 1
        if k_eps == self.k0:
            return start
        return max(start, self.local_gap(k_eps - 1).hi)

    def to_json(self) -> dict:
        radius = {"kind": self.kind}
        if self.kind == "table":
            radius["table"] = [number_to_json(r) for r in self.table]
            radius["limit"] = number_to_json(self.limit)
        else:
            radius["rho"] = number_to_json(self.rho)
            if self.kind == "geometric":
                radius["q"] = number_to_json(self.q)
        return {
            "direction": "+inf" if self.direction == 1 else "-inf",
            "center": {
                "alpha": number_to_json(self.alpha),
                "beta": number_to_json(self.beta),
                "k0": self.k0,
            },
            "radius": radius,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TailRule":
        try:
            direction = {"+inf": 1, "inf": 1, "+": 1, "-inf": -1, "-": -1}[str(doc["direction"])]
            center = doc["center"]
            radius = doc["radius"]
            kind = radius["kind"]
            opt = lambda key: to_fraction(radius[key]) if key in radius else None  # noqa: E731
            return cls(
                direction=direction,
                alpha=to_fraction(center["alpha"]),
                beta=to_fraction(center.get("beta", 0)),
                k0=int(center.get("k0", 1)),
                kind=kind,
                rho=opt("rho"),
                q=opt("q"),
                table=tuple(to_fraction(r) for r in radius.get("table", ())),
                limit=opt("limit"),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedTailRule(f"malformed tail rule {doc!r}: {exc}") from exc

    def negated(self) -> "TailRule":
        return TailRule(-self.direction, self.alpha, self.beta, self.k0, self.kind,
                        self.rho, self.q, self.table, self.limit)


@dataclass(frozen=True)
class ClosedSetSpec:
    """Unvalidated description of ``M``; see :func:`validate`."""

    finite_gaps: tuple = ()
    tails: tuple = ()
    name: str = "M"

    @classmethod
    def from_json(cls, doc: Union[dict, str]) -> "ClosedSetSpec":
        if isinstance(doc, str):
            doc = json.loads(doc)
        gaps = []
        for pair in doc.get("finite_gaps", []):
            if len(pair) != 2:
                raise ClosedSetError(f"gap must be a [lo, hi] pair, got {pair!r}")
            gaps.append(Gap(to_fraction(pair[0]), to_fraction(pair[1])))
        tails = tuple(TailRule.from_json(t) for t in doc.get("tails", []))
        return cls(tuple(gaps), tails, doc.get("name", "M"))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "finite_gaps": [[number_to_json(g.lo), number_to_json(g.hi)] for g in self.finite_gaps],
            "tails": [t.to_json() for t in self.tails],
        }


@dataclass(frozen=True)
class WvnVerdict:
    d_M: Fraction
    exact: bool
    holds: bool
    convergence: tuple = ()

    def to_json(self) -> dict:
        return {
            "d_M": float(self.d_M),
            "exact": self.exact,
            "holds": self.holds,
            "convergence": [[float(n), float(v)] for n, v in self.convergence],
        }


def _interval_distance(lo, hi):
    if lo <= 0 <= hi:
        return 0
    return min(abs(lo), abs(hi))


def _component_key(comp):
    lo, hi = comp
    return (_interval_distance(lo, hi), lo)


@dataclass(frozen=True)
class ClosedSet:
    """A validated, immutable closed set.  Build with :func:`validate`."""

    spec: ClosedSetSpec
    gaps: tuple = field(repr=False)
    plus: Optional[TailRule] = field(default=None, repr=False)
    minus: Optional[TailRule] = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.spec.name

    # -- membership and distance --------------------------------------------

    def gap_containing(self, x) -> Optional[Gap]:
        x = to_fraction(x)
        i = _bisect_gaps(self.gaps, x)
        if i is not None:
            return self.gaps[i]
        for tail in (self.plus, self.minus):
            if tail is None:
                continue
            k = tail.find_local(x * tail.direction)
            if k is not None:
                return tail.gap(k)
        return None

    def contains(self, x) -> bool:
        return self.gap_containing(x) is None

    def distance(self, x) -> Fraction:
        """Exact ``dist(x, M)``."""
        x = to_fraction(x)
        g = self.gap_containing(x)
        return Fraction(0) if g is None else g.distance(x)

    # -- defect at infinity ---------------------------------------------------

    def truncated_defect(self, n) -> Fraction:
        """``min(sup{dist(x, M) : x not in M, |x| > n}, 1)`` with ``sup {} = 0``."""
        n = to_fraction(n)
        if n < 0:
            raise ValueError("n must be non-negative")
        best = Fraction(0)
        for g in self.gaps:
            best = max(best, g.sup_outside(n))
            if best >= 1:
                return Fraction(1)
        tails = [t for t in (self.plus, self.minus) if t is not None]
        # geometric families last, so they can be skipped when dominated
        for tail in sorted(tails, key=lambda t: t.kind == "geometric"):
            best = max(best, tail.sup_outside(n, best))
        return min(best, Fraction(1))

    def direction_defect(self, direction: int) -> Fraction:
        tail = self.plus if direction == 1 else self.minus
        for g in self.gaps:
            if (g.hi == INF and direction == 1) or (g.lo == -INF and direction == -1):
                return Fraction(1)
        if tail is not None:
            return min(tail.limsup_radius, Fraction(1))
        return Fraction(0)

    def defect_threshold(self, eps) -> Fraction:
        """An ``n`` from which ``|truncated_defect(m) - d_M| < eps`` for all ``m >= n``."""
        eps = to_fraction(eps)
        n = Fraction(0)
        for g in self.gaps:
            if g.bounded:
                n = max(n, abs(g.lo), abs(g.hi))
        for tail in (self.plus, self.minus):
            if tail is not None:
                n = max(n, tail.threshold(eps))
        return n

    def d_M(self, grid_eps=Fraction(1, 10**9)) -> WvnVerdict:
        value = max(self.direction_defect(1), self.direction_defect(-1))
        start = self.defect_threshold(grid_eps)
        grid = [Fraction(0), Fraction(1), Fraction(10)]
        grid += [start * m for m in (1, 2, 10)] + [start + 1, start + 1000]
        table = []
        for n in sorted(set(grid)):
            table.append((n, self.truncated_defect(n)))
        for n, v in table:
            if n >= start and abs(v - value) >= grid_eps:
                raise ArithmeticError(
                    f"truncated defect {v} at n={n} disagrees with d_M={value}"
                )
        return WvnVerdict(d_M=value, exact=True, holds=value == 0, convergence=tuple(table))

    # -- dense subset ------------------------------------------------------------

    def components(self) -> Iterator[tuple]:
        """Maximal closed intervals of ``M``, ordered by distance from 0."""
        left = self.minus.gap(self.minus.k0) if self.minus else None
        right = self.plus.gap(self.plus.k0) if self.plus else None
        edges = [left.hi if left else -INF]
        for g in self.gaps:
            edges += [g.lo, g.hi]
        edges.append(right.lo if right else INF)
        bucket = []
        for lo, hi in zip(edges[::2], edges[1::2]):
            if lo <= hi and not (math.isinf(lo) and lo == hi):
                bucket.append((lo, hi))
        streams = []
        for tail in (self.plus, self.minus):
            if tail is None:
                continue
            stream = _tail_components(tail)
            # components on the wrong side of 0 are not yet distance-ordered
            pending = []
            for comp in stream:
                if comp[0] * tail.direction < 0 or comp[1] * tail.direction < 0:
                    bucket.append(comp)
                else:
                    pending.append(comp)
                    break
            streams.append(itertools.chain(pending, stream))
        bucket.sort(key=_component_key)
        return heapq.merge(bucket, *streams, key=_component_key)

    def is_finite(self) -> bool:
        if self.plus is not None or self.minus is not None:
            return False
        return all(lo == hi for lo, hi in self.components())

    def dense_points(self) -> Iterator[Fraction]:
        """Deterministic infinite sequence whose closure is ``M``.

        Stage ``j`` activates the ``j+1`` nearest components and emits their
        new dyadic points of depth ``j``.  A finite ``M`` is cycled.
        """
        source = self.components()
        active = []
        emitted = []
        exhausted = False
        finite = self.is_finite()
        for depth in itertools.count():
            fresh = 0
            if not exhausted:
                comp = next(source, None)
                if comp is None:
                    exhausted = True
                else:
                    active.append((comp, depth))
            for comp, born in active:
                for p in _new_points(comp, depth, born):
                    fresh += 1
                    if finite:
                        emitted.append(p)
                    yield p
            if finite and exhausted and fresh == 0:
                break
        while True:
            yield from emitted

    def dense_sequence(self, count: int, exact: bool = False) -> list:
        if count < 1:
            raise ValueError("count must be positive")
        pts = list(itertools.islice(self.dense_points(), count))
        return pts if exact else [float(p) for p in pts]

    # -- transforms ----------------------------------------------------------------

    def negated(self) -> "ClosedSet":
        spec = ClosedSetSpec(
            tuple(sorted(g.negated() for g in self.spec.finite_gaps)),
            tuple(t.negated() for t in self.spec.tails),
            name=f"-({self.spec.name})",
        )
        return validate(spec)

    def to_json(self) -> dict:
        return self.spec.to_json()


def _bisect_gaps(gaps: Sequence[Gap], x) -> Optional[int]:
    lo, hi = 0, len(gaps)
    while lo < hi:
        mid = (lo + hi) // 2
        if gaps[mid].hi <= x:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(gaps) and x in gaps[lo]:
        return lo
    return None


def _tail_components(tail: TailRule) -> Iterator[tuple]:
    k = tail.k0
    while True:
        here = tail.local_gap(k)
        if tail.has(k + 1):
            lo, hi = here.hi, tail.local_gap(k + 1).lo
        else:
            lo, hi = here.hi, INF
        yield (lo, hi) if tail.direction == 1 else (-hi, -lo)
        if not tail.has(k + 1):
            return
        k += 1


def _grid(comp, depth: int) -> list:
    lo, hi = comp
    step = Fraction(1, 2 ** depth)
    if lo == hi:
        return [lo]
    if not math.isinf(lo) and not math.isinf(hi):
        return [lo + (hi - lo) * i * step for i in range(2 ** depth + 1)]
    reach = depth * 2 ** depth
    if math.isinf(lo) and math.isinf(hi):
        return [i * step for i in range(-reach, reach + 1)]
    if math.isinf(hi):
        return [lo + i * step for i in range(reach + 1)]
    return [hi - i * step for i in range(reach, -1, -1)]


def _new_points(comp, depth: int, born: int) -> list:
    pts = _grid(comp, depth)
    if depth == born:
        return pts
    old = set(_grid(comp, depth - 1))
    return [p for p in pts if p not in old]


def validate(spec: Union[ClosedSetSpec, dict, str]) -> ClosedSet:
    """Check a set description and return the immutable :class:`ClosedSet`."""
    if not isinstance(spec, ClosedSetSpec):
        spec = ClosedSetSpec.from_json(spec)
    gaps = tuple(sorted(spec.finite_gaps))
    for g in gaps:
        if g.lo == -INF and g.hi == INF:
            raise EmptySet("the gaps cover the whole real line")
    for a, b in zip(gaps, gaps[1:]):
        if a.hi > b.lo:
            raise OverlappingGaps(f"gaps {a} and {b} overlap")
    plus = minus = None
    for tail in spec.tails:
        tail.check_disjoint()
        if tail.direction == 1:
            if plus is not None:
                raise MalformedTailRule("at most one tail toward +inf")
            plus = tail
        else:
            if minus is not None:
                raise MalformedTailRule("at most one tail toward -inf")
            minus = tail
    if plus is not None:
        first = plus.gap(plus.k0)
        if gaps and gaps[-1].hi > first.lo:
            raise OverlappingGaps(f"+inf tail starts at {first.lo} inside the finite gaps")
    if minus is not None:
        first = minus.gap(minus.k0)
        if gaps and gaps[0].lo < first.hi:
            raise OverlappingGaps(f"-inf tail starts at {first.hi} inside the finite gaps")
    if plus is not None and minus is not None and not gaps:
        if minus.gap(minus.k0).hi > plus.gap(plus.k0).lo:
            raise OverlappingGaps("the two tails overlap")
    return ClosedSet(ClosedSetSpec(gaps, spec.tails, spec.name), gaps, plus, minus)


def load(path) -> ClosedSet:
    with open(path) as fh:
        return validate(json.load(fh))


def contains(M: ClosedSet, x) -> bool:
    return M.contains(x)


def distance_to_set(M: ClosedSet, x) -> Fraction:
    return M.distance(x)


def truncated_defect(M: ClosedSet, n) -> Fraction:
    return M.truncated_defect(n)


def compute_d_M(M: ClosedSet) -> WvnVerdict:
    return M.d_M()


def dense_sequence(M: ClosedSet, count: int, exact: bool = False) -> list:
    return M.dense_sequence(count, exact=exact)
