"""Bottleneck matching between two equal-size multisets of reals.

A matching is stored as ``permutation[n] = i``: ``ys[n]`` is paired with
``xs[i]``.  Indices are 0-based here and 1-based in the JSON export.
"""

from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

INF_DIST = 1 << 30
EXACT_LIMIT = 2048


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MatchingResult:
    permutation: np.ndarray
    deviations: np.ndarray
    bottleneck: float
    method: str

    def tail_bottleneck(self) -> float:
        """Largest deviation among pairs whose y-index (1-based) exceeds N/2."""
        tail = self.deviations[len(self.deviations) // 2:]
        return float(tail.max()) if tail.size else 0.0

    def to_json(self) -> dict:
        return {
            "permutation": (self.permutation + 1).tolist(),
            "deviations": self.deviations.tolist(),
            "bottleneck": self.bottleneck,
            "method": self.method,
        }


def _prepare(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or ys.ndim != 1 or xs.size != ys.size:
        raise LengthMismatch(f"need two lists of equal length, got {xs.shape} and {ys.shape}")
    if xs.size == 0:
        raise LengthMismatch("cannot match empty lists")
    return xs, ys


def _result(xs, ys, perm, method) -> MatchingResult:
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(len(perm))):
        raise AssertionError("matching is not a bijection")
    dev = np.abs(xs[perm] - ys)
    return MatchingResult(perm, dev, float(dev.max()), method)


def sorted_match(xs: Sequence[float], ys: Sequence[float]) -> MatchingResult:
    """Pair the i-th smallest x with the i-th smallest y (stable ties)."""
    xs, ys = _prepare(xs, ys)
    ox = np.argsort(xs, kind="stable")
    oy = np.argsort(ys, kind="stable")
    perm = np.empty_like(ox)
    perm[oy] = ox
    return _result(xs, ys, perm, "sorted")


@functools.lru_cache(maxsize=None)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def brute_force_match(xs: Sequence[float], ys: Sequence[float]) -> MatchingResult:
    """Exhaustive minimum over all N! permutations; first optimum in
    lexicographic order wins."""
    xs, ys = _prepare(xs, ys)
    if xs.size > 10:
        raise ValueError("brute force is limited to N <= 10")
    perms = _all_permutations(xs.size)
    costs = np.abs(xs[perms] - ys).max(axis=1)
    return _result(xs, ys, perms[int(np.argmin(costs))], "brute-force")


class _NextFree:
    """Smallest unclaimed position >= i (union-find with path halving)."""

    def __init__(self, n: int):
        self.parent = list(range(n + 1))

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def claim(self, i: int) -> None:
        self.parent[i] = i + 1


class _PrevFree:
    """Largest unclaimed position <= i, or -1."""

    def __init__(self, n: int):
        self.parent = list(range(n + 1))  # shifted by one: slot 0 means "none"

    def find(self, i: int) -> int:
        parent = self.parent
        i += 1
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i - 1

    def claim(self, i: int) -> None:
        self.parent[i + 1] = i


class _ThresholdGraph:
    """Bipartite graph joining y_j to every x_i with |x_i - y_j| <= t.

    Both sides are sorted, so each neighbourhood is a contiguous range of x.
    """

    def __init__(self, xs_sorted: np.ndarray, ys_sorted: np.ndarray, t: float):
        self.xs = xs_sorted
        self.ys = ys_sorted
        n = len(xs_sorted)
        lo = np.searchsorted(xs_sorted, ys_sorted - t, side="left").tolist()
        hi = np.searchsorted(xs_sorted, ys_sorted + t, side="right").tolist()
        xl = xs_sorted.tolist()
        for j, y in enumerate(ys_sorted.tolist()):
            # make the range agree exactly with |x - y| <= t in floating point
            a, b = lo[j], hi[j]
            while a > 0 and abs(xl[a - 1] - y) <= t:
                a -= 1
            while a < n and xl[a] < y and abs(xl[a] - y) > t:
                a += 1
            while b < n and abs(xl[b] - y) <= t:
                b += 1
            while b > a and xl[b - 1] > y and abs(xl[b - 1] - y) > t:
                b -= 1
            lo[j], hi[j] = a, b
        self.lo, self.hi = lo, hi
        self.n = n

    def greedy(self, closest: bool):
        """Initial matching.  ``closest=False`` takes the leftmost free x in
        range; ``closest=True`` takes the nearest free x."""
        n = self.n
        pair_u = [-1] * n
        pair_v = [-1] * n
        nxt = _NextFree(n)
        prv = _PrevFree(n) if closest else None
        xl = self.xs.tolist()
        ys = self.ys.tolist()
        starts = np.searchsorted(self.xs, self.ys, side="left").tolist() if closest else None
        for u in range(n):
            a, b = self.lo[u], self.hi[u]
            if closest:
                right = nxt.find(max(starts[u], a))
                left = prv.find(min(starts[u], b) - 1)
                choices = [v for v in (left, right) if a <= v < b]
                if not choices:
                    continue
                v = min(choices, key=lambda v: (abs(xl[v] - ys[u]), v))
            else:
                v = nxt.find(a)
                if v >= b:
                    continue
            pair_u[u], pair_v[v] = v, u
            nxt.claim(v)
            if closest:
                prv.claim(v)
        return pair_u, pair_v

    def maximum_matching(self, closest: bool = False):
        """Hopcroft-Karp from a greedy start; returns (size, pair_u)."""
        pair_u, pair_v = self.greedy(closest)
        lo, hi, n = self.lo, self.hi, self.n
        dist = [0] * n
        while True:
            # BFS layering from the free left vertices
            queue = deque()
            for u in range(n):
                if pair_u[u] == -1:
                    dist[u] = 0
                    queue.append(u)
                else:
                    dist[u] = INF_DIST
            if not queue:
                break
            seen = _NextFree(n)
            found = False
            while queue:
                u = queue.popleft()
                v = seen.find(lo[u])
                while v < hi[u]:
                    seen.claim(v)
                    w = pair_v[v]
                    if w == -1:
                        found = True
                    elif dist[w] == INF_DIST:
                        dist[w] = dist[u] + 1
                        queue.append(w)
                    v = seen.find(v + 1)
            if not found:
                break
            # layered DFS, iterative; ptr[u] is the next neighbour to try
            ptr = list(lo)
            for root in range(n):
                if pair_u[root] != -1:
                    continue
                stack = [root]
                path_v = []
                while stack:
                    u = stack[-1]
                    advanced = False
                    while ptr[u] < hi[u]:
                        v = ptr[u]
                        ptr[u] += 1
                        w = pair_v[v]
                        if w == -1:
                            path_v.append(v)
                            # augment along the stack
                            for uu, vv in zip(stack, path_v):
                                pair_u[uu] = vv
                                pair_v[vv] = uu
                            stack = []
                            advanced = True
                            break
                        if dist[w] == dist[u] + 1:
                            path_v.append(v)
                            stack.append(w)
                            advanced = True
                            break
                    if not advanced:
                        dist[u] = INF_DIST
                        stack.pop()
                        if path_v:
                            path_v.pop()
        size = sum(1 for v in pair_u if v != -1)
        return size, pair_u


def bottleneck_match(xs: Sequence[float], ys: Sequence[float]) -> MatchingResult:
    """Exact bottleneck-optimal matching.

    Binary search over the candidate thresholds ``|x_i - y_j|``; a threshold
    is feasible when the threshold graph has a perfect matching.  The
    returned permutation is the rank-order pairing whenever that pairing
    attains the certified optimum.
    """
    xs, ys = _prepare(xs, ys)
    n = xs.size
    ox = np.argsort(xs, kind="stable")
    oy = np.argsort(ys, kind="stable")
    xs_s, ys_s = xs[ox], ys[oy]
    cands = np.unique(np.abs(np.subtract.outer(xs_s, ys_s)))
    lo, hi = 0, cands.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        size, _ = _ThresholdGraph(xs_s, ys_s, float(cands[mid])).maximum_matching()
        if size == n:
            hi = mid
        else:
            lo = mid + 1
    t = float(cands[lo])
    # Optimal matchings are not unique.  Rank-order pairing attains the
    # optimum on the line and is canonical (it does not depend on which
    # operand is called x), so prefer it once the search has certified t.
    perm = np.empty(n, dtype=np.int64)
    perm[oy] = ox
    if np.abs(xs[perm] - ys).max() != t:
        size, pair_u = _ThresholdGraph(xs_s, ys_s, t).maximum_matching(closest=True)
        if size != n:
            raise AssertionError("largest candidate threshold must be feasible")
        perm[oy] = ox[np.asarray(pair_u)]
    result = _result(xs, ys, perm, "threshold-search")
    if result.bottleneck != t:
        raise AssertionError(f"matching cost {result.bottleneck} differs from threshold {t}")
    return result


def tail_matching_profile(A, B, checkpoints: Sequence[int], exact_limit: int = EXACT_LIMIT) -> list:
    """Match truncation(N) of A against truncation(N) of B for each checkpoint.

    Returns ``(N, bottleneck, tail_bottleneck, result)`` tuples.
    """
    checkpoints = list(checkpoints)
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    top = checkpoints[-1]
    xs_all, ys_all = A.truncation(top), B.truncation(top)
    rows = []
    for N in checkpoints:
        xs, ys = xs_all[:N], ys_all[:N]
        res = bottleneck_match(xs, ys) if N <= exact_limit else sorted_match(xs, ys)
        rows.append((N, res.bottleneck, res.tail_bottleneck(), res))
    return rows
