"""Diagonal operator models, defect sequences and a Jacobi eigensolver."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .closed_set import ClosedSet

MAX_INDEX = 2 ** 63 - 1


class OutlierInsideM(ValueError):
    pass


class NotHermitian(ValueError):
    pass


class NoConvergence(ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def pairing_encode(k: int, m: int) -> int:
    """``<k, m> = 2**(k-1) * (2m - 1)``."""
    if k < 1 or m < 1:
        raise ValueError(f"pairing needs k, m >= 1, got ({k}, {m})")
    n = (2 * m - 1) << (k - 1)
    if n > MAX_INDEX:
        raise OverflowError(f"<{k},{m}> = {n} exceeds the index range")
    return n


def pairing_decode(n: int) -> tuple:
    if n < 1:
        raise ValueError(f"index must be >= 1, got {n}")
    if n > MAX_INDEX:
        raise OverflowError(f"index {n} exceeds the index range")
    k = (n & -n).bit_length()
    return k, ((n >> (k - 1)) + 1) // 2


class _DenseCache:
    """1-based random access into ``M.dense_points()``."""

    def __init__(self, M: ClosedSet):
        self._source = M.dense_points()
        self._values: list = []

    def __getitem__(self, k: int) -> float:
        while len(self._values) < k:
            self._values.append(float(next(self._source)))
        return self._values[k - 1]


@dataclass(frozen=True)
class DiagonalOperator:
    """``sum_n rule(n) e_n`` on a fixed orthonormal basis, indices from 1."""

    name: str
    rule: Callable[[int], float] = field(repr=False, compare=False)
    source: Optional[ClosedSet] = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def eigenvalue(self, n: int) -> float:
        if n < 1:
            raise ValueError("eigenvalue indices start at 1")
        return float(self.rule(n))

    def truncation(self, N: int) -> np.ndarray:
        return np.array([self.eigenvalue(n) for n in range(1, N + 1)], dtype=float)

    @classmethod
    def from_values(cls, values: Sequence[float], name: str = "table") -> "DiagonalOperator":
        vals = tuple(float(v) for v in values)

        def rule(n):
            if n > len(vals):
                raise IndexError(f"{name} only stores {len(vals)} eigenvalues")
            return vals[n - 1]

        return cls(name, rule, meta={"stored": len(vals)})


def synth_with_ess_spectrum(
    M: ClosedSet,
    outliers: Sequence[float] = (),
    column_value_rule: Optional[Callable[[int], float]] = None,
    name: Optional[str] = None,
) -> DiagonalOperator:
    """Operator with eigenvalue ``mu_k`` at every slot ``<k, m>``, ``m >= 2``.

    Slot ``<k, 1>`` holds ``outliers[k-1]`` when given, else
    ``column_value_rule(k)``, else ``mu_k``; ``mu`` is ``M``'s dense sequence.
    """
    # membership is checked on the value as given (exact for Fractions); far
    # out, float rounding may land a hole midpoint on M's side of an endpoint
    for k, x in enumerate(outliers, start=1):
        if M.contains(x):
            raise OutlierInsideM(f"outlier {k} = {x} lies in {M.name}")
    outliers = [float(x) for x in outliers]
    dense = _DenseCache(M)

    def rule(n: int) -> float:
        k, m = pairing_decode(n)
        if m == 1:
            if k <= len(outliers):
                return outliers[k - 1]
            if column_value_rule is not None:
                return float(column_value_rule(k))
        return dense[k]

    meta = {"outliers": len(outliers), "column_rule": column_value_rule is not None}
    return DiagonalOperator(name or f"synth[{M.name}]", rule, M, meta)


@dataclass(frozen=True)
class DefectProfile:
    values: np.ndarray
    checkpoints: tuple
    tail_sup: tuple

    def to_json(self) -> dict:
        return {
            "values": self.values.tolist(),
            "checkpoints": list(self.checkpoints),
            "tail_sup": list(self.tail_sup),
        }


def defect_sequence(op: DiagonalOperator, M: ClosedSet, N: int) -> DefectProfile:
    """``a_n = dist(lambda_n, M)`` for ``n <= N`` with tail suprema at 1, 2, 4, ..."""
    values = np.array([float(M.distance(x)) for x in op.truncation(N)])
    # suffix maxima: suffix[i] = max(values[i:])
    suffix = np.maximum.accumulate(values[::-1])[::-1]
    checkpoints = []
    m = 1
    while m <= N:
        checkpoints.append(m)
        m *= 2
    return DefectProfile(values, tuple(checkpoints), tuple(float(suffix[c - 1]) for c in checkpoints))


def ess_spectrum_estimate(eigs: Sequence[float], eps: float, threshold: int) -> list:
    """Merged ``[x - eps, x + eps]`` over eigenvalues ``x`` whose closed
    ``eps``-window holds at least ``threshold`` eigenvalues."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if threshold < 2:
        raise ValueError("threshold must be at least 2")
    xs = np.sort(np.asarray(eigs, dtype=float))
    if xs.size == 0:
        return []
    counts = np.searchsorted(xs, xs + eps, side="right") - np.searchsorted(xs, xs - eps, side="left")
    centers = np.unique(xs[counts >= threshold])
    merged: list = []
    for c in centers:
        lo, hi = c - eps, c + eps
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(float(lo), float(hi)) for lo, hi in merged]


def clip_intervals(intervals: Sequence[tuple], lo: float, hi: float) -> list:
    out = []
    for a, b in intervals:
        a, b = max(a, lo), min(b, hi)
        if a <= b:
            out.append((a, b))
    return out


def _dist_to_union(x: float, intervals: Sequence[tuple]) -> float:
    best = math.inf
    for a, b in intervals:
        if a <= x <= b:
            return 0.0
        best = min(best, abs(x - a), abs(x - b))
    return best


def _directed_hausdorff(A: Sequence[tuple], B: Sequence[tuple]) -> float:
    if not A:
        return 0.0
    if not B:
        return math.inf
    # distance to B is piecewise linear; maxima sit at A's endpoints or at
    # midpoints of the holes between consecutive pieces of B
    candidates = [p for iv in A for p in iv]
    for (_, b0), (a1, _) in zip(B, B[1:]):
        mid = (b0 + a1) / 2
        if any(a <= mid <= b for a, b in A):
            candidates.append(mid)
    return max(_dist_to_union(p, B) for p in candidates)


def hausdorff_distance(A: Sequence[tuple], B: Sequence[tuple]) -> float:
    """Hausdorff distance between two finite unions of closed intervals."""
    A, B = sorted(A), sorted(B)
    if not A and not B:
        return 0.0
    return max(_directed_hausdorff(A, B), _directed_hausdorff(B, A))


def set_window(M: ClosedSet, lo: float, hi: float) -> list:
    """``M`` intersected with ``[lo, hi]`` as closed intervals."""
    reach = max(abs(lo), abs(hi))
    out = []
    for a, b in M.components():
        # components arrive ordered by distance from 0
        if not a <= 0 <= b and min(abs(a), abs(b)) > reach:
            break
        a, b = max(float(a), lo), min(float(b), hi)
        if a <= b:
            out.append((a, b))
    return sorted(out)


def jacobi_diagonalize(H, tol: float = 1e-12, max_sweeps: int = 60):
    """Cyclic complex Jacobi.  Returns ascending eigenvalues and a unitary ``U``
    with ``U @ diag(eigs) @ U^H == H`` up to ``~tol * ||H||_F``."""
    A = np.array(H, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > 512:
        raise ValueError("jacobi_diagonalize is limited to n <= 512")
    norm = np.linalg.norm(A)
    if np.max(np.abs(A - A.conj().T), initial=0.0) > tol * max(1.0, norm):
        raise NotHermitian("matrix differs from its conjugate transpose")
    A = (A + A.conj().T) / 2
    U = np.eye(n, dtype=complex)
    target = tol * norm

    def off_mass():
        # taken directly; ||A||^2 - sum |a_ii|^2 cancels badly near convergence
        return float(np.linalg.norm(A - np.diag(np.diag(A))))

    for _ in range(max_sweeps):
        if off_mass() <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = A[p, q]
                mag = abs(b)
                if mag <= 1e-300:
                    continue
                phase = b / mag
                app, aqq = A[p, p].real, A[q, q].real
                theta = (aqq - app) / (2 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                # R = diag(1, conj(phase)) @ [[c, s], [-s, c]] zeroes A[p, q]
                R = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                A[:, cols] = A[:, cols] @ R
                A[cols, :] = R.conj().T @ A[cols, :]
                U[:, cols] = U[:, cols] @ R
    else:
        residual = off_mass()
        if residual > target:
            raise NoConvergence(f"off-diagonal mass {residual:.3e} after {max_sweeps} sweeps", residual)
    eigs = np.diag(A).real.copy()
    order = np.argsort(eigs, kind="stable")
    return eigs[order], U[:, order]


def gershgorin_discs(H) -> list:
    H = np.asarray(H)
    radii = np.sum(np.abs(H), axis=1) - np.abs(np.diag(H))
    return [(complex(c), float(r)) for c, r in zip(np.diag(H), radii)]


def truncation_to_json(op: DiagonalOperator, N: int) -> dict:
    return {"name": op.name, "eigenvalues": op.truncation(N).tolist()}


def truncation_from_json(doc) -> DiagonalOperator:
    if isinstance(doc, str):
        doc = json.loads(doc)
    return DiagonalOperator.from_values(doc["eigenvalues"], name=doc.get("name", "table"))


def truncation_to_csv(op: DiagonalOperator, N: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "eigenvalue"])
    for n, x in enumerate(op.truncation(N), start=1):
        writer.writerow([n, repr(float(x))])
    return buf.getvalue()


def truncation_from_csv(text: str, name: str = "csv") -> DiagonalOperator:
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["index"]))
    if [int(r["index"]) for r in rows] != list(range(1, len(rows) + 1)):
        raise ValueError("CSV indices must be 1..N without gaps")
    return DiagonalOperator.from_values([float(r["eigenvalue"]) for r in rows], name=name)


def matrix_from_json(doc) -> np.ndarray:
    """Row-major matrix of ``[re, im]`` pairs (plain numbers are taken as real)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    rows = doc["matrix"] if isinstance(doc, dict) else doc
    out = []
    for row in rows:
        out.append([complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in row])
    return np.array(out, dtype=complex)

