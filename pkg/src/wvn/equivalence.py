"""Compact-perturbation certificates for pairs of diagonal operators.

For a permutation unitary ``u`` built from a matching, ``K = B - u A u*`` is
diagonal with entries ``mu_n - lambda_{pi(n)}``.  On truncations we certify
either that these entries decay (equivalence evidence) or that no matching
gets them below ``d_M / 4`` (obstruction).
"""

from __future__ import annotations

import csv
import hashlib
import io
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .closed_set import ClosedSet
from .matching import LengthMismatch, MatchingResult, bottleneck_match, tail_matching_profile
from .spectra import DiagonalOperator, ess_spectrum_estimate, hausdorff_distance

DEFAULT_CHECKPOINTS = (256, 1024, 4096)
DEFAULT_EPSILON = 0.05
DECAY_FACTOR = 2.0
BOUND_SLACK = 1e-12

# parameters of the essential-spectrum sanity check
ESS_EPS = 0.05
ESS_THRESHOLD = 8
ESS_TOLERANCE = 0.1


class SpectrumMismatch(UserWarning):
    pass


class BoundViolated(AssertionError):
    pass


def truncation_hash(values: np.ndarray) -> str:
    data = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class EquivalenceCertificate:
    checkpoints: tuple
    bottlenecks: tuple
    perturbation_tail: tuple
    verdict: str
    epsilon: float
    decay_factor: float
    hashes: tuple
    set_name: str = ""
    d_M: float = 0.0
    notes: tuple = ()

    kind = "equivalence"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "set": self.set_name,
            "d_M": self.d_M,
            "verdict": self.verdict,
            "epsilon": self.epsilon,
            "decay_factor": self.decay_factor,
            "checkpoints": [
                {"N": N, "bottleneck": b, "tail_bottleneck": t, "sha256_A": ha, "sha256_B": hb}
                for N, b, t, (ha, hb) in zip(self.checkpoints, self.bottlenecks,
                                             self.perturbation_tail, self.hashes)
            ],
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        return _table_csv(self.checkpoints, self.bottlenecks, self.perturbation_tail)


@dataclass(frozen=True)
class ObstructionCertificate:
    d_M: Fraction
    bound: Fraction
    checkpoints: tuple
    bottlenecks: tuple
    hashes: tuple
    tail_bottlenecks: tuple = ()
    set_name: str = ""
    notes: tuple = ()
    verdict: str = field(default="obstructed", init=False)

    kind = "obstruction"

    def __post_init__(self):
        for N, b in zip(self.checkpoints, self.bottlenecks):
            if b < float(self.bound) - BOUND_SLACK:
                raise BoundViolated(f"bottleneck {b} at N={N} is below d_M/4 = {float(self.bound)}")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "set": self.set_name,
            "d_M": float(self.d_M),
            "bound": float(self.bound),
            "verdict": self.verdict,
            "checkpoints": [
                {"N": N, "bottleneck": b, "sha256_A": ha, "sha256_B": hb}
                for N, b, (ha, hb) in zip(self.checkpoints, self.bottlenecks, self.hashes)
            ],
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        tails = self.tail_bottlenecks or (float("nan"),) * len(self.checkpoints)
        return _table_csv(self.checkpoints, self.bottlenecks, tails)


def _table_csv(checkpoints, bottlenecks, tails) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["N", "bottleneck", "tail_bottleneck"])
    for row in zip(checkpoints, bottlenecks, tails):
        writer.writerow([row[0], repr(float(row[1])), repr(float(row[2]))])
    return buf.getvalue()


def perturbation_entries(A, B, match: MatchingResult) -> np.ndarray:
    """Diagonal of ``K = B - u A u*``: entry n is ``mu_n - lambda_{pi(n)}``."""
    N = len(match.permutation)
    xs = A.truncation(N) if isinstance(A, DiagonalOperator) else np.asarray(A, dtype=float)
    ys = B.truncation(N) if isinstance(B, DiagonalOperator) else np.asarray(B, dtype=float)
    if xs.size != N or ys.size != N:
        raise LengthMismatch(f"matching has {N} pairs, operators give {xs.size} and {ys.size}")
    return ys - xs[match.permutation]


def decays(tails: Sequence[float], epsilon: float, factor: float = DECAY_FACTOR) -> bool:
    """The finite compactness proxy: the tail drops by ``factor`` from the first
    to the last checkpoint and ends below ``epsilon``."""
    return tails[-1] * factor <= tails[0] and tails[-1] < epsilon


def spectrum_check(A, B, M: ClosedSet, N: int) -> list:
    """Sanity notes comparing essential-spectrum estimates of A, B and M."""
    notes = []
    estimates = []
    for label, op in (("A", A), ("B", B)):
        est = ess_spectrum_estimate(op.truncation(N), ESS_EPS, ESS_THRESHOLD)
        estimates.append(est)
        far = [c for c in ((lo + hi) / 2 for lo, hi in est) if float(M.distance(c)) > ESS_TOLERANCE]
        if far:
            notes.append(f"{label}: clusters at N={N} lie off {M.name}, e.g. near {far[0]!r}")
    gap = hausdorff_distance(*estimates)
    if gap > ESS_TOLERANCE:
        notes.append(f"essential-spectrum estimates of A and B differ by {gap!r} at N={N}")
    return notes


def certify_equivalence(
    A: DiagonalOperator,
    B: DiagonalOperator,
    M: ClosedSet,
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    epsilon: float = DEFAULT_EPSILON,
):
    """Equivalence evidence, an obstruction certificate, or an inconclusive report."""
    checkpoints = tuple(checkpoints)
    verdict_M = M.d_M()
    top = checkpoints[-1]
    xs_all, ys_all = A.truncation(top), B.truncation(top)
    hashes = tuple((truncation_hash(xs_all[:N]), truncation_hash(ys_all[:N])) for N in checkpoints)

    notes = spectrum_check(A, B, M, checkpoints[0])
    mismatch = spectrum_check(A, B, M, top)
    for note in notes + mismatch:
        warnings.warn(note, SpectrumMismatch, stacklevel=2)
    estimates_disagree = any("differ" in note for note in mismatch)

    rows = tail_matching_profile(A, B, checkpoints)
    bottlenecks = tuple(r[1] for r in rows)
    tails = tuple(r[2] for r in rows)
    ok = decays(tails, epsilon) and not estimates_disagree

    if not ok and not verdict_M.holds:
        # no decay on a set with large holes: try the exact lower bound
        bound = verdict_M.d_M / 4
        results = [bottleneck_match(xs_all[:N], ys_all[:N]) for N in checkpoints]
        exact = tuple(r.bottleneck for r in results)
        if all(b >= float(bound) - BOUND_SLACK for b in exact):
            return ObstructionCertificate(
                d_M=verdict_M.d_M,
                bound=bound,
                checkpoints=checkpoints,
                bottlenecks=exact,
                hashes=hashes,
                tail_bottlenecks=tuple(r.tail_bottleneck() for r in results),
                set_name=M.name,
                notes=tuple(notes + mismatch),
            )
        notes = notes + [f"d_M = {float(verdict_M.d_M)!r} > 0 but some bottleneck is below d_M/4"]

    return EquivalenceCertificate(
        checkpoints=checkpoints,
        bottlenecks=bottlenecks,
        perturbation_tail=tails,
        verdict="equivalent-evidence" if ok else "inconclusive",
        epsilon=epsilon,
        decay_factor=DECAY_FACTOR,
        hashes=hashes,
        set_name=M.name,
        d_M=float(verdict_M.d_M),
        notes=tuple(notes + mismatch),
    )


def recompute_tails(A, B, checkpoints: Sequence[int]) -> tuple:
    """Re-derive the perturbation tails of a certificate from A and B."""
    return tuple(r[2] for r in tail_matching_profile(A, B, checkpoints))

