"""Weyl-von Neumann equivalence on closed sets with prescribed holes at infinity."""

from .closed_set import (
    ClosedSet,
    ClosedSetSpec,
    Gap,
    TailRule,
    WvnVerdict,
    compute_d_M,
    contains,
    dense_sequence,
    distance_to_set,
    truncated_defect,
    validate,
)
from .counterexample import (
    CounterexamplePair,
    build_counterexample,
    choose_lambdas,
    obstruction_bound,
    separation_check,
)
from .equivalence import (
    EquivalenceCertificate,
    ObstructionCertificate,
    certify_equivalence,
    perturbation_entries,
)
from .matching import MatchingResult, bottleneck_match, sorted_match, tail_matching_profile
from .spectra import (
    DefectProfile,
    DiagonalOperator,
    defect_sequence,
    ess_spectrum_estimate,
    jacobi_diagonalize,
    pairing_decode,
    pairing_encode,
    synth_with_ess_spectrum,
)

__version__ = "0.1.0"
