"""Root finding for complex polynomials from one universal start grid.

The grid depends only on the degree.  For any polynomial of that
degree with all roots in the closed unit disk, Newton orbits launched
from the grid reach every root; the library runs those orbits with
per-step regime accounting, clusters the terminals, and checks the
probabilistic conditions behind the iteration-count guarantees on
random ensembles.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND, K_MAX, K_MIN, K_SIZE, available_backends
from .errors import (
    AmbiguousClusteringWarning,
    CriticalPointError,
    EvaluationOverflow,
    InvalidDegree,
    InvalidPolynomial,
    NewtonAtlasError,
    NotClassifiable,
    OutOfValidityRange,
)
from .poly import Polynomial, expand_roots
from .grid import (
    StartingGrid,
    build_grid,
    grid_counts,
    grid_radii,
    r_central_bound,
)
from .orbit import (
    Outcome,
    OrbitStep,
    OrbitTrace,
    Regime,
    classify_sk,
    default_max_iter,
    displacement_lower_bound,
    far_k_threshold,
    near_k_threshold,
    quadratic_phase_budget,
    regime_of_k,
    run_orbit,
    write_trace_jsonl,
)
from .pipeline import (
    ChosenStart,
    Cluster,
    FoundRoot,
    RootFindingReport,
    cluster_roots,
    solve,
)
from .ensemble import (
    ACResult,
    ConditionReport,
    check_ac,
    check_dc,
    dc_probability_bound,
    dc_threshold,
    default_ac_ceiling,
    digit_tail_bound,
    max_multiplicity,
    min_pairwise_distance,
    multiset_count,
    multiset_tail_bound,
    sample_roots,
    verify_trial,
)
from .experiment import (
    ExperimentReport,
    ExperimentRow,
    displacement_audit,
    eps_sweep,
    farfield_iteration_floor,
    run_full_experiment,
    scaling_experiment,
)
from .seeding import SplitMix64, derive_seed

__all__ = [
    "__version__",
    "BACKEND",
    "K_MAX",
    "K_MIN",
    "K_SIZE",
    "available_backends",
    "AmbiguousClusteringWarning",
    "CriticalPointError",
    "EvaluationOverflow",
    "InvalidDegree",
    "InvalidPolynomial",
    "NewtonAtlasError",
    "NotClassifiable",
    "OutOfValidityRange",
    "Polynomial",
    "expand_roots",
    "StartingGrid",
    "build_grid",
    "grid_counts",
    "grid_radii",
    "r_central_bound",
    "Outcome",
    "OrbitStep",
    "OrbitTrace",
    "Regime",
    "classify_sk",
    "default_max_iter",
    "displacement_lower_bound",
    "far_k_threshold",
    "near_k_threshold",
    "quadratic_phase_budget",
    "regime_of_k",
    "run_orbit",
    "write_trace_jsonl",
    "ChosenStart",
    "Cluster",
    "FoundRoot",
    "RootFindingReport",
    "cluster_roots",
    "solve",
    "ACResult",
    "ConditionReport",
    "check_ac",
    "check_dc",
    "dc_probability_bound",
    "dc_threshold",
    "default_ac_ceiling",
    "digit_tail_bound",
    "max_multiplicity",
    "min_pairwise_distance",
    "multiset_count",
    "multiset_tail_bound",
    "sample_roots",
    "verify_trial",
    "ExperimentReport",
    "ExperimentRow",
    "displacement_audit",
    "eps_sweep",
    "farfield_iteration_floor",
    "run_full_experiment",
    "scaling_experiment",
    "SplitMix64",
    "derive_seed",
]
