"""NLS-type constrained ground states, spectral thresholds and existence checks on metric graphs."""

from .errors import *  # noqa: F401,F403
from .expr import Expression, parse_expression
from .gauge import GaugeComparison, PhaseField, gauge_phase, gauge_transform, spectral_invariance
from .graph import (
    RAY,
    Edge,
    GraphPoint,
    MetricGraph,
    RegionSpec,
    build_graph,
    classify_h_condition,
    core_region,
    distance,
    interval_graph,
    is_tree,
    neighborhood,
    real_line,
    star_graph,
)
from .io import GraphFile, parse_graph_file, parse_region, serialize_graph
from .mesh import (
    DiscreteField,
    Mesh,
    TruncationPolicy,
    UnityPair,
    build_mesh,
    field_from_text,
    field_to_text,
    interpolate,
    norms,
    partition_of_unity,
)
from .minimize import (
    EnergyCurve,
    ExistenceReport,
    FlowOptions,
    ThresholdCurve,
    energy_curve,
    existence_check,
    ground_state,
    ionization_threshold,
)
from .operators import (
    FormMatrices,
    GroundState,
    PotentialSpec,
    ProblemSpec,
    assemble_forms,
    el_residual,
    energy,
    energy_gradient,
    multiplier,
)
from .soliton import SolitonSolution, gamma_q, mu_star, soliton_oracle
from .spectral import SpectralReport, clusters, lowest_eigenpairs, sigma_threshold
from .verify import (
    ConvergenceReport,
    IMSReport,
    InequalityReport,
    check_gn,
    check_ims,
    check_sobolev,
    field_product,
    ims_convergence,
    random_bump_corpus,
)

__version__ = "0.1.0"
