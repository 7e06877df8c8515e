"""Task-dependent node-wise controllability scores for LTI network systems."""

from .errors import (
    CtrlScoreError,
    HorizonOverflowError,
    InfeasibleAllocationError,
    InvalidHorizonError,
    ParseError,
    SchemaError,
    StagnationError,
)
from .genericity import DiagnosticsReport, assumption1_check, gram_matrix, small_T_limit_check
from .gramian import (
    DynamicsMatrix,
    FeasibilityResult,
    GramianMethod,
    NodeGramianSet,
    Provenance,
    aggregate_gramian,
    feasibility,
    gramian_quadrature_oracle,
    matrix_exp,
    node_gramians,
)
from .network_io import (
    ConnectivityMatrix,
    CorrelationReport,
    laplacian_dynamics,
    load_connectivity,
    load_task_spec,
    read_score_csv,
    read_score_report,
    write_report,
    write_score_csv,
)
from .solver import (
    Allocation,
    ScoreReport,
    SolverOptions,
    grid_oracle,
    gradient,
    min_energy,
    objective,
    project_simplex,
    second_directional,
    solve,
)
from .task_weighting import (
    TaskMode,
    TaskSpec,
    WeightMatrix,
    build_weight,
    displacement_stats,
    isotropic_weight,
    weight_matrix,
)

__version__ = "0.1.0"
