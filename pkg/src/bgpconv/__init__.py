"""Convergence-time laboratory for partially centralized inter-domain
routing: closed-form Markov-chain evaluation, a conforming Monte Carlo
simulator, and experiment drivers that compare the two."""

from ._kernels import HAS_NUMBA, active_backend, run_dissemination
from .analytic import (
    EPS_DEGREE,
    TAIL_FLOOR,
    BgpDegreeProfile,
    ConvergenceEstimate,
    CoreEstimate,
    config_degree_row,
    convergence_time,
    core_convergence_time,
    degree_config,
    degree_full_mesh,
    degree_poisson,
    degree_profile,
)
from .errors import (
    DegenerateTailError,
    DomainError,
    ModelDegenerateError,
    UnreachableTopologyError,
)
from .experiments import (
    CaseStudyResult,
    ComparisonRow,
    CoreRow,
    SweepSpec,
    emit,
    parse_config,
    power_law_config_spec,
    run_case_study,
    run_sweep,
)
from .graphs import (
    KIND_PEER11,
    KIND_PEER22,
    KIND_TRANSIT12,
    ROLE_FLAT,
    ROLE_TIER1,
    ROLE_TIER2,
    DegreeSequenceStats,
    Graph,
    ReachableDraw,
    ensure_reachable,
    export_graph,
    gen_config_model,
    gen_full_mesh,
    gen_graph,
    gen_poisson,
    gen_power_law_degrees,
    gen_tiered_core,
    import_graph,
    is_fully_reachable,
    reachable_set,
)
from .model import (
    ConfigModel,
    FullMesh,
    ModelParams,
    Poisson,
    StepContext,
    TieredCore,
    TopologySpec,
    informed_count,
    p_sdn,
    p_sdn_distribution,
)
from .simulate import (
    BatchResult,
    DisseminationTrace,
    RunConfig,
    RunStats,
    derive_seed,
    format_trace,
    simulate_batch,
    simulate_once,
    simulate_tiered,
)

__version__ = "0.1.0"

__all__ = [
    "BatchResult",
    "BgpDegreeProfile",
    "CaseStudyResult",
    "ComparisonRow",
    "ConfigModel",
    "ConvergenceEstimate",
    "CoreEstimate",
    "CoreRow",
    "DegenerateTailError",
    "DegreeSequenceStats",
    "DisseminationTrace",
    "DomainError",
    "EPS_DEGREE",
    "FullMesh",
    "Graph",
    "HAS_NUMBA",
    "KIND_PEER11",
    "KIND_PEER22",
    "KIND_TRANSIT12",
    "ModelDegenerateError",
    "ModelParams",
    "Poisson",
    "ROLE_FLAT",
    "ROLE_TIER1",
    "ROLE_TIER2",
    "ReachableDraw",
    "RunConfig",
    "RunStats",
    "StepContext",
    "SweepSpec",
    "TAIL_FLOOR",
    "TieredCore",
    "TopologySpec",
    "UnreachableTopologyError",
    "active_backend",
    "config_degree_row",
    "convergence_time",
    "core_convergence_time",
    "degree_config",
    "degree_full_mesh",
    "degree_poisson",
    "degree_profile",
    "derive_seed",
    "emit",
    "ensure_reachable",
    "export_graph",
    "format_trace",
    "gen_config_model",
    "gen_full_mesh",
    "gen_graph",
    "gen_poisson",
    "gen_power_law_degrees",
    "gen_tiered_core",
    "import_graph",
    "informed_count",
    "is_fully_reachable",
    "p_sdn",
    "p_sdn_distribution",
    "parse_config",
    "power_law_config_spec",
    "reachable_set",
    "run_case_study",
    "run_dissemination",
    "run_sweep",
    "simulate_batch",
    "simulate_once",
    "simulate_tiered",
]
