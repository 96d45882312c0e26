"""Community detection by modularity maximization on QUBO/Ising models.

Graphs are compiled into a two-community or k-concurrent (one-hot)
QUBO and solved with a classical annealing stack: exhaustive
enumeration, simulated annealing, tabu search and a decomposition loop
for problems too large to anneal in one piece.
"""
from .graph_io import Graph, GraphParseError, load_edge_list, load_gml, load_graph
from .modularity import (
    CommunityLabeling,
    ModularityMatrix,
    modularity_matrix,
    modularity_score,
    threshold_matrix,
)
from .pipeline import Detection, auto_detect, detect_communities, run_detection
from .qubo import (
    IsingModel,
    PenaltyConfig,
    Qubo,
    decode_labeling,
    ising_from_qubo,
    k_concurrent_qubo,
    qubo_from_ising,
    two_community_qubo,
)
from .solvers import Backend, SampleSet, SolverParams, exhaustive_solve, hybrid_solve, sa_sample, tabu_improve

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "CommunityLabeling",
    "Detection",
    "Graph",
    "GraphParseError",
    "IsingModel",
    "ModularityMatrix",
    "PenaltyConfig",
    "Qubo",
    "SampleSet",
    "SolverParams",
    "auto_detect",
    "decode_labeling",
    "detect_communities",
    "exhaustive_solve",
    "hybrid_solve",
    "ising_from_qubo",
    "k_concurrent_qubo",
    "load_edge_list",
    "load_gml",
    "load_graph",
    "modularity_matrix",
    "modularity_score",
    "qubo_from_ising",
    "run_detection",
    "sa_sample",
    "tabu_improve",
    "threshold_matrix",
    "two_community_qubo",
]
