"""Exact and bounded belief updating for discrete Bayesian networks."""

from .decomposition import (
    EdgeLabeledJoinGraph,
    TreeDecomposition,
    build_join_tree,
    edge_separation,
    elimination_order,
    join_graph_structuring,
    minimize_edge_labels,
    schematic_mini_bucket,
    singleton_dual_join_graph,
    validate_decomposition,
)
from .factors import EliminationOperator, Factor, combine, eliminate, normalize
from .flat import flatten, rdac, relation_join, relation_project, zero_belief_audit
from .inference import (
    BeliefKind,
    Beliefs,
    ConvergenceSpec,
    McMode,
    cte_bu,
    ibp,
    ijgp,
    mc_bu,
    message_schedule,
    partition_cluster,
)
from .model import BayesianNetwork, Evidence, Variable, apply_evidence, build_network, cpt, dual_graph, moral_graph

__all__ = [
    "BayesianNetwork",
    "BeliefKind",
    "Beliefs",
    "ConvergenceSpec",
    "EdgeLabeledJoinGraph",
    "EliminationOperator",
    "Evidence",
    "Factor",
    "McMode",
    "TreeDecomposition",
    "Variable",
    "apply_evidence",
    "build_join_tree",
    "build_network",
    "combine",
    "cpt",
    "cte_bu",
    "dual_graph",
    "edge_separation",
    "eliminate",
    "elimination_order",
    "flatten",
    "ibp",
    "ijgp",
    "join_graph_structuring",
    "mc_bu",
    "message_schedule",
    "minimize_edge_labels",
    "moral_graph",
    "normalize",
    "partition_cluster",
    "rdac",
    "relation_join",
    "relation_project",
    "schematic_mini_bucket",
    "singleton_dual_join_graph",
    "validate_decomposition",
    "zero_belief_audit",
]
