"""Belief-updating engines: CTE-BU, MC-BU(i), IJGP(i) and IBP."""

from .beliefs import BeliefKind, Beliefs, ConvergenceSpec, IterationRecord, McMode, Message
from .cluster_tree import cte_bu, mc_bu, partition_cluster
from .propagation import JoinGraphPropagation, ibp, ijgp, trace_to_text
from .schedule import iteration_order, message_schedule

__all__ = [
    "BeliefKind",
    "Beliefs",
    "ConvergenceSpec",
    "IterationRecord",
    "JoinGraphPropagation",
    "McMode",
    "Message",
    "cte_bu",
    "ibp",
    "ijgp",
    "iteration_order",
    "mc_bu",
    "message_schedule",
    "partition_cluster",
    "trace_to_text",
]
