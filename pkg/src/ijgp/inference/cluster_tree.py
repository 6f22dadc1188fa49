"""Cluster-tree elimination (exact) and mini-clustering (bounded) for belief updating."""

import math

import numpy as np

from ..decomposition import validate_decomposition
from ..errors import DecompositionInvalid, ScopeTooLarge
from ..factors import DEFAULT_MAX_ENTRIES, EliminationOperator, Factor, combine, eliminate
from ..model import apply_evidence
from ..partition import greedy_partition
from .beliefs import (
    BeliefKind,
    Beliefs,
    McMode,
    Message,
    expand_evidence_joint,
    normalized_rows,
)

_MODE_OP = {
    McMode.UPPER: EliminationOperator.MAX,
    McMode.LOWER: EliminationOperator.MIN,
    McMode.APPROX: EliminationOperator.MEAN,
    McMode.SUM: EliminationOperator.SUM,
}

_MODE_KIND = {
    McMode.UPPER: BeliefKind.UPPER,
    McMode.LOWER: BeliefKind.LOWER,
    McMode.APPROX: BeliefKind.APPROXIMATE,
    McMode.SUM: BeliefKind.UPPER,
}


def partition_cluster(functions, i, strict=False):
    """Greedy mini-cluster partition of ``functions`` (largest scope first).

    Returns lists of factors in mini-cluster creation order.  A function
    wider than ``i`` forms its own mini-cluster unless ``strict`` is set.
    """
    functions = list(functions)
    groups = greedy_partition([f.scope for f in functions], i, strict=strict)
    return [[functions[k] for k in g] for g in groups]


def _tree_passes(tree):
    """Inward then outward directed edges for every connected component."""
    inward = []
    seen = set()
    for root in range(len(tree.nodes)):
        if root in seen:
            continue
        seen.add(root)
        order = [(root, None)]
        k = 0
        while k < len(order):
            u, parent = order[k]
            k += 1
            for w in tree.neighbors(u):
                if w != parent:
                    seen.add(w)
                    order.append((w, u))
        inward.extend((u, p) for u, p in reversed(order) if p is not None)
    outward = [(v, u) for u, v in reversed(inward)]
    return inward, outward


class _ClusterTreeRun:
    def __init__(self, net, tree, evidence, i=None, mode=McMode.UPPER, max_entries=DEFAULT_MAX_ENTRIES):
        self.net = net
        self.tree = tree
        self.evidence = dict(evidence or {})
        self.cards = net.cards
        self.i = i
        self.op = _MODE_OP[mode]
        self.max_entries = max_entries
        reduced = apply_evidence(net, self.evidence)
        self.local = {nd.id: [reduced[f] for f in sorted(nd.psi)] for nd in tree.nodes}
        self.messages = {}

    def chi(self, u):
        return {v for v in self.tree.nodes[u].chi if v not in self.evidence}

    def cluster(self, u, exclude=None):
        out = list(self.local[u])
        for w in self.tree.neighbors(u):
            if w != exclude and (w, u) in self.messages:
                out.extend(self.messages[(w, u)].functions)
        return out

    def _groups(self, functions):
        if self.i is None:
            return [functions] if functions else []
        return partition_cluster(functions, self.i)

    def _reduce_groups(self, groups, elim):
        """Eliminate ``elim`` from each mini-cluster product.

        The last mini-cluster is summed over all of ``elim``; a variable it
        does not mention contributes its domain size.  The others use the
        mode operator over the variables they mention.
        """
        out = []
        for k, group in enumerate(groups):
            product = combine(group, max_entries=self.max_entries)
            present = elim & set(product.scope)
            if k == len(groups) - 1:
                h = eliminate(product, present, EliminationOperator.SUM)
                absent = math.prod(self.cards[x] for x in elim - present)
                if absent != 1:
                    h = Factor(h.scope, h.table * absent)
            else:
                h = eliminate(product, present, self.op)
            out.append(h)
        return out

    def send(self, u, v):
        elim = self.chi(u) - set(self.tree.theta(u, v))
        functions = self.cluster(u, exclude=v)
        combined_in = [f for f in functions if elim & set(f.scope)]
        individuals = [f for f in functions if not elim & set(f.scope)]
        combined = self._reduce_groups(self._groups(combined_in), elim)
        self.messages[(u, v)] = Message((u, v), combined, individuals)

    def belief_rows(self):
        rows = {}
        for var in range(self.net.n):
            if var in self.evidence:
                continue
            u = self.tree.home(var)
            functions = self.cluster(u) if u is not None else []
            rest = (self.chi(u) if u is not None else set()) - {var}
            row = np.ones(self.cards[var])
            for part in self._reduce_groups(self._groups(functions), rest):
                row = row * (part.table if var in part.scope else float(part.table))
            rows[var] = row
        return rows


def _run(net, tree, evidence, i, mode, kind, max_entries):
    report = validate_decomposition(tree, require_minimal=False, widths=False)
    if report.structural() or not report.is_tree:
        raise DecompositionInvalid(report)
    if i is None:
        for nd in tree.nodes:
            entries = math.prod(net.cards[v] for v in nd.chi if v not in (evidence or {}))
            if entries > max_entries:
                raise ScopeTooLarge(entries, max_entries)
    run = _ClusterTreeRun(net, tree, evidence, i=i, mode=mode, max_entries=max_entries)
    inward, outward = _tree_passes(tree)
    for u, v in inward + outward:
        run.send(u, v)
    rows = run.belief_rows()
    free = [v for v in range(net.n) if v not in run.evidence]
    pe = float(rows[free[0]].sum()) if free else _evidence_probability(run)
    joint = expand_evidence_joint(rows, run.evidence, net.cards, pe)
    marginals, degenerate = normalized_rows(joint, run.evidence, net.cards, kind)
    return run, marginals, joint, pe, degenerate


def _evidence_probability(run):
    # every variable observed: P(e) is the product of all scalar CPT slices
    total = 1.0
    for fs in run.local.values():
        for f in fs:
            total *= float(f.table)
    return total


def cte_bu(net, tree, evidence=None, max_entries=DEFAULT_MAX_ENTRIES):
    """Exact posterior marginals by two-pass cluster-tree elimination."""
    run, marginals, joint, pe, _ = _run(net, tree, evidence, None, McMode.SUM, BeliefKind.EXACT, max_entries)
    return Beliefs(marginals, BeliefKind.EXACT, joint=joint, normalizer=pe, evidence=run.evidence)


def mc_bu(net, tree, evidence=None, i=None, mode=McMode.UPPER, max_entries=None):
    """Mini-clustering: cluster-tree elimination with clusters split into ``i``-bounded parts.

    In every split, the last-created mini-cluster is eliminated by summation
    and the others by the operator selected by ``mode``.  UPPER yields upper
    bounds on P(x_i, e), LOWER lower bounds, APPROX a mean-based estimate.
    """
    if i is None:
        raise ValueError("mc_bu needs an i-bound")
    mode = McMode(mode)
    if max_entries is None:
        widest = max(len(f.scope) for f in net.cpts)
        max_entries = max(net.cards) ** max(i, widest)
    kind = _MODE_KIND[mode]
    run, marginals, joint, pe, degenerate = _run(net, tree, evidence, i, mode, kind, max_entries)
    return Beliefs(
        marginals, kind, joint=joint, normalizer=pe, evidence=run.evidence, degenerate=degenerate
    )
