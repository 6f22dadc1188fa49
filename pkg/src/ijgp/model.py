"""Discrete Bayesian networks, their graphs, and evidence conditioning."""

import itertools
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import CyclicDag, ScopeMismatch, UnnormalizedCpt, ValueOutOfRange
from .factors import Factor

CPT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Variable:
    id: int
    cardinality: int

    def __post_init__(self):
        if self.cardinality < 1:
            raise ValueError(f"variable {self.id} has cardinality {self.cardinality}")


class Evidence(dict):
    """Mapping variable id -> observed value index."""

    def validate(self, cards):
        for var, value in self.items():
            if var < 0 or var >= len(cards):
                raise ValueOutOfRange(f"evidence on unknown variable {var}")
            if not 0 <= value < cards[var]:
                raise ValueOutOfRange(
                    f"value {value} out of range for variable {var} (d={cards[var]})"
                )
        return self


@dataclass(frozen=True, eq=False)
class BayesianNetwork:
    variables: tuple
    cpts: tuple
    dag_edges: tuple = field(default=())

    @property
    def n(self):
        return len(self.variables)

    @property
    def cards(self):
        return tuple(v.cardinality for v in self.variables)

    def parents(self, var):
        cpt = self.cpts[var]
        return tuple(v for v in cpt.scope if v != var)

    def children(self, var):
        return tuple(c for p, c in self.dag_edges if p == var)

    def topological_order(self):
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.dag_edges)
        return list(nx.lexicographical_topological_sort(g))

    def joint_probability(self, assignment):
        """P(x) as the product of CPT entries for a complete assignment."""
        p = 1.0
        for cpt in self.cpts:
            p *= float(cpt.table[tuple(assignment[v] for v in cpt.scope)])
        return p

    def __eq__(self, other):
        if not isinstance(other, BayesianNetwork):
            return NotImplemented
        return (
            self.cards == other.cards
            and set(self.dag_edges) == set(other.dag_edges)
            and all(a == b for a, b in zip(self.cpts, other.cpts))
        )

    __hash__ = None


def _check_cpt(cpt, tol):
    axis = cpt.scope.index(cpt.child)
    # a root CPT sums to a 0-d array, which argwhere would never flag
    totals = np.atleast_1d(cpt.table.sum(axis=axis))
    bad = np.argwhere(np.abs(totals - 1.0) > tol)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        parents = [v for v in cpt.scope if v != cpt.child]
        config = dict(zip(parents, idx))
        raise UnnormalizedCpt(cpt.child, config, float(totals[tuple(bad[0])]))


def build_network(variables, cpts, dag_edges=None, *, check_cpts=True, tol=CPT_TOLERANCE):
    """Validate and assemble a Bayesian network.

    ``cpts`` may be given in any order; each must have ``child`` set and the
    result stores them indexed by child.  ``dag_edges`` defaults to the edges
    implied by the CPT scopes.  ``check_cpts=False`` accepts arbitrary
    non-negative tables (Markov-network style factor lists).
    """
    variables = tuple(v if isinstance(v, Variable) else Variable(i, int(v)) for i, v in enumerate(variables))
    for i, v in enumerate(variables):
        if v.id != i:
            raise ScopeMismatch(f"variable ids must be 0..n-1 in order; found {v.id} at position {i}")
    n = len(variables)
    cards = [v.cardinality for v in variables]

    by_child = {}
    for cpt in cpts:
        if cpt.child is None:
            raise ScopeMismatch(f"factor over {cpt.scope} has no child variable")
        if cpt.child not in cpt.scope:
            raise ScopeMismatch(f"child {cpt.child} not in scope {cpt.scope}")
        if cpt.child in by_child:
            raise ScopeMismatch(f"two CPTs for variable {cpt.child}")
        for v, d in zip(cpt.scope, cpt.cards):
            if not 0 <= v < n:
                raise ScopeMismatch(f"unknown variable {v} in scope {cpt.scope}")
            if cards[v] != d:
                raise ScopeMismatch(f"variable {v} has cardinality {cards[v]} but table axis has {d}")
        by_child[cpt.child] = cpt
    missing = set(range(n)) - set(by_child)
    if missing:
        raise ScopeMismatch(f"no CPT for variables {sorted(missing)}")

    implied = {(p, c) for c, cpt in by_child.items() for p in cpt.scope if p != c}
    if dag_edges is None:
        edges = implied
    else:
        edges = {(int(p), int(c)) for p, c in dag_edges}
        if edges != implied:
            raise ScopeMismatch(
                f"dag edges disagree with CPT scopes: {sorted(edges ^ implied)}"
            )
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    if not nx.is_directed_acyclic_graph(g):
        raise CyclicDag(f"cycle through {nx.find_cycle(g)}")

    ordered = tuple(by_child[i] for i in range(n))
    if check_cpts:
        for cpt in ordered:
            _check_cpt(cpt, tol)
    return BayesianNetwork(variables, ordered, tuple(sorted(edges)))


def cpt(child, parents, cards, values):
    """Convenience constructor: CPT p(child | parents) with the child axis last."""
    scope = tuple(parents) + (child,)
    return Factor.from_values(scope, [cards[v] for v in scope], values, child=child)


def moral_graph(net):
    """Undirected graph where each family forms a clique."""
    g = nx.Graph()
    g.add_nodes_from(range(net.n))
    for f in net.cpts:
        g.add_edges_from(itertools.combinations(f.scope, 2))
    return g


def primal_graph(factors, n=None):
    g = nx.Graph()
    if n is not None:
        g.add_nodes_from(range(n))
    for f in factors:
        g.add_nodes_from(f.scope)
        g.add_edges_from(itertools.combinations(f.scope, 2))
    return g


def dual_graph(factors):
    """One node per factor; edges join intersecting scopes, labelled by the shared variables."""
    factors = list(factors)
    if not factors:
        raise ValueError("dual graph of an empty factor list")
    g = nx.Graph()
    g.add_nodes_from(range(len(factors)))
    scopes = [set(f.scope) for f in factors]
    for i, j in itertools.combinations(range(len(factors)), 2):
        shared = scopes[i] & scopes[j]
        if shared:
            g.add_edge(i, j, label=frozenset(shared))
    return g


def apply_evidence(net_or_factors, evidence):
    """Slice every factor at the observed values.

    Factors whose scope becomes empty stay in the list as scalars so that
    P(e) remains recoverable from the product.
    """
    if isinstance(net_or_factors, BayesianNetwork):
        Evidence(evidence).validate(net_or_factors.cards)
        factors = net_or_factors.cpts
    else:
        factors = net_or_factors
    if not evidence:
        return list(factors)
    return [f.reduce(evidence) for f in factors]
