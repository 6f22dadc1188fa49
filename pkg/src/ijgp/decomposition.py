"""Tree decompositions, bounded edge-labelled join-graphs and dual join-graphs.

Orderings are elimination orders: the first variable listed is eliminated
first.  In bucket terms that variable has the highest index, so a function is
placed in the bucket of whichever of its variables comes first in the order.
"""

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field

import networkx as nx

from .errors import IBoundTooSmall, NotConnected
from .model import BayesianNetwork, moral_graph
from .partition import greedy_partition


@dataclass(frozen=True)
class ClusterNode:
    id: int
    chi: frozenset
    psi: frozenset = frozenset()


@dataclass(frozen=True)
class JoinEdge:
    u: int
    v: int
    label: frozenset
    kind: str = "out"

    @property
    def key(self):
        return (min(self.u, self.v), max(self.u, self.v))


def _scopes_of(net_or_scopes):
    if isinstance(net_or_scopes, BayesianNetwork):
        return tuple(tuple(f.scope) for f in net_or_scopes.cpts), net_or_scopes.n
    scopes = tuple(tuple(s) for s in net_or_scopes)
    n = max((max(s) for s in scopes if s), default=-1) + 1
    return scopes, n


class EdgeLabeledJoinGraph:
    """Clusters with variable sets ``chi``, function sets ``psi`` and labelled edges.

    ``scopes`` lists the scope of every function referenced by ``psi``.
    ``home`` optionally fixes, per variable, the cluster from which its
    belief is read; otherwise the lowest-id cluster containing it is used.
    """

    def __init__(self, nodes, edges, scopes, n_vars=None, home=None):
        self.nodes = tuple(nodes)
        for k, node in enumerate(self.nodes):
            if node.id != k:
                raise ValueError("cluster ids must be 0..N-1 in order")
        self.edges = tuple(edges)
        self.scopes = tuple(tuple(s) for s in scopes)
        if n_vars is None:
            n_vars = max((max(nd.chi) for nd in self.nodes if nd.chi), default=-1) + 1
        self.n_vars = n_vars
        self._labels = {}
        self._adj = defaultdict(list)
        for e in self.edges:
            if e.u == e.v:
                raise ValueError(f"self-loop on cluster {e.u}")
            if e.key in self._labels:
                raise ValueError(f"parallel edge {e.key}")
            self._labels[e.key] = e.label
            self._adj[e.u].append(e.v)
            self._adj[e.v].append(e.u)
        for k in self._adj:
            self._adj[k].sort()
        self._home = {}
        for nd in self.nodes:
            for v in nd.chi:
                self._home.setdefault(v, nd.id)
        self._home.update(home or {})
        self._explicit_home = dict(home or {})

    def neighbors(self, u):
        return tuple(self._adj.get(u, ()))

    def theta(self, u, v):
        return self._labels[(min(u, v), max(u, v))]

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self._labels

    def directed_edges(self):
        return sorted(itertools.chain.from_iterable(((e.u, e.v), (e.v, e.u)) for e in self.edges))

    def clusters_with(self, var):
        return [nd.id for nd in self.nodes if var in nd.chi]

    def home(self, var):
        return self._home.get(var)

    @property
    def internal_width(self):
        return max((len(nd.chi) for nd in self.nodes), default=0)

    def graph(self):
        g = nx.Graph()
        g.add_nodes_from(nd.id for nd in self.nodes)
        for e in self.edges:
            g.add_edge(e.u, e.v, label=e.label)
        return g

    def is_tree(self):
        return nx.is_tree(self.graph()) if self.nodes else False

    def with_edges(self, edges):
        return EdgeLabeledJoinGraph(self.nodes, edges, self.scopes, self.n_vars, self._explicit_home)

    def to_text(self):
        """Debug dump, one cluster per line: ``id | chi | psi | neighbors:labels``."""
        lines = []
        for nd in self.nodes:
            nbrs = " ".join(
                f"{w}:{','.join(map(str, sorted(self.theta(nd.id, w))))}"
                for w in self.neighbors(nd.id)
            )
            lines.append(
                f"{nd.id} | {' '.join(map(str, sorted(nd.chi)))} | "
                f"{' '.join(map(str, sorted(nd.psi)))} | {nbrs}"
            )
        return "\n".join(lines) + "\n"


class TreeDecomposition(EdgeLabeledJoinGraph):
    """Join-graph whose edges form a tree labelled with full separators."""

    def __init__(self, nodes, edges, scopes, n_vars=None, home=None):
        nodes = tuple(nodes)
        labelled = []
        for e in edges:
            if isinstance(e, JoinEdge):
                labelled.append(e)
            else:
                u, v = e
                labelled.append(JoinEdge(u, v, nodes[u].chi & nodes[v].chi, "tree"))
        super().__init__(nodes, labelled, scopes, n_vars, home)

    def sep(self, u, v):
        return self.nodes[u].chi & self.nodes[v].chi

    def elim(self, u, v):
        return self.nodes[u].chi - self.nodes[v].chi

    @property
    def treewidth(self):
        return self.internal_width - 1


DualJoinGraph = EdgeLabeledJoinGraph


# ---------------------------------------------------------------------------
# elimination orders


def _fill_count(adj, v):
    nbrs = list(adj[v])
    return sum(1 for a, b in itertools.combinations(nbrs, 2) if b not in adj[a])


def elimination_order(graph, heuristic="min-fill"):
    """Greedy elimination order and its induced width.

    ``heuristic`` is ``"min-fill"`` or ``"min-induced-width"`` (min-degree);
    ties go to the lowest variable id.
    """
    if heuristic not in ("min-fill", "min-induced-width"):
        raise ValueError(f"unknown heuristic {heuristic!r}")
    adj = {v: set(graph.neighbors(v)) for v in graph.nodes}
    fill = {v: _fill_count(adj, v) for v in adj} if heuristic == "min-fill" else None
    order = []
    width = 0
    while adj:
        if fill is not None:
            v = min(adj, key=lambda x: (fill[x], x))
        else:
            v = min(adj, key=lambda x: (len(adj[x]), x))
        nbrs = adj.pop(v)
        width = max(width, len(nbrs))
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
        order.append(v)
        if fill is not None:
            del fill[v]
            # only vertices within distance two of v can change their fill count
            touched = set(nbrs)
            for a in nbrs:
                touched |= adj[a]
            for a in touched:
                fill[a] = _fill_count(adj, a)
    return order, width


def induced_width(graph, order):
    adj = {v: set(graph.neighbors(v)) for v in graph.nodes}
    width = 0
    for v in order:
        nbrs = adj.pop(v)
        width = max(width, len(nbrs))
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
    return width


def exact_treewidth(graph):
    """Treewidth by dynamic programming over vertex subsets (small graphs only)."""
    nodes = sorted(graph.nodes)
    n = len(nodes)
    if n == 0:
        return -1
    if n > 20:
        raise ValueError("exact treewidth limited to 20 vertices")
    index = {v: k for k, v in enumerate(nodes)}
    nbr = [0] * n
    for a, b in graph.edges:
        nbr[index[a]] |= 1 << index[b]
        nbr[index[b]] |= 1 << index[a]

    def q(s, v):
        # vertices outside s|{v} reachable from v through s
        seen = 1 << v
        frontier = [v]
        out = 0
        while frontier:
            x = frontier.pop()
            for y in range(n):
                if nbr[x] >> y & 1 and not seen >> y & 1:
                    seen |= 1 << y
                    if s >> y & 1:
                        frontier.append(y)
                    else:
                        out += 1
        return out

    tw = {0: -1}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            s = 0
            for k in combo:
                s |= 1 << k
            best = n
            for v in combo:
                rest = s & ~(1 << v)
                best = min(best, max(tw[rest], q(rest, v)))
            tw[s] = best
    return tw[(1 << n) - 1]


# ---------------------------------------------------------------------------
# join trees


def _triangulate(graph, order):
    adj = {v: set(graph.neighbors(v)) for v in graph.nodes}
    cliques = []
    for v in order:
        nbrs = adj.pop(v)
        cliques.append(frozenset(nbrs | {v}))
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
    return cliques


def _tree_from_cliques(cliques, scopes, n_vars):
    containing = defaultdict(list)
    for k, c in enumerate(cliques):
        for v in c:
            containing[v].append(k)
    maximal = []
    for k, c in enumerate(cliques):
        pivot = min(c, key=lambda v: len(containing[v]))
        if any(
            (c < cliques[j]) or (c == cliques[j] and j < k)
            for j in containing[pivot]
            if j != k
        ):
            continue
        maximal.append(c)
    holders = defaultdict(list)
    for k, c in enumerate(maximal):
        for v in c:
            holders[v].append(k)
    pairs = set()
    for ks in holders.values():
        pairs.update(itertools.combinations(ks, 2))
    candidates = sorted(
        ((len(maximal[a] & maximal[b]), a, b) for a, b in pairs),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    parent = list(range(len(maximal)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, a, b in candidates:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges.append((a, b))
    # disconnected parts of the network are joined by empty separators
    for k in range(1, len(maximal)):
        if find(k) != find(0):
            parent[find(k)] = find(0)
            edges.append((0, k))
    psi = defaultdict(set)
    for fid, s in enumerate(scopes):
        s = set(s)
        for k, c in enumerate(maximal):
            if s <= c:
                psi[k].add(fid)
                break
        else:
            raise ValueError(f"no clique contains scope {sorted(s)}")
    nodes = [ClusterNode(k, c, frozenset(psi[k])) for k, c in enumerate(maximal)]
    return TreeDecomposition(nodes, edges, scopes, n_vars)


def build_join_tree(net_or_scopes, ordering=None):
    """Join tree from the triangulation induced by ``ordering``.

    Maximal cliques become clusters (numbered in elimination order), joined
    by a maximum-weight spanning tree on separator size.  Each function goes
    to the first cluster containing its scope.
    """
    scopes, n = _scopes_of(net_or_scopes)
    graph = moral_graph(net_or_scopes) if isinstance(net_or_scopes, BayesianNetwork) else primal_graph_of(scopes, n)
    if ordering is None:
        ordering, _ = elimination_order(graph)
    if sorted(ordering) != sorted(graph.nodes):
        raise ValueError("ordering must be a permutation of the variables")
    return _tree_from_cliques(_triangulate(graph, ordering), scopes, n)


def primal_graph_of(scopes, n):
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for s in scopes:
        g.add_edges_from(itertools.combinations(s, 2))
    return g


# ---------------------------------------------------------------------------
# schematic mini-buckets and join-graph structuring


@dataclass
class MiniBucket:
    id: int
    bucket: int
    variables: frozenset
    functions: tuple
    incoming: tuple
    message_scope: frozenset
    parent: int = None
    children: list = field(default_factory=list)


@dataclass
class MiniBucketForest:
    ordering: tuple
    i: int
    minibuckets: list

    def by_bucket(self):
        out = defaultdict(list)
        for mb in self.minibuckets:
            out[mb.bucket].append(mb)
        return out


def schematic_mini_bucket(net_or_scopes, ordering, i, strict=False):
    """Trace the scopes produced by mini-bucket elimination without computing tables.

    A function wider than ``i`` gets a mini-bucket of its own, unless
    ``strict`` is set, in which case it raises IBoundTooSmall.
    """
    scopes, n = _scopes_of(net_or_scopes)
    for k, s in enumerate(scopes):
        if strict and len(s) > i:
            raise IBoundTooSmall(f"function {k} has {len(s)} variables, more than i={i}")
    ordering = tuple(ordering)
    pos = {v: k for k, v in enumerate(ordering)}
    if len(pos) != len(ordering) or any(v not in pos for s in scopes for v in s):
        raise ValueError("ordering must cover every variable once")

    # bucket entries: ("f", function id, scope) or ("m", minibucket id, scope)
    buckets = defaultdict(list)
    for fid, s in enumerate(scopes):
        if s:
            buckets[min(s, key=pos.__getitem__)].append(("f", fid, frozenset(s)))
    minibuckets = []
    for var in ordering:
        entries = buckets.pop(var, [])
        # original functions before messages, each in id/creation order
        entries.sort(key=lambda e: (e[0] != "f", e[1]))
        for group in greedy_partition([e[2] for e in entries], i):
            members = [entries[k] for k in group]
            variables = frozenset().union(*(e[2] for e in members))
            mb = MiniBucket(
                id=len(minibuckets),
                bucket=var,
                variables=variables,
                functions=tuple(sorted(e[1] for e in members if e[0] == "f")),
                incoming=tuple(sorted(e[1] for e in members if e[0] == "m")),
                message_scope=variables - {var},
            )
            for child in mb.incoming:
                minibuckets[child].parent = mb.id
                mb.children.append(child)
            minibuckets.append(mb)
            if mb.message_scope:
                target = min(mb.message_scope, key=pos.__getitem__)
                buckets[target].append(("m", mb.id, mb.message_scope))
    return MiniBucketForest(ordering, i, minibuckets)


def join_graph_structuring(net_or_scopes, i, ordering=None, strict=False):
    """Bounded edge-labelled join-graph built from the schematic mini-bucket trace.

    Mini-buckets become clusters; out-edges carry the message scope; the
    mini-buckets of one bucket are chained by in-edges labelled with the
    bucket variable.  The internal width is at most ``max(i, widest
    function)``; ``strict`` rejects functions wider than ``i``.
    """
    scopes, n = _scopes_of(net_or_scopes)
    if ordering is None:
        graph = moral_graph(net_or_scopes) if isinstance(net_or_scopes, BayesianNetwork) else primal_graph_of(scopes, n)
        ordering, _ = elimination_order(graph)
    forest = schematic_mini_bucket(scopes, ordering, i, strict=strict)
    nodes = [ClusterNode(mb.id, mb.variables, frozenset(mb.functions)) for mb in forest.minibuckets]
    edges = []
    for mb in forest.minibuckets:
        if mb.parent is not None:
            edges.append(JoinEdge(mb.id, mb.parent, mb.message_scope, "out"))
    for var, mbs in forest.by_bucket().items():
        for a, b in zip(mbs, mbs[1:]):
            edges.append(JoinEdge(a.id, b.id, frozenset({var}), "in"))
    edges.sort(key=lambda e: e.key)
    return EdgeLabeledJoinGraph(nodes, edges, scopes, max(n, len(ordering)))


def singleton_dual_join_graph(net):
    """Dual join-graph with one node per CPT and singleton parent labels."""
    nodes = [ClusterNode(k, frozenset(f.scope), frozenset({k})) for k, f in enumerate(net.cpts)]
    edges = []
    for child in net.topological_order():
        for parent in sorted(net.parents(child)):
            edges.append(JoinEdge(parent, child, frozenset({parent}), "dual"))
    edges.sort(key=lambda e: e.key)
    home = {v: v for v in range(net.n)}
    return EdgeLabeledJoinGraph(nodes, edges, [f.scope for f in net.cpts], net.n, home)


def tree_as_join_graph(tree):
    return EdgeLabeledJoinGraph(tree.nodes, tree.edges, tree.scopes, tree.n_vars)


# ---------------------------------------------------------------------------
# connectedness, minimality, validation


def _variable_index(jg):
    """Per variable: the clusters holding it and the edges whose label contains it."""
    index = getattr(jg, "_var_index", None)
    if index is None:
        holders = defaultdict(list)
        labelled = defaultdict(list)
        for nd in jg.nodes:
            for v in nd.chi:
                holders[v].append(nd.id)
        for e in jg.edges:
            for v in e.label:
                labelled[v].append(e)
        index = (holders, labelled)
        jg._var_index = index
    return index


def _variable_components(jg, var, skip=None):
    """Connected components of the clusters holding ``var`` via edges labelled with it."""
    holders, labelled = _variable_index(jg)
    adj = defaultdict(list)
    for e in labelled.get(var, ()):
        if e is not skip:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
    seen = set()
    comps = []
    for h in holders.get(var, ()):
        if h in seen:
            continue
        comp = {h}
        queue = deque([h])
        seen.add(h)
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    queue.append(y)
        comps.append(comp)
    return comps


def _edge_connected(jg, var, skip=None):
    return len(_variable_components(jg, var, skip)) <= 1


def variable_cycles(jg):
    """Variables whose labelled subgraph contains a cycle."""
    out = []
    holders, labelled = _variable_index(jg)
    for var in range(jg.n_vars):
        comps = _variable_components(jg, var)
        if len(labelled.get(var, ())) > len(holders.get(var, ())) - len(comps):
            out.append(var)
    return out


def minimize_edge_labels(jg):
    """Greedily delete label variables while edge-connectedness holds.

    Edges are scanned in order and label variables in ascending id, repeated
    until nothing more can be removed; edges left with empty labels are dropped.
    """
    for var in range(jg.n_vars):
        if not _edge_connected(jg, var):
            raise NotConnected(f"variable {var} is not edge-connected")
    edges = list(jg.edges)
    changed = True
    while changed:
        changed = False
        for k in range(len(edges)):
            for var in sorted(edges[k].label):
                e = edges[k]
                trial = JoinEdge(e.u, e.v, e.label - {var}, e.kind)
                candidate = jg.with_edges(edges[:k] + [trial] + edges[k + 1:])
                if _edge_connected(candidate, var):
                    edges[k] = trial
                    changed = True
    return jg.with_edges([e for e in edges if e.label])


def is_label_minimal(jg):
    for e in jg.edges:
        for var in e.label:
            if _edge_connected(jg, var, skip=e):
                return False
    return True


@dataclass
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list
    internal_width: int
    external_width: int
    external_width_exact: bool
    is_tree: bool
    minimal: bool

    @property
    def ok(self):
        return not self.violations

    @property
    def treewidth(self):
        return self.internal_width - 1

    def structural(self):
        return [v for v in self.violations if v.kind != "LabelNotMinimal"]


def validate_decomposition(d, require_minimal=None, widths=True):
    """Check placement, containment, connectedness, tree-ness and minimality.

    Tree decompositions must be trees; label minimality is required by
    default only for non-tree join-graphs.  With ``widths=False`` the
    external width and, unless required, minimality are not computed (they
    are reported as None).
    """
    violations = []
    placed = defaultdict(list)
    for nd in d.nodes:
        for fid in nd.psi:
            placed[fid].append(nd.id)
    for fid, scope in enumerate(d.scopes):
        where = placed.get(fid, [])
        if len(where) != 1:
            violations.append(Violation("FactorPlacement", f"function {fid} placed in clusters {where}"))
        for u in where:
            missing = set(scope) - d.nodes[u].chi
            if missing:
                violations.append(
                    Violation("ScopeContainment", f"function {fid} needs {sorted(missing)} in cluster {u}")
                )
    for fid in placed:
        if not 0 <= fid < len(d.scopes):
            violations.append(Violation("FactorPlacement", f"unknown function {fid}"))
    for e in d.edges:
        extra = e.label - (d.nodes[e.u].chi & d.nodes[e.v].chi)
        if extra:
            violations.append(Violation("LabelContainment", f"edge {e.key} label has {sorted(extra)}"))
    for var in range(d.n_vars):
        comps = _variable_components(d, var)
        if len(comps) > 1:
            kind = "RunningIntersection" if isinstance(d, TreeDecomposition) else "EdgeConnectedness"
            violations.append(Violation(kind, f"variable {var} split into {[sorted(c) for c in comps]}"))
    tree = d.is_tree()
    if isinstance(d, TreeDecomposition) and not tree:
        violations.append(Violation("NotATree", f"{len(d.nodes)} clusters, {len(d.edges)} edges"))
    if require_minimal is None:
        require_minimal = not isinstance(d, TreeDecomposition)
    minimal = is_label_minimal(d) if (widths or require_minimal) else None
    if require_minimal and not minimal:
        violations.append(Violation("LabelNotMinimal", "some label variable can be deleted"))
    if not widths:
        return ValidationReport(violations, d.internal_width, None, False, tree, minimal)
    g = d.graph()
    if len(d.nodes) <= 12:
        ext, exact = exact_treewidth(g), True
    else:
        ext, exact = elimination_order(g)[1], False
    return ValidationReport(violations, d.internal_width, ext, exact, tree, minimal)


def edge_separation(jg, nw, ny, ez):
    """True iff deleting the edges ``ez`` leaves no path from ``nw`` to ``ny``."""
    nw, ny = set(nw), set(ny)
    if nw & ny:
        return False
    cut = {(min(u, v), max(u, v)) for u, v in ez}
    adj = defaultdict(list)
    for e in jg.edges:
        if e.key not in cut:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
    seen = set(nw)
    queue = deque(nw)
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y in ny:
                return False
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return True


def separated_variables(jg, nw, ny, ez):
    """Variable sets (W, Y, Z) named by an edge-separation query."""
    w = frozenset().union(*(jg.nodes[u].chi for u in nw)) if nw else frozenset()
    y = frozenset().union(*(jg.nodes[u].chi for u in ny)) if ny else frozenset()
    z = frozenset().union(*(jg.theta(u, v) for u, v in ez)) if ez else frozenset()
    return w, y, z
