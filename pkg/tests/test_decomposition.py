import itertools

import networkx as nx
import numpy as np
import pytest

from ijgp.benchgen import gen_grid, gen_polytree
from ijgp.decomposition import (
    ClusterNode,
    EdgeLabeledJoinGraph,
    JoinEdge,
    TreeDecomposition,
    build_join_tree,
    edge_separation,
    elimination_order,
    exact_treewidth,
    induced_width,
    is_label_minimal,
    join_graph_structuring,
    minimize_edge_labels,
    schematic_mini_bucket,
    separated_variables,
    singleton_dual_join_graph,
    validate_decomposition,
    variable_cycles,
)
from ijgp.errors import IBoundTooSmall, NotConnected
from ijgp.model import moral_graph

from nets import A, B, C, D, E, F, G, random_net, seven_variable_net, three_variable_net

SEVEN_ORDER = [G, E, F, D, C, B, A]


def _fig12a():
    nodes = [
        ClusterNode(0, frozenset({1, 2, 4})),
        ClusterNode(1, frozenset({2, 3, 4})),
        ClusterNode(2, frozenset({1, 3, 4})),
    ]
    edges = [
        JoinEdge(0, 1, frozenset({2, 4})),
        JoinEdge(1, 2, frozenset({3, 4})),
        JoinEdge(0, 2, frozenset({1, 4})),
    ]
    return EdgeLabeledJoinGraph(nodes, edges, [], n_vars=5)


class TestEliminationOrder:
    def test_chain(self):
        order, width = elimination_order(nx.path_graph(5))
        assert width == 1
        assert order[0] in (0, 4)

    def test_ladder_width_is_optimal(self):
        g = nx.grid_2d_graph(2, 4)
        g = nx.convert_node_labels_to_integers(g)
        order, width = elimination_order(g)
        assert width == 2
        assert exact_treewidth(g) == 2

    def test_square_grid(self):
        g = nx.convert_node_labels_to_integers(nx.grid_2d_graph(3, 3))
        assert exact_treewidth(g) == 3
        assert elimination_order(g)[1] == 3

    def test_moral_grid_matches_exhaustive_search(self):
        g = moral_graph(gen_grid(3, 2, seed=0))
        best = min(induced_width(g, p) for p in itertools.permutations(g.nodes))
        assert exact_treewidth(g) == best
        assert elimination_order(g)[1] == best

    def test_complete_graph(self):
        for heuristic in ("min-fill", "min-induced-width"):
            assert elimination_order(nx.complete_graph(4), heuristic)[1] == 3

    def test_reported_width_matches_induced_width(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            g = moral_graph(random_net(rng, 9))
            order, width = elimination_order(g)
            assert sorted(order) == list(range(9))
            assert width == induced_width(g, order)


class TestJoinTree:
    def test_seven_variable_clusters(self):
        tree = build_join_tree(seven_variable_net(), SEVEN_ORDER)
        chis = {frozenset(nd.chi) for nd in tree.nodes}
        assert chis == {
            frozenset({A, B, C}),
            frozenset({B, C, D, F}),
            frozenset({B, E, F}),
            frozenset({E, F, G}),
        }
        assert validate_decomposition(tree).ok

    def test_polytree_width_is_largest_family(self):
        for seed in range(10):
            net = gen_polytree(10, 2, seed)
            tree = build_join_tree(net)
            assert tree.treewidth == max(len(f.scope) for f in net.cpts) - 1

    def test_random_nets_validate(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            net = random_net(rng, 8)
            order, width = elimination_order(moral_graph(net))
            tree = build_join_tree(net, order)
            report = validate_decomposition(tree)
            assert report.ok, report.violations
            assert report.is_tree
            assert tree.treewidth == width

    def test_disconnected_network_gives_one_tree(self):
        cards = [2, 2, 2]
        from ijgp.model import build_network, cpt

        net = build_network(cards, [cpt(v, [], cards, [0.5, 0.5]) for v in range(3)])
        tree = build_join_tree(net)
        assert tree.is_tree()
        assert validate_decomposition(tree).ok

    def test_missing_variable_is_reported(self):
        tree = build_join_tree(three_variable_net())
        broken = TreeDecomposition(
            [ClusterNode(0, frozenset({0, 1}), frozenset({0, 1, 2}))], [], tree.scopes, 3
        )
        kinds = {v.kind for v in validate_decomposition(broken).violations}
        assert "ScopeContainment" in kinds


class TestSchematicMiniBucket:
    def test_large_bound_gives_single_minibuckets(self):
        net = seven_variable_net()
        forest = schematic_mini_bucket(net, SEVEN_ORDER, 4)
        assert all(len(mbs) == 1 for mbs in forest.by_bucket().values())

    def test_bucket_f_splits(self):
        forest = schematic_mini_bucket(seven_variable_net(), SEVEN_ORDER, 3)
        split = {var: [mb.variables for mb in mbs] for var, mbs in forest.by_bucket().items() if len(mbs) > 1}
        assert split == {F: [frozenset({C, D, F}), frozenset({B, F})]}

    def test_scopes_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            net = random_net(rng, 10, pmax=2)
            order, _ = elimination_order(moral_graph(net))
            forest = schematic_mini_bucket(net, order, 3)
            assert all(len(mb.variables) <= 3 for mb in forest.minibuckets)

    def test_strict_bound(self):
        with pytest.raises(IBoundTooSmall):
            schematic_mini_bucket(seven_variable_net(), SEVEN_ORDER, 2, strict=True)


class TestStructuring:
    def test_seven_variable_join_graph(self):
        jg = join_graph_structuring(seven_variable_net(), 3, SEVEN_ORDER)
        report = validate_decomposition(jg)
        assert report.ok
        assert report.internal_width == 3
        assert report.minimal
        assert len(jg.nodes) == 8
        in_edges = [e for e in jg.edges if e.kind == "in"]
        assert [e.label for e in in_edges] == [frozenset({F})]
        ends = {jg.nodes[in_edges[0].u].chi, jg.nodes[in_edges[0].v].chi}
        assert ends == {frozenset({C, D, F}), frozenset({B, F})}

    def test_large_bound_gives_tree(self):
        rng = np.random.default_rng(6)
        for _ in range(15):
            net = random_net(rng, 9)
            order, width = elimination_order(moral_graph(net))
            jg = join_graph_structuring(net, width + 1, order)
            assert nx.is_forest(jg.graph())

    def test_random_structuring_is_valid_and_minimal(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            net = random_net(rng, 10, pmax=1)
            for i in (2, 3, 5):
                jg = join_graph_structuring(net, i)
                report = validate_decomposition(jg)
                assert report.ok, report.violations
                assert report.internal_width <= i
                assert variable_cycles(jg) == []
                assert minimize_edge_labels(jg).edges == jg.edges

    def test_wide_function_gets_own_cluster(self):
        net = random_net(np.random.default_rng(8), 8, pmin=3, pmax=3)
        jg = join_graph_structuring(net, 2)
        report = validate_decomposition(jg)
        assert report.ok
        assert report.internal_width <= max(len(f.scope) for f in net.cpts)


class TestDualJoinGraph:
    def test_three_variable_singleton_labels(self):
        jg = singleton_dual_join_graph(three_variable_net())
        labels = {e.key: e.label for e in jg.edges}
        assert labels == {(0, 1): {0}, (0, 2): {0}, (1, 2): {1}}
        assert validate_decomposition(jg, require_minimal=False).structural() == []

    def test_polytree_dual_graph_is_tree(self):
        for seed in range(5):
            assert nx.is_forest(singleton_dual_join_graph(gen_polytree(9, 2, seed)).graph())

    def test_random_dual_graphs_connected_per_variable(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            jg = singleton_dual_join_graph(random_net(rng, 9))
            report = validate_decomposition(jg)
            assert report.ok, report.violations


class TestMinimality:
    def test_fig12a_cycle_removed(self):
        jg = _fig12a()
        assert variable_cycles(jg) == [4]
        assert not is_label_minimal(jg)
        out = minimize_edge_labels(jg)
        labels = {e.key: e.label for e in out.edges}
        assert labels == {(0, 1): {2}, (1, 2): {3, 4}, (0, 2): {1, 4}}
        assert variable_cycles(out) == []
        assert is_label_minimal(out)

    def test_fixpoint(self):
        out = minimize_edge_labels(_fig12a())
        assert minimize_edge_labels(out).edges == out.edges

    def test_not_connected(self):
        jg = EdgeLabeledJoinGraph(
            [ClusterNode(0, frozenset({0})), ClusterNode(1, frozenset({0}))], [], [], n_vars=1
        )
        with pytest.raises(NotConnected):
            minimize_edge_labels(jg)

    def test_unminimal_graph_flagged(self):
        report = validate_decomposition(_fig12a())
        assert [v.kind for v in report.violations] == ["LabelNotMinimal"]


def _independent(joint, w, y, z, n, tol=1e-9):
    """Check P(W, Y | Z) = P(W | Z) P(Y | Z) on a full joint table."""
    def marg(keep):
        axes = tuple(a for a in range(n) if a not in keep)
        return joint.sum(axis=axes, keepdims=True)

    pwyz = marg(w | y | z)
    pwz, pyz, pz = marg(w | z), marg(y | z), marg(z)
    return np.allclose(pwyz * pz, pwz * pyz, atol=tol, rtol=0)


class TestEdgeSeparation:
    def test_all_edges_cut(self):
        jg = join_graph_structuring(seven_variable_net(), 3, SEVEN_ORDER)
        every = [e.key for e in jg.edges]
        assert edge_separation(jg, {0}, {5}, every)

    def test_nothing_cut(self):
        jg = join_graph_structuring(seven_variable_net(), 3, SEVEN_ORDER)
        assert not edge_separation(jg, {0}, {5}, [])

    def test_separation_implies_independence(self):
        rng = np.random.default_rng(10)
        checked = 0
        for _ in range(12):
            net = random_net(rng, 7, kmax=2, pmax=2)
            joint = np.zeros(net.cards)
            for x in itertools.product(*(range(c) for c in net.cards)):
                joint[x] = net.joint_probability(x)
            for jg in (join_graph_structuring(net, 3), build_join_tree(net)):
                keys = [e.key for e in jg.edges]
                nodes = range(len(jg.nodes))
                for _ in range(40):
                    nw = {int(rng.choice(nodes))}
                    ny = {int(rng.choice(nodes))}
                    k = int(rng.integers(0, len(keys) + 1))
                    ez = [keys[j] for j in rng.choice(len(keys), size=k, replace=False)] if keys else []
                    if not edge_separation(jg, nw, ny, ez):
                        continue
                    w, y, z = separated_variables(jg, nw, ny, ez)
                    w, y = set(w - z), set(y - z)
                    if not w or not y or w & y:
                        continue
                    assert _independent(joint, w, y, set(z), net.n)
                    checked += 1
        assert checked > 20
