import itertools

import numpy as np
import pytest

from ijgp.benchgen import force_zeros
from ijgp.decomposition import (
    ClusterNode,
    EdgeLabeledJoinGraph,
    JoinEdge,
    build_join_tree,
    join_graph_structuring,
    singleton_dual_join_graph,
)
from ijgp.errors import SoundnessViolation, ValueOutOfRange
from ijgp.factors import Factor
from ijgp.flat import (
    ConstraintNetwork,
    Relation,
    RelationalArcConsistency,
    flatten,
    join_all,
    rdac,
    relation_join,
    relation_project,
    relation_select,
    zero_belief_audit,
)
from ijgp.inference import ConvergenceSpec
from ijgp.model import build_network, cpt

from nets import enumerate_joint, random_evidence, random_net, three_variable_net


def _equality_network(domain_b):
    # relation A = B plus a unary restriction on B
    eq = Relation([0, 1], [2, 2], [(0, 0), (1, 1)])
    unary = Relation([1], [2], [(b,) for b in domain_b])
    cn = ConstraintNetwork([2, 2], [{0, 1}, {0, 1}], [eq, unary])
    jg = EdgeLabeledJoinGraph(
        [ClusterNode(0, frozenset({0, 1}), frozenset({0})), ClusterNode(1, frozenset({1}), frozenset({1}))],
        [JoinEdge(0, 1, frozenset({1}))],
        [(0, 1), (1,)],
        n_vars=2,
    )
    return cn, jg


def _chain():
    # X0 uniform, X1 copies X0, X2 negates X1
    cards = [2, 2, 2]
    return build_network(
        cards,
        [
            cpt(0, [], cards, [0.5, 0.5]),
            cpt(1, [0], cards, [1, 0, 0, 1]),
            cpt(2, [1], cards, [0, 1, 1, 0]),
        ],
    )


class TestRelations:
    def test_complete(self):
        r = Relation.complete([2, 0], [3, 2])
        assert len(r) == 6
        assert (2, 1) in r
        assert len(Relation.complete([0, 1], [2, 3], {1: {0, 2}})) == 4

    def test_out_of_range_tuple(self):
        with pytest.raises(ValueOutOfRange):
            Relation([0], [2], [(2,)])

    def test_from_factor_drops_zeros(self):
        f = Factor.from_values([0, 1], [2, 2], [0.5, 0, 0, 0.5])
        assert Relation.from_factor(f).sorted_tuples() == [(0, 0), (1, 1)]

    def test_equality_ignores_scope_order(self):
        r = Relation([0, 1], [2, 3], [(0, 2), (1, 0)])
        s = Relation([1, 0], [3, 2], [(2, 0), (0, 1)])
        assert r == s
        assert r != Relation([0, 1], [2, 3], [(0, 2)])

    def test_join_and_project(self):
        r = Relation([0, 1], [2, 2], [(0, 0), (0, 1), (1, 1)])
        s = Relation([1, 2], [2, 2], [(1, 0), (0, 1)])
        j = relation_join(r, s)
        assert j.scope == (0, 1, 2)
        assert j.sorted_tuples() == [(0, 0, 1), (0, 1, 0), (1, 1, 0)]
        assert relation_project(j, [2]).sorted_tuples() == [(0,), (1,)]
        assert relation_join(r, s) == relation_join(s, r)

    def test_select(self):
        r = Relation([0, 1], [2, 2], [(0, 0), (0, 1), (1, 1)])
        out = relation_select(r, {0: 0})
        assert out.scope == (1,)
        assert out.sorted_tuples() == [(0,), (1,)]

    def test_project_outside_scope(self):
        with pytest.raises(ValueOutOfRange):
            relation_project(Relation.complete([0], [2]), [1])


class TestFlattening:
    def test_solutions_are_positive_assignments(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            net = random_net(rng, 7, zero=0.4)
            positive = [
                x for x in itertools.product(*(range(c) for c in net.cards)) if net.joint_probability(x) > 0
            ]
            assert flatten(net).solutions() == positive

    def test_join_of_all_relations(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            net = random_net(rng, 6, zero=0.3)
            cn = flatten(net)
            scope = list(range(net.n))
            joined = join_all(cn.relations, scope, net.cards)
            assert joined.sorted_tuples() == cn.solutions()
            for v in range(net.n):
                support = {(x[v],) for x in cn.solutions()}
                assert relation_project(joined, [v]).tuples == support

    def test_condition(self):
        cn = flatten(_chain()).condition({2: 0})
        assert cn.domains[2] == {0}
        assert [x for x in cn.solutions()] == [(1, 1, 0)]


class TestRelationalArcConsistency:
    def test_equality_prunes_domain(self):
        cn, jg = _equality_network([1])
        state = rdac(cn, jg)
        assert state.domains == [{1}, {1}]
        assert state.iterations == 1
        assert state.iterations <= state.bound

    def test_consistent_network_is_a_fixpoint(self):
        cn, jg = _equality_network([0, 1])
        state = rdac(cn, jg)
        assert state.iterations == 0
        assert state.sweeps == 1
        assert state.domains == [{0, 1}, {0, 1}]

    def test_empty_domain_flags_inconsistency(self):
        cn, jg = _equality_network([])
        assert rdac(cn, jg).inconsistent

    def test_positive_network_removes_nothing(self):
        net = random_net(np.random.default_rng(2), 9)
        state = rdac(flatten(net), join_graph_structuring(net, 3))
        assert state.iterations == 0
        assert state.domains == [set(range(c)) for c in net.cards]

    def test_sound_and_complete_on_trees(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            net = random_net(rng, 8, zero=0.4)
            ev = random_evidence(net, rng, 2)
            support = [set(np.flatnonzero(r > 0).tolist()) for r in enumerate_joint(net, ev)]
            cn = flatten(net).condition(ev)
            tree_domains = rdac(cn, build_join_tree(net), observed=ev).domains
            loopy = rdac(cn, singleton_dual_join_graph(net), observed=ev)
            for var in range(net.n):
                if var in ev or not any(support):
                    continue
                assert tree_domains[var] == support[var]
                assert support[var] <= loopy.domains[var]
            assert loopy.iterations <= loopy.bound

    def test_domains_shrink_monotonically(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            net = random_net(rng, 9, zero=0.4)
            state = rdac(flatten(net), singleton_dual_join_graph(net))
            for before, after in zip(state.history, state.history[1:]):
                assert all(a <= b for a, b in zip(after, before))

    def test_growing_message_is_rejected(self):
        cn, jg = _equality_network([1])
        engine = RelationalArcConsistency(cn, jg)
        engine.messages[(0, 1)] = Relation([1], [2], [])
        with pytest.raises(SoundnessViolation):
            engine.send(0, 1)

    def test_separator_bound(self):
        cn, jg = _equality_network([1])
        assert RelationalArcConsistency(cn, jg).separator_bound() == 2


class TestZeroBeliefAudit:
    def test_positive_network(self):
        net = random_net(np.random.default_rng(5), 8)
        report = zero_belief_audit(net, join_graph_structuring(net, 2))
        assert report.passed and report.exact_checked
        assert report.zero_count == 0
        assert report.rdac_iterations == 0

    def test_deterministic_chain(self):
        net = _chain()
        report = zero_belief_audit(net, singleton_dual_join_graph(net), {2: 0})
        assert report.passed and report.within_bound
        assert report.zero_count == 2
        assert "PASS exact_zeros" in report.to_text()

    def test_random_networks_with_zeros(self):
        rng = np.random.default_rng(6)
        for k in range(20):
            net = force_zeros(random_net(rng, 9), 0.3, seed=k)
            ev = random_evidence(net, rng, int(rng.integers(0, 3)))
            jg = join_graph_structuring(net, 2) if k % 2 else singleton_dual_join_graph(net)
            report = zero_belief_audit(net, jg, ev, ConvergenceSpec(max_iterations=6))
            assert report.passed, report.to_text()
            assert report.within_bound

    def test_skips_enumeration_for_large_networks(self):
        net = random_net(np.random.default_rng(7), 14)
        report = zero_belief_audit(net, singleton_dual_join_graph(net), spec=ConvergenceSpec(max_iterations=2))
        assert not report.exact_checked
        assert "SKIP exact_zeros" in report.to_text()

    def test_three_variable_net(self):
        net = three_variable_net()
        assert zero_belief_audit(net, build_join_tree(net)).passed
