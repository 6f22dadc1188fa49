import math

import numpy as np
import pytest

from ijgp.errors import LengthMismatch, ShapeMismatch, TooLarge
from ijgp.evaluation import (
    CSV_COLUMNS,
    MetricsReport,
    ber,
    brute_force_marginals,
    exact_marginals,
    interval_stats,
    kl_score,
    metrics,
    metrics_row,
    write_metrics_csv,
)
from ijgp.inference import BeliefKind, Beliefs
from ijgp.model import build_network, cpt

from nets import enumerate_marginals, max_abs_diff, random_evidence, random_net, three_variable_net


def _beliefs(rows, evidence=None):
    return Beliefs([np.asarray(r, dtype=float) for r in rows], BeliefKind.APPROXIMATE, evidence=evidence or {})


class TestMetrics:
    def test_identical(self):
        x = _beliefs([[0.2, 0.8], [0.1, 0.3, 0.6]])
        r = metrics(x, x)
        assert (r.nhd, r.abs_error, r.rel_error, r.kl, r.score) == (0.0, 0.0, 0.0, 0.0, 1.0)

    def test_point_mass_against_uniform(self):
        r = metrics(_beliefs([[0.5, 0.5]]), _beliefs([[1.0, 0.0]]))
        assert r.abs_error == 0.5
        assert r.rel_error == 0.5
        assert r.rel_skipped == 1
        assert r.kl == pytest.approx(math.log(2) / 2, rel=1e-15)
        assert r.nhd == 0.0

    def test_kl_matches_reordered_sum(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            exact = [rng.dirichlet(np.ones(k)) for k in rng.integers(2, 5, size=8)]
            approx = [rng.dirichlet(np.ones(len(e))) for e in exact]
            got = metrics(_beliefs(approx), _beliefs(exact)).kl
            terms = [e * np.log(e / a) for e, a in zip(exact, approx)]
            flat = np.concatenate(terms)[::-1]
            assert got == pytest.approx(sum(sorted(flat)) / flat.size, abs=1e-12)

    def test_score(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            exact = [rng.dirichlet(np.ones(3)) for _ in range(5)]
            approx = [rng.dirichlet(np.ones(3)) for _ in range(5)]
            r = metrics(_beliefs(approx), _beliefs(exact))
            assert r.kl >= 0
            assert abs(r.score - 10.0 ** (-r.kl)) <= 1e-12
        assert kl_score(math.inf) == 0.0

    def test_missing_support_is_infinite(self):
        r = metrics(_beliefs([[1.0, 0.0]]), _beliefs([[0.5, 0.5]]))
        assert r.kl == math.inf and r.score == 0.0

    def test_nhd(self):
        exact = _beliefs([[0.6, 0.4], [0.3, 0.7], [0.5, 0.5]])
        approx = _beliefs([[0.4, 0.6], [0.2, 0.8], [0.5, 0.5]])
        assert metrics(approx, exact).nhd == pytest.approx(1 / 3)

    def test_nhd_invariant_under_rescaling(self):
        rng = np.random.default_rng(2)
        exact = _beliefs([rng.dirichlet(np.ones(3)) for _ in range(6)])
        rows = [rng.dirichlet(np.ones(3)) for _ in range(6)]
        warped = [r**3 / (r**3).sum() for r in rows]
        assert metrics(_beliefs(rows), exact).nhd == metrics(_beliefs(warped), exact).nhd

    def test_evidence_excluded(self):
        exact = _beliefs([[1.0, 0.0], [0.3, 0.7]], {0: 0})
        approx = _beliefs([[1.0, 0.0], [0.4, 0.6]], {0: 0})
        r = metrics(approx, exact)
        assert r.variables == 1
        assert r.abs_error == pytest.approx(0.1)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            metrics(_beliefs([[0.5, 0.5]]), _beliefs([[0.2, 0.3, 0.5]]))
        with pytest.raises(ShapeMismatch):
            metrics(_beliefs([[0.5, 0.5]]), _beliefs([[0.5, 0.5], [0.5, 0.5]]))


class TestBer:
    def test_cases(self):
        assert ber([0, 1, 1, 0], [0, 1, 1, 0]) == 0.0
        assert ber([1, 0, 0, 1], [0, 1, 1, 0]) == 1.0
        assert ber([0, 0, 1, 1], [0, 1, 1, 0]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            ber([0, 1], [0, 1, 1])


class TestIntervalStats:
    def test_single_pair(self):
        stats = interval_stats([np.array([0.07])], [np.array([0.02])])
        assert len(stats.edges) == 21
        assert stats.recall_abs_error[0] == pytest.approx(0.05, abs=1e-15)
        assert stats.precision_abs_error[1] == pytest.approx(0.05, abs=1e-15)
        assert np.isnan(stats.recall_abs_error[1]) and np.isnan(stats.precision_abs_error[0])

    def test_identical(self):
        rng = np.random.default_rng(3)
        rows = [rng.dirichlet(np.ones(3)) for _ in range(20)]
        stats = interval_stats(_beliefs(rows), _beliefs(rows))
        nonempty = stats.exact_counts > 0
        np.testing.assert_array_equal(stats.recall_abs_error[nonempty], 0.0)
        np.testing.assert_array_equal(stats.precision_abs_error[nonempty], 0.0)

    def test_histograms_cover_all_pairs(self):
        rng = np.random.default_rng(4)
        exact = [rng.dirichlet(np.ones(2)) for _ in range(30)]
        approx = [rng.dirichlet(np.ones(2)) for _ in range(30)]
        exact[0] = np.array([0.0, 1.0])
        stats = interval_stats(_beliefs(approx), _beliefs(exact))
        assert stats.exact_counts.sum() == stats.approx_counts.sum() == stats.total == 60
        assert stats.exact_counts[0] >= 1 and stats.exact_counts[-1] >= 1

    def test_mirrored_edges(self):
        edges = interval_stats([np.array([0.5, 0.5])], [np.array([0.5, 0.5])]).edges
        np.testing.assert_allclose(edges + edges[::-1], 1.0, rtol=0, atol=1e-15)


class TestExactBaselines:
    def test_root_prior(self):
        net = three_variable_net()
        np.testing.assert_allclose(exact_marginals(net)[0], [0.3, 0.7], rtol=1e-15)
        np.testing.assert_allclose(brute_force_marginals(net)[0], [0.3, 0.7], rtol=1e-15)

    def test_brute_force_matches_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            net = random_net(rng, 7)
            ev = random_evidence(net, rng, 2)
            expected, pe = enumerate_marginals(net, ev)
            got = brute_force_marginals(net, ev)
            assert max_abs_diff(got.marginals, expected) < 1e-13
            assert got.normalizer == pytest.approx(pe, rel=1e-12)
            assert max_abs_diff(exact_marginals(net, ev).marginals, got.marginals) < 1e-12

    def test_uniform(self):
        cards = [3, 2]
        net = build_network(cards, [cpt(0, [], cards, [1 / 3] * 3), cpt(1, [0], cards, [0.5] * 6)])
        for row, k in zip(brute_force_marginals(net).marginals, cards):
            np.testing.assert_allclose(row, 1.0 / k, rtol=1e-15)

    def test_too_large(self):
        cards = [2] * 25
        net = build_network(cards, [cpt(v, [], cards, [0.5, 0.5]) for v in range(25)])
        with pytest.raises(TooLarge):
            brute_force_marginals(net)


class TestCsv:
    def test_columns_and_determinism(self):
        report = MetricsReport(0.0, 0.25, 0.5, 0.125, 10 ** -0.125, wall_time_s=1.5)
        rows = [metrics_row("net0", "ijgp", 2, 10, 3, report)]
        text = write_metrics_csv(rows, include_time=False)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1].startswith("net0,ijgp,2,10,3,0.0,0.25,0.5,0.125,")
        assert lines[1].endswith(",")
        assert text == write_metrics_csv(rows, include_time=False)
        assert write_metrics_csv(rows).splitlines()[1].endswith(",1.5")
