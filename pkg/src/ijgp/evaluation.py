"""Exact baselines, accuracy metrics and interval-wise error statistics."""

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .decomposition import build_join_tree
from .errors import AllZero, LengthMismatch, ShapeMismatch, TooLarge
from .factors import DEFAULT_MAX_ENTRIES
from .inference.beliefs import BeliefKind, Beliefs
from .inference.cluster_tree import cte_bu

BRUTE_FORCE_MAX_ENTRIES = 2 ** 24


def exact_marginals(net, evidence=None, max_entries=DEFAULT_MAX_ENTRIES):
    """Exact posteriors from cluster-tree elimination on a min-fill join tree."""
    return cte_bu(net, build_join_tree(net), evidence, max_entries=max_entries)


def brute_force_marginals(net, evidence=None, allow_zero_evidence=False):
    """Posterior marginals by materializing the full joint table.

    Written with plain numpy broadcasting so it shares no code with the
    factor kernel it is used to check.  With ``allow_zero_evidence`` an
    impossible evidence set yields all-zero joint rows and uniform marginals
    instead of raising.
    """
    evidence = dict(evidence or {})
    cards = list(net.cards)
    n = len(cards)
    total = math.prod(cards)
    if total > BRUTE_FORCE_MAX_ENTRIES:
        raise TooLarge(f"joint table would have {total} entries (limit {BRUTE_FORCE_MAX_ENTRIES})")
    joint = np.ones(cards)
    for f in net.cpts:
        order = np.argsort(f.scope)
        table = np.transpose(f.table, order)
        shape = [1] * n
        for v in f.scope:
            shape[v] = cards[v]
        joint = joint * table.reshape(shape)
    mask = np.ones(cards, dtype=bool)
    for v, val in evidence.items():
        sel = np.zeros(cards[v], dtype=bool)
        sel[val] = True
        shape = [1] * n
        shape[v] = cards[v]
        mask &= sel.reshape(shape)
    joint = np.where(mask, joint, 0.0)
    pe = float(joint.sum())
    rows = []
    for v in range(n):
        axes = tuple(a for a in range(n) if a != v)
        rows.append(joint.sum(axis=axes) if axes else joint.copy())
    if pe > 0:
        marginals = [r / pe for r in rows]
    elif allow_zero_evidence:
        marginals = [np.full(c, 1.0 / c) for c in cards]
    else:
        raise AllZero("evidence has probability zero")
    for v, val in evidence.items():
        point = np.zeros(cards[v])
        point[val] = 1.0
        marginals[v] = point
    return Beliefs(marginals, BeliefKind.EXACT, joint=rows, normalizer=pe, evidence=evidence)


def _rows(b):
    return b.marginals if isinstance(b, Beliefs) else list(b)


def _free_vars(approx, exact, skip_evidence):
    n = len(exact)
    if not skip_evidence:
        return list(range(n))
    observed = set(getattr(exact, "evidence", None) or {}) | set(getattr(approx, "evidence", None) or {})
    return [v for v in range(n) if v not in observed]


def _check_shapes(a, e):
    if len(a) != len(e):
        raise ShapeMismatch(f"{len(a)} approximate rows for {len(e)} exact rows")
    for v, (x, y) in enumerate(zip(a, e)):
        if np.shape(x) != np.shape(y):
            raise ShapeMismatch(f"variable {v}: {np.shape(x)} vs {np.shape(y)}")


@dataclass
class MetricsReport:
    nhd: float
    abs_error: float
    rel_error: float
    kl: float
    score: float
    wall_time_s: float = 0.0
    rel_skipped: int = 0
    variables: int = 0

    FIELDS = ("nhd", "abs_error", "rel_error", "kl", "score", "wall_time_s")


def kl_score(kl):
    return 10.0 ** (-kl) if math.isfinite(kl) else 0.0


def metrics(approx, exact, wall_time_s=0.0, skip_evidence=True):
    """Accuracy of ``approx`` against ``exact`` over the unobserved variables.

    Argmax ties go to the lowest value index.  KL uses the natural log with
    0 log 0 = 0; a zero approximation where the exact value is positive makes
    KL infinite and the score 0.
    """
    a_rows, e_rows = _rows(approx), _rows(exact)
    _check_shapes(a_rows, e_rows)
    free = _free_vars(approx, exact, skip_evidence)
    if not free:
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 1.0, wall_time_s, 0, 0)
    disagree = 0
    abs_terms, rel_terms, kl_terms = [], [], []
    skipped = 0
    for v in free:
        a = np.asarray(a_rows[v], dtype=np.float64)
        e = np.asarray(e_rows[v], dtype=np.float64)
        disagree += int(np.argmax(a) != np.argmax(e))
        diff = np.abs(a - e)
        abs_terms.extend(diff.tolist())
        for ak, ek, dk in zip(a, e, diff):
            if ek > 0:
                rel_terms.append(dk / ek)
                kl_terms.append(math.inf if ak == 0 else ek * math.log(ek / ak))
            else:
                skipped += 1
                kl_terms.append(0.0)
    # individual terms may be negative; only rounding can push the mean below 0
    kl = max(math.fsum(kl_terms) / len(kl_terms), 0.0)
    return MetricsReport(
        nhd=disagree / len(free),
        abs_error=math.fsum(abs_terms) / len(abs_terms),
        rel_error=math.fsum(rel_terms) / len(rel_terms) if rel_terms else 0.0,
        kl=kl,
        score=kl_score(kl),
        wall_time_s=wall_time_s,
        rel_skipped=skipped,
        variables=len(free),
    )


def ber(decoded_bits, transmitted_bits):
    """Fraction of positions where the decoded bit differs from the transmitted one."""
    d = np.asarray(decoded_bits)
    t = np.asarray(transmitted_bits)
    if d.shape != t.shape:
        raise LengthMismatch(f"{d.size} decoded bits vs {t.size} transmitted bits")
    if d.size == 0:
        return 0.0
    return float(np.mean(d != t))


def decode_bits(beliefs, variables):
    """Argmax decision (ties to 0) for each listed binary variable."""
    return [int(np.argmax(beliefs[v])) for v in variables]


@dataclass
class IntervalStats:
    """Per-bin error averages over [0, 1], with bins mirrored around 0.5."""

    edges: np.ndarray
    exact_counts: np.ndarray
    approx_counts: np.ndarray
    recall_abs_error: np.ndarray
    precision_abs_error: np.ndarray
    total: int = 0
    extra: dict = field(default_factory=dict)


def _bin_edges(bins):
    half = np.linspace(0.0, 0.5, bins + 1)
    return np.concatenate([half, 1.0 - half[-2::-1]])


def _bin_index(values, edges):
    # bins are [lo, hi) except the last, which is closed
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def interval_stats(approx, exact, bins=10, skip_evidence=True):
    """Recall and precision absolute error per probability interval.

    Recall averages |approx - exact| over the pairs whose exact value falls
    in a bin; precision averages it over the pairs whose approximate value
    does.  ``bins`` intervals cover [0, 0.5] and are mirrored onto [0.5, 1].
    Empty bins report NaN.
    """
    a_rows, e_rows = _rows(approx), _rows(exact)
    _check_shapes(a_rows, e_rows)
    free = _free_vars(approx, exact, skip_evidence)
    a = np.concatenate([np.asarray(a_rows[v], dtype=np.float64) for v in free]) if free else np.zeros(0)
    e = np.concatenate([np.asarray(e_rows[v], dtype=np.float64) for v in free]) if free else np.zeros(0)
    edges = _bin_edges(bins)
    nb = len(edges) - 1
    diff = np.abs(a - e)
    ei = _bin_index(e, edges)
    ai = _bin_index(a, edges)
    exact_counts = np.bincount(ei, minlength=nb)
    approx_counts = np.bincount(ai, minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.bincount(ei, weights=diff, minlength=nb) / exact_counts
        precision = np.bincount(ai, weights=diff, minlength=nb) / approx_counts
    return IntervalStats(edges, exact_counts, approx_counts, recall, precision, int(a.size))


CSV_COLUMNS = ("instance", "algorithm", "ibound", "iterations", "evidence") + MetricsReport.FIELDS


def metrics_row(instance, algorithm, ibound, iterations, n_evidence, report):
    row = {
        "instance": instance,
        "algorithm": algorithm,
        "ibound": "" if ibound is None else ibound,
        "iterations": "" if iterations is None else iterations,
        "evidence": n_evidence,
    }
    values = asdict(report)
    for name in MetricsReport.FIELDS:
        row[name] = values[name]
    return row


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(rows, stream=None, include_time=True, columns=CSV_COLUMNS):
    """Write metric rows as CSV; returns the text when no stream is given.

    ``include_time=False`` blanks the wall-time column so repeated runs are
    byte-identical.
    """
    out = stream if stream is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = []
        for col in columns:
            v = row.get(col, "")
            if col == "wall_time_s" and not include_time:
                v = ""
            values.append(_fmt(v))
        writer.writerow(values)
    if stream is None:
        return out.getvalue()
    return None
