"""Iterative join-graph propagation (IJGP) and its dual-graph special case (IBP)."""

import numpy as np

from ..decomposition import singleton_dual_join_graph, validate_decomposition
from ..errors import DecompositionInvalid, ScopeTooLarge, UnderflowDetected
from ..factors import Factor, combine, eliminate
from ..model import apply_evidence
from .beliefs import (
    BeliefKind,
    Beliefs,
    ConvergenceSpec,
    IterationRecord,
    Message,
    normalized_rows,
)
from .schedule import iteration_order, message_schedule


def _positive_support(functions):
    """0/1 table of where the product of ``functions`` is structurally positive."""
    return combine([Factor(f.scope, (f.table > 0).astype(np.float64)) for f in functions])


def _shifted_product(functions, max_entries):
    """Product of ``functions`` scaled so its largest entry is 1, formed in the log domain.

    Exact zeros stay exact; positive entries vanish only when they fall more
    than ~745 natural-log units below the maximum.
    """
    scope = tuple(sorted(set().union(*(f.scope for f in functions))))
    cards = {}
    for f in functions:
        cards.update(zip(f.scope, f.cards))
    shape = [cards[v] for v in scope]
    size = int(np.prod(shape, dtype=np.int64))
    if size > max_entries:
        raise ScopeTooLarge(size, max_entries)
    total = np.zeros(shape)
    with np.errstate(divide="ignore"):
        for f in functions:
            order = sorted(range(len(f.scope)), key=lambda k: f.scope[k])
            logs = np.log(np.transpose(f.table, order))
            total = total + logs.reshape([cards[v] if v in f.scope else 1 for v in scope])
    top = total.max() if total.size else 0.0
    if np.isfinite(top):
        total = total - top
    return Factor(scope, np.exp(total))


class JoinGraphPropagation:
    """Message store and update rule for IJGP on one join-graph.

    Each message is one function over (a subset of) the edge label,
    rescaled so its largest entry is 1 unless ``rescale`` is off.  Absent
    messages count as the constant 1.
    """

    def __init__(self, net, jg, evidence=None, rescale=True, max_entries=None):
        self.net = net
        self.jg = jg
        self.evidence = dict(evidence or {})
        self.cards = net.cards
        self.rescale = rescale
        if max_entries is None:
            max_entries = max(self.cards) ** max(jg.internal_width, 1)
        self.max_entries = max_entries
        reduced = apply_evidence(net, self.evidence)
        self.local = {nd.id: [reduced[f] for f in sorted(nd.psi)] for nd in jg.nodes}
        self.messages = {}
        self.iteration = 0

    def chi(self, u):
        return {v for v in self.jg.nodes[u].chi if v not in self.evidence}

    def label(self, u, v):
        return tuple(sorted(x for x in self.jg.theta(u, v) if x not in self.evidence))

    def cluster(self, u, exclude=None):
        out = list(self.local[u])
        for w in self.jg.neighbors(u):
            if w != exclude and (w, u) in self.messages:
                out.extend(self.messages[(w, u)].functions)
        return out

    def _guard(self, table, functions, eliminated):
        # a zero entry is legitimate only where some input is structurally zero
        if not (table.table == 0).any():
            return
        support = _positive_support(functions)
        support = eliminate(support, eliminated & set(support.scope))
        flushed = (table.table == 0) & (support.transpose(table.scope).table > 0)
        if flushed.any():
            raise UnderflowDetected(
                f"positive entries of a function over {table.scope} underflowed to zero"
            )

    def _product(self, functions):
        if self.rescale:
            return _shifted_product(functions, self.max_entries)
        return combine(functions, max_entries=self.max_entries)

    def send(self, u, v):
        """Compute, store and return the message from ``u`` to ``v``.

        The whole cluster product is folded into one function over the
        label.  Forwarding untouched functions would let them travel around
        cycles and pile up from one iteration to the next.
        """
        elim = self.chi(u) - set(self.label(u, v))
        functions = self.cluster(u, exclude=v)
        combined = []
        if functions:
            product = self._product(functions)
            eliminated = elim & set(product.scope)
            h = eliminate(product, eliminated)
            top = float(h.table.max())
            if self.rescale and top > 0:
                h = Factor(h.scope, h.table / top)
            self._guard(h, functions, eliminated)
            combined.append(h)
        msg = Message((u, v), combined, [])
        self.messages[(u, v)] = msg
        return msg

    def message_table(self, u, v):
        """Normalized product of the message functions over the edge label."""
        label = self.label(u, v)
        ones = Factor.ones(label, [self.cards[x] for x in label])
        msg = self.messages.get((u, v))
        functions = [ones] + (msg.functions if msg else [])
        table = combine(functions).transpose(label) if label else combine(functions)
        total = float(table.table.sum())
        return table.table / total if total > 0 else table.table.copy()

    def sweep(self, order):
        """Send every message in ``order``; return the largest normalized change."""
        delta = 0.0
        for u, v in order:
            before = self.message_table(u, v)
            self.send(u, v)
            after = self.message_table(u, v)
            delta = max(delta, float(np.max(np.abs(after - before))) if after.size else 0.0)
        self.iteration += 1
        return delta

    def belief_rows(self):
        """Unnormalized belief row per unobserved variable, read from its home cluster."""
        rows = {}
        cache = {}
        for var in range(self.net.n):
            if var in self.evidence:
                continue
            u = self.jg.home(var)
            if u is None:
                rows[var] = np.ones(self.cards[var])
                continue
            if u not in cache:
                functions = self.cluster(u)
                cache[u] = (self._product(functions), functions) if functions else (None, [])
            product, functions = cache[u]
            if product is None:
                rows[var] = np.ones(self.cards[var])
            elif var in product.scope:
                others = set(product.scope) - {var}
                row = eliminate(product, others)
                self._guard(row, functions, others)
                rows[var] = row.table.copy()
            else:
                rows[var] = np.full(self.cards[var], float(product.table.sum()))
        return rows

    def beliefs(self):
        rows = self.belief_rows()
        joint = [rows.get(v) for v in range(self.net.n)]
        marginals, _ = normalized_rows(
            [np.zeros(self.cards[v]) if r is None else r for v, r in enumerate(joint)],
            self.evidence,
            self.cards,
            BeliefKind.APPROXIMATE,
        )
        return marginals


def ijgp(net, jg, evidence=None, spec=None, rescale=True, schedule=None, max_entries=None):
    """Iterative join-graph propagation.

    One iteration sends every message in the forward schedule and then in
    reverse.  Stops early once no normalized message entry moves by more than
    ``spec.tolerance``.  The returned beliefs carry a per-iteration trace.
    """
    spec = spec or ConvergenceSpec()
    report = validate_decomposition(jg, require_minimal=False, widths=False)
    if report.structural():
        raise DecompositionInvalid(report)
    engine = JoinGraphPropagation(net, jg, evidence, rescale=rescale, max_entries=max_entries)
    order = iteration_order(schedule if schedule is not None else message_schedule(jg))
    trace = []
    converged = False
    for it in range(1, spec.max_iterations + 1):
        delta = engine.sweep(order)
        current = engine.beliefs()
        trace.append(IterationRecord(it, current, delta))
        if delta < spec.tolerance:
            converged = True
            break
    return Beliefs(
        trace[-1].beliefs if trace else engine.beliefs(),
        BeliefKind.APPROXIMATE,
        evidence=engine.evidence,
        trace=trace,
        iterations=len(trace),
        converged=converged,
    )


def ibp(net, evidence=None, spec=None, rescale=True):
    """Iterative belief propagation: IJGP on the singleton-labelled dual join-graph."""
    return ijgp(net, singleton_dual_join_graph(net), evidence, spec, rescale=rescale)


def trace_to_text(trace):
    """One line per iteration and variable: ``iter var d p_1 ... p_d``."""
    lines = []
    for record in trace:
        for var, row in enumerate(record.beliefs):
            lines.append(f"{record.iteration} {var} {len(row)} " + " ".join(f"{p:.17g}" for p in row))
    return "\n".join(lines) + "\n"
