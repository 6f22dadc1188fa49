"""Flat constraint networks, relational arc-consistency over join-graphs, and the zero-belief audit."""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .evaluation import brute_force_marginals
from .errors import CardinalityMismatch, SoundnessViolation, ValueOutOfRange
from .factors import Factor, combine
from .inference.beliefs import ConvergenceSpec
from .inference.propagation import JoinGraphPropagation
from .inference.schedule import iteration_order, message_schedule

BRUTE_FORCE_MAX_VARS = 12


class Relation:
    """A finite set of value tuples over an ordered scope."""

    __slots__ = ("scope", "cards", "tuples")

    def __init__(self, scope, cards, tuples):
        self.scope = tuple(int(v) for v in scope)
        self.cards = tuple(int(c) for c in cards)
        if len(self.cards) != len(self.scope):
            raise CardinalityMismatch("one cardinality per scope variable required")
        tuples = frozenset(tuple(int(x) for x in t) for t in tuples)
        for t in tuples:
            if len(t) != len(self.scope) or any(not 0 <= x < c for x, c in zip(t, self.cards)):
                raise ValueOutOfRange(f"tuple {t} does not fit scope {self.scope}")
        self.tuples = tuples

    @classmethod
    def complete(cls, scope, cards, domains=None):
        """All tuples over ``scope``, optionally restricted to per-variable ``domains``."""
        ranges = [
            sorted(domains[v]) if domains is not None and v in domains else range(c)
            for v, c in zip(scope, cards)
        ]
        return cls(scope, cards, itertools.product(*ranges))

    @classmethod
    def from_factor(cls, f):
        """Tuples whose factor entry is strictly positive."""
        return cls(f.scope, f.cards, (tuple(ix) for ix in zip(*np.nonzero(f.table))))

    def __len__(self):
        return len(self.tuples)

    def __contains__(self, t):
        return tuple(t) in self.tuples

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        if set(self.scope) != set(other.scope):
            return False
        return self.tuples == relation_project(other, self.scope).tuples

    def __hash__(self):
        return hash((self.scope, self.tuples))

    def sorted_tuples(self):
        return sorted(self.tuples)

    def card_map(self):
        return dict(zip(self.scope, self.cards))

    def __repr__(self):
        return f"Relation(scope={self.scope}, size={len(self.tuples)})"


def relation_join(r1, r2):
    """Natural join; the result scope is the ascending union of both scopes."""
    c1, c2 = r1.card_map(), r2.card_map()
    for v in set(c1) & set(c2):
        if c1[v] != c2[v]:
            raise CardinalityMismatch(f"variable {v} has cardinality {c1[v]} and {c2[v]}")
    scope = tuple(sorted(set(r1.scope) | set(r2.scope)))
    cards = [c1.get(v, c2.get(v)) for v in scope]
    shared = [v for v in r1.scope if v in c2]
    pos1 = [r1.scope.index(v) for v in shared]
    pos2 = [r2.scope.index(v) for v in shared]
    index = {}
    for t in r2.tuples:
        index.setdefault(tuple(t[p] for p in pos2), []).append(t)
    where = [(0, r1.scope.index(v)) if v in c1 else (1, r2.scope.index(v)) for v in scope]
    out = []
    for t1 in r1.tuples:
        for t2 in index.get(tuple(t1[p] for p in pos1), ()):
            pair = (t1, t2)
            out.append(tuple(pair[side][p] for side, p in where))
    return Relation(scope, cards, out)


def relation_project(r, scope):
    """Projection onto ``scope`` (a subset of the relation's scope), kept in the given order."""
    scope = tuple(scope)
    missing = set(scope) - set(r.scope)
    if missing:
        raise ValueOutOfRange(f"cannot project onto variables {sorted(missing)} outside the scope")
    pos = [r.scope.index(v) for v in scope]
    cards = [r.cards[p] for p in pos]
    return Relation(scope, cards, {tuple(t[p] for p in pos) for t in r.tuples})


def relation_select(r, evidence):
    """Keep tuples agreeing with ``evidence`` and drop the observed variables from the scope."""
    fixed = {r.scope.index(v): val for v, val in evidence.items() if v in r.scope}
    keep = [k for k in range(len(r.scope)) if k not in fixed]
    tuples = {
        tuple(t[k] for k in keep)
        for t in r.tuples
        if all(t[k] == val for k, val in fixed.items())
    }
    return Relation([r.scope[k] for k in keep], [r.cards[k] for k in keep], tuples)


def join_all(relations, scope, cards, domains=None):
    """Join of the complete relation over ``scope`` with every relation in ``relations``."""
    out = Relation.complete(scope, cards, domains)
    for r in sorted(relations, key=len):
        out = relation_join(out, r)
    return out


@dataclass
class ConstraintNetwork:
    cards: list
    domains: list
    relations: list

    @property
    def n(self):
        return len(self.cards)

    def solutions(self):
        """All consistent full assignments (enumeration; small networks only)."""
        out = []
        ranges = [sorted(d) for d in self.domains]
        for x in itertools.product(*ranges):
            if all(tuple(x[v] for v in r.scope) in r.tuples for r in self.relations):
                out.append(x)
        return out

    def condition(self, evidence):
        """Select on ``evidence`` in every relation; observed domains become singletons."""
        domains = [set(d) for d in self.domains]
        for v, val in evidence.items():
            domains[v] &= {val}
        return ConstraintNetwork(
            list(self.cards), domains, [relation_select(r, evidence) for r in self.relations]
        )


def flatten(net):
    """Constraint network keeping exactly the positive-probability tuples of each CPT."""
    return ConstraintNetwork(
        list(net.cards),
        [set(range(c)) for c in net.cards],
        [Relation.from_factor(f) for f in net.cpts],
    )


@dataclass
class RdacState:
    cluster_relations: dict
    messages: dict
    domains: list
    iterations: int
    sweeps: int
    bound: int
    history: list = field(default_factory=list)

    @property
    def inconsistent(self):
        return any(not d for d in self.domains)


class RelationalArcConsistency:
    """Join/project message passing over a join-graph; the relational mirror of IJGP.

    ``observed`` variables are treated as already conditioned away: they are
    left out of cluster scopes and edge labels, exactly as IJGP does with
    evidence.
    """

    def __init__(self, cn, jg, observed=()):
        self.cn = cn
        self.jg = jg
        self.observed = set(observed)
        self.domain_map = {v: set(d) for v, d in enumerate(cn.domains)}
        self.cluster_relations = {}
        for nd in jg.nodes:
            scope = sorted(v for v in nd.chi if v not in self.observed)
            rels = [cn.relations[f] for f in sorted(nd.psi)]
            self.cluster_relations[nd.id] = join_all(
                rels, scope, [cn.cards[v] for v in scope], self.domain_map
            )
        self.messages = {}

    def label(self, u, v):
        return tuple(sorted(x for x in self.jg.theta(u, v) if x not in self.observed))

    def message(self, u, v):
        msg = self.messages.get((u, v))
        if msg is None:
            label = self.label(u, v)
            return Relation.complete(label, [self.cn.cards[x] for x in label])
        return msg

    def joined(self, u, exclude=None):
        out = self.cluster_relations[u]
        for w in self.jg.neighbors(u):
            if w != exclude and (w, u) in self.messages:
                out = relation_join(out, self.messages[(w, u)])
        return out

    def send(self, u, v):
        """Compute and store h(u, v); return True when it lost tuples."""
        h = relation_project(self.joined(u, exclude=v), self.label(u, v))
        old = self.messages.get((u, v))
        if old is not None and not h.tuples <= old.tuples:
            raise SoundnessViolation(_MonotoneReport(f"message {(u, v)} gained tuples"))
        changed = old is None and len(h) < len(self.message(u, v)) or (
            old is not None and h.tuples != old.tuples
        )
        self.messages[(u, v)] = h
        return changed

    def domains(self):
        """Per-variable surviving values, projected from each variable's home cluster."""
        out = []
        cache = {}
        for var in range(self.cn.n):
            if var in self.observed:
                out.append(set(self.domain_map[var]))
                continue
            u = self.jg.home(var)
            if u is None:
                out.append(set(self.domain_map[var]))
                continue
            if u not in cache:
                cache[u] = self.joined(u)
            rel = cache[u]
            if var in rel.scope:
                out.append({t[0] for t in relation_project(rel, [var]).tuples})
            else:
                out.append(set(self.domain_map[var]) if len(rel) else set())
        return out

    def separator_bound(self):
        """m * r: edge count times the largest complete separator relation."""
        r = 1
        for e in self.jg.edges:
            label = self.label(e.u, e.v)
            r = max(r, int(np.prod([self.cn.cards[x] for x in label], dtype=np.int64)))
        return max(len(self.jg.edges), 1) * r


@dataclass
class _MonotoneReport:
    text: str

    def to_text(self):
        return self.text


def rdac(cn, jg, schedule=None, observed=(), max_sweeps=None):
    """Run relational arc-consistency to its fixpoint.

    One sweep sends every message of the forward schedule and then in
    reverse.  ``iterations`` counts the sweeps that removed at least one
    tuple; the final (unchanged) sweep only confirms the fixpoint.
    """
    engine = RelationalArcConsistency(cn, jg, observed)
    order = iteration_order(schedule if schedule is not None else message_schedule(jg))
    bound = engine.separator_bound()
    limit = max_sweeps if max_sweeps is not None else bound + 2
    history = [engine.domains()]
    changed_sweeps = 0
    sweeps = 0
    while sweeps < limit:
        sweeps += 1
        changed = False
        for u, v in order:
            changed |= engine.send(u, v)
        domains = engine.domains()
        if any(not cur <= prev for cur, prev in zip(domains, history[-1])):
            raise SoundnessViolation(_MonotoneReport("a domain gained values"))
        history.append(domains)
        if not changed:
            break
        changed_sweeps += 1
    return RdacState(
        dict(engine.cluster_relations),
        dict(engine.messages),
        history[-1],
        changed_sweeps,
        sweeps,
        bound,
        history,
    )


@dataclass
class AuditReport:
    """Outcome of the four zero-belief checks; each maps to a list of counterexamples."""

    message_equivalence: list = field(default_factory=list)
    domain_equivalence: list = field(default_factory=list)
    exact_zeros: list = field(default_factory=list)
    persistence: list = field(default_factory=list)
    exact_checked: bool = False
    rdac_iterations: int = 0
    rdac_bound: int = 0
    ijgp_iterations: int = 0
    zero_count: int = 0

    CHECKS = (
        ("message_equivalence", "message zeros match missing relation tuples"),
        ("domain_equivalence", "belief zeros match removed domain values"),
        ("exact_zeros", "every belief zero is an exact posterior zero"),
        ("persistence", "belief zeros persist and settle after the arc-consistency fixpoint"),
    )

    @property
    def passed(self):
        return not any(getattr(self, name) for name, _ in self.CHECKS)

    @property
    def within_bound(self):
        return self.rdac_iterations <= self.rdac_bound

    def to_text(self):
        lines = []
        for name, title in self.CHECKS:
            bad = getattr(self, name)
            if name == "exact_zeros" and not self.exact_checked:
                lines.append(f"SKIP {name}: {title} (too many variables to enumerate)")
                continue
            status = "PASS" if not bad else "FAIL"
            line = f"{status} {name}: {title}"
            if bad:
                line += f"; counterexample {bad[0]}"
            lines.append(line)
        lines.append(
            f"INFO rdac_iterations={self.rdac_iterations} bound={self.rdac_bound} "
            f"ijgp_iterations={self.ijgp_iterations} zeros={self.zero_count}"
        )
        return "\n".join(lines) + "\n"


def _message_zero_mismatches(engine, rd, u, v):
    label = engine.label(u, v)
    cards = [engine.cards[x] for x in label]
    msg = engine.messages[(u, v)]
    table = combine([Factor.ones(label, cards)] + msg.functions)
    table = table.transpose(label).table if label else table.table
    rel = rd.messages[(u, v)]
    rel = relation_project(rel, label)
    bad = []
    for ix in np.ndindex(*cards) if label else [()]:
        zero = table[ix] == 0
        missing = tuple(int(x) for x in ix) not in rel.tuples
        if zero != missing:
            bad.append(((u, v), dict(zip(label, ix)), "ijgp zero" if zero else "rdac removed"))
    return bad


def _zero_set(rows):
    return {(var, int(k)) for var, row in rows.items() for k in np.flatnonzero(row == 0)}


def zero_belief_audit(net, jg, evidence=None, spec=None, raise_on_failure=True, exact=None):
    """Run IJGP and RDAC message by message on the same schedule and cross-check their zeros.

    ``exact`` optionally supplies exact posterior marginals; otherwise they
    are enumerated when the network has at most ``BRUTE_FORCE_MAX_VARS``
    variables.
    """
    evidence = dict(evidence or {})
    spec = spec or ConvergenceSpec()
    engine = JoinGraphPropagation(net, jg, evidence)
    cn = flatten(net).condition(evidence)
    rd = RelationalArcConsistency(cn, jg, observed=evidence)
    order = iteration_order(message_schedule(jg))
    bound = rd.separator_bound()
    report = AuditReport(rdac_bound=bound)

    history = []
    fixpoint = None
    iterations = max(spec.max_iterations, 1)
    it = 0
    while it < iterations or fixpoint is None:
        it += 1
        changed = False
        for u, v in order:
            engine.send(u, v)
            changed |= rd.send(u, v)
            report.message_equivalence.extend(_message_zero_mismatches(engine, rd, u, v))
        rows = engine.belief_rows()
        domains = rd.domains()
        for var, row in rows.items():
            removed = set(range(net.cards[var])) - domains[var]
            zeros = set(np.flatnonzero(row == 0).tolist())
            if zeros != removed:
                report.domain_equivalence.append((it, var, sorted(zeros), sorted(removed)))
        history.append(_zero_set(rows))
        if fixpoint is None and not changed:
            fixpoint = it - 1
        if it > bound + iterations + 2:
            break
    report.rdac_iterations = fixpoint if fixpoint is not None else it
    report.ijgp_iterations = it

    for k in range(1, len(history)):
        lost = history[k - 1] - history[k]
        if lost:
            report.persistence.append((k + 1, "zero became positive", sorted(lost)[0]))
    settle = report.rdac_iterations
    for k in range(max(settle, 1), len(history)):
        if history[k] != history[-1]:
            report.persistence.append((k + 1, "zeros changed after the fixpoint", None))
    final = history[-1] if history else set()
    report.zero_count = len(final)

    if exact is None and net.n <= BRUTE_FORCE_MAX_VARS:
        exact = brute_force_marginals(net, evidence, allow_zero_evidence=True)
    if exact is not None:
        report.exact_checked = True
        for var, k in sorted(set().union(*history) if history else ()):
            if exact.joint[var][k] > 0:
                report.exact_zeros.append((var, k, float(exact.joint[var][k])))

    if raise_on_failure and (not report.passed or not report.within_bound):
        raise SoundnessViolation(report)
    return report
