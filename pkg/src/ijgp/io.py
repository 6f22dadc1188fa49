"""Plain-text formats for networks, evidence, marginals, traces and transmitted bits."""

import numpy as np

from .errors import FormatError, InferenceError, NetworkSyntaxError, SemanticError
from .model import Evidence, build_network, cpt


def _fmt(x):
    return f"{float(x):.17g}"


class _Tokens:
    """Whitespace tokens with line numbers; ``#`` comments run to end of line."""

    def __init__(self, text):
        self.items = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0]
            self.items.extend((tok, lineno) for tok in line.split())
        self.pos = 0

    @property
    def line(self):
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else 1

    def next(self, what):
        if self.pos >= len(self.items):
            raise NetworkSyntaxError(f"unexpected end of input, expected {what}", self.line)
        tok, line = self.items[self.pos]
        self.pos += 1
        return tok, line

    def integer(self, what, minimum=None):
        tok, line = self.next(what)
        try:
            value = int(tok)
        except ValueError:
            raise NetworkSyntaxError(f"expected integer {what}, found {tok!r}", line) from None
        if minimum is not None and value < minimum:
            raise SemanticError(f"{what} must be >= {minimum}, found {value}", line)
        return value, line

    def real(self, what):
        tok, line = self.next(what)
        try:
            value = float(tok)
        except ValueError:
            raise NetworkSyntaxError(f"expected number {what}, found {tok!r}", line) from None
        return value, line

    def done(self):
        if self.pos < len(self.items):
            tok, line = self.items[self.pos]
            raise NetworkSyntaxError(f"trailing token {tok!r}", line)


def parse_network(text):
    """Parse the ``BAYES`` text format; errors carry the offending line number."""
    toks = _Tokens(text)
    head, line = toks.next("header")
    if head != "BAYES":
        raise NetworkSyntaxError(f"expected 'BAYES', found {head!r}", line)
    n, _ = toks.integer("variable count", minimum=1)
    cards = [toks.integer("cardinality", minimum=1)[0] for _ in range(n)]
    r, line = toks.integer("function count")
    if r != n:
        raise SemanticError(f"expected {n} functions (one per variable), found {r}", line)
    scopes = []
    for _ in range(r):
        k, line = toks.integer("scope size", minimum=1)
        scope = []
        for _ in range(k):
            v, vline = toks.integer("variable id")
            if not 0 <= v < n:
                raise SemanticError(f"variable {v} out of range 0..{n - 1}", vline)
            scope.append(v)
        if len(set(scope)) != len(scope):
            raise SemanticError(f"repeated variable in scope {scope}", line)
        scopes.append((scope, line))
    cpts = []
    for scope, sline in scopes:
        t, line = toks.integer("table size", minimum=1)
        expected = int(np.prod([cards[v] for v in scope]))
        if t != expected:
            raise SemanticError(
                f"table for scope {scope} needs {expected} entries, header says {t}", line
            )
        values = [toks.real("table entry")[0] for _ in range(t)]
        try:
            cpts.append(cpt(scope[-1], scope[:-1], cards, values))
        except InferenceError as exc:
            raise SemanticError(str(exc), line) from None
    toks.done()
    try:
        return build_network(cards, cpts)
    except InferenceError as exc:
        raise SemanticError(str(exc)) from None


def write_network(net):
    lines = ["BAYES", str(net.n), " ".join(str(c) for c in net.cards), str(net.n)]
    for f in net.cpts:
        lines.append(" ".join(str(x) for x in [len(f.scope), *f.scope]))
    for f in net.cpts:
        lines.append(" ".join([str(f.size)] + [_fmt(x) for x in f.values]))
    return "\n".join(lines) + "\n"


def parse_evidence(text, cards=None):
    """``m`` followed by ``m`` pairs ``var value``; validated against ``cards`` when given."""
    toks = _Tokens(text)
    if not toks.items:
        return Evidence()
    m, _ = toks.integer("evidence count", minimum=0)
    ev = Evidence()
    for _ in range(m):
        var, line = toks.integer("evidence variable", minimum=0)
        val, _ = toks.integer("evidence value", minimum=0)
        if var in ev:
            raise SemanticError(f"variable {var} observed twice", line)
        if cards is not None:
            if var >= len(cards):
                raise SemanticError(f"evidence on unknown variable {var}", line)
            if val >= cards[var]:
                raise SemanticError(
                    f"value {val} out of range for variable {var} (d={cards[var]})", line
                )
        ev[var] = val
    toks.done()
    return ev


def write_evidence(evidence):
    items = sorted(evidence.items())
    return " ".join([str(len(items))] + [f"{v} {x}" for v, x in items]) + "\n"


def write_marginals(rows):
    """One line per variable: ``var d p_1 ... p_d``."""
    return "".join(
        f"{var} {len(row)} " + " ".join(_fmt(p) for p in row) + "\n" for var, row in enumerate(rows)
    )


def parse_marginals(text):
    rows = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].split()
        if not line:
            continue
        try:
            var, d = int(line[0]), int(line[1])
            values = [float(x) for x in line[2:]]
        except (ValueError, IndexError):
            raise FormatError("malformed marginals line", lineno) from None
        if len(values) != d:
            raise FormatError(f"expected {d} probabilities, found {len(values)}", lineno)
        rows[var] = np.array(values)
    if sorted(rows) != list(range(len(rows))):
        raise FormatError("marginals must cover variables 0..n-1")
    return [rows[v] for v in range(len(rows))]


def write_truth(bits):
    return "".join(f"{int(b)}\n" for b in bits)


def parse_truth(text):
    bits = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line not in ("0", "1"):
            raise FormatError(f"expected 0 or 1, found {line!r}", lineno)
        bits.append(int(line))
    return bits
