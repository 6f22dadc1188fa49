"""Tabular factors and the operations on them.

A factor is a non-negative table over an ordered scope of discrete variables.
Tables are stored as numpy arrays whose axes follow the scope, so the flat
row-major view (last scope variable fastest) is simply ``table.ravel()``.
"""

import enum
from math import prod

import numpy as np

from .errors import (
    AllZero,
    CardinalityMismatch,
    ScopeTooLarge,
    ValueOutOfRange,
    VarNotInScope,
)

DEFAULT_MAX_ENTRIES = 2 ** 28


class Factor:
    """Immutable table over ``scope``.

    ``child`` is set when the factor is a CPT p(child | parents); the child is
    then expected to be the distribution axis.
    """

    __slots__ = ("scope", "table", "child")

    def __init__(self, scope, table, child=None):
        scope = tuple(int(v) for v in scope)
        if len(set(scope)) != len(scope):
            raise ValueError(f"duplicate variable in scope {scope}")
        table = np.array(table, dtype=np.float64)
        if table.ndim != len(scope):
            raise ValueError(
                f"table has {table.ndim} axes but scope {scope} has {len(scope)} variables"
            )
        if np.any(table < 0) or np.any(~np.isfinite(table)):
            raise ValueError("factor entries must be finite and non-negative")
        table.setflags(write=False)
        self.scope = scope
        self.table = table
        self.child = child

    @classmethod
    def from_values(cls, scope, cards, values, child=None):
        """Build from a flat row-major value sequence."""
        values = np.asarray(values, dtype=np.float64)
        n = prod(cards)
        if values.size != n:
            raise ValueError(f"expected {n} values for cardinalities {tuple(cards)}, got {values.size}")
        return cls(scope, values.reshape(tuple(cards)), child=child)

    @classmethod
    def scalar(cls, value):
        return cls((), np.asarray(float(value)))

    @classmethod
    def ones(cls, scope, cards):
        return cls(scope, np.ones(tuple(cards)))

    @property
    def cards(self):
        return self.table.shape

    @property
    def values(self):
        return self.table.ravel()

    @property
    def size(self):
        return self.table.size

    def card_of(self, var):
        return self.table.shape[self.scope.index(var)]

    def cardinalities(self):
        return dict(zip(self.scope, self.table.shape))

    def transpose(self, scope):
        """Same function with axes permuted to ``scope``."""
        scope = tuple(scope)
        if set(scope) != set(self.scope) or len(scope) != len(self.scope):
            raise VarNotInScope(f"{scope} is not a permutation of {self.scope}")
        axes = [self.scope.index(v) for v in scope]
        return Factor(scope, np.transpose(self.table, axes), child=self.child)

    def canonical(self):
        """Axes sorted by ascending variable id."""
        return self.transpose(sorted(self.scope))

    def reduce(self, evidence):
        """Slice at observed values; observed variables leave the scope."""
        index = []
        scope = []
        for v, d in zip(self.scope, self.table.shape):
            if v in evidence:
                value = evidence[v]
                if not 0 <= value < d:
                    raise ValueOutOfRange(f"value {value} out of range for variable {v} (d={d})")
                index.append(value)
            else:
                index.append(slice(None))
                scope.append(v)
        if len(scope) == len(self.scope):
            return self
        child = self.child if self.child in scope else None
        return Factor(scope, self.table[tuple(index)], child=child)

    def __eq__(self, other):
        if not isinstance(other, Factor):
            return NotImplemented
        return self.scope == other.scope and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.scope, self.table.tobytes()))

    def __repr__(self):
        return f"Factor(scope={self.scope}, cards={self.cards})"


class EliminationOperator(enum.Enum):
    SUM = "sum"
    MAX = "max"
    MIN = "min"
    MEAN = "mean"


def combine(factors, max_entries=DEFAULT_MAX_ENTRIES):
    """Pointwise product of ``factors`` over the ascending union of their scopes.

    Each cell multiplies its input values in ascending order, so the result
    depends only on the multiset of values meeting there.  It is therefore
    bit-identical for any permutation of the arguments and commutes exactly
    with evidence slicing.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("combine needs at least one factor")
    cards = {}
    for f in factors:
        for v, d in zip(f.scope, f.table.shape):
            if cards.setdefault(v, d) != d:
                raise CardinalityMismatch(f"variable {v} has cardinalities {cards[v]} and {d}")
    scope = tuple(sorted(cards))
    shape = tuple(cards[v] for v in scope)
    n = prod(shape)
    if n > max_entries:
        raise ScopeTooLarge(n, max_entries)
    if len(factors) == 1:
        return factors[0].transpose(scope) if factors[0].scope != scope else factors[0]

    views = []
    for f in factors:
        f = f.canonical()
        views.append(f.table.reshape([cards[v] if v in f.scope else 1 for v in scope]))
    if len(views) == 2:
        # a single multiplication is already commutative
        result = views[0] * views[1]
    else:
        stacked = np.sort(np.stack(np.broadcast_arrays(*views)), axis=0)
        result = stacked[0]
        for layer in stacked[1:]:
            result = result * layer
    return Factor(scope, np.broadcast_to(result, shape))


def eliminate(f, variables, op=EliminationOperator.SUM):
    """Remove ``variables`` from ``f`` by aggregating with ``op``."""
    variables = set(variables)
    missing = variables - set(f.scope)
    if missing:
        raise VarNotInScope(f"variables {sorted(missing)} not in scope {f.scope}")
    if not variables:
        return f
    axes = tuple(i for i, v in enumerate(f.scope) if v in variables)
    keep = tuple(v for v in f.scope if v not in variables)
    if op is EliminationOperator.SUM:
        table = f.table.sum(axis=axes)
    elif op is EliminationOperator.MAX:
        table = f.table.max(axis=axes)
    elif op is EliminationOperator.MIN:
        table = f.table.min(axis=axes)
    elif op is EliminationOperator.MEAN:
        count = prod(f.table.shape[a] for a in axes)
        table = f.table.sum(axis=axes) / count
    else:
        raise ValueError(f"unknown operator {op!r}")
    return Factor(keep, table)


def normalize(f):
    """Return ``(f / sum(f), sum(f))``; raises AllZero for an all-zero table."""
    total = float(f.table.sum())
    if not total > 0:
        raise AllZero(f"cannot normalize all-zero factor over {f.scope}")
    return Factor(f.scope, f.table / total, child=f.child), total
