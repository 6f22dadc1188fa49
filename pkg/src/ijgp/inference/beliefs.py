"""Result and configuration types shared by the inference engines."""

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import AllZero


class BeliefKind(enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"
    UPPER = "upper-bound"
    LOWER = "lower-bound"


class McMode(enum.Enum):
    """Operator used on every mini-cluster except the one kept as a sum."""

    UPPER = "upper"
    LOWER = "lower"
    APPROX = "approx"
    SUM = "sum"


@dataclass(frozen=True)
class ConvergenceSpec:
    max_iterations: int = 30
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class Message:
    edge: tuple
    combined: list
    individuals: list

    @property
    def functions(self):
        return list(self.combined) + list(self.individuals)


@dataclass
class IterationRecord:
    iteration: int
    beliefs: list
    max_delta: float


@dataclass
class Beliefs:
    """Posterior marginals, one normalized row per variable.

    ``joint`` holds the unnormalized P(x_i, e) (or its bound) when the engine
    produces it; ``degenerate`` lists variables whose lower bound was all zero
    and whose row was therefore left uniform.
    """

    marginals: list
    kind: BeliefKind
    joint: list = None
    normalizer: float = None
    evidence: dict = field(default_factory=dict)
    trace: list = None
    iterations: int = 0
    converged: bool = None
    degenerate: list = field(default_factory=list)

    def __len__(self):
        return len(self.marginals)

    def __getitem__(self, var):
        return self.marginals[var]

    def argmax(self):
        return [int(np.argmax(row)) for row in self.marginals]

    def to_text(self):
        lines = []
        for var, row in enumerate(self.marginals):
            lines.append(f"{var} {len(row)} " + " ".join(f"{p:.17g}" for p in row))
        return "\n".join(lines) + "\n"


def normalized_rows(joint, evidence, cards, kind):
    """Normalize each unnormalized row; evidence rows become point masses."""
    rows = []
    degenerate = []
    for var, row in enumerate(joint):
        if var in evidence:
            point = np.zeros(cards[var])
            point[evidence[var]] = 1.0
            rows.append(point)
            continue
        total = float(row.sum())
        if total > 0:
            rows.append(row / total)
        elif kind is BeliefKind.LOWER:
            rows.append(np.full(cards[var], 1.0 / cards[var]))
            degenerate.append(var)
        else:
            raise AllZero(f"beliefs of variable {var} are all zero (inconsistent evidence?)")
    return rows, degenerate


def expand_evidence_joint(row_by_var, evidence, cards, pe):
    """Joint rows for all variables; an evidence variable gets P(e) at its observed value."""
    out = []
    for var in range(len(cards)):
        if var in evidence:
            r = np.zeros(cards[var])
            r[evidence[var]] = pe
            out.append(r)
        else:
            out.append(row_by_var[var])
    return out
