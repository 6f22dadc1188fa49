"""Seeded generators for random, grid, noisy-OR and coding networks.

All randomness comes from numpy's PCG64 generator seeded with the given
integer, so a (family, parameters, seed) triple fixes the network exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParamOutOfRange
from .model import build_network, cpt


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def spawn_seeds(seed, count):
    """Independent child seeds for a suite of ``count`` instances."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _random_table(rng, n_rows, k):
    t = rng.random((n_rows, k))
    # guard against an all-zero draw (probability ~0, but keep tables valid)
    t[t.sum(axis=1) == 0] = 1.0
    return t / t.sum(axis=1, keepdims=True)


def _random_parents(rng, n, c, p):
    """Pick ``c`` children among the variables that can have ``p`` earlier parents."""
    eligible = np.arange(p, n)
    children = np.sort(rng.choice(eligible, size=c, replace=False)) if c else np.array([], int)
    parents = {}
    for v in children.tolist():
        parents[v] = sorted(rng.choice(v, size=p, replace=False).tolist())
    return parents


def gen_random(N, K, C, P, seed):
    """Random network: ``C`` of the ``N`` variables get ``P`` random earlier parents.

    Variable ids follow the topological order.  Every CPT row is a vector of
    uniform(0, 1) draws normalized to sum to 1.
    """
    if N < 1 or K < 1 or C < 0 or P < 0:
        raise ParamOutOfRange("N, K must be positive and C, P non-negative")
    if P >= N and C > 0:
        raise ParamOutOfRange(f"P={P} parents need P < N={N}")
    if C > N - P:
        raise ParamOutOfRange(f"only {N - P} variables can have {P} earlier parents, C={C}")
    rng = make_rng(seed)
    cards = [K] * N
    parents = _random_parents(rng, N, C, P)
    cpts = []
    for v in range(N):
        pa = parents.get(v, [])
        table = _random_table(rng, K ** len(pa), K)
        cpts.append(cpt(v, pa, cards, table.ravel()))
    return build_network(cards, cpts)


def gen_grid(M, K, seed):
    """M x M grid; variable r*M + c has parents to its left and above."""
    if M < 2 or K < 1:
        raise ParamOutOfRange("grid needs M >= 2 and K >= 1")
    rng = make_rng(seed)
    n = M * M
    cards = [K] * n
    cpts = []
    for r in range(M):
        for c in range(M):
            v = r * M + c
            pa = sorted(([v - 1] if c > 0 else []) + ([v - M] if r > 0 else []))
            table = _random_table(rng, K ** len(pa), K)
            cpts.append(cpt(v, pa, cards, table.ravel()))
    return build_network(cards, cpts)


def noisy_or_table(q, leak=0.0):
    """Binary noisy-OR CPT rows over parent configurations (last parent fastest).

    P(X=0 | pa) = (1 - leak) * product of q_j over the parents that are on.
    """
    q = np.asarray(q, dtype=np.float64)
    rows = []
    for config in np.ndindex(*([2] * len(q))):
        off = (1.0 - leak) * float(np.prod([qj for qj, s in zip(q, config) if s == 1]))
        rows.append((off, 1.0 - off))
    return np.array(rows).reshape(-1, 2)


def gen_noisy_or(N, P, seed, leak=0.0, inhibition_range=(0.0, 0.2), C=None):
    """Binary noisy-OR network on the random structure; ``C`` defaults to N - P children."""
    if C is None:
        C = N - P
    if P >= N or P < 0:
        raise ParamOutOfRange(f"P={P} must satisfy 0 <= P < N={N}")
    if not 0.0 <= leak <= 1.0:
        raise ParamOutOfRange("leak must lie in [0, 1]")
    lo, hi = inhibition_range
    if not 0.0 <= lo <= hi <= 1.0:
        raise ParamOutOfRange("inhibition range must lie inside [0, 1]")
    if C < 0 or C > N - P:
        raise ParamOutOfRange(f"only {N - P} variables can have {P} earlier parents, C={C}")
    rng = make_rng(seed)
    cards = [2] * N
    parents = _random_parents(rng, N, C, P)
    cpts = []
    for v in range(N):
        pa = parents.get(v, [])
        if pa:
            q = rng.uniform(lo, hi, size=len(pa))
            table = noisy_or_table(q, leak)
        else:
            table = _random_table(rng, 1, 2)
        cpts.append(cpt(v, pa, cards, table.ravel()))
    return build_network(cards, cpts)


def channel_likelihood(y, sigma):
    """Normalized Gaussian likelihood of bit values 0 and 1 (sent as -1 and +1) given ``y``."""
    if sigma == 0:
        return np.array([1.0, 0.0]) if y < 0 else np.array([0.0, 1.0])
    logs = np.array([-((y + 1.0) ** 2), -((y - 1.0) ** 2)]) / (2.0 * sigma * sigma)
    logs -= logs.max()
    w = np.exp(logs)
    return w / w.sum()


@dataclass
class CodingInstance:
    net: object
    true_input: list
    evidence: dict
    info_bits: list = field(default_factory=list)
    code_bits: list = field(default_factory=list)
    channel: list = field(default_factory=list)


def gen_coding(N, P, sigma, seed):
    """Systematic linear block code observed through an additive Gaussian channel.

    Bits 0..N/2-1 are information bits with uniform priors; bits N/2..N-1 are
    parity bits, each the XOR of ``P`` random information bits.  Every bit b
    has an observed child N + b whose CPT row p(Y=0 | b) is the channel
    likelihood of the received value, so the evidence Y=0 on all channel
    nodes multiplies in exactly that likelihood.  Returns (net, true_input,
    evidence) where ``true_input`` holds the transmitted information bits.
    """
    inst = gen_coding_instance(N, P, sigma, seed)
    return inst.net, inst.true_input, inst.evidence


def gen_coding_instance(N, P, sigma, seed):
    if N < 2 or N % 2:
        raise ParamOutOfRange("N must be an even number >= 2")
    half = N // 2
    if not 1 <= P <= half:
        raise ParamOutOfRange(f"P={P} must lie in [1, N/2]")
    if sigma < 0:
        raise ParamOutOfRange("sigma must be non-negative")
    rng = make_rng(seed)
    cards = [2] * (2 * N)
    parents = {}
    for b in range(half, N):
        parents[b] = sorted(rng.choice(half, size=P, replace=False).tolist())
    info = rng.integers(0, 2, size=half)
    bits = np.concatenate([info, [int(info[parents[b]].sum() % 2) for b in range(half, N)]])
    received = (2.0 * bits - 1.0) + sigma * rng.standard_normal(N)
    cpts = []
    for b in range(half):
        cpts.append(cpt(b, [], cards, [0.5, 0.5]))
    for b in range(half, N):
        pa = parents[b]
        rows = []
        for config in np.ndindex(*([2] * P)):
            parity = sum(config) % 2
            rows.extend([1.0 - parity, float(parity)])
        cpts.append(cpt(b, pa, cards, rows))
    channel = []
    for b in range(N):
        like = channel_likelihood(received[b], sigma)
        channel.append(like)
        values = [like[0], 1.0 - like[0], like[1], 1.0 - like[1]]
        cpts.append(cpt(N + b, [b], cards, values))
    net = build_network(cards, cpts)
    evidence = {N + b: 0 for b in range(N)}
    return CodingInstance(
        net,
        [int(x) for x in info],
        evidence,
        list(range(half)),
        list(range(half, N)),
        channel,
    )


def forward_sample(net, rng):
    x = [0] * net.n
    for v in net.topological_order():
        f = net.cpts[v]
        row = np.asarray(f.table[tuple(x[p] for p in f.scope[:-1])], dtype=np.float64)
        x[v] = int(rng.choice(len(row), p=row / row.sum()))
    return x


def sample_evidence(net, count, seed):
    """Forward-sample one assignment and reveal ``count`` uniformly chosen variables."""
    if not 0 <= count <= net.n:
        raise ParamOutOfRange(f"count={count} must lie in [0, {net.n}]")
    rng = make_rng(seed)
    x = forward_sample(net, rng)
    chosen = sorted(rng.choice(net.n, size=count, replace=False).tolist())
    return {v: x[v] for v in chosen}


def force_zeros(net, fraction, seed):
    """Copy of ``net`` with about ``fraction`` of each CPT's entries set to 0 and rows renormalized.

    Every row keeps at least one positive entry.
    """
    if not 0.0 <= fraction < 1.0:
        raise ParamOutOfRange("fraction must lie in [0, 1)")
    rng = make_rng(seed)
    cards = net.cards
    cpts = []
    for f in net.cpts:
        k = cards[f.child]
        rows = np.array(f.table, dtype=np.float64).reshape(-1, k)
        mask = rng.random(rows.shape) < fraction
        for r in range(rows.shape[0]):
            if mask[r].all():
                mask[r, rng.integers(k)] = False
        rows[mask] = 0.0
        rows /= rows.sum(axis=1, keepdims=True)
        cpts.append(cpt(f.child, list(f.scope[:-1]), cards, rows.ravel()))
    return build_network(cards, cpts)


def gen_polytree(N, K, seed, max_parents=3):
    """Random polytree: each new variable links to earlier components, at most one link per component."""
    if N < 1 or K < 1:
        raise ParamOutOfRange("N and K must be positive")
    rng = make_rng(seed)
    cards = [K] * N
    component = list(range(N))
    parents = {v: [] for v in range(N)}
    for v in range(1, N):
        roots = sorted({component[u] for u in range(v)})
        k = int(rng.integers(0, min(max_parents, len(roots)) + 1))
        picked = rng.choice(len(roots), size=k, replace=False) if k else []
        for idx in picked:
            root = roots[int(idx)]
            members = [u for u in range(v) if component[u] == root]
            parents[v].append(int(rng.choice(members)))
            for u in members:
                component[u] = v
        parents[v].sort()
    cpts = []
    for v in range(N):
        pa = parents[v]
        table = _random_table(rng, K ** len(pa), K)
        cpts.append(cpt(v, pa, cards, table.ravel()))
    return build_network(cards, cpts)


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: dict
    seed: int

    FAMILIES = ("random", "grid", "noisyor", "coding")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ParamOutOfRange(f"unknown family {self.family!r}")

    def build(self):
        """Returns (net, evidence, true_input); the last two are None except for coding."""
        p = dict(self.params)
        if self.family == "random":
            return gen_random(p["N"], p["K"], p["C"], p["P"], self.seed), None, None
        if self.family == "grid":
            return gen_grid(p["M"], p["K"], self.seed), None, None
        if self.family == "noisyor":
            extra = {k: p[k] for k in ("leak", "inhibition_range", "C") if k in p}
            return gen_noisy_or(p["N"], p["P"], self.seed, **extra), None, None
        net, truth, evidence = gen_coding(p["N"], p["P"], p["sigma"], self.seed)
        return net, evidence, truth
