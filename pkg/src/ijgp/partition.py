"""Greedy largest-first partitioning of scopes into bounded mini-clusters.

Shared by mini-clustering and by the schematic mini-bucket structuring so both
split clusters the same way.
"""

from .errors import FunctionTooLarge


def greedy_partition(scopes, i, strict=False):
    """Partition ``scopes`` into groups whose union has at most ``i`` variables.

    Scopes are visited by size, largest first (ties: lower position first).
    Each one joins the first group, in creation order, that can absorb it;
    otherwise it opens a new group.  Returns lists of positions into
    ``scopes`` in group-creation order.

    A scope with more than ``i`` variables ends up alone in its own group,
    or raises FunctionTooLarge when ``strict`` is set.
    """
    scopes = [frozenset(s) for s in scopes]
    for k, s in enumerate(scopes):
        if strict and len(s) > i:
            raise FunctionTooLarge(
                f"function {k} has {len(s)} variables, more than the i-bound {i}"
            )
    order = sorted(range(len(scopes)), key=lambda k: (-len(scopes[k]), k))
    groups = []
    unions = []
    for k in order:
        for g, u in enumerate(unions):
            merged = u | scopes[k]
            if len(merged) <= i:
                groups[g].append(k)
                unions[g] = merged
                break
        else:
            groups.append([k])
            unions.append(scopes[k])
    return groups
