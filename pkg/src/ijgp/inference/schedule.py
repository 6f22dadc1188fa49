"""Message ordering over a join-graph."""


def message_schedule(jg):
    """Forward message order: one direction per edge.

    Repeatedly takes the unscheduled edge ``(u, v)`` whose sender has the
    fewest incoming messages still missing (ties: smallest ``(u, v)``).  The
    backward pass is the reverse of this list with each edge flipped; see
    :func:`iteration_order`.
    """
    pending = {e.key for e in jg.edges}
    received = set()
    missing = {nd.id: len(jg.neighbors(nd.id)) for nd in jg.nodes}
    forward = []
    while pending:
        best = None
        for a, b in pending:
            for u, v in ((a, b), (b, a)):
                key = (missing[u] - ((v, u) not in received), u, v)
                if best is None or key < best:
                    best = key
        _, u, v = best
        forward.append((u, v))
        received.add((u, v))
        missing[v] -= 1
        pending.discard((min(u, v), max(u, v)))
    return forward


def iteration_order(forward):
    """Directed edges of one full iteration: forward then back."""
    return list(forward) + [(v, u) for u, v in reversed(forward)]
