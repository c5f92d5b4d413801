"""Hypothesis strategies for small weighted hypergraphs and state vectors."""
import numpy as np
from hypothesis import strategies as st

from hyperlap.hypergraph import Hypergraph


@st.composite
def hypergraphs(draw, min_n=2, max_n=6, max_m=8):
    n = draw(st.integers(min_n, max_n))
    m = draw(st.integers(1, max_m))
    edges = []
    for _ in range(m):
        members = draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n))
        edges.append(tuple(sorted(members)))
    covered = {u for e in edges for u in e}
    for u in range(n):
        if u not in covered:
            edges.append((u, (u + 1) % n) if n > 1 else (u,))
    weights = draw(
        st.lists(st.floats(0.25, 4.0, allow_nan=False), min_size=len(edges), max_size=len(edges))
    )
    return Hypergraph(tuple(f"v{i}" for i in range(n)), tuple(edges), np.array(weights))


@st.composite
def tied_vectors(draw, n):
    """Values drawn from a small pool so ties are common."""
    pool = draw(st.lists(st.integers(-3, 3), min_size=1, max_size=4))
    vals = draw(st.lists(st.sampled_from(pool), min_size=n, max_size=n))
    return np.array(vals, dtype=float)


@st.composite
def instance_and_vector(draw, max_n=6, ties=True):
    H = draw(hypergraphs(max_n=max_n))
    if ties and draw(st.booleans()):
        f = draw(tied_vectors(H.n))
    else:
        f = np.array(draw(st.lists(st.floats(-5, 5, allow_nan=False, allow_subnormal=False), min_size=H.n, max_size=H.n)))
    return H, f
