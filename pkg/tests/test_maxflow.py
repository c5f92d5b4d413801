import numpy as np
import pytest
from scipy.optimize import linprog

from hyperlap.maxflow import INF, FlowNetwork


def _lp_max_flow(n, arcs, s, t):
    """Max flow by linear programming, as an independent reference."""
    m = len(arcs)
    c = np.zeros(m)
    for k, (u, v, _) in enumerate(arcs):
        if u == s:
            c[k] -= 1
        if v == s:
            c[k] += 1
    A_eq, b_eq = [], []
    for x in range(n):
        if x in (s, t):
            continue
        row = np.zeros(m)
        for k, (u, v, _) in enumerate(arcs):
            if u == x:
                row[k] += 1
            if v == x:
                row[k] -= 1
        A_eq.append(row)
        b_eq.append(0.0)
    res = linprog(c, A_eq=A_eq or None, b_eq=b_eq or None, bounds=[(0, cap) for *_, cap in arcs], method="highs")
    return -res.fun


def test_textbook_network():
    net = FlowNetwork()
    for u, v, c in [("s", "a", 10), ("s", "c", 10), ("a", "b", 4), ("a", "c", 2), ("a", "d", 8), ("c", "d", 9), ("d", "b", 6), ("b", "t", 10), ("d", "t", 10)]:
        net.add_edge(u, v, c)
    assert net.max_flow("s", "t") == pytest.approx(19.0)


def test_infinite_middle_arcs():
    net = FlowNetwork()
    net.add_edge("s", "x", 2.5)
    net.add_edge("x", "y", INF)
    net.add_edge("y", "t", 1.25)
    assert net.max_flow("s", "t") == pytest.approx(1.25)
    assert net.flow("x", "y") == pytest.approx(1.25)


def test_negative_capacity_rejected():
    with pytest.raises(ValueError):
        FlowNetwork().add_edge("a", "b", -1.0)


def test_random_against_lp():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = 7
        arcs = [(u, v, float(rng.uniform(0, 3))) for u in range(n) for v in range(n) if u != v and rng.random() < 0.4]
        net = FlowNetwork()
        for u, v, c in arcs:
            net.add_edge(u, v, c)
        got = net.max_flow(0, n - 1)
        assert got == pytest.approx(_lp_max_flow(n, arcs, 0, n - 1), abs=1e-9)
