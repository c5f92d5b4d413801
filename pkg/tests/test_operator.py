import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hyperlap.hypergraph import (
    Space,
    StateVector,
    discrepancy_ratio,
    from_edges,
    projection_off_constant,
    random_hypergraph,
)
from hyperlap.operator import (
    DensityMethod,
    DensitySubproblem,
    apply_even_split_operator,
    apply_operator,
    audit_rules,
    edge_extremes,
    edge_weight_split,
    equivalence_classes,
    even_split_matrix,
    max_density_set,
    normalized_laplacian,
    peel,
    rates,
    rates_batch,
    rayleigh_quotient,
    solve_layer_flow,
)
from hyperlap.oracle import brute_force_operator

from strategies import instance_and_vector

SQ5 = math.sqrt(5.0)
LOUIS4_F2 = np.array([1.0, 1.0, -1.0, -1.0])
TWOEDGE4_F3 = np.array([SQ5 - 1, -1.0, 4 - SQ5, -1.0])


def test_extremes_louis4(louis4):
    ex = edge_extremes(louis4, LOUIS4_F2)
    e5 = ex[4]
    assert (e5.S, e5.I, e5.delta, e5.c) == ((0, 1), (2,), 2.0, 2.0)
    assert not ex[0].active and not ex[3].active


def test_extremes_constant(nested5):
    for ex in edge_extremes(nested5, np.full(5, 2.5)):
        assert ex.S == ex.I == nested5.edges[ex.edge]
        assert ex.delta == 0.0 and ex.c == 0.0


def test_extremes_twoedge4(twoedge4):
    e2 = edge_extremes(twoedge4, TWOEDGE4_F3)[1]
    assert e2.S == (2,) and e2.I == (1, 3)
    assert e2.delta == pytest.approx(5 - SQ5, abs=1e-15)


def test_equivalence_classes_chain():
    classes, class_of = equivalence_classes(np.array([0.0, 1.0, 0.5e-9, 1.0 + 0.5e-9]))
    assert [c.tolist() for c in classes] == [[0, 2], [1, 3]]
    assert class_of.tolist() == [0, 1, 0, 1]


def _louis4_class(louis4, members):
    res = apply_operator(louis4, LOUIS4_F2)
    U = frozenset(members)
    i_edges = {ex.edge: (ex.c, frozenset(ex.I) & U) for ex in res.extremes if ex.active and set(ex.I) <= U}
    s_edges = {ex.edge: (ex.c, frozenset(ex.S) & U) for ex in res.extremes if ex.active and set(ex.S) <= U}
    return DensitySubproblem(tuple(members), {u: 3.0 for u in members}, i_edges, s_edges)


@pytest.mark.parametrize("method", ["brute", "cut"])
def test_max_density_louis4_classes(louis4, method):
    top = _louis4_class(louis4, (0, 1))
    assert top.density({0}) == pytest.approx(-2 / 3)
    assert top.density({1}) == pytest.approx(-4 / 3)
    P, d = max_density_set(top, method)
    assert P == frozenset({0, 1}) and d == pytest.approx(-2 / 3, abs=1e-12)
    P, d = max_density_set(_louis4_class(louis4, (2, 3)), method)
    assert P == frozenset({2, 3}) and d == pytest.approx(2 / 3, abs=1e-12)


def test_max_density_singleton():
    sub = DensitySubproblem((7,), {7: 2.0}, {0: (3.0, frozenset({7}))}, {1: (1.0, frozenset({7}))})
    assert max_density_set(sub) == (frozenset({7}), 1.0)


def test_peel_splits_adversarial_class():
    # u is fed by a big edge, v is drained: two layers with decreasing rate
    sub = DensitySubproblem(
        (0, 1), {0: 1.0, 1: 1.0}, {0: (5.0, frozenset({0}))}, {1: (1.0, frozenset({1}))}
    )
    for method in ("brute", "cut"):
        layers = peel(sub, method)
        assert [l.T for l in layers] == [(0,), (1,)]
        assert [l.delta for l in layers] == [5.0, -1.0]


def test_peel_single_layer_twoedge4(twoedge4):
    res = apply_operator(twoedge4, TWOEDGE4_F3)
    bd = [l for l in res.layers if set(l.T) == {1, 3}]
    assert len(bd) == 1 and bd[0].delta == pytest.approx(5 / 3, abs=1e-12)


def test_layer_flow_louis4(louis4):
    res = apply_operator(louis4, LOUIS4_F2)
    (low,) = [l for l in res.layers if set(l.T) == {2, 3}]
    assert low.rho[(2, 4)] == pytest.approx(2.0)
    assert low.rho[(3, 1)] == pytest.approx(2.0)


def test_layer_flow_singleton_forced():
    rho = solve_layer_flow((4,), 1.0, {0: (2.0, frozenset({4}))}, {1: (1.0, frozenset({4}))}, {4: 1.0})
    assert rho == {(4, 0): 2.0, (4, 1): -1.0}


def test_operator_louis4(louis4):
    res = apply_operator(louis4, LOUIS4_F2)
    np.testing.assert_allclose(res.Lw, (2 / 3) * LOUIS4_F2, atol=1e-12)
    assert res.rho.sum() == pytest.approx(0.0, abs=1e-12)


def test_operator_twoedge4(twoedge4):
    res = apply_operator(twoedge4, TWOEDGE4_F3)
    np.testing.assert_allclose(res.Lw, [SQ5, -5 / 3, 5 - SQ5, -5 / 3], atol=1e-12)


def test_operator_constant_and_zero(instance):
    for f in (np.full(instance.n, 3.0), np.zeros(instance.n)):
        res = apply_operator(instance, f)
        assert np.all(res.r == 0.0)


def test_operator_accepts_other_spaces(twoedge4):
    phi = twoedge4.node_weights * TWOEDGE4_F3
    res = apply_operator(twoedge4, StateVector(Space.MEASURE, phi))
    np.testing.assert_allclose(res.f, TWOEDGE4_F3)


def test_even_split_louis4(louis4):
    res = apply_even_split_operator(louis4, LOUIS4_F2)
    np.testing.assert_allclose(res.Lw, [1 / 3, 1.0, -2 / 3, -2 / 3], atol=1e-12)
    # not a multiple of f
    assert np.linalg.matrix_rank(np.column_stack([res.Lw, LOUIS4_F2]), tol=1e-9) == 2


def test_even_split_matrix_louis4(louis4):
    A = even_split_matrix(louis4, LOUIS4_F2)
    expected = np.array(
        [
            [1.5, 1.0, 0.5, 0.0],
            [1.0, 0.5, 0.5, 1.0],
            [0.5, 0.5, 0.0, 2.0],
            [0.0, 1.0, 2.0, 0.0],
        ]
    )
    np.testing.assert_allclose(A, expected, atol=1e-12)
    np.testing.assert_allclose(A.sum(axis=1), louis4.node_weights)


def test_edge_weight_split_louis4(louis4):
    res = apply_operator(louis4, LOUIS4_F2)
    A = edge_weight_split(louis4, res)
    # e5's weight goes entirely to the pair (a, c)
    assert A[0, 2] == pytest.approx(1.0) and A[1, 2] == pytest.approx(0.0)
    np.testing.assert_allclose(A, A.T)
    np.testing.assert_allclose(A.sum(axis=1), louis4.node_weights)
    Lw = LOUIS4_F2 - A @ LOUIS4_F2 / louis4.node_weights
    np.testing.assert_allclose(Lw, res.Lw, atol=1e-12)


def _graph():
    return from_edges("abcd", [("ab", 1.0), ("bc", 2.0), ("cd", 0.5), ("ad", 1.5)])


def test_two_graph_even_split_matches_and_split_is_adjacency():
    G = _graph()
    f = np.array([0.3, -1.0, 2.0, 0.7])
    np.testing.assert_allclose(apply_even_split_operator(G, f).Lw, apply_operator(G, f).Lw, atol=1e-12)
    A = edge_weight_split(G, apply_operator(G, f))
    adj = np.zeros((4, 4))
    for (u, v), w in zip(G.edges, G.edge_weights):
        adj[u, v] = adj[v, u] = w
    np.testing.assert_allclose(A, adj, atol=1e-12)


def test_rayleigh_louis4(louis4):
    assert rayleigh_quotient(louis4, LOUIS4_F2) == pytest.approx(2 / 3, abs=1e-12)
    assert rayleigh_quotient(louis4, np.ones(4)) == 0.0
    with pytest.raises(ValueError):
        rayleigh_quotient(louis4, np.zeros(4))


def test_brute_and_cut_identical_on_random():
    rng = np.random.default_rng(99)
    for _ in range(40):
        H = random_hypergraph(rng, int(rng.integers(3, 8)), integer_weights=True)
        f = rng.integers(-2, 3, size=H.n).astype(float)
        a = apply_operator(H, f, method="brute")
        b = apply_operator(H, f, method="cut")
        np.testing.assert_allclose(a.r, b.r, atol=1e-12)
        assert [set(l.T) for l in a.layers] == [set(l.T) for l in b.layers]


def test_union_closure_of_maximizers():
    rng = np.random.default_rng(5)
    from hyperlap.operator import build_subproblems, maximizers

    for _ in range(30):
        H = random_hypergraph(rng, 6, integer_weights=True)
        f = rng.integers(0, 2, size=6).astype(float)
        classes, class_of = equivalence_classes(f)
        for sub in build_subproblems(H, classes, edge_extremes(H, f, class_of=class_of), class_of):
            maxi = maximizers(sub)
            for X, Y in itertools.combinations(maxi, 2):
                assert X | Y in maxi


def _well_separated(f, gap):
    d = np.diff(np.unique(f))
    return bool(np.all(d > gap))


def test_gaps_below_tol_are_ties(nested5):
    # the tie tolerance is absolute: a vector whose whole spread is below it counts as constant
    f = np.array([0.0, 0.0, 1e-12, 1e-12, 2e-12])
    assert np.all(apply_operator(nested5, f).r == 0.0)
    assert discrepancy_ratio(nested5, f) > 0


@given(instance_and_vector())
def test_operator_properties(case):
    H, f = case
    res = apply_operator(H, f)
    scale = max(1.0, float(np.abs(res.rho).sum()))
    assert abs(res.rho.sum()) <= 1e-9 * scale
    lhs, rhs = res.energy_terms()
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))
    assert audit_rules(H, res) == []
    x1 = np.sqrt(H.node_weights)
    assert abs(res.L_normalized @ x1) <= 1e-9 * max(1.0, np.abs(res.L_normalized).sum())
    # ties are snapped at an absolute tolerance, so the identity is meaningful only
    # when every nonzero gap between values is well clear of it
    if np.any(f != f[0]) and _well_separated(f, 1e-6):
        assert rayleigh_quotient(H, f) == pytest.approx(discrepancy_ratio(H, f), rel=1e-9, abs=1e-9)


@given(instance_and_vector(), st.sampled_from([0.5, 2.0, 10.0]))
def test_positive_homogeneity(case, alpha):
    H, f = case
    assume(_well_separated(f, 1e-6))
    np.testing.assert_allclose(apply_operator(H, alpha * f).r, alpha * apply_operator(H, f).r, rtol=1e-9, atol=1e-9)


@given(instance_and_vector())
def test_matches_brute_force_oracle(case):
    H, f = case
    np.testing.assert_allclose(apply_operator(H, f).r, brute_force_operator(H, f).r, rtol=1e-9, atol=1e-9)


@given(instance_and_vector())
def test_projection_identity(case):
    H, f = case
    x = np.sqrt(H.node_weights) * f
    px = projection_off_constant(H, x)
    a = x @ normalized_laplacian(H, x)
    b = px @ normalized_laplacian(H, px)
    assert a == pytest.approx(b, rel=1e-8, abs=1e-8)


@given(instance_and_vector())
def test_fast_rates_match_operator(case):
    H, f = case
    expected = apply_operator(H, f).r
    np.testing.assert_allclose(rates(H, f), expected, rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(rates_batch(H, f[None, :])[0], rates(H, f))


def test_output_is_deterministic(nested5):
    f = np.array([1.0, 1.0, 0.0, -2.0, -2.0])
    a, b = apply_operator(nested5, f), apply_operator(nested5, f)
    assert a.r.tobytes() == b.r.tobytes()
    assert [l.rho for l in a.layers] == [l.rho for l in b.layers]


def test_density_method_enum():
    assert DensityMethod("cut") is DensityMethod.PARAMETRIC_CUT


def test_rayleigh_underflowing_norm_is_rejected():
    G = from_edges("ab", [("a", 1.0), ("ab", 1.0)])
    with pytest.raises(ValueError):
        rayleigh_quotient(G, np.array([0.0, 2.2e-311]))
