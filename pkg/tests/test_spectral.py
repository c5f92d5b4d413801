import math

import numpy as np
import pytest

from hyperlap.golden import GAMMA2, GAMMA3, NESTED5_BRANCH_SEEDS, NESTED5_F2, NESTED5_F2_ALT, TWOEDGE4_F3
from hyperlap.hypergraph import bundled, discrepancy_ratio, random_hypergraph
from hyperlap.oracle import exact_gamma
from hyperlap.spectral import (
    D_hat,
    constant_vector,
    descend,
    eigen_residual,
    gamma2,
    minimax_parameters,
    procedural_minimizers,
    span_max,
)

SQ5 = math.sqrt(5.0)


def _parallel(H, f, g):
    w = H.node_weights
    return abs(abs(f @ (w * g)) / math.sqrt((w @ f**2) * (w @ g**2)) - 1) < 1e-8


@pytest.mark.parametrize("name", sorted(GAMMA2))
def test_gamma2_bundled(name):
    H = bundled(name)
    g, x = gamma2(H, restarts=32, seed=0)
    assert g == pytest.approx(GAMMA2[name], abs=1e-9)
    assert x @ constant_vector(H) == pytest.approx(0.0, abs=1e-9)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    assert D_hat(H, x) == pytest.approx(g, abs=1e-12)


def test_louis4_minimizer_direction(louis4):
    _, x = gamma2(louis4, restarts=16, seed=0)
    assert _parallel(louis4, x / np.sqrt(louis4.node_weights), np.array([1.0, 1, -1, -1]))
    assert eigen_residual(louis4, x, 2 / 3) <= 1e-9


def test_eigen_residual_constant(instance):
    assert eigen_residual(instance, constant_vector(instance), 0.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        eigen_residual(instance, np.zeros(instance.n), 0.0)


def test_twoedge4_third_minimizer(twoedge4):
    res = procedural_minimizers(twoedge4, 3, restarts=32, seed=0)
    assert res.gammas[2] == pytest.approx(GAMMA3["twoedge4"], abs=1e-9)
    f3 = res.weighted_vectors(twoedge4)[2]
    swapped = np.array(TWOEDGE4_F3)[[0, 1, 3, 2]]
    assert _parallel(twoedge4, f3, np.array(TWOEDGE4_F3)) or _parallel(twoedge4, f3, swapped)
    assert res.meta["oracle_agrees"]


def test_twoedge4_third_minimizer_residual_by_hand(twoedge4):
    # the reference L_w f3 is not a multiple of f3; relative residual of the unit minimizer
    f3 = np.array(TWOEDGE4_F3)
    x3 = np.sqrt(twoedge4.node_weights) * f3
    x3 /= np.linalg.norm(x3)
    assert eigen_residual(twoedge4, x3, GAMMA3["twoedge4"]) == pytest.approx(0.0892055224, abs=1e-9)


def test_nested5_branches(nested5):
    found = {}
    for seed in NESTED5_BRANCH_SEEDS:
        res = procedural_minimizers(nested5, 3, restarts=64, seed=seed, oracle_check=False)
        f2 = res.weighted_vectors(nested5)[1]
        for key, ref in (("nested5", NESTED5_F2), ("nested5_alt", NESTED5_F2_ALT)):
            if _parallel(nested5, f2, np.array(ref)):
                found[key] = res.gammas[2]
    assert found == pytest.approx({"nested5": 113 / 99, "nested5_alt": 181 / 165}, abs=1e-9)


def test_fixed_priors_follow_branch(nested5):
    res = procedural_minimizers(nested5, 3, restarts=32, seed=0, fixed=[np.array(NESTED5_F2)])
    assert res.gammas[2] == pytest.approx(113 / 99, abs=1e-9)


def test_orthogonality_and_monotone(nested5):
    res = procedural_minimizers(nested5, 4, restarts=32, seed=3)
    X = np.array(res.vectors)
    np.testing.assert_allclose(X @ X.T, np.eye(4), atol=1e-9)
    assert all(a <= b + 1e-12 for a, b in zip(res.gammas, res.gammas[1:]))
    assert res.gammas[0] == 0.0


def test_deterministic_given_seed(twoedge4):
    a = procedural_minimizers(twoedge4, 3, restarts=16, seed=5)
    b = procedural_minimizers(twoedge4, 3, restarts=16, seed=5)
    assert a.to_dict(twoedge4) == b.to_dict(twoedge4)


def _random_cases():
    rng = np.random.default_rng(77)
    return [random_hypergraph(rng, int(rng.integers(3, 6))) for _ in range(10)]


def test_descent_matches_exact_oracle_random():
    for i, H in enumerate(_random_cases()):
        g, _ = gamma2(H, seed=i)
        exact, _ = exact_gamma(H, [np.ones(H.n)])
        assert g == pytest.approx(exact, abs=1e-9)


def test_oracle_cross_check_flags_a_miss():
    # with only 32 restarts the descent misses the minimum on this instance
    H = _random_cases()[6]
    with pytest.warns(UserWarning, match="differ from exact minima"):
        res = procedural_minimizers(H, 2, restarts=32, seed=6)
    assert not res.meta["oracle_agrees"]
    assert res.gammas[1] > res.meta["oracle_gammas"][1] + 1e-6


def test_descend_never_increases(louis4):
    rng = np.random.default_rng(0)
    Q = constant_vector(louis4)[:, None]
    x0 = rng.normal(size=4)
    x0 -= (x0 @ Q[:, 0]) * Q[:, 0]
    x0 /= np.linalg.norm(x0)
    x, val, _ = descend(louis4, x0, Q)
    assert val <= D_hat(louis4, x0) + 1e-12
    assert val == pytest.approx(D_hat(louis4, x))


def test_minimax_k1(louis4):
    est = minimax_parameters(louis4, 1)
    assert est.xi == est.zeta == 0.0


def test_minimax_louis4_xi2(louis4):
    est = minimax_parameters(louis4, 2, restarts=4, seed=0)
    assert est.xi <= 1 / 3 + 1e-9
    assert est.zeta >= 2 / 3 - 1e-6


def test_disjoint_indicator_frame_witness(louis4):
    g1 = np.array([0.0, 0, 1, 1])
    g2 = np.array([1.0, 1, 0, 0])
    assert max(discrepancy_ratio(louis4, g1), discrepancy_ratio(louis4, g2)) == pytest.approx(1 / 3)


def test_span_max_of_eigen_pair(louis4):
    F = np.column_stack([constant_vector(louis4), np.array([1.0, 1, -1, -1]) / 2])
    val, x = span_max(louis4, F, restarts=8, rng=np.random.default_rng(0))
    assert val == pytest.approx(2 / 3, abs=1e-9)
