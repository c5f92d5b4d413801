import math

import numpy as np
import pytest
from hypothesis import given

from hyperlap.golden import GAMMA2, GAMMA3, LOUIS4_GAMMA3, TWOEDGE4_F2
from hyperlap.hypergraph import bundled, discrepancy_ratio, random_hypergraph
from hyperlap.oracle import (
    OracleError,
    _coarsenings,
    _pava,
    brute_force_operator,
    exact_gamma,
    exact_procedural,
    face_minima,
    isotonic,
    minimizer_frame,
    oracle_xi_zeta,
    ordered_partitions,
    project_cone,
    verify_gamma,
)
from hyperlap.operator import apply_operator

from strategies import instance_and_vector

LOUIS4_F2 = np.array([1.0, 1, -1, -1])


def test_ordered_partitions_count():
    # Fubini numbers
    assert [len(ordered_partitions(tuple(range(n)))) for n in range(1, 6)] == [1, 3, 13, 75, 541]


def test_coarsenings_count():
    assert len(list(_coarsenings((0, 1, 2, 3)))) == 8


def test_brute_force_louis4(louis4):
    res = brute_force_operator(louis4, LOUIS4_F2)
    np.testing.assert_allclose(res.Lw, (2 / 3) * LOUIS4_F2, atol=1e-12)


def test_brute_force_constant(nested5):
    assert np.all(brute_force_operator(nested5, np.ones(5)).r == 0)


def test_brute_force_random_with_ties():
    rng = np.random.default_rng(500)
    for _ in range(500):
        H = random_hypergraph(rng, int(rng.integers(2, 8)))
        vals = rng.normal(size=int(rng.integers(1, H.n + 1)))
        f = rng.choice(vals, size=H.n)
        np.testing.assert_allclose(apply_operator(H, f).r, brute_force_operator(H, f).r, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("name", sorted(GAMMA2))
def test_exact_gamma2(name):
    H = bundled(name)
    g, f = exact_gamma(H, [np.ones(H.n)])
    assert g == pytest.approx(GAMMA2[name], abs=1e-10)
    assert f @ H.node_weights == pytest.approx(0.0, abs=1e-9)
    assert discrepancy_ratio(H, f) == pytest.approx(g, abs=1e-10)


def test_exact_gamma3_values():
    assert exact_gamma(bundled("louis4"), [np.ones(4), LOUIS4_F2])[0] == pytest.approx(LOUIS4_GAMMA3, abs=1e-10)
    H = bundled("twoedge4")
    assert exact_gamma(H, [np.ones(4), np.array(TWOEDGE4_F2)])[0] == pytest.approx(GAMMA3["twoedge4"], abs=1e-10)


def test_exact_procedural_nested5(nested5):
    gammas, vecs = exact_procedural(nested5, 3)
    assert gammas[:2] == pytest.approx([0.0, 5 / 6], abs=1e-10)
    assert gammas[2] in (pytest.approx(113 / 99, abs=1e-10), pytest.approx(181 / 165, abs=1e-10))
    assert vecs[0] == pytest.approx(np.full(5, 1 / math.sqrt(15)))


def test_face_minima_cover_all_faces(louis4):
    faces = face_minima(louis4, [np.ones(4)])
    assert len(faces) == 75  # one per weak order of four nodes


def test_priors_must_be_orthogonal(louis4):
    with pytest.raises(OracleError):
        exact_gamma(louis4, [np.ones(4), np.array([1.0, 0, 0, 0])])


def test_size_limit():
    H = random_hypergraph(np.random.default_rng(0), 9)
    with pytest.raises(OracleError):
        verify_gamma(H, [np.ones(9)], 0.1)


@pytest.mark.parametrize("method", ["faces", "projected_gradient"])
def test_verify_louis4(louis4, method):
    kw = {"restarts": 16} if method == "projected_gradient" else {}
    good = verify_gamma(louis4, [np.ones(4)], 2 / 3, method=method, **kw)
    assert good.verified and len(good.certificates) == 24
    bad = verify_gamma(louis4, [np.ones(4)], 0.7, method=method, **kw)
    assert not bad.verified
    assert discrepancy_ratio(louis4, bad.counterexample()) < 0.7


def test_verify_minimizers_in_span(louis4):
    res = verify_gamma(louis4, [np.ones(4)], 2 / 3)
    for cert in res.certificates:
        if cert.vector is not None and abs(cert.minimum) <= 1e-9:
            v = cert.vector / np.abs(cert.vector).max()
            assert abs(abs(v @ LOUIS4_F2) / (np.linalg.norm(v) * 2) - 1) <= 1e-6


def test_verify_twoedge4_k3(twoedge4):
    res = verify_gamma(twoedge4, [np.ones(4), np.array(TWOEDGE4_F2)], GAMMA3["twoedge4"])
    assert res.verified


def test_pava_against_brute_force():
    rng = np.random.default_rng(1)
    from scipy.optimize import minimize

    for _ in range(20):
        y, w = rng.normal(size=6), rng.uniform(0.5, 2, size=6)
        got = _pava(y, w)
        assert np.all(np.diff(got) >= -1e-12)
        cons = [{"type": "ineq", "fun": lambda z, i=i: z[i + 1] - z[i]} for i in range(5)]
        ref = minimize(lambda z: np.sum(w * (z - y) ** 2), np.sort(y), constraints=cons, method="SLSQP", options={"ftol": 1e-14})
        np.testing.assert_allclose(got, ref.x, atol=1e-5)


def test_isotonic_monotone():
    y = np.array([3.0, 1.0, 2.0, 0.0])
    np.testing.assert_allclose(isotonic(y, np.ones(4)), [1.5, 1.5, 1.5, 1.5])


def test_project_cone_is_feasible(louis4):
    rng = np.random.default_rng(2)
    w = louis4.node_weights
    Cw = (np.ones(4) / np.sqrt(w.sum()))[None, :]
    sigma = (2, 0, 3, 1)
    F = project_cone(rng.normal(size=(5, 4)), sigma, w, Cw)
    assert np.all(np.diff(F[:, list(sigma)], axis=1) >= -1e-6)
    np.testing.assert_allclose(F @ w, 0.0, atol=1e-6)


def test_xi_zeta_k1(louis4):
    xz = oracle_xi_zeta(louis4, 1)
    assert (xz.xi, xz.zeta) == (0.0, 0.0)


def test_xi_zeta_louis4(louis4):
    xz = oracle_xi_zeta(louis4, 2, n_samples=20_000, seed=0, n_polish=1, polish_iter=300)
    assert xz.xi <= 1 / 3 + 1e-4
    assert xz.zeta == pytest.approx(2 / 3, abs=1e-4)


def test_xi_zeta_nested5_zeta_equals_gamma(nested5):
    gammas, vecs = exact_procedural(nested5, 2)
    xz = oracle_xi_zeta(nested5, 2, n_samples=20_000, seed=1, seed_frames=(minimizer_frame(nested5, vecs),), n_polish=1, polish_iter=300)
    assert xz.zeta == pytest.approx(5 / 6, abs=1e-4)
    assert xz.xi <= 5 / 6 + 1e-4 and xz.zeta <= 2 * xz.xi + 1e-4


def test_xi_zeta_limits():
    H = random_hypergraph(np.random.default_rng(0), 6)
    with pytest.raises(OracleError):
        oracle_xi_zeta(H, 2)
    with pytest.raises(OracleError):
        oracle_xi_zeta(bundled("nested5"), 4)


@given(instance_and_vector(max_n=5))
def test_brute_force_matches_main_property(case):
    H, f = case
    np.testing.assert_allclose(brute_force_operator(H, f).r, apply_operator(H, f).r, rtol=1e-9, atol=1e-9)
