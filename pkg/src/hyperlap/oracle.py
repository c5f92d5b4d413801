"""Independent small-scale oracles and certificates.

* ``brute_force_operator``: the diffusion operator recomputed by plain subset
  enumeration and a linear-programming flow, sharing no code with
  :mod:`hyperlap.operator` beyond the result container.
* ``verify_gamma``: checks ``min D(f) >= gamma`` over ``f`` orthogonal to given
  prior vectors by splitting space into the cones of the n! relative orders of
  ``f``.  On the cone of order ``sigma`` the numerator is a fixed quadratic form,
  so each cone gives a quadratic program

      P(sigma) = min  sum_e w_e (f(S_sigma(e)) - f(I_sigma(e)))^2 - gamma * ||f||_w^2
                 over the order cone, f orthogonal to the priors, ||f||_w = 1.

  Two solvers are provided.  ``method="faces"`` (default) is exact up to
  floating point: a minimizer lies in the relative interior of some face of
  the cone (a weak order of the nodes), where it is a generalized eigenvector
  of the face's block quadratic; enumerating faces and keeping eigenvectors
  that lie in their face gives P(sigma).  ``method="projected_gradient"`` is a
  multi-start falsifier: projected descent on the sphere with the cone
  projection computed by alternating isotonic regression (pool adjacent
  violators) and the orthogonality projection (Dykstra).  Its "verified"
  means no violation was found.
* ``oracle_xi_zeta``: seeded random search plus polishing for the orthogonal
  minimaximizer parameters; the inner maximum over a span is exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, optimize

from .hypergraph import DEFAULT_TOL, Hypergraph, discrepancy_ratio, discrepancy_ratio_batch, weighted
from .operator import EdgeExtremes, OperatorResult, PeelLayer

BRUTE_CLASS_MAX = 18
VERIFY_MAX_N = 8
XI_ZETA_MAX_N = 5
XI_ZETA_MAX_K = 3


class OracleError(ValueError):
    """Instance outside the range an oracle supports."""


# -- brute-force operator ---------------------------------------------------

def _classes(f: np.ndarray, tol: float) -> list[list[int]]:
    order = sorted(range(len(f)), key=lambda u: f[u])
    classes = [[order[0]]]
    for a, b in zip(order, order[1:]):
        if f[b] - f[a] > tol:
            classes.append([])
        classes[-1].append(b)
    return classes


def _subset_densities(nodes, w, i_edges, s_edges):
    """Density of every nonempty subset (bitmask over ``nodes``)."""
    k = len(nodes)
    pos = {u: i for i, u in enumerate(nodes)}
    masks = np.arange(1, 1 << k, dtype=np.int64)
    weight = np.zeros(len(masks))
    for i, u in enumerate(nodes):
        weight += np.where(masks >> i & 1, w[u], 0.0)
    gain = np.zeros(len(masks))
    for c, mem in i_edges.values():
        bits = sum(1 << pos[u] for u in mem)
        gain += np.where(masks & bits == bits, c, 0.0)
    for c, mem in s_edges.values():
        bits = sum(1 << pos[u] for u in mem)
        gain -= np.where(masks & bits != 0, c, 0.0)
    return masks, gain / weight


def _lp_flow(T, delta, i_edges, s_edges, w) -> dict:
    """Any rho with rho(v,e) >= 0 on incoming edges, <= 0 on outgoing ones, edge totals c_e and node nets w_v delta."""
    var = [(v, j, +1) for j, (_, mem) in i_edges.items() for v in sorted(mem)]
    var += [(v, j, -1) for j, (_, mem) in s_edges.items() for v in sorted(mem)]
    if not var:
        return {}
    idx = {(v, j): i for i, (v, j, _) in enumerate(var)}
    rows, rhs = [], []
    for j, (c, mem) in list(i_edges.items()) + list(s_edges.items()):
        row = np.zeros(len(var))
        for v in mem:
            row[idx[(v, j)]] = 1.0
        rows.append(row)
        rhs.append(c)
    for v in T:
        row = np.zeros(len(var))
        for i, (u, _, sign) in enumerate(var):
            if u == v:
                row[i] = sign
        rows.append(row)
        rhs.append(w[v] * delta)
    res = optimize.linprog(
        np.zeros(len(var)), A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs"
    )
    if res.status != 0:
        raise OracleError(f"layer flow LP infeasible for layer {tuple(T)}: {res.message}")
    return {(v, j): sign * float(x) for (v, j, sign), x in zip(var, res.x)}


def brute_force_operator(H: Hypergraph, v, tol: float = DEFAULT_TOL) -> OperatorResult:
    """Rates by enumerating all subsets of every equivalence class.

    Within a class, the layer removed next is the union of all subsets of
    maximum density (density ties are judged relative to the class's rate
    scale), and edge rates are split by a feasibility LP.
    """
    f = weighted(H, v)
    w = H.node_weights
    classes = _classes(f, tol)
    big = max(len(c) for c in classes)
    if big > BRUTE_CLASS_MAX:
        raise OracleError(f"equivalence class of size {big} exceeds {BRUTE_CLASS_MAX}")
    class_id = {u: i for i, c in enumerate(classes) for u in c}
    extremes = []
    per_class = [({}, {}) for _ in classes]
    for j, (e, we) in enumerate(zip(H.edges, H.edge_weights)):
        vals = [f[u] for u in e]
        ids = [class_id[u] for u in e]
        top, bot = max(ids), min(ids)
        if top == bot:
            extremes.append(EdgeExtremes(j, e, e, 0.0, 0.0))
            continue
        delta = float(max(vals) - min(vals))
        c = float(we) * delta
        S = tuple(u for u in e if class_id[u] == top)
        I = tuple(u for u in e if class_id[u] == bot)
        extremes.append(EdgeExtremes(j, S, I, delta, c))
        per_class[bot][0][j] = (c, frozenset(I))
        per_class[top][1][j] = (c, frozenset(S))
    r = np.zeros(H.n)
    layers = []
    for U, (i_edges, s_edges) in zip(classes, per_class):
        nodes = sorted(U)
        scale = (sum(c for c, _ in i_edges.values()) + sum(c for c, _ in s_edges.values())) / min(w[u] for u in nodes)
        while nodes:
            masks, dens = _subset_densities(nodes, w, i_edges, s_edges)
            best = dens.max()
            top = masks[dens >= best - 1e-10 * scale]
            union = int(np.bitwise_or.reduce(top))
            P = frozenset(u for i, u in enumerate(nodes) if union >> i & 1)
            delta = float(best)
            li = {j: v for j, v in i_edges.items() if v[1] <= P}
            ls = {j: (c, mem & P) for j, (c, mem) in s_edges.items() if mem & P}
            T = tuple(u for u in nodes if u in P)
            layer = PeelLayer(T, delta, tuple(sorted(li)), tuple(sorted(ls)))
            layer.rho = _lp_flow(T, delta, li, ls, w)
            layers.append(layer)
            r[list(T)] = delta
            nodes = [u for u in nodes if u not in P]
            i_edges = {j: (c, mem - P) for j, (c, mem) in i_edges.items() if not mem <= P}
            s_edges = {j: (c, mem - P) for j, (c, mem) in s_edges.items() if not mem & P}
    return OperatorResult(r, w * r, layers, extremes, f, w)


# -- weak orders and their quadratic forms ----------------------------------

def ordered_partitions(items: tuple) -> list[tuple[frozenset, ...]]:
    """All weak orders of ``items`` as tuples of blocks, lowest block first."""
    items = tuple(items)
    if not items:
        return [()]
    out = []
    n = len(items)
    for size in range(1, n + 1):
        for first in itertools.combinations(items, size):
            rest = tuple(u for u in items if u not in first)
            for tail in ordered_partitions(rest):
                out.append((frozenset(first),) + tail)
    return out


@lru_cache(maxsize=16)
def _weak_orders(n: int) -> tuple:
    return tuple(ordered_partitions(tuple(range(n))))


def _prior_matrix(H: Hypergraph, priors) -> np.ndarray:
    """Rows ``W f_i`` so that orthogonality reads ``C f = 0``."""
    if priors is None or len(priors) == 0:
        return np.zeros((0, H.n))
    P = np.array([weighted(H, p) for p in priors], dtype=float)
    return P * H.node_weights


def _check_priors(H: Hypergraph, priors, tol: float = 1e-8) -> None:
    P = np.array([weighted(H, p) for p in priors], dtype=float) if priors is not None and len(priors) else None
    if P is None:
        return
    G = (P * H.node_weights) @ P.T
    norms = np.sqrt(np.diag(G))
    if np.any(norms == 0):
        raise OracleError("prior vectors must be nonzero")
    C = G / np.outer(norms, norms)
    off = np.abs(C - np.eye(len(P))).max()
    if off > tol:
        raise OracleError(f"prior vectors are not mutually w-orthogonal (max cosine {off:.2e})")


def _face_quadratic(H: Hypergraph, blocks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(N, D, B) for vectors constant on ``blocks``: f = B y, numerator = y'Ny, ||f||_w^2 = y'Dy."""
    p = len(blocks)
    block_of = np.empty(H.n, dtype=np.intp)
    for i, b in enumerate(blocks):
        block_of[list(b)] = i
    N = np.zeros((p, p))
    for e, we in zip(H.edges, H.edge_weights):
        ids = block_of[list(e)]
        hi, lo = ids.max(), ids.min()
        if hi != lo:
            N[hi, hi] += we
            N[lo, lo] += we
            N[hi, lo] -= we
            N[lo, hi] -= we
    B = np.zeros((H.n, p))
    B[np.arange(H.n), block_of] = 1.0
    D = np.diag(B.T @ H.node_weights)
    return N, D, B


def _in_open_face(Y: np.ndarray, tol: float) -> np.ndarray | None:
    """A nonzero combination of columns of ``Y`` (block values) that is increasing, or None."""
    p, d = Y.shape
    if p == 1:
        return Y[:, 0]
    Dif = np.diff(Y, axis=0)
    if d == 1:
        y = Y[:, 0]
        scale = np.abs(y).max()
        dif = Dif[:, 0]
        if np.all(dif >= -tol * scale):
            return y
        if np.all(dif <= tol * scale):
            return -y
        return None
    res = optimize.linprog(
        np.zeros(d), A_ub=-Dif, b_ub=-np.ones(p - 1), bounds=(None, None), method="highs"
    )
    if res.status != 0:
        return None
    return Y @ res.x


@dataclass
class FaceMinimum:
    blocks: tuple[frozenset, ...]
    value: float  # smallest D achieved by an eigenvector inside the face; inf if none
    vector: np.ndarray | None


def _face_minimum_single(H: Hypergraph, blocks, C: np.ndarray, tol: float) -> FaceMinimum:
    N, D, B = _face_quadratic(H, blocks)
    Cb = C @ B
    Z = linalg.null_space(Cb) if len(Cb) else np.eye(len(blocks))
    if Z.shape[1] > 0:
        mu, Y = linalg.eigh(Z.T @ N @ Z, Z.T @ D @ Z)
        scale = max(1.0, abs(mu).max())
        i = 0
        while i < len(mu):
            j = i + 1
            while j < len(mu) and mu[j] - mu[i] <= tol * scale:
                j += 1
            y = _in_open_face(Z @ Y[:, i:j], tol)
            if y is not None:
                f = B @ y
                norm = math.sqrt(float(H.node_weights @ (f * f)))
                return FaceMinimum(blocks, float(mu[i]), f / norm)
            i = j
    return FaceMinimum(blocks, math.inf, None)


@lru_cache(maxsize=16)
def _face_index(n: int) -> dict[int, tuple[list, np.ndarray]]:
    """Weak orders grouped by block count p: (list of block tuples, (F, n) block-of matrix)."""
    groups: dict[int, list] = {}
    for blocks in _weak_orders(n):
        groups.setdefault(len(blocks), []).append(blocks)
    out = {}
    for p, faces in groups.items():
        block_of = np.empty((len(faces), n), dtype=np.intp)
        for i, blocks in enumerate(faces):
            for k, b in enumerate(blocks):
                block_of[i, list(b)] = k
        out[p] = (faces, block_of)
    return out


def _face_batch(H: Hypergraph, faces, block_of: np.ndarray, p: int, C: np.ndarray, tol: float, out: dict) -> None:
    F = len(faces)
    rows = np.arange(F)
    N = np.zeros((F, p, p))
    for e, we in zip(H.edges, H.edge_weights):
        if len(e) < 2:
            continue
        ids = block_of[:, list(e)]
        hi, lo = ids.max(axis=1), ids.min(axis=1)
        cut = hi != lo
        r, hi, lo = rows[cut], hi[cut], lo[cut]
        N[r, hi, hi] += we
        N[r, lo, lo] += we
        N[r, hi, lo] -= we
        N[r, lo, hi] -= we
    Dw = np.zeros((F, p))
    np.add.at(Dw, (np.repeat(rows, H.n), block_of.ravel()), np.tile(H.node_weights, F))
    if len(C):
        Cb = np.zeros((F, len(C), p))
        for u in range(H.n):
            Cb[rows, :, block_of[:, u]] += C[:, u]
        _, S, Vt = np.linalg.svd(Cb, full_matrices=True)
        smax = np.maximum(S.max(axis=1, initial=0.0), 1e-300)
        rank = (S > 1e-10 * smax[:, None]).sum(axis=1)
    else:
        Vt = np.broadcast_to(np.eye(p), (F, p, p))
        rank = np.zeros(F, dtype=int)
    for rk in np.unique(rank):
        sel = np.flatnonzero(rank == rk)
        d = p - rk
        if d == 0:
            for i in sel:
                out[faces[i]] = FaceMinimum(faces[i], math.inf, None)
            continue
        Z = np.swapaxes(Vt[sel, rk:, :], 1, 2)  # (s, p, d)
        Zt = np.swapaxes(Z, 1, 2)
        M = Zt @ N[sel] @ Z
        K = Zt @ (Dw[sel][:, :, None] * Z)
        L = np.linalg.cholesky(K)
        Linv = np.linalg.inv(L)
        A = Linv @ M @ np.swapaxes(Linv, 1, 2)
        mu, V = np.linalg.eigh((A + np.swapaxes(A, 1, 2)) / 2)
        Y = Z @ np.swapaxes(Linv, 1, 2) @ V  # (s, p, d) block values per eigenvector
        scale_mu = np.maximum(1.0, np.abs(mu).max(axis=1))
        degenerate = np.any(np.diff(mu, axis=1) <= tol * scale_mu[:, None], axis=1) if d > 1 else np.zeros(len(sel), bool)
        if p > 1:
            dif = np.diff(Y, axis=1)
            scale_y = np.abs(Y).max(axis=1, keepdims=True)
            inc = np.all(dif >= -tol * scale_y, axis=1)
            dec = np.all(dif <= tol * scale_y, axis=1)
        else:
            inc = np.ones((len(sel), d), bool)
            dec = np.zeros((len(sel), d), bool)
        valid = inc | dec
        for t, i in enumerate(sel):
            if degenerate[t]:
                out[faces[i]] = _face_minimum_single(H, faces[i], C, tol)
                continue
            js = np.flatnonzero(valid[t])
            if js.size == 0:
                out[faces[i]] = FaceMinimum(faces[i], math.inf, None)
                continue
            j = js[0]
            y = Y[t, :, j] if inc[t, j] else -Y[t, :, j]
            f = y[block_of[i]]
            f = f / math.sqrt(float(H.node_weights @ (f * f)))
            out[faces[i]] = FaceMinimum(faces[i], float(mu[t, j]), f)


def face_minima(H: Hypergraph, priors=None, tol: float = 1e-9) -> dict[tuple, FaceMinimum]:
    """Smallest critical value of D inside each face (weak order) subject to orthogonality.

    Faces with the same number of blocks are solved together; faces whose
    restricted problem has a repeated eigenvalue take the per-face path, where
    an LP decides whether the eigenspace meets the open face.
    """
    C = _prior_matrix(H, priors)
    out: dict = {}
    for p, (faces, block_of) in _face_index(H.n).items():
        _face_batch(H, faces, block_of, p, C, tol, out)
    return out


def exact_gamma(H: Hypergraph, priors=None, tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """min D(f) over nonzero f w-orthogonal to ``priors``, with a minimizer (weighted space)."""
    if H.n > VERIFY_MAX_N:
        raise OracleError(f"n={H.n} exceeds {VERIFY_MAX_N}")
    if priors is not None:
        _check_priors(H, priors)
    faces = face_minima(H, priors, tol)
    best = min(faces.values(), key=lambda fm: fm.value)
    if best.vector is None:
        raise OracleError("no nonzero vector satisfies the orthogonality constraints")
    return best.value, best.vector


def exact_procedural(H: Hypergraph, k_max: int, tol: float = 1e-9) -> tuple[list[float], list[np.ndarray]]:
    """gamma_1..gamma_k_max by exact face enumeration; ties between minimizers broken by enumeration order."""
    one = np.ones(H.n) / math.sqrt(H.total_weight)
    gammas, vecs = [0.0], [one]
    for _ in range(2, k_max + 1):
        g, f = exact_gamma(H, vecs, tol)
        gammas.append(g)
        vecs.append(f)
    return gammas, vecs


# -- permutation verifier ---------------------------------------------------

@dataclass
class PermutationCertificate:
    sigma: tuple[int, ...]  # node indices from lowest to highest value
    minimum: float  # min of P(sigma) on the unit w-sphere
    vector: np.ndarray | None  # weighted-space minimizer
    status: str  # "nonneg" or "violated"


@dataclass
class VerificationResult:
    verified: bool
    gamma: float
    method: str
    tol: float
    certificates: list[PermutationCertificate] = field(default_factory=list)
    note: str = ""

    @property
    def violations(self) -> list[PermutationCertificate]:
        return [c for c in self.certificates if c.status == "violated"]

    def counterexample(self) -> np.ndarray | None:
        v = self.violations
        return None if not v else min(v, key=lambda c: c.minimum).vector

    def to_dict(self, H: Hypergraph) -> dict:
        worst = min(self.certificates, key=lambda c: c.minimum)
        cx = self.counterexample()
        return {
            "verified": self.verified,
            "gamma": self.gamma,
            "method": self.method,
            "tol": self.tol,
            "note": self.note,
            "permutations": len(self.certificates),
            "violated": len(self.violations),
            "min_P": worst.minimum,
            "worst_sigma": [H.nodes[u] for u in worst.sigma],
            "counterexample": None if cx is None else cx.tolist(),
            "counterexample_ratio": None if cx is None else discrepancy_ratio(H, cx),
        }


NOTES = {
    "faces": "exact face enumeration of each order cone (floating-point eigen-solves)",
    "projected_gradient": "numerical falsifier: no violation found at the given restarts is not a proof",
}


def _coarsenings(sigma: tuple[int, ...]):
    n = len(sigma)
    for cuts in itertools.product((False, True), repeat=n - 1):
        blocks, cur = [], [sigma[0]]
        for u, cut in zip(sigma[1:], cuts):
            if cut:
                blocks.append(frozenset(cur))
                cur = []
            cur.append(u)
        blocks.append(frozenset(cur))
        yield tuple(blocks)


def sigma_quadratic(H: Hypergraph, sigma) -> np.ndarray:
    """Matrix A with f'Af = sum_e w_e (f(S_sigma(e)) - f(I_sigma(e)))^2."""
    rank = np.empty(H.n, dtype=np.intp)
    rank[list(sigma)] = np.arange(H.n)
    A = np.zeros((H.n, H.n))
    for e, we in zip(H.edges, H.edge_weights):
        if len(e) < 2:
            continue
        hi = max(e, key=lambda u: rank[u])
        lo = min(e, key=lambda u: rank[u])
        A[hi, hi] += we
        A[lo, lo] += we
        A[hi, lo] -= we
        A[lo, hi] -= we
    return A


def _pava(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted isotonic (non-decreasing) regression by pool adjacent violators."""
    vals, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            wt = wts[-2] + wts[-1]
            v = (wts[-2] * vals[-2] + wts[-1] * vals[-1]) / wt
            sz = sizes[-2] + sizes[-1]
            del vals[-1], wts[-1], sizes[-1]
            vals[-1], wts[-1], sizes[-1] = v, wt, sz
    return np.repeat(vals, sizes)


def isotonic(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise weighted isotonic regression of ``y`` (shape (..., n)) by pool adjacent violators."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        return _pava(y, w)
    return np.array([_pava(row, w) for row in y])


def project_cone(F: np.ndarray, sigma, w: np.ndarray, Cw: np.ndarray, rounds: int = 50) -> np.ndarray:
    """w-projection of rows of ``F`` onto {f : f increasing along sigma, Cw f = 0} (Dykstra).

    ``Cw`` holds w-orthonormal prior vectors as rows (weighted space).
    """
    sig = list(sigma)
    ws = w[sig]

    def iso(X):
        out = np.empty_like(X)
        out[:, sig] = isotonic(X[:, sig], ws)
        return out

    def orth(X):
        return X - ((X * w) @ Cw.T) @ Cw if len(Cw) else X

    X = F.copy()
    p = np.zeros_like(X)
    q = np.zeros_like(X)
    for _ in range(rounds):
        Y = iso(X + p)
        p = X + p - Y
        Xn = orth(Y + q)
        q = Y + q - Xn
        if np.allclose(Xn, X, rtol=0, atol=1e-13):
            X = Xn
            break
        X = Xn
    return X


def _pg_minimum(H, sigma, gamma, Cw, restarts, rng, iters=300):
    """Projected-gradient minimum of f'(A - gamma W)f on the cone over the unit w-sphere."""
    w = H.node_weights
    A = sigma_quadratic(H, sigma)
    M = A - gamma * np.diag(w)
    step = 1.0 / (np.abs(np.linalg.eigvalsh(A / np.sqrt(np.outer(w, w)))).max() + gamma + 1e-12)
    F = project_cone(rng.standard_normal((restarts, H.n)), sigma, w, Cw)
    norms = np.sqrt((F * F) @ w)
    F = F[norms > 1e-12] / norms[norms > 1e-12, None]
    if len(F) == 0:
        return math.inf, None
    for _ in range(iters):
        G = (F @ M) / w  # w-gradient direction (halved)
        Fn = project_cone(F - step * G, sigma, w, Cw)
        norms = np.sqrt((Fn * Fn) @ w)
        keep = norms > 1e-12
        Fn[keep] /= norms[keep, None]
        Fn[~keep] = F[~keep]
        if np.abs(Fn - F).max() < 1e-12:
            F = Fn
            break
        F = Fn
    vals = np.einsum("ij,jk,ik->i", F, M, F)
    i = int(np.argmin(vals))
    return float(vals[i]), F[i]


def verify_gamma(
    H: Hypergraph,
    priors,
    gamma: float,
    tol: float = 1e-7,
    method: str = "faces",
    restarts: int = 256,
    seed: int = 0,
) -> VerificationResult:
    """Check that D(f) >= gamma for every nonzero f w-orthogonal to ``priors``.

    Returns one certificate per permutation; ``verified`` iff every
    per-permutation minimum is >= -tol.  A violated certificate's vector ``f``
    satisfies D(f) < gamma, which is re-checked here by direct evaluation.
    """
    if H.n > VERIFY_MAX_N:
        raise OracleError(f"n={H.n} exceeds {VERIFY_MAX_N}; n! enumeration is not supported")
    priors = [] if priors is None else list(priors)
    _check_priors(H, priors)
    certs = []
    if method == "faces":
        faces = face_minima(H, priors)
        for sigma in itertools.permutations(range(H.n)):
            best = min((faces[b] for b in _coarsenings(sigma)), key=lambda fm: fm.value)
            m = best.value - gamma
            certs.append(PermutationCertificate(sigma, m, best.vector, "nonneg" if m >= -tol else "violated"))
    elif method == "projected_gradient":
        w = H.node_weights
        Cw = np.array([weighted(H, p) for p in priors], dtype=float).reshape(len(priors), H.n)
        if len(Cw):
            Cw = Cw / np.sqrt((Cw * Cw) @ w)[:, None]
        rng = np.random.default_rng(seed)
        for sigma in itertools.permutations(range(H.n)):
            m, vec = _pg_minimum(H, sigma, gamma, Cw, restarts, rng)
            certs.append(PermutationCertificate(sigma, m, vec, "nonneg" if m >= -tol else "violated"))
    else:
        raise ValueError(f"unknown method {method!r}")
    for c in certs:
        if c.status == "violated":
            ratio = discrepancy_ratio(H, c.vector)
            if not ratio < gamma:
                raise AssertionError(
                    f"certificate for sigma={c.sigma} claims P={c.minimum:.3e} but D(f)={ratio!r} >= {gamma!r}"
                )
    verified = all(c.status == "nonneg" for c in certs)
    return VerificationResult(verified, float(gamma), method, tol, certs, NOTES[method])


# -- minimaximizer oracles --------------------------------------------------

def _distinct_sigma_matrices(H: Hypergraph) -> np.ndarray:
    """Normalized-space matrices of all distinct per-order quadratic forms."""
    w = H.node_weights
    s = 1.0 / np.sqrt(w)
    seen = {}
    for sigma in itertools.permutations(range(H.n)):
        rank = np.empty(H.n, dtype=np.intp)
        rank[list(sigma)] = np.arange(H.n)
        key = tuple(
            (max(e, key=lambda u: rank[u]), min(e, key=lambda u: rank[u])) for e in H.edges if len(e) > 1
        )
        if key not in seen:
            seen[key] = sigma_quadratic(H, sigma) * np.outer(s, s)
    return np.array(list(seen.values()))


def span_maximum(mats: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Exact max of the normalized discrepancy over span(frame) for orthonormal frames (B, n, k).

    The numerator is the maximum of the per-order quadratic forms, so the
    maximum over a span is the largest top eigenvalue among the restricted forms.
    """
    Ft = np.swapaxes(frames, 1, 2)[:, None]
    R = Ft @ mats[None] @ frames[:, None]
    return np.linalg.eigvalsh(R)[..., -1].max(axis=1)


def _frame_xi(H: Hypergraph, frames: np.ndarray) -> np.ndarray:
    B, n, k = frames.shape
    X = np.transpose(frames, (0, 2, 1)).reshape(B * k, n) / np.sqrt(H.node_weights)
    return discrepancy_ratio_batch(H, X).reshape(B, k).max(axis=1)


def _random_frames(rng, B, n, k) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((B, n, k)))
    return Q


def _orth(M: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(M)
    return Q


def minimizer_frame(H: Hypergraph, vectors) -> np.ndarray:
    """Orthonormal normalized-space frame (columns) spanned by weighted-space ``vectors``."""
    X = np.array([np.sqrt(H.node_weights) * weighted(H, v) for v in vectors]).T
    return _orth(X)


@dataclass
class XiZeta:
    k: int
    xi: float
    zeta: float
    xi_frame: np.ndarray  # normalized space, columns
    zeta_frame: np.ndarray
    stable: bool  # the two seeds agree to XI_ZETA_RTOL
    seeds: tuple[int, int]
    per_seed: tuple[tuple[float, float], tuple[float, float]]


XI_ZETA_RTOL = 1e-4


def _search(H, k, n_samples, seed, seed_frames, mats, n_polish, polish_iter, chunk=50_000):
    rng = np.random.default_rng(seed)
    n = H.n
    xi_obj = lambda Fr: float(_frame_xi(H, Fr[None])[0])
    zeta_obj = lambda Fr: float(span_maximum(mats, Fr[None])[0])

    pool, pool_vals = [], []
    done = 0
    while done < n_samples:
        b = min(chunk, n_samples - done)
        F = _random_frames(rng, b, n, k)
        vals = _frame_xi(H, F)
        top = np.argsort(vals)[:n_polish]
        pool += list(F[top])
        pool_vals += list(vals[top])
        done += b
    order = np.argsort(pool_vals)[:n_polish]
    polished = [_polish(xi_obj, pool[i], n, k, maxiter=polish_iter) for i in order]
    polished += [_polish(xi_obj, Fr, n, k, maxiter=polish_iter) for Fr in seed_frames]
    xi_frame, best_xi = min(polished, key=lambda p: p[1])

    zeta_samples = max(1, n_samples // 100)
    Fz = _random_frames(rng, zeta_samples, n, k)
    zvals = np.concatenate([span_maximum(mats, Fz[i:i + 1000]) for i in range(0, zeta_samples, 1000)])
    zcands = [Fz[int(np.argmin(zvals))], xi_frame] + list(seed_frames)
    zv = span_maximum(mats, np.array(zcands))
    zeta_frame, best_zeta = _polish(zeta_obj, zcands[int(np.argmin(zv))], n, k, maxiter=polish_iter)
    return best_xi, xi_frame, best_zeta, zeta_frame


def _polish(obj, frame, n, k, rounds=2, maxiter=1500):
    """Nelder-Mead over unnormalized frames; only ever accepts improvements."""
    best = obj(frame)
    for _ in range(rounds):
        res = optimize.minimize(
            lambda m: obj(_orth(m.reshape(n, k))),
            frame.ravel(),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": maxiter, "adaptive": True},
        )
        cand = _orth(res.x.reshape(n, k))
        val = obj(cand)
        if val < best - 1e-15:
            best, frame = val, cand
        else:
            break
    return frame, best


def oracle_xi_zeta(
    H: Hypergraph,
    k: int,
    n_samples: int = 10**6,
    seed: int = 0,
    seed_frames=(),
    n_polish: int = 3,
    polish_iter: int = 1500,
) -> XiZeta:
    """Numerical (xi_k, zeta_k) for n <= 5, k <= 3, repeated with two independent seeds.

    Both values are upper bounds on the true minima.  ``seed_frames`` (normalized
    orthonormal frames) are added as candidates; by default the exact procedural
    minimizer frame is used, which guarantees xi_k <= gamma_k, and the best xi
    frame is a zeta candidate, which guarantees zeta_k <= k xi_k.  The inner
    maximum over a span is computed exactly.  About one in a hundred samples is
    spent on the zeta search, whose objective costs one small eigen-solve per
    distinct order form.  The ``n_polish`` best random frames and the seed
    frames are each polished by Nelder-Mead with ``polish_iter`` iterations.
    """
    if H.n > XI_ZETA_MAX_N or k > XI_ZETA_MAX_K:
        raise OracleError(f"oracle supports n <= {XI_ZETA_MAX_N}, k <= {XI_ZETA_MAX_K}")
    if k < 1:
        raise OracleError("k must be positive")
    one = np.sqrt(H.node_weights / H.total_weight)
    if k == 1:
        fr = one[:, None]
        return XiZeta(1, 0.0, 0.0, fr, fr, True, (seed, seed + 1), ((0.0, 0.0), (0.0, 0.0)))
    if not seed_frames:
        seed_frames = (minimizer_frame(H, exact_procedural(H, k)[1]),)
    mats = _distinct_sigma_matrices(H)
    runs = [_search(H, k, n_samples, s, seed_frames, mats, n_polish, polish_iter) for s in (seed, seed + 1)]
    xi_i = min(range(2), key=lambda i: runs[i][0])
    ze_i = min(range(2), key=lambda i: runs[i][2])
    xis = [r[0] for r in runs]
    zetas = [r[2] for r in runs]

    def agree(a, b):
        return abs(a - b) <= XI_ZETA_RTOL * max(1.0, abs(a), abs(b))

    return XiZeta(
        k,
        runs[xi_i][0],
        runs[ze_i][2],
        runs[xi_i][1],
        runs[ze_i][3],
        agree(*xis) and agree(*zetas),
        (seed, seed + 1),
        ((xis[0], zetas[0]), (xis[1], zetas[1])),
    )
