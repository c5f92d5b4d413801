"""Procedural minimizers gamma_k of the normalized discrepancy ratio.

gamma_k = min { D(x) : 0 != x orthogonal to x_1 .. x_{k-1} }, found by
multi-start descent along the diffusion direction -L x followed by a
polish on the tie pattern the descent settled into: once the ordering and
ties of f are fixed, D is a ratio of quadratic forms in the block values
and its minimum over the constraint subspace is a small generalized
eigenproblem.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hypergraph import DEFAULT_TOL, Hypergraph, discrepancy_ratio_batch, from_normalized, to_normalized
from .operator import equivalence_classes, normalized_laplacian, rates_batch

DEFAULT_RESTARTS = 64
AGREEMENT = 1e-6
ORACLE_MAX_N = 5
STALL_RTOL = 1e-10  # descent stops once a step gains less than this (relative); polish finishes
POLISH_THRESHOLDS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8)


def D_hat(H: Hypergraph, x: np.ndarray) -> float:
    return float(discrepancy_ratio_batch(H, from_normalized(H, x)[None, :])[0])


def constant_vector(H: Hypergraph) -> np.ndarray:
    x1 = np.sqrt(H.node_weights)
    return x1 / np.linalg.norm(x1)


def _project(Q: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x - Q @ (Q.T @ x) if Q.size else x


def block_quadratic(H: Hypergraph, blocks: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For an ordered partition of the nodes (lowest block first) return the
    indicator matrix B and the numerator / denominator matrices in block
    coordinates, valid for every f that is constant on blocks and increasing
    across them."""
    n, m = H.n, len(blocks)
    B = np.zeros((n, m))
    block_of = np.empty(n, dtype=np.intp)
    for k, blk in enumerate(blocks):
        B[blk, k] = 1.0
        block_of[blk] = k
    N = np.zeros((m, m))
    for e, we in zip(H.edges, H.edge_weights):
        ids = block_of[list(e)]
        top, bot = ids.max(), ids.min()
        if top != bot:
            N[top, top] += we
            N[bot, bot] += we
            N[top, bot] -= we
            N[bot, top] -= we
    D = np.diag(B.T @ H.node_weights)
    return B, N, D


def face_minimizers(H: Hypergraph, blocks: list[np.ndarray], Q: np.ndarray) -> list[np.ndarray]:
    """Critical vectors (normalized space) of the face quadratic restricted to the complement of Q."""
    B, N, D = block_quadratic(H, blocks)
    C = Q.T @ (np.sqrt(H.node_weights)[:, None] * B) if Q.size else np.zeros((0, len(blocks)))
    Z = scipy.linalg.null_space(C) if C.shape[0] else np.eye(len(blocks))
    if Z.shape[1] == 0:
        return []
    _, vecs = scipy.linalg.eigh(Z.T @ N @ Z, Z.T @ D @ Z)
    out = []
    for c in vecs.T:
        x = to_normalized(H, B @ (Z @ c))
        x = _project(Q, x)
        nrm = np.linalg.norm(x)
        if nrm > 1e-12:
            out.append(x / nrm)
    return out


def polish(H: Hypergraph, x: np.ndarray, Q: np.ndarray, cache: dict | None = None) -> tuple[np.ndarray, float]:
    """Snap x onto nearby tie patterns and keep the best exact face minimizer (or x itself).

    ``cache`` maps tie patterns to their face minimizers and may be shared
    between calls with the same ``Q``.
    """
    cache = {} if cache is None else cache
    best_x, best = x, D_hat(H, x)
    f = from_normalized(H, x)
    spread = float(f.max() - f.min())
    if spread == 0.0:
        return best_x, best
    seen = set()
    for tau in POLISH_THRESHOLDS:
        classes, _ = equivalence_classes(f, tau * spread)
        key = tuple(tuple(c.tolist()) for c in classes)
        if key in seen:
            continue
        seen.add(key)
        if key not in cache:
            cands = face_minimizers(H, classes, Q)
            vals = discrepancy_ratio_batch(H, from_normalized(H, np.array(cands))) if cands else []
            cache[key] = list(zip(vals, cands))
        for val, cand in cache[key]:
            if val < best - 1e-15 * max(1.0, best):
                best_x, best = cand, float(val)
    return best_x, best


def _project_rows(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    return X - (X @ Q) @ Q.T if Q.size else X


def _laplacian_rows(H: Hypergraph, X: np.ndarray, tol: float) -> np.ndarray:
    sw = np.sqrt(H.node_weights)
    return -sw * rates_batch(H, X / sw, tol)


def descend_batch(
    H: Hypergraph,
    X: np.ndarray,
    Q: np.ndarray,
    max_iter: int = 150,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Normalized diffusion descent x <- normalize(P(x - h L x)) for each row of X.

    Each row keeps its own step size, adapted by backtracking on D; a step is
    accepted only if D does not increase (up to 1e-12 relative slack).  A row
    stops when a step gains less than STALL_RTOL: near a non-smooth minimum the
    descent only zigzags, and the face polish recovers the exact value.
    Returns the final rows, their values and the total number of accepted steps.
    """
    X = _project_rows(Q, np.atleast_2d(np.asarray(X, dtype=float)))
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    sw = np.sqrt(H.node_weights)
    vals = discrepancy_ratio_batch(H, X / sw)
    h = np.full(len(X), 0.5)
    active = np.ones(len(X), dtype=bool)
    steps = 0
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        G = _project_rows(Q, _laplacian_rows(H, X[idx], tol))
        accepted = np.zeros(idx.size, dtype=bool)
        pending = np.ones(idx.size, dtype=bool)
        Ynew = X[idx].copy()
        vnew = vals[idx].copy()
        while np.any(pending):
            p = np.flatnonzero(pending)
            rows = idx[p]
            Y = _project_rows(Q, X[rows] - h[rows, None] * G[p])
            nrm = np.linalg.norm(Y, axis=1)
            ok = nrm > 0
            Y[ok] /= nrm[ok, None]
            vy = np.full(len(p), np.inf)
            if np.any(ok):
                vy[ok] = discrepancy_ratio_batch(H, Y[ok] / sw)
            acc = vy <= vals[rows] + 1e-12 * np.maximum(1.0, vals[rows])
            Ynew[p[acc]] = Y[acc]
            vnew[p[acc]] = vy[acc]
            accepted[p[acc]] = True
            pending[p[acc]] = False
            rej = p[~acc]
            h[idx[rej]] *= 0.5
            pending[rej[h[idx[rej]] <= 1e-10]] = False
        active[idx[~accepted]] = False
        moved = idx[accepted]
        if moved.size == 0:
            break
        gain = vals[moved] - vnew[accepted]
        X[moved] = Ynew[accepted]
        vals[moved] = vnew[accepted]
        h[moved] = np.minimum(2.0 * h[moved], 4.0)
        steps += moved.size
        active[moved[gain <= STALL_RTOL * np.maximum(1.0, vals[moved])]] = False
    return X, vals, steps


def descend(
    H: Hypergraph,
    x: np.ndarray,
    Q: np.ndarray,
    max_iter: int = 150,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, float, int]:
    """Single-start version of :func:`descend_batch`."""
    X, vals, steps = descend_batch(H, np.asarray(x, dtype=float)[None, :], Q, max_iter, tol)
    return X[0], float(vals[0]), steps


@dataclass
class MinimizerRun:
    value: float
    x: np.ndarray
    agreeing: int
    restarts: int
    iterations: int
    values: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.agreeing >= 2 or self.restarts == 1


def minimize_on_complement(
    H: Hypergraph,
    Q: np.ndarray,
    restarts: int = DEFAULT_RESTARTS,
    rng: np.random.Generator | None = None,
    tol: float = DEFAULT_TOL,
    rounds: int = 2,
) -> MinimizerRun:
    """min D(x) over unit x orthogonal to the orthonormal columns of Q."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    X = rng.standard_normal((restarts, H.n))
    cache: dict = {}
    iters = 0
    for _ in range(rounds):
        X, _, it = descend_batch(H, X, Q, tol=tol)
        iters += it
        polished = [polish(H, x, Q, cache) for x in X]
        X = np.array([x for x, _ in polished])
    results = [(val, x) for x, val in polished]
    values = [v for v, _ in results]
    best = min(values)
    # deterministic reduction: lowest start index among the (numerically) tied best values
    pick = next(i for i, v in enumerate(values) if v <= best + 1e-9 * max(1.0, best))
    agreeing = sum(1 for v in values if v <= best + AGREEMENT)
    x = results[pick][1]
    return MinimizerRun(D_hat(H, x), _canonical_sign(H, x), agreeing, restarts, iters, values)


def _canonical_sign(H: Hypergraph, x: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(x) > 1e-9 * np.abs(x).max()))
    return x if x[i] > 0 else -x


def eigen_residual(H: Hypergraph, x: np.ndarray, gamma: float, tol: float = DEFAULT_TOL) -> float:
    """||L x - gamma x|| / ||x|| in the normalized space."""
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ValueError("eigen residual of the zero vector is undefined")
    return float(np.linalg.norm(normalized_laplacian(H, x, tol) - gamma * x) / nrm)


def gamma2(
    H: Hypergraph,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> tuple[float, np.ndarray]:
    """gamma_2 and a unit minimizer x_2 in the normalized space."""
    res = procedural_minimizers(H, 2, restarts=restarts, seed=seed, tol=tol)
    return res.gammas[1], res.vectors[1]


@dataclass
class SpectralResult:
    gammas: list[float]
    vectors: list[np.ndarray]  # normalized space, unit norm
    residuals: list[float]
    converged: list[bool]
    meta: dict = field(default_factory=dict)

    def weighted_vectors(self, H: Hypergraph) -> list[np.ndarray]:
        return [from_normalized(H, x) for x in self.vectors]

    def to_dict(self, H: Hypergraph) -> dict:
        return {
            "gammas": [
                {
                    "k": k + 1,
                    "gamma": g,
                    "x": x.tolist(),
                    "f": from_normalized(H, x).tolist(),
                    "residual": res,
                    "converged": conv,
                }
                for k, (g, x, res, conv) in enumerate(zip(self.gammas, self.vectors, self.residuals, self.converged))
            ],
            "meta": self.meta,
        }


def procedural_minimizers(
    H: Hypergraph,
    k_max: int,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    fixed: list[np.ndarray] | None = None,
    oracle_check: bool = True,
) -> SpectralResult:
    """gamma_1..gamma_{k_max} with mutually orthogonal unit minimizers.

    ``fixed`` optionally pins x_2, x_3, ... (weighted-space vectors) to follow a
    chosen branch; later minimizers depend on earlier choices, so the sequence
    is not unique in general.  For n <= ORACLE_MAX_N each gamma_k is compared
    with the exact constrained minimum given the earlier returned vectors
    (``meta["oracle_gammas"]``); a mismatch beyond AGREEMENT warns.
    """
    if not 1 <= k_max <= H.n:
        raise ValueError("need 1 <= k_max <= n")
    fixed = list(fixed or [])
    x1 = constant_vector(H)
    gammas, vectors, converged = [0.0], [x1], [True]
    iterations = []
    for k in range(2, k_max + 1):
        Q = np.column_stack(vectors)
        if k - 2 < len(fixed):
            x = _project(Q, to_normalized(H, np.asarray(fixed[k - 2], dtype=float)))
            if np.linalg.norm(x) < 1e-9 * np.linalg.norm(fixed[k - 2]):
                raise ValueError(f"fixed vector #{k} lies in the span of the earlier minimizers")
            x = x / np.linalg.norm(x)
            gammas.append(D_hat(H, x))
            vectors.append(x)
            converged.append(True)
            continue
        run = minimize_on_complement(H, Q, restarts, np.random.default_rng([seed, k]), tol)
        if not run.converged:
            warnings.warn(f"gamma_{k}: only {run.agreeing} of {restarts} restarts reached the best value", stacklevel=2)
        gammas.append(run.value)
        vectors.append(run.x)
        converged.append(run.converged)
        iterations.append(run.iterations)
    residuals = [eigen_residual(H, x, g, tol) for g, x in zip(gammas, vectors)]
    meta = {"restarts": restarts, "seed": seed, "iterations": iterations, "tol": tol}
    if oracle_check and H.n <= ORACLE_MAX_N:
        from .oracle import exact_gamma

        weighted_prior = [from_normalized(H, x) for x in vectors]
        exact = [0.0] + [exact_gamma(H, weighted_prior[: k - 1])[0] for k in range(2, k_max + 1)]
        meta["oracle_gammas"] = exact
        meta["oracle_agrees"] = all(abs(a - b) <= AGREEMENT for a, b in zip(gammas, exact))
        if not meta["oracle_agrees"]:
            warnings.warn(f"descent values {gammas} differ from exact minima {exact}", stacklevel=2)
    return SpectralResult(gammas, vectors, residuals, converged, meta)


# -- orthogonal minimaximizers --------------------------------------------

def _orthonormal(M: np.ndarray) -> np.ndarray:
    Qm, R = np.linalg.qr(M)
    return Qm * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))


def span_max(
    H: Hypergraph,
    F: np.ndarray,
    restarts: int = 32,
    rng: np.random.Generator | None = None,
    tol: float = DEFAULT_TOL,
    iters: int = 100,
) -> tuple[float, np.ndarray]:
    """max of D over the span of the orthonormal columns of F (projected ascent on the sphere)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    k = F.shape[1]
    if k == 1:
        return D_hat(H, F[:, 0]), F[:, 0]
    starts = rng.standard_normal((restarts, k))
    # cheap global look first: many random directions, ascend from the best few
    probe = rng.standard_normal((512 * k, k))
    probe /= np.linalg.norm(probe, axis=1, keepdims=True)
    vals = discrepancy_ratio_batch(H, from_normalized(H, (F @ probe.T).T))
    seeds = np.vstack([probe[np.argsort(vals)[-restarts // 2 :]], starts[: restarts - restarts // 2]])
    best, best_x = -np.inf, None
    for c in seeds:
        c = c / np.linalg.norm(c)
        x = F @ c
        val = D_hat(H, x)
        h = 0.5
        for _ in range(iters):
            grad = F.T @ (2.0 * (normalized_laplacian(H, x, tol) - val * x))
            moved = False
            while h > 1e-10:
                c2 = c + h * grad
                c2 /= np.linalg.norm(c2)
                v2 = D_hat(H, F @ c2)
                if v2 > val:
                    moved = True
                    break
                h *= 0.5
            if not moved:
                break
            gain = v2 - val
            c, x, val = c2, F @ c2, v2
            h *= 2.0
            if gain < 1e-14:
                break
        if val > best:
            best, best_x = val, x
    return best, best_x


@dataclass
class MinimaxEstimate:
    k: int
    xi: float
    zeta: float
    xi_frame: np.ndarray
    zeta_frame: np.ndarray


def _xi_objective(H: Hypergraph, M: np.ndarray) -> float:
    F = _orthonormal(M)
    return float(np.max(discrepancy_ratio_batch(H, from_normalized(H, F.T))))


def _indicator_frames(H: Hypergraph, k: int, rng: np.random.Generator, limit: int = 4000):
    """Frames of k indicator vectors with disjoint supports (always orthogonal)."""
    n = H.n
    total = (k + 1) ** n
    labels = range(total) if total <= limit else rng.integers(0, total, size=limit)
    sw = np.sqrt(H.node_weights)
    for code in labels:
        lab = np.array([(int(code) // (k + 1) ** i) % (k + 1) for i in range(n)])
        if all(np.any(lab == j + 1) for j in range(k)):
            yield np.column_stack([sw * (lab == j + 1) for j in range(k)])


def minimax_parameters(
    H: Hypergraph,
    k: int,
    restarts: int = 16,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    procedural: SpectralResult | None = None,
) -> MinimaxEstimate:
    """Numerical estimates of xi_k (min over orthogonal frames of the worst member)
    and zeta_k (min over frames of the worst vector in their span)."""
    from scipy.optimize import minimize

    if not 1 <= k <= H.n:
        raise ValueError("need 1 <= k <= n")
    if k == 1:
        x1 = constant_vector(H)[:, None]
        return MinimaxEstimate(1, 0.0, 0.0, x1, x1)
    rng = np.random.default_rng([seed, k, 7])
    if procedural is None or len(procedural.vectors) < k:
        procedural = procedural_minimizers(H, k, restarts=restarts, seed=seed, tol=tol)
    proc = np.column_stack(procedural.vectors[:k])

    candidates = [(_xi_objective(H, proc), proc)]
    for M in _indicator_frames(H, k, rng):
        candidates.append((_xi_objective(H, M), M))
    for _ in range(restarts):
        M = rng.standard_normal((H.n, k))
        candidates.append((_xi_objective(H, M), M))
    candidates.sort(key=lambda c: c[0])
    xi, xi_frame = candidates[0][0], _orthonormal(candidates[0][1])
    for val, M in candidates[: max(4, restarts // 4)]:
        opt = minimize(lambda v: _xi_objective(H, v.reshape(H.n, k)), M.ravel(), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if opt.fun < xi:
            xi, xi_frame = float(opt.fun), _orthonormal(opt.x.reshape(H.n, k))

    zeta_frames = [proc, xi_frame] + [_orthonormal(M) for _, M in candidates[1:4]]
    zeta, zeta_frame = np.inf, proc
    for F in zeta_frames:
        F = _orthonormal(F)
        val, _ = span_max(H, F, rng=rng, tol=tol)
        if val < zeta:
            zeta, zeta_frame = val, F
    return MinimaxEstimate(k, float(xi), float(zeta), xi_frame, zeta_frame)
