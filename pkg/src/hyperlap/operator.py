"""The diffusion-defined hypergraph Laplacian.

Given a weighted-space vector ``f`` the operator finds the unique rate vector
``r = df/dt`` such that

* measure moves along edge ``e`` only from its top nodes ``S_e`` to its
  bottom nodes ``I_e``,
* the total rate along ``e`` is ``c_e = w_e * (max_e f - min_e f)``,
* a node losing measure through ``e`` has the largest rate within ``S_e``,
  and a node gaining through ``e`` has the smallest rate within ``I_e``.

Nodes with equal ``f`` form equivalence classes.  Inside each class the rates
are found by repeatedly peeling off the maximal subset of maximum density
``delta(X) = (c(I_X) - c(S_X)) / w(X)``; a flow problem then splits each
edge's rate among the nodes of the layer.

``L_w f = -r``, ``L phi = -W r`` and the normalized Laplacian gives
``L x = -W^{1/2} r``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import DEFAULT_TOL, Hypergraph, weighted
from .maxflow import INF, FlowNetwork

DENSITY_RTOL = 1e-10
BRUTE_FORCE_MAX = 22
AUTO_BRUTE_MAX = 12


class FlowInfeasibleError(RuntimeError):
    """A layer flow could not be routed; the density computation is inconsistent."""


class DensityMethod(str, enum.Enum):
    BRUTE_FORCE = "brute"
    PARAMETRIC_CUT = "cut"
    AUTO = "auto"


@dataclass(frozen=True)
class EdgeExtremes:
    edge: int
    S: tuple[int, ...]
    I: tuple[int, ...]
    delta: float
    c: float

    @property
    def active(self) -> bool:
        return self.c > 0.0


def equivalence_classes(f: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[list[np.ndarray], np.ndarray]:
    """Group nodes whose sorted values are chained by gaps <= tol.

    Returns the classes in increasing order of value and the class id per node.
    """
    order = np.argsort(f, kind="stable")
    breaks = np.diff(f[order]) > tol
    ids_sorted = np.concatenate(([0], np.cumsum(breaks)))
    class_of = np.empty(len(f), dtype=np.intp)
    class_of[order] = ids_sorted
    classes = np.split(order, np.flatnonzero(breaks) + 1)
    return [np.sort(c) for c in classes], class_of


def edge_extremes(H: Hypergraph, f, tol: float = DEFAULT_TOL, class_of: np.ndarray | None = None) -> list[EdgeExtremes]:
    f = weighted(H, f)
    if class_of is None:
        _, class_of = equivalence_classes(f, tol)
    out = []
    for j, (e, we) in enumerate(zip(H.edges, H.edge_weights)):
        cls = class_of[list(e)]
        top, bot = cls.max(), cls.min()
        if top == bot:
            out.append(EdgeExtremes(j, e, e, 0.0, 0.0))
            continue
        S = tuple(u for u, k in zip(e, cls) if k == top)
        I = tuple(u for u, k in zip(e, cls) if k == bot)
        vals = f[list(e)]
        delta = float(vals.max() - vals.min())
        out.append(EdgeExtremes(j, S, I, delta, float(we) * delta))
    return out


@dataclass
class DensitySubproblem:
    """One equivalence class ``U`` with the edges feeding into it and draining out of it.

    ``i_edges`` / ``s_edges`` map edge id -> (c_e, members of I_e / S_e inside U).
    """

    nodes: tuple[int, ...]
    weights: dict[int, float]
    i_edges: dict[int, tuple[float, frozenset]]
    s_edges: dict[int, tuple[float, frozenset]]

    def density(self, X) -> float:
        X = set(X)
        cin = sum(c for c, mem in self.i_edges.values() if mem <= X)
        cout = sum(c for c, mem in self.s_edges.values() if mem & X)
        return (cin - cout) / sum(self.weights[u] for u in X)

    def scale(self) -> float:
        total = sum(c for c, _ in self.i_edges.values()) + sum(c for c, _ in self.s_edges.values())
        return total / min(self.weights.values())

    def tie_eps(self) -> float:
        return DENSITY_RTOL * self.scale()

    def residual(self, T) -> tuple["DensitySubproblem", list[int], list[int]]:
        """Instance left after removing layer ``T``; also returns the edge ids I_T and S_T."""
        T = frozenset(T)
        rest = tuple(u for u in self.nodes if u not in T)
        I_T = [j for j, (_, mem) in self.i_edges.items() if mem <= T]
        S_T = [j for j, (_, mem) in self.s_edges.items() if mem & T]
        sub = DensitySubproblem(
            rest,
            {u: self.weights[u] for u in rest},
            {j: (c, mem - T) for j, (c, mem) in self.i_edges.items() if not mem <= T},
            {j: (c, mem - T) for j, (c, mem) in self.s_edges.items() if not mem & T},
        )
        return sub, sorted(I_T), sorted(S_T)


def build_subproblems(H: Hypergraph, classes, extremes: list[EdgeExtremes], class_of) -> list[DensitySubproblem]:
    w = H.node_weights
    subs = [DensitySubproblem(tuple(int(u) for u in U), {int(u): float(w[u]) for u in U}, {}, {}) for U in classes]
    for ex in extremes:
        if not ex.active:
            continue
        subs[class_of[ex.I[0]]].i_edges[ex.edge] = (ex.c, frozenset(ex.I))
        subs[class_of[ex.S[0]]].s_edges[ex.edge] = (ex.c, frozenset(ex.S))
    return subs


# -- density maximization ---------------------------------------------------

def _local_masks(sub: DensitySubproblem):
    pos = {u: i for i, u in enumerate(sub.nodes)}

    def mask(mem):
        out = 0
        for u in mem:
            out |= 1 << pos[u]
        return out

    imasks = [(c, mask(mem)) for c, mem in sub.i_edges.values()]
    smasks = [(c, mask(mem)) for c, mem in sub.s_edges.values()]
    return imasks, smasks


def density_table(sub: DensitySubproblem) -> tuple[np.ndarray, np.ndarray]:
    """Densities of every nonempty subset of ``sub.nodes``, indexed by bitmask."""
    k = len(sub.nodes)
    if k > BRUTE_FORCE_MAX:
        raise ValueError(f"brute-force density refused for a class of {k} nodes (limit {BRUTE_FORCE_MAX})")
    X = np.arange(1, 1 << k, dtype=np.int64)
    C = np.zeros(X.shape)
    for c, m in _local_masks(sub)[0]:
        C += c * ((X & m) == m)
    for c, m in _local_masks(sub)[1]:
        C -= c * ((X & m) != 0)
    wX = np.zeros(X.shape)
    for i, u in enumerate(sub.nodes):
        wX += sub.weights[u] * ((X >> i) & 1)
    return X, C / wX


def _mask_to_nodes(sub: DensitySubproblem, mask: int) -> frozenset:
    return frozenset(u for i, u in enumerate(sub.nodes) if mask >> i & 1)


def maximizers(sub: DensitySubproblem) -> list[frozenset]:
    """All subsets attaining the maximum density (within the tie tolerance)."""
    X, dens = density_table(sub)
    hit = X[dens >= dens.max() - sub.tie_eps()]
    return [_mask_to_nodes(sub, int(m)) for m in hit]


def _max_density_brute(sub: DensitySubproblem) -> tuple[frozenset, float]:
    X, dens = density_table(sub)
    best = dens.max()
    hit = X[dens >= best - sub.tie_eps()]
    P = _mask_to_nodes(sub, int(np.bitwise_or.reduce(hit)))
    return P, sub.density(P)


def _cut_argmax(sub: DensitySubproblem, lam: float) -> frozenset:
    """Maximal X maximizing C(X) - lam * w(X) (C is supermodular, so this is a min cut)."""
    net = FlowNetwork()
    s, t = "s", "t"
    net.add_vertex(s)
    net.add_vertex(t)
    for j, (c, mem) in sub.i_edges.items():
        net.add_edge(s, ("I", j), c)
        for u in mem:
            net.add_edge(("I", j), ("v", u), INF)
    for j, (c, mem) in sub.s_edges.items():
        net.add_edge(("S", j), t, c)
        for u in mem:
            net.add_edge(("v", u), ("S", j), INF)
    for u in sub.nodes:
        d = lam * sub.weights[u]
        if d > 0:
            net.add_edge(("v", u), t, d)
        elif d < 0:
            net.add_edge(s, ("v", u), -d)
        else:
            net.add_vertex(("v", u))
    net.max_flow(s, t)
    side = net.maximal_source_side(t)
    return frozenset(u for u in sub.nodes if ("v", u) in side)


def _max_density_cut(sub: DensitySubproblem) -> tuple[frozenset, float]:
    eps = sub.tie_eps()
    lam = sub.density(sub.nodes)
    for _ in range(10 * len(sub.nodes) + 10):
        X = _cut_argmax(sub, lam)
        if not X:
            break
        dX = sub.density(X)
        if dX <= lam + eps:
            break
        lam = dX
    P = _cut_argmax(sub, lam - eps) if eps > 0 else frozenset(sub.nodes)
    if not P:
        # lam - eps falls below every density only if rounding swamped eps
        P = _cut_argmax(sub, lam - 10 * eps)
    return P, sub.density(P)


def max_density_set(sub: DensitySubproblem, method: DensityMethod | str = DensityMethod.AUTO) -> tuple[frozenset, float]:
    """The unique maximal subset P of the class with maximum density, and that density."""
    if not sub.nodes:
        raise ValueError("empty class")
    method = DensityMethod(method)
    if len(sub.nodes) == 1:
        return frozenset(sub.nodes), sub.density(sub.nodes)
    if method is DensityMethod.AUTO:
        method = DensityMethod.BRUTE_FORCE if len(sub.nodes) <= AUTO_BRUTE_MAX else DensityMethod.PARAMETRIC_CUT
    if method is DensityMethod.BRUTE_FORCE:
        return _max_density_brute(sub)
    return _max_density_cut(sub)


# -- layers and flows -------------------------------------------------------

@dataclass
class PeelLayer:
    T: tuple[int, ...]
    delta: float
    I_T: tuple[int, ...]
    S_T: tuple[int, ...]
    rho: dict[tuple[int, int], float] = field(default_factory=dict)


def solve_layer_flow(
    T,
    delta: float,
    i_edges: dict[int, tuple[float, frozenset]],
    s_edges: dict[int, tuple[float, frozenset]],
    weights: dict[int, float],
) -> dict[tuple[int, int], float]:
    """Zero-surplus split of edge rates among the layer's nodes.

    ``i_edges`` supply c_e to their members, ``s_edges`` demand c_e from their
    members, and node v must net ``w_v * delta``.  Returns rho[(v, e)].
    """
    T = tuple(T)
    if len(T) == 1:
        (v,) = T
        rho = {(v, j): c for j, (c, _) in i_edges.items()}
        rho.update({(v, j): -c for j, (c, _) in s_edges.items()})
        return rho

    net = FlowNetwork()
    s, t = "s", "t"
    supply = 0.0
    for j, (c, mem) in i_edges.items():
        net.add_edge(s, ("I", j), c)
        supply += c
        for v in mem:
            net.add_edge(("I", j), ("v", v), INF)
    for j, (c, mem) in s_edges.items():
        net.add_edge(("S", j), t, c)
        for v in mem:
            net.add_edge(("v", v), ("S", j), INF)
    for v in T:
        d = weights[v] * delta
        if d > 0:
            net.add_edge(("v", v), t, d)
        elif d < 0:
            net.add_edge(s, ("v", v), -d)
            supply -= d
    value = net.max_flow(s, t)
    if abs(value - supply) > 1e-9 * max(1.0, supply):
        raise FlowInfeasibleError(
            f"layer {T} with density {delta!r}: routed {value!r} of {supply!r}"
        )
    rho = {}
    for j, (_, mem) in i_edges.items():
        for v in mem:
            rho[(v, j)] = net.flow(("I", j), ("v", v))
    for j, (_, mem) in s_edges.items():
        for v in mem:
            rho[(v, j)] = -net.flow(("v", v), ("S", j))
    return rho


def peel(
    sub: DensitySubproblem,
    method: DensityMethod | str = DensityMethod.AUTO,
    flows: bool = True,
) -> list[PeelLayer]:
    layers = []
    while sub.nodes:
        P, delta = max_density_set(sub, method)
        layer_i = {j: v for j, v in sub.i_edges.items() if v[1] <= P}
        layer_s = {j: v for j, v in sub.s_edges.items() if v[1] & P}
        nxt, I_T, S_T = sub.residual(P)
        T = tuple(u for u in sub.nodes if u in P)
        layer = PeelLayer(T, delta, tuple(I_T), tuple(S_T))
        if flows:
            layer_s = {j: (c, mem & P) for j, (c, mem) in layer_s.items()}
            layer.rho = solve_layer_flow(T, delta, layer_i, layer_s, sub.weights)
        layers.append(layer)
        sub = nxt
    return layers


# -- the operator -----------------------------------------------------------

@dataclass
class OperatorResult:
    r: np.ndarray
    rho: np.ndarray
    layers: list[PeelLayer]
    extremes: list[EdgeExtremes]
    f: np.ndarray
    node_weights: np.ndarray

    @property
    def Lw(self) -> np.ndarray:
        return -self.r

    @property
    def L_measure(self) -> np.ndarray:
        return -self.rho

    @property
    def L_normalized(self) -> np.ndarray:
        return -np.sqrt(self.node_weights) * self.r

    def edge_rates(self) -> dict[tuple[int, int], float]:
        out = {}
        for layer in self.layers:
            out.update(layer.rho)
        return out

    def energy_terms(self) -> tuple[float, float]:
        """(sum_e c_e (r_I(e) - r_S(e)), ||r||_w^2)."""
        lhs = 0.0
        for ex in self.extremes:
            if ex.active:
                rI = min(self.r[u] for u in ex.I)
                rS = max(self.r[u] for u in ex.S)
                lhs += ex.c * (rI - rS)
        return lhs, float(np.dot(self.node_weights, self.r**2))

    def energy_residual(self) -> float:
        lhs, rhs = self.energy_terms()
        return abs(lhs - rhs)


def _distinct(f: np.ndarray, tol: float) -> bool:
    return len(f) < 2 or bool(np.min(np.diff(np.sort(f))) > tol)


def _rates_distinct(H: Hypergraph, f: np.ndarray) -> np.ndarray:
    E = H.padded_edges()
    F = f[E]
    hi = E[np.arange(len(E)), F.argmax(axis=1)]
    lo = E[np.arange(len(E)), F.argmin(axis=1)]
    c = H.edge_weights * (F.max(axis=1) - F.min(axis=1))
    rho = np.zeros(H.n)
    np.add.at(rho, lo, c)
    np.subtract.at(rho, hi, c)
    return rho / H.node_weights


def apply_operator(
    H: Hypergraph,
    v,
    tol: float = DEFAULT_TOL,
    method: DensityMethod | str = DensityMethod.AUTO,
    flows: bool = True,
) -> OperatorResult:
    f = weighted(H, v)
    classes, class_of = equivalence_classes(f, tol)
    extremes = edge_extremes(H, f, tol, class_of)
    subs = build_subproblems(H, classes, extremes, class_of)
    r = np.zeros(H.n)
    layers = []
    for sub in subs:
        for layer in peel(sub, method, flows=flows):
            r[list(layer.T)] = layer.delta
            layers.append(layer)
    return OperatorResult(r, H.node_weights * r, layers, extremes, f, H.node_weights)


def _rates_ties(H: Hypergraph, f: np.ndarray, tol: float) -> np.ndarray:
    """Rates when some values tie: singleton classes in closed form, the rest by peeling."""
    classes, class_of = equivalence_classes(f, tol)
    E = H.padded_edges()
    C = class_of[E]
    top, bot = C.max(axis=1), C.min(axis=1)
    F = f[E]
    c = np.where(top != bot, H.edge_weights * (F.max(axis=1) - F.min(axis=1)), 0.0)
    w = H.node_weights
    gain = np.bincount(bot, weights=c, minlength=len(classes)) - np.bincount(top, weights=c, minlength=len(classes))
    r = np.empty(H.n)
    sizes = np.array([len(U) for U in classes])
    single = sizes == 1
    heads = np.array([U[0] for U in classes])
    r[heads[single]] = gain[single] / w[heads[single]]
    for k in np.flatnonzero(~single):
        U = classes[k]
        sub = DensitySubproblem(tuple(int(u) for u in U), {int(u): float(w[u]) for u in U}, {}, {})
        for j in np.flatnonzero((bot == k) & (c > 0)):
            sub.i_edges[int(j)] = (float(c[j]), frozenset(u for u in H.edges[j] if class_of[u] == k))
        for j in np.flatnonzero((top == k) & (c > 0)):
            sub.s_edges[int(j)] = (float(c[j]), frozenset(u for u in H.edges[j] if class_of[u] == k))
        for layer in peel(sub, DensityMethod.AUTO, flows=False):
            r[list(layer.T)] = layer.delta
    return r


def rates(H: Hypergraph, f: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``df/dt`` only, skipping flow reconstruction; agrees with ``apply_operator(...).r``."""
    if _distinct(f, tol):
        return _rates_distinct(H, f)
    return _rates_ties(H, f, tol)


def rates_batch(H: Hypergraph, F: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Row-wise rates for a (B, n) stack of weighted vectors."""
    F = np.atleast_2d(F)
    B, n = F.shape
    out = np.empty_like(F)
    srt = np.sort(F, axis=1)
    distinct = np.all(np.diff(srt, axis=1) > tol, axis=1) if n > 1 else np.ones(B, dtype=bool)
    idx = np.flatnonzero(distinct)
    if idx.size:
        E = H.padded_edges()
        G = F[idx][:, E]  # (b, m, width)
        edge_ids = np.arange(E.shape[0])[None, :]
        arg_hi = E[edge_ids, G.argmax(axis=2)]
        arg_lo = E[edge_ids, G.argmin(axis=2)]
        c = H.edge_weights * (G.max(axis=2) - G.min(axis=2))
        rho = np.zeros((len(idx), n))
        rows = np.repeat(np.arange(len(idx)), E.shape[0])
        np.add.at(rho, (rows, arg_lo.ravel()), c.ravel())
        np.subtract.at(rho, (rows, arg_hi.ravel()), c.ravel())
        out[idx] = rho / H.node_weights
    for i in np.flatnonzero(~distinct):
        out[i] = _rates_ties(H, F[i], tol)
    return out


def rayleigh_quotient(H: Hypergraph, v, tol: float = DEFAULT_TOL) -> float:
    """<f, L_w f>_w / <f, f>_w computed through the operator."""
    f = weighted(H, v)
    den = float(np.dot(H.node_weights, f * f))
    if den == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    r = rates(H, f, tol)
    return float(-np.dot(H.node_weights * f, r)) / den


def normalized_laplacian(H: Hypergraph, x: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """L x for a normalized-space vector x."""
    sw = np.sqrt(H.node_weights)
    return -sw * rates(H, np.asarray(x, dtype=float) / sw, tol)


# -- edge weight splits -----------------------------------------------------

def _uniform_pairs(A: np.ndarray, members, weight: float) -> None:
    members = list(members)
    k = len(members)
    if k < 2:
        return
    share = weight / (k * (k - 1) / 2)
    for a in range(k):
        for b in range(a + 1, k):
            u, v = members[a], members[b]
            A[u, v] += share
            A[v, u] += share


def _fill_diagonal(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, w - A.sum(axis=1))
    return A


def edge_weight_split(H: Hypergraph, result: OperatorResult) -> np.ndarray:
    """A symmetric matrix A_f consistent with the operator's flows: (I - W^-1 A_f) f = -r.

    Each active edge's weight is split over S_e x I_e by a north-west-corner
    transport between the per-node marginals -rho_u(e)/Delta_e (top side) and
    rho_v(e)/Delta_e (bottom side).  Edges with no spread are split uniformly
    over their node pairs.  One of possibly many valid splits.
    """
    A = np.zeros((H.n, H.n))
    rho = result.edge_rates()
    for ex in result.extremes:
        if not ex.active:
            _uniform_pairs(A, H.edges[ex.edge], H.edge_weights[ex.edge])
            continue
        supply = [max(0.0, -rho.get((u, ex.edge), 0.0) / ex.delta) for u in ex.S]
        demand = [max(0.0, rho.get((v, ex.edge), 0.0) / ex.delta) for v in ex.I]
        i = j = 0
        while i < len(supply) and j < len(demand):
            amt = min(supply[i], demand[j])
            u, v = ex.S[i], ex.I[j]
            A[u, v] += amt
            A[v, u] += amt
            supply[i] -= amt
            demand[j] -= amt
            if supply[i] <= demand[j]:
                i += 1
            else:
                j += 1
    return _fill_diagonal(A, H.node_weights)


def even_split_matrix(H: Hypergraph, v, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Adjacency obtained by spreading w_e evenly over the pairs S_e x I_e."""
    f = weighted(H, v)
    A = np.zeros((H.n, H.n))
    for ex in edge_extremes(H, f, tol):
        we = H.edge_weights[ex.edge]
        if not ex.active:
            _uniform_pairs(A, H.edges[ex.edge], we)
            continue
        share = we / (len(ex.S) * len(ex.I))
        for u in ex.S:
            for v_ in ex.I:
                A[u, v_] += share
                A[v_, u] += share
    return _fill_diagonal(A, H.node_weights)


def apply_even_split_operator(H: Hypergraph, v, tol: float = DEFAULT_TOL) -> OperatorResult:
    """(I - W^-1 A) f with the even split A; kept to reproduce why that construction fails."""
    f = weighted(H, v)
    A = even_split_matrix(H, f, tol)
    Lw = f - (A @ f) / H.node_weights
    r = -Lw
    return OperatorResult(r, H.node_weights * r, [], edge_extremes(H, f, tol), f, H.node_weights)


# -- rule audit ---------------------------------------------------------------

def audit_rules(H: Hypergraph, result: OperatorResult, atol: float = 1e-9) -> list[str]:
    """Check the sign, edge-total and first-order rules on a computed result; returns violations."""
    problems = []
    rho = result.edge_rates()
    r = result.r
    scale = max(1.0, max((ex.c for ex in result.extremes), default=0.0))
    tol = atol * scale
    by_edge: dict[int, list[tuple[int, float]]] = {}
    for (u, j), val in rho.items():
        by_edge.setdefault(j, []).append((u, val))
    for ex in result.extremes:
        items = by_edge.get(ex.edge, [])
        if not ex.active:
            if any(abs(val) > tol for _, val in items):
                problems.append(f"edge {ex.edge}: flow on an edge with no spread")
            continue
        inflow = sum(val for u, val in items if u in ex.I)
        outflow = -sum(val for u, val in items if u in ex.S)
        if abs(inflow - ex.c) > tol or abs(outflow - ex.c) > tol:
            problems.append(f"edge {ex.edge}: totals {inflow}, {outflow} != c_e={ex.c}")
        for u, val in items:
            if val > tol:
                if u not in ex.I:
                    problems.append(f"edge {ex.edge}: node {u} gains but is not in I_e")
                elif r[u] > min(r[v] for v in ex.I) + tol:
                    problems.append(f"edge {ex.edge}: gaining node {u} not slowest in I_e")
            elif val < -tol:
                if u not in ex.S:
                    problems.append(f"edge {ex.edge}: node {u} loses but is not in S_e")
                elif r[u] < max(r[v] for v in ex.S) - tol:
                    problems.append(f"edge {ex.edge}: losing node {u} not fastest in S_e")
    per_node = np.zeros(H.n)
    for (u, _), val in rho.items():
        per_node[u] += val
    if np.max(np.abs(per_node - result.rho)) > tol:
        problems.append("per-node edge rates do not sum to w_u * r_u")
    return problems
