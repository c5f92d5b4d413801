"""Hypergraph data model, the three vector spaces, discrepancy ratio and edge expansion.

Vectors live in one of three isomorphic spaces:

* measure space      ``phi``  (what diffuses)
* weighted space     ``f = W^-1 phi``
* normalized space   ``x = W^{1/2} f``

where ``W`` is the diagonal matrix of node weights.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

BUNDLED = ("louis4", "nested5", "twoedge4")


class HypergraphError(ValueError):
    """Raised for malformed instances."""


class Space(str, enum.Enum):
    MEASURE = "measure"
    WEIGHTED = "weighted"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class Hypergraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[int, ...], ...]
    edge_weights: np.ndarray
    name: str = ""
    node_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise HypergraphError("duplicate node id")
        ew = np.asarray(self.edge_weights, dtype=float)
        if ew.shape != (len(self.edges),):
            raise HypergraphError("one weight per edge required")
        if np.any(~np.isfinite(ew)) or np.any(ew <= 0):
            raise HypergraphError("edge weights must be positive and finite")
        w = np.zeros(n)
        for e, we in zip(self.edges, ew):
            if len(e) == 0:
                raise HypergraphError("empty edge")
            if len(set(e)) != len(e):
                raise HypergraphError(f"repeated node in edge {e}")
            for u in e:
                if not 0 <= u < n:
                    raise HypergraphError(f"edge references unknown node index {u}")
                w[u] += we
        zero = [self.nodes[u] for u in range(n) if w[u] <= 0]
        if zero:
            raise HypergraphError(f"nodes covered by no edge: {zero}")
        ew.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "edge_weights", ew)
        object.__setattr__(self, "node_weights", w)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(self.node_weights.sum())

    def index(self, node: str) -> int:
        return self.nodes.index(node)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [
                {"nodes": [self.nodes[u] for u in e], "weight": float(we)}
                for e, we in zip(self.edges, self.edge_weights)
            ],
        }

    def digest(self) -> str:
        """Stable hash of the instance content (ignores the name)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def padded_edges(self) -> np.ndarray:
        """Edge membership as an (m, max_size) index matrix, rows padded by repeating a member."""
        cached = self.__dict__.get("_padded")
        if cached is not None:
            return cached
        width = max(len(e) for e in self.edges)
        out = np.empty((self.m, width), dtype=np.intp)
        for j, e in enumerate(self.edges):
            out[j, : len(e)] = e
            out[j, len(e):] = e[0]
        out.setflags(write=False)
        object.__setattr__(self, "_padded", out)
        return out


def from_edges(
    nodes: Sequence[str],
    edges: Iterable[tuple[Iterable[str], float]],
    name: str = "",
) -> Hypergraph:
    nodes = tuple(nodes)
    pos = {}
    for i, u in enumerate(nodes):
        if u in pos:
            raise HypergraphError(f"duplicate node id {u!r}")
        pos[u] = i
    idx_edges, weights = [], []
    for members, weight in edges:
        members = list(members)
        try:
            idx_edges.append(tuple(pos[u] for u in members))
        except KeyError as exc:
            raise HypergraphError(f"edge references unknown node {exc.args[0]!r}") from None
        weights.append(float(weight))
    return Hypergraph(nodes, tuple(idx_edges), np.array(weights, dtype=float), name=name)


def load_hypergraph(text: str, name: str = "") -> Hypergraph:
    """Parse the JSON instance format ``{"nodes": [...], "edges": [{"nodes": [...], "weight": w}]}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HypergraphError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise HypergraphError("document needs 'nodes' and 'edges' arrays")
    nodes = doc["nodes"]
    if not isinstance(nodes, list) or not all(isinstance(u, str) for u in nodes):
        raise HypergraphError("'nodes' must be a list of strings")
    edges = []
    for k, e in enumerate(doc["edges"]):
        if not isinstance(e, dict) or "nodes" not in e:
            raise HypergraphError(f"edge #{k} must be an object with 'nodes'")
        weight = e.get("weight", 1.0)
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise HypergraphError(f"edge #{k} has non-numeric weight")
        if not weight > 0:
            raise HypergraphError(f"edge #{k} has nonpositive weight {weight}")
        edges.append((e["nodes"], weight))
    return from_edges(nodes, edges, name=name or doc.get("name", ""))


def bundled(name: str) -> Hypergraph:
    if name not in BUNDLED:
        raise HypergraphError(f"unknown bundled instance {name!r}; choose from {BUNDLED}")
    text = resources.files("hyperlap.instances").joinpath(f"{name}.json").read_text()
    return load_hypergraph(text, name=name)


def resolve_instance(spec: str) -> Hypergraph:
    """A bundled name, or a path to a JSON instance file."""
    if spec in BUNDLED:
        return bundled(spec)
    path = Path(spec)
    if not path.is_file():
        raise HypergraphError(f"instance file not found: {path}")
    return load_hypergraph(path.read_text(), name=path.stem)


@dataclass(frozen=True)
class StateVector:
    space: Space
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "space", Space(self.space))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def _scale(space: Space, w: np.ndarray) -> np.ndarray:
    # coordinate = scale * f
    if space is Space.MEASURE:
        return w
    if space is Space.NORMALIZED:
        return np.sqrt(w)
    return np.ones_like(w)


def convert(H: Hypergraph, v: StateVector, target: Space | str) -> StateVector:
    target = Space(target)
    if v.values.shape != (H.n,):
        raise HypergraphError(f"vector length {v.values.shape} does not match |V|={H.n}")
    if target is v.space:
        return v
    w = H.node_weights
    f = v.values / _scale(v.space, w)
    return StateVector(target, f * _scale(target, w))


def weighted(H: Hypergraph, v) -> np.ndarray:
    """Weighted-space coordinates of ``v``; plain arrays are taken to be weighted already."""
    if isinstance(v, StateVector):
        return convert(H, v, Space.WEIGHTED).values
    f = np.asarray(v, dtype=float)
    if f.shape != (H.n,):
        raise HypergraphError(f"vector length {f.shape} does not match |V|={H.n}")
    return f


def to_normalized(H: Hypergraph, f: np.ndarray) -> np.ndarray:
    return np.sqrt(H.node_weights) * f


def from_normalized(H: Hypergraph, x: np.ndarray) -> np.ndarray:
    return x / np.sqrt(H.node_weights)


def w_inner(H: Hypergraph, f: np.ndarray, g: np.ndarray) -> float:
    return float(np.dot(H.node_weights * f, g))


def numerator(H: Hypergraph, f: np.ndarray) -> float:
    """sum_e w_e max_{u,v in e} (f_u - f_v)^2; invariant under adding constants."""
    F = f[H.padded_edges()]
    spread = F.max(axis=1) - F.min(axis=1)
    return float(np.dot(H.edge_weights, spread**2))


def discrepancy_ratio(H: Hypergraph, v) -> float:
    f = weighted(H, v)
    den = float(np.dot(H.node_weights, f * f))
    if den == 0.0:
        raise ValueError("discrepancy ratio of the zero vector is undefined")
    return numerator(H, f) / den


def discrepancy_ratio_batch(H: Hypergraph, F: np.ndarray) -> np.ndarray:
    """Row-wise discrepancy ratio of weighted-space vectors ``F`` with shape (k, n)."""
    F = np.atleast_2d(F)
    G = F[:, H.padded_edges()]
    num = (G.max(axis=2) - G.min(axis=2)) ** 2 @ H.edge_weights
    return num / ((F * F) @ H.node_weights)


def normalized_discrepancy(H: Hypergraph, x: np.ndarray) -> float:
    return discrepancy_ratio(H, from_normalized(H, np.asarray(x, dtype=float)))


def _subset_indices(H: Hypergraph, S) -> list[int]:
    idx = []
    for u in S:
        idx.append(H.index(u) if isinstance(u, str) else int(u))
    return sorted(set(idx))


def boundary(H: Hypergraph, S) -> list[int]:
    """Indices of edges cut by ``S``."""
    inside = np.zeros(H.n, dtype=bool)
    inside[_subset_indices(H, S)] = True
    return [j for j, e in enumerate(H.edges) if 0 < inside[list(e)].sum() < len(e)]


def edge_expansion(H: Hypergraph, S) -> float:
    idx = _subset_indices(H, S)
    if not idx or len(idx) == H.n:
        raise ValueError("edge expansion needs a nonempty proper subset")
    cut = sum(H.edge_weights[j] for j in boundary(H, idx))
    return float(cut / H.node_weights[idx].sum())


def indicator(H: Hypergraph, S) -> np.ndarray:
    f = np.zeros(H.n)
    f[_subset_indices(H, S)] = 1.0
    return f


def equilibrium(H: Hypergraph, phi) -> np.ndarray:
    """Measure vector with the same total as ``phi``, spread proportionally to node weight."""
    if isinstance(phi, StateVector):
        phi = convert(H, phi, Space.MEASURE).values
    phi = np.asarray(phi, dtype=float)
    return phi.sum() / H.total_weight * H.node_weights


def projection_off_constant(H: Hypergraph, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection (normalized space) onto the complement of W^{1/2} 1."""
    x1 = np.sqrt(H.node_weights)
    return x - (x @ x1) / H.total_weight * x1


def random_hypergraph(
    rng: np.random.Generator,
    n: int,
    m: int | None = None,
    max_size: int | None = None,
    integer_weights: bool = False,
    self_loops: bool = True,
) -> Hypergraph:
    """Random instance in which every node is covered by at least one edge."""
    m = m if m is not None else int(rng.integers(n, 2 * n + 1))
    max_size = max_size or n
    edges = []
    for _ in range(m):
        lo = 1 if self_loops else 2
        size = int(rng.integers(lo, max(lo, max_size) + 1))
        size = min(size, n)
        edges.append(tuple(sorted(rng.choice(n, size=size, replace=False).tolist())))
    covered = {u for e in edges for u in e}
    for u in range(n):
        if u not in covered:
            v = int(rng.integers(n))
            edges.append(tuple(sorted({u, v})))
    if integer_weights:
        weights = rng.integers(1, 4, size=len(edges)).astype(float)
    else:
        weights = rng.uniform(0.2, 2.0, size=len(edges))
    nodes = tuple(f"v{i}" for i in range(n))
    return Hypergraph(nodes, tuple(edges), weights, name=f"random{n}")
