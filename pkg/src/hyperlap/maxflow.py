"""Shortest-augmenting-path (Edmonds-Karp) max-flow on real capacities.

Networks here have a few dozen vertices at most, so the dense dict-of-dicts
residual graph is fine.  Residual capacities at or below ``eps`` are treated
as saturated.
"""
from __future__ import annotations

import math
from collections import deque
from typing import Hashable

INF = math.inf


class FlowNetwork:
    def __init__(self, eps: float = 1e-12):
        self.eps = eps
        self.cap: dict[Hashable, dict[Hashable, float]] = {}
        self._orig: dict[tuple, float] = {}

    def add_vertex(self, v: Hashable) -> None:
        self.cap.setdefault(v, {})

    def add_edge(self, u: Hashable, v: Hashable, capacity: float) -> None:
        if capacity < 0:
            raise ValueError("negative capacity")
        self.add_vertex(u)
        self.add_vertex(v)
        self.cap[u][v] = self.cap[u].get(v, 0.0) + capacity
        self.cap[v].setdefault(u, 0.0)
        self._orig[(u, v)] = self._orig.get((u, v), 0.0) + capacity

    def _bfs(self, s, t):
        parent = {s: None}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, c in self.cap[u].items():
                if c > self.eps and v not in parent:
                    parent[v] = u
                    if v == t:
                        return parent
                    queue.append(v)
        return None

    def max_flow(self, s: Hashable, t: Hashable) -> float:
        self.add_vertex(s)
        self.add_vertex(t)
        total = 0.0
        while True:
            parent = self._bfs(s, t)
            if parent is None:
                return total
            # bottleneck along the path
            push = INF
            v = t
            while v != s:
                u = parent[v]
                push = min(push, self.cap[u][v])
                v = u
            if push == INF:
                raise ValueError("unbounded flow: infinite-capacity s-t path")
            v = t
            while v != s:
                u = parent[v]
                self.cap[u][v] -= push
                self.cap[v][u] += push
                v = u
            total += push

    def flow(self, u: Hashable, v: Hashable) -> float:
        """Net flow pushed along the original arc (u, v)."""
        c0 = self._orig.get((u, v), 0.0)
        if c0 == INF:
            # reverse residual holds exactly the pushed amount (minus any original reverse capacity)
            return self.cap[v][u] - self._orig.get((v, u), 0.0)
        return c0 - self.cap[u][v]

    def sink_side(self, t: Hashable) -> set:
        """Vertices that can still reach ``t`` in the residual graph."""
        reach = {t}
        queue = deque([t])
        while queue:
            v = queue.popleft()
            for u in self.cap:
                if u not in reach and self.cap[u].get(v, 0.0) > self.eps:
                    reach.add(u)
                    queue.append(u)
        return reach

    def maximal_source_side(self, t: Hashable) -> set:
        """Source side of the min cut with the largest source side (after max_flow)."""
        return set(self.cap) - self.sink_side(t)
