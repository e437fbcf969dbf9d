"""Mixed graphs with directed and bi-directed edges (path diagrams).

Vertices are dense 0-based indices.  A directed edge ``(j, i)`` means
``j -> i`` (j is a parent of i); a bi-directed edge ``{i, j}`` is stored
as the sorted pair ``(min, max)``.  Graphs are immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .errors import CyclicGraphError, InvalidVertexError


@dataclass(frozen=True)
class MixedGraph:
    """Path diagram on vertices ``0 .. n_vertices-1``.

    Parameters
    ----------
    n_vertices:
        Number of vertices.
    directed:
        Iterable of ``(tail, head)`` pairs, one per edge ``tail -> head``.
    bidirected:
        Iterable of unordered pairs ``{i, j}`` given in any order.
    names:
        Optional display names, one per vertex.  Defaults to ``v0, v1, ...``.
    """

    n_vertices: int
    directed: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    bidirected: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    names: tuple[str, ...] | None = None

    def __init__(self, n_vertices, directed=(), bidirected=(), names=None):
        if n_vertices < 0:
            raise ValueError("n_vertices must be non-negative")
        dir_edges = set()
        for j, i in directed:
            self._check_pair(n_vertices, j, i)
            dir_edges.add((int(j), int(i)))
        bi_edges = set()
        for i, j in bidirected:
            self._check_pair(n_vertices, i, j)
            bi_edges.add((min(int(i), int(j)), max(int(i), int(j))))
        if names is not None:
            names = tuple(str(s) for s in names)
            if len(names) != n_vertices:
                raise ValueError("names must have one entry per vertex")
        object.__setattr__(self, "n_vertices", int(n_vertices))
        object.__setattr__(self, "directed", frozenset(dir_edges))
        object.__setattr__(self, "bidirected", frozenset(bi_edges))
        object.__setattr__(self, "names", names)

    @staticmethod
    def _check_pair(n, a, b):
        for v in (a, b):
            if not 0 <= v < n:
                raise InvalidVertexError(f"vertex {v} not in 0..{n - 1}")
        if a == b:
            raise ValueError(f"self-loop at vertex {a} not allowed")

    # -- basic queries ----------------------------------------------------

    def _check_vertex(self, i: int) -> int:
        if not 0 <= i < self.n_vertices:
            raise InvalidVertexError(
                f"vertex {i} not in 0..{self.n_vertices - 1}")
        return int(i)

    def name_of(self, i: int) -> str:
        self._check_vertex(i)
        return self.names[i] if self.names is not None else f"v{i}"

    @cached_property
    def _parents(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.n_vertices)]
        for j, i in self.directed:
            out[i].append(j)
        return tuple(tuple(sorted(s)) for s in out)

    @cached_property
    def _spouses(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.n_vertices)]
        for i, j in self.bidirected:
            out[i].append(j)
            out[j].append(i)
        return tuple(tuple(sorted(s)) for s in out)

    def parents(self, i: int) -> set[int]:
        """Vertices j with an edge j -> i."""
        return set(self._parents[self._check_vertex(i)])

    def spouses(self, i: int) -> set[int]:
        """Vertices j with an edge j <-> i."""
        return set(self._spouses[self._check_vertex(i)])

    def district(self, i: int) -> set[int]:
        """Vertices reachable from i along bi-directed edges, excluding i."""
        self._check_vertex(i)
        seen = {i}
        stack = [i]
        while stack:
            v = stack.pop()
            for w in self._spouses[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        seen.remove(i)
        return seen

    # -- structural predicates --------------------------------------------

    @cached_property
    def _topological_order(self) -> tuple[int, ...]:
        # Kahn's algorithm with a sorted frontier so the order is
        # deterministic (ties broken by ascending vertex index).
        indeg = [0] * self.n_vertices
        children = [[] for _ in range(self.n_vertices)]
        for j, i in self.directed:
            indeg[i] += 1
            children[j].append(i)
        frontier = [v for v in range(self.n_vertices) if indeg[v] == 0]
        heapq.heapify(frontier)
        order = []
        while frontier:
            v = heapq.heappop(frontier)
            order.append(v)
            for w in children[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(frontier, w)
        if len(order) < self.n_vertices:
            raise CyclicGraphError(self._find_cycle())
        return tuple(order)

    def _find_cycle(self) -> list[int]:
        # Iterative DFS; returns one cycle as [v, ..., v].
        children = [[] for _ in range(self.n_vertices)]
        for j, i in sorted(self.directed):
            children[j].append(i)
        state = [0] * self.n_vertices  # 0 new, 1 on path, 2 done
        for start in range(self.n_vertices):
            if state[start]:
                continue
            state[start] = 1
            path = [start]
            stack = [iter(children[start])]
            while stack:
                advanced = False
                for w in stack[-1]:
                    if state[w] == 1:
                        return path[path.index(w):] + [w]
                    if state[w] == 0:
                        state[w] = 1
                        path.append(w)
                        stack.append(iter(children[w]))
                        advanced = True
                        break
                if not advanced:
                    state[path.pop()] = 2
                    stack.pop()
        raise AssertionError("no cycle found in cyclic graph")

    def topological_order(self) -> list[int]:
        """Vertex order placing every parent before its children.

        Raises
        ------
        CyclicGraphError
            If the directed part contains a cycle; the error carries one
            offending cycle.
        """
        return list(self._topological_order)

    def is_acyclic(self) -> bool:
        """True iff the directed part admits a topological order."""
        try:
            self._topological_order
        except CyclicGraphError:
            return False
        return True

    def is_bow_free(self) -> bool:
        """True iff no vertex pair carries both a directed and a
        bi-directed edge."""
        as_pairs = {(min(j, i), max(j, i)) for j, i in self.directed}
        return not (as_pairs & self.bidirected)

    def is_bap(self) -> bool:
        """True iff the graph is a bow-free acyclic path diagram."""
        return self.is_acyclic() and self.is_bow_free()

    def is_ancestral(self) -> bool:
        """True iff no edge i <-> j coexists with a directed path j -> ... -> i.

        Requires an acyclic graph.
        """
        order = self._topological_order  # raises on cycles
        pos = {v: k for k, v in enumerate(order)}
        # descendants[v] = vertices reachable by directed paths from v
        desc = [set() for _ in range(self.n_vertices)]
        children = [[] for _ in range(self.n_vertices)]
        for j, i in self.directed:
            children[j].append(i)
        for v in sorted(range(self.n_vertices), key=pos.get, reverse=True):
            for c in children[v]:
                desc[v].add(c)
                desc[v] |= desc[c]
        for i, j in self.bidirected:
            if j in desc[i] or i in desc[j]:
                return False
        return True

    def is_bidirected_chain_graph(self) -> bool:
        """True iff vertices split into components with bi-directed edges
        inside and consistently oriented directed edges between them.

        The components are the connected components of the bi-directed
        part; the check is that no directed edge stays inside a component
        and that the induced component-level directed relation is acyclic.
        """
        comp = self._bidirected_components
        comp_edges = set()
        for j, i in self.directed:
            if comp[j] == comp[i]:
                return False
            comp_edges.add((comp[j], comp[i]))
        n_comp = max(comp) + 1 if self.n_vertices else 0
        quotient = MixedGraph(n_comp, directed=comp_edges)
        return quotient.is_acyclic()

    @cached_property
    def _bidirected_components(self) -> tuple[int, ...]:
        comp = [-1] * self.n_vertices
        cur = 0
        for start in range(self.n_vertices):
            if comp[start] >= 0:
                continue
            stack = [start]
            comp[start] = cur
            while stack:
                v = stack.pop()
                for w in self._spouses[v]:
                    if comp[w] < 0:
                        comp[w] = cur
                        stack.append(w)
            cur += 1
        return tuple(comp)

    # -- misc ---------------------------------------------------------------

    def edge_count(self) -> int:
        return len(self.directed) + len(self.bidirected)

    def relabel(self, mapping: Sequence[int]) -> "MixedGraph":
        """New graph with vertex v renamed to ``mapping[v]``."""
        if sorted(mapping) != list(range(self.n_vertices)):
            raise ValueError("mapping must be a permutation of the vertices")
        names = None
        if self.names is not None:
            names = [""] * self.n_vertices
            for v, m in enumerate(mapping):
                names[m] = self.names[v]
        return MixedGraph(
            self.n_vertices,
            directed=[(mapping[j], mapping[i]) for j, i in self.directed],
            bidirected=[(mapping[i], mapping[j]) for i, j in self.bidirected],
            names=names,
        )

    def __repr__(self):
        return (f"MixedGraph(n_vertices={self.n_vertices}, "
                f"directed={sorted(self.directed)}, "
                f"bidirected={sorted(self.bidirected)})")
