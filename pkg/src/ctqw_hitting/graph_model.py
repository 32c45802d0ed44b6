"""Undirected graphs, their Laplacian Hamiltonians and complement analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ContractViolation, GraphParseError

__all__ = [
    "Graph",
    "FIXTURES",
    "parse_edge_list",
    "hamiltonian",
    "complement",
    "complete_graph",
    "connected_components",
    "complement_witness",
    "random_connected_graph",
    "uniform_state",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. n-1``.

    Edges are stored as sorted ``(u, v)`` tuples with ``u < v``.
    """

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ContractViolation(f"vertex count must be >= 1, got {self.n}")
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise ContractViolation(f"invalid edge {(u, v)} for n={self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> Graph:
        normalized = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ContractViolation(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ContractViolation(f"edge {(u, v)} out of range for n={n}")
            normalized.add((min(u, v), max(u, v)))
        return cls(n, frozenset(normalized))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_edge_list(self) -> str:
        lines = [str(self.n)] + [f"{u} {v}" for u, v in self.sorted_edges()]
        return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse the plain-text edge-list format.

    The first non-comment line holds the vertex count; every following
    non-comment line holds one edge ``u v`` (0-based). ``#`` starts a comment.
    Duplicate edges, in either orientation, are merged.

    Raises
    ------
    GraphParseError
        On a malformed line, an out-of-range index or a self-loop. The error
        names the offending line number.
    """
    n: int | None = None
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 1:
                raise GraphParseError(f"expected vertex count, got {raw.strip()!r}", lineno)
            try:
                n = int(fields[0])
            except ValueError:
                raise GraphParseError(f"vertex count is not an integer: {fields[0]!r}", lineno) from None
            if n < 1:
                raise GraphParseError(f"vertex count must be >= 1, got {n}", lineno)
            continue
        if len(fields) != 2:
            raise GraphParseError(f"expected 'u v', got {raw.strip()!r}", lineno)
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphParseError(f"vertex index is not an integer: {raw.strip()!r}", lineno) from None
        if u < 0 or v < 0 or u >= n or v >= n:
            raise GraphParseError(f"vertex index out of range [0, {n}): {raw.strip()!r}", lineno)
        if u == v:
            raise GraphParseError(f"self-loop at vertex {u}", lineno)
        edges.add((min(u, v), max(u, v)))
    if n is None:
        raise GraphParseError("missing vertex count")
    return Graph(n, frozenset(edges))


def hamiltonian(g: Graph) -> np.ndarray:
    """Walk Hamiltonian ``H = D - A`` (negative Laplacian, unit hopping rate)."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset((u, v) for u in range(n) for v in range(u + 1, n)))


def complement(g: Graph) -> Graph:
    full = complete_graph(g.n).edges
    return Graph(g.n, full - g.edges)


def connected_components(g: Graph) -> list[list[int]]:
    """Maximal connected vertex sets, each sorted, ordered by smallest member."""
    neighbours: list[list[int]] = [[] for _ in range(g.n)]
    for u, v in g.edges:
        neighbours[u].append(v)
        neighbours[v].append(u)
    seen = [False] * g.n
    components = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        stack, comp = [start], []
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in neighbours[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        components.append(sorted(comp))
    return components


def uniform_state(n: int) -> np.ndarray:
    """Normalized all-ones vector; a zero-energy eigenvector of every graph Hamiltonian."""
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def complement_witness(g: Graph, v_f: int) -> np.ndarray | None:
    """State on ``g`` that never reaches ``v_f``, built from a disconnected complement.

    If the complement splits into components and a component not containing
    ``v_f`` has at least two vertices, returns ``(|a> - |b>)/sqrt(2)``. That state is orthogonal to the
    uniform state, hence an eigenvector of the complete-graph Hamiltonian, and
    its amplitude at ``v_f`` stays zero for all times. Returns None otherwise.

    The first such component (ordered by smallest member) is used, and within
    it the lexicographically largest pair ``a < b``, i.e. its two highest
    indices.
    """
    if not 0 <= v_f < g.n:
        raise ContractViolation(f"final vertex {v_f} out of range for n={g.n}")
    if len(connected_components(g)) != 1:
        raise ContractViolation("complement criterion requires a connected graph")
    comps = connected_components(complement(g))
    if len(comps) < 2:
        return None
    for comp in comps:
        if v_f in comp or len(comp) < 2:
            continue
        a, b = comp[-2], comp[-1]
        psi = np.zeros(g.n, dtype=complex)
        psi[a], psi[b] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        return psi
    return None


def random_connected_graph(n: int, rng: np.random.Generator, p: float = 0.5) -> Graph:
    """Random spanning tree plus independent extra edges with probability ``p``."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        u, v = int(order[k]), int(order[rng.integers(k)])
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    return Graph(n, frozenset(edges))


# Example graphs with the usual vertex labels v1..vn mapped to 0..n-1.
FIXTURES: dict[str, Graph] = {
    "K2": Graph.from_edges(2, [(0, 1)]),
    "L3": Graph.from_edges(3, [(0, 1), (1, 2)]),
    "K3": Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)]),
    "L4": Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)]),
    "KL31": Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (1, 3)]),
    "S4": Graph.from_edges(4, [(0, 1), (1, 2), (1, 3)]),
}
