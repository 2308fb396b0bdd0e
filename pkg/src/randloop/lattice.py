"""Finite graphs on which both the loop model and the quantum models live.

Vertices are dense integer indices 0..n-1.  Edges are unordered pairs; the
edge list is a multiset, so parallel edges are kept (each neighbor relation
carries its own Poisson process).  Torus sites are enumerated in row-major
order so that identical specs always produce identical orderings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise GraphError("graph needs at least one vertex")
        for x, y in self.edges:
            if x == y:
                raise GraphError(f"self-loop edge {{{x},{x}}} not allowed")
            if not (0 <= x < self.n_vertices and 0 <= y < self.n_vertices):
                raise GraphError(f"edge ({x},{y}) references unknown vertex")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays (edge_x, edge_y), one entry per edge."""
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        e = np.asarray(self.edges, dtype=np.int64)
        return np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1])


def chain(n: int, periodic: bool = False) -> Graph:
    """A 1d chain of n sites, open or periodic.

    chain(2, periodic=True) keeps both parallel edges, consistent with the
    torus convention at side length 2.
    """
    if n < 1:
        raise GraphError("chain needs n >= 1")
    edges = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        if n == 1:
            raise GraphError("periodic chain needs n >= 2")
        if n == 2:
            edges = [(0, 1), (1, 0)]
        else:
            edges.append((n - 1, 0))
    return Graph(n, tuple(edges), {"kind": "chain", "n": n, "periodic": periodic})


def torus(*dims: int) -> Graph:
    """A d-dimensional torus with side lengths dims, sites in row-major order.

    For every site and every dimension one wrap-around edge in the positive
    direction is emitted; at side length 2 this produces both parallel edges
    for each neighbor pair.
    """
    if len(dims) == 0:
        raise GraphError("torus needs at least one dimension")
    for L in dims:
        if L < 2:
            raise GraphError("torus side lengths must be >= 2")
    n = int(np.prod(dims))
    strides = np.ones(len(dims), dtype=np.int64)
    for i in range(len(dims) - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]
    edges = []
    for site in range(n):
        coords = [(site // strides[i]) % dims[i] for i in range(len(dims))]
        for i in range(len(dims)):
            nb = site + ((coords[i] + 1) % dims[i] - coords[i]) * strides[i]
            edges.append((site, int(nb)))
    return Graph(n, tuple(edges), {"kind": "torus", "dims": tuple(dims)})


def from_edges(n_vertices: int, edges) -> Graph:
    """Graph from an explicit edge list (validated, duplicates kept)."""
    return Graph(n_vertices, tuple((int(x), int(y)) for x, y in edges),
                 {"kind": "explicit"})


def build_graph(spec: dict) -> Graph:
    """Build a graph from a run-configuration spec.

    spec["kind"] is one of "chain", "torus", "explicit".
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise GraphError("graph spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind == "chain":
        return chain(int(spec["n"]), bool(spec.get("periodic", False)))
    if kind == "torus":
        return torus(*[int(L) for L in spec["dims"]])
    if kind == "explicit":
        return from_edges(int(spec["n_vertices"]), spec["edges"])
    raise GraphError(f"unknown graph kind {kind!r}")
