"""Per-timestep interaction graph and pairwise overlap penalties.

Targets within neighbor_radius of each other get an undirected edge. Each
edge carries a log-domain potential -strength * p, where p is the number of
pixels shared by the two oriented rectangles (or that count divided by the
rectangle area in fraction mode). Potentials are never exponentiated on
their own: with the default strength 5000 even a single overlapping pixel
underflows any float, but acceptance ratios only ever need differences of
the exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import PatchDims, rect_overlap_count

OVERLAP_MODES = ("raw-count", "fraction")


@dataclass(frozen=True)
class InteractionParams:
    strength: float = 5000.0
    overlap_mode: str = "raw-count"
    neighbor_radius: float = 64.0
    dims: PatchDims = field(default_factory=PatchDims)

    def __post_init__(self):
        if not (self.strength > 0.0 and math.isfinite(self.strength)):
            raise ValueError(f"interaction strength must be positive, got {self.strength}")
        if self.neighbor_radius <= 0.0:
            raise ValueError(f"neighbor radius must be positive, got {self.neighbor_radius}")
        if self.overlap_mode not in OVERLAP_MODES:
            raise ValueError(f"overlap_mode must be one of {OVERLAP_MODES}, got {self.overlap_mode!r}")
        self.dims.validate()


class MRFGraph:
    """Undirected proximity graph over target indices, fixed for one timestep."""

    __slots__ = ("n", "edges", "adjacency")

    def __init__(self, n: int, edges):
        if n < 1:
            raise ValueError("graph needs at least one target")
        seen = set()
        adj: list[list[int]] = [[] for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-edge on target {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            adj[key[0]].append(key[1])
            adj[key[1]].append(key[0])
        self.n = n
        self.edges = frozenset(seen)
        self.adjacency = tuple(tuple(sorted(nbrs)) for nbrs in adj)

    def __repr__(self) -> str:
        return f"MRFGraph(n={self.n}, edges={sorted(self.edges)})"


def build_mrf(reference_states, params: InteractionParams) -> MRFGraph:
    """Connect every pair of reference poses within neighbor_radius."""
    arr = np.asarray(reference_states, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError(f"expected (n, >=2) pose array, got shape {arr.shape}")
    n = arr.shape[0]
    edges = []
    r2 = params.neighbor_radius**2
    for i in range(n):
        d = arr[i + 1 :, :2] - arr[i, :2]
        close = np.nonzero(d[:, 0] ** 2 + d[:, 1] ** 2 <= r2)[0]
        edges.extend((i, i + 1 + int(k)) for k in close)
    return MRFGraph(n, edges)


def log_potential(a, b, params: InteractionParams) -> float:
    """Log pairwise potential of two poses; 0 when disjoint, negative otherwise."""
    p = rect_overlap_count(a, b, params.dims)
    if params.overlap_mode == "fraction":
        return -params.strength * (p / params.dims.area)
    return -params.strength * float(p)


def local_log_interaction(particle, graph: MRFGraph, i: int, params: InteractionParams) -> float:
    """Sum of edge potentials incident to target i at the particle's poses."""
    if not (0 <= i < graph.n):
        raise IndexError(f"target index {i} out of range for n={graph.n}")
    targets = particle.targets
    return float(sum(log_potential(targets[i], targets[j], params) for j in graph.adjacency[i]))


def local_log_interaction_at(state_i, states, neighbors, params: InteractionParams) -> float:
    """Incident potential sum with target i evaluated at state_i.

    Array-level variant used in the sampler's inner loop: states is the
    (n, 3) pose array of the current joint sample, neighbors the index
    tuple from an MRFGraph adjacency row.
    """
    total = 0.0
    for j in neighbors:
        total += log_potential(state_i, states[j], params)
    return total
