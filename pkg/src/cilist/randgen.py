"""Seeded random semi-Markovian graphs.

Nodes ``V1..Vn`` are ranked by index. Every pair ``i < j`` gets ``Vi -> Vj``
and ``Vi <-> Vj`` independently, so the directed part is acyclic by
construction. All randomness comes from numpy's PCG64 bit generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import CausalGraph, GraphError, latent_project

PRNG_NAME = "numpy PCG64"


@dataclass(frozen=True)
class RandomGraphSpec:
    """Parameters of one random graph.

    When ``md`` is set, exactly ``md`` directed edges are drawn uniformly
    without replacement over the ``n(n-1)/2`` slots and ``pd`` is ignored.
    """

    n: int
    pd: float
    pb: float
    seed: int
    md: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        for name in ("pd", "pb"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.md is not None and not 0 <= self.md <= self.n * (self.n - 1) // 2:
            raise ValueError(f"md={self.md} is not a valid edge count for n={self.n}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def node_names(n: int) -> list[str]:
    return [f"V{i}" for i in range(1, n + 1)]


def random_graph(spec: RandomGraphSpec) -> CausalGraph:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    pairs = list(combinations(range(spec.n), 2))
    draws = rng.random((len(pairs), 2))
    if spec.md is None:
        directed = [p for p, u in zip(pairs, draws[:, 0]) if u < spec.pd]
    else:
        picked = rng.choice(len(pairs), size=spec.md, replace=False) if pairs else []
        directed = [pairs[k] for k in sorted(picked)]
    bidirected = [p for p, u in zip(pairs, draws[:, 1]) if u < spec.pb]
    return CausalGraph(node_names(spec.n), directed, bidirected)


def with_latents(g: CausalGraph, latent: int) -> CausalGraph:
    """Copy of ``g`` with the nodes in mask ``latent`` flagged unobserved."""
    idx = [i for i in range(g.n) if latent >> i & 1 or g.is_latent(i)]
    return CausalGraph(g.names, g.directed_edges, g.bidirected_edges, idx)


def project_latents_fraction(g: CausalGraph, u_percent: float, seed: int) -> CausalGraph:
    """Hide ``floor(u * n / 100)`` uniformly chosen nodes and project them out."""
    if not 0 <= u_percent <= 95:
        raise ValueError("u_percent must lie in [0, 95]")
    k = math.floor(u_percent * g.n / 100)
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = 0
    for i in rng.choice(g.n, size=k, replace=False):
        mask |= 1 << int(i)
    if (mask | g.latent_mask) == g.all_mask:
        raise GraphError("every node would be latent")
    return latent_project(with_latents(g, mask))
