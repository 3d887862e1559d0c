"""d-separation and constrained separator construction.

Bidirected edges are handled by running Bayes-Ball on the augmented DAG in
which every ``A <-> B`` becomes ``A <- U -> B`` for a fresh latent ``U``.
"""

from __future__ import annotations

from .graph import CausalGraph, GraphError, _closure, bits


def augment(g: CausalGraph) -> CausalGraph:
    """Replace bidirected edges by explicit latent common causes."""
    if not g.bidirected_edges:
        return g
    return g.augmented


def reachable(g: CausalGraph, x: int, z: int, within: int = -1) -> int:
    """Nodes d-connected to some member of ``x`` given ``z``.

    Bayes-Ball on ``augment(g)`` restricted to the original nodes in
    ``within``; runs in O(n + m). Members of ``z`` are never reported. The
    result includes ``x`` itself.
    """
    a = augment(g)
    n0 = g.n
    if within == -1:
        allowed = a.all_mask
    else:
        # fresh confounders come along with the nodes they join
        allowed = within & g.all_mask
        for k, (p, q) in enumerate(g.bidirected_edges):
            if within >> p & 1 and within >> q & 1:
                allowed |= 1 << (n0 + k)
    pa = a._pa
    ch = a._ch
    z &= allowed
    anc_z = _closure(pa, z, allowed)

    visited_up = 0  # ball arrived from a child, may travel anywhere
    visited_down = 0  # ball arrived from a parent
    up = x & allowed
    down = 0
    while up or down:
        nxt_up = 0
        nxt_down = 0
        for v in bits(up):
            if not z >> v & 1:
                nxt_up |= pa[v]
                nxt_down |= ch[v]
        for v in bits(down):
            if not z >> v & 1:
                nxt_down |= ch[v]
            if anc_z >> v & 1:
                nxt_up |= pa[v]
        visited_up |= up
        visited_down |= down
        up = nxt_up & allowed & ~visited_up
        down = nxt_down & allowed & ~visited_down
    return (visited_up | visited_down) & ~z & g.all_mask


def d_separated(g: CausalGraph, x: int, y: int, z: int = 0, within: int = -1) -> bool:
    """True iff ``z`` d-separates ``x`` from ``y``.

    Raises
    ------
    GraphError
        If ``x`` or ``y`` is empty or the three sets overlap.
    """
    for m in (x, y, z):
        g._check_mask(m)
    if not x or not y:
        raise GraphError("d-separation query needs non-empty x and y")
    if x & y or x & z or y & z:
        raise GraphError("x, y and z must be pairwise disjoint")
    return not reachable(g, x, z, within) & y


def find_separator(
    g: CausalGraph, x: int, y: int, i: int, r: int, within: int = -1
) -> int | None:
    """Separator Z of x and y with ``i - (x|y) <= Z <= r - (x|y)``, or None.

    Tries the single candidate ``An(x | y | i) & (r - (x | y))``; if that fails
    to separate, no set in the range does.
    """
    if i & ~r:
        raise GraphError("find_separator requires i to be a subset of r")
    r_prime = r & ~(x | y)
    z = g.ancestors(x | y | i, within) & r_prime
    if x & y:
        return None
    if d_separated(g, x, y, z, within):
        return z
    return None
