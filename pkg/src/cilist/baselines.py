"""Reference enumerators used as baselines and as test oracles.

* :func:`iter_gmp` lists every d-separation statement of the graph (the
  global Markov property), one per unordered pair ``{X, Y}``.
* :func:`iter_ci_bf` lists the ordered local Markov property by walking all
  ancestral sets and keeping the maximal ones.
* :func:`brute_force_acs` collects ancestral c-components by walking all
  ancestral sets.

All three are exponential by nature and guarded by node-count caps.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Iterator
from dataclasses import dataclass

from .clmp import CiStatement, witness_and_blanket
from .graph import CausalGraph, GraphError, VariableOrder, bits, popcount
from .separation import reachable

DEFAULT_GMP_CAP = int(os.environ.get("CILIST_GMP_CAP", "14"))
DEFAULT_BF_CAP = int(os.environ.get("CILIST_BF_CAP", "20"))
DEFAULT_AC_CAP = 16


class CapExceeded(RuntimeError):
    """Refusal to run an exponential enumeration on a graph over the cap."""

    def __init__(self, what: str, n: int, cap: int, candidates: int | None = None):
        self.n, self.cap, self.candidates = n, cap, candidates
        msg = f"{what}: graph has {n} nodes, cap is {cap}"
        if candidates is not None:
            msg += f" ({candidates} candidate triples)"
        super().__init__(msg)


def gmp_candidate_count(n: int) -> int:
    """Number of disjoint (X, Y, Z) with X, Y non-empty, counted once per {X, Y}."""
    return (4**n + 2**n) // 2 - 3**n


# ---------------------------------------------------------------------------
# global Markov property


def _reach_table(g: CausalGraph, z: int) -> list[int]:
    return [0 if z >> v & 1 else reachable(g, 1 << v, z) for v in range(g.n)]


def _subsets(mask: int) -> Iterator[int]:
    """Non-empty subsets of ``mask``."""
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def _check_gmp(g: CausalGraph, cap: int | None) -> None:
    if g.latent_mask:
        raise GraphError("graph has latent nodes; project it first")
    cap = DEFAULT_GMP_CAP if cap is None else cap
    if g.n > cap:
        raise CapExceeded("listgmp", g.n, cap, gmp_candidate_count(g.n))


def _canon_key(g: CausalGraph, m: int) -> tuple[str, ...]:
    return tuple(sorted(g.names[i] for i in bits(m)))


def iter_gmp_masks(g: CausalGraph, cap: int | None = None) -> Iterator[tuple[int, int, int]]:
    """(X, Y, Z) masks with X d-separated from Y given Z, one per unordered pair.

    Of the two orientations only the one whose sorted member names compare
    smaller on the X side is kept.
    """
    _check_gmp(g, cap)
    full = g.all_mask
    for z in _subsets_with_empty(full):
        reach = _reach_table(g, z)
        free = full & ~z
        for x in _subsets(free):
            connected = 0
            for v in bits(x):
                connected |= reach[v]
            open_y = free & ~x & ~connected
            kx = _canon_key(g, x)
            for y in _subsets(open_y):
                if kx < _canon_key(g, y):
                    yield x, y, z


def _subsets_with_empty(mask: int) -> Iterator[int]:
    yield 0
    yield from _subsets(mask)


def count_gmp(g: CausalGraph, cap: int | None = None) -> int:
    """Number of statements :func:`iter_gmp` would emit, without listing them.

    Counts ordered pairs per conditioning set in closed form and halves the
    total (d-separation is symmetric and X, Y are disjoint so no pair is its
    own mirror image).
    """
    _check_gmp(g, cap)
    full = g.all_mask
    ordered = 0
    for z in _subsets_with_empty(full):
        reach = _reach_table(g, z)
        free = full & ~z
        for x in _subsets(free):
            connected = 0
            for v in bits(x):
                connected |= reach[v]
            ordered += (1 << popcount(free & ~x & ~connected)) - 1
    return ordered // 2


def iter_gmp(g: CausalGraph, cap: int | None = None) -> Iterator[tuple[tuple[str, ...], ...]]:
    """GMP statements as ``(X names, Y names, Z names)``."""
    for x, y, z in iter_gmp_masks(g, cap):
        yield g.names_of(x), g.names_of(y), g.names_of(z)


def list_gmp(g: CausalGraph, sink: Callable[[tuple], object], cap: int | None = None) -> None:
    for stmt in iter_gmp(g, cap):
        sink(stmt)


def format_gmp(stmt: tuple[tuple[str, ...], ...]) -> str:
    x, y, z = stmt
    s = f"{','.join(x)} _||_ {','.join(y)}"
    return s + (f" | {','.join(z)}" if z else "")


# ---------------------------------------------------------------------------
# ancestral sets and the ordered local Markov property


@dataclass(frozen=True)
class MarkovBlanketResult:
    x: int
    s: int
    mb: int


def iter_ancestral_sets(g: CausalGraph, x: int, order: VariableOrder) -> Iterator[int]:
    """Ancestral sets S with ``x in S <= V^{<=x}``, each exactly once.

    Backtracks over the remaining nodes in order rank: a node may join only
    once all its parents have, so every branch ends in a valid set.
    """
    le_x = order.upto(x)
    base = g.ancestors(1 << x)
    rest = [v for v in order.sequence[: order.position[x]] if not base >> v & 1]
    pa = g._pa

    def walk(k: int, s: int) -> Iterator[int]:
        if k == len(rest):
            yield s
            return
        v = rest[k]
        yield from walk(k + 1, s)
        if pa[v] & ~s == 0:
            yield from walk(k + 1, s | 1 << v)

    for s in walk(0, base):
        assert s & ~le_x == 0
        yield s


def _check_mb_args(g: CausalGraph, x: int, s: int, order: VariableOrder | None) -> int:
    if not s >> x & 1:
        raise GraphError("s must contain x")
    if not g.is_ancestral(s):
        raise GraphError("s is not ancestral")
    le_x = order.upto(x) if order is not None else g.all_mask
    if s & ~le_x:
        raise GraphError("s must lie within V^{<=x}")
    return le_x


def markov_blanket(g: CausalGraph, x: int, s: int, order: VariableOrder | None = None) -> int:
    """Parents (within G_S) of the c-component of x in G_S, minus x."""
    _check_mb_args(g, x, s, order)
    c = g.c_component(x, s)
    return g.parents(c, s) & ~(1 << x)


def is_maximal_ancestral(g: CausalGraph, x: int, s: int, order: VariableOrder) -> bool:
    """Whether ``s`` is the largest ancestral set inducing its Markov blanket."""
    le_x = _check_mb_args(g, x, s, order)
    c = g.c_component(x, s)
    mb = g.parents(c, s) & ~(1 << x)
    h = g.spouses(c) & ~(mb | 1 << x)
    return s == le_x & ~g.descendants(h)


def iter_ci_bf(
    g: CausalGraph,
    order: VariableOrder | None = None,
    include_vacuous: bool = True,
    cap: int | None = None,
) -> Iterator[CiStatement]:
    """CIs of the ordered local Markov property, by exhaustive search."""
    if g.latent_mask:
        raise GraphError("graph has latent nodes; project it first")
    cap = DEFAULT_BF_CAP if cap is None else cap
    if g.n > cap:
        raise CapExceeded("listcibf", g.n, cap)
    if order is None:
        order = g.default_order()
    for x in order:
        for s, mb in _maximal_sets(g, x, order):
            w = s & ~(mb | 1 << x)
            if w or include_vacuous:
                yield CiStatement.from_masks(g, x, w, mb)


def _maximal_sets(g: CausalGraph, x: int, order: VariableOrder) -> Iterator[tuple[int, int]]:
    le_x = order.upto(x)
    xm = 1 << x
    for s in iter_ancestral_sets(g, x, order):
        c = g.c_component(x, s)
        mb = g.parents(c, s) & ~xm
        h = g.spouses(c) & ~(mb | xm)
        if s == le_x & ~g.descendants(h):
            yield s, mb


def markov_blanket_results(g: CausalGraph, order: VariableOrder) -> Iterator[MarkovBlanketResult]:
    """(x, S+, mb) for every maximal ancestral set, in emission order."""
    for x in order:
        for s, mb in _maximal_sets(g, x, order):
            yield MarkovBlanketResult(x, s, mb)


def list_ci_bf(g, order, sink, include_vacuous: bool = True, cap: int | None = None) -> None:
    for ci in iter_ci_bf(g, order, include_vacuous, cap):
        sink(ci)


def brute_force_acs(
    g: CausalGraph, x: int, order: VariableOrder, cap: int = DEFAULT_AC_CAP
) -> set[int]:
    """Every ancestral c-component relative to ``x``, by exhaustive search."""
    if g.n > cap:
        raise CapExceeded("brute_force_acs", g.n, cap)
    return {g.c_component(x, s) for s in iter_ancestral_sets(g, x, order)}


def oracle_ci_set(g: CausalGraph, order: VariableOrder, include_vacuous: bool = False) -> set:
    """C-LMP CIs built directly from the definition over brute-forced ACs."""
    out = set()
    for x in order:
        le_x = order.upto(x)
        for c in brute_force_acs(g, x, order):
            w, z = witness_and_blanket(g, le_x, x, c)
            if w or include_vacuous:
                out.add(CiStatement.from_masks(g, x, w, z))
    return out
