"""Enumerating the non-vacuous CIs of the c-component local Markov property.

For a variable ``X`` and an ancestral c-component ``C`` relative to ``X``
(the c-component of ``X`` inside some ancestral set ``S`` with
``X in S <= V^{<=X}``) the property states::

    X _||_ S+ - Pa(C) | Pa(C) - {X},   S+ = V^{<=X} - De(Spo(C) - Pa(C))

Every CI corresponds to exactly one such ``C``, so listing CIs reduces to
listing ancestral c-components whose witness set ``S+ - Pa(C)`` is non-empty
(admissible ones). :func:`iter_ci` does this with polynomial delay by a
depth-first binary partition of the candidate range ``I <= C <= R``, pruning
every subtree that contains no admissible component.

All sets are bitmasks over the node indices of the graph.
"""

from __future__ import annotations

import json
import time
from collections.abc import Callable, Iterator
from dataclasses import dataclass

from .graph import CausalGraph, GraphError, VariableOrder, bits
from .separation import find_separator


@dataclass(frozen=True, order=True)
class CiStatement:
    """``x _||_ w | z`` with member names sorted."""

    x: str
    w: tuple[str, ...]
    z: tuple[str, ...] = ()

    def __post_init__(self):
        w, z = tuple(sorted(self.w)), tuple(sorted(self.z))
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)
        if self.x in w or self.x in z or set(w) & set(z):
            raise ValueError(f"overlapping sets in CI statement {self}")

    @classmethod
    def from_masks(cls, g: CausalGraph, x: int, w: int, z: int) -> CiStatement:
        return cls(g.names[x], g.names_of(w), g.names_of(z))

    @classmethod
    def parse(cls, line: str) -> CiStatement:
        """Inverse of :meth:`to_text`."""
        head, _, rest = line.partition("_||_")
        wpart, _, zpart = rest.partition("|")
        split = lambda s: tuple(t.strip() for t in s.split(",") if t.strip())  # noqa: E731
        return cls(head.strip(), split(wpart), split(zpart))

    @property
    def vacuous(self) -> bool:
        return not self.w

    def to_text(self) -> str:
        s = f"{self.x} _||_ {','.join(self.w)}"
        if self.z:
            s += f" | {','.join(self.z)}"
        return s

    def to_json(self) -> str:
        return json.dumps({"x": self.x, "w": list(self.w), "z": list(self.z)})

    def masks(self, g: CausalGraph) -> tuple[int, int, int]:
        return g.mask([self.x]), g.mask(self.w), g.mask(self.z)

    def __str__(self) -> str:
        return self.to_text()


# ---------------------------------------------------------------------------
# per-AC quantities


def witness_and_blanket(g: CausalGraph, le_x: int, x: int, c: int) -> tuple[int, int]:
    """(W, Z) of the CI induced by AC ``c``; W may be empty."""
    pa_c = g.parents(c)
    s_plus = le_x & ~g.descendants(g.spouses(c, le_x) & ~pa_c, le_x)
    return s_plus & ~pa_c, pa_c & ~(1 << x)


def is_ac(g: CausalGraph, le_x: int, x: int, c: int) -> bool:
    """Whether ``c`` is an ancestral c-component relative to ``x``.

    ``c`` is one iff it equals the c-component of ``x`` inside ``An(c)``: the
    smallest ancestral set containing ``c`` either induces exactly ``c`` or
    nothing does.
    """
    if not c >> x & 1 or c & ~le_x:
        return False
    return g.c_component(x, g.ancestors(c)) == c


def _check_ac(g: CausalGraph, le_x: int, x: int, c: int) -> None:
    if not is_ac(g, le_x, x, c):
        raise GraphError(
            f"{{{','.join(g.names_of(c))}}} is not an ancestral c-component relative to "
            f"{g.names[x]}"
        )


def ci_from_ac(g: CausalGraph, x: int, order: VariableOrder, c: int) -> CiStatement:
    """The CI invoked by ancestral c-component ``c`` relative to ``x``."""
    le_x = order.upto(x)
    _check_ac(g, le_x, x, c)
    w, z = witness_and_blanket(g, le_x, x, c)
    return CiStatement.from_masks(g, x, w, z)


def is_admissible(g: CausalGraph, x: int, order: VariableOrder, c: int) -> bool:
    le_x = order.upto(x)
    _check_ac(g, le_x, x, c)
    return _admissible(g, le_x, x, c)


def _admissible(g: CausalGraph, le_x: int, x: int, c: int) -> bool:
    return bool(witness_and_blanket(g, le_x, x, c)[0])


def _find_aac(
    g: CausalGraph, le_x: int, x: int, i: int, r: int, rank: tuple[int, ...]
) -> int | None:
    if _admissible(g, le_x, x, i):
        return i
    pa_i = g.parents(i)
    pa_r = g.parents(r)
    cands = g.descendants(g.spouses(i, le_x) & ~pa_i, le_x) & ~(1 << x)
    xm = 1 << x
    for d in sorted(bits(cands), key=rank.__getitem__):
        z = find_separator(g, xm, 1 << d, pa_i, pa_r, within=le_x)
        if z is not None:
            return g.c_component(x, g.ancestors(i | z))
    return None


def find_aac(g: CausalGraph, x: int, order: VariableOrder, i: int, r: int) -> int | None:
    """An admissible AC ``C`` with ``i <= C <= r``, or None if there is none."""
    le_x = order.upto(x)
    _check_ac(g, le_x, x, i)
    _check_ac(g, le_x, x, r)
    if i & ~r:
        raise GraphError("find_aac requires i to be a subset of r")
    return _find_aac(g, le_x, x, i, r, order.position)


# ---------------------------------------------------------------------------
# enumeration


def _iter_ci_x(
    g: CausalGraph,
    le_x: int,
    x: int,
    i: int,
    r: int,
    rank: tuple[int, ...],
    deadline: float | None = None,
) -> Iterator[tuple[int, int, int]]:
    # Explicit stack; the (I, R') child is pushed last so it is expanded first.
    stack = [(i, r)]
    while stack:
        if deadline is not None and time.perf_counter() > deadline:
            raise TimeoutError("enumeration exceeded its time budget")
        i, r = stack.pop()
        if _find_aac(g, le_x, x, i, r, rank) is None:
            continue
        if i == r:
            w, z = witness_and_blanket(g, le_x, x, i)
            yield x, w, z
            continue
        t = r & g.spouses(i, le_x) & ~i
        s = min(bits(t), key=rank.__getitem__)
        i_new = g.c_component(x, g.ancestors(i | 1 << s))
        r_new = g.c_component(x, r & ~g.descendants(1 << s, le_x))
        stack.append((i_new, r))
        stack.append((i, r_new))


def iter_ci_x(
    g: CausalGraph, x: int, order: VariableOrder, i: int, r: int
) -> Iterator[CiStatement]:
    """Non-vacuous CIs for ``x`` whose AC lies between ``i`` and ``r``."""
    le_x = order.upto(x)
    _check_ac(g, le_x, x, i)
    _check_ac(g, le_x, x, r)
    if i & ~r:
        raise GraphError("list_ci_x requires i to be a subset of r")
    for xx, w, z in _iter_ci_x(g, le_x, x, i, r, order.position):
        yield CiStatement.from_masks(g, xx, w, z)


def list_ci_x(
    g: CausalGraph,
    x: int,
    order: VariableOrder,
    i: int,
    r: int,
    sink: Callable[[CiStatement], object],
) -> None:
    for ci in iter_ci_x(g, x, order, i, r):
        sink(ci)


def root_range(g: CausalGraph, x: int, order: VariableOrder) -> tuple[int, int]:
    """(I, R): the smallest and largest ACs relative to ``x``."""
    le_x = order.upto(x)
    return g.c_component(x, g.ancestors(1 << x)), g.c_component(x, le_x)


def iter_ci_masks(
    g: CausalGraph, order: VariableOrder, deadline: float | None = None
) -> Iterator[tuple[int, int, int]]:
    """Like :func:`iter_ci` but yields raw ``(x, w_mask, z_mask)`` triples.

    ``deadline`` is a :func:`time.perf_counter` value; passing it makes the
    generator raise :class:`TimeoutError` once it is exceeded.
    """
    _check_projected(g, order)
    rank = order.position
    for x in order:
        le_x = order.upto(x)
        i, r = g.c_component(x, g.ancestors(1 << x)), g.c_component(x, le_x)
        yield from _iter_ci_x(g, le_x, x, i, r, rank, deadline)


def iter_ci(g: CausalGraph, order: VariableOrder | None = None) -> Iterator[CiStatement]:
    """All non-vacuous C-LMP CIs of ``g`` under ``order``, streamed.

    Statements come grouped by variable in order rank; within a variable they
    follow the depth-first search order with the excluding branch first.
    """
    if order is None:
        order = g.default_order()
    for x, w, z in iter_ci_masks(g, order):
        yield CiStatement.from_masks(g, x, w, z)


def list_ci(
    g: CausalGraph, order: VariableOrder | None, sink: Callable[[CiStatement], object]
) -> None:
    """Push every non-vacuous CI into ``sink`` as soon as it is found."""
    for ci in iter_ci(g, order):
        sink(ci)


def _check_projected(g: CausalGraph, order: VariableOrder) -> None:
    if g.latent_mask:
        raise GraphError("graph has latent nodes; project it first")
    if order.graph is not g and order.graph != g:
        raise GraphError("ordering belongs to a different graph")
