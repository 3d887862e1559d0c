"""Semi-Markovian causal graphs.

Nodes are dense integer indices assigned in declaration order. Every node set
handled by this package is a Python ``int`` used as a bitmask: bit ``i`` set
means node ``i`` is a member. Bitmasks have no size limit, compare
structurally, and make union/intersection/difference single operations.

Kinship queries follow the convention that ``Pa``, ``An`` and ``De`` include
the argument set itself.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from functools import cached_property


class GraphError(ValueError):
    """Raised for malformed graphs, unknown nodes and invalid orderings."""


# ---------------------------------------------------------------------------
# bitmask helpers


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of set bits in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def _union(table: Sequence[int], mask: int) -> int:
    out = 0
    for i in bits(mask):
        out |= table[i]
    return out


def _closure(table: Sequence[int], mask: int, within: int = -1) -> int:
    """Reflexive-transitive closure of ``mask`` along ``table`` inside ``within``."""
    seen = mask & within
    frontier = seen
    while frontier:
        nxt = _union(table, frontier) & within & ~seen
        seen |= nxt
        frontier = nxt
    return seen


# ---------------------------------------------------------------------------


class CausalGraph:
    """Immutable graph with directed and bidirected edges.

    Parameters
    ----------
    nodes : sequence of str
        Unique, non-empty node names. Index ``i`` is ``nodes[i]``.
    directed : iterable of (int, int)
        Directed edges ``(tail, head)``.
    bidirected : iterable of (int, int)
        Bidirected edges, unordered.
    latent : iterable of int, optional
        Indices of unobserved nodes. Only meaningful before projection.

    Raises
    ------
    GraphError
        On duplicate names, self-loops, duplicate edges, out-of-range indices
        or a directed cycle.
    """

    def __init__(
        self,
        nodes: Sequence[str],
        directed: Iterable[tuple[int, int]] = (),
        bidirected: Iterable[tuple[int, int]] = (),
        latent: Iterable[int] = (),
    ):
        names = tuple(nodes)
        for name in names:
            if not isinstance(name, str) or not name:
                raise GraphError(f"invalid node name {name!r}")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise GraphError(f"duplicate node names: {', '.join(dup)}")
        n = len(names)
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

        pa = [0] * n
        ch = [0] * n
        sp = [0] * n
        dir_edges: list[tuple[int, int]] = []
        for a, b in directed:
            self._check_index(a)
            self._check_index(b)
            if a == b:
                raise GraphError(f"self-loop on {names[a]}")
            if pa[b] >> a & 1:
                raise GraphError(f"duplicate edge {names[a]} -> {names[b]}")
            pa[b] |= 1 << a
            ch[a] |= 1 << b
            dir_edges.append((a, b))
        bi_edges: list[tuple[int, int]] = []
        for a, b in bidirected:
            self._check_index(a)
            self._check_index(b)
            if a == b:
                raise GraphError(f"self-loop on {names[a]}")
            if sp[a] >> b & 1:
                raise GraphError(f"duplicate edge {names[a]} <-> {names[b]}")
            sp[a] |= 1 << b
            sp[b] |= 1 << a
            bi_edges.append((min(a, b), max(a, b)))
        lat = 0
        for i in latent:
            self._check_index(i)
            lat |= 1 << i

        self._pa = tuple(pa)
        self._ch = tuple(ch)
        self._sp = tuple(sp)
        self._directed = tuple(sorted(dir_edges))
        self._bidirected = tuple(sorted(bi_edges))
        self._latent = lat
        self._topo = self._toposort()

    def _check_index(self, i: int) -> None:
        if not isinstance(i, int) or not 0 <= i < len(self._names):
            raise GraphError(f"node index {i!r} out of range")

    def _toposort(self) -> tuple[int, ...]:
        # Kahn's algorithm; ties go to the lexicographically smallest name.
        import heapq

        indeg = [popcount(p) for p in self._pa]
        heap = [(self._names[i], i) for i in range(self.n) if indeg[i] == 0]
        heapq.heapify(heap)
        out = []
        while heap:
            _, v = heapq.heappop(heap)
            out.append(v)
            for c in bits(self._ch[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, (self._names[c], c))
        if len(out) != self.n:
            cyc = [self._names[i] for i in range(self.n) if indeg[i] > 0]
            raise GraphError(f"directed cycle through {', '.join(sorted(cyc))}")
        return tuple(out)

    # -- basic accessors -----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._names)

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def directed_edges(self) -> tuple[tuple[int, int], ...]:
        return self._directed

    @property
    def bidirected_edges(self) -> tuple[tuple[int, int], ...]:
        return self._bidirected

    @property
    def latent_mask(self) -> int:
        return self._latent

    @property
    def all_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def observed_mask(self) -> int:
        return self.all_mask & ~self._latent

    def is_latent(self, i: int) -> bool:
        return bool(self._latent >> i & 1)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def mask(self, names: Iterable[str] | str) -> int:
        """Bitmask for node names (a comma-separated string is accepted)."""
        if isinstance(names, str):
            names = [s.strip() for s in names.split(",") if s.strip()]
        return mask_of(self.index(nm) for nm in names)

    def names_of(self, mask: int) -> tuple[str, ...]:
        """Member names of ``mask`` sorted by name."""
        self._check_mask(mask)
        return tuple(sorted(self._names[i] for i in bits(mask)))

    def _check_mask(self, mask: int) -> None:
        if mask < 0 or mask >> self.n:
            raise GraphError(f"node set {mask:#x} has members outside the graph")

    def parents_of(self, i: int) -> int:
        """Strict parents of a single node (excludes the node)."""
        return self._pa[i]

    def children_of(self, i: int) -> int:
        return self._ch[i]

    def spouses_of(self, i: int) -> int:
        return self._sp[i]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return (
            self._names == other._names
            and self._directed == other._directed
            and self._bidirected == other._bidirected
            and self._latent == other._latent
        )

    def __hash__(self) -> int:
        return hash((self._names, self._directed, self._bidirected, self._latent))

    def __repr__(self) -> str:
        return (
            f"CausalGraph(n={self.n}, directed={len(self._directed)}, "
            f"bidirected={len(self._bidirected)}, latent={popcount(self._latent)})"
        )

    # -- kinship ---------------------------------------------------------------

    def parents(self, x: int, within: int = -1) -> int:
        """Pa(x) including x, optionally in the subgraph induced on ``within``."""
        self._check_mask(x)
        return (_union(self._pa, x) | x) & within

    def children(self, x: int, within: int = -1) -> int:
        self._check_mask(x)
        return (_union(self._ch, x) | x) & within

    def ancestors(self, x: int, within: int = -1) -> int:
        self._check_mask(x)
        return _closure(self._pa, x, within)

    def descendants(self, x: int, within: int = -1) -> int:
        self._check_mask(x)
        return _closure(self._ch, x, within)

    def nondescendants(self, x: int) -> int:
        return self.all_mask & ~self.descendants(x)

    def spouses(self, x: int, within: int = -1) -> int:
        """Union of bidirected neighbours of members of ``x``; x not added."""
        self._check_mask(x)
        return _union(self._sp, x) & within

    def c_component(self, x: int, within: int = -1) -> int:
        """C-component of node index ``x`` in the subgraph induced on ``within``.

        Breadth-first search over bidirected edges only, O(n + m).
        """
        self._check_index(x)
        if not within >> x & 1:
            raise GraphError(f"{self._names[x]} is not in the restricting set")
        seen = 1 << x
        queue = deque([x])
        while queue:
            v = queue.popleft()
            new = self._sp[v] & within & ~seen
            seen |= new
            queue.extend(bits(new))
        return seen

    def c_components(self) -> list[int]:
        """Partition of all nodes into c-components (ascending first member)."""
        left = self.all_mask
        out = []
        while left:
            v = (left & -left).bit_length() - 1
            c = self.c_component(v)
            out.append(c)
            left &= ~c
        return out

    def is_ancestral(self, s: int) -> bool:
        return self.ancestors(s) == s

    def induced_subgraph(self, s: int) -> CausalGraph:
        """Subgraph on ``s``; nodes keep their relative order and names."""
        self._check_mask(s)
        keep = list(bits(s))
        remap = {old: new for new, old in enumerate(keep)}
        return CausalGraph(
            [self._names[i] for i in keep],
            [(remap[a], remap[b]) for a, b in self._directed if a in remap and b in remap],
            [(remap[a], remap[b]) for a, b in self._bidirected if a in remap and b in remap],
            [remap[i] for i in bits(self._latent & s)],
        )

    @cached_property
    def max_c_component_size(self) -> int:
        return max((popcount(c) for c in self.c_components()), default=0)

    # -- orders ----------------------------------------------------------------

    def default_order(self) -> VariableOrder:
        """Topological order of observed nodes, ties broken by name."""
        return VariableOrder(self, [i for i in self._topo if not self.is_latent(i)])

    def order_from_names(self, names: Sequence[str]) -> VariableOrder:
        return VariableOrder(self, [self.index(nm) for nm in names])

    # -- augmentation ------------------------------------------------------------

    @cached_property
    def augmented(self) -> CausalGraph:
        """DAG with every ``A <-> B`` replaced by a fresh parent ``U -> A, U -> B``.

        Original nodes keep their indices; fresh nodes are appended after them
        and flagged latent.
        """
        names = list(self._names)
        taken = set(names)
        directed = list(self._directed)
        fresh = []
        for a, b in self._bidirected:
            base = f"U[{self._names[a]},{self._names[b]}]"
            name = base
            k = 1
            while name in taken:
                name = f"{base}#{k}"
                k += 1
            taken.add(name)
            u = len(names)
            names.append(name)
            fresh.append(u)
            directed += [(u, a), (u, b)]
        return CausalGraph(names, directed, (), list(bits(self._latent)) + fresh)


class VariableOrder:
    """Total order over the observed nodes of a graph, checked topological.

    Raises
    ------
    GraphError
        If the sequence is not a permutation of the observed nodes, contains a
        latent node, or places a child before one of its parents.
    """

    def __init__(self, graph: CausalGraph, sequence: Sequence[int]):
        seq = tuple(sequence)
        for i in seq:
            graph._check_index(i)
            if graph.is_latent(i):
                raise GraphError(f"latent node {graph.names[i]} in ordering")
        if len(set(seq)) != len(seq):
            raise GraphError("ordering repeats a node")
        if mask_of(seq) != graph.observed_mask:
            missing = graph.names_of(graph.observed_mask & ~mask_of(seq))
            raise GraphError(f"ordering does not cover observed nodes: missing {', '.join(missing)}")
        self.graph = graph
        self.sequence = seq
        pos = [-1] * graph.n
        for r, i in enumerate(seq):
            pos[i] = r
        self.position = tuple(pos)
        if not validate_order(graph, seq):
            raise GraphError("ordering is not consistent with the directed edges")
        prefix = []
        acc = 0
        for i in seq:
            acc |= 1 << i
            prefix.append(acc)
        self._prefix = tuple(prefix)

    def upto(self, x: int) -> int:
        """Mask of V^{<=x}: x and every node ordered before it."""
        return self._prefix[self.position[x]]

    def names(self) -> list[str]:
        return [self.graph.names[i] for i in self.sequence]

    def __iter__(self) -> Iterator[int]:
        return iter(self.sequence)

    def __len__(self) -> int:
        return len(self.sequence)

    def __repr__(self) -> str:
        return f"VariableOrder({' < '.join(self.names())})"


def validate_order(graph: CausalGraph, sequence: Sequence[int]) -> bool:
    """True iff every directed edge between ordered nodes points forward."""
    pos = {v: r for r, v in enumerate(sequence)}
    return all(pos[a] < pos[b] for a, b in graph.directed_edges if a in pos and b in pos)


def latent_project(graph: CausalGraph) -> CausalGraph:
    """Project out latent nodes, keeping observed d-separations intact.

    ``A -> B`` appears iff there is a directed path from A to B whose interior
    is latent. ``A <-> B`` appears iff some path between them has arrowheads at
    both ends and only latent non-colliders inside: an existing ``A <-> B``,
    a latent common ancestor reached through latent chains, or a bidirected
    edge whose endpoints reach A and B through latent chains.
    """
    lat = graph.latent_mask
    if not lat:
        return graph
    n = graph.n
    # reach[v]: observed nodes reachable from v by a directed path with a
    # latent interior (for observed v only v itself counts as "reached").
    reach = [0] * n
    for v in range(n):
        if not lat >> v & 1:
            reach[v] = 1 << v
            continue
        down = _closure(graph._ch, 1 << v, lat)
        reach[v] = _union(graph._ch, down) & ~lat
    keep = list(bits(graph.observed_mask))
    remap = {old: new for new, old in enumerate(keep)}

    directed = set()
    for a in keep:
        for c in bits(graph.children_of(a)):
            for b in bits(reach[c]):
                if b != a:
                    directed.add((remap[a], remap[b]))
    bidirected = set()

    def link(ma: int, mb: int) -> None:
        for a in bits(ma):
            for b in bits(mb):
                if a != b:
                    bidirected.add((min(remap[a], remap[b]), max(remap[a], remap[b])))

    for v in bits(lat):
        # a fork needs two different first steps out of the latent
        kids = [reach[c] for c in bits(graph.children_of(v))]
        for i in range(len(kids)):
            for j in range(i + 1, len(kids)):
                link(kids[i], kids[j])
    for a, b in graph.bidirected_edges:
        link(reach[a], reach[b])
    return CausalGraph(
        [graph.names[i] for i in keep],
        sorted(directed),
        sorted(bidirected),
    )
