"""Schreier graphs of group actions: balls, layers, growth and spanning trees.

An *action* is any object with a ``letters`` tuple (symmetric alphabet, see
:mod:`lefgrowth.groupkit`), a ``base`` point and an ``act(point, letter)``
method.  Actions defined only on a finite window raise :class:`BoundaryError`
when asked about a point whose image is unknown.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

from .groupkit import (
    FinSuppPerm,
    FreeWord,
    Letter,
    letter_name,
    letters_of_rank,
    point_key,
)

EXIT = "exit"


class BoundaryError(ValueError):
    """A query left the finite window on which an action is known."""


# ---------------------------------------------------------------------------
# Concrete actions
# ---------------------------------------------------------------------------


class IntegerLineAction:
    """Z acting on itself by translation; ``t`` sends w to w + 1."""

    letters: tuple[Letter, ...] = ((0, 1), (0, -1))
    base = 0

    def act(self, point: int, letter: Letter) -> int:
        return point + letter[1]

    def act_element(self, point: int, g: int) -> int:
        return point + g


class LatticeAction:
    """Cayley graph of Z^k with the standard basis."""

    def __init__(self, k: int):
        self.k = k
        self.letters = letters_of_rank(k)
        self.base = (0,) * k

    def act(self, point: tuple, letter: Letter) -> tuple:
        gen, sign = letter
        p = list(point)
        p[gen] += sign
        return tuple(p)


class CyclicAction:
    """C_m acting regularly on {0, ..., m-1} with generator t: w -> w + 1."""

    def __init__(self, m: int):
        self.m = m
        self.letters: tuple[Letter, ...] = ((0, 1), (0, -1))
        self.base = 0

    def act(self, point: int, letter: Letter) -> int:
        return (point + letter[1]) % self.m

    def act_element(self, point: int, g: int) -> int:
        return (point + g) % self.m


class FreeRegularAction:
    """Free group acting on itself on the right (its Cayley graph)."""

    def __init__(self, rank: int):
        self.rank = rank
        self.letters = letters_of_rank(rank)
        self.base = FreeWord()

    def act(self, point: FreeWord, letter: Letter) -> FreeWord:
        return point * FreeWord((letter,))


class PermutationAction:
    """Action of a free group through permutations, one per generator.

    ``domains[i]`` (optional) is the set of points on which generator ``i`` is
    known; asking about any other point raises :class:`BoundaryError`.
    """

    def __init__(
        self,
        perms: Sequence[FinSuppPerm],
        base: Hashable,
        domains: Sequence[frozenset] | None = None,
    ):
        self.perms = list(perms)
        self.inverses = [p.inverse() for p in self.perms]
        self.letters = letters_of_rank(len(self.perms))
        self.base = base
        self.domains = list(domains) if domains is not None else None

    def act(self, point, letter: Letter):
        gen, sign = letter
        if self.domains is not None and point not in self.domains[gen]:
            raise BoundaryError(f"generator {letter_name(letter)} unknown at {point!r}")
        p = self.perms[gen] if sign > 0 else self.inverses[gen]
        return p(point)


def act_word(action, point, word: FreeWord | Iterable[Letter]):
    """Apply the letters of ``word`` to ``point`` one by one."""
    letters = word.letters if isinstance(word, FreeWord) else word
    for letter in letters:
        point = action.act(point, letter)
    return point


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass
class ActionGraph:
    """Edge-labelled graph of an action restricted to a window.

    ``edges[(w, letter)]`` is the image point, or :data:`EXIT` when the image
    lies outside the window (or is unknown to the action).
    """

    vertices: list
    base: Any
    letters: tuple[Letter, ...]
    edges: dict
    layers: list[list] = field(default_factory=list)
    total: bool = False

    def __post_init__(self):
        self._vset = set(self.vertices)

    def __contains__(self, point) -> bool:
        return point in self._vset

    def __len__(self) -> int:
        return len(self.vertices)

    def act(self, point, letter: Letter):
        target = self.edges.get((point, letter), EXIT)
        if target == EXIT:
            raise BoundaryError(f"edge {letter_name(letter)} leaves window at {point!r}")
        return target

    def neighbours(self, point) -> list:
        out = []
        for letter in self.letters:
            y = self.edges.get((point, letter), EXIT)
            if y != EXIT and y not in out:
                out.append(y)
        return out

    def undirected(self) -> dict:
        adj: dict = {v: [] for v in self.vertices}
        for (x, _), y in self.edges.items():
            if y == EXIT or y == x:
                continue
            if y not in adj[x]:
                adj[x].append(y)
            if x not in adj[y]:
                adj[y].append(x)
        return adj

    def layer_of(self) -> dict:
        return {v: i for i, layer in enumerate(self.layers) for v in layer}

    def exits(self) -> list:
        return [k for k, v in self.edges.items() if v == EXIT]

    def to_dot(self, name: Callable[[Any], str] | None = None) -> str:
        """DOT text: vertices carry their layer, one edge per (point, generator)."""
        layer = self.layer_of()
        if name is None:
            index: dict = {}
            for i, lay in enumerate(self.layers):
                for j, v in enumerate(lay):
                    index[v] = f"L{i}_{j}"
            name = index.__getitem__
        lines = ["digraph schreier {", "  // bfs order: generators as declared, then point order"]
        for v in self.vertices:
            lines.append(f'  "{name(v)}" [layer={layer.get(v, -1)}];')
        positive = [l for l in self.letters if l[1] > 0]
        for v in self.vertices:
            for letter in positive:
                y = self.edges.get((v, letter), EXIT)
                if y == EXIT:
                    continue
                lines.append(f'  "{name(v)}" -> "{name(y)}" [label="{letter_name(letter)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GrowthTable:
    sizes: tuple[int, ...]

    def __post_init__(self):
        if self.sizes and self.sizes[0] != 1:
            raise ValueError("growth table must start at 1")
        if any(b < a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("growth table must be nondecreasing")

    def __getitem__(self, n: int) -> int:
        return self.sizes[n]

    def __len__(self) -> int:
        return len(self.sizes)

    def as_list(self) -> list[int]:
        return list(self.sizes)

    def to_csv(self) -> str:
        rows = ["radius,ball_size"] + [f"{i},{s}" for i, s in enumerate(self.sizes)]
        return "\n".join(rows) + "\n"


@dataclass
class SpanningTreeCert:
    vertices: list
    edges: list  # (parent, child)
    diameter: int
    radius: int

    @property
    def ok(self) -> bool:
        return self.diameter <= 2 * self.radius


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def ball(action, base=None, n: int = 0) -> tuple[ActionGraph, list[list]]:
    """Closed ball of radius ``n`` around ``base`` with its BFS layers.

    The returned window records every edge out of every ball vertex; edges
    leaving the ball (or unknown to the action) are stored as :data:`EXIT`.
    """
    if n < 0:
        raise ValueError("radius must be nonnegative")
    if base is None:
        base = action.base
    letters = tuple(action.letters)
    dist = {base: 0}
    layers = [[base]]
    for r in range(n):
        nxt = []
        for x in layers[r]:
            for letter in letters:
                try:
                    y = action.act(x, letter)
                except BoundaryError:
                    continue
                if y not in dist:
                    dist[y] = r + 1
                    nxt.append(y)
        if not nxt:
            break
        layers.append(nxt)
    vertices = [v for layer in layers for v in layer]
    edges: dict = {}
    for x in vertices:
        for letter in letters:
            try:
                y = action.act(x, letter)
            except BoundaryError:
                y = EXIT
            edges[(x, letter)] = y if y in dist else EXIT
    total = all(v != EXIT for v in edges.values())
    graph = ActionGraph(vertices, base, letters, edges, layers, total)
    return graph, layers


def growth_table(action, base=None, N: int = 0) -> GrowthTable:
    _, layers = ball(action, base, N)
    sizes = []
    acc = 0
    for r in range(N + 1):
        if r < len(layers):
            acc += len(layers[r])
        sizes.append(acc)
    return GrowthTable(tuple(sizes))


def _bfs(adj: dict, src) -> dict:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def graph_diameter(graph) -> int:
    """Diameter of the undirected graph underlying ``graph``.

    Accepts an :class:`ActionGraph`, a :class:`SpanningTreeCert` or a plain
    adjacency dict.  Raises ``ValueError`` when the graph is disconnected.
    """
    if isinstance(graph, ActionGraph):
        adj = graph.undirected()
    elif isinstance(graph, SpanningTreeCert):
        adj = _tree_adj(graph.vertices, graph.edges)
    else:
        adj = graph
    if not adj:
        return 0
    best = 0
    n = len(adj)
    for src in adj:
        dist = _bfs(adj, src)
        if len(dist) != n:
            raise ValueError("graph is disconnected")
        best = max(best, max(dist.values()))
    return best


def _tree_adj(vertices, edges) -> dict:
    adj: dict = {v: [] for v in vertices}
    for x, y in edges:
        adj[x].append(y)
        adj[y].append(x)
    return adj


def tree_diameter(vertices, edges) -> int:
    """Diameter of a tree by two BFS passes."""
    adj = _tree_adj(vertices, edges)
    if not vertices:
        return 0
    d0 = _bfs(adj, vertices[0])
    if len(d0) != len(vertices):
        raise ValueError("tree is disconnected")
    far = max(d0, key=d0.get)
    return max(_bfs(adj, far).values())


def _letter_rank(letters: Sequence[Letter]) -> dict:
    return {l: i for i, l in enumerate(letters)}


def least_geodesics(graph: ActionGraph) -> dict:
    """Lexicographically least geodesic word from the base to every vertex.

    Letters are compared in the graph's declared order.  Computed layer by
    layer, so W(v) = min over predecessors (p, s) of W(p) followed by s.
    """
    rank = _letter_rank(graph.letters)
    words = {graph.base: ()}
    keys = {graph.base: ()}
    for r in range(1, len(graph.layers)):
        cand: dict = {}
        for p in graph.layers[r - 1]:
            for letter in graph.letters:
                y = graph.edges.get((p, letter), EXIT)
                if y == EXIT or y in words:
                    continue
                key = keys[p] + (rank[letter],)
                if y not in cand or key < cand[y][0]:
                    cand[y] = (key, words[p] + (letter,))
        for y, (key, word) in cand.items():
            keys[y] = key
            words[y] = word
    return words


def gn_graph_and_tree(action, base=None, n: int = 1) -> SpanningTreeCert:
    """Spanning tree of B(n) by inductive leaf attachment.

    Each vertex v at distance r >= 1 has least geodesic word s1 s2 ... sr and
    is attached to the vertex reached by s2 ... sr, which lies at distance at
    most r - 1.  Paths to the base then have length at most n, so the
    diameter is at most 2n.  At n = 1 this is the star on the base's
    neighbours.
    """
    if isinstance(action, ActionGraph) and base is None:
        graph = action
        if len(graph.layers) - 1 < n:
            graph, _ = ball(graph, graph.base, n)
    else:
        graph, _ = ball(action, base, n)
    if len(graph.layers) > n + 1:
        graph, _ = ball(graph, graph.base, n)
    words = least_geodesics(graph)
    base = graph.base
    edges = []
    for v in graph.vertices:
        if v == base:
            continue
        word = words.get(v)
        if word is None:
            raise ValueError(f"vertex {v!r} unreachable from base")
        parent = base
        for letter in word[1:]:
            parent = graph.act(parent, letter)
        if parent not in graph or parent == v:
            raise ValueError(f"bad parent for {v!r}")
        edges.append((parent, v))
    diam = tree_diameter(graph.vertices, edges)
    return SpanningTreeCert(list(graph.vertices), edges, diam, n)


def check_layers(graph: ActionGraph) -> bool:
    """Every vertex of layer r >= 1 has a neighbour in layer r - 1 and none below."""
    layer = graph.layer_of()
    adj = graph.undirected()
    for v, r in layer.items():
        if r == 0:
            continue
        rs = [layer[u] for u in adj[v]]
        if (r - 1) not in rs or any(x < r - 1 for x in rs):
            return False
    return True


def sorted_points(points: Iterable) -> list:
    return sorted(points, key=point_key)
