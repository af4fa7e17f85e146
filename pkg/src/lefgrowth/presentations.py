"""Presentations of Sym(V) and SL_V, relator checks and coset enumeration."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .embeddings import GrowthBoundRecord
from .groupkit import FinSuppPerm, FreeWord, Letter, reduce_word

# ---------------------------------------------------------------------------
# Presentations
# ---------------------------------------------------------------------------


def cyclically_reduce(word: FreeWord) -> FreeWord:
    letters = list(word.letters)
    while len(letters) >= 2 and letters[0][0] == letters[-1][0] and letters[0][1] == -letters[-1][1]:
        letters = letters[1:-1]
    return FreeWord(tuple(letters))


@dataclass
class Presentation:
    generators: list[str]
    relators: list[FreeWord]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.relators = [cyclically_reduce(r) for r in self.relators]
        self._index = {g: i for i, g in enumerate(self.generators)}

    @property
    def max_relator_length(self) -> int:
        return max((len(r) for r in self.relators), default=0)

    def word(self, tokens: Iterable[tuple[str, int]]) -> FreeWord:
        return reduce_word((self._index[g], e) for g, e in tokens)

    def format_word(self, w: FreeWord) -> str:
        return " ".join(self.generators[g] + ("" if s > 0 else "^-1") for g, s in w.letters)

    def to_text(self) -> str:
        lines = [" ".join(self.generators)]
        lines += [self.format_word(r) for r in self.relators]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Presentation:
        """Parse the text format: generator names on the first line, then one
        relator per line as space-separated tokens ``name`` or ``name^-1``."""
        lines = [l.strip() for l in text.splitlines()]
        lines = [l for l in lines if l and not l.startswith("#")]
        if not lines:
            raise ValueError("empty presentation")
        gens = lines[0].split()
        if len(set(gens)) != len(gens):
            raise ValueError("repeated generator name")
        index = {g: i for i, g in enumerate(gens)}
        rels = []
        for line in lines[1:]:
            letters = []
            for tok in line.split():
                name, _, exp = tok.partition("^")
                if name not in index:
                    raise ValueError(f"unknown generator {name!r}")
                e = int(exp) if exp else 1
                letters += [(index[name], 1 if e > 0 else -1)] * abs(e)
            rels.append(reduce_word(letters))
        return cls(gens, rels)


def _power(word: Sequence[Letter], k: int) -> list[Letter]:
    return list(word) * k


def _inv(word: Sequence[Letter]) -> list[Letter]:
    return [(g, -s) for g, s in reversed(word)]


def _comm(a: Sequence[Letter], b: Sequence[Letter]) -> list[Letter]:
    """[a, b] = a^-1 b^-1 a b."""
    return _inv(a) + _inv(b) + list(a) + list(b)


def is_tree(vertices: Sequence, edges: Sequence[tuple]) -> bool:
    vs = set(vertices)
    if len(edges) != len(vs) - 1 or any(a == b or a not in vs or b not in vs for a, b in edges):
        return False
    parent = {v: v for v in vs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def _norm_edge(e: tuple) -> tuple:
    a, b = e
    return (a, b) if a <= b else (b, a)


def tree_presentation(edges: Sequence[tuple], vertices: Sequence | None = None) -> Presentation:
    """Presentation of Sym(V) on the transpositions along the edges of a tree.

    Relators: s_e^2; (s_e s_f)^2 for disjoint edges; (s_e s_f)^3 for edges
    sharing a vertex; and (s_{vw} s_{vx} s_{vw} s_{vy})^2 for three edges at a
    common vertex v, one relator for each choice of the repeated edge.
    """
    edges = sorted(_norm_edge(e) for e in edges)
    if vertices is None:
        vertices = sorted({v for e in edges for v in e})
    if not is_tree(vertices, edges):
        raise ValueError("input is not a tree")
    gens = [f"s{a}_{b}" for a, b in edges]
    idx = {e: i for i, e in enumerate(edges)}
    rels: list[list[Letter]] = []
    counts = {"R1": 0, "R2": 0, "R3": 0, "R4": 0}
    for e in edges:
        rels.append([(idx[e], 1)] * 2)
        counts["R1"] += 1
    for e, f in itertools.combinations(edges, 2):
        pair = [(idx[e], 1), (idx[f], 1)]
        if set(e) & set(f):
            rels.append(_power(pair, 3))
            counts["R3"] += 1
        else:
            rels.append(_power(pair, 2))
            counts["R2"] += 1
    for v in vertices:
        at = [e for e in edges if v in e]
        for triple in itertools.combinations(at, 3):
            for rep in triple:
                x, y = [e for e in triple if e != rep]
                w = [(idx[rep], 1), (idx[x], 1), (idx[rep], 1), (idx[y], 1)]
                rels.append(_power(w, 2))
                counts["R4"] += 1
    pres = Presentation(gens, [reduce_word(r) for r in rels], {"kind": "tree", "edges": edges, "vertices": list(vertices), "counts": counts})
    return pres


def tree_assignment(pres: Presentation) -> list[FinSuppPerm]:
    """The natural transpositions for a tree presentation."""
    return [FinSuppPerm.transposition(a, b) for a, b in pres.meta["edges"]]


def tree_path(edges: Sequence[tuple], v, w) -> list:
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    prev = {v: None}
    queue = [v]
    for x in queue:
        for y in sorted(adj.get(x, [])):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if w not in prev:
        raise ValueError("vertices are not connected")
    path = [w]
    while path[-1] != v:
        path.append(prev[path[-1]])
    return path[::-1]


def transposition_word(pres: Presentation, v, w) -> FreeWord:
    """Word in the tree generators equal to the transposition (v w).

    Along the tree path v = v0, ..., vk = w this is the last edge generator
    conjugated successively by the earlier ones.
    """
    edges = pres.meta["edges"]
    idx = {e: i for i, e in enumerate(edges)}
    path = tree_path(edges, v, w)
    steps = [(idx[_norm_edge((path[i], path[i + 1]))], 1) for i in range(len(path) - 1)]
    return reduce_word(steps[:-1] + [steps[-1]] + steps[:-1][::-1])


def prufer_to_edges(seq: Sequence[int], n: int) -> list[tuple]:
    """Decode a Pruefer sequence of length n - 2 into the edges of a tree on 0..n-1."""
    if n < 2:
        return []
    if len(seq) != n - 2:
        raise ValueError("sequence must have length n - 2")
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append(_norm_edge((leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    last = [i for i in range(n) if degree[i] == 1]
    edges.append(_norm_edge((last[0], last[1])))
    return sorted(edges)


def random_tree(n: int, rng: random.Random) -> list[tuple]:
    return prufer_to_edges([rng.randrange(n) for _ in range(max(0, n - 2))], n)


def steinberg_presentation(V: Sequence, ring: str | int = "Z") -> Presentation:
    """Steinberg-type presentation of SL_V(Z), or of SL_V(F_p) when ``ring`` is a prime p.

    Generators E_{v,w} for ordered pairs of distinct points; relators
    [E_{v,x}, E_{x,w}] E_{v,w}^-1 for distinct v, x, w; [E_{v,w}, E_{x,y}]
    for v != y and w != x; (E E'^-1 E)^4 at the first ordered pair
    (v0, w0) with E = E_{v0,w0} and E' = E_{w0,v0}; and E_{v0,w0}^p over F_p.
    """
    V = list(V)
    if len(V) < 3 or len(set(V)) != len(V):
        raise ValueError("need at least three distinct points")
    pairs = [(v, w) for v in V for w in V if v != w]
    idx = {p: i for i, p in enumerate(pairs)}
    gens = [f"E{v}_{w}" for v, w in pairs]

    def g(v, w, s=1):
        return [(idx[(v, w)], s)]

    rels: list[list[Letter]] = []
    counts = {"commutator": 0, "commuting": 0, "fourth_power": 0, "p_power": 0}
    for v, x, w in itertools.permutations(V, 3):
        rels.append(_comm(g(v, x), g(x, w)) + g(v, w, -1))
        counts["commutator"] += 1
    for (v, w), (x, y) in itertools.combinations(pairs, 2):
        if v != y and w != x:
            rels.append(_comm(g(v, w), g(x, y)))
            counts["commuting"] += 1
    v0, w0 = pairs[0]
    rels.append(_power(g(v0, w0) + g(w0, v0, -1) + g(v0, w0), 4))
    counts["fourth_power"] += 1
    if ring != "Z":
        p = int(ring)
        if p < 2:
            raise ValueError("characteristic must be a prime")
        rels.append(g(v0, w0) * p)
        counts["p_power"] += 1
    return Presentation(gens, [reduce_word(r) for r in rels], {"kind": "steinberg", "V": V, "pairs": pairs, "ring": ring, "counts": counts, "base_pair": (v0, w0)})


# ---------------------------------------------------------------------------
# Relator evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalResult:
    ok: bool
    failing: int | None = None
    relator: str | None = None
    checked: int = 0


def eval_word(word: FreeWord, assignment: Sequence, mul: Callable, inv: Callable, identity):
    acc = identity
    invs: dict = {}
    for g, s in word.letters:
        if s > 0:
            x = assignment[g]
        else:
            if g not in invs:
                invs[g] = inv(assignment[g])
            x = invs[g]
        acc = mul(acc, x)
    return acc


def eval_relators(
    pres: Presentation,
    assignment: Sequence,
    mul: Callable | None = None,
    inv: Callable | None = None,
    identity=None,
) -> EvalResult:
    """Evaluate every relator under ``assignment``; report the first nontrivial one.

    Defaults to operator arithmetic (``*`` and ``.inverse()``) as used by
    :class:`FinSuppPerm` and the matrix types.
    """
    if len(assignment) != len(pres.generators):
        raise ValueError("assignment must cover every generator")
    mul = mul or (lambda a, b: a * b)
    inv = inv or (lambda a: a.inverse())
    if identity is None:
        identity = mul(assignment[0], inv(assignment[0])) if assignment else None
    for i, r in enumerate(pres.relators):
        if eval_word(r, assignment, mul, inv, identity) != identity:
            return EvalResult(False, i, pres.format_word(r), i + 1)
    return EvalResult(True, checked=len(pres.relators))


# ---------------------------------------------------------------------------
# Coset enumeration
# ---------------------------------------------------------------------------


@dataclass
class CosetTable:
    table: list[list[int]]
    n_gens: int
    status: str  # complete | aborted
    index: int | None
    strategy: str
    max_live: int = 0
    total_defined: int = 0

    def act(self, coset: int, letter: Letter) -> int:
        gen, sign = letter
        return self.table[coset][2 * gen + (0 if sign > 0 else 1)]

    def trace(self, coset: int, word: FreeWord) -> int:
        for letter in word.letters:
            coset = self.act(coset, letter)
        return coset


class _Enumerator:
    def __init__(self, pres: Presentation, cap: int):
        self.ncols = 2 * len(pres.generators)
        self.rels = [[2 * g + (0 if s > 0 else 1) for g, s in r.letters] for r in pres.relators if len(r)]
        self.cap = cap
        self.table: list[list[int | None]] = [[None] * self.ncols]
        self.p = [0]
        self.live = 1
        self.max_live = 1
        self.deductions: list[tuple[int, int]] = []
        self.record = False

    def rep(self, c: int) -> int:
        p = self.p
        r = c
        while p[r] != r:
            r = p[r]
        while p[c] != r:
            p[c], c = r, p[c]
        return r

    def alive(self, c: int) -> bool:
        return self.p[c] == c

    def define(self, c: int, x: int) -> int:
        d = len(self.table)
        self.table.append([None] * self.ncols)
        self.p.append(d)
        self.table[c][x] = d
        self.table[d][x ^ 1] = c
        self.live += 1
        self.max_live = max(self.max_live, self.live)
        if self.record:
            self.deductions.append((c, x))
        return d

    def _set(self, a: int, x: int, b: int) -> None:
        self.table[a][x] = b
        self.table[b][x ^ 1] = a
        if self.record:
            self.deductions.append((a, x))

    def scan(self, c: int, w: list[int], fill: bool) -> None:
        t = self.table
        f = b = c
        i, j = 0, len(w) - 1
        while True:
            while i <= j and t[f][w[i]] is not None:
                f = t[f][w[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and t[b][w[j] ^ 1] is not None:
                b = t[b][w[j] ^ 1]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if i == j:
                self._set(f, w[i], b)
                return
            if not fill:
                return
            self.define(f, w[i])

    def coincidence(self, a: int, b: int) -> None:
        queue: list[int] = []
        self._merge(a, b, queue)
        t = self.table
        k = 0
        while k < len(queue):
            e = queue[k]
            k += 1
            for x in range(self.ncols):
                f = t[e][x]
                if f is None:
                    continue
                t[f][x ^ 1] = None
                e1, f1 = self.rep(e), self.rep(f)
                if t[e1][x] is not None:
                    self._merge(f1, t[e1][x], queue)
                elif t[f1][x ^ 1] is not None:
                    self._merge(e1, t[f1][x ^ 1], queue)
                else:
                    self._set(e1, x, f1)

    def _merge(self, k: int, l: int, queue: list[int]) -> None:
        k, l = self.rep(k), self.rep(l)
        if k == l:
            return
        if l < k:
            k, l = l, k
        self.p[l] = k
        self.live -= 1
        queue.append(l)

    def lookahead(self) -> None:
        for c in range(len(self.table)):
            if not self.alive(c):
                continue
            for w in self.rels:
                self.scan(c, w, fill=False)
                if not self.alive(c):
                    break

    # -- strategies --------------------------------------------------------

    def run_hlt(self) -> bool:
        c = 0
        while c < len(self.table):
            if self.alive(c):
                for w in self.rels:
                    if self.live >= self.cap:
                        self.lookahead()
                        if self.live >= self.cap:
                            return False
                    self.scan(c, w, fill=True)
                    if not self.alive(c):
                        break
                if self.alive(c):
                    for x in range(self.ncols):
                        if self.table[c][x] is None:
                            if self.live >= self.cap:
                                return False
                            self.define(c, x)
            c += 1
        return True

    def _process_deductions(self, by_first: list[list[list[int]]]) -> None:
        while self.deductions:
            c, x = self.deductions.pop()
            c = self.rep(c)
            for w in by_first[x]:
                self.scan(c, w, fill=False)
                c = self.rep(c)
            d = self.table[c][x]
            if d is not None:
                d = self.rep(d)
                for w in by_first[x ^ 1]:
                    self.scan(d, w, fill=False)
                    d = self.rep(d)

    def run_felsch(self) -> bool:
        by_first: list[list[list[int]]] = [[] for _ in range(self.ncols)]
        seen = set()
        for w in self.rels:
            for k in range(len(w)):
                for cand in (w[k:] + w[:k], [y ^ 1 for y in reversed(w[k:] + w[:k])]):
                    key = tuple(cand)
                    if key not in seen:
                        seen.add(key)
                        by_first[cand[0]].append(cand)
        self.record = True
        for w in self.rels:
            self.scan(0, w, fill=True)
        self._process_deductions(by_first)
        c = 0
        while c < len(self.table):
            if self.alive(c):
                for x in range(self.ncols):
                    if self.alive(c) and self.table[c][x] is None:
                        if self.live >= self.cap:
                            return False
                        self.define(c, x)
                        self._process_deductions(by_first)
            c += 1
        return True

    def compact(self) -> list[list[int]]:
        live = [c for c in range(len(self.table)) if self.alive(c)]
        new = {c: i for i, c in enumerate(live)}
        return [[new[self.rep(self.table[c][x])] for x in range(self.ncols)] for c in live]


def todd_coxeter(pres: Presentation, cap: int = 10_000, strategy: str = "hlt") -> CosetTable:
    """Enumerate cosets of the trivial subgroup.

    ``strategy`` is ``"hlt"`` (relator-based definitions with a lookahead when
    the cap is reached) or ``"felsch"`` (definitions in table order, each
    followed by full deduction processing).  A complete table is checked to be
    closed with every relator tracing back to its start before it is returned.
    """
    if cap < 1:
        raise ValueError("cap must be positive")
    if not pres.generators:
        return CosetTable([[]], 0, "complete", 1, strategy, 1, 1)
    en = _Enumerator(pres, cap)
    if strategy == "hlt":
        done = en.run_hlt()
    elif strategy == "felsch":
        done = en.run_felsch()
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if not done:
        return CosetTable([], len(pres.generators), "aborted", None, strategy, en.max_live, len(en.table))
    table = en.compact()
    ct = CosetTable(table, len(pres.generators), "complete", len(table), strategy, en.max_live, len(en.table))
    for c in range(len(table)):
        for x in range(en.ncols):
            if table[table[c][x]][x ^ 1] != c:
                raise AssertionError("coset table is not a permutation table")
        for r in pres.relators:
            if ct.trace(c, r) != c:
                raise AssertionError("relator does not close in the final table")
    return ct


# ---------------------------------------------------------------------------
# Lower bounds from presentations
# ---------------------------------------------------------------------------


def lerf_lower_bound(f_n: int, g_n: int, R_value: int, notes: str = "") -> GrowthBoundRecord:
    """Turn certified inputs into a lower bound on LEF growth.

    If the finite-index subgroup's generators lie within distance ``f_n`` and
    its relators have length at most ``g_n``, then LEF growth at radius
    f_n * g_n is at least the RF growth ``R_value`` of that subgroup at radius
    ``g_n``.
    """
    if f_n <= 0 or g_n <= 0 or R_value <= 0:
        raise ValueError("inputs must be positive")
    text = f"f={f_n}, g={g_n}, R={R_value}"
    return GrowthBoundRecord(f_n * g_n, R_value, "presentation argument", None, "", f"{text}; {notes}" if notes else text)
