"""Elementary enrichments E_Omega(R) x| Gamma over Z, Z/q and F_p.

Matrices act on row vectors indexed by points, so E_{v,w}(r) = I + r e_{vw}
sends the basis vector v to v + r w.  Then [E_{v,x}(r), E_{x,w}(s)] =
E_{v,w}(rs) with [a, b] = a^-1 b^-1 a b, and conjugation by an ambient
element moves indices: E_{v,w}(r)^g = E_{vg,wg}(r).
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from sympy import isprime, prevprime

from .groupkit import FiniteGroup, FreeWord, point_key
from .schreier import BoundaryError, act_word

# ---------------------------------------------------------------------------
# Rings and matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ring:
    kind: str  # "Z" | "Zq" | "Fp"
    modulus: int | None = None

    def __post_init__(self):
        if self.kind == "Z":
            if self.modulus is not None:
                raise ValueError("Z has no modulus")
        elif self.kind in ("Zq", "Fp"):
            if self.modulus is None or self.modulus < 2:
                raise ValueError("modulus must be at least 2")
            if self.kind == "Fp" and not isprime(self.modulus):
                raise ValueError(f"{self.modulus} is not prime")
        else:
            raise ValueError(f"unknown ring kind {self.kind!r}")

    def reduce(self, x: int) -> int:
        return x if self.modulus is None else x % self.modulus

    @property
    def tag(self) -> str:
        return "Z" if self.kind == "Z" else f"{self.kind}{self.modulus}"

    @classmethod
    def parse(cls, tag: str) -> Ring:
        if tag == "Z":
            return cls("Z")
        for kind in ("Zq", "Fp"):
            if tag.startswith(kind):
                return cls(kind, int(tag[len(kind):]))
        raise ValueError(f"unknown ring tag {tag!r}")


ZZ = Ring("Z")


def Zmod(q: int) -> Ring:
    return Ring("Zq", q)


def GF(p: int) -> Ring:
    return Ring("Fp", p)


def _clean(ring: Ring, dev: dict) -> dict:
    out = {}
    for i, row in dev.items():
        r = {}
        for j, v in row.items():
            v = ring.reduce(v)
            if v:
                r[j] = v
        if r:
            out[i] = r
    return out


def _dev_mul(a: dict, b: dict) -> dict:
    """Deviation of (I + a)(I + b) = I + a + b + ab."""
    out = {i: dict(row) for i, row in a.items()}
    for i, row in b.items():
        o = out.setdefault(i, {})
        for j, v in row.items():
            o[j] = o.get(j, 0) + v
    for i, row in a.items():
        o = out.setdefault(i, {})
        for k, v in row.items():
            brow = b.get(k)
            if brow:
                for j, w in brow.items():
                    o[j] = o.get(j, 0) + v * w
    return out


class ElemMatrix:
    """Identity plus a finite deviation, with rows and columns indexed by points.

    The inverse is carried along for matrices built from transvections and
    recomputed exactly otherwise.
    """

    __slots__ = ("ring", "dev", "_inv", "_key")

    def __init__(self, ring: Ring, dev: dict | None = None, _inv: ElemMatrix | None = None):
        self.ring = ring
        self.dev = _clean(ring, dev or {})
        self._inv = _inv
        self._key = None

    @classmethod
    def identity(cls, ring: Ring = ZZ) -> ElemMatrix:
        return cls(ring, {})

    @classmethod
    def transvection(cls, ring: Ring, v, w, r: int = 1) -> ElemMatrix:
        if v == w:
            raise ValueError("transvection needs distinct indices")
        m = cls(ring, {v: {w: r}})
        m._inv = cls(ring, {v: {w: -r}}, m)
        return m

    def _check(self, other: ElemMatrix) -> None:
        if self.ring != other.ring:
            raise ValueError(f"ring mismatch: {self.ring.tag} vs {other.ring.tag}")

    def __mul__(self, other: ElemMatrix) -> ElemMatrix:
        self._check(other)
        out = ElemMatrix(self.ring, _dev_mul(self.dev, other.dev))
        if self._inv is not None and other._inv is not None:
            out._inv = ElemMatrix(self.ring, _dev_mul(other._inv.dev, self._inv.dev), out)
        return out

    def inverse(self) -> ElemMatrix:
        if self._inv is None:
            self._inv = self._compute_inverse()
            self._inv._inv = self
        return self._inv

    def _compute_inverse(self) -> ElemMatrix:
        from sympy import Matrix

        pts = self.points()
        if not pts:
            return ElemMatrix(self.ring, {})
        M = Matrix(self.dense(pts))
        if self.ring.modulus is None:
            inv = M.inv()
            if any(not x.is_integer for x in inv):
                raise ValueError("matrix is not invertible over Z")
        else:
            inv = M.inv_mod(self.ring.modulus)
        dev = {}
        for a, p in enumerate(pts):
            for b, q in enumerate(pts):
                v = int(inv[a, b]) - (1 if a == b else 0)
                if v:
                    dev.setdefault(p, {})[q] = v
        return ElemMatrix(self.ring, dev)

    def points(self) -> list:
        s = set(self.dev)
        for row in self.dev.values():
            s.update(row)
        return sorted(s, key=point_key)

    def entry(self, i, j) -> int:
        v = self.dev.get(i, {}).get(j, 0)
        return self.ring.reduce(v + (1 if i == j else 0))

    def dense(self, pts: Sequence) -> list[list[int]]:
        return [[self.entry(i, j) for j in pts] for i in pts]

    def norm(self) -> int:
        """Sup-norm over the block of touched points (1 for the identity)."""
        if self.ring.modulus is not None:
            raise ValueError("sup-norm is defined over Z only")
        pts = self.points()
        best = 1
        for i in pts:
            row = self.dev.get(i, {})
            for j in pts:
                best = max(best, abs(row.get(j, 0) + (1 if i == j else 0)))
        return best

    def relabel(self, f: Callable[[Any], Any]) -> ElemMatrix:
        dev = {f(i): {f(j): v for j, v in row.items()} for i, row in self.dev.items()}
        out = ElemMatrix(self.ring, dev)
        if self._inv is not None:
            out._inv = ElemMatrix(self.ring, {f(i): {f(j): v for j, v in row.items()} for i, row in self._inv.dev.items()}, out)
        return out

    def reduce_mod(self, q: int) -> ElemMatrix:
        ring = Zmod(q)
        out = ElemMatrix(ring, self.dev)
        if self._inv is not None:
            out._inv = ElemMatrix(ring, self._inv.dev, out)
        return out

    def is_identity(self) -> bool:
        return not self.dev

    def key(self) -> tuple:
        if self._key is None:
            self._key = (self.ring, frozenset((i, j, v) for i, row in self.dev.items() for j, v in row.items()))
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, ElemMatrix) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def to_triples(self) -> dict:
        triples = sorted(((i, j, v) for i, row in self.dev.items() for j, v in row.items()), key=lambda t: (point_key(t[0]), point_key(t[1])))
        return {"ring": self.ring.tag, "entries": [[i, j, v] for i, j, v in triples]}

    @classmethod
    def from_triples(cls, data: dict) -> ElemMatrix:
        """Rebuild from sparse triples; these record the deviation from I."""
        ring = Ring.parse(data["ring"])
        dev: dict = {}
        for i, j, v in data["entries"]:
            i = tuple(i) if isinstance(i, list) else i
            j = tuple(j) if isinstance(j, list) else j
            dev.setdefault(i, {})[j] = v
        return cls(ring, dev)

    def __repr__(self) -> str:
        if not self.dev:
            return f"I[{self.ring.tag}]"
        terms = [f"{v}*e({i},{j})" for i, row in self.dev.items() for j, v in row.items()]
        return f"I + {' + '.join(terms)} [{self.ring.tag}]"


def transvect_mul(a: ElemMatrix, b: ElemMatrix) -> ElemMatrix:
    return a * b


def transvect_commutator(a: ElemMatrix, b: ElemMatrix) -> ElemMatrix:
    """[a, b] = a^-1 b^-1 a b."""
    a._check(b)
    return a.inverse() * b.inverse() * a * b


def conj_by_ambient(E: ElemMatrix, g: FreeWord, action) -> ElemMatrix:
    """E^g: every index v becomes v.g."""
    return E.relabel(lambda v: act_word(action, v, g))


# ---------------------------------------------------------------------------
# The enrichment and its words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElemElem:
    A: ElemMatrix
    g: FreeWord


class ElemEnrichment:
    """E_Omega(R) x| F_k with (A1, g1)(A2, g2) = (A1 A2^(g1^-1), g1 g2)."""

    def __init__(self, action, ring: Ring = ZZ):
        self.action = action
        self.ring = ring
        self.identity = ElemElem(ElemMatrix.identity(ring), FreeWord())

    def conj(self, A: ElemMatrix, g: FreeWord) -> ElemMatrix:
        if not len(g) or A.is_identity():
            return A
        return conj_by_ambient(A, g, self.action)

    def mul(self, x: ElemElem, y: ElemElem) -> ElemElem:
        return ElemElem(x.A * self.conj(y.A, x.g.inverse()), x.g * y.g)

    def inv(self, x: ElemElem) -> ElemElem:
        return ElemElem(self.conj(x.A.inverse(), x.g), x.g.inverse())

    def symbol(self, sym: tuple) -> ElemElem:
        """("s", letter) is an ambient letter; ("E", (v, w), e) is E_{v,w}(e)."""
        if sym[0] == "s":
            return ElemElem(ElemMatrix.identity(self.ring), FreeWord((sym[1],)))
        _, (v, w), e = sym
        return ElemElem(ElemMatrix.transvection(self.ring, v, w, e), FreeWord())

    def evaluate(self, word: Sequence[tuple]) -> ElemElem:
        acc = self.identity
        for sym in word:
            acc = self.mul(acc, self.symbol(sym))
        return acc


def elem_generators(action, base=None) -> list[tuple]:
    """T(w0): E_{w0,w0s} and E_{w0s,w0} for s in S with w0 s != w0, as symbols."""
    base = action.base if base is None else base
    out = []
    for letter in action.letters:
        y = action.act(base, letter)
        if y == base:
            continue
        for sym in (("E", (base, y), 1), ("E", (y, base), 1)):
            if sym not in out:
                out.append(sym)
    return out


def invert_word(word: Sequence[tuple]) -> list[tuple]:
    out = []
    for sym in reversed(word):
        if sym[0] == "s":
            g, s = sym[1]
            out.append(("s", (g, -s)))
        else:
            out.append(("E", sym[1], -sym[2]))
    return out


def commutator_word(a: Sequence[tuple], b: Sequence[tuple]) -> list[tuple]:
    return invert_word(a) + invert_word(b) + list(a) + list(b)


def conjugate_word(x: Sequence[tuple], k: FreeWord) -> list[tuple]:
    """x^k = k^-1 x k."""
    return [("s", l) for l in k.inverse().letters] + list(x) + [("s", l) for l in k.letters]


class SplitNotFound(ValueError):
    """No factorisation g = hk with w0, w0k, w0g distinct was found."""


@dataclass
class SplitRecord:
    g_len: int
    m: int
    length: int
    h_len: int
    k_len: int
    lh: int
    lk: int
    on_word: bool  # the split is a cut of the given word, not a geodesic detour

    @property
    def recurrence_ok(self) -> bool:
        return self.length <= 4 * max(self.lh, self.lk) + 2 ** (self.m + 1)

    @property
    def halves_ok(self) -> bool:
        return max(self.h_len, self.k_len) <= 2 ** max(self.m - 1, 0)


@dataclass
class SynthesisStats:
    records: list[SplitRecord] = field(default_factory=list)
    base_cases: int = 0

    def level_maxima(self) -> dict[int, int]:
        """L_m = longest word produced for a target of length at most 2^m."""
        out: dict[int, int] = {0: 1} if self.base_cases else {}
        for r in self.records:
            out[r.m] = max(out.get(r.m, 0), r.length)
        ms = sorted(out)
        for a, b in zip(ms, ms[1:]):
            out[b] = max(out[b], out[a])
        return out

    def recurrence_holds(self) -> bool:
        if not all(r.recurrence_ok for r in self.records):
            return False
        L = self.level_maxima()
        return all(L[m] <= 4 * L.get(m - 1, 1) + 2 ** (m + 1) for m in L if m >= 1)

    def detours(self) -> int:
        return sum(not r.on_word for r in self.records)

    def empirical_C(self) -> float:
        """Smallest C with every length at most (C/2) 4^m."""
        return max((2 * r.length / 4**r.m for r in self.records), default=2.0)


def _ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


class _Geodesics:
    """Breadth-first distances from the base point, explored lazily by radius."""

    def __init__(self, action, base, max_points: int = 200_000):
        self.action = action
        self.max_points = max_points
        self.dist = {base: 0}
        self.parent: dict = {base: None}
        self.frontier = [base]
        self.radius = 0

    def grow(self, r: int) -> None:
        while self.radius < r and self.frontier and len(self.dist) < self.max_points:
            nxt = []
            for x in self.frontier:
                for l in self.action.letters:
                    try:
                        y = self.action.act(x, l)
                    except BoundaryError:
                        continue
                    if y not in self.dist:
                        self.dist[y] = self.radius + 1
                        self.parent[y] = (x, l)
                        nxt.append(y)
            self.frontier = nxt
            self.radius += 1

    def word(self, target, limit: int) -> FreeWord | None:
        while target not in self.dist and self.radius < limit and self.frontier and len(self.dist) < self.max_points:
            self.grow(self.radius + 1)
        if target not in self.dist:
            return None
        out = []
        while self.parent[target] is not None:
            target, l = self.parent[target]
            out.append(l)
        return FreeWord(tuple(reversed(out)))

    def all_words(self, target, cap: int) -> list[FreeWord]:
        if target not in self.dist:
            return []
        d = self.dist[target]
        out: list[FreeWord] = []

        def rec(x, acc):
            # walk backwards from target along strictly decreasing distance
            if len(out) >= cap:
                return
            if self.dist[x] == 0:
                out.append(FreeWord(tuple(reversed(acc))))
                return
            for g, s in self.action.letters:
                try:
                    y = self.action.act(x, (g, -s))
                except BoundaryError:
                    continue
                if self.dist.get(y) == self.dist[x] - 1:
                    rec(y, acc + [(g, s)])

        rec(target, [])
        return [w for w in out if len(w) == d]


def word_for_transvection(
    action,
    g: FreeWord,
    base=None,
    n: int | None = None,
    stats: SynthesisStats | None = None,
    geodesic_cap: int = 64,
) -> list[tuple]:
    """Word over S u T(w0) evaluating to (E_{w0,w0g}, e).

    If w0 g = w0 s for a generator s the answer is that generator.  Otherwise
    g = hk with w0, w0k, w0g pairwise distinct and
    E_{w0,w0g} = [E_{w0,w0k}, (E_{w0,w0h})^k].  Cuts of g are tried first,
    nearest the middle.  A cut with both halves of length at most half of
    |g| need not exist (take g = Ab when b fixes w0), so after the balanced
    cuts come detours ranked by max(|h|, |k|): k a suffix of a geodesic word
    to w0g and h a geodesic to (w0g)k^-1, or w0k a point near the base.
    Candidates that fail recursively are skipped.  Every split is recorded
    in ``stats``.
    """
    base = action.base if base is None else base
    if n is not None and len(g) > n:
        raise ValueError(f"|g| = {len(g)} exceeds n = {n}")
    if stats is None:
        stats = SynthesisStats()
    geo = _Geodesics(action, base)
    cache: dict = {}
    busy: set = set()
    gens = {}
    for l in action.letters:
        y = action.act(base, l)
        if y != base:
            gens.setdefault(y, l)

    def cuts(word: FreeWord, target):
        L = len(word)
        for i in sorted(range(1, L), key=lambda i: (abs(2 * i - L), i)):
            h, k = FreeWord(word.letters[:i]), FreeWord(word.letters[i:])
            pk = act_word(action, base, k)
            if pk != base and pk != target:
                yield h, k, True

    def detours(word: FreeWord, target):
        L = len(word)
        geo.grow(L)
        for w in geo.all_words(target, geodesic_cap):
            for i in range(1, len(w)):
                k = FreeWord(w.letters[i:])
                pk = act_word(action, base, k)
                if pk in (base, target):
                    continue
                try:
                    c = act_word(action, target, k.inverse())
                except BoundaryError:
                    continue
                h = geo.word(c, 2 * L)
                if h is not None:
                    yield h, k, False
        # detours through an intermediate point w0k next to the base
        for b in sorted((x for x in geo.dist if 0 < geo.dist[x] <= 2), key=lambda x: (geo.dist[x], point_key(x))):
            if b == target:
                continue
            k = geo.word(b, L)
            try:
                c = act_word(action, target, k.inverse())
            except BoundaryError:
                continue
            h = geo.word(c, 2 * L)
            if h is not None and c != base:
                yield h, k, False

    def candidates(word: FreeWord, target):
        """Balanced cuts of the word first, then everything else by cost."""
        half = (len(word) + 1) // 2
        rest = []
        for c in cuts(word, target):
            if max(len(c[0]), len(c[1])) <= half:
                yield c
            else:
                rest.append(c)
        rest.extend(detours(word, target))
        yield from sorted(rest, key=lambda c: (max(len(c[0]), len(c[1])), not c[2], len(c[0]) + len(c[1])))

    def synth(word: FreeWord) -> list[tuple] | None:
        target = act_word(action, base, word)
        hit = cache.get(target)
        if hit is not None and hit[1] <= len(word):
            return hit[0]
        if target in gens:
            stats.base_cases += 1
            cache[target] = ([("E", (base, target), 1)], 1)
            return cache[target][0]
        busy.add(target)
        try:
            for h, k, on_word in candidates(word, target):
                # cuts shrink the word, so only detours can cycle back to a pending target
                if not on_word and (act_word(action, base, h) in busy or act_word(action, base, k) in busy):
                    continue
                wh = synth(h)
                wk = synth(k) if wh is not None else None
                if wk is None:
                    continue
                out = commutator_word(wk, conjugate_word(wh, k))
                glen = len(word)
                stats.records.append(SplitRecord(glen, _ceil_log2(glen), len(out), len(h), len(k), len(wh), len(wk), on_word))
                cache[target] = (out, glen)
                return out
            return None
        finally:
            busy.discard(target)

    if act_word(action, base, g) == base:
        raise ValueError("w0 g = w0; no transvection to build")
    out = synth(g)
    if out is None:
        raise SplitNotFound(f"no valid split for g = {g}")
    return out


def path_commutator_word(adj: dict, v, w) -> tuple[list[tuple], list]:
    """Word in the edge transvections E_{x,y} of a graph equal to E_{v,w}.

    Along a shortest path v = v0, ..., vn = w with x = v_ceil(n/2),
    E_{v,w} = [E_{v,x}, E_{x,w}], recursively.  Returns (word, path).
    """
    if v == w:
        raise ValueError("need distinct vertices")
    prev = {v: None}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        for y in sorted(adj[x], key=point_key):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if w not in prev:
        raise ValueError("vertices are not connected")
    path = [w]
    while path[-1] != v:
        path.append(prev[path[-1]])
    path.reverse()

    def rec(i: int, j: int) -> list[tuple]:
        if j - i == 1:
            return [("E", (path[i], path[j]), 1)]
        mid = i + (j - i + 1) // 2
        return commutator_word(rec(i, mid), rec(mid, j))

    return rec(0, len(path) - 1), path


def eval_transvection_word(ring: Ring, word: Sequence[tuple]) -> ElemMatrix:
    acc = ElemMatrix.identity(ring)
    for _, (v, w), e in word:
        acc = acc * ElemMatrix.transvection(ring, v, w, e)
    return acc


# ---------------------------------------------------------------------------
# Norms and windows
# ---------------------------------------------------------------------------


@dataclass
class WindowReport:
    in_window: bool
    norm: int
    norm_bound: int
    support_ok: bool
    length_ok: bool


def elem_window_check(x: ElemElem | ElemMatrix, n: int, ball_points: Iterable) -> WindowReport:
    """Membership in A(n) B_S(n), where A(n) holds the matrices supported in
    B(n) with sup-norm at most 2^n."""
    A, g = (x.A, x.g) if isinstance(x, ElemElem) else (x, FreeWord())
    nrm = A.norm()
    supp = set(A.points()) <= set(ball_points)
    length_ok = len(g) <= n
    return WindowReport(supp and length_ok and nrm <= 2**n, nrm, 2**n, supp, length_ok)


def window_transvections(action, n: int, base=None) -> list[ElemMatrix]:
    """C(S, T(w0), n): the conjugates t^w for t in T(w0) and w in B_S(n-1)."""
    from .groupkit import free_ball

    base = action.base if base is None else base
    rank = max(g for g, _ in action.letters) + 1
    out: list[ElemMatrix] = []
    seen = set()
    for w in free_ball(rank, max(n - 1, 0)):
        for _, (v, u), _e in elem_generators(action, base):
            pv, pu = act_word(action, v, w), act_word(action, u, w)
            if (pv, pu) not in seen:
                seen.add((pv, pu))
                out.append(ElemMatrix.transvection(ZZ, pv, pu, 1))
    return out


def random_norm_products(factors: Sequence[ElemMatrix], count: int, max_len: int, rng: random.Random) -> list[tuple[int, int]]:
    """Norms of random products of m factors (or their inverses), m <= max_len."""
    out = []
    for _ in range(count):
        m = rng.randint(1, max_len)
        acc = ElemMatrix.identity(ZZ)
        for _ in range(m):
            t = rng.choice(factors)
            acc = acc * (t if rng.random() < 0.5 else t.inverse())
        out.append((m, acc.norm()))
    return out


# ---------------------------------------------------------------------------
# Finite targets and Phi for elementary enrichments
# ---------------------------------------------------------------------------


def _mat_mul_mod(a: tuple, b: tuple, k: int, q: int | None) -> tuple:
    out = []
    for i in range(k):
        row = a[i * k : (i + 1) * k]
        for j in range(k):
            s = 0
            for t in range(k):
                x = row[t]
                if x:
                    s += x * b[t * k + j]
            out.append(s % q if q else s)
    return tuple(out)


class FiniteElemEnrichment(FiniteGroup):
    """SL_X(R) x| Q for a finite ring R = Z/q and a finite Q acting on X = {0..k-1}.

    Elements are (matrix as a flat row-major tuple, q).
    """

    def __init__(self, k: int, modulus: int, Q: FiniteGroup, act: Callable[[int, Any], int]):
        self.k = k
        self.modulus = modulus
        self.Q = Q
        self.act = act
        self.name = f"SL_{k}(Z/{modulus}) x| {Q.name}"
        self._id = (tuple(1 if i == j else 0 for i in range(k) for j in range(k)), Q.identity)
        self._relabel: dict = {}

    @property
    def identity(self):
        return self._id

    def order_bound(self) -> int:
        """|SL_X(Z/q)| |Q| is below q^(k^2) |Q|; returned as that exact integer."""
        return self.modulus ** (self.k * self.k) * self.Q.order()

    def order(self) -> int:
        return self.order_bound()

    def elements(self):
        raise NotImplementedError("the finite enrichment is too large to enumerate")

    def _r(self, q):
        key = self.Q.key(q)
        hit = self._relabel.get(key)
        if hit is None:
            hit = tuple(self.act(x, q) for x in range(self.k))
            self._relabel[key] = hit
        return hit

    def conj_inv(self, M: tuple, q) -> tuple:
        """M^(q^-1): entry (a, b) is M[a.q][b.q]."""
        r = self._r(q)
        k = self.k
        return tuple(M[r[a] * k + r[b]] for a in range(k) for b in range(k))

    def mul(self, x, y):
        M1, q1 = x
        M2, q2 = y
        return (_mat_mul_mod(M1, self.conj_inv(M2, q1), self.k, self.modulus), self.Q.mul(q1, q2))

    def inv(self, x):
        raise NotImplementedError

    def to_json(self, x):
        return [list(x[0]), self.Q.to_json(x[1])]

    def from_json(self, v):
        return (tuple(v[0]), self.Q.from_json(v[1]))


@dataclass
class ElemPhiWitness:
    status: str
    ring: str
    q: int
    n: int
    elements: int
    pairs_examined: int
    pairs_checked: int
    injective: bool
    demonstration: bool
    collisions: int = 0
    counterexample: tuple | None = None
    max_norm: int | None = None

    @property
    def verified(self) -> bool:
        return self.status == "verified"


def _window_dense(A: ElemMatrix, idx: dict, k: int) -> tuple:
    out = [1 if i == j else 0 for i in range(k) for j in range(k)]
    for i, row in A.dev.items():
        for j, v in row.items():
            out[idx[i] * k + idx[j]] += v
    return tuple(out)


def elem_ball(enr: ElemEnrichment, gens: Sequence[tuple], n: int) -> list[ElemElem]:
    """B_{S u T}(n) in breadth-first order (generators and their inverses)."""
    syms = [("s", l) for l in enr.action.letters] + list(gens) + [("E", p, -e) for _, p, e in gens]
    elems = [enr.symbol(s) for s in syms]
    seen = {enr.identity}
    order = [enr.identity]
    frontier = [enr.identity]
    for _ in range(n):
        nxt = []
        for x in frontier:
            for e in elems:
                y = enr.mul(x, e)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
                    order.append(y)
        frontier = nxt
    return order


def special_linear_window(points: Sequence, ring: Ring) -> list[ElemMatrix]:
    """E_W(R) for a finite ring, by closure of the transvections E_{v,w}(1)."""
    if ring.modulus is None:
        raise ValueError("closure needs a finite ring")
    gens = [ElemMatrix.transvection(ring, v, w, 1) for v in points for w in points if v != w]
    seen = {ElemMatrix.identity(ring)}
    queue = [ElemMatrix.identity(ring)]
    for x in queue:
        for g in gens:
            y = x * g
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return queue


def build_Phi_elem(pair, q: int, field: bool = False, demonstration: bool = False, max_pairs: int | None = None) -> ElemPhiWitness:
    """Verify Phi(A g) = pi_q(theta~(A)) pi(g) as a local embedding.

    Over Z (``field=False``) the domain is the ball B_{S u T(w0)}(n) of the
    enrichment and q must exceed 2^(n+1), unless ``demonstration`` is set, in
    which case an injectivity counterexample is expected and reported.  Over
    F_q (``field=True``, q prime) the domain is E_{B(n)}(F_q) B_S(n) and no
    norm condition is needed.
    """
    n = pair.n
    if not field and q <= 2 ** (n + 1) and not demonstration:
        raise ValueError(f"q = {q} must exceed 2^(n+1) = {2 ** (n + 1)}")
    if field and not isprime(q):
        raise ValueError(f"{q} is not prime")
    ring = GF(q) if field else ZZ
    enr = ElemEnrichment(pair.action, ring)
    pts = pair.points
    k = len(pts)
    pidx = {p: i for i, p in enumerate(pts)}
    if field:
        mats = special_linear_window(pts, ring)
        elements = [ElemElem(A, w) for w in pair.words for A in mats]
    else:
        elements = elem_ball(enr, elem_generators(pair.action), n)
    for x in elements:
        if not set(x.A.points()) <= set(pts) or len(x.g) > n:
            raise AssertionError("domain element outside the window")
    X = pair.target.k
    target = FiniteElemEnrichment(X, q, pair.target.Q, pair.target.act)
    theta = [pair.theta[p] for p in pts]
    words = {str(w): i for i, w in enumerate(pair.words)}
    qimg = [pair.pi[str(w)] for w in pair.words]

    def lift(A: ElemMatrix) -> tuple:
        out = [1 if i == j else 0 for i in range(X) for j in range(X)]
        for i, row in A.dev.items():
            for j, v in row.items():
                out[theta[pidx[i]] * X + theta[pidx[j]]] = (out[theta[pidx[i]] * X + theta[pidx[j]]] + v) % q
        return tuple(out)

    dense = [_window_dense(x.A, pidx, k) for x in elements]
    gi = [words[str(x.g)] for x in elements]
    key_of = {(dense[i], gi[i]): i for i in range(len(elements))}
    phi = [(lift(x.A), qimg[gi[i]]) for i, x in enumerate(elements)]
    max_norm = max(x.A.norm() for x in elements) if not field else None

    # injectivity
    seen: dict = {}
    collisions = []
    for i, img in enumerate(phi):
        key = (img[0], pair.target.Q.key(img[1]))
        if key in seen:
            collisions.append((seen[key], i))
        else:
            seen[key] = i
    if collisions:
        with_id = [c for c in collisions if elements[c[0]] == enr.identity or elements[c[1]] == enr.identity]
        a, b = (with_id or collisions)[0]
        ce = ("injectivity", elements[a], elements[b])
        return ElemPhiWitness("failed", ring.tag if field else f"Z->Z/{q}", q, n, len(elements), 0, 0, False, demonstration, len(collisions), ce, max_norm)

    # shift tables: point index -> index of p.g^-1
    shifts: dict = {}

    def shift(i: int) -> list[int]:
        if i not in shifts:
            ginv = pair.words[i].inverse()
            row = []
            for p in pts:
                try:
                    y = act_word(pair.action, p, ginv)
                except BoundaryError:
                    y = None
                row.append(pidx.get(y, -1))
            shifts[i] = row
        return shifts[i]

    modq = q if field else None
    word_prod: dict = {}
    examined = checked = 0
    fail = None
    order = list(range(len(elements)))
    for a in order:
        g1 = gi[a]
        sh = shift(g1)
        for b in order:
            examined += 1
            g2 = gi[b]
            pk = (g1, g2)
            j = word_prod.get(pk)
            if j is None:
                j = words.get(str(pair.words[g1] * pair.words[g2]), -1)
                word_prod[pk] = j
            if j < 0:
                continue
            M2 = dense[b]
            conj = [1 if i == jj else 0 for i in range(k) for jj in range(k)]
            ok = True
            for r in range(k):
                for c in range(k):
                    v = M2[r * k + c]
                    if v != (1 if r == c else 0):
                        if sh[r] < 0 or sh[c] < 0:
                            ok = False
                            break
                        conj[sh[r] * k + sh[c]] = v
                if not ok:
                    break
            if not ok:
                continue
            # deviations only live on shifted points; diagonal ones already handled
            prod = _mat_mul_mod(dense[a], tuple(conj), k, modq)
            l = key_of.get((prod, j))
            if l is None:
                continue
            checked += 1
            lhs = phi[l]
            rhs = target.mul(phi[a], phi[b])
            if lhs != rhs:
                fail = ("multiplicativity", elements[a], elements[b])
                break
            if max_pairs is not None and checked >= max_pairs:
                break
        if fail or (max_pairs is not None and checked >= max_pairs):
            break
    status = "verified" if fail is None else "failed"
    return ElemPhiWitness(status, ring.tag if field else f"Z->Z/{q}", q, n, len(elements), examined, checked, True, demonstration, 0, fail, max_norm)


# ---------------------------------------------------------------------------
# CRT and number theory
# ---------------------------------------------------------------------------


def _sl_mod(V: int, q: int) -> Iterable[tuple]:
    for entries in itertools.product(range(q), repeat=V * V):
        M = [entries[i * V : (i + 1) * V] for i in range(V)]
        if _det(M) % q == 1:
            yield entries


def _det(M: list) -> int:
    from sympy import Matrix

    if len(M) == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    return int(Matrix(M).det())


def crt_lift(m1: Sequence[int], q1: int, m2: Sequence[int], q2: int) -> tuple:
    """Entrywise CRT: the unique matrix mod q1 q2 reducing to m1 and m2."""
    if math.gcd(q1, q2) != 1:
        raise ValueError("moduli must be coprime")
    u = pow(q1, -1, q2)
    q = q1 * q2
    return tuple((a + q1 * ((b - a) * u % q2)) % q for a, b in zip(m1, m2))


@dataclass
class CRTReport:
    q1: int
    q2: int
    V: int
    size: int
    image_size: int
    expected: int
    bijective: bool
    mode: str
    preimage_checks: int = 0
    preimage_ok: bool = True


def crt_split(q1: int, q2: int, V: int = 2, samples: int = 200, seed: int = 0) -> CRTReport:
    """Check that reduction SL_V(Z/q1q2) -> SL_V(Z/q1) x SL_V(Z/q2) is bijective.

    Small cases are enumerated in full.  Larger ones use samples: random
    pairs are lifted by CRT and must reduce back, and random elements mod q
    must be recovered from their reductions.  The preimage of
    pi_{q1}(K_V(q')) x 1 is checked against the congruence condition mod q'q2
    for every divisor q' of q1.
    """
    if math.gcd(q1, q2) != 1 or min(q1, q2) < 1:
        raise ValueError("moduli must be coprime positive integers")
    q = q1 * q2
    size_formula = _sl_order(V, q)
    divisors = [d for d in range(1, q1 + 1) if q1 % d == 0]
    pre_checks = 0
    pre_ok = True

    def is_id(M, m):
        return all((x - (1 if i % (V + 1) == 0 else 0)) % m == 0 for i, x in enumerate(M))

    if q ** (V * V) <= 2_000_000:
        elems = list(_sl_mod(V, q))
        images = {(tuple(x % q1 for x in M), tuple(x % q2 for x in M)) for M in elems}
        expected = _sl_order(V, q1) * _sl_order(V, q2)
        for M in elems:
            for d in divisors:
                left = is_id(M, q2) and is_id(M, d)
                right = is_id(M, d * q2)
                pre_checks += 1
                pre_ok &= left == right
        return CRTReport(q1, q2, V, len(elems), len(images), expected, len(images) == len(elems) == expected, "enumerated", pre_checks, pre_ok)
    rng = random.Random(seed)
    ok = True
    for _ in range(samples):
        a = _random_sl(V, q1, rng)
        b = _random_sl(V, q2, rng)
        M = crt_lift(a, q1, b, q2)
        ok &= tuple(x % q1 for x in M) == a and tuple(x % q2 for x in M) == b
        ok &= _det([list(M[i * V : (i + 1) * V]) for i in range(V)]) % q == 1
        c = _random_sl(V, q, rng)
        ok &= crt_lift(tuple(x % q1 for x in c), q1, tuple(x % q2 for x in c), q2) == c
        for d in divisors:
            left = is_id(c, q2) and is_id(c, d)
            pre_checks += 1
            pre_ok &= left == is_id(c, d * q2)
            # an element of the preimage built directly
            k1 = _random_congruence(V, q1, d, rng)
            lift = crt_lift(k1, q1, tuple(1 if i % (V + 1) == 0 else 0 for i in range(V * V)), q2)
            pre_checks += 1
            pre_ok &= is_id(lift, d * q2)
    return CRTReport(q1, q2, V, size_formula, size_formula if ok else -1, _sl_order(V, q1) * _sl_order(V, q2), ok and size_formula == _sl_order(V, q1) * _sl_order(V, q2), "sampled", pre_checks, pre_ok)


def _sl_order(V: int, q: int) -> int:
    """|SL_V(Z/q)| = q^(V^2 - 1) prod_{p | q} prod_{i=2..V} (1 - p^-i)."""
    from sympy import primefactors

    out = q ** (V * V - 1)
    for p in primefactors(q):
        for i in range(2, V + 1):
            out = out // p**i * (p**i - 1)
    return out


def _random_sl(V: int, q: int, rng: random.Random, steps: int = 40) -> tuple:
    M = ElemMatrix.identity(Zmod(q)) if q > 1 else None
    if M is None:
        return tuple(0 for _ in range(V * V))
    for _ in range(steps):
        v, w = rng.sample(range(V), 2)
        M = M * ElemMatrix.transvection(Zmod(q), v, w, rng.randrange(q))
    return tuple(M.entry(i, j) for i in range(V) for j in range(V))


def _random_congruence(V: int, q: int, d: int, rng: random.Random, steps: int = 20) -> tuple:
    """Random element of K_V(d) reduced mod q (products of E_{v,w}(d r))."""
    if q == 1:
        return tuple(0 for _ in range(V * V))
    M = ElemMatrix.identity(Zmod(q))
    for _ in range(steps):
        v, w = rng.sample(range(V), 2)
        M = M * ElemMatrix.transvection(Zmod(q), v, w, d * rng.randrange(q))
    return tuple(M.entry(i, j) for i in range(V) for j in range(V))


def _vp(p: int, q: int) -> int:
    a = 0
    while q % p == 0:
        q //= p
        a += 1
    return a


def bertrand_split(m: int, q: int) -> tuple[int, int]:
    """A prime p in [m/4, m] and r | q with gcd(p, r) = 1 and r >= sqrt(q).

    Take p~ the largest prime in (m/2, m).  If its part p~^a of q is at most
    sqrt(q) use r = q / p~^a; otherwise take the largest prime p in
    (m/4, m/2] and r = q / p^b.
    """
    if m < 8:
        raise ValueError("m must be at least 8")
    if q < 1:
        raise ValueError("q must be positive")
    pt = prevprime(m)
    if not 2 * pt > m:
        raise AssertionError("Bertrand prime missing")
    a = _vp(pt, q)
    if pt ** (2 * a) <= q:
        return pt, q // pt**a
    p = prevprime(m // 2 + 1)
    if not 4 * p > m or p == pt:
        raise AssertionError("second prime missing")
    return p, q // p ** _vp(p, q)


def normal_gen_identity_check(r: int, ring: Ring, points: Sequence) -> bool:
    """Both commutator identities used for normal generation by one transvection.

    With six distinct points (t, u, v, w, x, y):
    E_{t,u}(r) = [E_{t,v}(r), [E_{v,w}, E_{w,u}]] and
    E_{x,y}(r) = [E_{x,t}, [E_{t,u}(r), E_{u,y}]].
    """
    if len(points) != 6 or len(set(points)) != 6:
        raise ValueError("need six distinct points")
    t, u, v, w, x, y = points
    E = lambda a, b, s=1: ElemMatrix.transvection(ring, a, b, s)
    C = transvect_commutator
    first = C(E(t, v, r), C(E(v, w), E(w, u))) == E(t, u, r)
    second = C(E(x, t), C(E(t, u, r), E(u, y))) == E(x, y, r)
    return first and second
