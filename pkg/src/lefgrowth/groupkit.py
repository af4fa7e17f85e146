"""Group arithmetic shared by the rest of the package.

Conventions used everywhere:

* Actions are on the right.  A permutation ``p`` sends ``x`` to ``p(x)``, and
  ``p * q`` means "apply ``p``, then ``q``".
* Conjugation is ``x ** g = g^-1 x g``.  For permutations this moves the
  support along ``g``: ``supp(p ** g) = supp(p) g``.
* Free-group letters are pairs ``(generator, sign)`` with ``sign`` in
  ``{+1, -1}``.  Generator ``i`` prints as ``"abc..."[i]`` and its inverse as the
  upper-case letter.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import re
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

Letter = tuple[int, int]

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


# ---------------------------------------------------------------------------
# Free words
# ---------------------------------------------------------------------------


def letter_name(letter: Letter) -> str:
    gen, sign = letter
    ch = ALPHABET[gen]
    return ch if sign > 0 else ch.upper()


def parse_letter(ch: str) -> Letter:
    low = ch.lower()
    if low not in ALPHABET:
        raise ValueError(f"unknown letter {ch!r}")
    return (ALPHABET.index(low), 1 if ch == low else -1)


def letters_of_rank(rank: int) -> tuple[Letter, ...]:
    """Symmetric alphabet in the declared order a, A, b, B, ..."""
    return tuple((g, s) for g in range(rank) for s in (1, -1))


def _letter_order(letter: Letter) -> tuple[int, int]:
    return (letter[0], 0 if letter[1] > 0 else 1)


@dataclass(frozen=True)
class FreeWord:
    """A freely reduced word.  Build through :func:`reduce_word` or ``*``."""

    letters: tuple[Letter, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: FreeWord) -> FreeWord:
        a, b = self.letters, other.letters
        i = 0
        n = min(len(a), len(b))
        while i < n and a[-1 - i][0] == b[i][0] and a[-1 - i][1] == -b[i][1]:
            i += 1
        return FreeWord(a[: len(a) - i] + b[i:])

    def inverse(self) -> FreeWord:
        return FreeWord(tuple((g, -s) for g, s in reversed(self.letters)))

    def __str__(self) -> str:
        return "".join(letter_name(l) for l in self.letters) or "e"

    def __repr__(self) -> str:
        return f"FreeWord({str(self)!r})"

    def sort_key(self) -> tuple:
        return (len(self.letters), tuple(_letter_order(l) for l in self.letters))

    def __lt__(self, other: FreeWord) -> bool:
        return self.sort_key() < other.sort_key()

    def exponent_sum(self, gen: int = 0) -> int:
        return sum(s for g, s in self.letters if g == gen)

    @classmethod
    def parse(cls, text: str, rank: int | None = None) -> FreeWord:
        if text in ("", "e", "1"):
            return cls()
        return reduce_word([parse_letter(ch) for ch in text], rank)


IDENTITY_WORD = FreeWord()


def reduce_word(letters: Iterable[Letter], rank: int | None = None) -> FreeWord:
    """Freely reduce a raw letter sequence.

    Raises ``ValueError`` on a letter outside the alphabet of the given rank.
    """
    out: list[Letter] = []
    for letter in letters:
        gen, sign = letter
        if sign not in (1, -1) or gen < 0 or (rank is not None and gen >= rank):
            raise ValueError(f"unknown generator {letter!r}")
        if out and out[-1][0] == gen and out[-1][1] == -sign:
            out.pop()
        else:
            out.append((gen, sign))
    return FreeWord(tuple(out))


def free_ball(rank: int, n: int) -> list[FreeWord]:
    """All reduced words of length <= n, ordered by length then lexicographically."""
    if rank < 1 or n < 0:
        raise ValueError("need rank >= 1 and n >= 0")
    alphabet = letters_of_rank(rank)
    out = [IDENTITY_WORD]
    frontier = [IDENTITY_WORD]
    for _ in range(n):
        nxt = []
        for w in frontier:
            last = w.letters[-1] if w.letters else None
            for l in alphabet:
                if last is not None and last[0] == l[0] and last[1] == -l[1]:
                    continue
                nxt.append(FreeWord(w.letters + (l,)))
        out.extend(nxt)
        frontier = nxt
    return out


class FreeGroup:
    """Free group of finite rank, with reduced words as elements."""

    def __init__(self, rank: int):
        if rank < 1:
            raise ValueError("rank must be positive")
        self.rank = rank
        self.letters = letters_of_rank(rank)
        self.identity = IDENTITY_WORD

    def mul(self, x: FreeWord, y: FreeWord) -> FreeWord:
        return x * y

    def inv(self, x: FreeWord) -> FreeWord:
        return x.inverse()

    def length(self, x: FreeWord) -> int:
        return len(x)

    def letter(self, letter: Letter) -> FreeWord:
        return FreeWord((letter,))

    def ball(self, n: int) -> list[FreeWord]:
        return free_ball(self.rank, n)

    def key(self, x: FreeWord) -> str:
        return str(x)

    def parse(self, text: str) -> FreeWord:
        return FreeWord.parse(text, self.rank)

    def __repr__(self) -> str:
        return f"FreeGroup({self.rank})"


# ---------------------------------------------------------------------------
# Finitely supported permutations
# ---------------------------------------------------------------------------


def point_key(p: Any) -> tuple:
    """Total order on the point types used in this package."""
    if isinstance(p, bool):
        return (0, int(p))
    if isinstance(p, int):
        return (0, p)
    if isinstance(p, tuple):
        return (1, tuple(point_key(x) for x in p))
    if isinstance(p, FreeWord):
        return (2, p.sort_key())
    return (3, repr(p))


class FinSuppPerm:
    """Finitely supported permutation of an opaque point universe.

    Only moved points are stored.  Equal permutations compare and hash equal.
    """

    __slots__ = ("_map", "_hash")

    def __init__(self, mapping: dict | None = None):
        mapping = {} if mapping is None else mapping
        clean = {k: v for k, v in mapping.items() if k != v}
        if set(clean) != set(clean.values()) or len(set(clean.values())) != len(clean):
            raise ValueError("mapping is not a permutation of its support")
        self._map = clean
        self._hash = None

    @classmethod
    def _trusted(cls, mapping: dict) -> FinSuppPerm:
        obj = cls.__new__(cls)
        obj._map = mapping
        obj._hash = None
        return obj

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[Hashable]]) -> FinSuppPerm:
        out = cls()
        for cyc in cycles:
            cyc = list(cyc)
            if len(set(cyc)) != len(cyc):
                raise ValueError(f"repeated point in cycle {cyc!r}")
            m = {cyc[i]: cyc[(i + 1) % len(cyc)] for i in range(len(cyc))}
            out = out * cls(m)
        return out

    @classmethod
    def transposition(cls, a: Hashable, b: Hashable) -> FinSuppPerm:
        if a == b:
            raise ValueError("transposition needs two distinct points")
        return cls._trusted({a: b, b: a})

    def __call__(self, x):
        return self._map.get(x, x)

    image = __call__

    def items(self):
        return self._map.items()

    def __mul__(self, other: FinSuppPerm) -> FinSuppPerm:
        a, b = self._map, other._map
        out = {}
        for x, y in a.items():
            z = b.get(y, y)
            if z != x:
                out[x] = z
        for x, y in b.items():
            if x not in a and x != y:
                out[x] = y
        return FinSuppPerm._trusted(out)

    def inverse(self) -> FinSuppPerm:
        return FinSuppPerm._trusted({v: k for k, v in self._map.items()})

    def __pow__(self, k: int) -> FinSuppPerm:
        if k < 0:
            return self.inverse() ** (-k)
        out = FinSuppPerm()
        for _ in range(k):
            out = out * self
        return out

    def support(self) -> frozenset:
        return frozenset(self._map)

    def is_identity(self) -> bool:
        return not self._map

    def conjugate_by(self, f: Callable[[Any], Any]) -> FinSuppPerm:
        """Return ``g^-1 self g`` where the bijection ``g`` acts on points by ``f``."""
        return FinSuppPerm._trusted({f(x): f(y) for x, y in self._map.items()})

    def relabel(self, table: dict) -> FinSuppPerm:
        return FinSuppPerm._trusted({table[x]: table[y] for x, y in self._map.items()})

    def cycles(self) -> list[tuple]:
        seen = set()
        out = []
        for start in sorted(self._map, key=point_key):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            x = self._map[start]
            while x != start:
                cyc.append(x)
                seen.add(x)
                x = self._map[x]
            out.append(tuple(cyc))
        return out

    def sign(self) -> int:
        return -1 if sum(len(c) - 1 for c in self.cycles()) % 2 else 1

    def __eq__(self, other) -> bool:
        return isinstance(other, FinSuppPerm) and self._map == other._map

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._map:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles())


def perm_compose(p: FinSuppPerm, q: FinSuppPerm) -> FinSuppPerm:
    """``p`` then ``q``."""
    return p * q


# ---------------------------------------------------------------------------
# Permutation groups on a finite point set
# ---------------------------------------------------------------------------


def _mul(p: tuple, q: tuple) -> tuple:
    return tuple([q[x] for x in p])


def _inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


def _is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


def _cycle_lengths(p: tuple) -> list[int]:
    seen = bytearray(len(p))
    out = []
    for i in range(len(p)):
        if seen[i]:
            continue
        k = 0
        j = i
        while not seen[j]:
            seen[j] = 1
            j = p[j]
            k += 1
        out.append(k)
    return out


class PermGroup:
    """Permutation group given by generators on a finite point set.

    The order is computed exactly.  Large transitive groups are first tested for
    containing the alternating group (a random element whose power is a p-cycle
    with ``n/2 < p <= n-3`` proves it, by Jordan's theorem); otherwise a
    stabilizer chain is built by Schreier-Sims.  Randomness only affects speed
    and is driven by ``seed``.
    """

    GIANT_TEST_DEGREE = 24
    GIANT_TRIES = 400

    def __init__(
        self,
        generators: Iterable[FinSuppPerm],
        points: Iterable | None = None,
        seed: int = 0,
        max_points: int = 10_000,
    ):
        self.generators = [g for g in generators if not g.is_identity()]
        pts = set(points) if points is not None else set()
        for g in self.generators:
            pts |= g.support()
        if points is not None and not all(g.support() <= pts for g in self.generators):
            raise ValueError("generator moves a point outside the declared point set")
        if len(pts) > max_points:
            raise ValueError(f"point set of size {len(pts)} exceeds limit {max_points}")
        self.points = sorted(pts, key=point_key)
        self.index = {p: i for i, p in enumerate(self.points)}
        self.degree = len(self.points)
        self.seed = seed
        self._gens = [self._to_tuple(g) for g in self.generators]
        self._order: int | None = None
        self.method: str | None = None
        self._chain: list | None = None

    def _to_tuple(self, g: FinSuppPerm) -> tuple:
        idx = self.index
        return tuple(idx[g(p)] for p in self.points)

    def _from_tuple(self, t: tuple) -> FinSuppPerm:
        pts = self.points
        return FinSuppPerm._trusted({pts[i]: pts[j] for i, j in enumerate(t) if i != j})

    # -- random elements -------------------------------------------------

    def _random_elements(self, rng: random.Random) -> Iterator[tuple]:
        n = self.degree
        ident = tuple(range(n))
        state = list(self._gens) or [ident]
        while len(state) < 10:
            state.append(state[len(state) % len(self._gens)] if self._gens else ident)
        acc = ident
        for step in itertools.count():
            i, j = rng.sample(range(len(state)), 2)
            if rng.random() < 0.5:
                state[i] = _mul(state[i], state[j])
            else:
                state[i] = _mul(state[j], state[i])
            acc = _mul(acc, state[i])
            if step >= 50:
                yield acc

    # -- giant recognition -------------------------------------------------

    def _is_transitive(self) -> bool:
        if self.degree == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for g in self._gens:
                y = g[x]
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.degree

    def _contains_alternating(self, rng: random.Random) -> bool:
        n = self.degree
        primes = [p for p in range(n // 2 + 1, n - 2) if _is_prime(p)]
        if not primes or not self._is_transitive():
            return False
        pset = set(primes)
        gen = self._random_elements(rng)
        for _ in range(self.GIANT_TRIES):
            lengths = _cycle_lengths(next(gen))
            if any(L in pset for L in lengths):
                return True
        return False

    # -- Schreier-Sims -------------------------------------------------------

    def _build_chain(self) -> None:
        n = self.degree
        ident = tuple(range(n))
        rng = random.Random(self.seed)
        order = list(range(n))
        rng.shuffle(order)
        base: list[int] = []
        gens_at: list[list[tuple]] = []
        trans: list[dict[int, tuple]] = []

        def orbit(level: int) -> None:
            b = base[level]
            t = {b: ident}
            queue = [b]
            for x in queue:
                u = t[x]
                for g in gens_at[level]:
                    y = g[x]
                    if y not in t:
                        t[y] = _mul(u, g)
                        queue.append(y)
            trans[level] = t

        def sift(h: tuple, start: int) -> tuple[tuple, int]:
            for i in range(start, len(base)):
                beta = h[base[i]]
                u = trans[i].get(beta)
                if u is None:
                    return h, i
                h = _mul(h, _inv(u))
            return h, len(base)

        def add_strong(h: tuple, level: int) -> None:
            if level == len(base):
                moved = next(x for x in order if h[x] != x)
                base.append(moved)
                gens_at.append([])
                trans.append({})
            for lvl in range(level, -1, -1):
                if all(h[base[k]] == base[k] for k in range(lvl)):
                    if h not in gens_at[lvl]:
                        gens_at[lvl].append(h)
                        orbit(lvl)

        for g in self._gens:
            h, j = sift(g, 0)
            if h != ident:
                add_strong(h, j)

        # random pre-pass: cheap and usually finds the whole chain
        if self._gens:
            gen = self._random_elements(rng)
            streak = 0
            while streak < 30:
                h, j = sift(next(gen), 0)
                if h == ident:
                    streak += 1
                else:
                    streak = 0
                    add_strong(h, j)

        # deterministic verification of every Schreier generator
        i = len(base) - 1
        while i >= 0:
            restart = False
            for beta, u_beta in list(trans[i].items()):
                for g in list(gens_at[i]):
                    gb = g[beta]
                    sg = _mul(_mul(u_beta, g), _inv(trans[i][gb]))
                    if sg == ident:
                        continue
                    h, j = sift(sg, i + 1)
                    if h != ident:
                        add_strong(h, j)
                        i = min(len(base) - 1, j)
                        restart = True
                        break
                if restart:
                    break
            if not restart:
                i -= 1
        self._chain = [base, gens_at, trans]

    # -- public API ----------------------------------------------------------

    def order(self) -> int:
        if self._order is not None:
            return self._order
        n = self.degree
        if not self._gens:
            self._order, self.method = 1, "trivial"
            return 1
        if n >= self.GIANT_TEST_DEGREE and self._contains_alternating(random.Random(self.seed)):
            odd = any(sum(L - 1 for L in _cycle_lengths(g)) % 2 for g in self._gens)
            self._order = math.factorial(n) if odd else math.factorial(n) // 2
            self.method = "jordan"
            return self._order
        self._build_chain()
        self._order = math.prod(len(t) for t in self._chain[2])
        self.method = "schreier-sims"
        return self._order

    def base(self) -> list:
        if self._chain is None:
            self._build_chain()
        return [self.points[b] for b in self._chain[0]]

    def transversal_sizes(self) -> list[int]:
        if self._chain is None:
            self._build_chain()
        return [len(t) for t in self._chain[2]]

    def contains(self, g: FinSuppPerm) -> bool:
        if not g.support() <= set(self.points):
            return False
        if self._chain is None:
            self._build_chain()
        base, _, trans = self._chain
        h = self._to_tuple(g)
        for i, b in enumerate(base):
            u = trans[i].get(h[b])
            if u is None:
                return False
            h = _mul(h, _inv(u))
        return h == tuple(range(self.degree))

    def __repr__(self) -> str:
        return f"PermGroup(degree={self.degree}, gens={len(self.generators)})"


def group_order(g: PermGroup) -> int:
    return g.order()


# ---------------------------------------------------------------------------
# Concrete finite groups (targets for local embeddings)
# ---------------------------------------------------------------------------


class FiniteGroup:
    """Finite group with explicit multiplication.

    Subclasses fix an element representation; ``to_json``/``from_json``
    round-trip elements through plain JSON values.
    """

    name = "group"

    @property
    def identity(self):
        raise NotImplementedError

    def mul(self, x, y):
        raise NotImplementedError

    def inv(self, x):
        raise NotImplementedError

    def order(self) -> int:
        raise NotImplementedError

    def elements(self) -> Iterator:
        raise NotImplementedError

    def to_json(self, x) -> Any:
        return x

    def from_json(self, v) -> Any:
        return v

    def key(self, x) -> str:
        return json.dumps(self.to_json(x), separators=(",", ":"))

    def parse(self, key: str):
        return self.from_json(json.loads(key))

    def spec(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"<{self.name}>"


class CyclicGroup(FiniteGroup):
    def __init__(self, m: int):
        if m < 1:
            raise ValueError("cyclic order must be positive")
        self.m = m
        self.name = f"C{m}"

    identity = 0

    def mul(self, x, y):
        return (x + y) % self.m

    def inv(self, x):
        return (-x) % self.m

    def order(self):
        return self.m

    def elements(self):
        return iter(range(self.m))


class SymmetricGroup(FiniteGroup):
    """Sym(m) on {0..m-1}; elements are image tuples, product = left then right."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("degree must be positive")
        self.m = m
        self.name = f"S{m}"
        self._id = tuple(range(m))

    @property
    def identity(self):
        return self._id

    def mul(self, x, y):
        return _mul(x, y)

    def inv(self, x):
        return _inv(x)

    def order(self):
        return math.factorial(self.m)

    def elements(self):
        return iter(itertools.permutations(range(self.m)))

    def to_json(self, x):
        return list(x)

    def from_json(self, v):
        return tuple(v)


def _sl2_mul(x, y, n):
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % n, (a * f + b * h) % n, (c * e + d * g) % n, (c * f + d * h) % n)


def sl2_order(n: int) -> int:
    """|SL_2(Z/n)| = n^3 prod_{p | n} (1 - p^-2)."""
    if n == 1:
        return 1
    out = n**3
    from sympy import primefactors

    for p in primefactors(n):
        out = out // (p * p) * (p * p - 1)
    return out


class SL2Mod(FiniteGroup):
    """SL_2(Z/N); an element (a, b, c, d) is the matrix [[a, b], [c, d]]."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("modulus must be at least 2")
        self.n = n
        self.name = f"SL2(Z/{n})"

    identity = (1, 0, 0, 1)

    def mul(self, x, y):
        return _sl2_mul(x, y, self.n)

    def inv(self, x):
        a, b, c, d = x
        n = self.n
        return (d % n, -b % n, -c % n, a % n)

    def order(self):
        return sl2_order(self.n)

    def elements(self):
        n = self.n
        for a, b, c, d in itertools.product(range(n), repeat=4):
            if (a * d - b * c) % n == 1:
                yield (a, b, c, d)

    def reduce(self, m) -> tuple:
        return tuple(x % self.n for x in m)

    def to_json(self, x):
        return list(x)

    def from_json(self, v):
        return tuple(v)


class PermGroupHandle(FiniteGroup):
    """A :class:`PermGroup` seen as an abstract finite group (elements are tuples)."""

    def __init__(self, group: PermGroup):
        self.group = group
        self.name = f"P{group.degree}"
        self._id = tuple(range(group.degree))

    @property
    def identity(self):
        return self._id

    def mul(self, x, y):
        return _mul(x, y)

    def inv(self, x):
        return _inv(x)

    def order(self):
        return self.group.order()

    def elements(self):
        seen = {self._id}
        queue = [self._id]
        for x in queue:
            yield x
            for g in self.group._gens:
                y = _mul(x, g)
                if y not in seen:
                    seen.add(y)
                    queue.append(y)

    def element(self, p: FinSuppPerm) -> tuple:
        return self.group._to_tuple(p)

    def to_json(self, x):
        return list(x)

    def from_json(self, v):
        return tuple(v)


class DirectProduct(FiniteGroup):
    def __init__(self, *factors: FiniteGroup):
        if not factors:
            raise ValueError("empty direct product")
        self.factors = factors
        self.name = " x ".join(f.name for f in factors)

    @property
    def identity(self):
        return tuple(f.identity for f in self.factors)

    def mul(self, x, y):
        return tuple(f.mul(a, b) for f, a, b in zip(self.factors, x, y))

    def inv(self, x):
        return tuple(f.inv(a) for f, a in zip(self.factors, x))

    def order(self):
        return math.prod(f.order() for f in self.factors)

    def elements(self):
        return itertools.product(*(list(f.elements()) for f in self.factors))

    def to_json(self, x):
        return [f.to_json(a) for f, a in zip(self.factors, x)]

    def from_json(self, v):
        return tuple(f.from_json(a) for f, a in zip(self.factors, v))


_SPEC_PATTERNS = [
    (re.compile(r"^(?:C|cyclic\s*)(\d+)$"), lambda m: CyclicGroup(int(m))),
    (re.compile(r"^(?:S|symmetric\s*)(\d+)$"), lambda m: SymmetricGroup(int(m))),
    (re.compile(r"^(?:SL2\(Z/(\d+)\)|sl2\s*(\d+))$"), None),
]


def make_catalog_group(spec) -> FiniteGroup:
    """Build a catalog group from a spec string such as ``"C7"``, ``"symmetric 4"``,
    ``"SL2(Z/3)"`` or ``"C2 x S3"``.  Tuples/lists of specs give direct products."""
    if isinstance(spec, FiniteGroup):
        return spec
    if isinstance(spec, (list, tuple)):
        return DirectProduct(*(make_catalog_group(s) for s in spec))
    if not isinstance(spec, str):
        raise ValueError(f"unsupported group spec {spec!r}")
    parts = [p.strip() for p in re.split(r"\s+x\s+", spec.strip())]
    if len(parts) > 1:
        return DirectProduct(*(make_catalog_group(p) for p in parts))
    text = parts[0]
    for pat, build in _SPEC_PATTERNS:
        m = pat.match(text)
        if m:
            if build is None:
                return SL2Mod(int(m.group(1) or m.group(2)))
            return build(m.group(1))
    raise ValueError(f"unsupported group spec {spec!r}")


def default_catalog(max_order: int = 5040) -> list[FiniteGroup]:
    """Catalog of small groups sorted by order (ties broken by name)."""
    groups: list[FiniteGroup] = [CyclicGroup(m) for m in range(1, min(max_order, 64) + 1)]
    groups += [SymmetricGroup(m) for m in range(3, 8) if math.factorial(m) <= max_order]
    n = 2
    while sl2_order(n) <= max_order:
        groups.append(SL2Mod(n))
        n += 1
    for a in range(2, 9):
        for b in range(a, 9):
            if math.gcd(a, b) > 1 and a * b <= max_order:
                groups.append(DirectProduct(CyclicGroup(a), CyclicGroup(b)))
    groups.sort(key=lambda g: (g.order(), g.name))
    return groups
