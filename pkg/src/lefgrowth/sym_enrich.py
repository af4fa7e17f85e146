"""Symmetric enrichments FSym(Omega) x| Gamma and their finite local embeddings.

The ambient group is always a free group (rank 1 gives Z) acting on Omega
through a :mod:`lefgrowth.schreier` action.  Multiplication follows

    (s1, g1)(s2, g2) = (s1 * s2^(g1^-1), g1 g2),   s^g = g^-1 s g,

so a point moves as w.(s, g) = (w s) g.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

from .embeddings import (
    FiniteDomain,
    GrowthBoundRecord,
    PartialMapWitness,
    compare_growth_witness,
    rf_growth_symmetric,
    verify_local_embedding,
)
from .groupkit import (
    CyclicGroup,
    FiniteGroup,
    FinSuppPerm,
    FreeWord,
    Letter,
    free_ball,
    letter_name,
)
from .presentations import lerf_lower_bound
from .schreier import BoundaryError, IntegerLineAction, act_word

# ---------------------------------------------------------------------------
# Elements and arithmetic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnrichElem:
    sigma: FinSuppPerm
    g: FreeWord

    def to_json(self) -> dict:
        return {"perm": [list(_point_json(p) for p in c) for c in self.sigma.cycles()], "word": str(self.g)}

    @classmethod
    def from_json(cls, data: dict) -> EnrichElem:
        sigma = FinSuppPerm.from_cycles([[_point_from_json(p) for p in c] for c in data["perm"]])
        return cls(sigma, FreeWord.parse(data["word"]))

    def key(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    def __repr__(self) -> str:
        return f"({self.sigma!r}, {self.g})"


def _point_json(p):
    return list(p) if isinstance(p, tuple) else p


def _point_from_json(p):
    return tuple(p) if isinstance(p, list) else p


class SymEnrichment:
    """Arithmetic in FSym(Omega) x| F_k for an action of F_k on Omega.

    ``universe`` (optional) is the finite window of Omega in which supports
    must stay; leaving it raises :class:`BoundaryError`.
    """

    def __init__(self, action, universe: Iterable | None = None):
        self.action = action
        self.rank = max(g for g, _ in action.letters) + 1
        self.universe = set(universe) if universe is not None else None
        self.identity = EnrichElem(FinSuppPerm(), FreeWord())

    def act_point(self, point, g: FreeWord):
        return act_word(self.action, point, g)

    def conj(self, sigma: FinSuppPerm, g: FreeWord) -> FinSuppPerm:
        """sigma^g, which moves the support along g."""
        if not len(g):
            return sigma
        mapping = {}
        for p in sigma.support():
            q = self.act_point(p, g)
            if self.universe is not None and q not in self.universe:
                raise BoundaryError(f"support point {p!r} leaves the window under {g}")
            mapping[p] = q
        return sigma.conjugate_by(mapping.__getitem__)

    def mul(self, x: EnrichElem, y: EnrichElem) -> EnrichElem:
        return EnrichElem(x.sigma * self.conj(y.sigma, x.g.inverse()), x.g * y.g)

    def inv(self, x: EnrichElem) -> EnrichElem:
        return EnrichElem(self.conj(x.sigma.inverse(), x.g), x.g.inverse())

    def point_action(self, point, x: EnrichElem):
        return self.act_point(x.sigma(point), x.g)

    def ambient(self, letter: Letter) -> EnrichElem:
        return EnrichElem(FinSuppPerm(), FreeWord((letter,)))

    def perm(self, sigma: FinSuppPerm) -> EnrichElem:
        return EnrichElem(sigma, FreeWord())


def enrich_mul(enr: SymEnrichment, x: EnrichElem, y: EnrichElem) -> EnrichElem:
    return enr.mul(x, y)


def integer_enrichment(universe: Iterable | None = None) -> SymEnrichment:
    """FSym(Z) x| Z with the generator t = ``a`` acting by w -> w + 1."""
    return SymEnrichment(IntegerLineAction(), universe)


# ---------------------------------------------------------------------------
# Generators and words
# ---------------------------------------------------------------------------


@dataclass
class EnrichGenSet:
    letters: tuple[Letter, ...]
    transpositions: list[FinSuppPerm]
    base: Any

    def symbols(self) -> list[tuple]:
        """Generator symbols with inverses: ("s", letter) and ("t", i)."""
        return [("s", l) for l in self.letters] + [("t", i) for i in range(len(self.transpositions))]

    def element(self, enr: SymEnrichment, sym: tuple) -> EnrichElem:
        kind, val = sym
        if kind == "s":
            return enr.ambient(val)
        return enr.perm(self.transpositions[val])

    def name(self, sym: tuple) -> str:
        kind, val = sym
        if kind == "s":
            return letter_name(val)
        return f"t{val}"


def enrich_generators(action, base=None) -> EnrichGenSet:
    """S together with the transpositions (w0 w0s) for s in S with w0 s != w0."""
    base = action.base if base is None else base
    ts: list[FinSuppPerm] = []
    for letter in action.letters:
        y = action.act(base, letter)
        if y == base:
            continue
        t = FinSuppPerm.transposition(base, y)
        if t not in ts:
            ts.append(t)
    return EnrichGenSet(tuple(action.letters), ts, base)


def eval_symbols(enr: SymEnrichment, gens: EnrichGenSet, word: Sequence[tuple]) -> EnrichElem:
    acc = enr.identity
    for sym in word:
        acc = enr.mul(acc, gens.element(enr, sym))
    return acc


@dataclass
class Decomposition:
    factors: list[tuple[FinSuppPerm, FreeWord]]  # (t, w) standing for t^w
    ambient: FreeWord

    def h(self, enr: SymEnrichment) -> FinSuppPerm:
        acc = FinSuppPerm()
        for t, w in self.factors:
            acc = acc * enr.conj(t, w)
        return acc

    def element(self, enr: SymEnrichment) -> EnrichElem:
        return EnrichElem(self.h(enr), self.ambient)


def sdprod_decompose(gens: EnrichGenSet, word: Sequence[tuple], n: int) -> Decomposition:
    """Rewrite a word over S u T as h * (s1 ... sk) with h a product of conjugates.

    Walking left to right with ambient prefix w, each transposition t becomes
    the factor t^(w^-1); the conjugators have length at most n - 1.
    """
    if len(word) > n:
        raise ValueError(f"word of length {len(word)} exceeds n = {n}")
    prefix = FreeWord()
    factors = []
    for kind, val in word:
        if kind == "s":
            prefix = prefix * FreeWord((val,))
        else:
            factors.append((gens.transpositions[val], prefix.inverse()))
    return Decomposition(factors, prefix)


def in_window(x: EnrichElem, n: int, ball_points: Iterable) -> bool:
    """x lies in I(n) = Sym(B(n)) B_S(n)."""
    return len(x.g) <= n and x.sigma.support() <= set(ball_points)


def enrichment_ball(enr: SymEnrichment, gens: EnrichGenSet, n: int) -> list[EnrichElem]:
    """B_{S u T}(n) by breadth-first search (transpositions are involutions)."""
    syms = gens.symbols()
    elems = [gens.element(enr, s) for s in syms]
    seen = {enr.identity}
    frontier = [enr.identity]
    for _ in range(n):
        nxt = []
        for x in frontier:
            for e in elems:
                y = enr.mul(x, e)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return list(seen)


# ---------------------------------------------------------------------------
# Finite targets
# ---------------------------------------------------------------------------


class FiniteSymEnrichment(FiniteGroup):
    """Sym(X) x| Q for a finite group Q acting on X = {0, ..., k-1}.

    Elements are (perm tuple, q).  The full group is never enumerated.
    """

    def __init__(self, k: int, Q: FiniteGroup, act: Callable[[int, Any], int], name: str = ""):
        self.k = k
        self.Q = Q
        self.act = act
        self.name = name or f"Sym({k}) x| {Q.name}"
        self._id = (tuple(range(k)), Q.identity)
        self._relabel: dict = {}

    @property
    def identity(self):
        return self._id

    def order(self) -> int:
        return math.factorial(self.k) * self.Q.order()

    def elements(self):
        raise NotImplementedError("the finite enrichment is too large to enumerate")

    def relabel(self, q) -> tuple[tuple, tuple]:
        """Image tuples of x -> x.q and of its inverse (cached)."""
        key = self.Q.key(q)
        hit = self._relabel.get(key)
        if hit is None:
            r = tuple(self.act(x, q) for x in range(self.k))
            rinv = [0] * self.k
            for i, j in enumerate(r):
                rinv[j] = i
            hit = (r, tuple(rinv))
            self._relabel[key] = hit
        return hit

    def mul(self, x, y):
        tau1, q1 = x
        tau2, q2 = y
        r, rinv = self.relabel(q1)
        # tau2^(q1^-1) sends y to rinv(tau2(r(y)))
        conj = [rinv[tau2[r[i]]] for i in range(self.k)]
        return (tuple(conj[v] for v in tau1), self.Q.mul(q1, q2))

    def inv(self, x):
        tau, q = x
        r, _ = self.relabel(q)
        out = [0] * self.k
        # (tau, q)^-1 = ((tau^-1)^q, q^-1) and (tau^-1)^q sends r(tau(i)) to r(i)
        for i, j in enumerate(tau):
            out[r[j]] = r[i]
        return (tuple(out), self.Q.inv(q))

    def to_json(self, x):
        return [list(x[0]), self.Q.to_json(x[1])]

    def from_json(self, v):
        return (tuple(v[0]), self.Q.from_json(v[1]))


# ---------------------------------------------------------------------------
# The local embedding Phi_n
# ---------------------------------------------------------------------------


@dataclass
class ActionPair:
    """A concrete action local embedding (pi_n, theta_n) of (B_S(n), B(n))."""

    action: Any
    n: int
    words: list[FreeWord]
    points: list
    pi: dict  # str(word) -> element of Q
    theta: dict  # point -> index in X
    target: FiniteSymEnrichment
    label: str = ""

    def enrichment(self) -> SymEnrichment:
        return SymEnrichment(self.action)


def integer_pair(n: int, m: int | None = None) -> ActionPair:
    """Z acting on itself, reduced mod m (default 2n + 3) onto C_m acting on itself."""
    m = 2 * n + 3 if m is None else m
    words = free_ball(1, n)
    points = list(range(-n, n + 1))
    Q = CyclicGroup(m)
    pi = {str(w): w.exponent_sum(0) % m for w in words}
    theta = {p: p % m for p in points}
    target = FiniteSymEnrichment(m, Q, lambda x, q: (x + q) % m)
    return ActionPair(IntegerLineAction(), n, words, points, pi, theta, target, f"Z, n={n}, C{m}")


def permissible_pair(approx) -> ActionPair:
    """The pair built by :func:`lefgrowth.permissible.build_finite_action`."""
    n = approx.n
    words = free_ball(2, n)
    points = approx.omega.points_upto(n)
    pi = {str(w): approx.pi(w) for w in words}
    theta = {p: approx.theta(p) for p in points}
    target = FiniteSymEnrichment(approx.X_size, approx.Q, lambda x, q: q[0][x])
    return ActionPair(approx.omega.action, n, words, points, pi, theta, target, f"F2 on Omega({approx.f.name}), n={n}")


@dataclass
class PhiWitness:
    status: str
    mode: str
    elements: int
    pairs_examined: int
    pairs_checked: int
    support_checks: int
    injective: bool
    target_order: int
    seed: int | None = None
    counterexample: tuple | None = None
    label: str = ""

    @property
    def verified(self) -> bool:
        return self.status == "verified"


class _PhiData:
    """Index tables shared by the exhaustive and sampled checks."""

    def __init__(self, pair: ActionPair):
        self.pair = pair
        pts = pair.points
        self.k = len(pts)
        self.pidx = {p: i for i, p in enumerate(pts)}
        self.words = pair.words
        self.widx = {str(w): i for i, w in enumerate(self.words)}
        self.theta = [pair.theta[p] for p in pts]
        self.X = pair.target.k
        self.q = [pair.pi[str(w)] for w in self.words]
        self._prod: dict = {}
        self._shift: dict = {}
        self._tset: dict = {}
        self._lift: dict = {}

    def prod(self, i: int, j: int) -> int:
        key = (i, j)
        r = self._prod.get(key)
        if r is None:
            r = self.widx.get(str(self.words[i] * self.words[j]), -1)
            self._prod[key] = r
        return r

    def shift(self, i: int) -> list[int]:
        """Point index p -> index of p.g_i^-1, or -1 outside B(n)."""
        r = self._shift.get(i)
        if r is None:
            ginv = self.words[i].inverse()
            r = []
            for p in self.pair.points:
                try:
                    y = act_word(self.pair.action, p, ginv)
                except BoundaryError:
                    y = None
                r.append(self.pidx.get(y, -1))
            self._shift[i] = r
        return r

    def target_set(self, i: int) -> frozenset:
        """theta(B(n)).pi(g_i) intersected with theta(B(n))."""
        r = self._tset.get(i)
        if r is None:
            th = set(self.theta)
            img = {self.pair.target.act(x, self.q[i]) for x in self.theta}
            r = frozenset(th & img)
            self._tset[i] = r
        return r

    def lift(self, sigma: tuple) -> tuple:
        r = self._lift.get(sigma)
        if r is None:
            out = list(range(self.X))
            for i, j in enumerate(sigma):
                if i != j:
                    out[self.theta[i]] = self.theta[j]
            r = tuple(out)
            self._lift[sigma] = r
        return r

    def phi(self, sigma: tuple, i: int):
        return (self.lift(sigma), self.q[i])

    def check_pair(self, s1: tuple, i1: int, s2: tuple, i2: int):
        """Return None if outside I(n), True if the identity holds, else False.

        Also returns whether the support bookkeeping held.
        """
        j = self.prod(i1, i2)
        if j < 0:
            return None, True
        sh = self.shift(i1)
        for p, v in enumerate(s2):
            if p != v and sh[p] < 0:
                return None, True
        conj = list(range(self.k))
        for p, v in enumerate(s2):
            if p != v:
                conj[sh[p]] = sh[v]
        prod = tuple(conj[v] for v in s1)
        lhs = self.phi(prod, j)
        rhs = self.pair.target.mul(self.phi(s1, i1), self.phi(s2, i2))
        tset = self.target_set(i1)
        supp_ok = all(self.theta[p] in tset for p, v in enumerate(s2) if p != v)
        return lhs == rhs, supp_ok


def build_Phi(pair: ActionPair, mode: str = "exhaustive", samples: int = 100_000, seed: int = 0, out_fraction: float = 0.1) -> PhiWitness:
    """Verify Phi_n(s g) = theta~(s) pi(g) as a local embedding of I(n).

    ``mode="exhaustive"`` checks every pair of I(n) = Sym(B(n)) B_S(n); the
    membership of a product is decided exactly (x y lies in I(n) iff g1 g2
    lies in B_S(n) and supp s2 lies in B(n) g1).  ``mode="sampled"`` checks
    ``samples`` random pairs whose product lies in I(n), plus a fraction of
    unconstrained pairs that exercise the membership test.
    """
    d = _PhiData(pair)
    k = d.k
    perms = None
    if len(set(d.theta)) != k:
        raise ValueError("theta is not injective")
    if len({pair.target.Q.key(q) for q in d.q}) != len(d.q):
        raise ValueError("pi is not injective on the ball")
    n_elems = math.factorial(k) * len(d.words)
    examined = checked = supp = 0
    fail = None
    if mode == "exhaustive":
        perms = list(itertools.permutations(range(k)))
        images = {(d.lift(s), pair.target.Q.key(d.q[i])) for s in perms for i in range(len(d.words))}
        injective = len(images) == n_elems
        by_support: dict = {}
        for s in perms:
            by_support.setdefault(frozenset(p for p, v in enumerate(s) if p != v), []).append(s)
        for i1 in range(len(d.words)):
            sh = d.shift(i1)
            A = frozenset(p for p in range(k) if sh[p] >= 0)
            s2_list = [s for supp_set, lst in by_support.items() if supp_set <= A for s in lst]
            partners = [i2 for i2 in range(len(d.words)) if d.prod(i1, i2) >= 0]
            examined += len(perms) * len(d.words) * len(perms)
            for i2 in partners:
                for s2 in s2_list:
                    for s1 in perms:
                        ok, sok = d.check_pair(s1, i1, s2, i2)
                        checked += 1
                        supp += sok
                        if not ok or not sok:
                            fail = (s1, str(d.words[i1]), s2, str(d.words[i2]))
                            break
                    if fail:
                        break
                if fail:
                    break
            if fail:
                break
        seed_used = None
    elif mode == "sampled":
        rng = random.Random(seed)
        injective = True  # theta and pi are injective, so Phi is
        compat = {}
        while checked < samples:
            i1 = rng.randrange(len(d.words))
            s1 = list(range(k))
            rng.shuffle(s1)
            s1 = tuple(s1)
            if rng.random() < out_fraction:
                i2 = rng.randrange(len(d.words))
                s2 = list(range(k))
                rng.shuffle(s2)
            else:
                if i1 not in compat:
                    compat[i1] = [i2 for i2 in range(len(d.words)) if d.prod(i1, i2) >= 0]
                i2 = rng.choice(compat[i1])
                sh = d.shift(i1)
                A = [p for p in range(k) if sh[p] >= 0]
                img = A[:]
                rng.shuffle(img)
                s2 = list(range(k))
                for p, v in zip(A, img):
                    s2[p] = v
            s2 = tuple(s2)
            examined += 1
            ok, sok = d.check_pair(s1, i1, s2, i2)
            if ok is None:
                continue
            checked += 1
            supp += sok
            if not ok or not sok:
                fail = (s1, str(d.words[i1]), s2, str(d.words[i2]))
                break
        seed_used = seed
    else:
        raise ValueError(f"unknown mode {mode!r}")
    status = "verified" if fail is None and injective else "failed"
    return PhiWitness(status, mode, n_elems, examined, checked, supp, injective, pair.target.order(), seed_used, fail, pair.label)


def phi_partial_witness(pair: ActionPair) -> PartialMapWitness:
    """Phi_n as an explicit table on I(n), verified by the generic checker.

    Meant for small windows; the table has |B(n)|! |B_S(n)| entries.
    """
    domain = window_domain(pair)
    d = _PhiData(pair)
    table = {}
    for x in domain.elements:
        s = tuple(d.pidx[x.sigma(p)] for p in pair.points)
        table[domain.key(x)] = d.phi(s, d.widx[str(x.g)])
    return verify_local_embedding(domain, pair.target, table)


def window_domain(pair: ActionPair) -> FiniteDomain:
    """I(n) as a :class:`FiniteDomain` of :class:`EnrichElem` values."""
    enr = pair.enrichment()
    pts = pair.points
    pset = set(pts)
    n = pair.n
    sigmas = [FinSuppPerm(dict(zip(pts, img))) for img in itertools.permutations(pts)]
    elements = [EnrichElem(s, w) for w in pair.words for s in sigmas]

    def mul(x, y):
        if len(x.g * y.g) > n:
            return None
        try:
            z = enr.mul(x, y)
        except BoundaryError:
            return None
        return z if z.sigma.support() <= pset else None

    return FiniteDomain(elements, mul, lambda x: x.key(), f"I({n})")


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def enrich_bounds_table(f, ns: Iterable[int], seed: int = 0, relator_radius: int = 8) -> list[GrowthBoundRecord]:
    """Upper bounds |X_n|! |Q_n| at radius n and lower bounds f(n)! at radius
    (2n - 1) * relator_radius for n >= 5 (16n - 8 with the default 8)."""
    from .permissible import PermissibleFn, build_finite_action

    if not isinstance(f, PermissibleFn):
        f = PermissibleFn(tuple(f))
    out = []
    for n in ns:
        if n >= 2:
            a = build_finite_action(f, n, seed=seed)
            upper = math.factorial(a.X_size) * a.Q_order
            notes = f"|X_n|={a.X_size}; |P_n|={a.P_order} ({a.P.method}); N={a.modulus}; |Q_n|={a.Q_order}"
            rec = GrowthBoundRecord(n, None, "", upper, "explicit witness: Sym(X_n) x| Q_n", notes)
        else:
            rec = GrowthBoundRecord(n, None, "", None, "", "no finite approximation for n < 2")
        if n < 5:
            rec.notes = (rec.notes + "; " if rec.notes else "") + "no certified lower bound"
        out.append(rec)
        if n >= 5:
            R = rf_growth_symmetric(f(n), relator_radius)
            out.append(lerf_lower_bound(2 * n - 1, relator_radius, R, f"R = f({n})! = RF growth of Sym(B({n}))"))
    return out


@dataclass
class StirlingWitness:
    K: int | None
    C_Q: float
    comparison: Any
    ns: list[int]


def stirling_witness(f_values: Callable[[int], int] | Sequence[int], uppers: dict, q_orders: dict, x_sizes: dict, K_max: int = 32) -> StirlingWitness:
    """Finite-range witness that the upper bounds sit below f(Kn)!.

    Finds the least K <= K_max with upper(n) <= f(Kn)! on the given n, and
    logs C_Q = max ln(|Q_n| / |X_n|) / n, so that with |X_n| = f(2n) the
    bound reads |X_n|! |Q_n| <= f(2n)! f(2n) e^(C_Q n) on the range.
    """
    ns = sorted(uppers)
    if callable(f_values):
        f2 = lambda x: math.factorial(f_values(x))
    else:
        f2 = [math.factorial(v) for v in f_values]
    comp = None
    K = None
    for cand in range(1, K_max + 1):
        comp = compare_growth_witness(lambda x: uppers[x], f2, cand, xs=ns)
        if comp.ok and comp.checked == len(ns):
            K = cand
            break
    C = max((math.log(q_orders[n]) - math.log(x_sizes[n])) / n for n in ns) if ns else 0.0
    return StirlingWitness(K, C, comp, ns)
