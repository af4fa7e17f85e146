"""Local embeddings: verification, tiny exact searches and growth comparisons."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .groupkit import (
    FiniteGroup,
    FreeWord,
    SymmetricGroup,
    default_catalog,
    free_ball,
)

# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass
class FiniteDomain:
    """A finite subset of a group with a multiplication oracle.

    ``mul(x, y)`` returns the product when it lies in the domain and ``None``
    otherwise.  ``elements`` are listed in search order (length, then lex).
    """

    elements: list
    mul: Callable[[Any, Any], Any]
    key: Callable[[Any], str] = str
    name: str = "domain"
    spec: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.elements)

    def restrict(self, subset: Iterable) -> FiniteDomain:
        sub = list(subset)
        keys = {self.key(x) for x in sub}

        def mul(x, y):
            p = self.mul(x, y)
            return p if p is not None and self.key(p) in keys else None

        return FiniteDomain(sub, mul, self.key, f"{self.name}|restricted")


def z_ball_domain(n: int) -> FiniteDomain:
    """The ball {-n, ..., n} in Z, listed in numeric order."""
    elements = list(range(-n, n + 1))

    def mul(x, y):
        s = x + y
        return s if abs(s) <= n else None

    return FiniteDomain(elements, mul, str, f"Z-ball({n})", {"type": "z-ball", "n": n})


def free_ball_domain(rank: int, n: int) -> FiniteDomain:
    elements = free_ball(rank, n)

    def mul(x, y):
        p = x * y
        return p if len(p) <= n else None

    return FiniteDomain(elements, mul, str, f"F{rank}-ball({n})", {"type": "free-ball", "rank": rank, "n": n})


def group_domain(elements: Sequence, mul: Callable, key: Callable = str, name: str = "domain") -> FiniteDomain:
    """Domain given by an explicit element list inside an ambient group."""
    keys = {key(x) for x in elements}

    def dmul(x, y):
        p = mul(x, y)
        return p if key(p) in keys else None

    return FiniteDomain(list(elements), dmul, key, name)


# ---------------------------------------------------------------------------
# Witness records
# ---------------------------------------------------------------------------


@dataclass
class PartialMapWitness:
    domain: FiniteDomain
    target: Any
    table: dict  # domain key -> target element
    status: str = "unchecked"
    counterexample: tuple | None = None
    checks: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return self.status == "verified"

    def image(self, x):
        return self.table[self.domain.key(x)]


@dataclass
class GrowthBoundRecord:
    radius: int
    lower: int | None = None
    lower_provenance: str = ""
    upper: int | None = None
    upper_provenance: str = ""
    notes: str = ""
    witness: PartialMapWitness | None = None

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def exact(self) -> bool:
        return self.lower is not None and self.lower == self.upper


class SearchLimitExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def verify_local_embedding(domain: FiniteDomain, target: FiniteGroup, table: dict | Callable) -> PartialMapWitness:
    """Check injectivity and partial multiplicativity of ``table`` on ``domain``.

    The first failure found is recorded: ``("injectivity", x, y)`` for two
    elements with equal images, or ``("multiplicativity", g, h)`` for a pair
    whose product lies in the domain but is not respected.
    """
    if callable(table):
        table = {domain.key(x): table(x) for x in domain.elements}
    for x in domain.elements:
        if domain.key(x) not in table:
            raise ValueError(f"table is not total: missing {domain.key(x)}")
    wit = PartialMapWitness(domain, target, table)
    seen: dict = {}
    checks = 0
    for x in domain.elements:
        img = table[domain.key(x)]
        k = target.key(img)
        checks += 1
        if k in seen:
            wit.status, wit.counterexample, wit.checks = "failed", ("injectivity", seen[k], x), checks
            return wit
        seen[k] = x
    for g in domain.elements:
        ig = table[domain.key(g)]
        for h in domain.elements:
            p = domain.mul(g, h)
            if p is None:
                continue
            checks += 1
            if target.mul(ig, table[domain.key(h)]) != table[domain.key(p)]:
                wit.status, wit.counterexample, wit.checks = "failed", ("multiplicativity", g, h), checks
                return wit
    wit.status, wit.checks = "verified", checks
    return wit


@dataclass
class ActionWitness:
    status: str
    checks: int
    counterexample: tuple | None = None

    @property
    def verified(self) -> bool:
        return self.status == "verified"


def verify_action_local_embedding(
    pi: PartialMapWitness,
    points: Sequence,
    theta: dict,
    act: Callable[[Any, Any], Any],
    target_act: Callable[[Any, Any], Any],
) -> ActionWitness:
    """Check theta(w g) = theta(w) pi(g) whenever w and w g lie in ``points``.

    ``act(w, g)`` may raise or return a point outside ``points``; both mean the
    instance is vacuous.  ``pi`` must already be verified and ``theta`` must be
    injective.
    """
    if not pi.verified:
        raise ValueError("pi is not a verified local embedding")
    images = [theta[w] for w in points]
    if len(set(images)) != len(images):
        raise ValueError("theta is not injective")
    pset = set(points)
    checks = 0
    for g in pi.domain.elements:
        pg = pi.image(g)
        for w in points:
            try:
                wg = act(w, g)
            except (ValueError, KeyError):
                continue
            if wg not in pset:
                continue
            checks += 1
            if theta[wg] != target_act(theta[w], pg):
                return ActionWitness("failed", checks, (g, w))
    return ActionWitness("verified", checks)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def _search_order(domain: FiniteDomain) -> list:
    def key(x):
        if isinstance(x, FreeWord):
            return x.sort_key()
        if isinstance(x, int):
            return (abs(x), 0 if x >= 0 else 1)
        return (0, str(x))

    return sorted(domain.elements, key=key)


def find_embedding(domain: FiniteDomain, target: FiniteGroup) -> dict | None:
    """Backtracking search for a local embedding of ``domain`` into ``target``.

    Images are assigned element by element (search order) and tried in the
    target's element order; every product constraint among assigned elements
    is checked as soon as its last element is assigned.
    """
    order = _search_order(domain)
    n = len(order)
    idx = {domain.key(x): i for i, x in enumerate(order)}
    # constraints[k] lists (i, j, l) with order[i]*order[j] = order[l], max(i,j,l) = k
    constraints: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for i, x in enumerate(order):
        for j, y in enumerate(order):
            p = domain.mul(x, y)
            if p is None:
                continue
            l = idx[domain.key(p)]
            constraints[max(i, j, l)].append((i, j, l))
    telems = list(target.elements())
    tkeys = [target.key(t) for t in telems]
    assign: list = [None] * n
    used: set = set()

    def rec(k: int) -> bool:
        if k == n:
            return True
        for t, tk in zip(telems, tkeys):
            if tk in used:
                continue
            assign[k] = t
            if all(target.mul(assign[i], assign[j]) == assign[l] for i, j, l in constraints[k]):
                used.add(tk)
                if rec(k + 1):
                    return True
                used.discard(tk)
            assign[k] = None
        return False

    if n > len(telems):
        return None
    if not rec(0):
        return None
    return {domain.key(x): assign[i] for i, x in enumerate(order)}


def search_min_embedding(
    domain: FiniteDomain,
    catalog: Sequence[FiniteGroup] | None = None,
    order_cap: int = 5040,
    limit: int = 9,
    radius: int | None = None,
    prune_by_order: bool = True,
) -> GrowthBoundRecord:
    """Smallest catalog group admitting a local embedding of ``domain``.

    The lower bound is |domain| (an injective map needs that many targets).
    With ``prune_by_order=False`` groups below that size are searched too,
    which confirms the bound by exhaustion rather than counting.
    """
    if len(domain) > limit:
        raise SearchLimitExceeded(f"domain of size {len(domain)} exceeds search limit {limit}")
    if catalog is None:
        catalog = default_catalog(order_cap)
    catalog = sorted((g for g in catalog if g.order() <= order_cap), key=lambda g: (g.order(), g.name))
    lower = len(domain)
    rejected = []
    for group in catalog:
        if prune_by_order and group.order() < lower:
            continue
        table = find_embedding(domain, group)
        if table is None:
            rejected.append(group.name)
            continue
        wit = verify_local_embedding(domain, group, table)
        if not wit.verified:
            raise AssertionError(f"search returned a bad table: {wit.counterexample}")
        notes = f"rejected: {', '.join(rejected)}" if rejected else ""
        return GrowthBoundRecord(
            radius if radius is not None else -1,
            lower,
            "ball size",
            group.order(),
            f"explicit witness: {group.name}",
            notes,
            wit,
        )
    return GrowthBoundRecord(radius if radius is not None else -1, lower, "ball size", None, "", "no catalog group works")


# ---------------------------------------------------------------------------
# RF growth of symmetric groups
# ---------------------------------------------------------------------------


def _sym_ball(m: int, r: int) -> list[tuple]:
    """Ball of radius r in Sym(m) for the Coxeter generators (i i+1)."""
    ident = tuple(range(m))
    gens = []
    for i in range(m - 1):
        p = list(ident)
        p[i], p[i + 1] = p[i + 1], p[i]
        gens.append(tuple(p))
    seen = {ident}
    frontier = [ident]
    for _ in range(r):
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(g[i] for i in x)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(seen)


def normal_subgroups(group: SymmetricGroup) -> list[frozenset]:
    """Normal subgroups of a small symmetric group as unions of conjugacy classes."""
    elems = list(group.elements())
    classes: list[frozenset] = []
    seen: set = set()
    for x in elems:
        if x in seen:
            continue
        cls = frozenset(group.mul(group.mul(group.inv(g), x), g) for g in elems)
        seen |= cls
        classes.append(cls)
    ident = group.identity
    others = [c for c in classes if ident not in c]
    out = []
    for k in range(len(others) + 1):
        for combo in itertools.combinations(others, k):
            s = frozenset({ident}).union(*combo)
            if all(group.mul(a, b) in s for a in s for b in s):
                out.append(s)
    return sorted(out, key=len)


def rf_growth_symmetric(m: int, r: int = 8) -> int:
    """Full RF growth of Sym(m) at radius r (Coxeter generators).

    For m >= 5 the only quotients are Sym(m), C2 and 1, and a ball with at
    least three elements cannot inject into C2, so the answer is m!.  Smaller
    m fall back to enumerating normal subgroups.
    """
    if m < 1 or r < 0:
        raise ValueError("need m >= 1 and r >= 0")
    if m >= 5:
        # radius >= 1 already holds the identity and m - 1 >= 4 generators
        return math.factorial(m) if r >= 1 else 1
    group = SymmetricGroup(m)
    ball = _sym_ball(m, r)
    best = None
    for N in normal_subgroups(group):
        cosets = {min(group.mul(n, x) for n in N) for x in ball}
        if len(cosets) == len(ball):
            q = group.order() // len(N)
            best = q if best is None else min(best, q)
    return best


# ---------------------------------------------------------------------------
# Comparison witnesses
# ---------------------------------------------------------------------------


@dataclass
class ComparisonResult:
    ok: bool
    C: int
    first_failure: int | None
    failures: list[int]
    checked: int
    skipped: int
    label: str = "witness, not proof"

    def __str__(self) -> str:
        if self.ok:
            return f"ok with C={self.C} on {self.checked} points ({self.label})"
        return f"fails at x={self.first_failure} with C={self.C} ({self.label})"


def compare_growth_witness(f1, f2, C: int, xs: Iterable[int] | None = None) -> ComparisonResult:
    """Finite-range check of f1(x) <= f2(Cx).

    Tables are sequences indexed from 0; callables are evaluated directly.
    When ``f2`` is a table, points x with Cx outside it are skipped.
    """
    if C < 1:
        raise ValueError("C must be a positive integer")
    t1 = not callable(f1)
    t2 = not callable(f2)
    if t1 and t2 and len(f1) != len(f2):
        raise ValueError("tables cover different ranges")
    if xs is None:
        if not t1:
            raise ValueError("need an explicit range when f1 is a callable")
        xs = range(len(f1))
    get1 = (lambda x: f1[x]) if t1 else f1
    failures = []
    checked = skipped = 0
    for x in xs:
        if t2 and not 0 <= C * x < len(f2):
            skipped += 1
            continue
        v2 = f2[C * x] if t2 else f2(C * x)
        checked += 1
        if get1(x) > v2:
            failures.append(x)
    return ComparisonResult(not failures, C, failures[0] if failures else None, failures, checked, skipped)
