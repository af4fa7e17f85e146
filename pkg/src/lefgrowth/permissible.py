"""Permissible growth functions and the layered F2-actions realising them.

Points of the action are pairs ``(layer, index)``.  Generator ``a`` (letter 0)
preserves each block L_{2m} u L_{2m+1}; generator ``b`` (letter 1) preserves
each block L_{2m-1} u L_{2m} and fixes the base point (0, 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

from .embeddings import (
    ActionWitness,
    PartialMapWitness,
    free_ball_domain,
    verify_action_local_embedding,
    verify_local_embedding,
)
from .groupkit import (
    DirectProduct,
    FinSuppPerm,
    FreeWord,
    PermGroup,
    PermGroupHandle,
    SL2Mod,
    free_ball,
)
from .schreier import PermutationAction, act_word, ball

BASE = (0, 0)

# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    index: int
    clause: str
    message: str

    def to_dict(self) -> dict:
        return {"index": self.index, "clause": self.clause, "message": self.message}


@dataclass(frozen=True)
class PermissibleCheck:
    ok: bool
    violation: Violation | None = None

    def to_dict(self) -> dict:
        out: dict = {"ok": self.ok}
        if self.violation is not None:
            out["violation"] = self.violation.to_dict()
        return out


def check_permissible(table: Sequence[int]) -> PermissibleCheck:
    """Check f(0) = 1, strict increase, and (d_n)/2 <= d_{n+1} <= 2 d_n,
    where d_n = f(n) - f(n-1), on the given finite range."""
    f = list(table)
    if len(f) < 2:
        raise ValueError("table needs at least two entries")
    if f[0] != 1:
        return PermissibleCheck(False, Violation(0, "f0", f"f(0) = {f[0]}, expected 1"))
    for n in range(1, len(f)):
        if f[n] <= f[n - 1]:
            return PermissibleCheck(False, Violation(n, "increasing", f"f({n}) = {f[n]} <= f({n-1}) = {f[n-1]}"))
    for n in range(1, len(f) - 1):
        d0, d1 = f[n] - f[n - 1], f[n + 1] - f[n]
        if 2 * d1 < d0:
            return PermissibleCheck(False, Violation(n, "lower", f"f({n+1})-f({n}) = {d1} < ({d0})/2"))
        if d1 > 2 * d0:
            return PermissibleCheck(False, Violation(n, "upper", f"f({n+1})-f({n}) = {d1} > 2*{d0}"))
    return PermissibleCheck(True)


@dataclass(frozen=True)
class PermissibleFn:
    values: tuple[int, ...]
    name: str = "table"

    def __call__(self, n: int) -> int:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def depth(self) -> int:
        return len(self.values) - 1

    def differences(self) -> list[int]:
        return [1] + [b - a for a, b in zip(self.values, self.values[1:])]


BUILTINS = {
    "linear": lambda n: n + 1,
    "pow2": lambda n: 2**n,
    "odd": lambda n: 2 * n + 1,
}


def make_table(spec: str | Sequence[int], depth: int | None = None) -> PermissibleFn:
    """Build a table from a builtin name, ``"poly:alpha"``, a JSON array or a
    comma-separated list.  Builtins need ``depth`` (last index)."""
    if not isinstance(spec, str):
        return PermissibleFn(tuple(int(x) for x in spec))
    text = spec.strip()
    if text in BUILTINS or text.startswith("poly:"):
        if depth is None or depth < 1:
            raise ValueError("builtin tables need depth >= 1")
        if text.startswith("poly:"):
            alpha = float(text.split(":", 1)[1])
            if alpha <= 0:
                raise ValueError("poly exponent must be positive")
            fn = lambda n: int(round((n + 1) ** alpha))
        else:
            fn = BUILTINS[text]
        return PermissibleFn(tuple(fn(n) for n in range(depth + 1)), text)
    if text.startswith("["):
        values = json.loads(text)
        if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
            raise ValueError("table must be a JSON array of integers")
        return PermissibleFn(tuple(values))
    return PermissibleFn(tuple(int(x) for x in text.split(",") if x.strip()))


# ---------------------------------------------------------------------------
# The layered action
# ---------------------------------------------------------------------------


@dataclass
class BlockInfo:
    generator: str
    lower: int  # index of the lower layer
    upper: int
    big: int  # index of the layer playing L (|L| >= |L'|)
    small: int
    u: int
    v: int


@dataclass
class LayeredAction:
    f: PermissibleFn
    depth: int
    layers: list[list[tuple]]
    a: FinSuppPerm
    b: FinSuppPerm
    blocks: list[BlockInfo]
    action: PermutationAction = field(repr=False)

    @property
    def base(self):
        return BASE

    @property
    def letters(self):
        return self.action.letters

    def act(self, point, letter):
        return self.action.act(point, letter)

    def ball(self, n: int):
        if n > self.depth - 1:
            raise ValueError(f"radius {n} beyond the certified range (depth {self.depth})")
        return ball(self.action, BASE, n)

    def points_upto(self, n: int) -> list[tuple]:
        return [p for layer in self.layers[: n + 1] for p in layer]


def _solve_block(big: int, small: int) -> tuple[int, int]:
    u, v = big - small, 2 * small - big
    if u < 0 or v < 0:
        raise ValueError(f"block sizes {big}, {small} admit no 3-cycle/transposition split")
    return u, v


def _block_perm(L: list, Lp: list, u: int, v: int) -> dict:
    """u 3-cycles U[2i] -> U[2i+1] -> U'[i] and v transpositions V[j] <-> V'[j]."""
    U, V = L[: 2 * u], L[2 * u :]
    Up, Vp = Lp[:u], Lp[u:]
    m = {}
    for i in range(u):
        x, y, z = U[2 * i], U[2 * i + 1], Up[i]
        m[x], m[y], m[z] = y, z, x
    for x, y in zip(V, Vp):
        m[x], m[y] = y, x
    return m


def build_omega(f: PermissibleFn | Sequence[int], N: int | None = None) -> LayeredAction:
    """Layers L_0..L_N of sizes f(n) - f(n-1), with a and b glued blockwise.

    Generators are left undefined on a layer whose block partner lies beyond
    L_N; balls are therefore certified only up to radius N - 1.
    """
    if not isinstance(f, PermissibleFn):
        f = PermissibleFn(tuple(f))
    if N is None:
        N = f.depth
    if N < 1 or N > f.depth:
        raise ValueError(f"depth must be in 1..{f.depth}")
    chk = check_permissible(f.values[: N + 1])
    if not chk.ok:
        raise ValueError(f"not permissible: {chk.violation.message}")
    sizes = [1] + [f(n) - f(n - 1) for n in range(1, N + 1)]
    layers = [[(n, i) for i in range(sizes[n])] for n in range(N + 1)]
    amap: dict = {}
    bmap: dict = {}
    adom: set = set()
    bdom: set = set(layers[0])
    blocks = []
    for lo in range(0, N):
        hi = lo + 1
        gen = "a" if lo % 2 == 0 else "b"
        if sizes[lo] >= sizes[hi]:
            big, small = lo, hi
        else:
            big, small = hi, lo
        u, v = _solve_block(sizes[big], sizes[small])
        m = _block_perm(layers[big], layers[small], u, v)
        target, dom = (amap, adom) if gen == "a" else (bmap, bdom)
        target.update(m)
        dom.update(layers[lo])
        dom.update(layers[hi])
        blocks.append(BlockInfo(gen, lo, hi, big, small, u, v))
    a = FinSuppPerm(amap)
    b = FinSuppPerm(bmap)
    action = PermutationAction([a, b], BASE, [frozenset(adom), frozenset(bdom)])
    return LayeredAction(f, N, layers, a, b, blocks, action)


# ---------------------------------------------------------------------------
# Finite approximations
# ---------------------------------------------------------------------------

SANOV_A = (1, 2, 0, 1)
SANOV_B = (1, 0, 2, 1)


def _mat_mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def sanov_image(word: FreeWord) -> tuple:
    """Integer matrix of a word under a -> [[1,2],[0,1]], b -> [[1,0],[2,1]]."""
    gens = {(0, 1): SANOV_A, (0, -1): (1, -2, 0, 1), (1, 1): SANOV_B, (1, -1): (1, 0, -2, 1)}
    m = (1, 0, 0, 1)
    for letter in word.letters:
        m = _mat_mul(m, gens[letter])
    return m


def minimal_sanov_modulus(n: int, cap: int = 2**16) -> int:
    """Least N >= 2 such that reduction mod N is injective on the Sanov images of B_S(n)."""
    images = [sanov_image(w) for w in free_ball(2, n)]
    for N in range(2, cap + 1):
        if len({tuple(x % N for x in m) for m in images}) == len(images):
            return N
    raise ValueError(f"no modulus up to {cap} separates the ball of radius {n}")


@dataclass
class FiniteActionApprox:
    f: PermissibleFn
    n: int
    omega: LayeredAction
    points: list[tuple]  # X_n = B(2n), in layer order
    index: dict
    alpha: FinSuppPerm
    beta: FinSuppPerm
    P: PermGroup
    modulus: int
    G: SL2Mod
    Q: DirectProduct
    seed: int = 0

    @property
    def X_size(self) -> int:
        return len(self.points)

    @property
    def P_order(self) -> int:
        return self.P.order()

    @property
    def Q_order(self) -> int:
        return self.P.order() * self.G.order()

    def pi(self, word: FreeWord):
        """Image of a free word in Q_n = P_n x SL_2(Z/N)."""
        handle = self.Q.factors[0]
        perm = handle.identity
        gens = {
            (0, 1): handle.element(self.alpha),
            (0, -1): handle.element(self.alpha.inverse()),
            (1, 1): handle.element(self.beta),
            (1, -1): handle.element(self.beta.inverse()),
        }
        for letter in word.letters:
            perm = handle.mul(perm, gens[letter])
        return (perm, self.G.reduce(sanov_image(word)))

    def theta(self, point) -> int:
        return self.index[point]

    def act_on_X(self, x: int, q) -> int:
        """Q_n acts on X_n through its permutation factor."""
        return q[0][x]


def build_finite_action(f: PermissibleFn | Sequence[int], n: int, seed: int = 0, modulus_cap: int = 2**16) -> FiniteActionApprox:
    """Finite quotient action (Q_n, X_n) approximating Omega(f) on B(n).

    alpha_n agrees with a on B(2n-1) and is the identity on L_{2n}; beta_n is
    b restricted to X_n.  The SL_2 factor uses the least modulus separating
    the free ball of radius n.
    """
    if n < 2:
        raise ValueError("finite approximation needs n >= 2")
    if not isinstance(f, PermissibleFn):
        f = PermissibleFn(tuple(f))
    if f.depth < 2 * n + 1:
        raise ValueError(f"table must cover 0..{2 * n + 1}")
    omega = build_omega(f, 2 * n + 1)
    points = omega.points_upto(2 * n)
    inner = set(omega.points_upto(2 * n - 1))
    alpha = FinSuppPerm({p: omega.a(p) for p in inner})
    beta = FinSuppPerm({p: omega.b(p) for p in points})
    if not set(beta.support()) <= set(points) or not set(alpha.support()) <= inner:
        raise AssertionError("finite generators leave X_n")
    P = PermGroup([alpha, beta], points=points, seed=seed)
    N = minimal_sanov_modulus(n, modulus_cap)
    G = SL2Mod(N)
    Q = DirectProduct(PermGroupHandle(P), G)
    index = {p: i for i, p in enumerate(P.points)}
    return FiniteActionApprox(f, n, omega, points, index, alpha, beta, P, N, G, Q, seed)


@dataclass
class PipelineWitness:
    pi: PartialMapWitness
    theta: dict
    action: ActionWitness
    approx: FiniteActionApprox

    @property
    def verified(self) -> bool:
        return self.pi.verified and self.action.verified


def verify_action_embedding_pipeline(
    f: PermissibleFn | Sequence[int],
    n: int,
    approx: FiniteActionApprox | None = None,
    beta_override: FinSuppPerm | None = None,
) -> PipelineWitness:
    """Check that (pi_n, theta_n) is a local embedding of (B_S(n), B(n)).

    Every reduced word g with |g| <= n and every point w in B(n) with w g in
    B(n) is checked.  ``beta_override`` replaces beta_n (used to show that a
    wrong generator is caught).
    """
    if approx is None:
        approx = build_finite_action(f, n)
    if beta_override is not None:
        P = PermGroup([approx.alpha, beta_override], points=approx.points, seed=approx.seed)
        approx = replace(
            approx,
            beta=beta_override,
            P=P,
            Q=DirectProduct(PermGroupHandle(P), approx.G),
            index={p: i for i, p in enumerate(P.points)},
        )
    domain = free_ball_domain(2, n)
    table = {domain.key(g): approx.pi(g) for g in domain.elements}
    pi = verify_local_embedding(domain, approx.Q, table)
    points = approx.omega.points_upto(n)
    theta = {p: approx.theta(p) for p in points}
    def act(w, g):
        return act_word(approx.omega.action, w, g)

    if not pi.verified:
        return PipelineWitness(pi, theta, ActionWitness("failed", 0, ("pi", pi.counterexample)), approx)
    aw = verify_action_local_embedding(pi, points, theta, act, approx.act_on_X)
    return PipelineWitness(pi, theta, aw, approx)
