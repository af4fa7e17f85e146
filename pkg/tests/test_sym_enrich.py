import dataclasses
import math
import random

import pytest

from lefgrowth.embeddings import GrowthBoundRecord
from lefgrowth.groupkit import CyclicGroup, FinSuppPerm, FreeWord, free_ball
from lefgrowth.permissible import build_finite_action, make_table
from lefgrowth.schreier import BoundaryError, FreeRegularAction, IntegerLineAction, ball
from lefgrowth.sym_enrich import (
    EnrichElem,
    FiniteSymEnrichment,
    SymEnrichment,
    build_Phi,
    enrich_bounds_table,
    enrich_generators,
    enrich_mul,
    enrichment_ball,
    eval_symbols,
    in_window,
    integer_enrichment,
    integer_pair,
    permissible_pair,
    phi_partial_witness,
    sdprod_decompose,
    stirling_witness,
)

WINDOW = range(-12, 13)
T = FreeWord.parse("a")


def point_map(enr, x, window=WINDOW):
    return tuple(enr.point_action(p, x) for p in window)


def random_elem(rng):
    pts = rng.sample(range(-3, 4), rng.randrange(0, 4))
    img = pts[:]
    rng.shuffle(img)
    return EnrichElem(FinSuppPerm(dict(zip(pts, img))), FreeWord.parse("a" * rng.randrange(3) or "e"))


def test_worked_product():
    enr = integer_enrichment()
    t01 = FinSuppPerm.transposition(0, 1)
    z = enrich_mul(enr, EnrichElem(t01, T), EnrichElem(t01, FreeWord()))
    assert z == EnrichElem(FinSuppPerm.from_cycles([(-1, 0, 1)]), T)


def test_product_is_composition_of_point_maps():
    enr = integer_enrichment()
    rng = random.Random(5)
    for _ in range(300):
        x, y = random_elem(rng), random_elem(rng)
        xy = enr.mul(x, y)
        composed = tuple(enr.point_action(enr.point_action(p, x), y) for p in WINDOW)
        assert point_map(enr, xy) == composed


def test_associativity_and_inverse():
    enr = integer_enrichment()
    rng = random.Random(9)
    for _ in range(500):
        x, y, z = (random_elem(rng) for _ in range(3))
        assert enr.mul(enr.mul(x, y), z) == enr.mul(x, enr.mul(y, z))
        assert enr.mul(x, enr.inv(x)) == enr.identity


def test_conjugation_leaves_window():
    enr = SymEnrichment(IntegerLineAction(), universe=range(-1, 2))
    with pytest.raises(BoundaryError):
        enr.conj(FinSuppPerm.transposition(0, 1), T)


def test_generators():
    gens = enrich_generators(IntegerLineAction())
    # one transposition for each of t and t^-1
    assert gens.transpositions == [FinSuppPerm.transposition(0, 1), FinSuppPerm.transposition(-1, 0)]
    assert [gens.name(s) for s in gens.symbols()] == ["a", "A", "t0", "t1"]
    g2 = enrich_generators(FreeRegularAction(2))
    assert len(g2.transpositions) == 4


def test_decomposition_example():
    # s1 t s2 with s1 = s2 = a: h = t^(a^-1) and ambient a a
    gens = enrich_generators(IntegerLineAction())
    enr = integer_enrichment()
    word = [("s", (0, 1)), ("t", 0), ("s", (0, 1))]
    dec = sdprod_decompose(gens, word, 3)
    assert dec.ambient == FreeWord.parse("aa")
    assert dec.factors == [(gens.transpositions[0], FreeWord.parse("A"))]
    assert dec.element(enr) == eval_symbols(enr, gens, word)
    assert dec.h(enr) == FinSuppPerm.transposition(-1, 0)


def test_decomposition_random_words():
    gens = enrich_generators(FreeRegularAction(2))
    enr = SymEnrichment(FreeRegularAction(2))
    syms = gens.symbols()
    rng = random.Random(2)
    for _ in range(100):
        word = [rng.choice(syms) for _ in range(rng.randrange(1, 6))]
        dec = sdprod_decompose(gens, word, 5)
        assert dec.element(enr) == eval_symbols(enr, gens, word)
        assert all(len(w) <= 4 for _, w in dec.factors)
    with pytest.raises(ValueError):
        sdprod_decompose(gens, [syms[0]] * 3, 2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enrichment_ball_in_window(n):
    action = IntegerLineAction()
    enr = integer_enrichment()
    gens = enrich_generators(action)
    _, layers = ball(action, n=n)
    pts = [p for l in layers for p in l]
    elems = enrichment_ball(enr, gens, n)
    assert all(in_window(x, n, pts) for x in elems)


def test_in_window_rejects():
    x = EnrichElem(FinSuppPerm.transposition(0, 5), FreeWord())
    assert not in_window(x, 2, range(-2, 3))
    assert not in_window(EnrichElem(FinSuppPerm(), FreeWord.parse("aaa")), 2, range(-2, 3))


def test_json_round_trip():
    x = EnrichElem(FinSuppPerm.from_cycles([((0, 1), (1, 0))]), FreeWord.parse("aB"))
    assert EnrichElem.from_json(x.to_json()) == x


def test_finite_enrichment_is_a_group():
    k = 4
    G = FiniteSymEnrichment(k, CyclicGroup(4), lambda x, q: (x + q) % k)
    rng = random.Random(1)

    def rand():
        p = list(range(k))
        rng.shuffle(p)
        return (tuple(p), rng.randrange(4))

    for _ in range(200):
        x, y, z = rand(), rand(), rand()
        assert G.mul(G.mul(x, y), z) == G.mul(x, G.mul(y, z))
        assert G.mul(x, G.inv(x)) == G.identity
    assert G.order() == math.factorial(4) * 4


def test_phi_integer_small():
    w = build_Phi(integer_pair(1))
    assert w.verified and w.injective
    assert w.elements == 18 and w.pairs_checked > 0
    assert phi_partial_witness(integer_pair(1)).verified


def test_phi_detects_bad_theta():
    pair = integer_pair(1)
    theta = dict(pair.theta)
    theta[-1], theta[1] = theta[1], theta[-1]
    bad = dataclasses.replace(pair, theta=theta)
    assert not build_Phi(bad).verified
    assert not phi_partial_witness(bad).verified


def test_phi_sampled_mode():
    w = build_Phi(integer_pair(2), mode="sampled", samples=2000, seed=3)
    assert w.verified and w.pairs_checked == 2000 and w.seed == 3
    with pytest.raises(ValueError):
        build_Phi(integer_pair(1), mode="other")


def test_phi_permissible_pair_small():
    a = build_finite_action(make_table("linear", 5), 2)
    pair = permissible_pair(a)
    assert len(pair.points) == 3 and len(pair.words) == 17
    w = build_Phi(pair)
    assert w.verified


def test_bounds_table_linear():
    f = make_table("linear", 11)
    recs = enrich_bounds_table(f, [2, 5])
    assert all(isinstance(r, GrowthBoundRecord) for r in recs)
    up2 = recs[0]
    a2 = build_finite_action(f, 2)
    assert up2.upper == math.factorial(5) * a2.Q_order
    low = [r for r in recs if r.lower is not None]
    assert [(r.radius, r.lower) for r in low] == [(72, 720)]
    assert "no certified lower bound" in up2.notes


def test_bounds_table_pow2_lower():
    recs = enrich_bounds_table(make_table("pow2", 11), [5], relator_radius=8)
    low = [r for r in recs if r.lower is not None]
    assert low[0].radius == 72 and low[0].lower == math.factorial(32)


def test_stirling_witness_small():
    f = make_table("linear", 11)
    uppers, qs, xs = {}, {}, {}
    for n in (2, 3, 4):
        a = build_finite_action(f, n)
        uppers[n] = math.factorial(a.X_size) * a.Q_order
        qs[n], xs[n] = a.Q_order, a.X_size
    sw = stirling_witness(lambda n: n + 1, uppers, qs, xs)
    assert sw.K == 4 and sw.comparison.ok
    assert sw.C_Q == max((math.log(qs[n]) - math.log(xs[n])) / n for n in (2, 3, 4))
    # below the smallest K the comparison fails somewhere on the range
    assert stirling_witness(lambda n: n + 1, uppers, qs, xs, K_max=3).K is None
    # the table stops at f(11), short of f(4n) for n = 3, 4
    assert stirling_witness(f.values, uppers, qs, xs).K is None


def test_free_ball_words_used_by_pairs():
    pair = integer_pair(2)
    assert [str(w) for w in pair.words] == [str(w) for w in free_ball(1, 2)]
    assert pair.target.k == 7
