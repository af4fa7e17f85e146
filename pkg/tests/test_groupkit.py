import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lefgrowth.groupkit import (
    DirectProduct,
    FinSuppPerm,
    FreeGroup,
    FreeWord,
    PermGroup,
    SL2Mod,
    SymmetricGroup,
    default_catalog,
    free_ball,
    group_order,
    make_catalog_group,
    perm_compose,
    reduce_word,
)

from oracles import closure_order, compose, free_ball_size, reduced_words, sl2_elements, stack_reduce, window_perm

letters2 = st.tuples(st.integers(0, 1), st.sampled_from([1, -1]))


def test_reduce_matches_stack_oracle():
    rng = random.Random(7)
    for _ in range(1000):
        raw = [(rng.randrange(2), rng.choice((1, -1))) for _ in range(20)]
        assert reduce_word(raw).letters == stack_reduce(raw)


@given(st.lists(letters2, max_size=30))
def test_reduce_idempotent(raw):
    w = reduce_word(raw)
    assert reduce_word(w.letters) == w


def test_reduce_rejects_foreign_letter():
    with pytest.raises(ValueError):
        reduce_word([(2, 1)], rank=2)
    with pytest.raises(ValueError):
        reduce_word([(0, 2)])


@given(st.lists(letters2, max_size=12), st.lists(letters2, max_size=12))
def test_word_product_and_inverse(a, b):
    x, y = reduce_word(a), reduce_word(b)
    assert (x * y).letters == stack_reduce(list(a) + list(b))
    assert len(x * x.inverse()) == 0


def test_parse_round_trip():
    w = FreeWord.parse("abAB")
    assert str(w) == "abAB"
    assert FreeWord.parse("aA") == FreeWord()
    assert str(FreeWord()) == "e"


@pytest.mark.parametrize("rank,n,size", [(2, 1, 5), (2, 2, 17), (2, 3, 53), (1, 4, 9)])
def test_free_ball_sizes(rank, n, size):
    ball = free_ball(rank, n)
    assert len(ball) == size == free_ball_size(rank, n)
    assert {w.letters for w in ball} == reduced_words(rank, n)


def test_free_ball_order_and_errors():
    ball = free_ball(2, 2)
    assert ball == sorted(ball)
    with pytest.raises(ValueError):
        free_ball(0, 2)
    with pytest.raises(ValueError):
        free_ball(2, -1)


def test_free_group_handle():
    F = FreeGroup(2)
    x = F.parse("ab")
    assert F.mul(x, F.inv(x)) == FreeWord()
    assert F.length(x) == 2
    assert len(F.ball(2)) == 17


def test_compose_transpositions():
    # 0 -> 1 -> 2, 1 -> 0, 2 -> 1: the 3-cycle (0 2 1)
    p = perm_compose(FinSuppPerm.transposition(0, 1), FinSuppPerm.transposition(1, 2))
    assert p == FinSuppPerm.from_cycles([(0, 2, 1)])
    assert p(0) == 2 and p(1) == 0 and p(2) == 1


def test_compose_fuzz_against_window():
    rng = random.Random(3)
    for _ in range(500):
        pts = rng.sample(range(-6, 7), rng.randrange(2, 8))
        img = pts[:]
        rng.shuffle(img)
        p = FinSuppPerm(dict(zip(pts, img)))
        pts2 = rng.sample(range(-6, 7), rng.randrange(2, 8))
        img2 = pts2[:]
        rng.shuffle(img2)
        q = FinSuppPerm(dict(zip(pts2, img2)))
        r = perm_compose(p, q)
        assert r.support() <= p.support() | q.support()
        window = range(-6, 7)
        want = compose(window_perm(dict(p.items()), window), window_perm(dict(q.items()), window))
        assert window_perm(dict(r.items()), window) == want


def test_perm_basics():
    c = FinSuppPerm.from_cycles([("x", "y", "z")])
    assert c**3 == FinSuppPerm()
    assert c.inverse() * c == FinSuppPerm()
    assert c.sign() == 1
    assert FinSuppPerm.transposition(1, 2).sign() == -1
    assert hash(c) == hash(FinSuppPerm({"x": "y", "y": "z", "z": "x"}))
    with pytest.raises(ValueError):
        FinSuppPerm({0: 1})
    with pytest.raises(ValueError):
        FinSuppPerm.transposition(3, 3)


def test_conjugate_by_moves_support():
    t = FinSuppPerm.transposition(0, 1)
    assert t.conjugate_by(lambda x: x + 5) == FinSuppPerm.transposition(5, 6)


@pytest.mark.parametrize(
    "gens,order",
    [
        ([[(1, 2)], [(1, 2, 3)]], 6),
        ([[(1, 2)], [(1, 2, 3, 4, 5)]], 120),
        ([[(0, 1), (2, 3)], [(0, 2), (1, 3)]], 4),
        ([[(0, 1, 2)], [(1, 2, 3)]], 12),
    ],
)
def test_group_order_vs_closure(gens, order):
    perms = [FinSuppPerm.from_cycles(c) for c in gens]
    G = PermGroup(perms)
    assert group_order(G) == order
    tuples = [tuple(G.index[p(x)] for x in G.points) for p in perms]
    assert closure_order(tuples) == order


def test_group_order_random_small():
    rng = random.Random(11)
    for _ in range(20):
        k = rng.randrange(3, 7)
        gens = []
        for _ in range(2):
            img = list(range(k))
            rng.shuffle(img)
            gens.append(FinSuppPerm(dict(enumerate(img))))
        G = PermGroup(gens, points=range(k))
        tuples = [tuple(g(x) for x in range(k)) for g in gens]
        assert G.order() == closure_order(tuples)
        for g in gens:
            assert G.contains(g)


def test_large_symmetric_by_jordan():
    n = 30
    G = PermGroup([FinSuppPerm.transposition(0, 1), FinSuppPerm.from_cycles([tuple(range(n))])])
    assert G.order() == __import__("math").factorial(n)


def test_catalog_specs():
    assert make_catalog_group("C7").order() == 7
    assert make_catalog_group("symmetric 4").order() == 24
    assert make_catalog_group("SL2(Z/3)").order() == 24 == len(sl2_elements(3))
    g = make_catalog_group("C2 x S3")
    assert isinstance(g, DirectProduct) and g.order() == 12
    with pytest.raises(ValueError):
        make_catalog_group("PSL(2,7)")


def test_sl2_elements_match():
    G = SL2Mod(5)
    els = list(G.elements())
    assert sorted(els) == sorted(sl2_elements(5))
    assert G.order() == len(els) == 120
    x = els[17]
    assert G.mul(x, G.inv(x)) == G.identity


def test_symmetric_group_handle():
    S = SymmetricGroup(4)
    assert len(list(S.elements())) == 24
    x = (1, 2, 3, 0)
    assert S.mul(x, S.inv(x)) == S.identity


def test_default_catalog_sorted():
    cat = default_catalog(200)
    orders = [g.order() for g in cat]
    assert orders == sorted(orders)
    assert all(o <= 200 for o in orders)


@settings(max_examples=50)
@given(st.permutations(range(6)), st.permutations(range(6)), st.permutations(range(6)))
def test_perm_associative(a, b, c):
    p, q, r = (FinSuppPerm(dict(enumerate(x))) for x in (a, b, c))
    assert (p * q) * r == p * (q * r)
