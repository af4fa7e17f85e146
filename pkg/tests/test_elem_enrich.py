import random

import pytest

from lefgrowth.elem_enrich import (
    GF,
    ZZ,
    ElemEnrichment,
    ElemMatrix,
    FiniteElemEnrichment,
    Ring,
    SplitNotFound,
    SynthesisStats,
    Zmod,
    bertrand_split,
    build_Phi_elem,
    commutator_word,
    conj_by_ambient,
    crt_lift,
    crt_split,
    elem_generators,
    elem_window_check,
    eval_transvection_word,
    invert_word,
    normal_gen_identity_check,
    path_commutator_word,
    random_norm_products,
    special_linear_window,
    transvect_commutator,
    transvect_mul,
    window_transvections,
    word_for_transvection,
)
from lefgrowth.groupkit import CyclicGroup, FreeWord, free_ball
from lefgrowth.permissible import build_omega, make_table
from lefgrowth.schreier import FreeRegularAction, IntegerLineAction, LatticeAction, act_word
from lefgrowth.sym_enrich import integer_pair

from oracles import bertrand_candidates, bertrand_ok, det, matmul, sl2_elements, sup_norm, transvection

E = ElemMatrix.transvection


def dense_of(word, k, q=None):
    acc = [[int(i == j) for j in range(k)] for i in range(k)]
    for v, w, r in word:
        acc = matmul(acc, transvection(k, v, w, r, q), q)
    return acc


# -- rings and matrices ---------------------------------------------------------


def test_ring_validation():
    assert Ring.parse("Zq9") == Zmod(9)
    assert Ring.parse("Fp7") == GF(7)
    assert Ring.parse("Z") == ZZ
    with pytest.raises(ValueError):
        GF(9)
    with pytest.raises(ValueError):
        Zmod(1)
    with pytest.raises(ValueError):
        Ring.parse("Q")


@pytest.mark.parametrize("ring,q", [(ZZ, None), (Zmod(6), 6), (GF(5), 5)])
def test_products_match_dense_oracle(ring, q):
    rng = random.Random(4)
    k = 4
    for _ in range(200):
        word = []
        for _ in range(rng.randrange(1, 8)):
            v, w = rng.sample(range(k), 2)
            word.append((v, w, rng.randrange(-3, 4)))
        M = ElemMatrix.identity(ring)
        for v, w, r in word:
            M = transvect_mul(M, E(ring, v, w, r))
        assert M.dense(range(k)) == dense_of(word, k, q)
        assert (M * M.inverse()).is_identity()


def test_inverse_without_carried_inverse():
    M = E(ZZ, 0, 1, 2) * E(ZZ, 1, 0, 3)
    bare = ElemMatrix.from_triples(M.to_triples())
    assert bare == M
    assert (bare * bare.inverse()).is_identity()
    assert det(bare.dense([0, 1])) == 1
    m7 = ElemMatrix.from_triples((E(Zmod(7), 0, 1, 2) * E(Zmod(7), 1, 0, 3)).to_triples())
    assert (m7.inverse() * m7).is_identity()


def test_commutator_examples():
    assert transvect_commutator(E(ZZ, 1, 2), E(ZZ, 2, 3)) == E(ZZ, 1, 3)
    assert transvect_commutator(E(ZZ, 1, 2, 2), E(ZZ, 2, 3, 3)) == E(ZZ, 1, 3, 6)
    # disjoint index pairs commute
    assert transvect_commutator(E(ZZ, 1, 2), E(ZZ, 3, 4)).is_identity()


def test_commutator_against_dense():
    a, b = E(ZZ, 0, 1, 2), E(ZZ, 1, 2, 5)
    word = [(0, 1, -2), (1, 2, -5), (0, 1, 2), (1, 2, 5)]
    assert transvect_commutator(a, b).dense(range(3)) == dense_of(word, 3)


def test_ring_mismatch():
    with pytest.raises(ValueError):
        E(ZZ, 0, 1) * E(Zmod(3), 0, 1)
    with pytest.raises(ValueError):
        E(ZZ, 0, 0)


def test_conjugation_shifts_indices():
    t = FreeWord.parse("a")
    M = E(ZZ, 0, 1) * E(ZZ, 1, 2)
    assert conj_by_ambient(M, t, IntegerLineAction()) == E(ZZ, 1, 2) * E(ZZ, 2, 3)


def test_norm_and_window():
    x = E(ZZ, 1, 2) * E(ZZ, 2, 1)
    y = x * x
    # [[2,1],[1,1]]^2 = [[5,3],[3,2]]
    assert y.dense([1, 2]) == [[5, 3], [3, 2]]
    rep = elem_window_check(y, 3, [1, 2])
    assert rep.norm == 5 == sup_norm(y.dense([1, 2])) and rep.in_window
    assert not elem_window_check(y, 2, [1, 2]).in_window
    assert ElemMatrix.identity().norm() == 1
    with pytest.raises(ValueError):
        E(Zmod(5), 0, 1).norm()


def test_triples_round_trip_with_tuple_points():
    M = E(GF(3), (0, 1), (1, 0), 2)
    data = M.to_triples()
    assert data["ring"] == "Fp3"
    assert ElemMatrix.from_triples({"ring": "Fp3", "entries": [[[0, 1], [1, 0], 2]]}) == M


def test_norm_fuzz_bound():
    rng = random.Random(8)
    factors = window_transvections(IntegerLineAction(), 3)
    for m, nrm in random_norm_products(factors, 300, 12, rng):
        assert nrm <= 2 ** (m - 1)


# -- the enrichment ------------------------------------------------------------------


def test_enrichment_group_laws():
    enr = ElemEnrichment(IntegerLineAction())
    rng = random.Random(6)
    syms = [("s", (0, 1)), ("s", (0, -1))] + elem_generators(IntegerLineAction())
    for _ in range(100):
        xs = [enr.evaluate([rng.choice(syms) for _ in range(rng.randrange(1, 5))]) for _ in range(3)]
        x, y, z = xs
        assert enr.mul(enr.mul(x, y), z) == enr.mul(x, enr.mul(y, z))
        assert enr.mul(x, enr.inv(x)) == enr.identity


def test_word_helpers():
    w = [("E", (0, 1), 1), ("s", (0, 1))]
    assert invert_word(w) == [("s", (0, -1)), ("E", (0, 1), -1)]
    enr = ElemEnrichment(IntegerLineAction())
    assert enr.evaluate(w + invert_word(w)) == enr.identity
    c = enr.evaluate(commutator_word([("E", (0, 1), 1)], [("E", (1, 2), 1)]))
    assert c.A == E(ZZ, 0, 2) and len(c.g) == 0


def test_generators_of_integer_line():
    assert elem_generators(IntegerLineAction()) == [
        ("E", (0, 1), 1),
        ("E", (1, 0), 1),
        ("E", (0, -1), 1),
        ("E", (-1, 0), 1),
    ]


# -- word synthesis ---------------------------------------------------------------------


def test_synthesis_t4():
    action = IntegerLineAction()
    stats = SynthesisStats()
    word = word_for_transvection(action, FreeWord.parse("aaaa"), stats=stats)
    x = ElemEnrichment(action).evaluate(word)
    assert x.A == E(ZZ, 0, 4) and len(x.g) == 0
    assert len(word) == 40
    assert stats.recurrence_holds()


def test_synthesis_length_two():
    action = FreeRegularAction(2)
    g = FreeWord.parse("ab")
    word = word_for_transvection(action, g)
    x = ElemEnrichment(action).evaluate(word)
    assert x.A == E(ZZ, FreeWord(), g) and len(x.g) == 0
    assert len(word) <= 8


def test_synthesis_on_lattice_random_targets():
    action = LatticeAction(2)
    enr = ElemEnrichment(action)
    rng = random.Random(1)
    ball = [w for w in free_ball(2, 6) if act_word(action, action.base, w) != action.base]
    for g in rng.sample(ball, 20):
        word = word_for_transvection(action, g)
        x = enr.evaluate(word)
        assert x.A == E(ZZ, action.base, act_word(action, action.base, g))
        assert len(x.g) == 0


def test_synthesis_needs_a_moved_point():
    with pytest.raises(ValueError):
        word_for_transvection(IntegerLineAction(), FreeWord.parse("aA"))
    with pytest.raises(ValueError):
        word_for_transvection(IntegerLineAction(), FreeWord.parse("aaa"), n=2)
    assert issubclass(SplitNotFound, ValueError)


def test_no_balanced_split_on_linear_omega():
    # g = Ab: b fixes the base point, so every split into halves of length <= 1
    # has w0 k = w0 or w0 k = w0 g
    omega = build_omega(make_table("linear", 8))
    action = omega.action
    base = omega.base
    g = FreeWord.parse("Ab")
    target = act_word(action, base, g)
    assert act_word(action, base, FreeWord.parse("b")) == base
    good = []
    for h in free_ball(2, 1):
        for k in free_ball(2, 1):
            if h * k != g:
                continue
            pk = act_word(action, base, k)
            if len({base, pk, target}) == 3:
                good.append((h, k))
    assert good == []
    # the detour still produces a correct word, only longer than 8
    stats = SynthesisStats()
    word = word_for_transvection(action, g, stats=stats)
    x = ElemEnrichment(action).evaluate(word)
    assert x.A == E(ZZ, base, target) and len(x.g) == 0
    assert len(word) > 8 and stats.detours() >= 1


@pytest.mark.parametrize("length", [1, 2, 5, 8])
def test_path_commutator_word(length):
    adj = {i: [j for j in (i - 1, i + 1) if 0 <= j <= length] for i in range(length + 1)}
    word, path = path_commutator_word(adj, 0, length)
    assert path == list(range(length + 1))
    assert eval_transvection_word(ZZ, word) == E(ZZ, 0, length)
    m = (length - 1).bit_length()
    assert len(word) <= 4**m
    with pytest.raises(ValueError):
        path_commutator_word(adj, 0, 0)


def test_path_word_on_a_tree():
    adj = {0: [1, 2], 1: [0, 3], 2: [0], 3: [1]}
    word, path = path_commutator_word(adj, 2, 3)
    assert path == [2, 0, 1, 3]
    assert eval_transvection_word(Zmod(5), word) == E(Zmod(5), 2, 3)


# -- finite targets and Phi -----------------------------------------------------------------


def test_finite_elem_enrichment_associative():
    k, q = 3, 5
    G = FiniteElemEnrichment(k, q, CyclicGroup(3), lambda x, g: (x + g) % k)
    rng = random.Random(2)

    def rand():
        M = ElemMatrix.identity(Zmod(q))
        for _ in range(5):
            v, w = rng.sample(range(k), 2)
            M = M * E(Zmod(q), v, w, rng.randrange(q))
        return (tuple(M.entry(i, j) for i in range(k) for j in range(k)), rng.randrange(3))

    for _ in range(100):
        x, y, z = rand(), rand(), rand()
        assert G.mul(G.mul(x, y), z) == G.mul(x, G.mul(y, z))
    assert G.order_bound() == 5**9 * 3


def test_special_linear_window_order():
    # |SL_2(F_3)| = 24, and transvections generate it
    assert len(special_linear_window([0, 1], GF(3))) == 24 == len(sl2_elements(3))
    with pytest.raises(ValueError):
        special_linear_window([0, 1], ZZ)


def test_phi_elem_verified():
    w = build_Phi_elem(integer_pair(2), 9)
    assert w.verified and w.injective
    assert w.elements == 85 and w.pairs_checked == 1267
    assert w.max_norm <= 2**2


def test_phi_elem_demonstration():
    w = build_Phi_elem(integer_pair(2), 2, demonstration=True)
    assert not w.verified and not w.injective
    kind, a, b = w.counterexample
    assert kind == "injectivity"
    # the identity and a transvection with entry 2 agree mod 2
    assert a.A.is_identity() and b.A == E(ZZ, 0, 1, 2)
    with pytest.raises(ValueError):
        build_Phi_elem(integer_pair(2), 8)


def test_phi_elem_field():
    w = build_Phi_elem(integer_pair(1), 2, field=True)
    assert w.verified and w.elements == 504
    with pytest.raises(ValueError):
        build_Phi_elem(integer_pair(1), 4, field=True)


# -- number theory ----------------------------------------------------------------------------


def test_crt_lift_example():
    M = crt_lift((1, 0, 0, 1), 3, (1, 1, 0, 1), 4)
    assert M == (1, 9, 0, 1)
    assert tuple(x % 3 for x in M) == (1, 0, 0, 1)
    assert tuple(x % 4 for x in M) == (1, 1, 0, 1)
    with pytest.raises(ValueError):
        crt_lift((1,), 2, (1,), 4)


def test_crt_split_enumerated():
    rep = crt_split(3, 4)
    assert rep.mode == "enumerated" and rep.bijective and rep.preimage_ok
    assert rep.size == 1152 == len(sl2_elements(12)) == len(sl2_elements(3)) * len(sl2_elements(4))


def test_crt_split_sampled():
    rep = crt_split(7, 9, samples=50, seed=1)
    assert rep.mode == "sampled" and rep.bijective and rep.preimage_ok


@pytest.mark.parametrize("m,q,expected", [(8, 12, (7, 12)), (16, 49, (13, 49))])
def test_bertrand_examples(m, q, expected):
    assert bertrand_split(m, q) == expected
    assert bertrand_ok(m, q, *expected)


def test_bertrand_second_prime():
    # 7^2 > sqrt(49 * 2), so the split falls back to a prime in (2, 4]
    p, r = bertrand_split(8, 98)
    assert p == 3 and r == 98 and bertrand_ok(8, 98, p, r)
    assert bertrand_candidates(8, 98)


def test_bertrand_errors():
    with pytest.raises(ValueError):
        bertrand_split(7, 10)
    with pytest.raises(ValueError):
        bertrand_split(8, 0)


@pytest.mark.parametrize("r,ring", [(1, ZZ), (3, Zmod(7)), (2, GF(5)), (-4, ZZ)])
def test_normal_generation_identity(r, ring):
    assert normal_gen_identity_check(r, ring, [1, 2, 3, 4, 5, 6])


def test_normal_generation_needs_six_points():
    with pytest.raises(ValueError):
        normal_gen_identity_check(1, ZZ, [1, 2, 3, 4, 5, 5])
