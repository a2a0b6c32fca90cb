"""The log-exp monomial group: canonical forms, orders, pre-logarithm."""

from fractions import Fraction

import pytest

from transseries import (ONE, ResourceError, X, atom, height_depth,
                         make_monomial, mono_cmp, mono_inv, mono_mul,
                         mono_pow, pre_log)
from transseries.monomial import dagger_terms, pre_log_terms
from transseries.series import from_terms, equal_below

from helpers import rng, rand_monomial

L1 = atom(1)
X_INV = mono_inv(X)
E_X = make_monomial({}, [(1, X)])
X2 = make_monomial({0: 2})


def test_mul_inverse_is_identity():
    assert mono_mul(X, X_INV) is ONE


def test_mul_keeps_exp_and_log_parts():
    m = mono_mul(X2, E_X)
    assert m.log_powers == ((0, Fraction(2)),)
    assert m.exp_terms == ((Fraction(1), X),)


def test_exp_args_add():
    a = make_monomial({}, [(1, X2), (1, X)])
    b = make_monomial({}, [(-1, X)])
    assert mono_mul(a, b) is make_monomial({}, [(1, X2)])


def test_canonical_absorbs_log_atoms():
    # exp(2 log x) = x^2 and exp(3 log log x) = log(x)^3
    assert make_monomial({}, [(2, L1)]) is X2
    assert make_monomial({}, [(3, atom(2))]) is make_monomial({1: 3})


def test_canonicalization_idempotent():
    r = rng(5)
    for _ in range(40):
        m = rand_monomial(r)
        again = make_monomial(dict(m.log_powers), list(m.exp_terms))
        assert again is m


def test_pre_log_examples():
    assert equal_below(pre_log(X), from_terms([(1, L1)]), mono_inv(L1))
    assert equal_below(pre_log(make_monomial({}, [(1, X2)])),
                       from_terms([(1, X2)]), X_INV)
    got = pre_log(mono_mul(make_monomial({0: 3}), E_X))
    want = from_terms([(3, L1), (1, X)])
    assert equal_below(got, want, mono_pow(X_INV, 3))


def test_pre_log_is_group_morphism():
    r = rng(11)
    for _ in range(30):
        a, b = rand_monomial(r), rand_monomial(r)
        merged_l: dict = {}
        for c, m in pre_log_terms(mono_mul(a, b)):
            merged_l[m] = merged_l.get(m, 0) + c
        merged_r: dict = {}
        for c, m in pre_log_terms(a) + pre_log_terms(b):
            merged_r[m] = merged_r.get(m, 0) + c
        assert {m: c for m, c in merged_l.items() if c} == \
               {m: c for m, c in merged_r.items() if c}


def test_cmp_examples():
    assert mono_cmp(E_X, make_monomial({0: 100})) > 0
    assert mono_cmp(L1, X) < 0
    assert mono_cmp(mono_mul(X_INV, E_X), E_X) < 0


def test_cmp_agrees_with_pre_log_embedding():
    # m < n iff ell(m) < ell(n): check via the dominant sign of the
    # pre-log difference, computed through the series engine
    r = rng(23)
    for _ in range(30):
        a, b = rand_monomial(r), rand_monomial(r)
        diff = pre_log(a) - pre_log(b)
        lt = diff.leading_term(fuel=16)
        c = mono_cmp(a, b)
        if lt is None:
            assert c == 0
        else:
            assert (lt.coeff > 0) == (c > 0)


def test_order_is_total_and_transitive():
    r = rng(31)
    corpus = [rand_monomial(r) for _ in range(12)]
    for a in corpus:
        for b in corpus:
            ab = mono_cmp(a, b)
            assert ab == -mono_cmp(b, a)
            for c in corpus:
                if ab > 0 and mono_cmp(b, c) > 0:
                    assert mono_cmp(a, c) > 0


def test_mul_commutative_associative():
    r = rng(37)
    for _ in range(25):
        a, b, c = (rand_monomial(r) for _ in range(3))
        assert mono_mul(a, b) is mono_mul(b, a)
        assert mono_mul(a, mono_mul(b, c)) is mono_mul(mono_mul(a, b), c)
        assert mono_mul(a, ONE) is a


def test_height_depth_examples():
    assert height_depth(X) == (0, 0)
    assert height_depth(make_monomial({}, [(1, X2)])) == (1, 0)
    exp_xl1 = make_monomial({}, [(1, mono_mul(X, L1))])
    assert height_depth(exp_xl1) == (1, 1)


def test_height_bound_enforced():
    deep = X
    with pytest.raises(ResourceError):
        for _ in range(6):
            deep = make_monomial({}, [(1, deep)])


def test_rational_powers():
    m = mono_pow(X, Fraction(3, 2))
    assert m.log_powers == ((0, Fraction(3, 2)),)
    assert mono_mul(m, m) is make_monomial({0: 3})
    e = mono_pow(E_X, Fraction(1, 2))
    assert e.exp_terms == ((Fraction(1, 2), X),)


def test_truncation_closure_of_pre_log_image():
    # every initial truncation of a pre-log is again a pre-log of a
    # constructible monomial
    r = rng(43)
    corpus = [rand_monomial(r) for _ in range(25)]
    checked = 0
    for m in corpus:
        if m is ONE:
            continue
        terms = pre_log_terms(m)
        merged: dict = {}
        for c, u in terms:
            merged[u] = merged.get(u, 0) + c
        ordered = sorted((u for u, c in merged.items() if c), reverse=True)
        for cut in range(1, len(ordered) + 1):
            trunc = [(merged[u], u) for u in ordered[:cut]]
            rebuilt = make_monomial({}, trunc)
            re_merged: dict = {}
            for c, u in pre_log_terms(rebuilt):
                re_merged[u] = re_merged.get(u, 0) + c
            assert re_merged == {u: merged[u] for u in ordered[:cut]}
            checked += 1
    assert checked >= 25


def test_dagger_terms_are_finite_and_exact():
    # dagger(l_1) = (x log x)^{-1}
    got = dict((m, c) for c, m in dagger_terms(L1))
    assert got == {make_monomial({0: -1, 1: -1}): Fraction(1)}
    # dagger is additive over products
    r = rng(47)
    for _ in range(20):
        a, b = rand_monomial(r), rand_monomial(r)
        lhs: dict = {}
        for c, m in dagger_terms(mono_mul(a, b)):
            lhs[m] = lhs.get(m, 0) + c
        rhs: dict = {}
        for c, m in dagger_terms(a) + dagger_terms(b):
            rhs[m] = rhs.get(m, 0) + c
        assert {m: c for m, c in lhs.items() if c} == \
               {m: c for m, c in rhs.items() if c}


def test_render_canonical_forms():
    assert X.render() == "x"
    assert ONE.render() == "1"
    assert mono_pow(X, Fraction(3, 2)).render() == "x^(3/2)"
    m = mono_mul(mono_pow(X, Fraction(3, 2)),
                 mono_mul(mono_inv(L1), make_monomial({}, [(1, X2)])))
    assert m.render() == "x^(3/2)*log(x)^-1*exp(x^2)"
