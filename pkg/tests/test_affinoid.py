import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nadops.affinoid import (
    Hole,
    HoledDisc,
    Polydisc,
    SparsePoly,
    domain_from_json,
    domain_to_json,
    laurent_basis_derivative,
    mi_binomial,
    mi_box,
    mi_factorial,
    mi_falling,
    mi_sub,
    mi_up_to_total,
    mi_with_total,
    poly_from_text,
    poly_to_text,
    rescale_to_subdisc,
    sup_norm,
    unit_polydisc,
)
from nadops.scalars import HahnField, NormValue, PAdicField

P2 = PAdicField(2)
P5 = PAdicField(5)
HAHN = HahnField()


def small_polys(field, dim=1, degree=3):
    pool = list(mi_up_to_total(dim, degree))

    def build(picks):
        return SparsePoly.make(field, dim, [
            (pool[i % len(pool)], field.from_rational(Fraction(num, den)))
            for i, num, den in picks])
    pick = st.tuples(st.integers(0, len(pool) - 1), st.integers(-9, 9), st.integers(1, 4))
    return st.lists(pick, min_size=0, max_size=4).map(build)


# ---------------------------------------------------------------------------
# multi-index helpers


def test_mi_binomial_is_componentwise():
    assert mi_binomial((4, 2), (1, 2)) == math.comb(4, 1) * math.comb(2, 2)
    assert mi_binomial((2,), (3,)) == 0


def test_mi_falling_matches_permutation_count():
    assert mi_falling((5,), (2,)) == math.perm(5, 2)
    assert mi_falling((5, 3), (2, 3)) == math.perm(5, 2) * math.perm(3, 3)
    assert mi_falling((1,), (2,)) == 0  # derivative kills the monomial


def test_mi_box_counts():
    assert len(list(mi_box((2, 1)))) == 6
    assert list(mi_box(())) == [()]


def test_mi_with_total_counts():
    for d, t in ((1, 4), (2, 5), (3, 4)):
        assert len(list(mi_with_total(d, t))) == math.comb(t + d - 1, d - 1)


def test_mi_sub_underflow():
    with pytest.raises(ValueError):
        mi_sub((1, 0), (0, 1))


def test_mi_factorial():
    assert mi_factorial((3, 2)) == 12


# ---------------------------------------------------------------------------
# polynomial ring basics


def test_make_merges_and_drops_zeros():
    x = (1,)
    f = SparsePoly.make(P2, 1, [(x, P2.from_rational(2)), (x, P2.from_rational(-2))])
    assert f.is_zero
    assert f.degree() == -1


def test_make_validates_exponents_and_backend():
    with pytest.raises(ValueError):
        SparsePoly.make(P2, 1, {(1, 0): P2.one()})
    with pytest.raises(ValueError):
        SparsePoly.make(P2, 1, {(-1,): P2.one()})
    with pytest.raises(ValueError):
        SparsePoly.make(P2, 1, {(1,): HAHN.one()})


def test_ring_identities():
    x = SparsePoly.variable(P2, 1, 0)
    one = SparsePoly.constant(P2, 1, 1)
    assert (x + one) * (x - one) == x * x - one
    assert (x + one) ** 2 == x * x + x.scale(2) + one
    assert x ** 0 == one


def test_derivative_examples():
    x = SparsePoly.variable(P2, 1, 0)
    f = x ** 5
    assert f.derivative((2,)) == (x ** 3).scale(20)
    assert f.derivative((2,), divided=True) == (x ** 3).scale(10)
    assert f.derivative((6,)).is_zero
    g = SparsePoly.monomial(P2, 2, (2, 1))
    assert g.derivative((1, 1)) == SparsePoly.monomial(P2, 2, (1, 0), 2)


def test_evaluate_horner_example():
    x = SparsePoly.variable(P5, 1, 0)
    f = x ** 2 + x.scale(3) + SparsePoly.constant(P5, 1, 1)
    assert f.evaluate((P5.from_rational(2),)) == P5.from_rational(11)


@given(small_polys(P2, dim=2, degree=2), small_polys(P2, dim=2, degree=2))
def test_gauss_multiplicativity(f, g):
    if f.is_zero or g.is_zero:
        assert (f * g).is_zero
    else:
        assert (f * g).gauss_valuation() == f.gauss_valuation() + g.gauss_valuation()


def test_gauss_examples():
    x = SparsePoly.variable(P5, 1, 0)
    f = (x ** 2).scale(5) + SparsePoly.constant(P5, 1, 3)
    assert f.gauss_valuation() == NormValue.of(0)
    y = SparsePoly.variable(P2, 1, 0)
    assert ((y - SparsePoly.constant(P2, 1, 1)) ** 2).gauss_valuation() == NormValue.of(0)
    t = HAHN.uniformizer()
    h = SparsePoly.variable(HAHN, 1, 0).scale(t) \
        + SparsePoly.constant(HAHN, 1, t * t)
    assert h.gauss_valuation() == NormValue.of(1)
    assert SparsePoly.zero(P2, 1).gauss_valuation().is_infinite


# substitution oracle: evaluate both sides at sample points
@given(small_polys(P2, dim=1, degree=3),
       st.integers(0, 6), st.integers(0, 2), st.integers(-4, 4))
def test_substitute_affine_agrees_with_evaluation(f, c, r, y0):
    center = (P2.from_rational(c),)
    scale = (P2.element_of_valuation(r),)
    g = f.substitute_affine(center, scale)
    point = P2.from_rational(y0)
    direct = f.evaluate((center[0] + scale[0] * point,))
    assert g.evaluate((point,)) == direct


def test_substitute_affine_multivariate():
    f = SparsePoly.monomial(P2, 2, (1, 1))
    c = (P2.from_rational(1), P2.from_rational(0))
    s = (P2.from_rational(2), P2.from_rational(4))
    g = f.substitute_affine(c, s)
    # (1 + 2 y1) * 4 y2 = 4 y2 + 8 y1 y2
    assert g == SparsePoly.make(P2, 2, {
        (0, 1): P2.from_rational(4), (1, 1): P2.from_rational(8)})


# ---------------------------------------------------------------------------
# domains and sup norms


def test_rescale_worked_example():
    # x(x-1) on the disc |x| <= |2| over Q_2: 4y^2 - 2y, gauss valuation 1
    x = SparsePoly.variable(P2, 1, 0)
    f = x * (x - SparsePoly.constant(P2, 1, 1))
    g = rescale_to_subdisc(f, (P2.zero(),), (Fraction(1),))
    y = SparsePoly.variable(P2, 1, 0)
    assert g == (y ** 2).scale(4) - y.scale(2)
    assert g.gauss_valuation() == NormValue.of(1)
    assert sup_norm(f, Polydisc((P2.zero(),), (Fraction(1),))) == NormValue.of(1)


def test_sup_norm_examples():
    x = SparsePoly.variable(P2, 1, 0)
    assert sup_norm(x, unit_polydisc(P2, 1)) == NormValue.of(0)
    assert sup_norm(x, Polydisc((P2.zero(),), (Fraction(2),))) == NormValue.of(2)
    # |x| = 1 everywhere on the disc around 1 of radius |2^3|
    assert sup_norm(x, Polydisc((P2.one(),), (Fraction(3),))) == NormValue.of(0)


def test_sup_norm_fractional_radius_needs_hahn():
    x = SparsePoly.variable(HAHN, 1, 0)
    dom = Polydisc((HAHN.zero(),), (Fraction(1, 2),))
    assert sup_norm(x, dom) == NormValue.of(Fraction(1, 2))
    with pytest.raises(ValueError):
        sup_norm(SparsePoly.variable(P2, 1, 0),
                 Polydisc((P2.zero(),), (Fraction(1, 2),)))


@given(small_polys(P2, dim=1, degree=3), st.integers(0, 3), st.integers(0, 3))
def test_restriction_contracts(f, r1, r2):
    # smaller disc, larger sup-norm valuation
    lo, hi = sorted((r1, r2))
    big = sup_norm(f, Polydisc((P2.zero(),), (Fraction(lo),)))
    small = sup_norm(f, Polydisc((P2.zero(),), (Fraction(hi),)))
    assert small >= big


@given(small_polys(P2, dim=1, degree=3), small_polys(P2, dim=1, degree=3))
def test_rescale_is_injective(f, g):
    rf = rescale_to_subdisc(f, (P2.one(),), (Fraction(2),))
    rg = rescale_to_subdisc(g, (P2.one(),), (Fraction(2),))
    assert (rf == rg) == (f == g)


def test_polydisc_validation():
    with pytest.raises(ValueError):
        Polydisc((P2.from_rational(Fraction(1, 2)),), (Fraction(1),))
    with pytest.raises(ValueError):
        Polydisc((P2.zero(),), (Fraction(-1),))
    with pytest.raises(ValueError):
        Polydisc((P2.zero(), P2.zero()), (Fraction(0),))


def test_holed_disc_requires_disjoint_holes():
    h1 = Hole(P2.zero(), Fraction(2))
    h2 = Hole(P2.from_rational(1), Fraction(1))
    HoledDisc((h1, h2))  # |0 - 1| = 1 >= max radius
    h3 = Hole(P2.from_rational(4), Fraction(1))
    with pytest.raises(ValueError):
        HoledDisc((h1, h3))  # centers 4-close, radius |2| hole swallows it


def test_sup_norm_on_holed_disc_is_gauss():
    x = SparsePoly.variable(P2, 1, 0)
    dom = HoledDisc((Hole(P2.zero(), Fraction(1)),))
    f = (x - SparsePoly.constant(P2, 1, 1)).scale(4)
    assert sup_norm(f, dom) == NormValue.of(2)


# ---------------------------------------------------------------------------
# hole basis derivative, against a symbolic pole-order oracle


def pole_derivative_oracle(alpha: int, beta: int) -> Fraction:
    """Differentiate (x-a)^(-(beta+1)) alpha times, one step at a time,
    then divide by alpha!; returns the rational factor relative to the
    original pole."""
    acc = Fraction(1)
    order = beta + 1
    for _ in range(alpha):
        acc *= -order
        order += 1
    return acc / math.factorial(alpha)


def test_laurent_basis_derivative_examples():
    hole = Hole(P2.zero(), Fraction(1))
    factor, pole = laurent_basis_derivative(1, 0, hole)
    assert (factor, pole) == (P2.from_rational(-1), 1)
    factor, pole = laurent_basis_derivative(0, 5, hole)
    assert (factor, pole) == (P2.one(), 0)
    factor, pole = laurent_basis_derivative(2, 1, hole)
    assert (factor, pole) == (P2.from_rational(3), 2)


def test_laurent_basis_derivative_matches_pole_oracle():
    hole = Hole(HAHN.from_rational(2), Fraction(1))
    for alpha in range(7):
        for beta in range(7):
            factor, pole = laurent_basis_derivative(alpha, beta, hole)
            assert pole == alpha
            assert factor == HAHN.from_rational(pole_derivative_oracle(alpha, beta))


# ---------------------------------------------------------------------------
# serialization


def test_poly_text_examples():
    x = SparsePoly.variable(P2, 1, 0)
    f = (x ** 2).scale(3) - x
    assert poly_to_text(f) == "(-1/1@2) * x1^1 + (3/1@2) * x1^2"
    assert poly_to_text(SparsePoly.zero(P2, 1)) == "0"
    assert poly_from_text(poly_to_text(f), P2, 1) == f


@given(small_polys(P5, dim=2, degree=3))
def test_poly_text_roundtrip_padic(f):
    assert poly_from_text(poly_to_text(f), P5, 2) == f


def test_poly_text_roundtrip_hahn():
    t = HAHN.uniformizer()
    f = SparsePoly.make(HAHN, 2, {
        (1, 0): t, (0, 2): HAHN.from_rational(Fraction(-2, 3)) + t * t})
    assert poly_from_text(poly_to_text(f), HAHN, 2) == f


def test_poly_from_text_rejects_malformed():
    with pytest.raises(ValueError):
        poly_from_text("(1/1@2) * x1^1 x1^2", P2, 1)  # repeated variable
    with pytest.raises(ValueError):
        poly_from_text("(1/1@2) * x2^1", P2, 1)  # out-of-range variable
    with pytest.raises(ValueError):
        poly_from_text("(1/1@2 * x1^1", P2, 1)  # unbalanced parens


def test_domain_json_roundtrip():
    dom = Polydisc((P2.one(), P2.zero()), (Fraction(1), Fraction(2)))
    obj = domain_to_json(dom)
    assert obj["type"] == "polydisc"
    assert domain_from_json(json.loads(json.dumps(obj)), P2) == dom

    holed = HoledDisc((Hole(P2.zero(), Fraction(1)), Hole(P2.one(), Fraction(2))))
    obj2 = domain_to_json(holed)
    assert obj2["type"] == "holed_disc"
    assert domain_from_json(obj2, P2) == holed


def test_domain_json_rejects_unknown_type():
    with pytest.raises(ValueError):
        domain_from_json({"type": "annulus"}, P2)
