import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nadops.affinoid import (
    Polydisc,
    SparsePoly,
    mi_box,
    mi_up_to_total,
    unit_polydisc,
)
from nadops.operators import (
    DECREASING_WITNESSED,
    INCONCLUSIVE,
    NON_DECREASING_WITNESSED,
    CoefficientFamily,
    DecayBound,
    DiffOperator,
    EndoOracle,
    apply_operator,
    classify_rapid_decay,
    coefficient_decay_report,
    combinatorial_delta,
    compose,
    operator_from_text,
    operator_norm_bracket,
    operator_to_text,
    radius_seminorm,
    random_operator,
    random_poly,
    roundtrip_report,
    symbol_coefficient,
    total_symbol,
    translation_invariance_check,
)
from nadops.scalars import HahnField, NormValue, PAdicField

P2 = PAdicField(2)
P3 = PAdicField(3)
HAHN = HahnField()


def x_var(field=P2, dim=1, i=0):
    return SparsePoly.variable(field, dim, i)


def const(value, field=P2, dim=1):
    return SparsePoly.constant(field, dim, value)


# ---------------------------------------------------------------------------
# construction and action


def test_apply_divided_power_example():
    P = DiffOperator.make(P2, 1, {(2,): const(1)}, divided=True)
    assert apply_operator(P, x_var() ** 5) == (x_var() ** 3).scale(10)


def test_apply_euler_operator():
    P = DiffOperator.make(P2, 1, {(1,): x_var()})
    f = x_var() ** 3
    assert apply_operator(P, f) == f.scale(3)


def test_apply_kills_constants():
    P = DiffOperator.make(P2, 1, {(1,): const(1)})
    assert apply_operator(P, const(5)).is_zero


def test_apply_multivariate():
    P = DiffOperator.make(P2, 2, {(1, 1): const(1, dim=2)})
    f = SparsePoly.monomial(P2, 2, (1, 1))
    assert apply_operator(P, f) == const(1, dim=2)


def test_divided_and_plain_agree_through_to_plain():
    P = DiffOperator.make(P3, 1, {(2,): x_var(P3)}, divided=True)
    Q = P.to_plain()
    assert P == Q
    f = x_var(P3) ** 4
    assert apply_operator(P, f) == apply_operator(Q, f)


def test_make_rejects_index_beyond_order():
    with pytest.raises(ValueError):
        DiffOperator.make(P2, 1, {(3,): const(1)}, order=2)


def test_operator_equality_crosses_normalizations():
    half = const(Fraction(1, 2))
    assert DiffOperator.make(P2, 1, {(2,): const(1)}, divided=True) \
        == DiffOperator.make(P2, 1, {(2,): half})


# ---------------------------------------------------------------------------
# composition


def test_compose_heisenberg_relation():
    D = DiffOperator.make(P2, 1, {(1,): const(1)})
    X = DiffOperator.make(P2, 1, {(0,): x_var()})
    assert compose(D, X) == DiffOperator.make(
        P2, 1, {(1,): x_var(), (0,): const(1)}, order=1)


def test_compose_euler_squared():
    E = DiffOperator.make(P2, 1, {(1,): x_var()})
    EE = compose(E, E)
    expected = DiffOperator.make(
        P2, 1, {(2,): x_var() ** 2, (1,): x_var()}, order=2)
    assert EE == expected


def test_compose_is_exhaustively_coherent_on_monomial_operators():
    # apply(P o Q) == apply(P) o apply(Q) over single-term operators
    for a in range(3):
        for b in range(3):
            P = DiffOperator.make(P2, 1, {(b,): x_var() ** a})
            for c in range(3):
                for d in range(3):
                    Q = DiffOperator.make(P2, 1, {(d,): x_var() ** c})
                    C = compose(P, Q)
                    for m in range(4):
                        f = x_var() ** m
                        assert apply_operator(C, f) == \
                            apply_operator(P, apply_operator(Q, f))


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_compose_coherence_fuzz(seed):
    rng = random.Random(seed)
    field = rng.choice([P2, HAHN])
    P = random_operator(rng, field, 2, 2, 2)
    Q = random_operator(rng, field, 2, 2, 2)
    f = random_poly(rng, field, 2, 3)
    assert apply_operator(compose(P, Q), f) == \
        apply_operator(P, apply_operator(Q, f))


# ---------------------------------------------------------------------------
# symbol extraction


def test_symbol_of_identity_operator():
    ident = DiffOperator.make(P2, 1, {(0,): const(1)})
    oracle = EndoOracle.from_operator(ident, degree_cap=3)
    assert symbol_coefficient(oracle, (0,)) == const(1)
    for k in (1, 2, 3):
        assert symbol_coefficient(oracle, (k,)).is_zero


def test_symbol_of_euler_operator():
    E = DiffOperator.make(P2, 1, {(1,): x_var()})
    oracle = EndoOracle.from_operator(E)
    assert symbol_coefficient(oracle, (1,)) == x_var()
    assert symbol_coefficient(oracle, (0,)).is_zero


def test_symbol_recovers_plain_coefficient_of_divided_operator():
    P = DiffOperator.make(P2, 1, {(2,): const(1)}, divided=True)
    oracle = EndoOracle.from_operator(P)
    assert symbol_coefficient(oracle, (2,)) == const(Fraction(1, 2))


def test_total_symbol_example():
    P = DiffOperator.make(P2, 1, {(1,): x_var(), (2,): const(16)})
    sym = total_symbol(EndoOracle.from_operator(P), 2)
    assert sym == SparsePoly.make(P2, 2, {
        (1, 1): P2.one(), (0, 2): P2.from_rational(16)})


def test_roundtrip_report_on_zero_operator():
    rep = roundtrip_report(DiffOperator.zero(P2, 1), operator_id="zero")
    assert rep["pass"] and rep["operator_id"] == "zero"


def test_roundtrip_report_random_operators():
    rng = random.Random(5)
    for field in (P2, HAHN):
        for _ in range(10):
            P = random_operator(rng, field, 2, 3, 2)
            assert roundtrip_report(P)["pass"]


def test_oracle_enforces_degree_cap():
    P = DiffOperator.make(P2, 1, {(1,): const(1)})
    oracle = EndoOracle.from_operator(P, degree_cap=2)
    with pytest.raises(ValueError):
        oracle.query((3,))
    with pytest.raises(ValueError):
        symbol_coefficient(oracle, (3,))


def test_combinatorial_delta_small_exhaustive():
    import math
    for gamma in mi_up_to_total(2, 4):
        for alpha in mi_box(gamma):
            value = combinatorial_delta(alpha, gamma)
            if alpha == gamma:
                assert value == math.prod(math.factorial(g) for g in gamma)
            else:
                assert value == 0
    with pytest.raises(ValueError):
        combinatorial_delta((2,), (1,))


def test_translation_invariance_example():
    P = DiffOperator.make(P2, 1, {(1,): const(1)})
    oracle = EndoOracle.from_operator(P, degree_cap=4)
    assert translation_invariance_check(oracle, (P2.one(),), (1,))
    with pytest.raises(ValueError):
        translation_invariance_check(oracle, (P2.from_rational(Fraction(1, 2)),), (1,))


def test_translation_invariance_fuzz():
    rng = random.Random(11)
    for field in (P2, HAHN):
        for _ in range(10):
            P = random_operator(rng, field, 2, 2, 2)
            oracle = EndoOracle.from_operator(P, degree_cap=4)
            center = tuple(field.from_rational(rng.randint(-3, 3)) for _ in range(2))
            alpha = (rng.randint(0, 2), rng.randint(0, 2))
            assert translation_invariance_check(oracle, center, alpha)


# ---------------------------------------------------------------------------
# seminorms and norm brackets


def test_radius_seminorm_examples():
    D = DiffOperator.make(P2, 1, {(1,): const(1)})
    assert radius_seminorm(D, -2) == NormValue.of(-2)
    P = DiffOperator.make(P2, 1, {(1,): const(4), (0,): const(1)})
    assert radius_seminorm(P, -1) == NormValue.of(0)
    assert radius_seminorm(DiffOperator.zero(P2, 1), -3).is_infinite


@given(st.integers(0, 10_000), st.integers(0, 3))
@settings(max_examples=30)
def test_radius_seminorm_submultiplicative_for_large_radii(seed, r):
    rng = random.Random(seed)
    P = random_operator(rng, P2, 1, 2, 2)
    Q = random_operator(rng, P2, 1, 2, 2)
    radius_valuation = -Fraction(r)
    left = radius_seminorm(compose(P, Q), radius_valuation)
    right = radius_seminorm(P, radius_valuation) + radius_seminorm(Q, radius_valuation)
    assert left >= right


def test_norm_bracket_of_divided_powers_on_unit_disc():
    coeffs = {(k,): const(1) for k in range(4)}
    P = DiffOperator.make(P2, 1, coeffs, divided=True)
    lower, upper = operator_norm_bracket(P, unit_polydisc(P2, 1))
    assert lower == NormValue.of(0) and upper == NormValue.of(0)


def test_norm_bracket_of_plain_derivative():
    D = DiffOperator.make(P2, 1, {(1,): const(1)})
    lower, upper = operator_norm_bracket(D, unit_polydisc(P2, 1))
    assert lower == NormValue.of(0) and upper == NormValue.of(0)
    # on the disc of radius |pi| the derivative has norm |pi|^{-1}
    small = Polydisc((P2.zero(),), (Fraction(1),))
    lower, upper = operator_norm_bracket(D, small)
    assert lower == NormValue.of(-1) and upper == NormValue.of(-1)


def test_norm_bracket_of_zero_operator():
    lower, upper = operator_norm_bracket(DiffOperator.zero(P2, 1), unit_polydisc(P2, 1))
    assert lower.is_infinite and upper.is_infinite


def test_norm_bracket_lower_improves_with_cap():
    P = DiffOperator.make(P2, 1, {(2,): const(1), (0,): x_var().scale(8)}, order=2)
    dom = Polydisc((P2.zero(),), (Fraction(1),))
    lo1, _ = operator_norm_bracket(P, dom, degree_cap=0)
    lo3, _ = operator_norm_bracket(P, dom, degree_cap=3)
    assert lo3 <= lo1  # valuation can only drop as more monomials are probed


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_norm_bracket_never_inverts_on_fuzz(seed):
    rng = random.Random(seed)
    field = rng.choice([P2, P3])
    P = random_operator(rng, field, 1, 3, 2)
    dom = Polydisc((field.from_rational(rng.randint(0, 2)),),
                   (Fraction(rng.randint(0, 2)),))
    lower, upper = operator_norm_bracket(P, dom)
    assert upper <= lower


# ---------------------------------------------------------------------------
# coefficient decay on small subdiscs


def test_decay_report_for_plain_derivative():
    D = DiffOperator.make(P2, 1, {(1,): const(1)})
    rep = coefficient_decay_report(D, 1, operator_id="ddx")
    assert rep["pass"]
    assert rep["norm_valuation_upper"] == "-1"
    [check] = rep["checks"]
    assert check["margin"] == "0"


def test_decay_report_zero_operator_is_vacuous():
    rep = coefficient_decay_report(DiffOperator.zero(P2, 1), 3)
    assert rep["pass"] and rep["checks"] == []


def test_decay_report_rapidly_decaying_family():
    pi = P2.uniformizer()
    coeffs = {(k,): const(pi ** (k * k)) for k in range(4)}
    P = DiffOperator.make(P2, 1, coeffs, divided=True)
    rep = coefficient_decay_report(P, 2)
    assert rep["pass"]


@given(st.integers(0, 10_000))
@settings(max_examples=20)
def test_decay_report_holds_on_fuzz(seed):
    rng = random.Random(seed)
    field = rng.choice([P2, HAHN])
    P = random_operator(rng, field, 1, 3, 2)
    assert coefficient_decay_report(P, rng.randint(0, 2))["pass"]


# ---------------------------------------------------------------------------
# decay classifier


def one_poly(field):
    return SparsePoly.constant(field, 1, 1)


def test_classifier_worked_families():
    for field in (P2, HAHN):
        vpi = field.pi_valuation
        pi = field.uniformizer()
        one = one_poly(field)
        quadratic = CoefficientFamily(
            field, 1, lambda a: one.scale(pi ** (a[0] * a[0])),
            bound=DecayBound(quad=vpi))
        assert classify_rapid_decay(quadratic) == DECREASING_WITNESSED
        constant = CoefficientFamily(field, 1, lambda a: one)
        assert classify_rapid_decay(constant) == NON_DECREASING_WITNESSED
        linear = CoefficientFamily(field, 1, lambda a: one.scale(pi ** (2 * a[0])))
        assert classify_rapid_decay(linear) == NON_DECREASING_WITNESSED


def test_classifier_rejects_overstated_bound():
    constant = CoefficientFamily(
        P2, 1, lambda a: one_poly(P2),
        bound=DecayBound(quad=Fraction(1), offset=Fraction(5)))
    with pytest.raises(ValueError):
        classify_rapid_decay(constant)


def test_classifier_is_inconclusive_when_window_is_too_short():
    # growth rate 2 v(pi) per index needs ratio r = 3; with index_cap 4 the
    # guard 2r <= cap blocks that ratio, so no witness can be formed
    pi = P2.uniformizer()
    one = one_poly(P2)
    linear = CoefficientFamily(P2, 1, lambda a: one.scale(pi ** (2 * a[0])))
    assert classify_rapid_decay(linear, r_max=3, index_cap=4) == INCONCLUSIVE


def test_classifier_certificate_paths_agree():
    from nadops.operators import (
        _certifies_bounded_all_ratios,
        _certifies_vanishing_all_ratios,
    )
    upward = DecayBound(quad=Fraction(1, 2), shift=3)
    flat = DecayBound(quad=Fraction(0), slope=Fraction(2))
    assert _certifies_vanishing_all_ratios(upward)
    assert _certifies_bounded_all_ratios(upward, Fraction(1))
    assert not _certifies_vanishing_all_ratios(flat)
    assert not _certifies_bounded_all_ratios(flat, Fraction(1))


def test_family_generator_type_check():
    bad = CoefficientFamily(P2, 1, lambda a: one_poly(HAHN))
    with pytest.raises(ValueError):
        bad.member((0,))


# ---------------------------------------------------------------------------
# operator text format


def test_operator_text_roundtrip_examples():
    P = DiffOperator.make(P2, 1, {(1,): x_var(), (2,): const(16)}, order=3)
    assert operator_from_text(operator_to_text(P)) == P
    t = HAHN.uniformizer()
    Q = DiffOperator.make(HAHN, 2, {(1, 0): SparsePoly.constant(HAHN, 2, t)},
                          divided=True)
    assert operator_from_text(operator_to_text(Q)) == Q


def test_operator_text_roundtrip_fuzz():
    rng = random.Random(3)
    for field in (P2, HAHN):
        for _ in range(15):
            P = random_operator(rng, field, rng.randint(1, 2), 3, 2)
            assert operator_from_text(operator_to_text(P), field) == P


def test_operator_text_errors_carry_line_numbers():
    text = "dim: 1\nbackend: p=2\n1 : (1/1@2) * x1^1\n1 : (2/1@2) * x1^0\n"
    with pytest.raises(ValueError, match="line 4"):
        operator_from_text(text)
    bad_poly = "dim: 1\nbackend: p=2\n1 : (1/1@3) * x1^1\n"
    with pytest.raises(ValueError, match="line 3"):
        operator_from_text(bad_poly)


def test_operator_text_backend_mismatch():
    text = operator_to_text(DiffOperator.make(P2, 1, {(1,): const(1)}))
    with pytest.raises(ValueError, match="p=2"):
        operator_from_text(text, HAHN)
