import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from desing.poly import (Polynomial, format_poly, grevlex_key, m_deg, m_div,
                         m_divides, m_lcm, m_mul, parse_poly)


def P(s, n=3):
    return parse_poly(s, n)


coeffs = st.builds(Fraction, st.integers(-40, 40),
                   st.integers(1, 7))


@st.composite
def polys(draw, nvars=3, max_terms=6, max_exp=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        mono = tuple(draw(st.integers(0, max_exp)) for _ in range(nvars))
        terms[mono] = draw(coeffs)
    return Polynomial(terms, nvars)


class TestMonomials:
    def test_mul_div_roundtrip(self):
        a, b = (2, 0, 3), (1, 1, 0)
        assert m_div(m_mul(a, b), b) == a

    def test_divides(self):
        assert m_divides((1, 0, 2), (2, 1, 2))
        assert not m_divides((1, 0, 3), (2, 1, 2))

    def test_lcm(self):
        assert m_lcm((2, 0, 1), (1, 3, 1)) == (2, 3, 1)

    def test_deg(self):
        assert m_deg((2, 0, 5)) == 7

    def test_grevlex_total_degree_first(self):
        # x1^3 beats x1*x2 (degree 3 over 2)
        assert grevlex_key((3, 0, 0)) > grevlex_key((1, 1, 0))

    def test_grevlex_tie_break(self):
        # same degree: reverse lexicographic on reversed exponents
        # x1^2 > x1 x2 > x2^2 > x1 x3 > x2 x3 > x3^2
        order = [(2, 0, 0), (1, 1, 0), (0, 2, 0), (1, 0, 1), (0, 1, 1),
                 (0, 0, 2)]
        keys = [grevlex_key(m) for m in order]
        assert keys == sorted(keys, reverse=True)


class TestArithmetic:
    @given(polys(), polys(), polys())
    def test_ring_laws(self, f, g, h):
        assert (f + g) * h == f * h + g * h
        assert f * g == g * f
        assert (f + g) + h == f + (g + h)
        assert f * (g * h) == (f * g) * h

    @given(polys(), polys())
    def test_sub_is_add_neg(self, f, g):
        assert f - g == f + (-g)

    @given(polys())
    def test_zero_and_one(self, f):
        one = Polynomial.const(1, f.nvars)
        zero = Polynomial.zero(f.nvars)
        assert f * one == f
        assert f + zero == f
        assert f - f == zero

    @given(polys(), st.integers(0, 4))
    def test_pow_matches_repeated_mul(self, f, k):
        out = Polynomial.const(1, f.nvars)
        for _ in range(k):
            out = out * f
        assert f ** k == out

    def test_degree_of_zero_is_sentinel(self):
        z = Polynomial.zero(2)
        assert z.is_zero()
        assert z.degree() < 0 or z.degree() is None  # sentinel, not data
        assert not z

    @given(polys())
    def test_content_normalized_is_scalar_multiple(self, f):
        g = f.content_normalized()
        if f.is_zero():
            assert g.is_zero()
            return
        # g = c*f for a rational c, integer coprime content, positive lead
        (m0, c0) = next(iter(g.terms.items()))
        ratio = Fraction(c0) / Fraction(f.terms[m0])
        assert Fraction(g.lc()) > 0
        assert g == f.scale(ratio)
        ints = [c for c in g.terms.values()]
        assert all(c.denominator == 1 for c in ints)
        assert math.gcd(*(abs(c.numerator) for c in ints)) == 1 \
            if len(ints) > 1 else abs(ints[0].numerator) == 1


class TestCalculus:
    @given(polys(), polys(), st.integers(0, 2))
    def test_leibniz(self, f, g, i):
        lhs = (f * g).derivative(i)
        rhs = f.derivative(i) * g + f * g.derivative(i)
        assert lhs == rhs

    @given(polys(), st.integers(0, 2), st.integers(0, 2))
    def test_partials_commute(self, f, i, j):
        assert f.derivative(i).derivative(j) == f.derivative(j).derivative(i)

    def test_derivative_example(self):
        f = P("x1^3*x2 - 2*x2^2")
        assert f.derivative(0) == P("3*x1^2*x2")
        assert f.derivative(1) == P("x1^3 - 4*x2")


class TestEvaluation:
    @given(polys(), polys())
    def test_evaluate_is_ring_map(self, f, g):
        pt = (Fraction(1, 2), Fraction(-2), Fraction(3))
        assert (f * g).evaluate(pt) == f.evaluate(pt) * g.evaluate(pt)
        assert (f + g).evaluate(pt) == f.evaluate(pt) + g.evaluate(pt)

    @given(polys())
    def test_shift_moves_the_origin(self, f):
        pt = (Fraction(1), Fraction(-1, 3), Fraction(2))
        g = f.shift(pt)
        zero = (Fraction(0),) * 3
        assert g.evaluate(zero) == f.evaluate(pt)

    def test_order_at_point(self):
        f = P("x2^2 - x1^3", 2)
        assert f.order_at_point((Fraction(0), Fraction(0))) == 2
        assert f.order_at_point((Fraction(1), Fraction(1))) == 1

    @given(polys())
    def test_substitute_identity(self, f):
        vals = [Polynomial.var(i, 3) for i in range(3)]
        assert f.substitute(vals) == f

    def test_substitute_composition(self):
        f = P("x1^2 + x2", 2)
        # x1 -> x1*x2, x2 -> x2  gives x1^2 x2^2 + x2
        out = f.substitute([P("x1*x2", 2), P("x2", 2)])
        assert out == P("x1^2*x2^2 + x2", 2)

    @given(polys())
    def test_extend_keeps_values(self, f):
        g = f.extend(5)
        pt = (Fraction(2), Fraction(-1), Fraction(1, 3))
        assert g.evaluate(pt + (Fraction(7), Fraction(9))) == f.evaluate(pt)


class TestParseFormat:
    @given(polys())
    def test_roundtrip(self, f):
        assert parse_poly(format_poly(f), f.nvars) == f

    def test_parse_constants(self):
        assert parse_poly("3/2", 2) == Polynomial.const(Fraction(3, 2), 2)
        assert parse_poly("0", 1).is_zero()

    def test_parse_signs_and_powers(self):
        assert P("-x1 + 2*x2^3 - 1") == \
            -Polynomial.var(0, 3) + P("2*x2^3") - Polynomial.const(1, 3)

    def test_reject_garbage(self):
        with pytest.raises(ValueError):
            parse_poly("x1 +* x2", 2)
        with pytest.raises(ValueError):
            parse_poly("x9", 2)

    def test_format_is_canonical(self):
        f = P("x2 + x1")
        g = P("x1 + x2")
        assert format_poly(f) == format_poly(g)
