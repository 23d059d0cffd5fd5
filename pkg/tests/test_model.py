import pytest

import oracles
from desing.model import (Chart, DataVector, GluingMap, MarkedIdealCollection,
                          ValidationError, chart_frame, chart_support_empty,
                          collection_support_empty, support_ideal, validate)
from desing.poly import Polynomial, parse_poly


def P(s, n=2):
    return parse_poly(s, n)


def cusp_collection():
    chart = Chart(chart_id=(), nvars=2, params=(),
                  gens=(P("x2^2 - x1^3"),), complement=(), exceptional=())
    return MarkedIdealCollection(charts=(chart,), mark=1)


class TestChart:
    def test_defaults_and_identity_dictionary(self):
        c = Chart((), 2, (), (P("x1"),), (), ())
        assert c.dictionary == ("x1", "x2")
        assert c.dim() == 2
        assert not c.empty

    def test_dim_counts_params(self):
        c = Chart((), 3, (parse_poly("x3", 3),), (), (), ())
        assert c.dim() == 2

    def test_replace_keeps_immutability(self):
        c = Chart((), 2, (), (P("x1"),), (), ())
        d = c.replace(gens=(P("x2"),))
        assert d.gens == (P("x2"),)
        assert c.gens == (P("x1"),)
        with pytest.raises(AttributeError):
            c.nvars = 5

    def test_exceptional_coords(self):
        c = Chart((), 2, (), (), (), ((1, 0),))
        assert c.exceptional_coords() == (1,)


class TestDataVector:
    def test_json_roundtrip(self):
        v = DataVector(r=3, m=2, d=9, n=4, l=5, q=7, b=11)
        assert DataVector.from_json(v.as_json()) == v

    def test_json_is_decimal_strings(self):
        v = DataVector(r=0, m=1, d=1, n=2, l=1, q=1, b=1)
        assert all(isinstance(x, str) for x in v.as_json().values())

    def test_collection_measurements(self):
        coll = cusp_collection()
        v = coll.data_vector()
        assert (v.r, v.m, v.d, v.n, v.q) == (0, 2, 3, 2, 1)

    def test_degree_tracks_all_sections(self):
        chart = Chart((), 2, (P("x1^5"),), (P("x2"),), (), ())
        coll = MarkedIdealCollection(charts=(chart,), mark=1)
        assert coll.data_vector().d == 5


class TestSupport:
    def test_cusp_support_is_nonempty_at_mark_two(self):
        chart = cusp_collection().charts[0]
        assert not chart_support_empty(chart, 2)

    def test_cusp_support_empty_at_mark_three(self):
        chart = cusp_collection().charts[0]
        assert chart_support_empty(chart, 3)

    def test_support_ideal_matches_reference(self):
        chart = cusp_collection().charts[0]
        s = support_ideal(chart, 2)
        # D^1 of the cusp: the curve plus both partials; only the origin
        expected = [P("x2^2 - x1^3"), P("x1^2"), P("x2")]
        assert oracles.sympy_same_variety(list(s.gens), expected, 2)

    def test_empty_chart_reports_empty(self):
        c = Chart((), 2, (), (P("x1"),), (), (), empty=True)
        assert chart_support_empty(c, 1)

    def test_localization_can_empty_a_support(self):
        # V(x1) has support everywhere on it; inverting x1 kills it
        c = Chart((), 2, (), (P("x1"),), (P("x1"),), ())
        assert chart_support_empty(c, 1)
        assert collection_support_empty(
            MarkedIdealCollection(charts=(c,), mark=1))


class TestValidate:
    def test_root_validates(self):
        assert validate(cusp_collection()) >= 1

    def test_arity_mismatch_rejected(self):
        bad = Chart((), 2, (), (parse_poly("x1", 3),), (), ())
        with pytest.raises((ValidationError, ValueError)):
            validate(MarkedIdealCollection(charts=(bad,), mark=1))

    def test_exceptional_label_collision_rejected(self):
        bad = Chart((), 2, (), (P("x1"),), (), ((0, 0), (1, 0)))
        with pytest.raises(ValidationError):
            validate(MarkedIdealCollection(charts=(bad,), mark=1,
                                           next_divisor_label=1))

    def test_frame_cache_returns_same_object(self):
        c = cusp_collection().charts[0]
        assert chart_frame(c) is chart_frame(c)
