"""Charts, atlases, and the bookkeeping data of a marked ideal.

A marked ideal lives on a cover of affine charts.  Each chart is an open
piece of an ambient affine space: the subvariety X is cut by the parameter
list, the open set U is where every complement factor is nonzero, and the
exceptional divisors accumulated so far are coordinate hyperplanes tagged
with globally increasing labels.  Charts flagged empty are retained in the
atlas (their parameter list contains the constant 1) so traces keep the full
combinatorial history.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .ideals import (DerivationFrame, Ideal, build_frame, groebner_basis,
                     is_variety_empty, iterated_derivative_ideal,
                     poly_sort_key, radical_contains)
from .poly import Polynomial, format_poly


class Chart:
    """One affine chart of a marked ideal collection."""

    __slots__ = ("chart_id", "nvars", "params", "gens", "complement",
                 "exceptional", "empty", "dictionary", "transform_exponents")

    def __init__(self, chart_id, nvars, params, gens, complement,
                 exceptional, empty=False, dictionary=None,
                 transform_exponents=()):
        object.__setattr__(self, "chart_id", tuple(chart_id))
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "gens", tuple(gens))
        object.__setattr__(self, "complement", tuple(complement))
        object.__setattr__(self, "exceptional", tuple(exceptional))
        object.__setattr__(self, "empty", empty)
        if dictionary is None:
            dictionary = tuple("x%d" % (i + 1) for i in range(nvars))
        object.__setattr__(self, "dictionary", tuple(dictionary))
        object.__setattr__(self, "transform_exponents",
                           tuple(sorted(transform_exponents)))

    def __setattr__(self, *a):
        raise AttributeError("Chart is immutable")

    def __repr__(self):
        return "Chart(id=%s, n=%d, m=%d%s)" % (
            "/".join(map(str, self.chart_id)), self.nvars, self.dim(),
            ", empty" if self.empty else "")

    def dim(self):
        return self.nvars - len(self.params)

    def replace(self, **kw):
        fields = {s: getattr(self, s) for s in Chart.__slots__}
        fields.update(kw)
        return Chart(**fields)

    def subvariety_ideal(self):
        return Ideal(list(self.params), self.nvars)

    def exceptional_coords(self):
        return tuple(c for c, _ in self.exceptional)

    def ideal(self):
        return Ideal(list(self.gens), self.nvars)


class GluingMap:
    """Rational coordinate change between two overlapping charts.

    pairs[i] = (v, w) expresses the i-th coordinate of the target chart as
    v/w in the source chart's coordinates, valid on the overlap where w is
    invertible.
    """

    __slots__ = ("source_id", "target_id", "pairs")

    def __init__(self, source_id, target_id, pairs):
        object.__setattr__(self, "source_id", tuple(source_id))
        object.__setattr__(self, "target_id", tuple(target_id))
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in pairs))

    def __setattr__(self, *a):
        raise AttributeError("GluingMap is immutable")


@dataclass(frozen=True)
class DataVector:
    """Size data of a collection: blow-up count r, dimension m, max degree
    d, max ambient n, max generator-list length l, chart count q, max
    coefficient bit size b."""

    r: int
    m: int
    d: int
    n: int
    l: int
    q: int
    b: int

    def as_json(self):
        # decimal strings: these counts can exceed 2^53 in derived objects
        return {k: str(getattr(self, k)) for k in "rmdnlqb"}

    @staticmethod
    def from_json(obj):
        return DataVector(**{k: int(obj[k]) for k in "rmdnlqb"})


class MarkedIdealCollection:
    """A marked ideal presented on an atlas of charts."""

    __slots__ = ("charts", "mark", "next_divisor_label", "blowup_count",
                 "gluings", "ambient0")

    def __init__(self, charts, mark, next_divisor_label=0, blowup_count=0,
                 gluings=(), ambient0=None):
        charts = sorted(charts, key=lambda c: c.chart_id)
        object.__setattr__(self, "charts", tuple(charts))
        object.__setattr__(self, "mark", mark)
        object.__setattr__(self, "next_divisor_label", next_divisor_label)
        object.__setattr__(self, "blowup_count", blowup_count)
        object.__setattr__(self, "gluings", tuple(gluings))
        if ambient0 is None:
            ambient0 = charts[0].nvars if charts else 0
        object.__setattr__(self, "ambient0", ambient0)

    def __setattr__(self, *a):
        raise AttributeError("MarkedIdealCollection is immutable")

    def replace(self, **kw):
        fields = {s: getattr(self, s) for s in MarkedIdealCollection.__slots__}
        fields.update(kw)
        return MarkedIdealCollection(**fields)

    def live_charts(self):
        return [c for c in self.charts if not c.empty]

    def chart_by_id(self, cid):
        for c in self.charts:
            if c.chart_id == tuple(cid):
                return c
        raise KeyError(cid)

    def dim(self):
        dims = {c.dim() for c in self.live_charts()}
        if len(dims) > 1:
            raise ValueError("non-uniform chart dimensions: %s" % dims)
        return dims.pop() if dims else 0

    def data_vector(self):
        r = self.blowup_count
        m = self.dim() if self.live_charts() else 0
        d = 1
        n = 0
        l = 1
        b = 1
        polys_of = []
        for c in self.charts:
            n = max(n, c.nvars)
            ps = list(c.params) + list(c.gens) + list(c.complement)
            polys_of.append(ps)
            l = max(l, len(ps))
        for g in self.gluings:
            vw = [p for pair in g.pairs for p in pair]
            polys_of.append(vw)
        for ps in polys_of:
            for p in ps:
                if isinstance(p, Polynomial) and not p.is_zero():
                    d = max(d, int(p.degree()))
                    for cc in p.terms.values():
                        f = Fraction(cc)
                        b = max(b, f.numerator.bit_length(),
                                f.denominator.bit_length())
        q = len(self.charts)
        return DataVector(r=r, m=m, d=d, n=n, l=l, q=max(q, 1), b=b)


# ---------------------------------------------------------------------------
# frames per chart (cached)

_FRAME_CACHE = {}


def chart_frame(chart):
    """DerivationFrame adapted to the chart's subvariety, cached."""
    key = (chart.nvars, chart.params, chart.complement)
    hit = _FRAME_CACHE.get(key)
    if hit is None:
        hit = build_frame(chart.nvars, chart.params,
                          nonzero=tuple(chart.complement))
        _FRAME_CACHE[key] = hit
    return hit


def support_ideal(chart, mark):
    """Generators of D^{mark-1}(I) + I_X on the chart; the support of the
    marked ideal is their common zero locus inside U."""
    if chart.empty:
        return Ideal([Polynomial.const(1, chart.nvars)], chart.nvars)
    frame = chart_frame(chart)
    D = iterated_derivative_ideal(chart.ideal(), frame, mark - 1)
    return Ideal(list(D.gens) + list(chart.params), chart.nvars)


def chart_support_empty(chart, mark):
    if chart.empty:
        return True
    s = support_ideal(chart, mark)
    return is_variety_empty(list(s.gens), chart.nvars,
                            nonzero=chart.complement)


def collection_support_empty(coll):
    return all(chart_support_empty(c, coll.mark) for c in coll.charts)


# ---------------------------------------------------------------------------
# validation

class ValidationError(Exception):
    pass


def validate(coll, deep=None):
    """Structural and semantic invariants of a collection.

    deep=None decides semantic (Groebner-backed) checks by ambient size;
    True forces them, False skips them.  Raises ValidationError on failure,
    returns the number of checks performed.
    """
    checks = 0
    ids = [c.chart_id for c in coll.charts]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate chart ids")
    if list(ids) != sorted(ids):
        raise ValidationError("charts not in canonical id order")
    checks += 1
    if coll.mark < 1:
        raise ValidationError("mark must be positive")
    checks += 1
    dims = set()
    for c in coll.charts:
        if c.empty:
            if not any(p.is_constant() and not p.is_zero() for p in c.params):
                raise ValidationError(
                    "empty-flagged chart lacks the contradiction relation")
            continue
        dims.add(c.dim())
        for p in list(c.params) + list(c.gens) + list(c.complement):
            if p.nvars != c.nvars:
                raise ValidationError("arity mismatch in chart %s"
                                      % (c.chart_id,))
        coords = [cc for cc, _ in c.exceptional]
        labels = [lb for _, lb in c.exceptional]
        if len(set(coords)) != len(coords):
            raise ValidationError("duplicate exceptional coordinate")
        if len(set(labels)) != len(labels):
            raise ValidationError("duplicate divisor label in chart")
        for cc in coords:
            if not 0 <= cc < c.nvars:
                raise ValidationError("exceptional coordinate out of range")
        for lb in labels:
            if lb >= coll.next_divisor_label:
                raise ValidationError("divisor label above the counter")
        for f in c.complement:
            if f.is_zero():
                raise ValidationError("zero complement factor")
        checks += 1
    if len(dims) > 1:
        raise ValidationError("non-uniform dimensions: %s" % dims)
    checks += 1
    by_id = {c.chart_id: c for c in coll.charts}
    for g in coll.gluings:
        if g.source_id not in by_id or g.target_id not in by_id:
            raise ValidationError("gluing references unknown chart")
        tgt = by_id[g.target_id]
        if len(g.pairs) != tgt.nvars:
            raise ValidationError("gluing pair count mismatch")
        for v, w in g.pairs:
            if w.is_zero():
                raise ValidationError("gluing with zero denominator")
        checks += 1
    if deep is None:
        deep = all(c.nvars <= 6 for c in coll.charts)
    if deep:
        for g in coll.gluings:
            checks += _check_gluing_semantics(coll, by_id, g)
    return checks


def _check_gluing_semantics(coll, by_id, g):
    """The gluing must carry the source subvariety into the target one on
    the overlap: substituting the rational map into each target parameter
    and clearing denominators lands in the radical of the source chart's
    subvariety ideal, localized to the overlap."""
    src = by_id[g.source_id]
    tgt = by_id[g.target_id]
    if src.empty or tgt.empty:
        return 0
    nz = list(src.complement) + [w for _, w in g.pairs
                                 if not w.is_constant()]
    done = 0
    for p in tgt.params:
        cleared = _substitute_rational(p, g.pairs, src.nvars)
        if not radical_contains(list(src.params), src.nvars, cleared,
                                nonzero=tuple(nz)):
            raise ValidationError(
                "gluing %s->%s does not respect the subvariety"
                % (g.source_id, g.target_id))
        done += 1
    return done


def _substitute_rational(p, pairs, nvars):
    """p(v1/w1, ..., vk/wk) with denominators cleared (multiplied through by
    prod w_i^{deg_i})."""
    total = Polynomial.zero(nvars)
    degs = [max((m[i] for m in p.terms), default=0)
            for i in range(p.nvars)]
    for m, c in p.terms.items():
        term = Polynomial.const(c, nvars)
        for i, e in enumerate(m):
            v, w = pairs[i]
            if e:
                term = term * v ** e
            if degs[i] - e:
                term = term * w ** (degs[i] - e)
        total = total + term
    return total
