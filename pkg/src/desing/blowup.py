"""Blowing up a marked ideal collection along an admissible center.

A center is described per chart by a full parameter list extending the
chart's subvariety parameters (the prefix), plus optional extra complement
factors refining the open set.  Blowing up a chart in n variables along a
center of dimension k produces one child chart per center parameter, living
in 2n-k variables: the old coordinates survive as the first n (the chart map
to the source is the projection onto them) and the new coordinates record
the ratios of center parameters.

Controlled transforms are computed constructively from lifting certificates:
each generator g, multiplied by a power of the chart's complement product,
is written exactly in the mu-th power of the center ideal modulo the
subvariety ideal, and the transform is read off the certificate.  The
certificate is stored in the trace and re-expanded on verification.
"""

from __future__ import annotations

from itertools import combinations_with_replacement

from .ideals import (Ideal, express_in_ideal, groebner_basis, normal_form,
                     poly_sort_key)
from .model import Chart, GluingMap, MarkedIdealCollection
from .poly import Polynomial, format_poly


class NoRepresentation(Exception):
    """g * f^r never lands in I_C^mu + I_X within the exponent cap."""


class CenterChartData:
    """Per-chart description of a center: the full parameter list (the
    chart's own parameters come first) and extra complement factors."""

    __slots__ = ("params", "extra_complement")

    def __init__(self, params, extra_complement=()):
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "extra_complement", tuple(extra_complement))

    def __setattr__(self, *a):
        raise AttributeError("CenterChartData is immutable")


class CenterDescription:
    """An admissible center, chart by chart.

    k is the center's dimension; entries maps chart ids (of the charts the
    center meets) to CenterChartData.  Charts absent from entries are not
    touched by the blow-up.
    """

    __slots__ = ("k", "entries")

    def __init__(self, k, entries):
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "entries",
                           {tuple(i): e for i, e in entries.items()})

    def __setattr__(self, *a):
        raise AttributeError("CenterDescription is immutable")

    def as_json(self):
        return {
            "k": self.k,
            "charts": {
                "/".join(map(str, cid)): {
                    "params": [format_poly(p) for p in e.params],
                    "extra_complement": [format_poly(p)
                                         for p in e.extra_complement],
                }
                for cid, e in sorted(self.entries.items())
            },
        }


class LiftCertificate:
    """Exact witness that g * f^r lies in I_C^mu + I_X.

    ``terms`` maps exponent multi-indices over the non-prefix center
    parameters (each of total degree mu) to cofactors; ``prefix_cofs`` are
    the cofactors of the prefix (subvariety) parameters.  The certified
    identity, re-expanded by ``check``:

        g * f^r = sum_a terms[a] * prod_j params[prefix+j]^{a_j}
                  + sum_j prefix_cofs[j] * params[j]
    """

    __slots__ = ("r", "terms", "prefix_cofs")

    def __init__(self, r, terms, prefix_cofs):
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "terms",
                           {tuple(a): h for a, h in terms.items()})
        object.__setattr__(self, "prefix_cofs", tuple(prefix_cofs))

    def __setattr__(self, *a):
        raise AttributeError("LiftCertificate is immutable")

    def check(self, g, f, params, prefix_len):
        nv = g.nvars
        total = Polynomial.zero(nv)
        tail = params[prefix_len:]
        for a, h in self.terms.items():
            t = h
            for j, e in enumerate(a):
                if e:
                    t = t * tail[j] ** e
            total = total + t
        for j, h in enumerate(self.prefix_cofs):
            total = total + h * params[j]
        lhs = g * f ** self.r
        return lhs == total

    def as_json(self):
        return {
            "r": self.r,
            "terms": {",".join(map(str, a)): format_poly(h)
                      for a, h in sorted(self.terms.items())},
            "prefix_cofs": [format_poly(h) for h in self.prefix_cofs],
        }


def power_products(params, mu):
    """Multi-indices of total degree mu over len(params) slots, canonical
    (sorted) order, with the corresponding product polynomials."""
    k = len(params)
    idxs = []
    if k == 0:
        return []
    for combo in combinations_with_replacement(range(k), mu):
        a = [0] * k
        for i in combo:
            a[i] += 1
        idxs.append(tuple(a))
    idxs.sort()
    out = []
    for a in idxs:
        p = None
        for j, e in enumerate(a):
            if e:
                q = params[j] ** e
                p = q if p is None else p * q
        out.append((a, p))
    return out


def represent_in_center_power(g, f, params, prefix_len, mu, cap=64):
    """Minimal r >= 0 and exact cofactors with g*f^r in I_C^mu + I_X.

    I_C is generated by the full parameter list; the identity uses degree-mu
    products of the non-prefix parameters plus the prefix parameters
    linearly.  Raises NoRepresentation past the cap.
    """
    nv = g.nvars
    prods = power_products(params[prefix_len:], mu)
    gen_list = [p for _, p in prods] + list(params[:prefix_len])
    if not gen_list:
        raise NoRepresentation("no center parameters to lift against")
    target = g
    for r in range(cap + 1):
        cofs = express_in_ideal(target, gen_list, nv)
        if cofs is not None:
            terms = {}
            for (a, _), h in zip(prods, cofs[:len(prods)]):
                if not h.is_zero():
                    terms[a] = h
            cert = LiftCertificate(r, terms, cofs[len(prods):])
            if not cert.check(g, f, params, prefix_len):
                raise AssertionError("lift certificate failed re-expansion")
            return cert
        target = target * f
    raise NoRepresentation(
        "no representation in the center power within exponent cap %d" % cap)


class BlowupRecord:
    """Everything the verifier needs about one blow-up."""

    __slots__ = ("center", "divisor_label", "before", "after",
                 "certificates", "touched", "child_ids")

    def __init__(self, center, divisor_label, before, after, certificates,
                 touched, child_ids):
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "divisor_label", divisor_label)
        object.__setattr__(self, "before", before)
        object.__setattr__(self, "after", after)
        object.__setattr__(self, "certificates", certificates)
        object.__setattr__(self, "touched", tuple(touched))
        object.__setattr__(self, "child_ids", tuple(child_ids))

    def __setattr__(self, *a):
        raise AttributeError("BlowupRecord is immutable")


def blow_up(coll, center, lift_cap=64):
    """Blow up the collection along the center; returns (collection,
    record).  Deterministic: charts are processed in canonical id order and
    children are ordered by the center parameter index they invert."""
    mark = coll.mark
    label = coll.next_divisor_label
    new_charts = []
    gluings = []
    certificates = {}
    touched = []
    child_ids = []
    for chart in coll.charts:
        entry = center.entries.get(chart.chart_id)
        if entry is None:
            new_charts.append(chart)
            continue
        if chart.empty:
            raise ValueError("center touches an empty-flagged chart")
        touched.append(chart.chart_id)
        P = list(entry.params)
        prefix = len(chart.params)
        if tuple(P[:prefix]) != chart.params:
            raise ValueError("center parameters do not extend the chart's")
        n = chart.nvars
        k = n - len(P)
        if k != center.k:
            raise ValueError("center dimension mismatch on chart %s"
                             % (chart.chart_id,))
        f_factors = list(chart.complement) + list(entry.extra_complement)
        fprod = Polynomial.const(1, n)
        for ff in f_factors:
            fprod = fprod * ff
        certs = []
        for g in chart.gens:
            if g.is_zero():
                certs.append(None)
                continue
            certs.append(represent_in_center_power(
                g, fprod, P, prefix, mark, cap=lift_cap))
        certificates[chart.chart_id] = certs
        children = _make_children(chart, entry, P, prefix, mark, label,
                                  certs)
        for ch in children:
            new_charts.append(ch)
            child_ids.append(ch.chart_id)
        gluings.extend(_sibling_gluings(chart, P, children))
    if not touched:
        raise ValueError("center touches no chart")
    before = coll.data_vector()
    out = MarkedIdealCollection(
        new_charts, mark,
        next_divisor_label=label + 1,
        blowup_count=coll.blowup_count + 1,
        gluings=tuple(gluings),
        ambient0=coll.ambient0)
    after = out.data_vector()
    record = BlowupRecord(center, label, before, after, certificates,
                          touched, child_ids)
    return out, record


def _make_children(chart, entry, P, prefix, mark, label, certs):
    n = chart.nvars
    nk = len(P)  # n - k children
    children = []
    for i0 in range(1, nk + 1):
        n2 = 2 * n - (n - nk)  # 2n - k
        ext = lambda p: p.extend(n2)
        newvar = lambda j: Polynomial.var(n + j - 1, n2)  # x_{n+j}, 1-based j
        params2 = []
        for j in range(1, nk + 1):
            if j == i0:
                continue
            params2.append(ext(P[j - 1]) - ext(P[i0 - 1]) * newvar(j))
        params2.append(ext(P[i0 - 1]) - newvar(i0))
        for j in range(1, prefix + 1):
            if j == i0:
                continue
            params2.append(newvar(j))
        empty = i0 <= prefix
        if empty:
            params2.append(Polynomial.const(1, n2))
        xideal = Ideal(params2, n2)
        gb = xideal.groebner_basis() if not empty else ()
        gens2 = []
        for g, cert in zip(chart.gens, certs):
            if cert is None:
                gens2.append(Polynomial.zero(n2))
                continue
            t = _transform_from_certificate(cert, P, prefix, i0, n, n2)
            if not empty:
                t = normal_form(t, gb)
            gens2.append(t)
        if not empty:
            gens2 = list(Ideal(gens2, n2).canonicalized().gens)
        comp2 = [ext(F) for F in chart.complement] + \
                [ext(F) for F in entry.extra_complement]
        exc2 = []
        folded = 0  # divisor powers absorbed by the new exceptional
        for c, lb in chart.exceptional:
            j = _param_position(P, c, n)
            if j is None:
                exc2.append((c, lb))
            elif j == i0:
                folded += _texp(chart, lb)
            else:
                # on the child, x_c = (new divisor) * x_{j+n}: the old
                # divisor keeps its exponent on x_{j+n} and contributes it
                # to the new divisor as well
                exc2.append((n + j - 1, lb))
                folded += _texp(chart, lb)
        exc2.append((n + i0 - 1, label))
        kept = {lb for _, lb in exc2}
        texps = [(lb, e) for lb, e in chart.transform_exponents
                 if lb in kept]
        texps.append((label, mark + folded))
        dict2 = list(chart.dictionary) + [""] * (n2 - n)
        for j in range(1, nk + 1):
            if j == i0:
                dict2[n + j - 1] = format_poly(P[i0 - 1])
            else:
                dict2[n + j - 1] = "(%s)/(%s)" % (format_poly(P[j - 1]),
                                                  format_poly(P[i0 - 1]))
        children.append(Chart(
            chart.chart_id + (i0,), n2, params2, gens2, comp2, exc2,
            empty=empty, dictionary=dict2,
            transform_exponents=texps))
    return children


def _texp(chart, lb):
    for l2, e in chart.transform_exponents:
        if l2 == lb:
            return e
    return 0


def _param_position(P, coord, n):
    """1-based index j with P[j-1] == x_{coord+1}, else None."""
    mono = tuple(1 if i == coord else 0 for i in range(n))
    for j, p in enumerate(P, start=1):
        if len(p.terms) == 1:
            ((m, c),) = p.terms.items()
            if m == mono and c == 1:
                return j
    return None


def _transform_from_certificate(cert, P, prefix, i0, n, n2):
    """Controlled transform: sum over the certificate of the pulled-back
    cofactor times the product of new coordinates x_{j+n}^{a_j} for the
    non-prefix slots j != i0 (the i0 factors absorb the divisor power)."""
    total = Polynomial.zero(n2)
    for a, h in sorted(cert.terms.items()):
        t = h.extend(n2)
        for pos, e in enumerate(a):
            j = prefix + pos + 1  # 1-based slot in P
            if j == i0 or not e:
                continue
            t = t * Polynomial.var(n + j - 1, n2) ** e
        total = total + t
    return total


def _sibling_gluings(chart, P, children):
    out = []
    n = chart.nvars
    live = [ch for ch in children if not ch.empty]
    for a in live:
        for b in live:
            if a.chart_id == b.chart_id:
                continue
            j0 = b.chart_id[-1]
            n2 = a.nvars
            pairs = []
            for t in range(n):
                pairs.append((Polynomial.var(t, n2),
                              Polynomial.const(1, n2)))
            for j in range(1, len(P) + 1):
                if j == j0:
                    pairs.append((P[j0 - 1].extend(n2),
                                  Polynomial.const(1, n2)))
                else:
                    pairs.append((P[j - 1].extend(n2),
                                  P[j0 - 1].extend(n2)))
            out.append(GluingMap(a.chart_id, b.chart_id, pairs))
    return out


class DataBoundsBreach(Exception):
    pass


def data_vectors_check(b, a, mark=1):
    """Assert the single blow-up data recursion between two data vectors:
    r increments, the dimension does not grow, n at most doubles, l grows
    by at most n, q by a factor of at most n, d within the blow-up degree
    bound."""
    from .bounds import BoundConstants, G_bound
    if a.r != b.r + 1:
        raise DataBoundsBreach("r did not increment")
    if a.m > b.m:
        raise DataBoundsBreach("dimension grew")
    if a.n > 2 * b.n:
        raise DataBoundsBreach("ambient more than doubled")
    if a.l > b.l + b.n:
        raise DataBoundsBreach("generator count outgrew l + n")
    if a.q > b.n * b.q:
        raise DataBoundsBreach("chart count outgrew n * q")
    g = G_bound(b.n, b.d, mark, BoundConstants())
    if not g.ge_int(a.d):
        raise DataBoundsBreach("degree outgrew the blow-up degree bound")
    return True


def data_bounds_check(record, mark=1):
    return data_vectors_check(record.before, record.after, mark=mark)
