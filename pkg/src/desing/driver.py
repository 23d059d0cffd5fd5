"""Resolution driver.

Resolves a marked ideal by composing the primitive constructions: monomial
splitting, companion objects, homogenization, coefficient objects,
transversality restrictions, tangent-hypersurface descent, and the
combinatorial exceptional-monomial game.  Blow-ups are performed in
lockstep: the working object sits on a stack of levels (the root object,
then companions and restrictions pushed by the recursion); every center
found at the deepest level is applied to every level at once, which keeps
the whole tower living over the same evolving ambient atlas.

The driver records every event and certificate it produces; traces are
deterministic for a fixed input, including under a thread pool.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .blowup import (CenterChartData, CenterDescription, NoRepresentation,
                     blow_up, data_bounds_check)
from .ideals import (FrameNeedsRefinement, Ideal, NotSmooth, _poly_det,
                     build_frame, coefficient_ideal, companion_ideal,
                     derivative_ideal, groebner_basis, homogenized_ideal,
                     iterated_derivative_ideal, is_variety_empty,
                     max_order_on_support, monomial_split, normal_form,
                     poly_sort_key, radical_contains)
from .model import (Chart, MarkedIdealCollection, chart_frame,
                    chart_support_empty, collection_support_empty,
                    support_ideal, validate)
from .poly import Polynomial, format_poly


class BudgetExceeded(Exception):
    """The blow-up budget ran out before the object resolved."""


class InternalBreach(Exception):
    """A certified invariant of the algorithm failed at runtime."""


class NonDecreasingOrder(InternalBreach):
    """The maximal order failed to drop after an order-reduction round."""


class NoTangentDirection(InternalBreach):
    """The descent step found no smooth hypersurface through the support."""


class SingularWitness(Exception):
    """The witness point fails the Jacobian rank test (or misses the
    subvariety entirely); no smooth model through it can be extracted."""


class StopResolution(Exception):
    """Raised by an interceptor to halt before a blow-up is applied."""

    def __init__(self, payload):
        super().__init__("resolution intercepted")
        self.payload = payload


@dataclass(frozen=True)
class ResolveConfig:
    budget: int = 10000
    lift_cap: int = 64
    jobs: int = 1
    order_cap: int = 256
    descent_mark_cap: int = 6
    candidate_cap: int = 200
    validate_steps: bool = False


@dataclass(frozen=True)
class SmoothModelChart:
    """A chart of the smooth model extracted at interception time: the
    center parameters cut the model inside the chart's ambient space, and
    the projection to the original ambient is the truncation onto the
    first coordinates."""

    chart_id: tuple
    nvars: int
    model_params: tuple
    complement: tuple
    projection_nvars: int
    witness_hit: bool

    def as_json(self):
        return {
            "chart": "/".join(map(str, self.chart_id)),
            "nvars": self.nvars,
            "model_params": [format_poly(p) for p in self.model_params],
            "complement": [format_poly(p) for p in self.complement],
            "projection_nvars": self.projection_nvars,
            "witness_hit": self.witness_hit,
        }


class Driver:
    """Mutable resolution state: the level stack, the trace, the budget."""

    def __init__(self, root, config=None, interceptor=None):
        self.levels = [root]
        self.config = config or ResolveConfig()
        self.interceptor = interceptor
        self.records = []        # (level_index, mark, BlowupRecord)
        self.events = []
        self.budget_used = 0
        charts = root.charts
        self.protect = charts[0].nvars if charts else 0

    def current(self):
        return self.levels[-1]

    def set_current(self, coll):
        self.levels[-1] = coll

    def push(self, coll):
        self.levels.append(coll)

    def pop(self):
        self.events.append({"op": "ascend",
                            "level_depth": len(self.levels) - 1})
        return self.levels.pop()

    # -- the single mutation point

    def apply_center(self, center, note):
        """Blow every level up along the center; one budget unit."""
        if self.budget_used >= self.config.budget:
            raise BudgetExceeded("budget of %d exhausted"
                                 % self.config.budget)
        if self.interceptor is not None:
            self.interceptor(self, center)
        new_levels = []
        new_records = []
        root_record = None
        for i, coll in enumerate(self.levels):
            out, rec = blow_up(coll, center, lift_cap=self.config.lift_cap)
            data_bounds_check(rec, mark=coll.mark)
            new_records.append((i, coll.mark, rec))
            new_levels.append(out)
            if i == 0:
                root_record = rec
        # commit only once every level lifted
        self.budget_used += 1
        self.records.extend(new_records)
        self.levels = new_levels
        self._normalize_charts()
        if self.config.validate_steps:
            for coll in self.levels:
                validate(coll, deep=False)
        self.events.append({
            "op": "blowup",
            "note": note,
            "label": root_record.divisor_label,
            "level_depth": len(self.levels),
            "center": center.as_json(),
            "certificates": _certs_json(root_record),
            "data_before": root_record.before.as_json(),
            "data_after": root_record.after.as_json(),
        })
        return root_record

    def event(self, **kw):
        self.events.append(kw)


def _certs_json(record):
    out = {}
    for cid, certs in sorted(record.certificates.items()):
        out["/".join(map(str, cid))] = [
            c.as_json() if c is not None else None for c in certs]
    return out


def _map_charts(fn, items, jobs):
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# ---------------------------------------------------------------------------
# chart normalization
#
# A blow-up embeds each chart into 2n - k coordinates, so the ambient arity
# would double every step.  Most of the new subvariety parameters are linear
# in a fresh coordinate; eliminating those coordinates is a chart
# isomorphism that keeps the atlas computable.  The plan is derived from the
# root level's parameters, which every deeper level extends, so one plan
# applies tower-wide and the lockstep invariant survives.  Original-ambient
# coordinates (the projection range) and divisor coordinates are never
# eliminated.

def _elimination_plan(chart, protect):
    """Ordered substitutions (coord, replacement) plus the removed-coord
    set, from parameters linear in a disposable coordinate."""
    nv = chart.nvars
    exc = {c for c, _ in chart.exceptional}
    cur = list(chart.params)
    subs = []
    removed = set()
    progress = True
    while progress:
        progress = False
        for pi, p in enumerate(cur):
            if p is None or p.is_zero():
                continue
            pick = None
            for m, coef in p.terms.items():
                if sum(m) != 1:
                    continue
                i = m.index(1)
                if i < protect or i in exc or i in removed:
                    continue
                if any(m2[i] for m2 in p.terms if m2 != m):
                    continue
                if pick is None or i > pick[0]:
                    pick = (i, coef)
            if pick is None:
                continue
            i, coef = pick
            repl = Polynomial.var(i, nv) - p * (Fraction(1) / Fraction(coef))
            vals = [Polynomial.var(j, nv) for j in range(nv)]
            vals[i] = repl
            subs.append((i, vals))
            removed.add(i)
            nxt = []
            for j, q in enumerate(cur):
                if j == pi or q is None:
                    nxt.append(None if j == pi else q)
                    continue
                r = q.substitute(vals)
                if not isinstance(r, Polynomial):
                    r = Polynomial.const(r, nv)
                nxt.append(r)
            cur = nxt
            progress = True
            break
    return subs, removed


def _conv_poly(q, subs, removed, nv):
    for _, vals in subs:
        q = q.substitute(vals)
        if not isinstance(q, Polynomial):
            q = Polynomial.const(q, nv)
    if not removed:
        return q
    terms = {}
    for m, c in q.terms.items():
        m2 = tuple(e for j, e in enumerate(m) if j not in removed)
        terms[m2] = c
    return Polynomial(terms, nv - len(removed))


def _apply_plan_to_chart(chart, subs, removed):
    nv = chart.nvars
    keep = [j for j in range(nv) if j not in removed]
    new_index = {j: k for k, j in enumerate(keep)}

    def conv(q):
        return _conv_poly(q, subs, removed, nv)

    params = []
    for p in chart.params:
        r = conv(p)
        if r.is_zero():
            continue
        params.append(r)
    # a unit among the parameters contradicts the subvariety: keep it as
    # the witness and flag the chart dead
    empty = chart.empty or any(
        p.is_constant() and not p.is_zero() for p in params)
    gens = tuple(conv(g) for g in chart.gens)
    complement = tuple(
        f2 for f2 in (conv(f) for f in chart.complement)
        if not (f2.is_constant() and not f2.is_zero()))
    exceptional = tuple((new_index[c], lab) for c, lab in chart.exceptional)
    dictionary = tuple(chart.dictionary[j] for j in keep)
    return chart.replace(nvars=len(keep), params=tuple(params), gens=gens,
                         complement=complement, exceptional=exceptional,
                         dictionary=dictionary, empty=empty)


def _apply_plan_to_gluings(gluings, plans):
    out = []
    for g in gluings:
        pairs = g.pairs
        if g.target_id in plans:
            _, removed_t = plans[g.target_id]
            pairs = tuple(p for idx, p in enumerate(pairs)
                          if idx not in removed_t)
        if g.source_id in plans:
            subs, removed = plans[g.source_id]
            pairs = tuple(
                (_conv_poly(v, subs, removed, v.nvars),
                 _conv_poly(w, subs, removed, w.nvars))
                for v, w in pairs)
        out.append(type(g)(g.source_id, g.target_id, pairs))
    return tuple(out)


def _normalize_driver_charts(drv):
    root = drv.levels[0]
    plans = {}
    for chart in root.charts:
        subs, removed = _elimination_plan(chart, drv.protect)
        if removed:
            plans[chart.chart_id] = (subs, removed)
    if not plans:
        return
    new_levels = []
    for coll in drv.levels:
        charts = []
        for chart in coll.charts:
            plan = plans.get(chart.chart_id)
            charts.append(_apply_plan_to_chart(chart, *plan)
                          if plan else chart)
        gluings = _apply_plan_to_gluings(coll.gluings, plans)
        new_levels.append(coll.replace(charts=charts, gluings=gluings))
    drv.levels = new_levels


Driver._normalize_charts = lambda self: _normalize_driver_charts(self)


# ---------------------------------------------------------------------------
# per-chart measurements

def _vanishes_on_chart(chart):
    """I restricted to the chart's subvariety is the zero ideal."""
    if all(g.is_zero() for g in chart.gens):
        return True
    X = chart.subvariety_ideal()
    if X.is_zero_ideal():
        return False
    return all(X.contains(g) for g in chart.gens)


@dataclass
class ChartOrderData:
    chart: Chart
    frame: object
    supp: Ideal
    supp_empty: bool
    expo: dict = field(default_factory=dict)
    N: Ideal = None
    order: int = 0


def _measure_chart(chart, mark, cap):
    frame = chart_frame(chart)
    supp = support_ideal(chart, mark)
    empty = is_variety_empty(list(supp.gens), chart.nvars,
                             nonzero=chart.complement)
    data = ChartOrderData(chart=chart, frame=frame, supp=supp,
                          supp_empty=empty)
    if empty:
        return data
    expo, N = monomial_split(chart.ideal(), chart.exceptional_coords(),
                             subvariety=chart.params)
    data.expo = expo
    data.N = N
    data.order = max_order_on_support(N, frame, supp.gens,
                                      nonzero=chart.complement, cap=cap)
    return data


def _collection_measurements(coll, config):
    live = coll.live_charts()
    out = _map_charts(
        lambda c: _measure_chart(c, coll.mark, config.order_cap),
        live, config.jobs)
    per_chart = {d.chart.chart_id: d for d in out}
    o_N = max((d.order for d in out if not d.supp_empty), default=0)
    return per_chart, o_N


# ---------------------------------------------------------------------------
# center helpers

def _whole_chart_center(coll, chart_ids):
    """The center that is the entire subvariety on the listed charts."""
    entries = {}
    k = coll.dim()
    for cid in chart_ids:
        chart = coll.chart_by_id(cid)
        entries[cid] = CenterChartData(params=chart.params)
    return CenterDescription(k=k, entries=entries)


def _extra_for_level0(drv, deep_chart):
    """Complement factors the deepest level added beyond the root chart's,
    so lifts at every level see the full localization."""
    root = drv.levels[0].chart_by_id(deep_chart.chart_id)
    have = set(root.complement)
    return tuple(f for f in deep_chart.complement if f not in have)


def _resolve_zero_charts(drv, zero_ids, note):
    coll = drv.current()
    center = _whole_chart_center(coll, zero_ids)
    drv.apply_center(center, note)


# ---------------------------------------------------------------------------
# the combinatorial exceptional-monomial game

def _label_exponents(data):
    """Map divisor label -> exponent of its coordinate in the monomial
    part, for one chart's measurement."""
    return {lab: data.expo[c] for c, lab in data.chart.exceptional
            if data.expo.get(c, 0) > 0}


def _admissible_subsets(coll, per_chart):
    """All minimal label sets S with exponent sum >= mark whose divisor
    intersection meets the subvariety inside the open set of some chart.
    Returns {frozenset: (sum, binary key)}."""
    mu = coll.mark
    found = {}
    for cid in sorted(per_chart):
        data = per_chart[cid]
        if data.supp_empty:
            continue
        chart = data.chart
        exps = _label_exponents(data)
        labels = sorted(exps)
        coord_of = {lab: c for c, lab in chart.exceptional}
        # minimal admissible subsets: sums over subsets, small sizes first
        admitted = []
        for size in range(1, len(labels) + 1):
            for S in itertools.combinations(labels, size):
                if sum(exps[l] for l in S) < mu:
                    continue
                if any(set(T) < set(S) for T in admitted):
                    continue
                gens = list(chart.params) + [
                    Polynomial.var(coord_of[l], chart.nvars) for l in S]
                if is_variety_empty(gens, chart.nvars,
                                    nonzero=chart.complement):
                    continue
                admitted.append(S)
        for S in admitted:
            key = frozenset(S)
            s = sum(exps[l] for l in S)
            if key not in found or found[key][0] < s:
                found[key] = (s, _binary_key(S))
    return found


def _binary_key(labels):
    """Key realizing the binary-sequence order on divisor subsets: the
    sequence is indexed by age (newest divisor in the highest position)
    and compared from the oldest entry down, so the smallest differing
    label decides and membership wins ties."""
    return tuple(-lab for lab in sorted(labels))


def _monomial_invariant(subsets):
    return tuple(sorted((s for s, _ in subsets.values()), reverse=True))


def _monomial_step(drv, per_chart):
    coll = drv.current()
    subsets = _admissible_subsets(coll, per_chart)
    if not subsets:
        raise InternalBreach(
            "order zero on a nonempty support with no admissible "
            "exceptional subset")
    inv = _monomial_invariant(subsets)
    rho = max(subsets, key=lambda S: subsets[S][1])
    entries = {}
    for cid in sorted(per_chart):
        data = per_chart[cid]
        chart = data.chart
        coord_of = {lab: c for c, lab in chart.exceptional}
        if not all(l in coord_of for l in rho):
            continue
        coords = sorted(coord_of[l] for l in rho)
        gens = list(chart.params) + [Polynomial.var(c, chart.nvars)
                                     for c in coords]
        if is_variety_empty(gens, chart.nvars, nonzero=chart.complement):
            continue
        extra = _extra_for_level0(drv, chart)
        entries[cid] = CenterChartData(
            params=tuple(chart.params) + tuple(
                Polynomial.var(c, chart.nvars) for c in coords),
            extra_complement=extra)
    if not entries:
        raise InternalBreach("monomial center meets no chart")
    center = CenterDescription(k=coll.dim() - len(rho), entries=entries)
    drv.event(op="monomial", rho=sorted(rho),
              invariant=[str(s) for s in inv])
    drv.apply_center(center, "monomial")
    return inv, rho


# ---------------------------------------------------------------------------
# low-dimension order reduction (curves and points)

def _locus_ideal(data, mark, o_N):
    """Generators cutting the maximal-order locus of the companion on one
    chart: D^{o-1}(N), the monomial derivative part when o < mark, and the
    subvariety parameters."""
    chart = data.chart
    gens = list(iterated_derivative_ideal(data.N, data.frame, o_N - 1).gens)
    if o_N < mark:
        nv = chart.nvars
        mono = Polynomial(
            {tuple(data.expo.get(i, 0) for i in range(nv)): 1}, nv)
        M = Ideal([mono], nv)
        gens += list(iterated_derivative_ideal(
            M, data.frame, mark - o_N - 1).gens)
    gens += list(chart.params)
    return Ideal(gens, chart.nvars).canonicalized()


def _locus_is_whole_chart(chart, L):
    return all(radical_contains(list(chart.params), chart.nvars, g,
                                nonzero=chart.complement)
               for g in L.gens if not g.is_zero())


def _point_cutter_candidates(chart, L, cap):
    """Cutter candidates for a zero-dimensional center: exceptional
    coordinates through the locus first (they must appear literally), then
    reduced locus generators, then small integer combinations."""
    nv = chart.nvars
    nonzero = chart.complement
    base = list(chart.params)
    out = []
    seen = set(p.content_normalized() for p in base)

    def push(p):
        if p.is_zero() or p.is_constant():
            return
        p = p.content_normalized()
        if p in seen:
            return
        seen.add(p)
        out.append(p)

    for c, _lab in sorted(chart.exceptional, key=lambda t: -t[1]):
        xc = Polynomial.var(c, nv)
        if base and radical_contains(base, nv, xc, nonzero=nonzero):
            continue  # divisor already contains the subvariety
        if radical_contains(base + list(L.gens), nv, xc, nonzero=nonzero):
            push(xc)
    gb = groebner_basis(list(L.gens), nv)
    xgb = groebner_basis(base, nv) if base else ()
    reduced = []
    for g in gb:
        r = normal_form(g, xgb) if xgb else g
        if not r.is_zero() and not r.is_constant():
            reduced.append(r.content_normalized())
    for r in sorted(reduced, key=poly_sort_key):
        push(r)
    pool = sorted(reduced, key=poly_sort_key)
    for u, v in itertools.combinations(pool, 2):
        for c in (1, -1, 2, -2, 3, -3):
            push(u + c * v)
            if len(out) >= cap:
                return out
    for u, v, w in itertools.combinations(pool, 3):
        for cu, cv in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            push(u + cu * v + cv * w)
            if len(out) >= cap:
                return out
    return out[:cap]


def _separator_candidates(chart, L, cap=40):
    """Polynomials vanishing on the locus, to localize away from it or
    (as complement factors) onto it."""
    nv = chart.nvars
    gb = groebner_basis(list(L.gens) + list(chart.params), nv)
    pool = [g.content_normalized() for g in gb
            if not g.is_constant() and not g.is_zero()]
    pool = sorted(set(pool), key=poly_sort_key)
    out = list(pool)
    for u, v in itertools.combinations(pool, 2):
        for c in (1, -1):
            out.append((u + c * v).content_normalized())
        if len(out) >= cap:
            break
    return out[:cap]


def _validate_point_params(chart, L, params, nonzero):
    """(a) the chosen parameters cut inside the locus; (b) the cut is
    smooth.  Lift feasibility is checked by attempting the blow-up."""
    nv = chart.nvars
    for g in L.gens:
        if g.is_zero():
            continue
        if not radical_contains(list(params), nv, g, nonzero=nonzero):
            return False
    try:
        build_frame(nv, params, nonzero=nonzero)
    except (NotSmooth, FrameNeedsRefinement):
        return False
    return True


def _point_center_candidates(drv, loci):
    """Yield CenterDescriptions for the zero-dimensional locus, most
    promising first.  loci: {chart_id: (data, L)} on a one-dimensional
    subvariety."""
    coll = drv.current()
    cap = drv.config.candidate_cap
    per_chart_opts = {}
    for cid in sorted(loci):
        data, L = loci[cid]
        chart = data.chart
        opts = []
        for w in _point_cutter_candidates(chart, L, cap):
            params = tuple(chart.params) + (w,)
            if _validate_point_params(chart, L, params, chart.complement):
                opts.append((params, ()))
        if not opts:
            # retry with a localizing complement factor
            for w in _point_cutter_candidates(chart, L, cap):
                params = tuple(chart.params) + (w,)
                for e in _separator_candidates(chart, L):
                    nz = tuple(chart.complement) + (e,)
                    if is_variety_empty(list(params), chart.nvars,
                                        nonzero=nz):
                        continue
                    if _validate_point_params(chart, L, params, nz):
                        opts.append((params, (e,)))
                        break
                if opts:
                    break
        if not opts:
            raise NoTangentDirection(
                "no smooth point cut found on chart %s" % (cid,))
        per_chart_opts[cid] = opts
    max_rounds = max(len(v) for v in per_chart_opts.values())
    for rnd in range(max_rounds):
        entries = {}
        for cid, opts in per_chart_opts.items():
            params, extra = opts[min(rnd, len(opts) - 1)]
            chart = coll.chart_by_id(cid)
            full_extra = _extra_for_level0(drv, chart) + tuple(extra)
            entries[cid] = CenterChartData(params=params,
                                           extra_complement=full_extra)
        yield CenterDescription(k=0, entries=entries)


def _small_dim_step(drv, per_chart, o_N):
    """Order reduction on a subvariety of dimension <= 1: blow the
    maximal-order locus of the companion directly (no coefficient object
    is ever formed here, so the marks stay bounded)."""
    coll = drv.current()
    mark = coll.mark
    loci = {}
    whole = []
    for cid in sorted(per_chart):
        data = per_chart[cid]
        if data.supp_empty or data.order < o_N:
            continue
        L = _locus_ideal(data, mark, o_N)
        if is_variety_empty(list(L.gens), data.chart.nvars,
                            nonzero=data.chart.complement):
            continue
        if _locus_is_whole_chart(data.chart, L):
            whole.append(cid)
        else:
            loci[cid] = (data, L)
    if loci:
        if coll.dim() == 0:
            _split_and_clear_points(drv, loci)
            return
        last = None
        for center in _point_center_candidates(drv, loci):
            try:
                drv.apply_center(center, "point-center")
                return
            except NoRepresentation as e:
                last = e
                continue
        raise NoTangentDirection(
            "no liftable point center at order %d: %s" % (o_N, last))
    if whole:
        center = _whole_chart_center(coll, whole)
        drv.apply_center(center, "max-order-locus")
        return
    raise InternalBreach("order positive but the locus vanished")


def _split_and_clear_points(drv, loci):
    """Zero-dimensional subvariety whose locus is a proper part of a
    chart: localize the chart onto and off the locus (two complement
    refinements covering it), then blow the on-part away entirely."""
    for cid in sorted(loci):
        data, L = loci[cid]
        chart = data.chart
        e_on = None   # nonzero exactly near the locus
        e_off = None  # nonzero exactly off the locus
        for e in _separator_candidates(chart, L):
            nz = tuple(chart.complement) + (e,)
            if is_variety_empty(list(chart.params), chart.nvars, nonzero=nz):
                continue
            if e_off is None and all(
                    radical_contains(list(chart.params) + [e], chart.nvars,
                                     g, nonzero=chart.complement)
                    for g in L.gens if not g.is_zero()):
                e_off = e
            if e_on is None and all(
                    radical_contains(list(chart.params), chart.nvars, g,
                                     nonzero=nz)
                    for g in L.gens if not g.is_zero()):
                e_on = e
            if e_on is not None and e_off is not None:
                break
        if e_on is None or e_off is None:
            raise NoTangentDirection(
                "no separating function for the point locus on chart %s"
                % (cid,))
        # the two refinements must cover the subvariety
        if not is_variety_empty(list(chart.params) + [e_on, e_off],
                                chart.nvars, nonzero=chart.complement):
            raise InternalBreach("point separators fail to cover chart %s"
                                 % (cid,))
        _split_chart(drv, cid, e_on, e_off)
        on_id = tuple(cid) + (91,)
        coll = drv.current()
        on_chart = coll.chart_by_id(on_id)
        extra = _extra_for_level0(drv, on_chart)
        center = CenterDescription(k=coll.dim(), entries={
            on_id: CenterChartData(params=on_chart.params,
                                   extra_complement=extra)})
        drv.apply_center(center, "point-component")


def _split_chart(drv, cid, e_on, e_off):
    """Replace a chart by two complement refinements, on every level."""
    drv.event(op="localize", chart="/".join(map(str, cid)),
              on=format_poly(e_on), off=format_poly(e_off))
    new_levels = []
    for coll in drv.levels:
        try:
            chart = coll.chart_by_id(cid)
        except KeyError:
            new_levels.append(coll)
            continue
        others = [c for c in coll.charts if c.chart_id != tuple(cid)]
        c_on = chart.replace(chart_id=tuple(cid) + (91,),
                             complement=tuple(chart.complement) + (e_on,))
        c_off = chart.replace(chart_id=tuple(cid) + (92,),
                              complement=tuple(chart.complement) + (e_off,))
        gl = [g for g in coll.gluings
              if g.source_id != tuple(cid) and g.target_id != tuple(cid)]
        new_levels.append(coll.replace(charts=others + [c_on, c_off],
                                       gluings=tuple(gl)))
    drv.levels = new_levels


def _frame_cover_factors(drv, chart, dets):
    """Localizing factors that jointly cover the root-level subvariety of
    the chart.  Each factor either inverts a Jacobian minor of the current
    level or inverts one of its parameters (emptying the deep subvariety
    on that part), so every part admits a derivation frame."""
    root = drv.levels[0].chart_by_id(chart.chart_id)
    base = list(root.params)
    nv = chart.nvars
    nonzero = tuple(root.complement)
    pool = list(dets) + [p for p in chart.params if p not in root.params]
    chosen = []
    for f in pool:
        if f.is_zero() or f.is_constant():
            continue
        f = f.content_normalized()
        if f in chosen:
            continue
        # a part must actually meet the root subvariety
        if is_variety_empty(base, nv, nonzero=nonzero + (f,)):
            continue
        chosen.append(f)
        if is_variety_empty(base + chosen, nv, nonzero=nonzero):
            break
    else:
        raise InternalBreach(
            "no covering localization for chart %s" % (chart.chart_id,))
    i = 0
    while len(chosen) > 1 and i < len(chosen):
        trial = chosen[:i] + chosen[i + 1:]
        if is_variety_empty(base + trial, nv, nonzero=nonzero):
            chosen = trial
        else:
            i += 1
    return chosen


def _split_chart_open_cover(drv, cid, factors):
    """Replace a chart by one complement refinement per factor, on every
    level; the factors jointly cover each level's subvariety."""
    drv.event(op="refine", chart="/".join(map(str, cid)),
              factors=[format_poly(f) for f in factors])
    new_levels = []
    for coll in drv.levels:
        try:
            chart = coll.chart_by_id(cid)
        except KeyError:
            new_levels.append(coll)
            continue
        others = [c for c in coll.charts if c.chart_id != tuple(cid)]
        parts = [chart.replace(chart_id=tuple(cid) + (81 + i,),
                               complement=tuple(chart.complement) + (f,))
                 for i, f in enumerate(factors)]
        gl = [g for g in coll.gluings
              if g.source_id != tuple(cid) and g.target_id != tuple(cid)]
        new_levels.append(coll.replace(charts=others + parts,
                                       gluings=tuple(gl)))
    drv.levels = new_levels


def _refine_frames(drv):
    """Split any live chart admitting no global derivation frame into
    principal opens on which one exists."""
    guard = 0
    while True:
        bad = None
        for chart in drv.current().live_charts():
            if chart.empty or not chart.params:
                continue
            try:
                chart_frame(chart)
            except FrameNeedsRefinement as e:
                bad = (chart, list(e.dets))
                break
        if bad is None:
            return
        guard += 1
        if guard > 64:
            raise InternalBreach("frame refinement fails to settle")
        chart, dets = bad
        factors = _frame_cover_factors(drv, chart, dets)
        _split_chart_open_cover(drv, chart.chart_id, factors)


# ---------------------------------------------------------------------------
# transversality and descent (the maximal-order resolution)

def _contained_divisor_labels(chart):
    """Labels of divisors that contain the chart's whole subvariety;
    restricting to them adds nothing and degenerates the parameters."""
    out = set()
    for c, lab in chart.exceptional:
        xc = Polynomial.var(c, chart.nvars)
        if radical_contains(list(chart.params), chart.nvars, xc,
                            nonzero=chart.complement):
            out.add(lab)
    return out


def _max_transversal_subsets(coll, per_chart, allowed):
    """Largest s and the allowed-label subsets of size s whose divisor
    intersections meet the support properly."""
    banned = set()
    for cid in sorted(per_chart):
        if not per_chart[cid].supp_empty:
            banned |= _contained_divisor_labels(per_chart[cid].chart)
    best = 0
    subsets = set()
    for cid in sorted(per_chart):
        data = per_chart[cid]
        if data.supp_empty:
            continue
        chart = data.chart
        labels = sorted(lab for _, lab in chart.exceptional
                        if lab in allowed and lab not in banned)
        coord_of = {lab: c for c, lab in chart.exceptional}
        for size in range(len(labels), 0, -1):
            if size < best:
                break
            for S in itertools.combinations(labels, size):
                gens = list(data.supp.gens) + [
                    Polynomial.var(coord_of[l], chart.nvars) for l in S]
                if is_variety_empty(gens, chart.nvars,
                                    nonzero=chart.complement):
                    continue
                if size > best:
                    best = size
                    subsets = set()
                subsets.add(frozenset(S))
    return best, subsets


def _restrict_to_divisors(coll, S):
    """The restriction of the object to the intersection of the labeled
    divisors: only charts containing every divisor survive, with the
    divisor coordinates appended to their parameters."""
    charts = []
    for chart in coll.live_charts():
        coord_of = {lab: c for c, lab in chart.exceptional}
        if not all(l in coord_of for l in S):
            continue
        coords = sorted(coord_of[l] for l in S)
        fresh = [Polynomial.var(c, chart.nvars) for c in coords]
        params = tuple(chart.params) + tuple(
            v for v in fresh if v not in chart.params)
        gb = groebner_basis(list(params), chart.nvars)
        gens = tuple(normal_form(g, gb) for g in chart.gens)
        charts.append(chart.replace(params=params, gens=gens))
    if not charts:
        raise InternalBreach("transversal restriction lost every chart")
    return coll.replace(charts=charts, gluings=())


def _descent_hypersurface(chart, mark, config):
    """A polynomial of order one along the support, found among iterated
    frame derivatives of the generators; returns (poly, extra_nonzero)."""
    if mark - 1 > config.descent_mark_cap:
        raise InternalBreach(
            "descent requested at mark %d beyond the configured cap" % mark)
    frame = chart_frame(chart)
    vecs = frame.generator_vectors()
    nv = chart.nvars
    xgb = groebner_basis(list(chart.params), nv) if chart.params else ()
    supp = support_ideal(chart, mark)
    for idxs in itertools.combinations_with_replacement(
            range(len(vecs)), mark - 1):
        for g in chart.gens:
            f = g
            for i in idxs:
                f = frame.apply_vector(vecs[i], f)
            if f.is_zero():
                continue
            if xgb:
                f = normal_form(f, xgb)
            if f.is_zero() or f.is_constant():
                continue
            f = f.content_normalized()
            if not radical_contains(list(supp.gens), nv, f,
                                    nonzero=chart.complement):
                continue
            extra = ()
            try:
                build_frame(nv, tuple(chart.params) + (f,),
                            nonzero=chart.complement)
            except FrameNeedsRefinement as err:
                det = err.dets[0].content_normalized()
                nz = tuple(chart.complement) + (det,)
                if is_variety_empty(list(supp.gens), nv, nonzero=nz):
                    continue
                try:
                    build_frame(nv, tuple(chart.params) + (f,), nonzero=nz)
                except (NotSmooth, FrameNeedsRefinement):
                    continue
                extra = (det,)
            except NotSmooth:
                continue
            return f, extra
    raise NoTangentDirection(
        "no order-one hypersurface through the support of chart %s"
        % (chart.chart_id,))


def _restrict_to_hypersurface(coll, cid, f, extra):
    chart = coll.chart_by_id(cid)
    params = tuple(chart.params) + (f,)
    gb = groebner_basis(list(params), chart.nvars)
    gens = tuple(normal_form(g, gb) for g in chart.gens)
    restricted = chart.replace(params=params, gens=gens,
                               complement=tuple(chart.complement) + extra)
    return coll.replace(charts=[restricted], gluings=())


def resolve_max_order(drv, depth):
    """Empty the support of the current (maximal-order) object by
    transversality restrictions and hypersurface descent.

    Only divisors alive at entry participate in the transversality step;
    divisors born during this stretch have centers inside the current
    support and stay normally crossing with it, which is what makes the
    restriction loop terminate."""
    config = drv.config
    old_labels = frozenset(lab for c in drv.current().live_charts()
                           for _, lab in c.exceptional)
    while True:
        _refine_frames(drv)
        coll = drv.current()
        live = coll.live_charts()
        if not live:
            return
        zero_ids = [c.chart_id for c in live if _vanishes_on_chart(c)
                    and not chart_support_empty(c, coll.mark)]
        if zero_ids:
            _resolve_zero_charts(drv, zero_ids, "degenerate-chart")
            continue
        per_chart, _ = _collection_measurements(coll, config)
        if all(d.supp_empty for d in per_chart.values()):
            return
        s, subsets = _max_transversal_subsets(coll, per_chart, old_labels)
        if s >= 1:
            S = max(subsets, key=_binary_key)
            drv.event(op="restrict-divisors", labels=sorted(S),
                      depth=depth)
            drv.push(_restrict_to_divisors(coll, S))
            try:
                resolve_object(drv, depth + 1)
            finally:
                drv.pop()
            continue
        cid = next(c.chart_id for c in live
                   if not per_chart[c.chart_id].supp_empty)
        chart = coll.chart_by_id(cid)
        f, extra = _descent_hypersurface(chart, coll.mark, config)
        drv.event(op="restrict-hypersurface",
                  chart="/".join(map(str, cid)), poly=format_poly(f),
                  depth=depth)
        drv.push(_restrict_to_hypersurface(coll, cid, f, extra))
        try:
            resolve_object(drv, depth + 1)
        finally:
            drv.pop()


# ---------------------------------------------------------------------------
# the main loop

def _companion_level(coll, per_chart, o_N):
    """The coefficient object of the companion at global order o_N, on the
    same atlas; its mark is the factorial of the companion mark."""
    charts = []
    mark_out = None
    for chart in coll.live_charts():
        data = per_chart[chart.chart_id]
        if data.supp_empty:
            comp_mark = o_N if o_N >= coll.mark else o_N * (coll.mark - o_N)
            j_mark = 1
            for i in range(comp_mark):
                j_mark *= comp_mark - i
            unit = Polynomial.const(1, chart.nvars)
            charts.append(chart.replace(gens=(unit,)))
            mark_out = mark_out or j_mark
            continue
        comp, o, expo, N = companion_ideal(
            chart.ideal(), coll.mark, chart.exceptional_coords(),
            data.frame, data.supp.gens, nonzero=chart.complement,
            ord_override=o_N, subvariety=chart.params)
        H = homogenized_ideal(comp, data.frame)
        J = coefficient_ideal(H, data.frame)
        charts.append(chart.replace(gens=J.ideal.gens))
        if mark_out is None:
            mark_out = J.mark
        elif mark_out != J.mark:
            raise InternalBreach("companion marks diverged across charts")
    return coll.replace(charts=charts, mark=mark_out, gluings=coll.gluings)


def resolve_object(drv, depth=0):
    """Fully resolve the current object: loop until its support is empty.

    Restrictions pushed by callers re-enter here, so an object that is not
    of maximal order is still handled (its order can exceed its mark)."""
    config = drv.config
    prev_mono = None
    prev_order = None
    while True:
        _refine_frames(drv)
        coll = drv.current()
        live = coll.live_charts()
        if not live:
            return
        zero_ids = [c.chart_id for c in live if _vanishes_on_chart(c)]
        if zero_ids:
            _resolve_zero_charts(drv, zero_ids, "vanishing-restriction")
            continue
        if collection_support_empty(coll):
            return
        per_chart, o_N = _collection_measurements(coll, config)
        if o_N == 0:
            inv, rho = _monomial_step(drv, per_chart)
            if prev_mono is not None and not inv < prev_mono:
                raise InternalBreach(
                    "monomial invariant failed to decrease: %s -> %s"
                    % (prev_mono, inv))
            prev_mono = inv
            continue
        prev_mono = None
        m = coll.dim()
        if m <= 1:
            _small_dim_step(drv, per_chart, o_N)
            continue
        if prev_order is not None and o_N >= prev_order:
            raise NonDecreasingOrder(
                "order %d did not drop below %d after reduction"
                % (o_N, prev_order))
        drv.event(op="companion", order=o_N, mark=coll.mark, depth=depth)
        drv.push(_companion_level(coll, per_chart, o_N))
        try:
            resolve_max_order(drv, depth + 1)
        finally:
            drv.pop()
        prev_order = o_N


# ---------------------------------------------------------------------------
# entry points

def make_root(nvars, params, gens, mark):
    """Root collection for a marked ideal on a smooth affine subvariety."""
    params = tuple(params)
    if params:
        build_frame(nvars, params)  # NotSmooth propagates to the caller
        gb = groebner_basis(list(params), nvars)
        gens = tuple(normal_form(g, gb) for g in gens)
    chart = Chart(chart_id=(), nvars=nvars, params=params,
                  gens=tuple(gens), complement=(), exceptional=())
    return MarkedIdealCollection(charts=(chart,), mark=mark)


@dataclass
class ResolutionResult:
    outcome: str             # resolved | budget | stopped
    final: MarkedIdealCollection
    driver: Driver
    models: tuple = ()

    def monomial_parts(self):
        """Per live chart: [(coordinate, label, exponent)] of the divided
        exceptional powers; with the support empty this is the full total
        transform up to an invertible factor."""
        out = {}
        for chart in self.final.live_charts():
            texp = dict(chart.transform_exponents)
            out[chart.chart_id] = tuple(
                (c, lab, texp.get(lab, 0)) for c, lab in chart.exceptional)
        return out


def resolve_collection(coll, config=None, interceptor=None):
    drv = Driver(coll, config=config, interceptor=interceptor)
    try:
        resolve_object(drv, 0)
        outcome = "resolved"
        models = ()
    except BudgetExceeded:
        outcome = "budget"
        models = ()
    except StopResolution as stop:
        outcome = "stopped"
        models = tuple(stop.payload)
    return ResolutionResult(outcome=outcome, final=drv.levels[0],
                            driver=drv, models=models)


def principalize(nvars, gens, params=(), config=None):
    """Principalize an ideal on a smooth affine subvariety: resolve it at
    mark one; on each terminal chart the total transform is the recorded
    exceptional monomial times an invertible factor.

    With params the subvariety is cut out inside the ambient space and the
    chart cover by invertible Jacobian minors is built up front (and
    refined during the run when no single minor works)."""
    root = make_root(nvars, params, gens, 1)
    return resolve_collection(root, config=config)


def _witness_interceptor(witness, n0):
    """Stop as soon as a center passes through the inverse image of the
    witness point; the center parameters there cut the smooth model."""
    point = tuple(Fraction(v) for v in witness)

    def intercept(drv, center):
        root = drv.levels[0]
        hits = {}
        for cid, entry in center.entries.items():
            chart = root.chart_by_id(cid)
            nv = chart.nvars
            diffs = [Polynomial.var(i, nv) - Polynomial.const(point[i], nv)
                     for i in range(n0)]
            gens = list(entry.params) + diffs
            nz = tuple(chart.complement) + tuple(entry.extra_complement)
            hits[cid] = not is_variety_empty(gens, nv, nonzero=nz)
        if any(hits.values()):
            models = []
            for cid, entry in sorted(center.entries.items()):
                chart = root.chart_by_id(cid)
                models.append(SmoothModelChart(
                    chart_id=cid, nvars=chart.nvars,
                    model_params=tuple(entry.params),
                    complement=tuple(chart.complement)
                    + tuple(entry.extra_complement),
                    projection_nvars=n0, witness_hit=hits[cid]))
            raise StopResolution(models)

    return intercept


def _rational_rank(rows):
    """Rank of a matrix of Fractions by Gaussian elimination."""
    mat = [list(r) for r in rows]
    rank = 0
    cols = len(mat[0]) if mat else 0
    for j in range(cols):
        piv = next((i for i in range(rank, len(mat)) if mat[i][j]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = Fraction(1) / mat[rank][j]
        mat[rank] = [v * inv for v in mat[rank]]
        for i in range(len(mat)):
            if i != rank and mat[i][j]:
                f = mat[i][j]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
    return rank


def _generic_jacobian_rank(jac):
    """Rank of a polynomial matrix over the rational function field: the
    largest size of a square submatrix with nonzero determinant."""
    rows, cols = len(jac), len(jac[0]) if jac else 0
    for k in range(min(rows, cols), 0, -1):
        for ri in itertools.combinations(range(rows), k):
            for ci in itertools.combinations(range(cols), k):
                sub = [[jac[i][j] for j in ci] for i in ri]
                if not _poly_det(sub).is_zero():
                    return k
    return 0


def check_witness(nvars, gens, witness):
    """Require the witness to be a nonsingular point of the cut-out
    subvariety, by exact evaluation and a Jacobian rank comparison."""
    point = tuple(Fraction(v) for v in witness)
    if len(point) != nvars:
        raise SingularWitness("witness has %d coordinates, ambient has %d"
                              % (len(point), nvars))
    for g in gens:
        if g.evaluate(point) != 0:
            raise SingularWitness("witness point is not on the subvariety")
    jac = [[g.derivative(i) for i in range(nvars)] for g in gens]
    at_point = [[e.evaluate(point) for e in row] for row in jac]
    if _rational_rank(at_point) < _generic_jacobian_rank(jac):
        raise SingularWitness("witness is a singular point of the "
                              "subvariety")
    return point


def desingularize(nvars, gens, witness, config=None):
    """Embedded desingularization by interception: principalize the
    ideal of the subvariety, stopping at the first center through the
    inverse image of the witness point.  That center is a smooth model."""
    witness = check_witness(nvars, gens, witness)
    root = make_root(nvars, (), gens, 1)
    interceptor = _witness_interceptor(witness, nvars)
    return resolve_collection(root, config=config, interceptor=interceptor)
