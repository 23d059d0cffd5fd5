"""Ideal arithmetic over Q[x1..xn].

The engine's one and only term order is grevlex; Groebner bases are computed
by Buchberger's algorithm with the sugar selection strategy, the coprimality
criterion and the chain criterion, a deterministic S-pair queue, and full
interreduction at the end.  Reduced bases are normalized integer-primitive
with positive leading coefficient, which makes every basis (and hence every
canonicalized generator list) byte-stable across runs.

Radical membership and variety-emptiness questions are answered through the
extra-variable trick (1 - z*g adjoined), never through elimination orders or
saturation.
"""

from __future__ import annotations

import heapq
import threading
from fractions import Fraction
from math import gcd

from .poly import (Polynomial, grevlex_key, m_deg, m_div, m_divides, m_lcm,
                   m_mul)

# ---------------------------------------------------------------------------
# low-level integer-coefficient reduction

def _to_int_terms(p):
    """Polynomial -> {mono: int}, cleared of denominators (primitive)."""
    q = p.content_normalized()
    return {m: int(c) for m, c in q.terms.items()}


def _content_pos(terms, lead):
    g = 0
    for c in terms.values():
        g = gcd(g, c)
    if g == 0:
        return terms
    if terms[lead] < 0:
        g = -g
    return {m: c // g for m, c in terms.items()}


def _nf_terms(f, basis):
    """Full normal form of {mono:int} f against prepared basis rows.

    basis rows are (lm, lc, items) with integer coefficients.  The result is
    a fully reduced {mono:int}; it equals the true normal form over Q up to a
    positive integer scalar (we only ever scale by positive integers).
    """
    work = dict(f)
    out = {}
    while work:
        m = max(work, key=grevlex_key)
        c = work.pop(m)
        hit = None
        for lm, lc, items in basis:
            if m_divides(lm, m):
                hit = (lm, lc, items)
                break
        if hit is None:
            out[m] = c
            continue
        lm, lc, items = hit
        g = gcd(c, lc)
        s = abs(lc // g)
        t = c // g if lc > 0 else -(c // g)
        # actual step: (s*f) - t * x^(m-lm) * g_row; scale emitted part too
        if s != 1:
            for k in list(work):
                work[k] *= s
            for k in list(out):
                out[k] *= s
        q = m_div(m, lm)
        for mm, cc in items:
            if mm == lm:
                continue  # the leading terms cancel exactly
            key = m_mul(mm, q)
            v = work.get(key, 0) - t * cc
            if v:
                work[key] = v
            else:
                work.pop(key, None)
    return out


def _prep(rows):
    out = []
    for t in rows:
        lm = max(t, key=grevlex_key)
        out.append((lm, t[lm], list(t.items())))
    return out


def _spoly_terms(ti, tj, lmi, lmj):
    lcm = m_lcm(lmi, lmj)
    ci, cj = ti[lmi], tj[lmj]
    g = gcd(ci, cj)
    mi, mj = m_div(lcm, lmi), m_div(lcm, lmj)
    fi = cj // g
    fj = ci // g
    out = {}
    for m, c in ti.items():
        out[m_mul(m, mi)] = c * fi
    for m, c in tj.items():
        key = m_mul(m, mj)
        v = out.get(key, 0) - c * fj
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return out


def _buchberger(rows):
    """Reduced Groebner basis of integer term-dicts, deterministically."""
    basis = []
    sugars = []
    for t in rows:
        if t:
            basis.append(t)
            sugars.append(max(m_deg(m) for m in t))
    lms = [max(t, key=grevlex_key) for t in basis]
    pairs = []  # heap of (sugar, lcm grevlex key, i, j)
    pending = set()

    def push(i, j):
        lcm = m_lcm(lms[i], lms[j])
        sug = max(sugars[i] + m_deg(lcm) - m_deg(lms[i]),
                  sugars[j] + m_deg(lcm) - m_deg(lms[j]))
        heapq.heappush(pairs, (sug, grevlex_key(lcm), i, j))
        pending.add((i, j))

    for j in range(len(basis)):
        for i in range(j):
            push(i, j)

    while pairs:
        sug, _, i, j = heapq.heappop(pairs)
        pending.discard((i, j))
        lmi, lmj = lms[i], lms[j]
        lcm = m_lcm(lmi, lmj)
        # coprimality criterion
        if all(a + b == c for a, b, c in zip(lmi, lmj, lcm)):
            continue
        # chain criterion: some treated k with lm_k | lcm and both side
        # pairs already treated
        skip = False
        for k in range(len(basis)):
            if k == i or k == j:
                continue
            if m_divides(lms[k], lcm):
                a = (min(i, k), max(i, k))
                b = (min(j, k), max(j, k))
                if a not in pending and b not in pending:
                    skip = True
                    break
        if skip:
            continue
        s = _spoly_terms(basis[i], basis[j], lmi, lmj)
        r = _nf_terms(s, _prep(basis))
        if not r:
            continue
        r = _content_pos(r, max(r, key=grevlex_key))
        basis.append(r)
        sugars.append(sug)
        lms.append(max(r, key=grevlex_key))
        t = len(basis) - 1
        for i2 in range(t):
            push(i2, t)

    # interreduce: minimal basis, then tail-reduce each element
    keep = []
    for i, lm in enumerate(lms):
        if any(j != i and m_divides(lms[j], lm) and
               (not m_divides(lm, lms[j]) or j < i)
               for j in range(len(basis))):
            continue
        keep.append(i)
    final = []
    for i in keep:
        rows2 = _prep([basis[j] for j in keep if j != i])
        r = _nf_terms(basis[i], rows2)
        if r:
            final.append(_content_pos(r, max(r, key=grevlex_key)))
    final.sort(key=lambda t: grevlex_key(max(t, key=grevlex_key)),
               reverse=True)
    return final


# ---------------------------------------------------------------------------
# cached Groebner entry points

_GB_CACHE = {}
_GB_LOCK = threading.Lock()


def _gens_key(gens):
    return tuple(sorted(
        (tuple(sorted((m, Fraction(c)) for m, c in g.terms.items())))
        for g in gens))


def groebner_basis(gens, nvars):
    """Reduced Groebner basis (grevlex) as a tuple of Polynomials."""
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        return ()
    key = (nvars, _gens_key(gens))
    with _GB_LOCK:
        hit = _GB_CACHE.get(key)
    if hit is not None:
        return hit
    rows = [_to_int_terms(g) for g in gens]
    final = _buchberger(rows)
    out = tuple(Polynomial(dict(t), nvars, _trusted=True) for t in final)
    with _GB_LOCK:
        _GB_CACHE[key] = out
    return out


def normal_form(f, gb):
    """Canonical normal form of f modulo a reduced basis (content normalized,
    positive leading coefficient)."""
    if f.is_zero() or not gb:
        return f
    rows = _prep([_to_int_terms(g) for g in gb])
    r = _nf_terms(_to_int_terms(f), rows)
    if not r:
        return Polynomial.zero(f.nvars)
    r = _content_pos(r, max(r, key=grevlex_key))
    return Polynomial(r, f.nvars, _trusted=True)


def clear_cache():
    with _GB_LOCK:
        _GB_CACHE.clear()


# ---------------------------------------------------------------------------
# cofactor-tracked variant (used for lifting certificates)

def _divmod_cof(f, basis):
    """f, basis over Fraction terms; returns (quotients, remainder)."""
    work = dict(f)
    rem = {}
    quots = [{} for _ in basis]
    lms = [max(b, key=grevlex_key) for b in basis]
    while work:
        m = max(work, key=grevlex_key)
        c = work.pop(m)
        hit = -1
        for k, lm in enumerate(lms):
            if m_divides(lm, m):
                hit = k
                break
        if hit < 0:
            rem[m] = c
            continue
        b = basis[hit]
        lmh = lms[hit]
        q = m_div(m, lmh)
        factor = c / b[lmh]
        quots[hit][q] = quots[hit].get(q, Fraction(0)) + factor
        for mm, cc in b.items():
            if mm == lmh:
                continue  # the leading terms cancel exactly
            key = m_mul(mm, q)
            v = work.get(key, Fraction(0)) - factor * cc
            if v:
                work[key] = v
            else:
                work.pop(key, None)
    return quots, rem


def groebner_with_cofactors(gens, nvars):
    """Groebner basis with an expression of each element in the input gens.

    Returns (basis, rows): basis is a list of Fraction term-dicts, rows[k] is
    a list of Fraction term-dicts, one per input generator, with
    basis[k] = sum_i rows[k][i] * gens[i].  Not interreduced, but
    deterministic.
    """
    basis = []
    rows = []
    for i, g in enumerate(gens):
        if g.is_zero():
            continue
        t = {m: Fraction(c) for m, c in g.terms.items()}
        lm = max(t, key=grevlex_key)
        lc = t[lm]
        t = {m: c / lc for m, c in t.items()}
        row = [dict() for _ in gens]
        row[i][(0,) * nvars] = 1 / lc
        basis.append(t)
        rows.append(row)
    lms = [max(t, key=grevlex_key) for t in basis]
    pairs = []
    for j in range(len(basis)):
        for i in range(j):
            lcm = m_lcm(lms[i], lms[j])
            heapq.heappush(pairs, (m_deg(lcm), grevlex_key(lcm), i, j))
    while pairs:
        _, _, i, j = heapq.heappop(pairs)
        lmi, lmj = lms[i], lms[j]
        lcm = m_lcm(lmi, lmj)
        if all(a + b == c for a, b, c in zip(lmi, lmj, lcm)):
            continue
        mi, mj = m_div(lcm, lmi), m_div(lcm, lmj)
        s = {}
        for m, c in basis[i].items():
            s[m_mul(m, mi)] = c
        for m, c in basis[j].items():
            key = m_mul(m, mj)
            v = s.get(key, Fraction(0)) - c
            if v:
                s[key] = v
            else:
                s.pop(key, None)
        quots, rem = _divmod_cof(s, basis)
        if not rem:
            continue
        # cofactor row of the remainder
        row = [dict() for _ in rows[0]]

        def add_scaled(dst, src, mult, scale):
            for mm, cc in src.items():
                key = m_mul(mm, mult)
                v = dst.get(key, Fraction(0)) + cc * scale
                if v:
                    dst[key] = v
                else:
                    dst.pop(key, None)

        for g in range(len(row)):
            add_scaled(row[g], rows[i][g], mi, Fraction(1))
            add_scaled(row[g], rows[j][g], mj, Fraction(-1))
            for k, qd in enumerate(quots):
                for qm, qc in qd.items():
                    add_scaled(row[g], rows[k][g], qm, -qc)
        lm = max(rem, key=grevlex_key)
        lc = rem[lm]
        rem = {m: c / lc for m, c in rem.items()}
        for g in range(len(row)):
            row[g] = {m: c / lc for m, c in row[g].items()}
        basis.append(rem)
        rows.append(row)
        lms.append(lm)
        t = len(basis) - 1
        for i2 in range(t):
            lcm = m_lcm(lms[i2], lms[t])
            heapq.heappush(pairs, (m_deg(lcm), grevlex_key(lcm), i2, t))
    return basis, rows


def express_in_ideal(f, gens, nvars, _cache={}, _lock=threading.Lock()):
    """Cofactors c_i with f = sum c_i * gens[i], or None if f not a member.

    The cofactor basis for a generator list is cached; certificates are
    re-expanded by the caller as an exactness assertion.
    """
    key = (nvars, tuple(_gens_key([g]) for g in gens))
    with _lock:
        hit = _cache.get(key)
    if hit is None:
        hit = groebner_with_cofactors(gens, nvars)
        with _lock:
            _cache[key] = hit
    basis, rows = hit
    ft = {m: Fraction(c) for m, c in f.terms.items()}
    quots, rem = _divmod_cof(ft, basis)
    if rem:
        return None
    cof = [dict() for _ in gens]
    for k, qd in enumerate(quots):
        for qm, qc in qd.items():
            for g in range(len(gens)):
                for mm, cc in rows[k][g].items():
                    key2 = m_mul(mm, qm)
                    v = cof[g].get(key2, Fraction(0)) + qc * cc
                    if v:
                        cof[g][key2] = v
                    else:
                        cof[g].pop(key2, None)
    return [Polynomial(dict(d), nvars) for d in cof]


# ---------------------------------------------------------------------------
# the Ideal type

def poly_sort_key(p):
    if p.is_zero():
        return ((-1, ()), ())
    return (grevlex_key(p.lm()),
            tuple(sorted((m, Fraction(c)) for m, c in p.terms.items())))


class Ideal:
    """Finitely generated ideal of Q[x1..xn] with a once-only GB latch."""

    __slots__ = ("gens", "nvars", "_gb")

    def __init__(self, gens, nvars):
        seen = set()
        clean = []
        for g in gens:
            if g.nvars != nvars:
                raise ValueError("generator arity mismatch")
            if g.is_zero():
                continue
            g = g.content_normalized()
            if g not in seen:
                seen.add(g)
                clean.append(g)
        clean.sort(key=poly_sort_key)
        if not clean:
            clean = [Polynomial.zero(nvars)]  # the zero ideal keeps one 0
        object.__setattr__(self, "gens", tuple(clean))
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "_gb", None)

    def __setattr__(self, *a):
        raise AttributeError("Ideal is immutable")

    def __eq__(self, other):
        return (isinstance(other, Ideal) and self.nvars == other.nvars
                and self.gens == other.gens)

    def __hash__(self):
        return hash((self.nvars, self.gens))

    def __repr__(self):
        return "Ideal(%s)" % ", ".join(str(g) for g in self.gens)

    def is_zero_ideal(self):
        return len(self.gens) == 1 and self.gens[0].is_zero()

    def groebner_basis(self):
        """Reduced grevlex basis; computed once and latched."""
        if self._gb is None:
            gb = groebner_basis(self.gens, self.nvars)
            object.__setattr__(self, "_gb", gb)
        return self._gb

    def is_trivial(self):
        gb = self.groebner_basis()
        return len(gb) == 1 and gb[0].is_constant()

    def contains(self, f):
        return normal_form(f, self.groebner_basis()).is_zero()

    def normal_form(self, f):
        return normal_form(f, self.groebner_basis())

    def canonicalized(self):
        """Same ideal, generated by its reduced Groebner basis."""
        gb = self.groebner_basis()
        if not gb:
            return Ideal([Polynomial.zero(self.nvars)], self.nvars)
        out = Ideal(list(gb), self.nvars)
        object.__setattr__(out, "_gb", gb)
        return out

    def extended(self, nvars):
        return Ideal([g.extend(nvars) for g in self.gens], nvars)


def ideal_sum(a, b):
    if a.nvars != b.nvars:
        raise ValueError("nvars mismatch")
    return Ideal(list(a.gens) + list(b.gens), a.nvars).canonicalized()


def ideal_product(a, b):
    if a.nvars != b.nvars:
        raise ValueError("nvars mismatch")
    gens = [f * g for f in a.gens for g in b.gens]
    return Ideal(gens, a.nvars).canonicalized()


_POW_CACHE = {}
_POW_LOCK = threading.Lock()


def ideal_power(a, k):
    """a^k by repeated squaring; generator products are formed first and the
    result is reduced afterwards."""
    if k < 0:
        raise ValueError("negative ideal power")
    if k == 0:
        one = Polynomial.const(1, a.nvars)
        return Ideal([one], a.nvars)
    if k == 1:
        return a.canonicalized()
    key = (a.nvars, a.gens, k)
    with _POW_LOCK:
        hit = _POW_CACHE.get(key)
    if hit is not None:
        return hit
    half = ideal_power(a, k // 2)
    out = ideal_product(half, half)
    if k % 2:
        out = ideal_product(out, a)
    with _POW_LOCK:
        _POW_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# variety questions (Rabinowitsch device)

def _with_unit_constraint(gens, nvars, nonzero):
    """gens + (1 - z * prod(nonzero)) in nvars+1 variables."""
    ext = [g.extend(nvars + 1) for g in gens]
    prod = Polynomial.const(1, nvars + 1)
    for f in nonzero:
        prod = prod * f.extend(nvars + 1)
    z = Polynomial.var(nvars, nvars + 1)
    ext.append(Polynomial.const(1, nvars + 1) - z * prod)
    return ext


def is_variety_empty(gens, nvars, nonzero=()):
    """True iff V(gens) intersected with {f != 0 for f in nonzero} is empty
    over the complex numbers."""
    nz = [f for f in nonzero if not f.is_constant()]
    for f in nonzero:
        if f.is_constant() and Fraction(f.constant_value()) == 0:
            return True  # localized at 0: empty open
    if not nz:
        gb = groebner_basis(gens, nvars)
        return len(gb) == 1 and gb[0].is_constant()
    ext = _with_unit_constraint(gens, nvars, nz)
    gb = groebner_basis(ext, nvars + 1)
    return len(gb) == 1 and gb[0].is_constant()


def radical_contains(gens, nvars, f, nonzero=()):
    """True iff f vanishes on V(gens) ∩ {g != 0}."""
    if f.is_zero():
        return True
    return is_variety_empty(gens, nvars, nonzero=tuple(nonzero) + (f,))


# ---------------------------------------------------------------------------
# derivation frames

def _poly_det(rows, _memo=None):
    """Determinant of a square matrix of Polynomials, cofactor expansion."""
    n = len(rows)
    if n == 0:
        raise ValueError("empty matrix")
    nv = rows[0][0].nvars
    if _memo is None:
        _memo = {}

    def rec(ridx, cidx):
        if len(ridx) == 1:
            return rows[ridx[0]][cidx[0]]
        key = (ridx, cidx)
        hit = _memo.get(key)
        if hit is not None:
            return hit
        # expand along the column with the most zero entries
        best_c, best_zeros = 0, -1
        for pos, c in enumerate(cidx):
            zeros = sum(1 for r in ridx if rows[r][c].is_zero())
            if zeros > best_zeros:
                best_zeros, best_c = zeros, pos
        c = cidx[best_c]
        rest_c = cidx[:best_c] + cidx[best_c + 1:]
        total = Polynomial.zero(nv)
        for pos, r in enumerate(ridx):
            e = rows[r][c]
            if e.is_zero():
                continue
            sub = rec(ridx[:pos] + ridx[pos + 1:], rest_c)
            term = e * sub
            if (pos + best_c) % 2:
                term = -term
            total = total + term
        _memo[key] = total
        return total

    return rec(tuple(range(n)), tuple(range(n)))


def _poly_adjugate(rows):
    """adj(B) with adj(B)*B = det(B)*I, cofactor formula, shared memo."""
    n = len(rows)
    nv = rows[0][0].nvars
    memo = {}
    if n == 1:
        return [[Polynomial.const(1, nv)]]
    adj = [[None] * n for _ in range(n)]
    all_idx = tuple(range(n))
    for i in range(n):
        for j in range(n):
            ridx = tuple(r for r in all_idx if r != j)
            cidx = tuple(c for c in all_idx if c != i)
            sub = [[rows[r][c] for c in cidx] for r in ridx]
            d = _poly_det(sub) if n > 1 else Polynomial.const(1, nv)
            if (i + j) % 2:
                d = -d
            adj[i][j] = d  # adj[i][j] = (-1)^{i+j} minor(B, row j, col i)
    return adj


class NotSmooth(Exception):
    """The subvariety fails the Jacobian smoothness requirement."""


class FrameNeedsRefinement(Exception):
    """No single coordinate completion works on the whole chart; carries the
    candidate minor determinants whose nonvanishing loci jointly cover it."""

    def __init__(self, dets):
        super().__init__("chart needs refinement for a derivation frame")
        self.dets = dets


class DegenerateRestriction(Exception):
    """Every generator is divisible by arbitrary powers of an exceptional
    coordinate: the restricted object vanishes on a whole component of the
    chart's subvariety next to that divisor."""

    def __init__(self, coord):
        super().__init__(
            "restriction vanishes on a component along coordinate %d" % coord)
        self.coord = coord


class DerivationFrame:
    """Logarithmic-style frame of derivations adapted to a chart.

    For a chart with subvariety parameters u_1..u_{n-m}, coordinates are
    completed deterministically so the combined Jacobian is invertible on the
    chart; the adjugate rows give derivations d'_j dual to the system up to
    the unit determinant.  Frame generators: u_i * d'_j for all pairs
    i, j <= n-m, plus d'_j for the completion directions.
    """

    __slots__ = ("nvars", "params", "completion", "det", "vectors")

    def __init__(self, nvars, params, completion, det, vectors):
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "completion", tuple(completion))
        object.__setattr__(self, "det", det)
        object.__setattr__(self, "vectors", tuple(tuple(v) for v in vectors))

    def __setattr__(self, *a):
        raise AttributeError("DerivationFrame is immutable")

    def generator_vectors(self):
        """Coefficient vectors of the frame generators, canonical order:
        all pairs (j over params, i over params) as u_i * d'_j, then d'_j
        for completion slots."""
        k = len(self.params)
        out = []
        for j in range(k):
            for i in range(k):
                u = self.params[i]
                out.append(tuple(u * c for c in self.vectors[j]))
        for j in range(k, k + len(self.completion)):
            out.append(self.vectors[j])
        return out

    def apply_vector(self, vec, g):
        total = Polynomial.zero(self.nvars)
        for i, c in enumerate(vec):
            if c.is_zero():
                continue
            d = g.derivative(i)
            if not d.is_zero():
                total = total + c * d
        return total

    def derivatives_of(self, g):
        return [self.apply_vector(v, g) for v in self.generator_vectors()]


def build_frame(nvars, params, subvariety_check=None, nonzero=()):
    """Build a DerivationFrame for V(params) on the open {nonzero != 0}.

    Chooses the first coordinate completion (in canonical subset order) whose
    Jacobian determinant vanishes nowhere on V(params) ∩ U.  If none works
    alone but the candidates jointly cover, raises FrameNeedsRefinement with
    the determinants; if the subvariety is genuinely singular, NotSmooth.
    """
    from itertools import combinations

    k = len(params)
    if k == 0:
        vecs = []
        for j in range(nvars):
            vecs.append(tuple(
                Polynomial.const(1 if i == j else 0, nvars)
                for i in range(nvars)))
        return DerivationFrame(nvars, (), tuple(range(nvars)),
                               Polynomial.const(1, nvars), vecs)
    grad = [[params[j].derivative(i) for j in range(k)]
            for i in range(nvars)]  # grad[i][j] = d u_j / d x_i
    candidates = []
    for rowset in combinations(range(nvars), k):
        sub = [[grad[i][j] for j in range(k)] for i in rowset]
        det = _poly_det(sub)
        if det.is_zero():
            continue
        candidates.append((rowset, det))
        if not is_variety_empty(list(params) + [det], nvars,
                                nonzero=tuple(nonzero)):
            # det vanishes somewhere on the subvariety: not usable alone
            continue
        return _assemble_frame(nvars, params, rowset, grad)
    if not candidates:
        raise NotSmooth("all Jacobian minors vanish identically")
    dets = [d for _, d in candidates]
    if is_variety_empty(list(params) + dets, nvars, nonzero=nonzero):
        raise FrameNeedsRefinement(dets)
    raise NotSmooth("Jacobian minors share a common zero on the subvariety")


def _assemble_frame(nvars, params, rowset, grad):
    k = len(params)
    completion = tuple(i for i in range(nvars) if i not in rowset)
    # full system matrix B[i][j] = d sys_j / d x_i; sys = params + coords
    n = nvars

    def entry(i, j):
        if j < k:
            return grad[i][j]
        c = completion[j - k]
        return Polynomial.const(1 if i == c else 0, nvars)

    B = [[entry(i, j) for j in range(n)] for i in range(n)]
    adj = _poly_adjugate(B)
    det = _poly_det(B)
    vectors = [tuple(adj[j][i] for i in range(n)) for j in range(n)]
    return DerivationFrame(nvars, params, completion, det, vectors)


# ---------------------------------------------------------------------------
# derivative ideals and friends

_DERIV_CACHE = {}
_DERIV_LOCK = threading.Lock()


def derivative_ideal(ideal, frame):
    """D(I): generators plus all frame derivatives of the generators,
    reduced afterwards."""
    key = (ideal.nvars, ideal.gens, frame.params, frame.completion)
    with _DERIV_LOCK:
        hit = _DERIV_CACHE.get(key)
    if hit is not None:
        return hit
    gens = list(ideal.gens)
    vecs = frame.generator_vectors()
    for g in ideal.gens:
        if g.is_zero():
            continue
        for v in vecs:
            d = frame.apply_vector(v, g)
            if not d.is_zero():
                gens.append(d)
    out = Ideal(gens, ideal.nvars).canonicalized()
    with _DERIV_LOCK:
        _DERIV_CACHE[key] = out
    return out


def iterated_derivative_ideal(ideal, frame, i):
    out = ideal.canonicalized()
    for _ in range(i):
        out = derivative_ideal(out, frame)
    return out


class MarkedIdeal:
    """A pair (I, mu) of an ideal and a positive integer mark."""

    __slots__ = ("ideal", "mark")

    def __init__(self, ideal, mark):
        if mark < 1:
            raise ValueError("mark must be >= 1")
        object.__setattr__(self, "ideal", ideal)
        object.__setattr__(self, "mark", mark)

    def __setattr__(self, *a):
        raise AttributeError("MarkedIdeal is immutable")

    def __eq__(self, other):
        return (isinstance(other, MarkedIdeal) and self.mark == other.mark
                and self.ideal == other.ideal)

    def __hash__(self):
        return hash((self.ideal, self.mark))

    def __repr__(self):
        return "MarkedIdeal(%r, %d)" % (self.ideal, self.mark)


def marked_sum(terms):
    """m-ary sum: mark is the product of marks, each ideal raised to the
    product of the other marks."""
    if not terms:
        raise ValueError("empty marked sum")
    marks = [t.mark for t in terms]
    total = 1
    for m in marks:
        total *= m
    nvars = terms[0].ideal.nvars
    gens = []
    for idx, t in enumerate(terms):
        e = 1
        for j, m in enumerate(marks):
            if j != idx:
                e *= m
        gens.extend(ideal_power(t.ideal, e).gens)
    return MarkedIdeal(Ideal(gens, nvars).canonicalized(), total)


def marked_product(a, b):
    return MarkedIdeal(ideal_product(a.ideal, b.ideal), a.mark + b.mark)


def homogenized_ideal(marked, frame):
    """H(I, mu) = (I + sum_i D^i(I) * T(I)^i, mu) with T = D^{mu-1}(I)."""
    mu = marked.mark
    ideal = marked.ideal
    if mu == 1:
        return MarkedIdeal(ideal.canonicalized(), 1)
    T = iterated_derivative_ideal(ideal, frame, mu - 1)
    gens = list(ideal.gens)
    D = ideal
    Tp = None
    for i in range(1, mu):
        D = derivative_ideal(D, frame)
        Tp = T if Tp is None else ideal_product(Tp, T)
        gens.extend(ideal_product(D, Tp).gens)
    return MarkedIdeal(Ideal(gens, ideal.nvars).canonicalized(), mu)


def coefficient_ideal(marked, frame):
    """C(I, mu): marked sum of (D^i(I), mu-i) for i = 0..mu-1; mark mu!."""
    mu = marked.mark
    terms = []
    D = marked.ideal
    for i in range(mu):
        if i > 0:
            D = derivative_ideal(D, frame)
        terms.append(MarkedIdeal(D, mu - i))
    return marked_sum(terms)


def monomial_split(ideal, exc_coords, subvariety=()):
    """Split I = M * N with M the largest monomial factor in the exceptional
    coordinates and N the remaining factor.

    Returns (exponents dict coord->a, N ideal).  On affine space the
    valuations are read off the representatives; on a subvariety a stored
    representative can hide an exceptional factor, so divisibility is
    decided modulo the subvariety ideal (the coordinates are nonzero
    divisors there) and the quotients replace the generators.
    """
    nvars = ideal.nvars
    expo = {}
    gens = [g for g in ideal.gens if not g.is_zero()]
    if not gens:
        return {}, ideal
    subvariety = [p for p in subvariety if not p.is_zero()]
    if subvariety:
        xgb = groebner_basis(list(subvariety), nvars)
        gens = [normal_form(g, xgb) for g in gens]
        gens = [g for g in gens if not g.is_zero()]
        if not gens:
            return {}, Ideal([], nvars)
        cap = 4096
        soft = 32
        for c in exc_coords:
            xc = Polynomial.var(c, nvars)
            if is_variety_empty(list(subvariety) + [xc], nvars):
                continue  # the divisor misses this subvariety: xc is a unit
            v = 0
            while v <= cap:
                if v == soft:
                    # h divides by every power of xc exactly when h lies in
                    # (h*xc) + I_X; every generator infinite degenerates
                    if all(express_in_ideal(h, [h * xc] + subvariety, nvars)
                           is not None for h in gens):
                        raise DegenerateRestriction(c)
                quots = []
                for g in gens:
                    cofs = express_in_ideal(g, [xc] + subvariety, nvars)
                    if cofs is None:
                        break
                    h = normal_form(cofs[0], xgb)
                    if h.is_zero():
                        break
                    quots.append(h)
                else:
                    gens = quots
                    v += 1
                    continue
                break
            else:
                raise RuntimeError("exceptional valuation cap exceeded")
            if v:
                expo[c] = v
        return expo, Ideal(gens, nvars).canonicalized()
    for c in exc_coords:
        v = min(min(m[c] for m in g.terms) for g in gens)
        if v:
            expo[c] = v
    if not expo:
        return {}, ideal.canonicalized()
    shift = [expo.get(i, 0) for i in range(nvars)]
    ngens = []
    for g in gens:
        ngens.append(Polynomial(
            {tuple(e - s for e, s in zip(m, shift)): c
             for m, c in g.terms.items()}, nvars))
    return expo, Ideal(ngens, nvars).canonicalized()


def max_order_on_support(ideal, frame, support_gens, nonzero=(), cap=10000):
    """max over x in the support locus of ord_x(ideal); the support must not
    meet the vanishing locus of the ideal to infinite order (callers screen
    the identically-vanishing case first)."""
    nvars = ideal.nvars
    D = ideal.canonicalized()
    i = 0
    while i <= cap:
        if is_variety_empty(list(D.gens) + list(support_gens), nvars,
                            nonzero=nonzero):
            return i
        D = derivative_ideal(D, frame)
        i += 1
    raise RuntimeError("order cap exceeded: ideal vanishes to infinite order "
                       "on the support")


def companion_ideal(ideal, mark, exc_coords, frame, support_gens,
                    nonzero=(), ord_override=None, subvariety=()):
    """Companion object for the order-reduction step.

    Splits I = M * N, measures o = max order of N on the support (or takes
    the supplied global value), and returns (marked companion, o, M
    exponents, N).  o >= mark gives (N, o); otherwise the marked sum
    (N, o) + (M, mark - o).
    """
    expo, N = monomial_split(ideal, exc_coords, subvariety=subvariety)
    if ord_override is not None:
        o = ord_override
    else:
        o = max_order_on_support(N, frame, support_gens, nonzero=nonzero)
    if o == 0:
        raise ValueError("companion undefined at order 0: monomial case")
    if o >= mark:
        comp = MarkedIdeal(N.canonicalized(), o)
    else:
        nvars = ideal.nvars
        mono = Polynomial(
            {tuple(expo.get(i, 0) for i in range(nvars)): 1}, nvars)
        M = Ideal([mono], nvars)
        comp = marked_sum([MarkedIdeal(N, o), MarkedIdeal(M, mark - o)])
    return comp, o, expo, N
