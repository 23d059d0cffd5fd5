"""Independent reference implementations used to check the engine.

Everything here is written against sympy or plain Fractions, on purpose:
none of it shares code with the package's own Groebner machinery, so an
agreement between the two is evidence rather than tautology.
"""

from fractions import Fraction
from itertools import combinations, product

import sympy

from desing.poly import Polynomial, format_poly


def to_sympy(p, syms):
    expr = sympy.Integer(0)
    for mono, c in p.terms.items():
        t = sympy.Rational(c.numerator, c.denominator)
        for i, e in enumerate(mono):
            if e:
                t *= syms[i] ** e
        expr += t
    return expr


def sym_vars(n):
    if n == 0:
        return ()
    syms = sympy.symbols("x1:%d" % (n + 1))
    return syms if isinstance(syms, tuple) else (syms,)


def sympy_groebner(gens, syms):
    polys = [to_sympy(g, syms) for g in gens if not g.is_zero()]
    if not polys:
        return None
    return sympy.groebner(polys, *syms, order="grevlex")


def sympy_member(f, gens, syms):
    """f in the ideal generated by gens, decided by sympy reduction."""
    gb = sympy_groebner(gens, syms)
    if gb is None:
        return to_sympy(f, syms) == 0
    return gb.reduce(to_sympy(f, syms))[1] == 0


def sympy_radical_member(f, gens, syms):
    """f in the radical, by the extra-variable trick: 1 lands in the
    ideal extended with 1 - t*f."""
    t = sympy.Symbol("t_rab")
    polys = [to_sympy(g, syms) for g in gens if not g.is_zero()]
    polys.append(1 - t * to_sympy(f, syms))
    gb = sympy.groebner(polys, *(tuple(syms) + (t,)), order="grevlex")
    return 1 in gb


def sympy_same_variety(gens_a, gens_b, nvars):
    """V(A) == V(B): mutual radical membership of all generators."""
    syms = sym_vars(nvars)
    return (all(sympy_radical_member(g, gens_b, syms) for g in gens_a
                if not g.is_zero())
            and all(sympy_radical_member(g, gens_a, syms) for g in gens_b
                    if not g.is_zero()))


def sympy_variety_empty(gens, nvars, nonzero=()):
    """V(gens) minus V(each nonzero factor) empty, via inverted factors."""
    syms = sym_vars(nvars)
    polys = [to_sympy(g, syms) for g in gens if not g.is_zero()]
    inv = []
    for k, u in enumerate(nonzero):
        s = sympy.Symbol("u_inv%d" % k)
        inv.append(s)
        polys.append(1 - s * to_sympy(u, syms))
    if not polys:
        return False
    gb = sympy.groebner(polys, *(tuple(syms) + tuple(inv)), order="grevlex")
    return 1 in gb


# --- monomial phase ---------------------------------------------------------

def brute_force_rho(exps, mu):
    """All admissible minimal subsets and the chosen one, by exhaustion.

    exps maps divisor label -> exponent.  A subset qualifies when its
    exponent sum reaches mu (condition 1) and dropping any one member
    brings the sum under mu (condition 2).  Among the qualifiers the
    winner is the maximum under the binary-sequence order: write each
    subset as its indicator vector over the labels listed oldest first,
    then compare the vectors lexicographically.
    """
    labels = sorted(exps)
    admitted = []
    for size in range(1, len(labels) + 1):
        for S in combinations(labels, size):
            total = sum(exps[l] for l in S)
            if total < mu:
                continue
            if any(total - exps[l] >= mu for l in S):
                continue
            admitted.append(frozenset(S))
    if not admitted:
        return admitted, None
    def indicator(S):
        return tuple(1 if l in S else 0 for l in labels)
    return admitted, max(admitted, key=indicator)


def monomial_resolution_steps(exps, mu):
    """Play out the combinatorial game on one chart: repeatedly pick rho
    by brute force, divide the chosen coordinates' exponents by blowing
    up (the product over rho drops by mu in the rho-chart picture, which
    for a torus-fixed monomial means each member's exponent stays while
    the new divisor gets sum - mu; iterating on the original divisors is
    enough to predict the rho sequence).  Returns the list of rho sets.
    """
    # not used for end-state prediction, only for step counting bounds
    out = []
    cur = dict(exps)
    guard = 0
    while True:
        admitted, rho = brute_force_rho(cur, mu)
        if rho is None:
            return out
        out.append(rho)
        # blowing up the rho locus: the new exceptional exponent is the
        # sum minus mu; members of rho keep their exponents only away
        # from the center, and on the chart where the game continues the
        # member coordinates are replaced by the new divisor
        s = sum(cur[l] for l in rho)
        nxt = max(cur) + 1
        for l in rho:
            del cur[l]
        if s - mu > 0:
            cur[nxt] = s - mu
        guard += 1
        if guard > 10000:
            raise RuntimeError("monomial game did not terminate")


# --- linear algebra over Q --------------------------------------------------

def rational_rank(rows):
    mat = [[Fraction(v) for v in r] for r in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for j in range(ncols):
        piv = None
        for i in range(rank, len(mat)):
            if mat[i][j]:
                piv = i
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        scale = Fraction(1) / mat[rank][j]
        mat[rank] = [v * scale for v in mat[rank]]
        for i in range(len(mat)):
            if i != rank and mat[i][j]:
                f = mat[i][j]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
    return rank


def jacobian_rank_at(gens, nvars, point):
    point = tuple(Fraction(v) for v in point)
    rows = [[g.derivative(i).evaluate(point) for i in range(nvars)]
            for g in gens]
    return rational_rank(rows)


def solve_on_variety(params, nvars, fixed, complement=()):
    """Try to complete a partial rational point on V(params).

    fixed maps coordinate index -> Fraction.  Substitutes, then sweeps
    for generators linear in a single unknown and back-substitutes until
    everything is pinned or nothing applies.  Returns the full point or
    None (no claim of nonexistence).  Points killing a complement factor
    are discarded.
    """
    known = {i: Fraction(v) for i, v in fixed.items()}
    gens = list(params)

    def plug(g):
        vals = [known[i] if i in known else Polynomial.var(i, nvars)
                for i in range(nvars)]
        out = g.substitute(vals)
        if isinstance(out, Fraction):
            out = Polynomial.const(out, nvars)
        return out

    for _ in range(nvars + 1):
        todo = [i for i in range(nvars) if i not in known]
        if not todo:
            break
        progress = False
        for g in gens:
            sub = plug(g)
            if sub.is_zero():
                continue
            seen = set()
            for mono in sub.terms:
                for i, e in enumerate(mono):
                    if e:
                        seen.add(i)
            if len(seen) != 1:
                continue
            (i,) = seen
            if i in known or sub.degree() != 1:
                continue
            # a*x_i + b = 0 with rational a, b
            a = b = Fraction(0)
            for mono, c in sub.terms.items():
                if mono[i]:
                    a += c
                else:
                    b += c
            if a == 0:
                continue
            known[i] = -b / a
            progress = True
        if not progress:
            break
    if len(known) != nvars:
        return None
    point = tuple(known[i] for i in range(nvars))
    if any(g.evaluate(point) != 0 for g in params):
        return None
    if any(u.evaluate(point) == 0 for u in complement):
        return None
    return point


# --- second transcription of the data recursion -----------------------------

def gamma_transcribed(m, bv, c):
    """The resolution data recursion, written out a second time.

    Shares only the leaf bound functions and the magnitude arithmetic
    with the package; the pass structure below was re-derived from the
    recurrence itself: a dimension-m object is handled by repeating, as
    many times as the order bound allows, one order-reduction pass (the
    companion growth, then the restriction growth, then m+1 rounds of
    the dimension-(m-1) recursion) and finishing with the monomial-stage
    blow-up iterate driven by the degree bound.
    """
    from desing import bounds as B

    def base_step(v):
        dn = B.mag_mul(v.d, v.n, c)
        if v.n.is_exact():
            lgrow = B.mag_pow_int(dn, v.n.lo, c)
        else:
            lgrow = B.mag_pow(dn, v.n, c)
        return B.BoundVector(
            r=B.mag_add(v.r, B.Magnitude.exact(1, c), c),
            m=v.m,
            d=dn,
            n=B.mag_mul(B.Magnitude.exact(2, c), v.n, c),
            l=B.mag_mul(v.l, lgrow, c),
            q=B.mag_mul(v.n, v.q, c),
            mu=v.mu)

    def companion_growth(v):
        muM = B.mag_mul(v.mu, B.M_bound(v.d, v.n, c), c)
        return B.BoundVector(
            r=v.r, m=v.m,
            d=B.A_bound(v.d, v.n, v.mu, c),
            n=v.n,
            l=B.F_bound(v.d, v.n, v.mu, v.l, c),
            q=v.q,
            mu=B.mag_factorial(muM, c))

    def restriction_growth(v):
        muM = B.mag_mul(v.mu, B.M_bound(v.d, v.n, c), c)
        m1 = v.m
        if v.m.is_exact() and v.m.lo >= 1:
            m1 = B.Magnitude.exact(v.m.lo - 1, c)
        return B.BoundVector(
            r=v.r, m=m1,
            d=B.A_bound(v.d, v.n, v.mu, c),
            n=v.n,
            l=B.F_bound(v.d, v.n, v.mu, v.l, c),
            q=B.mag_mul(B.mag_mul(v.q, v.l, c), B.C_bound(v.d, v.n, c), c),
            mu=B.mag_factorial(muM, c))

    def recurse(dim, v):
        if dim == 0:
            return base_step(v)
        passes = B.M_bound(v.d, v.n, c)
        if not (passes.is_exact() and passes.lo <= c.iter_cap):
            raise NotImplementedError("transcription only covers exact "
                                      "pass counts")
        keep_m, keep_mu = v.m, v.mu
        cur = v
        for _ in range(passes.lo):
            w = restriction_growth(companion_growth(cur))
            for _ in range(dim + 1):
                w = recurse(dim - 1, w)
            cur = B.BoundVector(
                r=w.r, m=keep_m, d=w.d, n=w.n, l=w.l, q=w.q,
                mu=B.M_bound(w.d, w.n, c))
        out = B.bl_iter(cur, cur.d, c)
        return B.BoundVector(
            r=out.r, m=out.m, d=out.d, n=out.n, l=out.l, q=out.q,
            mu=keep_mu)

    return recurse(m, bv)


# --- misc -------------------------------------------------------------------

def naive_binomial(n, k):
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def poly_strings(gens):
    return [format_poly(g) for g in gens]
