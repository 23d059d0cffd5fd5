"""Sparse multivariate polynomials over the rationals.

Monomials are plain exponent tuples, one slot per variable; polynomials map
monomials to nonzero rational coefficients.  Variables are positional and
named x1..xn everywhere; the short aliases x, y, z, w are accepted by the
parser for the first four.  The term order used across the whole engine is
graded reverse lexicographic with x1 > x2 > ... > xn.

Values are immutable: every operation returns a fresh polynomial and nothing
here mutates a published terms dict.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd

NEG_INF = float("-inf")  # degree of the zero polynomial


# ---------------------------------------------------------------------------
# monomial helpers (monomial = tuple of ints)

def m_mul(a, b):
    return tuple(x + y for x, y in zip(a, b))


def m_div(a, b):
    """a / b, or None if b does not divide a."""
    out = []
    for x, y in zip(a, b):
        if x < y:
            return None
        out.append(x - y)
    return tuple(out)


def m_divides(b, a):
    return all(x >= y for x, y in zip(a, b))


def m_lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def m_deg(a):
    return sum(a)


def grevlex_key(m):
    """Sort key: larger key = larger monomial in grevlex."""
    return (sum(m), tuple(-e for e in reversed(m)))


def _coeff(c):
    """Canonical coefficient: plain int when integral, Fraction otherwise."""
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    raise TypeError("coefficient must be int or Fraction, got %r" % (c,))


class Polynomial:
    """Immutable sparse polynomial in nvars variables over Q."""

    __slots__ = ("terms", "nvars", "_lm", "_hash")

    def __init__(self, terms, nvars, _trusted=False):
        if not _trusted:
            clean = {}
            for m, c in terms.items():
                c = _coeff(c if isinstance(c, (int, Fraction)) else Fraction(c))
                if c:
                    if len(m) != nvars:
                        raise ValueError("monomial arity mismatch")
                    clean[tuple(m)] = c
            terms = clean
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "_lm", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("Polynomial is immutable")

    # -- constructors

    @staticmethod
    def zero(nvars):
        return Polynomial({}, nvars, _trusted=True)

    @staticmethod
    def const(c, nvars):
        c = _coeff(c if isinstance(c, (int, Fraction)) else Fraction(c))
        if not c:
            return Polynomial.zero(nvars)
        return Polynomial({(0,) * nvars: c}, nvars, _trusted=True)

    @staticmethod
    def var(i, nvars):
        """x_{i+1} as a polynomial (i is 0-based)."""
        if not 0 <= i < nvars:
            raise ValueError("variable index out of range")
        m = tuple(1 if j == i else 0 for j in range(nvars))
        return Polynomial({m: 1}, nvars, _trusted=True)

    # -- basic queries

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and not any(self.lm()))

    def constant_value(self):
        z = (0,) * self.nvars
        return self.terms.get(z, 0)

    def degree(self):
        if not self.terms:
            return NEG_INF
        return max(sum(m) for m in self.terms)

    def lm(self):
        """Leading monomial in grevlex; None for 0."""
        if self._lm is None and self.terms:
            object.__setattr__(self, "_lm", max(self.terms, key=grevlex_key))
        return self._lm

    def lc(self):
        m = self.lm()
        return self.terms[m] if m is not None else 0

    def sorted_terms(self):
        """Terms in decreasing grevlex order (canonical)."""
        return sorted(self.terms.items(), key=lambda t: grevlex_key(t[0]),
                      reverse=True)

    # -- arithmetic

    def __add__(self, other):
        other = self._lift(other)
        if self.nvars != other.nvars:
            raise ValueError("nvars mismatch")
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m, 0) + c
            if s:
                t[m] = _coeff(s)
            else:
                t.pop(m, None)
        return Polynomial(t, self.nvars, _trusted=True)

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()},
                          self.nvars, _trusted=True)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __mul__(self, other):
        other = self._lift(other)
        if self.nvars != other.nvars:
            raise ValueError("nvars mismatch")
        if not self.terms or not other.terms:
            return Polynomial.zero(self.nvars)
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        t = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = m_mul(m1, m2)
                s = t.get(m, 0) + c1 * c2
                if s:
                    t[m] = s
                else:
                    del t[m]
        return Polynomial({m: _coeff(c) for m, c in t.items()},
                          self.nvars, _trusted=True)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return self._lift(other) - self

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.const(1, self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def mul_term(self, mono, c):
        c = _coeff(c)
        if not c:
            return Polynomial.zero(self.nvars)
        return Polynomial(
            {m_mul(m, mono): _coeff(cc * c) for m, cc in self.terms.items()},
            self.nvars, _trusted=True)

    def scale(self, c):
        return self.mul_term((0,) * self.nvars, c)

    def _lift(self, other):
        if isinstance(other, Polynomial):
            return other
        return Polynomial.const(other, self.nvars)

    # -- calculus / evaluation

    def derivative(self, i):
        """Partial derivative with respect to x_{i+1} (i is 0-based)."""
        t = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = m[:i] + (e - 1,) + m[i + 1:]
                s = t.get(mm, 0) + c * e
                if s:
                    t[mm] = _coeff(s)
                else:
                    t.pop(mm, None)
        return Polynomial(t, self.nvars, _trusted=True)

    def substitute(self, values):
        """Substitute values[i] for x_{i+1}; values are Polynomial, Fraction
        or int, all sharing one target arity."""
        tgt = None
        for v in values:
            if isinstance(v, Polynomial):
                tgt = v.nvars
                break
        if tgt is None:
            tgt = 0  # all scalars: result is a constant in 0 vars? keep arity
        lifted = []
        for v in values:
            if isinstance(v, Polynomial):
                if v.nvars != tgt:
                    raise ValueError("substitution arity mismatch")
                lifted.append(v)
            else:
                lifted.append(None)  # scalar, handled directly
        if len(values) != self.nvars:
            raise ValueError("need one value per variable")
        out = Polynomial.zero(tgt) if tgt else Fraction(0)
        # cache powers per variable
        pows = [{} for _ in range(self.nvars)]

        def power(i, e):
            if e == 0:
                return 1
            cache = pows[i]
            if e not in cache:
                v = values[i] if lifted[i] is None else lifted[i]
                cache[e] = v ** e if e > 1 else v
            return cache[e]

        for m, c in self.terms.items():
            term = Fraction(c) if not isinstance(c, int) else c
            poly_part = None
            for i, e in enumerate(m):
                if not e:
                    continue
                p = power(i, e)
                if isinstance(p, Polynomial):
                    poly_part = p if poly_part is None else poly_part * p
                else:
                    term = term * p
            if poly_part is None:
                contrib = term
            else:
                contrib = poly_part.scale(_coeff(Fraction(term)))
            out = out + contrib
        if isinstance(out, Polynomial):
            return out
        return Fraction(out)

    def evaluate(self, point):
        """Value at a rational point (tuple of Fractions/ints)."""
        if len(point) != self.nvars:
            raise ValueError("point arity mismatch")
        total = Fraction(0)
        for m, c in self.terms.items():
            v = Fraction(c)
            for i, e in enumerate(m):
                if e:
                    v *= Fraction(point[i]) ** e
            total += v
        return total

    def shift(self, point):
        """Substitute x_i := x_i + p_i (translate point to the origin)."""
        vals = [Polynomial.var(i, self.nvars) + Fraction(point[i])
                for i in range(self.nvars)]
        r = self.substitute(vals)
        if not isinstance(r, Polynomial):
            r = Polynomial.const(r, self.nvars)
        return r

    def order_at_point(self, point):
        """Vanishing order at a rational point; NEG_INF sentinel for 0."""
        if not self.terms:
            return NEG_INF
        sh = self.shift(point)
        return min(sum(m) for m in sh.terms)

    def extend(self, nvars):
        """Same polynomial viewed in a larger ambient (new vars appended)."""
        if nvars < self.nvars:
            raise ValueError("cannot shrink ambient")
        if nvars == self.nvars:
            return self
        pad = (0,) * (nvars - self.nvars)
        return Polynomial({m + pad: c for m, c in self.terms.items()},
                          nvars, _trusted=True)

    # -- normalization

    def content_normalized(self):
        """Integer-primitive scalar multiple with positive leading coeff."""
        if not self.terms:
            return self
        den = 1
        for c in self.terms.values():
            if not isinstance(c, int):
                den = den * c.denominator // gcd(den, c.denominator)
        g = 0
        ints = {}
        for m, c in self.terms.items():
            ic = c * den if isinstance(c, int) else int(c * den)
            ints[m] = ic
            g = gcd(g, ic)
        if Fraction(self.lc()) < 0:
            g = -g
        return Polynomial({m: ic // g for m, ic in ints.items()},
                          self.nvars, _trusted=True)

    def monic(self):
        if not self.terms:
            return self
        lc = Fraction(self.lc())
        return self.scale(1 / lc)

    # -- dunder plumbing

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other, self.nvars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            key = (self.nvars,
                   tuple(sorted((m, Fraction(c)) for m, c
                                in self.terms.items())))
            object.__setattr__(self, "_hash", hash(key))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return "Polynomial(%s)" % format_poly(self)

    def __str__(self):
        return format_poly(self)


# ---------------------------------------------------------------------------
# text syntax

_ALIASES = {"x": 1, "y": 2, "z": 3, "w": 4}
_TOKEN = re.compile(r"\s*(?:(\d+/\d+|\d+)|([a-zA-Z]\d*)|(\^|\*|\+|-))")


def parse_poly(text, nvars=None):
    """Parse "y^2 - x^3" style text.

    Terms are separated by + and -; each term is a * separated product of an
    optional rational coefficient (7, 3/4) and variable powers (x2^3).
    Canonical variable names are x1..xn; x, y, z, w alias x1..x4.  With
    nvars=None the arity is the largest variable index seen.
    """
    pos = 0
    terms = []  # list of (sign-applied coeff, {var_index: exp})
    cur_coeff = None
    cur_exps = None
    sign = 1
    expecting = "term"  # term | factor | op

    def flush():
        nonlocal cur_coeff, cur_exps
        if cur_exps is None:
            return
        terms.append((cur_coeff if cur_coeff is not None else Fraction(1),
                      cur_exps))
        cur_coeff, cur_exps = None, None

    text = text.strip()
    if not text:
        raise ValueError("empty polynomial text")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError("bad token at %r" % text[pos:pos + 10])
        pos = m.end()
        num, name, op = m.groups()
        if op in ("+", "-"):
            if expecting == "factor":
                raise ValueError("dangling operator")
            flush()
            if expecting == "term":
                if op == "-":
                    sign = -sign  # consecutive signs accumulate
            else:
                sign = -1 if op == "-" else 1
            expecting = "term"
            continue
        if op == "*":
            if cur_exps is None:
                raise ValueError("stray *")
            expecting = "factor"
            continue
        if op == "^":
            raise ValueError("stray ^")
        if num is not None:
            c = Fraction(num)
            if cur_exps is None:
                cur_exps = {}
                cur_coeff = Fraction(sign) * c
                sign = 1
            else:
                cur_coeff = (cur_coeff if cur_coeff is not None
                             else Fraction(1)) * c
            expecting = "op"
            continue
        # variable, possibly followed by ^int
        base = name.rstrip("0123456789")
        digits = name[len(base):]
        if base in _ALIASES and not digits:
            idx = _ALIASES[base]
        elif base == "x" and digits:
            idx = int(digits)
            if idx == 0:
                raise ValueError("variables are numbered from 1")
        else:
            raise ValueError("unknown variable %r" % name)
        exp = 1
        mm = _TOKEN.match(text, pos)
        if mm and mm.group(3) == "^":
            pos2 = mm.end()
            me = _TOKEN.match(text, pos2)
            if not me or me.group(1) is None or "/" in me.group(1):
                raise ValueError("^ needs an integer exponent")
            exp = int(me.group(1))
            pos = me.end()
        if cur_exps is None:
            cur_exps = {}
            cur_coeff = Fraction(sign)
            sign = 1
        cur_exps[idx] = cur_exps.get(idx, 0) + exp
        expecting = "op"
    if expecting != "op":
        raise ValueError("dangling operator")
    flush()
    if not terms:
        raise ValueError("empty polynomial text")
    max_idx = max((i for _, e in terms for i in e), default=0)
    n = nvars if nvars is not None else max_idx
    if max_idx > n:
        raise ValueError("variable index %d exceeds nvars=%d" % (max_idx, n))
    tdict = {}
    for c, exps in terms:
        mono = tuple(exps.get(i + 1, 0) for i in range(n))
        s = tdict.get(mono, Fraction(0)) + c
        if s:
            tdict[mono] = s
        else:
            tdict.pop(mono, None)
    return Polynomial(tdict, n)


def format_poly(p, names=None):
    """Canonical text form; parse_poly(format_poly(p), p.nvars) == p."""
    if not isinstance(p, Polynomial):
        raise TypeError("expected Polynomial")
    if p.is_zero():
        return "0"
    if names is None:
        names = ["x%d" % (i + 1) for i in range(p.nvars)]
    parts = []
    for m, c in p.sorted_terms():
        c = Fraction(c)
        mono = "*".join(
            ("%s^%d" % (names[i], e)) if e > 1 else names[i]
            for i, e in enumerate(m) if e)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = "%s*%s" % (mag, mono)
        parts.append(("- " if c < 0 else "+ ") + body)
    out = " ".join(parts)
    if out.startswith("+ "):
        out = out[2:]
    elif out.startswith("- "):
        out = "-" + out[2:]
    return out
