"""Exact rational-function expression kernel.

An Expr is a quotient of multivariate polynomials over Q.  The numerator
is an expanded polynomial; the denominator is kept as a product of monic
primitive factors with positive integer exponents.  Construction always
cancels factors that divide the numerator exactly and folds constants, so
polynomial identities reduce to identical objects and ``normalize`` is
idempotent by construction.  Quotient arithmetic (differences of
prolongation formulas and the like) reduces to polynomial arithmetic on
numerators over the factored common denominator, which keeps zero testing
exact without blind multivariate GCDs.

The probabilistic zero test ``is_zero`` never consults the canonical form;
it evaluates at random rational points respecting an AssumptionSet, so it
remains an independent route for checking identities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionByZero, SamplingExhausted, UnboundSymbol
from .symbols import Sym, fraction_str

# Above this many terms in either operand, full GCD extraction is skipped;
# factor cancellation by exact trial division still runs.
GCD_TERM_LIMIT = 80

_ZERO = Fraction(0)
_ONE = Fraction(1)


# ---------------------------------------------------------------------------
# polynomials

class Poly:
    """Multivariate polynomial: dict from monomial to Fraction.

    A monomial is a tuple of (Sym, exponent) pairs sorted by the symbol
    order, exponents positive.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def const(c):
        c = Fraction(c)
        return Poly({(): c} if c else {})

    @staticmethod
    def sym(s: Sym):
        return Poly({((s, 1),): _ONE})

    def is_zero(self):
        return not self.terms

    def is_const(self):
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def const_value(self):
        return self.terms.get((), _ZERO)

    def __add__(self, other):
        if len(self.terms) < len(other.terms):
            self, other = other, self
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, _ZERO) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return Poly(out)

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if self.is_zero() or other.is_zero():
            return Poly()
        if self.is_const():
            return other.scale(self.const_value())
        if other.is_const():
            return self.scale(other.const_value())
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                v = out.get(m, _ZERO) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return Poly(out)

    def scale(self, c: Fraction):
        if not c:
            return Poly()
        return Poly({m: cc * c for m, cc in self.terms.items()})

    def pow(self, n: int):
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def symbols(self):
        out = set()
        for m in self.terms:
            for s, _ in m:
                out.add(s)
        return out

    def total_degree(self):
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def degree_in(self, s: Sym):
        d = 0
        for m in self.terms:
            for sy, e in m:
                if sy == s:
                    d = max(d, e)
        return d

    def coeff_of(self, s: Sym, e: int):
        """Coefficient polynomial of s**e (a Poly not involving s)."""
        out = {}
        for m, c in self.terms.items():
            rest, got = [], 0
            for sy, ex in m:
                if sy == s:
                    got = ex
                else:
                    rest.append((sy, ex))
            if got == e:
                out[tuple(rest)] = c
        return Poly(out)

    def leading(self):
        """(monomial, coeff) maximal in graded-lex order."""
        return max(self.terms.items(), key=lambda it: _mono_key(it[0]))

    def diff(self, s: Sym):
        out = {}
        for m, c in self.terms.items():
            for i, (sy, e) in enumerate(m):
                if sy == s:
                    if e > 1:
                        nm = m[:i] + ((sy, e - 1),) + m[i + 1:]
                    else:
                        nm = m[:i] + m[i + 1:]
                    v = out.get(nm, _ZERO) + c * e
                    if v:
                        out[nm] = v
                    else:
                        out.pop(nm, None)
                    break
        return Poly(out)

    def eval(self, point):
        """Exact value at a Sym -> Fraction map.  Raises UnboundSymbol."""
        total = _ZERO
        for m, c in self.terms.items():
            v = c
            for s, e in m:
                if s not in point:
                    raise UnboundSymbol(str(s))
                v *= point[s] ** e
            total += v
        return total

    def key(self):
        return tuple(sorted(((_mono_key(m), c) for m, c in self.terms.items()), reverse=True))

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda it: _mono_key(it[0]), reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for s, e in m:
                factors.append(str(s) if e == 1 else "%s^%d" % (s, e))
            if not factors:
                body = fraction_str(abs(c))
            elif abs(c) == 1:
                body = " * ".join(factors)
            else:
                body = " * ".join([fraction_str(abs(c))] + factors)
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    __repr__ = __str__


def _mono_mul(m1, m2):
    out = dict(m1)
    for s, e in m2:
        out[s] = out.get(s, 0) + e
    return tuple(sorted(out.items(), key=lambda it: it[0].key))


def _mono_key(m):
    # graded, then lex with the largest symbol dominating
    return (sum(e for _, e in m), tuple((s.key, e) for s, e in reversed(m)))


def _mono_gcd(m1, m2):
    d = dict(m1)
    out = []
    for s, e in m2:
        if s in d:
            out.append((s, min(d[s], e)))
    return tuple(sorted(out, key=lambda it: it[0].key))


def poly_monomial_content(p: Poly):
    """Largest monomial dividing every term (exponent part only)."""
    it = iter(p.terms)
    try:
        g = next(it)
    except StopIteration:
        return ()
    for m in it:
        if not g:
            return ()
        g = _mono_gcd(g, m)
    return g


# -- exact division and gcd helpers

def _poly_divexact(a: Poly, b: Poly):
    """Exact division a / b; returns None when not divisible."""
    if b.is_zero():
        raise DivisionByZero("exact division by zero polynomial")
    if a.is_zero():
        return Poly()
    if b.is_const():
        return a.scale(1 / b.const_value())
    if a.total_degree() < b.total_degree():
        return None
    q = {}
    rem = dict(a.terms)
    btail = sorted(b.terms.items(), key=lambda it: _mono_key(it[0]))
    bm, bc = btail.pop()  # leading term of b
    guard = len(a.terms) * 8 + 64
    while rem:
        guard -= 1
        if guard < 0:
            return None
        rm = max(rem, key=_mono_key)
        mono = _mono_div(rm, bm)
        if mono is None:
            return None
        coeff = rem[rm] / bc
        q[mono] = coeff
        del rem[rm]
        for m2, c2 in btail:
            m = _mono_mul(mono, m2)
            v = rem.get(m, _ZERO) - coeff * c2
            if v:
                rem[m] = v
            else:
                rem.pop(m, None)
    return Poly(q)


def _mono_div(m, d):
    out = dict(m)
    for s, e in d:
        if out.get(s, 0) < e:
            return None
        out[s] -= e
        if not out[s]:
            del out[s]
    return tuple(sorted(out.items(), key=lambda it: it[0].key))


def _univ(p: Poly, s: Sym):
    d = p.degree_in(s)
    return [p.coeff_of(s, e) for e in range(d + 1)]


def _from_univ(coeffs, s: Sym):
    out = Poly()
    sp = Poly.sym(s)
    power = Poly.const(1)
    for c in coeffs:
        out = out + c * power
        power = power * sp
    return out


def _content(coeffs):
    g = Poly()
    for c in coeffs:
        g = poly_gcd(g, c)
        if g.is_const() and not g.is_zero():
            return Poly.const(1)
    return g if not g.is_zero() else Poly.const(1)


def _univ_prem(a, b, s):
    """Pseudo-remainder of univariates (lists of Polys) in s."""
    a = list(a)
    db, lb = len(b) - 1, b[-1]
    while len(a) - 1 >= db and any(not c.is_zero() for c in a):
        while a and a[-1].is_zero():
            a.pop()
        if len(a) - 1 < db:
            break
        da, la = len(a) - 1, a[-1]
        a = [c * lb for c in a]
        shift = da - db
        for i, c in enumerate(b):
            a[i + shift] = a[i + shift] - c * la
        while a and a[-1].is_zero():
            a.pop()
    return a


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """GCD over Q[syms] via primitive PRS, monic in the leading monomial.

    Falls back to 1 (no cancellation) on operands over GCD_TERM_LIMIT terms.
    """
    if a.is_zero():
        return _monic(b)
    if b.is_zero():
        return _monic(a)
    if a.is_const() or b.is_const():
        return Poly.const(1)
    if len(a.terms) > GCD_TERM_LIMIT or len(b.terms) > GCD_TERM_LIMIT:
        return Poly.const(1)
    shared = a.symbols() & b.symbols()
    if not shared:
        return Poly.const(1)
    s = max(shared)
    ua, ub = _univ(a, s), _univ(b, s)
    ca, cb = _content(ua), _content(ub)
    pa = [_poly_divexact(c, ca) for c in ua]
    pb = [_poly_divexact(c, cb) for c in ub]
    if any(c is None for c in pa) or any(c is None for c in pb):
        return Poly.const(1)
    if len(pa) < len(pb):
        pa, pb = pb, pa
    guard = 64
    while True:
        guard -= 1
        if guard < 0:
            return Poly.const(1)
        r = _univ_prem(pa, pb, s)
        if not r or all(c.is_zero() for c in r):
            g = pb
            break
        if len(r) == 1:
            return _monic(poly_gcd(ca, cb))
        cr = _content(r)
        r = [_poly_divexact(c, cr) for c in r]
        if any(c is None for c in r):
            return Poly.const(1)
        pa, pb = pb, r
    cg = _content(g)
    g = [_poly_divexact(c, cg) for c in g]
    if any(c is None for c in g):
        return Poly.const(1)
    return _monic(_from_univ(g, s) * poly_gcd(ca, cb))


def _monic(p: Poly):
    if p.is_zero():
        return p
    _, c = p.leading()
    return p.scale(1 / c)


# ---------------------------------------------------------------------------
# expressions: numerator polynomial over a factored denominator

def _factor_key(p: Poly):
    return p.key()


class Expr:
    """Canonical rational function: Poly numerator / product of monic factors."""

    __slots__ = ("num", "factors", "_den")

    def __init__(self, num: Poly, factors=(), _canonical=False):
        if _canonical:
            self.num = num
            self.factors = factors
        else:
            self.num, self.factors = _reduce(num, factors)
        self._den = None

    # -- constructors

    @staticmethod
    def const(c):
        return Expr(Poly.const(c), (), _canonical=True)

    @staticmethod
    def sym(s: Sym):
        return Expr(Poly.sym(s), (), _canonical=True)

    # -- structure

    @property
    def den(self) -> Poly:
        """Expanded denominator polynomial."""
        if self._den is None:
            d = Poly.const(1)
            for f, e in self.factors:
                d = d * f.pow(e)
            self._den = d
        return self._den

    def is_zero_expr(self):
        return self.num.is_zero()

    def is_const(self):
        return self.num.is_const() and not self.factors

    def const_value(self):
        return self.num.const_value()

    def symbols(self):
        out = self.num.symbols()
        for f, _ in self.factors:
            out |= f.symbols()
        return out

    # -- arithmetic

    def __add__(self, other):
        other = _coerce(other)
        if not self.factors and not other.factors:
            return Expr(self.num + other.num, (), _canonical=True)
        common, up_self, up_other = _merge_denominators(self.factors, other.factors)
        num = self.num * up_self + other.num * up_other
        return _light(num, common)

    __radd__ = __add__

    def __neg__(self):
        return Expr(-self.num, self.factors, _canonical=True)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other.is_const():
            if other.num.is_zero():
                return ZERO
            return Expr(self.num.scale(other.const_value()), self.factors, _canonical=True)
        if self.is_const():
            if self.num.is_zero():
                return ZERO
            return Expr(other.num.scale(self.const_value()), other.factors, _canonical=True)
        return _light(self.num * other.num,
                      _merge_factor_lists(self.factors, other.factors))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.num.is_zero():
            raise DivisionByZero("division by zero expression")
        num = self.num
        factors = _merge_factor_lists(self.factors, _factorize_poly(other.num))
        for f, e in other.factors:
            num = num * f.pow(e)
        return Expr(num, factors)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("integer exponents only")
        if n == 0:
            return ONE
        if n < 0:
            return ONE / (self ** (-n))
        return Expr(self.num.pow(n),
                    tuple((f, e * n) for f, e in self.factors))

    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        if self.num == other.num and self.factors == other.factors:
            return True
        # same value under differing factor splits
        diffn = (self - other)
        return diffn.num.is_zero()

    def __hash__(self):
        # factor splits of equal values can differ, so hash the numerator only
        return hash(self.num)

    def __str__(self):
        if not self.factors:
            return str(self.num)
        parts = []
        for f, e in self.factors:
            parts.append("(%s)" % f if e == 1 else "(%s)^%d" % (f, e))
        return "(%s) / (%s)" % (self.num, " * ".join(parts))

    __repr__ = __str__


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Expr.const(v)
    if isinstance(v, Sym):
        return Expr.sym(v)
    raise TypeError("cannot coerce %r to Expr" % (v,))


def _light(num: Poly, factors) -> Expr:
    """Construct without cancellation attempts (sums and products preserve
    exactness; ``normalize`` restores the canonical quotient form)."""
    if num.is_zero():
        return ZERO
    return Expr(num, factors, _canonical=True)


def _factorize_poly(p: Poly):
    """Light factorization of a new denominator: monomial content split off,
    primitive remainder kept whole, made monic (scale pushed to caller via num).

    Returns factor list; the caller must divide its numerator by the dropped
    leading coefficient (handled in _reduce via scale bookkeeping)."""
    # split monomial content
    factors = []
    mc = poly_monomial_content(p)
    if mc:
        rest = {}
        for m, c in p.terms.items():
            rest[_mono_div(m, mc)] = c
        p = Poly(rest)
        for s, e in mc:
            factors.append((Poly.sym(s), e))
    if not p.is_const():
        factors.append((_monic(p), 1))
        scale = p.leading()[1]
    else:
        scale = p.const_value()
    factors.append((Poly.const(scale), 1))  # marker, folded by _reduce
    return tuple(factors)


def _merge_factor_lists(f1, f2):
    out = {}
    for f, e in list(f1) + list(f2):
        k = _factor_key(f)
        if k in out:
            out[k] = (f, out[k][1] + e)
        else:
            out[k] = (f, e)
    return tuple(v for _, v in sorted(out.items()))


def _merge_denominators(f1, f2):
    """Common denominator: returns (common factors, multiplier for side 1, side 2)."""
    d1 = {_factor_key(f): (f, e) for f, e in f1}
    d2 = {_factor_key(f): (f, e) for f, e in f2}
    common = {}
    for k in set(d1) | set(d2):
        f = d1.get(k, d2.get(k))[0]
        e = max(d1.get(k, (f, 0))[1], d2.get(k, (f, 0))[1])
        common[k] = (f, e)
    up1 = Poly.const(1)
    up2 = Poly.const(1)
    for k, (f, e) in common.items():
        e1 = d1.get(k, (f, 0))[1]
        e2 = d2.get(k, (f, 0))[1]
        if e > e1:
            up1 = up1 * f.pow(e - e1)
        if e > e2:
            up2 = up2 * f.pow(e - e2)
    return tuple(v for _, v in sorted(common.items())), up1, up2


def _reduce(num: Poly, factors):
    """Canonical reduction: fold constant factors into the numerator, make
    every factor monic, cancel factors dividing the numerator exactly, and
    split a factor when a small GCD with the numerator reveals a divisor."""
    if num.is_zero():
        return Poly(), ()
    queue = list(factors)
    out = {}
    while queue:
        f, e = queue.pop()
        if f.is_zero():
            raise DivisionByZero("zero denominator factor")
        if e == 0:
            continue
        if f.is_const():
            num = num.scale(1 / f.const_value() ** e)
            continue
        lead = f.leading()[1]
        if lead != 1:
            num = num.scale(1 / lead ** e)
            f = f.scale(1 / lead)
        while e > 0:
            q = _poly_divexact(num, f)
            if q is None:
                break
            num = q
            e -= 1
        if e == 0:
            continue
        if (not num.is_const() and len(num.terms) <= GCD_TERM_LIMIT
                and len(f.terms) <= GCD_TERM_LIMIT):
            g = poly_gcd(num, f)
            if not g.is_const():
                q2 = _poly_divexact(f, g)
                if q2 is not None:
                    # f^e = g^e * q2^e; requeue both, divexact will cancel g's
                    queue.append((g, e))
                    queue.append((q2, e))
                    continue
        k = _factor_key(f)
        if k in out:
            out[k] = (f, out[k][1] + e)
        else:
            out[k] = (f, e)
    return num, tuple(v for _, v in sorted(out.items()))


ZERO = Expr(Poly(), (), _canonical=True)
ONE = Expr(Poly.const(1), (), _canonical=True)


# ---------------------------------------------------------------------------
# module operations (the public surface)

def normalize(e: Expr) -> Expr:
    """Canonical form.  Exprs are canonical by construction, so this re-reduces
    and returns an equal value; idempotence is structural."""
    return Expr(e.num, e.factors)


def diff(e: Expr, s: Sym) -> Expr:
    """Partial derivative treating every Sym as independent; quotient rule is
    applied factor-wise so denominators never expand."""
    dn = e.num.diff(s)
    live = [(f, k) for f, k in e.factors if not f.diff(s).is_zero()]
    if not live:
        return Expr(dn, e.factors)
    # d(num / prod f^k) = [dn * prod f_live - num * sum k f' prod_{other} f] / (den * prod f_live)
    prod_live = Poly.const(1)
    for f, _ in live:
        prod_live = prod_live * f
    total = dn * prod_live
    for i, (f, k) in enumerate(live):
        others = Poly.const(1)
        for j, (g, _) in enumerate(live):
            if j != i:
                others = others * g
        total = total - num_mul_int(e.num, k) * f.diff(s) * others
    new_factors = _merge_factor_lists(e.factors, tuple((f, 1) for f, _ in live))
    return _light(total, new_factors)


def num_mul_int(p: Poly, k: int):
    return p.scale(Fraction(k))


def substitute(e: Expr, bindings) -> Expr:
    """Simultaneous substitution Sym -> Expr, then canonical reduction."""
    num = _poly_subs(e.num, bindings)
    den = ONE
    for f, k in e.factors:
        fv = _poly_subs(f, bindings)
        if fv.is_zero_expr():
            raise DivisionByZero("substitution makes a denominator factor zero")
        den = den * fv ** k
    if den.is_zero_expr():
        raise DivisionByZero("substitution makes denominator zero")
    return num / den


def _poly_subs(p: Poly, bindings) -> Expr:
    relevant = [s for s in p.symbols() if s in bindings]
    if not relevant:
        return Expr(p, (), _canonical=True)
    total = ZERO
    for m, c in p.terms.items():
        term = Expr.const(c)
        for s, e in m:
            if s in bindings:
                term = term * (_coerce(bindings[s]) ** e)
            else:
                term = term * Expr(Poly({((s, e),): _ONE}), (), _canonical=True)
        total = total + term
    return total


def eval_rational(e: Expr, point) -> Fraction:
    """Exact value at a full Sym -> Fraction binding."""
    dv = _ONE
    for f, k in e.factors:
        v = f.eval(point)
        if v == 0:
            raise DivisionByZero("denominator vanishes at the evaluation point")
        dv *= v ** k
    return e.num.eval(point) / dv


@dataclass(frozen=True)
class AssumptionSet:
    """Nonvanishing / positivity assumptions; every stored Expr is canonical."""

    nonzero: frozenset = frozenset()
    positive: frozenset = frozenset()

    def with_nonzero(self, *es):
        es = [normalize(_coerce(e)) for e in es]
        es = [e for e in es if not e.is_const()]
        return AssumptionSet(self.nonzero | frozenset(es), self.positive)

    def with_positive(self, *es):
        es = [normalize(_coerce(e)) for e in es]
        return AssumptionSet(self.nonzero, self.positive | frozenset(es))

    def all_exprs(self):
        return list(self.nonzero) + list(self.positive)

    def union(self, other):
        return AssumptionSet(self.nonzero | other.nonzero, self.positive | other.positive)


EMPTY_ASSUMPTIONS = AssumptionSet()

SAMPLE_BOUND = 10 ** 6
_RESAMPLE_FACTOR = 50


def sample_point(symbols, assumptions: AssumptionSet, rng: random.Random,
                 bound: int = 100, denom_bound: int = 50, extra_nonzero=()):
    """Random rational point on which all assumptions hold.

    Draws numerators in [-bound, bound] and denominators in [1, denom_bound];
    resamples when an assumed-nonzero expression vanishes.  Raises
    SamplingExhausted when the draw budget runs out.
    """
    symbols = sorted(set(symbols), key=lambda s: s.key)
    need = list(assumptions.nonzero) + list(extra_nonzero)
    for _ in range(_RESAMPLE_FACTOR):
        point = {s: Fraction(rng.randint(-bound, bound), rng.randint(1, denom_bound))
                 for s in symbols}
        ok = True
        for e in need:
            for s in e.symbols():
                if s not in point:
                    point[s] = Fraction(rng.randint(-bound, bound), rng.randint(1, denom_bound))
            try:
                if eval_rational(e, point) == 0:
                    ok = False
                    break
            except DivisionByZero:
                ok = False
                break
        if not ok:
            continue
        for e in assumptions.positive:
            for s in e.symbols():
                if s not in point:
                    point[s] = Fraction(rng.randint(-bound, bound), rng.randint(1, denom_bound))
            try:
                if eval_rational(e, point) <= 0:
                    ok = False
                    break
            except DivisionByZero:
                ok = False
                break
        if ok:
            return point
    raise SamplingExhausted("no sample point satisfying the assumptions")


def is_zero_witness(e: Expr, assumptions: AssumptionSet = EMPTY_ASSUMPTIONS,
                    seed: int = 0, trials: int = 8):
    """(verdict, witness): verdict False comes with a point where e is nonzero.

    One-sided error: False is always correct; True is probabilistic with
    failure probability shrinking in the number of trials.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    syms = e.symbols()
    for a in assumptions.all_exprs():
        syms |= a.symbols()
    guards = [Expr(f, (), _canonical=True) for f, _ in e.factors]
    for _ in range(trials):
        point = sample_point(syms, assumptions, rng, bound=SAMPLE_BOUND,
                             denom_bound=SAMPLE_BOUND, extra_nonzero=guards)
        value = eval_rational(e, point)
        if value != 0:
            return False, point
    return True, None


def is_zero(e: Expr, assumptions: AssumptionSet = EMPTY_ASSUMPTIONS,
            seed: int = 0, trials: int = 8) -> bool:
    """Probabilistic zero test on the open set where the assumptions hold."""
    verdict, _ = is_zero_witness(e, assumptions, seed, trials)
    return verdict


def serialize(e: Expr) -> str:
    """Bit-exact report serialization; shared by every module's reports."""
    return str(e)
