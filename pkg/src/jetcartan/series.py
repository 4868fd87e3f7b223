"""Truncated multivariate power series with exact coefficients.

Coefficients may be Fractions or Exprs; arithmetic only needs +, * and
scalar division.  A series is a dict from exponent tuples (one slot per
variable) to coefficients, truncated at a total degree.  Composition and
compositional inversion are the workhorses for numeric prolongation,
groupoid composition of jets, and flat-coordinate changes.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .errors import SingularJacobian


class TSeries:
    """Power series in ``nvars`` variables truncated above total degree ``order``."""

    __slots__ = ("nvars", "order", "coeffs")

    def __init__(self, nvars, order, coeffs=None):
        self.nvars = nvars
        self.order = order
        self.coeffs = coeffs if coeffs is not None else {}

    @staticmethod
    def const(nvars, order, c):
        s = TSeries(nvars, order)
        if c:
            s.coeffs[(0,) * nvars] = c
        return s

    @staticmethod
    def var(nvars, order, i, zero=Fraction(0)):
        s = TSeries(nvars, order)
        if order >= 1:
            e = [0] * nvars
            e[i] = 1
            s.coeffs[tuple(e)] = zero + 1
        return s

    def clone(self):
        return TSeries(self.nvars, self.order, dict(self.coeffs))

    def constant_term(self, zero=Fraction(0)):
        return self.coeffs.get((0,) * self.nvars, zero)

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            v = out.get(e)
            v = c if v is None else v + c
            if _nonzero(v):
                out[e] = v
            else:
                out.pop(e, None)
        return TSeries(self.nvars, min(self.order, other.order), out)

    def __neg__(self):
        return TSeries(self.nvars, self.order, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TSeries):
            order = min(self.order, other.order)
            items1 = [(e, sum(e), c) for e, c in self.coeffs.items()]
            items2 = sorted(((e, sum(e), c) for e, c in other.coeffs.items()),
                            key=lambda t: t[1])
            out = {}
            for e1, d1, c1 in items1:
                cap = order - d1
                if cap < 0:
                    continue
                for e2, d2, c2 in items2:
                    if d2 > cap:
                        break
                    e = tuple(map(int.__add__, e1, e2))
                    v = out.get(e)
                    prod = c1 * c2
                    v = prod if v is None else v + prod
                    out[e] = v
            return TSeries(self.nvars, order, {e: c for e, c in out.items() if _nonzero(c)})
        return self.scale(other)

    def scale(self, c):
        if not _nonzero(c):
            return TSeries(self.nvars, self.order)
        return TSeries(self.nvars, self.order, {e: v * c for e, v in self.coeffs.items()})

    def diff(self, i):
        out = {}
        for e, c in self.coeffs.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return TSeries(self.nvars, self.order - 1, out)

    def truncate(self, order):
        return TSeries(self.nvars, order,
                       {e: c for e, c in self.coeffs.items() if sum(e) <= order})

    def compose(self, args):
        """Substitute args[i] (series in a common variable set) for variable i.

        Every arg must have zero constant term unless this series is a
        polynomial of low enough degree for the constant to be absorbed
        exactly; callers here always pass centered args.
        """
        nv = args[0].nvars
        order = min([self.order] + [a.order for a in args])
        result = TSeries(nv, order)
        # powers cache per variable
        powers = [[TSeries.const(nv, order, Fraction(1))] for _ in range(self.nvars)]
        for e, c in self.coeffs.items():
            term = None
            for i, k in enumerate(e):
                while len(powers[i]) <= k:
                    powers[i].append(powers[i][-1] * args[i])
                if k:
                    term = powers[i][k] if term is None else term * powers[i][k]
            if term is None:
                term = TSeries.const(nv, order, c)
            else:
                term = term.scale(c)
            result = result + term
        return result

    def jet_value(self, e):
        """Derivative value at 0 for exponent tuple e (coefficient times e!)."""
        c = self.coeffs.get(tuple(e))
        mult = 1
        for k in e:
            mult *= factorial(k)
        if c is None:
            return Fraction(0)
        return c * mult


def _nonzero(c):
    if isinstance(c, (int, Fraction)):
        return c != 0
    # Expr
    return not c.is_zero_expr()


def invert_map(components, order):
    """Compositional inverse of a centered map R^n -> R^n given as n TSeries.

    The linear part must be invertible.  Returns n TSeries of the inverse,
    solved order by order:  G_{k+1} = L^{-1} o (id - (F - L) o G_k).
    """
    n = len(components)
    nv = components[0].nvars
    if nv != n:
        raise ValueError("map inversion needs as many components as variables")
    lin = [[comp.coeffs.get(_unit(n, j), Fraction(0)) for j in range(n)] for comp in components]
    linv = _matrix_inverse(lin)
    ident = [TSeries.var(n, order, i) for i in range(n)]
    higher = []
    for comp in components:
        h = TSeries(n, order, {e: c for e, c in comp.coeffs.items() if sum(e) >= 2})
        higher.append(h)
    g = [_linear_combination(linv[i], ident, order) for i in range(n)]
    for _ in range(order):
        hk = [h.compose(g) for h in higher]
        delta = [ident[i] - hk[i] for i in range(n)]
        g = [_linear_combination(linv[i], delta, order) for i in range(n)]
    return g


def _unit(n, j):
    e = [0] * n
    e[j] = 1
    return tuple(e)


def _linear_combination(row, vecs, order):
    n = len(vecs)
    out = TSeries(vecs[0].nvars, order)
    for j in range(n):
        if row[j]:
            out = out + vecs[j].scale(row[j])
    return out


def _matrix_inverse(m):
    n = len(m)
    a = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise SingularJacobian("linear part of the map is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [row[n:] for row in a]


def series_from_jets(jets, varnames, order, zero=Fraction(0)):
    """Series Σ jet[K]/K! x^K from a map MultiIndex-like dict.

    ``jets`` maps exponent tuples to values; entries beyond ``order`` ignored.
    """
    n = len(varnames)
    coeffs = {}
    for e, v in jets.items():
        if sum(e) > order or not _nonzero(v):
            continue
        mult = 1
        for k in e:
            mult *= factorial(k)
        coeffs[tuple(e)] = v * Fraction(1, mult)
    return TSeries(n, order, coeffs)
