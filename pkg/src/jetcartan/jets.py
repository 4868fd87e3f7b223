"""Jet-space bookkeeping: total derivatives, prolongation of point
transformations, and the flat-coordinate frame of a section graph.

Conventions.  A JetSpace has n independent variables and m dependent ones.
Base coordinates of E are BASE symbols (both kinds); jets of the dependent
variables are JET symbols with multi-indices over the independent names,
order >= 1 (the order-0 value of a dependent variable is its BASE symbol).
Group jets Z^a_A are GROUP symbols indexed over all n+m base names.

A point transformation in symbolic group-jet form has one target component
per base variable, each depending on a declared subset of the base
variables ("symbol omission": jets in omitted directions never exist).
Total derivatives act on expressions containing group jets through the
graph rule  D_i Z^a_A = Z^a_{A,x_i} + sum_b u^b_i Z^a_{A,u_b}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .errors import OrderOverflow, SingularJacobian, UnboundSymbol
from .expr import Expr, ZERO, ONE, AssumptionSet, EMPTY_ASSUMPTIONS, diff, eval_rational
from .series import TSeries, invert_map, series_from_jets
from .symbols import EMPTY, Kind, MultiIndex, Sym, base, groupjet, jet


def jet_dim(n: int, m: int, q: int) -> int:
    """dim J^q = n + m * C(q+n, n)."""
    return n + m * comb(q + n, n)


from functools import lru_cache


@lru_cache(maxsize=None)
def multiindices(names, order):
    """All multi-indices over ``names`` of exact total order ``order``."""
    if order == 0:
        return (EMPTY,)
    out = []
    for combo in itertools.combinations_with_replacement(sorted(names), order):
        out.append(MultiIndex.of(*combo))
    return tuple(out)


@lru_cache(maxsize=None)
def multiindices_upto(names, order):
    out = []
    for k in range(order + 1):
        out.extend(multiindices(tuple(names), k))
    return tuple(out)


@dataclass(frozen=True)
class JetSpace:
    """Source jet space J^q(E) with named coordinates."""

    independent: tuple
    dependent: tuple
    max_order: int = 8

    def __post_init__(self):
        if not self.independent or not self.dependent:
            raise ValueError("need at least one independent and one dependent variable")

    @property
    def n(self):
        return len(self.independent)

    @property
    def m(self):
        return len(self.dependent)

    @property
    def base_names(self):
        return self.independent + self.dependent

    def coordinate(self, name):
        return base(name)

    def jet_sym(self, dep, index: MultiIndex):
        """Jet coordinate u^dep_index; order 0 collapses to the base symbol."""
        if index.order == 0:
            return base(dep)
        if index.order > self.max_order:
            raise OrderOverflow("jet %s[%s] beyond max_order %d" % (dep, index, self.max_order))
        return jet(dep, index)

    def total_derivative(self, e: Expr, i_name: str, constraints=None) -> Expr:
        """D_i e, treating group jets by the graph rule.

        ``constraints`` is an optional JetConstraints zeroing a cone of jets.
        """
        if i_name not in self.independent:
            raise KeyError(i_name)
        out = diff(e, base(i_name))
        for s in sorted(e.symbols(), key=lambda t: t.key):
            de = diff(e, s)
            if de.is_zero_expr():
                continue
            if s.kind == Kind.BASE and s.name in self.dependent:
                raised = self._dep_jet(s.name, MultiIndex.of(i_name), constraints)
                out = out + raised * de
            elif s.kind == Kind.JET and not s.name.startswith("@"):
                raised = self._dep_jet(s.name, s.index.bump(i_name), constraints)
                out = out + raised * de
            elif s.kind == Kind.GROUP:
                term = Expr.sym(groupjet(s.name, s.index.bump(i_name)))
                for dep in self.dependent:
                    term = term + self._dep_jet(dep, MultiIndex.of(i_name), constraints) \
                        * Expr.sym(groupjet(s.name, s.index.bump(dep)))
                out = out + term * de
        return out

    def _dep_jet(self, dep, index, constraints):
        if constraints is not None and constraints.kills(dep, index):
            return ZERO
        return Expr.sym(self.jet_sym(dep, index))


@dataclass(frozen=True)
class JetConstraints:
    """Zero cone of source jets: every jet whose index dominates a listed
    (dep, index) root is identically zero (a branch locus like q_pp = 0)."""

    roots: tuple = ()

    def kills(self, dep, index: MultiIndex) -> bool:
        return any(dep == d and index.contains(r) for d, r in self.roots)

    def filter_expr(self, e: Expr) -> Expr:
        from .expr import substitute
        binds = {}
        for s in e.symbols():
            if s.kind == Kind.JET and not s.name.startswith("@") and self.kills(s.name, s.index):
                binds[s] = ZERO
        return substitute(e, binds) if binds else e


@dataclass(frozen=True)
class PointTransformation:
    """Transformation of E in explicit or symbolic group-jet form.

    ``targets``: for explicit form, a dict base-name -> Expr in base
    coordinates and parameters.  For symbolic form, None and the targets
    are the order-0 group jets Z^a.
    ``deps``: for symbolic form, base-name -> tuple of base names the
    component may depend on (symbol omission).
    """

    space: JetSpace
    targets: dict | None = None
    deps: dict | None = None

    def component(self, name) -> Expr:
        if self.targets is not None:
            return self.targets[name]
        return Expr.sym(groupjet(name))

    def dependency_names(self, name):
        if self.deps and name in self.deps:
            return tuple(self.deps[name])
        return self.space.base_names

    def restrict_groupjets(self, e: Expr) -> Expr:
        """Zero out group jets in directions a component does not depend on."""
        if self.targets is not None or not self.deps:
            return e
        from .expr import substitute
        binds = {}
        for s in e.symbols():
            if s.kind == Kind.GROUP:
                allowed = set(self.dependency_names(s.name))
                if any(nm not in allowed for nm in s.index.names()):
                    binds[s] = ZERO
        return substitute(e, binds) if binds else e


@dataclass
class ProlongedAction:
    """Table of lifted targets: (dep, MultiIndex) -> Expr, plus the horizontal
    target expressions and accumulated assumptions."""

    space: JetSpace
    order: int
    horizontal: dict
    table: dict
    assumptions: AssumptionSet

    def entry(self, dep, index: MultiIndex) -> Expr:
        return self.table[(dep, index)]


def _solve_linear(matrix, rhs):
    """Solve M^T v = rhs over Expr by Gaussian elimination with division."""
    n = len(matrix)
    a = [[matrix[j][i] for j in range(n)] for i in range(n)]  # transpose
    b = list(rhs)
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not a[r][col].is_zero_expr():
                piv = r
                break
        if piv is None:
            raise SingularJacobian("total Jacobian is singular")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = ONE / a[col][col]
        a[col] = [v * inv for v in a[col]]
        b[col] = b[col] * inv
        for r in range(n):
            if r != col and not a[r][col].is_zero_expr():
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
                b[r] = b[r] - f * b[col]
    return b


def prolong(t: PointTransformation, q: int, constraints=None,
            substitutions=None) -> ProlongedAction:
    """Symbolic prolongation of a point transformation to order q.

    Uses the implicit total-Jacobian chain  D_{X^i} = sum_j (W^{-1})_{ij} D_j
    with W_{ij} = D_j X^i; in one variable this is D_X = (1/D_x X) D_x.
    ``substitutions`` (Sym -> Expr) are applied eagerly after every step to
    keep frame computations small.
    """
    space = t.space
    if q > space.max_order:
        raise OrderOverflow("prolongation order %d beyond max_order" % q)
    from .expr import normalize
    from .expr import substitute as esub

    def post(e):
        e = t.restrict_groupjets(e)
        if constraints is not None:
            e = constraints.filter_expr(e)
        if substitutions:
            e = esub(e, substitutions)
        return normalize(e)

    horizontal = {nm: post(t.component(nm)) for nm in space.independent}
    table = {}
    for dep in space.dependent:
        table[(dep, EMPTY)] = post(t.component(dep))

    assumptions = EMPTY_ASSUMPTIONS
    if q >= 1:
        w = [[post(space.total_derivative(horizontal[i], j, constraints))
              for j in space.independent] for i in space.independent]
        det = _det(w)
        if det.is_zero_expr():
            raise SingularJacobian("horizontal total Jacobian determinant is zero")
        assumptions = assumptions.with_nonzero(det)

    frontier = {(dep, EMPTY) for dep in space.dependent}
    for order in range(1, q + 1):
        new_frontier = set()
        done = set()
        for (dep, index) in sorted(frontier, key=lambda k: (k[0], k[1].key)):
            prev = table[(dep, index)]
            rhs = [post(space.total_derivative(prev, j, constraints))
                   for j in space.independent]
            sols = _solve_linear(w, rhs)
            for i_pos, i_name in enumerate(space.independent):
                nidx = index.bump(i_name)
                if (dep, nidx) in done:
                    continue
                table[(dep, nidx)] = post(sols[i_pos])
                done.add((dep, nidx))
                new_frontier.add((dep, nidx))
        frontier = new_frontier
    return ProlongedAction(space, q, horizontal, table, assumptions)


def _det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    total = ZERO
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


# ---------------------------------------------------------------------------
# numeric prolongation

def prolong_numeric(t: PointTransformation, q: int, point, constraints=None):
    """Prolonged-action table of exact Rationals at a bound point.

    Evaluation-first: target components become truncated germs (series in
    the independent variables along the section), and the implicit chain
    D_{X^i} = (W^{-1}) D runs in truncated-series arithmetic, never building
    the symbolic table.  ``point`` must bind every base coordinate, source
    jet and (for symbolic form) group jet that occurs.
    """
    space = t.space
    n = space.n
    germs = _target_germs(t, q, point, constraints)
    table = {}
    for dep in space.dependent:
        table[(dep, EMPTY)] = germs[dep]
    w = [[germs[i].diff(jpos) for jpos in range(n)]
         for i in space.independent]
    if _matrix_const_singular(w):
        raise SingularJacobian("total Jacobian singular at the point")
    kinv = _series_matrix_inverse([[w[j][i] for j in range(n)] for i in range(n)])
    frontier = {(dep, EMPTY) for dep in space.dependent}
    for order in range(1, q + 1):
        new_frontier = set()
        for (dep, index) in sorted(frontier, key=lambda k: (k[0], k[1].key)):
            prev = table[(dep, index)]
            rhs = [prev.diff(jpos) for jpos in range(n)]
            for i_pos, i_name in enumerate(space.independent):
                nidx = index.bump(i_name)
                if (dep, nidx) in table:
                    continue
                acc = None
                for jpos in range(n):
                    term = kinv[i_pos][jpos] * rhs[jpos]
                    acc = term if acc is None else acc + term
                table[(dep, nidx)] = acc
            new_frontier.update((dep, index.bump(i)) for i in space.independent)
        frontier = new_frontier
    return {key: germ.constant_term() for key, germ in table.items()}


def _as_value(v):
    """Accept exact Rationals or Exprs as jet values."""
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return v


def _target_germs(t, q, point, constraints):
    """Germs of the transformation components composed with the source section."""
    space = t.space
    n, names = space.n, space.independent
    depth = q + 1
    section = {}
    for dep in space.dependent:
        jets = {}
        jets[(0,) * n] = _as_value(_lookup(point, base(dep)))
        for idx in multiindices_upto(names, depth):
            if idx.order == 0:
                continue
            if constraints is not None and constraints.kills(dep, idx):
                continue
            val = point.get(jet(dep, idx))
            if val is None:
                continue
            jets[tuple(idx.count(nm) for nm in names)] = _as_value(val)
        section[dep] = series_from_jets(jets, names, depth)
    # centered germs of the independent coordinates themselves
    var_germ = {nm: TSeries.var(n, depth, i)
                + TSeries.const(n, depth, _as_value(_lookup(point, base(nm))))
                for i, nm in enumerate(names)}
    germs = {}
    for comp in space.base_names:
        if t.targets is not None:
            germs[comp] = _expr_germ(t.targets[comp], var_germ, section, point, n, depth)
        else:
            germs[comp] = _symbolic_component_germ(t, comp, var_germ, section, point, n, depth)
    return germs


def _expr_germ(e: Expr, var_germ, section, point, n, depth):
    num = _poly_germ(e.num, var_germ, section, point, n, depth)
    den = _poly_germ(e.den, var_germ, section, point, n, depth)
    return _series_div(num, den)


def _poly_germ(p, var_germ, section, point, n, depth):
    out = TSeries(n, depth)
    for m, c in p.terms.items():
        term = TSeries.const(n, depth, Fraction(c))
        for s, e in m:
            if s.kind == Kind.BASE and s.name in var_germ:
                g = var_germ[s.name]
            elif s.kind == Kind.BASE and s.name in section:
                g = section[s.name]
            else:
                v = _as_value(_lookup(point, s))
                g = TSeries.const(n, depth, v)
            for _ in range(e):
                term = term * g
        out = out + term
    return out


def _symbolic_component_germ(t, comp, var_germ, section, point, n, depth):
    """Germ of Z^comp(x, u(x)) from bound group-jet values (Taylor sum)."""
    space = t.space
    dep_names = t.dependency_names(comp)
    # centered increments of the arguments along the section
    increments = []
    arg_names = []
    for nm in dep_names:
        if nm in space.independent:
            g = var_germ[nm] - TSeries.const(n, depth, _as_value(_lookup(point, base(nm))))
        else:
            g = section[nm] - TSeries.const(n, depth, section[nm].constant_term())
        increments.append(g)
        arg_names.append(nm)
    arg_names = tuple(arg_names)
    jets = {}
    for idx in multiindices_upto(arg_names, depth):
        s = groupjet(comp, idx) if idx.order else groupjet(comp)
        v = point.get(s)
        if v is None:
            if idx.order == 0:
                raise UnboundSymbol(str(s))
            continue
        jets[tuple(idx.count(nm) for nm in arg_names)] = _as_value(v)
    taylor = series_from_jets(jets, arg_names, depth)
    return taylor.compose(increments)


def _value_is_zero(v) -> bool:
    if isinstance(v, (int, Fraction)):
        return v == 0
    return v.is_zero_expr()


def _series_div(a: TSeries, b: TSeries):
    c0 = b.constant_term()
    if _value_is_zero(c0):
        raise SingularJacobian("division by a series with zero constant term")
    order = min(a.order, b.order)
    inv0 = 1 / c0 if isinstance(c0, (int, Fraction)) else Expr.const(1) / c0
    binv = TSeries.const(b.nvars, order, inv0)
    rest = (b.truncate(order) - TSeries.const(b.nvars, order, c0)).scale(inv0)
    power = TSeries.const(b.nvars, order, Fraction(1))
    geom = TSeries.const(b.nvars, order, Fraction(1))
    for _ in range(order):
        power = power * (-rest)
        geom = geom + power
    return a.truncate(order) * geom * binv


def _series_matrix_inverse(m):
    """Inverse of a series matrix with invertible constant part (Gauss-Jordan)."""
    n = len(m)
    a = [row[:] for row in m]
    nv, order = a[0][0].nvars, a[0][0].order
    one = TSeries.const(nv, order, Fraction(1))
    zero = TSeries(nv, order)
    inv = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n)
                    if not _value_is_zero(a[r][col].constant_term())), None)
        if piv is None:
            raise SingularJacobian("series matrix not invertible")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        for r in range(n):
            if r != col:
                f = _series_div(a[r][col], a[col][col])
                a[r] = [v - f * u for v, u in zip(a[r], a[col])]
                inv[r] = [v - f * u for v, u in zip(inv[r], inv[col])]
    for r in range(n):
        d = a[r][r]
        inv[r] = [_series_div(v, d) for v in inv[r]]
    return inv


def _series_solve(w, rhs):
    """Solve W^T v = rhs over the truncated-series ring."""
    n = len(w)
    a = [[w[j][i] for j in range(n)] for i in range(n)]
    b = list(rhs)
    for col in range(n):
        piv = next((r for r in range(col, n)
                    if not _value_is_zero(a[r][col].constant_term())), None)
        if piv is None:
            raise SingularJacobian("total Jacobian singular at the point")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(n):
            if r != col:
                f = _series_div(a[r][col], a[col][col])
                a[r] = [v - f * u for v, u in zip(a[r], a[col])]
                b[r] = b[r] - f * b[col]
    return [_series_div(b[i], a[i][i]) for i in range(n)]


def _matrix_const_singular(w):
    n = len(w)
    m = [[entry.constant_term() for entry in row] for row in w]
    if any(not isinstance(v, (int, Fraction)) for row in m for v in row):
        det = _expr_det([[v if isinstance(v, Expr) else Expr.const(v) for v in row]
                         for row in m])
        return det.is_zero_expr()
    det = _fraction_det(m)
    return det == 0


def _expr_det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    total = ZERO
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _expr_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _fraction_det(m):
    n = len(m)
    m = [row[:] for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col]:
                f = m[r][col] * inv
                m[r] = [v - f * u for v, u in zip(m[r], m[col])]
    return det


def _lookup(point, s):
    if s not in point:
        raise UnboundSymbol(str(s))
    return Fraction(point[s])


# ---------------------------------------------------------------------------
# series-composition oracle and groupoid composition (independent route)

def prolong_series_oracle(t: PointTransformation, q: int, point, constraints=None):
    """Independent oracle: compose map and section, invert the base series,
    and read the transformed jets off the composed series."""
    space = t.space
    n = space.n
    germs = _target_germs(t, q, point, constraints)
    centered = [germs[nm] - TSeries.const(n, q + 1, germs[nm].constant_term())
                for nm in space.independent]
    inv = invert_map(centered, q + 1)
    out = {}
    for dep in space.dependent:
        transformed = germs[dep].compose(inv)
        for idx in multiindices_upto(space.independent, q):
            e = tuple(idx.count(nm) for nm in space.independent)
            out[(dep, idx)] = transformed.jet_value(e)
    return out


def compose_jet_maps(outer_jets, inner_jets, names, order):
    """Numeric jet composition (outer o inner) for maps of the full base.

    ``*_jets``: dict base-name -> dict exponent-tuple -> Fraction, jets taken
    at matching points (source of outer = target of inner).  Returns jets of
    the composition in the same format.
    """
    n = len(names)
    inner_series = {nm: series_from_jets(inner_jets[nm], names, order) for nm in names}
    centered = [inner_series[nm] - TSeries.const(n, order, inner_series[nm].constant_term())
                for nm in names]
    out = {}
    for nm in names:
        outer = series_from_jets(outer_jets[nm], names, order)
        composed = outer.compose(centered)
        jets = {}
        for e in outer_enum(n, order):
            jets[e] = composed.jet_value(e)
        out[nm] = jets
    return out


def outer_enum(n, order):
    out = []
    for total in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


# ---------------------------------------------------------------------------
# flat coordinates of a section graph

def flat_frame(space: JetSpace, section_jets):
    """The derivation d/dy^i = d/dx^i + u^a_i d/du^a restricted to a graph.

    ``section_jets`` maps (dep, MultiIndex) -> Expr giving the section's jets
    (an entry for every jet that can occur up to the needed order).  Returns
    ``apply(e, i_name)`` computing one flat derivative.
    """
    def lookup(dep, index):
        key = (dep, index)
        if key in section_jets:
            return _as_expr(section_jets[key])
        raise UnboundSymbol("section jet %s[%s]" % (dep, index))

    def apply(e: Expr, i_name: str) -> Expr:
        out = diff(e, base(i_name))
        for s in sorted(e.symbols(), key=lambda t: t.key):
            de = diff(e, s)
            if de.is_zero_expr():
                continue
            if s.kind == Kind.BASE and s.name in space.dependent:
                out = out + lookup(s.name, MultiIndex.of(i_name)) * de
            elif s.kind == Kind.JET and not s.name.startswith("@"):
                out = out + lookup(s.name, s.index.bump(i_name)) * de
            elif s.kind == Kind.GROUP:
                term = Expr.sym(groupjet(s.name, s.index.bump(i_name)))
                for dep in space.dependent:
                    term = term + lookup(dep, MultiIndex.of(i_name)) \
                        * Expr.sym(groupjet(s.name, s.index.bump(dep)))
                out = out + term * de
        return out

    return apply


def _as_expr(v):
    if isinstance(v, Expr):
        return v
    return Expr.const(v)
