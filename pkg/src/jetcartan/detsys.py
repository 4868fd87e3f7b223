"""Determining systems of Lie pseudo-groups in solved (orthonomic) form.

A system is a list of equations ``principal group jet = rhs`` whose
right-hand sides, after recursive substitution of principal jets, involve
parametric jets only.  Closure under total differentiation is computed on
demand: every prolongation of a pivot stays principal, and colliding
derivations of one jet must agree (`InconsistentSystem` otherwise).

The structural partition (which jets are principal) is combinatorial:
a jet is principal iff its (component, index) dominates some pivot.
Expressions are only materialized when reduced right-hand sides or
numeric jet values are requested.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InconsistentSystem, RankDeficient, Undetermined, UnboundSymbol
from .expr import (AssumptionSet, EMPTY_ASSUMPTIONS, Expr, ZERO, diff as ediff,
                   eval_rational, is_zero, normalize, sample_point, substitute)
from .jets import JetSpace, multiindices, multiindices_upto
from .series import TSeries, series_from_jets
from .symbols import EMPTY, Kind, MultiIndex, Sym, base, groupjet, jet


@dataclass(frozen=True)
class Equation:
    """principal = rhs; the declared generating equations are order-bounded."""

    principal: Sym
    rhs: Expr

    @property
    def order(self):
        jets = [s.index.order for s in self.rhs.symbols() if s.kind == Kind.GROUP]
        return max([self.principal.index.order] + jets)


class DeterminingSystem:
    """Solved-form defining system for a sub-pseudo-group of Diff(E)."""

    def __init__(self, space: JetSpace, equations, t_max=8,
                 assumptions: AssumptionSet = EMPTY_ASSUMPTIONS):
        self.space = space
        self.equations = tuple(equations)
        self.t_max = t_max
        self.assumptions = assumptions
        seen = {}
        for eq in self.equations:
            if eq.principal.kind != Kind.GROUP:
                raise ValueError("principal symbol must be a group jet")
            if eq.principal in seen:
                raise InconsistentSystem("principal %s declared twice" % eq.principal)
            seen[eq.principal] = eq
        self._pivots = seen
        self._reduced = {}          # Sym -> fully substituted rhs
        self._derivation = {}       # Sym -> (parent Sym, direction) for prolonged pivots

    # -- structural partition -------------------------------------------------

    def is_principal(self, s: Sym) -> bool:
        if s.kind != Kind.GROUP:
            raise ValueError("not a group jet: %s" % s)
        return any(s.name == p.name and s.index.contains(p.index)
                   for p in self._pivots)

    def parametric_jets(self, order, exact=False):
        """Parametric group jets of order == order (exact) or <= order."""
        out = []
        orders = [order] if exact else range(order + 1)
        for k in orders:
            for comp in self.space.base_names:
                for idx in multiindices(self.space.base_names, k):
                    s = groupjet(comp, idx)
                    if not self.is_principal(s):
                        out.append(s)
        return out

    def partition(self, order):
        """JetPartition of all jets up to ``order``."""
        par, pri = [], []
        for k in range(order + 1):
            for comp in self.space.base_names:
                for idx in multiindices(self.space.base_names, k):
                    s = groupjet(comp, idx)
                    (pri if self.is_principal(s) else par).append(s)
        return JetPartition(frozenset(par), frozenset(pri), order)

    # -- reduced right-hand sides ---------------------------------------------

    def reduced_rhs(self, s: Sym, _stack=None) -> Expr:
        """Rhs of a principal jet, with principal jets substituted recursively
        and the result expressed in parametric jets and base coordinates."""
        if s in self._reduced:
            return self._reduced[s]
        if s.index.order > self.t_max:
            raise Undetermined("jet %s beyond declared t_max %d" % (s, self.t_max))
        _stack = _stack or set()
        if s in _stack:
            raise InconsistentSystem("cyclic dependency through %s" % s)
        _stack = _stack | {s}
        eq = self._pivots.get(s)
        if eq is not None:
            raw = eq.rhs
        else:
            parent, direction = self._derivation_of(s)
            raw = self._group_total_derivative(self.reduced_rhs(parent, _stack), direction)
        value = self._substitute_principals(raw, _stack)
        self._reduced[s] = value
        return value

    def _derivation_of(self, s: Sym):
        """Deterministic parent pivot and direction for a prolonged principal jet."""
        if s in self._derivation:
            return self._derivation[s]
        candidates = []
        for p in self._pivots:
            if s.name == p.name and s.index.contains(p.index) and s.index != p.index:
                candidates.append(p)
        if not candidates:
            raise InconsistentSystem("jet %s is not principal" % s)
        # longest pivot wins, then pick the alphabetically first direction
        p = max(candidates, key=lambda c: (c.index.order, c.index.key))
        rest = dict(s.index.pairs)
        for nm, c in p.index.pairs:
            rest[nm] -= c
        direction = sorted(nm for nm, c in rest.items() if c > 0)[0]
        parent = groupjet(s.name, s.index.drop(direction))
        self._derivation[s] = (parent, direction)
        return parent, direction

    def _group_total_derivative(self, e: Expr, direction: str) -> Expr:
        """Prolongation derivative on group-jet expressions:
        D_a = d/dz^a + sum Z^c_{B,a} d/dZ^c_B."""
        out = ediff(e, base(direction))
        for s in sorted(e.symbols(), key=lambda t: t.key):
            if s.kind != Kind.GROUP:
                continue
            de = ediff(e, s)
            if not de.is_zero_expr():
                out = out + Expr.sym(groupjet(s.name, s.index.bump(direction))) * de
        return out

    def _substitute_principals(self, e: Expr, _stack):
        guard = 64
        while guard:
            guard -= 1
            binds = {}
            for s in e.symbols():
                if s.kind == Kind.GROUP and self.is_principal(s):
                    binds[s] = self.reduced_rhs(s, _stack)
            if not binds:
                return normalize(e)
            e = substitute(e, binds)
        raise InconsistentSystem("principal substitution did not terminate")

    # -- consistency / closure -------------------------------------------------

    def prolong_system(self, to_order, check_consistency=True, seed=0):
        """Symbolically closes the system to ``to_order``; verifies that every
        multi-path derivation of a principal jet is is_zero-consistent."""
        if to_order > self.t_max:
            raise Undetermined("closure beyond t_max")
        for k in range(to_order + 1):
            for comp in self.space.base_names:
                for idx in multiindices(self.space.base_names, k):
                    s = groupjet(comp, idx)
                    if not self.is_principal(s):
                        continue
                    val = self.reduced_rhs(s)
                    if check_consistency:
                        self._check_all_derivations(s, val, seed)
        return self

    def _check_all_derivations(self, s: Sym, val: Expr, seed):
        for p in self._pivots:
            if not (s.name == p.name and s.index.contains(p.index) and s.index != p.index):
                continue
            rest = dict(s.index.pairs)
            for nm, c in p.index.pairs:
                rest[nm] -= c
            for direction in sorted(nm for nm, c in rest.items() if c > 0):
                parent = groupjet(s.name, s.index.drop(direction))
                if not self.is_principal(parent):
                    continue
                other = self._substitute_principals(
                    self._group_total_derivative(self.reduced_rhs(parent), direction), set())
                delta = other - val
                if delta.is_zero_expr():
                    continue
                if not is_zero(delta, self.assumptions, seed=seed, trials=4):
                    raise InconsistentSystem(
                        "two solved forms for %s disagree (via %s_%s)" % (s, parent, direction))

    # -- orders and quasi-horizontality -----------------------------------------

    def generating_orders(self):
        return sorted({eq.order for eq in self.equations})

    def system_order(self) -> int:
        """Smallest t* such that every generating equation of order > t* is a
        direct prolongation consequence of the order-<= t* truncation."""
        orders = [eq.order for eq in self.equations]
        top = max(orders)
        for t in range(min(orders), top + 1):
            if t > self.t_max:
                break
            if self._truncation_certifies(t):
                return t
        if top <= self.t_max:
            return top
        raise Undetermined("t_max too small to certify the system order")

    def _truncation_certifies(self, t) -> bool:
        lower = [eq for eq in self.equations if eq.order <= t]
        higher = [eq for eq in self.equations if eq.order > t]
        if not higher:
            return True
        if not lower:
            return False
        sub = DeterminingSystem(self.space, lower, t_max=self.t_max,
                                assumptions=self.assumptions)
        for eq in higher:
            s = eq.principal
            if not sub.is_principal(s):
                return False
            try:
                derived = sub.reduced_rhs(s)
                target = sub._substitute_principals(eq.rhs, set())
            except (Undetermined, InconsistentSystem):
                return False
            delta = derived - target
            if delta.is_zero_expr():
                continue
            if not is_zero(delta, self.assumptions, seed=17, trials=4):
                return False
        return True

    def quasi_horizontal(self):
        """(True, r) with minimal r >= t* such that every order-r group jet with
        a dependent-variable derivative is principal, else (False, None)."""
        t_star = self.system_order()
        deps = set(self.space.dependent)
        for r in range(t_star, self.t_max + 1):
            ok = True
            for comp in self.space.base_names:
                for idx in multiindices(self.space.base_names, r):
                    if not any(idx.count(d) for d in deps):
                        continue
                    if not self.is_principal(groupjet(comp, idx)):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                # stability: definition guarantees all r' >= r once it holds
                return True, r
        return False, None

    def groupoid_dim(self, q) -> int:
        """Fiber dimension of H_q: number of parametric jets of order <= q."""
        if q > self.t_max:
            raise Undetermined("order beyond t_max")
        return len(self.parametric_jets(q))

    # -- numeric jets -----------------------------------------------------------

    def numeric_jets(self, parametric_values, point, order):
        """All group-jet values up to ``order`` from parametric values and a
        base point.

        Principal values come from Taylor coefficients of the generating
        right-hand sides (each pivot equation is evaluated as a truncated
        germ around the point), so no large symbolic prolongation is ever
        materialized.  Parametric jets must all be supplied.
        """
        supplied = dict(parametric_values)
        values = {}
        names = self.space.base_names
        nb = len(names)
        in_progress = set()

        def as_value(v):
            return Fraction(v) if isinstance(v, (int, Fraction)) else v

        def vz(v):
            return v == 0 if isinstance(v, (int, Fraction)) else v.is_zero_expr()

        def val(s: Sym):
            if s in supplied:
                return as_value(supplied[s])
            if s in values:
                return values[s]
            if not self.is_principal(s):
                raise UnboundSymbol("parametric jet %s not supplied" % s)
            if s in in_progress:
                raise InconsistentSystem("cyclic numeric dependency at %s" % s)
            in_progress.add(s)
            pivot_eq, fidx = self._cone_derivation(s)
            tc = taylor_coeff(pivot_eq.rhs, fidx)
            mult = 1
            for _, c in fidx.pairs:
                for j in range(1, c + 1):
                    mult *= j
            v = tc * mult
            in_progress.discard(s)
            values[s] = v
            return v

        def sym_germ(s: Sym, bound: MultiIndex, trunc: int) -> TSeries:
            """Germ truncated componentwise at ``bound`` and in total order at
            ``trunc`` (all a Taylor coefficient below those can consume);
            the componentwise bound avoids spurious cycles."""
            if s.kind == Kind.BASE:
                i = names.index(s.name)
                g = TSeries.var(nb, trunc, i)
                return g + TSeries.const(nb, trunc, as_value(point[base(s.name)]))
            if s.kind != Kind.GROUP:
                raise UnboundSymbol("unexpected symbol %s in determining equation" % s)
            jets = {}
            for g in _subindices(bound):
                if g.order > trunc:
                    continue
                v = val(groupjet(s.name, s.index.add(g)))
                if not vz(v):
                    jets[tuple(g.count(nm) for nm in names)] = v
            return series_from_jets(jets, names, trunc)

        def taylor_germ(e: Expr, bound: MultiIndex, trunc: int) -> TSeries:
            num = _poly_taylor(e.num, bound, trunc)
            den = TSeries.const(nb, trunc, Fraction(1))
            for f, k in e.factors:
                den = den * _power_series(_poly_taylor(f, bound, trunc), k)
            if vz(den.constant_term()):
                raise RankDeficient("denominator vanishes along the germ")
            return _series_divide(num, den)

        def taylor_coeff(e: Expr, fidx: MultiIndex):
            quotient = taylor_germ(e, fidx, fidx.order)
            e_tuple = tuple(fidx.count(nm) for nm in names)
            return quotient.coeffs.get(e_tuple, Fraction(0))

        def _poly_taylor(p, bound, trunc) -> TSeries:
            out = TSeries(nb, trunc)
            for m, c in p.terms.items():
                term = TSeries.const(nb, trunc, Fraction(c))
                for s, e in m:
                    g = sym_germ(s, bound, trunc)
                    for _ in range(e):
                        term = term * g
                out = out + term
            return out

        def _power_series(g: TSeries, k: int) -> TSeries:
            out = TSeries.const(nb, g.order, Fraction(1))
            for _ in range(k):
                out = out * g
            return out

        def _series_divide(a: TSeries, b: TSeries) -> TSeries:
            c0 = b.constant_term()
            inv0 = 1 / c0 if isinstance(c0, (int, Fraction)) else Expr.const(1) / c0
            inv = TSeries.const(nb, a.order, inv0)
            rest = (b - TSeries.const(nb, b.order, c0)).scale(inv0)
            power = TSeries.const(nb, a.order, Fraction(1))
            geom = TSeries.const(nb, a.order, Fraction(1))
            for _ in range(a.order):
                power = power * (-rest)
                geom = geom + power
            return a * geom * inv

        # bulk pass: one rhs germ per (pivot, level) covers its whole cone slice;
        # stragglers (same jet under a longer pivot) fall back to val().
        pivots = sorted(self._pivots.values(),
                        key=lambda eq: (-eq.principal.index.order, eq.principal.key))
        for k in range(1, order + 1):
            for eq in pivots:
                kk = k - eq.principal.index.order
                if kk < 0:
                    continue
                pending = []
                for fidx in multiindices(names, kk):
                    s = groupjet(eq.principal.name, eq.principal.index.add(fidx))
                    if s in values or s in supplied:
                        continue
                    peq, pf = self._cone_derivation(s)
                    if peq.principal == eq.principal:
                        pending.append((s, fidx))
                if not pending:
                    continue
                bound = MultiIndex.from_counts(
                    {nm: max(f.count(nm) for _, f in pending) for nm in names})
                germ = taylor_germ(eq.rhs, bound, kk)
                for s, fidx in pending:
                    mult = 1
                    for _, c in fidx.pairs:
                        for j in range(1, c + 1):
                            mult *= j
                    e_tuple = tuple(fidx.count(nm) for nm in names)
                    values[s] = germ.coeffs.get(e_tuple, Fraction(0)) * mult

        out = dict(point)
        for k in range(order + 1):
            for comp in names:
                for idx in multiindices(names, k):
                    s = groupjet(comp, idx)
                    out[s] = val(s)
        return out

    def _cone_derivation(self, s: Sym):
        """(pivot equation, offset multi-index) for a principal jet."""
        best = None
        for p, eq in self._pivots.items():
            if s.name == p.name and s.index.contains(p.index):
                if best is None or (p.index.order, p.index.key) > (best[0].principal.index.order,
                                                                   best[0].principal.index.key):
                    best = (eq,)
        if best is None:
            raise InconsistentSystem("jet %s is not principal" % s)
        eq = best[0]
        rest = dict(s.index.pairs)
        for nm, c in eq.principal.index.pairs:
            rest[nm] -= c
        return eq, MultiIndex.from_counts(rest)


def _subindices(fidx: MultiIndex):
    """All multi-indices componentwise <= fidx."""
    items = fidx.pairs

    def rec(i, acc):
        if i == len(items):
            yield MultiIndex.from_counts(dict(acc))
            return
        n, c = items[i]
        for take in range(c + 1):
            acc[n] = take
            yield from rec(i + 1, acc)
        del acc[n]

    yield from rec(0, {})


@dataclass(frozen=True)
class JetPartition:
    """Disjoint parametric/principal split of all group jets up to an order."""

    parametric: frozenset
    principal: frozenset
    order: int

    def dim(self):
        return len(self.parametric)
