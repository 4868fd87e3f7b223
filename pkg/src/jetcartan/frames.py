"""Equivariant moving frames: linearized prolonged action, the recurrence
formula, normalization with branch tracking, structure equations on the
frame, and Lie-Tresse generator extraction.

The linearization of the prolonged action at the identity jet is computed
by the first-variation recursion

    eta^a_{J,i} = D_i eta^a_J - sum_j u^a_{J,j} D_i xi^j,

which is polynomial in source jets and linear in the variation modes (the
group-jet symbols), so no symbolic prolongation table is needed for
recurrence rows.  Pull-back along the target map replaces source jets by
lifted-invariant symbols ('@'-prefixed); restricting the Maurer-Cartan
forms to the pseudo-group rewrites principal modes through the linearized
determining equations, whose coefficients are functions of the order-0
target invariants (= normalized constants on the frame).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import (AmbiguousSolve, IncompleteFrame, MissingLinearization,
                     NotSolvable, OrderOverflow)
from .expr import (AssumptionSet, EMPTY_ASSUMPTIONS, Expr, ONE, ZERO,
                   diff as ediff, is_zero, normalize as enormalize, serialize,
                   substitute as esub)
from .forms import (CoframeBasis, Form, GenKind, StructureRules,
                    exterior_derivative, reduce_mod_contact,
                    substitute_generators, wedge)
from .detsys import DeterminingSystem
from .jets import JetConstraints, JetSpace, PointTransformation, prolong
from .symbols import EMPTY, Kind, MultiIndex, Sym, base, groupjet, jet, lifted


@dataclass(frozen=True)
class Problem:
    """A pseudo-group acting on a jet space, with optional branch constraints."""

    space: JetSpace
    system: DeterminingSystem
    deps: dict | None = None              # symbol-omission shape of the action
    constraints: JetConstraints | None = None
    assumptions: AssumptionSet = EMPTY_ASSUMPTIONS
    node_budget: int = 100000
    symbolic_solves: bool = True          # attempt closed forms for solved parameters

    def transformation(self):
        return PointTransformation(self.space, deps=self.deps)

    def engine(self):
        return _Engine.for_problem(self)


def _target_sym(name):
    """Order-0 lifted invariant of a base coordinate (identity-swap symbol)."""
    return lifted(name, EMPTY)


class _Engine:
    """Caches of state-independent data: eta rows and Maurer-Cartan relations."""

    _instances = {}

    @classmethod
    def for_problem(cls, problem):
        key = id(problem)
        inst = cls._instances.get(key)
        if inst is None or inst.problem is not problem:
            inst = cls(problem)
            cls._instances[key] = inst
        return inst

    def __init__(self, problem: Problem):
        self.problem = problem
        self.space = problem.space
        self.basis = CoframeBasis(self.space.base_names, self.space.n)
        self._eta = {}
        self._relations = {}
        self._xi_der = {}

    # -- first variation of the prolonged action -------------------------------

    def eta(self, dep, index: MultiIndex) -> Expr:
        key = (dep, index)
        if key in self._eta:
            return self._eta[key]
        space, constraints = self.space, self.problem.constraints
        t = self.problem.transformation()
        if index.order == 0:
            out = t.restrict_groupjets(Expr.sym(groupjet(dep)))
        else:
            i = index.names()[0]
            prev = self.eta(dep, index.drop(i))
            out = space.total_derivative(prev, i, constraints)
            for j in space.independent:
                jj = index.drop(i).bump(j)
                coeff = self._jet_expr(dep, jj)
                out = out - coeff * self._xi_derivative(j, i)
            out = t.restrict_groupjets(out)
        self._eta[key] = out
        return out

    def _jet_expr(self, dep, index):
        if self.problem.constraints is not None and self.problem.constraints.kills(dep, index):
            return ZERO
        return Expr.sym(self.space.jet_sym(dep, index))

    def _xi_derivative(self, j, i):
        key = (j, i)
        if key not in self._xi_der:
            t = self.problem.transformation()
            e = self.space.total_derivative(Expr.sym(groupjet(j)), i,
                                            self.problem.constraints)
            self._xi_der[key] = t.restrict_groupjets(e)
        return self._xi_der[key]

    def linearize(self, dep, index: MultiIndex) -> dict:
        """Group jet -> Expr coefficient of the identity linearization of
        the lifted invariant (dep, index), in source jet coordinates."""
        e = self.eta(dep, index)
        out = {}
        for s in sorted(e.symbols(), key=lambda t: t.key):
            if s.kind != Kind.GROUP:
                continue
            c = ediff(e, s)
            if not c.is_zero_expr():
                out[s] = c
        return out

    # -- Maurer-Cartan relations from the determining system --------------------

    def mc_relation(self, s: Sym) -> dict:
        """Row {parametric mode -> Expr in target symbols} with
        mu^s = sum coeff * mu^mode on the sub-pseudo-group."""
        if s in self._relations:
            return self._relations[s]
        system = self.problem.system
        eq, offset = system._cone_derivation(s)
        row = self._base_row(eq.principal)
        for name in offset.names():
            row = self._prolong_row(row, name)
        row = self._expand_principal_modes(row, depth=0)
        self._relations[s] = row
        return row

    def _base_row(self, pivot: Sym) -> dict:
        system = self.problem.system
        rhs = system.reduced_rhs(pivot)
        identity = {}
        for sym in rhs.symbols():
            if sym.kind == Kind.BASE:
                identity[sym] = Expr.sym(_target_sym(sym.name))
            elif sym.kind == Kind.GROUP:
                if sym.index.order == 0:
                    identity[sym] = Expr.sym(_target_sym(sym.name))
                elif sym.index.order == 1:
                    nm = sym.index.names()[0]
                    identity[sym] = ONE if nm == sym.name else ZERO
                else:
                    identity[sym] = ZERO
        row = {}
        for sym in sorted(rhs.symbols(), key=lambda t: t.key):
            if sym.kind != Kind.GROUP:
                continue
            c = esub(ediff(rhs, sym), identity)
            if not c.is_zero_expr():
                row[sym] = c
        return row

    def _prolong_row(self, row: dict, direction: str) -> dict:
        out = {}
        dsym = _target_sym(direction)
        for mode, coeff in row.items():
            dc = ediff(coeff, dsym)
            if not dc.is_zero_expr():
                out[mode] = out.get(mode, ZERO) + dc
            shifted = groupjet(mode.name, mode.index.bump(direction))
            out[shifted] = out.get(shifted, ZERO) + coeff
        return {m: c for m, c in out.items() if not c.is_zero_expr()}

    def _expand_principal_modes(self, row: dict, depth: int) -> dict:
        if depth > 12:
            raise MissingLinearization("Maurer-Cartan relation expansion too deep")
        system = self.problem.system
        out = {}
        again = False
        for mode, coeff in row.items():
            if self._mode_omitted(mode):
                continue
            if system.is_principal(mode):
                sub = self.mc_relation(mode) if mode in self._relations else None
                if sub is None:
                    sub = self._relation_unexpanded(mode)
                    again = True
                for m2, c2 in sub.items():
                    out[m2] = out.get(m2, ZERO) + coeff * c2
            else:
                out[mode] = out.get(mode, ZERO) + coeff
        out = {m: c for m, c in out.items() if not c.is_zero_expr()}
        if again and any(system.is_principal(m) for m in out):
            return self._expand_principal_modes(out, depth + 1)
        return out

    def _relation_unexpanded(self, s: Sym) -> dict:
        system = self.problem.system
        eq, offset = system._cone_derivation(s)
        row = self._base_row(eq.principal)
        for name in offset.names():
            row = self._prolong_row(row, name)
        return row

    def _mode_omitted(self, mode: Sym) -> bool:
        t = self.problem.transformation()
        allowed = set(t.dependency_names(mode.name))
        return any(nm not in allowed for nm in mode.index.names())


@dataclass(frozen=True)
class RecurrenceRow:
    """d(lifted invariant) = sum_i horizontal[i] w^i + sum mc[mode] mu^mode."""

    horizontal: tuple   # ((independent name, Expr), ...)
    mc: tuple           # ((GroupJet Sym, Expr), ...)

    def horizontal_dict(self):
        return dict(self.horizontal)

    def mc_dict(self):
        return dict(self.mc)


@dataclass(frozen=True)
class Normalization:
    kind: str            # 'target' or 'jet'
    dep: str
    index: MultiIndex
    value: Fraction
    solve_for: Sym | None


@dataclass(frozen=True)
class FrameState:
    """Immutable partial moving frame."""

    problem: Problem
    normalizations: tuple = ()
    constants: tuple = ()        # (lifted Sym, Expr) pairs
    mc_subs: tuple = ()          # (Generator, Form) pairs, in solve order
    solved: tuple = ()           # (GroupJet Sym, Expr | None) pairs
    assumptions: AssumptionSet = EMPTY_ASSUMPTIONS

    # -- views ------------------------------------------------------------------

    @property
    def engine(self):
        return self.problem.engine()

    def constants_dict(self):
        return dict(self.constants)

    def solved_dict(self):
        return dict(self.solved)

    def solved_params(self):
        return [s for s, _ in self.solved]

    def all_assumptions(self):
        return self.problem.assumptions.union(
            self.problem.system.assumptions).union(self.assumptions)

    # -- rows ---------------------------------------------------------------------

    def row_form(self, dep, index: MultiIndex, substitute_vertical=True) -> Form:
        """Reduced recurrence row of the lifted invariant (dep, index) as a 1-form."""
        engine = self.engine
        basis = engine.basis
        space = self.problem.space
        total = Form.zero(1)
        if dep in space.independent and index.order == 0:
            total = total + Form.gen(basis.horizontal(dep))
            total = total + Form.gen(basis.mc(dep))
            return self.reduce_form(total, substitute_vertical)
        for i in space.independent:
            c = self._lifted_coeff(dep, index.bump(i))
            if not c.is_zero_expr():
                total = total + Form.gen(basis.horizontal(i)).scale(c)
        lin = engine.linearize(dep, index)
        for mode, coeff in sorted(lin.items(), key=lambda it: it[0].key):
            pulled = self._pullback(coeff)
            if not pulled.is_zero_expr():
                total = total + Form.gen(basis.mc(mode.name, mode.index)).scale(pulled)
        return self.reduce_form(total, substitute_vertical)

    def recurrence(self, dep, index: MultiIndex) -> RecurrenceRow:
        form = self.row_form(dep, index)
        horizontal, mc = [], []
        for gens, coeff in sorted(form.terms.items(), key=lambda it: it[0][0].key):
            g = gens[0]
            if g.kind == GenKind.HORIZONTAL:
                horizontal.append((g.name, coeff))
            elif g.kind == GenKind.MC:
                mc.append((groupjet(g.name, g.index), coeff))
        return RecurrenceRow(tuple(horizontal), tuple(mc))

    def _lifted_coeff(self, dep, index) -> Expr:
        if self.problem.constraints is not None and self.problem.constraints.kills(dep, index):
            return ZERO
        s = lifted(dep, index)
        cons = self.constants_dict()
        if s in cons:
            return cons[s]
        return Expr.sym(s)

    def _pullback(self, coeff: Expr) -> Expr:
        """Source jets -> lifted invariant symbols, then normalized constants."""
        binds = {}
        space = self.problem.space
        for s in coeff.symbols():
            if s.kind == Kind.JET and not s.name.startswith("@"):
                binds[s] = self._lifted_coeff(s.name, s.index)
            elif s.kind == Kind.BASE and s.name in space.dependent:
                binds[s] = self._lifted_coeff(s.name, EMPTY)
            elif s.kind == Kind.BASE:
                binds[s] = self._constant_or(_target_sym(s.name))
        return esub(coeff, binds) if binds else coeff

    def _constant_or(self, s: Sym) -> Expr:
        cons = self.constants_dict()
        return cons.get(s, Expr.sym(s))

    # -- form reduction through the frame ------------------------------------------

    def reduce_form(self, form: Form, substitute_vertical=True) -> Form:
        engine = self.engine
        basis = engine.basis
        space = self.problem.space
        system = self.problem.system
        subs_recorded = dict(self.mc_subs)
        for _ in range(40):
            mapping = {}
            for g in sorted(form.generators(), key=lambda t: t.key):
                if g.kind == GenKind.MC:
                    param = groupjet(g.name, g.index)
                    if g in subs_recorded:
                        mapping[g] = subs_recorded[g]
                    elif system.is_principal(param):
                        mapping[g] = self._relation_form(param)
                elif (g.kind == GenKind.HORIZONTAL and substitute_vertical
                      and g.name in space.dependent):
                    repl = Form.zero(1)
                    for i in space.independent:
                        c = self._lifted_coeff(g.name, MultiIndex.of(i))
                        if not c.is_zero_expr():
                            repl = repl + Form.gen(basis.horizontal(i)).scale(c)
                    mapping[g] = repl
            if not mapping:
                break
            form = substitute_generators(form, mapping)
        form = form.map_coefficients(self._substitute_constants)
        return form

    def _relation_form(self, param: Sym) -> Form:
        engine = self.engine
        row = engine.mc_relation(param)
        out = Form.zero(1)
        for mode, coeff in sorted(row.items(), key=lambda it: it[0].key):
            c = self._substitute_constants(coeff)
            if not c.is_zero_expr():
                out = out + Form.gen(engine.basis.mc(mode.name, mode.index)).scale(c)
        return out

    def _substitute_constants(self, e: Expr) -> Expr:
        cons = self.constants_dict()
        binds = {s: v for s, v in cons.items() if s in e.symbols()}
        return esub(e, binds) if binds else e

    # -- normalization ----------------------------------------------------------------

    def normalize(self, dep, index: MultiIndex, value, solve_for: Sym | None) -> "FrameState":
        """Set the lifted invariant (dep, index) to a constant, consuming the
        designated parameter.  dep may be an independent name with empty index
        (an order-0 target normalization)."""
        value = Expr.const(value) if not isinstance(value, Expr) else value
        sym = lifted(dep, index)
        interim = replace(self, constants=self.constants + ((sym, value),))
        row = interim.row_form(dep, index)
        mc_part = [(g, c) for gens, c in row.terms.items()
                   for g in gens if g.kind == GenKind.MC]
        if solve_for is None:
            if mc_part:
                free = [groupjet(g.name, g.index) for g, _ in mc_part]
                if len(free) == 1:
                    solve_for = free[0]
                else:
                    raise AmbiguousSolve(
                        "normalize %s[%s]: free generators %s; name a solve-for"
                        % (dep, index, free))
            else:
                norm = Normalization("jet", dep, index, value, None)
                return replace(interim, normalizations=self.normalizations + (norm,))
        gen = self.engine.basis.mc(solve_for.name, solve_for.index)
        coeff = None
        for g, c in mc_part:
            if g == gen:
                coeff = c
                break
        if coeff is None:
            raise NotSolvable(
                "normalize %s[%s]: generator mu^%s not free in the row (free: %s)"
                % (dep, index, solve_for, [str(g) for g, _ in mc_part]))
        assumptions = self.assumptions
        if not coeff.is_const():
            assumptions = assumptions.with_nonzero(coeff)
        elif coeff.const_value() == 0:
            raise NotSolvable("coefficient of mu^%s is zero" % solve_for)
        rest = Form(1, {gens: c for gens, c in row.terms.items() if gens != (gen,)})
        sub = rest.scale(ONE / coeff).__neg__()
        norm = Normalization("jet" if index.order or dep not in self.problem.space.independent
                             else "target", dep, index, value, solve_for)
        closed = self._closed_form_attempt(dep, index, value, solve_for)
        return replace(
            interim,
            normalizations=self.normalizations + (norm,),
            mc_subs=self.mc_subs + ((gen, sub),),
            solved=self.solved + ((solve_for, closed),),
            assumptions=assumptions,
        )

    def _closed_form_attempt(self, dep, index, value, solve_for):
        """Solve the frame-reduced lifted invariant for the parameter when the
        cleared numerator is linear in it and the symbolic expression stays
        within the node budget; otherwise None (numeric-only)."""
        if index.order == 0 and solve_for == groupjet(dep):
            return Expr.const(value) if not isinstance(value, Expr) else value
        if not self.problem.symbolic_solves:
            return None
        try:
            expr = self.invariant_expression(dep, index)
        except (OrderOverflow, MemoryError):
            return None
        if expr is None:
            return None
        target = expr - value
        num = target.num
        if num.degree_in(solve_for) != 1:
            return None
        a = num.coeff_of(solve_for, 1)
        b = num.coeff_of(solve_for, 0)
        if a.is_zero():
            return None
        closed = Expr(-b, ()) / Expr(a, ())
        return self._apply_solved(closed)

    def _apply_solved(self, e: Expr) -> Expr:
        for _ in range(len(self.solved) + 1):
            binds = {}
            for s, v in self.solved:
                if v is not None and s in e.symbols():
                    binds[s] = v
            if not binds:
                break
            e = esub(e, binds)
        return e

    # -- frame-reduced invariant expressions -------------------------------------------

    def parameter_bindings(self, order):
        """Determining-system reductions (principal jet -> reduced rhs) up to
        ``order``.  These are functional identities on E, so they may be
        substituted into the transformation before prolongation.  Frame-solved
        values hold only on the frame and are substituted afterwards."""
        from .errors import Undetermined
        from .jets import multiindices_upto
        system = self.problem.system
        binds = {}
        for idx in multiindices_upto(self.problem.space.base_names, order):
            if idx.order == 0:
                continue
            for comp in self.problem.space.base_names:
                s = groupjet(comp, idx)
                if system.is_principal(s):
                    try:
                        binds[s] = system.reduced_rhs(s)
                    except Undetermined:
                        continue
        return binds

    def invariant_expression(self, dep, index: MultiIndex) -> Expr | None:
        """Lifted invariant as an Expr in source jets and free parameters, with
        determining-system reductions and solved parameters substituted.
        Returns None when the computation exceeds the node budget."""
        space = self.problem.space
        if dep in space.independent and index.order == 0:
            return self._constant_or(_target_sym(dep))
        order = index.order
        binds = self.parameter_bindings(order + 1)
        t = self.problem.transformation()
        try:
            pa = prolong(t, order, constraints=self.problem.constraints,
                         substitutions=binds)
        except OrderOverflow:
            return None
        e = pa.entry(dep, index)
        if len(e.num.terms) > self.problem.node_budget:
            return None
        return self._apply_solved(e)

    # -- structure equations --------------------------------------------------------

    def horizontal_structure(self, substitute_vertical=True):
        """d w^i for the independent directions, reduced on the frame."""
        engine = self.engine
        out = []
        for name in self.problem.space.independent:
            raw = -engine.basis.mc_structure(name, EMPTY)
            out.append(self.reduce_form(raw, substitute_vertical))
        return out

    def dmu_structure(self, comp, index: MultiIndex, substitute_vertical=True) -> Form:
        """d mu^comp_index reduced on the frame (for prolonged Cartan tests)."""
        raw = self.engine.basis.mc_structure(comp, index)
        return self.reduce_form(raw, substitute_vertical)

    # -- reports ----------------------------------------------------------------------

    def free_parameters(self, order, exact=True):
        solved = set(self.solved_params())
        return [s for s in self.problem.system.parametric_jets(order, exact=exact)
                if s not in solved]

    def generating_invariants(self, horizontal_order):
        """Coefficients I^a_{A;l} of the recorded substitutions mu -> sum I w^l,
        reduced to source-jet expressions, deduplicated, constants dropped."""
        remaining = [s for k in range(horizontal_order)
                     for s in self.free_parameters(k)]
        if remaining:
            raise IncompleteFrame("free parameters below order %d: %s"
                                  % (horizontal_order, remaining))
        out = []
        seen = set()
        for gen, sub in self.mc_subs:
            reduced = self.reduce_form(sub)
            for gens, coeff in reduced.terms.items():
                if any(g.kind != GenKind.HORIZONTAL for g in gens):
                    raise IncompleteFrame("substitution for %s not horizontal" % (gen,))
                e = self._invariant_to_jets(coeff)
                e = enormalize(e)
                if e.is_const():
                    continue
                lead = e.num.leading()[1]
                if lead < 0:
                    e = -e
                if e not in seen:
                    seen.add(e)
                    out.append(e)
        return out

    def _invariant_to_jets(self, e: Expr) -> Expr:
        binds = {}
        for s in e.symbols():
            if s.kind == Kind.JET and s.name.startswith("@"):
                dep = s.name[1:]
                if dep in self.problem.space.dependent:
                    val = self.invariant_expression(dep, s.index)
                    if val is not None:
                        binds[s] = val
        return esub(e, binds) if binds else e

    # -- serialization ------------------------------------------------------------------

    def describe(self):
        lines = []
        for n in self.normalizations:
            tag = "%s[%s]" % (n.dep, n.index) if n.index.order else n.dep
            lines.append("normalize %s = %s solve %s"
                         % (tag, n.value, n.solve_for if n.solve_for else "-"))
        for s, v in self.solved:
            lines.append("solved %s = %s" % (s, serialize(v) if v is not None else "numeric-only"))
        for g, f in self.mc_subs:
            lines.append("sub %s -> %s" % (g, f))
        return "\n".join(lines)
