"""Exterior algebra over a finite coframe with Expr coefficients.

Generators carry a tag (horizontal base form, contact form, Maurer-Cartan
form) and a fixed rank so that every Form's terms are kept on strictly
increasing generator tuples: Horizontal < Contact < MaurerCartan, each
sorted internally.  The Maurer-Cartan structure equations

    d mu^a_A = sum_b w^b ^ mu^a_{A,b}
             + sum_{B+C=A, |C|>=1} sum_b mu^a_{B,b} ^ mu^b_C

drive exterior differentiation together with registered per-symbol
coefficient differentials (the recurrence rows).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import MissingRule, OrderOverflow
from .expr import Expr, ZERO, ONE, diff as ediff, substitute as esub
from .symbols import EMPTY, MultiIndex, Sym


class GenKind(enum.IntEnum):
    HORIZONTAL = 0
    CONTACT = 1
    MC = 2


@dataclass(frozen=True)
class Generator:
    """A coframe element: w^name, theta^name_J or mu^name_A."""

    kind: GenKind
    name: str
    index: MultiIndex
    pos: int  # position of the component in the base-variable order

    def __post_init__(self):
        object.__setattr__(self, "_key",
                           (int(self.kind), self.index.order == 0 and -1 or self.index.order,
                            self.pos, self.index.key))

    @property
    def key(self):
        return self._key

    def __lt__(self, other):
        return self.key < other.key

    def __str__(self):
        if self.kind == GenKind.HORIZONTAL:
            return "w^%s" % self.name
        head = "th" if self.kind == GenKind.CONTACT else "mu"
        if self.index.order == 0:
            return "%s^%s" % (head, self.name)
        return "%s^%s_{%s}" % (head, self.name, self.index)

    __repr__ = __str__


class CoframeBasis:
    """Fixed base-variable order; mints generators with stable ranks."""

    def __init__(self, base_names, n_independent):
        if len(set(base_names)) != len(base_names):
            raise ValueError("duplicate base names")
        self.base_names = tuple(base_names)
        self.n = n_independent
        self._pos = {nm: i for i, nm in enumerate(self.base_names)}

    def horizontal(self, name):
        return Generator(GenKind.HORIZONTAL, name, EMPTY, self._pos[name])

    def contact(self, dep, index=EMPTY):
        return Generator(GenKind.CONTACT, dep, index, self._pos[dep])

    def mc(self, comp, index=EMPTY):
        return Generator(GenKind.MC, comp, index, self._pos[comp])

    def mc_structure(self, comp, index=EMPTY, max_order=None) -> "Form":
        """d mu^comp_index by the diffeomorphism-groupoid structure equations."""
        if max_order is not None and index.order + 1 > max_order:
            raise OrderOverflow("structure equation needs order %d" % (index.order + 1))
        total = Form.zero(2)
        for b in self.base_names:
            total = total + wedge(Form.gen(self.horizontal(b)),
                                  Form.gen(self.mc(comp, index.bump(b))))
        for bpart, cpart, mult in index.splits():
            if cpart.order < 1:
                continue
            for b in self.base_names:
                total = total + wedge(Form.gen(self.mc(comp, bpart.bump(b))),
                                      Form.gen(self.mc(b, cpart))).scale(mult)
        return total


class Form:
    """Exterior form: degree plus a map from increasing generator tuples to Expr."""

    __slots__ = ("degree", "terms")

    def __init__(self, degree, terms=None):
        self.degree = degree
        self.terms = terms if terms is not None else {}

    @staticmethod
    def zero(degree=0):
        return Form(degree)

    @staticmethod
    def gen(g: Generator):
        return Form(1, {(g,): ONE})

    @staticmethod
    def scalar(e: Expr):
        return Form(0, {(): e} if not e.is_zero_expr() else {})

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise ValueError("degree mismatch in form sum")
        out = dict(self.terms)
        for gens, c in other.terms.items():
            v = out.get(gens, ZERO) + c
            if v.is_zero_expr():
                out.pop(gens, None)
            else:
                out[gens] = v
        return Form(self.degree, out)

    def __neg__(self):
        return Form(self.degree, {g: -c for g, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, e) -> "Form":
        e = e if isinstance(e, Expr) else Expr.const(e)
        if e.is_zero_expr():
            return Form(self.degree)
        return Form(self.degree, {g: c * e for g, c in self.terms.items()})

    def coefficient(self, gens) -> Expr:
        return self.terms.get(tuple(gens), ZERO)

    def generators(self):
        out = set()
        for gens in self.terms:
            out.update(gens)
        return out

    def map_coefficients(self, fn) -> "Form":
        out = {}
        for gens, c in self.terms.items():
            v = fn(c)
            if not v.is_zero_expr():
                out[gens] = v
        return Form(self.degree, out)

    def substitute_coeffs(self, bindings) -> "Form":
        return self.map_coefficients(lambda c: esub(c, bindings))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for gens, c in sorted(self.terms.items(), key=lambda it: tuple(g.key for g in it[0])):
            body = "^".join(str(g) for g in gens) if gens else "1"
            parts.append("(%s) %s" % (c, body))
        return " + ".join(parts)

    __repr__ = __str__


def _merge(g1, g2):
    """Merge two increasing generator tuples; (sign, merged) or (0, None)."""
    out = []
    i = j = 0
    sign = 1
    while i < len(g1) and j < len(g2):
        a, b = g1[i], g2[j]
        if a.key == b.key:
            return 0, None
        if a.key < b.key:
            out.append(a)
            i += 1
        else:
            # b jumps over the remaining entries of g1
            if (len(g1) - i) % 2 == 1:
                sign = -sign
            out.append(b)
            j += 1
    out.extend(g1[i:])
    out.extend(g2[j:])
    return sign, tuple(out)


def wedge(f: Form, g: Form) -> Form:
    """Bilinear, associative exterior product with graded anticommutativity."""
    degree = f.degree + g.degree
    out = {}
    for gens1, c1 in f.terms.items():
        for gens2, c2 in g.terms.items():
            sign, merged = _merge(gens1, gens2)
            if sign == 0:
                continue
            v = out.get(merged, ZERO) + c1 * c2 * sign
            if v.is_zero_expr():
                out.pop(merged, None)
            else:
                out[merged] = v
    return Form(degree, out)


def reduce_mod_contact(f: Form) -> Form:
    """Delete every term containing a Contact generator."""
    out = {g: c for g, c in f.terms.items()
           if not any(gen.kind == GenKind.CONTACT for gen in g)}
    return Form(f.degree, out)


@dataclass
class StructureRules:
    """Exterior-derivative rules for generators and coefficient symbols, plus
    optional degree-1 substitution rules applied by ``apply_substitutions``."""

    derivative: dict        # Generator -> Form (degree 2)
    symbol_diff: dict       # Sym -> Form (degree 1); missing constants are zero
    substitution: dict      # Generator -> Form (degree 1)

    def __init__(self, derivative=None, symbol_diff=None, substitution=None):
        self.derivative = derivative or {}
        self.symbol_diff = symbol_diff or {}
        self.substitution = substitution or {}


def exterior_derivative(f: Form, rules: StructureRules) -> Form:
    """Graded Leibniz rule; coefficients differentiate through their
    registered 1-form differentials.  Raises MissingRule."""
    total = Form.zero(f.degree + 1)
    for gens, coeff in f.terms.items():
        dc = _d_scalar(coeff, rules)
        if not dc.is_zero():
            tail = Form(len(gens), {gens: ONE})
            total = total + wedge(dc, tail)
        for i, g in enumerate(gens):
            dg = rules.derivative.get(g)
            if dg is None:
                raise MissingRule("no derivative rule for generator %s" % g)
            if dg.is_zero():
                continue
            sign = -1 if i % 2 else 1
            head = Form(i, {gens[:i]: ONE})
            tail = Form(len(gens) - i - 1, {gens[i + 1:]: ONE})
            piece = wedge(wedge(head, dg), tail).scale(Expr.const(sign) * coeff)
            total = total + piece
    return total


def _d_scalar(coeff: Expr, rules: StructureRules) -> Form:
    total = Form.zero(1)
    for s in sorted(coeff.symbols(), key=lambda t: t.key):
        rule = rules.symbol_diff.get(s)
        if rule is None:
            raise MissingRule("no differential registered for symbol %s" % s)
        de = ediff(coeff, s)
        if not de.is_zero_expr() and not rule.is_zero():
            total = total + rule.scale(de)
    return total


def substitute_generators(f: Form, mapping) -> Form:
    """Replace each listed generator by a 1-form, expanding multilinearly.
    Repeated until no listed generator remains (substitution chains)."""
    current = f
    for _ in range(len(mapping) + 2):
        hit = False
        out = Form.zero(current.degree)
        for gens, coeff in current.terms.items():
            factor = Form(0, {(): coeff})
            for g in gens:
                rep = mapping.get(g)
                if rep is None:
                    rep = Form.gen(g)
                else:
                    hit = True
                factor = wedge(factor, rep)
            out = out + factor
        current = out
        if not hit:
            break
    else:
        raise ValueError("substitution chain did not terminate")
    return current
