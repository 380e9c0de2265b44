"""Quantifier-free integer formulas.

Formulas are plain immutable trees built by model code; there is no parser.
Expressions cover constants, variables, negation, ``+``, ``-`` and ``*``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Mapping, Optional, Union


class Op(enum.Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"


class Rel(enum.Enum):
    LE = "<="
    LT = "<"
    GE = ">="
    GT = ">"
    EQ = "="
    NE = "!="


NEGATED = {
    Rel.LE: Rel.GT,
    Rel.GT: Rel.LE,
    Rel.LT: Rel.GE,
    Rel.GE: Rel.LT,
    Rel.EQ: Rel.NE,
    Rel.NE: Rel.EQ,
}

# relation obtained when both sides are swapped
MIRRORED = {
    Rel.LE: Rel.GE,
    Rel.GE: Rel.LE,
    Rel.LT: Rel.GT,
    Rel.GT: Rel.LT,
    Rel.EQ: Rel.EQ,
    Rel.NE: Rel.NE,
}


class Expr:
    """Base class of arithmetic expressions; supports ``+ - *`` overloading."""

    __slots__ = ()

    def __add__(self, other):
        return Bin(Op.ADD, self, as_expr(other))

    def __radd__(self, other):
        return Bin(Op.ADD, as_expr(other), self)

    def __sub__(self, other):
        return Bin(Op.SUB, self, as_expr(other))

    def __rsub__(self, other):
        return Bin(Op.SUB, as_expr(other), self)

    def __mul__(self, other):
        return Bin(Op.MUL, self, as_expr(other))

    def __rmul__(self, other):
        return Bin(Op.MUL, as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __deepcopy__(self, memo):
        return self


@dataclass(frozen=True, eq=True)
class IntConst(Expr):
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    sub: Expr

    def __str__(self):
        return f"-({self.sub})"


@dataclass(frozen=True, eq=True)
class Bin(Expr):
    op: Op
    left: Expr
    right: Expr

    def __str__(self):
        return f"({self.left} {self.op.value} {self.right})"


def as_expr(e: Union[Expr, int, str]) -> Expr:
    if isinstance(e, Expr):
        return e
    if isinstance(e, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(e, int):
        return IntConst(e)
    if isinstance(e, str):
        return Var(e)
    raise TypeError(f"cannot convert {e!r} to an expression")


class Formula:
    __slots__ = ()

    def __deepcopy__(self, memo):
        return self


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    rel: Rel
    left: Expr
    right: Expr

    def __str__(self):
        return f"{self.left} {self.rel.value} {self.right}"


@dataclass(frozen=True, eq=True)
class And(Formula):
    l: Formula
    r: Formula

    def __str__(self):
        return f"({self.l} /\\ {self.r})"


@dataclass(frozen=True, eq=True)
class Or(Formula):
    l: Formula
    r: Formula

    def __str__(self):
        return f"({self.l} \\/ {self.r})"


@dataclass(frozen=True, eq=True)
class Imply(Formula):
    l: Formula
    r: Formula

    def __str__(self):
        return f"({self.l} => {self.r})"


@dataclass(frozen=True, eq=True)
class Not(Formula):
    sub: Formula

    def __str__(self):
        return f"~({self.sub})"


Label = Union[int, str]


@dataclass(frozen=True, eq=True)
class Annotated(Formula):
    sub: Formula
    target: Label

    def __post_init__(self):
        t = self.target
        if isinstance(t, bool) or not isinstance(t, (int, str)):
            raise TypeError(f"annotation must be an int or a str, got {t!r}")
        if isinstance(t, int) and t < 1:
            raise ValueError("component indices start at 1")
        if isinstance(t, str) and not t:
            raise ValueError("component names must be non-empty")

    def __str__(self):
        return f"({self.sub}):{self.target}"


def _cache_hash(cls):
    # trees are immutable and hashed often as cache keys
    raw = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = raw(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__


for _cls in (IntConst, Var, Neg, Bin, Atom, And, Or, Imply, Not, Annotated):
    _cache_hash(_cls)


# -- builders ---------------------------------------------------------------

def _atom(rel, a, b) -> Atom:
    return Atom(rel, as_expr(a), as_expr(b))


def le(a, b) -> Atom:
    return _atom(Rel.LE, a, b)


def lt(a, b) -> Atom:
    return _atom(Rel.LT, a, b)


def ge(a, b) -> Atom:
    return _atom(Rel.GE, a, b)


def gt(a, b) -> Atom:
    return _atom(Rel.GT, a, b)


def eq(a, b) -> Atom:
    return _atom(Rel.EQ, a, b)


def ne(a, b) -> Atom:
    return _atom(Rel.NE, a, b)


def conj(*fs: Formula) -> Formula:
    if not fs:
        raise ValueError("empty conjunction")
    return reduce(And, fs)


def disj(*fs: Formula) -> Formula:
    if not fs:
        raise ValueError("empty disjunction")
    return reduce(Or, fs)


def at(phi: Formula, target: Label) -> Annotated:
    return Annotated(phi, target)


# -- traversal --------------------------------------------------------------

def expr_vars(e: Expr, acc: Optional[set] = None) -> set:
    if acc is None:
        acc = set()
    stack = [e]
    while stack:
        e = stack.pop()
        if isinstance(e, Var):
            acc.add(e.name)
        elif isinstance(e, Bin):
            stack.append(e.left)
            stack.append(e.right)
        elif isinstance(e, Neg):
            stack.append(e.sub)
    return acc


def atoms(phi: Formula) -> Iterator[Atom]:
    """Atoms of ``phi`` in left-to-right order, annotations ignored."""
    if isinstance(phi, Atom):
        yield phi
    elif isinstance(phi, (And, Or, Imply)):
        yield from atoms(phi.l)
        yield from atoms(phi.r)
    elif isinstance(phi, (Not, Annotated)):
        yield from atoms(phi.sub)
    else:
        raise TypeError(f"not a formula: {phi!r}")


def vars_of(phi: Formula) -> frozenset:
    acc: set = set()
    for a in atoms(phi):
        expr_vars(a.left, acc)
        expr_vars(a.right, acc)
    return frozenset(acc)


def strip_annotations(phi: Formula) -> Formula:
    if isinstance(phi, Atom):
        return phi
    if isinstance(phi, Annotated):
        return strip_annotations(phi.sub)
    if isinstance(phi, Not):
        return Not(strip_annotations(phi.sub))
    return type(phi)(strip_annotations(phi.l), strip_annotations(phi.r))


def is_atomic(phi: Formula) -> bool:
    """An atom, possibly wrapped in annotations."""
    while isinstance(phi, Annotated):
        phi = phi.sub
    return isinstance(phi, Atom)


def conjuncts(phi: Formula) -> Iterator[Formula]:
    if isinstance(phi, And):
        yield from conjuncts(phi.l)
        yield from conjuncts(phi.r)
    else:
        yield phi


def disjuncts(phi: Formula) -> Iterator[Formula]:
    if isinstance(phi, Or):
        yield from disjuncts(phi.l)
        yield from disjuncts(phi.r)
    else:
        yield phi


# -- evaluation -------------------------------------------------------------

def eval_expr(e: Expr, env: Mapping[str, int]) -> int:
    if isinstance(e, IntConst):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -eval_expr(e.sub, env)
    a = eval_expr(e.left, env)
    b = eval_expr(e.right, env)
    if e.op is Op.ADD:
        return a + b
    if e.op is Op.SUB:
        return a - b
    return a * b


def compare(rel: Rel, a: int, b: int) -> bool:
    if rel is Rel.LE:
        return a <= b
    if rel is Rel.LT:
        return a < b
    if rel is Rel.GE:
        return a >= b
    if rel is Rel.GT:
        return a > b
    if rel is Rel.EQ:
        return a == b
    return a != b


def holds(phi: Formula, env: Mapping[str, int]) -> bool:
    """Classical truth of ``phi`` under a total integer assignment."""
    if isinstance(phi, Atom):
        return compare(phi.rel, eval_expr(phi.left, env), eval_expr(phi.right, env))
    if isinstance(phi, And):
        return holds(phi.l, env) and holds(phi.r, env)
    if isinstance(phi, Or):
        return holds(phi.l, env) or holds(phi.r, env)
    if isinstance(phi, Imply):
        return (not holds(phi.l, env)) or holds(phi.r, env)
    if isinstance(phi, Not):
        return not holds(phi.sub, env)
    if isinstance(phi, Annotated):
        return holds(phi.sub, env)
    raise TypeError(f"not a formula: {phi!r}")


# -- rewriting --------------------------------------------------------------

def negate_atom(a: Atom) -> Atom:
    return Atom(NEGATED[a.rel], a.left, a.right)


def nnf(phi: Formula, negate: bool = False) -> Formula:
    """Negation normal form with ``=>`` and ``~`` eliminated.

    Negations are absorbed into atoms via :func:`negate_atom`.  Annotations
    are pushed down onto atoms; an inner annotation overrides an outer one.
    """
    if isinstance(phi, Atom):
        return negate_atom(phi) if negate else phi
    if isinstance(phi, Not):
        return nnf(phi.sub, not negate)
    if isinstance(phi, Imply):
        return nnf(Or(Not(phi.l), phi.r), negate)
    if isinstance(phi, And):
        l, r = nnf(phi.l, negate), nnf(phi.r, negate)
        return Or(l, r) if negate else And(l, r)
    if isinstance(phi, Or):
        l, r = nnf(phi.l, negate), nnf(phi.r, negate)
        return And(l, r) if negate else Or(l, r)
    if isinstance(phi, Annotated):
        return _push_label(nnf(phi.sub, negate), phi.target)
    raise TypeError(f"not a formula: {phi!r}")


def _push_label(phi: Formula, target: Label) -> Formula:
    if isinstance(phi, Annotated):
        return phi
    if isinstance(phi, Atom):
        return Annotated(phi, target)
    return type(phi)(_push_label(phi.l, target), _push_label(phi.r, target))


def _subst_expr(e: Expr, bindings: Mapping[str, int]) -> Expr:
    if isinstance(e, Var):
        v = bindings.get(e.name)
        return e if v is None else IntConst(v)
    if isinstance(e, Neg):
        s = _subst_expr(e.sub, bindings)
        return e if s is e.sub else Neg(s)
    if isinstance(e, Bin):
        l = _subst_expr(e.left, bindings)
        r = _subst_expr(e.right, bindings)
        if l is e.left and r is e.right:
            return e
        return Bin(e.op, l, r)
    return e


def substitute_fixed(phi: Formula, bindings: Mapping[str, int]) -> Formula:
    """Replace every bound variable of ``phi`` by its value, all at once."""
    if not bindings:
        return phi
    if isinstance(phi, Atom):
        l = _subst_expr(phi.left, bindings)
        r = _subst_expr(phi.right, bindings)
        if l is phi.left and r is phi.right:
            return phi
        return Atom(phi.rel, l, r)
    if isinstance(phi, (Not, Annotated)):
        sub = substitute_fixed(phi.sub, bindings)
        if isinstance(phi, Not):
            return Not(sub)
        return Annotated(sub, phi.target)
    return type(phi)(substitute_fixed(phi.l, bindings),
                     substitute_fixed(phi.r, bindings))


# -- linear forms -----------------------------------------------------------

def linearize(e: Expr) -> Optional[tuple]:
    """``(coeffs, const)`` with ``e == sum(c*x) + const``, or None if non-linear.

    ``coeffs`` is a dict without zero entries.
    """
    if isinstance(e, IntConst):
        return {}, e.value
    if isinstance(e, Var):
        return {e.name: 1}, 0
    if isinstance(e, Neg):
        sub = linearize(e.sub)
        if sub is None:
            return None
        return {x: -c for x, c in sub[0].items()}, -sub[1]
    l = linearize(e.left)
    if l is None:
        return None
    r = linearize(e.right)
    if r is None:
        return None
    if e.op is Op.MUL:
        if not l[0]:
            k, (cs, c0) = l[1], r
        elif not r[0]:
            k, (cs, c0) = r[1], l
        else:
            return None
        return ({x: k * c for x, c in cs.items() if k * c}, k * c0)
    sign = 1 if e.op is Op.ADD else -1
    coeffs = dict(l[0])
    for x, c in r[0].items():
        v = coeffs.get(x, 0) + sign * c
        if v:
            coeffs[x] = v
        else:
            coeffs.pop(x, None)
    return coeffs, l[1] + sign * r[1]


def linear_le(a: Atom) -> Optional[list]:
    """Rewrite a linear atom as a list of ``(coeffs, bound)`` meaning ``sum <= bound``.

    Strict relations are tightened by one (integers).  Returns None for
    non-linear atoms and for ``!=``, which no conjunction of ``<=`` captures.
    """
    if a.rel is Rel.NE:
        return None
    l = linearize(a.left)
    if l is None:
        return None
    r = linearize(a.right)
    if r is None:
        return None
    coeffs = dict(l[0])
    for x, c in r[0].items():
        v = coeffs.get(x, 0) - c
        if v:
            coeffs[x] = v
        else:
            coeffs.pop(x, None)
    k = r[1] - l[1]          # sum(coeffs) REL k
    neg = {x: -c for x, c in coeffs.items()}
    if a.rel is Rel.LE:
        return [(coeffs, k)]
    if a.rel is Rel.LT:
        return [(coeffs, k - 1)]
    if a.rel is Rel.GE:
        return [(neg, -k)]
    if a.rel is Rel.GT:
        return [(neg, -k - 1)]
    return [(coeffs, k), (neg, -k)]


# -- relaxation -------------------------------------------------------------

def _signed_terms(e: Expr, sign: int, out: list) -> int:
    """Flatten +/-/neg into ``out`` as ``(sign, term)``; returns the constant."""
    if isinstance(e, IntConst):
        return sign * e.value
    if isinstance(e, Neg):
        return _signed_terms(e.sub, -sign, out)
    if isinstance(e, Bin) and e.op is not Op.MUL:
        k = _signed_terms(e.left, sign, out)
        rsign = sign if e.op is Op.ADD else -sign
        return k + _signed_terms(e.right, rsign, out)
    out.append((sign, e))
    return 0


def _build_sum(terms: list, const: int) -> Expr:
    acc: Optional[Expr] = None
    if const or not terms:
        acc = IntConst(const)
    for sign, t in terms:
        if acc is None:
            acc = t if sign > 0 else Neg(t)
        else:
            acc = Bin(Op.ADD if sign > 0 else Op.SUB, acc, t)
    return acc


def _count_var(e: Expr, x: str) -> int:
    if isinstance(e, Var):
        return int(e.name == x)
    if isinstance(e, Neg):
        return _count_var(e.sub, x)
    if isinstance(e, Bin):
        return _count_var(e.left, x) + _count_var(e.right, x)
    return 0


def isolate(a: Atom, x: str) -> Optional[Atom]:
    """Rewrite an inequality as ``x REL e`` with ``x`` absent from ``e``.

    Only applies when ``x`` occurs exactly once, as an additive term.
    """
    if a.rel in (Rel.EQ, Rel.NE):
        return None
    if _count_var(a.left, x) + _count_var(a.right, x) != 1:
        return None
    terms: list = []
    k = _signed_terms(a.left, 1, terms)
    k += _signed_terms(a.right, -1, terms)
    # left - right == k + sum(terms)  REL 0
    idx = next((i for i, (_, t) in enumerate(terms)
                if isinstance(t, Var) and t.name == x), None)
    if idx is None:
        return None
    sign, _ = terms.pop(idx)
    if sign > 0:
        # x + rest REL 0  ->  x REL -rest
        e = _build_sum([(-s, t) for s, t in terms], -k)
        return Atom(a.rel, Var(x), e)
    # -x + rest REL 0  ->  x MIRROR(REL) rest
    return Atom(MIRRORED[a.rel], Var(x), _build_sum(terms, k))


def relax(phi: Formula, lb: Mapping, ub: Mapping, var: Optional[str] = None
          ) -> Optional[Atom]:
    """Over-approximate an inequality by substituting one variable's bound.

    ``x <= e`` becomes ``lb[x] <= e`` and ``x >= e`` becomes ``ub[x] >= e``
    (strict forms alike).  With ``var`` unset, the first variable (in order of
    appearance) admitting a finite substitution is used.  Returns None when no
    variable qualifies.
    """
    if not isinstance(phi, Atom):
        return None
    candidates = [var] if var is not None else _appearance_order(phi)
    for x in candidates:
        iso = isolate(phi, x)
        if iso is None:
            continue
        if iso.rel in (Rel.LE, Rel.LT):
            bound = lb.get(x)
        else:
            bound = ub.get(x)
        if bound is None or not _finite(bound):
            continue
        return Atom(iso.rel, IntConst(int(bound)), iso.right)
    return None


def relaxations(phi: Atom, lb: Mapping, ub: Mapping) -> Iterator[Atom]:
    for x in _appearance_order(phi):
        r = relax(phi, lb, ub, x)
        if r is not None:
            yield r


def _appearance_order(a: Atom) -> list:
    seen: dict = {}

    def walk(e):
        if isinstance(e, Var):
            seen.setdefault(e.name, None)
        elif isinstance(e, Neg):
            walk(e.sub)
        elif isinstance(e, Bin):
            walk(e.left)
            walk(e.right)

    walk(a.left)
    walk(a.right)
    return list(seen)


def _finite(v) -> bool:
    return v not in (float("inf"), float("-inf"))
