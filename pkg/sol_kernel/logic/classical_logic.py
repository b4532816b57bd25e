"""Embedded classical first-order language

Types, expressions, formulas, structures and states, together with
evaluation, satisfaction, substitution and state update. Quantifiers range
over enumerable domains only: Bool, and Int restricted to a bounded range.
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import EvaluationError, TypeMismatchError, UnsupportedQuantifierError


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

_RANK = {"Bool": 0, "Int": 1, "C": 2}


@dataclass(frozen=True)
class BasicType:
    """
    A basic type: Bool, Int (optionally bounded) or C

    Type checking compares names only; the bounds of an Int type fix the
    basis of a quantum register whose values have that type.
    """

    name: str
    lo: Optional[int] = None
    hi: Optional[int] = None

    def __post_init__(self):
        if self.name not in _RANK:
            raise TypeMismatchError(f"unknown basic type '{self.name}'")
        if (self.lo is None) != (self.hi is None):
            raise TypeMismatchError("Int bounds must be given together")
        if self.lo is not None:
            if self.name != "Int":
                raise TypeMismatchError(f"type {self.name} takes no bounds")
            if self.lo > self.hi:
                raise TypeMismatchError(f"empty range {self.lo}..{self.hi}")

    @property
    def bounded(self) -> bool:
        return self.name == "Bool" or (self.name == "Int" and self.lo is not None)

    @property
    def numeric(self) -> bool:
        return self.name in ("Int", "C")

    def matches(self, other: "BasicType") -> bool:
        return self.name == other.name

    def domain(self) -> tuple:
        """Ordered domain of a bounded type; raises for Int without bounds and C."""
        if self.name == "Bool":
            return (False, True)
        if self.name == "Int" and self.lo is not None:
            return tuple(range(self.lo, self.hi + 1))
        raise UnsupportedQuantifierError(f"type {self} has no finite domain")

    def size(self) -> int:
        if self.name == "Bool":
            return 2
        if self.name == "Int" and self.lo is not None:
            return self.hi - self.lo + 1
        raise UnsupportedQuantifierError(f"type {self} has no finite domain")

    def index_of(self, value: Any) -> int:
        if self.name == "Bool":
            return int(bool(value))
        return int(value) - self.lo

    def coerce(self, value: Any, tolerance: float) -> Any:
        """Map a value onto the element of this (bounded) domain it denotes."""
        if self.name == "Bool":
            if isinstance(value, bool):
                return value
            z = complex(value)
            if abs(z) <= tolerance:
                return False
            if abs(z - 1) <= tolerance:
                return True
        elif self.name == "Int" and self.lo is not None:
            z = complex(value)
            r = int(round(z.real))
            if abs(z - r) <= tolerance and self.lo <= r <= self.hi:
                return r
        else:
            raise UnsupportedQuantifierError(f"type {self} has no finite domain")
        raise EvaluationError(f"value {value!r} is outside the domain of {self}")

    def __str__(self) -> str:
        if self.lo is not None:
            return f"Int[{self.lo}..{self.hi}]"
        return self.name


BOOL = BasicType("Bool")
INT = BasicType("Int")
COMPLEX = BasicType("C")


def int_type(lo: int, hi: int) -> BasicType:
    return BasicType("Int", lo, hi)


def join_types(a: BasicType, b: BasicType) -> BasicType:
    """Numeric promotion Int < C."""
    if not (a.numeric and b.numeric):
        raise TypeMismatchError(f"expected numeric operands, got {a} and {b}")
    return COMPLEX if "C" in (a.name, b.name) else INT


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    """Base class of classical expressions; every node carries ``type``."""

    type: BasicType


@dataclass(frozen=True)
class Var(Expr):
    name: str
    type: BasicType = INT


@dataclass(frozen=True)
class Const(Expr):
    value: Any
    type: BasicType = INT


@dataclass(frozen=True)
class App(Expr):
    op: str
    args: Tuple[Expr, ...]
    type: BasicType = INT


@dataclass(frozen=True)
class ArrayVar:
    """A classical array variable of higher type T1 x ... x Tn -> T."""

    name: str
    arg_types: Tuple[BasicType, ...]
    value_type: BasicType

    def __post_init__(self):
        if not self.arg_types:
            raise TypeMismatchError(f"array '{self.name}' needs at least one argument type")


@dataclass(frozen=True)
class ArrayRef(Expr):
    array: ArrayVar
    args: Tuple[Expr, ...]

    def __post_init__(self):
        if len(self.args) != len(self.array.arg_types):
            raise TypeMismatchError(
                f"array '{self.array.name}' expects {len(self.array.arg_types)} subscripts, got {len(self.args)}"
            )
        for arg, expected in zip(self.args, self.array.arg_types):
            if not arg.type.matches(expected):
                raise TypeMismatchError(f"subscript of '{self.array.name}' has type {arg.type}, expected {expected}")

    @property
    def type(self) -> BasicType:
        return self.array.value_type


@dataclass(frozen=True)
class Cond(Expr):
    guard: "Formula"
    then: Expr
    orelse: Expr

    def __post_init__(self):
        if not self.then.type.matches(self.orelse.type):
            raise TypeMismatchError(f"conditional branches have types {self.then.type} and {self.orelse.type}")

    @property
    def type(self) -> BasicType:
        return self.then.type


def const(value: Any) -> Const:
    """Constant with its type inferred from the Python value."""
    if isinstance(value, bool):
        return Const(value, BOOL)
    if isinstance(value, int):
        return Const(value, INT)
    return Const(complex(value), COMPLEX)


# Built-in interpreted function symbols: op -> (arity, typer, impl)

def _numeric_binary(types):
    return join_types(types[0], types[1])


def _complex_result(types):
    for t in types:
        if not t.numeric:
            raise TypeMismatchError(f"expected numeric operand, got {t}")
    return COMPLEX


def _int_only(types):
    for t in types:
        if t.name != "Int":
            raise TypeMismatchError(f"expected Int operand, got {t}")
    return INT


def _bool_only(types):
    for t in types:
        if t.name != "Bool":
            raise TypeMismatchError(f"expected Bool operand, got {t}")
    return BOOL


def _same_numeric(types):
    if not types[0].numeric:
        raise TypeMismatchError(f"expected numeric operand, got {types[0]}")
    return types[0]


def _bool_to_int(types):
    _bool_only(types)
    return INT


def _pow_type(types):
    base, exponent = types
    if base.name == "Int" and exponent.name == "Int":
        return INT
    return _complex_result(types)


def _divide(a, b):
    if b == 0:
        raise EvaluationError("division by zero")
    return complex(a) / complex(b)


def _int_div(a, b):
    if b == 0:
        raise EvaluationError("division by zero")
    return a // b


def _int_mod(a, b):
    if b == 0:
        raise EvaluationError("modulo by zero")
    return a % b


def _power(a, b):
    if isinstance(a, int) and isinstance(b, int) and not isinstance(a, bool):
        if b < 0:
            raise EvaluationError(f"negative Int exponent {b}")
        return a**b
    if complex(a) == 0 and complex(b).real < 0:
        raise EvaluationError("zero raised to a negative power")
    return complex(a) ** complex(b)


BUILTINS: Dict[str, Tuple[int, Callable, Callable]] = {
    "+": (2, _numeric_binary, lambda a, b: a + b),
    "-": (2, _numeric_binary, lambda a, b: a - b),
    "*": (2, _numeric_binary, lambda a, b: a * b),
    "/": (2, _complex_result, _divide),
    "neg": (1, _same_numeric, lambda a: -a),
    "div": (2, _int_only, _int_div),
    "mod": (2, _int_only, _int_mod),
    "pow": (2, _pow_type, _power),
    "xor": (2, _bool_only, lambda a, b: a != b),
    "and": (2, _bool_only, lambda a, b: a and b),
    "or": (2, _bool_only, lambda a, b: a or b),
    "not": (1, _bool_only, lambda a: not a),
    "int": (1, _bool_to_int, lambda a: int(a)),
    "conj": (1, _complex_result, lambda a: complex(a).conjugate()),
    "abs": (1, _complex_result, lambda a: complex(abs(complex(a)))),
    "exp": (1, _complex_result, lambda a: cmath.exp(a)),
    "cos": (1, _complex_result, lambda a: cmath.cos(a)),
    "sin": (1, _complex_result, lambda a: cmath.sin(a)),
    "sqrt": (1, _complex_result, lambda a: cmath.sqrt(a)),
    "re": (1, _complex_result, lambda a: complex(complex(a).real)),
    "im": (1, _complex_result, lambda a: complex(complex(a).imag)),
    "arg": (1, _complex_result, lambda a: complex(cmath.phase(complex(a)))),
}


def app(op: str, *args: Expr) -> App:
    """Build an application of a built-in symbol, inferring its type."""
    if op not in BUILTINS:
        raise TypeMismatchError(f"unknown built-in function '{op}'")
    arity, typer, _ = BUILTINS[op]
    if len(args) != arity:
        raise TypeMismatchError(f"'{op}' expects {arity} arguments, got {len(args)}")
    return App(op, tuple(args), typer([a.type for a in args]))


PI = Const(complex(math.pi), COMPLEX)
IMAG = Const(1j, COMPLEX)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

class Formula:
    """Base class of classical first-order formulas."""


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: Tuple[Expr, ...] = ()

    def __post_init__(self):
        if self.pred in ("eq", "ne"):
            a, b = self._pair()
            if a.name == "Bool" or b.name == "Bool":
                if not a.matches(b):
                    raise TypeMismatchError(f"cannot compare {a} with {b}")
            else:
                join_types(a, b)
        elif self.pred in ("lt", "le", "gt", "ge"):
            a, b = self._pair()
            join_types(a, b)
        elif self.pred == "holds":
            if len(self.args) != 1 or self.args[0].type.name != "Bool":
                raise TypeMismatchError("'holds' expects one Bool expression")
        elif self.pred in ("true", "false") and self.args:
            raise TypeMismatchError(f"'{self.pred}' takes no arguments")

    def _pair(self):
        if len(self.args) != 2:
            raise TypeMismatchError(f"'{self.pred}' expects two arguments")
        return self.args[0].type, self.args[1].type


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class ForAll(Formula):
    var: Var
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: Var
    body: Formula


TRUE = Atom("true")
FALSE = Atom("false")


def eq(a: Expr, b: Expr) -> Atom:
    return Atom("eq", (a, b))


def ne(a: Expr, b: Expr) -> Atom:
    return Atom("ne", (a, b))


def conj(formulas: Iterable[Formula]) -> Formula:
    """Right-nested conjunction; the empty conjunction is ``true``."""
    items = list(formulas)
    if not items:
        return TRUE
    result = items[-1]
    for item in reversed(items[:-1]):
        result = And(item, result)
    return result


def disj(formulas: Iterable[Formula]) -> Formula:
    """Right-nested disjunction; the empty disjunction is ``false``."""
    items = list(formulas)
    if not items:
        return FALSE
    result = items[-1]
    for item in reversed(items[:-1]):
        result = Or(item, result)
    return result


# ---------------------------------------------------------------------------
# Structures and states
# ---------------------------------------------------------------------------

@dataclass
class Structure:
    """
    First-order structure: domains plus interpretations of symbols

    Built-in symbols are interpreted by :data:`BUILTINS`; extra function and
    predicate symbols can be registered here.
    """

    int_range: Tuple[int, int] = (-64, 64)
    tolerance: float = 1e-9
    int_limit: int = 2**31 - 1
    functions: Dict[str, Callable[..., Any]] = field(default_factory=dict)
    predicates: Dict[str, Callable[..., bool]] = field(default_factory=dict)

    @classmethod
    def from_settings(cls, settings) -> "Structure":
        return cls(
            int_range=tuple(settings.int_range),
            tolerance=settings.tolerance,
            int_limit=settings.int_limit,
        )

    def domain(self, basic_type: BasicType) -> tuple:
        """Enumeration domain of a basic type; unbounded Int uses ``int_range``."""
        if basic_type.name == "Int" and basic_type.lo is None:
            lo, hi = self.int_range
            return tuple(range(lo, hi + 1))
        if basic_type.name == "C":
            raise UnsupportedQuantifierError("quantification over type C is not enumerable")
        return basic_type.domain()

    def register_function(self, name: str, impl: Callable[..., Any]) -> None:
        self.functions[name] = impl

    def register_predicate(self, name: str, impl: Callable[..., bool]) -> None:
        self.predicates[name] = impl


@dataclass(frozen=True)
class State:
    """Assignment of values to simple variables and array variables (as dicts)."""

    values: Mapping[str, Any] = field(default_factory=dict)
    structure: Structure = field(default_factory=Structure)

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values


def update_state(sigma: State, x: Union[str, Var, ArrayVar], value: Any) -> State:
    """Return sigma[x:=value]; nothing else changes."""
    name = x if isinstance(x, str) else x.name
    values = dict(sigma.values)
    values[name] = value
    return State(values, sigma.structure)


def update_array_cell(sigma: State, array: Union[str, ArrayVar], key: tuple, value: Any) -> State:
    """Return sigma with one cell of an array variable replaced."""
    name = array if isinstance(array, str) else array.name
    table = dict(sigma.values.get(name, {}))
    table[tuple(key)] = value
    return update_state(sigma, name, table)


# ---------------------------------------------------------------------------
# Evaluation and satisfaction
# ---------------------------------------------------------------------------

def _normalise(sigma: State, value: Any, basic_type: BasicType) -> Any:
    if basic_type.name == "C":
        return complex(value)
    if basic_type.name == "Bool":
        return bool(value)
    if isinstance(value, complex):
        raise EvaluationError(f"complex value {value} where Int expected")
    result = int(value)
    if abs(result) > sigma.structure.int_limit:
        raise EvaluationError(f"Int overflow: {result} exceeds the limit {sigma.structure.int_limit}")
    return result


def eval_expr(sigma: State, expr: Expr) -> Any:
    """
    Value of an expression in a state

    Int results are checked against ``structure.int_limit``, not the
    enumeration range: register address arithmetic such as ``7 * n + 5``
    produces intermediates outside the range of the enumerated variables.

    Args:
        sigma: Classical state
        expr: Well-typed expression

    Returns:
        bool, int or complex according to the expression's type

    Raises:
        EvaluationError: unbound variable, Int overflow, undefined operation
    """
    if isinstance(expr, Var):
        if expr.name not in sigma.values:
            raise EvaluationError(f"unbound variable '{expr.name}'")
        return _normalise(sigma, sigma.values[expr.name], expr.type)

    if isinstance(expr, Const):
        return _normalise(sigma, expr.value, expr.type)

    if isinstance(expr, App):
        values = [eval_expr(sigma, arg) for arg in expr.args]
        if expr.op in BUILTINS:
            impl = BUILTINS[expr.op][2]
        elif expr.op in sigma.structure.functions:
            impl = sigma.structure.functions[expr.op]
        else:
            raise EvaluationError(f"uninterpreted function '{expr.op}'")
        try:
            result = impl(*values)
        except (OverflowError, ValueError, ZeroDivisionError) as e:
            raise EvaluationError(f"{expr.op}{tuple(values)}: {e}")
        return _normalise(sigma, result, expr.type)

    if isinstance(expr, ArrayRef):
        name = expr.array.name
        if name not in sigma.values:
            raise EvaluationError(f"unbound array '{name}'")
        table = sigma.values[name]
        key = tuple(eval_expr(sigma, arg) for arg in expr.args)
        if key in table:
            value = table[key]
        elif len(key) == 1 and key[0] in table:
            value = table[key[0]]
        else:
            raise EvaluationError(f"array '{name}' has no value at {list(key)}")
        return _normalise(sigma, value, expr.type)

    if isinstance(expr, Cond):
        branch = expr.then if satisfies(sigma, expr.guard) else expr.orelse
        return eval_expr(sigma, branch)

    raise TypeMismatchError(f"not an expression: {expr!r}")


def values_equal(a: Any, b: Any, tolerance: float) -> bool:
    if isinstance(a, complex) or isinstance(b, complex):
        return abs(complex(a) - complex(b)) <= tolerance
    return a == b


def _real(value: Any, tolerance: float) -> float:
    if isinstance(value, complex):
        if abs(value.imag) > tolerance:
            raise EvaluationError(f"cannot order non-real value {value}")
        return value.real
    return value


def _compare(pred: str, a: Any, b: Any, tolerance: float) -> bool:
    inexact = isinstance(a, complex) or isinstance(b, complex)
    x, y = _real(a, tolerance), _real(b, tolerance)
    slack = tolerance if inexact else 0
    if pred == "lt":
        return x < y - slack
    if pred == "le":
        return x <= y + slack
    if pred == "gt":
        return x > y + slack
    return x >= y - slack


def satisfies(sigma: State, formula: Formula) -> bool:
    """
    Satisfaction sigma |= formula

    Quantifiers enumerate the domain of the bound variable's type in domain
    order and stop at the first deciding instance.

    Raises:
        UnsupportedQuantifierError: quantifier over type C
        EvaluationError: propagated from expression evaluation
    """
    tolerance = sigma.structure.tolerance

    if isinstance(formula, Atom):
        pred = formula.pred
        if pred == "true":
            return True
        if pred == "false":
            return False
        values = [eval_expr(sigma, arg) for arg in formula.args]
        if pred == "eq":
            return values_equal(values[0], values[1], tolerance)
        if pred == "ne":
            return not values_equal(values[0], values[1], tolerance)
        if pred in ("lt", "le", "gt", "ge"):
            return _compare(pred, values[0], values[1], tolerance)
        if pred == "holds":
            return bool(values[0])
        if pred in sigma.structure.predicates:
            return bool(sigma.structure.predicates[pred](*values))
        raise EvaluationError(f"uninterpreted predicate '{pred}'")

    if isinstance(formula, Not):
        return not satisfies(sigma, formula.body)
    if isinstance(formula, And):
        return satisfies(sigma, formula.left) and satisfies(sigma, formula.right)
    if isinstance(formula, Or):
        return satisfies(sigma, formula.left) or satisfies(sigma, formula.right)
    if isinstance(formula, Implies):
        return (not satisfies(sigma, formula.left)) or satisfies(sigma, formula.right)

    if isinstance(formula, (ForAll, Exists)):
        domain = sigma.structure.domain(formula.var.type)
        want = isinstance(formula, Exists)
        for value in domain:
            if satisfies(update_state(sigma, formula.var, value), formula.body) == want:
                return want
        return not want

    raise TypeMismatchError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# Free variables
# ---------------------------------------------------------------------------

def collect_expr_vars(expr: Expr, out: Dict[str, Any], bound: frozenset = frozenset()) -> Dict[str, Any]:
    """Collect free simple variables and array variables, keyed by name."""
    if isinstance(expr, Var):
        if expr.name not in bound:
            out.setdefault(expr.name, expr)
    elif isinstance(expr, App):
        for arg in expr.args:
            collect_expr_vars(arg, out, bound)
    elif isinstance(expr, ArrayRef):
        out.setdefault(expr.array.name, expr.array)
        for arg in expr.args:
            collect_expr_vars(arg, out, bound)
    elif isinstance(expr, Cond):
        collect_formula_vars(expr.guard, out, bound)
        collect_expr_vars(expr.then, out, bound)
        collect_expr_vars(expr.orelse, out, bound)
    return out


def collect_formula_vars(formula: Formula, out: Dict[str, Any], bound: frozenset = frozenset()) -> Dict[str, Any]:
    if isinstance(formula, Atom):
        for arg in formula.args:
            collect_expr_vars(arg, out, bound)
    elif isinstance(formula, Not):
        collect_formula_vars(formula.body, out, bound)
    elif isinstance(formula, (And, Or, Implies)):
        collect_formula_vars(formula.left, out, bound)
        collect_formula_vars(formula.right, out, bound)
    elif isinstance(formula, (ForAll, Exists)):
        collect_formula_vars(formula.body, out, bound | {formula.var.name})
    return out


def free_vars_expr(expr: Expr) -> frozenset:
    return frozenset(collect_expr_vars(expr, {}))


def free_vars_formula(formula: Formula) -> frozenset:
    return frozenset(collect_formula_vars(formula, {}))


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

Target = Union[Var, ArrayRef]


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    taken = set(avoid)
    candidate = base + "'"
    while candidate in taken:
        candidate += "'"
    return candidate


def substitution_pairs(terms, targets) -> Tuple[Tuple[Target, Expr], ...]:
    """Normalise single or simultaneous substitution arguments and type-check them."""
    if isinstance(targets, (Var, ArrayRef)):
        targets, terms = (targets,), (terms,)
    targets, terms = tuple(targets), tuple(terms)
    if len(targets) != len(terms):
        raise TypeMismatchError(f"{len(terms)} terms for {len(targets)} variables")
    names = [t.name for t in targets if isinstance(t, Var)]
    if len(names) != len(set(names)):
        raise TypeMismatchError("simultaneous substitution needs distinct variables")
    for target, term in zip(targets, terms):
        if not isinstance(target, (Var, ArrayRef)):
            raise TypeMismatchError(f"cannot substitute for {target!r}")
        if not term.type.matches(target.type):
            raise TypeMismatchError(f"cannot substitute {term.type} term for {target.type} variable")
    return tuple(zip(targets, terms))


def _subst_e(expr: Expr, pairs) -> Expr:
    if isinstance(expr, Var):
        for target, term in pairs:
            if isinstance(target, Var) and target.name == expr.name:
                return term
        return expr
    if isinstance(expr, Const):
        return expr
    if isinstance(expr, App):
        return App(expr.op, tuple(_subst_e(arg, pairs) for arg in expr.args), expr.type)
    if isinstance(expr, ArrayRef):
        args = tuple(_subst_e(arg, pairs) for arg in expr.args)
        result: Expr = ArrayRef(expr.array, args)
        for target, term in reversed(pairs):
            if isinstance(target, ArrayRef) and target.array.name == expr.array.name:
                guard = conj(eq(new, old) for new, old in zip(args, target.args))
                result = Cond(guard, term, result)
        return result
    if isinstance(expr, Cond):
        return Cond(_subst_f(expr.guard, pairs), _subst_e(expr.then, pairs), _subst_e(expr.orelse, pairs))
    raise TypeMismatchError(f"not an expression: {expr!r}")


def _subst_f(formula: Formula, pairs) -> Formula:
    if isinstance(formula, Atom):
        return Atom(formula.pred, tuple(_subst_e(arg, pairs) for arg in formula.args))
    if isinstance(formula, Not):
        return Not(_subst_f(formula.body, pairs))
    if isinstance(formula, (And, Or, Implies)):
        return type(formula)(_subst_f(formula.left, pairs), _subst_f(formula.right, pairs))
    if isinstance(formula, (ForAll, Exists)):
        var, body = formula.var, formula.body
        remaining = tuple(
            (target, term) for target, term in pairs
            if not (isinstance(target, Var) and target.name == var.name)
        )
        if not remaining:
            return formula
        avoid = set()
        for target, term in remaining:
            avoid |= free_vars_expr(term)
            if isinstance(target, ArrayRef):
                avoid |= free_vars_expr(target)
        if var.name in avoid:
            taken = avoid | free_vars_formula(body) | {t.name if isinstance(t, Var) else t.array.name for t, _ in remaining}
            renamed = Var(fresh_name(var.name, taken), var.type)
            body = _subst_f(body, ((var, renamed),))
            var = renamed
        return type(formula)(var, _subst_f(body, remaining))
    raise TypeMismatchError(f"not a formula: {formula!r}")


def subst_expr(expr: Expr, terms, targets) -> Expr:
    """
    Substitute terms for variables in an expression

    Args:
        expr: Expression s
        terms: Term t or a sequence of terms for simultaneous substitution
        targets: Simple variable x, subscripted variable a[s'], or a sequence

    Returns:
        s[t/x]; a subscripted target turns matching array reads into
        conditionals on the subscripts.
    """
    return _subst_e(expr, substitution_pairs(terms, targets))


def subst_formula(formula: Formula, terms, targets) -> Formula:
    """Capture-avoiding substitution phi[t/x]; bound variables are renamed only on capture."""
    return _subst_f(formula, substitution_pairs(terms, targets))
