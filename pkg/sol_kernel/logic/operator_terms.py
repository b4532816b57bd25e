"""Formal operators: AST, static signatures and substitution

Signatures read row side -> column side: a ket ``|s>_q`` has signature
q -> epsilon and denotes a column, a bra has epsilon -> q and denotes a row.
A product ``A1 * A2`` needs the column side of A1 to match the row side of
A2 and has signature dom(A1) -> cod(A2).

Construction only compares register *shapes* (value types, as multisets).
Whether the registers are actually the same subsystems depends on the
classical state and is decided at signing.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .classical_logic import (
    COMPLEX,
    BasicType,
    Const,
    Expr,
    collect_expr_vars,
    substitution_pairs,
    _subst_e,
)
from .errors import TypeMismatchError
from .quantum_registers import EPSILON, QuantumRef, QuantumVarDecl, RegisterString


@dataclass(frozen=True)
class Signature:
    """
    Register strings on the row side (dom) and column side (cod)

    ``dynamic`` marks terms such as recursive-definition instances whose
    register strings are only known once the classical state is fixed.
    """

    dom: RegisterString = EPSILON
    cod: RegisterString = EPSILON
    dynamic: bool = False

    def swapped(self) -> "Signature":
        return Signature(self.cod, self.dom, self.dynamic)

    def shape(self) -> Tuple[Tuple[BasicType, ...], Tuple[BasicType, ...]]:
        return self.dom.value_types, self.cod.value_types


DYNAMIC = Signature(dynamic=True)


def _shape_key(types: Iterable[BasicType]) -> Counter:
    return Counter((t.name, t.lo, t.hi) for t in types)


def shapes_compatible(a: RegisterString, b: RegisterString) -> bool:
    return _shape_key(a.value_types) == _shape_key(b.value_types)


@dataclass(frozen=True)
class OperatorConstDecl:
    """
    Operator constant with classical parameters

    A ``polymorphic`` constant (identity, global phase) accepts any register
    strings whose row and column sides have the same shape.
    """

    name: str
    dom_types: Tuple[BasicType, ...] = ()
    cod_types: Tuple[BasicType, ...] = ()
    param_types: Tuple[BasicType, ...] = ()
    polymorphic: bool = False


@dataclass(frozen=True)
class OperatorVarDecl:
    name: str
    dom_types: Tuple[BasicType, ...] = ()
    cod_types: Tuple[BasicType, ...] = ()


def _check_registers(name: str, expected: Tuple[BasicType, ...], actual: RegisterString, side: str) -> None:
    got = actual.value_types
    if len(got) != len(expected) or any(not (a == b) for a, b in zip(got, expected)):
        raise TypeMismatchError(
            f"'{name}' expects {side} registers of types {[str(t) for t in expected]}, got {[str(t) for t in got]}"
        )


class FormalOp:
    """Base class of formal operators; ``sig`` is computed at construction."""

    sig: Signature


def _numeric(expr: Expr, where: str) -> None:
    if not expr.type.numeric:
        raise TypeMismatchError(f"{where} must be numeric, got {expr.type}")


@dataclass(frozen=True)
class Scalar(FormalOp):
    value: Expr
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _numeric(self.value, "scalar")
        object.__setattr__(self, "sig", Signature())


@dataclass(frozen=True)
class Ket(FormalOp):
    label: Expr
    reg: QuantumRef
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _check_label(self.label, self.reg)
        object.__setattr__(self, "sig", Signature(RegisterString((self.reg,)), EPSILON))


@dataclass(frozen=True)
class Bra(FormalOp):
    label: Expr
    reg: QuantumRef
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _check_label(self.label, self.reg)
        object.__setattr__(self, "sig", Signature(EPSILON, RegisterString((self.reg,))))


def _check_label(label: Expr, reg: QuantumRef) -> None:
    # numeric labels are coerced into the register's domain at evaluation
    if label.type.matches(reg.value_type) or label.type.numeric:
        return
    raise TypeMismatchError(f"label of type {label.type} for register '{reg.base.name}' of type {reg.value_type}")


@dataclass(frozen=True)
class OpVar(FormalOp):
    decl: OperatorVarDecl
    dom: RegisterString
    cod: RegisterString
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _check_registers(self.decl.name, self.decl.dom_types, self.dom, "row")
        _check_registers(self.decl.name, self.decl.cod_types, self.cod, "column")
        object.__setattr__(self, "sig", Signature(self.dom, self.cod))


@dataclass(frozen=True)
class OpConst(FormalOp):
    decl: OperatorConstDecl
    params: Tuple[Expr, ...]
    dom: RegisterString
    cod: RegisterString
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        decl = self.decl
        if len(self.params) != len(decl.param_types):
            raise TypeMismatchError(f"'{decl.name}' expects {len(decl.param_types)} parameters, got {len(self.params)}")
        for param, expected in zip(self.params, decl.param_types):
            if not (param.type.matches(expected) or (expected == COMPLEX and param.type.numeric)):
                raise TypeMismatchError(f"parameter of '{decl.name}' has type {param.type}, expected {expected}")
        if decl.polymorphic:
            if not shapes_compatible(self.dom, self.cod):
                raise TypeMismatchError(f"'{decl.name}' needs row and column registers of the same shape")
        else:
            _check_registers(decl.name, decl.dom_types, self.dom, "row")
            _check_registers(decl.name, decl.cod_types, self.cod, "column")
        object.__setattr__(self, "sig", Signature(self.dom, self.cod))


@dataclass(frozen=True)
class Scale(FormalOp):
    coeff: Expr
    body: FormalOp
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _numeric(self.coeff, "coefficient")
        object.__setattr__(self, "sig", self.body.sig)


@dataclass(frozen=True)
class Adjoint(FormalOp):
    body: FormalOp
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sig", self.body.sig.swapped())


@dataclass(frozen=True)
class Sum(FormalOp):
    left: FormalOp
    right: FormalOp
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        a, b = self.left.sig, self.right.sig
        if not (a.dynamic or b.dynamic):
            if not (shapes_compatible(a.dom, b.dom) and shapes_compatible(a.cod, b.cod)):
                raise TypeMismatchError("summands have different signature shapes")
        object.__setattr__(self, "sig", b if a.dynamic else a)


@dataclass(frozen=True)
class Product(FormalOp):
    left: FormalOp
    right: FormalOp
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        a, b = self.left.sig, self.right.sig
        if a.dynamic or b.dynamic:
            sig = DYNAMIC
        else:
            if not shapes_compatible(a.cod, b.dom):
                raise TypeMismatchError(
                    f"product needs matching registers: column side has {len(a.cod)} registers, row side {len(b.dom)}"
                )
            sig = Signature(a.dom, b.cod)
        object.__setattr__(self, "sig", sig)


@dataclass(frozen=True)
class Tensor(FormalOp):
    left: FormalOp
    right: FormalOp
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        a, b = self.left.sig, self.right.sig
        if a.dynamic or b.dynamic:
            sig = DYNAMIC
        else:
            sig = Signature(a.dom + b.dom, a.cod + b.cod)
        object.__setattr__(self, "sig", sig)


@dataclass(frozen=True)
class Instance(FormalOp):
    """
    Call of a recursive definition with classical arguments and register arrays

    ``definition`` is any object with ``name``, ``params`` and
    ``expand(sigma, instance)``; see :mod:`stdlib_examples`.
    """

    definition: Any = field(compare=False)
    args: Tuple[Expr, ...] = ()
    arrays: Tuple[QuantumVarDecl, ...] = ()
    name: str = ""
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", self.definition.name)
        params = self.definition.params
        if len(self.args) != len(params):
            raise TypeMismatchError(f"'{self.name}' expects {len(params)} arguments, got {len(self.args)}")
        for arg, param in zip(self.args, params):
            if not arg.type.matches(param.type):
                raise TypeMismatchError(f"argument of '{self.name}' has type {arg.type}, expected {param.type}")
        object.__setattr__(self, "sig", DYNAMIC)


def static_signature(op: FormalOp) -> Signature:
    """Sign(A) as fixed at construction."""
    return op.sig


# ---------------------------------------------------------------------------
# Derived forms
# ---------------------------------------------------------------------------

def negate(op: FormalOp, identity: OperatorConstDecl) -> FormalOp:
    """!A := I - A, with the identity over A's row-side registers."""
    if op.sig.dynamic:
        raise TypeMismatchError("negation needs a term with a static signature")
    ident = OpConst(identity, (), op.sig.dom, op.sig.dom)
    return Sum(ident, Scale(Const(-1 + 0j, COMPLEX), op))


def difference(left: FormalOp, right: FormalOp) -> FormalOp:
    return Sum(left, Scale(Const(-1 + 0j, COMPLEX), right))


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------

def map_op(op: FormalOp, on_expr: Callable[[Expr], Expr], on_ref: Callable[[QuantumRef], QuantumRef],
           on_opvar: Optional[Callable[["OpVar", RegisterString, RegisterString], FormalOp]] = None) -> FormalOp:
    """Rebuild a term, mapping every classical expression and quantum reference."""
    def regs(string: RegisterString) -> RegisterString:
        return RegisterString(tuple(on_ref(ref) for ref in string))

    def walk(node: FormalOp) -> FormalOp:
        if isinstance(node, Scalar):
            return Scalar(on_expr(node.value))
        if isinstance(node, Ket):
            return Ket(on_expr(node.label), on_ref(node.reg))
        if isinstance(node, Bra):
            return Bra(on_expr(node.label), on_ref(node.reg))
        if isinstance(node, OpVar):
            dom, cod = regs(node.dom), regs(node.cod)
            if on_opvar is not None:
                return on_opvar(node, dom, cod)
            return OpVar(node.decl, dom, cod)
        if isinstance(node, OpConst):
            return OpConst(node.decl, tuple(on_expr(p) for p in node.params), regs(node.dom), regs(node.cod))
        if isinstance(node, Scale):
            return Scale(on_expr(node.coeff), walk(node.body))
        if isinstance(node, Adjoint):
            return Adjoint(walk(node.body))
        if isinstance(node, (Sum, Product, Tensor)):
            return type(node)(walk(node.left), walk(node.right))
        if isinstance(node, Instance):
            return Instance(node.definition, tuple(on_expr(a) for a in node.args), node.arrays, node.name)
        raise TypeMismatchError(f"not a formal operator: {node!r}")

    return walk(op)


def iter_refs(op: FormalOp) -> Iterable[QuantumRef]:
    """Every quantum reference occurring in a term (instances contribute none)."""
    found = []
    map_op(op, lambda e: e, lambda r: found.append(r) or r)
    return found


def iter_exprs(op: FormalOp) -> Iterable[Expr]:
    found = []

    def grab(expr: Expr) -> Expr:
        found.append(expr)
        return expr

    def grab_ref(ref: QuantumRef) -> QuantumRef:
        found.extend(ref.indices)
        return ref

    map_op(op, grab, grab_ref)
    return found


# ---------------------------------------------------------------------------
# Substitution and free variables
# ---------------------------------------------------------------------------

def subst_classical(op: FormalOp, terms, targets) -> FormalOp:
    """
    A[t/x]: push a classical substitution into labels, indices, parameters
    and coefficients. Simultaneous when sequences are given.
    """
    pairs = substitution_pairs(terms, targets)

    def on_expr(expr: Expr) -> Expr:
        return _subst_e(expr, pairs)

    def on_ref(ref: QuantumRef) -> QuantumRef:
        return QuantumRef(ref.base, tuple(on_expr(i) for i in ref.indices))

    return map_op(op, on_expr, on_ref)


def _operator_pairs(replacements, variables) -> Dict[str, Tuple[FormalOp, OperatorVarDecl]]:
    if isinstance(variables, OperatorVarDecl):
        variables, replacements = (variables,), (replacements,)
    variables, replacements = tuple(variables), tuple(replacements)
    if len(variables) != len(replacements):
        raise TypeMismatchError(f"{len(replacements)} operators for {len(variables)} operator variables")
    table = {}
    for var, repl in zip(variables, replacements):
        if repl.sig.dynamic:
            raise TypeMismatchError(f"replacement for '{var.name}' needs a static signature")
        dom_types, cod_types = repl.sig.shape()
        if dom_types != var.dom_types or cod_types != var.cod_types:
            raise TypeMismatchError(f"replacement for '{var.name}' has the wrong quantum type")
        if var.name in table:
            raise TypeMismatchError(f"operator variable '{var.name}' substituted twice")
        table[var.name] = (repl, var)
    return table


def retarget(op: FormalOp, dom: RegisterString, cod: RegisterString) -> FormalOp:
    """
    Rename the registers of a closed term onto a new signature

    Raises:
        TypeMismatchError: the term mentions registers outside its own
            signature, or one of its registers would map to two targets
    """
    mapping: Dict[QuantumRef, QuantumRef] = {}
    for source, target in zip(tuple(op.sig.dom) + tuple(op.sig.cod), tuple(dom) + tuple(cod)):
        if mapping.get(source, target) != target:
            raise TypeMismatchError(f"register '{source.base.name}' would be renamed ambiguously")
        mapping[source] = target
    for ref in iter_refs(op):
        if ref not in mapping:
            raise TypeMismatchError(f"register '{ref.base.name}' is not part of the replacement's signature")
    return map_op(op, lambda e: e, lambda r: mapping[r])


def subst_operator(op: FormalOp, replacements, variables) -> FormalOp:
    """
    A[B/X]: replace every occurrence X[r -> r'] by B retargeted onto r, r'

    Simultaneous when sequences are given.
    """
    table = _operator_pairs(replacements, variables)

    def on_opvar(node: OpVar, dom: RegisterString, cod: RegisterString) -> FormalOp:
        entry = table.get(node.decl.name)
        if entry is None:
            return OpVar(node.decl, dom, cod)
        return retarget(entry[0], dom, cod)

    return map_op(op, lambda e: e, lambda r: r, on_opvar)


def rename_operator_var(op: FormalOp, old: OperatorVarDecl, new: OperatorVarDecl) -> FormalOp:
    def on_opvar(node: OpVar, dom: RegisterString, cod: RegisterString) -> FormalOp:
        return OpVar(new if node.decl.name == old.name else node.decl, dom, cod)

    return map_op(op, lambda e: e, lambda r: r, on_opvar)


def classical_vars(op: FormalOp) -> Dict[str, Any]:
    """Free classical variables (simple and array) keyed by name."""
    out: Dict[str, Any] = {}
    for expr in iter_exprs(op):
        collect_expr_vars(expr, out)
    _collect_instance_externals(op, out)
    return out


def _collect_instance_externals(op: FormalOp, out: Dict[str, Any]) -> None:
    if isinstance(op, Instance):
        for var in getattr(op.definition, "external_vars", ()):
            out.setdefault(var.name, var)
    for child in _children(op):
        _collect_instance_externals(child, out)


def _children(op: FormalOp) -> Tuple[FormalOp, ...]:
    if isinstance(op, (Scale, Adjoint)):
        return (op.body,)
    if isinstance(op, (Sum, Product, Tensor)):
        return (op.left, op.right)
    return ()


def free_classical_vars(op: FormalOp) -> frozenset:
    return frozenset(classical_vars(op))


def operator_vars(op: FormalOp) -> Dict[str, OperatorVarDecl]:
    out: Dict[str, OperatorVarDecl] = {}

    def visit(node: FormalOp) -> None:
        if isinstance(node, OpVar):
            out.setdefault(node.decl.name, node.decl)
        for child in _children(node):
            visit(child)

    visit(op)
    return out


def free_operator_vars(op: FormalOp) -> frozenset:
    return frozenset(operator_vars(op))
