"""
Conditional rewriting of formal operators and normal forms

A normal form is a sparse sum of ground dyads c |s><t| with registers in
canonical order on both sides. Side conditions of rewrite rules are
classical formulas, discharged either under a concrete state or by
entailment from a classical theory.
"""

from collections import defaultdict
from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..utils.converters import complex_to_json, format_complex
from ..utils.log import log_debug, log_info
from .classical_logic import (
    BOOL,
    COMPLEX,
    FALSE,
    INT,
    App,
    Atom,
    Const,
    Expr,
    Formula,
    State,
    Structure,
    Var,
    app,
    conj,
    const,
    disj,
    eq,
    eval_expr,
    int_type,
    ne,
    satisfies,
    subst_formula,
)
from .errors import EvaluationError, SigningError, TypeMismatchError, UnsupportedQuantifierError
from .generators import (
    complex_gaussian,
    random_hermitian,
    random_int_expr,
    random_operator_term,
    random_psd,
    wrapped,
)
from .operator_terms import (
    DYNAMIC,
    Adjoint,
    Bra,
    FormalOp,
    Instance,
    Ket,
    OpConst,
    OperatorConstDecl,
    OperatorVarDecl,
    OpVar,
    Product,
    Scalar,
    Scale,
    Signature,
    Sum,
    Tensor,
    negate,
)
from .quantum_registers import (
    GroundRef,
    QuantumRef,
    QuantumVarDecl,
    RegisterString,
    canonical_order,
    distinctness_formula,
    ground,
    ground_dim,
    registers,
)
from .reports import SuiteReport
from .semantics_engine import (
    MAX_RECURSION_DEPTH,
    Context,
    GroundSignature,
    Matrix,
    QuantumStructure,
    Relation,
    Valuation,
    check_signing,
    compare,
    eval_operator,
)
from .sol_logic import (
    ClassicalAtom,
    EntailmentQuery,
    OpEq,
    OpLeq,
    SolAnd,
    check_entailment,
    sat_sol,
    sol_conj,
    sol_implies,
    subst_sol,
)
from .stdlib_examples import builtin_gates, default_quantum_structure

_RECOVERABLE = (SigningError, EvaluationError, TypeMismatchError)


# ---------------------------------------------------------------------------
# Normal forms
# ---------------------------------------------------------------------------

Key = Tuple[tuple, tuple]


def _label_text(value: Any) -> str:
    return str(int(value))


def _as_ref(g: GroundRef) -> QuantumRef:
    indices = tuple(Const(v, t) for v, t in zip(g.index_values, g.base.arg_types))
    return QuantumRef(g.base, indices)


@dataclass(frozen=True)
class NormalForm:
    """sum of c |s><t| over ground dyads; rows and cols in canonical register order."""

    rows: Tuple[GroundRef, ...]
    cols: Tuple[GroundRef, ...]
    terms: Mapping[Key, complex] = field(default_factory=dict)

    @property
    def signature(self) -> GroundSignature:
        return GroundSignature(self.rows, self.cols)

    def _index(self, labels: tuple, refs: Tuple[GroundRef, ...]) -> int:
        if not refs:
            return 0
        digits = tuple(r.value_type.index_of(v) for v, r in zip(labels, refs))
        return int(np.ravel_multi_index(digits, tuple(r.dim for r in refs)))

    def sorted_terms(self) -> List[Tuple[Key, complex]]:
        return sorted(
            self.terms.items(),
            key=lambda item: (self._index(item[0][0], self.rows), self._index(item[0][1], self.cols)),
        )

    def coefficient(self, ket: Sequence, bra: Sequence) -> complex:
        return self.terms.get((tuple(ket), tuple(bra)), 0j)

    def to_matrix(self) -> np.ndarray:
        data = np.zeros((ground_dim(self.rows), ground_dim(self.cols)), dtype=complex)
        for (s, t), c in self.terms.items():
            data[self._index(s, self.rows), self._index(t, self.cols)] = c
        return data

    def to_formal_op(self) -> FormalOp:
        """The normal form written back as a term: a sum of scaled dyads."""
        items = self.sorted_terms()
        if not items:
            zero_key = (
                tuple(r.value_type.domain()[0] for r in self.rows),
                tuple(c.value_type.domain()[0] for c in self.cols),
            )
            items = [(zero_key, 0j)]
        result: Optional[FormalOp] = None
        for (s, t), c in items:
            dyad = Scale(Const(complex(c), COMPLEX), self._dyad(s, t))
            result = dyad if result is None else Sum(result, dyad)
        return result

    def _dyad(self, s: tuple, t: tuple) -> FormalOp:
        kets = [Ket(Const(v, g.value_type), _as_ref(g)) for v, g in zip(s, self.rows)]
        bras = [Bra(Const(v, g.value_type), _as_ref(g)) for v, g in zip(t, self.cols)]
        ket = _tensor_all(kets)
        bra = _tensor_all(bras)
        if ket is None and bra is None:
            return Scalar(Const(1 + 0j, COMPLEX))
        if bra is None:
            return ket
        if ket is None:
            return bra
        return Product(ket, bra)

    def lines(self) -> List[str]:
        """Printable form: one ``c |s>_q <t|_q'`` line per dyad."""
        row_regs = ",".join(r.label for r in self.rows)
        col_regs = ",".join(r.label for r in self.cols)
        out = []
        for (s, t), c in self.sorted_terms():
            parts = [format_complex(c)]
            if self.rows:
                parts.append(f"|{','.join(_label_text(v) for v in s)}>_{row_regs}")
            if self.cols:
                parts.append(f"<{','.join(_label_text(v) for v in t)}|_{col_regs}")
            out.append(" ".join(parts))
        return out or ["0"]

    def to_json(self) -> Dict[str, Any]:
        return {
            "rows": [r.label for r in self.rows],
            "cols": [r.label for r in self.cols],
            "terms": [
                {"ket": [int(v) for v in s], "bra": [int(v) for v in t], "coeff": complex_to_json(c)}
                for (s, t), c in self.sorted_terms()
            ],
        }

    def equals(self, other: "NormalForm", tolerance: float) -> bool:
        if self.rows != other.rows or self.cols != other.cols:
            return False
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= tolerance for k in keys)


def _tensor_all(parts: Sequence[FormalOp]) -> Optional[FormalOp]:
    result = None
    for part in parts:
        result = part if result is None else Tensor(result, part)
    return result


@dataclass
class _Dyads:
    rows: Tuple[GroundRef, ...]
    cols: Tuple[GroundRef, ...]
    terms: Dict[Key, complex]

    def reorder(self, rows: Sequence[GroundRef], cols: Sequence[GroundRef]) -> "_Dyads":
        rows, cols = tuple(rows), tuple(cols)
        if rows == self.rows and cols == self.cols:
            return self
        row_perm = [self.rows.index(r) for r in rows]
        col_perm = [self.cols.index(c) for c in cols]
        terms: Dict[Key, complex] = defaultdict(complex)
        for (s, t), c in self.terms.items():
            terms[(tuple(s[i] for i in row_perm), tuple(t[i] for i in col_perm))] += c
        return _Dyads(rows, cols, dict(terms))

    def pruned(self, tolerance: float) -> "_Dyads":
        return _Dyads(self.rows, self.cols, {k: c for k, c in self.terms.items() if abs(c) > tolerance})


class _Normaliser:
    def __init__(self, ctx: Context):
        self.ctx = ctx
        self.tolerance = ctx.tolerance
        self.depth = 0

    def _number(self, expr: Expr) -> complex:
        return complex(eval_expr(self.ctx.sigma, expr))

    def _label(self, label: Expr, g: GroundRef) -> Any:
        return g.value_type.coerce(eval_expr(self.ctx.sigma, label), self.tolerance)

    def _from_matrix(self, matrix: Matrix) -> _Dyads:
        terms = {}
        row_domains = [r.value_type.domain() for r in matrix.rows]
        col_domains = [c.value_type.domain() for c in matrix.cols]
        row_dims = tuple(r.dim for r in matrix.rows)
        col_dims = tuple(c.dim for c in matrix.cols)
        for i, j in zip(*np.nonzero(np.abs(matrix.data) > self.tolerance)):
            s = tuple(d[k] for d, k in zip(row_domains, np.unravel_index(i, row_dims))) if row_dims else ()
            t = tuple(d[k] for d, k in zip(col_domains, np.unravel_index(j, col_dims))) if col_dims else ()
            terms[(s, t)] = complex(matrix.data[i, j])
        return _Dyads(matrix.rows, matrix.cols, terms)

    def run(self, op: FormalOp) -> _Dyads:
        return self._run(op).pruned(self.tolerance)

    def _run(self, op: FormalOp) -> _Dyads:
        sigma = self.ctx.sigma
        if isinstance(op, Scalar):
            return _Dyads((), (), {((), ()): self._number(op.value)})
        if isinstance(op, Ket):
            g = ground(sigma, op.reg)
            return _Dyads((g,), (), {((self._label(op.label, g),), ()): 1 + 0j})
        if isinstance(op, Bra):
            g = ground(sigma, op.reg)
            return _Dyads((), (g,), {((), (self._label(op.label, g),)): 1 + 0j})
        if isinstance(op, Scale):
            c = self._number(op.coeff)
            inner = self._run(op.body)
            return _Dyads(inner.rows, inner.cols, {k: c * v for k, v in inner.terms.items()})
        if isinstance(op, Adjoint):
            inner = self._run(op.body)
            return _Dyads(inner.cols, inner.rows, {(t, s): v.conjugate() for (s, t), v in inner.terms.items()})
        if isinstance(op, Sum):
            # coefficient addition
            left = self._run(op.left)
            right = self._run(op.right).reorder(left.rows, left.cols)
            terms: Dict[Key, complex] = defaultdict(complex, left.terms)
            for k, v in right.terms.items():
                terms[k] += v
            return _Dyads(left.rows, left.cols, dict(terms)).pruned(self.tolerance)
        if isinstance(op, Product):
            # <t|u> contracts to a Kronecker delta on the evaluated labels
            left = self._run(op.left)
            right = self._run(op.right)
            right = right.reorder(left.cols, right.cols)
            by_row: Dict[tuple, List[Tuple[tuple, complex]]] = defaultdict(list)
            for (u, w), v in right.terms.items():
                by_row[u].append((w, v))
            terms = defaultdict(complex)
            for (s, t), c in left.terms.items():
                for w, v in by_row.get(t, ()):
                    terms[(s, w)] += c * v
            return _Dyads(left.rows, right.cols, dict(terms)).pruned(self.tolerance)
        if isinstance(op, Tensor):
            left = self._run(op.left)
            right = self._run(op.right)
            terms = {
                (s + u, t + w): c * v
                for (s, t), c in left.terms.items()
                for (u, w), v in right.terms.items()
            }
            return _Dyads(left.rows + right.rows, left.cols + right.cols, terms)
        if isinstance(op, (OpVar, OpConst)):
            return self._from_matrix(eval_operator(self.ctx, op))
        if isinstance(op, Instance):
            self.depth += 1
            if self.depth > MAX_RECURSION_DEPTH:
                raise EvaluationError(f"recursion depth exceeded expanding '{op.name}'")
            body, _ = op.definition.expand(sigma, op)
            try:
                return self._run(body)
            finally:
                self.depth -= 1
        raise TypeMismatchError(f"not a formal operator: {op!r}")


def normalize(sigma: State, eta: Valuation, op: FormalOp, structure: Optional[QuantumStructure] = None,
              notes: Optional[List[str]] = None) -> NormalForm:
    """
    Normal form of a well-signed operator under zeta = (sigma, eta)

    Products, tensors and adjoints are distributed over sums, bra-ket pairs
    contract to Kronecker deltas of the evaluated labels, like dyads merge,
    and operator variables and constants expand by matrix representation.

    Raises:
        SigningError, EvaluationError: propagated from signing and evaluation
    """
    structure = structure or default_quantum_structure(sigma.structure)
    check_signing(sigma, op, notes, structure)
    ctx = Context(sigma, eta, structure)
    dyads = _Normaliser(ctx).run(op)
    rows, cols = canonical_order(dyads.rows), canonical_order(dyads.cols)
    dyads = dyads.reorder(rows, cols).pruned(ctx.tolerance)
    return NormalForm(rows, cols, dyads.terms)


def decide_ground_equality(sigma: State, eta: Valuation, left: FormalOp, right: FormalOp,
                           structure: Optional[QuantumStructure] = None, notes: Optional[List[str]] = None) -> bool:
    """Ground equality by comparing normal forms entrywise within tolerance."""
    try:
        a = normalize(sigma, eta, left, structure, notes)
        b = normalize(sigma, eta, right, structure, notes)
    except _RECOVERABLE as e:
        log_debug(f"ground equality: {e}")
        if notes is not None:
            notes.append(f"ground equality: {e}")
        return False
    if a.rows != b.rows or a.cols != b.cols:
        message = f"ground equality: signatures {a.signature} and {b.signature} differ"
        log_debug(message)
        if notes is not None:
            notes.append(message)
        return False
    return a.equals(b, sigma.structure.tolerance)


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetaOp(FormalOp):
    """Operator metavariable of a rewrite pattern."""

    name: str
    sig: Signature = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sig", DYNAMIC)


@dataclass(frozen=True)
class SameRegister:
    """Side condition: two register metavariables denote the same subsystem."""

    left: str
    right: str


def meta(name: str, basic_type=INT) -> Var:
    return Var(f"?{name}", basic_type)


def meta_register(name: str) -> QuantumRef:
    return QuantumRef(QuantumVarDecl(f"?{name}"))


def _is_meta_name(name: str) -> bool:
    return name.startswith("?")


_TREE = (FormalOp, Expr, Formula, QuantumRef, RegisterString)


def _bind(bindings: Dict[str, Any], name: str, value: Any) -> bool:
    if name in bindings:
        return bindings[name] == value
    bindings[name] = value
    return True


def _match(pattern: Any, term: Any, bindings: Dict[str, Any], unit_coefficients: bool) -> bool:
    if isinstance(pattern, Var) and _is_meta_name(pattern.name):
        return isinstance(term, Expr) and _bind(bindings, pattern.name, term)
    if isinstance(pattern, QuantumRef) and _is_meta_name(pattern.base.name):
        return isinstance(term, QuantumRef) and _bind(bindings, pattern.base.name, term)
    if isinstance(pattern, MetaOp):
        return isinstance(term, FormalOp) and _bind(bindings, pattern.name, term)
    if unit_coefficients and isinstance(pattern, Scale) and isinstance(term, FormalOp) and not isinstance(term, Scale):
        trial = dict(bindings)
        if _match(pattern.coeff, Const(1 + 0j, COMPLEX), trial, unit_coefficients) and \
                _match(pattern.body, term, trial, unit_coefficients):
            bindings.update(trial)
            return True
        return False
    if isinstance(pattern, Bra) and isinstance(term, Adjoint) and isinstance(term.body, Ket):
        term = Bra(term.body.label, term.body.reg)
    if isinstance(pattern, tuple):
        return isinstance(term, tuple) and len(pattern) == len(term) and all(
            _match(p, t, bindings, unit_coefficients) for p, t in zip(pattern, term)
        )
    if isinstance(pattern, _TREE) and is_dataclass(pattern):
        if type(pattern) is not type(term):
            return False
        for f in fields(pattern):
            if f.name in ("sig", "definition"):
                continue
            if not _match(getattr(pattern, f.name), getattr(term, f.name), bindings, unit_coefficients):
                return False
        return True
    return pattern == term


def _instantiate(template: Any, bindings: Mapping[str, Any]) -> Any:
    if isinstance(template, Var) and _is_meta_name(template.name):
        return bindings[template.name]
    if isinstance(template, QuantumRef) and _is_meta_name(template.base.name):
        return bindings[template.base.name]
    if isinstance(template, MetaOp):
        return bindings[template.name]
    if isinstance(template, tuple):
        return tuple(_instantiate(t, bindings) for t in template)
    if isinstance(template, App):
        return app(template.op, *(_instantiate(a, bindings) for a in template.args))
    if isinstance(template, _TREE) and is_dataclass(template):
        kwargs = {
            f.name: (getattr(template, f.name) if f.name == "definition" else _instantiate(getattr(template, f.name), bindings))
            for f in fields(template)
            if f.init
        }
        return type(template)(**kwargs)
    return template


def _metas(template: Any, out: set) -> set:
    if isinstance(template, Var) and _is_meta_name(template.name):
        out.add(template.name)
    elif isinstance(template, QuantumRef) and _is_meta_name(template.base.name):
        out.add(template.base.name)
    elif isinstance(template, MetaOp):
        out.add(template.name)
    elif isinstance(template, tuple):
        for item in template:
            _metas(item, out)
    elif isinstance(template, _TREE) and is_dataclass(template):
        for f in fields(template):
            if f.name not in ("sig", "definition"):
                _metas(getattr(template, f.name), out)
    return out


def register_equality(a: QuantumRef, b: QuantumRef) -> Formula:
    """Classical formula saying two references denote the same subsystem."""
    if a.base != b.base:
        return FALSE
    return conj(eq(x, y) for x, y in zip(a.indices, b.indices))


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

class RewriteRule:
    """Conditional rule lhs = rhs under a classical side condition."""

    name: str

    def match(self, term: FormalOp) -> Optional[Dict[str, Any]]:
        raise NotImplementedError

    def condition(self, bindings: Mapping[str, Any]) -> Formula:
        raise NotImplementedError

    def build(self, bindings: Mapping[str, Any]) -> FormalOp:
        raise NotImplementedError


@dataclass(frozen=True)
class PatternRule(RewriteRule):
    """
    Rule given by lhs patterns (alternatives), an rhs template and side conditions

    Metavariables are classical variables and quantum variables whose names
    start with ``?``, and :class:`MetaOp` leaves.
    """

    name: str
    lhs: Tuple[FormalOp, ...]
    rhs: FormalOp
    side: Tuple[Any, ...] = ()
    unit_coefficients: bool = False

    def __post_init__(self):
        if isinstance(self.lhs, FormalOp):
            object.__setattr__(self, "lhs", (self.lhs,))
        needed = _metas(self.rhs, set())
        for item in self.side:
            needed |= {item.left, item.right} if isinstance(item, SameRegister) else _metas(item, set())
        for pattern in self.lhs:
            missing = needed - _metas(pattern, set())
            if missing:
                raise TypeMismatchError(f"rule '{self.name}' uses unbound metavariables {sorted(missing)}")

    def match(self, term: FormalOp) -> Optional[Dict[str, Any]]:
        for pattern in self.lhs:
            bindings: Dict[str, Any] = {}
            if _match(pattern, term, bindings, self.unit_coefficients):
                return bindings
        return None

    def condition(self, bindings: Mapping[str, Any]) -> Formula:
        parts = []
        for item in self.side:
            if isinstance(item, SameRegister):
                parts.append(register_equality(bindings[item.left], bindings[item.right]))
            else:
                parts.append(_instantiate(item, bindings))
        return conj(parts)

    def build(self, bindings: Mapping[str, Any]) -> FormalOp:
        return _instantiate(self.rhs, bindings)


def _ket_string(op: FormalOp) -> Optional[List[Tuple[Expr, QuantumRef]]]:
    if isinstance(op, Ket):
        return [(op.label, op.reg)]
    if isinstance(op, Tensor):
        left, right = _ket_string(op.left), _ket_string(op.right)
        if left is not None and right is not None:
            return left + right
    return None


def _bra_string(op: FormalOp) -> Optional[List[Tuple[Expr, QuantumRef]]]:
    if isinstance(op, Bra):
        return [(op.label, op.reg)]
    if isinstance(op, Adjoint):
        return _ket_string(op.body)
    if isinstance(op, Tensor):
        left, right = _bra_string(op.left), _bra_string(op.right)
        if left is not None and right is not None:
            return left + right
    return None


def _summands(op: FormalOp) -> List[FormalOp]:
    if isinstance(op, Sum):
        return _summands(op.left) + _summands(op.right)
    return [op]


def _in_domain(label: Expr, ref: QuantumRef) -> Formula:
    value_type = ref.value_type
    if label.type.matches(value_type) and value_type.name == "Bool":
        return conj(())
    lo, hi = (0, 1) if value_type.name == "Bool" else (value_type.lo, value_type.hi)
    return conj((Atom("ge", (label, Const(lo, INT))), Atom("le", (label, Const(hi, INT)))))


@dataclass(frozen=True)
class IdentityRule(RewriteRule):
    """sum_i |s_i><s_i| over dim(q) distinct labels = I[q]."""

    identity: OperatorConstDecl
    name: str = "identity"

    def match(self, term: FormalOp) -> Optional[Dict[str, Any]]:
        summands = _summands(term)
        refs = None
        kets, bras = [], []
        for summand in summands:
            if not isinstance(summand, Product):
                return None
            ket, bra = _ket_string(summand.left), _bra_string(summand.right)
            if ket is None or bra is None:
                return None
            ket_refs = tuple(r for _, r in ket)
            if ket_refs != tuple(r for _, r in bra) or (refs is not None and ket_refs != refs):
                return None
            refs = ket_refs
            kets.append(tuple(label for label, _ in ket))
            bras.append(tuple(label for label, _ in bra))
        if refs is None or RegisterString(refs).dim() != len(summands):
            return None
        return {"regs": refs, "kets": tuple(kets), "bras": tuple(bras)}

    def condition(self, bindings: Mapping[str, Any]) -> Formula:
        refs, kets, bras = bindings["regs"], bindings["kets"], bindings["bras"]
        parts = [distinctness_formula(RegisterString(refs))]
        for ket, bra in zip(kets, bras):
            parts.extend(eq(s, t) for s, t in zip(ket, bra))
            parts.extend(_in_domain(s, r) for s, r in zip(ket, refs))
        for i in range(len(kets)):
            for j in range(i + 1, len(kets)):
                parts.append(disj(ne(s, t) for s, t in zip(kets[i], kets[j])))
        return conj(parts)

    def build(self, bindings: Mapping[str, Any]) -> FormalOp:
        regs = RegisterString(bindings["regs"])
        return OpConst(self.identity, (), regs, regs)


@dataclass(frozen=True)
class MatrixRepresentationRule(RewriteRule):
    """A = sum_ik <s_i|A|t_k> |s_i><t_k| for an opaque A over bounded registers."""

    name: str = "matrix-representation"

    def match(self, term: FormalOp) -> Optional[Dict[str, Any]]:
        if not isinstance(term, (OpVar, OpConst)) or term.sig.dynamic:
            return None
        if not all(t.bounded for t in term.sig.dom.value_types + term.sig.cod.value_types):
            return None
        return {"op": term}

    def condition(self, bindings: Mapping[str, Any]) -> Formula:
        op = bindings["op"]
        return conj((distinctness_formula(op.sig.dom), distinctness_formula(op.sig.cod)))

    def build(self, bindings: Mapping[str, Any]) -> FormalOp:
        op = bindings["op"]
        rows, cols = tuple(op.sig.dom), tuple(op.sig.cod)
        result: Optional[FormalOp] = None
        for s in _basis(rows):
            for t in _basis(cols):
                ket = _tensor_all([Ket(Const(v, r.value_type), r) for v, r in zip(s, rows)])
                bra = _tensor_all([Bra(Const(v, r.value_type), r) for v, r in zip(t, cols)])
                # <s|A|t> as an eps -> eps operator
                inner: FormalOp = op
                if ket is not None:
                    inner = Product(Adjoint(ket), inner)
                if bra is not None:
                    inner = Product(inner, Adjoint(bra))
                dyad = inner
                if ket is not None:
                    dyad = Product(ket, dyad)
                if bra is not None:
                    dyad = Product(dyad, bra)
                result = dyad if result is None else Sum(result, dyad)
        return result


def _basis(refs: Sequence[QuantumRef]) -> List[tuple]:
    domains = [r.value_type.domain() for r in refs]
    out: List[tuple] = [()]
    for domain in domains:
        out = [prefix + (v,) for prefix in out for v in domain]
    return out


_A1, _A2 = meta("a1", COMPLEX), meta("a2", COMPLEX)
_S1, _S2, _S3 = meta("s1"), meta("s2"), meta("s3")
_Q1, _Q2, _Q3 = meta_register("q1"), meta_register("q2"), meta_register("q3")

COEFFICIENT_ADDITION = PatternRule(
    "coefficient-addition",
    (Sum(Scale(_A1, Ket(_S1, _Q1)), Scale(_A2, Ket(_S2, _Q2))),),
    Scale(app("+", _A1, _A2), Ket(_S1, _Q1)),
    (eq(_S1, _S2), SameRegister("?q1", "?q2")),
    unit_coefficients=True,
)

SELF_OUTER_PRODUCT = PatternRule(
    "self-outer-product",
    (
        Product(Product(Ket(_S1, _Q1), Bra(_S2, _Q2)), Ket(_S3, _Q3)),
        Product(Ket(_S1, _Q1), Product(Bra(_S2, _Q2), Ket(_S3, _Q3))),
    ),
    Ket(_S1, _Q1),
    (eq(_S2, _S3), SameRegister("?q2", "?q3")),
)

LINEARITY = PatternRule(
    "linearity",
    (Scale(_A1, Sum(MetaOp("?A1"), MetaOp("?A2"))),),
    Sum(Scale(_A1, MetaOp("?A1")), Scale(_A1, MetaOp("?A2"))),
)

IDENTITY = IdentityRule(builtin_gates()["I"])
MATRIX_REPRESENTATION = MatrixRepresentationRule()

BUILTIN_RULES: Dict[str, RewriteRule] = {
    rule.name: rule
    for rule in (COEFFICIENT_ADDITION, SELF_OUTER_PRODUCT, IDENTITY, MATRIX_REPRESENTATION, LINEARITY)
}


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------

@dataclass
class RewriteResult:
    term: FormalOp
    applied: bool
    reason: str = ""
    path: Tuple[str, ...] = ()


def _subterms(op: FormalOp, path: Tuple[str, ...] = ()) -> Iterator[Tuple[Tuple[str, ...], FormalOp]]:
    yield path, op
    if isinstance(op, (Scale, Adjoint)):
        yield from _subterms(op.body, path + ("body",))
    elif isinstance(op, (Sum, Product, Tensor)):
        yield from _subterms(op.left, path + ("left",))
        yield from _subterms(op.right, path + ("right",))


def _replace_at(op: FormalOp, path: Tuple[str, ...], new: FormalOp) -> FormalOp:
    if not path:
        return new
    head, rest = path[0], path[1:]
    return replace(op, **{head: _replace_at(getattr(op, head), rest, new)})


def discharge(condition: Formula, sigma: Optional[State] = None, theory: Sequence[Formula] = (),
              int_ranges: Optional[Mapping[str, Tuple[int, int]]] = None,
              structure: Optional[QuantumStructure] = None) -> Tuple[bool, str]:
    """
    Discharge a side condition under a concrete state, or by entailment from
    a classical theory when no state is given
    """
    if sigma is not None:
        try:
            if satisfies(sigma, condition):
                return True, ""
            return False, "side condition does not hold in the current state"
        except (EvaluationError, TypeMismatchError, UnsupportedQuantifierError) as e:
            return False, f"side condition cannot be evaluated: {e}"
    query = EntailmentQuery(tuple(theory), (), ClassicalAtom(condition), int_ranges=dict(int_ranges or {}))
    result = check_entailment(query, structure)
    if result.valid:
        return True, ""
    return False, f"side condition is not entailed ({result.verdict.value}{': ' + result.reason if result.reason else ''})"


def try_rewrite(op: FormalOp, rule: RewriteRule, bindings: Optional[Mapping[str, Any]] = None,
                sigma: Optional[State] = None, theory: Sequence[Formula] = (),
                int_ranges: Optional[Mapping[str, Tuple[int, int]]] = None,
                structure: Optional[QuantumStructure] = None) -> RewriteResult:
    """
    Rewrite the first subterm (pre-order) that matches and whose side
    condition discharges; otherwise return the input with the reason
    """
    first_reason = ""
    for path, node in _subterms(op):
        found = rule.match(node)
        if found is None:
            continue
        if bindings and any(found.get(k) != v for k, v in bindings.items()):
            continue
        try:
            ok, reason = discharge(rule.condition(found), sigma, theory, int_ranges, structure)
        except TypeMismatchError as e:
            ok, reason = False, f"side condition is ill-typed: {e}"
        if ok:
            return RewriteResult(_replace_at(op, path, rule.build(found)), True, "", path)
        first_reason = first_reason or f"{rule.name}: {reason}"
    return RewriteResult(op, False, first_reason or f"{rule.name}: no subterm matches")


def rewrite_step(op: FormalOp, rule: RewriteRule, bindings: Optional[Mapping[str, Any]] = None,
                 sigma: Optional[State] = None, theory: Sequence[Formula] = (),
                 int_ranges: Optional[Mapping[str, Tuple[int, int]]] = None,
                 structure: Optional[QuantumStructure] = None) -> FormalOp:
    """One conditional rewrite; a condition that cannot be discharged leaves the term unchanged."""
    result = try_rewrite(op, rule, bindings, sigma, theory, int_ranges, structure)
    if not result.applied:
        log_debug(result.reason)
    return result.term


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _record(report: SuiteReport, name: str, failures: List[str], instances: int) -> None:
    report.add(name, not failures, failures[0] if failures else "", instances=instances, failures=len(failures))


def _semantics_agree(ctx: Context, a: FormalOp, b: FormalOp) -> bool:
    return compare(ctx, a, b, Relation.EQUAL)


def _named_rule_instances(report: SuiteReport, structure: QuantumStructure, rng: np.random.Generator) -> None:
    base = structure.base
    gates = builtin_gates()
    q = QuantumVarDecl("q", (INT,), BOOL)
    r = QuantumRef(QuantumVarDecl("r"))
    x, y = Var("x", INT), Var("y", INT)
    sigma = State({"x": 1, "y": 1, "i": 2, "j": 5, "k": 5}, base)
    ctx = Context(sigma, Valuation(), structure)

    def check(name: str, term: FormalOp, rule: RewriteRule, expected: Optional[FormalOp] = None,
              **options) -> None:
        result = try_rewrite(term, rule, structure=structure, **options)
        failures = []
        if not result.applied:
            failures.append(result.reason)
        elif expected is not None and result.term != expected:
            failures.append(f"got {result.term!r}")
        elif not _semantics_agree(ctx, term, result.term):
            failures.append("rewrite changed the meaning")
        _record(report, name, failures, 1)

    a1, a2 = const(complex(rng.standard_normal())), const(complex(rng.standard_normal()))
    check("rule: coefficient addition",
          Sum(Scale(a1, Ket(x, r)), Scale(a2, Ket(y, r))), COEFFICIENT_ADDITION, sigma=sigma)
    check("rule: coefficient addition under a theory",
          Sum(Ket(x, r), Ket(y, r)), COEFFICIENT_ADDITION,
          theory=(eq(x, y),), int_ranges={"x": (0, 1), "y": (0, 1)})
    qi, qj, qk = (QuantumRef(q, (Var(n, INT),)) for n in "ijk")
    check("rule: self outer product",
          Product(Product(Ket(Const(True, BOOL), qi), Bra(Const(False, BOOL), qj)), Ket(Const(False, BOOL), qk)),
          SELF_OUTER_PRODUCT, Ket(Const(True, BOOL), qi), sigma=sigma)
    identity_sum = Sum(
        Product(Ket(Const(False, BOOL), r), Bra(Const(False, BOOL), r)),
        Product(Ket(Const(True, BOOL), r), Bra(Const(True, BOOL), r)),
    )
    check("rule: identity", identity_sum, IDENTITY, OpConst(gates["I"], (), registers(r), registers(r)), sigma=sigma)
    qutrit = QuantumRef(QuantumVarDecl("t", (), int_type(0, 2)))
    trit_sum = Sum(Sum(
        Product(Ket(Const(2, INT), qutrit), Bra(Const(2, INT), qutrit)),
        Product(Ket(Const(0, INT), qutrit), Bra(Const(0, INT), qutrit))),
        Product(Ket(Const(1, INT), qutrit), Bra(Const(1, INT), qutrit)),
    )
    check("rule: identity on a qutrit", trit_sum, IDENTITY, sigma=sigma)
    check("rule: matrix representation", OpConst(gates["H"], (), registers(r), registers(r)),
          MATRIX_REPRESENTATION, sigma=sigma)
    h, z = (OpConst(gates[n], (), registers(r), registers(r)) for n in "HZ")
    check("rule: linearity", Scale(a1, Sum(h, z)), LINEARITY, Sum(Scale(a1, h), Scale(a1, z)), sigma=sigma)

    blocked = Sum(Ket(Const(False, BOOL), r), Ket(Const(True, BOOL), r))
    result = try_rewrite(blocked, COEFFICIENT_ADDITION, sigma=sigma, structure=structure)
    report.add("rule: failing side condition is a no-op", not result.applied and result.term == blocked, result.reason)


def _state_equality_instances(report: SuiteReport, structure: QuantumStructure, rng: np.random.Generator,
                              instances: int) -> None:
    """Distinct labels: sum a_i |s_i> = sum b_i |s_i> forces a_i = b_i."""
    reg = QuantumRef(QuantumVarDecl("t", (), int_type(0, 3)))
    alphas = [Var(f"a{i}", COMPLEX) for i in range(4)]
    betas = [Var(f"b{i}", COMPLEX) for i in range(4)]

    def state(coeffs) -> FormalOp:
        result = None
        for i, c in enumerate(coeffs):
            term = Scale(c, Ket(Const(i, INT), reg))
            result = term if result is None else Sum(result, term)
        return result

    law = sol_implies(OpEq(state(alphas), state(betas)),
                      ClassicalAtom(conj(eq(a, b) for a, b in zip(alphas, betas))))
    failures = []
    for n in range(instances):
        values = complex_gaussian(rng, 1, 4)[0]
        perturbed = values.copy()
        if n % 2:
            perturbed[int(rng.integers(4))] += 0.5
        sigma_values = {f"a{i}": complex(values[i]) for i in range(4)}
        sigma_values.update({f"b{i}": complex(perturbed[i]) for i in range(4)})
        ctx = Context(State(sigma_values, structure.base), Valuation(), structure)
        if not sat_sol(ctx, law):
            failures.append(f"instance {n}")
    _record(report, "law: equality of quantum states", failures, instances)


def rewrite_suite(instances: int = 500, seed: int = 0, tolerance: float = 1e-9) -> SuiteReport:
    """
    Normal forms against the matrix semantics, ground equality against
    compare, the named rules on their displayed instances
    """
    structure = default_quantum_structure(Structure(tolerance=tolerance))
    gates = builtin_gates()
    rng = np.random.default_rng(seed)
    q = QuantumVarDecl("q", (INT,), BOOL)
    pool = [QuantumRef(q, (Const(i, INT),)) for i in range(3)]
    sigma = State({}, structure.base)
    eta = Valuation()
    ctx = Context(sigma, eta, structure)
    report = SuiteReport("rewrite")

    def registers_sample() -> Tuple[QuantumRef, ...]:
        chosen = [ref for ref in pool if rng.random() < 0.5]
        rng.shuffle(chosen)
        return tuple(chosen)

    preserve, idempotent, agree = [], [], []
    for i in range(instances):
        rows, cols = registers_sample(), registers_sample()
        term = random_operator_term(rng, rows, cols, gates, 4)
        try:
            nf = normalize(sigma, eta, term, structure)
            matrix = eval_operator(ctx, term)
        except _RECOVERABLE as e:
            preserve.append(f"instance {i}: {e}")
            continue
        if not np.allclose(matrix.permuted(nf.rows, nf.cols).data, nf.to_matrix(), atol=tolerance, rtol=0):
            preserve.append(f"instance {i}: {term!r}")
        if not normalize(sigma, eta, nf.to_formal_op(), structure).equals(nf, tolerance):
            idempotent.append(f"instance {i}: {term!r}")

        kind = i % 3
        if kind == 0:
            other = nf.to_formal_op()
        elif kind == 1:
            other = Scale(const(complex(1 + rng.integers(1, 3))), term)
        else:
            other = random_operator_term(rng, rows, cols, gates, 3)
        decided = decide_ground_equality(sigma, eta, term, other, structure)
        if decided != compare(ctx, term, other, Relation.EQUAL):
            agree.append(f"instance {i}: {term!r} vs {other!r}")

    _record(report, "normalize preserves the matrix", preserve, instances)
    _record(report, "normalize is idempotent", idempotent, instances)
    _record(report, "ground equality agrees with compare", agree, instances)
    _named_rule_instances(report, structure, rng)
    _state_equality_instances(report, structure, rng, 100)
    log_info(f"rewrite suite: {len(report.outcomes) - len(report.failures)}/{len(report.outcomes)} checks passed")
    return report


def order_laws_suite(instances: int = 100, seed: int = 0, tolerance: float = 1e-9) -> SuiteReport:
    """
    Loewner-order laws on random PSD-ordered pairs: anti-symmetry,
    transitivity, preservation by scaling, complement, adjoint, sums,
    conjugation and tensor, probabilistic combination, and closure of
    order and equality verdicts under substitution
    """
    structure = default_quantum_structure(Structure(int_range=(-3, 3), tolerance=tolerance))
    gates = builtin_gates()
    rng = np.random.default_rng(seed)
    q, r = QuantumRef(QuantumVarDecl("q")), QuantumRef(QuantumVarDecl("r"))
    on_q, on_r = registers(q), registers(r)
    qubit = (BOOL,)

    def opvar(name: str, regs: RegisterString = on_q) -> OpVar:
        return OpVar(OperatorVarDecl(name, qubit, qubit), regs, regs)

    A, B, C, D = opvar("A"), opvar("B"), opvar("C"), opvar("D")
    K = opvar("K", on_r)
    c = Var("c", COMPLEX)
    identity = gates["I"]

    def ordered_pair():
        a = random_hermitian(rng, 2)
        return a, a + random_psd(rng, 2)

    laws = {
        "order: anti-symmetry": sol_implies(SolAnd(OpLeq(A, B), OpLeq(B, A)), OpEq(A, B)),
        "order: transitivity": sol_implies(SolAnd(OpLeq(A, B), OpLeq(B, C)), OpLeq(A, C)),
        "order: scaling by c >= 0": sol_implies(
            SolAnd(OpLeq(A, B), ClassicalAtom(Atom("ge", (c, Const(0, INT))))), OpLeq(Scale(c, A), Scale(c, B))),
        "order: scaling by c <= 0": sol_implies(
            SolAnd(OpLeq(A, B), ClassicalAtom(Atom("le", (c, Const(0, INT))))), OpLeq(Scale(c, B), Scale(c, A))),
        "order: complement": sol_implies(OpLeq(A, B), OpLeq(negate(B, identity), negate(A, identity))),
        "order: adjoint": sol_implies(OpLeq(A, B), OpLeq(Adjoint(A), Adjoint(B))),
        "order: sums": sol_implies(OpLeq(A, B), SolAnd(OpLeq(Sum(A, D), Sum(B, D)), OpLeq(Sum(D, A), Sum(D, B)))),
        "order: conjugation": sol_implies(
            OpLeq(A, B), OpLeq(Product(Product(Adjoint(D), A), D), Product(Product(Adjoint(D), B), D))),
        "order: tensor": sol_implies(
            SolAnd(OpLeq(A, B), OpLeq(Scale(Const(0j, COMPLEX), K), K)),
            SolAnd(OpLeq(Tensor(A, K), Tensor(B, K)), OpLeq(Tensor(K, A), Tensor(K, B)))),
    }
    zero = Scale(Const(0j, COMPLEX), OpConst(identity, (), on_q, on_q))
    ps = [Var(f"p{i}", COMPLEX) for i in range(3)]
    qs = [Var(f"pp{i}", COMPLEX) for i in range(3)]
    lows = [opvar(f"L{i}") for i in range(3)]
    highs = [opvar(f"U{i}") for i in range(3)]
    premise = sol_conj(
        SolAnd(
            ClassicalAtom(conj((Atom("le", (Const(0, INT), p)), Atom("le", (p, pp))))),
            SolAnd(OpLeq(zero, lo), OpLeq(lo, hi)),
        )
        for p, pp, lo, hi in zip(ps, qs, lows, highs)
    )

    def weighted(weights, ops) -> FormalOp:
        result = None
        for w, op in zip(weights, ops):
            term = Scale(w, op)
            result = term if result is None else Sum(result, term)
        return result

    laws["order: probabilistic combination"] = sol_implies(premise, OpLeq(weighted(ps, lows), weighted(qs, highs)))

    report = SuiteReport("order-laws")
    for name, law in laws.items():
        failures = []
        vacuous = 0
        for i in range(instances):
            a, b = ordered_pair()
            upper = b + random_psd(rng, 2)
            if name == "order: anti-symmetry" and i % 2 == 0:
                b = a
            eta = {
                "A": a, "B": b, "C": upper, "D": complex_gaussian(rng, 2, 2), "K": random_psd(rng, 2),
            }
            values = {"c": complex(rng.uniform(-2, 2))}
            for k in range(3):
                low = random_psd(rng, 2)
                eta[f"L{k}"], eta[f"U{k}"] = low, low + random_psd(rng, 2)
                p = float(rng.uniform(0, 1))
                values[f"p{k}"], values[f"pp{k}"] = complex(p), complex(p + rng.uniform(0, 1))
            ctx = Context(State(values, structure.base), Valuation(eta), structure)
            notes: List[str] = []
            if not sat_sol(ctx, law, notes=notes):
                failures.append(f"instance {i}: {'; '.join(notes[-2:])}")
        _record(report, name, failures, instances)

    _substitution_preserves_verdicts(report, structure, rng, instances)
    log_info(f"order laws: {len(report.outcomes) - len(report.failures)}/{len(report.outcomes)} checks passed")
    return report


def _substitution_preserves_verdicts(report: SuiteReport, structure: QuantumStructure, rng: np.random.Generator,
                                     instances: int) -> None:
    """Valid order and equality goals stay valid after substituting for a classical variable."""
    x, y = Var("x", INT), Var("y", INT)
    lo, hi = structure.base.int_range
    ranges = {"x": (lo, hi), "y": (lo, hi)}
    q = QuantumRef(QuantumVarDecl("q"))
    P = OpVar(OperatorVarDecl("P", (BOOL,), (BOOL,)), registers(q), registers(q))
    fixed = {"P": random_psd(rng, 2)}
    failures = []
    checked = 0
    for i in range(instances):
        e1 = random_int_expr(rng, [x, y], 1)
        e2 = random_int_expr(rng, [x, y], 1)
        goal = OpLeq(Scale(e1, P), Scale(e2, P)) if i % 2 == 0 else OpEq(Scale(e1, P), Scale(e2, P))
        theory = (Atom("le", (e1, e2)),) if rng.random() < 0.5 else ()
        query = EntailmentQuery(theory, (), goal, int_ranges=ranges, fixed_operators=fixed)
        if not check_entailment(query, structure).valid:
            continue
        checked += 1
        t = wrapped(random_int_expr(rng, [y], 1), lo, hi)
        substituted = EntailmentQuery(
            tuple(subst_formula(f, t, x) for f in theory), (), subst_sol(goal, t, x),
            int_ranges={"y": (lo, hi)}, fixed_operators=fixed,
        )
        result = check_entailment(substituted, structure)
        if not result.valid:
            failures.append(f"instance {i}: substituted goal is {result.verdict.value}")
    report.add("order: substitution preserves verdicts", not failures, failures[0] if failures else "",
               instances=instances, valid_instances=checked, failures=len(failures))
