"""Quantum structures, signing judgement and matrix semantics

Evaluation produces dense numpy matrices whose rows are indexed by the
grounded row-side registers and columns by the column-side registers, each
register contributing one tensor factor in string order.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvalsh

from ..utils.log import log_debug, log_info
from .classical_logic import BOOL, INT, Const, State, Structure, Var, eval_expr, satisfies
from .errors import EvaluationError, ResourceError, SigningError, SolError, TypeMismatchError
from .generators import random_operator_term
from .operator_terms import (
    Adjoint,
    Bra,
    FormalOp,
    Instance,
    Ket,
    OpConst,
    OperatorVarDecl,
    OpVar,
    Product,
    Scalar,
    Scale,
    Sum,
    Tensor,
)
from .quantum_registers import (
    GroundRef,
    QuantumRef,
    QuantumVarDecl,
    RegisterString,
    distinctness_formula,
    ground,
    ground_dim,
    ground_string,
    pairwise_distinct,
    registers,
)
from .reports import SuiteReport


Interpretation = Callable[[tuple, int, int], np.ndarray]

MAX_RECURSION_DEPTH = 256


@dataclass
class QuantumStructure:
    """Classical structure plus matrix interpretations of operator constants."""

    base: Structure = field(default_factory=Structure)
    interpretations: Dict[str, Interpretation] = field(default_factory=dict)
    max_dim: int = 4096

    def register(self, name: str, interpretation: Interpretation) -> None:
        self.interpretations[name] = interpretation

    def interpret(self, name: str, params: tuple, rows: int, cols: int) -> np.ndarray:
        if name not in self.interpretations:
            raise EvaluationError(f"operator constant '{name}' has no interpretation")
        data = np.asarray(self.interpretations[name](params, rows, cols), dtype=complex)
        if data.shape != (rows, cols):
            raise EvaluationError(f"'{name}' interpreted as {data.shape}, expected {(rows, cols)}")
        return data


@dataclass(frozen=True)
class Valuation:
    """Operator-variable valuation eta, keyed by variable name."""

    values: Mapping[str, np.ndarray] = field(default_factory=dict)

    def updated(self, name: str, matrix: np.ndarray) -> "Valuation":
        values = dict(self.values)
        values[name] = np.asarray(matrix, dtype=complex)
        return Valuation(values)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values


@dataclass(frozen=True)
class Context:
    """Evaluation environment zeta = (sigma, eta) over one quantum structure."""

    sigma: State
    eta: Valuation = field(default_factory=Valuation)
    structure: QuantumStructure = field(default_factory=QuantumStructure)

    @property
    def tolerance(self) -> float:
        return self.sigma.structure.tolerance

    def with_sigma(self, sigma: State) -> "Context":
        return Context(sigma, self.eta, self.structure)

    def with_eta(self, eta: Valuation) -> "Context":
        return Context(self.sigma, eta, self.structure)


@dataclass(frozen=True)
class GroundSignature:
    dom: Tuple[GroundRef, ...] = ()
    cod: Tuple[GroundRef, ...] = ()

    @property
    def square(self) -> bool:
        return len(self.dom) == len(self.cod) and set(self.dom) == set(self.cod)

    def __str__(self) -> str:
        left = ",".join(r.label for r in self.dom) or "eps"
        right = ",".join(r.label for r in self.cod) or "eps"
        return f"{left} -> {right}"


@dataclass(frozen=True, eq=False)
class Matrix:
    """Dense complex matrix with one register per tensor factor on each side."""

    data: np.ndarray
    rows: Tuple[GroundRef, ...] = ()
    cols: Tuple[GroundRef, ...] = ()

    @property
    def signature(self) -> GroundSignature:
        return GroundSignature(self.rows, self.cols)

    def dag(self) -> "Matrix":
        return Matrix(self.data.conj().T, self.cols, self.rows)

    def permuted(self, rows: Sequence[GroundRef], cols: Sequence[GroundRef]) -> "Matrix":
        """Reorder tensor factors so the sides follow the given register orders."""
        rows, cols = tuple(rows), tuple(cols)
        if rows == self.rows and cols == self.cols:
            return self
        if sorted(rows, key=GroundRef.sort_key) != sorted(self.rows, key=GroundRef.sort_key) or \
                sorted(cols, key=GroundRef.sort_key) != sorted(self.cols, key=GroundRef.sort_key):
            raise EvaluationError("cannot reorder onto a different register set")
        dims = [r.dim for r in self.rows] + [c.dim for c in self.cols]
        perm = [self.rows.index(r) for r in rows] + [len(self.rows) + self.cols.index(c) for c in cols]
        tensor = self.data.reshape(dims).transpose(perm)
        return Matrix(tensor.reshape(ground_dim(rows), ground_dim(cols)), rows, cols)


def same_registers(a: Sequence[GroundRef], b: Sequence[GroundRef]) -> bool:
    return len(a) == len(b) and set(a) == set(b)


def _labels(refs: Sequence[GroundRef]) -> str:
    return ",".join(r.label for r in refs) or "eps"


def _syntactically_disjoint(left: RegisterString, right: RegisterString) -> bool:
    for a in left:
        for b in right:
            if a.base != b.base:
                continue
            if not any(
                isinstance(x, Const) and isinstance(y, Const) and x.value != y.value
                for x, y in zip(a.indices, b.indices)
            ):
                return False
    return True


class _Walker:
    """One signing/evaluation pass under a fixed context."""

    def __init__(self, ctx: Context, notes: Optional[List[str]] = None):
        self.ctx = ctx
        self.sigma = ctx.sigma
        self.notes = notes
        self.max_dim = ctx.structure.max_dim
        self.depth = 0

    def note(self, message: str) -> None:
        log_debug(message)
        if self.notes is not None:
            self.notes.append(message)

    def _cap(self, refs: Sequence[GroundRef]) -> None:
        dim = ground_dim(refs)
        if dim > self.max_dim:
            raise ResourceError(f"dimension {dim} of {_labels(refs)} exceeds the cap {self.max_dim}")

    def _distinct(self, rule: str, name: str, dom, cod) -> None:
        for side in (dom, cod):
            if not pairwise_distinct(side):
                raise SigningError(rule, f"registers of '{name}' are not distinct: {_labels(side)}", side)
        self._cap(dom)
        self._cap(cod)

    def _expand(self, inst: Instance, measures: Dict[str, int]):
        self.depth += 1
        if self.depth > MAX_RECURSION_DEPTH:
            raise EvaluationError(f"recursion of '{inst.name}' exceeds depth {MAX_RECURSION_DEPTH}")
        body, measure = inst.definition.expand(self.sigma, inst)
        previous = measures.get(inst.name)
        if previous is not None and measure is not None and measure >= previous:
            raise EvaluationError(f"recursion measure of '{inst.name}' does not decrease ({previous} -> {measure})")
        inner = dict(measures)
        if measure is not None:
            inner[inst.name] = measure
        return body, inner

    # -- signing -----------------------------------------------------------

    def sign(self, op: FormalOp, measures: Dict[str, int]) -> GroundSignature:
        if isinstance(op, Scalar):
            return GroundSignature()
        if isinstance(op, Ket):
            return GroundSignature((ground(self.sigma, op.reg),), ())
        if isinstance(op, Bra):
            return GroundSignature((), (ground(self.sigma, op.reg),))
        if isinstance(op, (OpVar, OpConst)):
            dom, cod = ground_string(self.sigma, op.dom), ground_string(self.sigma, op.cod)
            rule = "Sign-OpV" if isinstance(op, OpVar) else "Sign-OpC"
            self._distinct(rule, op.decl.name, dom, cod)
            return GroundSignature(dom, cod)
        if isinstance(op, Scale):
            return self.sign(op.body, measures)
        if isinstance(op, Adjoint):
            inner = self.sign(op.body, measures)
            return GroundSignature(inner.cod, inner.dom)
        if isinstance(op, Sum):
            a, b = self.sign(op.left, measures), self.sign(op.right, measures)
            self._check_sum(a, b)
            return a
        if isinstance(op, Product):
            a, b = self.sign(op.left, measures), self.sign(op.right, measures)
            self._check_product(a, b)
            return GroundSignature(a.dom, b.cod)
        if isinstance(op, Tensor):
            a, b = self.sign(op.left, measures), self.sign(op.right, measures)
            self._check_tensor(op, a, b)
            result = GroundSignature(a.dom + b.dom, a.cod + b.cod)
            self._cap(result.dom)
            self._cap(result.cod)
            return result
        if isinstance(op, Instance):
            body, inner = self._expand(op, measures)
            try:
                return self.sign(body, inner)
            finally:
                self.depth -= 1
        raise TypeMismatchError(f"not a formal operator: {op!r}")

    def _check_sum(self, a: GroundSignature, b: GroundSignature) -> None:
        if not (same_registers(a.dom, b.dom) and same_registers(a.cod, b.cod)):
            raise SigningError("Sign-Add", f"summands have signatures {a} and {b}", a.dom + a.cod + b.dom + b.cod)

    def _check_product(self, a: GroundSignature, b: GroundSignature) -> None:
        if not same_registers(a.cod, b.dom):
            raise SigningError(
                "Sign-Mult", f"factor registers {_labels(a.cod)} and {_labels(b.dom)} do not match", a.cod + b.dom
            )

    def _check_tensor(self, op: Tensor, a: GroundSignature, b: GroundSignature) -> None:
        overlap = (set(a.dom) & set(b.dom)) | (set(a.cod) & set(b.cod))
        if overlap:
            refs = tuple(sorted(overlap, key=GroundRef.sort_key))
            raise SigningError("Sign-Tensor", f"tensor factors share registers {_labels(refs)}", refs)
        left, right = op.left.sig, op.right.sig
        if not (left.dynamic or right.dynamic):
            if not (_syntactically_disjoint(left.dom, right.dom) and _syntactically_disjoint(left.cod, right.cod)):
                self.note(
                    f"Sign-Tensor: factors on {_labels(a.dom + a.cod)} and {_labels(b.dom + b.cod)} "
                    "are disjoint under the current state only"
                )

    # -- evaluation --------------------------------------------------------

    def value(self, op: FormalOp, measures: Dict[str, int]) -> Matrix:
        tolerance = self.ctx.tolerance
        if isinstance(op, Scalar):
            return Matrix(np.array([[complex(eval_expr(self.sigma, op.value))]]))
        if isinstance(op, (Ket, Bra)):
            ref = ground(self.sigma, op.reg)
            self._cap((ref,))
            value_type = ref.value_type
            label = value_type.coerce(eval_expr(self.sigma, op.label), tolerance)
            vector = np.zeros((ref.dim, 1), dtype=complex)
            vector[value_type.index_of(label), 0] = 1.0
            if isinstance(op, Ket):
                return Matrix(vector, (ref,), ())
            return Matrix(vector.T, (), (ref,))
        if isinstance(op, OpVar):
            dom, cod = ground_string(self.sigma, op.dom), ground_string(self.sigma, op.cod)
            self._distinct("Sign-OpV", op.decl.name, dom, cod)
            if op.decl.name not in self.ctx.eta:
                raise EvaluationError(f"operator variable '{op.decl.name}' has no value")
            data = np.asarray(self.ctx.eta[op.decl.name], dtype=complex)
            expected = (ground_dim(dom), ground_dim(cod))
            if data.shape != expected:
                raise EvaluationError(f"value of '{op.decl.name}' has shape {data.shape}, expected {expected}")
            return Matrix(data, dom, cod)
        if isinstance(op, OpConst):
            dom, cod = ground_string(self.sigma, op.dom), ground_string(self.sigma, op.cod)
            self._distinct("Sign-OpC", op.decl.name, dom, cod)
            params = tuple(eval_expr(self.sigma, p) for p in op.params)
            data = self.ctx.structure.interpret(op.decl.name, params, ground_dim(dom), ground_dim(cod))
            return Matrix(data, dom, cod)
        if isinstance(op, Scale):
            inner = self.value(op.body, measures)
            coeff = complex(eval_expr(self.sigma, op.coeff))
            return Matrix(coeff * inner.data, inner.rows, inner.cols)
        if isinstance(op, Adjoint):
            return self.value(op.body, measures).dag()
        if isinstance(op, Sum):
            a, b = self.value(op.left, measures), self.value(op.right, measures)
            self._check_sum(a.signature, b.signature)
            b = b.permuted(a.rows, a.cols)
            return Matrix(a.data + b.data, a.rows, a.cols)
        if isinstance(op, Product):
            a, b = self.value(op.left, measures), self.value(op.right, measures)
            self._check_product(a.signature, b.signature)
            b = b.permuted(a.cols, b.cols)
            return Matrix(a.data @ b.data, a.rows, b.cols)
        if isinstance(op, Tensor):
            a, b = self.value(op.left, measures), self.value(op.right, measures)
            self._check_tensor(op, a.signature, b.signature)
            rows, cols = a.rows + b.rows, a.cols + b.cols
            self._cap(rows)
            self._cap(cols)
            return Matrix(np.kron(a.data, b.data), rows, cols)
        if isinstance(op, Instance):
            body, inner = self._expand(op, measures)
            try:
                return self.value(body, inner)
            finally:
                self.depth -= 1
        raise TypeMismatchError(f"not a formal operator: {op!r}")


def check_signing(sigma: State, op: FormalOp, notes: Optional[List[str]] = None,
                  structure: Optional[QuantumStructure] = None) -> GroundSignature:
    """
    Derive sigma |= A : q -> q' by the signing rules

    Raises:
        SigningError: naming the failed rule and the grounded registers
    """
    ctx = Context(sigma, Valuation(), structure or QuantumStructure(sigma.structure))
    return _Walker(ctx, notes).sign(op, {})


def eval_operator(ctx: Context, op: FormalOp, notes: Optional[List[str]] = None) -> Matrix:
    """
    Matrix semantics zeta(A)

    Args:
        ctx: Context zeta = (sigma, eta)
        op: Formal operator

    Returns:
        Matrix whose rows/cols follow the grounded signature

    Raises:
        SigningError, EvaluationError, ResourceError
    """
    return _Walker(ctx, notes).value(op, {})


# ---------------------------------------------------------------------------
# Functions and predicates over formal operators
# ---------------------------------------------------------------------------

class PredicateKind(Enum):
    PURE = "pure"
    MIXED = "mixed"
    UNITARY = "unitary"
    OBSERVABLE = "obs"
    EFFECT = "effect"


class Relation(Enum):
    EQUAL = "=="
    LOEWNER = "<="


def max_abs(data: np.ndarray) -> float:
    return float(np.max(np.abs(data))) if data.size else 0.0


def is_hermitian(data: np.ndarray, tolerance: float) -> bool:
    return max_abs(data - data.conj().T) <= tolerance


def min_eigenvalue(data: np.ndarray) -> float:
    if data.size == 0:
        return 0.0
    return float(np.min(eigvalsh((data + data.conj().T) / 2)))


def max_eigenvalue(data: np.ndarray) -> float:
    if data.size == 0:
        return 0.0
    return float(np.max(eigvalsh((data + data.conj().T) / 2)))


def is_unitary(data: np.ndarray, tolerance: float) -> bool:
    n, m = data.shape
    return n == m and max_abs(data.conj().T @ data - np.eye(n)) <= tolerance


def is_density(data: np.ndarray, tolerance: float) -> bool:
    return (
        is_hermitian(data, tolerance)
        and min_eigenvalue(data) >= -tolerance
        and abs(np.trace(data) - 1) <= tolerance
    )


def is_psd(data: np.ndarray, tolerance: float) -> bool:
    return is_hermitian(data, tolerance) and min_eigenvalue(data) >= -tolerance


def frobenius_norm(ctx: Context, op: FormalOp) -> float:
    return float(np.linalg.norm(eval_operator(ctx, op).data))


def trace(ctx: Context, op: FormalOp) -> complex:
    """tr(zeta(A)); undefined unless A signs to q -> q for some q."""
    matrix = eval_operator(ctx, op)
    if not same_registers(matrix.rows, matrix.cols):
        raise EvaluationError(f"trace is undefined for signature {matrix.signature}")
    return complex(np.trace(matrix.permuted(matrix.rows, matrix.rows).data))


_RECOVERABLE = (SigningError, EvaluationError, TypeMismatchError)


def _fail(notes: Optional[List[str]], message: str) -> bool:
    log_debug(message)
    if notes is not None:
        notes.append(message)
    return False


def check_predicate(ctx: Context, kind: PredicateKind, op: FormalOp, regs: RegisterString,
                    notes: Optional[List[str]] = None) -> bool:
    """
    Decide one of the unary predicates on A over registers q

    Every failed clause yields ``False`` with a diagnostic in ``notes``.
    Resource errors propagate.
    """
    tolerance = ctx.tolerance
    try:
        if not satisfies(ctx.sigma, distinctness_formula(regs)):
            return _fail(notes, f"{kind.value}: registers are not distinct")
        target = ground_string(ctx.sigma, regs)
        matrix = eval_operator(ctx, op, notes)
    except _RECOVERABLE as e:
        return _fail(notes, f"{kind.value}: {e}")

    if kind is PredicateKind.PURE:
        if not (same_registers(matrix.rows, target) and not matrix.cols):
            return _fail(notes, f"pure: signature {matrix.signature} is not {_labels(target)} -> eps")
        vector = matrix.permuted(target, ()).data[:, 0]
        return abs(np.linalg.norm(vector) - 1) <= tolerance or _fail(notes, "pure: not a unit vector")

    if not (same_registers(matrix.rows, target) and same_registers(matrix.cols, target)):
        return _fail(notes, f"{kind.value}: signature {matrix.signature} is not {_labels(target)} -> {_labels(target)}")
    data = matrix.permuted(target, target).data

    if kind is PredicateKind.MIXED:
        return is_density(data, tolerance) or _fail(notes, "mixed: not a density operator")
    if kind is PredicateKind.UNITARY:
        return is_unitary(data, tolerance) or _fail(notes, "unitary: A^+ A differs from I")
    if kind is PredicateKind.OBSERVABLE:
        return is_hermitian(data, tolerance) or _fail(notes, "obs: not Hermitian")
    if kind is PredicateKind.EFFECT:
        ok = is_psd(data, tolerance) and max_eigenvalue(data) <= 1 + tolerance
        return ok or _fail(notes, "effect: not between 0 and I")
    raise SolError(f"unknown predicate {kind}")


def compare(ctx: Context, left: FormalOp, right: FormalOp, relation: Relation,
            notes: Optional[List[str]] = None) -> bool:
    """
    Equality or Loewner order between two formal operators

    Equal: same grounded signature and entrywise agreement within tolerance.
    Loewner: square signatures and right - left positive semidefinite.
    """
    tolerance = ctx.tolerance
    try:
        a = eval_operator(ctx, left, notes)
        b = eval_operator(ctx, right, notes)
    except _RECOVERABLE as e:
        return _fail(notes, f"{relation.value}: {e}")

    if not (same_registers(a.rows, b.rows) and same_registers(a.cols, b.cols)):
        return _fail(notes, f"{relation.value}: signatures {a.signature} and {b.signature} differ")

    if relation is Relation.EQUAL:
        b = b.permuted(a.rows, a.cols)
        return max_abs(a.data - b.data) <= tolerance or _fail(notes, "==: operators differ")

    if not same_registers(a.rows, a.cols):
        return _fail(notes, f"<=: signature {a.signature} is not square")
    a = a.permuted(a.rows, a.rows)
    b = b.permuted(a.rows, a.rows)
    gap = b.data - a.data
    return is_psd(gap, tolerance) or _fail(notes, "<=: difference is not positive semidefinite")


# ---------------------------------------------------------------------------
# Signing suite
# ---------------------------------------------------------------------------

_QUBITS = QuantumVarDecl("q", (INT,), BOOL)
_PAIR = OperatorVarDecl("W", (BOOL, BOOL), (BOOL, BOOL))


def _qubit(index) -> QuantumRef:
    return QuantumRef(_QUBITS, (index,))


def _ill_signed(kind: str, gates) -> Tuple[FormalOp, str]:
    """A term that signs only when x and y differ (or, for sums and products, only when they agree)."""
    x, y = _qubit(Var("x", INT)), _qubit(Var("y", INT))
    hx = OpConst(gates["H"], (), registers(x), registers(x))
    hy = OpConst(gates["H"], (), registers(y), registers(y))
    both = registers(x, y)
    if kind == "Sign-OpC":
        return OpConst(gates["CNOT"], (), both, both), kind
    if kind == "Sign-OpV":
        return OpVar(_PAIR, both, both), kind
    if kind == "Sign-Tensor":
        return Tensor(hx, hy), kind
    if kind == "Sign-Add":
        return Sum(hx, hy), kind
    return Product(hx, hy), "Sign-Mult"


def signing_suite(instances: int = 1000, ill_signed: int = 200, seed: int = 0, depth: int = 6,
                  tolerance: float = 1e-9) -> SuiteReport:
    """
    Signing soundness on random well-signed terms, and rejection with the
    right rule name on terms whose registers collide
    """
    from .stdlib_examples import builtin_gates, default_quantum_structure

    structure = default_quantum_structure(Structure(tolerance=tolerance))
    gates = builtin_gates()
    rng = np.random.default_rng(seed)
    pool = [_qubit(Const(i, INT)) for i in range(4)]
    report = SuiteReport("signing")

    failures: List[str] = []
    for i in range(instances):
        rows = tuple(ref for ref in pool if rng.random() < 0.5)
        cols = tuple(ref for ref in pool if rng.random() < 0.5)
        term = random_operator_term(rng, rows, cols, gates, depth)
        ctx = Context(State({}, structure.base), Valuation(), structure)
        try:
            sig = check_signing(ctx.sigma, term, None, structure)
            matrix = eval_operator(ctx, term)
        except SolError as e:
            failures.append(f"instance {i}: {e}")
            continue
        if matrix.data.shape != (ground_dim(sig.dom), ground_dim(sig.cod)):
            failures.append(f"instance {i}: shape {matrix.data.shape} for signature {sig}")
    report.add("well-signed terms evaluate with matching dimensions", not failures,
               failures[0] if failures else "", instances=instances, failures=len(failures))

    kinds = ("Sign-OpC", "Sign-OpV", "Sign-Tensor", "Sign-Add", "Sign-Mult")
    wrong: List[str] = []
    for i in range(ill_signed):
        kind = kinds[i % len(kinds)]
        term, rule = _ill_signed(kind, gates)
        x = int(rng.integers(4))
        y = x if kind in ("Sign-OpC", "Sign-OpV", "Sign-Tensor") else (x + 1 + int(rng.integers(3))) % 4
        sigma = State({"x": x, "y": y}, structure.base)
        try:
            check_signing(sigma, term, None, structure)
        except SigningError as e:
            if e.rule != rule:
                wrong.append(f"instance {i}: expected {rule}, got {e.rule}")
            continue
        wrong.append(f"instance {i}: {rule} term signed at x={x}, y={y}")
    report.add("ill-signed terms are rejected by the failing rule", not wrong, wrong[0] if wrong else "",
               instances=ill_signed, failures=len(wrong))
    log_info(f"signing suite: {len(report.outcomes) - len(report.failures)}/{len(report.outcomes)} checks passed")
    return report
