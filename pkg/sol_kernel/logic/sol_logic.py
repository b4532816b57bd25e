"""
SOL formulas over formal operators

Satisfaction is three-valued internally: every evaluation returns the truth
value together with a flag saying whether it was decided exactly or only on
a sample set of operators (or of complex numbers in sampling mode).
"""

import itertools
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from math import prod
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..utils.config import MODES
from ..utils.converters import matrix_to_json, value_to_json
from ..utils.log import log_debug, log_error, log_info
from .classical_logic import (
    BOOL,
    COMPLEX,
    INT,
    TRUE,
    ArrayRef,
    ArrayVar,
    Atom,
    Const,
    Expr,
    Formula,
    Or,
    State,
    Structure,
    Var,
    app,
    collect_expr_vars,
    collect_formula_vars,
    const,
    eval_expr,
    fresh_name,
    free_vars_expr,
    free_vars_formula,
    int_type,
    satisfies,
    subst_expr,
    subst_formula,
    substitution_pairs,
    update_state,
)
from .errors import (
    EvaluationError,
    ResourceError,
    SigningError,
    TypeMismatchError,
    UnsupportedQuantifierError,
)
from .generators import (
    complex_gaussian,
    haar_unitary,
    random_density,
    random_formula,
    random_hermitian,
    random_int_expr,
    random_operator_term,
    random_state,
    wrapped,
)
from .operator_terms import (
    Adjoint,
    Bra,
    FormalOp,
    Ket,
    OpConst,
    OperatorVarDecl,
    OpVar,
    Product,
    Scale,
    Sum,
    _operator_pairs,
    classical_vars,
    free_operator_vars,
    operator_vars,
    rename_operator_var,
    subst_classical,
    subst_operator,
)
from .quantum_registers import EPSILON, QuantumRef, QuantumVarDecl, RegisterString, dim_of_type, registers
from .reports import SuiteReport
from .semantics_engine import (
    Context,
    PredicateKind,
    QuantumStructure,
    Relation,
    Valuation,
    check_predicate,
    compare,
    eval_operator,
    frobenius_norm,
    trace,
)

_RECOVERABLE = (SigningError, EvaluationError, TypeMismatchError)
_RELATIONS = ("=", "<", ">")


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------

class SolFormula:
    """Base class of SOL formulas."""


def _check_relation(rel: str) -> None:
    if rel not in _RELATIONS:
        raise TypeMismatchError(f"unknown comparison '{rel}'")


@dataclass(frozen=True)
class NormCmp(SolFormula):
    """||A|| rel value, with the Frobenius norm and a real constant."""

    op: FormalOp
    rel: str
    value: float

    def __post_init__(self):
        _check_relation(self.rel)
        if isinstance(self.value, complex):
            raise TypeMismatchError("norm bound must be a real constant")
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class TraceCmp(SolFormula):
    op: FormalOp
    rel: str
    value: complex

    def __post_init__(self):
        _check_relation(self.rel)
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Pred(SolFormula):
    kind: PredicateKind
    op: FormalOp
    regs: RegisterString

    def __post_init__(self):
        if not isinstance(self.kind, PredicateKind):
            object.__setattr__(self, "kind", PredicateKind(self.kind))
        if not isinstance(self.regs, RegisterString):
            object.__setattr__(self, "regs", RegisterString(tuple(self.regs)))


@dataclass(frozen=True)
class OpEq(SolFormula):
    left: FormalOp
    right: FormalOp


@dataclass(frozen=True)
class OpLeq(SolFormula):
    """Loewner order left <= right."""

    left: FormalOp
    right: FormalOp


@dataclass(frozen=True)
class ClassicalAtom(SolFormula):
    formula: Formula


@dataclass(frozen=True)
class SolNot(SolFormula):
    body: SolFormula


@dataclass(frozen=True)
class SolAnd(SolFormula):
    left: SolFormula
    right: SolFormula


@dataclass(frozen=True)
class ForAllClassical(SolFormula):
    var: Var
    body: SolFormula


@dataclass(frozen=True)
class ForAllOperator(SolFormula):
    var: OperatorVarDecl
    body: SolFormula


SOL_TRUE = ClassicalAtom(TRUE)


def sol_or(left: SolFormula, right: SolFormula) -> SolFormula:
    return SolNot(SolAnd(SolNot(left), SolNot(right)))


def sol_implies(left: SolFormula, right: SolFormula) -> SolFormula:
    return SolNot(SolAnd(left, SolNot(right)))


def sol_iff(left: SolFormula, right: SolFormula) -> SolFormula:
    return SolAnd(sol_implies(left, right), sol_implies(right, left))


def exists_classical(var: Var, body: SolFormula) -> SolFormula:
    return SolNot(ForAllClassical(var, SolNot(body)))


def exists_operator(var: OperatorVarDecl, body: SolFormula) -> SolFormula:
    return SolNot(ForAllOperator(var, SolNot(body)))


def sol_conj(formulas: Iterable[SolFormula]) -> SolFormula:
    result: Optional[SolFormula] = None
    for formula in formulas:
        result = formula if result is None else SolAnd(result, formula)
    return SOL_TRUE if result is None else result


# ---------------------------------------------------------------------------
# Free variables
# ---------------------------------------------------------------------------

def _atom_ops(formula: SolFormula) -> Tuple[FormalOp, ...]:
    if isinstance(formula, (NormCmp, TraceCmp, Pred)):
        return (formula.op,)
    if isinstance(formula, (OpEq, OpLeq)):
        return (formula.left, formula.right)
    return ()


def _collect_classical(formula: SolFormula, out: Dict[str, Any], bound: frozenset) -> None:
    for op in _atom_ops(formula):
        for name, var in classical_vars(op).items():
            if name not in bound:
                out.setdefault(name, var)
    if isinstance(formula, Pred):
        for ref in formula.regs:
            for index in ref.indices:
                collect_expr_vars(index, out, bound)
    elif isinstance(formula, ClassicalAtom):
        collect_formula_vars(formula.formula, out, bound)
    elif isinstance(formula, SolNot):
        _collect_classical(formula.body, out, bound)
    elif isinstance(formula, SolAnd):
        _collect_classical(formula.left, out, bound)
        _collect_classical(formula.right, out, bound)
    elif isinstance(formula, ForAllClassical):
        _collect_classical(formula.body, out, bound | {formula.var.name})
    elif isinstance(formula, ForAllOperator):
        _collect_classical(formula.body, out, bound)


def sol_classical_vars(formula: SolFormula) -> Dict[str, Any]:
    """Free classical variables (simple and array) keyed by name."""
    out: Dict[str, Any] = {}
    _collect_classical(formula, out, frozenset())
    return out


def _collect_operator(formula: SolFormula, out: Dict[str, OperatorVarDecl], bound: frozenset) -> None:
    for op in _atom_ops(formula):
        for name, decl in operator_vars(op).items():
            if name not in bound:
                out.setdefault(name, decl)
    if isinstance(formula, SolNot):
        _collect_operator(formula.body, out, bound)
    elif isinstance(formula, SolAnd):
        _collect_operator(formula.left, out, bound)
        _collect_operator(formula.right, out, bound)
    elif isinstance(formula, ForAllClassical):
        _collect_operator(formula.body, out, bound)
    elif isinstance(formula, ForAllOperator):
        _collect_operator(formula.body, out, bound | {formula.var.name})


def sol_operator_vars(formula: SolFormula) -> Dict[str, OperatorVarDecl]:
    out: Dict[str, OperatorVarDecl] = {}
    _collect_operator(formula, out, frozenset())
    return out


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

def _given(targets: Any) -> bool:
    if isinstance(targets, (Var, ArrayRef, OperatorVarDecl)):
        return True
    return len(tuple(targets)) > 0


def _subst_op(op: FormalOp, pairs, table) -> FormalOp:
    if pairs:
        op = subst_classical(op, tuple(t for _, t in pairs), tuple(x for x, _ in pairs))
    if table:
        op = subst_operator(op, tuple(b for b, _ in table.values()), tuple(d for _, d in table.values()))
    return op


def _subst_ref(ref: QuantumRef, pairs) -> QuantumRef:
    if not pairs or not ref.indices:
        return ref
    terms = tuple(t for _, t in pairs)
    targets = tuple(x for x, _ in pairs)
    return QuantumRef(ref.base, tuple(subst_expr(index, terms, targets) for index in ref.indices))


def _rename_operator(formula: SolFormula, old: OperatorVarDecl, new: OperatorVarDecl) -> SolFormula:
    def op(a: FormalOp) -> FormalOp:
        return rename_operator_var(a, old, new)

    if isinstance(formula, (NormCmp, TraceCmp)):
        return type(formula)(op(formula.op), formula.rel, formula.value)
    if isinstance(formula, Pred):
        return Pred(formula.kind, op(formula.op), formula.regs)
    if isinstance(formula, (OpEq, OpLeq)):
        return type(formula)(op(formula.left), op(formula.right))
    if isinstance(formula, ClassicalAtom):
        return formula
    if isinstance(formula, SolNot):
        return SolNot(_rename_operator(formula.body, old, new))
    if isinstance(formula, SolAnd):
        return SolAnd(_rename_operator(formula.left, old, new), _rename_operator(formula.right, old, new))
    if isinstance(formula, ForAllClassical):
        return ForAllClassical(formula.var, _rename_operator(formula.body, old, new))
    if isinstance(formula, ForAllOperator):
        if formula.var.name == old.name:
            return formula
        return ForAllOperator(formula.var, _rename_operator(formula.body, old, new))
    raise TypeMismatchError(f"not a SOL formula: {formula!r}")


def _subst(formula: SolFormula, pairs, table) -> SolFormula:
    if isinstance(formula, (NormCmp, TraceCmp)):
        return type(formula)(_subst_op(formula.op, pairs, table), formula.rel, formula.value)
    if isinstance(formula, Pred):
        regs = RegisterString(tuple(_subst_ref(ref, pairs) for ref in formula.regs))
        return Pred(formula.kind, _subst_op(formula.op, pairs, table), regs)
    if isinstance(formula, (OpEq, OpLeq)):
        return type(formula)(_subst_op(formula.left, pairs, table), _subst_op(formula.right, pairs, table))
    if isinstance(formula, ClassicalAtom):
        if not pairs:
            return formula
        return ClassicalAtom(subst_formula(formula.formula, tuple(t for _, t in pairs), tuple(x for x, _ in pairs)))
    if isinstance(formula, SolNot):
        return SolNot(_subst(formula.body, pairs, table))
    if isinstance(formula, SolAnd):
        return SolAnd(_subst(formula.left, pairs, table), _subst(formula.right, pairs, table))

    if isinstance(formula, ForAllClassical):
        var, body = formula.var, formula.body
        remaining = tuple(
            (x, t) for x, t in pairs if not (isinstance(x, Var) and x.name == var.name)
        )
        if not remaining and not table:
            return formula
        avoid = set()
        for x, t in remaining:
            avoid |= free_vars_expr(t)
            if isinstance(x, ArrayRef):
                avoid |= free_vars_expr(x)
        for replacement, _ in table.values():
            avoid |= set(classical_vars(replacement))
        if var.name in avoid:
            taken = avoid | set(sol_classical_vars(body)) | {
                x.name if isinstance(x, Var) else x.array.name for x, _ in remaining
            }
            renamed = Var(fresh_name(var.name, taken), var.type)
            body = _subst(body, ((var, renamed),), {})
            var = renamed
        return ForAllClassical(var, _subst(body, remaining, table))

    if isinstance(formula, ForAllOperator):
        var, body = formula.var, formula.body
        rest = {name: entry for name, entry in table.items() if name != var.name}
        if not pairs and not rest:
            return formula
        replacement_vars = set()
        for replacement, _ in rest.values():
            replacement_vars |= free_operator_vars(replacement)
        if var.name in replacement_vars:
            taken = replacement_vars | set(sol_operator_vars(body)) | set(rest)
            renamed = OperatorVarDecl(fresh_name(var.name, taken), var.dom_types, var.cod_types)
            body = _rename_operator(body, var, renamed)
            var = renamed
        return ForAllOperator(var, _subst(body, pairs, rest))

    raise TypeMismatchError(f"not a SOL formula: {formula!r}")


def subst_sol(formula: SolFormula, terms=(), targets=(), operators=(), operator_vars=()) -> SolFormula:
    """
    A[t/x][B/X]: classical substitution first, then operator substitution

    Binders are alpha-renamed only when a substituted term or operator would
    be captured.

    Raises:
        TypeMismatchError: a term or operator of the wrong type
    """
    pairs = substitution_pairs(terms, targets) if _given(targets) else ()
    table = _operator_pairs(operators, operator_vars) if _given(operator_vars) else {}
    return _subst(formula, pairs, table)


# ---------------------------------------------------------------------------
# Operator sample sets
# ---------------------------------------------------------------------------

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _adversarial(rows: int, cols: int) -> List[np.ndarray]:
    zero = np.zeros((rows, cols), dtype=complex)
    corner = zero.copy()
    corner[0, 0] = 1
    out = [zero, corner]
    if rows == cols:
        out.append(np.eye(rows, dtype=complex))
        if rows == 2:
            out += [_PAULI_X, _PAULI_Y, _PAULI_Z, _HADAMARD]
        elif rows > 2:
            r = np.arange(rows)
            out.append(np.roll(np.eye(rows, dtype=complex), 1, axis=0))
            out.append(np.exp(2j * np.pi * np.outer(r, r) / rows) / np.sqrt(rows))
    else:
        out.append(np.ones((rows, cols), dtype=complex) / np.sqrt(rows * cols))
    return out


class OperatorSampler:
    """
    Deterministic sample sets for operator variables and quantifiers

    Each shape gets a fixed adversarial library (0, a rank-1 projector, I and
    for square shapes the Paulis, H, a shift and a Fourier matrix) followed
    by ``samples`` seeded random matrices: Haar unitaries, Gaussian
    non-normal matrices, Hermitians and densities. ``extra`` adds matrices
    for specific variable names.
    """

    def __init__(self, samples: int = 20, seed: int = 0, extra: Optional[Mapping[str, Sequence]] = None):
        if samples < 1:
            raise ValueError("at least one operator sample is required")
        self.samples = samples
        self.seed = seed
        self.extra = {
            name: [np.asarray(m, dtype=complex) for m in matrices]
            for name, matrices in (extra or {}).items()
        }
        self._cache: Dict[Tuple[int, int], List[np.ndarray]] = {}
        self._complex: Optional[List[complex]] = None

    @staticmethod
    def shape_of(decl: OperatorVarDecl) -> Tuple[int, int]:
        rows = prod(dim_of_type(t) for t in decl.dom_types)
        cols = prod(dim_of_type(t) for t in decl.cod_types)
        return rows, cols

    def _for_shape(self, rows: int, cols: int) -> List[np.ndarray]:
        key = (rows, cols)
        if key not in self._cache:
            rng = np.random.default_rng([self.seed, rows, cols])
            drawn = []
            for i in range(self.samples):
                if rows == cols:
                    kind = i % 4
                    if kind == 0:
                        drawn.append(haar_unitary(rng, rows))
                    elif kind == 1:
                        drawn.append(complex_gaussian(rng, rows, cols))
                    elif kind == 2:
                        drawn.append(random_hermitian(rng, rows))
                    else:
                        drawn.append(random_density(rng, rows))
                else:
                    g = complex_gaussian(rng, rows, cols)
                    drawn.append(g / np.linalg.norm(g) if i % 2 == 0 else g)
            self._cache[key] = _adversarial(rows, cols) + drawn
        return self._cache[key]

    def samples_for(self, decl: OperatorVarDecl) -> List[np.ndarray]:
        rows, cols = self.shape_of(decl)
        extra = [m for m in self.extra.get(decl.name, ()) if m.shape == (rows, cols)]
        return self._for_shape(rows, cols) + extra

    def complex_values(self) -> List[complex]:
        """Sample set for C-typed variables in sampling mode."""
        if self._complex is None:
            rng = np.random.default_rng([self.seed, 0])
            values = [0j, 1 + 0j, -1 + 0j, 1j, 0.5 + 0j, complex(np.pi / 2)]
            for i in range(self.samples):
                if i % 2 == 0:
                    values.append(complex(rng.uniform(-np.pi, np.pi)))
                else:
                    values.append(complex(rng.standard_normal(), rng.standard_normal()))
            self._complex = values
        return self._complex


# ---------------------------------------------------------------------------
# Satisfaction
# ---------------------------------------------------------------------------

def _relate(a: float, rel: str, b: float, tolerance: float) -> bool:
    if rel == "=":
        return abs(a - b) <= tolerance
    if rel == "<":
        return a < b - tolerance
    return a > b + tolerance


class _Evaluator:
    def __init__(self, sampler: OperatorSampler, notes: Optional[List[str]] = None, sample_complex: bool = False):
        self.sampler = sampler
        self.notes = notes
        self.sample_complex = sample_complex
        self.samples_drawn = 0

    def _fail(self, message: str) -> Tuple[bool, bool]:
        log_debug(message)
        if self.notes is not None:
            self.notes.append(message)
        return False, True

    def sat(self, ctx: Context, formula: SolFormula) -> Tuple[bool, bool]:
        tolerance = ctx.tolerance

        if isinstance(formula, NormCmp):
            try:
                norm = frobenius_norm(ctx, formula.op)
            except _RECOVERABLE as e:
                return self._fail(f"norm: {e}")
            return _relate(norm, formula.rel, formula.value, tolerance), True

        if isinstance(formula, TraceCmp):
            try:
                value = trace(ctx, formula.op)
            except _RECOVERABLE as e:
                return self._fail(f"trace: {e}")
            if formula.rel == "=":
                return abs(value - formula.value) <= tolerance, True
            if abs(value.imag) > tolerance or abs(formula.value.imag) > tolerance:
                return self._fail(f"trace: {value} cannot be ordered")
            return _relate(value.real, formula.rel, formula.value.real, tolerance), True

        if isinstance(formula, Pred):
            return check_predicate(ctx, formula.kind, formula.op, formula.regs, self.notes), True
        if isinstance(formula, OpEq):
            return compare(ctx, formula.left, formula.right, Relation.EQUAL, self.notes), True
        if isinstance(formula, OpLeq):
            return compare(ctx, formula.left, formula.right, Relation.LOEWNER, self.notes), True

        if isinstance(formula, ClassicalAtom):
            try:
                return satisfies(ctx.sigma, formula.formula), True
            except (EvaluationError, TypeMismatchError) as e:
                return self._fail(f"classical atom: {e}")

        if isinstance(formula, SolNot):
            value, certain = self.sat(ctx, formula.body)
            return not value, certain

        if isinstance(formula, SolAnd):
            left, left_certain = self.sat(ctx, formula.left)
            if not left and left_certain:
                return False, True
            right, right_certain = self.sat(ctx, formula.right)
            if not right and right_certain:
                return False, True
            return left and right, left_certain and right_certain

        if isinstance(formula, ForAllClassical):
            var = formula.var
            if var.type.name == "C":
                if not self.sample_complex:
                    raise UnsupportedQuantifierError(f"quantifier over C-typed '{var.name}' needs sampling mode")
                domain, exact = self.sampler.complex_values(), False
            else:
                domain, exact = ctx.sigma.structure.domain(var.type), True
            return self._forall(
                (ctx.with_sigma(update_state(ctx.sigma, var, value)) for value in domain),
                formula.body,
                exact,
            )

        if isinstance(formula, ForAllOperator):
            var = formula.var
            if var.name not in sol_operator_vars(formula.body):
                return self.sat(ctx, formula.body)
            matrices = self.sampler.samples_for(var)
            self.samples_drawn += len(matrices)
            return self._forall(
                (ctx.with_eta(ctx.eta.updated(var.name, m)) for m in matrices),
                formula.body,
                False,
            )

        raise TypeMismatchError(f"not a SOL formula: {formula!r}")

    def _forall(self, contexts: Iterable[Context], body: SolFormula, exact: bool) -> Tuple[bool, bool]:
        all_certain = exact
        uncertain_false = False
        for inner in contexts:
            value, certain = self.sat(inner, body)
            if not value:
                if certain:
                    return False, True
                uncertain_false = True
            all_certain = all_certain and certain
        if uncertain_false:
            return False, False
        return True, all_certain


def evaluate_sol(ctx: Context, formula: SolFormula, sampler: Optional[OperatorSampler] = None,
                 notes: Optional[List[str]] = None, sample_complex: bool = False) -> Tuple[bool, bool]:
    """
    Truth value of formula under zeta, with an exactness flag

    Returns:
        (value, certain): ``certain`` is False when the value rests on a
        sampled operator or complex quantifier.
    """
    return _Evaluator(sampler or OperatorSampler(), notes, sample_complex).sat(ctx, formula)


def sat_sol(ctx: Context, formula: SolFormula, sampler: Optional[OperatorSampler] = None,
            notes: Optional[List[str]] = None) -> bool:
    """zeta |= formula; operator quantifiers range over the sampler's sets."""
    return evaluate_sol(ctx, formula, sampler, notes)[0]


# ---------------------------------------------------------------------------
# Entailment
# ---------------------------------------------------------------------------

class Verdict(Enum):
    VALID = "Valid"
    REFUTED = "Refuted"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class EntailmentQuery:
    """
    Sigma, Gamma |= goal, with the enumeration and sampling configuration

    ``fixed`` and ``fixed_operators`` hold variables bound by the caller;
    they are not enumerated.
    """

    sigma_theory: Tuple[Formula, ...] = ()
    gamma: Tuple[SolFormula, ...] = ()
    goal: SolFormula = SOL_TRUE
    int_ranges: Mapping[str, Tuple[int, int]] = field(default_factory=dict)
    fixed: Mapping[str, Any] = field(default_factory=dict)
    fixed_operators: Mapping[str, np.ndarray] = field(default_factory=dict)
    samples: int = 20
    seed: int = 0
    mode: str = "exact-where-possible"
    max_states: int = 2_000_000
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sigma_theory", tuple(self.sigma_theory))
        object.__setattr__(self, "gamma", tuple(self.gamma))
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for name, (lo, hi) in self.int_ranges.items():
            if lo > hi:
                raise ValueError(f"empty range {lo}..{hi} for '{name}'")

    @classmethod
    def from_settings(cls, settings, **fields) -> "EntailmentQuery":
        options = dict(
            samples=settings.samples,
            seed=settings.seed,
            mode=settings.mode,
            max_states=settings.max_states,
            workers=settings.workers,
        )
        options.update(fields)
        return cls(**options)


def witness_to_json(ctx: Context) -> Dict[str, Any]:
    return {
        "sigma": {name: value_to_json(value) for name, value in sorted(ctx.sigma.values.items())},
        "eta": {name: matrix_to_json(m) for name, m in sorted(ctx.eta.values.items())},
    }


@dataclass
class CheckResult:
    verdict: Verdict
    reason: str = ""
    witness: Optional[Context] = None
    exact: bool = True
    stats: Dict[str, int] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.verdict is Verdict.VALID

    @property
    def refuted(self) -> bool:
        return self.verdict is Verdict.REFUTED

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"verdict": self.verdict.value, "exact": self.exact}
        if self.reason:
            out["reason"] = self.reason
        if self.witness is not None:
            out["witness"] = witness_to_json(self.witness)
        out["stats"] = dict(sorted(self.stats.items()))
        return out


def _hoist(query: EntailmentQuery) -> SolFormula:
    """Strip leading universal quantifiers of the goal whose variables are not otherwise in use."""
    used_classical = set(query.fixed) | set(query.int_ranges)
    used_operators = set(query.fixed_operators)
    for formula in query.sigma_theory:
        used_classical |= free_vars_formula(formula)
    for formula in query.gamma:
        used_classical |= set(sol_classical_vars(formula))
        used_operators |= set(sol_operator_vars(formula))
    goal = query.goal
    while True:
        if isinstance(goal, ForAllClassical) and goal.var.name not in used_classical:
            goal = goal.body
        elif isinstance(goal, ForAllOperator) and goal.var.name not in used_operators:
            goal = goal.body
        else:
            return goal


def _holds(sigma: State, formula: Formula) -> bool:
    try:
        return satisfies(sigma, formula)
    except EvaluationError as e:
        log_debug(f"classical theory: {e}")
        return False


def _join(left: List[Dict[str, Any]], left_names: Sequence[str], right: List[Dict[str, Any]],
          right_names: Sequence[str], cap: int) -> List[Dict[str, Any]]:
    shared = [name for name in right_names if name in left_names]
    index: Dict[tuple, List[Dict[str, Any]]] = defaultdict(list)
    for row in right:
        index[tuple(row[name] for name in shared)].append(row)
    out = []
    for row in left:
        for match in index.get(tuple(row[name] for name in shared), ()):
            out.append({**row, **match})
            if len(out) > cap:
                raise ResourceError(f"more than {cap} classical states satisfy the theory")
    return out


def _satisfying_states(query: EntailmentQuery, domains: Dict[str, Sequence], base: Structure,
                       stats: Dict[str, int]) -> List[Dict[str, Any]]:
    """
    All assignments to the enumerated variables satisfying Sigma

    Each formula of Sigma is enumerated over its own variables only; the
    resulting relations are joined, and variables outside Sigma are crossed in
    at the end.
    """
    fixed = dict(query.fixed)
    current: List[Dict[str, Any]] = [{}]
    seen: List[str] = []
    for formula in query.sigma_theory:
        names = sorted(n for n in free_vars_formula(formula) if n in domains)
        size = prod(len(domains[n]) for n in names)
        if size > query.max_states:
            raise ResourceError(f"classical theory formula ranges over {size} states (cap {query.max_states})")
        rows = []
        for combo in itertools.product(*(domains[n] for n in names)):
            assignment = dict(zip(names, combo))
            stats["states_enumerated"] += 1
            if _holds(State({**fixed, **assignment}, base), formula):
                rows.append(assignment)
        current = _join(current, seen, rows, names, query.max_states)
        seen = sorted(set(seen) | set(names))
        if not current:
            break
    rest = [n for n in sorted(domains) if n not in seen]
    total = len(current) * prod(len(domains[n]) for n in rest)
    if total > query.max_states:
        raise ResourceError(f"{total} classical states exceed the cap of {query.max_states}")
    states = [
        {**row, **dict(zip(rest, combo))}
        for row in current
        for combo in itertools.product(*(domains[n] for n in rest))
    ]
    stats["states_satisfying"] = len(states)
    return states


def _unknown(reason: str, stats: Dict[str, int]) -> CheckResult:
    log_debug(f"entailment unknown: {reason}")
    return CheckResult(Verdict.UNKNOWN, reason, exact=False, stats=stats)


def check_entailment(query: EntailmentQuery, structure: Optional[QuantumStructure] = None) -> CheckResult:
    """
    Model-check Sigma, Gamma |= goal

    Every classical state satisfying Sigma is enumerated; for each one the
    free operator variables range over the sample sets. A context where Gamma
    holds and the goal fails (both decided exactly) is a refutation; the
    lowest enumeration index wins.

    Returns:
        Valid when everything was decided exactly, Refuted with a replayable
        witness, otherwise Unknown with a reason.
    """
    if structure is None:
        from .stdlib_examples import default_quantum_structure

        structure = default_quantum_structure()
    stats = {"contexts_checked": 0, "samples_drawn": 0, "states_enumerated": 0, "states_satisfying": 0}
    try:
        return _check(query, structure, stats)
    except (ResourceError, UnsupportedQuantifierError) as e:
        return _unknown(str(e), stats)


def _check(query: EntailmentQuery, structure: QuantumStructure, stats: Dict[str, int]) -> CheckResult:
    base = structure.base
    goal = _hoist(query)
    sampler = OperatorSampler(query.samples, query.seed)
    sample_complex = query.mode == "sampling"

    free: Dict[str, Any] = {}
    for formula in query.sigma_theory:
        collect_formula_vars(formula, free)
    for formula in query.gamma + (goal,):
        for name, var in sol_classical_vars(formula).items():
            free.setdefault(name, var)
    for name in query.fixed:
        free.pop(name, None)

    arrays = sorted(name for name, var in free.items() if isinstance(var, ArrayVar))
    if arrays:
        return _unknown(f"free array variable(s) {', '.join(arrays)} must be fixed", stats)

    sampled = False
    domains: Dict[str, Sequence] = {}
    for name in sorted(free):
        var_type = free[name].type
        if var_type.name == "C":
            if not sample_complex:
                return _unknown(f"free variable '{name}' of type C cannot be enumerated; use sampling mode", stats)
            domains[name] = sampler.complex_values()
            sampled = True
        elif name in query.int_ranges:
            lo, hi = query.int_ranges[name]
            domains[name] = tuple(range(lo, hi + 1))
        else:
            domains[name] = base.domain(var_type)

    states = _satisfying_states(query, domains, base, stats)

    decls: Dict[str, OperatorVarDecl] = {}
    for formula in query.gamma + (goal,):
        for name, decl in sol_operator_vars(formula).items():
            if name not in query.fixed_operators:
                decls.setdefault(name, decl)
    names = sorted(decls)
    choices = [sampler.samples_for(decls[n]) for n in names]
    radix = [len(c) for c in choices]
    per_state = prod(radix)
    if names:
        sampled = True
        stats["samples_drawn"] += sum(radix)
    total = len(states) * per_state
    if total > query.max_states:
        raise ResourceError(f"{total} contexts exceed the cap of {query.max_states}")

    fixed = dict(query.fixed)
    fixed_eta = dict(query.fixed_operators)

    def context_at(index: int) -> Context:
        state_index, rest = divmod(index, per_state)
        eta = dict(fixed_eta)
        for name, options, size in zip(reversed(names), reversed(choices), reversed(radix)):
            rest, digit = divmod(rest, size)
            eta[name] = options[digit]
        sigma = State({**fixed, **states[state_index]}, base)
        return Context(sigma, Valuation(eta), structure)

    def scan(start: int, stop: int) -> Tuple[Optional[int], bool, int, int]:
        evaluator = _Evaluator(sampler, None, sample_complex)
        inexact = False
        checked = 0
        for index in range(start, stop):
            ctx = context_at(index)
            checked += 1
            gamma_certain = True
            gamma_holds = True
            for formula in query.gamma:
                value, certain = evaluator.sat(ctx, formula)
                if not value:
                    gamma_holds = False
                    inexact = inexact or not certain
                    break
                gamma_certain = gamma_certain and certain
            if not gamma_holds:
                continue
            value, certain = evaluator.sat(ctx, goal)
            if value:
                inexact = inexact or not certain
            elif certain and gamma_certain:
                return index, inexact, checked, evaluator.samples_drawn
            else:
                inexact = True
        return None, inexact, checked, evaluator.samples_drawn

    workers = max(1, min(query.workers, total or 1))
    if workers == 1:
        results = [scan(0, total)]
    else:
        bounds = [total * i // workers for i in range(workers + 1)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: scan(bounds[i], bounds[i + 1]), range(workers)))

    refutations = [r[0] for r in results if r[0] is not None]
    inexact = any(r[1] for r in results)
    stats["contexts_checked"] = sum(r[2] for r in results)
    stats["samples_drawn"] += sum(r[3] for r in results)

    if refutations:
        witness = context_at(min(refutations))
        notes: List[str] = []
        _Evaluator(sampler, notes, sample_complex).sat(witness, goal)
        return CheckResult(Verdict.REFUTED, "goal fails under the witness", witness,
                           exact=not (sampled or inexact), stats=stats, notes=notes)
    if sampled or inexact:
        return CheckResult(Verdict.UNKNOWN, "sampled", exact=False, stats=stats)
    return CheckResult(Verdict.VALID, exact=True, stats=stats)


def replay_witness(query: EntailmentQuery, result: CheckResult, structure: Optional[QuantumStructure] = None) -> bool:
    """True when the witness satisfies Gamma and violates the goal again."""
    if result.witness is None:
        return False
    sampler = OperatorSampler(query.samples, query.seed)
    ctx = result.witness
    if structure is not None:
        ctx = Context(ctx.sigma, ctx.eta, structure)
    sample_complex = query.mode == "sampling"
    gamma_ok = all(evaluate_sol(ctx, f, sampler, sample_complex=sample_complex)[0] for f in query.gamma)
    return gamma_ok and not evaluate_sol(ctx, _hoist(query), sampler, sample_complex=sample_complex)[0]


# ---------------------------------------------------------------------------
# Definitions of unitary and observable as entailments
# ---------------------------------------------------------------------------

def _coefficient_grid(entries, sigma: State) -> np.ndarray:
    values = [[eval_expr(sigma, e) if isinstance(e, Expr) else e for e in row] for row in entries]
    grid = np.asarray(values, dtype=complex)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise TypeMismatchError(f"coefficient grid must be square, got shape {grid.shape}")
    return grid


def grid_operator(grid: np.ndarray, name: str = "u") -> Tuple[FormalOp, RegisterString]:
    """sum_ij a_ij |i><j| on one register with values 0..n-1."""
    n = grid.shape[0]
    ref = QuantumRef(QuantumVarDecl(name, (), int_type(0, n - 1)))
    term: Optional[FormalOp] = None
    for i in range(n):
        for j in range(n):
            if grid[i, j] == 0 and term is not None:
                continue
            dyad = Scale(const(complex(grid[i, j])), Product(Ket(Const(i, INT), ref), Bra(Const(j, INT), ref)))
            term = dyad if term is None else Sum(term, dyad)
    return term, registers(ref)


def _definition_check(kind: PredicateKind, lhs: bool, grid: np.ndarray, sigma: State,
                      structure: Optional[QuantumStructure], notes: Optional[List[str]]) -> bool:
    op, regs = grid_operator(grid)
    ctx = Context(sigma, Valuation(), structure or QuantumStructure(sigma.structure))
    rhs = check_predicate(ctx, kind, op, regs, notes)
    if lhs and not rhs:
        log_error(f"{kind.value}: coefficient conditions hold but the predicate fails")
    return lhs and rhs


def unitary_def_check(entries, sigma: Optional[State] = None, structure: Optional[QuantumStructure] = None,
                      notes: Optional[List[str]] = None) -> bool:
    """
    Rows orthonormal |= U(sum a_ij |i><j|)

    Args:
        entries: Square grid of classical expressions or numbers
        sigma: State the expressions are evaluated in

    Returns:
        True when the row conditions hold and the predicate confirms them
    """
    sigma = sigma or State()
    tolerance = sigma.structure.tolerance
    grid = _coefficient_grid(entries, sigma)
    gram = grid @ grid.conj().T
    lhs = bool(np.all(np.abs(gram - np.eye(grid.shape[0])) <= tolerance))
    if not lhs and notes is not None:
        notes.append("rows are not orthonormal")
    return _definition_check(PredicateKind.UNITARY, lhs, grid, sigma, structure, notes)


def observable_def_check(entries, sigma: Optional[State] = None, structure: Optional[QuantumStructure] = None,
                         notes: Optional[List[str]] = None) -> bool:
    """a_ij = conj(a_ji) for all i, j |= O(sum a_ij |i><j|)."""
    sigma = sigma or State()
    tolerance = sigma.structure.tolerance
    grid = _coefficient_grid(entries, sigma)
    lhs = bool(np.all(np.abs(grid - grid.conj().T) <= tolerance))
    if not lhs and notes is not None:
        notes.append("coefficients are not conjugate symmetric")
    return _definition_check(PredicateKind.OBSERVABLE, lhs, grid, sigma, structure, notes)


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------

_SIMPLE = QuantumVarDecl("r")
_ARRAY = QuantumVarDecl("q", (INT,), BOOL)
_X = OperatorVarDecl("X", (BOOL,), (BOOL,))


def _random_atom(rng: np.random.Generator, variables: Sequence[Var], gates, operator: Optional[OperatorVarDecl]):
    def e() -> Expr:
        return random_int_expr(rng, variables, 1)

    def bit() -> Expr:
        return app("mod", e(), Const(2, INT))

    ref = QuantumRef(_SIMPLE) if rng.random() < 0.5 else QuantumRef(_ARRAY, (e(),))
    regs = registers(ref)
    kinds = 8 if operator is not None else 6
    kind = int(rng.integers(kinds))
    if kind == 0:
        return OpEq(Ket(bit(), ref), Ket(bit(), ref))
    if kind == 1:
        return NormCmp(Scale(e(), OpConst(gates["H"], (), regs, regs)), "=", np.sqrt(2) * int(rng.integers(0, 3)))
    if kind == 2:
        return ClassicalAtom(random_formula(rng, variables, 1))
    if kind == 3:
        return Pred(PredicateKind.UNITARY, Scale(e(), OpConst(gates["X"], (), regs, regs)), regs)
    if kind == 4:
        return TraceCmp(Product(Ket(bit(), ref), Bra(bit(), ref)), "=", 1)
    if kind == 5:
        identity = OpConst(gates["I"], (), regs, regs)
        return OpLeq(Scale(e(), identity), Scale(e(), identity))
    if kind == 6:
        return Pred(PredicateKind.UNITARY, OpVar(operator, regs, regs), regs)
    return OpLeq(OpVar(operator, regs, regs), OpConst(gates["I"], (), regs, regs))


def random_sol_formula(rng: np.random.Generator, variables: Sequence[Var], gates,
                       operator: Optional[OperatorVarDecl] = None, depth: int = 2) -> SolFormula:
    """Random SOL formula over Int variables, a qubit r, a qubit array q and optionally X."""
    if depth <= 0 or rng.random() < 0.35:
        return _random_atom(rng, variables, gates, operator)
    kind = int(rng.integers(5))

    def sub(scope: Sequence[Var] = variables) -> SolFormula:
        return random_sol_formula(rng, scope, gates, operator, depth - 1)

    if kind == 0:
        return SolNot(sub())
    if kind == 1:
        return SolAnd(sub(), sub())
    if kind == 2:
        return sol_implies(sub(), sub())
    if kind == 3:
        return sol_or(sub(), sub())
    bound = Var(f"z{depth}", INT)
    return ForAllClassical(bound, sub(list(variables) + [bound]))


def _suite_world(int_range: Tuple[int, int], tolerance: float):
    from .stdlib_examples import builtin_gates, default_quantum_structure

    default = default_quantum_structure()
    structure = QuantumStructure(Structure(int_range=int_range, tolerance=tolerance),
                                 default.interpretations, default.max_dim)
    return structure, builtin_gates()


def _record(report: SuiteReport, name: str, failures: List[str], instances: int, **data) -> None:
    detail = failures[0] if failures else ""
    report.add(name, not failures, detail, instances=instances, failures=len(failures), **data)


def _schema_instances(report, rng, structure, gates, instances, tolerance):
    x, y = Var("x", INT), Var("y", INT)
    lo, hi = structure.base.int_range
    r = QuantumRef(_SIMPLE)

    def state() -> State:
        return State({"y": int(rng.integers(lo, hi + 1))}, structure.base)

    checks = {
        "schema: forall x A -> A[t/x]": [],
        "schema: forall X A -> A[B/X]": [],
        "schema: forall x (A -> B) -> (A -> forall x B)": [],
        "schema: forall X (A -> B) -> (A -> forall X B)": [],
    }
    for i in range(instances):
        body = random_sol_formula(rng, [x, y], gates, None, 2)
        t = wrapped(random_int_expr(rng, [y], 1), lo, hi)
        formula = sol_implies(ForAllClassical(x, body), subst_sol(body, t, x))
        ctx = Context(state(), Valuation(), structure)
        if not sat_sol(ctx, formula):
            checks["schema: forall x A -> A[t/x]"].append(f"instance {i}: {formula!r}")

        body = random_sol_formula(rng, [y], gates, _X, 2)
        replacement = random_operator_term(rng, (r,), (r,), gates, 2)
        ctx = Context(state(), Valuation(), structure)
        sampler = OperatorSampler(4, i, {"X": [eval_operator(ctx, replacement).data]})
        formula = sol_implies(ForAllOperator(_X, body), subst_sol(body, operators=replacement, operator_vars=_X))
        if not sat_sol(ctx, formula, sampler):
            checks["schema: forall X A -> A[B/X]"].append(f"instance {i}: {formula!r}")

        a = random_sol_formula(rng, [y], gates, None, 1)
        b = random_sol_formula(rng, [x, y], gates, None, 1)
        formula = sol_implies(ForAllClassical(x, sol_implies(a, b)), sol_implies(a, ForAllClassical(x, b)))
        if not sat_sol(ctx, formula):
            checks["schema: forall x (A -> B) -> (A -> forall x B)"].append(f"instance {i}: {formula!r}")

        b = random_sol_formula(rng, [y], gates, _X, 1)
        formula = sol_implies(ForAllOperator(_X, sol_implies(a, b)), sol_implies(a, ForAllOperator(_X, b)))
        if not sat_sol(ctx, formula, OperatorSampler(4, i)):
            checks["schema: forall X (A -> B) -> (A -> forall X B)"].append(f"instance {i}: {formula!r}")

    for name, failures in checks.items():
        _record(report, name, failures, instances)


def _axiom_instances(report, rng, structure, gates, instances):
    q, r = QuantumRef(QuantumVarDecl("q")), QuantumRef(_SIMPLE)
    regs = registers(q, r)
    square = (BOOL, BOOL)
    a1, a2 = OperatorVarDecl("A1", square, square), OperatorVarDecl("A2", square, square)
    vec = OperatorVarDecl("A2", square, ())

    def var(decl) -> OpVar:
        return OpVar(decl, regs, regs if decl.cod_types else EPSILON)

    A1, A2, V = var(a1), var(a2), var(vec)
    identity = OpConst(gates["I"], (), regs, regs)
    zero = Scale(Const(0j, COMPLEX), identity)

    def pred(kind, op) -> Pred:
        return Pred(kind, op, regs)

    U, P, M, O = PredicateKind.UNITARY, PredicateKind.PURE, PredicateKind.MIXED, PredicateKind.OBSERVABLE

    def commuting(g):
        basis = haar_unitary(g, 4)
        d1, d2 = np.diag(g.standard_normal(4)), np.diag(g.standard_normal(4))
        return basis @ d1 @ basis.conj().T, basis @ d2 @ basis.conj().T

    axioms = {
        "axiom: Stat1": (SolAnd(pred(U, A1), pred(P, V)), pred(P, Product(A1, V)),
                         lambda g: (haar_unitary(g, 4), random_state(g, 4))),
        "axiom: Stat2": (SolAnd(pred(U, A1), pred(M, A2)), pred(M, Product(Product(A1, A2), Adjoint(A1))),
                         lambda g: (haar_unitary(g, 4), random_density(g, 4))),
        "axiom: Stat3": (SolAnd(OpLeq(zero, A1), TraceCmp(A1, "=", 1)), pred(M, A1),
                         lambda g: (random_density(g, 4), None)),
        "axiom: Uni1": (pred(U, A1), pred(U, Adjoint(A1)),
                        lambda g: (haar_unitary(g, 4), None)),
        "axiom: Uni2": (SolAnd(pred(U, A1), pred(U, A2)), pred(U, Product(A1, A2)),
                        lambda g: (haar_unitary(g, 4), haar_unitary(g, 4))),
        "axiom: Obs1": (pred(O, A1), OpEq(A1, Adjoint(A1)),
                        lambda g: (random_hermitian(g, 4), None)),
        "axiom: Obs2": (SolAnd(pred(U, A1), pred(O, A2)), pred(O, Product(Product(A1, A2), Adjoint(A1))),
                        lambda g: (haar_unitary(g, 4), random_hermitian(g, 4))),
        "axiom: Obs3": (SolAnd(SolAnd(pred(O, A1), pred(O, A2)), OpEq(Product(A1, A2), Product(A2, A1))),
                        pred(O, Product(A1, A2)), commuting),
    }
    sigma = State({}, structure.base)
    for name, (premise, conclusion, draw) in axioms.items():
        failures = []
        for i in range(instances):
            first, second = draw(rng)
            eta = Valuation({"A1": first} if second is None else {"A1": first, "A2": second})
            ctx = Context(sigma, eta, structure)
            notes: List[str] = []
            if not sat_sol(ctx, premise, notes=notes):
                failures.append(f"instance {i}: premise does not hold ({'; '.join(notes)})")
            elif not sat_sol(ctx, conclusion, notes=notes):
                failures.append(f"instance {i}: conclusion fails ({'; '.join(notes)})")
        _record(report, name, failures, instances)


def _query_instances(report, rng, structure, gates, instances):
    x, y = Var("x", INT), Var("y", INT)
    lo, hi = structure.base.int_range
    ranges = {"x": (lo, hi), "y": (lo, hi)}
    deduction, monotonicity, substitution = [], [], []
    nontrivial = 0
    for i in range(instances):
        sigma_theory = (random_formula(rng, [x, y], 1),) if rng.random() < 0.7 else ()
        gamma = tuple(random_sol_formula(rng, [x, y], gates, None, 1) for _ in range(int(rng.integers(0, 2))))
        a = random_sol_formula(rng, [x, y], gates, None, 1)
        b = random_sol_formula(rng, [x, y], gates, None, 1)

        def run(theory, premises, goal) -> CheckResult:
            return check_entailment(EntailmentQuery(theory, premises, goal, int_ranges=ranges), structure)

        plain = run(sigma_theory, gamma, b)
        extended = run(sigma_theory, gamma + (a,), b)
        implied = run(sigma_theory, gamma, sol_implies(a, b))
        if extended.verdict is not implied.verdict:
            deduction.append(f"instance {i}: {extended.verdict.value} vs {implied.verdict.value}")
        if plain.valid and extended.refuted:
            monotonicity.append(f"instance {i}: adding a premise refuted a valid goal")

        if plain.valid:
            nontrivial += 1
            t = wrapped(random_int_expr(rng, [y], 1), lo, hi)
            theory = tuple(subst_formula(f, t, x) for f in sigma_theory)
            premises = tuple(subst_sol(f, t, x) for f in gamma)
            result = check_entailment(
                EntailmentQuery(theory, premises, subst_sol(b, t, x), int_ranges={"y": (lo, hi)}), structure
            )
            if not result.valid:
                substitution.append(f"instance {i}: substituted query is {result.verdict.value}")

    _record(report, "deduction theorem", deduction, instances)
    _record(report, "monotonicity", monotonicity, instances)
    _record(report, "substitution theorem", substitution, instances, valid_instances=nontrivial)


def schema_suite(instances: int = 50, axiom_instances: int = 100, seed: int = 0,
                 tolerance: float = 1e-9) -> SuiteReport:
    """
    Property-test the valid schemas, the operator axioms, the deduction
    theorem and closure of verdicts under substitution

    Returns:
        SuiteReport with one outcome per schema or axiom; failures carry the
        first counterexample.
    """
    structure, gates = _suite_world((-2, 2), tolerance)
    rng = np.random.default_rng(seed)
    report = SuiteReport("schemas")
    _schema_instances(report, rng, structure, gates, instances, tolerance)
    _axiom_instances(report, rng, structure, gates, axiom_instances)
    _query_instances(report, rng, structure, gates, instances)
    log_info(f"schema suite: {len(report.outcomes) - len(report.failures)}/{len(report.outcomes)} checks passed")
    return report


# ---------------------------------------------------------------------------
# Substitution lemmas
# ---------------------------------------------------------------------------

def _random_bool_term(rng: np.random.Generator, flags: Sequence[Var]) -> Expr:
    kind = int(rng.integers(4))
    a = flags[int(rng.integers(len(flags)))]
    if kind == 0:
        return Const(bool(rng.integers(2)), BOOL)
    if kind == 1:
        return a
    if kind == 2:
        return app("not", a)
    return app("xor", a, flags[int(rng.integers(len(flags)))])


def substitution_suite(instances: int = 1000, seed: int = 0, value_range: Tuple[int, int] = (-8, 8),
                       tolerance: float = 1e-9) -> SuiteReport:
    """
    Randomised check that substituting then evaluating equals evaluating in
    the updated state, for expressions, formulas, formal operators and SOL
    formulas
    """
    structure, gates = _suite_world((-2, 2), tolerance)
    rng = np.random.default_rng(seed)
    x, y = Var("x", INT), Var("y", INT)
    b, c = Var("b", BOOL), Var("c", BOOL)
    lo, hi = value_range
    r = QuantumRef(_SIMPLE)
    failures = {"expressions": [], "formulas": [], "operators": [], "sol formulas": []}

    for i in range(instances):
        values = {"x": int(rng.integers(lo, hi + 1)), "y": int(rng.integers(lo, hi + 1)),
                  "b": bool(rng.integers(2)), "c": bool(rng.integers(2))}
        sigma = State(values, structure.base)
        t = random_int_expr(rng, [x, y], 2)
        t_value = eval_expr(sigma, t)
        moved = update_state(sigma, x, t_value)

        s = random_int_expr(rng, [x, y], 2)
        if eval_expr(sigma, subst_expr(s, t, x)) != eval_expr(moved, s):
            failures["expressions"].append(f"instance {i}: {s!r}[{t!r}/x]")

        phi = Or(random_formula(rng, [x, y], 2), Atom("holds", (b,)))
        flag = _random_bool_term(rng, [b, c])
        flipped = update_state(sigma, b, eval_expr(sigma, flag))
        if satisfies(sigma, subst_formula(phi, t, x)) != satisfies(moved, phi):
            failures["formulas"].append(f"instance {i}: {phi!r}[{t!r}/x]")
        if satisfies(sigma, subst_formula(phi, flag, b)) != satisfies(flipped, phi):
            failures["formulas"].append(f"instance {i}: {phi!r}[{flag!r}/b]")

        body = random_operator_term(rng, (r,), (r,), gates, 2)
        op = Sum(
            Scale(random_int_expr(rng, [x, y], 1), body),
            Product(
                Ket(app("mod", random_int_expr(rng, [x, y], 1), Const(2, INT)), r),
                Bra(app("mod", random_int_expr(rng, [x, y], 1), Const(2, INT)), r),
            ),
        )
        left = eval_operator(Context(sigma, Valuation(), structure), subst_classical(op, t, x)).data
        right = eval_operator(Context(moved, Valuation(), structure), op).data
        if not np.allclose(left, right, atol=tolerance, rtol=0):
            failures["operators"].append(f"instance {i}: {op!r}[{t!r}/x]")

        if i % 5 == 0:
            formula = random_sol_formula(rng, [x, y], gates, _X, 2)
            sampler = OperatorSampler(4, i)
            eta = Valuation({"X": sampler.samples_for(_X)[int(rng.integers(4))]})
            small = wrapped(t, *structure.base.int_range)
            small_moved = update_state(sigma, x, eval_expr(sigma, small))
            lhs = sat_sol(Context(sigma, eta, structure), subst_sol(formula, small, x), sampler)
            rhs = sat_sol(Context(small_moved, eta, structure), formula, sampler)
            if lhs != rhs:
                failures["sol formulas"].append(f"instance {i}: {formula!r}[{small!r}/x]")

    report = SuiteReport("substitution")
    for name, found in failures.items():
        _record(report, f"substitution lemma: {name}", found, instances if name != "sol formulas" else instances // 5)
    return report
