"""
Built-in gates, recursive state definitions and example harnesses

The gate table and ``default_quantum_structure`` are what every other part
of the kernel evaluates constants with. The harnesses turn the worked
examples (teleportation, Z-Y decomposition, Bloch sphere, no-cloning,
register address arithmetic, projections) into suites of named checks.
"""

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.log import log_debug, log_info, log_warning
from .classical_logic import (
    BOOL,
    COMPLEX,
    INT,
    ArrayRef,
    ArrayVar,
    Atom,
    Const,
    Expr,
    Formula,
    State,
    Structure,
    Var,
    app,
    const,
    eq,
    eval_expr,
    int_type,
    satisfies,
    update_state,
)
from .errors import EvaluationError, SolError, TypeMismatchError
from .generators import haar_unitary, random_state
from .operator_terms import (
    Adjoint,
    FormalOp,
    Instance,
    Ket,
    OpConst,
    OperatorConstDecl,
    OperatorVarDecl,
    OpVar,
    Product,
    Bra,
    Scale,
    Sum,
    Tensor,
    map_op,
    negate,
    subst_classical,
)
from .quantum_registers import EPSILON, QuantumRef, QuantumVarDecl, distinctness_formula, registers
from .reports import SuiteReport
from .semantics_engine import (
    Context,
    PredicateKind,
    QuantumStructure,
    Valuation,
    eval_operator,
    is_unitary,
    max_abs,
)
from .sol_logic import (
    EntailmentQuery,
    ForAllOperator,
    OpEq,
    Pred,
    SolAnd,
    SolNot,
    TraceCmp,
    check_entailment,
    sat_sol,
    sol_implies,
    unitary_def_check,
)

SQRT_HALF = 1 / math.sqrt(2)


# ---------------------------------------------------------------------------
# Gate library
# ---------------------------------------------------------------------------

_QUBIT = (BOOL,)
_TWO_QUBITS = (BOOL, BOOL)
_ANGLE = (COMPLEX,)

GATES: Dict[str, OperatorConstDecl] = {
    "I": OperatorConstDecl("I", polymorphic=True),
    "Ph": OperatorConstDecl("Ph", polymorphic=True),
    "X": OperatorConstDecl("X", _QUBIT, _QUBIT),
    "Y": OperatorConstDecl("Y", _QUBIT, _QUBIT),
    "Z": OperatorConstDecl("Z", _QUBIT, _QUBIT),
    "H": OperatorConstDecl("H", _QUBIT, _QUBIT),
    "CNOT": OperatorConstDecl("CNOT", _TWO_QUBITS, _TWO_QUBITS),
    "Rx": OperatorConstDecl("Rx", _QUBIT, _QUBIT, _ANGLE),
    "Ry": OperatorConstDecl("Ry", _QUBIT, _QUBIT, _ANGLE),
    "Rz": OperatorConstDecl("Rz", _QUBIT, _QUBIT, _ANGLE),
    "QFT": OperatorConstDecl("QFT", param_types=(INT,), polymorphic=True),
}

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF
CNOT_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def builtin_gates() -> Dict[str, OperatorConstDecl]:
    """Name -> declaration for I, Ph, X, Y, Z, H, CNOT, Rx, Ry, Rz and QFT."""
    return dict(GATES)


def rotation(axis: np.ndarray, theta: complex) -> np.ndarray:
    """cos(theta/2) I - i sin(theta/2) P for a Pauli matrix P."""
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * axis


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT on n qubits, omega = exp(2 pi i / 2^n)."""
    size = 2**n
    exponents = np.outer(np.arange(size), np.arange(size)) % size
    return np.exp(2j * np.pi * exponents / size) / np.sqrt(size)


def _square(rows: int, cols: int, name: str) -> None:
    if rows != cols:
        raise EvaluationError(f"'{name}' needs a square signature, got {rows}x{cols}")


def _identity(params, rows, cols):
    _square(rows, cols, "I")
    return np.eye(rows, dtype=complex)


def _phase(params, rows, cols):
    _square(rows, cols, "Ph")
    return -np.eye(rows, dtype=complex)


def _fixed(matrix: np.ndarray):
    return lambda params, rows, cols: matrix


def _rotation(axis: np.ndarray):
    return lambda params, rows, cols: rotation(axis, complex(params[0]))


def _qft(params, rows, cols):
    n = int(params[0])
    if n < 0 or rows != 2**n or cols != 2**n:
        raise EvaluationError(f"QFT({n}) acts on {2**max(n, 0)} dimensions, got {rows}x{cols}")
    return dft_matrix(n)


INTERPRETATIONS = {
    "I": _identity,
    "Ph": _phase,
    "X": _fixed(PAULI_X),
    "Y": _fixed(PAULI_Y),
    "Z": _fixed(PAULI_Z),
    "H": _fixed(HADAMARD),
    "CNOT": _fixed(CNOT_MATRIX),
    "Rx": _rotation(PAULI_X),
    "Ry": _rotation(PAULI_Y),
    "Rz": _rotation(PAULI_Z),
    "QFT": _qft,
}


def default_quantum_structure(base: Optional[Structure] = None, max_dim: int = 4096) -> QuantumStructure:
    """Quantum structure interpreting every built-in gate over the given classical structure."""
    return QuantumStructure(base or Structure(), dict(INTERPRETATIONS), max_dim)


def gate(name: str, *refs: QuantumRef, params: Sequence[Expr] = ()) -> OpConst:
    """A built-in gate acting on the given registers, row side equal to column side."""
    regs = registers(*refs)
    return OpConst(GATES[name], tuple(params), regs, regs)


# ---------------------------------------------------------------------------
# Recursive definitions
# ---------------------------------------------------------------------------

Builder = Callable[[State], FormalOp]


@dataclass(frozen=True)
class RecursiveCase:
    """One guarded clause; ``body`` is a term over the parameters or a builder of the local state."""

    guard: Formula
    body: Union[FormalOp, Builder]


@dataclass(eq=False)
class RecursiveDef:
    """
    Recursively defined operator (usually a state) with classical parameters

    Instances expand one level at a time: the arguments are evaluated, the
    unique case whose guard holds is chosen and the parameters in its body
    are replaced by their values. ``measure`` must decrease strictly along
    nested instances of the same definition.

    Args:
        name: Definition name
        params: Classical parameters
        measure: Int expression over the parameters
        arrays: Quantum arrays the bodies are written over; an instance may
            rebind them to other arrays of the same shape
        external_vars: Classical variables read from the enclosing state
    """

    name: str
    params: Tuple[Var, ...]
    measure: Optional[Expr] = None
    arrays: Tuple[QuantumVarDecl, ...] = ()
    external_vars: Tuple[Any, ...] = ()
    cases: List[RecursiveCase] = field(default_factory=list)

    def case(self, guard: Formula, body: Union[FormalOp, Builder]) -> "RecursiveDef":
        self.cases.append(RecursiveCase(guard, body))
        return self

    def __call__(self, *args: Union[Expr, int, bool], arrays: Sequence[QuantumVarDecl] = ()) -> Instance:
        exprs = tuple(a if isinstance(a, Expr) else const(a) for a in args)
        return Instance(self, exprs, tuple(arrays))

    def expand(self, sigma: State, inst: Instance) -> Tuple[FormalOp, Optional[int]]:
        values = [eval_expr(sigma, a) for a in inst.args]
        local = sigma
        for param, value in zip(self.params, values):
            local = update_state(local, param, value)
        chosen = [c for c in self.cases if satisfies(local, c.guard)]
        shown = ", ".join(f"{p.name}={v}" for p, v in zip(self.params, values))
        if not chosen:
            raise EvaluationError(f"no case of '{self.name}' applies at {shown}")
        if len(chosen) > 1:
            raise EvaluationError(f"cases of '{self.name}' overlap at {shown}")
        body = chosen[0].body
        if callable(body) and not isinstance(body, FormalOp):
            body = body(local)
        elif self.params:
            consts = tuple(Const(v, p.type) for p, v in zip(self.params, values))
            body = subst_classical(body, consts, self.params)
        if inst.arrays:
            body = self._rebind(body, inst.arrays)
        measure = int(eval_expr(local, self.measure)) if self.measure is not None else None
        log_debug(f"expand {self.name}({shown}) measure={measure}")
        return body, measure

    def _rebind(self, body: FormalOp, arrays: Sequence[QuantumVarDecl]) -> FormalOp:
        if len(arrays) != len(self.arrays):
            raise TypeMismatchError(f"'{self.name}' is written over {len(self.arrays)} arrays, got {len(arrays)}")
        mapping = dict(zip(self.arrays, arrays))

        def on_ref(ref: QuantumRef) -> QuantumRef:
            return QuantumRef(mapping.get(ref.base, ref.base), ref.indices)

        rebound = map_op(body, lambda expr: expr, on_ref)
        return _rebind_instances(rebound, tuple(arrays))


def _rebind_instances(op: FormalOp, arrays: Tuple[QuantumVarDecl, ...]) -> FormalOp:
    if isinstance(op, Instance):
        return Instance(op.definition, op.args, op.arrays or arrays, op.name)
    if isinstance(op, Scale):
        return Scale(op.coeff, _rebind_instances(op.body, arrays))
    if isinstance(op, Adjoint):
        return Adjoint(_rebind_instances(op.body, arrays))
    if isinstance(op, (Sum, Product, Tensor)):
        return type(op)(_rebind_instances(op.left, arrays), _rebind_instances(op.right, arrays))
    return op


QUBITS = QuantumVarDecl("q", (INT,), BOOL)
BITS = ArrayVar("j", (INT,), BOOL)
_M, _N, _K, _R, _L = (Var(name, INT) for name in "mnkrl")


def _minus(expr: Expr, amount: int = 1) -> Expr:
    return app("-", expr, Const(amount, INT))


def q(index: Union[Expr, int], array: QuantumVarDecl = QUBITS) -> QuantumRef:
    return QuantumRef(array, (index if isinstance(index, Expr) else Const(index, INT),))


def plus_state(ref: QuantumRef) -> FormalOp:
    """(|0> + |1>)/sqrt 2."""
    return Scale(const(SQRT_HALF), Sum(Ket(Const(False, BOOL), ref), Ket(Const(True, BOOL), ref)))


def _pad() -> RecursiveDef:
    """I[q[m]] (x) ... (x) I[q[n]]; pads a two-qubit gate to a longer register section."""
    pad = RecursiveDef("PAD", (_M, _N), app("-", _N, _M), (QUBITS,))
    pad.case(eq(_N, _M), gate("I", q(_M)))
    pad.case(Atom("gt", (_N, _M)), Tensor(pad(_M, _minus(_N)), gate("I", q(_N))))
    return pad


def _eqsup() -> RecursiveDef:
    s = RecursiveDef("S", (_M, _N), app("-", _N, _M), (QUBITS,))
    s.case(eq(_N, _M), plus_state(q(_M)))
    s.case(Atom("gt", (_N, _M)), Tensor(s(_M, _minus(_N)), plus_state(q(_N))))
    return s


def _ghz(pad: RecursiveDef) -> RecursiveDef:
    # CNOT[q[n-1],q[n]] acts on the whole section q[m..n]; PAD supplies the identity on q[m..n-2]
    ghz = RecursiveDef("GHZ", (_M, _N), app("-", _N, _M), (QUBITS,))
    zero = Ket(Const(False, BOOL), q(_N))
    previous = Tensor(ghz(_M, _minus(_N)), zero)
    cnot = gate("CNOT", q(_minus(_N)), q(_N))
    ghz.case(eq(_N, _M), plus_state(q(_M)))
    ghz.case(eq(_N, app("+", _M, Const(1, INT))), Product(cnot, previous))
    ghz.case(Atom("gt", (_N, app("+", _M, Const(1, INT)))),
             Product(Tensor(pad(_M, _minus(_N, 2)), cnot), previous))
    return ghz


def _basis() -> RecursiveDef:
    basis = RecursiveDef("BASIS", (_K, _R), app("-", _R, _K), (QUBITS,), (BITS,))
    basis.case(eq(_R, _K), Ket(ArrayRef(BITS, (_K,)), q(_K)))
    basis.case(Atom("gt", (_R, _K)), Tensor(basis(_K, _minus(_R)), Ket(ArrayRef(BITS, (_R,)), q(_R))))
    return basis


def binary_fraction(start: int, stop: int) -> Expr:
    """0.j[start..stop] = sum_r j[r] 2^(start-r-1) as a C expression over the bit array j."""
    total: Expr = Const(0j, COMPLEX)
    for r in range(start, stop + 1):
        bit = app("int", ArrayRef(BITS, (Const(r, INT),)))
        total = app("+", total, app("/", bit, Const(2 ** (r - start + 1), INT)))
    return total


def phase_state(ref: QuantumRef, fraction: Expr) -> FormalOp:
    """(|0> + exp(2 pi i f)|1>)/sqrt 2."""
    phase = app("exp", app("*", Const(2j * math.pi, COMPLEX), fraction))
    return Scale(const(SQRT_HALF), Sum(Ket(Const(False, BOOL), ref), Scale(phase, Ket(Const(True, BOOL), ref))))


def _qft_state() -> RecursiveDef:
    qft = RecursiveDef("QFTSTATE", (_K, _R), app("-", _R, _K), (QUBITS,), (BITS, _L))

    def factor(local: State) -> Tuple[int, FormalOp]:
        k, r, l = local["k"], local["r"], local["l"]
        if not 1 <= k <= r <= l:
            raise EvaluationError(f"QFTSTATE needs 1 <= k <= r <= l, got k={k}, r={r}, l={l}")
        start = l - (r - k)
        return r, phase_state(q(r), binary_fraction(start, l))

    def base(local: State) -> FormalOp:
        return factor(local)[1]

    def step(local: State) -> FormalOp:
        r, last = factor(local)
        return Tensor(qft(Const(local["k"], INT), Const(r - 1, INT)), last)

    qft.case(eq(_R, _K), base)
    qft.case(Atom("gt", (_R, _K)), step)
    return qft


PAD = _pad()
EQSUP = _eqsup()
GHZ = _ghz(PAD)
BASIS = _basis()
QFTSTATE = _qft_state()

RECURSIVE_DEFS: Dict[str, RecursiveDef] = {d.name: d for d in (PAD, EQSUP, GHZ, BASIS, QFTSTATE)}


def eqsup(m, n, array: QuantumVarDecl = QUBITS) -> Instance:
    """|S(m,n)>: equal superposition over q[m..n]."""
    return EQSUP(m, n, arrays=(array,) if array is not QUBITS else ())


def ghz(m, n, array: QuantumVarDecl = QUBITS) -> Instance:
    """|GHZ(m,n)> over q[m..n]."""
    return GHZ(m, n, arrays=(array,) if array is not QUBITS else ())


def basis_state(k, l) -> Instance:
    """|(j,k:l)>, reading the bit array j from the state."""
    return BASIS(k, l)


def qft_state(k, l) -> Instance:
    """|QFT(j,k:l)>, reading j and l from the state."""
    return QFTSTATE(k, l)


def bell(x: Union[Expr, bool], y: Union[Expr, bool], qa: QuantumRef, qb: QuantumRef) -> FormalOp:
    """
    (|0,y> + (-1)^x |1,not y>)/sqrt 2 on qa, qb

    Raises:
        TypeMismatchError: qa and qb can never be distinct
    """
    if distinctness_formula(registers(qa, qb)) == Atom("false"):
        raise TypeMismatchError(f"bell needs distinct registers, got '{qa.base.name}' twice")
    x = x if isinstance(x, Expr) else Const(bool(x), BOOL)
    y = y if isinstance(y, Expr) else Const(bool(y), BOOL)
    sign = app("pow", Const(-1, INT), app("int", x))
    first = Tensor(Ket(Const(False, BOOL), qa), Ket(y, qb))
    second = Tensor(Ket(Const(True, BOOL), qa), Ket(app("not", y), qb))
    return Scale(const(SQRT_HALF), Sum(first, Scale(sign, second)))


# ---------------------------------------------------------------------------
# Harnesses
# ---------------------------------------------------------------------------

def _structure(tolerance: float, base: Optional[Structure] = None) -> QuantumStructure:
    return default_quantum_structure(base or Structure(tolerance=tolerance))


@dataclass
class ProtocolHarness:
    """
    Named family of branch checks: for every grid point the branch term and
    the expected term are evaluated and compared entrywise
    """

    name: str
    grid: Sequence[Mapping[str, Any]]
    branch: Callable[[Mapping[str, Any]], FormalOp]
    expected: Callable[[Mapping[str, Any]], FormalOp]
    tolerance: float = 1e-9
    label: Callable[[Mapping[str, Any]], str] = lambda point: ",".join(f"{k}={v}" for k, v in point.items())

    def run(self, structure: Optional[QuantumStructure] = None) -> SuiteReport:
        structure = structure or _structure(self.tolerance)
        report = SuiteReport(self.name)
        for point in self.grid:
            name = f"{self.name} {self.label(point)}"
            ctx = Context(State(dict(point), structure.base), Valuation(), structure)
            try:
                got = eval_operator(ctx, self.branch(point))
                want = eval_operator(ctx, self.expected(point))
                want = want.permuted(got.rows, got.cols)
            except SolError as e:
                report.add(name, False, str(e))
                continue
            residual = max_abs(got.data - want.data)
            report.add(name, residual <= self.tolerance, "" if residual <= self.tolerance else f"residual {residual:.3e}",
                       residual=float(f"{residual:.3e}"))
        passed = len(report.outcomes) - len(report.failures)
        log_info(f"{self.name}: {passed}/{len(report.outcomes)} branch checks passed")
        return report


TELEPORT_INPUTS = ((1 + 0j, 0j), (0j, 1 + 0j), (SQRT_HALF + 0j, SQRT_HALF * 1j))
CORRECTIONS = ("X", "Z", "Ph")


def teleport_branch(x: bool, y: bool, m: bool, ma: bool, drop: Optional[str] = None) -> FormalOp:
    """
    One measurement branch of the teleportation program on q, qa, qb

    correction(x,y,m,ma) . (<m|_q <ma|_qa (x) I_qb) . (H[q] (x) I) . (CNOT[q,qa] (x) I_qb)
    applied to (alpha|0> + beta|1>)_q (x) bell(x,y) on qa, qb.
    """
    qq, qa, qb = (QuantumRef(QuantumVarDecl(name)) for name in ("q", "qa", "qb"))
    alpha, beta = Var("alpha", COMPLEX), Var("beta", COMPLEX)
    psi = Sum(Scale(alpha, Ket(Const(False, BOOL), qq)), Scale(beta, Ket(Const(True, BOOL), qq)))
    state = Tensor(psi, bell(x, y, qa, qb))
    entangle = Tensor(gate("CNOT", qq, qa), gate("I", qb))
    rotate = Tensor(gate("H", qq), gate("I", qa, qb))
    measure = Tensor(Tensor(Bra(Const(m, BOOL), qq), Bra(Const(ma, BOOL), qa)), gate("I", qb))
    result = Product(Product(Product(measure, rotate), entangle), state)
    applied = {"X": y != ma, "Z": x != m, "Ph": x and ma}
    for name in CORRECTIONS:
        if applied[name] and name != drop:
            result = Product(gate(name, qb), result)
    return result


def teleport_expected(point: Mapping[str, Any]) -> FormalOp:
    """(alpha|0> + beta|1>)/2 on qb."""
    qb = QuantumRef(QuantumVarDecl("qb"))
    alpha, beta = Var("alpha", COMPLEX), Var("beta", COMPLEX)
    psi = Sum(Scale(alpha, Ket(Const(False, BOOL), qb)), Scale(beta, Ket(Const(True, BOOL), qb)))
    return Scale(const(0.5), psi)


def teleport_verify(x: Optional[bool] = None, y: Optional[bool] = None, drop: Optional[str] = None,
                    tolerance: float = 1e-9) -> SuiteReport:
    """
    Check every measurement branch of the teleportation program

    Args:
        x, y: Bell parameters; None runs both values
        drop: Name of a correction (X, Z or Ph) to leave out
        tolerance: Entrywise tolerance

    Returns:
        One check per (x, y, m, ma, input): 48 for the full grid
    """
    if drop is not None and drop not in CORRECTIONS:
        raise ValueError(f"unknown correction '{drop}', expected one of {CORRECTIONS}")
    xs = (False, True) if x is None else (bool(x),)
    ys = (False, True) if y is None else (bool(y),)
    grid = [
        {"x": bx, "y": by, "m": m, "ma": ma, "alpha": a, "beta": b, "input": i}
        for bx, by, m, ma in itertools.product(xs, ys, (False, True), (False, True))
        for i, (a, b) in enumerate(TELEPORT_INPUTS)
    ]
    harness = ProtocolHarness(
        "teleport" if drop is None else f"teleport without {drop}",
        grid,
        lambda p: teleport_branch(p["x"], p["y"], p["m"], p["ma"], drop),
        teleport_expected,
        tolerance,
        lambda p: f"x={int(p['x'])} y={int(p['y'])} m={int(p['m'])} ma={int(p['ma'])} input={p['input']}",
    )
    return harness.run()


def teleport_mutation_suite(tolerance: float = 1e-9) -> SuiteReport:
    """Leaving out any one correction must break at least one branch."""
    report = SuiteReport("teleport-mutations")
    for name in CORRECTIONS:
        mutated = teleport_verify(drop=name, tolerance=tolerance)
        report.add(f"dropping {name} is detected", not mutated.passed, "" if not mutated.passed else "no branch failed",
                   failing_branches=len(mutated.failures))
    return report


def zy_reconstruct(theta: float, theta1: float, theta2: float, theta3: float) -> np.ndarray:
    return cmath.exp(1j * theta) * rotation(PAULI_Z, theta1) @ rotation(PAULI_Y, theta2) @ rotation(PAULI_Z, theta3)


def zy_decompose(a00: complex, a01: complex, a10: complex, a11: complex,
                 tolerance: float = 1e-9) -> Tuple[float, float, float, float]:
    """
    Angles with U = exp(i theta) Rz(theta1) Ry(theta2) Rz(theta3)

    Raises:
        EvaluationError: the rows of U are not orthonormal
    """
    u = np.array([[a00, a01], [a10, a11]], dtype=complex)
    if not is_unitary(u, tolerance):
        raise EvaluationError("Z-Y decomposition needs orthonormal rows")
    theta = cmath.phase(np.linalg.det(u)) / 2
    v = u * cmath.exp(-1j * theta)
    c, s = abs(v[0, 0]), abs(v[1, 0])
    theta2 = 2 * math.atan2(s, c)
    if s <= tolerance:
        theta1, theta3 = -2 * cmath.phase(v[0, 0]), 0.0
    elif c <= tolerance:
        theta1, theta3 = 2 * cmath.phase(v[1, 0]), 0.0
    else:
        total, difference = -2 * cmath.phase(v[0, 0]), 2 * cmath.phase(v[1, 0])
        theta1, theta3 = (total + difference) / 2, (total - difference) / 2
    angles = (theta, theta1, theta2, theta3)
    if max_abs(zy_reconstruct(*angles) - u) > tolerance:
        # det fixes theta only up to pi; the other branch absorbs a sign
        theta += math.pi
        v = -v
        total, difference = -2 * cmath.phase(v[0, 0]), 2 * cmath.phase(v[1, 0])
        if s <= tolerance:
            theta1, theta3 = total, 0.0
        elif c <= tolerance:
            theta1, theta3 = difference, 0.0
        else:
            theta1, theta3 = (total + difference) / 2, (total - difference) / 2
        angles = (theta, theta1, theta2, theta3)
    return angles


def _qubit_grid(symbols: Sequence[Sequence[Expr]], ref: QuantumRef) -> FormalOp:
    term: Optional[FormalOp] = None
    for i in range(2):
        for j in range(2):
            dyad = Scale(symbols[i][j], Product(Ket(Const(bool(i), BOOL), ref), Bra(Const(bool(j), BOOL), ref)))
            term = dyad if term is None else Sum(term, dyad)
    return term


def zy_witness_formula(ref: Optional[QuantumRef] = None) -> OpEq:
    """sum a_ij |i><j| = exp(i theta) Rz(theta1) Ry(theta2) Rz(theta3) over symbolic a_ij and angles."""
    ref = ref or QuantumRef(QuantumVarDecl("r"))
    a = [[Var(f"a{i}{j}", COMPLEX) for j in range(2)] for i in range(2)]
    t, t1, t2, t3 = (Var(name, COMPLEX) for name in ("theta", "theta1", "theta2", "theta3"))
    rhs = Product(Product(gate("Rz", ref, params=(t1,)), gate("Ry", ref, params=(t2,))), gate("Rz", ref, params=(t3,)))
    phase = app("exp", app("*", Const(1j, COMPLEX), t))
    return OpEq(_qubit_grid(a, ref), Scale(phase, rhs))


def zy_witness_check(u: np.ndarray, structure: Optional[QuantumStructure] = None, tolerance: float = 1e-9) -> bool:
    """Solve for the angles, then confirm the equation as a formula under the solved state."""
    structure = structure or _structure(tolerance)
    angles = zy_decompose(u[0, 0], u[0, 1], u[1, 0], u[1, 1], tolerance)
    values = {f"a{i}{j}": complex(u[i, j]) for i in range(2) for j in range(2)}
    values.update(zip(("theta", "theta1", "theta2", "theta3"), (complex(v) for v in angles)))
    ctx = Context(State(values, structure.base), Valuation(), structure)
    return sat_sol(ctx, zy_witness_formula())


def bloch(alpha: complex, beta: complex, tolerance: float = 1e-9) -> Tuple[float, float, float]:
    """
    (theta, phi, gamma) with alpha|0> + beta|1> = exp(i gamma)(cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>)

    Raises:
        EvaluationError: |alpha|^2 + |beta|^2 differs from 1
    """
    alpha, beta = complex(alpha), complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > tolerance:
        raise EvaluationError("Bloch angles need a normalised state")
    theta = 2 * math.atan2(abs(beta), abs(alpha))
    if abs(alpha) > tolerance:
        gamma = cmath.phase(alpha)
        phi = cmath.phase(beta) - gamma if abs(beta) > tolerance else 0.0
    else:
        gamma, phi = cmath.phase(beta), 0.0
    return theta, phi % (2 * math.pi), gamma


def bloch_formula(ref: Optional[QuantumRef] = None) -> OpEq:
    ref = ref or QuantumRef(QuantumVarDecl("r"))
    alpha, beta = Var("alpha", COMPLEX), Var("beta", COMPLEX)
    theta, phi, gamma = (Var(name, COMPLEX) for name in ("theta", "phi", "gamma"))
    zero, one = Ket(Const(False, BOOL), ref), Ket(Const(True, BOOL), ref)
    half = app("/", theta, Const(2, INT))
    unit = Const(1j, COMPLEX)
    lhs = Sum(Scale(alpha, zero), Scale(beta, one))
    rhs = Sum(Scale(app("cos", half), zero),
              Scale(app("*", app("exp", app("*", unit, phi)), app("sin", half)), one))
    return OpEq(lhs, Scale(app("exp", app("*", unit, gamma)), rhs))


def bloch_check(alpha: complex, beta: complex, structure: Optional[QuantumStructure] = None,
                tolerance: float = 1e-9) -> bool:
    structure = structure or _structure(tolerance)
    theta, phi, gamma = bloch(alpha, beta, tolerance)
    values = {"alpha": complex(alpha), "beta": complex(beta), "theta": complex(theta), "phi": complex(phi),
              "gamma": complex(gamma)}
    ctx = Context(State(values, structure.base), Valuation(), structure)
    return sat_sol(ctx, bloch_formula())


def zy_suite(instances: int = 100, seed: int = 0, tolerance: float = 1e-9) -> SuiteReport:
    """Z-Y decompositions and Bloch angles on fixed and seeded random inputs."""
    structure = _structure(tolerance)
    rng = np.random.default_rng(seed)
    report = SuiteReport("zy")
    identity_angles = zy_decompose(1, 0, 0, 1, tolerance)
    report.add("zy: identity", abs(identity_angles[2]) <= tolerance and zy_witness_check(np.eye(2), structure, tolerance),
               angles=[round(a, 9) for a in identity_angles])
    report.add("zy: hadamard", zy_witness_check(HADAMARD, structure, tolerance))
    failures = []
    for i in range(instances):
        u = haar_unitary(rng, 2)
        try:
            ok = zy_witness_check(u, structure, tolerance)
        except EvaluationError as e:
            ok = False
            log_debug(f"zy instance {i}: {e}")
        if not ok:
            failures.append(f"instance {i}")
    report.add("zy: haar-random unitaries", not failures, failures[0] if failures else "",
               instances=instances, failures=len(failures))

    fixed = {
        "bloch: north pole": (1, 0, (0.0, None)),
        "bloch: |+>": (SQRT_HALF, SQRT_HALF, (math.pi / 2, 0.0)),
        "bloch: |+i>": (SQRT_HALF, SQRT_HALF * 1j, (math.pi / 2, math.pi / 2)),
    }
    for name, (a, b, (theta, phi)) in fixed.items():
        got = bloch(a, b, tolerance)
        ok = abs(got[0] - theta) <= tolerance and (phi is None or abs(got[1] - phi) <= tolerance)
        report.add(name, ok and bloch_check(a, b, structure, tolerance), angles=[round(v, 9) for v in got])
    failures = []
    for i in range(instances):
        a, b = random_state(rng, 2)[:, 0]
        if not bloch_check(a, b, structure, tolerance):
            failures.append(f"instance {i}")
    report.add("bloch: random states", not failures, failures[0] if failures else "",
               instances=instances, failures=len(failures))
    return report


_Q1, _Q2 = QuantumRef(QuantumVarDecl("q1")), QuantumRef(QuantumVarDecl("q2"))
CLONER = OperatorVarDecl("U", _TWO_QUBITS, _TWO_QUBITS)
CLONE_INPUT = OperatorVarDecl("psi", _QUBIT, ())


def _cloning_equation(psi: Callable[[QuantumRef], FormalOp]) -> OpEq:
    both = registers(_Q1, _Q2)
    copied = Product(OpVar(CLONER, both, both), Tensor(psi(_Q1), Ket(Const(False, BOOL), _Q2)))
    return OpEq(copied, Tensor(psi(_Q1), psi(_Q2)))


CLONING_WITNESSES: Dict[str, Callable[[QuantumRef], FormalOp]] = {
    "|0>": lambda ref: Ket(Const(False, BOOL), ref),
    "|1>": lambda ref: Ket(Const(True, BOOL), ref),
    "|+>": plus_state,
}


def no_cloning_refute(u: np.ndarray, structure: Optional[QuantumStructure] = None,
                      tolerance: float = 1e-9) -> Optional[str]:
    """
    First state among |0>, |1>, |+> that the two-qubit unitary fails to copy

    Raises:
        EvaluationError: u is not a 4x4 unitary
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4) or not is_unitary(u, tolerance):
        raise EvaluationError("no-cloning witness search needs a two-qubit unitary")
    structure = structure or _structure(tolerance)
    ctx = Context(State({}, structure.base), Valuation({CLONER.name: u}), structure)
    for name, psi in CLONING_WITNESSES.items():
        if not sat_sol(ctx, _cloning_equation(psi)):
            return name
    return None


def no_cloning_formula() -> ForAllOperator:
    """forall U. not (U unitary and forall psi. pure(psi) -> U(psi (x) |0>) = psi (x) psi)."""
    both = registers(_Q1, _Q2)
    clones = ForAllOperator(
        CLONE_INPUT,
        sol_implies(
            Pred(PredicateKind.PURE, OpVar(CLONE_INPUT, registers(_Q1), EPSILON), registers(_Q1)),
            _cloning_equation(lambda ref: OpVar(CLONE_INPUT, registers(ref), EPSILON)),
        ),
    )
    return ForAllOperator(CLONER, SolNot(SolAnd(Pred(PredicateKind.UNITARY, OpVar(CLONER, both, both), both), clones)))


def no_cloning_suite(instances: int = 100, seed: int = 0, samples: int = 20, tolerance: float = 1e-9) -> SuiteReport:
    structure = _structure(tolerance)
    rng = np.random.default_rng(seed)
    report = SuiteReport("no-cloning")
    found = no_cloning_refute(np.eye(4), structure, tolerance)
    report.add("no-cloning: identity", found == "|1>", witness=found)
    found = no_cloning_refute(CNOT_MATRIX, structure, tolerance)
    report.add("no-cloning: CNOT", found == "|+>", witness=found)
    missing = []
    for i in range(instances):
        if no_cloning_refute(haar_unitary(rng, 4), structure, tolerance) is None:
            missing.append(f"instance {i}")
    report.add("no-cloning: haar-random unitaries", not missing, missing[0] if missing else "",
               instances=instances, failures=len(missing))
    result = check_entailment(EntailmentQuery(goal=no_cloning_formula(), samples=samples, seed=seed), structure)
    report.add("no-cloning: raw formula is undecided", result.verdict.value == "Unknown" and result.reason == "sampled",
               verdict=result.verdict.value, reason=result.reason)
    return report


def projection_example(k: int, l: int, array: QuantumVarDecl = QUBITS) -> FormalOp:
    """
    not |0..0><0..0| on q[k..l]: the projection onto the complement of the all-zero state

    Raises:
        EvaluationError: k > l or more than 12 qubits
    """
    if k > l or l - k + 1 > 12:
        raise EvaluationError(f"projection needs k <= l and at most 12 qubits, got {k}..{l}")
    zeros: Optional[FormalOp] = None
    for index in range(k, l + 1):
        ket = Ket(Const(False, BOOL), q(index, array))
        zeros = ket if zeros is None else Tensor(zeros, ket)
    return negate(Product(zeros, Adjoint(zeros)), GATES["I"])


def projection_check(k: int, l: int, tolerance: float = 1e-9) -> SuiteReport:
    structure = _structure(tolerance)
    ctx = Context(State({}, structure.base), Valuation(), structure)
    p = projection_example(k, l)
    rank = 2 ** (l - k + 1) - 1
    report = SuiteReport("projection")
    report.add(f"projection {k}..{l}: idempotent", sat_sol(ctx, OpEq(Product(p, p), p)))
    report.add(f"projection {k}..{l}: self-adjoint", sat_sol(ctx, OpEq(Adjoint(p), p)))
    report.add(f"projection {k}..{l}: trace", sat_sol(ctx, TraceCmp(p, "=", complex(rank))), rank=rank)
    return report


# ---------------------------------------------------------------------------
# Entailment examples
# ---------------------------------------------------------------------------

def address_query(int_range: Tuple[int, int] = (-20, 40), **options) -> EntailmentQuery:
    """
    2k = 3m - 4, 7n = 5l - 7, Dist(q[2k+3], q[5l-2]) |=
        CNOT[q[2k+3],q[5l-2]] CNOT[q[3m-1],q[7n+5]] = I[q[2k+3],q[5l-2]]

    The fractional equations k = 3m/2 - 2 and n = 5l/7 - 1 are stated over
    Int by clearing denominators.
    """
    k, m, n, l = (Var(name, INT) for name in "kmnl")

    def lin(a: int, x: Expr, b: int) -> Expr:
        return app("+", app("*", Const(a, INT), x), Const(b, INT))

    first = (q(lin(2, k, 3)), q(lin(5, l, -2)))
    second = (q(lin(3, m, -1)), q(lin(7, n, 5)))
    theory = (
        eq(app("*", Const(2, INT), k), lin(3, m, -4)),
        eq(app("*", Const(7, INT), n), lin(5, l, -7)),
        distinctness_formula(registers(*first)),
    )
    goal = OpEq(Product(gate("CNOT", *first), gate("CNOT", *second)), gate("I", *first))
    ranges = {name: int_range for name in "kmnl"}
    return EntailmentQuery(theory, (), goal, int_ranges=ranges, **options)


def superposition_query(m_range: Tuple[int, int] = (0, 10), **options) -> EntailmentQuery:
    """m = n |= |S(m,n)> = |GHZ(m,n)>."""
    m, n = Var("m", INT), Var("n", INT)
    return EntailmentQuery((eq(m, n),), (), OpEq(eqsup(m, n), ghz(m, n)),
                           int_ranges={"m": m_range, "n": m_range}, **options)


def motivating_state(theta: Expr, k: Expr, m: Expr, n: Expr, array: QuantumVarDecl) -> FormalOp:
    """cos(theta/2)|2k+1>_{p[m+1]}|n-5>_{p[3m-4]} + sin(theta/2)|2k-1>_{p[m+1]}|n+3>_{p[3m-4]}."""
    two = Const(2, INT)
    first, second = q(app("+", m, Const(1, INT)), array), q(app("-", app("*", Const(3, INT), m), Const(4, INT)), array)
    half = app("/", theta, two)

    def term(coeff: Expr, a: Expr, b: Expr) -> FormalOp:
        return Scale(coeff, Tensor(Ket(a, first), Ket(b, second)))

    return Sum(
        term(app("cos", half), app("+", app("*", two, k), Const(1, INT)), app("-", n, Const(5, INT))),
        term(app("sin", half), app("-", app("*", two, k), Const(1, INT)), app("+", n, Const(3, INT))),
    )


def motivating_query(levels: int = 16, int_range: Tuple[int, int] = (-2, 16), theta: float = 0.7,
                     **options) -> EntailmentQuery:
    """
    Labels within 0..levels-1 |= pure(state):p[m+1],p[3m-4]

    The registers carry values of type Int[0..levels-1].
    """
    log_warning(f"register p approximates H_Int by the values 0..{levels - 1}")
    array = QuantumVarDecl("p", (INT,), int_type(0, levels - 1))
    k, m, n = (Var(name, INT) for name in "kmn")
    theta_var = Var("theta", COMPLEX)
    state = motivating_state(theta_var, k, m, n, array)
    regs = registers(q(app("+", m, Const(1, INT)), array),
                     q(app("-", app("*", Const(3, INT), m), Const(4, INT)), array))
    top = Const(levels - 1, INT)
    two = Const(2, INT)
    theory = (
        Atom("le", (Const(0, INT), app("-", app("*", two, k), Const(1, INT)))),
        Atom("le", (app("+", app("*", two, k), Const(1, INT)), top)),
        Atom("le", (Const(0, INT), app("-", n, Const(5, INT)))),
        Atom("le", (app("+", n, Const(3, INT)), top)),
    )
    return EntailmentQuery(theory, (), Pred(PredicateKind.PURE, state, regs),
                           int_ranges={name: int_range for name in "kmn"},
                           fixed={"theta": complex(theta)}, **options)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _vector(ctx: Context, op: FormalOp) -> np.ndarray:
    matrix = eval_operator(ctx, op)
    return matrix.permuted(tuple(sorted(matrix.rows, key=lambda r: r.sort_key())), ()).data[:, 0]


def bell_suite(tolerance: float = 1e-9) -> SuiteReport:
    structure = _structure(tolerance)
    ctx = Context(State({}, structure.base), Valuation(), structure)
    qa, qb = QuantumRef(QuantumVarDecl("qa")), QuantumRef(QuantumVarDecl("qb"))
    expected = {
        (False, False): np.array([1, 0, 0, 1]) * SQRT_HALF,
        (False, True): np.array([0, 1, 1, 0]) * SQRT_HALF,
        (True, False): np.array([1, 0, 0, -1]) * SQRT_HALF,
        (True, True): np.array([0, 1, -1, 0]) * SQRT_HALF,
    }
    report = SuiteReport("bell")
    vectors = {}
    for (x, y), want in expected.items():
        vectors[(x, y)] = got = _vector(ctx, bell(x, y, qa, qb))
        report.add(f"bell x={int(x)} y={int(y)}", np.allclose(got, want, atol=tolerance, rtol=0))
    gram = np.array([[np.vdot(a, b) for b in vectors.values()] for a in vectors.values()])
    report.add("bell states are orthonormal", np.allclose(gram, np.eye(4), atol=tolerance, rtol=0))
    return report


def recursion_suite(qft_max: int = 5, m_range: Tuple[int, int] = (0, 10), tolerance: float = 1e-9) -> SuiteReport:
    """S, GHZ, BASIS and QFTSTATE against hand-built vectors and the DFT matrix."""
    structure = _structure(tolerance)
    base = structure.base
    ctx = Context(State({}, base), Valuation(), structure)
    report = SuiteReport("recursion")

    want = np.zeros(8, dtype=complex)
    want[0] = want[7] = SQRT_HALF
    report.add("GHZ(0,2) matches (|000>+|111>)/sqrt 2", np.allclose(_vector(ctx, ghz(0, 2)), want, atol=tolerance, rtol=0))
    report.add("S(1,1) = GHZ(1,1)", sat_sol(ctx, OpEq(eqsup(1, 1), ghz(1, 1))))
    unit = all(
        sat_sol(ctx, Pred(PredicateKind.PURE, d(0, n), registers(*(q(i) for i in range(n + 1)))))
        for d in (eqsup, ghz) for n in range(4)
    )
    report.add("S and GHZ unroll to unit vectors", unit)
    result = check_entailment(superposition_query(m_range), structure)
    report.add("m = n |= S(m,n) = GHZ(m,n)", result.valid, result.reason, verdict=result.verdict.value)

    failures = []
    checked = 0
    for l in range(1, qft_max + 1):
        regs = registers(*(q(i) for i in range(1, l + 1)))
        transform = OpConst(GATES["QFT"], (Const(l, INT),), regs, regs)
        for bits in itertools.product((False, True), repeat=l):
            table = {(r,): bit for r, bit in zip(range(1, l + 1), bits)}
            local = Context(State({"j": table, "l": l}, base), Valuation(), structure)
            checked += 1
            if not sat_sol(local, OpEq(Product(transform, basis_state(1, l)), qft_state(1, l))):
                failures.append(f"l={l} j={''.join(str(int(b)) for b in bits)}")
    report.add("QFT maps |(j,1:l)> to |QFT(j,1:l)>", not failures, failures[0] if failures else "",
               instances=checked, failures=len(failures))
    report.add("QFT(3) is unitary", unitary_def_check(dft_matrix(3).tolist(), State({}, base), structure))
    return report


def examples_suite(tolerance: float = 1e-9, int_range: Tuple[int, int] = (-20, 40)) -> SuiteReport:
    """Entailments from the worked examples: register address arithmetic and the parameterised state."""
    structure = _structure(tolerance)
    report = SuiteReport("examples")
    result = check_entailment(address_query(int_range), structure)
    report.add("address arithmetic entailment", result.valid, result.reason, verdict=result.verdict.value,
               states=result.stats.get("states_satisfying", 0))
    result = check_entailment(motivating_query(), structure)
    report.add("parameterised state is pure", result.valid, result.reason, verdict=result.verdict.value,
               states=result.stats.get("states_satisfying", 0))
    report.extend(projection_check(1, 3, tolerance))
    return report
