import numpy as np
import pytest

from sol_kernel.logic.classical_logic import BOOL, COMPLEX, INT, Const, State, Var, app, const, int_type
from sol_kernel.logic.errors import ResourceError, SigningError
from sol_kernel.logic.operator_terms import Bra, Ket, OperatorVarDecl, OpVar, Product, Scale, Sum, Tensor
from sol_kernel.logic.quantum_registers import QuantumRef, QuantumVarDecl, registers
from sol_kernel.logic.semantics_engine import (
    Context,
    PredicateKind,
    Relation,
    Valuation,
    check_predicate,
    check_signing,
    compare,
    eval_operator,
    frobenius_norm,
    signing_suite,
    trace,
)
from sol_kernel.logic.stdlib_examples import HADAMARD, SQRT_HALF, bell, default_quantum_structure, gate


r = QuantumRef(QuantumVarDecl("r"))
s = QuantumRef(QuantumVarDecl("s"))
Q = QuantumVarDecl("q", (INT,), BOOL)
STRUCTURE = default_quantum_structure()


def ctx(values=None, eta=None, structure=STRUCTURE):
    return Context(State(values or {}, structure.base), eta or Valuation(), structure)


def qi(name):
    return QuantumRef(Q, (Var(name),))


def dyad(a, b, ref):
    return Product(Ket(const(a), ref), Bra(const(b), ref))


def test_hadamard_on_zero():
    matrix = eval_operator(ctx(), Product(gate("H", r), Ket(const(False), r)))
    assert matrix.data.shape == (2, 1)
    assert np.allclose(matrix.data[:, 0], HADAMARD[:, 0])


def test_outer_product_orientation():
    matrix = eval_operator(ctx(), Product(Ket(const(False), r), Bra(const(True), s)))
    assert [g.label for g in matrix.rows] == ["r"]
    assert [g.label for g in matrix.cols] == ["s"]
    assert matrix.data[0, 1] == 1
    assert np.count_nonzero(matrix.data) == 1


def test_sum_aligns_register_order():
    left = Tensor(gate("H", r), gate("X", s))
    right = Tensor(gate("X", s), gate("H", r))
    assert compare(ctx(), left, right, Relation.EQUAL)
    doubled = eval_operator(ctx(), Sum(left, right))
    assert np.allclose(doubled.data, 2 * np.kron(HADAMARD, [[0, 1], [1, 0]]))


def test_sum_over_different_registers_is_refuted():
    with pytest.raises(SigningError) as excinfo:
        check_signing(State(), Sum(Ket(const(False), r), Ket(const(False), s)))
    assert excinfo.value.rule == "Sign-Add"
    assert {g.label for g in excinfo.value.refs} == {"r", "s"}


def test_product_mismatch_names_rule():
    with pytest.raises(SigningError) as excinfo:
        check_signing(State(), Product(gate("H", r), gate("H", s)))
    assert excinfo.value.rule == "Sign-Mult"


def test_tensor_overlap_depends_on_state():
    op = Tensor(gate("H", qi("x")), gate("H", qi("y")))
    assert str(check_signing(State({"x": 0, "y": 1}), op)) == "q[0],q[1] -> q[0],q[1]"
    with pytest.raises(SigningError) as excinfo:
        check_signing(State({"x": 2, "y": 2}), op)
    assert excinfo.value.rule == "Sign-Tensor"


def test_constant_needs_distinct_registers():
    with pytest.raises(SigningError) as excinfo:
        check_signing(State({"x": 1, "y": 1}), gate("CNOT", qi("x"), qi("y")))
    assert excinfo.value.rule == "Sign-OpC"


def test_dimension_cap():
    small = default_quantum_structure(max_dim=2)
    with pytest.raises(ResourceError):
        eval_operator(ctx(structure=small), gate("CNOT", r, s))


def test_operator_variable_uses_valuation():
    u = OperatorVarDecl("U", (BOOL,), (BOOL,))
    op = OpVar(u, registers(r), registers(r))
    eta = Valuation().updated("U", HADAMARD)
    assert check_predicate(ctx(eta=eta), PredicateKind.UNITARY, op, registers(r))
    notes = []
    assert not check_predicate(ctx(), PredicateKind.UNITARY, op, registers(r), notes)
    assert "no value" in notes[0]


def test_predicates():
    plus = Product(gate("H", r), Ket(const(False), r))
    assert check_predicate(ctx(), PredicateKind.PURE, plus, registers(r))
    assert not check_predicate(ctx(), PredicateKind.PURE, Scale(const(2), plus), registers(r))
    assert check_predicate(ctx(), PredicateKind.OBSERVABLE, gate("Z", r), registers(r))
    assert not check_predicate(ctx(), PredicateKind.OBSERVABLE, dyad(False, True, r), registers(r))
    assert check_predicate(ctx(), PredicateKind.EFFECT, dyad(False, False, r), registers(r))
    assert not check_predicate(ctx(), PredicateKind.EFFECT, Scale(const(2), gate("I", r)), registers(r))
    assert check_predicate(ctx(), PredicateKind.MIXED, Scale(const(0.5), gate("I", r)), registers(r))
    assert not check_predicate(ctx(), PredicateKind.MIXED, gate("I", r), registers(r))


def test_predicate_register_mismatch():
    notes = []
    assert not check_predicate(ctx(), PredicateKind.UNITARY, gate("X", r), registers(s), notes)
    assert notes


def test_loewner_order():
    projector = dyad(False, False, r)
    assert compare(ctx(), projector, gate("I", r), Relation.LOEWNER)
    assert not compare(ctx(), gate("I", r), projector, Relation.LOEWNER)


def test_trace():
    op = Sum(dyad(False, False, r), Scale(const(3), dyad(True, True, r)))
    assert trace(ctx(), op) == pytest.approx(4)


def test_bell_states_are_pure():
    for x in (False, True):
        for y in (False, True):
            assert check_predicate(ctx(), PredicateKind.PURE, bell(x, y, r, s), registers(r, s))


def test_signing_suite_small():
    report = signing_suite(instances=40, ill_signed=20, seed=3)
    assert report.passed, [o.detail for o in report.failures]


def test_integer_register_labels():
    d = QuantumRef(QuantumVarDecl("d", (), int_type(0, 2)))
    matrix = eval_operator(ctx(), Ket(Const(2, INT), d))
    assert matrix.data[:, 0].tolist() == [0, 0, 1]


def test_frobenius_norm():
    assert frobenius_norm(ctx(), gate("H", r)) == pytest.approx(np.sqrt(2))
    assert frobenius_norm(ctx(), Ket(const(False), r)) == pytest.approx(1)


def test_frobenius_norm_is_multiplicative_over_tensor():
    rng = np.random.default_rng(7)
    u = OperatorVarDecl("U", (BOOL,), (BOOL,))
    v = OperatorVarDecl("V", (BOOL,), (BOOL,))
    left = OpVar(u, registers(r), registers(r))
    right = OpVar(v, registers(s), registers(s))
    for _ in range(5):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        eta = Valuation().updated("U", a).updated("V", b)
        product = frobenius_norm(ctx(eta=eta), Tensor(left, right))
        assert product == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b))


def test_half_integer_labels_give_plus_state():
    theta, x, n = Var("theta", COMPLEX), Var("x", COMPLEX), Var("n")
    ref = QuantumRef(Q, (app("-", app("*", const(3), n), const(2)),))
    half_angle = app("/", theta, const(2))
    op = Sum(
        Scale(app("cos", half_angle), Ket(app("-", x, const(0.5)), ref)),
        Scale(app("sin", half_angle), Ket(app("+", x, const(0.5)), ref)),
    )
    matrix = eval_operator(ctx({"theta": np.pi / 2, "x": 0.5, "n": 3}), op)
    assert str(matrix.signature) == "q[7] -> eps"
    assert np.allclose(matrix.data[:, 0], [SQRT_HALF, SQRT_HALF])
