import pytest

from sol_kernel.logic.classical_logic import BOOL, FALSE, INT, TRUE, Const, State, Var, app, const, int_type, satisfies
from sol_kernel.logic.errors import TypeMismatchError
from sol_kernel.logic.operator_terms import (
    Adjoint,
    Bra,
    Ket,
    OperatorVarDecl,
    OpVar,
    Product,
    Scale,
    Sum,
    Tensor,
    negate,
    subst_classical,
    subst_operator,
)
from sol_kernel.logic.quantum_registers import (
    EPSILON,
    GroundRef,
    QuantumRef,
    QuantumVarDecl,
    canonical_order,
    distinctness_formula,
    ground,
    registers,
)
from sol_kernel.logic.stdlib_examples import GATES, gate


r = QuantumRef(QuantumVarDecl("r"))
s = QuantumRef(QuantumVarDecl("s"))
Q = QuantumVarDecl("q", (INT,), BOOL)
U = OperatorVarDecl("U", (BOOL,), (BOOL,))
k = Var("k")


def q(index):
    return QuantumRef(Q, (index if not isinstance(index, int) else Const(index, INT),))


def test_quantum_variables_need_finite_types():
    with pytest.raises(TypeMismatchError):
        QuantumVarDecl("bad", (), INT)
    with pytest.raises(TypeMismatchError):
        QuantumRef(Q, ())
    assert QuantumVarDecl("d", (), int_type(0, 3)).int_valued


def test_register_string_dimension():
    assert registers(r, s).dim() == 4
    assert EPSILON.dim() == 1
    assert registers(QuantumRef(QuantumVarDecl("d", (), int_type(0, 2))), r).dim() == 6


def test_distinctness_formula():
    assert distinctness_formula(registers(r, r)) == FALSE
    assert distinctness_formula(registers(r, s)) == TRUE
    formula = distinctness_formula(registers(q(k), q(2)))
    assert satisfies(State({"k": 1}), formula)
    assert not satisfies(State({"k": 2}), formula)


def test_grounding_and_canonical_order():
    sigma = State({"k": 3})
    grounded = ground(sigma, q(app("+", k, const(1))))
    assert grounded == GroundRef(Q, (4,))
    assert grounded.label == "q[4]"
    order = canonical_order([GroundRef(Q, (2,)), GroundRef(Q, (0,)), GroundRef(QuantumVarDecl("a"), ())])
    assert [g.label for g in order] == ["a", "q[0]", "q[2]"]


def test_ket_and_bra_signatures():
    ket = Ket(const(True), r)
    assert ket.sig.dom == registers(r)
    assert ket.sig.cod == EPSILON
    assert Adjoint(ket).sig == Bra(const(True), r).sig
    outer = Product(ket, Bra(const(False), s))
    assert outer.sig.dom == registers(r)
    assert outer.sig.cod == registers(s)


def test_product_needs_matching_shapes():
    with pytest.raises(TypeMismatchError):
        Product(Ket(const(True), r), Ket(const(True), s))


def test_sum_needs_matching_shapes():
    with pytest.raises(TypeMismatchError):
        Sum(Ket(const(True), r), Bra(const(True), r))


def test_operator_variables_check_register_types():
    OpVar(U, registers(r), registers(s))
    with pytest.raises(TypeMismatchError):
        OpVar(U, registers(r, s), registers(s))


def test_polymorphic_identity():
    ident = gate("I", r, s)
    assert ident.sig.dom == registers(r, s)
    with pytest.raises(TypeMismatchError):
        gate("CNOT", r)


def test_labels_must_fit_register_type():
    with pytest.raises(TypeMismatchError):
        Ket(const(True), QuantumRef(QuantumVarDecl("d", (), int_type(0, 3))))
    Ket(const(2), QuantumRef(QuantumVarDecl("d", (), int_type(0, 3))))


def test_coefficients_must_be_numeric():
    with pytest.raises(TypeMismatchError):
        Scale(const(True), Ket(const(True), r))


def test_negation_is_identity_minus():
    op = gate("X", r)
    negated = negate(op, GATES["I"])
    assert isinstance(negated, Sum)
    assert negated.left == gate("I", r)
    assert negated.right.body == op


def test_tensor_concatenates_signatures():
    op = Tensor(gate("H", r), Ket(const(False), s))
    assert op.sig.dom == registers(r, s)
    assert op.sig.cod == registers(r)


def test_classical_substitution_reaches_indices_and_labels():
    op = Ket(Var("b", BOOL), q(k))
    result = subst_classical(op, (const(True), const(5)), (Var("b", BOOL), k))
    assert result == Ket(const(True), q(5))


def test_operator_substitution_retargets():
    body = Product(gate("H", r), gate("X", r))
    op = Tensor(OpVar(U, registers(s), registers(s)), gate("Z", r))
    result = subst_operator(op, body, U)
    assert result == Tensor(Product(gate("H", s), gate("X", s)), gate("Z", r))


def test_operator_substitution_checks_types():
    with pytest.raises(TypeMismatchError):
        subst_operator(OpVar(U, registers(r), registers(r)), gate("CNOT", r, s), U)
