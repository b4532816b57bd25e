import numpy as np

from sol_kernel.logic.classical_logic import BOOL, INT, Const, State, Var, const, eq
from sol_kernel.logic.operator_terms import Bra, Ket, Product, Scale, Sum
from sol_kernel.logic.quantum_registers import QuantumRef, QuantumVarDecl
from sol_kernel.logic.rewrite_engine import (
    COEFFICIENT_ADDITION,
    IDENTITY,
    SELF_OUTER_PRODUCT,
    decide_ground_equality,
    normalize,
    order_laws_suite,
    rewrite_step,
    rewrite_suite,
    try_rewrite,
)
from sol_kernel.logic.semantics_engine import Valuation
from sol_kernel.logic.stdlib_examples import SQRT_HALF, bell, gate


r = QuantumRef(QuantumVarDecl("r"))
s = QuantumRef(QuantumVarDecl("s"))
Q = QuantumVarDecl("q", (INT,), BOOL)


def dyad(a, b, ref=r):
    return Product(Ket(const(a), ref), Bra(const(b), ref))


def test_normal_form_of_projector_sum():
    nf = normalize(State(), Valuation(), Sum(dyad(False, False), dyad(True, True)))
    assert nf.lines() == ["1 |0>_r <0|_r", "1 |1>_r <1|_r"]
    assert np.allclose(nf.to_matrix(), np.eye(2))


def test_bra_ket_contracts_to_zero():
    nf = normalize(State(), Valuation(), Product(Bra(const(False), r), Ket(const(True), r)))
    assert nf.lines() == ["0"]
    assert nf.to_json() == {"rows": [], "cols": [], "terms": []}


def test_constants_expand_by_matrix_representation():
    nf = normalize(State(), Valuation(), gate("H", r))
    assert len(nf.terms) == 4
    assert np.isclose(nf.coefficient((True,), (True,)), -SQRT_HALF)


def test_normal_form_uses_canonical_register_order():
    nf = normalize(State(), Valuation(), bell(False, False, s, r))
    assert [g.label for g in nf.rows] == ["r", "s"]
    assert nf.to_json()["terms"][0] == {"ket": [0, 0], "bra": [], "coeff": [0.707106781187, 0.0]}


def test_ground_equality():
    plus = Product(gate("H", r), Ket(const(False), r))
    spelled = Scale(const(SQRT_HALF), Sum(Ket(const(False), r), Ket(const(True), r)))
    assert decide_ground_equality(State(), Valuation(), plus, spelled)
    assert not decide_ground_equality(State(), Valuation(), plus, Ket(const(False), r))
    notes = []
    assert not decide_ground_equality(State(), Valuation(), plus, Ket(const(False), s), notes=notes)
    assert "differ" in notes[0]


def test_identity_rule():
    term = Sum(dyad(False, False), dyad(True, True))
    result = try_rewrite(term, IDENTITY, sigma=State())
    assert result.applied
    assert result.term == gate("I", r)


def test_identity_rule_side_condition():
    term = Sum(dyad(False, False), dyad(False, False))
    result = try_rewrite(term, IDENTITY, sigma=State())
    assert not result.applied
    assert "side condition" in result.reason
    assert rewrite_step(term, IDENTITY, sigma=State()) == term


def test_self_outer_product():
    term = Product(dyad(True, False), Ket(const(False), r))
    result = try_rewrite(term, SELF_OUTER_PRODUCT, sigma=State())
    assert result.applied
    assert result.term == Ket(const(True), r)


def test_side_condition_discharged_from_theory():
    i, j = Var("i"), Var("j")
    qi, qj = QuantumRef(Q, (i,)), QuantumRef(Q, (j,))
    term = Product(Product(Ket(const(True), qi), Bra(const(False), qi)), Ket(const(False), qj))
    result = try_rewrite(term, SELF_OUTER_PRODUCT, theory=(eq(i, j),), int_ranges={"i": (0, 3), "j": (0, 3)})
    assert result.applied
    result = try_rewrite(term, SELF_OUTER_PRODUCT, int_ranges={"i": (0, 3), "j": (0, 3)})
    assert not result.applied
    assert "Refuted" in result.reason


def test_coefficient_addition_with_unit_coefficient():
    term = Sum(Ket(const(False), r), Scale(Const(2, INT), Ket(const(False), r)))
    result = try_rewrite(term, COEFFICIENT_ADDITION, sigma=State())
    assert result.applied
    nf = normalize(State(), Valuation(), result.term)
    assert np.isclose(nf.coefficient((False,), ()), 3)


def test_rewrite_suite_small():
    report = rewrite_suite(instances=20, seed=4)
    assert report.passed, [o.detail for o in report.failures]


def test_order_laws_small():
    report = order_laws_suite(instances=10, seed=5)
    assert report.passed, [o.detail for o in report.failures]
