import math

import numpy as np
import pytest

from sol_kernel.logic.classical_logic import BOOL, INT, Const, State, const
from sol_kernel.logic.errors import EvaluationError, SigningError, TypeMismatchError
from sol_kernel.logic.operator_terms import Ket, Scale, Sum, Tensor
from sol_kernel.logic.quantum_registers import QuantumRef, QuantumVarDecl, registers
from sol_kernel.logic.semantics_engine import Context, PredicateKind, Valuation, eval_operator
from sol_kernel.logic.sol_logic import OpEq, Pred, sat_sol
from sol_kernel.logic.stdlib_examples import (
    CNOT_MATRIX,
    HADAMARD,
    SQRT_HALF,
    bell,
    bell_suite,
    bloch,
    default_quantum_structure,
    eqsup,
    ghz,
    no_cloning_refute,
    no_cloning_suite,
    projection_check,
    q,
    recursion_suite,
    teleport_mutation_suite,
    teleport_verify,
    zy_decompose,
    zy_reconstruct,
    zy_suite,
)


STRUCTURE = default_quantum_structure()
CTX = Context(State({}, STRUCTURE.base), Valuation(), STRUCTURE)


def basis_string(bits, array=None):
    term = None
    for index, bit in enumerate(bits):
        ket = Ket(Const(bool(bit), BOOL), q(index) if array is None else q(index, array))
        term = ket if term is None else Tensor(term, ket)
    return term


def test_teleportation_all_branches():
    report = teleport_verify()
    assert len(report.outcomes) == 48
    assert report.passed, [o.name for o in report.failures]


def test_teleportation_single_bell_state():
    report = teleport_verify(x=True, y=False)
    assert len(report.outcomes) == 12
    assert report.passed


@pytest.mark.parametrize("drop", ["X", "Z", "Ph"])
def test_teleportation_without_a_correction_fails(drop):
    report = teleport_verify(drop=drop)
    assert not report.passed
    assert report.failures[0].detail


def test_teleportation_rejects_unknown_correction():
    with pytest.raises(ValueError):
        teleport_verify(drop="Y")


def test_teleport_mutation_suite():
    assert teleport_mutation_suite().passed


def test_bell_suite():
    report = bell_suite()
    assert report.passed
    assert len(report.outcomes) == 5


def test_bell_needs_distinct_registers():
    r = QuantumRef(QuantumVarDecl("r"))
    with pytest.raises(TypeMismatchError):
        bell(False, False, r, r)


def test_zy_decomposition_of_hadamard():
    angles = zy_decompose(*HADAMARD.flatten())
    assert np.allclose(zy_reconstruct(*angles), HADAMARD, atol=1e-9)


def test_zy_decomposition_rejects_non_unitary():
    with pytest.raises(EvaluationError):
        zy_decompose(1, 1, 0, 1)


def test_bloch_angles():
    theta, phi, _ = bloch(SQRT_HALF, SQRT_HALF * 1j)
    assert theta == pytest.approx(math.pi / 2)
    assert phi == pytest.approx(math.pi / 2)
    with pytest.raises(EvaluationError):
        bloch(1, 1)


def test_zy_suite_small():
    report = zy_suite(instances=10, seed=1)
    assert report.passed, [o.name for o in report.failures]


def test_no_cloning_witnesses():
    assert no_cloning_refute(np.eye(4)) == "|1>"
    assert no_cloning_refute(CNOT_MATRIX) == "|+>"
    with pytest.raises(EvaluationError):
        no_cloning_refute(np.ones((4, 4)))


def test_no_cloning_suite_small():
    report = no_cloning_suite(instances=5, samples=4)
    assert report.passed, [o.name for o in report.failures]


def test_ghz_unrolls():
    expected = Scale(const(SQRT_HALF), Sum(basis_string([0, 0, 0]), basis_string([1, 1, 1])))
    assert sat_sol(CTX, OpEq(ghz(0, 2), expected))


def test_ghz_on_another_array():
    p = QuantumVarDecl("p", (INT,), BOOL)
    matrix = eval_operator(CTX, ghz(0, 1, array=p))
    assert sorted(g.label for g in matrix.rows) == ["p[0]", "p[1]"]
    expected = Scale(const(SQRT_HALF), Sum(basis_string([0, 0], p), basis_string([1, 1], p)))
    assert sat_sol(CTX, OpEq(ghz(0, 1, array=p), expected))


def test_equal_superposition_is_pure():
    regs = registers(*(q(i) for i in range(3)))
    assert sat_sol(CTX, Pred(PredicateKind.PURE, eqsup(0, 2), regs))
    assert sat_sol(CTX, OpEq(eqsup(2, 2), ghz(2, 2)))
    assert not sat_sol(CTX, OpEq(eqsup(0, 1), ghz(0, 1)))


def test_recursion_outside_its_cases():
    with pytest.raises(EvaluationError):
        eval_operator(CTX, ghz(3, 1))


def test_recursion_suite_small():
    report = recursion_suite(qft_max=3, m_range=(0, 4))
    assert report.passed, [o.name for o in report.failures]


def test_projection_example():
    assert projection_check(1, 3).passed


def test_signing_error_in_branch_is_reported():
    with pytest.raises(SigningError):
        eval_operator(CTX, Tensor(Ket(Const(False, BOOL), q(0)), Ket(Const(False, BOOL), q(0))))
