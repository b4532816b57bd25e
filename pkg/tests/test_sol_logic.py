import numpy as np
import pytest

from sol_kernel.logic.classical_logic import BOOL, COMPLEX, INT, ArrayRef, ArrayVar, Atom, State, Var, app, const, eq
from sol_kernel.logic.operator_terms import Adjoint, Ket, OperatorVarDecl, OpVar, Product
from sol_kernel.logic.quantum_registers import QuantumRef, QuantumVarDecl, registers
from sol_kernel.logic.semantics_engine import Context, PredicateKind, Valuation
from sol_kernel.logic.sol_logic import (
    ClassicalAtom,
    EntailmentQuery,
    ForAllOperator,
    NormCmp,
    OpEq,
    OperatorSampler,
    Pred,
    SolNot,
    TraceCmp,
    Verdict,
    check_entailment,
    evaluate_sol,
    exists_operator,
    observable_def_check,
    replay_witness,
    sat_sol,
    schema_suite,
    sol_iff,
    sol_implies,
    substitution_suite,
    unitary_def_check,
)
from sol_kernel.logic.stdlib_examples import address_query, default_quantum_structure, gate, motivating_query
from sol_kernel.utils.config import Settings


x = Var("x")
y = Var("y")
r = QuantumRef(QuantumVarDecl("r"))
U = OperatorVarDecl("U", (BOOL,), (BOOL,))
STRUCTURE = default_quantum_structure()


def u_on_r():
    return OpVar(U, registers(r), registers(r))


def test_classical_entailment_is_valid():
    query = EntailmentQuery(
        sigma_theory=(eq(x, y),),
        goal=ClassicalAtom(eq(app("+", x, const(1)), app("+", y, const(1)))),
        int_ranges={"x": (-3, 3), "y": (-3, 3)},
    )
    result = check_entailment(query, STRUCTURE)
    assert result.verdict is Verdict.VALID
    assert result.exact
    assert result.stats["states_satisfying"] == 7


def test_lowest_counterexample_is_reported():
    query = EntailmentQuery(goal=ClassicalAtom(Atom("lt", (x, const(3)))), int_ranges={"x": (0, 5)})
    result = check_entailment(query, STRUCTURE)
    assert result.verdict is Verdict.REFUTED
    assert result.witness.sigma["x"] == 3
    assert replay_witness(query, result, STRUCTURE)
    assert result.to_json()["witness"]["sigma"] == {"x": 3}


def test_fixed_values_are_not_enumerated():
    query = EntailmentQuery(goal=ClassicalAtom(eq(x, const(4))), fixed={"x": 4})
    result = check_entailment(query, STRUCTURE)
    assert result.valid
    assert result.stats["states_satisfying"] == 1


def test_free_array_is_unknown():
    a = ArrayVar("a", (INT,), INT)
    query = EntailmentQuery(goal=ClassicalAtom(eq(ArrayRef(a, (const(0),)), const(0))))
    result = check_entailment(query, STRUCTURE)
    assert result.verdict is Verdict.UNKNOWN
    assert "array" in result.reason


def test_complex_variable_needs_sampling_mode():
    z = Var("z", COMPLEX)
    query = EntailmentQuery(goal=ClassicalAtom(eq(z, z)))
    result = check_entailment(query, STRUCTURE)
    assert result.verdict is Verdict.UNKNOWN
    sampled = check_entailment(EntailmentQuery(goal=ClassicalAtom(eq(z, z)), mode="sampling"), STRUCTURE)
    assert sampled.verdict is Verdict.UNKNOWN
    assert sampled.reason == "sampled"


def test_state_cap_gives_unknown():
    query = EntailmentQuery(goal=ClassicalAtom(eq(x, x)), int_ranges={"x": (0, 100)}, max_states=10)
    result = check_entailment(query, STRUCTURE)
    assert result.verdict is Verdict.UNKNOWN
    assert "cap" in result.reason


def test_not_every_operator_is_unitary():
    goal = ForAllOperator(U, Pred(PredicateKind.UNITARY, u_on_r(), registers(r)))
    result = check_entailment(EntailmentQuery(goal=goal), STRUCTURE)
    assert result.verdict is Verdict.REFUTED
    assert not result.exact
    assert "U" in result.witness.eta


def test_unitary_definition_is_undecided():
    op = u_on_r()
    goal = sol_implies(Pred(PredicateKind.UNITARY, op, registers(r)), OpEq(Product(Adjoint(op), op), gate("I", r)))
    result = check_entailment(EntailmentQuery(goal=goal, samples=8), STRUCTURE)
    assert result.verdict is Verdict.UNKNOWN
    assert result.reason == "sampled"


def test_gamma_restricts_contexts():
    b = Var("b", BOOL)
    ket = Ket(b, r)
    query = EntailmentQuery(
        gamma=(ClassicalAtom(eq(b, const(True))),),
        goal=TraceCmp(Product(gate("Z", r), Product(ket, Adjoint(ket))), "=", -1),
    )
    assert check_entailment(query, STRUCTURE).valid
    assert check_entailment(EntailmentQuery(goal=query.goal), STRUCTURE).refuted


def test_sampler_is_deterministic():
    first = OperatorSampler(5, 7).samples_for(U)
    second = OperatorSampler(5, 7).samples_for(U)
    assert len(first) == len(second)
    assert all(np.array_equal(a, b) for a, b in zip(first, second))
    assert not np.any(first[0])


def test_exists_operator_finds_adversarial_sample():
    goal = exists_operator(U, OpEq(u_on_r(), gate("H", r)))
    ctx = Context(State({}, STRUCTURE.base), Valuation(), STRUCTURE)
    value, certain = evaluate_sol(ctx, goal, OperatorSampler(3, 0))
    assert value and certain


def test_connectives():
    ctx = Context(State({"x": 2}, STRUCTURE.base), Valuation(), STRUCTURE)
    small = ClassicalAtom(Atom("lt", (x, const(3))))
    even = ClassicalAtom(eq(app("mod", x, const(2)), const(0)))
    assert sat_sol(ctx, sol_iff(small, even))
    assert not sat_sol(ctx, SolNot(small))
    assert sat_sol(ctx, NormCmp(gate("I", r), "=", np.sqrt(2)))
    assert sat_sol(ctx, NormCmp(gate("X", r), "<", 2))


def test_query_validation():
    with pytest.raises(ValueError):
        EntailmentQuery(samples=0)
    with pytest.raises(ValueError):
        EntailmentQuery(mode="guess")
    with pytest.raises(ValueError):
        EntailmentQuery(int_ranges={"x": (3, 1)})


def test_query_from_settings():
    query = EntailmentQuery.from_settings(Settings(samples=4, seed=9), goal=ClassicalAtom(eq(x, x)))
    assert query.samples == 4
    assert query.seed == 9


def test_definition_checks():
    assert unitary_def_check([[0, 1], [1, 0]])
    assert not unitary_def_check([[1, 1], [0, 1]])
    assert observable_def_check([[1, 1j], [-1j, 2]])
    assert not observable_def_check([[1, 1j], [1j, 2]])


def test_address_arithmetic():
    result = check_entailment(address_query((-20, 40)), STRUCTURE)
    assert result.valid, result.reason
    assert result.stats["states_satisfying"] > 0


def test_parameterised_state_is_pure():
    result = check_entailment(motivating_query(), STRUCTURE)
    assert result.valid, result.reason


def test_schema_suite_small():
    report = schema_suite(instances=5, axiom_instances=10, seed=1)
    assert report.passed, [o.detail for o in report.failures]


def test_substitution_suite_small():
    report = substitution_suite(instances=60, seed=2)
    assert report.passed, [o.detail for o in report.failures]


def test_hadamard_norm_is_not_one():
    assert check_entailment(EntailmentQuery(goal=NormCmp(gate("H", r), "=", np.sqrt(2))), STRUCTURE).valid
    assert check_entailment(EntailmentQuery(goal=SolNot(NormCmp(gate("H", r), "=", 1))), STRUCTURE).valid
    assert check_entailment(EntailmentQuery(goal=NormCmp(gate("H", r), "=", 1)), STRUCTURE).refuted
