import pytest

from sol_kernel.logic.classical_logic import (
    BOOL,
    COMPLEX,
    INT,
    And,
    ArrayRef,
    ArrayVar,
    Cond,
    Exists,
    ForAll,
    Implies,
    Not,
    State,
    Structure,
    Var,
    app,
    const,
    eq,
    eval_expr,
    free_vars_formula,
    int_type,
    ne,
    satisfies,
    subst_expr,
    subst_formula,
    update_array_cell,
    update_state,
)
from sol_kernel.logic.errors import EvaluationError, TypeMismatchError, UnsupportedQuantifierError


x = Var("x")
y = Var("y")
b = Var("b", BOOL)


def test_const_infers_types():
    assert const(True).type == BOOL
    assert const(3).type == INT
    assert const(0.5).type == COMPLEX
    assert const(0.5).value == 0.5 + 0j


def test_bounded_int_type():
    t = int_type(-1, 2)
    assert t.domain() == (-1, 0, 1, 2)
    assert t.size() == 4
    assert t.index_of(1) == 2
    assert str(t) == "Int[-1..2]"
    assert t.matches(INT)
    with pytest.raises(TypeMismatchError):
        int_type(3, 1)


def test_coerce_maps_values_onto_domain():
    assert BOOL.coerce(1, 1e-9) is True
    assert BOOL.coerce(0j, 1e-9) is False
    assert int_type(0, 3).coerce(2 + 1e-12j, 1e-9) == 2
    with pytest.raises(EvaluationError):
        int_type(0, 3).coerce(4, 1e-9)


def test_app_type_checks():
    assert app("+", x, const(1)).type == INT
    assert app("+", x, const(0.5)).type == COMPLEX
    assert app("int", b).type == INT
    with pytest.raises(TypeMismatchError):
        app("+", x, b)
    with pytest.raises(TypeMismatchError):
        app("not", x)
    with pytest.raises(TypeMismatchError):
        app("frobnicate", x)


def test_eval_arithmetic():
    sigma = State({"x": 7, "y": -2})
    assert eval_expr(sigma, app("div", x, const(2))) == 3
    assert eval_expr(sigma, app("mod", y, const(3))) == 1
    assert eval_expr(sigma, app("pow", const(-1), const(3))) == -1
    assert eval_expr(sigma, app("/", x, const(2))) == 3.5 + 0j


def test_eval_errors():
    sigma = State({"x": 0})
    with pytest.raises(EvaluationError):
        eval_expr(sigma, y)
    with pytest.raises(EvaluationError):
        eval_expr(sigma, app("div", const(1), x))
    small = State({"x": 10}, Structure(int_limit=50))
    with pytest.raises(EvaluationError):
        eval_expr(small, app("*", x, x))


def test_int_limit_not_enumeration_range_bounds_arithmetic():
    sigma = State({"x": 40}, Structure(int_range=(-20, 40), int_limit=1000))
    assert eval_expr(sigma, app("+", app("*", const(7), x), const(5))) == 285
    with pytest.raises(EvaluationError):
        eval_expr(sigma, app("*", x, const(40)))


def test_arrays_and_conditionals():
    a = ArrayVar("a", (INT,), INT)
    sigma = update_array_cell(State(), a, (1,), 5)
    sigma = update_state(sigma, "x", 1)
    assert eval_expr(sigma, ArrayRef(a, (x,))) == 5
    with pytest.raises(EvaluationError):
        eval_expr(sigma, ArrayRef(a, (const(2),)))
    assert eval_expr(sigma, Cond(eq(x, const(1)), const(10), const(20))) == 10
    with pytest.raises(TypeMismatchError):
        Cond(eq(x, const(1)), const(10), const(True))


def test_quantifiers_enumerate_domains():
    structure = Structure(int_range=(-3, 3))
    sigma = State({}, structure)
    assert satisfies(sigma, ForAll(b, Implies(eq(b, const(True)), Not(eq(b, const(False))))))
    assert satisfies(sigma, Exists(x, eq(app("*", x, x), const(9))))
    assert not satisfies(sigma, ForAll(x, ne(x, const(0))))
    with pytest.raises(UnsupportedQuantifierError):
        satisfies(sigma, ForAll(Var("z", COMPLEX), eq(Var("z", COMPLEX), Var("z", COMPLEX))))


def test_complex_comparisons_use_tolerance():
    sigma = State({}, Structure(tolerance=1e-6))
    assert satisfies(sigma, eq(const(1.0), app("+", const(1.0), const(1e-8))))
    assert not satisfies(sigma, eq(const(1.0), const(1.001)))


def test_unbound_variable_in_formula():
    with pytest.raises(EvaluationError):
        satisfies(State(), And(eq(x, x), eq(x, x)))


def test_substitution_avoids_capture():
    formula = ForAll(y, eq(x, y))
    result = subst_formula(formula, y, x)
    assert isinstance(result, ForAll)
    assert result.var.name == "y'"
    assert free_vars_formula(result) == {"y"}


def test_substitution_stops_at_binder():
    formula = ForAll(x, eq(x, y))
    assert subst_formula(formula, const(3), x) == formula


def test_simultaneous_substitution_swaps():
    result = subst_expr(app("-", x, y), (y, x), (x, y))
    assert result == app("-", y, x)


def test_array_target_becomes_conditional():
    a = ArrayVar("a", (INT,), INT)
    read = ArrayRef(a, (x,))
    result = subst_expr(read, const(9), ArrayRef(a, (const(0),)))
    assert isinstance(result, Cond)
    assert eval_expr(State({"x": 0, "a": {(0,): 1}}), result) == 9
    assert eval_expr(State({"x": 1, "a": {(1,): 4}}), result) == 4


def test_substitution_checks_types():
    with pytest.raises(TypeMismatchError):
        subst_expr(x, const(True), x)
