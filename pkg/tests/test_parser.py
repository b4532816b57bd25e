from pathlib import Path

import pytest

from sol_kernel.cli.parser import (
    Assert,
    DefDecl,
    Entail,
    LetValue,
    OperatorCommand,
    QuantumDecl,
    RangeDecl,
    SuiteCommand,
    VarDecl,
    parse,
    print_op,
    print_script,
    tokenize,
)
from sol_kernel.logic.classical_logic import BOOL, Var
from sol_kernel.logic.errors import ScriptError
from sol_kernel.logic.operator_terms import Product, Scale, Sum
from sol_kernel.logic.quantum_registers import QuantumRef
from sol_kernel.logic.sol_logic import ForAllOperator, OpEq, Pred
from sol_kernel.logic.stdlib_examples import bell


GOLDEN = Path(__file__).parent / "golden"


def read(name):
    return (GOLDEN / name).read_text(encoding="utf-8")


def test_tokens_carry_positions():
    tokens = tokenize("qubit r;\n  |0>_r")
    assert [t.text for t in tokens] == ["qubit", "r", ";", "|", "0", ">_", "r", ""]
    assert (tokens[3].line, tokens[3].column) == (2, 3)
    assert tokens[-1].kind == "eof"


def test_comments_are_skipped():
    script = parse("# header\nqubit r; # trailing\n")
    assert len(script.statements) == 1
    assert isinstance(script.statements[0], QuantumDecl)


def test_declarations_flatten():
    script = parse("qubit qa, qb;\nvar x, y : Bool;\n")
    kinds = [type(s) for s in script.statements]
    assert kinds == [QuantumDecl, QuantumDecl, VarDecl, VarDecl]
    assert [s.line for s in script.statements] == [1, 1, 2, 2]


def test_bell_sugar_expands():
    script = parse(read("bell.sol"))
    command = script.statements[6]
    assert isinstance(command, OperatorCommand)
    assert command.kind == "eval"
    qa, qb = script.statements[0].decl, script.statements[1].decl
    x, y = Var("x", BOOL), Var("y", BOOL)
    assert command.op == bell(x, y, QuantumRef(qa), QuantumRef(qb))


def test_operator_precedence():
    script = parse("qubit r;\nsign 2 . |0>_r + |1>_r * <1|_r * |1>_r;\n")
    op = script.statements[1].op
    assert isinstance(op, Sum)
    assert isinstance(op.left, Scale)
    assert isinstance(op.right, Product)


def test_let_and_range():
    script = parse("var a : Int;\nlet a = -3;\nrange a = -5..5;\n")
    let, rng = script.statements[1], script.statements[2]
    assert isinstance(let, LetValue)
    assert let.value.value == -3
    assert isinstance(rng, RangeDecl)
    assert (rng.lo, rng.hi) == (-5, 5)


def test_quantified_operator_formula():
    script = parse(read("unitary_all.sol"))
    statement = script.statements[-1]
    assert isinstance(statement, Assert)
    assert isinstance(statement.formula, ForAllOperator)
    assert isinstance(statement.formula.body, Pred)


def test_entail_statement():
    script = parse(read("ghz.sol"))
    entail = next(s for s in script.statements if isinstance(s, Entail))
    assert len(entail.theory) == 1
    assert entail.gamma == ()
    assert isinstance(entail.goal, OpEq)


def test_user_definition():
    script = parse(read("recursion.sol"))
    definition = next(s for s in script.statements if isinstance(s, DefDecl))
    assert definition.name == "PLUS"
    assert [p.name for p in definition.params] == ["m", "n"]
    assert len(definition.cases) == 2


def test_suite_options():
    script = parse(read("examples.sol"))
    suites = [s for s in script.statements if isinstance(s, SuiteCommand)]
    assert [s.name for s in suites] == ["bell", "zy", "no-cloning"]
    assert suites[1].options == (("instances", 20),)


def test_syntax_error_location():
    with pytest.raises(ScriptError) as excinfo:
        parse(read("syntax_error.sol"), "syntax_error.sol")
    assert excinfo.value.line == 3
    assert excinfo.value.column == 12
    assert "expected ';'" in str(excinfo.value)


@pytest.mark.parametrize("text, message", [
    ("qubit r;\nsign |0>_s;\n", "'s'"),
    ("qubit r;\nqubit r;\n", "'r'"),
    ("frobnicate;\n", "unknown statement"),
    ("qubit r;\nsign |0>_r\n", "expected ';'"),
])
def test_parse_errors(text, message):
    with pytest.raises(ScriptError) as excinfo:
        parse(text)
    assert message in str(excinfo.value)
    assert excinfo.value.line is not None


def test_unexpected_character():
    with pytest.raises(ScriptError) as excinfo:
        tokenize("qubit r; $")
    assert excinfo.value.column == 10


@pytest.mark.parametrize("name", ["bell.sol", "ghz.sol", "unitary_all.sol", "unitary_definition.sol", "examples.sol"])
def test_printed_script_parses_back(name):
    script = parse(read(name))
    assert parse(print_script(script)) == script


def test_print_op_is_fully_parenthesised():
    script = parse("qubit r;\nsign |0>_r * <0|_r + |1>_r * <1|_r;\n")
    assert print_op(script.statements[1].op) == "((|0>_r * <0|_r) + (|1>_r * <1|_r))"
    assert isinstance(script.statements[1].op.left, Product)
