import json

import numpy as np
import pytest

from sol_kernel.cli.main import main
from sol_kernel.cli.runner import ERROR, REFUTED, UNKNOWN, VALID, SUITES, run_script, run_suite, run_text
from sol_kernel.logic.errors import ScriptError
from sol_kernel.logic.stdlib_examples import HADAMARD
from sol_kernel.utils.config import Settings
from sol_kernel.utils.converters import json_to_matrix


SMALL = Settings(int_range=(-4, 4), samples=6)


def test_declarations_produce_no_directives():
    report = run_text("qubit r;\nvar x : Int;\nlet x = 2;\n", SMALL)
    assert report.directives == []
    assert report.verdict == VALID
    assert report.exit_code == 0


def test_assert_uses_let_values():
    report = run_text("var x : Int;\nlet x = 2;\nassert {x * x == 4};\n", SMALL)
    assert [d.verdict for d in report.directives] == [VALID]
    assert report.directives[0].line == 3
    assert report.directives[0].data["stats"]["states_satisfying"] == 1


def test_assume_restricts_free_variables():
    text = "var x : Int;\nassume x > 2;\nassert {x >= 3};\nassert {x >= 4};\n"
    report = run_text(text, SMALL)
    assert [d.verdict for d in report.directives] == [VALID, REFUTED]
    assert report.directives[1].data["witness"]["sigma"] == {"x": 3}
    assert report.exit_code == 1


def test_range_overrides_the_default():
    report = run_text("var x : Int;\nrange x = 0..2;\nassert {x < 3};\n", SMALL)
    assert report.verdict == VALID


def test_entail_is_self_contained():
    text = "var x : Int;\nassume x == 0;\nentail [] |- [] => {x == 0};\n"
    report = run_text(text, SMALL)
    assert report.directives[0].kind == "entail"
    assert report.directives[0].verdict == REFUTED


def test_sampled_definition_is_unknown():
    text = "qubit r;\nopvar U : Bool -> Bool;\nassert unitary(U[r]) : r -> (U[r]^+ * U[r] == I[r]);\n"
    report = run_text(text, SMALL)
    assert report.verdict == UNKNOWN
    assert report.exit_code == 2


def test_let_operator_fixes_the_valuation():
    text = "qubit r;\nopvar U : Bool -> Bool;\nlet U = [[0, 1], [1, 0]];\nassert U[r] == X[r];\n"
    report = run_text(text, SMALL)
    assert report.verdict == VALID


def test_operator_commands():
    text = "qubit r, s;\nsign |0>_r * <1|_s;\neval H[r] * |0>_r;\nnormalize |0>_r * <0|_r + |1>_r * <1|_r;\n"
    report = run_text(text, SMALL)
    sign, ev, nf = report.directives
    assert sign.data["signature"] == "r -> s"
    assert np.allclose(json_to_matrix(ev.data["matrix"]), HADAMARD[:, :1])
    assert nf.data["lines"] == ["1 |0>_r <0|_r", "1 |1>_r <1|_r"]


def test_ill_signed_term_is_refuted():
    report = run_text("qubit r, s;\nsign |0>_r + |0>_s;\n", SMALL)
    directive = report.directives[0]
    assert directive.verdict == REFUTED
    assert directive.data["rule"] == "Sign-Add"
    assert sorted(directive.data["refs"]) == ["r", "s"]


def test_user_constant():
    text = "qubit r;\nconst NOTGATE : Bool -> Bool = [[0, 1], [1, 0]];\nassert NOTGATE[r] == X[r];\n"
    assert run_text(text, SMALL).verdict == VALID


def test_first_error_stops_the_script():
    text = "qubit r, s;\neval CNOT[r, r];\nassert {true};\n"
    report = run_text(text, SMALL)
    assert [d.verdict for d in report.directives] == [ERROR]
    assert report.exit_code == 3


def test_parse_error_is_a_single_directive():
    report = run_text("qubit r;\neval |0>_r <1|_r;\n", SMALL, source="bad.sol")
    assert len(report.directives) == 1
    assert report.directives[0].kind == "parse"
    assert report.directives[0].line == 2
    assert report.source == "bad.sol"


def test_missing_file(tmp_path):
    report = run_script(str(tmp_path / "missing.sol"), SMALL)
    assert report.exit_code == 3
    assert report.directives[0].kind == "read"


def test_report_json_shape():
    report = run_text("suite bell;\n", SMALL, timing=True)
    data = json.loads(report.dumps())
    assert set(data) == {"source", "config", "directives", "verdict", "exit_code", "timing"}
    assert "debug_mode" not in data["config"]
    assert data["directives"][0]["detail"] == "5/5 checks passed"
    assert "seconds" in data["directives"][0]
    plain = run_text("suite bell;\n", SMALL).to_json()
    assert "timing" not in plain
    assert "seconds" not in plain["directives"][0]


def test_render_lists_directives():
    text = run_text("qubit r;\nsign X[r];\n", SMALL, source="x.sol").render()
    assert text.splitlines()[0] == "x.sol:"
    assert text.splitlines()[-1] == "Valid (exit 0)"


def test_run_suite_options():
    report = run_suite("zy", SMALL, instances=3)
    assert report.passed
    with pytest.raises(ScriptError):
        run_suite("zy", SMALL, tolerance=1)
    with pytest.raises(ScriptError):
        run_suite("zy", SMALL, rounds=3)
    with pytest.raises(ScriptError):
        run_suite("nope", SMALL)


def test_every_suite_is_listed(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    for name in SUITES:
        assert name in out


def test_suite_command(capsys):
    code = main(["suite", "zy", "--option", "instances=3", "--json"])
    data = json.loads(capsys.readouterr().out)
    assert code == 0
    assert data["directives"][0]["text"] == "suite zy instances = 3;"


def test_suite_command_rejects_bad_option(capsys):
    assert main(["suite", "zy", "--option", "instances"]) == 3
    assert main(["suite", "zy", "--option", "rounds=2"]) == 3


def test_print_command(tmp_path, capsys):
    path = tmp_path / "s.sol"
    path.write_text("qubit r;\nsign X[r] * |0>_r;\n", encoding="utf-8")
    assert main(["print", str(path)]) == 0
    assert capsys.readouterr().out == "qvar r : Bool;\nsign (X[r -> r] * |0>_r);\n"


def test_negated_norm_assertion():
    report = run_text("qubit a;\nassert !(norm(H[a]) = 1);\nassert norm(H[a]) = 1;\n", SMALL)
    assert [d.verdict for d in report.directives] == [VALID, REFUTED]


def test_eval_matrix_survives_json_report():
    report = run_text("qubit r, s;\neval CNOT[r, s] * (H[r] >< I[s]);\n", SMALL)
    data = json.loads(report.dumps())
    matrix = json_to_matrix(data["directives"][0]["matrix"])
    expected = np.array([[1, 0, 1, 0], [0, 1, 0, 1], [0, 1, 0, -1], [1, 0, -1, 0]]) / np.sqrt(2)
    assert np.allclose(matrix, expected)


@pytest.mark.parametrize("flags", [["--max-dim", "0"], ["--max-states", "-1"]])
def test_run_rejects_non_positive_limits(tmp_path, capsys, flags):
    path = tmp_path / "s.sol"
    path.write_text("qubit r;\n", encoding="utf-8")
    assert main(["run", str(path), *flags]) == 3
    assert "must be at least 1" in capsys.readouterr().err


def test_half_integer_labels_in_script():
    text = (
        "qreg q : Int -> Bool;\nvar theta, x : C;\nvar n : Int;\n"
        "let theta = pi / 2;\nlet x = 0.5;\nlet n = 3;\n"
        "eval cos(theta / 2) . |x - 0.5>_q[3 * n - 2] + sin(theta / 2) . |x + 0.5>_q[3 * n - 2];\n"
    )
    (directive,) = run_text(text, SMALL).directives
    assert directive.verdict == VALID
    assert directive.data["signature"] == "q[7] -> eps"
    assert np.allclose(json_to_matrix(directive.data["matrix"])[:, 0], [1 / np.sqrt(2)] * 2)
