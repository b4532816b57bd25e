import json
import shlex
from pathlib import Path

import pytest

from sol_kernel.cli.main import main


GOLDEN = Path(__file__).parent / "golden"
SCRIPTS = sorted(GOLDEN.glob("*.sol"))


def headers(path):
    """Expected exit code and extra flags from the ``# exit:`` / ``# flags:`` lines."""
    exit_code, flags = None, []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition(":")
        if key.strip() == "exit":
            exit_code = int(value)
        elif key.strip() == "flags":
            flags = shlex.split(value)
    return exit_code, flags


def run(path, flags, capsys):
    code = main(["run", str(path), "--json", *flags])
    return code, capsys.readouterr().out


@pytest.mark.parametrize("path", SCRIPTS, ids=lambda p: p.stem)
def test_golden_script(path, capsys):
    expected, flags = headers(path)
    assert expected is not None, f"{path.name} has no '# exit:' header"
    code, out = run(path, flags, capsys)
    assert code == expected
    report = json.loads(out)
    assert report["exit_code"] == expected
    again_code, again = run(path, flags, capsys)
    assert again_code == code
    assert again == out


def test_syntax_error_is_reported_with_position(capsys):
    code, out = run(GOLDEN / "syntax_error.sol", [], capsys)
    assert code == 3
    directive = json.loads(out)["directives"][0]
    assert directive["kind"] == "parse"
    assert directive["line"] == 3
    assert "column 12" in directive["detail"]


def test_refuted_script_carries_witness(capsys):
    code, out = run(GOLDEN / "unitary_all.sol", [], capsys)
    assert code == 1
    directive = json.loads(out)["directives"][0]
    assert directive["verdict"] == "Refuted"
    assert "U" in directive["witness"]["eta"]


def test_address_needs_its_range(capsys):
    code, out = run(GOLDEN / "address.sol", ["--int-range", "-20..40"], capsys)
    assert code == 0
    assert json.loads(out)["config"]["int_range"] == [-20, 40]
