import subprocess
import sys
from pathlib import Path

import pytest


ROOT = Path(__file__).resolve().parents[1]


@pytest.mark.parametrize("module", [
    "sol_kernel",
    "sol_kernel.logic.rewrite_engine",
    "sol_kernel.cli.main",
    "sol_kernel.nodes",
])
def test_module_imports_in_fresh_interpreter(module):
    result = subprocess.run([sys.executable, "-c", f"import {module}"], cwd=ROOT, capture_output=True, text=True)
    assert result.returncode == 0, result.stderr


def test_builtin_rules_are_keyed_by_name():
    from sol_kernel.logic.rewrite_engine import BUILTIN_RULES

    assert sorted(BUILTIN_RULES) == sorted(rule.name for rule in BUILTIN_RULES.values())
    assert "" not in BUILTIN_RULES
