import json

from sol_kernel.nodes import NODE_CLASS_MAPPINGS, NODE_DISPLAY_NAME_MAPPINGS
from sol_kernel.nodes.sol_nodes import SolAdvancedParamsNode, SolScriptNode, SolSuiteNode, _settings


def test_mappings_are_consistent():
    assert set(NODE_CLASS_MAPPINGS) == set(NODE_DISPLAY_NAME_MAPPINGS)
    for node in NODE_CLASS_MAPPINGS.values():
        assert hasattr(node, getattr(node, "FUNCTION"))
        assert len(node.RETURN_TYPES) == len(node.RETURN_NAMES)
        assert "required" in node.INPUT_TYPES()


def test_script_node_runs_default_script():
    inputs = SolScriptNode.INPUT_TYPES()["required"]
    defaults = {name: entry[1]["default"] for name, entry in inputs.items()}
    report, report_json, exit_code = SolScriptNode().run_script(**defaults)
    assert exit_code == 0
    assert json.loads(report_json)["verdict"] == "Valid"
    assert report.startswith("<node>:")


def test_script_node_reports_refutation():
    script = "qubit r;\nassert forallOp U : Bool -> Bool . unitary(U[r]) : r;\n"
    _, report_json, exit_code = SolScriptNode().run_script(script, "-4..4", 1e-9, 5, 0)
    assert exit_code == 1
    assert json.loads(report_json)["directives"][0]["verdict"] == "Refuted"


def test_script_node_bad_range():
    report, report_json, exit_code = SolScriptNode().run_script("qubit r;", "4..-4", 1e-9, 5, 0)
    assert exit_code == 3
    assert "error" in json.loads(report_json)


def test_suite_node():
    summary, report_json, passed = SolSuiteNode().run_suite("bell", 1e-9, 0, 0)
    assert passed
    assert summary == "bell: 5/5 checks passed"
    assert json.loads(report_json)["passed"]


def test_suite_node_rejects_instances_for_fixed_suite():
    summary, _, passed = SolSuiteNode().run_suite("bell", 1e-9, 0, 10)
    assert not passed
    assert "no option" in summary


def test_advanced_params_defaults_are_empty():
    inputs = SolAdvancedParamsNode.INPUT_TYPES()["required"]
    defaults = {name: entry[1]["default"] for name, entry in inputs.items()}
    assert SolAdvancedParamsNode().generate_params(**defaults) == ("{}",)


def test_advanced_params_flow_into_settings():
    (params,) = SolAdvancedParamsNode().generate_params(64, 1000, 2, "sampling", "true")
    settings = _settings("-2..2", 1e-6, 3, 1, params)
    assert settings.int_range == (-2, 2)
    assert settings.max_dim == 64
    assert settings.max_states == 1000
    assert settings.workers == 2
    assert settings.mode == "sampling"
    assert settings.debug_mode


def test_advanced_params_bad_json_is_ignored():
    settings = _settings("", 1e-9, 20, 0, "{not json")
    assert settings.max_dim == 4096
