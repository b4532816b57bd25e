"""ComfyUI nodes for running SOL scripts and suites"""

import json
from dataclasses import fields


def _settings(int_range, tolerance, samples, seed, advanced_params_json=""):
    """Settings from node inputs; advanced params override the defaults they name."""

    from ..utils.config import Settings, parse_int_range
    from ..utils.log import log_warning

    overrides = {
        "int_range": parse_int_range(int_range) if int_range else None,
        "tolerance": tolerance,
        "samples": samples,
        "seed": seed,
    }
    if advanced_params_json:
        try:
            advanced = json.loads(advanced_params_json)
        except json.JSONDecodeError as e:
            log_warning(f"Failed to parse advanced_params_json: {e}")
            advanced = {}
        known = {f.name for f in fields(Settings)}
        for key, value in advanced.items():
            if key in known:
                overrides.setdefault(key, value)
            else:
                log_warning(f"Ignoring unknown advanced parameter '{key}'")
    return Settings().with_overrides(**overrides)


class SolScriptNode:
    """
    Run a .sol script and report every directive

    exit_code follows the CLI: 0 Valid, 1 Refuted, 2 Unknown, 3 error.
    """

    @classmethod
    def INPUT_TYPES(cls):
        return {
            "required": {
                "script": ("STRING", {
                    "default": "qubit q;\neval H[q] * |0>_q;\n",
                    "multiline": True,
                }),
                "int_range": ("STRING", {
                    "default": "-64..64",
                    "multiline": False,
                }),
                "tolerance": ("FLOAT", {
                    "default": 1e-9,
                    "min": 1e-15,
                    "max": 1e-2,
                    "step": 1e-10,
                }),
                "samples": ("INT", {
                    "default": 20,
                    "min": 1,
                    "max": 1000,
                }),
                "seed": ("INT", {
                    "default": 0,
                    "min": 0,
                    "max": 2147483647,
                }),
            },
            "optional": {
                "advanced_params_json": ("STRING", {
                    "default": "",
                    "multiline": False,
                }),
            },
        }

    RETURN_TYPES = ("STRING", "STRING", "INT")
    RETURN_NAMES = ("report", "report_json", "exit_code")
    FUNCTION = "run_script"
    CATEGORY = "sol_kernel"

    def run_script(self, script, int_range, tolerance, samples, seed, advanced_params_json=""):
        """Execute the script"""

        from ..cli.runner import run_text
        from ..utils.log import log_error

        try:
            settings = _settings(int_range, tolerance, samples, seed, advanced_params_json)
            report = run_text(script, settings, "<node>")
            return (report.render(), report.dumps(), report.exit_code)

        except (ValueError, TypeError) as e:
            error_msg = f"Script run failed: {str(e)}"
            log_error(error_msg)
            return (error_msg, json.dumps({"error": str(e)}), 3)


class SolSuiteNode:
    """Run one of the built-in property suites"""

    @classmethod
    def INPUT_TYPES(cls):
        from ..cli.runner import SUITES

        return {
            "required": {
                "suite": (sorted(SUITES), {
                    "default": "teleport",
                }),
                "tolerance": ("FLOAT", {
                    "default": 1e-9,
                    "min": 1e-15,
                    "max": 1e-2,
                    "step": 1e-10,
                }),
                "seed": ("INT", {
                    "default": 0,
                    "min": 0,
                    "max": 2147483647,
                }),
                "instances": ("INT", {
                    "default": 0,
                    "min": 0,
                    "max": 100000,
                }),
            },
        }

    RETURN_TYPES = ("STRING", "STRING", "BOOLEAN")
    RETURN_NAMES = ("summary", "report_json", "passed")
    FUNCTION = "run_suite"
    CATEGORY = "sol_kernel"

    def run_suite(self, suite, tolerance, seed, instances):
        """Run the suite; instances=0 keeps the suite's own count"""

        from ..cli.runner import run_suite
        from ..logic.errors import SolError
        from ..utils.log import log_error, log_info

        try:
            settings = _settings("", tolerance, None, seed)
            options = {"instances": instances} if instances > 0 else {}
            report = run_suite(suite, settings, **options)
            failed = len(report.failures)
            summary = f"{suite}: {len(report.outcomes) - failed}/{len(report.outcomes)} checks passed"
            log_info(summary)
            return (summary, json.dumps(report.to_json(), indent=2), report.passed)

        except (SolError, ValueError) as e:
            error_msg = f"Suite failed to run: {str(e)}"
            log_error(error_msg)
            return (error_msg, json.dumps({"error": str(e)}), False)


class SolAdvancedParamsNode:
    """
    Advanced settings for the script node
    """

    @classmethod
    def INPUT_TYPES(cls):
        return {
            "required": {
                "max_dim": ("INT", {
                    "default": 4096,
                    "min": 1,
                    "max": 1 << 20,
                }),
                "max_states": ("INT", {
                    "default": 2000000,
                    "min": 1,
                    "max": 1 << 31,
                }),
                "workers": ("INT", {
                    "default": 1,
                    "min": 1,
                    "max": 64,
                }),
                "mode": (["exact-where-possible", "sampling"], {
                    "default": "exact-where-possible",
                }),
                "debug_mode": (["false", "true"], {
                    "default": "false",
                }),
            },
        }

    RETURN_TYPES = ("STRING",)
    RETURN_NAMES = ("params_json",)
    FUNCTION = "generate_params"
    CATEGORY = "sol_kernel"

    def generate_params(self, max_dim, max_states, workers, mode, debug_mode):
        """JSON of the settings that differ from their defaults"""

        params = {}
        if max_dim != 4096:
            params["max_dim"] = max_dim

        if max_states != 2000000:
            params["max_states"] = max_states

        if workers > 1:
            params["workers"] = workers

        if mode != "exact-where-possible":
            params["mode"] = mode

        if debug_mode == "true":
            params["debug_mode"] = True

        return (json.dumps(params),)


NODE_CLASS_MAPPINGS = {
    "SolScript_SOLKernel": SolScriptNode,
    "SolSuite_SOLKernel": SolSuiteNode,
    "SolAdvancedParams_SOLKernel": SolAdvancedParamsNode,
}

NODE_DISPLAY_NAME_MAPPINGS = {
    "SolScript_SOLKernel": "Run SOL Script",
    "SolSuite_SOLKernel": "Run SOL Suite",
    "SolAdvancedParams_SOLKernel": "SOL Advanced Params",
}
