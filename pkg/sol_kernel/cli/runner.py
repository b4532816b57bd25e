"""
Directive execution for ``.sol`` scripts

Statements run in order against one classical structure and one quantum
structure built from the settings. Declarations and ``let``/``assume``/
``given`` only change the running environment; ``assert``, ``entail``,
``sign``, ``eval``, ``normalize`` and ``suite`` each add a
:class:`DirectiveResult` to the :class:`Report`.

Exit codes: 0 every directive Valid, 1 some Refuted, 2 some Unknown,
3 an error stopped the script.
"""

import inspect
import json
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..logic.classical_logic import State, Structure, eval_expr
from ..logic.errors import ScriptError, SigningError, SolError
from ..logic.quantum_registers import dim_of_type
from ..logic.reports import SuiteReport
from ..logic.rewrite_engine import normalize, order_laws_suite, rewrite_suite
from ..logic.semantics_engine import Context, Valuation, check_signing, eval_operator, signing_suite
from ..logic.sol_logic import EntailmentQuery, check_entailment, schema_suite, substitution_suite
from ..logic.stdlib_examples import (
    bell_suite,
    default_quantum_structure,
    examples_suite,
    no_cloning_suite,
    recursion_suite,
    teleport_mutation_suite,
    teleport_verify,
    zy_suite,
)
from ..utils.config import Settings
from ..utils.converters import matrix_to_json
from ..utils.log import log_debug, log_error, log_info, log_success, log_warning
from .parser import (
    ArrayDecl,
    Assert,
    Assume,
    ConstDecl,
    DefDecl,
    Entail,
    Given,
    LetCell,
    LetOperator,
    LetValue,
    OperatorCommand,
    OpVarDecl,
    QuantumDecl,
    RangeDecl,
    Script,
    Statement,
    SuiteCommand,
    VarDecl,
    describe,
    parse,
)


VALID = "Valid"
REFUTED = "Refuted"
UNKNOWN = "Unknown"
ERROR = "Error"

EXIT_CODES = {VALID: 0, REFUTED: 1, UNKNOWN: 2, ERROR: 3}


SUITES: Dict[str, Tuple[Callable[..., SuiteReport], str]] = {
    "substitution": (substitution_suite, "substitution lemmas on random expressions, formulas and terms"),
    "signing": (signing_suite, "well-signed terms evaluate; ill-signed terms fail the right rule"),
    "schema": (schema_suite, "axiom schemas and deduction-theorem metamorphic checks"),
    "rewrite": (rewrite_suite, "normal forms against the matrix semantics and the named rules"),
    "order-laws": (order_laws_suite, "Loewner order laws on random PSD-ordered pairs"),
    "bell": (bell_suite, "the four Bell states against their vectors"),
    "recursion": (recursion_suite, "S, GHZ, BASIS and QFTSTATE unrolling"),
    "teleport": (teleport_verify, "teleportation branches for every Bell parameter and input"),
    "teleport-mutations": (teleport_mutation_suite, "dropping any correction breaks teleportation"),
    "zy": (zy_suite, "Z-Y decomposition and Bloch sphere witnesses"),
    "no-cloning": (no_cloning_suite, "cloning witnesses refute every sampled unitary"),
    "examples": (examples_suite, "address arithmetic, parameterised state and projection examples"),
}


def run_suite(name: str, settings: Optional[Settings] = None, **options: int) -> SuiteReport:
    """
    Run a built-in suite by name

    ``tolerance`` comes from the settings; ``seed`` and ``samples`` too
    unless given as options. Other options must be parameters of the suite.

    Raises:
        ScriptError: unknown suite or option
    """
    settings = settings or Settings()
    if name not in SUITES:
        raise ScriptError(f"unknown suite '{name}', expected one of {', '.join(SUITES)}")
    fn = SUITES[name][0]
    params = inspect.signature(fn).parameters
    kwargs: Dict[str, Any] = {}
    for key, value in options.items():
        if key not in params or key == "tolerance":
            raise ScriptError(f"suite '{name}' has no option '{key}'")
        kwargs[key] = value
    if "tolerance" in params:
        kwargs["tolerance"] = settings.tolerance
    if "seed" in params:
        kwargs.setdefault("seed", settings.seed)
    if "samples" in params:
        kwargs.setdefault("samples", settings.samples)
    log_debug(f"suite {name} with {kwargs}")
    return fn(**kwargs)


@dataclass
class DirectiveResult:
    kind: str
    verdict: str
    text: str = ""
    line: int = 0
    detail: str = ""
    data: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self, timing: bool = False) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind, "line": self.line, "text": self.text, "verdict": self.verdict}
        if self.detail:
            out["detail"] = self.detail
        out.update(self.data)
        if timing:
            out["seconds"] = round(self.seconds, 6)
        return out


@dataclass
class Report:
    source: str
    settings: Settings
    directives: List[DirectiveResult] = field(default_factory=list)
    timing: Optional[float] = None

    @property
    def verdict(self) -> str:
        verdicts = {d.verdict for d in self.directives}
        for verdict in (ERROR, REFUTED, UNKNOWN):
            if verdict in verdicts:
                return verdict
        return VALID

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def config(self) -> Dict[str, Any]:
        data = self.settings.to_dict()
        data.pop("debug_mode", None)
        return data

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "source": self.source,
            "config": self.config(),
            "directives": [d.to_json(self.timing is not None) for d in self.directives],
            "verdict": self.verdict,
            "exit_code": self.exit_code,
        }
        if self.timing is not None:
            out["timing"] = round(self.timing, 6)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def render(self) -> str:
        """Human-readable report."""
        lines = [f"{self.source}:"]
        for d in self.directives:
            text = d.text if len(d.text) <= 72 else d.text[:69] + "..."
            lines.append(f"  line {d.line:<4} {d.kind:<9} {d.verdict:<8} {text}")
            if d.detail:
                lines.append(f"      {d.detail}")
            for entry in d.data.get("lines", ()):
                lines.append(f"      {entry}")
            if "matrix" in d.data:
                for row in d.data["matrix"]:
                    lines.append("      " + "  ".join(f"{re:+.6f}{im:+.6f}i" for re, im in row))
        summary = f"{self.verdict} (exit {self.exit_code})"
        if self.timing is not None:
            summary += f" in {self.timing:.3f}s"
        lines.append(summary)
        return "\n".join(lines)


class ScriptRunner:
    """Executes the statements of one script against a running environment."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.base = Structure.from_settings(self.settings)
        self.structure = default_quantum_structure(self.base, self.settings.max_dim)
        self.values: Dict[str, Any] = {}
        self.eta: Dict[str, np.ndarray] = {}
        self.theory: List[Any] = []
        self.gamma: List[Any] = []
        self.ranges: Dict[str, Tuple[int, int]] = {}
        self._handlers: Dict[type, Callable[[Any], Optional[DirectiveResult]]] = {
            VarDecl: self._declare,
            ArrayDecl: self._declare,
            OpVarDecl: self._declare,
            DefDecl: self._declare,
            QuantumDecl: self._quantum_decl,
            ConstDecl: self._const_decl,
            LetValue: self._let_value,
            LetCell: self._let_cell,
            LetOperator: self._let_operator,
            RangeDecl: self._range,
            Assume: self._assume,
            Given: self._given,
            Assert: self._assert,
            Entail: self._entail,
            OperatorCommand: self._operator_command,
            SuiteCommand: self._suite,
        }

    @property
    def sigma(self) -> State:
        return State(dict(self.values), self.base)

    def context(self) -> Context:
        return Context(self.sigma, Valuation(dict(self.eta)), self.structure)

    def run(self, script: Script, timing: bool = False) -> Report:
        report = Report(script.source, self.settings)
        started = time.perf_counter()
        for statement in script.statements:
            tick = time.perf_counter()
            try:
                result = self._handlers[type(statement)](statement)
            except (SolError, ValueError) as e:
                log_error(f"line {statement.line}: {e}")
                report.directives.append(
                    DirectiveResult(_kind(statement), ERROR, _text(statement), statement.line, str(e))
                )
                break
            if result is None:
                continue
            result.text = result.text or _text(statement)
            result.line = statement.line
            result.seconds = time.perf_counter() - tick
            report.directives.append(result)
            log_debug(f"line {statement.line}: {result.kind} {result.verdict}")
        if timing:
            report.timing = time.perf_counter() - started
        return report

    # -- environment ---------------------------------------------------------

    def _declare(self, statement: Statement) -> None:
        log_debug(f"declared: {_text(statement)}")

    def _quantum_decl(self, statement: QuantumDecl) -> None:
        decl = statement.decl
        if decl.int_valued:
            lo, hi = decl.value_type.lo, decl.value_type.hi
            log_warning(f"quantum variable '{decl.name}' approximates H_Int by the values {lo}..{hi}")

    def _matrix(self, entries, rows: int, cols: int, name: str) -> np.ndarray:
        sigma = self.sigma
        data = np.array([[complex(eval_expr(sigma, e)) for e in row] for row in entries], dtype=complex)
        if data.shape != (rows, cols):
            raise ScriptError(f"'{name}' needs a {rows}x{cols} matrix, got {data.shape[0]}x{data.shape[1]}")
        return data

    def _const_decl(self, statement: ConstDecl) -> None:
        decl = statement.decl
        rows = int(np.prod([dim_of_type(t) for t in decl.dom_types]))
        cols = int(np.prod([dim_of_type(t) for t in decl.cod_types]))
        matrix = self._matrix(statement.entries, rows, cols, decl.name)
        self.structure.register(decl.name, lambda params, r, c, m=matrix: m)

    def _let_value(self, statement: LetValue) -> None:
        var = statement.var
        value = eval_expr(self.sigma, statement.value)
        if var.type.bounded and value not in var.type.domain():
            raise ScriptError(f"value {value} of '{var.name}' lies outside {var.type}")
        self.values[var.name] = value

    def _let_cell(self, statement: LetCell) -> None:
        sigma = self.sigma
        key = tuple(eval_expr(sigma, i) for i in statement.indices)
        table = dict(self.values.get(statement.array.name, {}))
        table[key] = eval_expr(sigma, statement.value)
        self.values[statement.array.name] = table

    def _let_operator(self, statement: LetOperator) -> None:
        decl = statement.decl
        rows = int(np.prod([dim_of_type(t) for t in decl.dom_types]))
        cols = int(np.prod([dim_of_type(t) for t in decl.cod_types]))
        self.eta[decl.name] = self._matrix(statement.entries, rows, cols, decl.name)

    def _range(self, statement: RangeDecl) -> None:
        self.ranges[statement.name] = (statement.lo, statement.hi)

    def _assume(self, statement: Assume) -> None:
        self.theory.append(statement.formula)

    def _given(self, statement: Given) -> None:
        self.gamma.append(statement.formula)

    # -- directives ----------------------------------------------------------

    def _query(self, theory, gamma, goal) -> DirectiveResult:
        query = EntailmentQuery.from_settings(
            self.settings,
            sigma_theory=tuple(theory),
            gamma=tuple(gamma),
            goal=goal,
            int_ranges=dict(self.ranges),
            fixed=dict(self.values),
            fixed_operators=dict(self.eta),
        )
        result = check_entailment(query, self.structure)
        data = result.to_json()
        data.pop("verdict")
        data.pop("reason", None)
        return DirectiveResult("", result.verdict.value, detail=result.reason, data=data)

    def _assert(self, statement: Assert) -> DirectiveResult:
        result = self._query(self.theory, self.gamma, statement.formula)
        result.kind = "assert"
        return result

    def _entail(self, statement: Entail) -> DirectiveResult:
        result = self._query(statement.theory, statement.gamma, statement.goal)
        result.kind = "entail"
        return result

    def _operator_command(self, statement: OperatorCommand) -> DirectiveResult:
        notes: List[str] = []
        if statement.kind == "sign":
            try:
                signature = check_signing(self.sigma, statement.op, notes, self.structure)
            except SigningError as e:
                refs = [getattr(r, "label", str(r)) for r in e.refs]
                return DirectiveResult("sign", REFUTED, detail=e.detail, data={"rule": e.rule, "refs": refs})
            return DirectiveResult("sign", VALID, data={"signature": str(signature)})
        if statement.kind == "eval":
            matrix = eval_operator(self.context(), statement.op, notes)
            return DirectiveResult("eval", VALID, data={"signature": str(matrix.signature),
                                                        "matrix": matrix_to_json(matrix.data)})
        nf = normalize(self.sigma, Valuation(dict(self.eta)), statement.op, self.structure, notes)
        return DirectiveResult("normalize", VALID, data={"normal_form": nf.to_json(), "lines": nf.lines()})

    def _suite(self, statement: SuiteCommand) -> DirectiveResult:
        report = run_suite(statement.name, self.settings, **dict(statement.options))
        total = len(report.outcomes)
        failed = len(report.failures)
        detail = f"{total - failed}/{total} checks passed"
        return DirectiveResult("suite", VALID if report.passed else REFUTED, detail=detail, data=report.to_json())


def _kind(statement: Statement) -> str:
    if isinstance(statement, OperatorCommand):
        return statement.kind
    return type(statement).__name__.lower()


def _text(statement: Statement) -> str:
    try:
        return describe(statement)
    except SolError:
        return type(statement).__name__


def run_text(text: str, settings: Optional[Settings] = None, source: str = "<script>",
             timing: bool = False) -> Report:
    """Parse and run script text; parse errors become a single Error directive."""
    settings = settings or Settings()
    try:
        script = parse(text, source)
    except ScriptError as e:
        log_error(str(e))
        report = Report(source, settings)
        report.directives.append(DirectiveResult("parse", ERROR, "", e.line or 0, str(e)))
        return report
    log_info(f"Running {source}: {len(script.statements)} statements")
    report = ScriptRunner(settings).run(script, timing)
    if report.exit_code == 0:
        log_success(f"{source}: every directive is Valid")
    else:
        log_warning(f"{source}: {report.verdict} (exit {report.exit_code})")
    return report


def run_script(path: str, settings: Optional[Settings] = None, timing: bool = False) -> Report:
    """Run a ``.sol`` file; an unreadable file is reported as an Error."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        log_error(f"Cannot read {path}: {e}")
        report = Report(path, settings or Settings())
        report.directives.append(DirectiveResult("read", ERROR, "", 0, str(e)))
        return report
    return run_text(text, settings, path, timing)
