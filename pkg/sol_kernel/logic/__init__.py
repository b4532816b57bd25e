"""
Symbolic Operator Logic kernel

Classical first-order layer, quantum registers, formal operator terms, their
signing judgement and matrix semantics, the SOL formula language with its
entailment checker, the rewrite engine and the library of worked examples.
"""

from .classical_logic import BOOL, COMPLEX, INT, BasicType, Const, State, Structure, Var, int_type
from .errors import (
    EvaluationError,
    ResourceError,
    ScriptError,
    SigningError,
    SolError,
    TypeMismatchError,
    UnsupportedQuantifierError,
)
from .quantum_registers import QuantumRef, QuantumVarDecl, RegisterString, registers
from .semantics_engine import Context, PredicateKind, QuantumStructure, Valuation, check_signing, eval_operator
from .sol_logic import CheckResult, EntailmentQuery, Verdict, check_entailment, sat_sol
from .rewrite_engine import NormalForm, decide_ground_equality, normalize
from .stdlib_examples import default_quantum_structure, gate
