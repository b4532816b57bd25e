"""
Concrete syntax for ``.sol`` scripts: lexer, recursive-descent parser, printer

A script is a sequence of ``;``-terminated statements, declarations before
use::

    qubit qa, qb;
    var x, y : Bool;
    qreg q : Int -> Bool;
    opvar U : Bool -> Bool;
    assume 2 * k == 3 * m - 4;
    assert forallOp U : Bool -> Bool . unitary(U[r]) : r -> (U[r]^+ * U[r] == I[r]);
    eval bell(x, y)[qa, qb];
    suite teleport;

Operator terms: ``|e>_q``, ``<e|_q``, ``A^+``, ``A * B`` (product),
``A >< B`` (tensor), ``e . A`` (scale), ``~A`` (``I - A``), ``A + B``,
``A - B``, ``X[q -> r]`` / ``X[q]``, ``Rz(t)[q]``, ``GHZ(m, n)[p]``.
The printer writes every compound form fully parenthesised, so
``parse(print_script(s))`` rebuilds ``s``.
"""

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ..logic.classical_logic import (
    BOOL,
    BUILTINS,
    COMPLEX,
    FALSE,
    INT,
    TRUE,
    And,
    App,
    ArrayRef,
    ArrayVar,
    Atom,
    BasicType,
    Cond,
    Const,
    Exists,
    Expr,
    ForAll,
    Formula,
    Implies,
    Not,
    Or,
    State,
    Var,
    app,
    collect_expr_vars,
    collect_formula_vars,
    eval_expr,
    int_type,
)
from ..logic.errors import ScriptError, SolError
from ..logic.operator_terms import (
    Adjoint,
    Bra,
    FormalOp,
    Instance,
    Ket,
    OpConst,
    OperatorConstDecl,
    OperatorVarDecl,
    OpVar,
    Product,
    Scalar,
    Scale,
    Sum,
    Tensor,
    classical_vars,
    negate,
)
from ..logic.quantum_registers import EPSILON, QuantumRef, QuantumVarDecl, RegisterString
from ..logic.semantics_engine import PredicateKind
from ..logic.sol_logic import (
    SOL_TRUE,
    ClassicalAtom,
    ForAllClassical,
    ForAllOperator,
    NormCmp,
    OpEq,
    OpLeq,
    Pred,
    SolAnd,
    SolFormula,
    SolNot,
    TraceCmp,
    exists_classical,
    exists_operator,
    sol_iff,
    sol_implies,
    sol_or,
)
from ..logic.stdlib_examples import RECURSIVE_DEFS, RecursiveDef, bell, builtin_gates


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<skip>\s+|#[^\n]*)"
    r"|(?P<number>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?i?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym><->|\.\.|>_|\|_|><|\^\+|==|!=|<=|>=|\|-(?=[\s\[])|=>|->|[-+*/^.,;:()\[\]{}<>|=!~&])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ScriptError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        chunk = match.group()
        if kind != "skip":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Script AST
# ---------------------------------------------------------------------------

Matrix = Tuple[Tuple[Expr, ...], ...]


class Statement:
    line: int


@dataclass(frozen=True)
class VarDecl(Statement):
    var: Var
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ArrayDecl(Statement):
    array: ArrayVar
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class QuantumDecl(Statement):
    decl: QuantumVarDecl
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ConstDecl(Statement):
    decl: OperatorConstDecl
    entries: Matrix
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class OpVarDecl(Statement):
    decl: OperatorVarDecl
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LetValue(Statement):
    var: Var
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LetCell(Statement):
    array: ArrayVar
    indices: Tuple[Expr, ...]
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LetOperator(Statement):
    decl: OperatorVarDecl
    entries: Matrix
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RangeDecl(Statement):
    name: str
    lo: int
    hi: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DefDecl(Statement):
    name: str
    params: Tuple[Var, ...]
    arrays: Tuple[QuantumVarDecl, ...]
    cases: Tuple[Tuple[Formula, FormalOp], ...]
    measure: Expr
    definition: Any = field(default=None, compare=False, repr=False)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assume(Statement):
    formula: Formula
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Given(Statement):
    formula: SolFormula
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assert(Statement):
    formula: SolFormula
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Entail(Statement):
    theory: Tuple[Formula, ...]
    gamma: Tuple[SolFormula, ...]
    goal: SolFormula
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class OperatorCommand(Statement):
    """``sign``, ``eval`` or ``normalize`` applied to one term."""

    kind: str
    op: FormalOp
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SuiteCommand(Statement):
    name: str
    options: Tuple[Tuple[str, int], ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Script:
    statements: Tuple[Statement, ...]
    source: str = field(default="<script>", compare=False)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

KEYWORDS = frozenset(
    "var array qubit qvar qreg const opvar let range def over case measure assume given assert entail "
    "sign eval normalize suite forall exists forallOp existsOp pure mixed unitary obs effect norm tr "
    "true false pi if then else complex scalar bell eps or div mod".split()
)
PREDICATES = {kind.value: kind for kind in PredicateKind}
_RELATIONS = {"==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}
_OP_CONTINUATIONS = frozenset({"==", "<=", "*", "+", "-", "><", "^+"})
_EXPR_CONTINUATIONS = frozenset({"==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "^"})


class Parser:
    """Recursive-descent parser over a token list, with a symbol table for name resolution."""

    def __init__(self, text: str, source: str = "<script>"):
        self.tokens = tokenize(text)
        self.pos = 0
        self.source = source
        self.symbols: Dict[str, Any] = dict(builtin_gates())
        self.symbols.update(RECURSIVE_DEFS)
        self.scopes: List[Dict[str, Any]] = []

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: Optional[Token] = None) -> ScriptError:
        token = token or self.tok
        return ScriptError(message, token.line, token.column)

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("sym", "name") and self.tok.text in texts

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        token = self.tok
        self.pos += 1
        return token

    def name(self) -> str:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found '{self.tok.text or 'end of input'}'")
        text = self.tok.text
        self.pos += 1
        return text

    def new_name(self) -> str:
        token = self.tok
        text = self.name()
        if text in KEYWORDS:
            raise self.error(f"'{text}' is a reserved word", token)
        if text in self.symbols:
            raise self.error(f"'{text}' is already declared", token)
        return text

    def attempt(self, parse: Callable[[], Any]) -> Tuple[bool, Any]:
        start = self.pos
        try:
            return True, parse()
        except (ScriptError, SolError):
            self.pos = start
            return False, None

    def lookup(self, name: str) -> Any:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return self.symbols.get(name)

    # -- script ------------------------------------------------------------

    def script(self) -> Script:
        statements = []
        while self.tok.kind != "eof":
            statements.append(self.statement())
        return Script(tuple(statements), self.source)

    def statement(self) -> Statement:
        token = self.tok
        if token.kind != "name":
            raise self.error(f"expected a statement, found '{token.text}'")
        handler = getattr(self, f"_stmt_{token.text}", None)
        if handler is None:
            raise self.error(f"unknown statement '{token.text}'")
        self.pos += 1
        try:
            result = handler(token.line)
        except SolError as e:
            if isinstance(e, ScriptError) and e.line is not None:
                raise
            raise self.error(e.detail, token) from e
        self.expect(";")
        return result

    def _names(self) -> List[str]:
        names = [self.new_name()]
        while self.accept(","):
            names.append(self.new_name())
        return names

    def _stmt_var(self, line: int) -> Statement:
        names = self._names()
        self.expect(":")
        basic = self.basic_type()
        decls = [VarDecl(Var(n, basic), line) for n in names]
        for d in decls:
            self.symbols[d.var.name] = d.var
        return decls[0] if len(decls) == 1 else _Many(tuple(decls), line)

    def _stmt_array(self, line: int) -> Statement:
        name = self.new_name()
        self.expect(":")
        args = self.type_list()
        self.expect("->")
        array = ArrayVar(name, tuple(args), self.basic_type())
        self.symbols[name] = array
        return ArrayDecl(array, line)

    def _stmt_qubit(self, line: int) -> Statement:
        decls = [QuantumDecl(QuantumVarDecl(n), line) for n in self._names()]
        for d in decls:
            self.symbols[d.decl.name] = d.decl
        return decls[0] if len(decls) == 1 else _Many(tuple(decls), line)

    def _stmt_qvar(self, line: int) -> Statement:
        names = self._names()
        self.expect(":")
        basic = self.basic_type()
        decls = [QuantumDecl(QuantumVarDecl(n, (), basic), line) for n in names]
        for d in decls:
            self.symbols[d.decl.name] = d.decl
        return decls[0] if len(decls) == 1 else _Many(tuple(decls), line)

    def _stmt_qreg(self, line: int) -> Statement:
        name = self.new_name()
        self.expect(":")
        args = self.type_list()
        self.expect("->")
        decl = QuantumVarDecl(name, tuple(args), self.basic_type())
        self.symbols[name] = decl
        return QuantumDecl(decl, line)

    def _stmt_const(self, line: int) -> Statement:
        name = self.new_name()
        self.expect(":")
        dom, cod = self.signature_types()
        decl = OperatorConstDecl(name, dom, cod)
        self.expect("=")
        entries = self.matrix()
        self.symbols[name] = decl
        return ConstDecl(decl, entries, line)

    def _stmt_opvar(self, line: int) -> Statement:
        name = self.new_name()
        self.expect(":")
        dom, cod = self.signature_types()
        decl = OperatorVarDecl(name, dom, cod)
        self.symbols[name] = decl
        return OpVarDecl(decl, line)

    def _stmt_let(self, line: int) -> Statement:
        token = self.tok
        name = self.name()
        target = self.symbols.get(name)
        if isinstance(target, ArrayVar):
            self.expect("[")
            indices = self.expr_list("]")
            self.expect("=")
            return LetCell(target, tuple(indices), self.expr(), line)
        self.expect("=")
        if isinstance(target, Var):
            return LetValue(target, self.expr(), line)
        if isinstance(target, OperatorVarDecl):
            return LetOperator(target, self.matrix(), line)
        raise self.error(f"'{name}' is not a classical or operator variable", token)

    def _stmt_range(self, line: int) -> Statement:
        token = self.tok
        name = self.name()
        if not isinstance(self.symbols.get(name), Var):
            raise self.error(f"'{name}' is not a classical variable", token)
        self.expect("=")
        lo = self.signed_int()
        self.expect("..")
        hi = self.signed_int()
        if lo > hi:
            raise self.error(f"empty range {lo}..{hi}", token)
        return RangeDecl(name, lo, hi, line)

    def _stmt_def(self, line: int) -> Statement:
        name = self.new_name()
        self.expect("(")
        params: List[Var] = []
        if not self.at(")"):
            while True:
                pname = self.name()
                self.expect(":")
                params.append(Var(pname, self.basic_type()))
                if not self.accept(","):
                    break
        self.expect(")")
        arrays: List[QuantumVarDecl] = []
        if self.accept("over"):
            while True:
                arrays.append(self.quantum_decl())
                if not self.accept(","):
                    break
        definition = RecursiveDef(name, tuple(params), None, tuple(arrays))
        self.symbols[name] = definition
        self.scopes.append({p.name: p for p in params})
        try:
            self.expect("{")
            cases = []
            while self.accept("case"):
                guard = self.cformula()
                self.expect("=>")
                body = self.op()
                self.expect(";")
                cases.append((guard, body))
                definition.case(guard, body)
            self.expect("}")
            if not cases:
                raise self.error(f"definition '{name}' has no cases")
            self.expect("measure")
            measure = self.expr()
        except SolError:
            del self.symbols[name]
            raise
        finally:
            self.scopes.pop()
        definition.measure = measure
        definition.external_vars = _externals(params, cases, measure)
        return DefDecl(name, tuple(params), tuple(arrays), tuple(cases), measure, definition, line)

    def _stmt_assume(self, line: int) -> Statement:
        return Assume(self.cformula(), line)

    def _stmt_given(self, line: int) -> Statement:
        return Given(self.formula(), line)

    def _stmt_assert(self, line: int) -> Statement:
        return Assert(self.formula(), line)

    def _stmt_entail(self, line: int) -> Statement:
        self.expect("[")
        theory = self._list(self.cformula, "]")
        self.expect("|-")
        self.expect("[")
        gamma = self._list(self.formula, "]")
        self.expect("=>")
        return Entail(tuple(theory), tuple(gamma), self.formula(), line)

    def _stmt_sign(self, line: int) -> Statement:
        return OperatorCommand("sign", self.op(), line)

    def _stmt_eval(self, line: int) -> Statement:
        return OperatorCommand("eval", self.op(), line)

    def _stmt_normalize(self, line: int) -> Statement:
        return OperatorCommand("normalize", self.op(), line)

    def _stmt_suite(self, line: int) -> Statement:
        name = self.name()
        while self.accept("-"):
            name += "-" + self.name()
        options = []
        while self.tok.kind == "name":
            key = self.name()
            self.expect("=")
            options.append((key, self.signed_int()))
        return SuiteCommand(name, tuple(options), line)

    def _list(self, item: Callable[[], Any], close: str) -> List[Any]:
        items = []
        if not self.at(close):
            items.append(item())
            while self.accept(","):
                items.append(item())
        self.expect(close)
        return items

    # -- types -------------------------------------------------------------

    def basic_type(self) -> BasicType:
        token = self.tok
        name = self.name()
        if name == "Bool":
            return BOOL
        if name == "C":
            return COMPLEX
        if name == "Int":
            if self.accept("["):
                lo = self.signed_int()
                self.expect("..")
                hi = self.signed_int()
                self.expect("]")
                return int_type(lo, hi)
            return INT
        raise self.error(f"unknown type '{name}'", token)

    def type_list(self) -> List[BasicType]:
        if self.accept("eps"):
            return []
        types = [self.basic_type()]
        while self.accept(","):
            types.append(self.basic_type())
        return types

    def signature_types(self) -> Tuple[Tuple[BasicType, ...], Tuple[BasicType, ...]]:
        dom = self.type_list()
        self.expect("->")
        return tuple(dom), tuple(self.type_list())

    def signed_int(self) -> int:
        negative = self.accept("-")
        token = self.tok
        if token.kind != "number" or not token.text.isdigit():
            raise self.error(f"expected an integer, found '{token.text}'")
        self.pos += 1
        return -int(token.text) if negative else int(token.text)

    def matrix(self) -> Matrix:
        self.expect("[")
        rows = self._list(self._matrix_row, "]")
        if not rows or len({len(r) for r in rows}) != 1:
            raise self.error("matrix rows must be non-empty and of equal length")
        return tuple(rows)

    def _matrix_row(self) -> Tuple[Expr, ...]:
        self.expect("[")
        return tuple(self._list(self.expr, "]"))

    # -- classical expressions ---------------------------------------------

    def expr_list(self, close: str) -> List[Expr]:
        return self._list(self.expr, close)

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+", "-"):
            op = self.tok.text
            self.pos += 1
            left = app(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at("*", "/", "div", "mod"):
            op = self.tok.text
            self.pos += 1
            left = app(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.accept("-"):
            if self.tok.kind == "number":
                literal = self.number()
                return Const(-literal.value, literal.type)
            return app("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.accept("^"):
            return app("pow", base, self.unary())
        return base

    def number(self) -> Const:
        text = self.tok.text
        self.pos += 1
        if text.endswith("i"):
            return Const(complex(0, float(text[:-1])), COMPLEX)
        if any(c in text for c in ".eE"):
            return Const(complex(float(text)), COMPLEX)
        return Const(int(text), INT)

    def primary(self) -> Expr:
        token = self.tok
        if token.kind == "number":
            return self.number()
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if token.kind != "name":
            raise self.error(f"expected an expression, found '{token.text or 'end of input'}'")
        word = self.name()
        if word == "true":
            return Const(True, BOOL)
        if word == "false":
            return Const(False, BOOL)
        if word == "pi":
            return Const(complex(3.141592653589793), COMPLEX)
        if word == "complex":
            self.expect("(")
            re_part = self._signed_real()
            self.expect(",")
            im_part = self._signed_real()
            self.expect(")")
            return Const(complex(re_part, im_part), COMPLEX)
        if word == "if":
            guard = self.cformula()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            return Cond(guard, then, self.expr())
        target = self.lookup(word)
        if isinstance(target, Var):
            return target
        if isinstance(target, ArrayVar):
            self.expect("[")
            return ArrayRef(target, tuple(self.expr_list("]")))
        if word in BUILTINS and self.at("("):
            self.pos += 1
            return app(word, *self.expr_list(")"))
        raise self.error(f"'{word}' is not a classical variable or function", token)

    def _signed_real(self) -> float:
        negative = self.accept("-")
        if self.tok.kind != "number" or self.tok.text.endswith("i"):
            raise self.error(f"expected a real number, found '{self.tok.text}'")
        value = float(self.tok.text)
        self.pos += 1
        return -value if negative else value

    # -- classical formulas ------------------------------------------------

    def cformula(self) -> Formula:
        left = self.cdisj()
        if self.accept("->"):
            return Implies(left, self.cformula())
        return left

    def cdisj(self) -> Formula:
        left = self.cconj()
        while self.accept("or"):
            left = Or(left, self.cconj())
        return left

    def cconj(self) -> Formula:
        left = self.cunary()
        while self.accept("&"):
            left = And(left, self.cunary())
        return left

    def cunary(self) -> Formula:
        if self.accept("!"):
            return Not(self.cunary())
        if self.at("forall", "exists"):
            exists = self.tok.text == "exists"
            self.pos += 1
            var = self._binder()
            self.scopes.append({var.name: var})
            try:
                body = self.cformula()
            finally:
                self.scopes.pop()
            return Exists(var, body) if exists else ForAll(var, body)
        if self.at("true", "false") and self.tokens[self.pos + 1].text not in _EXPR_CONTINUATIONS:
            return TRUE if self.name() == "true" else FALSE
        if self.at("("):
            start = self.pos

            def grouped() -> Formula:
                self.expect("(")
                inner = self.cformula()
                self.expect(")")
                return inner

            ok, inner = self.attempt(grouped)
            if ok and not self.at(*_EXPR_CONTINUATIONS):
                return inner
            self.pos = start
        return self.catom()

    def _binder(self) -> Var:
        name = self.name()
        self.expect(":")
        var = Var(name, self.basic_type())
        self.expect(".")
        return var

    def catom(self) -> Formula:
        left = self.expr()
        if self.tok.text in _RELATIONS and self.tok.kind == "sym":
            pred = _RELATIONS[self.tok.text]
            self.pos += 1
            return Atom(pred, (left, self.expr()))
        if left.type.name != "Bool":
            raise self.error(f"expected a comparison or a Bool expression, found an expression of type {left.type}")
        return Atom("holds", (left,))

    # -- operator terms ----------------------------------------------------

    def op(self) -> FormalOp:
        left = self.op_product()
        while self.at("+", "-"):
            minus = self.tok.text == "-"
            self.pos += 1
            right = self.op_product()
            left = Sum(left, Scale(Const(-1 + 0j, COMPLEX), right) if minus else right)
        return left

    def op_product(self) -> FormalOp:
        left = self.op_tensor()
        while self.accept("*"):
            left = Product(left, self.op_tensor())
        return left

    def op_tensor(self) -> FormalOp:
        left = self.op_unary()
        while self.accept("><"):
            left = Tensor(left, self.op_unary())
        return left

    def op_unary(self) -> FormalOp:
        if self.accept("~"):
            inner = self.op_unary()
            return negate(inner, self.symbols["I"])
        ok, coeff = self.attempt(self._coefficient)
        if ok:
            return Scale(coeff, self.op_unary())
        if self.accept("-"):
            return Scale(Const(-1 + 0j, COMPLEX), self.op_unary())
        return self.op_postfix()

    def _coefficient(self) -> Expr:
        coeff = self.expr()
        self.expect(".")
        return coeff

    def op_postfix(self) -> FormalOp:
        result = self.op_atom()
        while self.accept("^+"):
            result = Adjoint(result)
        return result

    def op_atom(self) -> FormalOp:
        token = self.tok
        if self.accept("|"):
            label = self.expr()
            self.expect(">_")
            return Ket(label, self.qref())
        if self.accept("<"):
            label = self.expr()
            self.expect("|_")
            return Bra(label, self.qref())
        if self.accept("("):
            inner = self.op()
            self.expect(")")
            return inner
        if token.kind != "name":
            raise self.error(f"expected an operator term, found '{token.text or 'end of input'}'")
        word = self.name()
        if word == "scalar":
            self.expect("(")
            value = self.expr()
            self.expect(")")
            return Scalar(value)
        if word == "bell":
            self.expect("(")
            x = self.expr()
            self.expect(",")
            y = self.expr()
            self.expect(")")
            self.expect("[")
            qa = self.qref()
            self.expect(",")
            qb = self.qref()
            self.expect("]")
            return bell(x, y, qa, qb)
        target = self.lookup(word)
        if isinstance(target, OperatorVarDecl):
            self.expect("[")
            dom, cod = self.register_signature()
            return OpVar(target, dom, cod)
        if isinstance(target, OperatorConstDecl):
            params: Tuple[Expr, ...] = ()
            if self.accept("("):
                params = tuple(self.expr_list(")"))
            self.expect("[")
            dom, cod = self.register_signature()
            return OpConst(target, params, dom, cod)
        if isinstance(target, RecursiveDef):
            self.expect("(")
            args = tuple(self.expr_list(")"))
            arrays: Tuple[QuantumVarDecl, ...] = ()
            if self.accept("["):
                arrays = tuple(self._list(self.quantum_decl, "]"))
            return Instance(target, args, arrays)
        raise self.error(f"'{word}' is not an operator", token)

    def register_signature(self) -> Tuple[RegisterString, RegisterString]:
        """``regs]`` or ``regs -> regs]``, after the opening bracket."""
        dom = self.register_string()
        cod = self.register_string() if self.accept("->") else dom
        self.expect("]")
        return dom, cod

    def register_string(self) -> RegisterString:
        if self.accept("eps"):
            return EPSILON
        refs = [self.qref()]
        while self.accept(","):
            refs.append(self.qref())
        return RegisterString(tuple(refs))

    def quantum_decl(self) -> QuantumVarDecl:
        token = self.tok
        target = self.lookup(self.name())
        if not isinstance(target, QuantumVarDecl):
            raise self.error(f"'{token.text}' is not a quantum variable", token)
        return target

    def qref(self) -> QuantumRef:
        decl = self.quantum_decl()
        indices: Tuple[Expr, ...] = ()
        if decl.is_array:
            self.expect("[")
            indices = tuple(self.expr_list("]"))
        return QuantumRef(decl, indices)

    # -- SOL formulas ------------------------------------------------------

    def formula(self) -> SolFormula:
        left = self.sol_disj()
        if self.accept("->"):
            return sol_implies(left, self.formula())
        if self.accept("<->"):
            return sol_iff(left, self.formula())
        return left

    def sol_disj(self) -> SolFormula:
        left = self.sol_conj()
        while self.accept("or"):
            left = sol_or(left, self.sol_conj())
        return left

    def sol_conj(self) -> SolFormula:
        left = self.sol_unary()
        while self.accept("&"):
            left = SolAnd(left, self.sol_unary())
        return left

    def sol_unary(self) -> SolFormula:
        if self.accept("!"):
            return SolNot(self.sol_unary())
        if self.at("forall", "exists"):
            exists = self.tok.text == "exists"
            self.pos += 1
            var = self._binder()
            self.scopes.append({var.name: var})
            try:
                body = self.formula()
            finally:
                self.scopes.pop()
            return exists_classical(var, body) if exists else ForAllClassical(var, body)
        if self.at("forallOp", "existsOp"):
            exists = self.tok.text == "existsOp"
            self.pos += 1
            name = self.name()
            self.expect(":")
            dom, cod = self.signature_types()
            self.expect(".")
            decl = OperatorVarDecl(name, dom, cod)
            self.scopes.append({name: decl})
            try:
                body = self.formula()
            finally:
                self.scopes.pop()
            return exists_operator(decl, body) if exists else ForAllOperator(decl, body)
        return self.sol_atom()

    def sol_atom(self) -> SolFormula:
        token = self.tok
        if self.accept("{"):
            inner = self.cformula()
            self.expect("}")
            return ClassicalAtom(inner)
        if self.accept("true"):
            return SOL_TRUE
        if self.accept("false"):
            return ClassicalAtom(FALSE)
        if token.kind == "name" and token.text in PREDICATES:
            self.pos += 1
            self.expect("(")
            target = self.op()
            self.expect(")")
            self.expect(":")
            if self.accept("("):
                regs = self.register_string()
                self.expect(")")
            else:
                regs = self.register_string()
            return Pred(PREDICATES[token.text], target, regs)
        if token.kind == "name" and token.text in ("norm", "tr"):
            self.pos += 1
            self.expect("(")
            target = self.op()
            self.expect(")")
            rel = self._norm_relation()
            if token.text == "norm":
                return NormCmp(target, rel, self._signed_real())
            value = eval_expr(State(), self.expr())
            return TraceCmp(target, rel, complex(value))
        if self.at("("):
            start = self.pos

            def grouped() -> SolFormula:
                self.expect("(")
                inner = self.formula()
                self.expect(")")
                return inner

            ok, inner = self.attempt(grouped)
            if ok and not self.at(*_OP_CONTINUATIONS):
                return inner
            self.pos = start
        left = self.op()
        if self.accept("=="):
            return OpEq(left, self.op())
        if self.accept("<="):
            return OpLeq(left, self.op())
        raise self.error("expected '==' or '<=' after an operator term")

    def _norm_relation(self) -> str:
        for text, rel in (("==", "="), ("=", "="), ("<", "<"), (">", ">")):
            if self.accept(text):
                return rel
        raise self.error("expected '=', '<' or '>'")


@dataclass(frozen=True)
class _Many(Statement):
    """Several declarations from one statement; flattened by :func:`parse`."""

    items: Tuple[Statement, ...]
    line: int = field(default=0, compare=False)


def _externals(params: Sequence[Var], cases, measure: Expr) -> Tuple[Any, ...]:
    found: Dict[str, Any] = {}
    for guard, body in cases:
        collect_formula_vars(guard, found)
        found.update(classical_vars(body))
    collect_expr_vars(measure, found)
    for p in params:
        found.pop(p.name, None)
    return tuple(found[name] for name in sorted(found))


def parse(text: str, source: str = "<script>") -> Script:
    """
    Parse a ``.sol`` script

    Raises:
        ScriptError: with the line and column of the offending token
    """
    script = Parser(text, source).script()
    flat: List[Statement] = []
    for statement in script.statements:
        flat.extend(statement.items if isinstance(statement, _Many) else (statement,))
    return Script(tuple(flat), source)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_INFIX = {"+", "-", "*", "/", "div", "mod"}
_RELATION_TEXT = {pred: text for text, pred in _RELATIONS.items()}


def print_real(value: float) -> str:
    return repr(float(value))


def print_const(c: Const) -> str:
    if c.type.name == "Bool":
        return "true" if c.value else "false"
    if c.type.name == "Int":
        return str(int(c.value))
    z = complex(c.value)
    if z.imag == 0:
        return print_real(z.real)
    if z.real == 0:
        return f"{print_real(z.imag)}i"
    return f"complex({print_real(z.real)}, {print_real(z.imag)})"


def print_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return print_const(e)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, ArrayRef):
        return f"{e.array.name}[{', '.join(print_expr(a) for a in e.args)}]"
    if isinstance(e, Cond):
        return f"(if {print_formula(e.guard)} then {print_expr(e.then)} else {print_expr(e.orelse)})"
    if isinstance(e, App):
        if e.op in _INFIX and len(e.args) == 2:
            return f"({print_expr(e.args[0])} {e.op} {print_expr(e.args[1])})"
        if e.op == "neg":
            return f"-({print_expr(e.args[0])})"
        return f"{e.op}({', '.join(print_expr(a) for a in e.args)})"
    raise ScriptError(f"cannot print expression {e!r}")


def print_type(t: BasicType) -> str:
    return str(t)


def _types(types: Sequence[BasicType]) -> str:
    return ", ".join(print_type(t) for t in types) if types else "eps"


def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        if f.pred in ("true", "false"):
            return f.pred
        if f.pred == "holds":
            return print_expr(f.args[0])
        if f.pred in _RELATION_TEXT:
            return f"({print_expr(f.args[0])} {_RELATION_TEXT[f.pred]} {print_expr(f.args[1])})"
        raise ScriptError(f"predicate '{f.pred}' has no script syntax")
    if isinstance(f, Not):
        return f"!{print_formula(f.body)}"
    if isinstance(f, And):
        return f"({print_formula(f.left)} & {print_formula(f.right)})"
    if isinstance(f, Or):
        return f"({print_formula(f.left)} or {print_formula(f.right)})"
    if isinstance(f, Implies):
        return f"({print_formula(f.left)} -> {print_formula(f.right)})"
    if isinstance(f, (ForAll, Exists)):
        word = "forall" if isinstance(f, ForAll) else "exists"
        return f"({word} {f.var.name} : {print_type(f.var.type)} . {print_formula(f.body)})"
    raise ScriptError(f"cannot print formula {f!r}")


def print_ref(ref: QuantumRef) -> str:
    if not ref.indices:
        return ref.base.name
    return f"{ref.base.name}[{', '.join(print_expr(i) for i in ref.indices)}]"


def print_registers(regs: RegisterString) -> str:
    return ", ".join(print_ref(r) for r in regs) if len(regs) else "eps"


def print_op(op: FormalOp) -> str:
    if isinstance(op, Scalar):
        return f"scalar({print_expr(op.value)})"
    if isinstance(op, Ket):
        return f"|{print_expr(op.label)}>_{print_ref(op.reg)}"
    if isinstance(op, Bra):
        return f"<{print_expr(op.label)}|_{print_ref(op.reg)}"
    if isinstance(op, (OpVar, OpConst)):
        params = ""
        if isinstance(op, OpConst) and op.params:
            params = f"({', '.join(print_expr(p) for p in op.params)})"
        return f"{op.decl.name}{params}[{print_registers(op.dom)} -> {print_registers(op.cod)}]"
    if isinstance(op, Scale):
        return f"({print_expr(op.coeff)} . {print_op(op.body)})"
    if isinstance(op, Adjoint):
        return f"({print_op(op.body)})^+"
    if isinstance(op, Sum):
        return f"({print_op(op.left)} + {print_op(op.right)})"
    if isinstance(op, Product):
        return f"({print_op(op.left)} * {print_op(op.right)})"
    if isinstance(op, Tensor):
        return f"({print_op(op.left)} >< {print_op(op.right)})"
    if isinstance(op, Instance):
        arrays = f"[{', '.join(a.name for a in op.arrays)}]" if op.arrays else ""
        return f"{op.name}({', '.join(print_expr(a) for a in op.args)}){arrays}"
    raise ScriptError(f"cannot print operator {op!r}")


_PREDICATE_TEXT = {
    PredicateKind.PURE: "pure",
    PredicateKind.MIXED: "mixed",
    PredicateKind.UNITARY: "unitary",
    PredicateKind.OBSERVABLE: "obs",
    PredicateKind.EFFECT: "effect",
}


def print_sol(f: SolFormula) -> str:
    if isinstance(f, ClassicalAtom):
        return "{" + print_formula(f.formula) + "}"
    if isinstance(f, Pred):
        return f"{_PREDICATE_TEXT[f.kind]}({print_op(f.op)}) : ({print_registers(f.regs)})"
    if isinstance(f, NormCmp):
        return f"norm({print_op(f.op)}) {f.rel} {print_real(f.value)}"
    if isinstance(f, TraceCmp):
        return f"tr({print_op(f.op)}) {f.rel} {print_const(Const(f.value, COMPLEX))}"
    if isinstance(f, OpEq):
        return f"({print_op(f.left)} == {print_op(f.right)})"
    if isinstance(f, OpLeq):
        return f"({print_op(f.left)} <= {print_op(f.right)})"
    if isinstance(f, SolNot):
        return f"!{print_sol(f.body)}"
    if isinstance(f, SolAnd):
        return f"({print_sol(f.left)} & {print_sol(f.right)})"
    if isinstance(f, ForAllClassical):
        return f"(forall {f.var.name} : {print_type(f.var.type)} . {print_sol(f.body)})"
    if isinstance(f, ForAllOperator):
        return f"(forallOp {f.var.name} : {_types(f.var.dom_types)} -> {_types(f.var.cod_types)} . {print_sol(f.body)})"
    raise ScriptError(f"cannot print formula {f!r}")


def _print_matrix(entries: Matrix) -> str:
    return "[" + ", ".join("[" + ", ".join(print_expr(e) for e in row) + "]" for row in entries) + "]"


def print_statement(s: Statement) -> str:
    if isinstance(s, VarDecl):
        return f"var {s.var.name} : {print_type(s.var.type)};"
    if isinstance(s, ArrayDecl):
        return f"array {s.array.name} : {_types(s.array.arg_types)} -> {print_type(s.array.value_type)};"
    if isinstance(s, QuantumDecl):
        d = s.decl
        if d.is_array:
            return f"qreg {d.name} : {_types(d.arg_types)} -> {print_type(d.value_type)};"
        return f"qvar {d.name} : {print_type(d.value_type)};"
    if isinstance(s, ConstDecl):
        d = s.decl
        return f"const {d.name} : {_types(d.dom_types)} -> {_types(d.cod_types)} = {_print_matrix(s.entries)};"
    if isinstance(s, OpVarDecl):
        d = s.decl
        return f"opvar {d.name} : {_types(d.dom_types)} -> {_types(d.cod_types)};"
    if isinstance(s, LetValue):
        return f"let {s.var.name} = {print_expr(s.value)};"
    if isinstance(s, LetCell):
        return f"let {s.array.name}[{', '.join(print_expr(i) for i in s.indices)}] = {print_expr(s.value)};"
    if isinstance(s, LetOperator):
        return f"let {s.decl.name} = {_print_matrix(s.entries)};"
    if isinstance(s, RangeDecl):
        return f"range {s.name} = {s.lo}..{s.hi};"
    if isinstance(s, DefDecl):
        params = ", ".join(f"{p.name} : {print_type(p.type)}" for p in s.params)
        over = f" over {', '.join(a.name for a in s.arrays)}" if s.arrays else ""
        cases = " ".join(f"case {print_formula(g)} => {print_op(b)};" for g, b in s.cases)
        return f"def {s.name}({params}){over} {{ {cases} }} measure {print_expr(s.measure)};"
    if isinstance(s, Assume):
        return f"assume {print_formula(s.formula)};"
    if isinstance(s, Given):
        return f"given {print_sol(s.formula)};"
    if isinstance(s, Assert):
        return f"assert {print_sol(s.formula)};"
    if isinstance(s, Entail):
        theory = ", ".join(print_formula(f) for f in s.theory)
        gamma = ", ".join(print_sol(f) for f in s.gamma)
        return f"entail [{theory}] |- [{gamma}] => {print_sol(s.goal)};"
    if isinstance(s, OperatorCommand):
        return f"{s.kind} {print_op(s.op)};"
    if isinstance(s, SuiteCommand):
        options = "".join(f" {k} = {v}" for k, v in s.options)
        return f"suite {s.name}{options};"
    raise ScriptError(f"cannot print statement {s!r}")


def print_script(script: Script) -> str:
    return "\n".join(print_statement(s) for s in script.statements) + "\n"


def describe(statement: Statement) -> str:
    """One-line text of a statement for reports."""
    return print_statement(statement)
