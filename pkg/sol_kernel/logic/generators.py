"""Seeded random instances: matrices, classical expressions, formal operators"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import qr

from .classical_logic import (
    INT,
    And,
    Atom,
    Const,
    Expr,
    Formula,
    Not,
    Or,
    Var,
    app,
    const,
)
from .operator_terms import (
    Adjoint,
    Bra,
    FormalOp,
    Ket,
    OpConst,
    OperatorConstDecl,
    Product,
    Scalar,
    Scale,
    Sum,
    Tensor,
)
from .quantum_registers import QuantumRef, RegisterString


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def complex_gaussian(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    q, r = qr(complex_gaussian(rng, n, n))
    diagonal = np.diag(r)
    phases = diagonal / np.abs(diagonal)
    return q * phases


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random unit column vector of shape (n, 1)."""
    v = complex_gaussian(rng, n, 1)
    return v / np.linalg.norm(v)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    g = complex_gaussian(rng, n, n)
    return (g + g.conj().T) / 2


def random_psd(rng: np.random.Generator, n: int, rank: Optional[int] = None) -> np.ndarray:
    g = complex_gaussian(rng, n, rank or n)
    return g @ g.conj().T


def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    """Normalised Gram matrix."""
    rho = random_psd(rng, n)
    return rho / np.trace(rho)


def random_complex(rng: np.random.Generator) -> complex:
    return complex(rng.standard_normal(), rng.standard_normal())


# ---------------------------------------------------------------------------
# Classical expressions and formulas over Int variables
# ---------------------------------------------------------------------------

def random_int_expr(rng: np.random.Generator, variables: Sequence[Var], depth: int = 2) -> Expr:
    """Small Int-valued expression over the given variables and constants in [-2, 2]."""
    if depth <= 0 or rng.random() < 0.3:
        if variables and rng.random() < 0.6:
            return variables[int(rng.integers(len(variables)))]
        return Const(int(rng.integers(-2, 3)), INT)
    op = ("+", "-", "*")[int(rng.integers(3))]
    return app(op, random_int_expr(rng, variables, depth - 1), random_int_expr(rng, variables, depth - 1))


def random_formula(rng: np.random.Generator, variables: Sequence[Var], depth: int = 2) -> Formula:
    """Quantifier-free formula built from comparisons of random Int expressions."""
    if depth <= 0 or rng.random() < 0.4:
        pred = ("eq", "ne", "lt", "le")[int(rng.integers(4))]
        return Atom(pred, (random_int_expr(rng, variables, 1), random_int_expr(rng, variables, 1)))
    kind = int(rng.integers(3))
    if kind == 0:
        return Not(random_formula(rng, variables, depth - 1))
    left = random_formula(rng, variables, depth - 1)
    right = random_formula(rng, variables, depth - 1)
    return And(left, right) if kind == 1 else Or(left, right)


def wrapped(expr: Expr, lo: int, hi: int) -> Expr:
    """Map an Int expression into [lo, hi] with mod, keeping substitutions in range."""
    width = hi - lo + 1
    return app("+", app("mod", expr, Const(width, INT)), Const(lo, INT))


# ---------------------------------------------------------------------------
# Formal operators over qubit registers
# ---------------------------------------------------------------------------

def _coefficient(rng: np.random.Generator) -> Expr:
    choices = (1, -1, 1j, 0.5, np.sqrt(0.5))
    if rng.random() < 0.5:
        return const(complex(choices[int(rng.integers(len(choices)))]))
    return const(complex(round(rng.standard_normal(), 3), round(rng.standard_normal(), 3)))


def _ket_string(rng: np.random.Generator, refs: Sequence[QuantumRef], bra: bool = False) -> FormalOp:
    if not refs:
        return Scalar(const(1 + 0j))
    make = Bra if bra else Ket
    term: FormalOp = make(const(bool(rng.integers(2))), refs[0])
    for ref in refs[1:]:
        term = Tensor(term, make(const(bool(rng.integers(2))), ref))
    return term


def _leaf(rng: np.random.Generator, rows: Tuple[QuantumRef, ...], cols: Tuple[QuantumRef, ...],
          gates: Dict[str, OperatorConstDecl]) -> FormalOp:
    if not rows and not cols:
        return Scalar(_coefficient(rng))
    if rows == cols and len(rows) == 1 and rng.random() < 0.7:
        name = ("H", "X", "Y", "Z", "Rz")[int(rng.integers(5))]
        params = (const(complex(round(rng.uniform(-3, 3), 3))),) if name == "Rz" else ()
        return OpConst(gates[name], params, RegisterString(rows), RegisterString(cols))
    if rows == cols and len(rows) == 2 and rng.random() < 0.6:
        return OpConst(gates["CNOT"], (), RegisterString(rows), RegisterString(cols))
    if not cols:
        return _ket_string(rng, rows)
    if not rows:
        return _ket_string(rng, cols, bra=True)
    return Product(_ket_string(rng, rows), _ket_string(rng, cols, bra=True))


def random_operator_term(rng: np.random.Generator, rows: Sequence[QuantumRef], cols: Sequence[QuantumRef],
                         gates: Dict[str, OperatorConstDecl], depth: int = 3) -> FormalOp:
    """
    Random well-signed formal operator with the given row/column registers

    Args:
        rng: Random generator
        rows: Row-side registers (distinct)
        cols: Column-side registers (distinct)
        gates: Constant table with at least H, X, Y, Z, Rz, CNOT
        depth: Maximum nesting depth

    Returns:
        A term whose grounded signature is rows -> cols
    """
    rows, cols = tuple(rows), tuple(cols)
    if depth <= 0 or rng.random() < 0.25:
        return _leaf(rng, rows, cols, gates)
    kind = int(rng.integers(5))
    if kind == 0:
        return Scale(_coefficient(rng), random_operator_term(rng, rows, cols, gates, depth - 1))
    if kind == 1:
        return Sum(
            random_operator_term(rng, rows, cols, gates, depth - 1),
            random_operator_term(rng, rows, cols, gates, depth - 1),
        )
    if kind == 2:
        return Adjoint(random_operator_term(rng, cols, rows, gates, depth - 1))
    if kind == 3:
        pool = sorted(set(rows) | set(cols), key=lambda r: repr(r))
        mid = tuple(ref for ref in pool if rng.random() < 0.5)
        return Product(
            random_operator_term(rng, rows, mid, gates, depth - 1),
            random_operator_term(rng, mid, cols, gates, depth - 1),
        )
    if len(rows) + len(cols) < 2:
        return _leaf(rng, rows, cols, gates)
    split_rows = int(rng.integers(len(rows) + 1))
    split_cols = int(rng.integers(len(cols) + 1))
    return Tensor(
        random_operator_term(rng, rows[:split_rows], cols[:split_cols], gates, depth - 1),
        random_operator_term(rng, rows[split_rows:], cols[split_cols:], gates, depth - 1),
    )
