"""Quantum variables, register strings, distinctness and grounding"""

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Tuple

from .classical_logic import (
    BOOL,
    FALSE,
    BasicType,
    Expr,
    Formula,
    State,
    conj,
    disj,
    eval_expr,
    ne,
)
from .errors import TypeMismatchError, UnsupportedQuantifierError


@dataclass(frozen=True)
class QuantumVarDecl:
    """
    A simple quantum variable (no argument types) or a quantum array

    The value type must have a finite domain; it fixes the standard basis of
    each subsystem.
    """

    name: str
    arg_types: Tuple[BasicType, ...] = ()
    value_type: BasicType = BOOL

    def __post_init__(self):
        if not self.value_type.bounded:
            raise TypeMismatchError(
                f"quantum variable '{self.name}' needs a finite value type, got {self.value_type}"
            )
        for arg_type in self.arg_types:
            if arg_type.name == "C":
                raise TypeMismatchError(f"quantum array '{self.name}' cannot be indexed by C")

    @property
    def is_array(self) -> bool:
        return bool(self.arg_types)

    @property
    def int_valued(self) -> bool:
        return self.value_type.name == "Int"


@dataclass(frozen=True)
class QuantumRef:
    """Simple quantum variable q or subscripted q[s1,...,sn]."""

    base: QuantumVarDecl
    indices: Tuple[Expr, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.base.arg_types):
            raise TypeMismatchError(
                f"'{self.base.name}' expects {len(self.base.arg_types)} indices, got {len(self.indices)}"
            )
        for index, expected in zip(self.indices, self.base.arg_types):
            if not index.type.matches(expected):
                raise TypeMismatchError(f"index of '{self.base.name}' has type {index.type}, expected {expected}")

    @property
    def value_type(self) -> BasicType:
        return self.base.value_type


@dataclass(frozen=True)
class GroundRef:
    """A quantum variable with concrete index values; equal iff it is the same subsystem."""

    base: QuantumVarDecl
    index_values: Tuple = ()

    @property
    def value_type(self) -> BasicType:
        return self.base.value_type

    @property
    def dim(self) -> int:
        return self.base.value_type.size()

    def sort_key(self) -> tuple:
        return (self.base.name, tuple(int(v) for v in self.index_values))

    @property
    def label(self) -> str:
        if not self.index_values:
            return self.base.name
        inner = ",".join(str(int(v)) if not isinstance(v, bool) else str(v).lower() for v in self.index_values)
        return f"{self.base.name}[{inner}]"


@dataclass(frozen=True)
class RegisterString:
    """Ordered string of quantum references; the empty string is epsilon."""

    refs: Tuple[QuantumRef, ...] = ()

    def __iter__(self):
        return iter(self.refs)

    def __len__(self) -> int:
        return len(self.refs)

    def __add__(self, other: "RegisterString") -> "RegisterString":
        return RegisterString(self.refs + other.refs)

    @property
    def value_types(self) -> Tuple[BasicType, ...]:
        return tuple(ref.value_type for ref in self.refs)

    def dim(self) -> int:
        return reduce(lambda acc, ref: acc * dim_of_type(ref.value_type), self.refs, 1)


EPSILON = RegisterString()


def registers(*refs: QuantumRef) -> RegisterString:
    return RegisterString(tuple(refs))


def dim_of_type(basic_type: BasicType) -> int:
    """Dimension of the Hilbert space spanned by the domain of a type."""
    if not basic_type.bounded:
        raise UnsupportedQuantifierError(f"type {basic_type} has no finite basis")
    return basic_type.size()


def distinctness_formula(string: RegisterString) -> Formula:
    """
    Formula asserting the references of a string denote distinct subsystems

    Every pair with the same base contributes a disjunction of index
    inequalities; two occurrences of the same simple variable give ``false``.
    """
    conjuncts = []
    refs = string.refs
    for i in range(len(refs)):
        for j in range(i + 1, len(refs)):
            a, b = refs[i], refs[j]
            if a.base != b.base:
                continue
            if not a.indices:
                conjuncts.append(FALSE)
            else:
                conjuncts.append(disj(ne(x, y) for x, y in zip(a.indices, b.indices)))
    return conj(conjuncts)


def ground(sigma: State, ref: QuantumRef) -> GroundRef:
    """sigma(q[t1..tn]) = q[sigma(t1)..sigma(tn)]."""
    return GroundRef(ref.base, tuple(eval_expr(sigma, index) for index in ref.indices))


def ground_string(sigma: State, string: Iterable[QuantumRef]) -> Tuple[GroundRef, ...]:
    return tuple(ground(sigma, ref) for ref in string)


def ground_dim(refs: Sequence[GroundRef]) -> int:
    return reduce(lambda acc, ref: acc * ref.dim, refs, 1)


def canonical_order(refs: Iterable[GroundRef]) -> Tuple[GroundRef, ...]:
    """Lexicographic by base name, then index values."""
    return tuple(sorted(refs, key=GroundRef.sort_key))


def pairwise_distinct(refs: Sequence[GroundRef]) -> bool:
    return len(set(refs)) == len(refs)
