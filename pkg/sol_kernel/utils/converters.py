"""Data conversion utilities for JSON reports"""

from typing import Any, List

import numpy as np


DIGITS = 12


def _clean(x: float) -> float:
    value = round(float(x), DIGITS)
    # avoid "-0.0" in reports
    return 0.0 if value == 0 else value


def complex_to_json(z: complex) -> List[float]:
    """Convert a complex number to a ``[re, im]`` pair."""
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def value_to_json(value: Any) -> Any:
    """
    Convert a classical value to something ``json.dumps`` accepts

    Args:
        value: bool, int, complex, or an array table (dict keyed by tuples)

    Returns:
        JSON-compatible value
    """
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, complex, np.floating, np.complexfloating)):
        return complex_to_json(value)
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda item: repr(item[0]))
        return [[[value_to_json(k) for k in _as_tuple(key)], value_to_json(v)] for key, v in items]
    return str(value)


def _as_tuple(key: Any) -> tuple:
    return key if isinstance(key, tuple) else (key,)


def matrix_to_json(matrix: np.ndarray) -> List[List[List[float]]]:
    """
    Convert a complex matrix to row-major ``[re, im]`` pairs

    Args:
        matrix: 2-D complex array

    Returns:
        Nested list rows -> entries -> [re, im]
    """
    data = np.asarray(matrix, dtype=complex)
    if data.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got shape {data.shape}")
    return [[complex_to_json(z) for z in row] for row in data]


def json_to_matrix(rows: List[List[Any]]) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; entries may also be plain numbers."""
    def entry(item: Any) -> complex:
        if isinstance(item, (list, tuple)):
            return complex(item[0], item[1])
        return complex(item)

    return np.array([[entry(item) for item in row] for row in rows], dtype=complex)


def format_complex(z: complex) -> str:
    """Short human-readable complex number."""
    z = complex(z)
    re, im = _clean(z.real), _clean(z.imag)
    if im == 0:
        return f"{re:g}"
    if re == 0:
        return f"{im:g}i"
    sign = "+" if im > 0 else "-"
    return f"({re:g}{sign}{abs(im):g}i)"
