"""Dense float64 vector/matrix helpers shared by the model and explainers.

Vectors and matrices are plain ``numpy.ndarray`` objects of dtype float64
(matrices row-major, shape ``(rows, cols)``).  Every helper validates shapes
and refuses to return non-finite values.
"""

from __future__ import annotations

import numpy as np

FLOAT = np.float64


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NonFiniteError(FloatingPointError):
    """A computation produced NaN or Inf."""


def vector(values) -> np.ndarray:
    v = np.array(values, dtype=FLOAT)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {v.shape}")
    return check_finite(v)


def matrix(values) -> np.ndarray:
    m = np.array(values, dtype=FLOAT, order="C")
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    return check_finite(m)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=FLOAT)


def zeros(*shape: int) -> np.ndarray:
    return np.zeros(shape, dtype=FLOAT)


def check_finite(a: np.ndarray, what: str = "result") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite value in {what}")
    return a


def _same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot multiply {m.shape} by {v.shape}")
    return check_finite(m @ v)


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_length(a, b)
    return check_finite(a + b)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_length(a, b)
    return check_finite(a * b)


def sigm(v: np.ndarray) -> np.ndarray:
    """Logistic sigmoid, evaluated without overflow for large |v|."""
    v = np.asarray(v, dtype=FLOAT)
    return check_finite(np.exp(-np.logaddexp(0.0, -v)))


def tanh(v: np.ndarray) -> np.ndarray:
    return check_finite(np.tanh(np.asarray(v, dtype=FLOAT)))
