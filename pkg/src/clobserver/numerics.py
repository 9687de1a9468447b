"""Small dense linear algebra on numpy arrays.

Matrices are 2-D ``float64`` arrays and vectors 1-D ones. The sizes handled
here are tiny (n <= 8 states, p <= 16 parameters), so eigenvalues of
symmetric matrices come from cyclic Jacobi rotations, vectorised over a
leading batch axis so a whole set of candidate Gram matrices can be scored in
one call.

Tolerances are module constants and not part of any run configuration.
"""

from __future__ import annotations

from itertools import combinations
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import (ClObserverNonFiniteError, ClObserverShapeError,
                     ClObserverSingularMatrixError)

__all__ = [
    'Mat', 'Vec',
    'as_vector', 'as_matrix',
    'add', 'scale', 'multiply', 'transpose', 'symmetrize',
    'frobenius_norm', 'norm2',
    'symmetric_eigenvalues', 'min_singular_value', 'min_singular_values',
    'solve_spd',
]

Mat = np.ndarray
Vec = np.ndarray
ArrayLike = Union[np.ndarray, Sequence, float]

SYMMETRY_TOLERANCE = 1e-9
PSD_SLACK = 1e-9
JACOBI_TOLERANCE = 1e-12
JACOBI_NEGLIGIBLE = np.finfo(np.float64).eps
JACOBI_MAX_SWEEPS = 100
SOLVE_RCOND = 1e-12
MAX_DIMENSION = 64


def as_vector(value: ArrayLike, dim: Optional[int] = None, name: str = 'vector') -> Vec:
    """Converts ``value`` to a finite 1-D float64 array, optionally of length ``dim``."""
    v = np.asarray(value, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ClObserverShapeError(f'{name} must be 1-D, got shape {v.shape}')
    if dim is not None and v.shape[0] != dim:
        raise ClObserverShapeError(f'{name} must have length {dim}, got {v.shape[0]}')
    _check_finite(v, name)
    return v


def as_matrix(value: ArrayLike, shape: Optional[Tuple[Optional[int], Optional[int]]] = None,
              name: str = 'matrix') -> Mat:
    """Converts ``value`` to a finite 2-D float64 array.

    ``shape`` may leave either dimension as ``None`` to accept any size there.
    """
    m = np.asarray(value, dtype=np.float64)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ClObserverShapeError(f'{name} must be 2-D, got shape {m.shape}')
    if shape is not None:
        for axis, expected in enumerate(shape):
            if expected is not None and m.shape[axis] != expected:
                raise ClObserverShapeError(
                    f'{name} must have shape {shape}, got {m.shape}')
    _check_finite(m, name)
    return m


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ClObserverShapeError(f'cannot add shapes {a.shape} and {b.shape}')
    return _checked(a + b, 'sum')


def scale(a: np.ndarray, factor: float) -> np.ndarray:
    return _checked(np.asarray(a, dtype=np.float64) * float(factor), 'scaled array')


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix-matrix or matrix-vector product with a dimension check."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ClObserverShapeError(f'cannot multiply shapes {a.shape} and {b.shape}')
    return _checked(a @ b, 'product')


def transpose(a: np.ndarray) -> Mat:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ClObserverShapeError(f'transpose needs a 2-D array, got shape {a.shape}')
    return a.T.copy()


def symmetrize(a: np.ndarray) -> Mat:
    a = _square(a, 'matrix')
    return 0.5 * (a + a.T)


def frobenius_norm(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def norm2(a: np.ndarray) -> float:
    """Euclidean norm of a vector, spectral norm of a matrix."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim <= 1:
        return float(np.linalg.norm(a))
    if a.ndim != 2:
        raise ClObserverShapeError(f'norm2 needs a vector or a matrix, got shape {a.shape}')
    return float(np.linalg.norm(a, 2))


def symmetric_eigenvalues(g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending.

    ``g`` is either one ``(n, n)`` matrix or a batch ``(B, n, n)``; the result
    is ``(n,)`` or ``(B, n)`` accordingly. Cyclic Jacobi sweeps run until the
    off-diagonal Frobenius norm of every matrix in the batch is below
    ``1e-12`` times its Frobenius norm, with at most 100 sweeps.
    An off-diagonal entry below machine epsilon times its two diagonal
    magnitudes is zeroed without a rotation.
    """
    batch = np.array(g, dtype=np.float64, copy=True)
    single = batch.ndim == 2
    if single:
        batch = batch[np.newaxis]
    if batch.ndim != 3 or batch.shape[1] != batch.shape[2]:
        raise ClObserverShapeError(f'expected square matrices, got shape {np.shape(g)}')
    if batch.shape[1] > MAX_DIMENSION:
        raise ClObserverShapeError(
            f'matrices larger than {MAX_DIMENSION}x{MAX_DIMENSION} are not supported')
    _check_finite(batch, 'matrix')
    _check_symmetric(batch)

    batch = 0.5 * (batch + np.swapaxes(batch, 1, 2))
    _jacobi_rotate(batch)
    eigenvalues = np.sort(np.diagonal(batch, axis1=1, axis2=2), axis=-1)
    return eigenvalues[0] if single else eigenvalues


def min_singular_value(g: np.ndarray) -> float:
    """Smallest singular value of a symmetric PSD matrix, clamped at zero.

    On symmetric PSD input the singular values are the eigenvalues, so this is
    also the λ_min used by the full-rank test.
    """
    return float(min_singular_values(np.asarray(g, dtype=np.float64)[np.newaxis])[0])


def min_singular_values(batch: np.ndarray) -> np.ndarray:
    """Batched :func:`min_singular_value` over a ``(B, n, n)`` array."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 3:
        raise ClObserverShapeError(f'expected a (B, n, n) batch, got shape {batch.shape}')
    if batch.shape[0] == 0:
        return np.zeros(0)
    smallest = symmetric_eigenvalues(batch)[:, 0]
    norms = np.sqrt(np.sum(batch * batch, axis=(1, 2)))
    if np.any(smallest < -PSD_SLACK * norms):
        raise ClObserverShapeError('matrix is not positive semidefinite')
    return np.maximum(smallest, 0.0)


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solves ``a @ x = b`` for symmetric positive definite ``a``.

    ``b`` may be a vector or a matrix with ``a.shape[0]`` rows. A matrix whose
    smallest eigenvalue is below ``1e-12`` times its largest is treated as
    singular.
    """
    a = _square(a, 'a')
    b = np.asarray(b, dtype=np.float64)
    if b.ndim not in (1, 2) or b.shape[0] != a.shape[0]:
        raise ClObserverShapeError(f'right-hand side shape {b.shape} does not match {a.shape}')
    _check_finite(b, 'b')

    eigenvalues = symmetric_eigenvalues(a)
    if eigenvalues[0] <= SOLVE_RCOND * abs(eigenvalues[-1]):
        raise ClObserverSingularMatrixError(
            f'matrix is singular within tolerance (eigenvalues {eigenvalues[0]:.3e}..{eigenvalues[-1]:.3e})')
    try:
        factor = scipy.linalg.cho_factor(symmetrize(a), lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise ClObserverSingularMatrixError(str(e)) from e
    return _checked(scipy.linalg.cho_solve(factor, b, check_finite=False), 'solution')


def _jacobi_rotate(batch: np.ndarray) -> None:
    n = batch.shape[-1]
    if n < 2:
        return
    off_mask = ~np.eye(n, dtype=bool)
    limits = JACOBI_TOLERANCE * np.sqrt(np.sum(batch * batch, axis=(1, 2)))
    pairs = list(combinations(range(n), 2))

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.where(off_mask, batch, 0.0) ** 2, axis=(1, 2)))
        if np.all(off <= limits):
            return
        for p, q in pairs:
            apq = batch[:, p, q]
            nonzero = apq != 0.0
            if not np.any(nonzero):
                continue
            diagonal = np.abs(batch[:, p, p]) + np.abs(batch[:, q, q])
            rotate = np.abs(apq) > JACOBI_NEGLIGIBLE * diagonal
            theta = (batch[:, q, q] - batch[:, p, p]) / (2.0 * np.where(rotate, apq, 1.0))
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(rotate, t, 0.0)
            c = (1.0 / np.sqrt(t * t + 1.0))[:, np.newaxis]
            s = t[:, np.newaxis] * c

            col_p, col_q = batch[:, :, p].copy(), batch[:, :, q].copy()
            batch[:, :, p] = c * col_p - s * col_q
            batch[:, :, q] = s * col_p + c * col_q
            row_p, row_q = batch[:, p, :].copy(), batch[:, q, :].copy()
            batch[:, p, :] = c * row_p - s * row_q
            batch[:, q, :] = s * row_p + c * row_q
            batch[nonzero, p, q] = 0.0
            batch[nonzero, q, p] = 0.0


def _square(a: np.ndarray, name: str) -> Mat:
    a = as_matrix(a, name=name)
    if a.shape[0] != a.shape[1]:
        raise ClObserverShapeError(f'{name} must be square, got shape {a.shape}')
    return a


def _check_symmetric(batch: np.ndarray) -> None:
    asymmetry = np.sqrt(np.sum((batch - np.swapaxes(batch, 1, 2)) ** 2, axis=(1, 2)))
    norms = np.sqrt(np.sum(batch * batch, axis=(1, 2)))
    if np.any(asymmetry > SYMMETRY_TOLERANCE * norms):
        raise ClObserverShapeError('matrix is not symmetric within tolerance')


def _check_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ClObserverNonFiniteError(f'{name} has non-finite entries')


def _checked(a: np.ndarray, name: str) -> np.ndarray:
    _check_finite(a, name)
    return a
