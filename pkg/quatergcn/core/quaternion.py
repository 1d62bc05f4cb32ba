"""Quaternion scalars, dense quaternion matrices and their Hermitian eigensolver.

Matrices are stored struct-of-arrays: four real ``numpy`` matrices holding the
real part and the ``i``, ``j``, ``k`` parts. The same Hamilton basis table
(:func:`hamilton`) drives scalar products, matrix products and the four-channel
layers of the training engine.
"""

import operator
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import NotHermitianError, QuaterGCNError, ShapeError

Components = Tuple[Any, Any, Any, Any]


def hamilton(a: Sequence[Any], b: Sequence[Any], mul: Callable[[Any, Any], Any] = operator.mul) -> Components:
    """Hamilton product of two quaternions given by their four components.

    ``mul`` combines one component of ``a`` with one of ``b``; passing
    ``np.matmul`` or ``torch.matmul`` lifts the product to matrices, in which
    case the operand order is preserved (``a`` on the left).
    """
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    r = mul(a0, b0) - mul(a1, b1) - mul(a2, b2) - mul(a3, b3)
    i = mul(a0, b1) + mul(a1, b0) + mul(a2, b3) - mul(a3, b2)
    j = mul(a0, b2) - mul(a1, b3) + mul(a2, b0) + mul(a3, b1)
    k = mul(a0, b3) + mul(a1, b2) - mul(a2, b1) + mul(a3, b0)
    return r, i, j, k


@dataclass(frozen=True)
class Quaternion:
    """A quaternion ``r + i*i1 + j*i2 + k*i3``."""

    r: float = 0.0
    i1: float = 0.0
    i2: float = 0.0
    i3: float = 0.0

    @property
    def components(self) -> Tuple[float, float, float, float]:
        return (self.r, self.i1, self.i2, self.i3)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(*(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "Quaternion":
        return Quaternion(*(-a for a in self.components))

    def __mul__(self, other: Any) -> "Quaternion":
        if isinstance(other, Quaternion):
            return qmul(self, other)
        return Quaternion(*(a * other for a in self.components))

    __rmul__ = __mul__

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.r, -self.i1, -self.i2, -self.i3)

    def norm2(self) -> float:
        return sum(a * a for a in self.components)

    def __str__(self) -> str:
        return f"{self.r} + i{self.i1} + j{self.i2} + k{self.i3}"


def qmul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a * b`` (non-commutative)."""
    return Quaternion(*hamilton(a.components, b.components))


def _frozen(array: Any) -> np.ndarray:
    out = np.array(array, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class QMatrix:
    """Dense quaternion matrix ``Q = comp0 + i comp1 + j comp2 + k comp3``."""

    comp0: np.ndarray
    comp1: np.ndarray
    comp2: np.ndarray
    comp3: np.ndarray

    def __post_init__(self) -> None:
        arrays = [_frozen(c) for c in (self.comp0, self.comp1, self.comp2, self.comp3)]
        shape = arrays[0].shape
        if len(shape) != 2 or any(a.shape != shape for a in arrays):
            raise ShapeError(f"component shapes differ or are not 2-D: {[a.shape for a in arrays]}")
        for name, array in zip(("comp0", "comp1", "comp2", "comp3"), arrays):
            object.__setattr__(self, name, array)

    @classmethod
    def from_components(cls, components: Sequence[Any]) -> "QMatrix":
        return cls(*components)

    @classmethod
    def from_real(cls, real: Any) -> "QMatrix":
        real = np.asarray(real, dtype=np.float64)
        if real.ndim == 1:
            real = real.reshape(-1, 1)
        zero = np.zeros_like(real)
        return cls(real, zero, zero, zero)

    @classmethod
    def from_complex(cls, matrix: Any) -> "QMatrix":
        """Embed a complex matrix as ``Re + i Im`` with zero ``j``/``k`` parts."""
        matrix = np.asarray(matrix, dtype=np.complex128)
        zero = np.zeros(matrix.shape)
        return cls(matrix.real, matrix.imag, zero, zero)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QMatrix":
        return cls.from_real(np.zeros((rows, cols)))

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls.from_real(np.eye(n))

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[Quaternion]]) -> "QMatrix":
        comps = np.array([[q.components for q in row] for row in entries], dtype=np.float64)
        return cls(*np.moveaxis(comps, -1, 0))

    @property
    def components(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.comp0, self.comp1, self.comp2, self.comp3)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.comp0.shape

    @property
    def rows(self) -> int:
        return self.comp0.shape[0]

    @property
    def cols(self) -> int:
        return self.comp0.shape[1]

    def stacked(self) -> np.ndarray:
        """Components as one ``(4, rows, cols)`` array (writable copy)."""
        return np.stack(self.components)

    def entry(self, u: int, v: int) -> Quaternion:
        return Quaternion(*(float(c[u, v]) for c in self.components))

    def column(self, v: int) -> "QMatrix":
        return QMatrix(*(c[:, v : v + 1] for c in self.components))

    def __add__(self, other: "QMatrix") -> "QMatrix":
        _require_same_shape(self, other)
        return QMatrix(*(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        _require_same_shape(self, other)
        return QMatrix(*(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "QMatrix":
        return QMatrix(*(-c for c in self.components))

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        return matmul(self, other)

    def scale(self, factor: Any) -> "QMatrix":
        """Multiply every component by a real scalar or a broadcastable real array."""
        return QMatrix(*(c * factor for c in self.components))

    def conjugate_transpose(self) -> "QMatrix":
        return conjugate_transpose(self)

    def norm(self) -> float:
        """Frobenius norm over all four components."""
        return float(np.sqrt(sum(np.sum(c * c) for c in self.components)))

    def max_abs_diff(self, other: "QMatrix") -> float:
        _require_same_shape(self, other)
        return float(max(np.max(np.abs(a - b), initial=0.0) for a, b in zip(self.components, other.components)))

    def allclose(self, other: "QMatrix", atol: float = 0.0) -> bool:
        return self.shape == other.shape and self.max_abs_diff(other) <= atol

    def __repr__(self) -> str:
        return f"QMatrix(rows={self.rows}, cols={self.cols})"


def _require_same_shape(a: QMatrix, b: QMatrix) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def _require_square(q: QMatrix) -> None:
    if q.rows != q.cols:
        raise ShapeError(f"expected a square matrix, got {q.shape}")


def matmul(a: QMatrix, b: QMatrix) -> QMatrix:
    """Quaternion matrix product as 16 real matrix products."""
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return QMatrix(*hamilton(a.components, b.components, np.matmul))


def conjugate_transpose(q: QMatrix) -> QMatrix:
    """``Q*``: transpose every component and negate the imaginary ones."""
    return QMatrix(q.comp0.T, -q.comp1.T, -q.comp2.T, -q.comp3.T)


def hermitian_deviation(q: QMatrix) -> Tuple[float, Optional[Tuple[int, int]]]:
    """Largest entrywise deviation between ``Q`` and ``Q*`` and where it occurs."""
    _require_square(q)
    qh = conjugate_transpose(q)
    worst, where = 0.0, None
    for a, b in zip(q.components, qh.components):
        diff = np.abs(a - b)
        if diff.size and diff.max() > worst:
            worst = float(diff.max())
            where = tuple(int(x) for x in np.unravel_index(int(np.argmax(diff)), diff.shape))
    return worst, where


def is_hermitian(q: QMatrix, tol: float = 0.0) -> bool:
    """True iff every component of ``Q - Q*`` is within ``tol`` in absolute value."""
    worst, _ = hermitian_deviation(q)
    return worst <= tol


def complex_adjoint(q: QMatrix) -> np.ndarray:
    """The ``2n x 2n`` complex adjoint ``[[Qa, Qb], [-conj(Qb), conj(Qa)]]``.

    Here ``Q = Qa + Qb j`` with ``Qa = comp0 + i comp1`` and ``Qb = comp2 + i comp3``.
    """
    _require_square(q)
    qa = q.comp0 + 1j * q.comp1
    qb = q.comp2 + 1j * q.comp3
    return np.block([[qa, qb], [-np.conj(qb), np.conj(qa)]])


def quadratic_form(q: QMatrix, x: QMatrix) -> Quaternion:
    """``x* Q x`` for a quaternion column vector ``x``."""
    return (conjugate_transpose(x) @ q @ x).entry(0, 0)


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Right eigenpairs of a Hermitian quaternion matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: QMatrix

    def reconstruct(self) -> QMatrix:
        """``U diag(eigenvalues) U*``."""
        u = self.eigenvectors
        return u.scale(self.eigenvalues[np.newaxis, :]) @ conjugate_transpose(u)


def _j_partner(w: np.ndarray) -> np.ndarray:
    # adjoint image of v*j for the vector v encoded by w = [x; y]
    n = w.shape[0] // 2
    x, y = w[:n], w[n:]
    return np.concatenate([np.conj(y), -np.conj(x)])


def _quaternion_basis(block: np.ndarray, count: int) -> np.ndarray:
    """Pick ``count`` vectors of a degenerate eigenspace that stay orthonormal
    after folding back to quaternions (each choice also removes its j-partner)."""
    basis = np.zeros((block.shape[0], 0), dtype=np.complex128)
    chosen = []
    for _ in range(count):
        residual = block - basis @ (basis.conj().T @ block)
        norms = np.linalg.norm(residual, axis=0)
        best = int(np.argmax(norms))
        w = residual[:, best] / norms[best]
        basis = np.column_stack([basis, w, _j_partner(w)])
        chosen.append(w)
    return np.column_stack(chosen)


def hermitian_eig(q: QMatrix, tol: float = 1e-10) -> EigenResult:
    """Right eigendecomposition of a Hermitian quaternion matrix.

    The complex adjoint is Hermitian with every eigenvalue doubled; the sorted
    adjoint spectrum is paired and every second value kept.
    """
    deviation, where = hermitian_deviation(q)
    if deviation > tol:
        raise NotHermitianError(
            f"matrix is not Hermitian: |Q - Q*| = {deviation:g} at {where}", index=where, deviation=deviation
        )

    n = q.rows
    if n == 0:
        return EigenResult(np.zeros(0), QMatrix.zeros(0, 0))

    chi = complex_adjoint(q)
    chi = 0.5 * (chi + chi.conj().T)
    values, vectors = linalg.eigh(chi)

    scale = max(q.norm(), 1.0)
    pair_tol = 1e-8 * scale
    gaps = np.abs(values[0::2] - values[1::2])
    if np.any(gaps > pair_tol):
        raise QuaterGCNError(f"adjoint spectrum is not paired (gap {gaps.max():g})")

    eigenvalues = values[0::2].copy()

    # group eigenvalue pairs that coincide so degenerate eigenspaces fold cleanly
    folded = np.zeros((2 * n, n), dtype=np.complex128)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and eigenvalues[stop] - eigenvalues[stop - 1] <= pair_tol:
            stop += 1
        block = vectors[:, 2 * start : 2 * stop]
        folded[:, start:stop] = _quaternion_basis(block, stop - start)
        start = stop

    x, y = folded[:n], folded[n:]
    eigenvectors = QMatrix(x.real, x.imag, -y.real, y.imag)
    return EigenResult(_frozen(eigenvalues), eigenvectors)
