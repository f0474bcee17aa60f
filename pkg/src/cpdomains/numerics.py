"""Dense complex matrix kernels and subspace arithmetic.

Conventions used throughout the package:

* Matrices are flattened row-major (numpy's default ``reshape``).  Under this
  convention ``vec(P @ a @ Q) == np.kron(P, Q.T) @ vec(a)``; see
  :func:`sandwich_matrix`.
* A subspace of ``rows x cols`` matrices is stored as an orthonormal basis
  with respect to the Frobenius inner product ``tr(A^* B)``.
* Rank decisions are relative to the largest singular value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "InvalidInputError",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "OperatorSubspace",
    "SubspaceComparison",
    "vec",
    "unvec",
    "sandwich_matrix",
    "matrix_units",
    "linear_map_matrix",
    "hermitian_eig",
    "numerical_rank",
    "orthonormalize",
    "null_space",
    "subspace_compare",
    "intersect",
    "span_of",
    "opnorm",
]


class InvalidInputError(ValueError):
    """Raised when an argument has the wrong shape or violates a precondition."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every algorithm.

    rank_rtol:
        relative singular/eigenvalue cutoff for rank decisions.
    residual_atol:
        absolute bound on operator-norm residuals of identities.
    angle_tol:
        largest sine of a principal angle still counted as "equal".
    """

    rank_rtol: float = 1e-10
    residual_atol: float = 1e-8
    angle_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rtol", "residual_atol", "angle_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be strictly positive, got {value!r}")

    def as_dict(self) -> dict:
        return {
            "rank_rtol": self.rank_rtol,
            "residual_atol": self.residual_atol,
            "angle_tol": self.angle_tol,
        }


DEFAULT_TOLERANCES = Tolerances()


def _as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def opnorm(m) -> float:
    """Spectral norm; 0 for empty matrices."""
    a = np.asarray(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def vec(a) -> np.ndarray:
    """Row-major flattening."""
    return np.asarray(a).reshape(-1)


def unvec(v, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape(rows, cols)


def sandwich_matrix(P, Q) -> np.ndarray:
    """Matrix of ``a -> P a Q`` acting on row-major vectorizations."""
    P = _as_matrix(P, "P")
    Q = _as_matrix(Q, "Q")
    return np.kron(P, Q.T)


def matrix_units(rows: int, cols: int) -> np.ndarray:
    """All matrix units ``E_ij`` in row-major order, shape ``(rows*cols, rows, cols)``."""
    return np.eye(rows * cols, dtype=complex).reshape(rows * cols, rows, cols)


def linear_map_matrix(func: Callable[[np.ndarray], np.ndarray], rows: int, cols: int) -> np.ndarray:
    """Matrix of a linear map on ``rows x cols`` matrices, built column by column.

    ``func`` may return an array of any fixed shape; it is flattened.
    """
    columns = [np.asarray(func(e), dtype=complex).reshape(-1) for e in matrix_units(rows, cols)]
    if not columns:
        return np.zeros((0, 0), dtype=complex)
    return np.stack(columns, axis=1)


def _phase_normalize(vectors: np.ndarray, atol: float) -> np.ndarray:
    """Rotate each column so that its first non-negligible entry is positive real."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.flatnonzero(np.abs(col) > atol * max(1.0, np.abs(col).max()))
        if big.size:
            z = col[big[0]]
            out[:, j] = col * (np.conj(z) / abs(z))
    return out


def hermitian_eig(m, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix with reproducible output.

    Returns ascending eigenvalues and a unitary whose columns are the
    eigenvectors.  Each eigenvector is phase-normalized (first significant
    entry positive real) and, within a cluster of numerically equal
    eigenvalues, columns are sorted lexicographically by their entries.
    """
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"hermitian_eig needs a square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    if opnorm(a - a.conj().T) > tol.residual_atol:
        raise InvalidInputError("hermitian_eig needs a Hermitian matrix")
    a = (a + a.conj().T) / 2
    w, U = np.linalg.eigh(a)
    U = _phase_normalize(U, tol.rank_rtol)

    scale = max(float(np.abs(w).max()), np.finfo(float).tiny)
    order = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol.rank_rtol * scale:
            group = list(range(start, i))
            if len(group) > 1:
                keys = [tuple(np.round(np.concatenate([U[:, j].real, U[:, j].imag]), 12)) for j in group]
                group = [g for _, g in sorted(zip(keys, group), reverse=True)]
            order.extend(group)
            start = i
    return w[order], U[:, order]


def _singular_values(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def numerical_rank(a, rtol: float) -> int:
    s = _singular_values(np.asarray(a))
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def orthonormalize(vectors, rtol: float) -> np.ndarray:
    """Orthonormal basis (as columns) for the span of the given columns.

    Rank-revealing SVD followed by one QR re-orthogonalization pass.
    """
    a = np.asarray(vectors, dtype=complex)
    if a.ndim != 2:
        raise InvalidInputError("orthonormalize expects a 2-D array of column vectors")
    if a.shape[1] == 0 or a.shape[0] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    r = int(np.count_nonzero(s > rtol * s[0]))
    Q, R = np.linalg.qr(U[:, :r])
    # keep the SVD orientation; QR only removes the last bits of non-orthogonality
    return Q * np.sign(np.diag(R))


@dataclass(frozen=True, eq=False)
class OperatorSubspace:
    """A complex subspace of ``rows x cols`` matrices with an orthonormal basis."""

    rows: int
    cols: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex).reshape(-1, self.rows, self.cols)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_columns(cls, Q: np.ndarray, rows: int, cols: int) -> "OperatorSubspace":
        """Wrap orthonormal columns of length ``rows*cols``."""
        Q = np.asarray(Q, dtype=complex)
        return cls(rows, cols, Q.T.reshape(-1, rows, cols))

    @classmethod
    def zero(cls, rows: int, cols: int) -> "OperatorSubspace":
        return cls(rows, cols, np.zeros((0, rows, cols), dtype=complex))

    @classmethod
    def full(cls, rows: int, cols: int) -> "OperatorSubspace":
        return cls(rows, cols, matrix_units(rows, cols))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def columns(self) -> np.ndarray:
        """Basis as orthonormal columns in the vectorized ambient space."""
        return self.basis.reshape(self.dim, self.rows * self.cols).T

    def projector(self) -> np.ndarray:
        Q = self.columns
        return Q @ Q.conj().T

    def project(self, a) -> np.ndarray:
        Q = self.columns
        v = vec(a)
        return unvec(Q @ (Q.conj().T @ v), self.rows, self.cols)

    def distance(self, a) -> float:
        """Frobenius distance from ``a`` to the subspace."""
        return float(np.linalg.norm(np.asarray(a) - self.project(a)))

    def contains(self, a, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        a = np.asarray(a, dtype=complex)
        return self.distance(a) <= tol.angle_tol * max(1.0, float(np.linalg.norm(a)))

    def adjoint(self) -> "OperatorSubspace":
        """``{a^* : a in S}``, again a complex subspace."""
        return OperatorSubspace(self.cols, self.rows, np.conj(np.transpose(self.basis, (0, 2, 1))))

    def orthogonality_defect(self) -> float:
        Q = self.columns
        if Q.shape[1] == 0:
            return 0.0
        return float(np.abs(Q.conj().T @ Q - np.eye(Q.shape[1])).max())


def span_of(mats: Iterable, rows: int, cols: int, tol: Tolerances = DEFAULT_TOLERANCES) -> OperatorSubspace:
    """Orthonormal subspace spanned by a collection of matrices."""
    mats = [np.asarray(m, dtype=complex).reshape(rows, cols) for m in mats]
    if not mats:
        return OperatorSubspace.zero(rows, cols)
    cols_ = np.stack([vec(m) for m in mats], axis=1)
    return OperatorSubspace.from_columns(orthonormalize(cols_, tol.rank_rtol), rows, cols)


def _compress_rows(blocks: Iterable[np.ndarray], ncols: int) -> np.ndarray:
    """Triangular factor R with ``R^* R = L^* L`` for ``L = vstack(blocks)``.

    Blocks are folded in one at a time so ``L`` never has to be held in memory.
    """
    R = np.zeros((0, ncols), dtype=complex)
    pending: list[np.ndarray] = []
    pending_rows = 0
    for block in blocks:
        block = np.asarray(block, dtype=complex).reshape(-1, ncols)
        if block.shape[0] == 0:
            continue
        pending.append(block)
        pending_rows += block.shape[0]
        if pending_rows >= 20000:
            R = np.linalg.qr(np.vstack([R, *pending]), mode="r")
            pending, pending_rows = [], 0
    if pending:
        stacked = np.vstack([R, *pending])
        R = np.linalg.qr(stacked, mode="r") if stacked.shape[0] > ncols else stacked
    return R


def null_space(
    L, rows: int, cols: int, tol: Tolerances = DEFAULT_TOLERANCES, scale: float | None = None
) -> OperatorSubspace:
    """Kernel of a linear map on vectorized ``rows x cols`` matrices.

    ``L`` is either a matrix with ``rows*cols`` columns or an iterable of row
    blocks of it (stacked lazily).  A vector counts as in the kernel when
    ``|L v| <= rank_rtol * max(sigma_max(L), scale) * |v|``.

    When ``L`` is a difference of terms that may cancel exactly, pass the size
    of those terms as ``scale``; otherwise rounding noise in an all-but-zero
    ``L`` would be mistaken for rank.
    """
    n = rows * cols
    if isinstance(L, np.ndarray):
        if L.ndim != 2 or L.shape[1] != n:
            raise InvalidInputError(f"linear map has shape {L.shape}, expected (*, {n})")
        R = L.astype(complex, copy=False)
    else:
        R = _compress_rows(_checked_blocks(L, n), n)
    if n == 0:
        return OperatorSubspace.zero(rows, cols)
    if R.shape[0] == 0:
        return OperatorSubspace.full(rows, cols)
    _, s, Vh = np.linalg.svd(R, full_matrices=True)
    ref = max(float(s[0]) if s.size else 0.0, 0.0 if scale is None else float(scale))
    if ref == 0:
        return OperatorSubspace.full(rows, cols)
    rank = int(np.count_nonzero(s > tol.rank_rtol * ref))
    kernel = Vh[rank:].conj().T
    if kernel.shape[1]:
        Q, Rq = np.linalg.qr(kernel)
        kernel = Q * np.sign(np.diag(Rq))
    return OperatorSubspace.from_columns(kernel, rows, cols)


def _checked_blocks(blocks, n):
    for b in blocks:
        b = np.asarray(b)
        if b.ndim != 2 or b.shape[1] != n:
            raise InvalidInputError(f"row block has shape {b.shape}, expected (*, {n})")
        yield b


@dataclass(frozen=True)
class SubspaceComparison:
    equal: bool
    contains_1_in_2: bool
    contains_2_in_1: bool
    max_angle_sine: float
    dims: tuple[int, int]
    sine_1_in_2: float = 0.0
    sine_2_in_1: float = 0.0

    def as_dict(self) -> dict:
        return {
            "equal": self.equal,
            "contains_1_in_2": self.contains_1_in_2,
            "contains_2_in_1": self.contains_2_in_1,
            "max_angle_sine": self.max_angle_sine,
            "dims": list(self.dims),
            "sine_1_in_2": self.sine_1_in_2,
            "sine_2_in_1": self.sine_2_in_1,
        }


def _containment_residual(Q1: np.ndarray, Q2: np.ndarray) -> float:
    """Spectral norm of the part of span(Q1) outside span(Q2)."""
    if Q1.shape[1] == 0:
        return 0.0
    resid = Q1 - Q2 @ (Q2.conj().T @ Q1)
    return min(1.0, opnorm(resid))


def subspace_compare(S1: OperatorSubspace, S2: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES) -> SubspaceComparison:
    """Containment in both directions and the largest principal-angle sine."""
    if S1.shape != S2.shape:
        raise InvalidInputError(f"ambient shapes differ: {S1.shape} vs {S2.shape}")
    r12 = _containment_residual(S1.columns, S2.columns)
    r21 = _containment_residual(S2.columns, S1.columns)
    c12 = r12 <= tol.angle_tol
    c21 = r21 <= tol.angle_tol
    return SubspaceComparison(
        equal=bool(c12 and c21 and S1.dim == S2.dim),
        contains_1_in_2=bool(c12),
        contains_2_in_1=bool(c21),
        max_angle_sine=float(max(r12, r21)),
        dims=(S1.dim, S2.dim),
        sine_1_in_2=float(r12),
        sine_2_in_1=float(r21),
    )


def intersect(S1: OperatorSubspace, S2: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES) -> OperatorSubspace:
    """``S1 ∩ S2`` as the kernel of the stacked complement projectors."""
    if S1.shape != S2.shape:
        raise InvalidInputError(f"ambient shapes differ: {S1.shape} vs {S2.shape}")
    n = S1.rows * S1.cols
    eye = np.eye(n)
    L = np.vstack([eye - S1.projector(), eye - S2.projector()])
    return null_space(L, S1.rows, S1.cols, tol)
