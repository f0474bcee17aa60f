"""Completely positive maps ``M_n -> L(C^h)`` and their minimal Stinespring dilations.

A map is stored through its Choi matrix

    C = sum_ij E_ij (x) phi(E_ij),

so the ``h x h`` block in position ``(i, j)`` is ``phi(E_ij)``.  The
representation ``a -> a (x) I_r`` of a dilation is implicit and never stored.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import (
    DEFAULT_TOLERANCES,
    InvalidInputError,
    Tolerances,
    hermitian_eig,
    matrix_units,
    numerical_rank,
    opnorm,
    orthonormalize,
)

__all__ = [
    "CPMap",
    "Dilation",
    "NotCompletelyPositiveError",
    "DegenerateDilationError",
    "UnitalFallbackWarning",
    "from_action",
    "from_choi",
    "from_kraus",
    "apply",
    "is_completely_positive",
    "is_unital",
    "is_contractive",
    "is_pure",
    "choi_rank",
    "norm",
    "minimal_stinespring",
    "random_cpmap",
    "pi",
]


class NotCompletelyPositiveError(ValueError):
    """The Choi matrix has a significantly negative eigenvalue."""

    def __init__(self, eigenvalue: float, message: str | None = None):
        self.eigenvalue = float(eigenvalue)
        super().__init__(message or f"Choi matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")


class DegenerateDilationError(ValueError):
    """The zero map has no dilation with r >= 1; use the definitional algorithms."""


class UnitalFallbackWarning(UserWarning):
    """``random_cpmap`` could not make the map unital and normalized it to be contractive instead."""


def _choi_from_blocks(blocks: np.ndarray) -> np.ndarray:
    n, _, h, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(n * h, n * h)


def _blocks_from_choi(choi: np.ndarray, n: int, h: int) -> np.ndarray:
    return choi.reshape(n, h, n, h).transpose(0, 2, 1, 3)


def _choi_violation(choi: np.ndarray, tol: Tolerances) -> float | None:
    """Offending eigenvalue if the Choi matrix is not PSD, else ``None``."""
    if choi.size == 0:
        return None
    w = np.linalg.eigvalsh((choi + choi.conj().T) / 2)
    scale = float(np.abs(w).max())
    if w[0] < -tol.rank_rtol * scale:
        return float(w[0])
    return None


@dataclass(frozen=True, eq=False)
class CPMap:
    """A completely positive map ``M_n -> L(C^h)`` held as its Choi matrix.

    Construction validates that the Choi matrix is Hermitian and positive
    semidefinite; use :func:`from_action`, :func:`from_choi` or
    :func:`from_kraus` rather than calling this directly.
    """

    n: int
    h: int
    choi: np.ndarray = field(repr=False)
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.h < 1:
            raise InvalidInputError(f"dimensions must be positive, got n={self.n}, h={self.h}")
        choi = np.array(self.choi, dtype=complex)
        d = self.n * self.h
        if choi.shape != (d, d):
            raise InvalidInputError(f"Choi matrix must be {d}x{d}, got {choi.shape}")
        if opnorm(choi - choi.conj().T) > self.tol.residual_atol:
            raise InvalidInputError("Choi matrix is not Hermitian (the map does not preserve adjoints)")
        bad = _choi_violation(choi, self.tol)
        if bad is not None:
            raise NotCompletelyPositiveError(bad)
        choi = (choi + choi.conj().T) / 2
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)
        blocks = _blocks_from_choi(choi, self.n, self.h)
        blocks.setflags(write=False)
        object.__setattr__(self, "_blocks", blocks)

    @property
    def blocks(self) -> np.ndarray:
        """``phi(E_ij)`` as an array of shape ``(n, n, h, h)``."""
        return self._blocks

    def __call__(self, a) -> np.ndarray:
        return apply(self, a)

    def image(self, i: int, j: int) -> np.ndarray:
        return self._blocks[i, j]

    def with_tolerances(self, tol: Tolerances) -> "CPMap":
        return CPMap(self.n, self.h, self.choi, tol)


def from_choi(n: int, h: int, choi, tol: Tolerances = DEFAULT_TOLERANCES) -> CPMap:
    return CPMap(n, h, np.asarray(choi, dtype=complex), tol)


def from_action(images: Sequence, tol: Tolerances = DEFAULT_TOLERANCES) -> CPMap:
    """Build a map from the images of the matrix units, row-major over ``(i, j)``."""
    imgs = [np.asarray(m, dtype=complex) for m in images]
    n = int(round(np.sqrt(len(imgs))))
    if n < 1 or n * n != len(imgs):
        raise InvalidInputError(f"need n^2 images, got {len(imgs)}")
    h = imgs[0].shape[0] if imgs[0].ndim == 2 else -1
    for m in imgs:
        if m.shape != (h, h):
            raise InvalidInputError(f"every image must be {h}x{h}, got {m.shape}")
    blocks = np.stack(imgs).reshape(n, n, h, h)
    return CPMap(n, h, _choi_from_blocks(blocks), tol)


def from_kraus(kraus: Sequence, tol: Tolerances = DEFAULT_TOLERANCES) -> CPMap:
    """``phi(a) = sum_k K_k a K_k^*`` with each ``K_k`` of shape ``h x n``."""
    K = np.asarray(kraus, dtype=complex)
    if K.ndim != 3 or K.shape[0] == 0:
        raise InvalidInputError("expected a non-empty list of h x n Kraus operators")
    _, h, n = K.shape
    # block (i, j) = sum_k K[:, i] K[:, j]^*
    blocks = np.einsum("kai,kbj->ijab", K, K.conj())
    return CPMap(n, h, _choi_from_blocks(blocks), tol)


def apply(phi: CPMap, a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (phi.n, phi.n):
        raise InvalidInputError(f"argument must be {phi.n}x{phi.n}, got {a.shape}")
    return np.einsum("ij,ijab->ab", a, phi.blocks)


def is_completely_positive(choi_or_map, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Choi criterion; accepts a :class:`CPMap` or a bare Choi matrix."""
    choi = choi_or_map.choi if isinstance(choi_or_map, CPMap) else np.asarray(choi_or_map, dtype=complex)
    if choi.ndim != 2 or choi.shape[0] != choi.shape[1]:
        return False
    if opnorm(choi - choi.conj().T) > tol.residual_atol:
        return False
    return _choi_violation(choi, tol) is None


def is_unital(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    return opnorm(apply(phi, np.eye(phi.n)) - np.eye(phi.h)) <= tol.residual_atol


def is_contractive(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    # for CP maps the norm is attained at the identity
    return norm(phi) <= 1 + tol.residual_atol


def norm(phi: CPMap) -> float:
    """``|phi| = lambda_max(phi(I))``."""
    return float(np.linalg.eigvalsh(apply(phi, np.eye(phi.n)))[-1])


def choi_rank(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    w = np.linalg.eigvalsh(phi.choi)
    if w[-1] <= 0:
        return 0
    return int(np.count_nonzero(w > tol.rank_rtol * w[-1]))


def is_pure(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Choi rank one, i.e. a single Kraus operator."""
    return choi_rank(phi, tol) == 1


def pi(a, r: int) -> np.ndarray:
    """The dilating representation ``a -> a (x) I_r``."""
    return np.kron(np.asarray(a), np.eye(r))


@dataclass(frozen=True, eq=False)
class Dilation:
    """Minimal Stinespring data ``phi(a) = V^* (a (x) I_r) V``.

    ``V`` has shape ``(n*r, h)`` with rows indexed by ``(i, k) -> i*r + k``;
    ``kraus[k]`` is ``h x n`` and ``phi(a) = sum_k K_k a K_k^*``.
    """

    n: int
    h: int
    r: int
    V: np.ndarray = field(repr=False)
    kraus: np.ndarray = field(repr=False)

    def pi(self, a) -> np.ndarray:
        return pi(a, self.r)

    def compress(self, a) -> np.ndarray:
        """``V^* (a (x) I_r) V``."""
        return self.V.conj().T @ self.pi(a) @ self.V

    @property
    def range_projector(self) -> np.ndarray:
        """``V V^*`` on ``C^n (x) C^r``."""
        return self.V @ self.V.conj().T

    def reconstruction_residual(self, phi: CPMap) -> float:
        worst = 0.0
        for idx, e in enumerate(matrix_units(self.n, self.n)):
            i, j = divmod(idx, self.n)
            worst = max(worst, opnorm(self.compress(e) - phi.blocks[i, j]))
        return worst

    def kraus_residual(self, phi: CPMap) -> float:
        worst = 0.0
        for idx, e in enumerate(matrix_units(self.n, self.n)):
            i, j = divmod(idx, self.n)
            img = sum(K @ e @ K.conj().T for K in self.kraus)
            worst = max(worst, opnorm(img - phi.blocks[i, j]))
        return worst

    def minimality_dimension(self, rtol: float = DEFAULT_TOLERANCES.rank_rtol) -> int:
        """``dim span{(E_ij (x) I_r) V e_l}``; equals ``n*r`` for a minimal dilation."""
        vectors = [self.pi(e) @ self.V for e in matrix_units(self.n, self.n)]
        if not vectors:
            return 0
        return orthonormalize(np.hstack(vectors), rtol).shape[1]


def minimal_stinespring(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES, order: str = "descending") -> Dilation:
    """Minimal dilation read off the spectral decomposition of the Choi matrix.

    Each eigenpair ``(lam, v)`` above the rank cutoff gives a Kraus operator
    ``K[a, i] = sqrt(lam) v[i*h + a]``.  Eigenvectors are orthogonal, so the
    Kraus operators are linearly independent and the dilation is minimal.
    ``order`` ("descending" or "ascending" in eigenvalue) only permutes the
    ancilla basis.
    """
    if order not in ("descending", "ascending"):
        raise InvalidInputError(f"unknown order {order!r}")
    w, U = hermitian_eig(phi.choi, tol)
    if w.size == 0 or w[-1] <= 0:
        raise DegenerateDilationError(
            "the zero map has no minimal dilation with r >= 1; use the definitional algorithms"
        )
    keep = np.flatnonzero(w > tol.rank_rtol * w[-1])
    if order == "descending":
        keep = keep[::-1]
    n, h = phi.n, phi.h
    kraus = np.stack([np.sqrt(w[k]) * U[:, k].reshape(n, h).T for k in keep])
    r = kraus.shape[0]
    # V xi = sum_k (K_k^* xi) (x) e_k
    V = np.einsum("kai->ika", kraus.conj()).reshape(n * r, h)
    return Dilation(n=n, h=h, r=r, V=V, kraus=kraus)


def _ginibre(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_cpmap(
    n: int,
    h: int,
    choi_rank: int,
    normalization: str = "raw",
    seed: int | np.random.Generator = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CPMap:
    """Seeded random CP map with Gaussian Kraus operators.

    normalization:
        ``"raw"`` keeps the Gaussian Kraus operators, ``"contractive"``
        rescales so that ``lambda_max(phi(I)) = 1``, ``"unital"`` conjugates by
        ``phi(I)^{-1/2}`` so that ``phi(I) = I``.  When ``phi(I)`` is singular
        the unital request falls back to contractive and emits
        :class:`UnitalFallbackWarning`.
    """
    if not 1 <= choi_rank <= n * h:
        raise InvalidInputError(f"choi_rank must lie in [1, {n * h}], got {choi_rank}")
    if normalization not in ("raw", "contractive", "unital"):
        raise InvalidInputError(f"unknown normalization {normalization!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        K = _ginibre(rng, choi_rank, h, n)
        # Gaussian Kraus operators are almost surely independent; redraw otherwise
        if numerical_rank(K.reshape(choi_rank, -1), tol.rank_rtol) == choi_rank:
            break
    P = np.einsum("kai,kbi->ab", K, K.conj())
    w, U = np.linalg.eigh(P)
    if normalization == "unital":
        if w[0] > tol.rank_rtol * w[-1]:
            K = np.einsum("ab,kbi->kai", (U / np.sqrt(w)) @ U.conj().T, K)
        else:
            warnings.warn(
                f"phi(I) is singular for n={n}, h={h}, rank={choi_rank}; normalized to contractive instead",
                UnitalFallbackWarning,
                stacklevel=2,
            )
            normalization = "contractive"
    if normalization == "contractive":
        K = K / np.sqrt(w[-1])
    return from_kraus(K, tol)
