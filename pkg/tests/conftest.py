"""Shared helpers and independent oracles.

The oracles below build defect matrices with plain loops over matrix units and
take kernels with ``scipy.linalg.null_space``; they share no code with the
package beyond applying the map.
"""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla

from cpdomains.cpmaps import CPMap, apply


def E(i: int, j: int, n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    e = np.zeros((n, m), dtype=complex)
    e[i, j] = 1.0
    return e


def units(n: int, m: int | None = None) -> list[np.ndarray]:
    m = n if m is None else m
    return [E(i, j, n, m) for i in range(n) for j in range(m)]


def oracle_kernel(rows: list[np.ndarray], dim: int, floor: float = 0.0, rtol: float = 1e-9) -> np.ndarray:
    """Orthonormal kernel columns of the stacked linear maps, by scipy.

    Singular values below ``rtol * max(sigma_max, floor)`` count as zero, so
    a defect that cancels up to rounding is not mistaken for rank.
    """
    L = np.vstack(rows) if rows else np.zeros((0, dim))
    if L.shape[0] == 0:
        return np.eye(dim, dtype=complex)
    s = sla.svdvals(L)
    ref = max(float(s[0]), floor)
    if ref == 0:
        return np.eye(dim, dtype=complex)
    return sla.null_space(L, rcond=rtol * ref / s[0]) if s[0] > rtol * ref else np.eye(dim, dtype=complex)


def _size(phi: CPMap) -> float:
    return max(1.0, float(np.linalg.norm(phi.choi, 2)))


def _column(f, basis):
    return np.stack([np.asarray(f(e)).reshape(-1) for e in basis], axis=1)


def oracle_mult_domain(phi: CPMap) -> np.ndarray:
    """Kernel of ``a -> phi(ab) - phi(a)phi(b)`` and the mirrored defects, over all units ``b``."""
    n = phi.n
    basis = units(n)
    rows = []
    for b in basis:
        rows.append(_column(lambda a: apply(phi, a @ b) - apply(phi, a) @ apply(phi, b), basis))
        rows.append(_column(lambda a: apply(phi, b @ a) - apply(phi, b) @ apply(phi, a), basis))
    return oracle_kernel(rows, n * n, _size(phi) ** 2)


def oracle_ternary_domain(phi: CPMap) -> np.ndarray:
    """Kernel of the three ternary defects in ``a`` over all units ``b, c``."""
    n = phi.n
    basis = units(n)
    f = lambda a: apply(phi, a)  # noqa: E731
    rows = []
    for b in basis:
        for c in basis:
            rows.append(_column(lambda a: f(b @ a @ c) - f(b @ a) @ f(c), basis))
            rows.append(_column(lambda a: f(b @ a @ c) - f(b) @ f(a @ c), basis))
            rows.append(_column(lambda a: f(b @ a @ c) - f(b) @ f(a) @ f(c), basis))
    return oracle_kernel(rows, n * n, _size(phi) ** 3)


def oracle_module_domain(Phi, phi: CPMap, p: int) -> np.ndarray:
    """Kernel of ``x -> Phi(x b) - Phi(x) phi(b)`` over all units ``b`` of ``M_n``."""
    n = phi.n
    basis = units(p, n)
    rows = [_column(lambda x: Phi(x @ b) - Phi(x) @ apply(phi, b), basis) for b in units(n)]
    return oracle_kernel(rows, p * n, _size(phi) ** 1.5)


def principal_sines(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal-angle sine between column spans, via scipy."""
    if A.shape[1] == 0 and B.shape[1] == 0:
        return 0.0
    if A.shape[1] != B.shape[1]:
        return 1.0
    return float(np.sin(sla.subspace_angles(A, B).max()))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
