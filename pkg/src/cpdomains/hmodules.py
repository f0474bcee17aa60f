"""The rectangular Hilbert module ``X = M_{p,n}`` over ``M_n`` and its phi-maps.

``<x, y> = x^* y``, the right action is matrix multiplication and the compact
operators ``K(X)`` are left multiplications by ``M_p``.  A phi-map is a linear
``Phi: X -> L(C^h, C^k)`` with ``Phi(x)^* Phi(y) = phi(<x, y>)``.

The canonical phi-map comes from the minimal dilation ``(a (x) I_r, V)`` of
``phi``: ``Phi(x) = E^* (x (x) I_r) V`` with ``E`` an orthonormal basis of
``span{(x (x) I_r) V xi}``.  Twisting by an isometry ``S`` gives ``S Phi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpmaps import CPMap, DegenerateDilationError, Dilation, apply, is_contractive, minimal_stinespring
from .domains import in_mult_domain
from .numerics import (
    DEFAULT_TOLERANCES,
    InvalidInputError,
    OperatorSubspace,
    Tolerances,
    linear_map_matrix,
    matrix_units,
    null_space,
    opnorm,
    orthonormalize,
    span_of,
    subspace_compare,
)
from .numerics import _compress_rows

__all__ = [
    "ModuleSpace",
    "PhiMapRealization",
    "theta",
    "canonical_phi_map",
    "twist_phi_map",
    "module_domain_def",
    "module_domain_stinespring",
    "module_domain_from_ideal",
    "gram_predicate",
    "ternary_residual",
    "contractive_cube_criterion",
    "brs_checks",
    "recover_isometry",
    "module_structure",
]


@dataclass(frozen=True)
class ModuleSpace:
    p: int
    n: int

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise InvalidInputError(f"module sizes must be positive, got p={self.p}, n={self.n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.p, self.n)

    def basis(self) -> np.ndarray:
        return matrix_units(self.p, self.n)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != self.shape:
            raise InvalidInputError(f"module element has shape {x.shape}, expected {self.shape}")
        return x

    @staticmethod
    def inner(x, y) -> np.ndarray:
        return np.asarray(x).conj().T @ np.asarray(y)

    def full_subspace(self) -> OperatorSubspace:
        return OperatorSubspace.full(self.p, self.n)


def theta(y, x) -> np.ndarray:
    """Matrix of the rank-one operator ``z -> y <x, z>``."""
    y = np.asarray(y, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if y.shape != x.shape or y.ndim != 2:
        raise InvalidInputError(f"theta needs two elements of the same module, got {y.shape} and {x.shape}")
    return y @ x.conj().T


@dataclass(frozen=True, eq=False)
class PhiMapRealization:
    """``Phi(x) = S E^* (x (x) I_r) V`` with ``S`` omitted for the canonical map."""

    phi: CPMap
    dilation: Dilation
    module: ModuleSpace
    embed: np.ndarray
    post_isometry: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.module.p

    @property
    def k(self) -> int:
        return self.embed.shape[1] if self.post_isometry is None else self.post_isometry.shape[0]

    @property
    def w(self) -> np.ndarray:
        """``W`` with ``Phi(x) = W^* (x (x) I_r) V``; a (p r) x k partial isometry."""
        if self.post_isometry is None:
            return self.embed
        return self.embed @ self.post_isometry.conj().T

    def big_pi(self, x) -> np.ndarray:
        return np.kron(self.module.check(x), np.eye(self.dilation.r))

    def __call__(self, x) -> np.ndarray:
        return self.w.conj().T @ self.big_pi(x) @ self.dilation.V

    def images(self) -> np.ndarray:
        """``Phi(E_st)`` for all module units, shape (p, n, k, h)."""
        p, n = self.module.shape
        return np.stack([self(e) for e in self.module.basis()]).reshape(p, n, self.k, self.phi.h)

    def rep(self, T) -> np.ndarray:
        """The *-representation of ``K(X) = M_p`` with ``Phi(Tz) = rep(T) Phi(z)``."""
        T = np.asarray(T, dtype=complex)
        if T.shape != (self.p, self.p):
            raise InvalidInputError(f"compact operator must be {self.p}x{self.p}")
        W = self.w
        return W.conj().T @ np.kron(T, np.eye(self.dilation.r)) @ W

    def identity_residual(self) -> float:
        """Worst ``|Phi(x)^* Phi(y) - phi(<x, y>)|`` over unit pairs."""
        units = self.module.basis()
        imgs = [self(e) for e in units]
        worst = 0.0
        for x, fx in zip(units, imgs):
            for y, fy in zip(units, imgs):
                worst = max(worst, opnorm(fx.conj().T @ fy - apply(self.phi, x.conj().T @ y)))
        return worst

    def export(self) -> dict:
        return {"k": self.k, "phi_of_basis": [self(e) for e in self.module.basis()]}


def canonical_phi_map(
    phi: CPMap, X: ModuleSpace, tol: Tolerances = DEFAULT_TOLERANCES, dilation: Dilation | None = None
) -> PhiMapRealization:
    if X.n != phi.n:
        raise InvalidInputError(f"module is over M_{X.n} but the map acts on M_{phi.n}")
    d = minimal_stinespring(phi, tol) if dilation is None else dilation
    if d.r < 1:
        raise DegenerateDilationError("zero map has no dilation")
    r = d.r
    vecs = np.concatenate([np.kron(e, np.eye(r)) @ d.V for e in X.basis()], axis=1)
    E = orthonormalize(vecs, tol.rank_rtol)
    if E.shape[1] == X.p * r:
        # minimality makes the span everything; keep the natural coordinates
        E = np.eye(X.p * r, dtype=complex)
    return PhiMapRealization(phi, d, X, E)


def twist_phi_map(
    base: PhiMapRealization,
    seed: int | np.random.Generator | None = None,
    isometry=None,
    extra: int = 2,
) -> PhiMapRealization:
    """Realization of ``S Phi`` for a seeded random isometry ``S: C^k -> C^{k+extra}``."""
    k = base.k
    if isometry is None:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((k + extra, k)) + 1j * rng.standard_normal((k + extra, k))
        Q, R = np.linalg.qr(g)
        S = Q * np.sign(np.diag(R))
    else:
        S = np.asarray(isometry, dtype=complex)
        if S.ndim != 2 or S.shape[1] != k or opnorm(S.conj().T @ S - np.eye(k)) > 1e-10:
            raise InvalidInputError("post isometry must satisfy S^*S = I with k columns")
    if base.post_isometry is not None:
        S = S @ base.post_isometry
    return PhiMapRealization(base.phi, base.dilation, base.module, base.embed, S)


def module_domain_def(Phi: PhiMapRealization, tol: Tolerances = DEFAULT_TOLERANCES) -> OperatorSubspace:
    """Kernel of ``x -> (Phi(x b) - Phi(x) phi(b))_b`` over matrix units ``b``."""
    p, n = Phi.module.shape
    F = Phi.images()
    P = Phi.phi.blocks
    eye = np.eye(n)
    # x = E_st, b = E_kl: Phi(E_st E_kl) = d_tk F[s,l]
    xb = np.einsum("tk,slab->klabst", eye, F)
    xphib = np.einsum("stag,klgb->klabst", F, P)
    rows = (xb - xphib).reshape(-1, p * n)
    scale = max(np.linalg.norm(xb), np.linalg.norm(xphib))
    return null_space(_compress_rows([rows], p * n), p, n, tol, scale=scale)


def module_domain_stinespring(
    phi: CPMap, d: Dilation, X: ModuleSpace, tol: Tolerances = DEFAULT_TOLERANCES
) -> OperatorSubspace:
    """Kernel of ``x -> (x (x) I_r)(I - V V^*)``."""
    if d.r < 1:
        raise DegenerateDilationError("degenerate dilation; use module_domain_def")
    P = d.V @ d.V.conj().T
    L1 = linear_map_matrix(lambda x: np.kron(x, np.eye(d.r)), X.p, X.n)
    L2 = linear_map_matrix(lambda x: np.kron(x, np.eye(d.r)) @ P, X.p, X.n)
    scale = max(np.linalg.norm(L1), np.linalg.norm(L2))
    return null_space(L1 - L2, X.p, X.n, tol, scale=scale)


def module_domain_from_ideal(
    X: ModuleSpace, T: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES
) -> OperatorSubspace:
    """``span{E_ij t : t in T}``, i.e. the submodule ``X T``."""
    if T.shape != (X.n, X.n):
        raise InvalidInputError("T must be a subspace of M_n")
    return span_of((e @ t for e in X.basis() for t in T.basis), X.p, X.n, tol)


def gram_predicate(x, T: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    x = np.asarray(x, dtype=complex)
    g = x.conj().T @ x
    if g.shape != T.shape:
        raise InvalidInputError("Gram matrix and T live in different algebras")
    return T.distance(g) <= tol.residual_atol * (1.0 + float(np.linalg.norm(x)) ** 2)


def ternary_residual(Phi: PhiMapRealization, x, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``max |Phi(y <x, z>) - Phi(y) Phi(x)^* Phi(z)|`` over module units ``y, z``."""
    x = Phi.module.check(x)
    F = Phi.images()
    # y = E_ab, z = E_cd: y x^* z = conj(x[c, b]) E_ad
    lhs = np.einsum("cb,adij->abcdij", x.conj(), F)
    rhs = np.einsum("abik,cdkj->abcdij", F @ Phi(x).conj().T, F)
    diff = (lhs - rhs).reshape(-1, *F.shape[2:])
    return float(np.linalg.norm(diff, ord=2, axis=(1, 2)).max(initial=0.0))


def module_structure(
    X_sub: OperatorSubspace, M: OperatorSubspace, T: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES
) -> dict:
    """Closure of ``X_phi`` under ``M_p`` on the left and ``M_phi`` on the right; ``<X_phi, X_phi> = T_phi``."""
    p, n = X_sub.shape
    left = span_of((t @ x for t in matrix_units(p, p) for x in X_sub.basis), p, n, tol)
    right = span_of((x @ a for x in X_sub.basis for a in M.basis), p, n, tol)
    grams = span_of((x.conj().T @ y for x in X_sub.basis for y in X_sub.basis), n, n, tol)
    c_left = subspace_compare(left, X_sub, tol)
    c_right = subspace_compare(right, X_sub, tol)
    c_gram = subspace_compare(grams, T, tol)
    c_gram_m = subspace_compare(grams, M, tol)
    return {
        "left_compact_invariant": c_left.contains_1_in_2,
        "right_M_invariant": c_right.contains_1_in_2,
        "inner_products_in_M": c_gram_m.contains_1_in_2,
        "inner_products_span_T": c_gram.equal,
        "residual": max(
            c_left.sine_1_in_2 if c_left.contains_1_in_2 else 0.0,
            c_right.sine_1_in_2 if c_right.contains_1_in_2 else 0.0,
            c_gram.max_angle_sine if c_gram.equal else 0.0,
        ),
    }


def contractive_cube_criterion(Phi: PhiMapRealization, x, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """Compare ``Phi(x<x,x>) = Phi(x) phi(<x,x>)`` with ``<x,x> in M_phi``.

    The two agree for contractive ``phi`` and may differ otherwise.
    """
    x = Phi.module.check(x)
    g = x.conj().T @ x
    defect = opnorm(Phi(x @ g) - Phi(x) @ apply(Phi.phi, g))
    scale = max(1.0, float(np.linalg.norm(x)) ** 3)
    return {
        "cube_equality": bool(defect <= tol.residual_atol * scale),
        "gram_in_M": bool(in_mult_domain(Phi.phi, g, tol)),
        "cube_defect": defect,
        "contractive": bool(is_contractive(Phi.phi, tol)),
    }


def brs_checks(Phi: PhiMapRealization, x, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """Residuals of the dilation identities characterizing membership in ``X_phi``.

    ``kills_complement``: ``|Pi(x)(I - V V^*)|``;
    ``w_intertwines``:   ``|W^* Pi(x) - Phi(x) V^*|``;
    ``w_reconstructs``:  ``|Pi(x) - W Phi(x) V^*|``.
    """
    x = Phi.module.check(x)
    V, W = Phi.dilation.V, Phi.w
    Px = Phi.big_pi(x)
    fx = Phi(x)
    Q = np.eye(V.shape[0]) - V @ V.conj().T
    return {
        "ternary": ternary_residual(Phi, x, tol),
        "kills_complement": opnorm(Px @ Q),
        "w_intertwines": opnorm(W.conj().T @ Px - fx @ V.conj().T),
        "w_reconstructs": opnorm(Px - W @ fx @ V.conj().T),
    }


def recover_isometry(base: PhiMapRealization, other: PhiMapRealization) -> np.ndarray:
    """Least-squares ``S`` with ``other(x) = S base(x)`` for all module units."""
    units = base.module.basis()
    B = np.concatenate([base(e) for e in units], axis=1)
    O = np.concatenate([other(e) for e in units], axis=1)
    # S B = O  <=>  B^T S^T = O^T
    St, *_ = np.linalg.lstsq(B.T, O.T, rcond=None)
    return St.T

