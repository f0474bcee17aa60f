"""The linking algebra ``L(X) = M_{p+n}`` and the CP map induced on it by a phi-map.

Block layout of ``Z in M_{p+n}``::

    [[T   , y],      T in M_p = K(X),  y in X = M_{p,n}
     [x^* , a]]      x in X,           a in M_n

and the induced map is ``[[rho(T), Phi(y)], [Phi(x)^*, phi(a)]]`` where ``rho``
is the *-representation of ``K(X)`` attached to ``Phi``.  Concretely
``phi~(Z) = D^* (Z (x) I_r) D`` with ``D = diag(W, V)``; the map is assembled
from the corners and this closed form serves as a consistency check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpmaps import CPMap, apply, choi_rank, from_action, is_contractive, is_pure, norm
from .domains import PreconditionError, mult_domain_def, ternary_domain_def
from .hmodules import PhiMapRealization, canonical_phi_map, recover_isometry, theta, twist_phi_map
from .numerics import (
    DEFAULT_TOLERANCES,
    InvalidInputError,
    OperatorSubspace,
    Tolerances,
    matrix_units,
    null_space,
    opnorm,
    span_of,
    subspace_compare,
)
from .numerics import _compress_rows

__all__ = [
    "InducedCpMap",
    "induced_cp_map",
    "embed_blocks",
    "predicted_linking_subspace",
    "verify_linking_domains",
    "linking_action_checks",
    "irreducibility_check",
    "intertwiner_isometry",
    "rep_from_module_action",
    "purity_suite",
]


def embed_blocks(p: int, n: int, T=None, y=None, x=None, a=None) -> np.ndarray:
    """``[[T, y], [x^*, a]]`` with missing corners set to zero."""
    Z = np.zeros((p + n, p + n), dtype=complex)
    if T is not None:
        Z[:p, :p] = T
    if y is not None:
        Z[:p, p:] = y
    if x is not None:
        Z[p:, :p] = np.asarray(x).conj().T
    if a is not None:
        Z[p:, p:] = a
    return Z


@dataclass(frozen=True, eq=False)
class InducedCpMap:
    base: PhiMapRealization
    as_cpmap: CPMap

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def n(self) -> int:
        return self.base.phi.n

    @property
    def k(self) -> int:
        return self.base.k

    def __call__(self, Z) -> np.ndarray:
        return apply(self.as_cpmap, Z)

    def rep_corner(self, Z) -> np.ndarray:
        return self(Z)[: self.k, : self.k]

    def phi_map_corner(self, Z) -> np.ndarray:
        return self(Z)[: self.k, self.k :]

    def adjoint_corner(self, Z) -> np.ndarray:
        return self(Z)[self.k :, : self.k]

    def phi_corner(self, Z) -> np.ndarray:
        return self(Z)[self.k :, self.k :]

    def closed_form(self, Z) -> np.ndarray:
        """``D^* (Z (x) I_r) D`` with ``D = diag(W, V)``."""
        W, V = self.base.w, self.base.dilation.V
        D = np.zeros((W.shape[0] + V.shape[0], W.shape[1] + V.shape[1]), dtype=complex)
        D[: W.shape[0], : W.shape[1]] = W
        D[W.shape[0] :, W.shape[1] :] = V
        return D.conj().T @ np.kron(np.asarray(Z), np.eye(self.base.dilation.r)) @ D

    def invariant_residuals(self) -> dict:
        """Corner consistency, closed-form agreement and multiplicativity of ``rho``."""
        p, n = self.p, self.n
        Phi, phi = self.base, self.base.phi
        corner = 0.0
        for a in matrix_units(n, n):
            corner = max(corner, opnorm(self.phi_corner(embed_blocks(p, n, a=a)) - apply(phi, a)))
        for y in matrix_units(p, n):
            corner = max(corner, opnorm(self.phi_map_corner(embed_blocks(p, n, y=y)) - Phi(y)))
            corner = max(corner, opnorm(self.adjoint_corner(embed_blocks(p, n, x=y)) - Phi(y).conj().T))
        closed = max(opnorm(self(Z) - self.closed_form(Z)) for Z in matrix_units(p + n, p + n))
        units = matrix_units(p, p)
        reps = [Phi.rep(T) for T in units]
        mult = 0.0
        for T1, r1 in zip(units, reps):
            mult = max(mult, opnorm(Phi.rep(T1.conj().T) - r1.conj().T))
            for T2, r2 in zip(units, reps):
                mult = max(mult, opnorm(Phi.rep(T1 @ T2) - r1 @ r2))
        return {"corner": corner, "closed_form": closed, "rep_multiplicative": mult}


def induced_cp_map(Phi: PhiMapRealization, tol: Tolerances = DEFAULT_TOLERANCES) -> InducedCpMap:
    """Assemble ``phi~`` on matrix units of ``M_{p+n}``; CP-ness is validated on construction."""
    p, n, k, h = Phi.p, Phi.phi.n, Phi.k, Phi.phi.h
    size = k + h
    images = []
    for I in range(p + n):
        for J in range(p + n):
            img = np.zeros((size, size), dtype=complex)
            if I < p and J < p:
                T = np.zeros((p, p))
                T[I, J] = 1.0
                img[:k, :k] = Phi.rep(T)
            elif I < p:
                y = np.zeros((p, n))
                y[I, J - p] = 1.0
                img[:k, k:] = Phi(y)
            elif J < p:
                x = np.zeros((p, n))
                x[J, I - p] = 1.0
                img[k:, :k] = Phi(x).conj().T
            else:
                img[k:, k:] = Phi.phi.image(I - p, J - p)
            images.append(img)
    return InducedCpMap(Phi, from_action(images, tol))


def predicted_linking_subspace(
    p: int, n: int, X_sub: OperatorSubspace, A_sub: OperatorSubspace
) -> OperatorSubspace:
    """``{[[T, y], [x^*, a]] : T in M_p, x, y in X_sub, a in A_sub}``."""
    if X_sub.shape != (p, n) or A_sub.shape != (n, n):
        raise InvalidInputError("block subspaces have the wrong shapes")
    basis = [embed_blocks(p, n, T=T) for T in matrix_units(p, p)]
    basis += [embed_blocks(p, n, y=y) for y in X_sub.basis]
    basis += [embed_blocks(p, n, x=x) for x in X_sub.basis]
    basis += [embed_blocks(p, n, a=a) for a in A_sub.basis]
    cols = np.stack([Z.ravel() for Z in basis], axis=1) if basis else np.zeros(((p + n) ** 2, 0))
    return OperatorSubspace.from_columns(cols, p + n, p + n)


def _compact_of(X_sub: OperatorSubspace, tol: Tolerances) -> OperatorSubspace:
    return span_of((theta(x, y) for x in X_sub.basis for y in X_sub.basis), X_sub.rows, X_sub.rows, tol)


def verify_linking_domains(
    ind: InducedCpMap,
    X_sub: OperatorSubspace,
    M: OperatorSubspace,
    T: OperatorSubspace,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> dict:
    """Compute the domains of ``phi~`` directly and compare with the block prediction."""
    p, n = ind.p, ind.n
    M_tilde = mult_domain_def(ind.as_cpmap, tol)
    T_tilde = ternary_domain_def(ind.as_cpmap, tol)
    pred_M = predicted_linking_subspace(p, n, X_sub, M)
    pred_T = predicted_linking_subspace(p, n, X_sub, T)
    cmp_M = subspace_compare(M_tilde.subspace, pred_M, tol)
    cmp_T = subspace_compare(T_tilde.subspace, pred_T, tol)
    # sub-linking algebra [[K(X_phi), X_phi], [X_phi^*, M_phi]]
    K_sub = _compact_of(X_sub, tol)
    basis = [embed_blocks(p, n, T=t) for t in K_sub.basis]
    basis += [embed_blocks(p, n, y=y) for y in X_sub.basis]
    basis += [embed_blocks(p, n, x=x) for x in X_sub.basis]
    basis += [embed_blocks(p, n, a=a) for a in M.basis]
    sub = span_of(basis, p + n, p + n, tol)
    cmp_sub = subspace_compare(sub, M_tilde.subspace, tol)
    return {
        "dim_M_tilde": M_tilde.dim,
        "predicted": pred_M.dim,
        "equal": cmp_M.equal,
        "angle_M": cmp_M.max_angle_sine,
        "dim_T_tilde": T_tilde.dim,
        "predicted_T": pred_T.dim,
        "equal_T": cmp_T.equal,
        "angle_T": cmp_T.max_angle_sine,
        "sub_linking_contained": cmp_sub.contains_1_in_2,
        "residual_M": M_tilde.residual,
        "residual_T": T_tilde.residual,
        "contractive": bool(is_contractive(ind.base.phi, tol)),
        "M_tilde": M_tilde.subspace,
        "T_tilde": T_tilde.subspace,
    }


def linking_action_checks(ind: InducedCpMap, X_sub: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES,
                          T: OperatorSubspace | None = None) -> dict:
    """Residuals relating ``rho`` to ``Phi``; the membership tests need contractive ``phi``."""
    Phi = ind.base
    p, n = Phi.module.shape
    xs = Phi.module.basis()
    # rho(T) Phi(z) = Phi(T z)
    item1 = max(opnorm(Phi(Tm @ z) - Phi.rep(Tm) @ Phi(z)) for Tm in matrix_units(p, p) for z in xs)
    left = span_of((Tm @ x for Tm in matrix_units(p, p) for x in X_sub.basis), p, n, tol)
    item2 = subspace_compare(left, X_sub, tol)

    def gram_defect(x):
        return opnorm(Phi.rep(theta(x, x)) - Phi(x) @ Phi(x).conj().T)

    def pair_defect(x):
        return max(opnorm(Phi.rep(theta(x, y)) - Phi(x) @ Phi(y).conj().T) for y in xs)

    # members and witnesses: X_sub basis and an orthonormal basis of its complement
    comp = null_space(X_sub.columns.conj().T, p, n, tol) if X_sub.dim else Phi.module.full_subspace()
    members = [(x, True) for x in X_sub.basis] + [(x, False) for x in comp.basis]
    contractive = bool(is_contractive(Phi.phi, tol))
    scale = max(1.0, norm(Phi.phi))
    agree3 = agree4 = True
    worst_in3 = worst_in4 = 0.0
    best_out3 = best_out4 = np.inf
    for x, inside in members:
        d3, d4 = gram_defect(x), pair_defect(x)
        if inside:
            worst_in3, worst_in4 = max(worst_in3, d3), max(worst_in4, d4)
        else:
            best_out3, best_out4 = min(best_out3, d3), min(best_out4, d4)
        agree3 &= (d3 <= tol.residual_atol * scale) == inside
        agree4 &= (d4 <= tol.residual_atol * scale) == inside
    item5 = 0.0
    if T is not None:
        for x in xs:
            for y in xs:
                for a in T.basis:
                    target = Phi(x) @ apply(Phi.phi, a) @ Phi(y).conj().T
                    item5 = max(item5, opnorm(Phi.rep(theta(x @ a, y)) - target),
                                opnorm(Phi(x @ a) @ Phi(y).conj().T - target))
    return {
        "module_action": item1,
        "left_invariant": item2.contains_1_in_2,
        "left_invariant_angle": item2.sine_1_in_2,
        "contractive": contractive,
        "gram_membership_agrees": bool(agree3),
        "pair_membership_agrees": bool(agree4),
        "gram_defect_members": worst_in3,
        "gram_defect_outside": float(best_out3) if np.isfinite(best_out3) else None,
        "pair_defect_members": worst_in4,
        "pair_defect_outside": float(best_out4) if np.isfinite(best_out4) else None,
        "ideal_action": item5,
    }


def _check_representation(images: np.ndarray, p: int, tol: Tolerances) -> None:
    scale = max(1.0, max(opnorm(m) for m in images))
    idx = lambda i, j: i * p + j  # noqa: E731
    for i in range(p):
        for j in range(p):
            m = images[idx(i, j)]
            if opnorm(m.conj().T - images[idx(j, i)]) > tol.residual_atol * scale:
                raise InvalidInputError("images are not closed under adjoint")
            for k in range(p):
                for l in range(p):
                    expect = images[idx(i, l)] if j == k else 0.0
                    if opnorm(m @ images[idx(k, l)] - expect) > tol.residual_atol * scale**2:
                        raise InvalidInputError("images are not multiplicative")


def _rep_images(rep_images) -> tuple[np.ndarray, int]:
    images = np.asarray(rep_images, dtype=complex)
    if images.ndim != 3 or images.shape[1] != images.shape[2]:
        raise InvalidInputError("representation images must be a list of square matrices")
    p = int(round(np.sqrt(images.shape[0])))
    if p * p != images.shape[0] or p == 0:
        raise InvalidInputError("need one image per matrix unit of M_p")
    return images, p


def irreducibility_check(rep_images, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Whether the commutant of a *-representation of ``M_p`` is one-dimensional.

    ``rep_images`` lists the images of ``E_ij`` in row-major order.
    """
    images, p = _rep_images(rep_images)
    _check_representation(images, p, tol)
    k = images.shape[1]
    eye = np.eye(k)
    # Z -> rho Z - Z rho, row-major vec(A Z B) = (A kron B^T) vec(Z)
    L1 = np.vstack([np.kron(m, eye) for m in images])
    L2 = np.vstack([np.kron(eye, m.T) for m in images])
    scale = max(np.linalg.norm(L1), np.linalg.norm(L2))
    return null_space(_compress_rows([L1 - L2], k * k), k, k, tol, scale=scale).dim == 1


def intertwiner_isometry(rep_to, rep_from, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """The isometry ``S`` with ``rho_to(T) S = S rho_from(T)``, when unique up to phase."""
    to, p = _rep_images(rep_to)
    frm, q = _rep_images(rep_from)
    if p != q:
        raise InvalidInputError("representations of different algebras")
    k1, k2 = to.shape[1], frm.shape[1]
    L1 = np.vstack([np.kron(a, np.eye(k2)) for a in to])
    L2 = np.vstack([np.kron(np.eye(k1), b.T) for b in frm])
    scale = max(np.linalg.norm(L1), np.linalg.norm(L2))
    ker = null_space(_compress_rows([L1 - L2], k1 * k2), k1, k2, tol, scale=scale)
    if ker.dim != 1:
        raise InvalidInputError(f"intertwiner space has dimension {ker.dim}, expected 1")
    Z = ker.basis[0]
    c = np.real(np.trace(Z.conj().T @ Z)) / k2
    return Z / np.sqrt(c)


def rep_from_module_action(Phi: PhiMapRealization, T) -> np.ndarray:
    """Minimal-norm ``R`` solving ``R Phi(z) = Phi(T z)`` for all module units ``z``."""
    units = Phi.module.basis()
    B = np.concatenate([Phi(z) for z in units], axis=1)
    C = np.concatenate([Phi(np.asarray(T) @ z) for z in units], axis=1)
    Rt, *_ = np.linalg.lstsq(B.T, C.T, rcond=None)
    return Rt.T


def purity_suite(phi: CPMap, X, tol: Tolerances = DEFAULT_TOLERANCES, seed: int = 0) -> dict:
    """Irreducibility, purity of the induced map and the ``diag(S, I)`` relation for a pure ``phi``."""
    if not is_pure(phi, tol):
        raise PreconditionError("purity suite needs a pure map (Choi rank 1)")
    base = canonical_phi_map(phi, X, tol)
    ind = induced_cp_map(base, tol)
    p = X.p
    units_p = matrix_units(p, p)
    irreducible = irreducibility_check([base.rep(T) for T in units_p], tol)
    induced_rank = choi_rank(ind.as_cpmap, tol)

    twisted = twist_phi_map(base, seed)
    ind2 = induced_cp_map(twisted, tol)
    S1 = recover_isometry(base, twisted)
    S2 = intertwiner_isometry([twisted.rep(T) for T in units_p], [base.rep(T) for T in units_p], tol)
    h = phi.h
    D = np.zeros((S1.shape[0] + h, S1.shape[1] + h), dtype=complex)
    D[: S1.shape[0], : S1.shape[1]] = S1
    D[S1.shape[0] :, S1.shape[1] :] = np.eye(h)
    relation = max(
        opnorm(ind2(Z) - D @ ind(Z) @ D.conj().T) for Z in matrix_units(p + phi.n, p + phi.n)
    )
    overlap = abs(np.trace(S1.conj().T @ S2))
    return {
        "irreducible": bool(irreducible),
        "induced_choi_rank": int(induced_rank),
        "isometry_relation_residual": float(relation),
        "isometry_defect": float(opnorm(S1.conj().T @ S1 - np.eye(S1.shape[1]))),
        "phase_overlap": float(overlap),
        "k": base.k,
    }
