"""Multiplicative domain ``M_phi`` and ternary domain ``T_phi`` of a CP map.

Every defining condition is linear in the unknown ``a`` once the other
arguments are fixed, and by linearity it is enough to let those arguments run
over matrix units.  Each domain is therefore the null space of one stacked
linear map, and the question "which ``a`` satisfy the identity for all ``b``"
becomes a rank computation.

Two independent routes are provided for each domain: the definitional one,
which only uses the images ``phi(E_ij)``, and one through a minimal
Stinespring dilation ``(a (x) I_r, V)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cpmaps import CPMap, DegenerateDilationError, Dilation, apply, is_contractive, pi
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
    "DomainReport",
    "StructureReport",
    "PreconditionError",
    "mult_domain_def",
    "mult_domain_stinespring",
    "ternary_domain_def",
    "ternary_domain_stinespring",
    "verify_structure",
    "in_mult_domain",
    "mult_defect",
    "contractive_mult_criterion",
    "essential_blocks",
]


class PreconditionError(InvalidInputError):
    """A predicate was called outside the hypotheses under which it is meaningful."""


@dataclass(frozen=True, eq=False)
class DomainReport:
    subspace: OperatorSubspace
    algorithm: str
    residual: float
    structure: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.subspace.dim

    def valid(self, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return self.residual <= tol.residual_atol


def essential_blocks(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Images ``U^* phi(E_ij) U`` with ``U`` an orthonormal basis of the joint range.

    Every product of images has its range and co-range inside ``span U``, so
    all domain conditions are unchanged by this compression.
    """
    n, h = phi.n, phi.h
    joint = phi.blocks.transpose(2, 0, 1, 3).reshape(h, n * n * h)
    U = orthonormalize(joint, tol.rank_rtol)
    if U.shape[1] == h:
        return np.asarray(phi.blocks)
    return np.einsum("ga,ijgd,db->ijab", U.conj(), phi.blocks, U)


def _report(R: np.ndarray, n: int, algorithm: str, tol: Tolerances, scale: float) -> DomainReport:
    S = null_space(R, n, n, tol, scale=scale)
    if S.dim and R.shape[0]:
        residual = float(np.linalg.norm(R @ S.columns, axis=0).max())
    else:
        residual = 0.0
    return DomainReport(S, algorithm, residual, _flags(S, tol))


def _flags(S: OperatorSubspace, tol: Tolerances) -> dict:
    star = subspace_compare(S.adjoint(), S, tol).contains_1_in_2
    prods = span_of((x @ y for x in S.basis for y in S.basis), S.rows, S.cols, tol)
    closed = subspace_compare(prods, S, tol).contains_1_in_2
    return {"is_star_closed": bool(star), "is_subalgebra": bool(star and closed)}


class _TermSize:
    """Running Frobenius norms of the terms whose differences form a defect map."""

    def __init__(self):
        self.sq: dict[str, float] = {}

    def add(self, name: str, t: np.ndarray) -> np.ndarray:
        self.sq[name] = self.sq.get(name, 0.0) + float(np.vdot(t, t).real)
        return t

    @property
    def scale(self) -> float:
        return float(np.sqrt(max(self.sq.values(), default=0.0)))


def _mult_rows(F: np.ndarray, size: _TermSize) -> np.ndarray:
    """Stacked defects of ``a -> (phi(ab) - phi(a)phi(b), phi(ba) - phi(b)phi(a))``.

    Rows are indexed by ``(b = E_kl, entry)``, columns by ``a = E_st``.
    """
    n, m = F.shape[0], F.shape[2]
    eye = np.eye(n)
    ab = size.add("ab", np.einsum("tk,slab->klabst", eye, F))
    a_b = size.add("a_b", np.einsum("stag,klgb->klabst", F, F))
    ba = size.add("ba", np.einsum("ls,ktab->klabst", eye, F))
    b_a = size.add("b_a", np.einsum("klag,stgb->klabst", F, F))
    rows = n * n * m * m
    return np.vstack([(ab - a_b).reshape(rows, n * n), (ba - b_a).reshape(rows, n * n)])


def mult_domain_def(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> DomainReport:
    """``M_phi = {a : phi(ab) = phi(a)phi(b) and phi(ba) = phi(b)phi(a) for all b}``."""
    F = essential_blocks(phi, tol)
    size = _TermSize()
    R = _compress_rows([_mult_rows(F, size)], phi.n * phi.n)
    return _report(R, phi.n, "definitional", tol, size.scale)


def _right_factor(F: np.ndarray, tol: Tolerances) -> np.ndarray:
    """``G`` with ``G G^* = C^2`` for the Choi matrix ``C[(q,g),(l,b)] = F[q,l][g,b]``.

    A defect in which ``c = E_kl`` enters as the right-most factor has the form
    ``A C`` with rows ``(k, entry)`` and columns ``(l, b)``.  Replacing ``C`` by
    ``C U = U diag(w)`` over its range keeps both the kernel in ``a`` and the
    Frobenius norms of every term, with ``rank C`` columns instead of ``n m``.
    """
    n, m = F.shape[0], F.shape[2]
    C = F.transpose(0, 2, 1, 3).reshape(n * m, n * m)
    w, U = np.linalg.eigh((C + C.conj().T) / 2)
    top = float(w[-1]) if w.size else 0.0
    keep = w > tol.rank_rtol * top if top > 0 else np.zeros(w.shape, bool)
    return (U[:, keep] * w[keep]).reshape(n, m, int(keep.sum()))


def _ternary_row_blocks(F: np.ndarray, size: _TermSize, tol: Tolerances):
    """Row blocks, one per ``b = E_ij``, of the three ternary defects in ``a``.

    For ``c = E_kl`` and ``a = E_st`` the terms are

        phi(bac)           = d_js d_tk F[i,l]
        phi(ba) phi(c)     = d_js F[i,t] F[k,l]
        phi(b) phi(ac)     = d_tk F[i,j] F[s,l]
        phi(b)phi(a)phi(c) = F[i,j] F[s,t] F[k,l]

    and each ends in a factor of ``F[., l]``; that factor is contracted
    against :func:`_right_factor`, so rows are indexed by ``(k, entry, rho)``.
    """
    n, m = F.shape[0], F.shape[2]
    G = _right_factor(F, tol)
    r = G.shape[2]
    rows = n * m * r
    eye = np.eye(n)
    for i, j in itertools.product(range(n), repeat=2):
        Fij = F[i, j]
        bac = np.zeros((n, m, r, n, n), dtype=complex)
        bac[:, :, :, j, :] = np.einsum("tk,ar->kart", eye, G[i])
        ba_c = np.zeros_like(bac)
        ba_c[:, :, :, j, :] = np.einsum("tag,kgr->kart", F[i], G)
        b_ac = np.einsum("tk,sar->karst", eye, np.einsum("ag,sgr->sar", Fij, G))
        triple = np.einsum("stad,kdr->karst", np.einsum("ag,stgd->stad", Fij, F), G)
        for name, t in (("bac", bac), ("ba_c", ba_c), ("b_ac", b_ac), ("b_a_c", triple)):
            size.add(name, t)
        yield (bac - ba_c).reshape(rows, n * n)
        yield (bac - b_ac).reshape(rows, n * n)
        yield (bac - triple).reshape(rows, n * n)


def ternary_domain_def(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> DomainReport:
    """``T_phi = {a : phi(bac) = phi(ba)phi(c) = phi(b)phi(ac) = phi(b)phi(a)phi(c) for all b, c}``."""
    F = essential_blocks(phi, tol)
    size = _TermSize()
    R = _compress_rows(_ternary_row_blocks(F, size, tol), phi.n * phi.n)
    return _report(R, phi.n, "definitional", tol, size.scale)


def _require_dilation(d: Dilation) -> None:
    if d.r < 1:
        raise DegenerateDilationError("degenerate dilation (r = 0); use the definitional algorithm")


def mult_domain_stinespring(phi: CPMap, d: Dilation, tol: Tolerances = DEFAULT_TOLERANCES) -> DomainReport:
    """Kernel of ``a -> (V^* pi(a) (I - VV^*), (I - VV^*) pi(a) V)``."""
    _require_dilation(d)
    V = d.V
    P = V @ V.conj().T

    def plain(a):
        pa = pi(a, d.r)
        return np.concatenate([(V.conj().T @ pa).ravel(), (pa @ V).ravel()])

    def projected(a):
        pa = pi(a, d.r)
        return np.concatenate([(V.conj().T @ pa @ P).ravel(), (P @ pa @ V).ravel()])

    L1 = linear_map_matrix(plain, phi.n, phi.n)
    L2 = linear_map_matrix(projected, phi.n, phi.n)
    scale = max(np.linalg.norm(L1), np.linalg.norm(L2))
    return _report(_compress_rows([L1 - L2], phi.n * phi.n), phi.n, "stinespring", tol, scale)


def ternary_domain_stinespring(
    phi: CPMap, d: Dilation, M: OperatorSubspace, tol: Tolerances = DEFAULT_TOLERANCES
) -> DomainReport:
    """``M`` intersected with the kernel of ``a -> pi(a) - V phi(a) V^*``.

    The intersection is one null space: the dilation condition, divided by the
    size of its terms, stacked on top of the projector onto the complement of ``M``.
    """
    _require_dilation(d)
    if M.shape != (phi.n, phi.n):
        raise InvalidInputError(f"M must live in M_{phi.n}")
    V = d.V
    L1 = linear_map_matrix(lambda a: pi(a, d.r), phi.n, phi.n)
    L2 = linear_map_matrix(lambda a: V @ apply(phi, a) @ V.conj().T, phi.n, phi.n)
    scale = max(np.linalg.norm(L1), np.linalg.norm(L2))
    comp = np.eye(phi.n * phi.n) - M.projector()
    R = _compress_rows([(L1 - L2) / scale, comp], phi.n * phi.n)
    return _report(R, phi.n, "stinespring", tol, 1.0)


@dataclass(frozen=True)
class StructureReport:
    m_star_closed: bool
    m_product_closed: bool
    t_star_closed: bool
    t_in_m: bool
    t_left_ideal: bool
    t_right_ideal: bool
    t_sandwich_equal: bool
    residual: float

    @property
    def m_is_subalgebra(self) -> bool:
        return self.m_star_closed and self.m_product_closed

    @property
    def t_is_ideal(self) -> bool:
        return self.t_star_closed and self.t_in_m and self.t_left_ideal and self.t_right_ideal

    @property
    def ok(self) -> bool:
        return self.m_is_subalgebra and self.t_is_ideal and self.t_sandwich_equal

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(m_is_subalgebra=self.m_is_subalgebra, t_is_ideal=self.t_is_ideal, ok=self.ok)
        return d


def verify_structure(
    M: OperatorSubspace, T: OperatorSubspace, n: int, tol: Tolerances = DEFAULT_TOLERANCES
) -> StructureReport:
    """Check that ``M`` is a *-subalgebra, ``T`` a two-sided *-ideal of it and ``T M_n T = T``."""
    if M.shape != (n, n) or T.shape != (n, n):
        raise InvalidInputError("M and T must both be subspaces of M_n")
    residuals = []

    def inside(mats, target):
        cmp = subspace_compare(span_of(mats, n, n, tol), target, tol)
        residuals.append(cmp.sine_1_in_2 if cmp.contains_1_in_2 else 0.0)
        return cmp.contains_1_in_2, cmp

    m_star, _ = inside((x.conj().T for x in M.basis), M)
    m_prod, _ = inside((x @ y for x in M.basis for y in M.basis), M)
    t_star, _ = inside((x.conj().T for x in T.basis), T)
    t_in_m, _ = inside(T.basis, M)
    t_left, _ = inside((m @ t for m in M.basis for t in T.basis), T)
    t_right, _ = inside((t @ m for t in T.basis for m in M.basis), T)
    units = matrix_units(n, n)
    sandwich = span_of((s @ e @ t for s in T.basis for e in units for t in T.basis), n, n, tol)
    cmp = subspace_compare(sandwich, T, tol)
    residuals.append(cmp.max_angle_sine if cmp.equal else 0.0)
    return StructureReport(
        m_star_closed=m_star,
        m_product_closed=m_prod,
        t_star_closed=t_star,
        t_in_m=t_in_m,
        t_left_ideal=t_left,
        t_right_ideal=t_right,
        t_sandwich_equal=cmp.equal,
        residual=float(max(residuals, default=0.0)),
    )


def mult_defect(phi: CPMap, a, b) -> float:
    """``max(|phi(ab) - phi(a)phi(b)|, |phi(ba) - phi(b)phi(a)|)``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    pa, pb = apply(phi, a), apply(phi, b)
    return max(opnorm(apply(phi, a @ b) - pa @ pb), opnorm(apply(phi, b @ a) - pb @ pa))


def in_mult_domain(phi: CPMap, a, tol: Tolerances = DEFAULT_TOLERANCES, M: OperatorSubspace | None = None) -> bool:
    """Membership in ``M_phi`` by projection onto the definitional subspace."""
    if M is None:
        M = mult_domain_def(phi, tol).subspace
    return M.contains(a, tol)


def contractive_mult_criterion(phi: CPMap, a, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """``phi(aa^*) = phi(a)phi(a)^*`` and ``phi(a^*a) = phi(a)^*phi(a)``; needs ``|phi| <= 1``."""
    if not is_contractive(phi, tol):
        raise PreconditionError("the two-equation criterion for M_phi requires a contractive map")
    a = np.asarray(a, dtype=complex)
    pa = apply(phi, a)
    d1 = opnorm(apply(phi, a @ a.conj().T) - pa @ pa.conj().T)
    d2 = opnorm(apply(phi, a.conj().T @ a) - pa.conj().T @ pa)
    return max(d1, d2) <= tol.residual_atol * max(1.0, float(np.linalg.norm(a)) ** 2)
