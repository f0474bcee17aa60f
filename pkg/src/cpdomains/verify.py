"""Seeded randomized verification of every invariant in the package.

Each trial draws its own generator from ``(seed, trial)``, so results do not
depend on trial order or concurrency.  Generic Gaussian CP maps almost surely
have trivial domains, so instances are drawn from several families:

* ``gaussian``: independent Gaussian Kraus operators, any Choi rank;
* ``compression``: ``a -> c^2 K a K^*`` with ``K`` a rotated partial isometry;
* ``block``: a compression on a subspace plus a Gaussian part on its complement;
* ``ampliation``: ``a -> c^2 J (a (x) I_s) J^*`` rotated, a scaled *-homomorphism.

``c`` is 1 or ``sqrt(2)``, so non-contractive maps appear in every family.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cpmaps import (
    CPMap,
    UnitalFallbackWarning,
    apply,
    choi_rank,
    from_kraus,
    is_contractive,
    is_unital,
    minimal_stinespring,
    norm,
    random_cpmap,
)
from .domains import (
    mult_domain_def,
    mult_domain_stinespring,
    ternary_domain_def,
    ternary_domain_stinespring,
    verify_structure,
)
from .fixtures import ex_a, ex_b, ex_id, ex_tr
from .hmodules import (
    ModuleSpace,
    canonical_phi_map,
    gram_predicate,
    module_domain_def,
    module_domain_from_ideal,
    module_domain_stinespring,
    module_structure,
    ternary_residual,
    twist_phi_map,
)
from .linking import induced_cp_map, linking_action_checks, purity_suite, verify_linking_domains
from .numerics import DEFAULT_TOLERANCES, Tolerances, matrix_units, opnorm, subspace_compare

__all__ = [
    "FAMILIES",
    "random_instance",
    "structured_cpmap",
    "check_dilation",
    "check_domains",
    "check_module",
    "check_linking",
    "check_purity",
    "run_verify",
]

FAMILIES = ("gaussian", "compression", "block", "ampliation")
NORMALIZATIONS = ("raw", "contractive", "unital")


def _haar(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(g)
    return Q * np.sign(np.diag(R))


def structured_cpmap(
    rng: np.random.Generator, n: int, h: int, family: str, tol: Tolerances = DEFAULT_TOLERANCES
) -> CPMap:
    """Draw one map of a non-Gaussian family (see module docstring)."""
    c = float(rng.choice([1.0, np.sqrt(2.0)]))
    Un, Uh = _haar(rng, n), _haar(rng, h)
    if family == "ampliation" and h < n:
        family = "compression"
    if family == "compression":
        m = int(rng.integers(1, min(n, h) + 1))
        kraus = [c * Uh[:, :m] @ Un[:, :m].conj().T]
    elif family == "block":
        m = int(rng.integers(1, min(n, h) + 1))
        if m == n and n > 1:
            m = n - 1
        kraus = [c * Uh[:, :m] @ Un[:, :m].conj().T]
        comp = Un[:, m:] @ Un[:, m:].conj().T
        for _ in range(int(rng.integers(1, 3)) if m < n else 0):
            g = rng.standard_normal((h, n)) + 1j * rng.standard_normal((h, n))
            kraus.append(g @ comp / np.sqrt(2 * n))
    elif family == "ampliation":
        s = int(rng.integers(1, h // n + 1))
        kraus = []
        for j in range(s):
            J = np.zeros((h, n), dtype=complex)
            J[np.arange(n) * s + j, np.arange(n)] = 1.0
            kraus.append(c * Uh @ J @ Un.conj().T)
    else:
        raise ValueError(f"unknown family {family!r}")
    return from_kraus(np.stack(kraus), tol)


def random_instance(
    rng: np.random.Generator,
    max_n: int,
    max_h: int,
    max_rank: int | None = None,
    families: tuple[str, ...] = FAMILIES,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[CPMap, dict]:
    n = int(rng.integers(1, max_n + 1))
    h = int(rng.integers(1, max_h + 1))
    family = str(rng.choice(families))
    info = {"n": n, "h": h, "family": family}
    if family == "gaussian":
        top = n * h if max_rank is None else min(n * h, max_rank)
        rank = int(rng.integers(1, top + 1))
        normalization = str(rng.choice(NORMALIZATIONS))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnitalFallbackWarning)
            phi = random_cpmap(n, h, rank, normalization, rng, tol)
        info["normalization"] = normalization
    else:
        phi = structured_cpmap(rng, n, h, family, tol)
        if max_rank is not None and choi_rank(phi, tol) > max_rank:
            phi = structured_cpmap(rng, n, h, "compression", tol)
            info["family"] = "compression"
    info["rank"] = choi_rank(phi, tol)
    return phi, info


def _scale(phi: CPMap) -> float:
    return max(1.0, norm(phi))


def check_dilation(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    d = minimal_stinespring(phi, tol)
    rank = choi_rank(phi, tol)
    m = {
        "reconstruction": d.reconstruction_residual(phi),
        "kraus": d.kraus_residual(phi),
        "minimality_dimension": d.minimality_dimension(tol.rank_rtol),
        "expected_dimension": phi.n * rank,
    }
    ok = m["reconstruction"] < 1e-10 * _scale(phi) and m["minimality_dimension"] == m["expected_dimension"]
    if is_unital(phi, tol):
        m["isometry_defect"] = opnorm(d.V.conj().T @ d.V - np.eye(phi.h))
        ok = ok and m["isometry_defect"] < 1e-10
    return {"ok": bool(ok), **m}


def check_domains(phi: CPMap, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[dict, dict]:
    """Cross-algorithm equality plus the structure and dilation identities.

    Returns ``(metrics, computed)`` where ``computed`` holds the subspaces and dilation.
    """
    d = minimal_stinespring(phi, tol)
    Md, Td = mult_domain_def(phi, tol), ternary_domain_def(phi, tol)
    Ms = mult_domain_stinespring(phi, d, tol)
    Ts = ternary_domain_stinespring(phi, d, Md.subspace, tol)
    cm = subspace_compare(Md.subspace, Ms.subspace, tol)
    ct = subspace_compare(Td.subspace, Ts.subspace, tol)
    st = verify_structure(Md.subspace, Td.subspace, phi.n, tol)
    s2 = _scale(phi) ** 2
    V, r = d.V, d.r
    P = V @ V.conj().T
    hom = intertwine = commute = ideal_fix = 0.0
    for a in Md.subspace.basis:
        pa, fa = np.kron(a, np.eye(r)), apply(phi, a)
        intertwine = max(intertwine, opnorm(V.conj().T @ pa - fa @ V.conj().T), opnorm(pa @ V - V @ fa))
        commute = max(commute, opnorm(P @ pa - pa @ P), opnorm((V.conj().T @ V) @ fa - fa @ (V.conj().T @ V)))
        for b in Md.subspace.basis:
            hom = max(hom, opnorm(apply(phi, a @ b) - fa @ apply(phi, b)))
    for a in Td.subspace.basis:
        pa = np.kron(a, np.eye(r))
        ideal_fix = max(ideal_fix, opnorm(P @ pa - pa))
    identities = max(hom, intertwine, commute, ideal_fix)
    m = {
        "dim_M": Md.dim,
        "dim_T": Td.dim,
        "angle_M": cm.max_angle_sine,
        "angle_T": ct.max_angle_sine,
        "residual_def": max(Md.residual, Td.residual),
        "structure_residual": st.residual,
        "identity_residual": identities,
    }
    ok = (
        cm.equal
        and ct.equal
        and st.ok
        and st.residual < 1e-8
        and identities <= tol.residual_atol * s2
    )
    m["ok"] = bool(ok)
    m["structure_ok"] = bool(st.ok and st.residual < 1e-8)
    return m, {"M": Md.subspace, "T": Td.subspace, "dilation": d}


def check_module(
    phi: CPMap,
    p: int,
    M,
    T,
    d,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT_TOLERANCES,
    n_random: int = 20,
) -> tuple[dict, dict]:
    """Four-way equality of ``X_phi`` with pointwise predicates and the module identities."""
    X = ModuleSpace(p, phi.n)
    Phi = canonical_phi_map(phi, X, tol, dilation=d)
    Xd = module_domain_def(Phi, tol)
    Xs = module_domain_stinespring(phi, d, X, tol)
    Xi = module_domain_from_ideal(X, T, tol)
    twisted = twist_phi_map(Phi, rng)
    Xt = module_domain_def(twisted, tol)
    comps = [subspace_compare(Xd, other, tol) for other in (Xs, Xi, Xt)]
    scale = _scale(phi)
    Q = np.eye(d.V.shape[0]) - d.V @ d.V.conj().T

    samples = list(Xd.basis) + list(X.basis())
    for j in range(n_random):
        g = rng.standard_normal((p, phi.n)) + 1j * rng.standard_normal((p, phi.n))
        if j % 2 == 0 and Xd.dim:
            coeffs = rng.standard_normal(Xd.dim) + 1j * rng.standard_normal(Xd.dim)
            g = np.tensordot(coeffs, Xd.basis, axes=1)
        samples.append(g)
    disagreements = 0
    for x in samples:
        size = max(1.0, float(np.linalg.norm(x)))
        truth = Xd.contains(x, tol)
        votes = (
            gram_predicate(x, T, tol),
            ternary_residual(Phi, x, tol) <= tol.residual_atol * size * scale**1.5,
            opnorm(np.kron(x, np.eye(d.r)) @ Q) <= tol.residual_atol * size * scale,
        )
        disagreements += sum(v != truth for v in votes)

    ident = Phi.identity_residual()
    # module-map identities on the domains
    mod_map = 0.0
    for x in X.basis():
        fx = Phi(x)
        for a in M.basis:
            mod_map = max(mod_map, opnorm(Phi(x @ a) - fx @ apply(phi, a)))
        for a in T.basis:
            fa = apply(phi, a)
            for b in matrix_units(phi.n, phi.n):
                mod_map = max(mod_map, opnorm(Phi(x @ a @ b) - fx @ fa @ apply(phi, b)))
    cor46 = 0.0
    for x in Xd.basis:
        for y in X.basis():
            cor46 = max(cor46, opnorm(np.kron(y.conj().T @ x, np.eye(d.r)) @ Q))
    ms = module_structure(Xd, M, T, tol)
    m = {
        "p": p,
        "dim_X": Xd.dim,
        "angle_stinespring": comps[0].max_angle_sine,
        "angle_ideal": comps[1].max_angle_sine,
        "angle_twisted": comps[2].max_angle_sine,
        "predicate_disagreements": disagreements,
        "phi_map_identity": ident,
        "module_map_residual": mod_map,
        "complement_residual": cor46,
        "structure_residual": ms["residual"],
    }
    structure_ok = (
        ms["left_compact_invariant"]
        and ms["right_M_invariant"]
        and ms["inner_products_in_M"]
        and ms["inner_products_span_T"]
        and ms["residual"] < 1e-8
    )
    ok = (
        all(c.equal for c in comps)
        and disagreements == 0
        and ident <= tol.residual_atol * scale
        and mod_map <= tol.residual_atol * scale**2
        and cor46 <= tol.residual_atol * scale
        and structure_ok
    )
    m["ok"] = bool(ok)
    m["structure_ok"] = bool(structure_ok)
    return m, {"X": Xd, "Phi": Phi, "twisted": twisted}


def check_linking(phi: CPMap, p: int, rng: np.random.Generator, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """Block description of the induced domains, for canonical and twisted phi-maps."""
    X = ModuleSpace(p, phi.n)
    M = mult_domain_def(phi, tol).subspace
    T = ternary_domain_def(phi, tol).subspace
    Phi = canonical_phi_map(phi, X, tol)
    Xd = module_domain_def(Phi, tol)
    ind = induced_cp_map(Phi, tol)
    rep = verify_linking_domains(ind, Xd, M, T, tol)
    twisted = twist_phi_map(Phi, rng)
    ind2 = induced_cp_map(twisted, tol)
    rep2 = verify_linking_domains(ind2, module_domain_def(twisted, tol), M, T, tol)
    same_M = subspace_compare(rep["M_tilde"], rep2["M_tilde"], tol)
    same_T = subspace_compare(rep["T_tilde"], rep2["T_tilde"], tol)
    inv = ind.invariant_residuals()
    chk = linking_action_checks(ind, Xd, tol, T=T)
    scale = _scale(phi)
    contractive = bool(is_contractive(phi, tol))
    induced_norm = norm(ind.as_cpmap)
    m = {
        "p": p,
        "contractive": contractive,
        "dim_M_tilde": rep["dim_M_tilde"],
        "predicted": rep["predicted"],
        "dim_T_tilde": rep["dim_T_tilde"],
        "predicted_T": rep["predicted_T"],
        "angle_M": rep["angle_M"],
        "angle_T": rep["angle_T"],
        "angle_twisted_M": same_M.max_angle_sine,
        "angle_twisted_T": same_T.max_angle_sine,
        "invariant_residual": max(inv.values()),
        "action_residual": max(chk["module_action"], chk["ideal_action"]),
        "induced_norm": induced_norm,
    }
    block_prediction_ok = rep["equal"] and rep["equal_T"] and rep2["equal"] and rep2["equal_T"] and rep["sub_linking_contained"]
    ok = (
        block_prediction_ok
        and same_M.equal
        and same_T.equal
        and m["invariant_residual"] <= tol.residual_atol * scale
        and m["action_residual"] <= tol.residual_atol * scale**2
        and chk["left_invariant"]
        and (not contractive or (chk["gram_membership_agrees"] and chk["pair_membership_agrees"]))
        and (not contractive or induced_norm <= 1 + tol.residual_atol)
    )
    m["block_prediction_ok"] = bool(block_prediction_ok)
    m["ok"] = bool(ok)
    return m


def check_purity(phi: CPMap, p: int, seed: int, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    res = purity_suite(phi, ModuleSpace(p, phi.n), tol, seed=seed)
    ok = (
        res["irreducible"]
        and res["induced_choi_rank"] == 1
        and res["isometry_relation_residual"] < 1e-9
        and abs(res["phase_overlap"] - res["k"]) < 1e-8
    )
    return {"ok": bool(ok), **res}


@dataclass
class _Tally:
    passed: int = 0
    failed: int = 0
    worst: dict = field(default_factory=dict)

    def add(self, metrics: dict) -> bool:
        ok = bool(metrics["ok"])
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        for k, v in metrics.items():
            if isinstance(v, float) and not k.startswith("dim"):
                self.worst[k] = max(self.worst.get(k, 0.0), v)
        return ok

    def as_dict(self) -> dict:
        return {"passed": self.passed, "failed": self.failed, "worst": dict(sorted(self.worst.items()))}


SUITES = ("dilation", "domains", "structure", "module", "linking", "purity")


def _fixture_cases() -> list[tuple[str, CPMap]]:
    return [("EX-A", ex_a()), ("EX-B", ex_b()), ("EX-ID", ex_id(2)), ("EX-TR", ex_tr())]


def _run_instance(phi: CPMap, p: int, rng: np.random.Generator, tallies: dict, record, tol: Tolerances) -> None:
    record("dilation", check_dilation(phi, tol))
    dm, comp = check_domains(phi, tol)
    record("domains", {k: v for k, v in dm.items() if k != "structure_ok"})
    record("structure", {"ok": dm["structure_ok"], "structure_residual": dm["structure_residual"]})
    mm, _ = check_module(phi, p, comp["M"], comp["T"], comp["dilation"], rng, tol)
    record("module", mm)


def run_verify(
    trials: int = 20,
    seed: int = 0,
    max_n: int = 3,
    max_h: int = 3,
    max_p: int = 3,
    tol: Tolerances = DEFAULT_TOLERANCES,
    fixtures_only: bool = False,
    linking_max: int = 3,
    linking_rank: int | None = None,
) -> dict:
    """Run every suite and return a JSON-ready summary.

    Linking instances are capped at ``n, h, p <= linking_max`` (and optionally
    at Choi rank ``<= linking_rank``) since the induced map lives on ``M_{p+n}``.
    """
    tallies = {name: _Tally() for name in SUITES}
    findings: list[dict] = []

    def record(suite: str, metrics: dict, context: dict | None = None) -> None:
        if not tallies[suite].add(metrics):
            findings.append({"suite": suite, **(context or {}), "metrics": metrics})

    cases: list[tuple[dict, CPMap, int, np.random.Generator]] = []
    for name, phi in _fixture_cases():
        cases.append(({"fixture": name}, phi, 2, np.random.default_rng([seed, 2**31 - 1])))
    for t in range(0 if fixtures_only else trials):
        rng = np.random.default_rng([seed, t])
        phi, info = random_instance(rng, max_n, max_h, tol=tol)
        cases.append(({"trial": t, **info}, phi, int(rng.integers(1, max_p + 1)), rng))

    for ctx, phi, p, rng in cases:
        def rec(suite, metrics, _ctx=ctx):
            record(suite, metrics, _ctx)

        _run_instance(phi, p, rng, tallies, rec, tol)
        lm = min(linking_max, max_n, max_h)
        if "fixture" in ctx:
            phi_l, p_l, ctx_l = phi, p, ctx
        else:
            phi_l, info_l = random_instance(rng, lm, lm, max_rank=linking_rank, tol=tol)
            p_l = int(rng.integers(1, min(linking_max, max_p) + 1))
            ctx_l = {**ctx, "linking_instance": info_l}
        record("linking", check_linking(phi_l, p_l, rng, tol), ctx_l)
        if choi_rank(phi, tol) == 1:
            pure, p_pure = phi, p
        elif "fixture" in ctx:
            continue
        else:
            n, h = int(rng.integers(1, max_n + 1)), int(rng.integers(1, max_h + 1))
            pure = random_cpmap(n, h, 1, str(rng.choice(["raw", "contractive"])), rng, tol)
            p_pure = int(rng.integers(1, max_p + 1))
        record("purity", check_purity(pure, p_pure, int(rng.integers(0, 2**31)), tol), ctx)

    summary = {name: tallies[name].as_dict() for name in SUITES}
    return {
        "tolerances": tol.as_dict(),
        "seed": seed,
        "trials": 0 if fixtures_only else trials,
        "fixtures_only": fixtures_only,
        "max_n": max_n,
        "max_h": max_h,
        "max_p": max_p,
        "suites": summary,
        "findings": findings,
        "ok": all(t.failed == 0 for t in tallies.values()),
    }
