"""The ten acceptance criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (the lines are printed even
without ``-s``).
"""

from __future__ import annotations

import functools
import time
import warnings

import numpy as np
import pytest

from cpdomains.cli import main
from cpdomains.cpmaps import (
    UnitalFallbackWarning,
    apply,
    choi_rank,
    is_contractive,
    is_unital,
    minimal_stinespring,
    random_cpmap,
)
from cpdomains.domains import (
    in_mult_domain,
    mult_domain_def,
    mult_domain_stinespring,
    ternary_domain_def,
    ternary_domain_stinespring,
    verify_structure,
)
from cpdomains.fixtures import ex_a, ex_b
from cpdomains.hmodules import (
    ModuleSpace,
    canonical_phi_map,
    module_domain_def,
    module_structure,
    twist_phi_map,
)
from cpdomains.linking import induced_cp_map, verify_linking_domains
from cpdomains.numerics import span_of, subspace_compare
from cpdomains.verify import check_module, check_purity, structured_cpmap

from conftest import E

NORMALIZATIONS = ("raw", "contractive", "unital")


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")

    return emit


def _quiet_random(*args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnitalFallbackWarning)
        return random_cpmap(*args)


@functools.lru_cache(maxsize=None)
def domain_corpus():
    """Every (n, h, rank) with n, h <= 4, twice, cycling normalizations, plus structured maps."""
    maps = []
    for rep in range(2):
        for n in range(1, 5):
            for h in range(1, 5):
                for rank in range(1, n * h + 1):
                    norm_ = NORMALIZATIONS[len(maps) % 3]
                    maps.append((f"gauss{rep}-{n}{h}r{rank}-{norm_}", _quiet_random(n, h, rank, norm_, [rep, n, h, rank])))
    rng = np.random.default_rng(2024)
    for t in range(40):
        family = ("compression", "block", "ampliation")[t % 3]
        n, h = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        maps.append((f"{family}-{t}", structured_cpmap(rng, n, h, family)))
    return maps


@functools.lru_cache(maxsize=None)
def domain_results():
    start = time.perf_counter()
    rows = []
    for name, phi in domain_corpus():
        d = minimal_stinespring(phi)
        Md, Td = mult_domain_def(phi), ternary_domain_def(phi)
        Ms = mult_domain_stinespring(phi, d)
        Ts = ternary_domain_stinespring(phi, d, Md.subspace)
        cm, ct = subspace_compare(Md.subspace, Ms.subspace), subspace_compare(Td.subspace, Ts.subspace)
        rows.append(
            {
                "name": name,
                "phi": phi,
                "d": d,
                "M": Md.subspace,
                "T": Td.subspace,
                "angle": max(cm.max_angle_sine, ct.max_angle_sine),
                "dims_agree": Md.dim == Ms.dim and Td.dim == Ts.dim,
            }
        )
    return rows, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def module_results():
    rows = []
    for idx, row in enumerate(domain_results()[0][::2]):
        rng = np.random.default_rng([7, idx])
        p = 1 + idx % 3
        metrics, computed = check_module(row["phi"], p, row["M"], row["T"], row["d"], rng, n_random=20)
        rows.append({**metrics, "name": row["name"], "X": computed["X"], "M": row["M"], "T": row["T"]})
    return rows


def linking_instance(seed: int):
    rng = np.random.default_rng([11, seed])
    n, h, p = (int(v) for v in rng.integers(1, 4, size=3))
    rank = int(rng.integers(1, n * h + 1))
    # every third instance is left raw so non-contractive maps are included
    norm_ = ("raw", "contractive", "unital")[seed % 3]
    return _quiet_random(n, h, rank, norm_, rng), p, rng


@functools.lru_cache(maxsize=None)
def linking_results():
    rows = []
    for seed in range(60):
        phi, p, rng = linking_instance(seed)
        X = ModuleSpace(p, phi.n)
        M, T = mult_domain_def(phi).subspace, ternary_domain_def(phi).subspace
        out = {"seed": seed, "contractive": is_contractive(phi), "n": phi.n, "h": phi.h, "p": p}
        Phi = canonical_phi_map(phi, X)
        for tag, R in (("canonical", Phi), ("twisted", twist_phi_map(Phi, rng))):
            Xs = module_domain_def(R)
            out[tag] = {"X": Xs, **verify_linking_domains(induced_cp_map(R), Xs, M, T)}
        rows.append(out)
    return rows


# 1


def test_criterion_01_corner_example(report):
    start = time.perf_counter()
    phi = ex_a()
    X = ModuleSpace(2, 2)
    M, T = mult_domain_def(phi).subspace, ternary_domain_def(phi).subspace
    Phi = canonical_phi_map(phi, X)
    Xs = module_domain_def(Phi)
    elapsed = time.perf_counter() - start
    diag = span_of([E(0, 0, 2), E(1, 1, 2)], 2, 2)
    corner = span_of([E(0, 0, 2)], 2, 2)
    column = span_of([E(0, 0, 2), E(1, 0, 2)], 2, 2)
    dims = (M.dim, T.dim, Xs.dim)
    angle = max(
        subspace_compare(M, diag).max_angle_sine,
        subspace_compare(T, corner).max_angle_sine,
        subspace_compare(Xs, column).max_angle_sine,
    )
    # displayed map: x -> x E_11
    phi_map = max(np.linalg.norm(Phi(x) - x @ E(0, 0, 2), 2) for x in X.basis())
    ok = dims == (2, 1, 2) and angle < 1e-8 and phi_map < 1e-10 and elapsed < 1.0
    report(1, "corner example", ok, f"dims={dims} max_sine={angle:.1e} phi_map_residual={phi_map:.1e} time={elapsed:.3f}s")
    assert ok


# 2


def test_criterion_02_contractivity_is_needed(report):
    phi = ex_b()
    Phi = canonical_phi_map(phi, ModuleSpace(2, 2))
    x0 = np.array([[1, 1], [0, 0]], dtype=complex)
    g = x0.conj().T @ x0
    cube = np.linalg.norm(Phi(x0 @ g) - Phi(x0) @ apply(phi, g), 2)
    member = in_mult_domain(phi, g)
    witness = np.linalg.norm(apply(phi, g @ E(1, 0, 2)) - apply(phi, g) @ apply(phi, E(1, 0, 2)), 2)
    contractive = is_contractive(phi)
    ok = cube < 1e-10 and not member and witness >= 2 - 1e-8 and not contractive
    report(2, "non-contractive counterexample", ok,
           f"cube_defect={cube:.1e} gram_in_M={member} witness={witness:.6f} contractive={contractive}")
    assert ok


# 3


def test_criterion_03_cross_algorithm_domains(report):
    rows, elapsed = domain_results()
    ranks = {(r["phi"].n, r["phi"].h, choi_rank(r["phi"])) for r in rows}
    full_rank_cover = all((n, h, k) in ranks for n in range(1, 5) for h in range(1, 5) for k in range(1, n * h + 1))
    worst = max(r["angle"] for r in rows)
    dims = all(r["dims_agree"] for r in rows)
    ok = len(rows) >= 200 and full_rank_cover and worst < 1e-7 and dims and elapsed < 60
    report(3, "definitional vs dilation domains", ok,
           f"maps={len(rows)} all_ranks={full_rank_cover} max_sine={worst:.1e} time={elapsed:.1f}s")
    assert ok


# 4


def test_criterion_04_module_domain_four_ways(report):
    rows = module_results()
    worst = max(max(r["angle_stinespring"], r["angle_ideal"]) for r in rows)
    disagreements = sum(r["predicate_disagreements"] for r in rows)
    ps = sorted({r["p"] for r in rows})
    ok = len(rows) >= 100 and worst < 1e-7 and disagreements == 0 and ps == [1, 2, 3]
    report(4, "module domain four ways", ok,
           f"instances={len(rows)} p={ps} max_sine={worst:.1e} predicate_disagreements={disagreements}")
    assert ok


# 5


def test_criterion_05_structure(report):
    worst = 0.0
    failures = 0
    for r in domain_results()[0]:
        s = verify_structure(r["M"], r["T"], r["phi"].n)
        worst = max(worst, s.residual)
        failures += not s.ok
    for r in module_results():
        ms = module_structure(r["X"], r["M"], r["T"])
        worst = max(worst, ms["residual"])
        failures += not (
            ms["left_compact_invariant"] and ms["right_M_invariant"] and ms["inner_products_in_M"] and ms["inner_products_span_T"]
        )
    ok = failures == 0 and worst < 1e-8
    report(5, "algebraic structure", ok, f"failed_checks={failures} max_residual={worst:.1e}")
    assert ok


# 6


def test_criterion_06_dilation_contract(report):
    worst_rec = worst_iso = 0.0
    minimal = True
    unital = 0
    for r in domain_results()[0]:
        phi, d = r["phi"], r["d"]
        worst_rec = max(worst_rec, d.reconstruction_residual(phi))
        minimal &= d.minimality_dimension() == phi.n * choi_rank(phi)
        if is_unital(phi):
            unital += 1
            worst_iso = max(worst_iso, np.linalg.norm(d.V.conj().T @ d.V - np.eye(phi.h), 2))
    ok = worst_rec < 1e-10 and minimal and worst_iso < 1e-10 and unital > 0
    report(6, "dilation contract", ok,
           f"max_reconstruction={worst_rec:.1e} minimal={minimal} unital_maps={unital} max_isometry_defect={worst_iso:.1e}")
    assert ok


# 7


def test_criterion_07_induced_domains(report):
    rows = linking_results()
    worst = max(max(r["canonical"]["angle_M"], r["canonical"]["angle_T"]) for r in rows)
    equal = all(r["canonical"]["equal"] and r["canonical"]["equal_T"] for r in rows)
    non_contractive = sum(not r["contractive"] for r in rows)
    phi = ex_a()
    Phi = canonical_phi_map(phi, ModuleSpace(2, 2))
    rep = verify_linking_domains(induced_cp_map(Phi), module_domain_def(Phi), mult_domain_def(phi).subspace,
                                 ternary_domain_def(phi).subspace)
    corner = (rep["dim_M_tilde"], rep["dim_T_tilde"])
    ok = len(rows) >= 50 and equal and worst < 1e-7 and non_contractive > 0 and corner == (10, 9)
    report(7, "induced map domains", ok,
           f"instances={len(rows)} non_contractive={non_contractive} max_sine={worst:.1e} corner_dims={corner}")
    assert ok


# 8


def test_criterion_08_purity_chain(report):
    results = []
    for seed in range(24):
        rng = np.random.default_rng([13, seed])
        n, h, p = (int(v) for v in rng.integers(1, 4, size=3))
        phi = random_cpmap(n, h, 1, ("raw", "contractive")[seed % 2], rng)
        results.append(check_purity(phi, p, seed))
    commutant = all(r["irreducible"] for r in results)
    rank_one = all(r["induced_choi_rank"] == 1 for r in results)
    worst = max(r["isometry_relation_residual"] for r in results)
    ok = len(results) >= 20 and commutant and rank_one and worst < 1e-9
    report(8, "purity chain", ok,
           f"maps={len(results)} irreducible={commutant} induced_rank_one={rank_one} max_relation={worst:.1e}")
    assert ok


# 9


def test_criterion_09_phi_map_independence(report):
    rows = linking_results()
    worst = 0.0
    for r in rows:
        a, b = r["canonical"], r["twisted"]
        worst = max(
            worst,
            subspace_compare(a["X"], b["X"]).max_angle_sine,
            subspace_compare(a["M_tilde"], b["M_tilde"]).max_angle_sine,
            subspace_compare(a["T_tilde"], b["T_tilde"]).max_angle_sine,
        )
    ok = len(rows) >= 50 and worst < 1e-8
    report(9, "independence of the phi-map", ok, f"seeds={len(rows)} max_sine={worst:.1e}")
    assert ok


# 10


def test_criterion_10_deterministic_output(report, capsys):
    argv = ["verify", "--trials", "12", "--seed", "3", "--max-n", "3", "--max-h", "3", "--max-p", "3"]
    outputs = []
    codes = []
    for _ in range(2):
        codes.append(main(argv))
        outputs.append(capsys.readouterr().out.encode())
    ok = outputs[0] == outputs[1] and codes == [0, 0]
    report(10, "deterministic verify output", ok, f"bytes={len(outputs[0])} identical={outputs[0] == outputs[1]} exit={codes}")
    assert ok
