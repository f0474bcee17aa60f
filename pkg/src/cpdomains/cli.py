"""Command-line front end.

Exit codes: 0 success, 1 the computed results disagree with each other or
with a predicted structure, 2 the input could not be used.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .cpmaps import (
    CPMap,
    DegenerateDilationError,
    NotCompletelyPositiveError,
    choi_rank,
    is_completely_positive,
    is_contractive,
    is_pure,
    is_unital,
    minimal_stinespring,
    norm,
)
from .domains import (
    mult_domain_def,
    mult_domain_stinespring,
    ternary_domain_def,
    ternary_domain_stinespring,
    verify_structure,
)
from .fixtures import FIXTURE_NAMES, get_fixture
from .hmodules import (
    ModuleSpace,
    canonical_phi_map,
    gram_predicate,
    module_domain_def,
    module_domain_from_ideal,
    module_domain_stinespring,
    ternary_residual,
)
from .jsonio import cpmap_from_json, dumps, encode_matrix
from .linking import induced_cp_map, linking_action_checks, purity_suite, verify_linking_domains
from .numerics import DEFAULT_TOLERANCES, InvalidInputError, Tolerances, subspace_compare
from .verify import run_verify

EXIT_OK, EXIT_DISAGREE, EXIT_INPUT = 0, 1, 2


class _Problem:
    def __init__(self, phi: CPMap, p: int | None, tol: Tolerances, source: str):
        self.phi, self.p, self.tol, self.source = phi, p, tol, source


def _tolerances(args, file_tol: dict | None) -> Tolerances:
    base = DEFAULT_TOLERANCES.as_dict()
    if file_tol:
        if not isinstance(file_tol, dict):
            raise InvalidInputError("'tolerances' must be an object")
        unknown = set(file_tol) - set(base)
        if unknown:
            raise InvalidInputError(f"unknown tolerance fields: {sorted(unknown)}")
        base.update({k: float(v) for k, v in file_tol.items()})
    for flag, key in (("tol_rank", "rank_rtol"), ("tol_residual", "residual_atol"), ("tol_angle", "angle_tol")):
        value = getattr(args, flag, None)
        if value is not None:
            base[key] = value
    return Tolerances(**base)


def _load_problem(args) -> _Problem:
    data: dict = {}
    if args.input:
        try:
            with open(args.input, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InvalidInputError(f"cannot read {args.input}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed JSON in {args.input}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidInputError("problem file must be a JSON object")
    tol = _tolerances(args, data.get("tolerances"))
    fixture = args.fixture or data.get("fixture")
    if fixture is None and isinstance(data.get("fixtures"), list) and data["fixtures"]:
        fixture = data["fixtures"][0]
    if fixture is not None and "cp_map" in data:
        raise InvalidInputError("give either a fixture or an explicit cp_map, not both")
    if fixture is not None:
        n = args.n if args.n is not None else data.get("n")
        phi = get_fixture(str(fixture), None if n is None else int(n)).with_tolerances(tol)
        source = str(fixture).upper()
    elif "cp_map" in data:
        phi = cpmap_from_json(data["cp_map"], tol)
        source = args.input
    else:
        raise InvalidInputError("no map given: use --input FILE with a 'cp_map' or --fixture NAME")
    p = args.p if getattr(args, "p", None) is not None else None
    if p is None and data.get("module") is not None:
        module = data["module"]
        if not isinstance(module, dict) or "p" not in module:
            raise InvalidInputError("'module' must be an object with an integer 'p'")
        p = module["p"]
    if p is not None:
        p = int(p)
        if p < 1:
            raise InvalidInputError("module row size p must be at least 1")
    return _Problem(phi, p, tol, source)


def _domain_json(report) -> dict:
    return {
        "dimension": report.dim,
        "basis": report.subspace,
        "residual": report.residual,
        "algorithm": report.algorithm,
        "structure": report.structure,
    }


def _map_summary(phi: CPMap, tol: Tolerances) -> dict:
    return {
        "n": phi.n,
        "h": phi.h,
        "choi_rank": choi_rank(phi, tol),
        "completely_positive": is_completely_positive(phi, tol),
        "unital": is_unital(phi, tol),
        "contractive": is_contractive(phi, tol),
        "pure": is_pure(phi, tol),
    }


def cmd_analyze(prob: _Problem) -> tuple[dict, int]:
    phi, tol = prob.phi, prob.tol
    Md, Td = mult_domain_def(phi, tol), ternary_domain_def(phi, tol)
    out = {
        "map": _map_summary(phi, tol),
        "dims": {"M": Md.dim, "T": Td.dim},
        "M": {"definitional": _domain_json(Md)},
        "T": {"definitional": _domain_json(Td)},
        "structure": verify_structure(Md.subspace, Td.subspace, phi.n, tol).as_dict(),
    }
    code = EXIT_OK
    if choi_rank(phi, tol) == 0:
        out["agreement"] = {"skipped": "zero map has no dilation; definitional results only"}
    else:
        d = minimal_stinespring(phi, tol)
        Ms = mult_domain_stinespring(phi, d, tol)
        Ts = ternary_domain_stinespring(phi, d, Md.subspace, tol)
        out["M"]["stinespring"] = _domain_json(Ms)
        out["T"]["stinespring"] = _domain_json(Ts)
        cm = subspace_compare(Md.subspace, Ms.subspace, tol)
        ct = subspace_compare(Td.subspace, Ts.subspace, tol)
        out["agreement"] = {"M": cm.as_dict(), "T": ct.as_dict()}
        if not (cm.equal and ct.equal):
            code = EXIT_DISAGREE
    if not out["structure"]["ok"]:
        code = EXIT_DISAGREE
    return out, code


def _require_module(prob: _Problem) -> ModuleSpace:
    if prob.p is None:
        raise InvalidInputError("this command needs a module: add {'module': {'p': P}} or pass --p")
    return ModuleSpace(prob.p, prob.phi.n)


def cmd_module_domain(prob: _Problem) -> tuple[dict, int]:
    phi, tol = prob.phi, prob.tol
    X = _require_module(prob)
    T = ternary_domain_def(phi, tol).subspace
    subspaces = {"from_ideal": module_domain_from_ideal(X, T, tol)}
    out: dict = {"map": _map_summary(phi, tol), "p": X.p}
    if choi_rank(phi, tol) == 0:
        # every phi-map of the zero map vanishes, so X_phi = X
        subspaces["definitional"] = X.full_subspace()
        out["note"] = "zero map: dilation-based algorithms skipped"
    else:
        d = minimal_stinespring(phi, tol)
        Phi = canonical_phi_map(phi, X, tol, dilation=d)
        subspaces["definitional"] = module_domain_def(Phi, tol)
        subspaces["stinespring"] = module_domain_stinespring(phi, d, X, tol)
    names = sorted(subspaces)
    pairwise = {}
    agree = True
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            c = subspace_compare(subspaces[a], subspaces[b], tol)
            pairwise[f"{a}|{b}"] = c.max_angle_sine
            agree &= c.equal
    Xd = subspaces["definitional"]
    pointwise = {"checked": 0, "disagreements": 0}
    if "stinespring" in subspaces:
        for x in list(Xd.basis) + list(X.basis()):
            truth = Xd.contains(x, tol)
            size = max(1.0, float(np.linalg.norm(x)))
            scale = max(1.0, norm(phi))
            votes = (gram_predicate(x, T, tol), ternary_residual(Phi, x, tol) <= tol.residual_atol * size * scale**1.5)
            pointwise["checked"] += 1
            pointwise["disagreements"] += sum(v != truth for v in votes)
        agree &= pointwise["disagreements"] == 0
    out.update(
        {
            "dimension": Xd.dim,
            "basis": Xd,
            "dimensions": {k: v.dim for k, v in subspaces.items()},
            "pairwise_max_angle_sine": pairwise,
            "pointwise": pointwise,
            "agree": bool(agree),
        }
    )
    return out, EXIT_OK if agree else EXIT_DISAGREE


def cmd_dilate(prob: _Problem) -> tuple[dict, int]:
    phi, tol = prob.phi, prob.tol
    d = minimal_stinespring(phi, tol)
    return {
        "n": phi.n,
        "h": phi.h,
        "r": d.r,
        "V": encode_matrix(d.V),
        "kraus": [encode_matrix(K) for K in d.kraus],
        "reconstruction_residual": d.reconstruction_residual(phi),
        "kraus_residual": d.kraus_residual(phi),
        "minimality_dimension": d.minimality_dimension(tol.rank_rtol),
        "expected_minimality_dimension": phi.n * d.r,
    }, EXIT_OK


def cmd_linking(prob: _Problem, seed: int) -> tuple[dict, int]:
    phi, tol = prob.phi, prob.tol
    X = _require_module(prob)
    Phi = canonical_phi_map(phi, X, tol)
    ind = induced_cp_map(Phi, tol)
    M = mult_domain_def(phi, tol).subspace
    T = ternary_domain_def(phi, tol).subspace
    Xd = module_domain_def(Phi, tol)
    rep = verify_linking_domains(ind, Xd, M, T, tol)
    rep.pop("M_tilde")
    rep.pop("T_tilde")
    out = {
        "map": _map_summary(phi, tol),
        "p": X.p,
        "induced": {"n": ind.as_cpmap.n, "h": ind.as_cpmap.h, "choi": encode_matrix(ind.as_cpmap.choi)},
        "induced_invariants": ind.invariant_residuals(),
        "action_checks": linking_action_checks(ind, Xd, tol, T=T),
        **rep,
    }
    if is_pure(phi, tol):
        out["purity"] = purity_suite(phi, X, tol, seed=seed)
    else:
        out["purity"] = {"skipped": "map is not pure (Choi rank > 1)"}
    ok = rep["equal"] and rep["equal_T"] and rep["sub_linking_contained"]
    return out, EXIT_OK if ok else EXIT_DISAGREE


def _add_common(sp: argparse.ArgumentParser, problem: bool = True) -> None:
    if problem:
        sp.add_argument("--input", metavar="PATH", help="JSON problem file")
        sp.add_argument("--fixture", choices=FIXTURE_NAMES, type=str.upper, help="built-in example map")
        sp.add_argument("--n", type=int, help="matrix size for EX-ID / EX-0")
        sp.add_argument("--p", type=int, help="module row size (overrides the file)")
    sp.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")
    sp.add_argument("--tol-rank", type=float, dest="tol_rank")
    sp.add_argument("--tol-residual", type=float, dest="tol_residual")
    sp.add_argument("--tol-angle", type=float, dest="tol_angle")
    sp.add_argument("--seed", type=int, default=0)
    fmt = sp.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="pretty", action="store_false", help="compact JSON (default)")
    fmt.add_argument("--pretty", dest="pretty", action="store_true", help="indented JSON")
    sp.set_defaults(pretty=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpdomains",
        description="Multiplicative and ternary domains of completely positive maps on matrix algebras.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analyze", "multiplicative and ternary domains by both algorithms"),
        ("module-domain", "module ternary domain of M_{p,n}"),
        ("dilate", "minimal Stinespring dilation"),
        ("linking", "induced map on the linking algebra and its domains"),
    ):
        _add_common(sub.add_parser(name, help=help_))
    vp = sub.add_parser("verify", help="randomized verification of all invariants")
    _add_common(vp, problem=False)
    vp.add_argument("--trials", type=int, default=20)
    vp.add_argument("--max-n", type=int, default=3, dest="max_n")
    vp.add_argument("--max-h", type=int, default=3, dest="max_h")
    vp.add_argument("--max-p", type=int, default=3, dest="max_p")
    vp.add_argument("--fixtures-only", action="store_true", dest="fixtures_only")
    return parser


def _emit(out: dict, args) -> None:
    text = dumps(out, pretty=args.pretty) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            tol = _tolerances(args, None)
            for name in ("trials", "max_n", "max_h", "max_p"):
                if getattr(args, name) < (0 if name == "trials" else 1):
                    raise InvalidInputError(f"--{name.replace('_', '-')} is out of range")
            out = run_verify(
                trials=args.trials,
                seed=args.seed,
                max_n=args.max_n,
                max_h=args.max_h,
                max_p=args.max_p,
                tol=tol,
                fixtures_only=args.fixtures_only,
            )
            code = EXIT_OK if out["ok"] else EXIT_DISAGREE
        else:
            prob = _load_problem(args)
            if args.command == "analyze":
                out, code = cmd_analyze(prob)
            elif args.command == "module-domain":
                out, code = cmd_module_domain(prob)
            elif args.command == "dilate":
                out, code = cmd_dilate(prob)
            else:
                out, code = cmd_linking(prob, args.seed)
            out = {"command": args.command, "source": prob.source, "tolerances": prob.tol.as_dict(), **out}
    except NotCompletelyPositiveError as exc:
        print(f"error: input map is not completely positive: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateDilationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidInputError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out["exit_code"] = code
    _emit(out, args)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
