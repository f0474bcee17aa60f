"""JSON encoding: complex numbers as ``[re, im]``, matrices as row-major nested lists."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .cpmaps import CPMap, from_action, from_choi
from .numerics import DEFAULT_TOLERANCES, InvalidInputError, OperatorSubspace, Tolerances

__all__ = ["to_jsonable", "dumps", "decode_matrix", "encode_matrix", "cpmap_from_json", "cpmap_to_json"]


def _real(x: float) -> float | None:
    x = float(x)
    if not math.isfinite(x):
        return None
    return x + 0.0  # folds -0.0 into 0.0


def encode_matrix(m) -> list:
    m = np.asarray(m)
    if m.ndim == 0:
        z = complex(m)
        return [_real(z.real), _real(z.imag)]
    return [encode_matrix(row) for row in m]


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, OperatorSubspace):
        return [encode_matrix(b) for b in obj.basis]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj)
        return [to_jsonable(v) for v in obj] if obj.ndim else to_jsonable(obj.item())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _real(obj)
    if isinstance(obj, complex):
        return [_real(obj.real), _real(obj.imag)]
    return obj


def dumps(obj: Any, pretty: bool = False) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2 if pretty else None,
                      separators=None if pretty else (",", ":"))


def decode_matrix(data, name: str = "matrix") -> np.ndarray:
    """Inverse of :func:`encode_matrix`; plain real numbers are accepted as well."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: not a numeric nested array ({exc})") from None
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise InvalidInputError(f"{name}: expected a matrix of [re, im] pairs, got shape {arr.shape}")


def cpmap_from_json(spec: dict, tol: Tolerances = DEFAULT_TOLERANCES) -> CPMap:
    if not isinstance(spec, dict):
        raise InvalidInputError("cp_map must be an object")
    try:
        n, h = int(spec["n"]), int(spec["h"])
    except (KeyError, TypeError, ValueError):
        raise InvalidInputError("cp_map needs integer fields 'n' and 'h'") from None
    if n < 1 or h < 1:
        raise InvalidInputError("cp_map sizes must be positive")
    has_choi, has_action = "choi" in spec, "action" in spec
    if has_choi == has_action:
        raise InvalidInputError("cp_map needs exactly one of 'choi' or 'action'")
    if has_choi:
        choi = decode_matrix(spec["choi"], "choi")
        if choi.shape != (n * h, n * h):
            raise InvalidInputError(f"choi has shape {choi.shape}, expected {(n * h, n * h)}")
        return from_choi(n, h, choi, tol)
    action = spec["action"]
    if not isinstance(action, list) or len(action) != n * n:
        raise InvalidInputError(f"action must list {n * n} images")
    images = [decode_matrix(m, f"action[{i}]") for i, m in enumerate(action)]
    for i, m in enumerate(images):
        if m.shape != (h, h):
            raise InvalidInputError(f"action[{i}] has shape {m.shape}, expected {(h, h)}")
    return from_action(images, tol)


def cpmap_to_json(phi: CPMap) -> dict:
    return {"n": phi.n, "h": phi.h, "choi": encode_matrix(phi.choi)}
