"""JSON problem documents.

A document is an object with ``"kind"`` (``"flow"`` or ``"pair"``), the
matrices of that kind (``S``, ``A``, ``B`` or ``H0``, ``V``), and optional
``"eps"``, ``"grid": {"min", "max", "count"}``, ``"tolerances"`` and
``"seed"``. Matrices are row-major lists of rows; each entry is an
``[re, im]`` pair (a bare number is accepted as a real entry).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np

from .errors import NotPSDError, ProblemFormatError
from .matcore import Tolerances, hermiticity_defect, opnorm, psd_part

__all__ = ["ProblemFile", "parse_problem", "serialize_problem", "MATRIX_FIELDS"]

MATRIX_FIELDS = {"flow": ("S", "A", "B"), "pair": ("H0", "V")}
_OPTIONAL = {"flow": ("A", "B"), "pair": ()}
_KNOWN = {"kind", "S", "A", "B", "H0", "V", "eps", "grid", "tolerances", "seed"}


@dataclass(frozen=True, eq=False)
class ProblemFile:
    kind: str
    matrices: dict
    eps: Optional[Tuple[float, ...]] = None
    grid: Optional[Tuple[float, float, int]] = None
    tolerances: Optional[Tolerances] = None
    seed: Optional[int] = None

    @property
    def n(self):
        return next(iter(self.matrices.values())).shape[0]

    @property
    def tol(self) -> Tolerances:
        return self.tolerances or Tolerances()

    def __getitem__(self, name):
        return self.matrices[name]

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        if (self.kind, self.eps, self.grid, self.tolerances, self.seed) != (
            other.kind, other.eps, other.grid, other.tolerances, other.seed
        ):
            return False
        if self.matrices.keys() != other.matrices.keys():
            return False
        return all(np.array_equal(self.matrices[k], other.matrices[k]) for k in self.matrices)

    __hash__ = None


def _line_of(text, key):
    if text is None:
        return None
    needle = f'"{key}"'
    idx = text.find(needle)
    return None if idx < 0 else text.count("\n", 0, idx) + 1


def _fail(msg, text, key):
    line = _line_of(text, key)
    where = f"field '{key}'" + (f" (line {line})" if line else "")
    return ProblemFormatError(f"{where}: {msg}")


def _entry(x):
    if isinstance(x, bool):
        raise TypeError("boolean entry")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise TypeError(f"entry {x!r} is not a number or an [re, im] pair")


def _matrix(value, key, text):
    if not isinstance(value, list) or not value:
        raise _fail("matrix must be a non-empty list of rows", text, key)
    n = len(value)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise _fail(f"matrix is not square: row {i} has {got} entries, expected {n}", text, key)
        for j, x in enumerate(row):
            try:
                out[i, j] = _entry(x)
            except TypeError as exc:
                raise _fail(f"row {i}, column {j}: {exc}", text, key) from None
    if not np.all(np.isfinite(out)):
        raise _fail("matrix has non-finite entries", text, key)
    return out


def _hermitian(M, key, text, tol):
    defect = hermiticity_defect(M)
    if defect > tol.tol_herm * max(1.0, opnorm(M)):
        raise _fail(f"not Hermitian: |M - M*| = {defect:.3e} exceeds tol_herm", text, key)
    return (M + M.conj().T) / 2


def _read(source):
    if isinstance(source, os.PathLike) or (
        isinstance(source, str) and not source.lstrip().startswith("{") and os.path.exists(source)
    ):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    return source


def parse_problem(source) -> ProblemFile:
    """Parse a path, JSON text or already-decoded dict into a validated ``ProblemFile``."""
    text = None
    if isinstance(source, dict):
        doc = source
    else:
        text = _read(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        raise _fail("unknown field", text, unknown[0])

    kind = doc.get("kind")
    if kind not in MATRIX_FIELDS:
        raise _fail(f"kind must be 'flow' or 'pair', got {kind!r}", text, "kind")

    tolerances = None
    if doc.get("tolerances") is not None:
        t = doc["tolerances"]
        try:
            tolerances = Tolerances(**{k: float(v) for k, v in t.items()})
        except (TypeError, ValueError, AttributeError) as exc:
            raise _fail(str(exc), text, "tolerances") from None
    tol = tolerances or Tolerances()

    for other_kind, names in MATRIX_FIELDS.items():
        if other_kind != kind:
            stray = [k for k in names if k in doc and k not in MATRIX_FIELDS[kind]]
            if stray:
                raise _fail(f"not allowed for kind {kind!r}", text, stray[0])

    mats = {}
    for key in MATRIX_FIELDS[kind]:
        if key not in doc or doc[key] is None:
            if key in _OPTIONAL[kind]:
                continue
            raise _fail("missing required matrix", text, key)
        mats[key] = _hermitian(_matrix(doc[key], key, text), key, text, tol)
    dims = {k: m.shape[0] for k, m in mats.items()}
    if len(set(dims.values())) > 1:
        first = MATRIX_FIELDS[kind][0]
        bad = next(k for k, d in dims.items() if d != dims[first])
        raise _fail(f"dimension mismatch: {bad} is {dims[bad]}x{dims[bad]}, {first} is {dims[first]}x{dims[first]}", text, bad)
    if "B" in mats:
        try:
            psd_part(mats["B"], tol)
        except NotPSDError as exc:
            line = _line_of(text, "B")
            where = "field 'B'" + (f" (line {line})" if line else "")
            raise NotPSDError(f"{where}: not positive semidefinite, eigenvalue {exc.eigenvalue:.6g}", exc.eigenvalue) from None

    eps = None
    if doc.get("eps") is not None:
        e = doc["eps"]
        e = e if isinstance(e, list) else [e]
        try:
            eps = tuple(float(v) for v in e)
        except (TypeError, ValueError):
            raise _fail("eps must be a number or a list of numbers", text, "eps") from None
        if any(v < 0 for v in eps):
            raise _fail("eps values must be non-negative", text, "eps")

    grid = None
    if doc.get("grid") is not None:
        g = doc["grid"]
        try:
            grid = (float(g["min"]), float(g["max"]), int(g["count"]))
        except (TypeError, KeyError, ValueError):
            raise _fail("grid needs numeric 'min', 'max' and integer 'count'", text, "grid") from None
        if grid[2] < 1 or grid[1] < grid[0]:
            raise _fail("grid needs count >= 1 and min <= max", text, "grid")

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise _fail("seed must be an integer", text, "seed")

    return ProblemFile(kind, mats, eps, grid, tolerances, seed)


def _encode(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def serialize_problem(p: ProblemFile) -> str:
    doc = {"kind": p.kind}
    for k, M in p.matrices.items():
        doc[k] = _encode(M)
    if p.eps is not None:
        doc["eps"] = list(p.eps)
    if p.grid is not None:
        doc["grid"] = {"min": p.grid[0], "max": p.grid[1], "count": p.grid[2]}
    if p.tolerances is not None:
        doc["tolerances"] = {f.name: getattr(p.tolerances, f.name) for f in fields(Tolerances)}
    if p.seed is not None:
        doc["seed"] = p.seed
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
