"""JSON problem files and result envelopes.

A problem file is one JSON object with matrices as nested arrays::

    {"A": [[2, 0], [0, 0.5]], "C": [[1, 0], [0, 1]],
     "Q": [[0.3333333333333333, 0], [0, -1.3333333333333333]],
     "tol": 1e-9}

Floats are written with Python's shortest round-trip representation, so
``load(dump(x)) == x`` bit for bit.  NaN and infinities are rejected.
"""

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import AllPassError, DimensionError
from .linalg import Subspace
from .realization import StateSpace

__all__ = ["ParseError", "ProblemFile", "load_problem", "parse_problem", "encode",
           "dumps", "digest", "write_atomic", "matrix_from_json"]

MATRIX_FIELDS = ("A", "B", "C", "D", "P", "Q", "delta")


class ParseError(AllPassError):
    """The input document is not a valid problem file."""


@dataclass(frozen=True, eq=False)
class ProblemFile:
    A: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    D: Optional[np.ndarray] = None
    P: Optional[np.ndarray] = None
    Q: Optional[np.ndarray] = None
    subspace: Optional[Subspace] = None
    delta: Optional[np.ndarray] = None
    tol: Optional[float] = None
    digest: str = ""

    def require(self, *names):
        missing = [k for k in names if getattr(self, k) is None]
        if missing:
            raise ParseError(f"missing required field(s): {', '.join(missing)}")
        return [getattr(self, k) for k in names]

    def system(self):
        A, B, C, D = self.require("A", "B", "C", "D")
        return StateSpace(A, B, C, D)


def _reject_constant(name):
    raise ParseError(f"non-finite number {name!r} is not allowed")


def matrix_from_json(value, name):
    """Nested list -> 2-D float array; a flat list is a row, a number is 1x1."""
    if isinstance(value, bool) or value is None:
        raise ParseError(f"{name}: expected a number or nested array")
    if isinstance(value, (int, float)):
        return np.array([[float(value)]])
    if not isinstance(value, list):
        raise ParseError(f"{name}: expected a nested array")
    if not value:
        return np.zeros((0, 0))
    if all(isinstance(v, list) for v in value):
        widths = {len(v) for v in value}
        if len(widths) != 1:
            raise ParseError(f"{name}: rows have different lengths {sorted(widths)}")
        rows = value
    elif any(isinstance(v, list) for v in value):
        raise ParseError(f"{name}: mixes numbers and arrays")
    else:
        rows = [value]
    out = np.zeros((len(rows), len(rows[0])))
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ParseError(f"{name}[{i}][{j}]: expected a number, got {x!r}")
            if not math.isfinite(x):
                raise ParseError(f"{name}[{i}][{j}]: non-finite value")
            out[i, j] = float(x)
    return out


def _subspace(value, n):
    if isinstance(value, str):
        if n is None:
            raise ParseError("subspace keyword needs A to fix the dimension")
        if value == "zero":
            return Subspace.zero(n)
        if value == "full":
            return Subspace.full(n)
        raise ParseError(f"unknown subspace keyword {value!r}")
    M = matrix_from_json(value, "subspace")
    if M.size == 0:
        if n is None:
            raise ParseError("empty subspace needs A to fix the dimension")
        return Subspace.zero(n)
    if n is not None and M.shape[0] != n:
        if M.shape[1] == n and M.shape[0] == 1:
            M = M.T
        else:
            raise ParseError(f"subspace basis must have {n} rows, got {M.shape}")
    return Subspace.span(M)


def parse_problem(text):
    """Parse a problem document (``str`` or ``bytes``)."""
    raw = text.encode() if isinstance(text, str) else bytes(text)
    try:
        doc = json.loads(raw.decode("utf-8"), parse_constant=_reject_constant)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    unknown = set(doc) - set(MATRIX_FIELDS) - {"subspace", "tol"}
    if unknown:
        raise ParseError(f"unknown field(s): {', '.join(sorted(unknown))}")
    fields = {k: matrix_from_json(doc[k], k) for k in MATRIX_FIELDS if k in doc}
    n = fields["A"].shape[0] if "A" in fields else None
    if "A" in fields and fields["A"].shape != (n, n):
        raise ParseError(f"A must be square, got {fields['A'].shape}")
    if "D" in fields and fields["D"].size == 0:
        raise ParseError("D must be non-empty")
    if n == 0:
        # a 0-state problem: B and C are empty but still carry m
        m = fields["D"].shape[0] if "D" in fields else None
        if m is not None:
            fields["B"] = np.zeros((0, m))
            fields["C"] = np.zeros((m, 0))
    if "subspace" in doc:
        fields["subspace"] = _subspace(doc["subspace"], n)
    tol = doc.get("tol")
    if tol is not None:
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
            raise ParseError("tol must be a positive number")
        tol = float(tol)
    try:
        _check_shapes(fields, n)
    except DimensionError as exc:
        raise ParseError(str(exc)) from exc
    return ProblemFile(**fields, tol=tol, digest=digest(raw))


def _check_shapes(f, n):
    if n is None:
        return
    m = None
    for name, axis in (("B", 1), ("C", 0), ("D", 0)):
        if name in f and f[name].size:
            m = f[name].shape[axis]
            break
    expect = {"B": (n, m), "C": (m, n), "D": (m, m), "P": (n, n), "Q": (n, n), "delta": (n, n)}
    for name, shape in expect.items():
        if name not in f or (f[name].size == 0 and 0 in shape):
            continue
        got = f[name].shape
        if any(s is not None and g != s for g, s in zip(got, shape)):
            raise DimensionError(f"{name} has shape {got}, expected {shape}")


def load_problem(path):
    """Read and parse a problem file; ``"-"`` reads standard input."""
    import sys
    try:
        if path == "-":
            data = sys.stdin.buffer.read()
        else:
            with open(path, "rb") as fh:
                data = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_problem(data)


def digest(data):
    return "sha256:" + hashlib.sha256(data).hexdigest()


def encode(obj):
    """Convert numpy values, systems and subspaces to JSON-ready structures."""
    if isinstance(obj, StateSpace):
        return {k: encode(v) for k, v in zip("ABCD", obj.matrices())}
    if isinstance(obj, Subspace):
        return {"dim": obj.dim, "basis": encode(obj.basis)}
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[1] == 0:
            return [[] for _ in range(obj.shape[0])]
        return encode(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return x
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    return obj


def dumps(obj):
    # json writes floats with repr(), the shortest string that round-trips
    return json.dumps(encode(obj), indent=2, allow_nan=False) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".allpass-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
