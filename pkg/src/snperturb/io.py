"""JSON envelopes for matrices and embedding claims.

A matrix is ``{"rows": m, "cols": n, "entries": [[re, im], ...]}`` in row-major
order.  Entries may also be bare real numbers.  Python's float repr
round-trips exactly, so a matrix written here reloads bit-identically.
"""
import json
import math

import numpy as np

from .embed import EmbeddingClaim


class InputError(ValueError):
    """Malformed input file; the message names the offending field."""


def matrix_to_json(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise InputError(f"matrix must be 2-d, got shape {M.shape}")
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]),
            "entries": [[float(z.real), float(z.imag)] for z in M.ravel()]}


def matrix_from_json(obj, name="matrix"):
    if not isinstance(obj, dict):
        raise InputError(f"{name}: expected an object with rows, cols, entries")
    for key in ("rows", "cols", "entries"):
        if key not in obj:
            raise InputError(f"{name}: missing field '{key}'")
    rows, cols, entries = obj["rows"], obj["cols"], obj["entries"]
    if not (isinstance(rows, int) and rows > 0):
        raise InputError(f"{name}: field 'rows' must be a positive integer")
    if not (isinstance(cols, int) and cols > 0):
        raise InputError(f"{name}: field 'cols' must be a positive integer")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise InputError(f"{name}: field 'entries' must list rows*cols = {rows * cols} values")
    out = np.empty(rows * cols, dtype=complex)
    for k, e in enumerate(entries):
        try:
            if isinstance(e, (list, tuple)):
                if len(e) != 2:
                    raise TypeError
                z = complex(float(e[0]), float(e[1]))
            else:
                z = complex(float(e), 0.0)
        except (TypeError, ValueError):
            raise InputError(f"{name}: field 'entries[{k}]' is not a number or [re, im] pair") \
                from None
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise InputError(f"{name}: field 'entries[{k}]' is not finite")
        out[k] = z
    return out.reshape(rows, cols)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_matrix(path):
    return matrix_from_json(_read_json(path), name=str(path))


def save_matrix(path, M):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(M), fh)


def _index_to_json(x):
    return "inf" if x == math.inf else float(x)


def claim_to_json(claim):
    return {"q": _index_to_json(claim.q), "p": _index_to_json(claim.p),
            "A": matrix_to_json(claim.A), "B": matrix_to_json(claim.B),
            "reduced": bool(claim.reduced)}


def claim_from_json(obj, name="claim"):
    if not isinstance(obj, dict):
        raise InputError(f"{name}: expected an object with q, p, A, B, reduced")
    for key in ("q", "p", "A", "B"):
        if key not in obj:
            raise InputError(f"{name}: missing field '{key}'")
    A = matrix_from_json(obj["A"], name=f"{name}.A")
    B = matrix_from_json(obj["B"], name=f"{name}.B")
    reduced = obj.get("reduced", False)
    if not isinstance(reduced, bool):
        raise InputError(f"{name}: field 'reduced' must be true or false")
    try:
        return EmbeddingClaim(A, B, obj["q"], obj["p"], reduced)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from None


def load_claim(path):
    return claim_from_json(_read_json(path), name=str(path))


def save_claim(path, claim):
    with open(path, "w") as fh:
        json.dump(claim_to_json(claim), fh)
