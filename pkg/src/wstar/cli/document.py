"""The CLI document format: canonical JSON with typed payloads.

Text is UTF-8 JSON restricted to objects, arrays, numbers, strings and the
literals ``true``/``false``.  Emission is canonical: sorted keys, compact
separators, floats as ``%.17g``, one trailing newline.  Complex matrix
entries are ``[re, im]``; a matrix with no imaginary part is written with
plain numbers.

Kinds and their fields (algebras are written as block-size lists)::

    algebra       blocks
    module        algebra, mult
    morphism      algebra, source, target, blocks
    bimodule      left, right, mult
    bimodule-map  left, right, source, target, cells
    functor       source, target, mult          (mult is target x source)
    nat           source, target, from, to, cells
    presentation  algebra, projections
    hilb          algebra, a, b, dimension, ...  (output only)
    report        title, seed, tol, passed, entries, data  (output only)
"""

from __future__ import annotations

import json
import math

import numpy as np

from ..algebra import AlgebraElement, MultiMatrixAlgebra
from ..bimod import Bimodule, BimoduleMap
from ..errors import ParseError, SchemaError, WStarError
from ..funcat.dictionary import Functor, NatTransform
from ..modcat import ModuleMorphism, ModuleObject, Presentation

__all__ = ["parse", "emit", "parse_text", "to_object", "from_object", "KINDS"]

KINDS = (
    "algebra",
    "module",
    "morphism",
    "bimodule",
    "bimodule-map",
    "functor",
    "nat",
    "presentation",
    "hilb",
    "report",
)


# --------------------------------------------------------------------------
# text layer


class _HookError(ValueError):
    def __init__(self, message, token, nth):
        super().__init__(message)
        self.token, self.nth = token, nth


def _no_constants(name):
    raise _HookError(f"non-finite literal {name} is not allowed", name, 0)


def _pairs(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise _HookError(f"duplicate key {k!r}", json.dumps(k, ensure_ascii=False), 1)
        out[k] = v
    return out


def _position(text: str, pos: int):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def parse_text(text) -> object:
    """JSON value from text or bytes; ``ParseError`` carries line and column."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            line, col = _position(bytes(text)[: e.start].decode("utf-8", "replace"), e.start)
            raise ParseError("input is not valid UTF-8", line, col) from None
    dec = json.JSONDecoder(object_pairs_hook=_pairs, parse_constant=_no_constants)
    try:
        value, end = dec.raw_decode(text, _skip_ws(text, 0))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    except _HookError as e:
        # the hooks see values, not positions; locate the token in the text
        i = -1
        for _ in range(e.nth + 1):
            i = text.find(e.token, i + 1)
        raise ParseError(str(e), *_position(text, max(i, 0))) from None
    end = _skip_ws(text, end)
    if end != len(text):
        raise ParseError("trailing content after document", *_position(text, end))
    return value


def _skip_ws(text, i):
    while i < len(text) and text[i] in " \t\r\n":
        i += 1
    return i


def _emit_value(v, out):
    if isinstance(v, bool):
        out.append("true" if v else "false")
    elif isinstance(v, (int, np.integer)):
        out.append(str(int(v)))
    elif isinstance(v, (float, np.floating)):
        x = float(v)
        if not math.isfinite(x):
            raise ValueError("cannot emit a non-finite number")
        if x == 0.0:
            x = 0.0  # drop the sign of zero
        s = "%.17g" % x
        out.append(s)
    elif isinstance(v, str):
        out.append(json.dumps(v, ensure_ascii=False))
    elif isinstance(v, dict):
        out.append("{")
        for n, k in enumerate(sorted(v)):
            if n:
                out.append(",")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(":")
            _emit_value(v[k], out)
        out.append("}")
    elif isinstance(v, (list, tuple)):
        out.append("[")
        for n, x in enumerate(v):
            if n:
                out.append(",")
            _emit_value(x, out)
        out.append("]")
    else:
        raise TypeError(f"cannot emit {type(v).__name__}")


def emit(doc) -> str:
    """Canonical text of a document (a dict) or of a domain object."""
    if not isinstance(doc, dict):
        doc = from_object(doc)
    out = []
    _emit_value(doc, out)
    return "".join(out) + "\n"


def parse(text):
    """Document text -> domain object."""
    return to_object(parse_text(text))


# --------------------------------------------------------------------------
# schema helpers


def _field(doc, name, path=""):
    if not isinstance(doc, dict):
        raise SchemaError(path or "<document>", "expected an object")
    if name not in doc:
        raise SchemaError(f"{path}{name}", "missing field")
    return doc[name]


def _only(doc, allowed, path=""):
    extra = sorted(set(doc) - set(allowed) - {"kind"})
    if extra:
        raise SchemaError(f"{path}{extra[0]}", "unknown field")


def _int(v, path, positive=False):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(path, "expected an integer")
    if v < 0 or (positive and v == 0):
        raise SchemaError(path, "expected a positive integer" if positive else "expected a non-negative integer")
    return v


def _int_list(v, path, positive=False):
    if not isinstance(v, list):
        raise SchemaError(path, "expected an array of integers")
    return [_int(x, f"{path}[{i}]", positive) for i, x in enumerate(v)]


def _algebra(v, path):
    return MultiMatrixAlgebra(_int_list(v, path, positive=True))


def _int_matrix(v, path, rows, cols):
    if not isinstance(v, list) or len(v) != rows:
        raise SchemaError(path, f"expected {rows} rows")
    out = []
    for i, row in enumerate(v):
        r = _int_list(row, f"{path}[{i}]")
        if len(r) != cols:
            raise SchemaError(f"{path}[{i}]", f"expected {cols} entries")
        out.append(r)
    return np.array(out, dtype=int).reshape(rows, cols)


def _scalar(v, path):
    if isinstance(v, bool):
        raise SchemaError(path, "expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise SchemaError(path, "expected a number or [re, im]")


def _matrix(v, path, shape):
    r, c = shape
    if not isinstance(v, list) or len(v) != r:
        raise SchemaError(path, f"expected a {r}x{c} matrix")
    M = np.zeros((r, c), complex)
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != c:
            raise SchemaError(f"{path}[{i}]", f"expected {c} entries")
        for j, x in enumerate(row):
            M[i, j] = _scalar(x, f"{path}[{i}][{j}]")
    return M


def _emit_matrix(M):
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.any(M.imag != 0):
        return [[[float(z.real), float(z.imag)] for z in row] for row in M]
    return [[float(np.real(z)) for z in row] for row in M]


def _mult_vector(v, path, n):
    m = _int_list(v, path)
    if len(m) != n:
        raise SchemaError(path, f"expected {n} entries (one per block), got {len(m)}")
    return m


def _cells(v, path, src: Bimodule, tgt: Bimodule):
    r, s = src.shape
    if not isinstance(v, list) or len(v) != r:
        raise SchemaError(path, f"expected {r} rows of cells")
    cells = []
    for j in range(r):
        row = v[j]
        if not isinstance(row, list) or len(row) != s:
            raise SchemaError(f"{path}[{j}]", f"expected {s} cells")
        cells.append([_matrix(row[i], f"{path}[{j}][{i}]", (tgt.mult[j][i], src.mult[j][i])) for i in range(s)])
    return cells


# --------------------------------------------------------------------------
# documents <-> objects


def to_object(doc):
    kind = _field(doc, "kind")
    if kind not in KINDS:
        raise SchemaError("kind", f"unknown kind {kind!r}")
    try:
        return _READERS[kind](doc)
    except SchemaError:
        raise
    except WStarError as e:
        raise SchemaError("kind", f"{kind} document is inconsistent: {e}") from None


def _read_algebra(doc):
    _only(doc, ["blocks"])
    return _algebra(_field(doc, "blocks"), "blocks")


def _read_module(doc):
    _only(doc, ["algebra", "mult"])
    A = _algebra(_field(doc, "algebra"), "algebra")
    return ModuleObject(A, _mult_vector(_field(doc, "mult"), "mult", len(A.blocks)))


def _read_morphism(doc):
    _only(doc, ["algebra", "source", "target", "blocks"])
    A = _algebra(_field(doc, "algebra"), "algebra")
    n = len(A.blocks)
    H = ModuleObject(A, _mult_vector(_field(doc, "source"), "source", n))
    K = ModuleObject(A, _mult_vector(_field(doc, "target"), "target", n))
    b = _field(doc, "blocks")
    if not isinstance(b, list) or len(b) != n:
        raise SchemaError("blocks", f"expected {n} blocks")
    return ModuleMorphism(H, K, [_matrix(b[i], f"blocks[{i}]", (K.mult[i], H.mult[i])) for i in range(n)])


def _bimodule(left, right, mult, path):
    r, s = len(left.blocks), len(right.blocks)
    return Bimodule(left, right, _int_matrix(mult, path, r, s))


def _read_bimodule(doc):
    _only(doc, ["left", "right", "mult"])
    B = _algebra(_field(doc, "left"), "left")
    A = _algebra(_field(doc, "right"), "right")
    return _bimodule(B, A, _field(doc, "mult"), "mult")


def _read_bimodule_map(doc):
    _only(doc, ["left", "right", "source", "target", "cells"])
    B = _algebra(_field(doc, "left"), "left")
    A = _algebra(_field(doc, "right"), "right")
    X = _bimodule(B, A, _field(doc, "source"), "source")
    Y = _bimodule(B, A, _field(doc, "target"), "target")
    return BimoduleMap(X, Y, _cells(_field(doc, "cells"), "cells", X, Y))


def _read_functor(doc):
    _only(doc, ["source", "target", "mult"])
    A = _algebra(_field(doc, "source"), "source")
    B = _algebra(_field(doc, "target"), "target")
    return Functor(_bimodule(B, A, _field(doc, "mult"), "mult"))


def _read_nat(doc):
    _only(doc, ["source", "target", "from", "to", "cells"])
    A = _algebra(_field(doc, "source"), "source")
    B = _algebra(_field(doc, "target"), "target")
    X = _bimodule(B, A, _field(doc, "from"), "from")
    Y = _bimodule(B, A, _field(doc, "to"), "to")
    return NatTransform(Functor(X), Functor(Y), BimoduleMap(X, Y, _cells(_field(doc, "cells"), "cells", X, Y)))


def _read_presentation(doc):
    _only(doc, ["algebra", "projections"])
    A = _algebra(_field(doc, "algebra"), "algebra")
    ps = _field(doc, "projections")
    if not isinstance(ps, list):
        raise SchemaError("projections", "expected an array of elements")
    out = []
    for k, p in enumerate(ps):
        if not isinstance(p, list) or len(p) != len(A.blocks):
            raise SchemaError(f"projections[{k}]", f"expected {len(A.blocks)} blocks")
        out.append(AlgebraElement(A, [_matrix(p[i], f"projections[{k}][{i}]", (n, n)) for i, n in enumerate(A.blocks)]))
    return Presentation(A, out)


def _read_passthrough(doc):
    return dict(doc)


_READERS = {
    "algebra": _read_algebra,
    "module": _read_module,
    "morphism": _read_morphism,
    "bimodule": _read_bimodule,
    "bimodule-map": _read_bimodule_map,
    "functor": _read_functor,
    "nat": _read_nat,
    "presentation": _read_presentation,
    "hilb": _read_passthrough,
    "report": _read_passthrough,
}


def _blocks(A):
    return list(A.blocks)


def from_object(obj) -> dict:
    """Domain object -> document dict."""
    if isinstance(obj, dict):
        return obj
    if hasattr(obj, "to_document"):
        return obj.to_document()
    if isinstance(obj, MultiMatrixAlgebra):
        return {"kind": "algebra", "blocks": _blocks(obj)}
    if isinstance(obj, ModuleObject):
        return {"kind": "module", "algebra": _blocks(obj.algebra), "mult": list(obj.mult)}
    if isinstance(obj, ModuleMorphism):
        return {
            "kind": "morphism",
            "algebra": _blocks(obj.source.algebra),
            "source": list(obj.source.mult),
            "target": list(obj.target.mult),
            "blocks": [_emit_matrix(b) for b in obj.block_data],
        }
    if isinstance(obj, Bimodule):
        return {"kind": "bimodule", "left": _blocks(obj.left), "right": _blocks(obj.right), "mult": obj.k.tolist()}
    if isinstance(obj, NatTransform):
        T = obj.map
        return {
            "kind": "nat",
            "source": _blocks(T.source.right),
            "target": _blocks(T.source.left),
            "from": T.source.k.tolist(),
            "to": T.target.k.tolist(),
            "cells": [[_emit_matrix(c) for c in row] for row in T.cells],
        }
    if isinstance(obj, BimoduleMap):
        return {
            "kind": "bimodule-map",
            "left": _blocks(obj.source.left),
            "right": _blocks(obj.source.right),
            "source": obj.source.k.tolist(),
            "target": obj.target.k.tolist(),
            "cells": [[_emit_matrix(c) for c in row] for row in obj.cells],
        }
    if isinstance(obj, Functor):
        X = obj.bimodule
        return {"kind": "functor", "source": _blocks(X.right), "target": _blocks(X.left), "mult": X.k.tolist()}
    if isinstance(obj, Presentation):
        return {
            "kind": "presentation",
            "algebra": _blocks(obj.algebra),
            "projections": [[_emit_matrix(b) for b in p.block_data] for p in obj.projections],
        }
    raise TypeError(f"no document form for {type(obj).__name__}")
