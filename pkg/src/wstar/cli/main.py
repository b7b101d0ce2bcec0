"""``wstar``: command-line front end.

Every subcommand reads one document per file, positionally and left factor
first.  Constructions are written to stdout as canonical documents; checks
are written as reports (text lines, or a ``report`` document with
``--format json``).

Exit codes: 0 success, 1 mathematical failure (a failed check, or a cone
verdict contradicting ``--expect``), 2 input error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ..algebra import AlgebraHom, MultiMatrixAlgebra
from ..bimod import (
    CC,
    Bimodule,
    BimoduleMap,
    as_bimodule,
    as_module,
    conjugate,
    conjugate_map,
    fuse,
    fuse_oracle,
)
from ..errors import (
    GramNotPSD,
    NoConvergence,
    NotHorizontallySelfAdjoint,
    NotProjection,
    NotUnitary,
    ParseError,
    SchemaError,
    WStarError,
)
from ..funcat.adjoint import adjoint, adjoint_nat, coherence_residuals
from ..funcat.audit import Report, biinvolutive_audit, vn2_wstarcat_roundtrip
from ..funcat.cones import HorizontalMap, cone_report, vertical_cone_member
from ..funcat.dictionary import Functor, NatTransform, apply_functor, reconstruct_functor, riesz_roundtrip
from ..funcat.inner import compare_models, via_corner
from ..linalg import DEFAULT_TOL, psd_min_eigenvalue
from ..modcat import (
    ModuleMorphism,
    ModuleObject,
    completion_from_presentation,
    csb_chain,
    gram_schmidt,
    hom_basis,
    presentation_of,
    split_idempotent,
)
from .document import emit, parse

__all__ = ["main", "build_parser"]

# failures of a computed result rather than of the input
_MATH_FAILURES = (NoConvergence, NotUnitary, GramNotPSD)

# what each subcommand computes, for error messages
_CONSTRUCTION = {
    "fuse": "Connes fusion (multiplicity contraction)",
    "fuse-oracle": "Connes fusion from its definition",
    "inner": "Hilb-valued inner product",
    "adjoint": "adjoint functor via the conjugate bimodule",
    "gram-schmidt": "Gram-Schmidt orthogonal generators",
    "csb": "Cantor-Schroeder-Bernstein unitary",
    "split": "splitting of an orthogonal projection",
    "cone-v": "vertical positive cone",
    "cone-h": "horizontal positive cone",
    "audit-biinv": "bi-involutive structure audit",
    "audit-vn2": "bimodules-to-categories round trip",
    "coherences": "phi/nu coherence identities",
    "riesz": "Riesz representation round trip",
    "reconstruct": "functor reconstruction from generators",
}


class _Failure(Exception):
    """Raised to exit 1 after the output has been written."""


def _default_tol() -> float:
    """``$WSTAR_TOL`` if set; ``ValueError`` if it is not a positive number."""
    env = os.environ.get("WSTAR_TOL")
    if env is None:
        return DEFAULT_TOL
    tol = float(env)
    if not tol > 0 or tol == float("inf"):
        raise ValueError(env)
    return tol


def _read(path):
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return parse(data)
    except ParseError as e:
        raise ParseError(f"{path}: {e.message}", e.line, e.column) from None
    except SchemaError as e:
        raise SchemaError(e.field, f"{path}: {e.message}") from None


def _expect_kind(obj, types, path, what):
    if not isinstance(obj, types):
        raise SchemaError("kind", f"{path}: expected {what}, got {type(obj).__name__}")
    return obj


def _bimod_arg(obj, path):
    """Modules are bimodules over ``(A, C)``."""
    if isinstance(obj, ModuleObject):
        return as_bimodule(obj)
    if isinstance(obj, Functor):
        return obj.bimodule
    return _expect_kind(obj, Bimodule, path, "a bimodule or module")


def _functor_arg(obj, path):
    if isinstance(obj, Bimodule):
        return Functor(obj)
    return _expect_kind(obj, Functor, path, "a functor or bimodule")


def _out_bimodule(X: Bimodule):
    return as_module(X) if X.right == CC and X.left != CC else X


class _Ctx:
    def __init__(self, args, out):
        self.args = args
        self.out = out

    def doc(self, obj):
        self.out.write(emit(obj))

    def report(self, rep: Report):
        if self.args.format == "json":
            self.out.write(emit(rep.to_document()))
        else:
            self.out.write(str(rep) + "\n")
        if not rep.passed:
            raise _Failure()


# --------------------------------------------------------------------------
# subcommands


def cmd_fuse(ctx, files):
    X, Y = (_bimod_arg(_read(p), p) for p in files)
    ctx.doc(_out_bimodule(fuse(X, Y)))


def cmd_fuse_oracle(ctx, files):
    a = ctx.args
    X, Y = (_bimod_arg(_read(p), p) for p in files)
    W = fuse_oracle(X, Y, a.tol, a.cap)
    Z = fuse(X, Y)
    rep = Report("fuse-oracle", a.seed, a.tol)
    rep.add("dimension", abs(W.dimension - Z.dim))
    rep.add("witness-unitary", W.unitary_residual() if W.basis_map.size else 0.0)
    rep.data.update(
        {
            "dimension": Z.dim,
            "oracle_dimension": W.dimension,
            "span_size": W.span_size,
            "mult": Z.k.tolist(),
        }
    )
    ctx.report(rep)


def cmd_inner(ctx, files):
    a, b = (_expect_kind(_read(p), ModuleObject, p, "a module") for p in files)
    cmp = compare_models(a, b)
    H = via_corner(a, b)
    commutants = H.mutual_commutants(ctx.args.tol)
    doc = {
        "kind": "hilb",
        "algebra": list(a.algebra.blocks),
        "a": list(a.mult),
        "b": list(b.mult),
        "dimension": cmp.formula_dim,
        "corner_dimension": cmp.corner_dim,
        "fusion_dimension": cmp.fusion_dim,
        "connecting_residual": cmp.residual,
        "mutual_commutants": commutants,
    }
    ctx.doc(doc)
    ok = cmp.corner_dim == cmp.fusion_dim == cmp.formula_dim and cmp.residual <= ctx.args.tol and commutants
    if not ok:
        raise _Failure()


def cmd_adjoint(ctx, files):
    (path,) = files
    obj = _read(path)
    if isinstance(obj, Functor):
        ctx.doc(adjoint(obj))
    elif isinstance(obj, NatTransform):
        ctx.doc(adjoint_nat(obj))
    elif isinstance(obj, Bimodule):
        ctx.doc(conjugate(obj))
    elif isinstance(obj, BimoduleMap):
        ctx.doc(conjugate_map(obj))
    else:
        raise SchemaError("kind", f"{path}: expected a functor, nat, bimodule or bimodule-map")


def cmd_gram_schmidt(ctx, files):
    a = ctx.args
    gens = [_expect_kind(_read(p), ModuleObject, p, "a module") for p in files]
    res = gram_schmidt(gens)
    rep = Report("gram-schmidt", a.seed, a.tol)
    outs = res.generators
    worst = 0
    for i in range(len(outs)):
        for j in range(i + 1, len(outs)):
            worst = max(worst, hom_basis(outs[i], outs[j])[0])
    rep.add("pairwise-orthogonal", worst, len(outs) * (len(outs) - 1) // 2)
    union_in = set().union(*(c.support for c in gens))
    union_out = set().union(*(c.support for c in outs))
    rep.add("support-union", len(union_in ^ union_out))
    nonzero = [c for c in outs if not c.is_zero()]
    P, idx = presentation_of(nonzero)
    E, images = completion_from_presentation(P, a.tol)
    # every block of the regenerated algebra must be reached by some image
    hit = np.sum([im.mult for im in images], axis=0) if images else np.zeros(0, int)
    regenerated = {i for i, h in zip(idx, hit) if h > 0}
    rep.add("regeneration", len(regenerated ^ union_in))
    rep.data.update(
        {
            "generators": [list(c.mult) for c in outs],
            "parts": [list(p) for p in res.partition.parts],
            "remainder": list(res.partition.remainder),
        }
    )
    ctx.report(rep)


def cmd_csb(ctx, files):
    f, g = (_expect_kind(_read(p), ModuleMorphism, p, "a morphism") for p in files)
    res = csb_chain(f, g, ctx.args.tol)
    ctx.doc(res.unitary)


def cmd_split(ctx, files):
    (path,) = files
    p = _expect_kind(_read(path), ModuleMorphism, path, "a morphism")
    if not p.is_projection(ctx.args.tol):
        raise NotProjection(f"{path}: morphism is not an orthogonal projection")
    _, iota = split_idempotent(p, ctx.args.tol)
    ctx.doc(iota)


def _expect(ctx, member: bool):
    e = ctx.args.expect
    if e == "member" and not member or e == "nonmember" and member:
        raise _Failure()


def cmd_cone_v(ctx, files):
    a = ctx.args
    (path,) = files
    obj = _read(path)
    T = obj.map if isinstance(obj, NatTransform) else _expect_kind(obj, BimoduleMap, path, "a nat or bimodule-map")
    member = vertical_cone_member(obj, a.tol)
    neg = 0.0
    for j, i in T.source.cells():
        C = T.cells[j][i]
        if C.size:
            neg = max(neg, -psd_min_eigenvalue((C + C.conj().T) / 2, a.tol))
    rep = Report("cone-v", a.seed, a.tol)
    rep.add("vertical-cone", max(neg, 0.0), passed=member)
    rep.data["member"] = member
    _write_verdict(ctx, rep)
    _expect(ctx, member)


def _write_verdict(ctx, rep):
    if ctx.args.format == "json":
        ctx.out.write(emit(rep.to_document()))
    else:
        ctx.out.write(str(rep) + "\n")


def cmd_cone_h(ctx, files):
    a = ctx.args
    if len(files) == 2:
        X = _bimod_arg(_read(files[0]), files[0])
        Y = X
    elif len(files) == 3:
        X = _bimod_arg(_read(files[0]), files[0])
        Y = _bimod_arg(_read(files[1]), files[1])
    else:
        raise SchemaError("files", "cone-h takes X [Y] theta")
    tpath = files[-1]
    T = _read(tpath)
    T = T.map if isinstance(T, NatTransform) else _expect_kind(T, BimoduleMap, tpath, "a bimodule-map")
    if T.source != fuse(conjugate(X), X) or T.target != fuse(conjugate(Y), Y):
        raise SchemaError("source", f"{tpath}: theta must run conj(X) (x) X -> conj(Y) (x) Y")
    theta = HorizontalMap(X, Y, T)
    N = a.levels
    r = cone_report(theta, N, a.tol, a.seed)
    rep = Report("cone-h", a.seed, a.tol)
    rep.add("self-adjoint", r.self_adjoint_residual, passed=r.self_adjoint)
    rep.add("choi", max(0.0, -r.choi_min_eigenvalue), passed=r.choi_member)
    if r.self_adjoint:
        rep.add("levels", 0.0 if r.levels_member else 1.0, passed=r.levels_member)
        rep.add("agreement", 0.0 if r.levels_member == r.choi_member else 1.0)
    rep.data.update({"member": r.choi_member, "level": r.level, "vertical_member": r.vertical_member})
    _write_verdict(ctx, rep)
    if not r.self_adjoint:
        raise NotHorizontallySelfAdjoint("theta is not horizontally self-adjoint")
    if r.levels_member != r.choi_member:
        raise _Failure()
    _expect(ctx, r.choi_member)


def cmd_audit_biinv(ctx, files):
    a = ctx.args
    sample = [_bimod_arg(_read(p), p) for p in files]
    A = sample[0].left
    ctx.report(biinvolutive_audit(A, sample, a.tol, a.seed))


def cmd_audit_vn2(ctx, files):
    a = ctx.args
    X = _bimod_arg(_read(files[0]), files[0])
    Y = _bimod_arg(_read(files[1]), files[1]) if len(files) > 1 else None
    ctx.report(vn2_wstarcat_roundtrip(X.right, X.left, X, Y, a.tol, a.seed))


def cmd_coherences(ctx, files):
    a = ctx.args
    Fs = [_functor_arg(_read(p), p) for p in files]
    F = Fs[0]
    G = Fs[1] if len(Fs) > 1 else adjoint(F)
    H = Fs[2] if len(Fs) > 2 else adjoint(G)
    c = coherence_residuals(F, G, H)
    rep = Report("coherences", a.seed, a.tol)
    rep.add("phi-dagger", c.phi_dagger)
    rep.add("nu-interchange", c.nu_interchange)
    rep.add("phi-composite", c.phi_composite)
    rep.add("definitional", c.definitional)
    ctx.report(rep)


def cmd_riesz(ctx, files):
    a = ctx.args
    (path,) = files
    x = _expect_kind(_read(path), ModuleObject, path, "a module")
    rec, u = riesz_roundtrip(x, a.tol)
    rep = Report("riesz", a.seed, a.tol)
    rep.add("mult-preserved", float(np.abs(np.array(rec.mult) - np.array(x.mult)).sum()))
    rep.add("unitary", max((u.adjoint() @ u - ModuleMorphism.identity(rec)).norm(), 0.0) if rec.dim else 0.0)
    rep.data["recovered"] = list(rec.mult)
    ctx.report(rep)


def _natural_action(F: Functor, c: ModuleObject) -> AlgebraHom:
    """``End(c) -> End(F c)`` in multiplicity form, zero blocks dropped."""
    Fc = apply_functor(F, c)
    src = [i for i, v in enumerate(c.mult) if v > 0]
    tgt = [j for j, v in enumerate(Fc.mult) if v > 0]
    k = F.bimodule.k[np.ix_(tgt, src)]
    return AlgebraHom(
        MultiMatrixAlgebra([c.mult[i] for i in src]), MultiMatrixAlgebra([Fc.mult[j] for j in tgt]), k
    )


def cmd_reconstruct(ctx, files):
    F = _functor_arg(_read(files[0]), files[0])
    A = F.source
    if len(files) > 1:
        gens = [_expect_kind(_read(p), ModuleObject, p, "a module") for p in files[1:]]
    else:
        gens = [ModuleObject.simple(A, i) for i in range(len(A.blocks))]
    images = [(c, apply_functor(F, c), _natural_action(F, c)) for c in gens]
    R = reconstruct_functor(images, ctx.args.tol)
    ctx.doc(R)
    covered = set().union(*(c.support for c in gens))
    if covered == set(range(len(A.blocks))) and R.bimodule != F.bimodule:
        raise _Failure()


_COMMANDS = {
    "fuse": (cmd_fuse, 2, 2),
    "fuse-oracle": (cmd_fuse_oracle, 2, 2),
    "inner": (cmd_inner, 2, 2),
    "adjoint": (cmd_adjoint, 1, 1),
    "gram-schmidt": (cmd_gram_schmidt, 1, None),
    "csb": (cmd_csb, 2, 2),
    "split": (cmd_split, 1, 1),
    "cone-v": (cmd_cone_v, 1, 1),
    "cone-h": (cmd_cone_h, 2, 3),
    "audit-biinv": (cmd_audit_biinv, 1, None),
    "audit-vn2": (cmd_audit_vn2, 1, 2),
    "coherences": (cmd_coherences, 1, 3),
    "riesz": (cmd_riesz, 1, 1),
    "reconstruct": (cmd_reconstruct, 1, None),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wstar", description="finite-dimensional W*-category computations")
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("files", nargs="*", help="input documents, left factor first")
    p.add_argument("--tol", type=float, default=None, help="tolerance (default $WSTAR_TOL or 1e-9)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=4096, help="oracle cap on dim X + dim Y")
    p.add_argument("--expect", choices=["member", "nonmember"], default=None)
    p.add_argument("--levels", type=int, default=None, help="amplification depth for cone-h")
    p.add_argument("--format", choices=["text", "json"], default="text", help="report format")
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_intermixed_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.tol is None:
        try:
            args.tol = _default_tol()
        except ValueError:
            stderr.write(f"wstar: WSTAR_TOL={os.environ['WSTAR_TOL']!r} is not a positive number\n")
            return 2
    fn, lo, hi = _COMMANDS[args.command]
    n = len(args.files)
    if n < lo or (hi is not None and n > hi):
        want = f"{lo}" if lo == hi else f"{lo}+" if hi is None else f"{lo}-{hi}"
        stderr.write(f"wstar {args.command}: expected {want} input files, got {n}\n")
        return 2
    ctx = _Ctx(args, stdout)
    where = _CONSTRUCTION[args.command]
    try:
        fn(ctx, args.files)
    except _Failure:
        return 1
    except _MATH_FAILURES as e:
        stderr.write(f"wstar {args.command}: {where}: {type(e).__name__}: {e}\n")
        return 1
    except WStarError as e:
        stderr.write(f"wstar {args.command}: {where}: {type(e).__name__}: {e}\n")
        return 2
    except OSError as e:
        stderr.write(f"wstar {args.command}: cannot read input: {e.strerror}: {e.filename}\n")
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
