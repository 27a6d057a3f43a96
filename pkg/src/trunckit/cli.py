"""Command line interface and the triangulation text format.

File layout (``#`` starts a comment, blank lines are ignored)::

    trunckit-triangulation 1
    name <rest of line>
    tetrahedra <n>
    <n lines: four gluing records "tet face images" then ideal mask, zero mask>
    angles                      (optional)
    <n lines of six angles>
    heights                     (optional)
    <one line per cusp: vertex class, height>

A gluing record ``u h abc`` glues the face of this tetrahedron to face h
of tetrahedron u, sending the face's vertices (in increasing order) to
vertices a, b, c.  The ideal mask has bit v set for ideal vertex v, the
zero mask bit s for a zero-length edge in slot s.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .canonical import (
    CanonConfig,
    CanonStatus,
    cross_section,
    geometric_two_three,
    initial_radii,
    canonize,
    tilt_report,
)
from .solver import SolverConfig, certify, solve
from .tetshape import TetCombinatorics, other_vertices
from .triangulation import (
    Gluing,
    Triangulation,
    TriangulationError,
    boundary_euler_check,
    detect_boundary_parallel_flags,
    isomorphism_signature,
)

HEADER = "trunckit-triangulation"
VERSION = 1

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3
EXIT_STUCK = 4
EXIT_PARSE = 5


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass
class Document:
    tri: Triangulation
    theta: np.ndarray | None = None
    heights: dict | None = None


# ----------------------------------------------------------------------------
# parsing and formatting


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if body.strip():
            yield number, body


def _tokens(body: str):
    """Whitespace-separated tokens with their 1-based columns."""
    out = []
    i = 0
    while i < len(body):
        if body[i].isspace():
            i += 1
            continue
        j = i
        while j < len(body) and not body[j].isspace():
            j += 1
        out.append((body[i:j], i + 1))
        i = j
    return out


def _int(token, line, lo=None, hi=None) -> int:
    text, col = token
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"expected an integer, found {text!r}", line, col) from None
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ParseError(f"{value} is out of range", line, col)
    return value


def _float(token, line) -> float:
    text, col = token
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"expected a number, found {text!r}", line, col) from None
    if not math.isfinite(value):
        raise ParseError(f"{text!r} is not finite", line, col)
    return value


def parse(text: str) -> Document:
    lines = list(_lines(text))
    if not lines:
        raise ParseError("empty document", 1)
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 1
            raise ParseError("unexpected end of document", last + 1)
        item = lines[pos]
        pos += 1
        return item

    number, body = take()
    toks = _tokens(body)
    if len(toks) != 2 or toks[0][0] != HEADER:
        raise ParseError(f"expected header '{HEADER} {VERSION}'", number)
    if _int(toks[1], number) != VERSION:
        raise ParseError(f"unsupported format version {toks[1][0]}", number, toks[1][1])
    number, body = take()
    stripped = body.strip()
    if not (stripped == "name" or stripped.startswith("name ")):
        raise ParseError("expected 'name'", number)
    name = stripped[4:].strip()
    number, body = take()
    toks = _tokens(body)
    if len(toks) != 2 or toks[0][0] != "tetrahedra":
        raise ParseError("expected 'tetrahedra <count>'", number)
    n = _int(toks[1], number, lo=1)

    tets, glue = [], []
    for t in range(n):
        number, body = take()
        toks = _tokens(body)
        if len(toks) != 14:
            raise ParseError(f"tetrahedron {t}: expected 14 fields, found {len(toks)}", number)
        row = []
        for f in range(4):
            u = _int(toks[3 * f], number, 0, n - 1)
            h = _int(toks[3 * f + 1], number, 0, 3)
            images, col = toks[3 * f + 2]
            if len(images) != 3 or not images.isdigit():
                raise ParseError(f"expected three vertex digits, found {images!r}", number, col)
            perm = [0] * 4
            perm[f] = h
            for x, ch in zip(other_vertices(f), images):
                perm[x] = int(ch)
            if sorted(perm) != [0, 1, 2, 3]:
                raise ParseError(f"gluing record {u} {h} {images} is not a permutation", number, col)
            row.append(Gluing(u, tuple(perm)))
        ideal = _int(toks[12], number, 0, 15)
        zero = _int(toks[13], number, 0, 63)
        try:
            comb = TetCombinatorics(frozenset(v for v in range(4) if ideal >> v & 1),
                                    frozenset(s for s in range(6) if zero >> s & 1))
        except ValueError as exc:
            raise ParseError(str(exc), number, toks[12][1]) from None
        tets.append(comb)
        glue.append(tuple(row))

    theta = None
    heights = None
    while pos < len(lines):
        number, body = take()
        word = body.strip()
        if word == "angles" and theta is None:
            theta = np.zeros((n, 6))
            for t in range(n):
                number, body = take()
                toks = _tokens(body)
                if len(toks) != 6:
                    raise ParseError(f"expected six angles, found {len(toks)}", number)
                theta[t] = [_float(tok, number) for tok in toks]
        elif word == "heights" and heights is None:
            heights = {}
            while pos < len(lines) and len(_tokens(lines[pos][1])) == 2 \
                    and _tokens(lines[pos][1])[0][0].isdigit():
                number, body = take()
                toks = _tokens(body)
                heights[_int(toks[0], number, 0)] = _float(toks[1], number)
        else:
            raise ParseError(f"unexpected block {word!r}", number)
    tri = Triangulation.build(tets, glue, None, name)
    return Document(tri, theta, heights)


def format_document(doc: Document) -> str:
    tri = doc.tri
    out = [f"{HEADER} {VERSION}", f"name {tri.name}".rstrip(), f"tetrahedra {tri.size}"]
    for t, comb in enumerate(tri.tetrahedra):
        fields = []
        for f, g in enumerate(tri.gluings[t]):
            images = "".join(str(g.perm[x]) for x in other_vertices(f))
            fields.append(f"{g.tet} {g.perm[f]} {images}")
        ideal = sum(1 << v for v in comb.ideal_vertices)
        zero = sum(1 << s for s in comb.zero_edges)
        out.append("  ".join(fields) + f"  {ideal} {zero}")
    if doc.theta is not None:
        out.append("angles")
        for row in np.asarray(doc.theta):
            out.append(" ".join("%.17g" % float(x) for x in row))
    if doc.heights:
        out.append("heights")
        for c in sorted(doc.heights):
            out.append(f"{c} %.17g" % float(doc.heights[c]))
    return "\n".join(out) + "\n"


def read(path: str) -> Document:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# ----------------------------------------------------------------------------
# reports


def _num(x) -> float:
    return float("%.12g" % float(x))


def _emit(report: dict, as_json: bool, stream) -> None:
    if as_json:
        stream.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
        return
    for key in sorted(report):
        value = report[key]
        if isinstance(value, list):
            stream.write(f"{key}:\n")
            for item in value:
                if isinstance(item, dict):
                    item = " ".join(f"{k}={v}" for k, v in item.items())
                stream.write(f"  {item}\n")
        elif isinstance(value, dict):
            stream.write(f"{key}:\n")
            for k in sorted(value):
                stream.write(f"  {k}: {value[k]}\n")
        else:
            stream.write(f"{key}: {value}\n")


def _tilt_rows(report) -> list:
    rows = []
    for ft in report:
        (t, f), (u, h) = ft.face
        rows.append({"face": f"{t}:{f}-{u}:{h}", "t": _num(ft.t), "t_prime": _num(ft.t_prime),
                     "sum": _num(ft.total), "kind": ft.kind.value})
    return rows


def _solve_if_needed(doc: Document, config: SolverConfig):
    if doc.theta is not None:
        return doc.theta, None
    outcome = solve(doc.tri, config)
    return (outcome.theta if outcome.solved else None), outcome


def _radii(doc: Document, theta):
    if doc.heights and not all(vc.ideal for vc in doc.tri.vertex_classes):
        cs = cross_section(doc.tri, theta, heights=doc.heights)
        return dict(cs.radii), cs
    return initial_radii(doc.tri, theta)


def cmd_validate(args, out) -> int:
    doc = read(args.path)
    rep = boundary_euler_check(doc.tri)
    report = {
        "command": "validate",
        "name": doc.tri.name,
        "tetrahedra": doc.tri.size,
        "edge_classes": [f"{e.index}: valence {e.valence}{' zero' if e.zero else ''}"
                         for e in doc.tri.edge_classes],
        "boundary_euler": {str(c): chi for c, chi in rep.boundary},
        "cusp_euler": {str(c): chi for c, chi in rep.cusps},
        "problems": list(rep.problems),
        "warnings": list(detect_boundary_parallel_flags(doc.tri)),
        "valid": rep.ok,
    }
    _emit(report, args.json, out)
    return EXIT_OK if rep.ok else EXIT_INVALID


def _solver_config(args) -> SolverConfig:
    return SolverConfig(max_iters=args.max_iters, residual_tol=args.tol, retries=args.seeds)


def cmd_solve(args, out) -> int:
    doc = read(args.path)
    rep = boundary_euler_check(doc.tri)
    if not rep.ok:
        _emit({"command": "solve", "valid": False, "problems": list(rep.problems)}, args.json, out)
        return EXIT_INVALID
    if args.verify_only:
        if doc.theta is None:
            _emit({"command": "solve", "error": "no angles block to verify"}, args.json, out)
            return EXIT_INVALID
        cert = certify(doc.tri, doc.theta, args.tol * 10)
        report = {"command": "solve", "mode": "verify", "certified": cert.ok,
                  "residuals": {k: _num(v) for k, v in cert.by_class.items()},
                  "validity": list(cert.validity)}
        _emit(report, args.json, out)
        return EXIT_OK if cert.ok else EXIT_NO_CONVERGENCE
    t0 = time.perf_counter()
    outcome = solve(doc.tri, _solver_config(args))
    report = {"command": "solve", "status": outcome.status.value, "iterations": outcome.iterations,
              "attempt": outcome.attempt, "residual_norm": _num(outcome.residual_norm)}
    if outcome.solved:
        cert = certify(doc.tri, outcome.theta, args.tol * 10)
        report["certified"] = cert.ok
        report["residuals"] = {k: _num(v) for k, v in cert.by_class.items()}
        report["angles"] = [" ".join("%.11f" % x for x in row) for row in outcome.theta]
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(format_document(Document(doc.tri, outcome.theta, doc.heights)))
    if args.timing:
        report["seconds"] = round(time.perf_counter() - t0, 6)
    _emit(report, args.json, out)
    return EXIT_OK if outcome.solved else EXIT_NO_CONVERGENCE


def cmd_tilts(args, out) -> int:
    doc = read(args.path)
    t0 = time.perf_counter()
    theta, outcome = _solve_if_needed(doc, SolverConfig())
    if theta is None:
        _emit({"command": "tilts", "status": outcome.status.value}, args.json, out)
        return EXIT_NO_CONVERGENCE
    radii, cs = _radii(doc, theta)
    rep = tilt_report(doc.tri, theta, radii)
    report = {"command": "tilts", "faces": _tilt_rows(rep),
              "heights": {str(c): _num(h) for c, h in sorted(cs.heights.items())}}
    if args.timing:
        report["seconds"] = round(time.perf_counter() - t0, 6)
    _emit(report, args.json, out)
    return EXIT_OK


def cmd_canonize(args, out) -> int:
    doc = read(args.path)
    t0 = time.perf_counter()
    theta, outcome = _solve_if_needed(doc, SolverConfig())
    if theta is None:
        _emit({"command": "canonize", "status": outcome.status.value}, args.json, out)
        return EXIT_NO_CONVERGENCE
    tri = doc.tri
    radii, cs = _radii(doc, theta)
    if args.perturb_move is not None:
        face = tri.faces[args.perturb_move][0]
        moved = geometric_two_three(tri, theta, radii, face)
        if moved is None:
            _emit({"command": "canonize", "error": f"face {args.perturb_move} admits no geometric 2-3 move"},
                  args.json, out)
            return EXIT_STUCK
        tri, theta, radii = moved.tri, moved.theta, moved.radii
    config = CanonConfig(eps_tilt=args.tilt_eps, max_moves=args.max_moves)
    res = canonize(tri, theta, config, radii)
    report = {
        "command": "canonize",
        "status": res.status.value,
        "moves": [f"{m.kind} {m.target}" for m in res.moves],
        "move_count": res.move_count,
        "tetrahedra": res.tri.size,
        "transparent_faces": [f"{a[0]}:{a[1]}-{b[0]}:{b[1]}" for a, b in res.transparent],
        "cells": [list(c) for c in res.cells],
        "cap_hit": res.cap_hit,
        "self_adjacency_violations": res.self_adjacency_violations,
        "isosig": isomorphism_signature(res.tri),
        "heights": {str(c): _num(h) for c, h in sorted(cs.heights.items())},
    }
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(format_document(Document(res.tri, res.theta, doc.heights)))
    if args.timing:
        report["seconds"] = round(time.perf_counter() - t0, 6)
    _emit(report, args.json, out)
    return EXIT_STUCK if res.status is CanonStatus.STUCK else EXIT_OK


def cmd_isosig(args, out) -> int:
    doc = read(args.path)
    out.write(isomorphism_signature(doc.tri) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trunckit",
        description="Angle structures and canonical decompositions of partially truncated triangulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("path")
        p.add_argument("--json", action="store_true", help="machine-readable report")
        p.add_argument("--timing", action="store_true", help="include wall-clock timing")

    p = sub.add_parser("validate", help="structural and boundary checks")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="find the dihedral angles")
    common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--seeds", type=int, default=16)
    p.add_argument("--output", help="write the solved triangulation here")
    p.add_argument("--verify-only", action="store_true", help="certify the stored angles")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("canonize", help="flip to the canonical decomposition")
    common(p)
    p.add_argument("--max-moves", type=int, default=None)
    p.add_argument("--tilt-eps", type=float, default=1e-9)
    p.add_argument("--perturb-move", type=int, default=None, metavar="FACE",
                   help="apply a 2-3 move on this face index first")
    p.add_argument("--output", help="write the final triangulation here")
    p.set_defaults(func=cmd_canonize)

    p = sub.add_parser("tilts", help="per-face tilt table")
    common(p)
    p.set_defaults(func=cmd_tilts)

    p = sub.add_parser("isosig", help="canonical label string")
    p.add_argument("path")
    p.set_defaults(func=cmd_isosig)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except TriangulationError as exc:
        sys.stderr.write(f"invalid triangulation: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
