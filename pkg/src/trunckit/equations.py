"""Residual system for the dihedral angles of a triangulation.

The unknowns are the angles of all non-zero edge slots.  Residual rows
come in classes (see ``Condition``); the linear ones (angle sums around
edges, angle sums at ideal vertices) get exact Jacobian rows, everything
else is differentiated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .tetshape import (
    EDGE_SLOT,
    EDGES,
    LengthKind,
    boundary_edge_length,
    c_theta,
    corner_modulus,
    d_theta,
    edges_at,
    other_vertices,
    sigma,
)
from .triangulation import Link, Triangulation


class Condition(Enum):
    INTERNAL_LENGTH = "InternalLength"
    BOUNDARY_LENGTH = "BoundaryLength"
    SIGMA = "Sigma"
    ANGLE_SUM = "AngleSum"
    Z_REAL = "ZReal"
    Z_IMAG = "ZImag"
    COMPLETENESS_RE = "CompletenessRe"
    COMPLETENESS_IM = "CompletenessIm"
    IDEAL_VERTEX_SUM = "IdealVertexSum"


LINEAR = (Condition.ANGLE_SUM, Condition.IDEAL_VERTEX_SUM)


class TagMismatch(ValueError):
    pass


@dataclass(frozen=True)
class AngleVector:
    """Maps the flat unknown vector to per-tetrahedron angle sextuples."""

    slots: tuple  # (tet, slot) for every unknown
    size: int  # number of tetrahedra

    @classmethod
    def for_triangulation(cls, tri: Triangulation) -> "AngleVector":
        slots = tuple((t, s) for t in range(tri.size) for s in range(6)
                      if not tri.tetrahedra[t].is_zero(s))
        return cls(slots, tri.size)

    @cached_property
    def index(self) -> dict:
        return {ts: i for i, ts in enumerate(self.slots)}

    def __len__(self) -> int:
        return len(self.slots)

    def to_angles(self, x) -> np.ndarray:
        out = np.zeros((self.size, 6))
        for (t, s), value in zip(self.slots, x):
            out[t, s] = value
        return out

    def from_angles(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.array([theta[t, s] for t, s in self.slots])


@dataclass(frozen=True)
class Residual:
    condition: Condition
    data: tuple


@dataclass(frozen=True)
class ResidualSystem:
    tri: Triangulation
    unknowns: AngleVector
    residuals: tuple
    generators: dict  # cusp vertex class -> tuple of half-edge loops

    def __len__(self) -> int:
        return len(self.residuals)

    def conditions(self) -> tuple:
        return tuple(r.condition for r in self.residuals)

    def rows(self, condition: Condition) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.residuals) if r.condition is condition], dtype=int)


# ----------------------------------------------------------------------------
# cusp loops


def link_generators(link: Link) -> tuple:
    """Two closed half-edge paths generating the first homology of a torus link."""
    nv = len(link.vertices)
    edges = []  # canonical half-edge per link edge
    edge_of = {}
    for (k, i), (k2, j) in sorted(link.twin.items()):
        if (k, i) < (k2, j):
            edge_of[(k, i)] = (len(edges), 1)
            edge_of[(k2, j)] = (len(edges), -1)
            edges.append((k, i))

    def ends(h):
        k, i = h
        return link.corner_vertex[(k, i)], link.corner_vertex[(k, (i + 1) % 3)]

    # spanning tree by BFS over link vertices
    adj = {v: [] for v in range(nv)}
    for h in link.twin:
        a, b = ends(h)
        adj[a].append((h, b))
    for v in adj:
        adj[v].sort()
    parent = {0: None}
    order = [0]
    for v in order:
        for h, b in adj[v]:
            if b not in parent:
                parent[b] = h
                order.append(b)
    tree = {edge_of[h][0] for h in parent.values() if h is not None}

    def path_to_root(v):
        out = []
        while parent[v] is not None:
            h = parent[v]
            out.append(h)
            v = ends(h)[0]
        return out[::-1]  # root -> v

    def vector(loop):
        vec = np.zeros(len(edges))
        for h in loop:
            e, s = edge_of[h]
            vec[e] += s
        return vec

    faces = []
    for k in range(len(link.triangles)):
        faces.append(vector([(k, 0), (k, 1), (k, 2)]))
    basis = list(faces)
    rank = np.linalg.matrix_rank(np.array(basis)) if basis else 0
    chosen = []
    for e, h in enumerate(edges):
        if e in tree:
            continue
        a, b = ends(h)
        back = [link.twin[x] for x in reversed(path_to_root(b))]
        loop = path_to_root(a) + [h] + back
        loop = _reduce(loop, link)
        trial = np.array(basis + [vector(loop)])
        r = np.linalg.matrix_rank(trial)
        if r > rank:
            basis.append(vector(loop))
            rank = r
            chosen.append(tuple(loop))
        if len(chosen) == 2:
            break
    return tuple(chosen)


def _reduce(loop, link: Link) -> list:
    """Cancel immediate backtracks (h followed by its twin), cyclically."""
    out = []
    for h in loop:
        if out and link.twin[out[-1]] == h:
            out.pop()
        else:
            out.append(h)
    while len(out) >= 2 and link.twin[out[-1]] == out[0]:
        out = out[1:-1]
    return out


def left_corners(link: Link, loop) -> list:
    """Corners on the left of a closed half-edge path, grouped per path vertex."""
    groups = []
    n = len(loop)
    for i in range(n):
        incoming, outgoing = loop[i - 1], loop[i]
        stop = link.twin[incoming]
        cur = outgoing
        corners = []
        for _ in range(3 * len(link.triangles) + 1):
            if cur == stop:
                break
            corners.append(cur)
            cur = link.twin[(cur[0], (cur[1] + 2) % 3)]
        else:
            raise RuntimeError("rotation around a link vertex does not close")
        groups.append(corners)
    return groups


def holonomy_log(tri: Triangulation, link: Link, loop, theta) -> complex:
    """Log of the similarity holonomy along a loop; zero iff it is a translation."""
    re = 0.0
    arg = 0.0
    for corners in left_corners(link, loop):
        for k, i in corners:
            t, v = link.triangles[k]
            z = corner_modulus(theta[t], v, link.corners[k][i], tri.orientation[t])
            re += math.log(abs(z))
            arg += math.atan2(z.imag, z.real)
    arg += len(loop) * math.pi
    return complex(re, math.remainder(arg, 2 * math.pi))


# ----------------------------------------------------------------------------
# assembly


def _lengths_match(a, b):
    if a.kind != b.kind:
        raise TagMismatch(f"{a.kind.value} length matched against {b.kind.value}")


def assemble(tri: Triangulation, reduce: bool = True) -> ResidualSystem:
    """Collect residual rows.  With ``reduce`` the conditions implied by the
    others are dropped: without cusps the boundary lengths, sigma and Z rows;
    with cusps but no zero-length edges the internal lengths and sigma rows.
    Internal and boundary lengths imply each other, so one family always stays."""
    unknowns = AngleVector.for_triangulation(tri)
    toric = tri.has_toric_ends
    annular = tri.has_annular_ends
    keep = set(Condition)
    if reduce and not toric:
        keep -= {Condition.BOUNDARY_LENGTH, Condition.SIGMA, Condition.Z_REAL, Condition.Z_IMAG}
    elif reduce and not annular:
        keep -= {Condition.INTERNAL_LENGTH, Condition.SIGMA}
    rows = []
    # a generic interior point only decides tags, which depend on flags alone
    probe = np.where(unknowns.to_angles(np.full(len(unknowns), 0.3)) > 0, 0.3, 0.0)

    for ec in tri.edge_classes:
        if not ec.zero:
            rows.append(Residual(Condition.ANGLE_SUM, (ec.index,)))

    for (t, f), (u, h) in tri.faces:
        p = tri.gluings[t][f].perm
        ct, cu = tri.tetrahedra[t], tri.tetrahedra[u]
        for x, y in (EDGES[s] for s in range(6)):
            if f in (x, y):
                continue
            s, s2 = EDGE_SLOT[frozenset((x, y))], EDGE_SLOT[frozenset((p[x], p[y]))]
            la = internal_edge_kind(ct, s)
            lb = internal_edge_kind(cu, s2)
            if la != lb:
                raise TagMismatch(f"internal edge tags {la.value} vs {lb.value} across face ({t},{f})")
            if la is LengthKind.FINITE and Condition.INTERNAL_LENGTH in keep:
                rows.append(Residual(Condition.INTERNAL_LENGTH, (t, s, u, s2)))
        for x in other_vertices(f):
            if ct.is_ideal(x):
                continue
            y, z = other_vertices(f, x)
            i, j = sorted((EDGE_SLOT[frozenset((x, y))], EDGE_SLOT[frozenset((x, z))]))
            i2, j2 = sorted((EDGE_SLOT[frozenset((p[x], p[y]))], EDGE_SLOT[frozenset((p[x], p[z]))]))
            la = boundary_edge_length(probe[t], i, j, ct)
            lb = boundary_edge_length(probe[u], i2, j2, cu)
            _lengths_match(la, lb)
            if la.kind is LengthKind.FINITE and Condition.BOUNDARY_LENGTH in keep:
                rows.append(Residual(Condition.BOUNDARY_LENGTH, (t, i, j, u, i2, j2)))
        if Condition.SIGMA in keep:
            for a in other_vertices(f):
                b, c = other_vertices(f, a)
                if ct.is_ideal(a) and ct.is_zero((b, c)):
                    rows.append(Residual(Condition.SIGMA, (t, f, a, u, h, p[a])))

    for ec in tri.edge_classes:
        if ec.zero:
            continue
        a_end, b_end = ec.ends
        if not (tri.vertex_classes[a_end].ideal and tri.vertex_classes[b_end].ideal):
            continue
        if Condition.Z_REAL not in keep:
            continue
        end = 0 if a_end <= b_end else 1
        rows.append(Residual(Condition.Z_REAL, (ec.index, end)))
        rows.append(Residual(Condition.Z_IMAG, (ec.index, end)))

    generators = {}
    for vc, link in zip(tri.vertex_classes, tri.links):
        if not vc.ideal:
            continue
        loops = link_generators(link)
        generators[vc.index] = loops
        for g in range(len(loops)):
            rows.append(Residual(Condition.COMPLETENESS_RE, (vc.index, g)))
            rows.append(Residual(Condition.COMPLETENESS_IM, (vc.index, g)))

    for t, comb in enumerate(tri.tetrahedra):
        for v in sorted(comb.ideal_vertices):
            rows.append(Residual(Condition.IDEAL_VERTEX_SUM, (t, v)))

    return ResidualSystem(tri, unknowns, tuple(rows), generators)


def internal_edge_kind(comb, s: int) -> LengthKind:
    a, b = EDGES[s]
    ideal = comb.is_ideal(a) + comb.is_ideal(b)
    if ideal == 2:
        return LengthKind.LINE
    if ideal == 1:
        return LengthKind.HALF_LINE
    if comb.is_zero(s):
        return LengthKind.ZERO
    return LengthKind.FINITE


# ----------------------------------------------------------------------------
# evaluation


def _cosh_internal(theta, s: int) -> float:
    a, b = EDGES[s]
    da, db = d_theta(theta, a), d_theta(theta, b)
    if da <= 0 or db <= 0:
        return math.nan
    return c_theta(theta, s) / math.sqrt(da * db)


def _cosh_boundary(theta, i: int, j: int) -> float:
    v = (set(EDGES[i]) & set(EDGES[j])).pop()
    (k,) = set(edges_at(v)) - {i, j}
    return (math.cos(theta[i]) * math.cos(theta[j]) + math.cos(theta[k])) / (
        math.sin(theta[i]) * math.sin(theta[j]))


def _row_value(system: ResidualSystem, r: Residual, theta, cache: dict) -> float:
    tri = system.tri
    c = r.condition
    if c is Condition.ANGLE_SUM:
        ec = tri.edge_classes[r.data[0]]
        return sum(theta[t, s] for t, s, _, _ in ec.members) - 2 * math.pi
    if c is Condition.IDEAL_VERTEX_SUM:
        t, v = r.data
        return sum(theta[t, e] for e in edges_at(v)) - math.pi
    if c is Condition.INTERNAL_LENGTH:
        t, s, u, s2 = r.data
        return _cosh_internal(theta[t], s) - _cosh_internal(theta[u], s2)
    if c is Condition.BOUNDARY_LENGTH:
        t, i, j, u, i2, j2 = r.data
        return _cosh_boundary(theta[t], i, j) - _cosh_boundary(theta[u], i2, j2)
    if c is Condition.SIGMA:
        t, f, a, u, h, a2 = r.data
        return (sigma(theta[t], f, a, tri.orientation[t], tri.tetrahedra[t])
                + sigma(theta[u], h, a2, tri.orientation[u], tri.tetrahedra[u]))
    if c in (Condition.Z_REAL, Condition.Z_IMAG):
        key = ("Z",) + r.data
        if key not in cache:
            cache[key] = edge_modulus_product(tri, r.data[0], r.data[1], theta)
        z = cache[key]
        return z.real - 1.0 if c is Condition.Z_REAL else z.imag
    if c in (Condition.COMPLETENESS_RE, Condition.COMPLETENESS_IM):
        key = ("H",) + r.data
        if key not in cache:
            vc, g = r.data
            loop = system.generators[vc][g]
            cache[key] = holonomy_log(tri, tri.links[vc], loop, theta)
        h = cache[key]
        return h.real if c is Condition.COMPLETENESS_RE else h.imag
    raise ValueError(c)


def edge_modulus_product(tri: Triangulation, edge: int, end: int, theta) -> complex:
    """Product of the cusp moduli around an edge class at one of its ends."""
    z = 1.0 + 0.0j
    for t, _, a, b in tri.edge_classes[edge].members:
        v, w = (a, b) if end == 0 else (b, a)
        z *= corner_modulus(theta[t], v, w, tri.orientation[t])
    return z


def evaluate(system: ResidualSystem, x, rows=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    theta = system.unknowns.to_angles(x)
    cache: dict = {}
    idx = range(len(system.residuals)) if rows is None else rows
    return np.array([_safe_value(system, system.residuals[i], theta, cache) for i in idx], dtype=float)


def _safe_value(system, r, theta, cache) -> float:
    # NaN marks points where a closed form is undefined, e.g. an angle at 0 or pi
    try:
        return _row_value(system, r, theta, cache)
    except (ZeroDivisionError, ValueError, OverflowError):
        return math.nan


def _linear_rows(system: ResidualSystem) -> tuple:
    """Exact rows of the linear residuals: row index -> coefficient vector."""
    tri, index = system.tri, system.unknowns.index
    out = {}
    for i, r in enumerate(system.residuals):
        if r.condition is Condition.ANGLE_SUM:
            row = np.zeros(len(system.unknowns))
            for t, s, _, _ in tri.edge_classes[r.data[0]].members:
                row[index[(t, s)]] += 1.0
            out[i] = row
        elif r.condition is Condition.IDEAL_VERTEX_SUM:
            t, v = r.data
            row = np.zeros(len(system.unknowns))
            for e in edges_at(v):
                row[index[(t, e)]] += 1.0
            out[i] = row
    return out


def jacobian(system: ResidualSystem, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    m = len(system.residuals)
    jac = np.zeros((m, n))
    linear = _linear_rows(system)
    for i, row in linear.items():
        jac[i] = row
    rest = np.array([i for i in range(m) if i not in linear], dtype=int)
    if len(rest) == 0:
        return jac
    for k in range(n):
        step = h * max(1.0, abs(x[k]))
        # keep the stencil inside (0, pi) so sines stay nonzero
        lo = max(x[k] - step, 0.5 * x[k])
        hi = min(x[k] + step, 0.5 * (x[k] + math.pi))
        xp, xm = x.copy(), x.copy()
        xp[k] = hi
        xm[k] = lo
        jac[rest, k] = (evaluate(system, xp, rest) - evaluate(system, xm, rest)) / (hi - lo)
    return jac


def residual_by_class(system: ResidualSystem, x) -> dict:
    values = evaluate(system, x)
    out = {}
    for r, v in zip(system.residuals, values):
        key = r.condition.value
        v = math.inf if math.isnan(v) else abs(float(v))
        out[key] = max(out.get(key, 0.0), v)
    return out
