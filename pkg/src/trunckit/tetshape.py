"""Geometry of a single partially truncated tetrahedron.

Vertices are 0..3 and edges are indexed by slot::

    slot   0      1      2      3      4      5
    edge  {0,1}  {0,2}  {0,3}  {1,2}  {1,3}  {2,3}

Opposite edge pairs are {01,23}, {02,13}, {03,12}.  Face ``i`` is the face
opposite vertex ``i``; the dihedral angle along edge {k,l} is formed by the
two faces opposite the complementary vertices.

The closed-form polynomials below are written for a reference labelling of
the edges around a chosen edge ``e = {a, b}`` (a < b, remaining vertices
c < d)::

    e1 = ab   e2 = ac   e3 = ad   e4 = cd   e5 = bd   e6 = bc

so that e1, e2, e3 share the vertex a, e1, e5, e6 share b, and (e1, e4),
(e2, e5), (e3, e6) are opposite.  Every formula used here is invariant
under the relabellings that preserve this pattern.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .lorentz import EPS_GEOM, MINKOWSKI, GeometryError, lorentz_dot

EDGES: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_SLOT = {frozenset(e): i for i, e in enumerate(EDGES)}
OPPOSITE = (5, 4, 3, 2, 1, 0)


class FormulaDomain(GeometryError):
    """A closed form was evaluated outside the range valid moduli produce."""


class NotExceptional(GeometryError):
    pass


class VertexNotIdeal(GeometryError):
    pass


class MissingRadius(GeometryError):
    pass


class SameEdge(GeometryError):
    pass


class OppositeEdges(GeometryError):
    pass


class SingularGram(GeometryError):
    pass


class DegenerateLift(GeometryError):
    pass


def edge_slot(e) -> int:
    """Accept an edge slot or a vertex pair."""
    if isinstance(e, (int, np.integer)):
        if not 0 <= e < 6:
            raise ValueError(f"edge slot out of range: {e}")
        return int(e)
    a, b = e
    if a == b:
        raise ValueError("an edge joins two distinct vertices")
    return EDGE_SLOT[frozenset((int(a), int(b)))]


def edges_at(v: int) -> tuple[int, int, int]:
    return tuple(i for i, e in enumerate(EDGES) if v in e)


def other_vertices(*vs: int) -> tuple[int, ...]:
    return tuple(x for x in range(4) if x not in vs)


def permutation_sign(p: Sequence[int]) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def positive_others(v: int, orientation: int = 1) -> tuple[int, int, int]:
    """The other three vertices in the cyclic order positively arranged
    around ``v`` for a tetrahedron of the given orientation sign."""
    b, c, d = other_vertices(v)
    if permutation_sign((v, b, c, d)) != orientation:
        c, d = d, c
    return b, c, d


def reference_labels(e) -> tuple[int, int, int, int, int, int]:
    """Slots (e1, ..., e6) of the reference labelling around edge ``e``."""
    a, b = EDGES[edge_slot(e)]
    c, d = other_vertices(a, b)
    s = lambda x, y: EDGE_SLOT[frozenset((x, y))]
    return s(a, b), s(a, c), s(a, d), s(c, d), s(b, d), s(b, c)


@dataclass(frozen=True)
class TetCombinatorics:
    ideal_vertices: frozenset = frozenset()
    zero_edges: frozenset = frozenset()

    def __post_init__(self):
        ideal = frozenset(int(v) for v in self.ideal_vertices)
        zero = frozenset(edge_slot(e) for e in self.zero_edges)
        if not ideal <= {0, 1, 2, 3}:
            raise ValueError("ideal vertices must be among 0..3")
        object.__setattr__(self, "ideal_vertices", ideal)
        object.__setattr__(self, "zero_edges", zero)
        for e in zero:
            if set(EDGES[e]) & ideal:
                raise ValueError(f"zero-length edge {EDGES[e]} has an ideal endpoint")

    def is_ideal(self, v: int) -> bool:
        return v in self.ideal_vertices

    def is_zero(self, e) -> bool:
        return edge_slot(e) in self.zero_edges


@dataclass(frozen=True)
class TetAngles:
    """Dihedral angles indexed by edge slot."""

    theta: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.theta)
        if len(t) != 6:
            raise ValueError("six dihedral angles are required")
        object.__setattr__(self, "theta", t)

    def __getitem__(self, e) -> float:
        return self.theta[edge_slot(e)]

    def __iter__(self):
        return iter(self.theta)

    def __len__(self):
        return 6

    @classmethod
    def uniform(cls, value: float) -> "TetAngles":
        return cls((value,) * 6)


def _theta(angles) -> tuple:
    return angles.theta if isinstance(angles, TetAngles) else tuple(float(x) for x in angles)


class LengthKind(Enum):
    ZERO = "zero"
    FINITE = "finite"
    HALF_LINE = "half-line"
    LINE = "line"


@dataclass(frozen=True)
class Length:
    kind: LengthKind
    value: float | None = None
    cosh: float | None = None

    @classmethod
    def zero(cls) -> "Length":
        return cls(LengthKind.ZERO, 0.0, 1.0)

    @classmethod
    def finite(cls, cosh_value: float) -> "Length":
        return cls(LengthKind.FINITE, math.acosh(max(cosh_value, 1.0)), cosh_value)

    @property
    def is_infinite(self) -> bool:
        return self.kind in (LengthKind.HALF_LINE, LengthKind.LINE)


def _infer_comb(angles, comb: TetCombinatorics | None) -> TetCombinatorics:
    if comb is not None:
        return comb
    t = _theta(angles)
    zero = {e for e in range(6) if t[e] == 0.0}
    ideal = {v for v in range(4) if abs(vertex_angle_sum(t, v) - math.pi) <= EPS_GEOM}
    ideal -= {v for e in zero for v in EDGES[e]}
    return TetCombinatorics(frozenset(ideal), frozenset(zero))


# ----------------------------------------------------------------------------
# validity


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    problems: tuple = ()


def vertex_angle_sum(angles, v: int) -> float:
    t = _theta(angles)
    return sum(t[e] for e in edges_at(v))


def validate_angles(comb: TetCombinatorics, angles, tol: float = EPS_GEOM) -> ValidityReport:
    t = _theta(angles)
    problems = []
    for e, value in enumerate(t):
        if not 0.0 <= value < math.pi:
            problems.append(f"angle on edge {EDGES[e]} is outside [0, pi)")
        if (value == 0.0) != (e in comb.zero_edges):
            if value == 0.0:
                problems.append(f"edge {EDGES[e]} has angle 0 but is not declared zero-length")
            else:
                problems.append(f"zero-length edge {EDGES[e]} has non-zero angle")
    for v in range(4):
        s = vertex_angle_sum(t, v)
        if comb.is_ideal(v):
            if abs(s - math.pi) > tol:
                problems.append(f"ideal vertex {v} has angle sum {s!r} != pi")
        elif not s < math.pi - tol:
            problems.append(f"non-ideal vertex {v} has angle sum {s!r} >= pi")
    return ValidityReport(not problems, tuple(problems))


# ----------------------------------------------------------------------------
# closed forms


def d_theta(angles, v: int) -> float:
    t = _theta(angles)
    c1, c2, c3 = (math.cos(t[e]) for e in edges_at(v))
    return 2 * c1 * c2 * c3 + c1 * c1 + c2 * c2 + c3 * c3 - 1.0


def c_theta(angles, e) -> float:
    t = _theta(angles)
    l1, l2, l3, l4, l5, l6 = reference_labels(e)
    c = lambda s: math.cos(t[s])
    s1 = math.sin(t[l1])
    return (c(l1) * (c(l3) * c(l6) + c(l2) * c(l5))
            + c(l2) * c(l6) + c(l3) * c(l5) + c(l4) * s1 * s1)


def g_theta(angles) -> float:
    t = _theta(angles)
    c = [math.cos(x) for x in t]
    total = -1.0 + sum(x * x for x in c)
    for v in range(4):
        a, b, d = edges_at(v)
        total += 2 * c[a] * c[b] * c[d]
    for e in range(3):
        f = OPPOSITE[e]
        rest = [c[s] for s in range(6) if s not in (e, f)]
        total += 2 * rest[0] * rest[1] * rest[2] * rest[3]
        total -= c[e] * c[e] * c[f] * c[f]
    return total


def _common_vertex(e_i: int, e_j: int) -> int:
    common = set(EDGES[e_i]) & set(EDGES[e_j])
    return common.pop()


def boundary_edge_length(angles, e_i, e_j, comb: TetCombinatorics | None = None) -> Length:
    """Length of the truncation-triangle edge between two edges sharing a vertex."""
    i, j = edge_slot(e_i), edge_slot(e_j)
    if i == j:
        raise SameEdge("the two edges coincide")
    if OPPOSITE[i] == j:
        raise OppositeEdges("opposite edges have no common vertex")
    comb = _infer_comb(angles, comb)
    v = _common_vertex(i, j)
    if comb.is_ideal(v):
        return Length.zero()
    zi, zj = comb.is_zero(i), comb.is_zero(j)
    if zi and zj:
        return Length(LengthKind.LINE)
    if zi or zj:
        return Length(LengthKind.HALF_LINE)
    t = _theta(angles)
    (k,) = set(edges_at(v)) - {i, j}
    ch = (math.cos(t[i]) * math.cos(t[j]) + math.cos(t[k])) / (math.sin(t[i]) * math.sin(t[j]))
    if ch < 1.0 - EPS_GEOM:
        raise FormulaDomain(f"cosh of boundary length {ch!r} < 1")
    return Length.finite(ch)


def internal_edge_length(angles, e, comb: TetCombinatorics | None = None) -> Length:
    s = edge_slot(e)
    comb = _infer_comb(angles, comb)
    a, b = EDGES[s]
    ideal_ends = comb.is_ideal(a) + comb.is_ideal(b)
    if ideal_ends == 2:
        return Length(LengthKind.LINE)
    if ideal_ends == 1:
        return Length(LengthKind.HALF_LINE)
    ch = c_theta(angles, s) / math.sqrt(d_theta(angles, a) * d_theta(angles, b))
    if ch < 1.0 - EPS_GEOM:
        raise FormulaDomain(f"cosh of internal length {ch!r} < 1")
    if comb.is_zero(s):
        if abs(ch - 1.0) > 1e-6:
            raise FormulaDomain(f"zero-length edge evaluates to cosh {ch!r}")
        return Length.zero()
    return Length.finite(ch)


def _face_positive_cycle(face: int, orientation: int) -> tuple[int, int, int]:
    """Vertices of ``face`` in the cyclic order of the boundary orientation
    induced by the oriented tetrahedron."""
    verts = other_vertices(face)
    sign = orientation * (-1) ** face
    return verts if sign > 0 else (verts[0], verts[2], verts[1])


def sigma(angles, face: int, ideal_vertex: int, orientation: int = 1,
          comb: TetCombinatorics | None = None) -> float:
    """Signed invariant of an exceptional hexagon.

    The hexagon is the face opposite ``face``; it must contain the ideal
    vertex and the face edge opposite that vertex must be zero-length.
    """
    comb = _infer_comb(angles, comb)
    a = ideal_vertex
    if a == face or not comb.is_ideal(a):
        raise NotExceptional(f"vertex {a} is not an ideal vertex of face {face}")
    cyc = _face_positive_cycle(face, orientation)
    k = cyc.index(a)
    b, c = cyc[(k + 1) % 3], cyc[(k + 2) % 3]
    if not comb.is_zero((b, c)):
        raise NotExceptional(f"edge {(b, c)} opposite the ideal vertex is not zero-length")
    t = _theta(angles)
    d = face

    def side(x):
        ax, xd = t[EDGE_SLOT[frozenset((a, x))]], t[EDGE_SLOT[frozenset((x, d))]]
        return math.log(math.sin(ax) / (math.cos(ax) + math.cos(xd)))

    return side(c) - side(b)


def cusp_modulus_z(angles, e, v: int, orientation: int = 1,
                   comb: TetCombinatorics | None = None) -> complex:
    """Similarity modulus of the cusp triangle at ``v`` at the corner of edge ``e``."""
    comb = _infer_comb(angles, comb)
    if not comb.is_ideal(v):
        raise VertexNotIdeal(f"vertex {v} is not ideal")
    s = edge_slot(e)
    if v not in EDGES[s]:
        raise ValueError(f"edge {EDGES[s]} does not contain vertex {v}")
    t = _theta(angles)
    return corner_modulus(t, v, EDGES[s][0] + EDGES[s][1] - v, orientation)


def corner_modulus(theta, v: int, b: int, orientation: int = 1) -> complex:
    """z at corner ``b`` of the cusp triangle of ideal vertex ``v``."""
    cyc = positive_others(v, orientation)
    k = cyc.index(b)
    c, d = cyc[(k + 1) % 3], cyc[(k + 2) % 3]
    tb = theta[EDGE_SLOT[frozenset((v, b))]]
    tc = theta[EDGE_SLOT[frozenset((v, c))]]
    td = theta[EDGE_SLOT[frozenset((v, d))]]
    return (math.sin(tc) / math.sin(td)) * cmath.exp(1j * tb)


# ----------------------------------------------------------------------------
# shapes, D values and tilts

HoroRadii = Mapping[int, float]


@dataclass(frozen=True)
class TetShape:
    comb: TetCombinatorics
    angles: TetAngles

    @classmethod
    def build(cls, comb: TetCombinatorics, angles) -> "TetShape":
        if not isinstance(angles, TetAngles):
            angles = TetAngles(tuple(angles))
        return cls(comb, angles)

    @cached_property
    def d(self) -> tuple:
        return tuple(d_theta(self.angles, v) for v in range(4))

    @cached_property
    def c(self) -> tuple:
        return tuple(c_theta(self.angles, e) for e in range(6))

    @cached_property
    def g(self) -> float:
        return g_theta(self.angles)

    @cached_property
    def internal_lengths(self) -> tuple:
        return tuple(internal_edge_length(self.angles, e, self.comb) for e in range(6))

    @cached_property
    def boundary_lengths(self) -> dict:
        """Keyed by (vertex, slot_i, slot_j) with slot_i < slot_j."""
        out = {}
        for v in range(4):
            if self.comb.is_ideal(v):
                continue
            for i, j in combinations(edges_at(v), 2):
                out[(v, i, j)] = boundary_edge_length(self.angles, i, j, self.comb)
        return out

    @cached_property
    def gram(self) -> np.ndarray:
        return gram_matrix(self.angles)


def D_value(shape: TetShape, v: int, radii: HoroRadii | None = None) -> float:
    t = shape.angles.theta
    if shape.comb.is_ideal(v):
        if radii is None or v not in radii:
            raise MissingRadius(f"ideal vertex {v} needs a horosphere radius")
        r = float(radii[v])
        others = other_vertices(v)
        num = 0.0
        den = 1.0
        for x in others:
            y, z = (w for w in others if w != x)
            sx = math.sin(t[EDGE_SLOT[frozenset((v, x))]])
            num += sx * math.cos(t[EDGE_SLOT[frozenset((y, z))]])
            den *= sx
        return num / (2.0 * r * den)
    return math.sqrt(shape.g / shape.d[v])


def tilt_matrix(angles) -> np.ndarray:
    """Symmetric matrix with unit diagonal and -cos of the complementary edge."""
    t = _theta(angles)
    m = np.eye(4)
    for i, j in combinations(range(4), 2):
        k, l = other_vertices(i, j)
        m[i, j] = m[j, i] = -math.cos(t[EDGE_SLOT[frozenset((k, l))]])
    return m


def tilts(shape: TetShape, radii: HoroRadii | None = None) -> np.ndarray:
    inv_d = np.array([1.0 / D_value(shape, v, radii) for v in range(4)])
    return tilt_matrix(shape.angles) @ inv_d


# ----------------------------------------------------------------------------
# Gram-matrix reconstruction


def gram_matrix(angles) -> np.ndarray:
    """Gram matrix of the unit outward face normals (face i opposite vertex i)."""
    return tilt_matrix(angles)


@dataclass(frozen=True)
class Realization:
    """Explicit lift of a tetrahedron to Minkowski space.

    ``normals[i]`` is the unit space-like vector whose dual half-space
    contains the tetrahedron and whose boundary carries face ``i``.
    ``vertices[i]`` is the vertex lift: a future light-like vector for
    ideal vertices (scale arbitrary) and a unit space-like vector for the
    others.  All vertex lifts lie on the same side, so the tetrahedron is
    their positive cone.
    """

    normals: np.ndarray
    vertices: np.ndarray
    ideal: tuple


def realize(angles, comb: TetCombinatorics | None = None) -> Realization:
    g = gram_matrix(angles)
    det = np.linalg.det(g)
    if abs(det) < 1e-12 * np.linalg.norm(g) ** 4:
        raise SingularGram(f"det G = {det!r}")
    lam, q = np.linalg.eigh(g)
    if not (lam[0] < 0 < lam[1]):
        raise SingularGram(f"Gram matrix has signature {np.sign(lam)}")
    normals = q * np.sqrt(np.abs(lam))
    verts = -np.linalg.solve(g, normals)
    if comb is None:
        scale = np.einsum("ij,ij->i", verts, verts)
        norms = np.einsum("ij,jk,ik->i", verts, MINKOWSKI, verts)
        ideal = tuple(bool(abs(n) <= 1e-9 * s) for n, s in zip(norms, scale))
    else:
        ideal = tuple(comb.is_ideal(v) for v in range(4))
    for i in range(4):
        if ideal[i]:
            verts[i] /= np.linalg.norm(verts[i])
        else:
            n2 = lorentz_dot(verts[i], verts[i])
            if n2 <= 0:
                raise DegenerateLift(f"vertex {i} is not ultra-ideal (norm {n2!r})")
            verts[i] /= math.sqrt(n2)
    # time orientation: the most time-like pairwise sum must be future
    best, best_norm = None, math.inf
    for i, j in combinations(range(4), 2):
        s = verts[i] + verts[j]
        n2 = lorentz_dot(s, s)
        if n2 < best_norm:
            best, best_norm = s, n2
    if best_norm >= 0:
        raise DegenerateLift("no edge of the tetrahedron meets hyperbolic space")
    if best[0] < 0:
        normals[:, 0] *= -1
        verts[:, 0] *= -1
    return Realization(normals, verts, ideal)


def horosphere_point_on_edge(u, x) -> np.ndarray:
    """Point where the horosphere dual to u meets the line from its centre to x."""
    beta = -1.0 / lorentz_dot(x, u)
    alpha = 0.5 * (1.0 + beta * beta * lorentz_dot(x, x))
    return alpha * np.asarray(u, float) + beta * np.asarray(x, float)


def cusp_circumradius(vertices: np.ndarray, i: int, u) -> float:
    """Circumradius, in the intrinsic metric of the horosphere dual to u, of
    the triangle cut by that horosphere on the tetrahedron at vertex i."""
    pts = [horosphere_point_on_edge(u, vertices[j]) for j in range(4) if j != i]
    sides = []
    for p, q in combinations(pts, 2):
        diff = p - q
        sides.append(math.sqrt(max(lorentz_dot(diff, diff), 0.0)))
    a, b, c = sides
    s = 0.5 * (a + b + c)
    area = math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
    if area == 0.0:
        raise DegenerateLift("degenerate cusp triangle")
    return a * b * c / (4.0 * area)


def ideal_lift(vertices: np.ndarray, i: int, r: float) -> np.ndarray:
    """Light-like lift of ideal vertex i for horosphere parameter r."""
    n = np.asarray(vertices[i], float)
    return n * (cusp_circumradius(vertices, i, n) / r)


@dataclass(frozen=True)
class GramReconstruction:
    gram: np.ndarray
    realization: Realization
    vertex_norms: tuple
    internal_cosh: dict
    boundary_cosh: dict
    deltas: dict = field(default_factory=dict)

    @property
    def max_delta(self) -> float:
        return max(self.deltas.values(), default=0.0)


def gram_oracle(angles, comb: TetCombinatorics | None = None) -> GramReconstruction:
    """Recompute lengths from an explicit Minkowski lift and compare them
    with the closed forms."""
    g = gram_matrix(angles)
    real = realize(angles, comb)
    ginv = np.linalg.inv(g)
    norms = tuple(float(ginv[i, i]) for i in range(4))
    v = real.vertices
    internal = {}
    boundary = {}
    for s, (a, b) in enumerate(EDGES):
        if not real.ideal[a] and not real.ideal[b]:
            internal[s] = -lorentz_dot(v[a], v[b])
    for a in range(4):
        if real.ideal[a]:
            continue
        feet = {}
        for b in other_vertices(a):
            p = v[b] - lorentz_dot(v[b], v[a]) * v[a]
            n2 = lorentz_dot(p, p)
            if n2 < -1e-14:
                feet[b] = p / math.sqrt(-n2)
        for b, c in combinations(other_vertices(a), 2):
            if b in feet and c in feet:
                i, j = sorted((EDGE_SLOT[frozenset((a, b))], EDGE_SLOT[frozenset((a, c))]))
                boundary[(a, i, j)] = -lorentz_dot(feet[b], feet[c])
    comb = comb or TetCombinatorics(frozenset(i for i in range(4) if real.ideal[i]),
                                    frozenset(e for e in range(6) if _theta(angles)[e] == 0.0))
    deltas = {}
    for s, ch in internal.items():
        closed = internal_edge_length(angles, s, comb)
        deltas[("internal", s)] = abs(closed.cosh - ch)
    for key, ch in boundary.items():
        a, i, j = key
        closed = boundary_edge_length(angles, i, j, comb)
        if closed.kind is LengthKind.FINITE:
            deltas[("boundary",) + key] = abs(closed.cosh - ch)
    return GramReconstruction(g, real, norms, internal, boundary, deltas)


def tilt_oracle(angles, radii: HoroRadii | None = None,
                comb: TetCombinatorics | None = None) -> np.ndarray:
    """Tilts from the definition: <m_i, p> with <p, x> = -1 on the lift."""
    real = realize(angles, comb)
    lifts = np.array(real.vertices)
    for i in range(4):
        if real.ideal[i]:
            if radii is None or i not in radii:
                raise MissingRadius(f"ideal vertex {i} needs a horosphere radius")
            lifts[i] = ideal_lift(real.vertices, i, float(radii[i]))
    a = lifts @ MINKOWSKI
    if abs(np.linalg.det(a)) < 1e-14 * np.linalg.norm(a) ** 4:
        raise DegenerateLift("vertex lifts are affinely dependent")
    p = np.linalg.solve(a, -np.ones(4))
    return np.array([lorentz_dot(real.normals[i], p) for i in range(4)])


def normals_from_vertices(vertices: np.ndarray) -> np.ndarray:
    """Unit face normals of the positive cone spanned by four vertex vectors."""
    vertices = np.asarray(vertices, float)
    out = np.empty((4, 4))
    for i in range(4):
        rest = vertices[[j for j in range(4) if j != i]]
        # Euclidean normal to the three vectors, then raise the index
        cof = np.array([(-1) ** k * np.linalg.det(np.delete(rest, k, axis=1)) for k in range(4)])
        w = MINKOWSKI @ cof
        if lorentz_dot(w, vertices[i]) > 0:
            w = -w
        n2 = lorentz_dot(w, w)
        if n2 <= 0:
            raise DegenerateLift(f"face {i} is not a hyperbolic plane")
        out[i] = w / math.sqrt(n2)
    return out


def angles_from_vertices(vertices: np.ndarray, comb: TetCombinatorics | None = None) -> TetAngles:
    """Dihedral angles of the tetrahedron whose vertex lifts are given."""
    normals = normals_from_vertices(vertices)
    theta = []
    for s, (k, l) in enumerate(EDGES):
        i, j = other_vertices(k, l)
        if comb is not None and comb.is_zero(s):
            theta.append(0.0)
            continue
        c = -lorentz_dot(normals[i], normals[j])
        theta.append(math.acos(min(1.0, max(-1.0, c))))
    return TetAngles(tuple(theta))
