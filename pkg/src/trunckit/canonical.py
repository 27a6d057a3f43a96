"""Horospherical cross-sections, face tilts and the flip algorithm that
turns a geometric triangulation into the canonical decomposition.

Geometry is carried in Minkowski space.  Each tetrahedron has its own
frame from ``tetshape.realize``; a Lorentz map glues the frame of a
neighbour to it across a face, and cusp developments compose these maps
into one frame in which the cusp sits at infinity of the half-space model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .lorentz import EPS_GEOM, EPS_TILT, lorentz_dot
from .tetshape import (
    EDGE_SLOT,
    EDGES,
    TetShape,
    angles_from_vertices,
    cusp_circumradius,
    ideal_lift,
    other_vertices,
    positive_others,
    realize,
    tilts,
    validate_angles,
)
from .triangulation import (
    MovePlan,
    SelfAdjacentFace,
    Triangulation,
    apply_plan,
    three_two_plan,
    two_three_plan,
)

INFINITY_DIRECTION = np.array([1.0, 0.0, 0.0, 1.0])


class NotApplicable(ValueError):
    pass


class DevelopmentOverflow(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# frames


def realizations(tri: Triangulation, theta) -> tuple:
    theta = np.asarray(theta, dtype=float)
    return tuple(realize(theta[t], comb) for t, comb in enumerate(tri.tetrahedra))


def glue_map(tri: Triangulation, reals, t: int, f: int) -> np.ndarray:
    """Lorentz map taking the frame of the neighbour across face f of t
    into the frame of t, so that the two copies share that face."""
    g = tri.gluings[t][f]
    u, p = g.tet, g.perm
    rt, ru = reals[t], reals[u]
    face = other_vertices(f)
    src = [ru.vertices[p[x]] for x in face]
    dst = [rt.vertices[x] for x in face]
    ideal = [rt.ideal[x] for x in face]
    ratio = {}
    for i in range(3):
        for j in range(3):
            if i != j:
                ratio[(i, j)] = lorentz_dot(src[i], src[j]) / lorentz_dot(dst[i], dst[j])
    mu = [1.0] * 3
    for i in range(3):
        if not ideal[i]:
            continue
        finite = [j for j in range(3) if j != i and not ideal[j]]
        if finite:
            mu[i] = ratio[(i, finite[0])]
        else:
            j, k = (x for x in range(3) if x != i)
            mu[i] = math.sqrt(ratio[(i, j)] * ratio[(i, k)] / ratio[(j, k)])
    target = np.column_stack([mu[i] * dst[i] for i in range(3)] + [-rt.normals[f]])
    source = np.column_stack(src + [ru.normals[p[f]]])
    return target @ np.linalg.inv(source)


def _to_infinity(n: np.ndarray) -> np.ndarray:
    """A Lorentz rotation taking the future null vector n to a multiple of (1, 0, 0, 1)."""
    v = np.asarray(n[1:], float) / np.linalg.norm(n[1:])
    target = np.array([0.0, 0.0, 1.0])
    axis = np.cross(v, target)
    s = np.linalg.norm(axis)
    c = float(v @ target)
    if s < 1e-15:
        rot = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    else:
        k = axis / s
        kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        rot = np.eye(3) + s * kx + (1 - c) * kx @ kx
    out = np.eye(4)
    out[1:, 1:] = rot
    return out


def plane_hemisphere(w) -> tuple:
    """(centre, radius, infinity side sign) of the plane dual to w in the
    half-space model; radius is inf for vertical planes."""
    w = np.asarray(w, float)
    k = w[3] - w[0]
    scale = np.linalg.norm(w)
    if abs(k) <= 1e-12 * scale:
        return None, math.inf, 0
    return complex(-w[1] / k, -w[2] / k), 1.0 / abs(k), (1 if k > 0 else -1)


def boundary_point(n) -> complex | None:
    n = np.asarray(n, float)
    k = n[0] - n[3]
    if abs(k) <= 1e-12 * np.linalg.norm(n):
        return None
    return complex(n[1] / k, n[2] / k)


# ----------------------------------------------------------------------------
# cusp development


@dataclass
class Copy:
    tet: int
    frame: np.ndarray
    top: int | None  # vertex at infinity, if any
    generation: int


@dataclass
class CuspDevelopment:
    cusp: int
    copies: list
    top_copies: dict  # (tet, vertex) -> index into copies
    rho: float
    r_top: float
    omega: tuple  # triangles (three complex points each)
    d: float
    r1_prime: float
    r2_prime: float
    r1: float
    r2: float
    truncation_radii: tuple

    def centres(self, reals, key) -> tuple:
        """Feet of the three vertical edges of a top copy."""
        c = self.copies[self.top_copies[key]]
        t, v = key
        return tuple(_foot(c.frame @ reals[t].vertices[x], reals[t].ideal[x])
                     for x in positive_others(v))


def _foot(vec, ideal: bool) -> complex:
    if ideal:
        return boundary_point(vec)
    centre, _, _ = plane_hemisphere(vec)
    return centre


def _copy_key(reals, tet: int, frame: np.ndarray) -> tuple:
    out = [tet]
    for x, vec in enumerate(reals[tet].vertices):
        image = frame @ vec
        if reals[tet].ideal[x]:
            image = image / np.linalg.norm(image)
        out.extend(np.round(image, 6) + 0.0)
    return tuple(out)


def _distinct(values, tol=1e-9) -> list:
    out = []
    for v in sorted(values, reverse=True):
        if not out or out[-1] - v > tol * max(1.0, abs(out[-1])):
            out.append(v)
    return out


def _point_triangle_distance(p: complex, tri) -> float:
    a, b, c = tri
    # inside test by orientation signs
    def cross(u, v):
        return (u.conjugate() * v).imag
    s1, s2, s3 = cross(b - a, p - a), cross(c - b, p - b), cross(a - c, p - c)
    if (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0):
        return 0.0
    best = math.inf
    for x, y in ((a, b), (b, c), (c, a)):
        seg = y - x
        t = max(0.0, min(1.0, ((p - x) * seg.conjugate()).real / max(abs(seg) ** 2, 1e-300)))
        best = min(best, abs(p - (x + t * seg)))
    return best


def develop_cusp(tri: Triangulation, theta, cusp: int, reals=None, cap: int = 100_000,
                 start: tuple | None = None) -> CuspDevelopment:
    vc = tri.vertex_classes[cusp]
    if not vc.ideal:
        raise ValueError(f"vertex class {cusp} is not a cusp")
    if all(vcl.ideal for vcl in tri.vertex_classes):
        raise NotApplicable("no boundary: cusp heights are not defined")
    reals = reals or realizations(tri, theta)
    members = set(vc.members)
    t0, v0 = start or vc.members[0]
    copies: list = []
    top: dict = {}
    seen: set = set()

    def add(tet, frame, topv, gen):
        key = _copy_key(reals, tet, frame)
        if key in seen:
            return None
        seen.add(key)
        copies.append(Copy(tet, frame, topv, gen))
        if len(copies) > cap:
            raise DevelopmentOverflow(f"more than {cap} copies in the development of cusp {cusp}")
        return len(copies) - 1

    # step A: one copy of each (tetrahedron, vertex) at this cusp, glued across vertical faces
    frame0 = _to_infinity(reals[t0].vertices[v0])
    queue = [(t0, v0, frame0)]
    top[(t0, v0)] = add(t0, frame0, v0, 0)
    i = 0
    while i < len(queue):
        t, v, frame = queue[i]
        i += 1
        for f in range(4):
            if f == v:
                continue
            g = tri.gluings[t][f]
            key = (g.tet, g.perm[v])
            if key in top:
                continue
            new = frame @ glue_map(tri, reals, t, f)
            idx = add(g.tet, new, g.perm[v], 0)
            if idx is None:
                raise DevelopmentOverflow("cusp development revisits a copy in the first step")
            top[key] = idx
            queue.append((g.tet, g.perm[v], new))
    if set(top) != members:
        raise RuntimeError("first development step missed part of the cusp")

    rho = 0.0
    r_top = -math.inf
    omega = []
    truncation = []
    for (t, v), idx in top.items():
        frame = copies[idx].frame
        _, radius, _ = plane_hemisphere(frame @ reals[t].normals[v])
        rho = max(rho, radius)
        feet = []
        for x in other_vertices(v):
            vec = frame @ reals[t].vertices[x]
            feet.append(_foot(vec, reals[t].ideal[x]))
            if not reals[t].ideal[x]:
                r = plane_hemisphere(vec)[1]
                r_top = max(r_top, r)
        omega.append(tuple(feet))
    pts = [p for tri_ in omega for p in tri_]
    d = max(abs(a - b) for a in pts for b in pts)
    for c in copies:
        truncation.extend(_truncation_radii(reals, c))

    # steps B and C: glue below the non-vertical faces
    frontier = list(range(len(copies)))

    def expand(indices, region=None):
        out = []
        for idx in indices:
            c = copies[idx]
            for f in range(4):
                w = c.frame @ reals[c.tet].normals[f]
                centre, radius, side = plane_hemisphere(w)
                if side >= 0:  # vertical, or the far side is unbounded
                    continue
                if region is not None:
                    floor, tris = region
                    if radius < floor:
                        continue
                    if min(_point_triangle_distance(centre, tr) for tr in tris) > radius:
                        continue
                new = c.frame @ glue_map(tri, reals, c.tet, f)
                j = add(tri.gluings[c.tet][f].tet, new, None, c.generation + 1)
                if j is not None:
                    out.append(j)
                    truncation.extend(_truncation_radii(reals, copies[j]))
        return out

    while len(_distinct(truncation)) < 2:
        frontier = expand(frontier)
        if not frontier:
            raise RuntimeError("development stopped before two truncation radii appeared")
    r1p, r2p = _distinct(truncation)[:2]
    region = (r2p, omega)
    frontier = expand(frontier, region)
    while frontier:
        frontier = expand(frontier, region)
    r1, r2 = _distinct(truncation)[:2]
    return CuspDevelopment(cusp, copies, top, rho, r_top, tuple(omega), d, r1p, r2p, r1, r2,
                           tuple(truncation))


def _truncation_radii(reals, c: Copy) -> list:
    out = []
    for x in range(4):
        if not reals[c.tet].ideal[x]:
            out.append(plane_hemisphere(c.frame @ reals[c.tet].vertices[x])[1])
    return out


# ----------------------------------------------------------------------------
# cross-sections


def height_constant(r1: float, r2: float, d: float) -> float:
    if not r1 > r2:
        raise ValueError("the two radii must satisfy r1 > r2")
    return math.sqrt(3.0) * (r1 * r1 + d * d / 4.0) / (r1 - r2)


@dataclass
class CrossSection:
    heights: dict  # cusp -> height in its development frame
    radii: dict  # (tet, ideal vertex) -> horosphere radius
    developments: dict = field(default_factory=dict)
    scale: float = 1.0

    def tet_radii(self, t: int) -> dict:
        return {v: r for (s, v), r in self.radii.items() if s == t}

    def scaled(self, factor: float) -> "CrossSection":
        """Same cross-section with every height multiplied by ``factor``."""
        return CrossSection({c: h * factor for c, h in self.heights.items()},
                            {k: r / factor for k, r in self.radii.items()},
                            self.developments, self.scale * factor)


def _circumradius(a: complex, b: complex, c: complex) -> float:
    x, y, z = abs(b - c), abs(c - a), abs(a - b)
    s = 0.5 * (x + y + z)
    area = math.sqrt(max(s * (s - x) * (s - y) * (s - z), 0.0))
    return x * y * z / (4.0 * area)


def cross_section(tri: Triangulation, theta, reals=None, heights: dict | None = None) -> CrossSection:
    """Safe heights for every cusp and the induced horosphere radii.  Given
    ``heights`` (per cusp, in the development frame) are used as they are."""
    reals = reals or realizations(tri, theta)
    cusps = [vc.index for vc in tri.vertex_classes if vc.ideal]
    if not cusps:
        return CrossSection({}, {})
    devs = {c: develop_cusp(tri, theta, c, reals) for c in cusps}
    ks = {c: height_constant(dv.r1, dv.r2, dv.d) for c, dv in devs.items()}
    lam = max(ks[c] / devs[c].r1 for c in cusps)
    if heights is None:
        heights = {c: lam * ks[c] for c in cusps}
    else:
        heights = {c: float(heights[c]) for c in cusps}
    radii = {}
    for c, dv in devs.items():
        for key in dv.top_copies:
            radii[key] = _circumradius(*dv.centres(reals, key)) / heights[c]
    return CrossSection(heights, radii, devs)


def uniform_cross_section(tri: Triangulation, theta, radius: float = 1.0) -> CrossSection:
    """Consistent radii for each cusp, scaled so that the first triangle of
    each cusp link has the given radius.  Used when there is no boundary."""
    theta = np.asarray(theta, dtype=float)
    radii = {}
    for vc, link in zip(tri.vertex_classes, tri.links):
        if not vc.ideal:
            continue
        r = {0: radius}
        queue = [0]
        for k in queue:
            t, v = link.triangles[k]
            for i in range(3):
                # side from corner i to i+1 is opposite corner i+2
                opp = link.corners[k][(i + 2) % 3]
                side = 2 * r[k] * math.sin(theta[t, EDGE_SLOT[frozenset((v, opp))]])
                k2, j = link.twin[(k, i)]
                if k2 in r:
                    continue
                t2, v2 = link.triangles[k2]
                opp2 = link.corners[k2][(j + 2) % 3]
                r[k2] = side / (2 * math.sin(theta[t2, EDGE_SLOT[frozenset((v2, opp2))]]))
                queue.append(k2)
        for k, value in r.items():
            radii[link.triangles[k]] = value
    return CrossSection({}, radii)


# ----------------------------------------------------------------------------
# verification of the cross-section


@dataclass(frozen=True)
class CrossSectionReport:
    pairs_checked: int
    violations: tuple  # (cusp, index_a, index_b, lhs, rhs)
    second_condition: str = "guaranteed by construction of the heights"

    @property
    def ok(self) -> bool:
        return not self.violations


def horosphere_lifts(tri: Triangulation, theta, cs: CrossSection, cusp: int, reals=None) -> tuple:
    """Light-like lifts of the cross-section horospheres realized in the
    development of one cusp, plus the truncation planes met there."""
    reals = reals or realizations(tri, theta)
    dv = cs.developments[cusp]
    lifts = []
    seen = set()
    planes = []
    pseen = set()
    for c in dv.copies:
        rt = reals[c.tet]
        for x in range(4):
            vec = c.frame @ rt.vertices[x]
            if rt.ideal[x]:
                r = cs.radii[(c.tet, x)]
                u = c.frame @ ideal_lift(rt.vertices, x, r)
                key = tuple(np.round(u / np.linalg.norm(u), 7))
                if key not in seen:
                    seen.add(key)
                    lifts.append(u)
            else:
                key = tuple(np.round(vec, 7))
                if key not in pseen:
                    pseen.add(key)
                    planes.append(vec)
    return tuple(lifts), tuple(planes)


def verify_cross_section(tri: Triangulation, theta, cs: CrossSection, reals=None) -> CrossSectionReport:
    """Check, on every pair of realized horosphere lifts, that the sum of
    the exponentiated distances to the boundary is below twice the
    exponentiated distance between them."""
    if not cs.developments:
        return CrossSectionReport(0, ())
    reals = reals or realizations(tri, theta)
    checked = 0
    violations = []
    for cusp in sorted(cs.developments):
        lifts, planes = horosphere_lifts(tri, theta, cs, cusp, reals)
        to_boundary = [min(-lorentz_dot(u, w) for w in planes) for u in lifts]
        for i in range(len(lifts)):
            for j in range(i + 1, len(lifts)):
                lhs = to_boundary[i] + to_boundary[j]
                rhs = -lorentz_dot(lifts[i], lifts[j])  # twice exp of the distance
                checked += 1
                if not lhs < rhs:
                    violations.append((cusp, i, j, lhs, rhs))
    return CrossSectionReport(checked, tuple(violations))


# ----------------------------------------------------------------------------
# tilts


class FaceKind(Enum):
    CONVEX = "Convex"
    FLAT = "Flat"
    CONCAVE = "Concave"


@dataclass(frozen=True)
class FaceTilt:
    face: tuple  # ((t, f), (u, h))
    t: float
    t_prime: float
    total: float
    normalized: float
    kind: FaceKind


def tet_tilts(tri: Triangulation, theta, radii: dict) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.zeros((tri.size, 4))
    for t, comb in enumerate(tri.tetrahedra):
        shape = TetShape.build(comb, theta[t])
        r = {v: radii[(t, v)] for v in comb.ideal_vertices}
        out[t] = tilts(shape, r)
    return out


def classify(value: float, eps: float = EPS_TILT) -> FaceKind:
    if value > eps:
        return FaceKind.CONCAVE
    if value < -eps:
        return FaceKind.CONVEX
    return FaceKind.FLAT


def tilt_report(tri: Triangulation, theta, radii: dict, eps: float = EPS_TILT) -> tuple:
    tt = tet_tilts(tri, theta, radii)
    scale = float(np.max(np.abs(tt))) or 1.0
    out = []
    for (t, f), (u, h) in tri.faces:
        a, b = float(tt[t, f]), float(tt[u, h])
        total = a + b
        out.append(FaceTilt(((t, f), (u, h)), a, b, total, total / scale, classify(total / scale, eps)))
    return tuple(out)


def face_tilt_sum(tri: Triangulation, theta, radii: dict, face, eps: float = EPS_TILT) -> FaceTilt:
    t, f = face
    for ft in tilt_report(tri, theta, radii, eps):
        if (t, f) in ft.face:
            return ft
    raise KeyError(face)


# ----------------------------------------------------------------------------
# geometric moves


def _lift(reals, radii, t, x, frame) -> np.ndarray:
    rt = reals[t]
    if rt.ideal[x]:
        return frame @ ideal_lift(rt.vertices, x, radii[(t, x)])
    return frame @ rt.vertices[x]


def _plan_vectors(tri: Triangulation, reals, radii, plan: MovePlan) -> dict:
    """Lifted vectors of the move's labels in the frame of its first tetrahedron."""
    frames = {plan.old[0]: np.eye(4)}
    for i, f in plan.path:
        t = plan.old[i]
        frames[plan.old[i + 1]] = frames[t] @ glue_map(tri, reals, t, f)
    vectors = {}
    for t, labels in zip(plan.old, plan.old_labels):
        for x, label in enumerate(labels):
            if label not in vectors:
                vectors[label] = _lift(reals, radii, t, x, frames[t])
    return vectors


def admissible(tri: Triangulation, theta, face, reals=None, radii=None) -> bool:
    """Whether the segment between the two far vertices crosses the
    interior of the shared face."""
    t, f = face
    if tri.gluings[t][f].tet == t:
        raise SelfAdjacentFace(f"face ({t},{f}) joins tetrahedron {t} to itself")
    reals = reals or realizations(tri, theta)
    plan = two_three_plan(tri, t, f)
    vecs = _plan_vectors(tri, reals, radii or _unit_radii(tri), plan)
    return _admissible_vectors([vecs[k] for k in range(5)])


def _unit_radii(tri: Triangulation) -> dict:
    return {(t, v): 1.0 for t, c in enumerate(tri.tetrahedra) for v in c.ideal_vertices}


def _admissible_vectors(vectors) -> bool:
    m = np.column_stack([v / np.linalg.norm(v) for v in vectors])
    _, s, vt = np.linalg.svd(m)
    if s[3] <= EPS_GEOM * s[0]:
        return False
    c = vt[-1] / np.max(np.abs(vt[-1]))
    if c[0] < 0:
        c = -c
    eps = EPS_GEOM
    return c[0] > eps and c[4] > eps and all(c[k] < -eps for k in (1, 2, 3))


@dataclass(frozen=True)
class MoveResult:
    tri: Triangulation
    theta: np.ndarray
    radii: dict
    new_tets: tuple


def _apply_geometric(tri: Triangulation, theta, radii, plan: MovePlan, reals) -> MoveResult | None:
    vecs = _plan_vectors(tri, reals, radii, plan)
    new_theta = []
    new_radii = []
    for labels, comb in zip(plan.new, plan.new_combs):
        verts = np.array([vecs[l] for l in labels])
        ang = angles_from_vertices(verts, comb)
        if not validate_angles(comb, ang).ok:
            return None
        new_theta.append(ang.theta)
        new_radii.append({i: cusp_circumradius(verts, i, verts[i]) for i in comb.ideal_vertices})
    new_tri = apply_plan(tri, plan)
    keep = [t for t in range(tri.size) if t not in set(plan.old)]
    theta = np.asarray(theta, dtype=float)
    out_theta = np.array([theta[t] for t in keep] + new_theta)
    out_radii = {}
    for i, t in enumerate(keep):
        for v in tri.tetrahedra[t].ideal_vertices:
            out_radii[(i, v)] = radii[(t, v)]
    for k, rs in enumerate(new_radii):
        for v, r in rs.items():
            out_radii[(len(keep) + k, v)] = r
    new = tuple(range(len(keep), len(keep) + len(plan.new)))
    return MoveResult(new_tri, out_theta, out_radii, new)


def geometric_two_three(tri: Triangulation, theta, radii, face, reals=None) -> MoveResult | None:
    reals = reals or realizations(tri, theta)
    return _apply_geometric(tri, theta, radii, two_three_plan(tri, *face), reals)


def geometric_three_two(tri: Triangulation, theta, radii, edge: int, reals=None) -> MoveResult | None:
    reals = reals or realizations(tri, theta)
    return _apply_geometric(tri, theta, radii, three_two_plan(tri, edge), reals)


# ----------------------------------------------------------------------------
# the flip algorithm


class CanonStatus(Enum):
    CANONICAL = "Canonical"
    SUBDIVISION = "Subdivision"
    STUCK = "Stuck"


@dataclass(frozen=True)
class CanonConfig:
    eps_tilt: float = EPS_TILT
    max_moves: int | None = None
    ideal_radius: float = 1.0


@dataclass(frozen=True)
class MoveRecord:
    kind: str
    target: tuple
    score: float
    new_faces: tuple  # classifications of faces inside the new tetrahedra


@dataclass(frozen=True)
class CanonicalCells:
    status: CanonStatus
    tri: Triangulation
    theta: np.ndarray
    radii: dict
    report: tuple
    transparent: tuple
    cells: tuple
    cell_adjacency: tuple
    moves: tuple
    self_adjacency_violations: int
    cap_hit: bool = False
    cross_section: CrossSection | None = None

    @property
    def move_count(self) -> int:
        return len(self.moves)


def initial_radii(tri: Triangulation, theta, ideal_radius: float = 1.0, reals=None):
    if not tri.has_toric_ends:
        return {}, CrossSection({}, {})
    if all(vc.ideal for vc in tri.vertex_classes):
        cs = uniform_cross_section(tri, theta, ideal_radius)
    else:
        cs = cross_section(tri, theta, reals)
    return dict(cs.radii), cs


def _cells(tri: Triangulation, report) -> tuple:
    parent = list(range(tri.size))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ft in report:
        if ft.kind is FaceKind.FLAT:
            (t, _), (u, _) = ft.face
            a, b = find(t), find(u)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict = {}
    for t in range(tri.size):
        groups.setdefault(find(t), []).append(t)
    cells = tuple(tuple(g) for _, g in sorted(groups.items()))
    index = {t: i for i, c in enumerate(cells) for t in c}
    adj = set()
    for ft in report:
        if ft.kind is not FaceKind.FLAT:
            (t, _), (u, _) = ft.face
            adj.add(tuple(sorted((index[t], index[u]))))
    return cells, tuple(sorted(adj))


def canonize(tri: Triangulation, theta, config: CanonConfig | None = None,
             radii: dict | None = None) -> CanonicalCells:
    config = config or CanonConfig()
    theta = np.asarray(theta, dtype=float)
    cs = None
    if radii is None:
        radii, cs = initial_radii(tri, theta, config.ideal_radius)
    cap = config.max_moves if config.max_moves is not None else 10 * tri.size ** 3
    moves = []
    violations = 0
    while True:
        report = tilt_report(tri, theta, radii, config.eps_tilt)
        for ft in report:
            (t, _), (u, _) = ft.face
            if t == u and ft.kind is not FaceKind.CONVEX:
                violations += 1
        concave = sorted((ft for ft in report if ft.kind is FaceKind.CONCAVE),
                         key=lambda ft: (-ft.normalized, ft.face))
        if not concave:
            flat = tuple(ft.face for ft in report if ft.kind is FaceKind.FLAT)
            status = CanonStatus.SUBDIVISION if flat else CanonStatus.CANONICAL
            return _finish(status, tri, theta, radii, report, moves, violations, False, cs)
        if len(moves) >= cap:
            return _finish(CanonStatus.STUCK, tri, theta, radii, report, moves, violations, True, cs)
        reals = realizations(tri, theta)
        result = None
        for ft in concave:
            (t, f), (u, _) = ft.face
            if t == u:
                continue
            result = _try_face(tri, theta, radii, ft, reals, config)
            if result is not None:
                break
        if result is None:
            return _finish(CanonStatus.STUCK, tri, theta, radii, report, moves, violations, False, cs)
        res, kind, target, score = result
        new_report = tilt_report(res.tri, res.theta, res.radii, config.eps_tilt)
        new_set = set(res.new_tets)
        created = tuple(ft.kind.value for ft in new_report
                        if ft.face[0][0] in new_set and ft.face[1][0] in new_set)
        moves.append(MoveRecord(kind, target, score, created))
        tri, theta, radii = res.tri, res.theta, res.radii


def _try_face(tri, theta, radii, ft: FaceTilt, reals, config):
    (t, f), _ = ft.face
    if admissible(tri, theta, (t, f), reals, radii):
        res = geometric_two_three(tri, theta, radii, (t, f), reals)
        if res is not None:
            return res, "2-3", (t, f), ft.normalized
    for x, y in EDGES:
        if f in (x, y):
            continue
        e = tri.edge_class_of(t, EDGE_SLOT[frozenset((x, y))])
        ec = tri.edge_classes[e]
        if ec.zero or ec.valence != 3 or len(set(ec.tetrahedra)) != 3:
            continue
        res = geometric_three_two(tri, theta, radii, e, reals)
        if res is not None:
            return res, "3-2", (e,), ft.normalized
    return None


def _finish(status, tri, theta, radii, report, moves, violations, cap_hit, cs) -> CanonicalCells:
    cells, adj = _cells(tri, report)
    transparent = tuple(ft.face for ft in report if ft.kind is FaceKind.FLAT)
    return CanonicalCells(status, tri, np.asarray(theta), dict(radii), report, transparent, cells, adj,
                          tuple(moves), violations, cap_hit, cs)
