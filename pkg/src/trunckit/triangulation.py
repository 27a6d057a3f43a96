"""Combinatorial triangulations: gluings, edge and vertex classes, cusp and
boundary links, the arc view, and the 2-3 / 3-2 moves.

A gluing of face ``f`` of tetrahedron ``t`` is stored as ``Gluing(u, p)``:
``p`` is a permutation of (0, 1, 2, 3) sending the vertices of ``t`` to
the vertices of ``u``; face ``f`` is glued to face ``p[f]`` of ``u``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Sequence

from .tetshape import (
    EDGE_SLOT,
    EDGES,
    TetCombinatorics,
    other_vertices,
    permutation_sign,
    positive_others,
)

Perm = tuple
IDENTITY: Perm = (0, 1, 2, 3)
ALL_PERMS: tuple = tuple(permutations(range(4)))
PERM_INDEX = {p: i for i, p in enumerate(ALL_PERMS)}


class TriangulationError(ValueError):
    pass


class InconsistentGluing(TriangulationError):
    pass


class SelfAdjacentFace(TriangulationError):
    pass


class WrongValence(TriangulationError):
    pass


class ZeroLengthEdge(TriangulationError):
    pass


class RepeatedTetrahedra(TriangulationError):
    pass


def compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return tuple(p[q[i]] for i in range(4))


def inverse(p: Perm) -> Perm:
    out = [0] * 4
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


@dataclass(frozen=True)
class Gluing:
    tet: int
    perm: Perm

    def __post_init__(self):
        p = tuple(int(x) for x in self.perm)
        if sorted(p) != [0, 1, 2, 3]:
            raise InconsistentGluing(f"{p} is not a permutation of 0..3")
        object.__setattr__(self, "perm", p)
        object.__setattr__(self, "tet", int(self.tet))


@dataclass(frozen=True)
class EdgeClass:
    index: int
    members: tuple  # (tet, slot, a, b) in cyclic order around the edge
    zero: bool
    ends: tuple  # vertex classes at the a-end and b-end of members[0]

    @property
    def valence(self) -> int:
        return len(self.members)

    @property
    def tetrahedra(self) -> tuple:
        return tuple(m[0] for m in self.members)


@dataclass(frozen=True)
class VertexClass:
    index: int
    members: tuple  # (tet, vertex)
    ideal: bool


@dataclass(frozen=True)
class Link:
    """Triangulated surface formed by the corners at one vertex class.

    Triangle ``k`` is ``triangles[k] = (tet, v)`` with corners
    ``corners[k]`` (the other three vertices, positively arranged).  The
    half-edge ``(k, i)`` runs from corner ``i`` to corner ``i + 1``.
    """

    vertex_class: int
    triangles: tuple
    corners: tuple
    twin: dict
    corner_vertex: dict  # (k, i) -> link vertex index
    vertices: tuple  # per link vertex, the corners around it in rotation order
    vertex_edge: tuple  # per link vertex: (edge class index, is zero)

    def rotate(self, k: int, i: int) -> tuple:
        """Next corner counter-clockwise around the same link vertex."""
        return self.twin[(k, (i + 2) % 3)]

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.triangles) // 2

    @property
    def boundary_euler_characteristic(self) -> int:
        genuine = sum(1 for _, zero in self.vertex_edge if not zero)
        return genuine - len(self.triangles) // 2


@dataclass(frozen=True)
class Triangulation:
    tetrahedra: tuple
    gluings: tuple
    orientation: tuple
    name: str = ""

    @classmethod
    def build(cls, tetrahedra: Sequence[TetCombinatorics], gluings, orientation=None,
              name: str = "") -> "Triangulation":
        tets = tuple(tetrahedra)
        glue = tuple(tuple(g if isinstance(g, Gluing) else Gluing(*g) for g in row)
                     for row in gluings)
        if len(glue) != len(tets) or any(len(row) != 4 for row in glue):
            raise InconsistentGluing("each tetrahedron needs exactly four face gluings")
        if orientation is None:
            orientation = _orient(glue)
        tri = cls(tets, glue, tuple(int(o) for o in orientation), name)
        tri.validate()
        return tri

    @property
    def size(self) -> int:
        return len(self.tetrahedra)

    def partner(self, t: int, f: int) -> tuple:
        g = self.gluings[t][f]
        return g.tet, g.perm[f]

    def validate(self) -> None:
        n = self.size
        if len(self.orientation) != n or any(o not in (1, -1) for o in self.orientation):
            raise InconsistentGluing("orientation must be a sign per tetrahedron")
        for t in range(n):
            for f in range(4):
                g = self.gluings[t][f]
                if not 0 <= g.tet < n:
                    raise InconsistentGluing(f"face ({t},{f}) glued to missing tetrahedron {g.tet}")
                u, h = g.tet, g.perm[f]
                if u == t and h == f:
                    raise InconsistentGluing(f"face ({t},{f}) is glued to itself")
                back = self.gluings[u][h]
                if back.tet != t or back.perm != inverse(g.perm):
                    raise InconsistentGluing(f"gluing of face ({t},{f}) is not an involution")
                if self.orientation[t] * self.orientation[u] * permutation_sign(g.perm) != -1:
                    raise InconsistentGluing(f"gluing of face ({t},{f}) preserves orientation")
                a, b = self.tetrahedra[t], self.tetrahedra[u]
                for v in other_vertices(f):
                    if a.is_ideal(v) != b.is_ideal(g.perm[v]):
                        raise InconsistentGluing(
                            f"ideal flag mismatch across face ({t},{f}) at vertex {v}")
                for x, y in EDGES:
                    if f in (x, y):
                        continue
                    if a.is_zero((x, y)) != b.is_zero((g.perm[x], g.perm[y])):
                        raise InconsistentGluing(
                            f"zero-length flag mismatch across face ({t},{f}) on edge {(x, y)}")
        self.edge_classes  # walks every edge orbit

    # ------------------------------------------------------------------
    # faces

    @cached_property
    def faces(self) -> tuple:
        """Glued face pairs ((t, f), (u, h)) with the first one smaller."""
        out = []
        for t in range(self.size):
            for f in range(4):
                u, h = self.partner(t, f)
                if (t, f) < (u, h):
                    out.append(((t, f), (u, h)))
        return tuple(out)

    def face_index(self, t: int, f: int) -> int:
        for i, (x, y) in enumerate(self.faces):
            if (t, f) in (x, y):
                return i
        raise KeyError((t, f))

    # ------------------------------------------------------------------
    # classes

    @cached_property
    def _vertex_class_of(self) -> dict:
        parent = {(t, v): (t, v) for t in range(self.size) for v in range(4)}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for t in range(self.size):
            for f in range(4):
                g = self.gluings[t][f]
                for v in other_vertices(f):
                    ra, rb = find((t, v)), find((g.tet, g.perm[v]))
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
        roots = sorted({find(x) for x in parent})
        index = {r: i for i, r in enumerate(roots)}
        return {x: index[find(x)] for x in parent}

    @cached_property
    def vertex_classes(self) -> tuple:
        groups: dict = {}
        for (t, v), c in sorted(self._vertex_class_of.items()):
            groups.setdefault(c, []).append((t, v))
        out = []
        for c in sorted(groups):
            members = tuple(groups[c])
            flags = {self.tetrahedra[t].is_ideal(v) for t, v in members}
            if len(flags) != 1:
                raise InconsistentGluing(f"vertex class {c} mixes ideal and truncated vertices")
            out.append(VertexClass(c, members, flags.pop()))
        return tuple(out)

    def vertex_class_of(self, t: int, v: int) -> int:
        return self._vertex_class_of[(t, v)]

    @cached_property
    def edge_classes(self) -> tuple:
        seen: dict = {}
        out = []
        for t in range(self.size):
            for s, (a, b) in enumerate(EDGES):
                if (t, s) in seen:
                    continue
                members = self._walk_edge(t, a, b)
                idx = len(out)
                for m in members:
                    if (m[0], m[1]) in seen:
                        raise InconsistentGluing(f"edge orbit revisits slot {m[:2]}")
                    seen[(m[0], m[1])] = idx
                zero = {self.tetrahedra[m[0]].is_zero(m[1]) for m in members}
                if len(zero) != 1:
                    raise InconsistentGluing("edge class mixes zero and non-zero edges")
                ends = (self.vertex_class_of(t, a), self.vertex_class_of(t, b))
                out.append(EdgeClass(idx, members, zero.pop(), ends))
        object.__setattr__(self, "_edge_slot_class", seen)
        return tuple(out)

    def edge_class_of(self, t: int, slot: int) -> int:
        self.edge_classes
        return self._edge_slot_class[(t, slot)]

    def _walk_edge(self, t: int, a: int, b: int) -> tuple:
        c, d = other_vertices(a, b)
        start = (t, a, b, c, d)
        state = start
        members = []
        for _ in range(6 * self.size + 1):
            u, x, y, enter, leave = state
            members.append((u, EDGE_SLOT[frozenset((x, y))], x, y))
            g = self.gluings[u][leave]
            p = g.perm
            state = (g.tet, p[x], p[y], p[leave], p[enter])
            if state == start:
                return tuple(members)
            if state[0] == t and frozenset(state[1:3]) == frozenset((a, b)):
                raise InconsistentGluing(f"edge {(a, b)} of tetrahedron {t} is glued to itself reversed")
        raise InconsistentGluing("edge orbit does not close")

    # ------------------------------------------------------------------
    # links

    @cached_property
    def links(self) -> tuple:
        return tuple(self._build_link(vc) for vc in self.vertex_classes)

    def _build_link(self, vc: VertexClass) -> Link:
        tris = vc.members
        index = {m: k for k, m in enumerate(tris)}
        corners = tuple(positive_others(v, self.orientation[t]) for t, v in tris)
        twin = {}
        for k, (t, v) in enumerate(tris):
            for i in range(3):
                b, c, d = corners[k][i], corners[k][(i + 1) % 3], corners[k][(i + 2) % 3]
                g = self.gluings[t][d]
                p = g.perm
                k2 = index[(g.tet, p[v])]
                cs = corners[k2]
                j = cs.index(p[c])
                if cs[(j + 1) % 3] != p[b]:
                    raise InconsistentGluing("link half-edges do not pair up with opposite orientation")
                twin[(k, i)] = (k2, j)
        corner_vertex = {}
        vertices = []
        vertex_edge = []
        for k in range(len(tris)):
            for i in range(3):
                if (k, i) in corner_vertex:
                    continue
                orbit = []
                cur = (k, i)
                while cur not in corner_vertex:
                    corner_vertex[cur] = len(vertices)
                    orbit.append(cur)
                    cur = twin[(cur[0], (cur[1] + 2) % 3)]
                t, v = tris[k]
                slot = EDGE_SLOT[frozenset((v, corners[k][i]))]
                vertex_edge.append((self.edge_class_of(t, slot), self.tetrahedra[t].is_zero(slot)))
                vertices.append(tuple(orbit))
        return Link(vc.index, tris, corners, twin, corner_vertex, tuple(vertices), tuple(vertex_edge))

    @property
    def cusps(self) -> tuple:
        return tuple(vc for vc in self.vertex_classes if vc.ideal)

    @property
    def has_toric_ends(self) -> bool:
        return any(vc.ideal for vc in self.vertex_classes)

    @property
    def has_annular_ends(self) -> bool:
        return any(ec.zero for ec in self.edge_classes)

    def relabel(self, order: Sequence[int], maps: Sequence[Perm], name: str | None = None) -> "Triangulation":
        """Renumber tetrahedra (new i is old order[i]) and their vertices
        (vertex x of old tetrahedron order[i] becomes maps[i][x])."""
        new_of = {old: i for i, old in enumerate(order)}
        tets, glue, orient = [], [], []
        for i, old in enumerate(order):
            phi = maps[i]
            inv = inverse(phi)
            comb = self.tetrahedra[old]
            tets.append(TetCombinatorics(
                frozenset(phi[v] for v in comb.ideal_vertices),
                frozenset(EDGE_SLOT[frozenset((phi[a], phi[b]))] for a, b in (EDGES[e] for e in comb.zero_edges))))
            row = []
            for fn in range(4):
                g = self.gluings[old][inv[fn]]
                j = new_of[g.tet]
                row.append(Gluing(j, compose(maps[j], compose(g.perm, inv))))
            glue.append(tuple(row))
            orient.append(self.orientation[old] * permutation_sign(phi))
        return Triangulation.build(tets, glue, None, self.name if name is None else name)


def _orient(glue) -> tuple:
    n = len(glue)
    sign = [0] * n
    for root in range(n):
        if sign[root]:
            continue
        sign[root] = 1
        queue = deque([root])
        while queue:
            t = queue.popleft()
            for g in glue[t]:
                want = -sign[t] * permutation_sign(g.perm)
                if sign[g.tet] == 0:
                    sign[g.tet] = want
                    queue.append(g.tet)
                elif sign[g.tet] != want:
                    raise InconsistentGluing("triangulation is not orientable")
    return tuple(sign)


# ----------------------------------------------------------------------------
# validation reports


@dataclass(frozen=True)
class BoundaryReport:
    boundary: tuple  # (vertex class, euler characteristic) for truncated classes
    cusps: tuple  # (vertex class, euler characteristic of the link) for ideal classes
    problems: tuple

    @property
    def ok(self) -> bool:
        return not self.problems


def boundary_euler_check(tri: Triangulation) -> BoundaryReport:
    boundary, cusps, problems = [], [], []
    for vc, link in zip(tri.vertex_classes, tri.links):
        if vc.ideal:
            chi = link.euler_characteristic
            cusps.append((vc.index, chi))
            if chi != 0:
                problems.append(f"cusp at vertex class {vc.index} has link with Euler characteristic {chi}, not a torus")
        else:
            chi = link.boundary_euler_characteristic
            boundary.append((vc.index, chi))
            if chi >= 0:
                problems.append(f"boundary component at vertex class {vc.index} has Euler characteristic {chi} >= 0")
    return BoundaryReport(tuple(boundary), tuple(cusps), tuple(problems))


def detect_boundary_parallel_flags(tri: Triangulation) -> tuple:
    """Advisory warnings for non-zero edges that cannot carry a geometric
    structure.  Only the local test is made: valence below three, where
    angles in (0, pi) cannot sum to 2*pi."""
    warnings = []
    for ec in tri.edge_classes:
        if ec.zero:
            continue
        if ec.valence < 3:
            warnings.append(f"edge class {ec.index} has valence {ec.valence}; its angles cannot sum to 2*pi")
    return tuple(warnings)


# ----------------------------------------------------------------------------
# arc view


@dataclass(frozen=True)
class ArcView:
    """The same gluing read as an ideal triangulation of N' with arcs.

    ``arcs`` holds the (tetrahedron, slot) pairs of the arc edges.
    """

    size: int
    gluings: tuple
    orientation: tuple
    arcs: frozenset
    name: str = ""


def to_arc_view(tri: Triangulation) -> ArcView:
    arcs = frozenset((t, s) for t, comb in enumerate(tri.tetrahedra) for s in comb.zero_edges)
    return ArcView(tri.size, tri.gluings, tri.orientation, arcs, tri.name)


def from_arc_view(av: ArcView) -> Triangulation:
    """Arcs become zero-length edges; vertices on torus links untouched by
    arc ends become ideal, all other vertices are truncated."""
    bare = Triangulation(tuple(TetCombinatorics() for _ in range(av.size)), av.gluings,
                         av.orientation, av.name)
    arc_classes = {bare.edge_class_of(t, s) for t, s in av.arcs}
    touched = set()
    for ec in bare.edge_classes:
        if ec.index in arc_classes:
            touched.update(ec.ends)
    ideal_classes = {vc.index for vc, link in zip(bare.vertex_classes, bare.links)
                     if link.euler_characteristic == 0 and vc.index not in touched}
    tets = []
    for t in range(av.size):
        ideal = frozenset(v for v in range(4) if bare.vertex_class_of(t, v) in ideal_classes)
        zero = frozenset(s for s in range(6) if bare.edge_class_of(t, s) in arc_classes)
        tets.append(TetCombinatorics(ideal, zero))
    return Triangulation.build(tets, av.gluings, av.orientation, av.name)


# ----------------------------------------------------------------------------
# moves


@dataclass(frozen=True)
class MovePlan:
    """A local retriangulation.

    Old tetrahedra get vertex labels (``old_labels[i][x]`` is the label of
    vertex x of ``old[i]``); new tetrahedra are label 4-tuples.
    """

    kind: str
    old: tuple
    old_labels: tuple
    new: tuple
    new_combs: tuple
    path: tuple = ()  # (i, face): old[i + 1] is glued to face of old[i]


def two_three_plan(tri: Triangulation, t: int, f: int) -> MovePlan:
    g = tri.gluings[t][f]
    if g.tet == t:
        raise SelfAdjacentFace(f"face ({t},{f}) joins tetrahedron {t} to itself")
    p = g.perm
    a = other_vertices(f)
    la = [0] * 4
    la[f] = 0
    for i, x in enumerate(a):
        la[x] = i + 1
    lb = [0] * 4
    lb[p[f]] = 4
    for i, x in enumerate(a):
        lb[p[x]] = i + 1
    ca, cb = tri.tetrahedra[t], tri.tetrahedra[g.tet]
    ideal = {0: ca.is_ideal(f), 4: cb.is_ideal(p[f])}
    for i, x in enumerate(a):
        ideal[i + 1] = ca.is_ideal(x)
    zero = set()
    for comb, labels in ((ca, la), (cb, lb)):
        for s in comb.zero_edges:
            x, y = EDGES[s]
            zero.add(frozenset((labels[x], labels[y])))
    new = tuple((0, i, j, 4) for k in (1, 2, 3) for i, j in [tuple(x for x in (1, 2, 3) if x != k)])
    return MovePlan("2-3", (t, g.tet), (tuple(la), tuple(lb)), new, _combs(new, ideal, zero),
                    ((0, f),))


def three_two_plan(tri: Triangulation, edge: int) -> MovePlan:
    ec = tri.edge_classes[edge]
    if ec.zero:
        raise ZeroLengthEdge(f"edge class {edge} has length 0")
    if ec.valence != 3:
        raise WrongValence(f"edge class {edge} has valence {ec.valence}")
    if len(set(ec.tetrahedra)) != 3:
        raise RepeatedTetrahedra(f"edge class {edge} meets a tetrahedron more than once")
    # recover the walk states to label the equator
    t0, _, a0, b0 = ec.members[0]
    c, d = other_vertices(a0, b0)
    state = (t0, a0, b0, c, d)
    labels = []
    old = []
    path = []
    for i in range(3):
        u, x, y, enter, leave = state
        lab = [0] * 4
        lab[x], lab[y] = 0, 1
        lab[enter] = 2 + i
        lab[leave] = 2 + (i - 1) % 3
        labels.append(tuple(lab))
        old.append(u)
        path.append((i, leave))
        g = tri.gluings[u][leave]
        q = g.perm
        state = (g.tet, q[x], q[y], q[leave], q[enter])
    ideal, zero = {}, set()
    for u, lab in zip(old, labels):
        comb = tri.tetrahedra[u]
        for x in range(4):
            ideal[lab[x]] = comb.is_ideal(x)
        for s in comb.zero_edges:
            x, y = EDGES[s]
            zero.add(frozenset((lab[x], lab[y])))
    new = ((0, 2, 3, 4), (1, 2, 3, 4))
    return MovePlan("3-2", tuple(old), tuple(labels), new, _combs(new, ideal, zero), tuple(path[:2]))


def _combs(new, ideal: dict, zero: set) -> tuple:
    out = []
    for labels in new:
        iv = frozenset(i for i, l in enumerate(labels) if ideal[l])
        ze = frozenset(s for s, (x, y) in enumerate(EDGES)
                       if frozenset((labels[x], labels[y])) in zero)
        out.append(TetCombinatorics(iv, ze))
    return tuple(out)


def apply_plan(tri: Triangulation, plan: MovePlan) -> Triangulation:
    old = plan.old
    old_set = set(old)
    keep = [t for t in range(tri.size) if t not in old_set]
    kept_index = {t: i for i, t in enumerate(keep)}
    base = len(keep)
    new = plan.new
    old_pos = {t: i for i, t in enumerate(old)}

    def triple(labels, x):
        return frozenset(l for i, l in enumerate(labels) if i != x)

    new_face = {}
    for k, labels in enumerate(new):
        for i in range(4):
            new_face.setdefault(triple(labels, i), []).append((k, i))
    old_face = {}
    for t, labels in zip(old, plan.old_labels):
        for f in range(4):
            old_face.setdefault(triple(labels, f), []).append((t, f))

    glue: list = [[None] * 4 for _ in range(base + len(new))]
    for t in keep:
        for f in range(4):
            g = tri.gluings[t][f]
            if g.tet not in old_set:
                glue[kept_index[t]][f] = Gluing(kept_index[g.tet], g.perm)

    located = {}  # old outer face -> (new tet, local face)
    for key, faces in new_face.items():
        if len(faces) == 2:
            continue
        (k, i), = faces
        cands = old_face.get(key, [])
        if len(cands) != 1:
            raise InconsistentGluing("retriangulation does not match the old boundary")
        located[cands[0]] = (k, i)

    for key, faces in new_face.items():
        if len(faces) == 2:
            (k, i), (k2, i2) = faces
            la, lb = new[k], new[k2]
            perm = [0] * 4
            for m in range(4):
                perm[m] = i2 if m == i else lb.index(la[m])
            glue[base + k][i] = Gluing(base + k2, tuple(perm))
            glue[base + k2][i2] = Gluing(base + k, inverse(tuple(perm)))

    for (x_tet, f), (k, i) in located.items():
        lx = plan.old_labels[old_pos[x_tet]]
        g = tri.gluings[x_tet][f]
        q = g.perm
        labels = new[k]
        perm = [0] * 4
        if g.tet in old_set:
            k2, i2 = located[(g.tet, q[f])]
            ly = plan.old_labels[old_pos[g.tet]]
            target = base + k2
            for m in range(4):
                if m == i:
                    perm[m] = i2
                else:
                    y = q[lx.index(labels[m])]
                    perm[m] = new[k2].index(ly[y])
        else:
            target = kept_index[g.tet]
            for m in range(4):
                perm[m] = q[f] if m == i else q[lx.index(labels[m])]
            glue[target][q[f]] = Gluing(base + k, inverse(tuple(perm)))
        glue[base + k][i] = Gluing(target, tuple(perm))

    tets = [tri.tetrahedra[t] for t in keep] + list(plan.new_combs)
    return Triangulation.build(tets, [tuple(row) for row in glue], None, tri.name)


def move_two_three(tri: Triangulation, face) -> Triangulation:
    t, f = face
    return apply_plan(tri, two_three_plan(tri, t, f))


def move_three_two(tri: Triangulation, edge: int) -> Triangulation:
    return apply_plan(tri, three_two_plan(tri, edge))


# ----------------------------------------------------------------------------
# canonical labelling


def _bfs_code(tri: Triangulation, start: int, phi0: Perm):
    order = [start]
    maps = {start: phi0}
    code = []
    i = 0
    while i < len(order):
        t = order[i]
        phi = maps[t]
        inv = inverse(phi)
        comb = tri.tetrahedra[t]
        code.append(sum(1 << phi[v] for v in comb.ideal_vertices))
        code.append(sum(1 << EDGE_SLOT[frozenset((phi[a], phi[b]))]
                        for a, b in (EDGES[e] for e in comb.zero_edges)))
        for fn in range(4):
            g = tri.gluings[t][inv[fn]]
            if g.tet not in maps:
                maps[g.tet] = compose(phi, inverse(g.perm))
                order.append(g.tet)
            j = order.index(g.tet)
            code.append(j)
            code.append(PERM_INDEX[compose(maps[g.tet], compose(g.perm, inv))])
        i += 1
    if len(order) != tri.size:
        raise TriangulationError("triangulation is not connected")
    return tuple(code), order, maps


def canonical_form(tri: Triangulation) -> tuple:
    """Minimal BFS code over all starting tetrahedra and vertex labellings,
    with the matching relabelled triangulation."""
    best = None
    for start in range(tri.size):
        for phi in ALL_PERMS:
            code, order, maps = _bfs_code(tri, start, phi)
            if best is None or code < best[0]:
                best = (code, order, maps)
    code, order, maps = best
    return code, tri.relabel(order, [maps[t] for t in order])


_ALPHABET = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789+-"


def _encode(n: int) -> str:
    if n < 0:
        raise ValueError
    digits = []
    while True:
        digits.append(_ALPHABET[n % 64])
        n //= 64
        if n == 0:
            break
    body = "".join(reversed(digits))
    return _ALPHABET[len(body)] + body


def isomorphism_signature(tri: Triangulation) -> str:
    """A string equal for two triangulations iff they are isomorphic,
    flags included."""
    code, _ = canonical_form(tri)
    return _encode(tri.size) + "".join(_encode(x) for x in code)


def isomorphic(a: Triangulation, b: Triangulation) -> bool:
    return a.size == b.size and isomorphism_signature(a) == isomorphism_signature(b)
