"""Shared sampling helpers for the test suite."""

import math

import numpy as np

from trunckit.lorentz import lorentz_dot
from trunckit.tetshape import EDGES, TetAngles, TetCombinatorics, permutation_sign, vertex_angle_sum
from trunckit.triangulation import ALL_PERMS, Gluing, inverse


def random_valid_angles(rng: np.random.Generator, comb: TetCombinatorics,
                        margin: float = 0.02, max_tries: int = 10000) -> TetAngles:
    """Sample moduli satisfying the vertex conditions for ``comb``.

    Draws a random point, projects it onto the affine space of the ideal
    vertex equations and rejects it unless all strict inequalities hold.
    """
    free = [e for e in range(6) if e not in comb.zero_edges]
    rows = []
    for v in sorted(comb.ideal_vertices):
        rows.append([1.0 if v in EDGES[e] else 0.0 for e in free])
    a = np.array(rows) if rows else np.zeros((0, len(free)))
    for _ in range(max_tries):
        x = rng.uniform(margin, 0.55 * math.pi, size=len(free))
        if rows:
            resid = a @ x - math.pi
            x = x - a.T @ np.linalg.lstsq(a @ a.T, resid, rcond=None)[0]
        theta = [0.0] * 6
        for e, val in zip(free, x):
            theta[e] = float(val)
        if min(x) <= margin or max(x) >= math.pi - margin:
            continue
        ok = all(comb.is_ideal(v) or vertex_angle_sum(theta, v) < math.pi - margin
                 for v in range(4))
        if ok:
            return TetAngles(tuple(theta))
    raise RuntimeError("could not sample valid moduli")


ODD = [p for p in ALL_PERMS if permutation_sign(p) == -1]


def random_gluing(rng, n):
    """Random orientable face pairing of n tetrahedra (may be disconnected)."""
    faces = [(t, f) for t in range(n) for f in range(4)]
    rng.shuffle(faces)
    glue = [[None] * 4 for _ in range(n)]
    for a, b in zip(faces[::2], faces[1::2]):
        cand = [p for p in ODD if p[a[1]] == b[1]]
        p = cand[rng.integers(len(cand))]
        glue[a[0]][a[1]] = Gluing(b[0], p)
        glue[b[0]][b[1]] = Gluing(a[0], inverse(p))
    return tuple(tuple(row) for row in glue)


def random_relabel(rng, tri):
    order = list(rng.permutation(tri.size))
    maps = [ALL_PERMS[rng.integers(24)] for _ in range(tri.size)]
    return tri.relabel(order, maps)


def boost(axis, s):
    m = np.eye(4)
    m[0, 0] = m[axis, axis] = math.cosh(s)
    m[0, axis] = m[axis, 0] = math.sinh(s)
    return m


def rotation(i, j, a):
    m = np.eye(4)
    m[i, i] = m[j, j] = math.cos(a)
    m[i, j] = -math.sin(a)
    m[j, i] = math.sin(a)
    return m


def random_lorentz(rng):
    m = np.eye(4)
    for _ in range(4):
        m = boost(int(rng.integers(1, 4)), rng.uniform(-1.5, 1.5)) @ m
        i, j = rng.choice([1, 2, 3], size=2, replace=False)
        m = rotation(int(i), int(j), rng.uniform(0, 2 * math.pi)) @ m
    return m


def random_hyperboloid(rng, spread=2.0):
    x = rng.normal(size=3) * spread
    return np.array([math.sqrt(1 + x @ x), *x])


def random_unit_spacelike(rng):
    v = rng.normal(size=4)
    v[1:] *= 2.0
    while lorentz_dot(v, v) <= 0.1:
        v = rng.normal(size=4)
        v[1:] *= 2.0
    return v / math.sqrt(lorentz_dot(v, v))


def random_lightlike(rng):
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    return rng.uniform(0.2, 5.0) * np.array([1.0, *d])
