"""Lorentzian linear algebra on Minkowski 4-space and the hyperbolic models.

Vectors are written (x0, x1, x2, x3) with the form
<x, y> = -x0*y0 + x1*y1 + x2*y2 + x3*y3.  The hyperboloid is the sheet
<x, x> = -1, x0 > 0; unit space-like vectors encode half-spaces and
future light-like vectors encode horospheres.

"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# shared tolerances
EPS_MODEL = 1e-12
EPS_GEOM = 1e-9
EPS_ANGLE = 1e-8
EPS_TILT = 1e-9

# tolerance for accepting unit / null inputs
INPUT_TOL = 1e-10

MINKOWSKI = np.diag([-1.0, 1.0, 1.0, 1.0])


class GeometryError(ValueError):
    """Base class for violated geometric preconditions."""


class NotUnitSpacelike(GeometryError):
    pass


class NotLightlike(GeometryError):
    pass


class PlanesIntersect(GeometryError):
    pass


class PlanesDisjoint(GeometryError):
    pass


class WrongSide(GeometryError):
    pass


class SameCentre(GeometryError):
    pass


@dataclass(frozen=True)
class MVec:
    """A vector of Minkowski 4-space."""

    x0: float
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        for name in ("x0", "x1", "x2", "x3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"non-finite coordinate {name}={value}")
            object.__setattr__(self, name, value)

    @classmethod
    def of(cls, values) -> "MVec":
        a, b, c, d = (float(v) for v in values)
        return cls(a, b, c, d)

    def __iter__(self):
        return iter((self.x0, self.x1, self.x2, self.x3))

    def __getitem__(self, i):
        return (self.x0, self.x1, self.x2, self.x3)[i]

    def __len__(self):
        return 4

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x0, self.x1, self.x2, self.x3], dtype=dtype or float)

    def __add__(self, other):
        return MVec.of(np.asarray(self) + np.asarray(other))

    def __sub__(self, other):
        return MVec.of(np.asarray(self) - np.asarray(other))

    def __mul__(self, s):
        return MVec.of(np.asarray(self) * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return MVec(-self.x0, -self.x1, -self.x2, -self.x3)


def lorentz_dot(a, b) -> float:
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def lorentz_norm2(a) -> float:
    return lorentz_dot(a, a)


def normalize_timelike(x) -> MVec:
    """Scale a time-like vector onto the hyperboloid (future sheet)."""
    n2 = lorentz_norm2(x)
    if n2 >= 0:
        raise GeometryError("vector is not time-like")
    s = 1.0 / math.sqrt(-n2)
    if x[0] < 0:
        s = -s
    return MVec.of(np.asarray(x, dtype=float) * s)


def normalize_spacelike(x) -> MVec:
    n2 = lorentz_norm2(x)
    if n2 <= 0:
        raise GeometryError("vector is not space-like")
    return MVec.of(np.asarray(x, dtype=float) / math.sqrt(n2))


def _require_unit_spacelike(w):
    if abs(lorentz_norm2(w) - 1.0) > INPUT_TOL:
        raise NotUnitSpacelike(f"<w,w> = {lorentz_norm2(w)!r}, expected 1")


def _require_lightlike(u):
    scale = max(1.0, float(np.dot(np.asarray(u, float), np.asarray(u, float))))
    if abs(lorentz_norm2(u)) > INPUT_TOL * scale or u[0] <= 0:
        raise NotLightlike(f"<u,u> = {lorentz_norm2(u)!r}, u0 = {u[0]!r}")


# ----------------------------------------------------------------------------
# half-spaces and horospheres


@dataclass(frozen=True)
class HalfSpace:
    """The half-space {v : <v, w> <= 0} dual to a unit space-like w."""

    w: MVec

    def contains(self, v, tol: float = EPS_GEOM) -> bool:
        return lorentz_dot(v, self.w) <= tol

    def on_boundary(self, v, tol: float = EPS_GEOM) -> bool:
        return abs(lorentz_dot(v, self.w)) <= tol

    def halfspace_sphere(self):
        """Centre and radius of the boundary plane in the half-space model.

        Returns (centre, radius) for a hemisphere, or (None, normal) when the
        plane is vertical, with normal the unit direction in C of (w1, w2).
        """
        w = self.w
        denom = w[3] - w[0]
        if abs(denom) < EPS_MODEL:
            return None, complex(w[1], w[2])
        return -complex(w[1], w[2]) / denom, 1.0 / abs(denom)


def dual_halfspace(w) -> HalfSpace:
    _require_unit_spacelike(w)
    return HalfSpace(MVec.of(w))


@dataclass(frozen=True)
class Horosphere:
    """The horosphere {v : <v, u> = -1} dual to a future light-like u."""

    u: MVec

    def centre(self) -> np.ndarray:
        """Point at infinity as a unit vector of R^3 (projective class of u)."""
        return np.array([self.u[1], self.u[2], self.u[3]]) / self.u[0]

    def contains(self, v, tol: float = EPS_GEOM) -> bool:
        return abs(lorentz_dot(v, self.u) + 1.0) <= tol

    def in_horoball(self, v, tol: float = EPS_GEOM) -> bool:
        """True for hyperboloid points on or inside the horoball."""
        return lorentz_dot(v, self.u) >= -1.0 - tol


def dual_horosphere(u) -> Horosphere:
    _require_lightlike(u)
    return Horosphere(MVec.of(u))


# ----------------------------------------------------------------------------
# distances


def distance_plane_plane(w1, w2) -> float:
    _require_unit_spacelike(w1)
    _require_unit_spacelike(w2)
    c = -lorentz_dot(w1, w2)
    if c < 1.0 - EPS_GEOM:
        raise PlanesIntersect(f"-<w1,w2> = {c!r} < 1")
    return math.acosh(max(c, 1.0))


def angle_plane_plane(w1, w2) -> float:
    _require_unit_spacelike(w1)
    _require_unit_spacelike(w2)
    c = -lorentz_dot(w1, w2)
    if abs(c) >= 1.0:
        raise PlanesDisjoint(f"|<w1,w2>| = {abs(c)!r} >= 1")
    return math.acos(c)


def distance_horosphere_plane(u, w) -> float:
    """Signed distance; negative when the horosphere meets the plane."""
    _require_lightlike(u)
    _require_unit_spacelike(w)
    e = -lorentz_dot(u, w)
    if e <= 0:
        raise WrongSide(f"-<u,w> = {e!r} <= 0")
    return math.log(e)


def _projectively_equal(a, b) -> bool:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return bool(np.allclose(a, b, atol=1e-12, rtol=0))


def distance_horosphere_horosphere(u1, u2) -> float:
    """log(-<u1,u2>/2); negative values mean the horoballs overlap."""
    _require_lightlike(u1)
    _require_lightlike(u2)
    if _projectively_equal(u1, u2):
        raise SameCentre("horospheres share their centre")
    return math.log(-0.5 * lorentz_dot(u1, u2))


# ----------------------------------------------------------------------------
# models


class Model(Enum):
    HYPERBOLOID = "hyperboloid"
    PROJECTIVE = "projective"
    HALF_SPACE = "half-space"


class _Infinity:
    """The point at infinity of the half-space model."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Infinity"


Infinity = _Infinity()


@dataclass(frozen=True)
class ModelPoint:
    """A point of hyperbolic space tagged with its model.

    coords is an MVec for the hyperboloid, a length-3 tuple for the
    projective ball, and a pair (complex, height) for the half-space.
    """

    model: Model
    coords: object

    def __post_init__(self):
        if self.model is Model.HYPERBOLOID:
            x = self.coords
            if abs(lorentz_norm2(x) + 1.0) > max(EPS_MODEL, EPS_MODEL * x[0] ** 2) or x[0] <= 0:
                raise GeometryError("point is not on the hyperboloid")
        elif self.model is Model.PROJECTIVE:
            p = tuple(float(c) for c in self.coords)
            if len(p) != 3 or sum(c * c for c in p) >= 1.0:
                raise GeometryError("projective point must lie in the open unit ball")
            object.__setattr__(self, "coords", p)
        else:
            z, t = self.coords
            if not t > 0:
                raise GeometryError("half-space height must be positive")
            object.__setattr__(self, "coords", (complex(z), float(t)))

    @classmethod
    def hyperboloid(cls, x) -> "ModelPoint":
        return cls(Model.HYPERBOLOID, MVec.of(x))

    @classmethod
    def projective(cls, p) -> "ModelPoint":
        return cls(Model.PROJECTIVE, tuple(p))

    @classmethod
    def half_space(cls, z, t) -> "ModelPoint":
        return cls(Model.HALF_SPACE, (complex(z), float(t)))

    def to(self, model: Model) -> "ModelPoint":
        if model is self.model:
            return self
        x = _to_hyperboloid(self)
        if model is Model.HYPERBOLOID:
            return ModelPoint(Model.HYPERBOLOID, x)
        if model is Model.PROJECTIVE:
            return ModelPoint(Model.PROJECTIVE, (x[1] / x[0], x[2] / x[0], x[3] / x[0]))
        return ModelPoint(Model.HALF_SPACE, hyperboloid_to_half_space(x))


def _to_hyperboloid(p: ModelPoint) -> MVec:
    if p.model is Model.HYPERBOLOID:
        return p.coords
    if p.model is Model.PROJECTIVE:
        q = np.asarray(p.coords)
        s = 1.0 / math.sqrt(1.0 - float(q @ q))
        return MVec(s, s * q[0], s * q[1], s * q[2])
    z, t = p.coords
    return half_space_to_hyperboloid(z, t)


def half_space_to_hyperboloid(z: complex, t: float) -> MVec:
    r2 = abs(z) ** 2 + t * t
    return MVec((r2 + 1.0) / (2 * t), z.real / t, z.imag / t, (r2 - 1.0) / (2 * t))


def hyperboloid_to_half_space(x) -> tuple[complex, float]:
    s = x[0] - x[3]
    return complex(x[1], x[2]) / s, 1.0 / s


def ideal_point_to_lightlike(z) -> MVec:
    """Future light-like representative of a boundary point of the half-space."""
    if z is Infinity:
        return MVec(1.0, 0.0, 0.0, 1.0)
    z = complex(z)
    r2 = abs(z) ** 2
    return MVec(r2 + 1.0, 2 * z.real, 2 * z.imag, r2 - 1.0)


def lightlike_to_ideal_point(u):
    s = u[0] - u[3]
    if abs(s) <= EPS_MODEL * abs(u[0]):
        return Infinity
    return complex(u[1], u[2]) / s


def horosphere_at_height(t: float) -> MVec:
    """Dual vector of the horizontal horosphere C x {t}."""
    return MVec(t, 0.0, 0.0, t)


def horosphere_at_point(z: complex, diameter: float) -> MVec:
    """Dual vector of the horosphere tangent at z with Euclidean diameter given."""
    return MVec.of(np.asarray(ideal_point_to_lightlike(z)) / diameter)


def hemisphere_dual(centre: complex, radius: float, inside: bool = True) -> MVec:
    """Unit space-like vector whose dual half-space is the inside (or outside)
    of the hemisphere |z - centre| = radius."""
    k = abs(centre) ** 2 - radius * radius
    n = np.array([-(1.0 + k), -2 * centre.real, -2 * centre.imag, 1.0 - k]) / (2 * radius)
    return MVec.of(n if inside else -n)


def halfspace_distance(p: ModelPoint, q: ModelPoint) -> float:
    if p.model is not Model.HALF_SPACE or q.model is not Model.HALF_SPACE:
        raise GeometryError("both points must be given in the half-space model")
    (zp, tp), (zq, tq) = p.coords, q.coords
    dist2 = abs(zp - zq) ** 2 + (tp - tq) ** 2
    return math.acosh(1.0 + dist2 / (2 * tp * tq))


def hyperboloid_distance(x, y) -> float:
    return math.acosh(max(1.0, -lorentz_dot(x, y)))
