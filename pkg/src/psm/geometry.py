"""Geometric primitives on the embedded unit sphere S^d and on flat charts.

Sphere points are unit vectors in R^{d+1}; tangent vectors at x live in the
hyperplane orthogonal to x.  The flat chart treats R^{d+1} itself as the
manifold, so exp and log reduce to vector addition and subtraction.  All
closed forms are the standard great-circle ones:

    exp_x(v) = cos(|v|) x + sin(|v|) v/|v|
    log_x(y) = theta * (y - <x,y> x) / |y - <x,y> x|,  theta = arccos(<x,y>)

with the inner product clipped to [-1, 1] before arccos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AntipodalPairError, CutLocusError, ZeroVectorError

SPHERE = "sphere"
FLAT = "flat"
_CHARTS = (SPHERE, FLAT)

_UNIT_TOL = 1e-12     # |norm - 1| allowed for sphere points
_TANGENT_TOL = 1e-10  # |<base, vec>| allowed for sphere tangents
_ZERO_TOL = 1e-14
_ANTIPODAL_TOL = 1e-10  # <x,y> < -1 + tol is treated as antipodal
_CUT_LOCUS_TOL = 1e-9


def _as_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise ValueError(f"expected a 1-d coordinate vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    """A location on S^d (chart 'sphere') or in Euclidean space (chart 'flat')."""

    coords: np.ndarray
    chart: str = SPHERE

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_vector(self.coords))
        if self.chart not in _CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        if self.chart == SPHERE:
            norm = float(np.linalg.norm(self.coords))
            if abs(norm - 1.0) > _UNIT_TOL:
                raise ValueError(f"sphere point must have unit norm, got {norm!r}")

    @property
    def ambient_dim(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True, eq=False)
class Tangent:
    """A tangent vector attached to a base point."""

    base: Point
    vec: np.ndarray

    def __post_init__(self):
        vec = np.array(self.vec, dtype=float)
        if vec.shape != self.base.coords.shape:
            raise ValueError("tangent vector and base point dimensions differ")
        if not np.all(np.isfinite(vec)):
            raise ValueError("tangent components must be finite")
        if self.base.chart == SPHERE:
            inner = abs(float(vec @ self.base.coords))
            if inner > _TANGENT_TOL:
                raise ValueError(f"tangent not orthogonal to base point: <x,v> = {inner!r}")
        vec.setflags(write=False)
        object.__setattr__(self, "vec", vec)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


# -- coordinate-level core, shared by the public wrappers and the fitting loop --

def _exp_coords(x: np.ndarray, v: np.ndarray, chart: str) -> np.ndarray:
    if chart == FLAT:
        return x + v
    n = float(np.linalg.norm(v))
    if n < _ZERO_TOL:
        return np.array(x, dtype=float)
    if n >= math.pi - _CUT_LOCUS_TOL:
        raise CutLocusError(f"exp step of length {n!r} reaches the cut locus")
    out = math.cos(n) * x + (math.sin(n) / n) * v
    return out / np.linalg.norm(out)


def _log_coords(x: np.ndarray, y: np.ndarray, chart: str) -> np.ndarray:
    if chart == FLAT:
        return y - x
    c = min(1.0, max(-1.0, float(x @ y)))
    if c < -1.0 + _ANTIPODAL_TOL:
        raise AntipodalPairError("log undefined for an antipodal pair")
    u = y - c * x
    nu = float(np.linalg.norm(u))
    if nu < _ZERO_TOL:
        return np.zeros_like(x)
    return (math.acos(c) / nu) * u


def _log_coords_many(x: np.ndarray, ys: np.ndarray, chart: str):
    """Logs of the rows of ys at x.  Returns (vectors, geodesic distances)."""
    if chart == FLAT:
        diffs = ys - x
        return diffs, np.linalg.norm(diffs, axis=1)
    c = np.clip(ys @ x, -1.0, 1.0)
    if np.any(c < -1.0 + _ANTIPODAL_TOL):
        raise AntipodalPairError("log undefined for an antipodal pair")
    theta = np.arccos(c)
    u = ys - c[:, None] * x
    nu = np.linalg.norm(u, axis=1)
    safe = np.where(nu < _ZERO_TOL, 1.0, nu)
    vecs = (theta / safe)[:, None] * u
    vecs[nu < _ZERO_TOL] = 0.0
    return vecs, theta


def _distance_coords(x: np.ndarray, y: np.ndarray, chart: str) -> float:
    if chart == FLAT:
        return float(np.linalg.norm(y - x))
    # Half-chord form of arccos(x.y): well conditioned at both ends of
    # [0, pi], where the naive arccos loses half the significant digits,
    # and bit-symmetric in its arguments since y - x and x - y are exact
    # negations.
    if float(x @ y) >= 0.0:
        return 2.0 * math.asin(min(1.0, 0.5 * float(np.linalg.norm(y - x))))
    return math.pi - 2.0 * math.asin(min(1.0, 0.5 * float(np.linalg.norm(y + x))))


def _great_circle_coords(x: np.ndarray, unit: np.ndarray, t: float) -> np.ndarray:
    # Closed-form arc point without the cut-locus guard; used for sampling,
    # where reaching the antipode exactly is legitimate.
    out = math.cos(t) * x + math.sin(t) * unit
    return out / np.linalg.norm(out)


# -- public operations --

def project_to_sphere(v) -> Point:
    """Normalize an ambient vector onto the unit sphere."""
    arr = np.array(v, dtype=float)
    n = float(np.linalg.norm(arr))
    if n < _ZERO_TOL:
        raise ZeroVectorError("cannot project a zero vector to the sphere")
    return Point(arr / n, SPHERE)


def tangent_project(x: Point, w) -> Tangent:
    """Project an ambient vector into the tangent space at x.

    On the sphere this removes the radial component; on a flat chart it is
    the identity.
    """
    arr = np.array(w, dtype=float)
    if x.chart == SPHERE:
        arr = arr - (arr @ x.coords) * x.coords
    return Tangent(x, arr)


def exp_map(x: Point, v: Tangent) -> Point:
    """Follow the geodesic from x with initial velocity v for unit time.

    The result is renormalized onto the sphere.  Steps of length >= pi (up
    to a small tolerance) raise CutLocusError.
    """
    if v.base is not x and not np.array_equal(v.base.coords, x.coords):
        raise ValueError("tangent vector is based at a different point")
    return Point(_exp_coords(x.coords, v.vec, x.chart), x.chart)


def log_map(x: Point, y: Point) -> Tangent:
    """Inverse of exp_map: the tangent at x pointing to y with |log| = d(x, y)."""
    if x.chart != y.chart:
        raise ValueError("points live on different charts")
    if x.ambient_dim != y.ambient_dim:
        raise ValueError("points live in different ambient spaces")
    return Tangent(x, _log_coords(x.coords, y.coords, x.chart))


def geodesic_distance(x: Point, y: Point) -> float:
    """Arc-length distance on the sphere, Euclidean distance on a flat chart."""
    if x.chart != y.chart:
        raise ValueError("points live on different charts")
    if x.ambient_dim != y.ambient_dim:
        raise ValueError("points live in different ambient spaces")
    return _distance_coords(x.coords, y.coords, x.chart)


def sample_geodesic(x: Point, v: Tangent, length: float, steps: int) -> list[Point]:
    """Evenly spaced points along the geodesic through x in direction v.

    The arc may reach the antipode exactly (length == pi); only arcs strictly
    longer than pi raise CutLocusError, since past the antipode the curve is
    no longer distance-minimizing.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    if length < 0:
        raise ValueError("length must be nonnegative")
    n = float(np.linalg.norm(v.vec))
    if n < _ZERO_TOL:
        raise ZeroVectorError("direction vector has zero length")
    if v.base is not x and not np.array_equal(v.base.coords, x.coords):
        raise ValueError("tangent vector is based at a different point")
    unit = v.vec / n
    ts = np.linspace(0.0, length, steps)
    if x.chart == FLAT:
        return [Point(x.coords + t * unit, FLAT) for t in ts]
    if length > math.pi + _CUT_LOCUS_TOL:
        raise CutLocusError("arc longer than pi leaves the minimal geodesic")
    return [Point(_great_circle_coords(x.coords, unit, float(t)), SPHERE) for t in ts]


def points_matrix(data) -> np.ndarray:
    """Stack a homogeneous list of Points into an (n, d+1) coordinate matrix."""
    seq = list(data)
    if not seq:
        raise ValueError("empty point list")
    chart = seq[0].chart
    dim = seq[0].ambient_dim
    for p in seq:
        if p.chart != chart or p.ambient_dim != dim:
            raise ValueError("points must share one chart and ambient dimension")
    return np.stack([p.coords for p in seq])
