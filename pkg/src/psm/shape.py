"""Planar landmark shapes and their preshape-sphere embedding.

A configuration of k >= 3 landmarks in the plane is mapped to the preshape
sphere by removing translation (subtract the centroid) and scale (divide by
the Frobenius norm).  Coordinates are flattened landmark-major, i.e.
(x1, y1, x2, y2, ...), giving a unit vector in R^{2k} whose even and odd
strides each sum to zero.  Rotation is removed by aligning each preshape to
a reference with the closed-form optimal angle of the complex inner product.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfigError,
    DegenerateOrbitError,
    DimensionMismatchError,
    LandmarkFormatError,
    NoConvergenceError,
    NotCenteredError,
)
from .geometry import SPHERE, Point, geodesic_distance
from .tangent_stats import frechet_mean

_CENTER_TOL = 1e-10
_RECOVER_CENTER_TOL = 1e-6
_SCALE_TOL = 1e-12
_ORBIT_TOL = 1e-14
_GPA_TOL = 1e-9
_GPA_MAX_ITER = 100


@dataclass(frozen=True, eq=False)
class LandmarkConfig:
    """k planar landmarks with an identifying label."""

    landmarks: np.ndarray
    specimen_id: str = ""

    def __post_init__(self):
        arr = np.array(self.landmarks, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"landmarks must be a (k, 2) array, got shape {arr.shape}")
        if arr.shape[0] < 3:
            raise ValueError("at least 3 landmarks are required")
        if not np.all(np.isfinite(arr)):
            raise ValueError("landmark coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "landmarks", arr)

    @property
    def k(self) -> int:
        return self.landmarks.shape[0]


@dataclass(frozen=True, eq=False)
class Preshape:
    """A centered, unit-norm flattened configuration: a sphere Point in R^{2k}."""

    point: Point

    def __post_init__(self):
        coords = self.point.coords
        if self.point.chart != SPHERE:
            raise ValueError("preshapes live on the sphere chart")
        if coords.shape[0] % 2 != 0 or coords.shape[0] < 6:
            raise ValueError("preshape coordinates must pair into >= 3 landmarks")
        if max(abs(float(coords[0::2].sum())), abs(float(coords[1::2].sum()))) > _CENTER_TOL:
            raise ValueError("preshape coordinates are not centered")

    @property
    def k(self) -> int:
        return self.point.ambient_dim // 2

    def complex_form(self) -> np.ndarray:
        c = self.point.coords
        return c[0::2] + 1j * c[1::2]


def to_preshape(config: LandmarkConfig) -> Preshape:
    """Remove translation and scale; flatten to a unit vector in R^{2k}.

    Raises DegenerateConfigError when all landmarks coincide.
    """
    centered = config.landmarks - config.landmarks.mean(axis=0)
    scale = float(np.linalg.norm(centered))
    if scale < _SCALE_TOL:
        raise DegenerateConfigError(
            f"configuration {config.specimen_id!r} collapses to a point")
    flat = (centered / scale).ravel()
    # ravel of (k, 2) is landmark-major: (x1, y1, x2, y2, ...)
    return Preshape(Point(flat, SPHERE))


def _interleave(z: np.ndarray) -> np.ndarray:
    out = np.empty(2 * z.shape[0])
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def align_rotation(p: Preshape, base: Preshape) -> Preshape:
    """Rotate p to maximize its inner product with base.

    The optimal angle is the argument of the complex inner product
    sum_j conj(p_j) base_j; the aligned preshape realizes the minimal
    geodesic distance over the rotation orbit.  A vanishing inner product
    (DegenerateOrbitError) leaves the angle undefined.
    """
    if p.k != base.k:
        raise DimensionMismatchError("preshapes have different landmark counts")
    z = p.complex_form()
    w = base.complex_form()
    inner = complex(np.vdot(z, w))  # sum conj(z_j) w_j
    if abs(inner) < _ORBIT_TOL:
        raise DegenerateOrbitError("rotation alignment undefined: orbit is orthogonal")
    theta = np.angle(inner)
    rotated = np.exp(1j * theta) * z
    return Preshape(Point(_interleave(rotated), SPHERE))


def align_dataset(configs) -> tuple[list[Point], Point]:
    """Generalized Procrustes alignment of a landmark dataset.

    All configurations are mapped to preshapes and rotation-aligned to an
    evolving Frechet mean (seeded from the first preshape) until the mean
    moves less than 1e-9, then aligned once more to the final mean.

    Returns (aligned preshape points, mean point).
    """
    seq = list(configs)
    if len(seq) < 2:
        raise ValueError("alignment needs at least two configurations")
    k = seq[0].k
    for c in seq:
        if c.k != k:
            raise DimensionMismatchError("configurations have different landmark counts")
    pres = [to_preshape(c) for c in seq]
    mean = pres[0].point
    for _ in range(_GPA_MAX_ITER):
        aligned = [align_rotation(p, Preshape(mean)) for p in pres]
        new_mean = frechet_mean([a.point for a in aligned])
        moved = geodesic_distance(mean, new_mean)
        mean = new_mean
        if moved < _GPA_TOL:
            final = [align_rotation(p, Preshape(mean)) for p in pres]
            return [a.point for a in final], mean
    raise NoConvergenceError("Procrustes alignment did not stabilize in 100 rounds")


def from_preshape(p: Point, k: int, specimen_id: str = "recovered") -> LandmarkConfig:
    """Fold a preshape-sphere point back into a (k, 2) landmark configuration.

    Raises NotCenteredError when the even/odd coordinate sums exceed 1e-6,
    which signals a point that never came from a centered configuration.
    """
    if p.ambient_dim != 2 * k:
        raise DimensionMismatchError(f"expected {2 * k} coordinates, got {p.ambient_dim}")
    coords = p.coords
    off = max(abs(float(coords[0::2].sum())), abs(float(coords[1::2].sum())))
    if off > _RECOVER_CENTER_TOL:
        raise NotCenteredError(f"coordinates carry a centroid offset of {off!r}")
    return LandmarkConfig(coords.reshape(k, 2), specimen_id)


# -- landmark file reading --
#
# Two accepted layouts:
#   1. CSV with header  specimen_id,landmark_index,x,y  (rows of one specimen
#      contiguous, landmark_index consecutive within a specimen);
#   2. whitespace-separated blocks of k rows "x y", blank lines between
#      specimens, specimens implicitly numbered from 1.

def read_landmarks(path) -> list[LandmarkConfig]:
    """Parse a landmark file in either accepted layout.

    Layout errors raise LandmarkFormatError with a 1-based line number.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    first = next((ln for ln in lines if ln.strip()), "")
    header = [col.strip().lower() for col in first.split(",")]
    if header[:4] == ["specimen_id", "landmark_index", "x", "y"]:
        return _read_landmarks_csv(lines)
    return _read_landmarks_blocks(lines)


def _read_landmarks_csv(lines) -> list[LandmarkConfig]:
    reader = csv.reader(lines)
    configs: list[LandmarkConfig] = []
    seen: set[str] = set()
    current: str | None = None
    rows: list[tuple[float, float]] = []
    last_index: int | None = None

    def flush(line_no):
        if current is None:
            return
        if len(rows) < 3:
            raise LandmarkFormatError(
                f"specimen {current!r} has only {len(rows)} landmarks (need >= 3)", line_no)
        configs.append(LandmarkConfig(np.array(rows), current))

    header_seen = False
    for line_no, row in enumerate(reader, start=1):
        if not row or not any(cell.strip() for cell in row):
            continue
        if not header_seen:
            header_seen = True
            continue
        if len(row) < 4:
            raise LandmarkFormatError(f"expected 4 columns, got {len(row)}", line_no)
        sid = row[0].strip()
        try:
            idx = int(row[1])
            x, y = float(row[2]), float(row[3])
        except ValueError as exc:
            raise LandmarkFormatError(f"unparsable row: {exc}", line_no) from None
        if sid != current:
            flush(line_no)
            if sid in seen:
                raise LandmarkFormatError(
                    f"specimen {sid!r} appears in two separate blocks", line_no)
            seen.add(sid)
            current = sid
            rows = []
            last_index = None
        if last_index is not None and idx != last_index + 1:
            raise LandmarkFormatError(
                f"landmark_index jumps from {last_index} to {idx}", line_no)
        last_index = idx
        rows.append((x, y))
    flush(len(lines))
    if not configs:
        raise LandmarkFormatError("no landmark rows found", 1)
    counts = {c.k for c in configs}
    if len(counts) > 1:
        raise LandmarkFormatError(f"inconsistent landmark counts across specimens: {sorted(counts)}")
    return configs


def _read_landmarks_blocks(lines) -> list[LandmarkConfig]:
    configs: list[LandmarkConfig] = []
    rows: list[tuple[float, float]] = []
    block_start = None

    def flush(line_no):
        nonlocal rows, block_start
        if not rows:
            return
        if len(rows) < 3:
            raise LandmarkFormatError(
                f"block starting at line {block_start} has only {len(rows)} rows (need >= 3)",
                line_no)
        configs.append(LandmarkConfig(np.array(rows), str(len(configs) + 1)))
        rows = []
        block_start = None

    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            flush(line_no)
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise LandmarkFormatError(
                f"expected two whitespace-separated numbers, got {len(parts)} fields", line_no)
        try:
            pair = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise LandmarkFormatError(f"unparsable numbers: {stripped!r}", line_no) from None
        if block_start is None:
            block_start = line_no
        rows.append(pair)
    flush(len(lines))
    if not configs:
        raise LandmarkFormatError("no landmark rows found", 1)
    counts = {c.k for c in configs}
    if len(counts) > 1:
        raise LandmarkFormatError(f"inconsistent landmark counts across blocks: {sorted(counts)}")
    return configs
