"""Turning fitted sub-manifolds into exportable views.

Two schemes: an orthographic projection of everything onto the top-3
eigenvectors at the start point (synthetic data), and a square grid of
recovered landmark shapes sampled along the principal-direction polylines
(preshape data).  The writers emit UTF-8, LF-terminated files with '.'
decimal separators and enough digits to round-trip float64 exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NotAShapeFitError
from .fitting import Net, Submanifold
from .geometry import Point, Tangent, _distance_coords
from .shape import LandmarkConfig, from_preshape
from .tangent_stats import KernelSpec, eigenframe, local_covariance

_CENTER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PrincipalDirections:
    """The four join polylines; pd3/pd4 are None when the fan cannot host them."""

    pd1: tuple[Point, ...]
    pd2: tuple[Point, ...] | None
    pd3: tuple[Point, ...] | None
    pd4: tuple[Point, ...] | None
    note: str | None = None

    def as_dict(self) -> dict[str, tuple[Point, ...]]:
        out = {"pd1": self.pd1}
        for name in ("pd2", "pd3", "pd4"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        return out


def _net_by_index(sub: Submanifold, index: int) -> Net:
    for net in sub.nets:
        if net.direction_index == index:
            return net
    raise ValueError(f"submanifold holds no net with direction index {index}")


def _join(first: Net, second: Net, start: Point) -> tuple[Point, ...]:
    # The first-listed branch is reversed so the polyline is monotone in arc
    # length and passes through the start exactly once, at the join.
    return tuple(reversed(first.points[1:])) + (start,) + tuple(second.points[1:])


def principal_directions(sub: Submanifold) -> PrincipalDirections:
    """Join opposite nets into the PD1..PD4 polylines.

    With D directions, PD1 pairs nets (D/2, D), PD2 pairs (D/4, 3D/4),
    PD3 (D/8, 5D/8) and PD4 (3D/8, 7D/8); the last two exist only when D
    is divisible by 8 and are otherwise omitted with a note.  A flow fit
    (two nets) yields PD1 alone.
    """
    d = sub.config.num_directions
    if len(sub.nets) == 2 and sub.config.dim == 1:
        pd1 = _join(_net_by_index(sub, 2), _net_by_index(sub, 1), sub.start)
        return PrincipalDirections(pd1, None, None, None,
                                   note="flow fit: only PD1 is defined")
    pd1 = _join(_net_by_index(sub, d // 2), _net_by_index(sub, d), sub.start)
    pd2 = _join(_net_by_index(sub, d // 4), _net_by_index(sub, 3 * d // 4), sub.start)
    if d % 8 == 0:
        pd3 = _join(_net_by_index(sub, d // 8), _net_by_index(sub, 5 * d // 8), sub.start)
        pd4 = _join(_net_by_index(sub, 3 * d // 8), _net_by_index(sub, 7 * d // 8), sub.start)
        return PrincipalDirections(pd1, pd2, pd3, pd4)
    return PrincipalDirections(
        pd1, pd2, None, None,
        note=f"num_directions = {d} is not divisible by 8; PD3/PD4 omitted")


@dataclass(frozen=True, eq=False)
class ProjectedSubmanifold:
    """Nets, data and any extra curves expressed in top-3 eigen coordinates."""

    nets: tuple[np.ndarray, ...]
    data: np.ndarray
    basis: tuple[Tangent, Tangent, Tangent]
    start: Point

    def project(self, points) -> np.ndarray:
        """Map points to (len, 3): inner products of (p - start) with the basis."""
        mat = np.stack([t.vec for t in self.basis])
        if len(points) == 0:
            return np.zeros((0, 3))
        coords = np.stack([p.coords for p in points])
        return (coords - self.start.coords) @ mat.T


def project_submanifold(sub: Submanifold, data,
                        kernel: KernelSpec | None = None) -> ProjectedSubmanifold:
    """Project nets and data onto the top-3 eigenvectors at the start.

    The basis comes from the local covariance at the start under the given
    kernel (the fit's kernel by default); the start itself maps to the
    origin.  RankDeficientError surfaces when fewer than three directions
    carry variance.
    """
    kern = kernel if kernel is not None else sub.config.kernel
    cov = local_covariance(sub.start, data, kern)
    frame = eigenframe(cov, sub.start, 3)
    basis = (frame.vectors[0], frame.vectors[1], frame.vectors[2])
    proj = ProjectedSubmanifold((), np.zeros((0, 3)), basis, sub.start)
    nets = tuple(proj.project(net.points) for net in sub.nets)
    projected_data = proj.project(list(data))
    return ProjectedSubmanifold(nets, projected_data, basis, sub.start)


def _resample_branch(net_points, q: int) -> list[Point]:
    """Pick q branch points at (roughly) evenly spaced arc lengths from the start."""
    pts = list(net_points)  # pts[0] is the start itself
    gaps = [_distance_coords(a.coords, b.coords, a.chart) for a, b in zip(pts, pts[1:])]
    arcs = np.concatenate([[0.0], np.cumsum(gaps)])
    total = float(arcs[-1])
    picks = []
    for i in range(1, q + 1):
        target = total * i / q
        # snap to the nearest grown level, never back to the start cell
        j = int(np.argmin(np.abs(arcs[1:] - target))) + 1
        picks.append(pts[j])
    return picks


def shape_grid(sub: Submanifold, samples_per_direction: int = 9):
    """Square grid of recovered shapes: PD1 row, PD2 column, PD3/PD4 diagonals.

    The center cell is the start shape exactly; moving away from the center
    walks outward along the corresponding principal-direction branch.  Cells
    off those four lines stay None, as do diagonal cells when PD3/PD4 are
    unavailable.  Raises NotAShapeFitError when the fit does not live on a
    preshape sphere.
    """
    m = samples_per_direction
    if m < 3 or m % 2 == 0:
        raise ValueError("samples_per_direction must be an odd number >= 3")
    coords = sub.start.coords
    if coords.shape[0] % 2 != 0 or coords.shape[0] < 6:
        raise NotAShapeFitError("start point does not pair into planar landmarks")
    off = max(abs(float(coords[0::2].sum())), abs(float(coords[1::2].sum())))
    if off > _CENTER_TOL:
        raise NotAShapeFitError(f"start point carries a centroid offset of {off!r}")
    k = coords.shape[0] // 2

    pds = principal_directions(sub)
    d = sub.config.num_directions
    c = m // 2
    grid: list[list[LandmarkConfig | None]] = [[None] * m for _ in range(m)]
    grid[c][c] = from_preshape(sub.start, k, "start")

    def fill(first_index, second_index, cell_of, tag):
        first = _resample_branch(_net_by_index(sub, first_index).points, c)
        second = _resample_branch(_net_by_index(sub, second_index).points, c)
        for i in range(1, c + 1):
            r, col = cell_of(-i)
            grid[r][col] = from_preshape(first[i - 1], k, f"{tag}{-i:+d}")
            r, col = cell_of(i)
            grid[r][col] = from_preshape(second[i - 1], k, f"{tag}{i:+d}")

    if len(sub.nets) == 2 and sub.config.dim == 1:
        fill(2, 1, lambda i: (c, c + i), "pd1")
        return grid
    fill(d // 2, d, lambda i: (c, c + i), "pd1")
    fill(d // 4, 3 * d // 4, lambda i: (c + i, c), "pd2")
    if pds.pd3 is not None:
        fill(d // 8, 5 * d // 8, lambda i: (c + i, c + i), "pd3")
        fill(3 * d // 8, 7 * d // 8, lambda i: (c + i, c - i), "pd4")
    return grid


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_submanifold_csv(sub: Submanifold, path) -> None:
    """Full-precision ambient coordinates of every net level."""
    dim = sub.start.ambient_dim
    header = "net_index,level," + ",".join(f"c{i}" for i in range(dim))
    lines = [header]
    for net in sub.nets:
        for level, point in enumerate(net.points):
            lines.append(f"{net.direction_index},{level}," +
                         ",".join(_fmt(v) for v in point.coords))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_projected_csv(path, proj: ProjectedSubmanifold,
                        sub: Submanifold | None = None,
                        pds: PrincipalDirections | None = None,
                        geodesics: dict[int, list[Point]] | None = None) -> None:
    """Three-coordinate rows for nets, data, PD polylines and geodesics."""
    lines = ["kind,net_index,level,p1,p2,p3"]

    def emit(kind, net_index, rows):
        for level, row in enumerate(np.asarray(rows)):
            lines.append(f"{kind},{net_index},{level}," + ",".join(_fmt(v) for v in row))

    if sub is not None:
        for net, rows in zip(sub.nets, proj.nets):
            emit("net", net.direction_index, rows)
    else:
        for idx, rows in enumerate(proj.nets, start=1):
            emit("net", idx, rows)
    emit("data", 0, proj.data)
    if pds is not None:
        for name, points in pds.as_dict().items():
            emit(name, 0, proj.project(list(points)))
    if geodesics:
        for idx in sorted(geodesics):
            emit("geodesic", idx, proj.project(list(geodesics[idx])))
    if pds is not None and (pds.pd3 is not None or pds.pd4 is not None):
        lines.append("# pd3/pd4 label the fan diagonals, not third/fourth principal components")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_shapes_json(path, grid, samples_per_direction: int, start_kind: str) -> None:
    """Nested grid of (k, 2) landmark arrays with fit metadata."""
    center = grid[len(grid) // 2][len(grid) // 2]
    payload = {
        "k": int(center.k),
        "samples_per_direction": int(samples_per_direction),
        "start_kind": start_kind,
        "grid": [[None if cell is None else cell.landmarks.tolist() for cell in row]
                 for row in grid],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
