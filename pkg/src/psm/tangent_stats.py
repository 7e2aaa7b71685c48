"""Statistics in tangent spaces: means, kernel covariances, eigenframes.

These are the ingredients the net-growing fitter consumes at every level:
a kernel-weighted second moment of log images and its leading eigenvectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AntipodalPairError,
    DimensionMismatchError,
    EmptyNeighborhoodError,
    HemisphereViolationError,
    NoConvergenceError,
    RankDeficientError,
    ZeroVectorError,
)
from .geometry import (
    FLAT,
    SPHERE,
    Point,
    Tangent,
    _exp_coords,
    _log_coords_many,
    points_matrix,
    project_to_sphere,
)

UNIFORM_BALL = "uniform_ball"
GAUSSIAN = "gaussian"

_RANK_TOL = 1e-12
_TIE_TOL = 1e-12
_SIGN_TOL = 1e-12
_ZERO_TOL = 1e-14


@dataclass(frozen=True)
class KernelSpec:
    """Locality kernel: uniform ball indicator (default) or Gaussian profile."""

    kind: str = UNIFORM_BALL
    bandwidth: float = math.inf

    def __post_init__(self):
        if self.kind not in (UNIFORM_BALL, GAUSSIAN):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive (inf allowed)")

    def weights(self, dists: np.ndarray) -> np.ndarray:
        dists = np.asarray(dists, dtype=float)
        if math.isinf(self.bandwidth):
            return np.ones_like(dists)
        if self.kind == UNIFORM_BALL:
            return (dists <= self.bandwidth).astype(float)
        return np.exp(-0.5 * (dists / self.bandwidth) ** 2)


@dataclass(frozen=True, eq=False)
class EigenFrame:
    """Top-k eigenvectors of a tangent covariance, eigenvalues nonincreasing."""

    base: Point
    vectors: tuple[Tangent, ...]
    eigenvalues: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def k(self) -> int:
        return len(self.vectors)

    def basis(self) -> np.ndarray:
        """The frame as a (k, d+1) row matrix."""
        return np.stack([t.vec for t in self.vectors])


def _cov_coords(center: np.ndarray, xs: np.ndarray, chart: str,
                kernel: KernelSpec, demean: bool = False) -> np.ndarray:
    vecs, dists = _log_coords_many(center, xs, chart)
    w = kernel.weights(dists)
    total = float(w.sum())
    if total <= 0.0:
        raise EmptyNeighborhoodError(
            f"no data carries kernel weight within bandwidth {kernel.bandwidth!r}")
    if demean:
        vecs = vecs - (w @ vecs) / total
    cov = (vecs * w[:, None]).T @ vecs / total
    return (cov + cov.T) / 2.0


def local_covariance(center: Point, data, kernel: KernelSpec, *,
                     demean: bool = False) -> np.ndarray:
    """Kernel-weighted second moment of log images at the center point.

    Parameters
    ----------
    center : Point
        Base point at which logs are taken.
    data : sequence of Point
        Sample points on the same chart.
    kernel : KernelSpec
        Weighting profile; weights are functions of geodesic distance, i.e.
        of |log_center(x_i)|.
    demean : bool
        When True the weighted tangent mean is subtracted before forming
        outer products.  The fitting algorithm uses the raw moment (False);
        the demeaned form is the classical local PCA used by the variation
        diagnostic.

    Returns
    -------
    (d+1, d+1) symmetric ndarray.  On the sphere chart the matrix annihilates
    the center point.  Raises EmptyNeighborhoodError when no point carries
    weight.
    """
    xs = points_matrix(data)
    if xs.shape[1] != center.ambient_dim:
        raise DimensionMismatchError("data and center have different ambient dimensions")
    return _cov_coords(center.coords, xs, center.chart, kernel, demean)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    for comp in vec:
        if abs(comp) > _SIGN_TOL:
            return -vec if comp < 0 else vec
    return vec


def _top_frame_coords(cov: np.ndarray, base: np.ndarray, chart: str, k: int):
    """Shared core of eigenframe(); returns (rows (k, m), values (k,), degenerate)."""
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    if vals[k - 1] <= _RANK_TOL:
        raise RankDeficientError(
            f"requested {k} directions but eigenvalue {k} is {vals[k - 1]!r}")
    degenerate = bool(len(vals) > k and vals[k - 1] - vals[k] <= _TIE_TOL)
    rows = []
    for j in range(k):
        v = vecs[:, j]
        if chart == SPHERE:
            # protective: genuine tangent covariances already annihilate the base
            v = v - (v @ base) * base
            n = float(np.linalg.norm(v))
            if n < 1e-8:
                raise RankDeficientError("eigenvector nearly normal to the tangent space")
            v = v / n
        rows.append(_fix_sign(v))
    return np.stack(rows), vals[:k].copy(), degenerate


def eigenframe(cov: np.ndarray, base: Point, k: int) -> EigenFrame:
    """Top-k eigenpairs of a symmetric covariance as tangents at base.

    Eigenvalues come out nonincreasing; each eigenvector has its first
    nonzero coordinate made positive so repeated runs are bit-identical.
    Ties within 1e-12 across the k-th boundary set the degenerate flag.
    Raises RankDeficientError when the k-th eigenvalue is <= 1e-12.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if cov.shape[0] != base.ambient_dim:
        raise DimensionMismatchError("covariance and base point dimensions differ")
    if not np.allclose(cov, cov.T, atol=1e-8):
        raise ValueError("covariance must be symmetric")
    if not 1 <= k <= cov.shape[0]:
        raise ValueError(f"k must be between 1 and {cov.shape[0]}")
    rows, vals, degenerate = _top_frame_coords(cov, base.coords, base.chart, k)
    vectors = tuple(Tangent(base, row) for row in rows)
    return EigenFrame(base, vectors, vals, degenerate)


def frechet_mean(data, tol: float = 1e-10, max_iter: int = 200) -> Point:
    """Intrinsic mean by fixed-point iteration p <- exp_p(mean log_p(x_i)).

    Starts from the normalized extrinsic average.  Converges when the
    Riemannian gradient norm |mean log| drops to tol.  Data outside an open
    hemisphere surfaces as HemisphereViolationError; exhausting max_iter
    raises NoConvergenceError.
    """
    seq = list(data)
    xs = points_matrix(seq)
    chart = seq[0].chart
    if chart == FLAT:
        center = xs.mean(axis=0)
    else:
        try:
            center = project_to_sphere(xs.mean(axis=0)).coords
        except ZeroVectorError as exc:
            raise HemisphereViolationError(
                "extrinsic average vanishes; data spans no open hemisphere") from exc
    for _ in range(max_iter):
        try:
            vecs, _ = _log_coords_many(center, xs, chart)
        except AntipodalPairError as exc:
            raise HemisphereViolationError(
                "mean iterate became antipodal to a data point") from exc
        grad = vecs.mean(axis=0)
        if float(np.linalg.norm(grad)) <= tol:
            return Point(center, chart)
        center = _exp_coords(center, grad, chart)
    raise NoConvergenceError(f"Frechet mean did not converge in {max_iter} iterations")


def frechet_variance(center: Point, data) -> float:
    """Mean squared geodesic distance from the center to the data."""
    xs = points_matrix(data)
    if xs.shape[1] != center.ambient_dim:
        raise DimensionMismatchError("data and center have different ambient dimensions")
    _, dists = _log_coords_many(center.coords, xs, center.chart)
    return float(np.mean(dists ** 2))


def subspace_cos_angle(frame_a: EigenFrame, frame_b: EigenFrame) -> float:
    """Cosine of the largest principal angle between two frame spans.

    Computed as the smallest singular value of the k x k matrix of pairwise
    inner products; 1 for equal spans, 0 when some direction of one span is
    orthogonal to all of the other.
    """
    if frame_a.k != frame_b.k:
        raise DimensionMismatchError("frames hold different numbers of directions")
    if frame_a.base.ambient_dim != frame_b.base.ambient_dim:
        raise DimensionMismatchError("frames live in different ambient spaces")
    m = frame_a.basis() @ frame_b.basis().T
    s = np.linalg.svd(m, compute_uv=False)
    return float(min(1.0, max(0.0, s[-1])))


def vector_subspace_cos(v: Tangent, frame: EigenFrame) -> float:
    """|proj_F v| / |v|: 1 when v lies in the span, 0 when orthogonal to it."""
    if v.base.ambient_dim != frame.base.ambient_dim:
        raise DimensionMismatchError("vector and frame live in different ambient spaces")
    n = v.norm
    if n < _ZERO_TOL:
        raise ZeroVectorError("cannot measure the angle of a zero vector")
    coeffs = frame.basis() @ (v.vec / n)
    return float(min(1.0, float(np.linalg.norm(coeffs))))
