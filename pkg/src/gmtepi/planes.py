"""Oriented m-planes, the Grassmannian metric, and plane-coherence checks.

The distance between planes is the operator norm of the difference of
their orthogonal projectors, which coincides with the Hausdorff distance
of their unit balls.  Coherence checks quantify how two planes that both
approximate the same point set at nested scales must be close: at a
common center the bound is ``eps (2 + R/r)``, at a common scale and
nearby centers it is ``6 eps nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OrientedPlane",
    "plane_distance",
    "hausdorff_unit_ball_distance",
    "fit_plane",
    "hausdorff_to_plane_ball",
    "plane_membership_eps",
    "CoherenceReport",
    "plane_coherence_same_center",
]


class OrientedPlane:
    """An m-plane through the origin: an orthonormal frame plus a sign."""

    __slots__ = ("frame", "orientation")

    def __init__(self, frame: np.ndarray, orientation: int = 1):
        f = np.array(frame, dtype=float)
        gram = f @ f.T
        if not np.allclose(gram, np.eye(f.shape[0]), atol=1e-12):
            raise ValueError("frame rows must be orthonormal (within 1e-12)")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        f.flags.writeable = False
        self.frame = f
        self.orientation = orientation

    @classmethod
    def from_span(cls, vectors: np.ndarray, orientation: int = 1) -> "OrientedPlane":
        """Orthonormalize a spanning set (rows) into a plane."""
        q, r = np.linalg.qr(np.asarray(vectors, dtype=float).T)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        return cls((q * signs).T, orientation)

    @classmethod
    def coordinate(cls, n: int, dims: tuple[int, ...]) -> "OrientedPlane":
        f = np.zeros((len(dims), n))
        for row, d in enumerate(dims):
            f[row, d] = 1.0
        return cls(f)

    @property
    def m(self) -> int:
        return self.frame.shape[0]

    @property
    def n(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return self.frame.T @ self.frame

    def project_coords(self, points: np.ndarray) -> np.ndarray:
        """In-plane coordinates of ambient points, shape (..., m)."""
        return np.asarray(points) @ self.frame.T

    def embed(self, coords: np.ndarray) -> np.ndarray:
        """Ambient points of in-plane coordinates, shape (..., n)."""
        return np.asarray(coords) @ self.frame

    def perp_frame(self) -> np.ndarray:
        """Orthonormal basis (rows) of the orthogonal complement."""
        q, _ = np.linalg.qr(np.eye(self.n) - self.projector())
        # keep the n-m columns spanning the complement
        proj = self.projector()
        basis = []
        for col in q.T:
            res = col - proj @ col
            for b in basis:
                res = res - (b @ res) * b
            ln = np.linalg.norm(res)
            if ln > 1e-8:
                basis.append(res / ln)
            if len(basis) == self.n - self.m:
                break
        return np.array(basis)

    def perp_component(self, points: np.ndarray) -> np.ndarray:
        """``pi_{V^perp}(points)`` in ambient coordinates."""
        pts = np.asarray(points)
        return pts - pts @ self.projector()

    def perp_norms(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.perp_component(points), axis=-1)

    def __repr__(self) -> str:  # pragma: no cover
        return f"OrientedPlane(m={self.m}, n={self.n}, orient={self.orientation:+d})"


def align_in_plane_orientation(plane: OrientedPlane, reference: OrientedPlane) -> OrientedPlane:
    """Flip one frame row of ``plane`` if needed so that the projection
    onto ``reference`` is orientation preserving (positive determinant of
    the frame overlap).  Nearby planes are conventionally oriented this
    way."""
    overlap = plane.frame @ reference.frame.T
    if np.linalg.det(overlap) < 0:
        f = plane.frame.copy()
        f[-1] = -f[-1]
        return OrientedPlane(f, plane.orientation)
    return plane


def plane_distance(a: OrientedPlane, b: OrientedPlane) -> float:
    """Operator norm of the projector difference (largest singular value)."""
    if (a.m, a.n) != (b.m, b.n):
        raise ValueError("planes must share m and n")
    return float(np.linalg.norm(a.projector() - b.projector(), 2))


def hausdorff_unit_ball_distance(
    a: OrientedPlane, b: OrientedPlane, samples: int = 256, seed: int = 0
) -> float:
    """Sampled Hausdorff distance of the two unit balls (validation oracle).

    Independent of :func:`plane_distance`; the two agree for planes.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for p, q in ((a, b), (b, a)):
        coords = rng.normal(size=(samples, p.m))
        coords /= np.maximum(np.linalg.norm(coords, axis=1, keepdims=True), 1e-12)
        pts = p.embed(coords)
        # distance to the other plane's unit ball: project, clamp radius
        inplane = q.project_coords(pts)
        norms = np.linalg.norm(inplane, axis=1, keepdims=True)
        clamped = inplane / np.maximum(norms, 1.0)
        best = max(best, float(np.max(np.linalg.norm(pts - q.embed(clamped), axis=1))))
    return best


def fit_plane(points: np.ndarray, m: int, through: np.ndarray | None = None) -> OrientedPlane:
    """Least-squares m-plane through ``through`` (default: the centroid).

    Returns the span of the top-m right singular vectors of the centered
    point cloud, oriented positively.
    """
    pts = np.asarray(points, dtype=float)
    anchor = pts.mean(axis=0) if through is None else np.asarray(through, dtype=float)
    _, _, vt = np.linalg.svd(pts - anchor, full_matrices=False)
    return OrientedPlane(vt[:m])


def hausdorff_to_plane_ball(
    points: np.ndarray,
    x: np.ndarray,
    r: float,
    plane: OrientedPlane,
    grid: int = 24,
) -> float:
    """Two-sided Hausdorff distance between ``points ∩ B(x,r)`` and
    ``(x + plane) ∩ B(x,r)``.

    Point-to-plane-ball distances are exact; the reverse direction uses a
    deterministic polar grid on the plane ball (spacing ~ r/grid).
    """
    x = np.asarray(x, dtype=float)
    pts = np.asarray(points, dtype=float)
    keep = np.linalg.norm(pts - x, axis=1) <= r
    pts = pts[keep]
    if len(pts) == 0:
        return r  # empty support in the window counts as maximally far
    rel = pts - x
    inplane = plane.project_coords(rel)
    norms = np.linalg.norm(inplane, axis=1, keepdims=True)
    clamped = inplane / np.maximum(norms / r, 1.0)
    d1 = float(np.max(np.linalg.norm(rel - plane.embed(clamped), axis=1)))
    # plane ball -> support
    if plane.m == 1:
        coords = np.linspace(-r, r, 2 * grid + 1)[:, None]
    else:
        rows = [np.zeros((1, plane.m))]
        for k in range(1, grid + 1):
            rad = r * k / grid
            count = max(6, int(round(2 * math.pi * k)))
            ang = 2 * math.pi * np.arange(count) / count
            rows.append(rad * np.stack([np.cos(ang), np.sin(ang)], axis=1))
        coords = np.vstack(rows)
    ball_pts = x + plane.embed(coords)
    d2 = 0.0
    for bp in ball_pts:
        d2 = max(d2, float(np.min(np.linalg.norm(pts - bp, axis=1))))
    return max(d1, d2)


def plane_membership_eps(
    points: np.ndarray, x: np.ndarray, r: float, plane: OrientedPlane, grid: int = 24
) -> float:
    """The smallest eps with ``d_H(S ∩ B(x,r), (x+V) ∩ B(x,r)) <= eps r``."""
    return hausdorff_to_plane_ball(points, x, r, plane, grid) / r


@dataclass
class CoherenceReport:
    """Result of a nested-scale plane-coherence check."""

    measured: float
    bound: float
    eps_r: float
    eps_R: float
    ok: bool


def plane_coherence_same_center(
    points: np.ndarray,
    x: np.ndarray,
    r: float,
    R: float,
    eps: float,
    plane_r: OrientedPlane | None = None,
    plane_R: OrientedPlane | None = None,
    grid: int = 24,
) -> CoherenceReport:
    """Check the same-center two-scale coherence bound ``eps (2 + R/r)``.

    Fits planes at the two scales when not supplied, verifies that both
    are eps-admissible for the point set, and compares their distance to
    the bound.  Raises when no admissible plane exists at a scale.
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    x = np.asarray(x, dtype=float)
    pts = np.asarray(points, dtype=float)
    planes = []
    eps_found = []
    for radius, given in ((r, plane_r), (R, plane_R)):
        keep = np.linalg.norm(pts - x, axis=1) <= radius
        if given is None:
            if keep.sum() < 1:
                raise ValueError(f"no points of S inside B(x, {radius})")
            given = fit_plane(pts[keep], m=_infer_m(plane_r, plane_R, pts), through=x)
        e = plane_membership_eps(pts, x, radius, given, grid)
        if e > eps:
            raise ValueError(
                f"no admissible plane at scale {radius}: measured eps {e:.3g} > {eps:.3g}"
            )
        planes.append(given)
        eps_found.append(e)
    measured = plane_distance(planes[0], planes[1])
    bound = eps * (2.0 + R / r)
    return CoherenceReport(measured, bound, eps_found[0], eps_found[1], measured <= bound)


def _infer_m(a: OrientedPlane | None, b: OrientedPlane | None, pts: np.ndarray) -> int:
    if a is not None:
        return a.m
    if b is not None:
        return b.m
    return 1 if pts.shape[1] <= 2 else 2
