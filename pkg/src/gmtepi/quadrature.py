"""Exact integration of low-degree polynomials over simplices and disk clips.

Everything downstream (masses, excesses, second moments, the moment
polynomials of degree four) integrates polynomials over either

* a whole ``m``-simplex,
* a simplex intersected with a ball, for ``m <= 2``.

The first is handled by fixed symmetric quadrature rules exact to degree
five.  The second is reduced to the plane of the simplex, where the ball
cuts a disk: the intersection region is split per edge into signed chord
triangles plus signed circular sectors (a Green's-theorem decomposition,
so no explicit region assembly is needed), and monomials are integrated
exactly on both kinds of pieces.  No sampling noise enters anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "gauss_segment",
    "triangle_rule",
    "integrate_over_simplex",
    "simplex_volume",
    "trig_monomial_integral",
    "disk_polygon_monomials",
    "disk_polygon_area",
    "BallMoments",
    "simplex_ball_moments",
    "simplex_ball_mass",
]

_SQRT15 = math.sqrt(15.0)

# 3-point Gauss-Legendre on [0,1]; exact for degree <= 5.
_GAUSS3_NODES = np.array(
    [0.5 - math.sqrt(3.0 / 5.0) / 2.0, 0.5, 0.5 + math.sqrt(3.0 / 5.0) / 2.0]
)
_GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])

# Radon 7-point rule on the triangle, barycentric coordinates; degree 5.
_A1 = (6.0 - _SQRT15) / 21.0
_A2 = (6.0 + _SQRT15) / 21.0
_W1 = (155.0 - _SQRT15) / 1200.0
_W2 = (155.0 + _SQRT15) / 1200.0
_TRI_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _A1, 1 - 2 * _A1],
        [_A1, 1 - 2 * _A1, _A1],
        [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2],
        [_A2, 1 - 2 * _A2, _A2],
        [1 - 2 * _A2, _A2, _A2],
    ]
)
_TRI_WEIGHTS = np.array([9.0 / 40.0, _W1, _W1, _W1, _W2, _W2, _W2])


def gauss_segment() -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the 3-point Gauss rule on [0, 1]."""
    return _GAUSS3_NODES.copy(), _GAUSS3_WEIGHTS.copy()


def triangle_rule() -> tuple[np.ndarray, np.ndarray]:
    """Barycentric nodes and unit-sum weights of the degree-5 triangle rule."""
    return _TRI_BARY.copy(), _TRI_WEIGHTS.copy()


def simplex_volume(vertices: np.ndarray) -> float:
    """Unsigned m-volume of a simplex in R^n via the Gram determinant."""
    edges = vertices[1:] - vertices[0]
    m = edges.shape[0]
    if m == 0:
        return 1.0
    gram = edges @ edges.T
    det = np.linalg.det(gram)
    if det <= 0.0:
        return 0.0
    return math.sqrt(det) / math.factorial(m)


def integrate_over_simplex(f, vertices: np.ndarray, volume: float | None = None) -> float:
    """Integrate ``f`` over a simplex, exactly for polynomials of degree <= 5.

    Parameters
    ----------
    f : callable
        Maps an array of points (k, n) to an array of k values.
    vertices : (m+1, n) array
        Simplex vertices; m in {1, 2}.
    volume : float, optional
        Precomputed (possibly signed) m-volume.  A negative value yields a
        signed integral, which is what the disk-clip decomposition needs.
    """
    m = vertices.shape[0] - 1
    if volume is None:
        volume = simplex_volume(vertices)
    if volume == 0.0:
        return 0.0
    if m == 1:
        pts = np.outer(1.0 - _GAUSS3_NODES, vertices[0]) + np.outer(_GAUSS3_NODES, vertices[1])
        return float(volume * np.dot(_GAUSS3_WEIGHTS, f(pts)))
    if m == 2:
        pts = _TRI_BARY @ vertices
        return float(volume * np.dot(_TRI_WEIGHTS, f(pts)))
    raise NotImplementedError(f"no quadrature rule for m={m}")


def trig_monomial_integral(a: int, b: int, phi0: float, dphi: float) -> float:
    """Exact ``int_{phi0}^{phi0+dphi} cos^a(t) sin^b(t) dt``.

    Expands the integrand in complex exponentials; coefficients are small
    rationals so the evaluation is exact to rounding.
    """
    # cos^a sin^b = 2^-(a+b) (i)^-b sum_{j,k} C(a,j)C(b,k)(-1)^(b-k) e^{i(2j+2k-a-b)t}
    coeffs: dict[int, complex] = {}
    pref = (0.5 ** (a + b)) * (1j ** (-b))
    for j in range(a + 1):
        cj = math.comb(a, j)
        for k in range(b + 1):
            ck = math.comb(b, k) * ((-1) ** (b - k))
            freq = 2 * j + 2 * k - a - b
            coeffs[freq] = coeffs.get(freq, 0.0) + pref * cj * ck
    total = 0.0 + 0.0j
    phi1 = phi0 + dphi
    for freq, c in coeffs.items():
        if freq == 0:
            total += c * dphi
        else:
            total += c * (np.exp(1j * freq * phi1) - np.exp(1j * freq * phi0)) / (1j * freq)
    return float(total.real)


def _edge_pieces(p: np.ndarray, q: np.ndarray, radius: float):
    """Split one directed edge (coords relative to the disk center) into
    parameter intervals inside / outside the disk."""
    d = q - p
    aa = float(d @ d)
    if aa <= 1e-30:
        return []
    bb = 2.0 * float(p @ d)
    cc = float(p @ p) - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    if disc <= 0.0:
        return [(0.0, 1.0, cc <= 0.0)]
    sq = math.sqrt(disc)
    t1 = (-bb - sq) / (2.0 * aa)
    t2 = (-bb + sq) / (2.0 * aa)
    lo = max(0.0, min(1.0, t1))
    hi = max(0.0, min(1.0, t2))
    pieces = []
    if lo > 1e-15:
        pieces.append((0.0, lo, False))
    if hi - lo > 1e-15:
        pieces.append((lo, hi, True))
    if 1.0 - hi > 1e-15:
        pieces.append((hi, 1.0, False))
    if not pieces:
        pieces.append((0.0, 1.0, cc <= 0.0))
    return pieces


def disk_clip_pieces(poly: np.ndarray, center: np.ndarray, radius: float):
    """Green's-theorem decomposition of ``poly ∩ disk(center, radius)``.

    Returns ``(triangles, sectors)`` where each triangle is a signed
    (3, 2) vertex array (vertex 0 at the disk center) and each sector is a
    signed angular interval ``(phi0, dphi)``.  The signed integral of any
    function over the pieces equals its integral over the intersection
    region, with the sign of the polygon's orientation.
    """
    center = np.asarray(center, dtype=float)
    k = poly.shape[0]
    triangles = []
    sectors = []
    for i in range(k):
        p = poly[i] - center
        q = poly[(i + 1) % k] - center
        for ta, tb, inside in _edge_pieces(p, q, radius):
            xa = p + ta * (q - p)
            xb = p + tb * (q - p)
            if inside:
                if abs(xa[0] * xb[1] - xa[1] * xb[0]) > 1e-30:
                    triangles.append(np.array([center, center + xa, center + xb]))
            else:
                dot = float(xa @ xb)
                crs = float(xa[0] * xb[1] - xa[1] * xb[0])
                dphi = math.atan2(crs, dot)
                if abs(dphi) > 1e-15:
                    sectors.append((math.atan2(xa[1], xa[0]), dphi))
    return triangles, sectors


def _signed_area2(tri: np.ndarray) -> float:
    u = tri[1] - tri[0]
    v = tri[2] - tri[0]
    return 0.5 * (u[0] * v[1] - u[1] * v[0])


def disk_polygon_area(poly: np.ndarray, center: np.ndarray, radius: float) -> float:
    """Exact (signed) area of polygon ∩ disk; positive for a CCW polygon."""
    triangles, sectors = disk_clip_pieces(poly, center, radius)
    area = sum(_signed_area2(t) for t in triangles)
    area += sum(0.5 * radius * radius * dphi for _, dphi in sectors)
    return float(area)


def disk_polygon_monomials(
    poly: np.ndarray, center: np.ndarray, radius: float, degree: int = 4
) -> np.ndarray:
    """Exact integrals ``M[a, b] = ∫_{poly∩disk} x^a y^b`` for a+b <= degree.

    Coordinates are the global 2D coordinates that ``poly`` and ``center``
    are expressed in.  Signed like :func:`disk_polygon_area`.
    """
    triangles, sectors = disk_clip_pieces(poly, center, radius)
    M = np.zeros((degree + 1, degree + 1))
    for tri in triangles:
        sa = _signed_area2(tri)
        if sa == 0.0:
            continue
        pts = _TRI_BARY @ tri
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                vals = pts[:, 0] ** a * pts[:, 1] ** b
                M[a, b] += sa * float(np.dot(_TRI_WEIGHTS, vals))
    if sectors:
        cx, cy = float(center[0]), float(center[1])
        ang = np.zeros((degree + 1, degree + 1))
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                ang[i, j] = sum(
                    trig_monomial_integral(i, j, phi0, dphi) for phi0, dphi in sectors
                )
        # Central sector moments, then binomial shift to global coordinates.
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                acc = 0.0
                for i in range(a + 1):
                    ci = math.comb(a, i) * cx ** (a - i)
                    for j in range(b + 1):
                        cj = math.comb(b, j) * cy ** (b - j)
                        radial = radius ** (i + j + 2) / (i + j + 2)
                        acc += ci * cj * radial * ang[i, j]
                M[a, b] += acc
    return M


@dataclass
class BallMoments:
    """Exact moments of Lebesgue measure on ``simplex ∩ B(x, r)``.

    All quantities are relative to the ball center ``x``: with
    ``y' = y - x``,

    * ``s0``   -- measure of the region,
    * ``s1``   -- ``∫ y'``,
    * ``s2``   -- ``∫ y' y'^T``,
    * ``t2``   -- ``∫ |y'|^2``,
    * ``u3``   -- ``∫ y' |y'|^2``,
    * ``t4``   -- ``∫ |y'|^4``.
    """

    s0: float
    s1: np.ndarray
    s2: np.ndarray
    t2: float
    u3: np.ndarray
    t4: float

    @staticmethod
    def zero(n: int) -> "BallMoments":
        return BallMoments(0.0, np.zeros(n), np.zeros((n, n)), 0.0, np.zeros(n), 0.0)

    def __iadd__(self, other: "BallMoments") -> "BallMoments":
        self.s0 += other.s0
        self.s1 += other.s1
        self.s2 += other.s2
        self.t2 += other.t2
        self.u3 += other.u3
        self.t4 += other.t4
        return self

    def scaled(self, w: float) -> "BallMoments":
        return BallMoments(
            w * self.s0, w * self.s1, w * self.s2, w * self.t2, w * self.u3, w * self.t4
        )


def _plane_frame(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the simplex's affine hull (rows), anchored at v0."""
    edges = (vertices[1:] - vertices[0]).T  # (n, m)
    q, r = np.linalg.qr(edges)
    # Fix signs so the frame is deterministic.
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs).T, vertices[0]


def simplex_ball_moments(
    vertices: np.ndarray, center: np.ndarray, radius: float
) -> BallMoments:
    """Exact :class:`BallMoments` of an m-simplex (m <= 2) against a ball."""
    m = vertices.shape[0] - 1
    n = vertices.shape[1]
    center = np.asarray(center, dtype=float)
    if m == 1:
        return _segment_ball_moments(vertices, center, radius)
    if m != 2:
        raise NotImplementedError(f"exact ball moments need m<=2, got m={m}")
    frame, base = _plane_frame(vertices)
    rel = center - base
    a_in = frame @ rel  # in-plane coordinates of the center's foot
    h2 = float(rel @ rel - a_in @ a_in)  # squared distance center-to-plane
    if h2 < 0.0:
        h2 = 0.0
    r2 = radius * radius - h2
    if r2 <= 0.0:
        return BallMoments.zero(n)
    rho = math.sqrt(r2)
    poly = (vertices - base) @ frame.T  # (3, 2) in-plane vertices
    # Work in in-plane coordinates centered at the foot point; flip a
    # clockwise polygon so the moments come out unsigned.
    M = disk_polygon_monomials(poly - a_in, np.zeros(2), rho, degree=4)
    if M[0, 0] < 0:
        M = -M
    # Out-of-plane offset from the center to its foot, orthogonal to the plane.
    hvec = -(rel - frame.T @ a_in)  # foot - center, ambient
    E = frame.T  # (n, 2)
    s0 = M[0, 0]
    m1 = np.array([M[1, 0], M[0, 1]])
    M2 = np.array([[M[2, 0], M[1, 1]], [M[1, 1], M[0, 2]]])
    tr2 = M[2, 0] + M[0, 2]
    m3 = np.array([M[3, 0] + M[1, 2], M[2, 1] + M[0, 3]])
    tr4 = M[4, 0] + 2.0 * M[2, 2] + M[0, 4]
    s1 = hvec * s0 + E @ m1
    s2 = (
        np.outer(hvec, hvec) * s0
        + np.outer(hvec, E @ m1)
        + np.outer(E @ m1, hvec)
        + E @ M2 @ E.T
    )
    t2 = h2 * s0 + tr2
    u3 = hvec * (h2 * s0 + tr2) + E @ (h2 * m1 + m3)
    t4 = h2 * h2 * s0 + 2.0 * h2 * tr2 + tr4
    return BallMoments(s0, s1, s2, t2, u3, t4)


def _segment_ball_moments(
    vertices: np.ndarray, center: np.ndarray, radius: float
) -> BallMoments:
    n = vertices.shape[1]
    p = vertices[0] - center
    d = vertices[1] - vertices[0]
    aa = float(d @ d)
    if aa <= 1e-30:
        return BallMoments.zero(n)
    bb = 2.0 * float(p @ d)
    cc = float(p @ p) - radius * radius
    disc = bb * bb - 4.0 * aa * cc
    if disc <= 0.0:
        if cc > 0.0:
            return BallMoments.zero(n)
        t1, t2_ = 0.0, 1.0
    else:
        sq = math.sqrt(disc)
        t1 = max(0.0, (-bb - sq) / (2.0 * aa))
        t2_ = min(1.0, (-bb + sq) / (2.0 * aa))
        if t2_ <= t1:
            return BallMoments.zero(n)
    length = math.sqrt(aa) * (t2_ - t1)
    ts = t1 + (t2_ - t1) * _GAUSS3_NODES
    pts = p[None, :] + ts[:, None] * d[None, :]
    w = _GAUSS3_WEIGHTS * length
    norms2 = np.einsum("ij,ij->i", pts, pts)
    return BallMoments(
        float(np.sum(w)),
        pts.T @ w,
        np.einsum("i,ij,ik->jk", w, pts, pts),
        float(np.dot(w, norms2)),
        pts.T @ (w * norms2),
        float(np.dot(w, norms2 * norms2)),
    )


def simplex_ball_mass(vertices: np.ndarray, center: np.ndarray, radius: float) -> float:
    """Exact m-volume of ``simplex ∩ B(center, radius)`` for m <= 2."""
    m = vertices.shape[0] - 1
    center = np.asarray(center, dtype=float)
    if m == 1:
        return _segment_ball_moments(vertices, center, radius).s0
    if m == 2:
        frame, base = _plane_frame(vertices)
        rel = center - base
        a_in = frame @ rel
        h2 = float(rel @ rel - a_in @ a_in)
        r2 = radius * radius - max(h2, 0.0)
        if r2 <= 0.0:
            return 0.0
        poly = (vertices - base) @ frame.T
        return abs(disk_polygon_area(poly - a_in, np.zeros(2), math.sqrt(r2)))
    raise NotImplementedError(f"exact ball mass needs m<=2, got m={m}")
