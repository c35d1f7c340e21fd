"""Layer decomposition of a chain over a base plane, and cylindrical excess.

A chain in general position with respect to a base plane ``V`` is a
finite stack of affine graphs: every simplex projects injectively and
orientation-preservingly onto ``V`` and is therefore the graph of an
affine map from its projected domain into ``V^perp``.  This module
recovers those maps, checks that the stalk sum of coefficients is a
constant ``g0`` (the constancy property of the projection), and measures
the cylindrical excess

    Exc(T, V, B) = M(T over the cylinder of B) - ||g0|| vol(B),

exactly: each term is a constant Jacobian times an exact polygon-disk
intersection area.  Multiplicity statistics on the overlap set ``E2``
are computed from pairwise domain intersections with an inclusion-
exclusion truncation at triples (the truncation residual is reported).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chains import PolyChain
from .groups import NormedCoefficient, group_add, group_norm, zero
from .planes import OrientedPlane
from .quadrature import disk_polygon_area

__all__ = [
    "GeneralPositionError",
    "align_base_to_chain",
    "cylindrical_excess_polygon",
    "ConstancyError",
    "Layer",
    "LayerDecomposition",
    "decompose_layers",
    "cylindrical_excess",
    "size_excess",
    "MultiplicityReport",
    "multiplicity_stats",
    "height_sup",
]


class GeneralPositionError(ValueError):
    """A simplex fails to project injectively and orientation-preservingly."""


def align_base_to_chain(base: OrientedPlane, chain: PolyChain) -> OrientedPlane:
    """Flip one frame row if the chain projects orientation-reversingly.

    Plane selection from a quadratic form fixes no in-plane handedness, so
    graph decompositions align the base to the chain first."""
    for simplex, _ in chain.terms:
        dom = simplex.vertices @ base.frame.T
        if dom.shape[1] != 2:
            return base
        det = float(
            (dom[1, 0] - dom[0, 0]) * (dom[2, 1] - dom[0, 1])
            - (dom[1, 1] - dom[0, 1]) * (dom[2, 0] - dom[0, 0])
        )
        if abs(det) < 1e-14:
            continue
        if det * base.orientation < 0:
            f = base.frame.copy()
            f[-1] = -f[-1]
            return OrientedPlane(f, base.orientation)
        return base
    return base


class ConstancyError(ValueError):
    """The stalk coefficient sum is inconsistent across base points."""


@dataclass
class Layer:
    """One affine graph layer: ``y(x) = A x + b`` over a projected domain."""

    domain: np.ndarray  # (m+1, m) projected simplex, base coordinates
    A: np.ndarray  # (n-m, m)
    b: np.ndarray  # (n-m,)
    coeff: NormedCoefficient

    def height(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b

    def jacobian_sq(self) -> float:
        """``(J y)^2 = det(I + A^T A) - 1`` of the constant differential."""
        m = self.A.shape[1]
        return float(np.linalg.det(np.eye(m) + self.A.T @ self.A) - 1.0)

    def grad_hs_norm(self) -> float:
        return float(np.linalg.norm(self.A, "fro"))

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        return _bary_inside(self.domain, x, tol)


def _bary_inside(domain: np.ndarray, x: np.ndarray, tol: float) -> bool:
    m = domain.shape[1]
    if m == 1:
        lo, hi = sorted((float(domain[0, 0]), float(domain[1, 0])))
        return lo - tol <= float(x[0]) <= hi + tol
    T = np.column_stack([domain[1] - domain[0], domain[2] - domain[0]])
    try:
        lam = np.linalg.solve(T, np.asarray(x) - domain[0])
    except np.linalg.LinAlgError:
        return False
    l0 = 1.0 - lam.sum()
    return bool(lam[0] >= -tol and lam[1] >= -tol and l0 >= -tol)


@dataclass
class LayerDecomposition:
    """Stack of affine graph layers over a base plane."""

    base: OrientedPlane
    perp: np.ndarray  # (n-m, n) orthonormal complement frame
    layers: list[Layer]
    g0: NormedCoefficient
    g0_norm: float

    @property
    def m(self) -> int:
        return self.base.m

    def layers_at(self, x: np.ndarray, tol: float = 1e-12) -> list[Layer]:
        return [ly for ly in self.layers if ly.contains(x, tol)]

    def stalk_sum(self, x: np.ndarray, tol: float = 1e-12) -> NormedCoefficient:
        acc = zero(self.g0.spec)
        for ly in self.layers_at(x, tol):
            acc = group_add(acc, ly.coeff)
        return acc


def _constancy_nodes(layers: list[Layer], m: int, radius: float) -> list[np.ndarray]:
    """Deterministic query points: a polar grid, domain barycenters, and
    points adjacent to pairwise edge crossings of the projected domains
    (the arrangement-cell samples for m <= 2)."""
    nodes: list[np.ndarray] = []
    if m == 1:
        for t in np.linspace(-radius, radius, 41):
            nodes.append(np.array([t]))
        cuts = sorted({float(v[0]) for ly in layers for v in ly.domain})
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a > 1e-12:
                nodes.append(np.array([0.5 * (a + b)]))
        return [p for p in nodes if abs(p[0]) <= radius]
    for k in range(1, 7):
        rad = radius * (k - 0.5) / 6.5
        count = 6 * k
        ang = 2 * math.pi * (np.arange(count) + 0.5) / count
        for a in ang:
            nodes.append(rad * np.array([math.cos(a), math.sin(a)]))
    nodes.append(np.zeros(2) + 1e-7)
    for ly in layers:
        nodes.append(ly.domain.mean(axis=0))
    p0 = np.array([ly.domain[i] for ly in layers for i in range(3)])
    p1 = np.array([ly.domain[(i + 1) % 3] for ly in layers for i in range(3)])
    # sample the cells around every pairwise edge crossing (vectorized Cramer)
    e = p1 - p0
    ne = len(p0)
    iu, ju = np.triu_indices(ne, k=1)
    d1, d2 = e[iu], -e[ju]
    rhs = p0[ju] - p0[iu]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    ok = np.abs(det) > 1e-14
    s = np.where(ok, (rhs[:, 0] * d2[:, 1] - rhs[:, 1] * d2[:, 0]) / np.where(ok, det, 1.0), -1)
    t = np.where(ok, (d1[:, 0] * rhs[:, 1] - d1[:, 1] * rhs[:, 0]) / np.where(ok, det, 1.0), -1)
    hit = ok & (s >= -1e-9) & (s <= 1 + 1e-9) & (t >= -1e-9) & (t <= 1 + 1e-9)
    crossings = p0[iu[hit]] + s[hit, None] * e[iu[hit]]
    if len(crossings):
        # crossings repeat heavily (every ray pair of a cone meets at 0)
        crossings = np.unique(np.round(crossings / 1e-9) * 1e-9, axis=0)
        if len(crossings) > 400:
            step = len(crossings) // 400 + 1
            crossings = crossings[::step]
    offsets = 1e-6 * np.array([(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)], dtype=float)
    for cross in crossings:
        for off in offsets:
            nodes.append(cross + off)
    return [p for p in nodes if np.linalg.norm(p) <= radius]


def decompose_layers(
    chain: PolyChain,
    base: OrientedPlane,
    radius: float = 1.0,
    check_constancy: bool = True,
    boundary_tol: float = 1e-9,
) -> LayerDecomposition:
    """Express a general-position chain as a stack of affine graphs over
    ``base`` and determine the constant stalk coefficient ``g0``.

    Raises :class:`GeneralPositionError` if some simplex projects
    degenerately or orientation-reversingly, and :class:`ConstancyError`
    if the stalk sum differs between interior query points within the
    disk of the given radius.
    """
    if base.n != chain.n or base.m != chain.m:
        raise ValueError("base plane shape mismatch")
    m = chain.m
    perp = base.perp_frame()
    layers = []
    for simplex, coeff in chain.terms:
        dom = base.project_coords(simplex.vertices)
        edges = (dom[1:] - dom[0]).T  # (m, m)
        det = float(np.linalg.det(edges))
        vol_dom = abs(det) / math.factorial(m)
        if vol_dom < 1e-14 * max(simplex.volume, 1e-30):
            raise GeneralPositionError("projected simplex is degenerate")
        if det * base.orientation <= 0:
            raise GeneralPositionError("projection is orientation reversing")
        heights = simplex.vertices @ perp.T  # (m+1, n-m)
        # affine solve from the m+1 vertex correspondences
        X = np.column_stack([dom, np.ones(m + 1)])
        sol = np.linalg.solve(X, heights)  # (m+1, n-m)
        A = sol[:m].T
        b = sol[m]
        layers.append(Layer(dom, A, b, coeff))

    g0 = zero(chain.group)
    if check_constancy and layers:
        g0_seen: NormedCoefficient | None = None
        for node in _constancy_nodes(layers, m, radius):
            if _near_any_boundary(layers, node, boundary_tol):
                continue
            acc = zero(chain.group)
            hit = False
            for ly in layers:
                if ly.contains(node, 0.0):
                    acc = group_add(acc, ly.coeff)
                    hit = True
            if not hit:
                raise ConstancyError(f"no layer covers base point {node} (hole)")
            if g0_seen is None:
                g0_seen = acc
            elif acc != g0_seen:
                raise ConstancyError(
                    f"stalk sum differs across base points: {g0_seen} vs {acc}"
                )
        if g0_seen is not None:
            g0 = g0_seen
    return LayerDecomposition(base, perp, layers, g0, group_norm(g0))


def _near_any_boundary(layers: list[Layer], x: np.ndarray, tol: float) -> bool:
    for ly in layers:
        d = ly.domain
        k = d.shape[0]
        if d.shape[1] == 1:
            # 1-dim domains: the boundary is the endpoint pair
            if min(abs(float(x[0]) - float(d[0, 0])), abs(float(x[0]) - float(d[1, 0]))) < tol:
                return True
            continue
        for i in range(k):
            p, q = d[i], d[(i + 1) % k]
            e = q - p
            ln2 = float(e @ e)
            if ln2 < 1e-30:
                continue
            t = float(np.clip((x - p) @ e / ln2, 0.0, 1.0))
            if np.linalg.norm(x - (p + t * e)) < tol:
                return True
    return False


def _domain_disk_area(domain: np.ndarray, center: np.ndarray, radius: float, m: int) -> float:
    if m == 1:
        lo, hi = sorted((float(domain[0, 0]), float(domain[1, 0])))
        c = float(center[0])
        return max(0.0, min(hi, c + radius) - max(lo, c - radius))
    return abs(disk_polygon_area(domain, center, radius))


def _ball_volume(m: int, radius: float) -> float:
    if m == 1:
        return 2.0 * radius
    return math.pi * radius * radius


def cylindrical_excess(
    decomp: LayerDecomposition,
    center: np.ndarray | None = None,
    radius: float = 1.0,
) -> float:
    """Exact mass excess of the stack over the cylinder of a base ball.

    ``sum_i ||g_i|| sqrt(1 + (J y^i)^2) vol(D_i ∩ B) - ||g0|| vol(B)``;
    nonnegative and additive over disjoint base regions.  Requires a
    nonzero stalk coefficient (``g0 = 0`` after cancellation leaves the
    excess meaningless and is rejected).
    """
    if decomp.g0.is_zero:
        raise ConstancyError("stalk coefficient g0 is zero; excess undefined")
    m = decomp.m
    c = np.zeros(m) if center is None else np.asarray(center, dtype=float)
    total = 0.0
    for ly in decomp.layers:
        area = _domain_disk_area(ly.domain, c, radius, m)
        if area > 0.0:
            total += group_norm(ly.coeff) * math.sqrt(1.0 + ly.jacobian_sq()) * area
    return total - decomp.g0_norm * _ball_volume(m, radius)


def cylindrical_excess_polygon(decomp: LayerDecomposition, poly: np.ndarray) -> float:
    """Exact mass excess over the cylinder of a convex polygon region.

    Used for exact additivity checks (polygon regions partition exactly
    under half-plane cuts) and for zone measurements that must share one
    region between two chains."""
    if decomp.g0.is_zero:
        raise ConstancyError("stalk coefficient g0 is zero; excess undefined")
    total = 0.0
    for ly in decomp.layers:
        clipped = _convex_clip(ly.domain, poly)
        if clipped is None or len(clipped) < 3:
            continue
        arr = np.array(clipped)
        area = 0.0
        for i in range(1, len(arr) - 1):
            ua, ub = arr[i] - arr[0], arr[i + 1] - arr[0]
            area += 0.5 * abs(float(ua[0] * ub[1] - ua[1] * ub[0]))
        total += group_norm(ly.coeff) * math.sqrt(1.0 + ly.jacobian_sq()) * area
    poly_area = 0.0
    for i in range(1, len(poly) - 1):
        ua, ub = poly[i] - poly[0], poly[i + 1] - poly[0]
        poly_area += 0.5 * abs(float(ua[0] * ub[1] - ua[1] * ub[0]))
    return total - decomp.g0_norm * poly_area


def size_excess(
    decomp: LayerDecomposition,
    center: np.ndarray | None = None,
    radius: float = 1.0,
) -> float:
    """Excess of the carrier's Hausdorff volume over the base ball volume."""
    m = decomp.m
    c = np.zeros(m) if center is None else np.asarray(center, dtype=float)
    total = 0.0
    for ly in decomp.layers:
        area = _domain_disk_area(ly.domain, c, radius, m)
        if area > 0.0:
            total += math.sqrt(1.0 + ly.jacobian_sq()) * area
    return total - _ball_volume(m, radius)


@dataclass
class MultiplicityReport:
    """Overlap statistics on the multi-layer set ``E2`` in the base ball.

    ``bounds_asserted`` is only set when the stated hypotheses hold; the
    truncation residual bounds the inclusion-exclusion error from
    overlaps of order four and higher.
    """

    e2_measure: float
    int_count: float
    int_coeff_norm: float
    mass_excess: float
    size_excess: float
    eps_mass: float
    truncation_residual: float
    density_hypothesis: bool
    hypotheses_ok: bool
    bound_count: float = 0.0
    bound_coeff: float = 0.0
    bound_size: float = 0.0
    notes: list[str] = field(default_factory=list)


def _pair_area(d1: np.ndarray, d2: np.ndarray, center: np.ndarray, radius: float, m: int) -> float:
    if m == 1:
        lo1, hi1 = sorted((float(d1[0, 0]), float(d1[1, 0])))
        lo2, hi2 = sorted((float(d2[0, 0]), float(d2[1, 0])))
        c = float(center[0])
        return max(0.0, min(hi1, hi2, c + radius) - max(lo1, lo2, c - radius))
    poly = _convex_clip(d1, d2)
    if poly is None or len(poly) < 3:
        return 0.0
    return abs(disk_polygon_area(np.array(poly), center, radius))


def _convex_clip(subject: np.ndarray, clipper: np.ndarray) -> list[np.ndarray] | None:
    """Sutherland-Hodgman clip of one convex polygon by another."""
    poly = [np.array(p, dtype=float) for p in subject]
    k = clipper.shape[0]
    cc = clipper.mean(axis=0)
    for i in range(k):
        a, b = clipper[i], clipper[(i + 1) % k]
        e = b - a
        normal = np.array([-e[1], e[0]])
        if (cc - a) @ normal < 0:
            normal = -normal
        out: list[np.ndarray] = []
        for j in range(len(poly)):
            p, q = poly[j], poly[(j + 1) % len(poly)]
            dp = (p - a) @ normal
            dq = (q - a) @ normal
            if dp >= -1e-14:
                out.append(p)
                if dq < -1e-14:
                    out.append(p + (q - p) * (dp / (dp - dq)))
            elif dq >= -1e-14:
                out.append(p + (q - p) * (dp / (dp - dq)))
        poly = out
        if len(poly) < 3:
            return None
    return poly


def multiplicity_stats(
    decomp: LayerDecomposition,
    eps_mass: float,
    center: np.ndarray | None = None,
    radius: float = 1.0,
) -> MultiplicityReport:
    """Estimate the overlap region and its integrals, and check the
    multiplicity bounds ``2 eps`` / ``3 ||g0|| eps`` / ``5 eps``.

    The hypotheses (mass excess at most ``||g0|| eps_mass``, all layer
    coefficients at least three quarters of ``||g0||``) are verified; on
    failure the report carries the measurements but no asserted bounds.
    """
    m = decomp.m
    c = np.zeros(m) if center is None else np.asarray(center, dtype=float)
    mu = cylindrical_excess(decomp, c, radius)
    sig = size_excess(decomp, c, radius)
    layers = decomp.layers
    k = len(layers)
    pair_total = 0.0
    pair_per = np.zeros(k)
    triple_total = 0.0
    triple_per = np.zeros(k)
    for i in range(k):
        for j in range(i + 1, k):
            a = _pair_area(layers[i].domain, layers[j].domain, c, radius, m)
            if a <= 0:
                continue
            pair_total += a
            pair_per[i] += a
            pair_per[j] += a
            if m == 2:
                for l in range(j + 1, k):
                    clipped = _convex_clip(layers[i].domain, layers[j].domain)
                    if clipped is None:
                        continue
                    t = _pair_area(np.array(clipped), layers[l].domain, c, radius, m)
                    if t > 0:
                        triple_total += t
                        triple_per[i] += t
                        triple_per[j] += t
                        triple_per[l] += t
    e2 = max(0.0, pair_total - 2.0 * triple_total)
    int_count = max(0.0, 2.0 * pair_total - 3.0 * triple_total)
    int_coeff = 0.0
    for i in range(k):
        w = group_norm(layers[i].coeff)
        int_coeff += w * max(0.0, pair_per[i] - triple_per[i])
    g0n = decomp.g0_norm
    density_ok = all(group_norm(ly.coeff) >= 0.75 * g0n - 1e-12 for ly in layers)
    mass_ok = mu <= g0n * eps_mass + 1e-12
    report = MultiplicityReport(
        e2_measure=e2,
        int_count=int_count,
        int_coeff_norm=int_coeff,
        mass_excess=mu,
        size_excess=sig,
        eps_mass=eps_mass,
        truncation_residual=triple_total,
        density_hypothesis=density_ok,
        hypotheses_ok=density_ok and mass_ok,
    )
    if not mass_ok:
        report.notes.append("mass excess exceeds ||g0|| eps_mass; bounds not asserted")
    if not density_ok:
        report.notes.append("layer coefficient below (3/4)||g0||; bounds not asserted")
    if report.hypotheses_ok:
        # size excess <= 5 eps; count bound from the measured size excess;
        # coefficient bound from max{mass excess, ||g0|| size excess}
        report.bound_size = 5.0 * eps_mass
        eps_size = max(sig, 0.0)
        report.bound_count = 2.0 * eps_size
        report.bound_coeff = 3.0 * max(mu, g0n * eps_size)
    return report


def height_sup(
    chain: PolyChain,
    base: OrientedPlane,
    radius: float = 1.0,
    facets: int = 128,
) -> float:
    """Sup of ``|pi_{V^perp}(x)|`` over the support inside the cylinder.

    For a cone through the origin with codimension one the sup is exact:
    the height-to-base ratio along each far edge is maximized in closed
    form and scaled to the cylinder radius.  Otherwise the cylinder is
    replaced by a circumscribed ``facets``-gon, clipped exactly, and the
    vertex scan bounds the sup from above (convexity puts the max at a
    vertex of each clipped simplex).
    """
    from .chains import HalfSpaceRegion, is_cone, restrict

    if base.n - base.m == 1 and base.m == 2 and is_cone(chain, tol=1e-12):
        return _cone_height_sup(chain, base, radius)

    if base.m == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        ang = 2 * math.pi * np.arange(facets) / facets
        dirs = [np.array([math.cos(a), math.sin(a)]) for a in ang]
    clipped = chain
    for d in dirs:
        normal = base.embed(d)
        normal = normal / np.linalg.norm(normal)
        clipped = restrict(clipped, HalfSpaceRegion(-normal, -radius)).chain
        if clipped.is_zero:
            return 0.0
    verts = clipped.vertex_array().reshape(-1, chain.n)
    return float(np.max(base.perp_norms(verts))) if len(verts) else 0.0


def _cone_height_sup(chain: PolyChain, base: OrientedPlane, radius: float) -> float:
    perp = base.perp_frame()[0]
    best = 0.0
    for simplex, _ in chain.terms:
        v = simplex.vertices
        order = np.argsort(np.linalg.norm(v, axis=1))
        A, B = v[order[1]], v[order[2]]
        pA = base.project_coords(A)
        pB = base.project_coords(B)
        gA, gB = float(A @ perp), float(B @ perp)
        q0 = float(pA @ pA)
        q1 = 2.0 * float(pA @ (pB - pA))
        q2 = float((pB - pA) @ (pB - pA))
        g0, g1 = gA, gB - gA
        cands = [0.0, 1.0]
        den = g1 * q1 - 2.0 * g0 * q2
        if abs(den) > 1e-30:
            sc = (g0 * q1 - 2.0 * g1 * q0) / den
            if 0.0 < sc < 1.0:
                cands.append(sc)
        for sc in cands:
            g = g0 + g1 * sc
            q = q0 + q1 * sc + q2 * sc * sc
            if q > 1e-30:
                best = max(best, abs(g) / math.sqrt(q))
    return best * radius
