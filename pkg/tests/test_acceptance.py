"""Acceptance suite: one test per criterion, tolerances pinned.

Each test prints a single PASS line with its headline numbers so the
suite run doubles as a scoreboard (`pytest -s tests/test_acceptance.py`).
"""

import math
import time

import numpy as np
import pytest

from gmtepi.chains import PolyChain, Simplex, cone, cone_mass_formula, mass
from gmtepi.epi import build_comparison, circle_gradient_energy_ratio, mollified_unit_curve, trace_and_split
from gmtepi.generators import (
    cantor_bump_profile,
    cantor_group_chain,
    cone_harmonic,
    flat_disk,
    tilted_cone,
    two_sheet_cantor,
)
from gmtepi.groups import NormedCoefficient, group_gap, integers
from gmtepi.mono import Gauge, alpha_m, decay_bound, lambda_epi
from gmtepi.moments import chain_ball_moments, moments_all, quad_form, select_plane
from gmtepi.planes import OrientedPlane, align_in_plane_orientation, plane_distance
from gmtepi.scan import extract_graph, multiscale_scan
from gmtepi.verify import squares_violations, two_terms_violations

from conftest import random_chain

G = integers()
HORIZONTAL = OrientedPlane(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


def _report(name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _ngon_loop(N):
    one = NormedCoefficient(G, 1)
    ang = 2 * math.pi * np.arange(N + 1) / N
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return PolyChain(2, 1, G, [(Simplex(pts[i : i + 2]), one) for i in range(N)])


def test_criterion_01_cone_mass_identity():
    t0 = time.time()
    details = []
    ok = True
    for N in (8, 32, 128):
        loop = _ngon_loop(N)
        measured = mass(cone(np.zeros(2), loop))
        formula = cone_mass_formula(np.zeros(2), loop)
        ident = abs(measured - formula) / measured
        rel = abs(measured - math.pi) / math.pi
        bound = 1.1 * math.pi**3 / (2 * N * N)
        ok &= ident <= 1e-12 and rel <= bound
        ok &= measured <= 0.5 * mass(loop) + 1e-12  # one-sided cone comparison
        details.append(f"N={N}: identity {ident:.1e}, rel err {rel:.2e} <= {bound:.2e}")
    elapsed = time.time() - t0
    ok &= elapsed < 1.0
    _report("criterion 1 cone mass identity", ok, "; ".join(details) + f"; {elapsed:.2f}s")


def test_criterion_02_flat_disk_quadratic_form():
    t0 = time.time()
    disk, _ = flat_disk(512)
    form = quad_form(disk, np.zeros(3), 1.0)
    w, _vecs = form.eigensystem()
    eig_dev = float(max(abs(w[0] - 1), abs(w[1] - 1), abs(w[2])))
    tr_dev = abs(form.trace - 2.0)
    plane, _ = select_plane(form, 2)
    pdist = plane_distance(plane, HORIZONTAL)
    elapsed = time.time() - t0
    ok = eig_dev <= 5e-3 and tr_dev <= 5e-3 and pdist <= 1e-2 and elapsed < 2.0
    _report(
        "criterion 2 flat-disk quadratic form",
        ok,
        f"eig dev {eig_dev:.2e}, trace dev {tr_dev:.2e}, plane dist {pdist:.2e}, {elapsed:.2f}s",
    )


def test_criterion_03_harmonic_energy_identity():
    worst = 0.0
    th = 2 * math.pi * np.arange(2048) / 2048
    for k in (1, 2, 3, 4):
        ratio = circle_gradient_energy_ratio(np.cos(k * th))
        worst = max(worst, abs(ratio - k * (2 + k - 2)))
    ok = worst <= 1e-6
    _report("criterion 3 harmonic energy identity", ok, f"worst |ratio - k^2| = {worst:.2e}")


def test_criterion_04_epiperimetric_ratio():
    t0 = time.time()
    lam = lambda_epi(2)
    details = []
    ok = True
    for eps0, tol in ((0.08, 0.10), (0.04, 0.05), (0.02, 0.03)):
        P, _meta = cone_harmonic(2, eps0, 256)
        _s, rep = build_comparison(P)
        dev = abs(rep.ratio_zone - 0.8)
        ok &= rep.ratio_zone <= lam and rep.ratio_full <= lam and dev <= tol
        details.append(f"eps0={eps0}: zone {rep.ratio_zone:.4f} (|.-4/5|={dev:.3f}<={tol}), full {rep.ratio_full:.4f}")
    elapsed = time.time() - t0
    ok &= elapsed < 30.0
    _report(
        "criterion 4 epiperimetric ratio",
        ok,
        "; ".join(details) + f"; lambda={lam:.6f}; {elapsed:.1f}s",
    )


def test_criterion_05_plane_selection_kills_linear_mode():
    from gmtepi.epi import _cone_chain

    P, _ = tilted_cone(0.1, 256)
    curve, decomp, _v = mollified_unit_curve(P, HORIZONTAL)
    tr_base = trace_and_split(curve, HORIZONTAL, cutoff=16)
    Tv = _cone_chain(curve, decomp.g0, 3, span=1.6)
    W, _ = select_plane(quad_form(Tv, np.zeros(3), 1.0), 2)
    W = align_in_plane_orientation(W, HORIZONTAL)
    tr_spec = trace_and_split(curve, W, cutoff=16)
    ok = tr_spec.w1_sup <= 0.05 * tr_base.w1_sup
    _report(
        "criterion 5 linear mode removal",
        ok,
        f"|w1| horizontal {tr_base.w1_sup:.4f} -> spectral {tr_spec.w1_sup:.2e}",
    )


def test_criterion_06_moments_identity_suite():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        T = random_chain(rng, m=2, n=3, terms=6)
        x = rng.normal(size=3) * 0.4
        r = 0.5 + rng.random()
        worst = max(worst, moments_all(T, x, r).identity_gap)
    disk, _ = flat_disk(512)
    rec = moments_all(disk, np.array([0.2, 0.1, 0.0]), 1.0)
    b_norm = float(np.linalg.norm(rec.b))
    bm = chain_ball_moments(disk, np.zeros(3), 1.0)
    omega_dev = abs((bm.s0 - bm.t2) - math.pi / 2)
    ok = worst <= 1e-9 and b_norm <= 1e-12 and omega_dev <= 2e-3
    _report(
        "criterion 6 moments identities",
        ok,
        f"identity gap {worst:.1e} <= 1e-9, |b| {b_norm:.1e} <= 1e-12, omega dev {omega_dev:.1e} <= 2e-3",
    )


def test_criterion_07_inequality_property_suite():
    bad_sq = squares_violations(10_000, seed=0)
    bad_tt = two_terms_violations(10_000, seed=1)
    ok = bad_sq == 0 and bad_tt == 0
    _report(
        "criterion 7 inequality suite",
        ok,
        f"square-root comparisons: {bad_sq} violations; two-term bound: {bad_tt} violations (10^4 tuples each)",
    )


def test_criterion_08_decay_bound_verifier():
    t0 = time.time()
    lam = lambda_epi(2)
    theta = 1.0
    m = 2
    details = []
    ok = True
    for beta in (0.25, 0.5, 1.0):
        xi = Gauge.power(0.1, beta)
        # r0 chosen so the lambda0 window (1 + xi(r0)) sqrt(lam) < 1 holds
        eta_star = 1.0 / math.sqrt(lam) - 1.0
        r0 = (8.0 * eta_star) ** (1.0 / beta)
        radii = np.geomspace(r0 / 100.0, r0, 200)
        f = theta * alpha_m(m) * radii**m * (1.0 + radii**beta)
        rep = decay_bound(radii, f, theta * alpha_m(m), xi, lam, m=m)
        min_slack = float(np.min(rep.slack))
        ok &= all(rep.hypotheses.values()) and min_slack > 0
        details.append(f"beta={beta}: hyps {all(rep.hypotheses.values())}, min slack {min_slack:.2e}")
    elapsed = time.time() - t0
    ok &= elapsed < 1.0
    _report("criterion 8 decay-bound verifier", ok, "; ".join(details) + f"; {elapsed:.2f}s")


def test_criterion_09_branching_scan():
    t0 = time.time()
    T, meta = two_sheet_cantor(3, 48, 0.12)
    f = cantor_bump_profile(meta)
    gaps = meta["gaps"]

    cert_ok = 0
    total = 0
    for g in gaps:
        a, b = g["center"], g["half_width"]
        nodes = np.linspace(a - b, a + b, 50)[1:-1]
        for frac in (-0.22, -0.11, 0.0, 0.11, 0.21):
            t = nodes[np.argmin(np.abs(nodes - (a + frac * 2 * b)))]
            h = float(f(np.array([t]))[0])
            rep = multiscale_scan(T, [np.array([t, h])], r0=0.3 * h, depth=4)
            cert_ok += extract_graph(rep, T, 0).ok
            total += 1
    interior_rate = cert_ok / total

    branch_fail = 0
    branch_total = 0
    intervals = [(0.0, 1.0)]
    for _ in range(3):
        nxt = []
        for a, b in intervals:
            third = (b - a) / 3
            nxt += [(a, a + third), (b - third, b)]
        intervals = nxt
    for a, b in intervals:
        for frac in (0.3, 0.5, 0.7):
            rep = multiscale_scan(T, [np.array([a + (b - a) * frac, 0.0])], r0=0.08, depth=3)
            branch_fail += not extract_graph(rep, T, 0).ok
            branch_total += 1

    beta_ok = True
    worst_beta = 0.0
    for g in gaps:
        a, b = g["center"], g["half_width"]
        r = 0.4 * b
        cell = multiscale_scan(T, [np.array([a, 0.0])], r0=r, depth=0).cell(0, 0)
        sep = float(np.max(f(np.linspace(a - r, a + r, 400))))
        ratio = cell.beta_inf_centered / (sep / (2 * r))
        worst_beta = max(worst_beta, abs(ratio - 1))
        beta_ok &= abs(ratio - 1) <= 0.2

    elapsed = time.time() - t0
    ok = interior_rate >= 0.95 and branch_fail == branch_total and beta_ok and elapsed < 60.0
    _report(
        "criterion 9 branching scan",
        ok,
        f"gap certificates {cert_ok}/{total}, branch failures {branch_fail}/{branch_total}, "
        f"worst beta dev {worst_beta:.3f} <= 0.2, {elapsed:.1f}s",
    )


def test_criterion_10_non_discreteness_demonstrator():
    details = []
    ok = True
    for depth in (2, 3, 4):
        chain, meta = cantor_group_chain(depth)
        gap = group_gap(chain.group)
        ok &= abs(gap - 3.0 ** (-depth)) <= 1e-17
        worst = 0.0
        r = 0.4 * meta["min_separation"]
        for (simplex, coeff), seg in zip(chain.terms, meta["segments"]):
            x = np.array([0.5, seg["height"]])
            plateau = chain_ball_moments(chain, x, r).s0 / (2 * r)
            worst = max(worst, abs(plateau - seg["weight_sum"]))
        ok &= worst <= 1e-9
        details.append(f"d={depth}: gap {gap:.3e}, plateau dev {worst:.1e}")
    _report("criterion 10 non-discreteness demonstrator", ok, "; ".join(details))
