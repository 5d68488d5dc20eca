"""Acceptance suite: one block of checks per criterion, summarized at the end of the run.

Tolerances:
  1. torus: lhs = Chern = Bott with |Bott| = 1 for n in {8, 16, 32}, N = 8, grid 48;
     commuting control 0; <= 300 s per n.
  2. disk pair: lhs = clutching = Bott oracle for n in {8, 16}; u = 1 control 0; <= 600 s per n.
  3. inequality suite: 200 instances per inequality, zero violations.
  4. monodromy: exact inputs <= 1e-7; d(alpha beta pi, pi) <= 10 defect(pi) for n in {8, 16, 32};
     ratio sequence non-increasing within 10% (ratios below 1e-12 count as 1e-12);
     measured values within 10% of the pinned calibration in data/monodromy_calibration.json.
  5. cocycle identity <= 1e-9; idempotency of p_v <= 1e-8; Chern invariant under 50 smooth gauges;
     k0 conjugation and direct-sum invariance; determinant winding additivity.
  6. C1 = 16200 (torus), C2 = 5120 (disk pair); hypothesis flags reported (false at desk scale).
  7. torus class defect strictly decreasing over N in {4, 6, 8}; integers stable once the defect < 0.3.
"""
import functools
import json
import os
import time

import numpy as np
import pytest
import scipy.linalg as sla

from kflat.bundles import (
    DenseField,
    chern_number,
    cocycle_projection,
    monopole_field,
    projection_error,
    relative_class_clutching,
)
from kflat.checks import inequality_suite
from kflat.covers import disk_pair_cover, torus_cover
from kflat.index import (
    algebraic_index_class,
    constants_report,
    disk_orientation_fixture,
    doubled_disk_fredholm_pair,
    quantitative_lhs,
    relative_algebraic_index_class,
    relative_loop,
    relative_quantitative_lhs,
    torus_fredholm_pair,
    torus_monopole_integer,
)
from kflat.monodromy import beta_full, beta_relative, relative_round_trip, round_trip_report
from kflat.numerics import bott_index
from kflat.qk import QLoop, certify_projection, k0_class_integer, k1_loop_integer
from kflat.quasirep import apply_ga, clock, shift
from kflat.scenarios import clockshift, commuting, relative_clockshift, run_sweep, torus_case

from test_bundles import smooth_gauge

pytestmark = pytest.mark.acceptance

CALIBRATION = os.path.join(os.path.dirname(__file__), "data", "monodromy_calibration.json")
TORUS_N = (8, 16, 32)
DISK_N = (8, 16)


@functools.lru_cache(maxsize=None)
def torus():
    return torus_cover(48)


@functools.lru_cache(maxsize=None)
def torus_class():
    return algebraic_index_class(torus(), torus_fredholm_pair(8))


@functools.lru_cache(maxsize=None)
def torus_result(n):
    pi = clockshift(torus(), n)
    bott = bott_index(pi.images[1], pi.images[2])
    t0 = time.time()
    case, _ = torus_case(pi, torus(), torus_class(), bott, quant1=n <= 16)
    case["seconds"] = time.time() - t0
    return case


@functools.lru_cache(maxsize=None)
def disk():
    return disk_pair_cover(48)


@functools.lru_cache(maxsize=None)
def disk_class():
    orientation, _, _ = disk_orientation_fixture()
    fp = doubled_disk_fredholm_pair(8, orientation=orientation)
    return relative_algebraic_index_class(disk(), fp, strict=False)


@functools.lru_cache(maxsize=None)
def disk_result(n, power=1):
    rel = relative_clockshift(disk(), n, power)
    t0 = time.time()
    lhs, rep = relative_quantitative_lhs(rel, disk_class())
    fv = beta_relative(rel, disk())
    rhs, crep = relative_class_clutching(fv)
    return {"lhs": lhs, "rhs": rhs, "report": rep, "clutching": crep, "fv": fv,
            "bott": bott_index(np.linalg.matrix_power(shift(n), power), clock(n)),
            "bottClockShift": bott_index(clock(n), shift(n)), "seconds": time.time() - t0}


# --------------------------------------------------------------------------- 1


def test_c1_fixture(criterion):
    val = torus_monopole_integer(torus_fredholm_pair(8))
    assert criterion(1, "monopole fixture", val == 1, "value %d" % val)


@pytest.mark.parametrize("n", TORUS_N)
def test_c1_torus_equality(criterion, n):
    r = torus_result(n)
    ok = r["lhs"] == r["rhs"] == r["oracles"]["bott"] and abs(r["lhs"]) == 1
    criterion(1, "n=%d lhs = Chern = Bott" % n, ok,
              "lhs %d, chern %d, bott %d" % (r["lhs"], r["rhs"], r["oracles"]["bott"]))
    criterion(1, "n=%d runtime <= 300 s" % n, r["seconds"] <= 300, "%.0f s" % r["seconds"])
    assert ok and r["seconds"] <= 300


def test_c1_commuting_control(criterion):
    pi = commuting(torus(), 8)
    lhs, _ = quantitative_lhs(pi, torus_class())
    v = beta_full(pi, torus()).cocycle
    rhs = chern_number(cocycle_projection(v))
    bott = bott_index(pi.images[1], pi.images[2])
    ok = lhs == rhs == bott == 0
    assert criterion(1, "commuting control", ok, "lhs %d, chern %d, bott %d" % (lhs, rhs, bott))


# --------------------------------------------------------------------------- 2


@pytest.mark.parametrize("n", DISK_N)
def test_c2_disk_equality(criterion, n):
    r = disk_result(n)
    ok = r["lhs"] == r["rhs"] == r["bott"] and abs(r["lhs"]) == 1
    criterion(2, "n=%d lhs = clutching = Bott" % n, ok,
              "lhs %d, clutching %d, bott(S,C) %d, bott(C,S) %d, class defect %.2f (certified %s)"
              % (r["lhs"], r["rhs"], r["bott"], r["bottClockShift"], r["report"]["classDefect"],
                 r["report"]["classCertified"]))
    criterion(2, "n=%d runtime <= 600 s" % n, r["seconds"] <= 600, "%.0f s" % r["seconds"])
    assert ok and r["seconds"] <= 600


def test_c2_trivial_control(criterion):
    r = disk_result(DISK_N[0], 0)
    ok = r["lhs"] == r["rhs"] == r["bott"] == 0
    assert criterion(2, "u = 1 control", ok, "lhs %d, clutching %d" % (r["lhs"], r["rhs"]))


# --------------------------------------------------------------------------- 3


@pytest.fixture(scope="module")
def suite():
    return inequality_suite(seed=0, count=200)


def test_c3_inequality_suite(criterion, suite):
    ok = True
    for r in suite:
        good = r.passed and r.count == 200
        ok &= good
        criterion(3, r.name, good, "%d instances, %d violations, worst ratio %.3g of %s"
                  % (r.count, r.violations, r.worst_ratio, r.bound))
    ppipv = [r for r in suite if r.name.startswith("ppipv")][0]
    criterion(3, "ppipv measured constant logged", True, "max |p_pi - p_v| / eps = %.3g" % ppipv.measured_constant)
    assert ok


# --------------------------------------------------------------------------- 4


@pytest.fixture(scope="module")
def calibration():
    with open(CALIBRATION) as fh:
        return json.load(fh)


def test_c4_exact_inputs(criterion):
    rep = round_trip_report(commuting(torus(), 4), torus(), flatness=False)
    rel = relative_round_trip(relative_clockshift(disk(), 6, 0), disk())
    ok = rep.distance <= 1e-7 and rep.cocycle_distance <= 1e-7 and rel["distance"] <= 1e-7
    assert criterion(4, "exact inputs round trip <= 1e-7", ok,
                     "abs %.1e / %.1e, relative %.1e" % (rep.distance, rep.cocycle_distance, rel["distance"]))


def test_c4_clockshift_round_trips(criterion, calibration):
    ratios = []
    ok = True
    for n in TORUS_N:
        rep = round_trip_report(clockshift(torus(), n), torus(), threshold=10, flatness=False)
        pinned = calibration["torus"][str(n)]
        good = rep.passed and rep.distance <= 10 * rep.defect_in
        close = rep.distance <= 1.1 * pinned["distance"] + 1e-12 and rep.cocycle_distance <= 1.1 * pinned["cocycleDistance"] + 1e-12
        criterion(4, "n=%d d <= 10 defect" % n, good, "d %.2e, defect %.3f, ratio %.2e" % (rep.distance, rep.defect_in, rep.ratio))
        criterion(4, "n=%d within pinned calibration" % n, close,
                  "cocycle distance %.2e (pinned %.2e)" % (rep.cocycle_distance, pinned["cocycleDistance"]))
        ok &= good and close
        ratios.append(max(rep.ratio, 1e-12))
    mono = all(b <= 1.1 * a for a, b in zip(ratios, ratios[1:]))
    criterion(4, "ratio non-increasing (10% slack)", mono, " ".join("%.1e" % r for r in ratios))
    assert ok and mono


# --------------------------------------------------------------------------- 5


def test_c5_cocycles_and_projections(criterion):
    worst = max(torus_result(n)["defects"]["cocycleError"] for n in TORUS_N)
    fv = disk_result(DISK_N[0])["fv"]
    worst = max(worst, fv.v1.cocycle_error(), fv.v2.cocycle_error(), fv.v0.cocycle_error())
    criterion(5, "beta cocycle identity <= 1e-9", worst <= 1e-9, "%.1e" % worst)
    v = beta_full(clockshift(torus(), 8), torus()).cocycle
    idem = projection_error(cocycle_projection(v))
    criterion(5, "cocycleProjection idempotency <= 1e-8", idem <= 1e-8, "%.1e" % idem)
    assert worst <= 1e-9 and idem <= 1e-8


def test_c5_gauge_invariance(criterion):
    rng = np.random.default_rng(5)
    base = monopole_field(24)
    vals = []
    for _ in range(50):
        U = smooth_gauge(rng, 24, 2)
        vals.append(chern_number(DenseField(U @ base.values @ np.conj(np.swapaxes(U, -1, -2)), base.grid_shape)))
    # a few gauges on p_v for the beta bundle of clock/shift n = 8
    v = beta_full(clockshift(torus(), 8), torus()).cocycle
    p = cocycle_projection(v)
    P = np.array([p.at(k) for k in range(p.n_samples)])
    ref = chern_number(p)
    beta_vals = []
    for _ in range(3):
        U = smooth_gauge(rng, 48, P.shape[1], modes=1)
        beta_vals.append(chern_number(DenseField(U @ P @ np.conj(np.swapaxes(U, -1, -2)), p.grid_shape)))
        del U
    ok = all(x == 1 for x in vals) and all(x == ref for x in beta_vals)
    assert criterion(5, "Chern invariant under 50 + 3 smooth gauges", ok,
                     "monopole %s, beta bundle %d -> %s" % (sorted(set(vals)), ref, sorted(set(beta_vals))))


def test_c5_k0_invariance(criterion):
    rng = np.random.default_rng(6)
    cls = torus_class()
    pi = clockshift(torus(), 8)
    mat = apply_ga(pi, cls.matrix, cls.matrix.propagation)
    base_rank = cls.base_rank * pi.dim
    k = k0_class_integer(certify_projection(mat, base_rank=base_rank))
    Q, _ = np.linalg.qr(rng.normal(size=mat.shape) + 1j * rng.normal(size=mat.shape))
    kc = k0_class_integer(certify_projection(Q @ mat @ Q.conj().T, base_rank=base_rank))
    extra = np.diag([1.0, 1.0, 0.0])
    ks = k0_class_integer(certify_projection(sla.block_diag(mat, extra), base_rank=base_rank))
    ok = kc == k and ks == k + 2
    assert criterion(5, "k0 conjugation and direct-sum invariance", ok, "%d, conj %d, sum %d" % (k, kc, ks))


def test_c5_winding_additivity(criterion):
    rel = relative_clockshift(disk(), DISK_N[0], 1)
    t_count = disk_result(DISK_N[0])["report"]["tCount"]
    loop, _ = relative_loop(rel, disk_class(), t_count=t_count)
    w1 = k1_loop_integer(loop)
    sq = QLoop([u @ u for u in loop.samples], loop.s_values, strict=False)
    w2 = k1_loop_integer(sq)
    s = np.linspace(0, 1, 65)
    a = [np.array([[np.exp(2j * np.pi * t)]]) for t in s]
    scal = QLoop([x * y for x, y in zip(a, a)], s)
    ok = w2 == 2 * w1 and k1_loop_integer(scal) == 2
    assert criterion(5, "determinant winding additivity", ok, "w %d, w^2 %d" % (w1, w2))


# --------------------------------------------------------------------------- 6


def test_c6_constants(criterion):
    ct = constants_report(torus())
    cd = constants_report(disk())
    ok = ct["C1"] == 16200 and cd["C2"] == 5120
    criterion(6, "C1 = 16200, C2 = 5120", ok, "C1 %d, C2 %d" % (ct["C1"], cd["C2"]))
    flags = {n: torus_result(n)["defects"]["pi"] < ct["threshold1"] for n in TORUS_N}
    eps2 = {n: relative_clockshift(disk(), n).epsilon(1) for n in DISK_N}
    flags2 = {n: e < cd["threshold2"] for n, e in eps2.items()}
    criterion(6, "hypothesis flags reported", not any(flags.values()) and not any(flags2.values()),
              "eps < 1/(4 C1) = %.2e: %s; eps < 1/(4 C2) = %.2e: %s"
              % (ct["threshold1"], flags, cd["threshold2"], flags2))
    assert ok


# --------------------------------------------------------------------------- 7


def test_c7_convergence(criterion):
    rep, _ = run_sweep({"n": [8], "N": [4, 6, 8], "grid": 48})
    d = [r["classDefect"] for r in rep["results"]]
    dec = all(b < a for a, b in zip(d, d[1:]))
    ints = [r["integers"]["8"] for r in rep["results"] if r["classDefect"] < 0.3]
    stable = len(ints) >= 2 and len(set(ints)) == 1
    criterion(7, "class defect strictly decreasing", dec, " ".join("%.4f" % x for x in d))
    criterion(7, "integers stable once defect < 0.3", stable, "integers %s" % ints)
    assert dec and stable
