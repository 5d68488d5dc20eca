import numpy as np
import pytest

from kflat.covers import disk_pair_cover, torus_cover
from kflat.groups import ga_mul
from kflat.index import (
    algebraic_index_class,
    boundary_projection,
    constants_report,
    disk_orientation_fixture,
    doubled_disk_fredholm_pair,
    mishchenko_projection,
    quantitative_lhs,
    rel_mishchenko_data,
    relative_algebraic_index_class,
    torus_fredholm_pair,
    torus_monopole_integer,
    trace_pairing,
)
from kflat.numerics import op_norm
from kflat.quasirep import QuasiRep, clock


@pytest.fixture(scope="module")
def torus():
    return torus_cover(48)


@pytest.fixture(scope="module")
def disk():
    return disk_pair_cover(48)


@pytest.fixture(scope="module")
def cls4(torus):
    return algebraic_index_class(torus, torus_fredholm_pair(4), strict=False)


def _mult_defect(fp):
    X, Y = fp.points.T
    f, g = np.exp(2j * np.pi * X), np.exp(2j * np.pi * Y)
    return op_norm(fp.phi1_scalar(f * g) - fp.phi1_scalar(f) @ fp.phi1_scalar(g))


def test_fredholm_pairs_unital_and_star():
    for fp in (torus_fredholm_pair(6), doubled_disk_fredholm_pair(6)):
        X, Y = fp.points.T
        rep = fp.test_report([(np.exp(2j * np.pi * X), 1.0), (np.cos(X) + 1j * Y, 1.0)])
        assert rep["unital"] <= 1e-9 and rep["adjoint"] <= 1e-9
    d = [_mult_defect(torus_fredholm_pair(N)) for N in (4, 6, 8)]
    assert d[0] > d[1] > d[2]


def test_fixtures():
    fp = torus_fredholm_pair(8)
    assert torus_monopole_integer(fp) == 1
    assert torus_monopole_integer(fp, sign=-1) == -1
    assert torus_monopole_integer(fp, mass=3.0) == 0
    o, tval, vals = disk_orientation_fixture()
    assert tval == 1 and vals[o] == 1 and vals[-o] == -1


def test_mishchenko_projection_idempotent(torus, disk):
    P = mishchenko_projection(torus)
    assert ga_mul(P, P).allclose(P, atol=1e-12)
    assert P.adjoint().allclose(P, atol=1e-12)
    Pd = mishchenko_projection(disk)
    assert Pd.propagation == 0 and ga_mul(Pd, Pd).allclose(Pd, atol=1e-12)
    pts = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 40, endpoint=False)]) * 1.5
    PW = boundary_projection(disk, pts)
    assert PW.propagation == 1 and PW.group == disk.lam
    assert ga_mul(PW, PW).allclose(PW, atol=1e-12)


def test_rel_mishchenko_boundary_compatible(disk):
    fp = doubled_disk_fredholm_pair(4)
    assert rel_mishchenko_data(disk, fp, s_count=9).check(fp)


def test_class_and_trivial_inputs(torus, cls4):
    assert cls4.base_rank == torus.size * 8
    assert cls4.character_defect < 0.25
    for pi in (QuasiRep.trivial(torus.gamma, 2), QuasiRep.from_generators(torus.gamma, [clock(4), clock(4) @ clock(4)])):
        lhs, rep = quantitative_lhs(pi, cls4)
        assert lhs == 0 and rep["measuredDefect"] < 0.25
        val, bound = trace_pairing(pi, cls4)
        assert abs(val - lhs / pi.dim) <= bound


def test_class_rejects_mismatch(torus, disk):
    with pytest.raises(ValueError):
        algebraic_index_class(torus, doubled_disk_fredholm_pair(4))
    with pytest.raises(ValueError):
        relative_algebraic_index_class(torus, doubled_disk_fredholm_pair(4))
    with pytest.raises(ValueError):
        relative_algebraic_index_class(disk, torus_fredholm_pair(4))


def test_constants(torus, disk):
    c = constants_report(torus)
    assert (c["I"], c["G3"], c["C1"]) == (9, 25, 16200)
    assert c["threshold1"] == pytest.approx(1 / 64800)
    d = constants_report(disk)
    assert (d["I"], d["L2"], d["C2"]) == (4, 5, 5120)
    assert d["C1"] == 200 * 4**2  # trivial Gamma: |G^3| = 1
