import dataclasses

import numpy as np
import pytest

from kflat.covers import (
    GoodCoverPair,
    collar_profile,
    disk_pair_cover,
    rho,
    torus_cover,
    validate_cover,
)
from kflat.errors import InvalidCover
from kflat.groups import E


@pytest.fixture(scope="module")
def torus():
    return torus_cover(48)


@pytest.fixture(scope="module")
def disk():
    return disk_pair_cover(48)


def test_torus_cover(torus):
    rep = validate_cover(torus)
    assert torus.size == 9 and rep["size"] == 9
    assert rep["partitionOfUnity"] < 1e-12
    for a, b, c in torus.triangles:
        g = torus.gamma
        assert g.multiply(torus.transition(a, b), torus.transition(b, c)) == torus.transition(a, c)


def test_disk_pair_cover(disk):
    rep = validate_cover(disk)
    assert disk.size == 4 and len(disk.y_index) == 3 and rep["ySize"] == 3
    assert disk.gamma.rank == 0 and disk.lam.rank == 1
    # the restricted tree spans the Y-nerve
    yt = disk.y_tree()
    assert len(yt) == len(disk.y_index) - 1


def test_rho_examples():
    s = np.linspace(0, 1, 5)
    assert np.allclose(rho(s, 1.0), 2 * s - 1)
    assert float(rho(0.0, 2.0)) == 1.0
    assert float(rho(0.0, 1.5)) == 0.0


def test_collar_profile(disk):
    prof = collar_profile(disk)
    assert prof.check()
    assert np.allclose(prof.rho_collar[0], 2 * prof.s_values - 1)
    assert np.allclose(prof.rho_collar[-1], 1.0)


def test_json_roundtrip(tmp_path, torus, disk):
    for c in (torus, disk):
        path = tmp_path / ("%s.json" % c.space)
        c.dump(path)
        back = GoodCoverPair.load(path)
        assert back.size == c.size and np.allclose(back.eta, c.eta)
        assert back.transitions == c.transitions and back.edges == c.edges


def test_invalid_covers_rejected(torus):
    bad_eta = torus.eta.copy()
    bad_eta[0] *= 1.1
    with pytest.raises(InvalidCover):
        validate_cover(dataclasses.replace(torus, eta=bad_eta, edges=torus.edges, triangles=torus.triangles))
    # a homotopically nontrivial tree edge
    e = torus.tree[0]
    trans = dict(torus.transitions)
    trans[e] = (1,)
    trans[(e[1], e[0])] = (-1,)
    with pytest.raises(InvalidCover):
        validate_cover(dataclasses.replace(torus, transitions=trans, edges=torus.edges, triangles=torus.triangles))
    assert torus.transition(*e) == E
