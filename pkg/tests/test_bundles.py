import dataclasses

import numpy as np
import pytest
import scipy.linalg as sla

from kflat.bundles import (
    CechCocycle,
    DenseField,
    chern_curvature_oracle,
    chern_number,
    cocycle_projection,
    exact_intertwiner,
    flatness_defect,
    morphism_defect,
    monopole_field,
    normalized_on_tree,
    projection_error,
    relative_class_clutching,
)
from kflat.covers import disk_pair_cover, torus_cover
from kflat.errors import AveragingSingular
from kflat.monodromy import beta, beta_relative
from kflat.numerics import bott_index
from kflat.quasirep import QuasiRep, RelativeQuasiRep, clock, shift


@pytest.fixture(scope="module")
def torus():
    return torus_cover(48)


@pytest.fixture(scope="module")
def disk():
    return disk_pair_cover(48)


def smooth_gauge(rng, n_grid, dim, modes=2):
    """Samplewise exp(i H(x, y)) with H a random low-frequency Hermitian trigonometric polynomial."""
    g = np.arange(n_grid) / n_grid
    X, Y = np.meshgrid(g, g, indexing="ij")
    H = np.zeros((n_grid, n_grid, dim, dim), dtype=complex)
    for p in range(-modes, modes + 1):
        for q in range(-modes, modes + 1):
            A = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / (1 + p * p + q * q)
            H += np.exp(2j * np.pi * (p * X + q * Y))[..., None, None] * A
    H = (H + np.conj(np.swapaxes(H, -1, -2))) / 2
    w, Q = np.linalg.eigh(H.reshape(-1, dim, dim))
    return np.einsum("sij,sj,skj->sik", Q, np.exp(1j * w), np.conj(Q))


def test_monopole_fixture():
    assert chern_number(monopole_field(24)) == 1
    assert chern_number(monopole_field(24, sign=-1)) == -1
    assert chern_number(monopole_field(24, mass=3.0)) == 0


def test_monopole_matches_curvature_oracle():
    def pfun(x, y):
        d = np.array([np.sin(2 * np.pi * x), np.sin(2 * np.pi * y), 1 + np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y)])
        d /= np.linalg.norm(d)
        return 0.5 * (np.eye(2) + d[0] * np.array([[0, 1], [1, 0]]) + d[1] * np.array([[0, -1j], [1j, 0]])
                      + d[2] * np.diag([1, -1]))

    assert chern_curvature_oracle(pfun, 60) == pytest.approx(1.0, abs=0.05)


def test_chern_gauge_invariance():
    rng = np.random.default_rng(3)
    base = monopole_field(24)
    for _ in range(10):
        U = smooth_gauge(rng, 24, 2)
        field = DenseField(U @ base.values @ np.conj(np.swapaxes(U, -1, -2)), base.grid_shape)
        assert chern_number(field) == 1


def test_trivial_and_flat_cocycles(torus):
    v = CechCocycle.constant(torus, {e: np.eye(2) for e in torus.edges})
    assert flatness_defect(v) == 0.0
    p = cocycle_projection(v)
    assert all(np.linalg.matrix_rank(p.at(k), tol=1e-8) == 2 for k in range(0, torus.n_samples, 97))
    c = clock(4)
    flat = CechCocycle.flat(QuasiRep.from_generators(torus.gamma, [c, c @ c]), torus)
    assert flat.cocycle_error() < 1e-12 and flatness_defect(flat) < 1e-12
    assert projection_error(cocycle_projection(flat), range(0, torus.n_samples, 31)) < 1e-12
    assert chern_number(cocycle_projection(flat)) == 0


def test_beta_clockshift_chern_matches_bott(torus):
    n = 16
    v = beta(QuasiRep.from_generators(torus.gamma, [clock(n), shift(n)]), torus)
    assert v.cocycle_error() <= 1e-9
    assert 0 < flatness_defect(v)
    ok, dev = normalized_on_tree(v)
    assert ok
    p = cocycle_projection(v)
    assert projection_error(p, range(0, torus.n_samples, 43)) <= 1e-8
    assert chern_number(p) == bott_index(clock(n), shift(n)) == -1


def test_normalized_on_tree_detects_twist(torus):
    e = torus.tree[0]
    v = CechCocycle.constant(torus, {e: -np.eye(1)})
    ok, worst = normalized_on_tree(v)
    assert not ok and worst == pytest.approx(2.0)


def test_morphism_defect_examples(torus):
    n = 6
    one = np.eye(n)
    v1 = CechCocycle.flat(QuasiRep.from_generators(torus.gamma, [clock(n), one]), torus)
    u = {m: one for m in range(torus.size)}
    assert morphism_defect(u, v1, v1) == 0.0
    w = shift(n)
    v2 = CechCocycle.flat(QuasiRep.from_generators(torus.gamma, [w @ clock(n) @ w.conj().T, one]), torus)
    assert morphism_defect({m: w for m in u}, v1, v2) < 1e-12
    assert morphism_defect(u, v1, v2) == pytest.approx(abs(np.exp(2j * np.pi / n) - 1))


def _disk_rel(cover, n, power=1):
    pi0 = QuasiRep.from_generators(cover.lam, [clock(n)])
    triv = QuasiRep.trivial(cover.gamma, 1)
    u = sla.block_diag(np.eye(1), np.linalg.matrix_power(shift(n), power))
    return RelativeQuasiRep(triv, triv, pi0, u, cover.hom)


def test_exact_intertwiner_exact_input(disk):
    fv = beta_relative(_disk_rel(disk, 8, power=0), disk)
    ubar, wbar, rep = exact_intertwiner(fv)
    assert rep["deviation"] <= 1e-8 and rep["exactness"] <= 1e-8


def test_clutching_examples(disk):
    assert relative_class_clutching(beta_relative(_disk_rel(disk, 8, 0), disk))[0] == 0
    deg, rep = relative_class_clutching(beta_relative(_disk_rel(disk, 8, 1), disk))
    assert deg == bott_index(shift(8), clock(8)) == 1
    assert rep["deviation"] <= 2 * 2 * np.sin(np.pi / 8)  # C = 2 measured on this cover
    assert rep["exactness"] <= 1e-8
    # u = 1 + S^2 moves twice as fast along Y; grid 48 leaves a loop step
    # above the 1/2 branch-safety bound, grid 64 resolves it
    fine = disk_pair_cover(64)
    deg2, _ = relative_class_clutching(beta_relative(_disk_rel(fine, 8, 2), fine))
    assert deg2 == 2 * deg


def test_averaging_singular(disk):
    fv = beta_relative(_disk_rel(disk, 4), disk)
    zero = {m: np.zeros_like(x) for m, x in fv.u.items()}
    with pytest.raises(AveragingSingular):
        exact_intertwiner(dataclasses.replace(fv, u=zero))
