import numpy as np
import pytest

from kflat.errors import NotClosed, NotHermitian, SingularInput
from kflat.numerics import (
    BlockDiag,
    block_det_winding,
    bott_index,
    det_winding,
    op_norm,
    polar,
    spec_fun,
    spectral_projection,
    unitary_log,
    unitary_power,
)
from kflat.quasirep import clock, shift


def test_op_norm_examples():
    assert op_norm(np.eye(5)) == pytest.approx(1.0)
    assert op_norm(np.zeros((3, 3))) == 0.0
    assert op_norm(np.diag([3, 4j])) == pytest.approx(4.0)


def test_polar_examples():
    rng = np.random.default_rng(0)
    W, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    U, H = polar(W)
    assert np.allclose(U, W) and np.allclose(H, np.eye(4))
    U, H = polar(2 * np.eye(3))
    assert np.allclose(U, np.eye(3)) and np.allclose(H, 2 * np.eye(3))
    U, H = polar(np.diag([2, 1j]))
    assert np.allclose(U, np.diag([1, 1j])) and np.allclose(H, np.diag([2, 1]))
    with pytest.raises(SingularInput):
        polar(np.diag([1.0, 0.0]))


def test_spec_fun_examples():
    p = np.diag([1.0, 0.0, 1.0])
    assert np.allclose(spec_fun(p, lambda t: np.exp(2j * np.pi * t)), np.eye(3))
    assert np.allclose(spec_fun(np.diag([0.0, 1.0]), lambda t: t**2), np.diag([0.0, 1.0]))
    with pytest.raises(NotHermitian):
        spec_fun(np.array([[0, 1], [0, 0]], dtype=complex), np.abs)


def test_spectral_projection_of_eps_projection():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    eps = 0.05
    p = Q @ np.diag([1 + eps, 1 - eps / 2, 1.0, eps, -eps / 3, 0.0]) @ Q.T
    defect = op_norm(p @ p - p)
    q = spectral_projection(p)
    assert op_norm(q @ q - q) < 1e-12
    assert op_norm(q - p) <= 2 * defect


def test_unitary_log_roundtrip_and_tie_break():
    U = clock(5)
    assert np.allclose(unitary_power(U, 1.0), U)
    # the rotation by e^{i 1e-6} sends -1 to the branch -pi, every time
    L = unitary_log(np.diag([-1.0, 1.0]))
    assert np.allclose(L, -L.conj().T)
    assert np.diag(L).imag[0] == pytest.approx(-np.pi, abs=1e-9)


def test_det_winding_examples():
    s = np.linspace(0, 1, 64)
    assert det_winding([np.eye(2)] * 10, closed=True) == 0
    assert det_winding([np.array([[np.exp(2j * np.pi * t)]]) for t in s], closed=True) == 1
    assert det_winding([np.diag([np.exp(2j * np.pi * t), np.exp(-2j * np.pi * t)]) for t in s], closed=True) == 0
    with pytest.raises(NotClosed):
        det_winding([np.eye(1), -np.eye(1)], closed=True)


def test_det_winding_large_frobenius_steps():
    # each step has |w - 1| ~ 0.26 but |w - 1|_F^2 ~ 4.4, so the eigenvalue lift is used
    s = np.linspace(0, 1, 25)
    path = [np.exp(2j * np.pi * t) * np.eye(64) for t in s]
    assert det_winding(path, closed=True) == 64


def test_det_winding_additivity():
    s = np.linspace(0, 1, 97)
    rng = np.random.default_rng(2)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    a = [Q @ np.diag([np.exp(2j * np.pi * t), 1, np.exp(-4j * np.pi * t)]) @ Q.conj().T for t in s]
    b = [np.diag([np.exp(6j * np.pi * t), np.exp(2j * np.pi * t), 1]) for t in s]
    wa, wb = det_winding(a, closed=True), det_winding(b, closed=True)
    assert (wa, wb) == (-1, 4)
    assert det_winding([x @ y for x, y in zip(a, b)], closed=True) == wa + wb


def test_block_det_winding_matches_dense():
    s = np.linspace(0, 1, 65)
    path = [
        BlockDiag(1, 3, [[0], [1, 2]], [np.array([[np.exp(2j * np.pi * t)]]), np.diag([np.exp(4j * np.pi * t), 1])])
        for t in s
    ]
    assert block_det_winding(path, closed=True) == det_winding([u.dense() for u in path], closed=True) == 3


def test_bott_index_conventions():
    for n in (4, 8, 16):
        assert bott_index(clock(n), shift(n)) == -1
        assert bott_index(shift(n), clock(n)) == 1
        assert bott_index(clock(n), clock(n) @ clock(n)) == 0
