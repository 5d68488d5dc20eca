"""Dense complex-matrix kernel.

All norms are spectral norms.  Matrices are plain ``numpy`` arrays of
complex dtype; functions never mutate their inputs unless an ``overwrite``
flag says so.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NotClosed, NotHermitian, SingularInput, StepTooCoarse

TOL_SING = 1e-8
TOL_HERM = 1e-9
LOG_TIE_WINDOW = 1e-9
LOG_TIE_PHASE = 1e-6


def as_cmatrix(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError("expected a 2d array, got shape %r" % (M.shape,))
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def adjoint(M):
    return np.conj(np.swapaxes(M, -1, -2))


def op_norm(M):
    """Largest singular value of ``M`` (0 for empty input)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    if M.ndim == 1 or min(M.shape[-2:]) == 1:
        return float(np.linalg.norm(M))
    return float(np.linalg.norm(M, 2))


def norm_bound(M):
    """Cheap upper bound for the spectral norm.

    Uses min(Frobenius, sqrt(|M|_1 |M|_inf)); both dominate the operator norm.
    """
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    a = np.abs(M)
    hoelder = np.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max())
    return float(min(np.sqrt((a * a).sum()), hoelder))


def op_norm_hermitian(H):
    """Spectral norm of a Hermitian matrix through its eigenvalues."""
    if H.size == 0:
        return 0.0
    w = sla.eigvalsh(H, check_finite=False)
    return float(max(abs(w[0]), abs(w[-1])))


def op_norm_upto(M, threshold):
    """Return a value v with ``v >= |M|`` that is exact when close to ``threshold``.

    The cheap bound is returned when it already certifies ``|M| < threshold``.
    """
    b = norm_bound(M)
    if b < threshold:
        return b
    return op_norm(M)


def polar(M, tol_sing=TOL_SING):
    """Polar decomposition ``M = U H`` of a square matrix.

    Returns
    -------
    U : unitary factor
    H : positive factor (M*M)^{1/2}
    """
    M = as_cmatrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError("polar needs a square matrix")
    if M.shape[0] == 0:
        return M.copy(), M.copy()
    W, s, Vh = np.linalg.svd(M)
    if s[-1] <= tol_sing:
        raise SingularInput("smallest singular value %.3e <= %.1e" % (s[-1], tol_sing))
    U = W @ Vh
    H = (adjoint(Vh) * s) @ Vh
    return U, (H + adjoint(H)) / 2


def polar_unitary(M, tol_sing=TOL_SING):
    """Unitary part of the polar decomposition (also works for tall isometries)."""
    M = np.asarray(M, dtype=complex)
    W, s, Vh = np.linalg.svd(M, full_matrices=False)
    if s.size and s[-1] <= tol_sing:
        raise SingularInput("smallest singular value %.3e <= %.1e" % (s[-1], tol_sing))
    return W @ Vh


@dataclass(frozen=True)
class HermitianSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def apply(self, f):
        Q = self.eigenvectors
        return (Q * f(self.eigenvalues)) @ adjoint(Q)


def check_hermitian(H, tol=TOL_HERM):
    H = as_cmatrix(H)
    if H.shape[0] != H.shape[1]:
        raise NotHermitian("matrix is not square")
    scale = max(op_norm_upto(H, np.inf), 1e-300)
    skew = norm_bound(H - adjoint(H))
    if skew > tol * scale:
        skew = op_norm(H - adjoint(H))
        if skew > tol * op_norm(H):
            raise NotHermitian("|H - H*| = %.3e" % skew)
    return H


def hermitian_spectrum(H, check=True):
    if check:
        H = check_hermitian(H)
    H = (H + adjoint(H)) / 2
    w, Q = np.linalg.eigh(H)
    return HermitianSpectrum(w, Q)


def spec_fun(H, f, check=True):
    """Functional calculus ``f(H)`` for Hermitian ``H``.

    ``f`` acts elementwise on a real array of eigenvalues.
    """
    return hermitian_spectrum(H, check=check).apply(lambda w: np.asarray(f(w), dtype=complex))


def spectral_projection(H, threshold=0.5, check=True):
    """Spectral projection of ``H`` onto eigenvalues above ``threshold``."""
    return spec_fun(H, lambda w: (w > threshold).astype(float), check=check)


def unitary_log(U):
    """Principal logarithm of a unitary, returned as a skew-Hermitian matrix.

    Eigenvalues within 1e-9 of -1 trigger a deterministic global rotation by
    e^{i 1e-6} before the logarithm is taken.
    """
    U = as_cmatrix(U)
    T, Z = sla.schur(U, output="complex")
    lam = np.diag(T)
    shift = 0.0
    if np.any(np.abs(lam + 1) < LOG_TIE_WINDOW):
        shift = LOG_TIE_PHASE
    lam = lam * np.exp(1j * shift)
    logs = 1j * np.angle(lam) - 1j * shift
    L = (Z * logs) @ adjoint(Z)
    return (L - adjoint(L)) / 2


def unitary_power(U, t):
    """``exp(t log U)`` with the principal logarithm."""
    L = unitary_log(U)
    return sla.expm(t * L)


def det_phase_step(a, b):
    """Continuous phase increment of det along the step ``a -> b``.

    Returns ``(increment, step_norm_bound)`` where increment equals
    ``sum arg(lambda_i)`` over the eigenvalues of ``w = b a^{-1}``.  The
    principal angle of det(w) is lifted to the correct branch using
    ``Im tr(w - 1)`` when |w - 1|_F^2 < pi / 2 (Schur's inequality bounds
    the second-order error) and read off the eigenvalues of w otherwise;
    both are exact whenever |w - 1| < 1/2.
    """
    n = a.shape[0]
    w = np.linalg.solve(a.T, b.T).T
    d = w - np.eye(n)
    step = op_norm_upto(d, 0.5)
    if step >= 0.5:
        raise StepTooCoarse("|u_{k+1} u_k^{-1} - 1| = %.3f >= 1/2" % step)
    frob2 = float(np.real(np.vdot(d, d)))
    if frob2 >= np.pi / 2:
        # every eigenvalue of w lies in |z - 1| < 1/2, so the principal
        # angles are continuous along 1 + t (w - 1)
        return float(np.sum(np.angle(np.linalg.eigvals(w)))), step
    sign, _ = np.linalg.slogdet(w)
    theta = float(np.angle(sign))
    first = float(np.imag(np.trace(d)))
    k = np.round((first - theta) / (2 * np.pi))
    return theta + 2 * np.pi * k, step


def det_winding(path, closed=False, unitary_tol=0.25, return_float=False):
    """Winding number of ``det`` along a sampled path of near-unitaries.

    Parameters
    ----------
    path : sequence of square arrays
    closed : if True the endpoints must agree to 1e-6 and the result is an int
    return_float : also return the unrounded winding

    Returns
    -------
    int (or ``(int, float)`` when ``return_float``)
    """
    path = [as_cmatrix(u) for u in path]
    if not path:
        return (0, 0.0) if return_float else 0
    n = path[0].shape[0]
    eye = np.eye(n)
    for u in path:
        if u.shape != (n, n):
            raise ValueError("path samples have inconsistent shapes")
        dev = op_norm_upto(adjoint(u) @ u - eye, unitary_tol)
        if dev >= unitary_tol:
            raise StepTooCoarse("sample not near-unitary: |u*u - 1| = %.3f" % dev)
    if closed and op_norm(path[-1] - path[0]) > 1e-6:
        raise NotClosed("endpoints differ by %.3e" % op_norm(path[-1] - path[0]))
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        inc, _ = det_phase_step(a, b)
        total += inc
    wind = total / (2 * np.pi)
    out = int(np.round(wind))
    return (out, wind) if return_float else out


def bott_index(U, V):
    """Bott index (1/2pi) Im tr log(V U V* U*) of two almost commuting unitaries.

    With the clock ``C`` and shift ``S`` (``S e_j = e_{j+1}``) this gives -1.
    """
    W = V @ U @ adjoint(V) @ adjoint(U)
    lam = np.linalg.eigvals(W)
    return int(np.round(np.sum(np.angle(lam)) / (2 * np.pi)))


@dataclass
class BlockDiag:
    """Block-diagonal operator on ``C^coef_dim (x) C^width``.

    Layout follows ``kron(coefficient, coordinate)``.  Block ``j`` lives on
    the coordinates ``coords[j]``; a block with ``mult[j] > 1`` stands for
    ``mult[j]`` singleton coordinates that all carry the same ``coef_dim``
    square matrix.
    """

    coef_dim: int
    width: int
    coords: list
    blocks: list
    mult: list = field(default=None)

    def __post_init__(self):
        if self.mult is None:
            self.mult = [1] * len(self.blocks)

    def like(self, blocks):
        return BlockDiag(self.coef_dim, self.width, self.coords, list(blocks), self.mult)

    def __matmul__(self, other):
        return self.like([a @ b for a, b in zip(self.blocks, other.blocks)])

    def adjoint(self):
        return self.like([adjoint(a) for a in self.blocks])

    def polar_unitary(self):
        return self.like([polar(a)[0] for a in self.blocks])

    def unitarity_defect(self):
        out = 0.0
        for a in self.blocks:
            e = adjoint(a) @ a
            e[np.diag_indices_from(e)] -= 1
            out = max(out, op_norm_hermitian(e))
        return out

    def dense(self):
        C, n = self.coef_dim, self.width
        out = np.zeros((C * n, C * n), dtype=complex)
        for cs, a, m in zip(self.coords, self.blocks, self.mult):
            cs = np.asarray(cs)
            if m > 1 or (len(cs) == 1):
                for c in cs:
                    idx = np.arange(C) * n + c
                    out[np.ix_(idx, idx)] = a
            else:
                idx = (np.arange(C)[:, None] * n + cs[None, :]).ravel()
                out[np.ix_(idx, idx)] = a
        return out


def block_det_winding(path, closed=False, return_float=False):
    """det winding of a path of ``BlockDiag`` samples sharing one partition."""
    if not path:
        return (0, 0.0) if return_float else 0
    mult = path[0].mult
    total = 0.0
    for j, m in enumerate(mult):
        _, w = det_winding([b.blocks[j] for b in path], closed=closed, return_float=True)
        total += m * w
    out = int(np.round(total))
    return (out, total) if return_float else out
