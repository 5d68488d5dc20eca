"""Sampled Čech cocycles, their projections and characteristic numbers."""
from dataclasses import dataclass, field

import numpy as np

from .errors import AveragingSingular, DimMismatch, GapClosed, InexactCocycle, NotClosed
from .numerics import adjoint, det_winding, op_norm, polar

COCYCLE_TOL = 1e-9


@dataclass
class CechCocycle:
    """Unitary cocycle sampled on the overlaps of a cover.

    ``v[(mu, nu)]`` (mu < nu) is an array of shape ``(len(idx), n, n)``
    holding v_{mu nu} at the samples ``cover.overlap(mu, nu)``.  The
    reverse orientation is the adjoint.
    """

    cover: object
    dim: int
    v: dict
    _rows: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        S = self.cover.n_samples
        self._rows = {}
        for (a, b) in self.v:
            idx = self.cover.overlap(a, b)
            rows = np.full(S, -1, dtype=int)
            rows[idx] = np.arange(len(idx))
            self._rows[(a, b)] = rows
            if self.v[(a, b)].shape != (len(idx), self.dim, self.dim):
                raise DimMismatch("edge %r has values of shape %r" % ((a, b), self.v[(a, b)].shape))

    @classmethod
    def constant(cls, cover, values):
        """Cocycle with constant values ``{(mu, nu): matrix}`` (mu < nu)."""
        dim = next(iter(values.values())).shape[0]
        v = {}
        for a, b in cover.edges:
            m = values.get((a, b), np.eye(dim))
            v[(a, b)] = np.repeat(np.asarray(m, dtype=complex)[None], len(cover.overlap(a, b)), axis=0)
        return cls(cover, dim, v)

    @classmethod
    def flat(cls, pi, cover, y=False):
        """The flat cocycle v_{mu nu} = pi(gamma_{mu nu}) of a representation."""
        trans = cover.y_transition if y else cover.transition
        return cls.constant(cover, {(a, b): pi(trans(a, b)) for a, b in cover.edges})

    def value(self, mu, nu, k):
        n = self.dim
        if mu == nu:
            return np.eye(n, dtype=complex)
        if mu < nu:
            r = self._rows[(mu, nu)][k]
            if r < 0:
                raise KeyError("sample %d not in U_%d ∩ U_%d" % (k, mu, nu))
            return self.v[(mu, nu)][r]
        return adjoint(self.value(nu, mu, k))

    def edges(self):
        return list(self.v)

    def direct_sum(self, other):
        if other.cover is not self.cover:
            raise ValueError("cocycles live on different covers")
        v = {}
        for e in self.v:
            a, b = self.v[e], other.v[e]
            out = np.zeros((a.shape[0], self.dim + other.dim, self.dim + other.dim), dtype=complex)
            out[:, : self.dim, : self.dim] = a
            out[:, self.dim :, self.dim :] = b
            v[e] = out
        return CechCocycle(self.cover, self.dim + other.dim, v)

    def cocycle_error(self):
        """max over triangles and triple-overlap samples of |v_ab v_bc - v_ac|."""
        worst = 0.0
        m = self.cover.members
        for a, b, c in self.cover.triangles:
            for k in np.flatnonzero(m[a] & m[b] & m[c]):
                worst = max(worst, op_norm(self.value(a, b, k) @ self.value(b, c, k) - self.value(a, c, k)))
        return worst

    def unitarity_error(self):
        eye = np.eye(self.dim)
        return max((op_norm(adjoint(x) @ x - eye) for arr in self.v.values() for x in arr), default=0.0)


def restrict_cocycle(v, ycover, y_samples, y_index):
    """Restriction of a cocycle on X to the cover of Y (re-indexed)."""
    pos = {m: k for k, m in enumerate(y_index)}
    out = {}
    for a, b in ycover.edges:
        A, B = y_index[a], y_index[b]
        ks = y_samples[ycover.overlap(a, b)]
        out[(a, b)] = np.array([v.value(A, B, k) for k in ks]).reshape(len(ks), v.dim, v.dim)
    return CechCocycle(ycover, v.dim, out)


def _pair_oscillation(arr, chunk=4096):
    """Exact max_{x, y} |arr[x] - arr[y]|.

    Pairs are visited in decreasing Frobenius distance, which bounds the
    spectral norm from above, so the scan stops as soon as a chunk cannot
    beat the current maximum.
    """
    S = arr.shape[0]
    if S < 2:
        return 0.0
    flat = arr.reshape(S, -1)
    g = flat @ adjoint(flat)
    sq = np.real(np.diag(g))
    fro = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * np.real(g), 0.0))
    iu = np.triu_indices(S, 1)
    vals = fro[iu]
    order = np.argsort(-vals)
    best = 0.0
    for start in range(0, order.size, chunk):
        sel = order[start : start + chunk]
        if vals[sel[0]] <= best:
            break
        sel = sel[vals[sel] > best]
        d = arr[iu[0][sel]] - arr[iu[1][sel]]
        best = max(best, float(np.linalg.norm(d, 2, axis=(1, 2)).max()))
    return best


def flatness_defect(v):
    """max over edges of the oscillation of v_{mu nu} over the overlap."""
    return max((_pair_oscillation(arr) for arr in v.v.values()), default=0.0)


def normalized_on_tree(v, tree=None, tol=0.25):
    """(flag, worst |v_{mu nu}(x) - 1| over tree edges)."""
    tree = v.cover.tree if tree is None else tree
    eye = np.eye(v.dim)
    worst = 0.0
    for a, b in tree:
        arr = v.v[(min(a, b), max(a, b))]
        for x in arr:
            worst = max(worst, op_norm(x - eye))
    return worst < tol, worst


def morphism_defect(u, v1, v2):
    """max |u_mu v1_{mu nu}(x) u_nu* - v2_{mu nu}(x)| over edges and samples.

    ``u`` maps a chart index to a unitary (constant per chart).
    """
    if v1.dim != v2.dim:
        raise DimMismatch("cocycle dims %d and %d" % (v1.dim, v2.dim))
    worst = 0.0
    for (a, b), arr in v1.v.items():
        if any(np.asarray(u[m]).shape != (v1.dim, v1.dim) for m in (a, b)):
            raise DimMismatch("u has the wrong size")
        diff = u[a] @ arr @ adjoint(u[b]) - v2.v[(a, b)]
        worst = max(worst, max((op_norm(d) for d in diff), default=0.0))
    return worst


# ---------------------------------------------------------------------------
# projection fields


class ProjectionField:
    """A projection-valued field on the sample grid, evaluated lazily.

    Subclasses implement ``at(k)`` and optionally ``frames(k)``.
    """

    n_samples = 0
    grid_shape = None
    dim = 0

    def at(self, k):
        raise NotImplementedError

    def frames(self, k, gap_tol=1e-3):
        """Orthonormal frame of the range of the spectral projection at 1/2."""
        w, Q = np.linalg.eigh(self.at(k))
        gap = np.min(np.abs(w - 0.5))
        if gap < gap_tol:
            raise GapClosed("spectral gap %.2e at sample %d" % (gap, k))
        return Q[:, w > 0.5]


class DenseField(ProjectionField):
    """Field stored as an array of shape (S, m, m)."""

    def __init__(self, values, grid_shape):
        self.values = np.asarray(values, dtype=complex)
        self.n_samples, self.dim = self.values.shape[0], self.values.shape[1]
        self.grid_shape = tuple(grid_shape)

    def at(self, k):
        return self.values[k]


class FrameField(ProjectionField):
    """Field given by frames ``F(k)`` with ``p = F F*``."""

    def __init__(self, frame_fn, n_samples, dim, grid_shape):
        self.frame_fn = frame_fn
        self.n_samples, self.dim, self.grid_shape = n_samples, dim, grid_shape

    def frames(self, k, gap_tol=None):
        return self.frame_fn(k)

    def at(self, k):
        F = self.frame_fn(k)
        return F @ adjoint(F)


class CocycleProjection(ProjectionField):
    """p_v(x) = sum eta_mu eta_nu v_{mu nu}(x) (x) e_{mu nu} with frames psi_mu."""

    def __init__(self, v):
        self.v = v
        c = v.cover
        self.cover = c
        self.n_samples = c.n_samples
        self.grid_shape = c.grid_shape
        self.dim = c.size * v.dim

    def psi(self, mu, k):
        """psi_mu(x) = sum_nu eta_nu(x) e_nu (x) v_{nu mu}(x), an isometry into C^I (x) C^n."""
        c, n = self.cover, self.v.dim
        out = np.zeros((c.size * n, n), dtype=complex)
        for nu in np.flatnonzero(c.eta[:, k] > 0):
            out[nu * n : (nu + 1) * n] = c.eta[nu, k] * self.v.value(nu, mu, k)
        return out

    def at(self, k):
        c, n = self.cover, self.v.dim
        out = np.zeros((self.dim, self.dim), dtype=complex)
        live = np.flatnonzero(c.eta[:, k] > 0)
        for a in live:
            for b in live:
                out[a * n : (a + 1) * n, b * n : (b + 1) * n] = c.eta[a, k] * c.eta[b, k] * self.v.value(a, b, k)
        return out

    def frames(self, k, gap_tol=None):
        mu = int(np.argmax(self.cover.eta[:, k]))
        return self.psi(mu, k)


def cocycle_projection(v, check=True):
    """The projection field p_v with its frames.  Raises InexactCocycle."""
    if check:
        err = v.cocycle_error()
        if err > COCYCLE_TOL:
            raise InexactCocycle("cocycle identity off by %.3e" % err)
    return CocycleProjection(v)


def projection_error(field, samples=None):
    """max |p^2 - p| and |p - p*| over (a subset of) samples."""
    ks = range(field.n_samples) if samples is None else samples
    worst = 0.0
    for k in ks:
        p = field.at(k)
        worst = max(worst, op_norm(p @ p - p), op_norm(p - adjoint(p)))
    return worst


# ---------------------------------------------------------------------------
# Chern number


def chern_number(field, return_float=False):
    """First Chern number of a gapped projection field on a periodic grid.

    Link variables U_j(x) = det(F(x)* F(x + e_j)) / |.| and plaquette angles
    arg(U_1(x) U_2(x+e_1) / (U_1(x+e_2) U_2(x))) summed over the grid.  The
    orientation is fixed so that ``monopole_field`` has Chern number +1.
    """
    if field.grid_shape is None or len(field.grid_shape) != 2:
        raise ValueError("chern_number needs a 2d periodic grid")
    G1, G2 = field.grid_shape
    frames = [field.frames(k) for k in range(field.n_samples)]
    rank = frames[0].shape[1]
    if any(F.shape[1] != rank for F in frames):
        raise GapClosed("rank of the projection jumps across the grid")
    if rank == 0:
        return (0, 0.0) if return_float else 0

    def link(k1, k2):
        z = np.linalg.det(adjoint(frames[k1]) @ frames[k2])
        if abs(z) < 1e-8:
            raise GapClosed("vanishing link variable; grid too coarse for this field")
        return z / abs(z)

    def idx(i, j):
        return (i % G1) * G2 + (j % G2)

    U1 = np.empty((G1, G2), dtype=complex)
    U2 = np.empty((G1, G2), dtype=complex)
    for i in range(G1):
        for j in range(G2):
            U1[i, j] = link(idx(i, j), idx(i + 1, j))
            U2[i, j] = link(idx(i, j), idx(i, j + 1))
    F = np.angle(U1 * np.roll(U2, -1, axis=0) / (np.roll(U1, -1, axis=1) * U2))
    total = -F.sum() / (2 * np.pi)
    out = int(np.round(total))
    return (out, total) if return_float else out


def monopole_field(n_grid=24, mass=1.0, sign=1):
    """Analytic two-band fixture p = (1 + d.sigma/|d|)/2 of Chern number ``sign``.

    d = (sin 2 pi x, sin 2 pi y, m + cos 2 pi x + cos 2 pi y) with 0 < m < 2.
    """
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    g = np.arange(n_grid) / n_grid
    X, Y = np.meshgrid(g, g, indexing="ij")
    d = np.stack([np.sin(2 * np.pi * X), sign * np.sin(2 * np.pi * Y), mass + np.cos(2 * np.pi * X) + np.cos(2 * np.pi * Y)])
    d = d / np.linalg.norm(d, axis=0)
    P = 0.5 * (np.eye(2)[None] + np.einsum("kxy,kab->xyab", d, np.stack([sx, sy, sz])).reshape(-1, 2, 2))
    return DenseField(P, (n_grid, n_grid))


def chern_curvature_oracle(pfun, n_grid=200):
    """Continuum reference (i / 2 pi) sum tr(p [d_x p, d_y p]) dx dy by central differences."""
    h = 1.0 / n_grid
    total = 0.0
    for i in range(n_grid):
        for j in range(n_grid):
            x, y = i * h, j * h
            p = pfun(x, y)
            dx = (pfun(x + h, y) - pfun(x - h, y)) / (2 * h)
            dy = (pfun(x, y + h) - pfun(x, y - h)) / (2 * h)
            total += np.trace(p @ (dx @ dy - dy @ dx)) * h * h
    return float(np.real(1j * total / (2 * np.pi)))


# ---------------------------------------------------------------------------
# stably relative cocycles


@dataclass
class StablyRelativeCocycle:
    """(v1, v2, v0, u): v1, v2 on X, v0 on the cover of Y, u chart unitaries on Y."""

    v1: CechCocycle
    v2: CechCocycle
    v0: CechCocycle
    u: dict
    cover: object

    def __post_init__(self):
        if self.v1.dim != self.v2.dim:
            raise DimMismatch("v1 and v2 must share a fiber dimension")
        d = self.v1.dim + self.v0.dim
        for m, x in self.u.items():
            if np.asarray(x).shape != (d, d):
                raise DimMismatch("u_%r has the wrong size" % m)

    @property
    def ycover(self):
        return self.v0.cover

    def restricted(self):
        """(v1|_Y + v0, v2|_Y + v0) on the cover of Y."""
        c = self.cover
        yc = self.ycover
        r1 = restrict_cocycle(self.v1, yc, c.y_samples, c.y_index).direct_sum(self.v0)
        r2 = restrict_cocycle(self.v2, yc, c.y_samples, c.y_index).direct_sum(self.v0)
        return r1, r2


def exact_intertwiner(fv, sing_tol=1e-6):
    """Exactly intertwining chart maps ubar and the bundle map wbar on Y.

    Returns ``(ubar, wbar, report)``.  ``ubar[mu]`` is an array over the Y
    samples (NaN outside U_mu); ``wbar`` has shape (S_Y, m, m).
    """
    r1, r2 = fv.restricted()
    yc = fv.ycover
    I, S = yc.size, yc.n_samples
    n = r1.dim
    ubar = {m: np.full((S, n, n), np.nan, dtype=complex) for m in range(I)}
    wbar = np.zeros((S, I * n, I * n), dtype=complex)
    p1 = CocycleProjection(r1)
    p2 = CocycleProjection(r2)
    min_sv = np.inf
    for k in range(S):
        live = np.flatnonzero(yc.eta[:, k] > 0)
        m0 = int(np.argmax(yc.eta[:, k]))
        K = sum(yc.eta[m, k] ** 2 * r2.value(m0, m, k) @ fv.u[m] @ r1.value(m, m0, k) for m in live)
        sv = np.linalg.svd(K, compute_uv=False)
        min_sv = min(min_sv, sv[-1])
        if sv[-1] < sing_tol:
            raise AveragingSingular("averaged intertwiner singular at Y sample %d (sv %.2e)" % (k, sv[-1]))
        U0 = polar(K)[0]
        for m in np.flatnonzero(yc.members[:, k]):
            ubar[m][k] = r2.value(m, m0, k) @ U0 @ r1.value(m0, m, k)
        for a in live:
            for b in live:
                wbar[k, a * n : (a + 1) * n, b * n : (b + 1) * n] = (
                    yc.eta[a, k] * yc.eta[b, k] * r2.value(a, b, k) @ ubar[b][k]
                )
    dev = max(
        op_norm(ubar[m][k] - fv.u[m]) for m in range(I) for k in range(S) if yc.members[m, k]
    )
    exact = 0.0
    w_err = 0.0
    remark = 0.0
    for k in range(S):
        for a, b in yc.edges:
            if yc.members[a, k] and yc.members[b, k]:
                exact = max(exact, op_norm(ubar[a][k] @ r1.value(a, b, k) @ adjoint(ubar[b][k]) - r2.value(a, b, k)))
        P1, P2 = p1.at(k), p2.at(k)
        w = wbar[k]
        w_err = max(w_err, op_norm(adjoint(w) @ w - P1), op_norm(w @ adjoint(w) - P2))
        from scipy.linalg import block_diag

        remark = max(remark, op_norm(w - P2 @ block_diag(*[fv.u[m] for m in range(I)])))
    report = {
        "deviation": dev,
        "exactness": exact,
        "partialIsometryError": w_err,
        "remarkDistance": remark,
        "remarkBound": I**2 * dev,
        "minSingularValue": float(min_sv),
    }
    return ubar, wbar, report


def relative_class_clutching(fv, tol=1e-9):
    """Clutching degree of the relative class on the disk pair.

    The collar assembly f1(r) 1 + f2(r) ubar interpolates from the identity
    at the inner end to ubar on Y; its restriction to Y is the loop
    L(x) = wbar(x) + 1 - p(x), whose det winding along Y (counterclockwise)
    is the integer.  Requires v1 = v2 on Y, which holds whenever the
    absolute part is trivial (e.g. trivial Gamma).
    """
    r1, r2 = fv.restricted()
    for e in r1.v:
        if np.max(np.abs(r1.v[e] - r2.v[e]), initial=0) > tol:
            raise NotImplementedError("clutching evaluation needs v1 = v2 on Y")
    _, wbar, report = exact_intertwiner(fv)
    p = CocycleProjection(r1)
    loop = []
    for k in range(wbar.shape[0]):
        P = p.at(k)
        loop.append(wbar[k] + np.eye(P.shape[0]) - P)
    loop.append(loop[0])
    deg = det_winding(loop, closed=True)
    return deg, report
