"""Algebraic index classes, Fredholm-pair providers and both sides of the index identities.

Both built-in Fredholm pairs are Berezin-Toeplitz quantizations: for a
field f sampled at quadrature nodes x_j with weights w_j,

    phi1(f) = sum_j w_j f(x_j) |c_j><c_j|,

with coherent vectors c_j, and phi2(f) = f(x0) (x) 1 is evaluation at a
point.  phi1 is unital, positive and *-preserving and multiplicative up to
O(|grad f|^2 / M); phi1 - phi2 is far from compact at finite size but the
class is detected by rank (torus) or determinant winding (disk pair).

- torus: periodic Gaussian states C^a S^b g on C^M, M = 2N, nodes (a, b)/M;
- doubled disk: spin coherent states on C^M (the sphere S^2 obtained by
  collapsing the complement of the radius-2 disk to the value at infinity).
"""
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import gammaln

from .bundles import chern_number, cocycle_projection, relative_class_clutching
from .covers import circle_eta, disk_eta, rho, smooth01
from .errors import StepTooCoarse, TruncationTooCoarse
from .groups import E, GAMatrix, MCElement, ball, ga_mul, map_hom
from .monodromy import QuasiRepProjection, beta_full
from .numerics import BlockDiag, adjoint, op_norm
from .qk import QLoop, QProjection, k0_class_integer, k1_loop_integer, push_forward_projection
from .quasirep import almhom_bound, apply_ga, defect, mapping_cone_apply

DISK_OUTER = 2.0
# colatitudes of the unit circle and of the outer collar edge on the doubled disk
DISK_THETA = (0.45 * np.pi, 0.95 * np.pi)
DEFECT_MAX = 0.25


def coherent_vectors(M):
    """Periodic Gaussian coherent vectors on C^M, shape (M, M, M).

    ``vecs[a, b] = C^a S^b g`` where g is the normalized periodization of
    exp(-pi t^2 / M).
    """
    t = np.arange(M)
    g = sum(np.exp(-np.pi * (t - w * M) ** 2 / M) for w in range(-3, 4))
    g = g / np.linalg.norm(g)
    ph = np.exp(2j * np.pi * np.outer(np.arange(M), t) / M)  # C^a
    shifted = np.array([np.roll(g, b) for b in range(M)])  # S^b g
    return ph[:, None, :] * shifted[None, :, :]


def spin_coherent_vectors(M, colat, azim):
    """Spin-(M-1)/2 coherent vectors at the given sphere points, shape (P, M)."""
    j2 = M - 1
    k = np.arange(M)
    lc = np.log(np.maximum(np.cos(colat / 2), 1e-300))
    ls = np.log(np.maximum(np.sin(colat / 2), 1e-300))
    lb = 0.5 * (gammaln(j2 + 1) - gammaln(k + 1) - gammaln(j2 - k + 1))
    amp = np.exp(lb[None] + k[None] * lc[:, None] + (j2 - k)[None] * ls[:, None])
    return amp * np.exp(1j * k[None] * azim[:, None])


@dataclass
class FredholmPair:
    """Quasi-homomorphism (phi1, phi2) given by quadrature nodes and coherent vectors.

    ``points`` are the node coordinates in the space (torus coordinates, or
    plane coordinates for the disk pair); ``x0`` is the evaluation point of
    phi2 (None means the value at infinity).
    """

    space: str
    N: int
    M: int
    points: np.ndarray
    weights: np.ndarray
    vecs: np.ndarray
    x0: np.ndarray = None
    basis: str = ""

    def phi1_scalar(self, f_nodes):
        """phi1 of a scalar field given at the nodes."""
        wf = self.weights * np.asarray(f_nodes)
        return (self.vecs.T * wf) @ np.conj(self.vecs)

    def phi1_matrix(self, F_nodes):
        """phi1 (x) id of a matrix field given at the nodes, layout kron(F, mode)."""
        F = np.asarray(F_nodes)
        a = F.shape[1]
        out = np.zeros((a, self.M, a, self.M), dtype=complex)
        for x in range(a):
            for y in range(a):
                if np.any(F[:, x, y]):
                    out[x, :, y, :] = self.phi1_scalar(F[:, x, y])
        return out.reshape(a * self.M, a * self.M)

    def phi2_scalar(self, value):
        return value * np.eye(self.M, dtype=complex)

    def test_report(self, fields):
        """Unitality, adjointness and |phi1(f) - phi2(f)| on (f at nodes, f(x0)) test fields."""
        one = self.phi1_scalar(np.ones(len(self.points)))
        out = {"unital": op_norm(one - np.eye(self.M))}
        adj, diff = 0.0, []
        for f_nodes, f_x0 in fields:
            a = self.phi1_scalar(f_nodes)
            b = self.phi1_scalar(np.conj(f_nodes))
            adj = max(adj, op_norm(adjoint(a) - b))
            diff.append(op_norm(a - self.phi2_scalar(f_x0)))
        out["adjoint"] = adj
        out["difference"] = diff
        return out


def torus_fredholm_pair(N, x0=(0.5, 0.5)):
    M = 2 * N
    vecs = coherent_vectors(M).reshape(M * M, M)
    a, b = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    # the node attached to C^a S^b g is (a/M, b/M); the opposite
    # assignment flips the sign of the monopole fixture (+1 required).
    nodes = np.column_stack([a.ravel() / M, b.ravel() / M])
    w = np.full(M * M, 1.0 / M)
    return FredholmPair("torus", N, M, nodes, w, vecs, np.asarray(x0, dtype=float),
                        "periodic Gaussian states C^a S^b g on C^%d" % M)


def disk_radius(colat, theta=DISK_THETA):
    """Plane radius of a sphere point: [0, t1] -> [0, 1], [t1, t2] -> [1, 2], beyond -> > 2."""
    t1, t2 = theta
    return np.where(colat <= t1, colat / t1, 1 + (colat - t1) / (t2 - t1))


def doubled_disk_fredholm_pair(N, theta=DISK_THETA, oversample=2, orientation=1):
    """Spin coherent-state pair on the doubled disk, C^M with M = 2N.

    The disk center sits at the north pole, the unit circle at colatitude
    theta[0], the outer collar edge (radius 2) at theta[1]; everything
    beyond is the point at infinity.  Gauss-Legendre nodes in cos(colat)
    make phi1 exactly unital.  ``orientation`` is fixed by
    ``disk_orientation_fixture``.
    """
    M = 2 * N
    Kz, Kp = oversample * M, 2 * oversample * M
    z, wz = np.polynomial.legendre.leggauss(Kz)
    az = 2 * np.pi * np.arange(Kp) / Kp
    Z, A = np.meshgrid(z, az, indexing="ij")
    colat = np.arccos(Z.ravel())
    azim = A.ravel()
    w = (np.repeat(wz[:, None], Kp, axis=1) * (2 * np.pi / Kp)).ravel() * M / (4 * np.pi)
    vecs = spin_coherent_vectors(M, colat, azim)
    R = disk_radius(colat, theta)
    pts = np.column_stack([R * np.cos(orientation * azim), R * np.sin(orientation * azim)])
    return FredholmPair("disk", N, M, pts, w, vecs, None,
                        "spin coherent states on C^%d, %d x %d Gauss-Legendre nodes" % (M, Kz, Kp))


def _bump_bott_field(pts):
    """A degree-one two-band field on the plane, constant (e_z) outside radius 2."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    R = np.hypot(pts[:, 0], pts[:, 1])
    a = np.arctan2(pts[:, 1], pts[:, 0])
    chi = np.pi * (1 - smooth01(R / DISK_OUTER))
    d = np.stack([np.sin(chi) * np.cos(a), np.sin(chi) * np.sin(a), np.cos(chi)])
    return 0.5 * (np.eye(2)[None] + np.einsum("kp,kab->pab", d, np.stack([sx, sy, sz])))


def fixture_integer(fp, F_nodes, rank_inf):
    """rank of the spectral projection of phi1(F) minus M * rank(F(x0))."""
    w = np.linalg.eigvalsh(fp.phi1_matrix(F_nodes))
    return int(np.count_nonzero(w > 0.5)) - fp.M * rank_inf


def torus_monopole_integer(fp, sign=1, mass=1.0):
    """Fixture: the two-band monopole field through the torus pair (+1 for sign=1)."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    X, Y = fp.points[:, 0], fp.points[:, 1]
    d = np.stack([np.sin(2 * np.pi * X), sign * np.sin(2 * np.pi * Y),
                  mass + np.cos(2 * np.pi * X) + np.cos(2 * np.pi * Y)])
    d = d / np.linalg.norm(d, axis=0)
    P = 0.5 * (np.eye(2)[None] + np.einsum("kp,kab->pab", d, np.stack([sx, sy, sz])))
    return fixture_integer(fp, P, 1)


def disk_orientation_fixture(N=8, scale=0.22):
    """Orientation of the doubled-disk pair agreeing with the torus convention.

    A compactly supported degree-one field on the plane is quantized through
    the torus pair (plane embedded at scale ``scale``, orientation fixed by
    the monopole) and through the doubled disk with both orientations.
    Returns ``(orientation, torus_value, {orientation: disk_value})``.
    """
    tp = torus_fredholm_pair(N)
    z = (tp.points - 0.5) / scale
    tval = fixture_integer(tp, _bump_bott_field(z), 1)
    vals = {}
    for o in (1, -1):
        dp = doubled_disk_fredholm_pair(N, orientation=o)
        vals[o] = fixture_integer(dp, _bump_bott_field(dp.points), 1)
    match = [o for o in (1, -1) if vals[o] == tval]
    if len(match) != 1 or tval == 0:
        raise TruncationTooCoarse("orientation fixture inconclusive: torus %d, disk %s" % (tval, vals))
    return match[0], tval, vals


# ---------------------------------------------------------------------------
# Mishchenko projections


def mishchenko_projection(cover, points=None, eta=None):
    """P_V at the given points (default: cover samples) as a batched GAMatrix.

    P_V(x) = sum eta_mu(x) eta_nu(x) u_{gamma_mu nu} (x) e_{mu nu}.
    """
    if eta is None:
        eta = cover.eta if points is None else cover.eta_fn(points)
    I = cover.size
    S = eta.shape[1]
    coeffs = {}
    for a in range(I):
        for b in range(I):
            g = cover.transition(a, b)
            if g not in coeffs:
                coeffs[g] = np.zeros((S, I, I), dtype=complex)
            coeffs[g][:, a, b] += eta[a] * eta[b]
    return GAMatrix(cover.gamma, (I, I), coeffs)._pruned()


def boundary_projection(cover, points):
    """P_W on the collar: angular partition of unity with Lambda transitions, as an I x I GAMatrix."""
    th = np.mod(np.arctan2(points[:, 1], points[:, 0]) / (2 * np.pi), 1.0)
    ey = circle_eta(th)
    I = cover.size
    coeffs = {}
    for ia, a in enumerate(cover.y_index):
        for ib, b in enumerate(cover.y_index):
            g = cover.y_transition(a, b)
            if g not in coeffs:
                coeffs[g] = np.zeros((len(points), I, I), dtype=complex)
            coeffs[g][:, a, b] += ey[ia] * ey[ib]
    return GAMatrix(cover.lam, (I, I), coeffs)._pruned()


def _phi1_ga(fp, field):
    """phi1 applied to the scalar legs of a node-sampled GAMatrix field."""
    return GAMatrix(field.group, (field.shape[0] * fp.M,) * 2,
                    {g: fp.phi1_matrix(c) for g, c in field.coeffs.items()})


def _phi2_ga(fp, field_at_x0):
    I = field_at_x0.shape[0]
    return GAMatrix(
        field_at_x0.group,
        (I * fp.M, I * fp.M),
        {g: np.kron(c, np.eye(fp.M)) for g, c in field_at_x0.coeffs.items()},
    )


def _block2(group, A, B, C, D):
    n = A.shape[0]
    keys = set(A.coeffs) | set(B.coeffs) | set(C.coeffs) | set(D.coeffs)
    out = {}
    for k in keys:
        m = np.zeros((2 * n, 2 * n), dtype=complex)
        for X, (i, j) in ((A, (0, 0)), (B, (0, 1)), (C, (1, 0)), (D, (1, 1))):
            if k in X.coeffs:
                m[i * n : (i + 1) * n, j * n : (j + 1) * n] = X.coeffs[k]
        out[k] = m
    return GAMatrix(group, (2 * n, 2 * n), out)._pruned()


@dataclass
class IndexClass:
    """V diag(P1, 1 - P2) V over the group algebra with its base rank."""

    matrix: GAMatrix
    base_rank: int
    P1: GAMatrix
    P2: GAMatrix
    cover: object
    fp: FredholmPair
    character_defect: float = None


def character_defect(x, n_chars=12):
    """max over a character grid of |x(theta)^2 - x(theta)| (abelian groups).

    For free abelian groups the C*-norm is the sup over characters, so this
    is a sampled value of the group-algebra defect.
    """
    g = x.group
    if g.kind == "trivial":
        thetas = [np.zeros(0)]
    else:
        grid = 2 * np.pi * np.arange(n_chars) / n_chars
        thetas = [np.array(t) for t in np.stack(np.meshgrid(*[grid] * g.rank, indexing="ij"), -1).reshape(-1, g.rank)]
    worst = 0.0
    for th in thetas:
        K = x.character(th)
        K = (K + adjoint(K)) / 2
        w = np.linalg.eigvalsh(K)
        worst = max(worst, float(np.max(np.abs(w * w - w))))
    return worst


def algebraic_index_class(cover, fp, n_chars=12, strict=True):
    """The class V diag(P1, 1 - P2) V with base rank |I| M (per unit fiber).

    The defect is sampled over characters of Gamma; in strict mode a defect
    >= 1/4 raises TruncationTooCoarse.
    """
    if cover.space != fp.space:
        raise ValueError("Fredholm pair for %r does not fit a %r cover" % (fp.space, cover.space))
    G = cover.gamma
    I, M = cover.size, fp.M
    eta_nodes = cover.eta_fn(fp.points)
    P1 = _phi1_ga(fp, mishchenko_projection(cover, eta=eta_nodes))
    P2 = _phi2_ga(fp, mishchenko_projection(cover, eta=cover.eta_fn(fp.x0[None])).at(0))
    one = GAMatrix.identity(G, I * M)
    Q2 = one - P2
    V = _block2(G, P2, Q2, Q2, P2)
    Z = GAMatrix.zeros(G, (I * M, I * M))
    D = _block2(G, P1, Z, Z, Q2)
    K = ga_mul(ga_mul(V, D), V)
    cdef = character_defect(K, n_chars)
    if strict and cdef >= DEFECT_MAX:
        raise TruncationTooCoarse("class defect %.3f >= 1/4 at N = %d" % (cdef, fp.N))
    return IndexClass(K, I * M, P1, P2, cover, fp, cdef)


def quantitative_lhs(pi, cls, strict=False):
    """Integer of the pushed-forward class (id (x) pi)(V diag(P1, 1 - P2) V).

    Returns ``(integer, report)``.  With ``strict`` the pushforward budget of
    the almost-homomorphism is enforced (BudgetExceeded otherwise).
    """
    t0 = time.time()
    r = cls.matrix.propagation
    eps_h = almhom_bound(pi, max(r, 1))
    x = QProjection(None, cls.character_defect, r, cls.base_rank)
    mat = apply_ga(pi, cls.matrix, r)
    q = push_forward_projection(mat, x, eps_h, r, strict=strict, base_rank=cls.base_rank * pi.dim)
    integer = k0_class_integer(q)
    report = {
        "integer": integer,
        "classDefect": cls.character_defect,
        "measuredDefect": q.defect,
        "formulaDefect": q.formula_defect,
        "almhomEpsilon": eps_h,
        "propagation": r,
        "dim": mat.shape[0] if mat is not None else None,
        "seconds": time.time() - t0,
        "hypothesisSatisfied": q.formula_defect < 0.25,
    }
    return integer, report


def trace_pairing(pi, cls, integer=None, eps=None):
    """Normalized trace of the pushed-forward class difference.

    tau(q) - tau(base) with tau the trace of M_n normalized to 1; returns
    ``(value, bound)`` where ``bound = 2 * dim * eps / n`` controls the
    distance to ``integer / n``.
    """
    mat = apply_ga(pi, cls.matrix, cls.matrix.propagation)
    n = pi.dim
    val = float(np.real(np.trace(mat)) - cls.base_rank * n) / n
    if eps is None:
        eps = cls.character_defect
    return val, 2 * mat.shape[0] * eps / n


def lemma_quant1_check(pi, cls):
    """|(id (x) pi)(class) - v_pi diag(p_{pi,1}, 1 - p_{pi,2}) v_pi| and 3 |𝒢^3|^2 eps."""
    fp, cover = cls.fp, cls.cover
    I, M, n = cover.size, fp.M, pi.dim
    PV = mishchenko_projection(cover, eta=cover.eta_fn(fp.points))
    # p_{pi,1} = (phi1 (x) id)(p_pi)
    coeff = _phi1_ga(fp, PV)
    p1 = apply_ga(pi, coeff)
    p2 = apply_ga(pi, _phi2_ga(fp, mishchenko_projection(cover, eta=cover.eta_fn(fp.x0[None])).at(0)))
    one = np.eye(p1.shape[0])
    q2 = one - p2
    v = np.block([[p2, q2], [q2, p2]])
    d = sla.block_diag(p1, q2)
    rhs = v @ d @ v
    lhs = apply_ga(pi, cls.matrix, cls.matrix.propagation)
    S3 = ball(pi.group, 3)
    eps = defect(pi, S3)
    return op_norm(lhs - rhs), 3 * len(S3) ** 2 * eps


def ppipv_check(pi, cover, v=None):
    """max_x |p_pi(x) - p_v(x)| for v = beta(pi) against 4 |I|^2 defect(pi, 𝒢^1)."""
    if v is None:
        v = beta_full(pi, cover).cocycle
    P = QuasiRepProjection(pi, cover)
    Pv = cocycle_projection(v, check=False)
    worst = max(op_norm(P.at(k) - Pv.at(k)) for k in range(cover.n_samples))
    eps = defect(pi, ball(pi.group, 1))
    return worst, 4 * cover.size**2 * eps


def pairing_rhs(data, space):
    """Topological side: Chern number (torus) or clutching degree (disk pair)."""
    if space == "torus":
        return chern_number(cocycle_projection(data))
    if space == "disk":
        return relative_class_clutching(data)[0]
    raise ValueError("no evaluator for space %r" % space)


def constants_report(cover, r=3):
    """Constants C1 = max(15 |𝒢_Gamma^3|^2, 200 |I|^2), C2 = max(320 |I|^2, 40 |𝒢_Lambda^2|^2)."""
    I = cover.size
    g3 = len(ball(cover.gamma, 3)) if cover.gamma.rank else 1
    out = {"I": I, "G3": g3, "C1": max(15 * g3**2, 200 * I**2)}
    out["threshold1"] = 1 / (4 * out["C1"])
    if cover.lam is not None:
        l2 = len(ball(cover.lam, 2))
        out["IY"] = len(cover.y_index)
        out["L2"] = l2
        out["C2"] = max(320 * I**2, 40 * l2**2)
        out["threshold2"] = 1 / (4 * out["C2"])
    sizes = {}
    for k in range(1, r + 1):
        sizes["Gamma%d" % k] = len(ball(cover.gamma, k)) if cover.gamma.rank else 1
        if cover.lam is not None:
            sizes["Lambda%d" % k] = len(ball(cover.lam, k))
    out["ballSizes"] = sizes
    return out


# ---------------------------------------------------------------------------
# relative index class on the disk pair


def _collar_h(s, R):
    """-e^{-pi i rho_s} - 1 on the open collar 1 < R < 2 (and 0 beyond R >= 2)."""
    h = -np.exp(-1j * np.pi * rho(s, R)) - 1
    return np.where(R < DISK_OUTER, h, 0.0)


@dataclass
class RelMishchenkoData:
    """Node-sampled U_W (over Lambda) and the s-path V_{V,s} (over Gamma)."""

    cover: object
    s_values: np.ndarray
    U: GAMatrix
    V_path: list

    def check(self, fp):
        """Pointwise identities U = 1 + h_0 P_W and the boundary compatibility."""
        return map_hom(self.cover.hom, self.U).allclose(self.V_path[0], atol=1e-12)


def rel_mishchenko_data(cover, fp, s_count=33):
    pts = fp.points
    R = np.hypot(pts[:, 0], pts[:, 1])
    I = cover.size
    collar = (R > 1) & (R < DISK_OUTER)
    PW = boundary_projection(cover, pts)
    h0 = np.where(collar, _collar_h(0.0, R), 0.0)
    U = {E: np.repeat(np.eye(I, dtype=complex)[None], len(pts), axis=0)}
    for g, c in PW.coeffs.items():
        U[g] = U.get(g, 0) + h0[:, None, None] * c
    U = GAMatrix(cover.lam, (I, I), U)
    PV = mishchenko_projection(cover, eta=disk_eta(pts))
    s_values = np.linspace(0.0, 1.0, s_count)
    Vs = []
    for s in s_values:
        hs = _collar_h(s, R)
        c = {E: np.repeat(np.eye(I, dtype=complex)[None], len(pts), axis=0)}
        for g, x in PV.coeffs.items():
            c[g] = c.get(g, 0) + hs[:, None, None] * x
        Vs.append(GAMatrix(cover.gamma, (I, I), c))
    return RelMishchenkoData(cover, s_values, U, Vs)


@dataclass
class RelativeIndexClass:
    """The mapping-cone element (U1 U2*, V_{1,s} V_{2,s}*) and its sampled defect."""

    element: MCElement
    defect: float
    data: RelMishchenkoData
    fp: FredholmPair
    certified: bool = True


def _unitary_defect_ga(x, n_chars=24):
    """Sampled C*-norm of x* x - 1 and x x* - 1 over characters of an abelian group."""
    g = x.group
    if g.kind == "trivial" or g.rank == 0:
        thetas = [np.zeros(0)]
    else:
        grid = 2 * np.pi * np.arange(n_chars) / n_chars
        thetas = [np.array(t) for t in np.stack(np.meshgrid(*[grid] * g.rank, indexing="ij"), -1).reshape(-1, g.rank)]
    worst = 0.0
    for th in thetas:
        K = x.character(th)
        e = np.eye(K.shape[0])
        worst = max(worst, op_norm(adjoint(K) @ K - e), op_norm(K @ adjoint(K) - e))
    return worst


def relative_algebraic_index_class(cover, fp, s_count=33, strict=True):
    """(U1 U2*, V_{1,s} V_{2,s}*) with phi2 the value at infinity (U2 = V_{2,s} = 1).

    The unitarity defect is sampled over characters of Lambda and over the
    s-grid.  In strict mode a defect >= 1/4 raises TruncationTooCoarse;
    otherwise the class is kept with ``certified = False`` (the integer
    extraction only needs invertibility of the loop samples).
    """
    if not cover.has_y:
        raise ValueError("relative index class needs a cover with a Y-part")
    if fp.space != "disk" or fp.x0 is not None:
        raise ValueError("relative index class needs the doubled-disk pair")
    data = rel_mishchenko_data(cover, fp, s_count)
    U1 = _phi1_ga(fp, data.U)
    b_path = [_phi1_ga(fp, V) for V in data.V_path]
    m = MCElement(U1, b_path, cover.hom, data.s_values)
    dfct = max([_unitary_defect_ga(U1)] + [_unitary_defect_ga(b) for b in b_path])
    if strict and dfct >= DEFECT_MAX:
        raise TruncationTooCoarse("relative class defect %.3f >= 1/4 at N = %d" % (dfct, fp.N))
    return RelativeIndexClass(m, dfct, data, fp, dfct < DEFECT_MAX)


def relative_loop(rel, rclass, t_count=33, strict=False):
    """Assemble the closed loop w(s) = first(s) second(s)* over s in [-1, 1].

    For s > 0 only the P-block moves; the other coordinates are frozen at
    their (positive) value at s = 0, which the polar correction maps to 1.
    """
    samples, info = mapping_cone_apply(rel, rclass.element, t_count=t_count, strict=strict)
    neg = [c for c in samples if c.s <= 0]
    pos = [c for c in samples if c.s > 0]
    ws = [c.first @ c.second.adjoint() for c in neg]
    w0 = ws[-1]
    p = rel.p
    coords, mult = w0.coords, w0.mult
    # map P-blocks (s > 0) to full blocks
    pmap = [j for j, cs in enumerate(coords) if np.any(np.asarray(cs) < p)]
    C = w0.coef_dim
    for c in pos:
        wp = c.first @ c.second.adjoint()
        blocks = [b.copy() for b in w0.blocks]
        for jp, j in enumerate(pmap):
            cs = np.asarray(coords[j])
            if mult[j] > 1 or len(cs) == 1 or np.all(cs < p):
                blocks[j] = wp.blocks[jp]
            else:
                d = len(cs)
                loc = np.flatnonzero(cs < p)
                idx = (np.arange(C)[:, None] * d + loc[None, :]).ravel()
                blocks[j][idx, :] = 0
                blocks[j][:, idx] = 0
                blocks[j][np.ix_(idx, idx)] = wp.blocks[jp]
        ws.append(BlockDiag(C, w0.width, coords, blocks, mult))
    s_all = np.array([c.s for c in neg] + [c.s for c in pos])
    return QLoop(ws, s_all, strict=strict), info


def relative_quantitative_lhs(rel, rclass, t_count=33, strict=False, max_refine=3):
    """Winding integer of the pi-bar image of the relative class.

    The t-grid is doubled (up to ``max_refine`` times) when a step of the
    loop is too coarse for the determinant winding.
    """
    t0 = time.time()
    last = None
    for _ in range(max_refine + 1):
        try:
            loop, info = relative_loop(rel, rclass, t_count=t_count, strict=strict)
            integer, wind = k1_loop_integer(loop, return_float=True)
            break
        except StepTooCoarse as exc:
            last = exc
            t_count = 2 * t_count - 1
    else:
        raise last
    report = {
        "integer": integer,
        "winding": wind,
        "tCount": t_count,
        "loopDefect": loop.defect,
        "classDefect": rclass.defect,
        "classCertified": rclass.certified,
        "endpointDeviation": loop.endpoint_deviation,
        "intertwinerDefect": info["intertwinerDefect"],
        "blocks": info["blocks"],
        "seconds": time.time() - t0,
        "hypothesisSatisfied": bool(info["hypothesisSatisfied"] and rclass.certified),
    }
    return integer, report
