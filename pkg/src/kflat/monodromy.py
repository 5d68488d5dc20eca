"""Almost monodromy correspondence: beta (quasi-rep -> cocycle) and alpha (back)."""
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .bundles import (
    CechCocycle,
    ProjectionField,
    StablyRelativeCocycle,
    flatness_defect,
    morphism_defect,
    normalized_on_tree,
)
from .errors import GapClosed, NotNormalized
from .groups import ball
from .numerics import adjoint, op_norm, polar
from .quasirep import QuasiRep, RelativeQuasiRep, defect, distance

GAP_TOL = 1e-3


class QuasiRepProjection(ProjectionField):
    """p_pi(x) = sum eta_mu(x) eta_nu(x) pi(gamma_{mu nu}) (x) e_{mu nu}."""

    def __init__(self, pi, cover):
        self.pi, self.cover = pi, cover
        self.n_samples = cover.n_samples
        self.grid_shape = cover.grid_shape
        self.dim = cover.size * pi.dim
        I = cover.size
        self._img = [[pi(cover.transition(a, b)) for b in range(I)] for a in range(I)]

    def at(self, k):
        c, n = self.cover, self.pi.dim
        out = np.zeros((self.dim, self.dim), dtype=complex)
        live = np.flatnonzero(c.eta[:, k] > 0)
        for a in live:
            for b in live:
                out[a * n : (a + 1) * n, b * n : (b + 1) * n] = c.eta[a, k] * c.eta[b, k] * self._img[a][b]
        return out

    def stacked(self, mu, k):
        """s_mu(x) = sum_nu eta_nu(x) e_nu (x) pi(gamma_{nu mu})."""
        c, n = self.cover, self.pi.dim
        out = np.zeros((self.dim, n), dtype=complex)
        for nu in np.flatnonzero(c.eta[:, k] > 0):
            out[nu * n : (nu + 1) * n] = c.eta[nu, k] * self._img[nu][mu]
        return out


@dataclass
class BetaResult:
    cocycle: CechCocycle
    min_gap: float
    deviation: float
    frames: list = field(default=None, repr=False)


def beta_full(pi, cover, keep_frames=False, gap_tol=GAP_TOL):
    """beta with diagnostics; see ``beta``."""
    field_ = QuasiRepProjection(pi, cover)
    n, I, S = pi.dim, cover.size, cover.n_samples
    F = [dict() for _ in range(S)]
    kept = [] if keep_frames else None
    min_gap = np.inf
    for k in range(S):
        w, Q = np.linalg.eigh(field_.at(k))
        gap = float(np.min(np.abs(w - 0.5)))
        min_gap = min(min_gap, gap)
        Q = Q[:, w > 0.5]
        if gap < gap_tol or Q.shape[1] != n:
            raise GapClosed("p_pi has no spectral gap at 1/2 at sample %d (gap %.2e, rank %d)" % (k, gap, Q.shape[1]))
        if keep_frames:
            kept.append(Q)
        for mu in np.flatnonzero(cover.members[:, k]):
            F[k][mu] = polar(adjoint(Q) @ field_.stacked(mu, k))[0]
    v = {}
    dev = 0.0
    for a, b in cover.edges:
        idx = cover.overlap(a, b)
        arr = np.array([adjoint(F[k][a]) @ F[k][b] for k in idx]).reshape(len(idx), n, n)
        v[(a, b)] = arr
        ref = pi(cover.transition(a, b))
        dev = max(dev, max((op_norm(x - ref) for x in arr), default=0.0))
    return BetaResult(CechCocycle(cover, n, v), min_gap, dev, kept)


def beta(pi, cover):
    """Almost flat cocycle of a quasi-representation.

    The spectral projection q of p_pi at 1/2 is computed samplewise; the
    frames phi_mu = polar(q s_mu) share range q, so v_{mu nu} = phi_mu* phi_nu
    is an exact cocycle.
    """
    return beta_full(pi, cover).cocycle


def basepoints(cover):
    """x*_{mu nu}: the overlap sample maximizing eta_mu eta_nu (lowest index on ties)."""
    out = {}
    for a, b in cover.edges:
        prod = cover.eta[a] * cover.eta[b]
        out[(a, b)] = int(np.argmax(prod))
    return out


def tree_gauges(v, cover, xs=None):
    """w_mu: product of v along the tree path from the root, at the basepoints."""
    xs = basepoints(cover) if xs is None else xs
    w = {}
    for mu in range(cover.size):
        path = cover.tree_path(mu)
        g = np.eye(v.dim, dtype=complex)
        for a, b in zip(path[:-1], path[1:]):
            g = g @ v.value(a, b, xs[(min(a, b), max(a, b))])
        w[mu] = g
    return w


def alpha(v, cover, tol=0.25):
    """Holonomy quasi-representation of a cocycle normalized on the tree.

    pi(gamma_{mu nu}) = w_mu v_{mu nu}(x*) w_nu*, read off on the first edge
    carrying each generator; inverse images are adjoints.
    """
    ok, worst = normalized_on_tree(v, cover.tree, tol)
    if not ok:
        raise NotNormalized("tree deviation %.3f >= %.2f" % (worst, tol))
    G = cover.gamma
    xs = basepoints(cover)
    w = tree_gauges(v, cover, xs)
    gens = {}
    for a, b in sorted(cover.edges):
        t = cover.transition(a, b)
        if len(t) != 1:
            continue
        k = t[0]
        if abs(k) in gens:
            continue
        img = w[a] @ v.value(a, b, xs[(a, b)]) @ adjoint(w[b])
        img = polar(img)[0]
        gens[abs(k)] = img if k > 0 else adjoint(img)
    missing = [G.names[k - 1] for k in range(1, G.rank + 1) if k not in gens]
    if missing:
        raise ValueError("generators %s do not occur as transitions" % missing)
    if not G.rank:
        return QuasiRep(G, v.dim, {})
    return QuasiRep.from_generators(G, [gens[k] for k in range(1, G.rank + 1)])


def cocycle_distance(v, w):
    """max over edges and samples of |v - w|."""
    return max(
        (op_norm(x - y) for e in v.v for x, y in zip(v.v[e], w.v[e])),
        default=0.0,
    )


# ---------------------------------------------------------------------------
# relative versions


def beta_relative(rel, cover):
    """(beta(pi1), beta(pi2), beta(pi0) on Y, constant u on each chart of Y)."""
    yc = cover.restrict_to_y()
    v1 = beta(rel.pi1, cover)
    v2 = beta(rel.pi2, cover)
    v0 = beta(rel.pi0, yc)
    u = {m: rel.u.copy() for m in range(yc.size)}
    return StablyRelativeCocycle(v1, v2, v0, u, cover)


def alpha_relative(fv, cover):
    """Componentwise alpha with u read off at the root chart of Y."""
    if fv.cover is not cover:
        raise ValueError("stably relative cocycle belongs to a different cover pair")
    yc = fv.ycover
    pi1 = alpha(fv.v1, cover)
    pi2 = alpha(fv.v2, cover)
    pi0 = alpha(fv.v0, yc)
    root = cover.y_root()
    w1 = tree_gauges(fv.v1, cover)[root]
    w2 = tree_gauges(fv.v2, cover)[root]
    w0 = tree_gauges(fv.v0, yc)[yc.root]
    ur = fv.u[yc.root]
    u = sla.block_diag(w2, w0) @ ur @ adjoint(sla.block_diag(w1, w0))
    return RelativeQuasiRep(pi1, pi2, pi0, polar(u)[0], cover.hom)


# ---------------------------------------------------------------------------
# reports


@dataclass
class MonodromyReport:
    defect_in: float
    defect_out: float
    distance: float
    ratio: float
    cocycle_distance: float
    flatness: float
    tree_deviation: float
    beta_deviation: float
    threshold: float = None
    passed: bool = None

    def to_json(self):
        return asdict(self)


def round_trip_report(pi, cover, threshold=None, flatness=True):
    """Measure d(alpha(beta(pi)), pi) and d(beta(alpha(v)), v) for v = beta(pi)."""
    S1 = ball(pi.group, 1)
    res = beta_full(pi, cover)
    v = res.cocycle
    pi2 = alpha(v, cover)
    d_in = defect(pi, S1)
    d_out = defect(pi2, S1)
    dist = distance(pi2, pi, S1)
    v2 = beta(pi2, cover)
    cd = cocycle_distance(v2, v)
    ratio = dist / d_in if d_in > 0 else (0.0 if dist <= 1e-7 else np.inf)
    rep = MonodromyReport(
        defect_in=d_in,
        defect_out=d_out,
        distance=dist,
        ratio=ratio,
        cocycle_distance=cd,
        flatness=flatness_defect(v) if flatness else None,
        tree_deviation=normalized_on_tree(v, cover.tree)[1],
        beta_deviation=res.deviation,
    )
    if threshold is not None:
        rep.threshold = threshold
        rep.passed = bool(dist <= threshold * max(d_in, 1e-300) or dist <= 1e-7)
    return rep


def relative_round_trip(rel, cover):
    """Distances of alphaRelative(betaRelative(rel)) to rel, componentwise."""
    fv = beta_relative(rel, cover)
    back = alpha_relative(fv, cover)
    SG = ball(rel.pi1.group, 1)
    SL = ball(rel.pi0.group, 1)
    out = {
        "pi1": distance(back.pi1, rel.pi1, SG),
        "pi2": distance(back.pi2, rel.pi2, SG),
        "pi0": distance(back.pi0, rel.pi0, SL),
        "u": op_norm(back.u - rel.u),
        "epsilon": rel.epsilon(1),
        "intertwinerOut": back.intertwiner_defect(SL),
    }
    out["distance"] = max(out["pi1"], out["pi2"], out["pi0"], out["u"])
    out["morphismDefect"] = morphism_defect(fv.u, *fv.restricted())
    return out
