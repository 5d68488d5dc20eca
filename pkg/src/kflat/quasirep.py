"""Quasi-representations, relative quasi-representations and their evaluation.

Evaluation rule
---------------
Generators (and separately stored inverse images) give their stored
matrices.  A free-abelian word whose exponent vector is lexicographically
nonnegative is the ordered product of generator powers; a negative one is
evaluated as ``pi(g^-1)*``.  Free-group words are the product of letter
images.  Hence ``pi(g^-1) = pi(g)*`` for every word once the inverse images
are the adjoints of the generator images.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    BoundViolation,
    DefectTooLarge,
    DimMismatch,
    PolarBreakdown,
    PropagationExceeded,
    SingularCompression,
)
from .groups import E, GAMatrix, GroupHom, GroupSpec, ball
from .numerics import BlockDiag, adjoint, as_cmatrix, op_norm, polar, unitary_log


@dataclass
class QuasiRep:
    """A map from a group to unitaries, given on generators."""

    group: GroupSpec
    dim: int
    images: dict
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        imgs = {}
        for k, m in self.images.items():
            key = k if isinstance(k, (int, np.integer)) else self.group.parse(k)
            if isinstance(key, tuple):
                if len(key) != 1:
                    raise ValueError("images must be given on generators")
                key = key[0]
            m = as_cmatrix(m)
            if m.shape != (self.dim, self.dim):
                raise DimMismatch("image of %r has shape %r" % (k, m.shape))
            imgs[int(key)] = m
        for k in range(1, self.group.rank + 1):
            if k not in imgs and -k not in imgs:
                raise ValueError("missing image for generator %s" % self.group.names[k - 1])
            if -k not in imgs:
                imgs[-k] = adjoint(imgs[k])
            if k not in imgs:
                imgs[k] = adjoint(imgs[-k])
        self.images = imgs
        self._cache = {}

    @classmethod
    def from_generators(cls, group, mats):
        """Quasi-representation with ``pi(g^-1) = pi(g)*`` from generator images."""
        mats = [as_cmatrix(m) for m in mats]
        n = mats[0].shape[0] if mats else 1
        return cls(group, n, {k + 1: m for k, m in enumerate(mats)})

    @classmethod
    def trivial(cls, group, n):
        return cls.from_generators(group, [np.eye(n)] * group.rank) if group.rank else cls(group, n, {})

    def __call__(self, word):
        return self.evaluate(word)

    def evaluate(self, word):
        g = self.group
        key = g.normal_form(word)
        if key in self._cache:
            return self._cache[key]
        if not key:
            out = np.eye(self.dim, dtype=complex)
        elif len(key) == 1:
            out = self.images[key[0]]
        elif g.kind == "free-abelian":
            v = g.exponents(key)
            nz = v[np.flatnonzero(v)]
            if nz[0] < 0:
                out = adjoint(self.evaluate(g.inverse(key)))
            else:
                out = np.eye(self.dim, dtype=complex)
                for x in key:
                    out = out @ self.images[x]
        else:
            out = np.eye(self.dim, dtype=complex)
            for x in key:
                out = out @ self.images[x]
        self._cache[key] = out
        return out

    def is_self_adjoint(self, tol=1e-12):
        return all(op_norm(self.images[-k] - adjoint(self.images[k])) <= tol for k in range(1, self.group.rank + 1))

    def generator_images(self):
        return [self.images[k] for k in range(1, self.group.rank + 1)]

    def to_json(self):
        return {
            "group": self.group.to_json(),
            "dim": self.dim,
            "images": {
                self.group.format((k,)): [[[z.real, z.imag] for z in row] for row in m]
                for k, m in sorted(self.images.items())
            },
        }

    @classmethod
    def from_json(cls, d):
        g = GroupSpec.from_json(d["group"])
        imgs = {}
        for sym, rows in d["images"].items():
            a = np.array(rows, dtype=float)
            imgs[sym] = a[..., 0] + 1j * a[..., 1]
        return cls(g, int(d["dim"]), imgs)


def clock(n):
    return np.diag(np.exp(2j * np.pi * np.arange(n) / n))


def shift(n):
    """Cyclic shift with ``S e_j = e_{j+1}``."""
    return np.roll(np.eye(n, dtype=complex), 1, axis=0)


def direct_sum(*reps):
    g = reps[0].group
    return QuasiRep(
        g,
        sum(r.dim for r in reps),
        {k: sla.block_diag(*[r.images[k] for r in reps]) for k in reps[0].images},
    )


def conjugate(pi, w):
    """The quasi-representation ``Ad(w) o pi``."""
    return QuasiRep(pi.group, pi.dim, {k: w @ m @ adjoint(w) for k, m in pi.images.items()})


def defect(pi, S):
    """max over g, h in S of |pi(g) pi(h) - pi(gh)|."""
    S = list(S)
    g = pi.group
    out = 0.0
    for x in S:
        px = pi(x)
        for y in S:
            out = max(out, op_norm(px @ pi(y) - pi(g.multiply(x, y))))
    return out


def distance(pi, rho, S):
    if pi.dim != rho.dim:
        raise DimMismatch("dims %d and %d" % (pi.dim, rho.dim))
    return max(op_norm(pi(x) - rho(x)) for x in S)


def self_adjointify(pi, r=1):
    """Self-adjoint quasi-representation near ``pi``.

    Each generator image becomes the polar part of (pi(g) + pi(g^-1)*)/2 and
    the inverse image its adjoint.  The bounds defect <= 70 eps and
    distance <= 20 eps on 𝒢^r are asserted.
    """
    S = ball(pi.group, r)
    eps = defect(pi, S)
    if eps >= 1 / 280:
        raise DefectTooLarge("defect %.3e >= 1/280" % eps)
    gens = []
    for k in range(1, pi.group.rank + 1):
        gens.append(polar((pi.images[k] + adjoint(pi.images[-k])) / 2)[0])
    out = QuasiRep.from_generators(pi.group, gens) if gens else QuasiRep(pi.group, pi.dim, {})
    d_out = defect(out, S)
    dist = distance(pi, out, S)
    if d_out > 70 * eps + 1e-12 or dist > 20 * eps + 1e-12:
        raise BoundViolation("self-adjointify bounds: defect %.3e, distance %.3e, eps %.3e" % (d_out, dist, eps))
    return out


def kron_accumulate(out, c, m):
    """``out += kron(c, m)`` without allocating the full product."""
    R, C = c.shape
    n1, n2 = m.shape
    o4 = out.reshape(R, n1, C, n2)
    for i in range(R):
        row = c[i]
        nz = np.flatnonzero(row)
        if nz.size == 0:
            continue
        o4[i][:, nz, :] += row[nz][None, :, None] * m[:, None, :]
    return out


def apply_ga(pi, x, r=None):
    """Evaluate a group-algebra matrix: sum_g kron(c_g, pi(g)).

    Batched coefficients give a batched result.
    """
    if r is not None and x.propagation > r:
        raise PropagationExceeded("propagation %d > %d" % (x.propagation, r))
    n = pi.dim
    R, C = x.shape
    out = np.zeros(x.batch + (R * n, C * n), dtype=complex)
    if not x.batch:
        for k, c in x.coeffs.items():
            kron_accumulate(out, c, pi(k))
        return out
    for k, c in x.coeffs.items():
        out += np.einsum("...ij,kl->...ikjl", c, pi(k)).reshape(out.shape)
    return out


def almhom_bound(pi, r):
    """(|𝒢^r|^2 eps) for the almost-homomorphism induced by pi on propagation r."""
    S = ball(pi.group, r)
    return len(S) ** 2 * defect(pi, S)


# ---------------------------------------------------------------------------
# relative quasi-representations


@dataclass
class RelativeQuasiRep:
    """(pi1, pi2, pi0, u) for a pair of groups with ``hom: Lambda -> Gamma``.

    pi1, pi2 act on C^p (Gamma), pi0 on C^q (Lambda) and u is a unitary on
    C^{p+q} intertwining pi1 o phi + pi0 with pi2 o phi + pi0 up to a defect.
    """

    pi1: QuasiRep
    pi2: QuasiRep
    pi0: QuasiRep
    u: np.ndarray
    hom: GroupHom

    def __post_init__(self):
        if self.pi1.dim != self.pi2.dim:
            raise DimMismatch("pi1 and pi2 must share a dimension")
        self.u = as_cmatrix(self.u)
        if self.u.shape != (self.p + self.q,) * 2:
            raise DimMismatch("u has shape %r, expected %d" % (self.u.shape, self.p + self.q))
        if op_norm(adjoint(self.u) @ self.u - np.eye(self.p + self.q)) > 1e-9:
            raise ValueError("u is not unitary")

    @property
    def p(self):
        return self.pi1.dim

    @property
    def q(self):
        return self.pi0.dim

    def joint(self, i, word):
        """(pi_i o phi + pi0)(word), i in {1, 2}."""
        pi = self.pi1 if i == 1 else self.pi2
        return sla.block_diag(pi(self.hom.apply(word)), self.pi0(word))

    def intertwiner_defect(self, S):
        u = self.u
        return max(op_norm(u @ self.joint(1, w) @ adjoint(u) - self.joint(2, w)) for w in S)

    def epsilon(self, r=1):
        SG = ball(self.pi1.group, r)
        SL = ball(self.pi0.group, r)
        return max(defect(self.pi1, SG), defect(self.pi2, SG), defect(self.pi0, SL), self.intertwiner_defect(SL))

    # -- the almost-homomorphism on the mapping cone ------------------------
    def ubar_path(self):
        """Return (ubar1, L) with ubar_t = exp((2 - t) L) and ubar_1 = diag(u, u*)."""
        ub1 = sla.block_diag(self.u, adjoint(self.u))
        return ub1, unitary_log(ub1)

    def _D(self, i, word):
        d = self.p + self.q
        return sla.block_diag(self.joint(i, word), np.eye(d))

    def pitilde(self, word, t, ub=None):
        """(pi~_{1,t}(word), pi~_{2,t}(word), smallest eigenvalue of pi~'* pi~')."""
        ub1, L = ub if ub is not None else self.ubar_path()
        D1, D2 = self._D(1, word), self._D(2, word)
        prime = (t - 1) * D1 + (2 - t) * (adjoint(ub1) @ D2 @ ub1)
        lam_min = float(np.linalg.eigvalsh(adjoint(prime) @ prime)[0])
        if lam_min <= 1e-6:
            raise PolarBreakdown("pi~'* pi~' has eigenvalue %.3e" % lam_min)
        first = polar(prime)[0]
        ut = sla.expm((2 - t) * L)
        second = adjoint(ut) @ D2 @ ut
        return first, second, lam_min


@dataclass
class ConeSample:
    """pi-bar image of a mapping-cone element at one s in (-1, 1]."""

    s: float
    first: BlockDiag
    second: BlockDiag


def _union_find_blocks(mats, width, tol=1e-13):
    parent = list(range(width))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for m in mats:
        rows, cols = np.nonzero(np.abs(m) > tol)
        for a, b in zip(rows, cols):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    groups = {}
    for v in range(width):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def _partition(mats, width, singleton_sig, tol=1e-13):
    """Common invariant blocks of ``mats``; identical singletons are merged."""
    blocks = _union_find_blocks(mats, width, tol)
    coords, mult = [], []
    sig_groups = {}
    for b in blocks:
        if len(b) == 1:
            key = singleton_sig(b[0])
            sig_groups.setdefault(key, []).append(b[0])
        else:
            coords.append(np.array(b))
            mult.append(1)
    for key, cs in sig_groups.items():
        coords.append(np.array(cs))
        mult.append(len(cs))
    return coords, mult


def _assemble_blocks(coef, images, coords, mult):
    """BlockDiag of sum_g kron(coef_g, images_g) on the given partition."""
    out = []
    for cs, m in zip(coords, mult):
        if m > 1 or len(cs) == 1:
            j = cs[0]
            blk = sum(c * images[k][j, j] for k, c in coef.items())
        else:
            d = len(cs)
            C = next(iter(coef.values())).shape[0]
            blk = np.zeros((C * d, C * d), dtype=complex)
            for k, c in coef.items():
                kron_accumulate(blk, c, images[k][np.ix_(cs, cs)])
        out.append(np.asarray(blk, dtype=complex))
    return out


def mapping_cone_apply(rel, m, t_count=33, r=None, strict=True):
    """Samples of pi-bar(m) for s in [-1, 0] (from a) and s in (0, 1] (from b).

    Returns ``(samples, info)``.  The first ``t_count`` samples cover
    s = -1 .. 0 through pi~_{i, 2+s}; the remaining ones evaluate pi_1, pi_2
    on the b-path.  Both components are returned in a common invariant
    block decomposition, sampled by ``BlockDiag``.
    """
    if m.a.group != rel.pi0.group:
        raise ValueError("a must live over Lambda")
    r = m.propagation if r is None else r
    if m.propagation > r:
        raise PropagationExceeded("filtration %d > %d" % (m.propagation, r))
    SL = ball(rel.pi0.group, max(r, 1))
    inter = rel.intertwiner_defect(SL)
    if strict and inter >= 1 / 40:
        raise DefectTooLarge("intertwiner defect %.3e >= 1/40" % inter)
    p, q = rel.p, rel.q
    width = 2 * (p + q)
    ub = rel.ubar_path()
    s_neg = np.linspace(-1.0, 0.0, t_count)
    neg_imgs = []
    lam_min = np.inf
    for s in s_neg:
        f, g = {}, {}
        for k in m.a.coeffs:
            f[k], g[k], lm = rel.pitilde(k, 2 + s, ub)
            lam_min = min(lam_min, lm)
        neg_imgs.append((f, g))
    pos_idx = [j for j, s in enumerate(m.s_values) if s > 0]
    pos_imgs = []
    for j in pos_idx:
        b = m.b_path[j]
        pos_imgs.append(({k: rel.pi1(k) for k in b.coeffs}, {k: rel.pi2(k) for k in b.coeffs}))

    mats = [x for f, g in neg_imgs for d in (f, g) for x in d.values()]
    for f, g in pos_imgs:
        for d in (f, g):
            for x in d.values():
                big = np.zeros((width, width), dtype=complex)
                big[:p, :p] = x
                mats.append(big)

    def sig(j):
        vals = [np.round(d[k][j, j], 12) for f, g in neg_imgs for d in (f, g) for k in sorted(d)]
        if j < p:
            vals += [np.round(d[k][j, j], 12) for f, g in pos_imgs for d in (f, g) for k in sorted(d)]
        return (j < p, tuple(vals))

    coords, mult = _partition(mats, width, sig)
    C = m.a.shape[0]
    samples = []
    for s, (f, g) in zip(s_neg, neg_imgs):
        samples.append(
            ConeSample(
                float(s),
                BlockDiag(C, width, coords, _assemble_blocks(m.a.coeffs, f, coords, mult), mult),
                BlockDiag(C, width, coords, _assemble_blocks(m.a.coeffs, g, coords, mult), mult),
            )
        )
    # P-part of the partition for s > 0
    p_coords, p_mult = [], []
    for cs, mu in zip(coords, mult):
        inside = cs[cs < p]
        if inside.size:
            p_coords.append(inside)
            p_mult.append(len(inside) if mu > 1 else 1)
    for j, (f, g) in zip(pos_idx, pos_imgs):
        b = m.b_path[j]
        samples.append(
            ConeSample(
                float(m.s_values[j]),
                BlockDiag(C, p, p_coords, _assemble_blocks(b.coeffs, f, p_coords, p_mult), p_mult),
                BlockDiag(C, p, p_coords, _assemble_blocks(b.coeffs, g, p_coords, p_mult), p_mult),
            )
        )
    info = {"intertwinerDefect": inter, "minPolarEigenvalue": lam_min, "blocks": [len(c) for c in coords],
            "mult": mult, "hypothesisSatisfied": inter < 1 / 40}
    return samples, info


def relqhom_report(rel, words, t_values, r=1):
    """Measured sup_t |pi~_{1,t}(g) - pi~_{1,2}(g)| and the 3 eps reference."""
    ub = rel.ubar_path()
    worst = 0.0
    for w in words:
        ref = rel.pitilde(w, 2.0, ub)[0]
        for t in t_values:
            worst = max(worst, op_norm(rel.pitilde(w, t, ub)[0] - ref))
    eps = rel.epsilon(r)
    return {"deviation": worst, "epsilon": eps, "bound": 3 * eps}


def pitilde_quasirep(rel, t, which=1):
    """pi~_{which, t} as a QuasiRep of Lambda on (P + Q)^2 (generator images)."""
    ub = rel.ubar_path()
    gens = [rel.pitilde((k,), t, ub)[which - 1] for k in range(1, rel.pi0.group.rank + 1)]
    invs = [rel.pitilde((-k,), t, ub)[which - 1] for k in range(1, rel.pi0.group.rank + 1)]
    imgs = {k + 1: g for k, g in enumerate(gens)}
    imgs.update({-(k + 1): g for k, g in enumerate(invs)})
    return QuasiRep(rel.pi0.group, 2 * (rel.p + rel.q), imgs)


# ---------------------------------------------------------------------------
# compression


def _range_isometry(e, tol=1e-8):
    w, Q = np.linalg.eigh((e + adjoint(e)) / 2)
    return Q[:, w > 0.5]


def _polar_on(x, what):
    try:
        return polar(x, tol_sing=1e-12)[0]
    except Exception as exc:
        raise SingularCompression("%s compression is singular" % what) from exc


def compress(pi1, pi2, pi0, u, e, f, hom, S=None):
    """Compress a relative quasi-representation to the ranges of e and f.

    Returns ``(RelativeQuasiRep, report)``.  The report holds the measured
    defects of the raw compressions e pi e, f pi0 f (bounded by 2 eps) and the
    intertwiner defect of u^{e+f} (bounded by 5 eps); the bounds are asserted.
    """
    G, L = pi1.group, pi0.group
    SG = list(ball(G, 1)) if S is None else list(S)
    SL = list(ball(L, 1))
    e = as_cmatrix(e)
    f = as_cmatrix(f)
    ef = sla.block_diag(e, f)
    rel_in = RelativeQuasiRep(pi1, pi2, pi0, u, hom)
    comm = max(
        [op_norm(pi(g) @ e - e @ pi(g)) for pi in (pi1, pi2) for g in SG]
        + [op_norm(pi0(g) @ f - f @ pi0(g)) for g in SL]
        + [op_norm(u @ ef - ef @ u)]
    )
    eps = max(comm, defect(pi1, SG), defect(pi2, SG), defect(pi0, SL), rel_in.intertwiner_defect(SL))
    Ve, Vf = _range_isometry(e), _range_isometry(f)
    Vef = sla.block_diag(Ve, Vf)

    def comp(pi, V, S_):
        raw = {}
        for k in range(1, pi.group.rank + 1):
            for kk in (k, -k):
                raw[kk] = adjoint(V) @ pi.images[kk] @ V
        raw_rep = QuasiRep(pi.group, V.shape[1], raw)
        d_raw = defect(raw_rep, S_)
        gens = [_polar_on(raw[k], "image") for k in range(1, pi.group.rank + 1)]
        out = QuasiRep.from_generators(pi.group, gens) if gens else QuasiRep(pi.group, V.shape[1], {})
        return out, d_raw

    c1, d1 = comp(pi1, Ve, SG)
    c2, d2 = comp(pi2, Ve, SG)
    c0, d0 = comp(pi0, Vf, SL)
    uc = adjoint(Vef) @ u @ Vef
    sv = np.linalg.svd(uc, compute_uv=False)
    if sv.size and sv[-1] <= 0.5:
        raise SingularCompression("smallest singular value %.3f <= 1/2" % sv[-1])
    ue = polar(uc)[0]
    rel = RelativeQuasiRep(c1, c2, c0, ue, hom)
    inter = rel.intertwiner_defect(SL)
    report = {
        "epsilon": eps,
        "rawDefects": [d1, d2, d0],
        "intertwinerDefect": inter,
        "correctedDefects": [defect(c1, SG), defect(c2, SG), defect(c0, SL)],
    }
    slack = 1e-10
    if max(d1, d2, d0) > 2 * eps + slack:
        raise BoundViolation("compressed defect %.3e > 2 eps = %.3e" % (max(d1, d2, d0), 2 * eps))
    if inter > 5 * eps + slack:
        raise BoundViolation("intertwiner defect %.3e > 5 eps = %.3e" % (inter, 5 * eps))
    return rel, report
