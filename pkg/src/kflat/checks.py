"""Randomized inequality suite: every bound is measured against its stated constant.

Each check draws ``count`` instances from a seeded generator and returns a
``CheckResult`` with the worst ratio measured / bound and the number of
violations.  Nothing here rescales a bound to make it pass.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .covers import torus_cover
from .errors import BoundViolation, GapClosed, SingularCompression
from .groups import E, GAMatrix, ball, free_abelian, ga_mul, identity_hom
from .index import (
    algebraic_index_class,
    character_defect,
    lemma_quant1_check,
    mishchenko_projection,
    ppipv_check,
    torus_fredholm_pair,
)
from .numerics import adjoint, op_norm, polar
from .qk import QProjection, QUnitary, perturb_class_check, push_forward_bound, unitary_defect
from .quasirep import (
    QuasiRep,
    RelativeQuasiRep,
    almhom_bound,
    apply_ga,
    clock,
    compress,
    defect,
    pitilde_quasirep,
    relqhom_report,
    shift,
)

SLACK = 1e-10


@dataclass
class CheckResult:
    name: str
    count: int
    violations: int
    worst_ratio: float
    bound: str
    details: list = field(default_factory=list, repr=False)

    @property
    def passed(self):
        return self.violations == 0

    def to_json(self):
        out = asdict(self)
        out.pop("details")
        out["passed"] = self.passed
        return out


def _result(name, bound, pairs):
    ratios = [m / b if b > 0 else (0.0 if m <= SLACK else np.inf) for m, b in pairs]
    bad = sum(1 for m, b in pairs if m > b + SLACK)
    return CheckResult(name, len(pairs), bad, float(max(ratios, default=0.0)), bound, pairs)


def random_unitary(rng, n, scale=1.0):
    """exp(i scale H) with H a normalized Gaussian Hermitian matrix."""
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = (A + adjoint(A)) / (2 * np.sqrt(n))
    return sla.expm(1j * scale * H)


def random_quasirep(rng, group, n=None, noise=None):
    """A random quasi-representation of Z^k: a perturbed commuting family,
    a clock/shift pair or a conjugated product of both."""
    k = group.rank
    n = int(rng.integers(2, 7)) if n is None else n
    kind = rng.integers(3) if k == 2 else 0
    if kind == 0:
        base = [np.diag(np.exp(2j * np.pi * rng.random(n))) for _ in range(k)]
    elif kind == 1:
        base = [clock(n), shift(n)]
    else:
        w = random_unitary(rng, n)
        base = [w @ clock(n) @ adjoint(w), w @ shift(n) @ adjoint(w)]
    noise = 10 ** rng.uniform(-4, -1) if noise is None else noise
    gens = [random_unitary(rng, n, noise) @ b for b in base]
    return QuasiRep.from_generators(group, gens)


def random_ga(rng, group, shape, r, herm=False):
    """Random group-algebra matrix supported on the word ball of radius r, coefficients of norm <= 1."""
    S = sorted(ball(group, r))
    keys = [S[i] for i in rng.choice(len(S), size=min(len(S), int(rng.integers(1, len(S) + 1))), replace=False)]
    coeffs = {}
    for g in keys:
        c = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        coeffs[g] = c / max(op_norm(c), 1e-300) * rng.random()
    x = GAMatrix(group, shape, coeffs)
    if herm:
        x = (x + x.adjoint()).scale(0.5)
    return x


# ---------------------------------------------------------------------------


def check_almhom(rng, count=200):
    """|psi(xy) - psi(x) psi(y)| <= |𝒢^r|^2 eps max|x_g| max|y_h| for x, y supported on 𝒢^r."""
    G = free_abelian("a", "b")
    pairs = []
    for _ in range(count):
        r = int(rng.integers(1, 3))
        pi = random_quasirep(rng, G)
        d = int(rng.integers(1, 4))
        x = random_ga(rng, G, (d, d), r)
        y = random_ga(rng, G, (d, d), r)
        m = op_norm(apply_ga(pi, ga_mul(x, y)) - apply_ga(pi, x) @ apply_ga(pi, y))
        b = almhom_bound(pi, r) * x.coefficient_norm_max() * y.coefficient_norm_max()
        pairs.append((m, b))
    return _result("almhom multiplicativity", "|G^r|^2 eps", pairs)


def random_relative(rng, p=None, q=None, noise=None):
    """Relative quasi-representation with Gamma = Lambda = Z and the identity map."""
    Z = free_abelian("l")
    p = int(rng.integers(1, 4)) if p is None else p
    q = int(rng.integers(1, 4)) if q is None else q
    noise = 10 ** rng.uniform(-4, -1.5) if noise is None else noise
    a = random_unitary(rng, p)
    pi1 = QuasiRep.from_generators(Z, [a])
    pi2 = QuasiRep.from_generators(Z, [random_unitary(rng, p, noise) @ a])
    pi0 = QuasiRep.from_generators(Z, [random_unitary(rng, q)])
    u = random_unitary(rng, p + q, noise)
    return RelativeQuasiRep(pi1, pi2, pi0, u, identity_hom(Z))


def check_relqhom(rng, count=200):
    """sup_t |pi~_{1,t}(g) - pi~_{1,2}(g)| <= 3 eps and defect(pi~_{i,t}, 𝒢^r) <= 10 |𝒢^r|^2 eps."""
    inter, defs = [], []
    for _ in range(count):
        rel = random_relative(rng)
        r = int(rng.integers(1, 3))
        S = ball(rel.pi0.group, r)
        rep = relqhom_report(rel, [(1,), (-1,)], np.linspace(1, 2, 5), r=1)
        inter.append((rep["deviation"], rep["bound"]))
        eps = rel.epsilon(r)
        t = float(rng.uniform(1, 2))
        worst = max(defect(pitilde_quasirep(rel, t, i), S) for i in (1, 2))
        defs.append((worst, 10 * len(S) ** 2 * eps))
    return [
        _result("relqhom intermediate", "3 eps", inter),
        _result("relqhom defect", "10 |G^r|^2 eps", defs),
    ]


def check_ppipv(rng, count=200, n_grid=24):
    """max_x |p_pi(x) - p_v(x)| <= 4 |I|^2 defect(pi) for v = beta(pi), measured constant logged."""
    cover = torus_cover(n_grid)
    G = cover.gamma
    pairs, skipped = [], 0
    while len(pairs) < count:
        pi = random_quasirep(rng, G, n=int(rng.integers(2, 5)), noise=10 ** rng.uniform(-4, -2))
        try:
            m, b = ppipv_check(pi, cover)
        except GapClosed:  # beta is undefined there; redraw
            skipped += 1
            if skipped > 5 * count:
                raise
            continue
        pairs.append((m, b))
    res = _result("ppipv projection proximity", "4 |I|^2 eps", pairs)
    res.redrawn = skipped
    eps_scale = [b / (4 * cover.size**2) for _, b in pairs]
    res.measured_constant = float(max((m / e for (m, _), e in zip(pairs, eps_scale) if e > 0), default=0.0))
    return res


def check_quant1(rng, count=200, N=2):
    """|(id (x) pi)(class) - v_pi diag(p_{pi,1}, 1 - p_{pi,2}) v_pi| <= 3 |𝒢^3|^2 eps."""
    cover = torus_cover(24)
    cls = algebraic_index_class(cover, torus_fredholm_pair(N), strict=False)
    pairs = []
    for _ in range(count):
        pi = random_quasirep(rng, cover.gamma, n=int(rng.integers(1, 3)))
        pairs.append(lemma_quant1_check(pi, cls))
    return _result("quant1 class comparison", "3 |G^3|^2 eps", pairs)


def check_compression(rng, count=200):
    """Compressions of a relative quasi-representation: raw defects <= 2 eps, intertwiner <= 5 eps."""
    Z = free_abelian("l")
    comp, inter = [], []
    for _ in range(count):
        p1, p2, q1, q2 = (int(v) for v in rng.integers(1, 3, size=4))
        noise = 10 ** rng.uniform(-4, -2)
        a = sla.block_diag(random_unitary(rng, p1), random_unitary(rng, p2))
        b = sla.block_diag(random_unitary(rng, q1), random_unitary(rng, q2))
        pi1 = QuasiRep.from_generators(Z, [random_unitary(rng, p1 + p2, noise) @ a])
        pi2 = QuasiRep.from_generators(Z, [random_unitary(rng, p1 + p2, noise) @ a])
        pi0 = QuasiRep.from_generators(Z, [random_unitary(rng, q1 + q2, noise) @ b])
        # u nearly commutes with e (+) f and nearly intertwines
        u = random_unitary(rng, p1 + p2 + q1 + q2, noise)
        e = np.diag([1.0] * p1 + [0.0] * p2)
        f = np.diag([1.0] * q1 + [0.0] * q2)
        try:
            _, rep = compress(pi1, pi2, pi0, u, e, f, identity_hom(Z))
        except SingularCompression:
            continue
        except BoundViolation:
            comp.append((np.inf, 0.0))
            continue
        comp.append((max(rep["rawDefects"]), 2 * rep["epsilon"]))
        inter.append((rep["intertwinerDefect"], 5 * rep["epsilon"]))
    return [
        _result("compression components", "2 eps", comp),
        _result("compression intertwiner", "5 eps", inter),
    ]


def _noisy_projection(rng, n, eps):
    """Hermitian matrix with spectrum pushed off {0, 1} so that |P^2 - P| <= eps."""
    k = int(rng.integers(1, n))
    lam = 0.5 - 0.5 * np.sqrt(1 - 4 * eps)
    w = np.r_[1 - lam * rng.random(k), lam * rng.random(n - k)]
    Q = random_unitary(rng, n)
    return (Q * w) @ adjoint(Q), float(np.max(np.abs(w * w - w)))


def check_perturbation(rng, count=200):
    """q within eps of an eps-projection is a 5 eps-projection along the linear path (4 eps for unitaries)."""
    proj, unit = [], []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        eps = float(10 ** rng.uniform(-3, np.log10(0.05)))
        P, d = _noisy_projection(rng, n, eps)
        p = QProjection(P, max(d, 1e-12))
        E_ = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        E_ = (E_ + adjoint(E_)) / 2
        E_ *= rng.uniform(0.05, 0.95) * p.defect / op_norm(E_)
        _, cert = perturb_class_check(p, P + E_)
        proj.append((cert["witness"]["max"], cert["bound"]))
        U = random_unitary(rng, n)
        H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        U = U + eps / 3 * H / op_norm(H)
        uq = QUnitary(U, unitary_defect(U))
        V = U + rng.uniform(0.05, 0.95) * uq.defect * H.T / op_norm(H)
        _, cert = perturb_class_check(uq, V, unitary=True)
        unit.append((cert["witness"]["max"], cert["bound"]))
    return [
        _result("perturbation projection", "5 eps", proj),
        _result("perturbation unitary", "4 eps", unit),
    ]


def check_pushforward(rng, count=200):
    """|pi(x)^2 - pi(x)| <= eps_h + (1 + 3 eps_h) delta for near-idempotent x over Z^2."""
    cover = torus_cover(24)
    G = cover.gamma
    pairs = []
    for _ in range(count):
        pi = random_quasirep(rng, G)
        k = int(rng.integers(cover.n_samples))
        P = mishchenko_projection(cover).at(k)
        d = P.shape[0]
        N = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        N = (N + adjoint(N)) / 2
        N *= 10 ** rng.uniform(-4, -1.5) / op_norm(N)
        x = P + GAMatrix(G, (d, d), {E: N})
        delta = character_defect(x, 8)
        r = max(x.propagation, 1)
        eps_h = almhom_bound(pi, r)
        X = apply_ga(pi, x)
        X = (X + adjoint(X)) / 2
        w = np.linalg.eigvalsh(X)
        m = float(np.max(np.abs(w * w - w)))
        pairs.append((m, push_forward_bound(eps_h, delta)))
    return _result("pushforward defect", "eps_h + (1 + 3 eps_h) delta", pairs)


def inequality_suite(seed=0, count=200, fast=False):
    """Run every randomized inequality check; returns a list of CheckResult."""
    rng = np.random.default_rng(seed)
    out = [check_almhom(rng, count)]
    out += check_relqhom(rng, count)
    out.append(check_ppipv(rng, count if not fast else min(count, 40)))
    out.append(check_quant1(rng, count if not fast else min(count, 40)))
    out += check_compression(rng, count)
    out += check_perturbation(rng, count)
    out.append(check_pushforward(rng, count))
    return out
