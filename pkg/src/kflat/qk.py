"""Quantitative K-theory elements: certified projections, unitaries, loops and their integers."""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import BoundViolation, BudgetExceeded, DefectTooLarge, GapClosed, NotHermitian, TooFar
from .numerics import BlockDiag, adjoint, block_det_winding, det_winding, op_norm, polar

DEFECT_MAX = 0.25
HERM_TOL = 1e-9
GAP_TOL = 1e-9


def _hermitian_skew(M, chunk=1024):
    """max over row chunks of the Frobenius norm of (M - M*) restricted to the chunk.

    Avoids allocating a second full copy of a large matrix; the result
    bounds |M - M*| from above up to a factor sqrt(#chunks).
    """
    n = M.shape[0]
    worst = 0.0
    for i in range(0, n, chunk):
        d = M[i : i + chunk] - np.conj(M[:, i : i + chunk].T)
        worst = max(worst, float(np.linalg.norm(d)))
    return worst


def _hermitian_scale(M, chunk=1024):
    n = M.shape[0]
    return max(float(np.abs(M[i : i + chunk]).sum(axis=1).max()) for i in range(0, n, chunk))


@dataclass
class QProjection:
    """(eps, r)-projection, optionally with a base rank for difference classes."""

    matrix: object
    defect: float
    propagation: int = 0
    base_rank: int = 0
    formula_defect: float = None
    hypothesis_satisfied: bool = True
    eigenvalues: np.ndarray = field(default=None, repr=False)

    def certificate(self):
        out = {"kind": "projection", "defect": self.defect, "propagation": self.propagation,
               "baseRank": self.base_rank, "hypothesisSatisfied": self.hypothesis_satisfied}
        if self.formula_defect is not None:
            out["formulaDefect"] = self.formula_defect
        return out


@dataclass
class QUnitary:
    """(eps, r)-unitary."""

    matrix: object
    defect: float
    propagation: int = 0
    formula_defect: float = None
    hypothesis_satisfied: bool = True

    def certificate(self):
        return {"kind": "unitary", "defect": self.defect, "propagation": self.propagation,
                "hypothesisSatisfied": self.hypothesis_satisfied}


def unitary_defect(U):
    """max(|U*U - 1|, |UU* - 1|) for a matrix or a BlockDiag."""
    if isinstance(U, BlockDiag):
        return max(U.unitarity_defect(), U.adjoint().unitarity_defect())
    e = np.eye(U.shape[0])
    return max(op_norm(adjoint(U) @ U - e), op_norm(U @ adjoint(U) - e))


@dataclass
class QLoop:
    """s-sampled near-unitaries whose endpoints are close to 1."""

    samples: list
    s_values: np.ndarray
    defect: float = None
    endpoint_deviation: float = None
    strict: bool = True

    def __post_init__(self):
        self.s_values = np.asarray(self.s_values, dtype=float)
        if len(self.samples) != len(self.s_values):
            raise ValueError("loop has %d samples but %d parameters" % (len(self.samples), len(self.s_values)))
        if self.defect is None:
            self.defect = max(unitary_defect(u) for u in self.samples)
        if self.strict and self.defect >= DEFECT_MAX:
            raise DefectTooLarge("loop sample defect %.3e >= 1/4" % self.defect)
        dev = 0.0
        for u in (self.samples[0], self.samples[-1]):
            d = u.dense() if isinstance(u, BlockDiag) else u
            dev = max(dev, op_norm(d - np.eye(d.shape[0])))
        self.endpoint_deviation = dev

    def certificate(self):
        return {"kind": "loop", "defect": self.defect, "samples": len(self.samples),
                "endpointDeviation": self.endpoint_deviation, "hypothesisSatisfied": self.defect < DEFECT_MAX}


def _eigvalsh(M, overwrite=False):
    # M.T of a Hermitian C-ordered matrix is its F-ordered conjugate with
    # the same spectrum, so LAPACK can work in place without a copy.
    A = M.T if M.flags.c_contiguous else M
    return sla.eigvalsh(A, overwrite_a=overwrite, check_finite=False, driver="evd")


def certify_projection(M, r=0, base_rank=0, strict=True, overwrite=False):
    """Certify a Hermitian matrix as an (eps, r)-projection with eps = |M^2 - M|.

    The defect is read off the eigenvalues, which are cached for
    ``k0_class_integer``.  With ``overwrite`` the matrix is destroyed.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotHermitian("matrix is not square")
    skew = _hermitian_skew(M)
    if skew > HERM_TOL * max(_hermitian_scale(M), 1.0):
        raise NotHermitian("|M - M*| = %.3e" % skew)
    w = _eigvalsh(M, overwrite)
    eps = float(np.max(np.abs(w * w - w))) if w.size else 0.0
    if strict and eps >= DEFECT_MAX:
        raise DefectTooLarge("|p^2 - p| = %.3f >= 1/4" % eps)
    return QProjection(None if overwrite else M, eps, r, base_rank, eigenvalues=w)


def certify_unitary(U, r=0, strict=True):
    eps = unitary_defect(U)
    if strict and eps >= DEFECT_MAX:
        raise DefectTooLarge("unitary defect %.3f >= 1/4" % eps)
    return QUnitary(U, eps, r)


def _scan(path_fn, defect_fn, n=11):
    ts = np.linspace(0.0, 1.0, n)
    vals = [float(defect_fn(path_fn(t))) for t in ts]
    return {"t": ts.tolist(), "defect": vals, "max": max(vals)}


def _proj_defect(M):
    H = (M + adjoint(M)) / 2
    w = np.linalg.eigvalsh(H)
    return max(float(np.max(np.abs(w * w - w))), op_norm(M - H))


def perturb_class_check(p, q, unitary=False):
    """Certify q close to p in the same class.

    Requires |p - q| < p.defect.  q is certified at 5 eps (projections) or
    4 eps (unitaries); the certificate carries a scan of the linear path
    (1 - t) p + t q as homotopy witness.
    """
    P = np.asarray(p.matrix)
    Q = np.asarray(q)
    eps = p.defect
    dist = op_norm(P - Q)
    if dist >= eps and dist > 0:
        raise TooFar("|p - q| = %.3e >= %.3e" % (dist, eps))
    factor = 4 if unitary else 5
    dfn = unitary_defect if unitary else _proj_defect
    witness = _scan(lambda t: (1 - t) * P + t * Q, dfn)
    bound = factor * eps
    if witness["max"] > bound + 1e-12:
        raise BoundViolation("linear path defect %.3e exceeds %d eps = %.3e" % (witness["max"], factor, bound))
    cert = {"distance": dist, "bound": bound, "witness": witness}
    if unitary:
        return QUnitary(Q, bound, p.propagation), cert
    return QProjection(Q, bound, p.propagation, p.base_rank), cert


def push_forward_bound(eps_h, delta):
    """eps_h + (1 + 3 eps_h) delta (the uniform pushforward constant)."""
    return eps_h + (1 + 3 * eps_h) * delta


def push_forward(hom, x, eps_h, r, kappa=1, strict=True, overwrite=False, base_rank=None):
    """Push a certified element along an almost-homomorphism.

    Parameters
    ----------
    hom : callable mapping ``x.matrix`` to its image, or the image itself
    x : QProjection or QUnitary of defect delta
    eps_h, r, kappa : defect, propagation and propagation factor of the map

    In strict mode the image is certified at eps_h + (1 + 3 eps_h) delta and
    BudgetExceeded is raised when that is >= 1/4.  Outside the hypothesis
    regime (``strict=False``) the measured defect is used and
    ``hypothesis_satisfied`` is set to False.
    """
    if x.propagation > r:
        raise ValueError("element propagation %d exceeds %d" % (x.propagation, r))
    formula = push_forward_bound(eps_h, x.defect)
    ok = formula < DEFECT_MAX
    if strict and not ok:
        raise BudgetExceeded("eps_h + (1 + 3 eps_h) delta = %.3e >= 1/4" % formula)
    img = hom(x.matrix) if callable(hom) else hom
    if isinstance(x, QUnitary):
        out = certify_unitary(img, kappa * r, strict=False)
    else:
        k = x.base_rank if base_rank is None else base_rank
        out = certify_projection(img, kappa * r, k, strict=False, overwrite=overwrite)
    if ok and out.defect > formula + 1e-10:
        raise BoundViolation("measured defect %.3e exceeds pushforward bound %.3e" % (out.defect, formula))
    if out.defect >= DEFECT_MAX:
        raise DefectTooLarge("pushed-forward defect %.3e >= 1/4" % out.defect)
    out.formula_defect = formula
    out.hypothesis_satisfied = ok
    if ok:
        out.defect = formula
    return out


def push_forward_projection(img, x, eps_h, r, strict=True, base_rank=None, overwrite=True):
    """push_forward for a precomputed (large) image, consumed in place."""
    return push_forward(img, x, eps_h, r, strict=strict, overwrite=overwrite, base_rank=base_rank)


def k0_class_integer(p, k=None):
    """Integer of the difference class [p, k]: #eigenvalues above 1/2 minus k.

    Records on ``p`` the spectral distance of p to its spectral projection,
    which lies below 2 eps.
    """
    if p.defect >= DEFECT_MAX:
        raise DefectTooLarge("defect %.3e >= 1/4" % p.defect)
    w = p.eigenvalues
    if w is None:
        w = _eigvalsh(np.asarray(p.matrix))
        p.eigenvalues = w
    k = p.base_rank if k is None else k
    gap = float(np.min(np.abs(w - 0.5))) if w.size else np.inf
    if gap < GAP_TOL:
        raise GapClosed("eigenvalue within %.1e of 1/2" % gap)
    dist = float(np.max(np.minimum(np.abs(w), np.abs(w - 1)))) if w.size else 0.0
    p.spectral_distance = dist
    if dist > 2 * p.defect + 1e-12:
        raise BoundViolation("spectral distance %.3e exceeds 2 eps = %.3e" % (dist, 2 * p.defect))
    return int(np.count_nonzero(w > 0.5)) - int(k)


def k1_loop_integer(loop, return_float=False):
    """Polar-correct each sample, then take the closed determinant winding."""
    fixed = [u.polar_unitary() if isinstance(u, BlockDiag) else polar(u)[0] for u in loop.samples]
    if isinstance(fixed[0], BlockDiag):
        return block_det_winding(fixed, closed=True, return_float=return_float)
    return det_winding(fixed, closed=True, return_float=return_float)
