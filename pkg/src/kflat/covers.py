"""Good covers of the built-in spaces with sampled partitions of unity.

Two covers are built in:

* ``torus_cover``: the 3x3 product of a three-arc cover of the circle,
  with transitions in Z^2 = <a, b>.
* ``disk_pair_cover``: the unit disk with a collar, covered by a central
  disk and three collar sets whose restriction to the boundary circle is
  a three-arc cover; Gamma is trivial and Lambda = Z = <l>.

Torus coordinates live in [0, 1)^2.  Disk coordinates are plane
coordinates; the collar Y x [1, 2] is the annulus 1 <= |z| <= 2.
"""
import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import GridTooCoarse, InvalidCover
from .groups import E, GroupHom, GroupSpec, free_abelian, trivial_group

ARC_OVERLAP = 0.15
PU_TOL = 1e-12


def smooth01(t):
    """Cosine ramp from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * t)


def circle_eta(x, w=ARC_OVERLAP):
    """Square partition of unity for the arcs U_i = (i/3 - w, (i+1)/3 + w).

    Returns an array of shape ``(3,) + shape(x)``; the squares sum to one.
    """
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    out = np.zeros((3,) + x.shape)
    for i in range(3):
        d = np.mod(x - i / 3 + 0.5, 1.0) - 0.5
        th = 0.5 * np.pi * smooth01((d + w) / (2 * w))
        ramp = np.abs(d) <= w
        out[i] += np.where(ramp, np.sin(th), 0.0)
        out[(i - 1) % 3] += np.where(ramp, np.cos(th), 0.0)
        out[i] += np.where((x > i / 3 + w) & (x < (i + 1) / 3 - w), 1.0, 0.0)
    out[out < 1e-15] = 0.0
    return out


def circle_members(x, w=ARC_OVERLAP):
    """Membership of points in the open arcs, shape ``(3,) + shape(x)``."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    out = []
    for i in range(3):
        d = np.mod(x - (i / 3 - w), 1.0)
        out.append((d > 0) & (d < 1 / 3 + 2 * w))
    return np.array(out)


def circle_transition(i, k):
    """Exponent of the loop generator on the circle edge <i, k>."""
    return 1 if (i, k) == (2, 0) else (-1 if (i, k) == (0, 2) else 0)


@dataclass
class GoodCoverPair:
    """A finite good cover (of X, optionally with a subspace Y) sampled on a grid.

    Attributes
    ----------
    labels : names of the index set I
    coords : (S, 2) sample coordinates
    eta : (|I|, S) partition of unity with sum of squares one
    members : (|I|, S) boolean membership of samples in the open sets
    weights : (S,) quadrature weights
    transitions : {(mu, nu): word in Gamma} for both orientations of each edge
    tree : list of tree edges (mu, nu) with mu < nu
    grid_shape : plaquette grid for closed surfaces (samples row-major)
    y_samples : sample indices lying on Y, ordered along Y when Y is a circle
    y_index : indices of the open sets meeting Y
    y_transitions : {(mu, nu): word in Lambda} on the Y-nerve
    eta_fn : callable mapping (P, 2) points to (|I|, P) values, if known
    """

    space: str
    labels: list
    coords: np.ndarray
    eta: np.ndarray
    members: np.ndarray
    weights: np.ndarray
    gamma: GroupSpec
    transitions: dict
    tree: list
    grid_shape: tuple = None
    lam: GroupSpec = None
    hom: GroupHom = None
    y_samples: np.ndarray = None
    y_index: list = None
    y_transitions: dict = None
    eta_fn: object = None
    root: int = 0
    edges: list = field(default=None)
    triangles: list = field(default=None)
    y_edges: list = field(default=None)
    y_triangles: list = field(default=None)

    def __post_init__(self):
        if self.edges is None:
            self.edges, self.triangles = nerve(self.members)
        if self.has_y and self.y_edges is None:
            sub = self.members[np.ix_(self.y_index, self.y_samples)]
            e, t = nerve(sub)
            self.y_edges = [(self.y_index[a], self.y_index[b]) for a, b in e]
            self.y_triangles = [tuple(self.y_index[a] for a in tri) for tri in t]

    @property
    def size(self):
        return len(self.labels)

    @property
    def n_samples(self):
        return self.coords.shape[0]

    @property
    def has_y(self):
        return self.y_samples is not None and len(self.y_samples) > 0

    def overlap(self, mu, nu):
        """Sample indices in U_mu ∩ U_nu."""
        return np.flatnonzero(self.members[mu] & self.members[nu])

    def transition(self, mu, nu):
        if mu == nu:
            return E
        return self.transitions.get((mu, nu), E)

    def y_transition(self, mu, nu):
        if mu == nu:
            return E
        return self.y_transitions.get((mu, nu), E)

    def tree_path(self, mu, tree=None, root=None):
        """Vertices of the tree path from the root to ``mu``."""
        tree = self.tree if tree is None else tree
        root = self.root if root is None else root
        adj = {}
        for a, b in tree:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        prev = {root: None}
        stack = [root]
        while stack:
            v = stack.pop()
            for w in adj.get(v, []):
                if w not in prev:
                    prev[w] = v
                    stack.append(w)
        if mu not in prev:
            raise InvalidCover("vertex %d not reached by the tree" % mu)
        path = [mu]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        return path[::-1]

    def y_tree(self):
        ys = set(self.y_index)
        return [(a, b) for a, b in self.tree if a in ys and b in ys]

    def y_root(self):
        return min(self.y_index)

    def restrict_to_y(self):
        """The cover of Y with Lambda transitions, as a GoodCoverPair of its own."""
        if not self.has_y:
            raise InvalidCover("cover has no Y-part")
        idx = list(self.y_index)
        pos = {m: k for k, m in enumerate(idx)}
        trans = {(pos[a], pos[b]): w for (a, b), w in self.y_transitions.items() if a in pos and b in pos}
        tree = [(pos[a], pos[b]) for a, b in self.y_tree()]
        return GoodCoverPair(
            space=self.space + ":Y",
            labels=[self.labels[m] for m in idx],
            coords=self.coords[self.y_samples],
            eta=self.eta[np.ix_(idx, self.y_samples)],
            members=self.members[np.ix_(idx, self.y_samples)],
            weights=np.full(len(self.y_samples), 1.0 / len(self.y_samples)),
            gamma=self.lam,
            transitions=trans,
            tree=tree,
            grid_shape=(len(self.y_samples),),
            root=pos[self.y_root()],
        )

    # -- serialization --------------------------------------------------------
    def to_json(self):
        fmt = self.gamma.format
        d = {
            "space": self.space,
            "group": self.gamma.to_json(),
            "indexSet": list(self.labels),
            "samples": [
                {"coords": [float(c) for c in self.coords[k]], "members": np.flatnonzero(self.members[:, k]).tolist(),
                 "weight": float(self.weights[k])}
                for k in range(self.n_samples)
            ],
            "eta": self.eta.tolist(),
            "nerve": {"edges": [list(e) for e in self.edges], "triangles": [list(t) for t in self.triangles]},
            "tree": [list(e) for e in self.tree],
            "transitions": [[a, b, fmt(w)] for (a, b), w in sorted(self.transitions.items())],
            "gridShape": list(self.grid_shape) if self.grid_shape else None,
        }
        if self.has_y:
            d["ypart"] = {
                "samples": [int(k) for k in self.y_samples],
                "index": list(self.y_index),
                "group": self.lam.to_json(),
                "hom": [self.gamma.format(w) for w in self.hom.images],
                "transitions": [[a, b, self.lam.format(w)] for (a, b), w in sorted(self.y_transitions.items())],
            }
        return d

    @classmethod
    def from_json(cls, d):
        try:
            gamma = GroupSpec.from_json(d["group"])
            labels = list(d["indexSet"])
            S = len(d["samples"])
            coords = np.array([s["coords"] for s in d["samples"]], dtype=float)
            members = np.zeros((len(labels), S), dtype=bool)
            for k, s in enumerate(d["samples"]):
                members[s["members"], k] = True
            weights = np.array([s.get("weight", 1.0 / S) for s in d["samples"]], dtype=float)
            eta = np.array(d["eta"], dtype=float)
            trans = {(int(a), int(b)): gamma.normal_form(w) for a, b, w in d["transitions"]}
            tree = [tuple(sorted(map(int, e))) for e in d["tree"]]
            kw = {}
            if d.get("ypart"):
                y = d["ypart"]
                lam = GroupSpec.from_json(y["group"])
                kw = dict(
                    lam=lam,
                    hom=GroupHom(lam, gamma, tuple(gamma.normal_form(w) for w in y["hom"])),
                    y_samples=np.array(y["samples"], dtype=int),
                    y_index=list(y["index"]),
                    y_transitions={(int(a), int(b)): lam.normal_form(w) for a, b, w in y["transitions"]},
                )
            nerve_d = d.get("nerve")
            if nerve_d:
                kw["edges"] = [tuple(e) for e in nerve_d["edges"]]
                kw["triangles"] = [tuple(t) for t in nerve_d["triangles"]]
            gs = d.get("gridShape")
            cover = cls(d.get("space", "user"), labels, coords, eta, members, weights, gamma, trans, tree,
                        grid_shape=tuple(gs) if gs else None, **kw)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidCover("malformed cover descriptor: %s" % exc) from exc
        return cover

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path, validate=True):
        with open(path) as fh:
            cover = cls.from_json(json.load(fh))
        if validate:
            validate_cover(cover)
        return cover


def nerve(members):
    """Edges and triangles of the nerve seen by the samples."""
    I = members.shape[0]
    edges = [(a, b) for a, b in combinations(range(I), 2) if np.any(members[a] & members[b])]
    tris = [
        (a, b, c)
        for a, b, c in combinations(range(I), 3)
        if np.any(members[a] & members[b] & members[c])
    ]
    return edges, tris


def _is_spanning_tree(tree, vertices):
    vertices = set(vertices)
    if len(tree) != len(vertices) - 1:
        return False
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in tree:
        if a not in vertices or b not in vertices:
            return False
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def validate_cover(cover):
    """Check every GoodCoverPair invariant; returns a dict of measured values.

    Raises InvalidCover on the first violation.
    """
    I, S = cover.members.shape
    if cover.eta.shape != (I, S):
        raise InvalidCover("eta has shape %r, expected %r" % (cover.eta.shape, (I, S)))
    pu = float(np.max(np.abs((cover.eta**2).sum(axis=0) - 1.0)))
    if pu > PU_TOL:
        raise InvalidCover("partition of unity off by %.3e" % pu)
    if np.any(cover.eta < 0):
        raise InvalidCover("negative partition function")
    if np.any((cover.eta > 0) & ~cover.members):
        raise InvalidCover("eta_mu nonzero outside U_mu")
    g = cover.gamma
    for (a, b), w in cover.transitions.items():
        if cover.transitions.get((b, a), g.inverse(w)) != g.inverse(w):
            raise InvalidCover("transition on <%d,%d> not inverse to <%d,%d>" % (a, b, b, a))
    for a, b, c in cover.triangles:
        lhs = g.multiply(cover.transition(a, b), cover.transition(b, c))
        if lhs != cover.transition(a, c):
            raise InvalidCover("cocycle identity fails on triangle %r" % ((a, b, c),))
    if not _is_spanning_tree(cover.tree, range(I)):
        raise InvalidCover("tree is not a spanning tree of the nerve")
    edge_set = set(cover.edges)
    for a, b in cover.tree:
        if (min(a, b), max(a, b)) not in edge_set:
            raise InvalidCover("tree edge <%d,%d> not in the nerve" % (a, b))
        if cover.transition(a, b) != E:
            raise InvalidCover("tree edge <%d,%d> carries a nontrivial transition" % (a, b))
    out = {"partitionOfUnity": pu, "size": I, "samples": S, "edges": len(cover.edges),
           "triangles": len(cover.triangles)}
    if cover.has_y:
        lam = cover.lam
        if not _is_spanning_tree(cover.y_tree(), cover.y_index):
            raise InvalidCover("tree restricted to Y is not spanning")
        for a, b in cover.y_edges:
            if cover.hom.apply(cover.y_transition(a, b)) != cover.transition(a, b):
                raise InvalidCover("phi(lambda) != gamma on <%d,%d>" % (a, b))
        for a, b, c in cover.y_triangles:
            if lam.multiply(cover.y_transition(a, b), cover.y_transition(b, c)) != cover.y_transition(a, c):
                raise InvalidCover("Lambda cocycle fails on triangle %r" % ((a, b, c),))
        for a, b in cover.y_tree():
            if cover.y_transition(a, b) != E:
                raise InvalidCover("Y tree edge <%d,%d> carries a nontrivial transition" % (a, b))
        out["ySize"] = len(cover.y_index)
    return out


# ---------------------------------------------------------------------------
# built-in covers

TORUS_INDEX = [(i, j) for i in range(3) for j in range(3)]


def torus_eta(points):
    """Partition functions of the torus cover at (P, 2) points, shape (9, P)."""
    points = np.atleast_2d(points)
    ex = circle_eta(points[:, 0])
    ey = circle_eta(points[:, 1])
    return np.array([ex[i] * ey[j] for i, j in TORUS_INDEX])


def torus_members(points):
    points = np.atleast_2d(points)
    mx = circle_members(points[:, 0])
    my = circle_members(points[:, 1])
    return np.array([mx[i] & my[j] for i, j in TORUS_INDEX])


def torus_cover(n_grid=48):
    """3x3 product cover of the torus with transitions in Z^2 = <a, b>."""
    if n_grid < 24:
        raise GridTooCoarse("n_grid = %d < 24" % n_grid)
    g = np.arange(n_grid) / n_grid
    X, Y = np.meshgrid(g, g, indexing="ij")
    coords = np.column_stack([X.ravel(), Y.ravel()])
    Z2 = free_abelian("a", "b")
    trans = {}
    for m, (i, j) in enumerate(TORUS_INDEX):
        for v, (k, l) in enumerate(TORUS_INDEX):
            if m != v:
                w = Z2.from_exponents([circle_transition(i, k), circle_transition(j, l)])
                if w:
                    trans[(m, v)] = w
    pos = {ij: m for m, ij in enumerate(TORUS_INDEX)}
    tree = [(pos[(i, j)], pos[(i + 1, j)]) for j in range(3) for i in range(2)]
    tree += [(pos[(0, j)], pos[(0, j + 1)]) for j in range(2)]
    tree = [tuple(sorted(e)) for e in tree]
    cover = GoodCoverPair(
        space="torus",
        labels=["U%d%d" % ij for ij in TORUS_INDEX],
        coords=coords,
        eta=torus_eta(coords),
        members=torus_members(coords),
        weights=np.full(len(coords), 1.0 / len(coords)),
        gamma=Z2,
        transitions=trans,
        tree=tree,
        grid_shape=(n_grid, n_grid),
        eta_fn=torus_eta,
    )
    return cover


DISK_CENTER_R = (0.15, 0.95)


def disk_eta(points):
    """Partition functions of the disk pair cover at (P, 2) plane points.

    Rows 0..2 are the collar sets (three angular arcs), row 3 the center.
    The formula is valid on the whole plane, so it also covers the collar.
    """
    points = np.atleast_2d(points)
    R = np.hypot(points[:, 0], points[:, 1])
    th = np.mod(np.arctan2(points[:, 1], points[:, 0]) / (2 * np.pi), 1.0)
    lo, hi = DISK_CENTER_R
    ang = 0.5 * np.pi * smooth01((R - lo) / (hi - lo))
    out = np.concatenate([circle_eta(th) * np.sin(ang)[None], np.cos(ang)[None]])
    out[out < 1e-15] = 0.0
    return out


def disk_members(points):
    points = np.atleast_2d(points)
    R = np.hypot(points[:, 0], points[:, 1])
    th = np.mod(np.arctan2(points[:, 1], points[:, 0]) / (2 * np.pi), 1.0)
    lo, hi = DISK_CENTER_R
    arcs = circle_members(th) & (R > lo)[None]
    return np.concatenate([arcs, (R < hi)[None]])


def disk_pair_cover(n_grid=48):
    """Cover of (D^2, S^1): three collar arcs plus a center disk."""
    if n_grid < 24:
        raise GridTooCoarse("n_grid = %d < 24" % n_grid)
    K = n_grid // 2
    th = 2 * np.pi * np.arange(n_grid) / n_grid
    radii = (np.arange(K) + 0.5) / K
    pts = [[r * np.cos(t), r * np.sin(t)] for r in radii for t in th]
    wts = [r * (1.0 / K) * (2 * np.pi / n_grid) for r in radii for t in th]
    ring = [[np.cos(t), np.sin(t)] for t in th]
    coords = np.array(pts + ring)
    weights = np.array(wts + [0.0] * n_grid)
    y_samples = np.arange(len(pts), len(pts) + n_grid)
    lam = GroupSpec("free-abelian", ("l",))
    gamma = trivial_group()
    y_trans = {}
    for m in range(3):
        for v in range(3):
            c = circle_transition(m, v)
            if c:
                y_trans[(m, v)] = lam.from_exponents([c])
    cover = GoodCoverPair(
        space="disk",
        labels=["A0", "A1", "A2", "D"],
        coords=coords,
        eta=disk_eta(coords),
        members=disk_members(coords),
        weights=weights,
        gamma=gamma,
        transitions={},
        tree=[(0, 1), (1, 2), (0, 3)],
        lam=lam,
        hom=GroupHom(lam, gamma, (E,)),
        y_samples=y_samples,
        y_index=[0, 1, 2],
        y_transitions=y_trans,
        eta_fn=disk_eta,
    )
    return cover


# ---------------------------------------------------------------------------
# collar profile


def rho(s, r):
    """The collar function: 2s - 1 for r <= 1, min(1, 2s + 2r - 3) on the collar, 1 beyond."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.where(r <= 1, 2 * s - 1, np.minimum(1.0, 2 * s + 2 * r - 3))


def collar_f(r):
    """The module-picture taper: f1 = min(1, max(0, 1 - 3r)), f2 = min(1, max(0, 3r - 2))."""
    r = np.asarray(r, dtype=float)
    return np.clip(1 - 3 * r, 0, 1), np.clip(3 * r - 2, 0, 1)


@dataclass
class CollarProfile:
    s_values: np.ndarray
    rho_x: np.ndarray
    r_values: np.ndarray
    rho_collar: np.ndarray
    f_r: np.ndarray
    f1: np.ndarray
    f2: np.ndarray

    def check(self):
        ok = np.all(np.abs(self.rho_x) <= 1) and np.all(np.abs(self.rho_collar) <= 1)
        ok &= np.all(self.f1**2 + self.f2**2 <= 1 + 1e-15)
        ok &= bool(self.f1[0] == 1.0)
        return bool(ok)


def collar_profile(cover, s_count=33, r_count=41):
    """Sample rho on X x s-grid and on the collar coordinate r in [1, 2]."""
    s_unit = np.linspace(0.0, 1.0, s_count)
    r = np.linspace(1.0, 2.0, r_count)
    rho_x = np.repeat((2 * s_unit - 1)[None], cover.n_samples, axis=0)
    rho_c = rho(s_unit[None], r[:, None])
    fr = np.linspace(0.0, 1.0, r_count)
    f1, f2 = collar_f(fr)
    return CollarProfile(s_unit, rho_x, r, rho_c, fr, f1, f2)
