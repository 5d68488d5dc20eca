"""Finitely generated groups, group-algebra matrices and mapping-cone elements.

Words are tuples of nonzero integers: ``k`` stands for the generator with
index ``k - 1`` and ``-k`` for its inverse.  The empty tuple is the identity.
Normal forms are canonical tuples, so they double as dictionary keys.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import BoundaryMismatch, GroupMismatch, ShapeMismatch, UnknownGenerator

KINDS = ("trivial", "free", "free-abelian")
E = ()


@dataclass(frozen=True)
class GroupSpec:
    """A trivial, free or free abelian group with named generators."""

    kind: str
    names: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unsupported group kind %r" % self.kind)
        if self.kind == "trivial" and self.names:
            raise ValueError("the trivial group has no generators")
        if len(set(self.names)) != len(self.names):
            raise ValueError("generator names must be distinct")

    @property
    def rank(self):
        return len(self.names)

    # -- words -----------------------------------------------------------
    def letters(self):
        """The generating set 𝒢 = {e} ∪ {a, a^-1, ...} as normal forms."""
        out = [E]
        for k in range(1, self.rank + 1):
            out += [(k,), (-k,)]
        return out

    def parse(self, word):
        """Parse a word given as a tuple of ints or a symbol list/string.

        Symbols are generator names, ``name^-1`` (or ``name-``) for
        inverses, and ``e`` for the identity.  Strings are split on spaces,
        ``*`` or ``.``.
        """
        if isinstance(word, str):
            word = [t for t in word.replace("*", " ").replace(".", " ").split() if t]
        out = []
        for sym in word:
            if isinstance(sym, (int, np.integer)):
                if sym == 0 or abs(sym) > self.rank:
                    raise UnknownGenerator("letter %r outside rank %d" % (sym, self.rank))
                out.append(int(sym))
                continue
            if sym in ("e", "1"):
                continue
            sign = 1
            name = sym
            for suffix in ("^-1", "-", "⁻¹"):
                if sym.endswith(suffix):
                    sign, name = -1, sym[: -len(suffix)]
                    break
            if name not in self.names:
                raise UnknownGenerator("unknown generator symbol %r" % sym)
            out.append(sign * (self.names.index(name) + 1))
        return tuple(out)

    def normal_form(self, word):
        w = self.parse(word) if not _is_int_tuple(word) else tuple(word)
        for x in w:
            if x == 0 or abs(x) > self.rank:
                raise UnknownGenerator("letter %r outside rank %d" % (x, self.rank))
        if self.kind == "trivial":
            return E
        if self.kind == "free":
            stack = []
            for x in w:
                if stack and stack[-1] == -x:
                    stack.pop()
                else:
                    stack.append(x)
            return tuple(stack)
        return self.from_exponents(self.exponents(w))

    def exponents(self, word):
        """Exponent vector of a word (abelianisation)."""
        v = np.zeros(self.rank, dtype=int)
        for x in word:
            v[abs(x) - 1] += 1 if x > 0 else -1
        return v

    def from_exponents(self, v):
        out = []
        for k, c in enumerate(v):
            out += [int(np.sign(c)) * (k + 1)] * abs(int(c))
        return tuple(out)

    def multiply(self, *words):
        w = []
        for x in words:
            w += list(x)
        return self.normal_form(tuple(w))

    def inverse(self, word):
        return self.normal_form(tuple(-x for x in reversed(word)))

    def length(self, word):
        return len(self.normal_form(word))

    def format(self, word):
        if not word:
            return "e"
        return "*".join(self.names[abs(x) - 1] + ("^-1" if x < 0 else "") for x in word)

    def to_json(self):
        return {"kind": self.kind, "rank": self.rank, "generators": list(self.names)}

    @classmethod
    def from_json(cls, d):
        names = tuple(d.get("generators", ()))
        if not names and d.get("rank"):
            names = tuple("g%d" % i for i in range(d["rank"]))
        return cls(d["kind"], names)


def _is_int_tuple(w):
    return isinstance(w, tuple) and all(isinstance(x, (int, np.integer)) for x in w)


def trivial_group():
    return GroupSpec("trivial")


def free_abelian(*names):
    return GroupSpec("free-abelian", tuple(names))


def free_group(*names):
    return GroupSpec("free", tuple(names))


def normal_form(word, g):
    return g.normal_form(word)


def ball(g, r):
    """The set 𝒢^r of products of exactly ``r`` elements of 𝒢, as normal forms."""
    if r < 1:
        raise ValueError("r must be >= 1")
    cur = {E}
    gens = g.letters()
    for _ in range(r):
        cur = {g.multiply(w, x) for w in cur for x in gens}
    return cur


# ---------------------------------------------------------------------------
# group algebra


@dataclass
class GAMatrix:
    """Matrix over the group algebra: a finite sum ``sum_g c_g u_g``.

    ``coeffs`` maps a normal form to an array of shape ``batch + (rows, cols)``.
    A leading batch shape represents a field of such matrices over sample
    points; every operation acts samplewise.
    """

    group: GroupSpec
    shape: tuple
    coeffs: dict = field(default_factory=dict)
    batch: tuple = ()

    def __post_init__(self):
        self.shape = tuple(self.shape)
        for k, c in list(self.coeffs.items()):
            c = np.asarray(c, dtype=complex)
            if c.shape[-2:] != self.shape:
                raise ShapeMismatch("coefficient of shape %r in a %r matrix" % (c.shape, self.shape))
            self.batch = c.shape[:-2]
            self.coeffs[k] = c

    @classmethod
    def scalar(cls, group, word, value=1.0, n=1):
        """``value * u_word`` times the n x n identity."""
        return cls(group, (n, n), {group.normal_form(word): value * np.eye(n, dtype=complex)})

    @classmethod
    def identity(cls, group, n):
        return cls(group, (n, n), {E: np.eye(n, dtype=complex)})

    @classmethod
    def zeros(cls, group, shape):
        return cls(group, shape, {})

    @property
    def propagation(self):
        return max((len(k) for k in self.coeffs), default=0)

    def support(self):
        return sorted(self.coeffs, key=lambda k: (len(k), k))

    def entry(self, i, j):
        """The (i, j) entry as a 1x1 group-algebra element."""
        return GAMatrix(self.group, (1, 1), {k: c[..., i : i + 1, j : j + 1] for k, c in self.coeffs.items()})

    def _check(self, other):
        if self.group != other.group:
            raise GroupMismatch("%r vs %r" % (self.group, other.group))

    def __add__(self, other):
        self._check(other)
        if self.shape != other.shape:
            raise ShapeMismatch("%r vs %r" % (self.shape, other.shape))
        out = {k: c.copy() for k, c in self.coeffs.items()}
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c.copy()
        return GAMatrix(self.group, self.shape, out)._pruned()

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, z):
        return GAMatrix(self.group, self.shape, {k: z * c for k, c in self.coeffs.items()})

    def __matmul__(self, other):
        return ga_mul(self, other)

    def adjoint(self):
        g = self.group
        return GAMatrix(
            g,
            self.shape[::-1],
            {g.inverse(k): np.conj(np.swapaxes(c, -1, -2)) for k, c in self.coeffs.items()},
        )

    def _pruned(self):
        self.coeffs = {k: c for k, c in self.coeffs.items() if np.any(c != 0)}
        return self

    def at(self, idx):
        """Select one batch sample."""
        return GAMatrix(self.group, self.shape, {k: c[idx] for k, c in self.coeffs.items()})

    def coefficient_norm_max(self):
        from .numerics import op_norm

        return max((op_norm(c) for c in self.coeffs.values()), default=0.0)

    def character(self, theta):
        """Evaluate an abelian group algebra matrix at the character ``theta``."""
        if self.group.kind == "free":
            raise ValueError("characters do not separate a free group algebra")
        theta = np.asarray(theta, dtype=float)
        out = 0
        for k, c in self.coeffs.items():
            ph = np.exp(1j * float(np.dot(self.group.exponents(k), theta))) if k else 1.0
            out = out + ph * c
        if isinstance(out, int):
            out = np.zeros(self.batch + self.shape, dtype=complex)
        return out

    def allclose(self, other, atol=1e-12):
        keys = set(self.coeffs) | set(other.coeffs)
        for k in keys:
            a = self.coeffs.get(k)
            b = other.coeffs.get(k)
            a = 0 if a is None else a
            b = 0 if b is None else b
            if np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0) > atol:
                return False
        return True


def ga_element(group, support):
    """A 1x1 group-algebra matrix from ``{word: coefficient}``."""
    return GAMatrix(
        group, (1, 1), {group.normal_form(w): np.array([[c]], dtype=complex) for w, c in support.items()}
    )._pruned()


def ga_mul(x, y):
    """Product of group-algebra matrices (batched samplewise)."""
    x._check(y)
    if x.shape[1] != y.shape[0]:
        raise ShapeMismatch("cannot multiply %r by %r" % (x.shape, y.shape))
    g = x.group
    out = {}
    for kx, cx in x.coeffs.items():
        for ky, cy in y.coeffs.items():
            k = g.multiply(kx, ky)
            p = cx @ cy
            out[k] = out[k] + p if k in out else p
    return GAMatrix(g, (x.shape[0], y.shape[1]), out)._pruned()


def block_matrix(group, blocks):
    """Assemble ``{(i, j): GAMatrix}`` blocks into one GAMatrix (all blocks square and equal)."""
    n = 1 + max(max(i, j) for i, j in blocks)
    d = next(iter(blocks.values())).shape[0]
    out = {}
    for (i, j), b in blocks.items():
        for k, c in b.coeffs.items():
            if k not in out:
                out[k] = np.zeros(c.shape[:-2] + (n * d, n * d), dtype=complex)
            out[k][..., i * d : (i + 1) * d, j * d : (j + 1) * d] += c
    return GAMatrix(group, (n * d, n * d), out)


@dataclass(frozen=True)
class GroupHom:
    """Homomorphism given by images of generators (as normal forms)."""

    source: GroupSpec
    target: GroupSpec
    images: tuple

    def __post_init__(self):
        if len(self.images) != self.source.rank:
            raise ValueError("need one image per source generator")
        imgs = tuple(self.target.normal_form(w) for w in self.images)
        object.__setattr__(self, "images", imgs)
        if self.source.kind == "free-abelian" and self.target.kind == "free":
            # relations [g_i, g_j] = e must hold in the target
            for i in range(len(imgs)):
                for j in range(i + 1, len(imgs)):
                    a, b = imgs[i], imgs[j]
                    if self.target.multiply(a, b, self.target.inverse(a), self.target.inverse(b)) != E:
                        raise ValueError("images do not commute; homomorphism ill-defined")

    def apply(self, word):
        out = []
        for x in word:
            img = self.images[abs(x) - 1]
            out += list(img) if x > 0 else list(self.target.inverse(img))
        return self.target.normal_form(tuple(out))

    def is_letter_preserving(self):
        return all(len(w) <= 1 for w in self.images)

    def to_json(self):
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "images": [self.target.format(w) for w in self.images],
        }


def identity_hom(g):
    return GroupHom(g, g, tuple((k,) for k in range(1, g.rank + 1)))


def map_hom(phi, x):
    """Coefficientwise pushforward ``phi_*(x)``."""
    if x.group != phi.source:
        raise GroupMismatch("matrix is not over the source group")
    out = {}
    for k, c in x.coeffs.items():
        kk = phi.apply(k)
        out[kk] = out[kk] + c if kk in out else c.copy()
    return GAMatrix(phi.target, x.shape, out)._pruned()


@dataclass
class MCElement:
    """Element ``(a, b_s)`` of the mapping cone of ``phi`` at the algebraic level."""

    a: GAMatrix
    b_path: list
    hom: GroupHom
    s_values: np.ndarray = None
    atol: float = 1e-12

    def __post_init__(self):
        if self.s_values is None:
            self.s_values = np.arange(len(self.b_path)) / max(len(self.b_path), 1)
        self.s_values = np.asarray(self.s_values, dtype=float)
        self.check_boundary()

    def check_boundary(self):
        if not map_hom(self.hom, self.a).allclose(self.b_path[0], atol=self.atol):
            raise BoundaryMismatch("phi_*(a) differs from b_0")

    @property
    def propagation(self):
        return max([self.a.propagation] + [b.propagation for b in self.b_path])

    def __matmul__(self, other):
        return MCElement(
            self.a @ other.a,
            [x @ y for x, y in zip(self.b_path, other.b_path)],
            self.hom,
            self.s_values,
            self.atol,
        )

    def adjoint(self):
        return MCElement(self.a.adjoint(), [b.adjoint() for b in self.b_path], self.hom, self.s_values, self.atol)


def lattice_ball_size(rank, r):
    """Independent count of the l1-ball of radius r in Z^rank."""
    rng = range(-r, r + 1)
    return sum(1 for v in product(rng, repeat=rank) if sum(abs(t) for t in v) <= r)
