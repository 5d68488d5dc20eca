import numpy as np
import pytest

from kflat.errors import BoundaryMismatch, GroupMismatch, UnknownGenerator
from kflat.groups import (
    E,
    GAMatrix,
    GroupHom,
    GroupSpec,
    MCElement,
    ball,
    free_abelian,
    free_group,
    ga_element,
    ga_mul,
    identity_hom,
    lattice_ball_size,
    map_hom,
    trivial_group,
)


def test_normal_forms():
    F = free_group("a", "b")
    Z2 = free_abelian("a", "b")
    assert F.normal_form("a a^-1 b") == F.parse("b")
    assert Z2.normal_form("a b a^-1 b") == Z2.parse("b b")
    assert trivial_group().normal_form(()) == E
    assert F.normal_form("a b") != F.normal_form("b a")
    assert Z2.normal_form("a b") == Z2.normal_form("b a")
    with pytest.raises(UnknownGenerator):
        F.parse("c")


def test_ball_sizes():
    Z2 = free_abelian("a", "b")
    assert len(ball(Z2, 1)) == 5
    assert len(ball(Z2, 3)) == 25 == lattice_ball_size(2, 3)
    for r in (1, 2, 4):
        assert len(ball(trivial_group(), r)) == 1
    assert len(ball(free_abelian("l"), 2)) == 5
    # free group of rank 2: reduced words of length <= 2
    assert len(ball(free_group("a", "b"), 2)) == 1 + 4 + 12


def test_group_algebra_products():
    Z2 = free_abelian("a", "b")
    ua, uai, ub = (GAMatrix.scalar(Z2, w) for w in ("a", "a^-1", "b"))
    assert ga_mul(ua, uai).allclose(GAMatrix.identity(Z2, 1))
    x = ga_mul(ua + ub, ub)
    assert x.allclose(GAMatrix.scalar(Z2, "a b") + GAMatrix.scalar(Z2, "b b"))
    assert x.propagation == 2
    y = ga_element(Z2, {"a": 2.0, "b": 1j})
    assert y.adjoint().allclose(ga_element(Z2, {"a^-1": 2.0, "b^-1": -1j}))


def test_character_is_multiplicative():
    Z2 = free_abelian("a", "b")
    x = ga_element(Z2, {"a": 1.0, "b b": 0.5})
    y = ga_element(Z2, {"a^-1 b": 2.0, "e": 1.0})
    th = (0.3, 1.1)
    assert np.allclose(ga_mul(x, y).character(th), x.character(th) @ y.character(th))


def test_hom_pushforward():
    Z = free_abelian("l")
    Z2 = free_abelian("a", "b")
    triv = trivial_group()
    to_triv = GroupHom(Z, triv, ((),))
    assert map_hom(to_triv, GAMatrix.scalar(Z, "l")).allclose(GAMatrix.identity(triv, 1))
    x = ga_element(Z2, {"a": 1.0, "b^-1": 2.0})
    assert map_hom(identity_hom(Z2), x).allclose(x)
    phi = GroupHom(Z, Z2, ("a",))
    assert map_hom(phi, GAMatrix.scalar(Z, "l l")).allclose(GAMatrix.scalar(Z2, "a a"))
    with pytest.raises(GroupMismatch):
        map_hom(phi, x)


def test_free_abelian_into_free_needs_commuting_images():
    with pytest.raises(ValueError):
        GroupHom(free_abelian("a", "b"), free_group("x", "y"), ("x", "y"))


def test_mapping_cone_boundary():
    Z = free_abelian("l")
    triv = trivial_group()
    phi = GroupHom(Z, triv, ((),))
    a = GAMatrix.scalar(Z, "l")
    ok = MCElement(a, [GAMatrix.identity(triv, 1)] * 3, phi)
    assert ok.propagation == 1
    with pytest.raises(BoundaryMismatch):
        MCElement(a, [GAMatrix.scalar(triv, (), 2.0)] * 3, phi)


def test_json_roundtrip():
    g = free_group("a", "b")
    assert GroupSpec.from_json(g.to_json()) == g
