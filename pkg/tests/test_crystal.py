import itertools

import numpy as np
import pytest

from conftest import C4
from gammafit.crystal import (GammaElement, act_dual, act_on_section, act_space, build_crystal,
                              gamma_compose, lambda_rep, r_matrix, r_rep, validate_point_group)
from gammafit.errors import LatticeNotPreserved, NotAGroup, NotInvertible
from gammafit.lca import GroupSpec, enumerate_lattice, pairing


def test_valid_groups(line, square):
    assert line.group.order == 2
    assert square.group.order == 4
    assert np.array_equal(square.group.mats[0], np.eye(2))


def test_identity_moved_first():
    lat = enumerate_lattice(GroupSpec(12, 1), [[3]])
    g = validate_point_group([[[-1]], [[1]]], lat)
    assert g.mats[0][0, 0] == 1 and g.source_index == (1, 0)


def test_shear_is_not_a_group():
    lat = enumerate_lattice(GroupSpec(8, 2), [[2, 0], [0, 2]])
    with pytest.raises(NotAGroup):
        validate_point_group([np.eye(2, dtype=int), [[1, 1], [0, 1]]], lat)


def test_not_invertible_reports_index():
    lat = enumerate_lattice(GroupSpec(12, 1), [[3]])
    with pytest.raises(NotInvertible, match=r"point_group\[1\]"):
        validate_point_group([[[1]], [[2]]], lat)


def test_lattice_not_preserved():
    lat = enumerate_lattice(GroupSpec(8, 2), [[2, 0], [0, 4]])
    with pytest.raises(LatticeNotPreserved):
        validate_point_group(C4, lat)


def test_missing_identity_and_duplicates():
    lat = enumerate_lattice(GroupSpec(12, 1), [[3]])
    with pytest.raises(NotAGroup):
        validate_point_group([[[-1]]], lat)
    with pytest.raises(NotAGroup):
        validate_point_group([[[1]], [[-1]], [[11]]], lat)


def test_dual_action_examples(line, square):
    assert act_dual(line.group, 1, [5]) == (7,)
    assert act_dual(line.group, 0, [5]) == (5,)
    spec = square.spec
    for g in range(4):
        for xi in spec.all_points()[::5]:
            for x in spec.all_points()[::7]:
                assert np.isclose(pairing(spec, act_dual(square.group, g, xi), x),
                                  pairing(spec, xi, act_space(square.group, g, x)))


def test_dual_contravariance(square, rng):
    grp = square.group
    for _ in range(30):
        g1, g2 = rng.integers(0, 4, size=2)
        xi = rng.integers(0, 8, size=2)
        assert act_dual(grp, g1, act_dual(grp, g2, xi)) == act_dual(grp, grp.mul[g2, g1], xi)


def test_gamma_compose(line):
    a = GammaElement((3,), 1)
    assert gamma_compose(line.group, a, a) == GammaElement((0,), 0)
    assert gamma_compose(line.group, GammaElement((3,), 0), GammaElement((6,), 0)) == \
        GammaElement((9,), 0)
    assert gamma_compose(line.group, GammaElement((0,), 1), GammaElement((3,), 0)) == \
        GammaElement((9,), 1)


def test_gamma_compose_associative(square, rng):
    lat = square.lattice.elements
    for _ in range(20):
        a, b, c = (GammaElement(tuple(int(v) for v in lat[rng.integers(len(lat))]),
                                int(rng.integers(4))) for _ in range(3))
        grp = square.group
        assert gamma_compose(grp, gamma_compose(grp, a, b), c) == \
            gamma_compose(grp, a, gamma_compose(grp, b, c))


def test_act_on_section(line):
    assert act_on_section(line, 1, 1) == 3
    assert act_on_section(line, 1, 0) == 0
    assert act_on_section(line, 1, 2) == 2


def test_section_action_compatible(square):
    grp = square.group
    for g1, g2, w in itertools.product(range(4), range(4), range(square.n_fibers)):
        assert act_on_section(square, g1, act_on_section(square, g2, w)) == \
            act_on_section(square, grp.mul[g2, g1], w)


def test_r_rep(line, square):
    assert list(r_rep(line, 1)) == [0, 2, 1]
    assert list(r_rep(line, 0)) == [0, 1, 2]
    grp = square.group
    for g in range(4):
        assert np.allclose(r_matrix(square, g) @ r_matrix(square, grp.inv[g]), np.eye(square.n_ann))
        for h in range(4):
            # (r_g r_h a)(s) = a(h* g* s) = a((gh)* s)
            assert np.allclose(r_matrix(square, g) @ r_matrix(square, h),
                               r_matrix(square, grp.mul[g, h]))


def test_lambda_rep(line, square):
    assert np.array_equal(lambda_rep(line.group, 1, 1), [[0, 1], [1, 0]])
    assert np.array_equal(lambda_rep(square.group, 0, 3), np.eye(12))
    grp = square.group
    for g in range(4):
        L = lambda_rep(grp, g, 2)
        assert np.allclose(L @ lambda_rep(grp, grp.inv[g], 2), np.eye(8))
        assert np.allclose(L @ L.T, np.eye(8))
        for h in range(4):
            assert np.allclose(L @ lambda_rep(grp, h, 2), lambda_rep(grp, grp.mul[g, h], 2))


def test_orbit_partition_line(line):
    recs = {r.rep: r for r in line.orbits}
    assert sorted(recs) == [0, 1, 2]
    assert recs[0].stabilizer == (0, 1) and recs[2].stabilizer == (0, 1)
    assert recs[1].stabilizer == (0,)
    assert recs[1].members == ((0, 1), (1, 3))


def test_orbit_partition_trivial_group():
    cr = build_crystal(12, 1, [[3]], [[[1]]])
    assert [r.rep for r in cr.orbits] == [0, 1, 2, 3]


def test_orbit_stabilizer_identity(square):
    seen = []
    for rec in square.orbits:
        assert rec.size * len(rec.stabilizer) == square.group.order
        assert rec.members[0] == (0, rec.rep)
        assert rec.rep == min(w for _g, w in rec.members)
        seen += [w for _g, w in rec.members]
    assert sorted(seen) == list(range(square.n_fibers))
