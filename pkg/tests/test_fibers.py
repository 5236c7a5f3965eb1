import numpy as np
import pytest

from conftest import random_signals
from gammafit.crystal import build_crystal, r_rep
from gammafit.errors import EmptyFamily, InconsistentSpec
from gammafit.fibers import (bracket, defiberize, dft, fiberize, fiberize_gamma, gramian,
                             idft, pi_rep, pre_gramian, rotate, translate, weighted_norm)
from gammafit.lca import pairing
from gammafit.verify import (gramian_covariance_gap, intertwining_gap,
                             pregramian_covariance_gap)


@pytest.fixture(scope="module")
def z4():
    return build_crystal(4, 1, [[2]], [[[1]]])


def test_dft_examples(z4):
    delta = np.zeros(4)
    delta[0] = 1
    assert np.allclose(dft(z4, delta), 0.5)
    assert np.allclose(dft(z4, np.ones(4)), [2, 0, 0, 0])


def test_dft_plancherel_and_inverse(square, rng):
    f = random_signals(square, 1, rng)[0]
    assert np.isclose(np.linalg.norm(dft(square, f)), np.linalg.norm(f), rtol=1e-12)
    assert np.allclose(idft(square, dft(square, f)), f, atol=1e-12)


def test_dft_convention(line, rng):
    f = random_signals(line, 1, rng)[0]
    xi = 5
    direct = sum(np.conj(pairing(line.spec, [xi], [x])) * f[x] for x in range(12)) / np.sqrt(12)
    assert np.isclose(dft(line, f)[xi], direct)


def test_translate_rotate(line, square, rng):
    f = random_signals(line, 1, rng)[0]
    assert np.allclose(translate(line, 0, f), f)
    assert np.allclose(rotate(line, 0, f), f)
    d1 = np.zeros(12)
    d1[1] = 1
    assert np.argmax(np.abs(rotate(line, 1, d1))) == 11
    g = random_signals(square, 1, rng)[0]
    pts = square.spec.all_points()
    gh = dft(square, g).reshape(-1)
    for gi in range(4):
        rh = dft(square, rotate(square, gi, g)).reshape(-1)
        assert np.allclose(rh, gh[square.group.dual_perm[gi]])
        k = (3, 5)
        th = dft(square, translate(square, k, g)).reshape(-1)
        assert np.allclose(th, np.conj(pairing(square.spec, pts, k)) * gh)


def test_fiberize_delta(z4):
    delta = np.zeros(4)
    delta[0] = 1
    F = fiberize(z4, delta)
    assert np.allclose(F, 1 / np.sqrt(2))
    assert np.allclose(np.linalg.norm(F, axis=1), 1)


def test_fiberize_roundtrip_and_isometry(line, square, rng):
    for cr in (line, square):
        for f in random_signals(cr, 5, rng):
            F = fiberize(cr, f)
            assert np.allclose(defiberize(cr, F), f, atol=1e-12)
            assert abs(weighted_norm(cr, F) - np.linalg.norm(f)) <= 1e-12 * np.linalg.norm(f)


def test_defiberize_shape_check(line):
    with pytest.raises(InconsistentSpec):
        defiberize(line, np.zeros((3, 3)))


def test_fiberize_translation_phase(square, rng):
    f = random_signals(square, 1, rng)[0]
    for k in square.lattice.elements:
        phase = np.conj(pairing(square.spec, square.section.reps, k))
        assert np.allclose(fiberize(square, translate(square, k, f)),
                           phase[:, None] * fiberize(square, f))


def test_intertwining(line, square, rng):
    for cr in (line, square):
        for f in random_signals(cr, 3, rng):
            assert intertwining_gap(cr, f) <= 1e-12 * np.linalg.norm(f)


def test_fiberize_gamma(line, square, rng):
    for cr in (line, square):
        f = random_signals(cr, 1, rng)[0]
        TG = fiberize_gamma(cr, f)
        F = fiberize(cr, f)
        for o, rec in enumerate(cr.orbits):
            assert np.allclose(TG[o, 0], F[rec.rep])
        for u in range(cr.group.order):
            TGu = fiberize_gamma(cr, rotate(cr, u, f))
            for o in range(len(cr.orbits)):
                for g in range(cr.group.order):
                    gu = cr.group.mul[g, u]
                    assert np.allclose(TGu[o, g], TG[o, gu][r_rep(cr, u)])


def test_fixed_fiber_gamma_consistency(square, rng):
    f = random_signals(square, 1, rng)[0]
    TG = fiberize_gamma(square, f)
    F = fiberize(square, f)
    for g in range(4):
        # g* 0 = 0, so T_G[f](0, g) is the zero fiber itself
        assert np.allclose(TG[0, g], F[0])
        assert np.allclose(pi_rep(square, g, F)[0], F[0][r_rep(square, g)])


def test_pi_rep(square, rng):
    f = random_signals(square, 1, rng)[0]
    F = fiberize(square, f)
    assert np.allclose(pi_rep(square, 0, F), F)
    grp = square.group
    for g in range(4):
        assert np.allclose(pi_rep(square, g, F), fiberize(square, rotate(square, g, f)))
        for h in range(4):
            assert np.allclose(pi_rep(square, g, pi_rep(square, h, F)),
                               pi_rep(square, grp.mul[g, h], F))


def test_gramian_delta(z4):
    delta = np.zeros(4)
    delta[0] = 1
    for w in range(2):
        assert np.allclose(gramian(z4, [delta], w), [[1]])


def test_gramian_hermitian_psd_and_bracket(line, rng):
    phis = random_signals(line, 2, rng)
    for w in range(line.n_fibers):
        Gm = gramian(line, phis, w)
        assert np.allclose(Gm, Gm.conj().T)
        assert np.linalg.eigvalsh(Gm).min() > -1e-10 * np.linalg.norm(Gm)
        J = pre_gramian(line, phis, w)
        assert np.allclose(J[:, 2], fiberize(line, phis[1])[w])
        assert np.allclose(J[:, 1], fiberize(line, rotate(line, 1, phis[0]))[w])
        # the Gramian entry is |Lambda| times the unscaled bracket
        assert np.isclose(Gm[0, 2], len(line.lattice) * bracket(line, phis[1], phis[0],
                                                                line.section.reps[w]))


def test_empty_family(line):
    with pytest.raises(EmptyFamily):
        pre_gramian(line, [], 0)


def test_covariance_identities(line, square, rng):
    for cr in (line, square):
        phis = random_signals(cr, 2, rng)
        assert pregramian_covariance_gap(cr, phis) <= 1e-12 * 10
        assert gramian_covariance_gap(cr, phis) <= 1e-12 * 100


def test_converse_covariance(line, rng):
    """A family with covariant pre-Gramian and psi_{j,e} = phi_j is the rotated family."""
    phi = random_signals(line, 1, rng)[0]
    psi = [phi, rotate(line, 1, phi)]
    fam = np.stack([fiberize(line, p) for p in psi])
    # rebuild psi_{j,g} from the covariance relation at the e-column alone
    for g in range(2):
        rebuilt = np.empty_like(fam[0])
        for w in range(line.n_fibers):
            rebuilt[w] = fam[0][line.section_act[g, w]][line.transport[g, w]]
        assert np.allclose(defiberize(line, rebuilt), psi[g])
