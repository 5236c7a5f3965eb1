"""Property-based checks on randomly drawn small instances."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from gammafit import oracle
from gammafit.crystal import build_crystal
from gammafit.fibers import defiberize, fiberize, weighted_norm
from gammafit.solver import error_functional, parseval_gap, solve_optimal
from gammafit.verify import intertwining_gap

# (N, lattice step, point group) in one dimension
LINE_CASES = [(12, 3, [[[1]], [[-1]]]), (12, 4, [[[1]], [[-1]]]), (10, 5, [[[1]], [[-1]]]),
              (8, 2, [[[1]], [[3]], [[5]], [[7]]]), (9, 3, [[[1]]])]

SLOW = settings(max_examples=15, deadline=None,
                suppress_health_check=[HealthCheck.too_slow])


@st.composite
def instances(draw, max_m=3):
    N, step, grp = draw(st.sampled_from(LINE_CASES))
    cr = build_crystal(N, 1, [[step]], grp)
    m = draw(st.integers(1, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    data = [rng.normal(size=N) + 1j * rng.normal(size=N) for _ in range(m)]
    return cr, data


@SLOW
@given(instances())
def test_isometry_and_roundtrip(inst):
    cr, data = inst
    for f in data:
        F = fiberize(cr, f)
        assert abs(weighted_norm(cr, F) - np.linalg.norm(f)) <= 1e-12 * np.linalg.norm(f)
        assert np.allclose(defiberize(cr, F), f, atol=1e-12)


@SLOW
@given(instances(max_m=1))
def test_intertwining_random(inst):
    cr, data = inst
    assert intertwining_gap(cr, data[0]) <= 1e-12 * np.linalg.norm(data[0])


@SLOW
@given(instances(max_m=3))
def test_solver_against_oracle(inst):
    cr, data = inst
    prev = np.inf
    for kappa in range(1, len(data) + 1):
        gens, rep = solve_optimal(cr, data, kappa)
        brute = oracle.brute_projection_error(cr, data, gens.signals)
        assert abs(rep.achieved_error - brute) <= 1e-9 * max(1.0, brute)
        assert rep.achieved_error >= rep.spectral_bound - 1e-9
        if not rep.constrained:
            assert abs(rep.achieved_error - rep.spectral_bound) <= 1e-9 * max(1.0, brute)
        assert rep.achieved_error <= prev + 1e-10
        assert parseval_gap(cr, gens.signals) <= 1e-10
        assert abs(error_functional(cr, data, generators=gens.signals, route="orbit")
                   - rep.achieved_error) <= 1e-10 * max(1.0, brute)
        prev = rep.achieved_error
    assert prev <= 1e-9


@SLOW
@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_jacobi_matches_reference(n, seed):
    from gammafit.spectra import eig_hermitian
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = A + A.conj().T
    assert np.max(np.abs(oracle.eig_reference(A) - eig_hermitian(A).values)) \
        <= 1e-8 * np.linalg.norm(A)
