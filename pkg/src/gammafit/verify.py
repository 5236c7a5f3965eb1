"""Numerical identity checks.  Each returns the worst violation found."""
from dataclasses import dataclass

import numpy as np

from .crystal import lambda_perm
from .fibers import (dft, family_fibers, fiber_at, fiberize, gamma_frequency, pi_rep,
                     rotate, rotated_family, translate, weighted_norm)
from .lca import pairing
from .solver import (check_gamma_covariance, check_gamma_invariance, error_functional,
                     gamma_range_function, generator_coefficients, parseval_gap, parsevalize,
                     range_function, solve_optimal)
from .spectra import eig_hermitian


@dataclass(frozen=True)
class Check:
    name: str
    worst: float
    tol: float
    where: str = ""

    @property
    def passed(self):
        return bool(self.worst <= self.tol)


def isometry_gap(crystal, f):
    f = np.asarray(f)
    return abs(weighted_norm(crystal, fiberize(crystal, f)) - np.linalg.norm(f)) / \
        max(np.linalg.norm(f), 1e-300)


def intertwining_gap(crystal, f):
    """max over (k, g, w) of |T[T_k R_g f](w) - conj<w, k> r_g T[f](g* w)|."""
    worst = 0.0
    reps = crystal.section.reps
    for g in range(crystal.group.order):
        rf = rotate(crystal, g, f)
        base = np.stack([fiber_at(crystal, f, gamma_frequency(crystal, w, g))
                         for w in range(crystal.n_fibers)])
        base = base[:, crystal.r_perm[g]]
        for k in crystal.lattice.elements:
            lhs = fiberize(crystal, translate(crystal, k, rf))
            phase = pairing(crystal.spec, reps, k).conj()
            worst = max(worst, float(np.max(np.abs(lhs - phase[:, None] * base))))
    return worst


def pi_gap(crystal, f):
    """Pi(g) T[f] = T[R_g f] and Pi(g) Pi(h) = Pi(gh)."""
    F = fiberize(crystal, f)
    group = crystal.group
    worst = 0.0
    for g in range(group.order):
        worst = max(worst, float(np.max(np.abs(pi_rep(crystal, g, F)
                                               - fiberize(crystal, rotate(crystal, g, f))))))
        for h in range(group.order):
            two = pi_rep(crystal, g, pi_rep(crystal, h, F))
            worst = max(worst, float(np.max(np.abs(two - pi_rep(crystal, group.mul[g, h], F)))))
    return worst


def _pregramian_reader(crystal, phis):
    """Pre-Gramian at any frequency, with the family spectra computed once."""
    fam = rotated_family(crystal, phis)
    hats = np.stack([dft(crystal, f).reshape(-1) for f in fam])
    scale = np.sqrt(crystal.lattice_size)
    spec = crystal.spec

    def at(xi):
        idx = spec.flat_index(np.asarray(xi, dtype=np.int64)[None, :] + crystal.ann.elements)
        return scale * hats[:, idx].T
    return at


def pregramian_covariance_gap(crystal, phis):
    """J(g* w) = r_{g^-1} J(w) lambda_g at unreduced frequencies g* w."""
    group = crystal.group
    n = len(phis)
    at = _pregramian_reader(crystal, phis)
    worst = 0.0
    for w in range(crystal.n_fibers):
        J = at(crystal.section.reps[w])
        for g in range(group.order):
            moved = at(gamma_frequency(crystal, w, g))
            # (r_{g^-1} a)[t] = a[r_perm[g^-1, t]]; (X lambda_g)[:, p] = X[:, perm^-1[p]]
            rhs = J[crystal.r_perm[group.inv[g]]]
            rhs = rhs[:, np.argsort(lambda_perm(group, g, n))]
            worst = max(worst, float(np.max(np.abs(moved - rhs))))
    return worst


def gramian_covariance_gap(crystal, phis):
    """G(g* w) = lambda_{g^-1} G(w) lambda_g."""
    group = crystal.group
    n = len(phis)
    at = _pregramian_reader(crystal, phis)
    worst = 0.0
    for w in range(crystal.n_fibers):
        J = at(crystal.section.reps[w])
        Gw = J.conj().T @ J
        for g in range(group.order):
            moved = at(gamma_frequency(crystal, w, g))
            L = np.zeros((n * group.order,) * 2)
            L[np.arange(n * group.order), lambda_perm(group, g, n)] = 1.0
            rhs = L.T @ Gw @ L
            worst = max(worst, float(np.max(np.abs(moved.conj().T @ moved - rhs))))
    return worst


def orbit_spectrum_gap(crystal, phis):
    """Gramian spectra at the members of each orbit agree with the representative."""
    fib = family_fibers(crystal, phis)
    worst = 0.0
    for rec in crystal.orbits:
        A0 = fib[:, rec.rep, :].T
        v0 = eig_hermitian(A0.conj().T @ A0, require_psd=True).values
        for _g, w in rec.members[1:]:
            A = fib[:, w, :].T
            v = eig_hermitian(A.conj().T @ A, require_psd=True).values
            worst = max(worst, float(np.max(np.abs(v - v0))))
    return worst


def range_agreement_gap(crystal, phis, psis):
    a = range_function(crystal, phis, rotated=True)
    b = range_function(crystal, psis, rotated=True)
    return max(float(np.linalg.norm(a.projector(w) - b.projector(w), 2))
               for w in range(crystal.n_fibers))


def membership_gap(crystal, data, psis):
    """Fibers of psi_i outside the range function of S_Gamma(data)."""
    table = range_function(crystal, data, rotated=True)
    worst = 0.0
    for psi in psis:
        F = fiberize(crystal, psi)
        for w in range(crystal.n_fibers):
            B = table.bases[w]
            worst = max(worst, float(np.linalg.norm(F[w] - B @ (B.conj().T @ F[w]))))
    return worst


def coefficient_gap(crystal, data, gens):
    fib = family_fibers(crystal, data)
    worst = 0.0
    for i, psi in enumerate(gens.signals):
        F = fiberize(crystal, psi)
        for w in range(crystal.n_fibers):
            C = generator_coefficients(crystal, data, gens, i, w)
            worst = max(worst, float(np.linalg.norm(fib[:, w, :].T @ C - F[w])))
    return worst


def identity_suite(crystal, data, kappa=None, tol=1e-9, eps_rank=None):
    """Run every structural check on one instance; returns a list of Check."""
    kw = {} if eps_rank is None else {"eps_rank": eps_rank}
    scale = max(1.0, max(float(np.linalg.norm(f)) for f in data))
    out = []
    out.append(Check("isometry", max(isometry_gap(crystal, f) for f in data), tol))
    out.append(Check("intertwining", max(intertwining_gap(crystal, f) for f in data) / scale,
                     tol))
    out.append(Check("pi_representation", max(pi_gap(crystal, f) for f in data) / scale, tol))
    out.append(Check("pregramian_covariance",
                     pregramian_covariance_gap(crystal, data) / scale, tol))
    out.append(Check("gramian_covariance",
                     gramian_covariance_gap(crystal, data) / scale**2, tol))
    cov = check_gamma_covariance(crystal, range_function(crystal, data, rotated=True, **kw))
    out.append(Check("range_covariance", cov.worst, tol, f"g={cov.where[0]} w={cov.where[1]}"))
    inv = check_gamma_invariance(crystal, gamma_range_function(crystal, data, **kw))
    out.append(Check("gamma_range_invariance", inv.worst, tol))
    out.append(Check("orbit_spectra", orbit_spectrum_gap(crystal, data) / scale**2, tol))
    psis = parsevalize(crystal, data, **kw)
    out.append(Check("parseval_frame", parseval_gap(crystal, psis), tol))
    out.append(Check("parseval_range", range_agreement_gap(crystal, data, psis), tol))
    if kappa is not None:
        gens, report = solve_optimal(crystal, data, kappa, **kw)
        e_scale = max(1.0, sum(float(np.linalg.norm(f)) ** 2 for f in data))
        out.append(Check("solution_parseval", parseval_gap(crystal, gens.signals), tol))
        out.append(Check("solution_membership", membership_gap(crystal, data, gens.signals)
                         / scale, tol))
        out.append(Check("coefficient_formula", coefficient_gap(crystal, data, gens) / scale,
                         tol))
        e2 = error_functional(crystal, data, generators=gens.signals, route="orbit", **kw)
        out.append(Check("error_routes", abs(e2 - report.achieved_error) / e_scale, tol))
        out.append(Check("error_above_bound",
                         max(0.0, report.spectral_bound - report.achieved_error) / e_scale, tol))
    return out


def solution_suite(crystal, data, psis, reported_error=None, tol=1e-9, eps_rank=None):
    """Checks for a generator set produced elsewhere (e.g. a saved solve)."""
    kw = {} if eps_rank is None else {"eps_rank": eps_rank}
    scale = max(1.0, max(float(np.linalg.norm(f)) for f in data))
    out = [Check("solution_parseval", parseval_gap(crystal, psis), tol),
           Check("solution_membership", membership_gap(crystal, data, psis) / scale, tol)]
    cov = check_gamma_covariance(crystal, range_function(crystal, psis, rotated=True, **kw))
    out.append(Check("solution_covariance", cov.worst, tol))
    if reported_error is not None:
        e = error_functional(crystal, data, generators=psis, **kw)
        e_scale = max(1.0, sum(float(np.linalg.norm(f)) ** 2 for f in data))
        out.append(Check("reported_error", abs(e - reported_error) / e_scale, tol))
    return out

