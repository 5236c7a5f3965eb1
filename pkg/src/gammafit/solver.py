"""Range functions, Parseval generators and the optimal Gamma-invariant subspace.

Throughout, ``data`` and families of generators are lists of signals, and the
rotated family Phi_G = {R_g phi_i} is ordered lexicographically in (i, g).

Fibers with a nontrivial stabilizer H need care in the finite model.  The
fiber J(w0) of a Gamma-invariant space generated by kappa signals is an
H-representation that embeds in kappa [G:H] copies of the regular
representation of H, so the unconstrained top-kappa|G| eigenspace of the data
Gramian is not always reachable there.  Such fibers are solved exactly per
isotypic component (see ``_solve_stabilized``) and flagged in the report.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import spectra
from .crystal import conjugacy_classes, lambda_perm, transport_matrix
from .errors import (BadKappa, EmptyFamily, InconsistentSpec, NotParseval, RankCollapse,
                     StateMissing)
from .fibers import defiberize, family_fibers, fiberize, fiberize_gamma, rotate
from .spectra import EPS_RANK, TAU_TIE, eig_hermitian, label_lex, orthonormal_range, pinv_sqrt

COVARIANCE_TOL = 1e-9


def _proj(B):
    return B @ B.conj().T


def _untransport(crystal, g, w0, b):
    """Apply P_{g,w0}^{-1}, where (P a)[t] = a[transport[g, w0, t]]."""
    out = np.empty_like(b)
    out[crystal.transport[g, w0]] = b
    return out


# ---------------------------------------------------------------- range functions

@dataclass(frozen=True)
class RangeFunctionTable:
    bases: tuple            # per section index: (|Lambda^perp|, dim) orthonormal columns

    def __len__(self):
        return len(self.bases)

    @property
    def dims(self):
        return np.array([b.shape[1] for b in self.bases])

    def projector(self, w):
        return _proj(self.bases[w])


def _fiber_scale(fibers):
    return float(np.max(np.sum(np.abs(fibers)**2, axis=(0, 2)), initial=0.0))


def range_from_fibers(fibers, eps_rank=EPS_RANK):
    """Range function spanned by stacked fibers of shape (n, |Omega|, |Lambda^perp|)."""
    fibers = np.asarray(fibers)
    scale = _fiber_scale(fibers)
    return RangeFunctionTable(tuple(
        orthonormal_range(fibers[:, w, :].T, eps_rank, scale) for w in range(fibers.shape[1])))


def range_function(crystal, phis, eps_rank=EPS_RANK, rotated=False):
    """J(w) = span{T[phi](w)}; pass ``rotated=True`` to span S_Gamma(phis) instead."""
    phis = list(phis)
    if not phis:
        raise EmptyFamily("range_function needs at least one signal")
    return range_from_fibers(family_fibers(crystal, phis, rotated=rotated), eps_rank)


@dataclass(frozen=True)
class CovarianceReport:
    worst: float
    where: tuple            # (g, w) of the worst violation
    passed: bool


def check_gamma_covariance(crystal, table, tol=COVARIANCE_TOL):
    """Compare P_J(w) with the transported projection of J(g* w) for all (g, w).

    Gamma-invariance means J(w) = P_{g,w} J(g* w), which reads
    J(g* w) = r_{g^-1} J(w) when g* w lands on a representative.
    """
    if len(table) != crystal.n_fibers:
        raise InconsistentSpec("range table does not match the section")
    worst, where = 0.0, (0, 0)
    for g in range(crystal.group.order):
        for w in range(crystal.n_fibers):
            w2 = crystal.section_act[g, w]
            P = transport_matrix(crystal, g, w)
            gap = np.linalg.norm(table.projector(w) - P @ table.projector(w2) @ P.T, 2)
            if gap > worst:
                worst, where = float(gap), (g, w)
    return CovarianceReport(worst, where, worst <= tol)


@dataclass(frozen=True)
class GammaRangeTable:
    bases: tuple            # bases[orbit][g]

    def projector(self, o, g):
        return _proj(self.bases[o][g])


def gamma_range_function(crystal, phis, eps_rank=EPS_RANK):
    """K(w0, u) = span{T_G[R_g phi](w0, u)} over generators and g."""
    fam = [rotate(crystal, g, phi) for phi in phis for g in range(crystal.group.order)]
    if not fam:
        raise EmptyFamily("gamma_range_function needs at least one signal")
    tg = np.stack([fiberize_gamma(crystal, f) for f in fam])     # (n|G|, O, G, T)
    scale = float(np.max(np.sum(np.abs(tg)**2, axis=(0, 3)), initial=0.0))
    bases = tuple(
        tuple(orthonormal_range(tg[:, o, u, :].T, eps_rank, scale)
              for u in range(crystal.group.order))
        for o in range(len(crystal.orbits)))
    table = GammaRangeTable(bases)
    report = check_gamma_invariance(crystal, table)
    if not report.passed:
        raise InconsistentSpec(f"Gamma-range function violates invariance by {report.worst:.3e}")
    return table


def check_gamma_invariance(crystal, table, tol=COVARIANCE_TOL):
    """r_{u^-1} K(w, g) = K(w, g u) for all orbits and g, u."""
    group = crystal.group
    worst, where = 0.0, (0, 0, 0)
    for o in range(len(table.bases)):
        for g in range(group.order):
            for u in range(group.order):
                R = np.zeros((crystal.n_ann, crystal.n_ann))
                R[np.arange(crystal.n_ann), crystal.r_perm[group.inv[u]]] = 1.0
                lhs = R @ table.projector(o, g) @ R.T
                gap = np.linalg.norm(lhs - table.projector(o, group.mul[g, u]), 2)
                if gap > worst:
                    worst, where = float(gap), (o, g, u)
    return CovarianceReport(worst, where, worst <= tol)


# ------------------------------------------------------------ Parseval generators

def parsevalize(crystal, phis, eps_rank=EPS_RANK):
    """Generators whose Gamma-orbit is a Parseval frame of S_Gamma(phis).

    Q(w) = J(w) (G(w)^+)^{1/2}; the new generator psi_i has fibers Q(w)[:, (i, e)].
    """
    phis = list(phis)
    if not phis:
        raise EmptyFamily("parsevalize needs at least one signal")
    fib = family_fibers(crystal, phis)
    G = crystal.group.order
    scale = _fiber_scale(fib)
    out = np.zeros((len(phis), crystal.n_fibers, crystal.n_ann), dtype=complex)
    for w in range(crystal.n_fibers):
        J = fib[:, w, :].T
        Q = J @ pinv_sqrt(J.conj().T @ J, eps_rank, scale).matrix
        out[:, w, :] = Q[:, ::G].T
    return [defiberize(crystal, F) for F in out]


def project_fibers(table, F):
    """Fiberwise orthogonal projection of a fiber field onto M_J."""
    return np.stack([table.projector(w) @ F[w] for w in range(len(table))])


def orthogonal_decompose(crystal, phis, eps_rank=EPS_RANK, zero_tol=1e-10):
    """Single generators with mutually orthogonal Gamma-invariant spans.

    Each new phi_j is replaced by its component orthogonal to the spaces found
    so far; components below ``zero_tol * ||phi_j||`` are dropped.
    """
    phis = list(phis)
    if not phis:
        raise EmptyFamily("orthogonal_decompose needs at least one signal")
    psis = []
    for phi in phis:
        F = fiberize(crystal, phi)
        if psis:
            table = range_function(crystal, psis, eps_rank, rotated=True)
            F = F - project_fibers(table, F)
        if np.linalg.norm(F) <= zero_tol * max(np.linalg.norm(fiberize(crystal, phi)), 1e-300):
            continue
        psis.append(parsevalize(crystal, [defiberize(crystal, F)], eps_rank)[0])
    return psis


# ---------------------------------------------------------------- error functionals

def fiber_residual(basis, columns):
    """sum_j ||c_j - P c_j||^2 for the columns c_j, P the projection on span(basis)."""
    columns = np.asarray(columns)
    res = columns - basis @ (basis.conj().T @ columns)
    return float(np.sum(np.abs(res)**2))


def error_functional(crystal, data, table=None, generators=None, route="section",
                     eps_rank=EPS_RANK):
    """E[V; F] = sum_i ||f_i - P_V f_i||^2 computed fiberwise.

    V is a range table of a Gamma-invariant space or the span of the Gamma-orbit
    of ``generators``.  ``route="section"`` sums over the whole section;
    ``route="orbit"`` sums D(w0) / |Stab(w0)| over orbit representatives.
    """
    if table is None:
        if generators is None:
            raise InconsistentSpec("pass a range table or a generator set")
        table = range_function(crystal, generators, eps_rank, rotated=True)
    if len(table) != crystal.n_fibers:
        raise InconsistentSpec("range table does not match the section")
    if route == "section":
        fib = family_fibers(crystal, data, rotated=False)
        total = sum(fiber_residual(table.bases[w], fib[:, w, :].T)
                    for w in range(crystal.n_fibers))
    elif route == "orbit":
        fib = family_fibers(crystal, data, rotated=True)
        total = sum(fiber_residual(table.bases[rec.rep], fib[:, rec.rep, :].T)
                    / len(rec.stabilizer) for rec in crystal.orbits)
    else:
        raise ValueError(f"unknown route {route!r}")
    return total / crystal.lattice_size


# ------------------------------------------------------------------ optimal solve

@dataclass
class OrbitSolve:
    rep: int
    stabilizer: tuple
    spectrum: spectra.Spectrum      # labeled, of the data Gramian at rep
    theta: np.ndarray
    U: np.ndarray                   # (|Lambda^perp|, kappa|G|) covariant synthesis at rep
    M: np.ndarray                   # U = A M
    residual: float                 # D(rep) achieved by U's span
    bound: float                    # trailing eigenvalue sum at rep
    tie: tuple = (False, (0, 0))
    diagnostics: list = field(default_factory=list)

    @property
    def free(self):
        return len(self.stabilizer) == 1


@dataclass(frozen=True)
class GeneratorSet:
    signals: tuple
    kappa: int
    m: int
    provenance: tuple = ()          # OrbitSolve per orbit; empty when unavailable

    def __len__(self):
        return len(self.signals)

    def __iter__(self):
        return iter(self.signals)


@dataclass(frozen=True)
class SolveReport:
    kappa: int
    m: int
    orbits: tuple                   # dicts, one per orbit
    achieved_error: float
    spectral_bound: float
    predicted_error: float          # sum of per-orbit residuals from the construction
    constrained: bool               # some stabilized fiber could not reach the bound
    diagnostics: tuple

    def as_dict(self):
        return {
            "kappa": self.kappa,
            "m": self.m,
            "achieved_error": self.achieved_error,
            "spectral_bound": self.spectral_bound,
            "predicted_error": self.predicted_error,
            "constrained": self.constrained,
            "diagnostics": list(self.diagnostics),
            "orbits": list(self.orbits),
        }


def _solve_free(A, sp, kappa, G, tol):
    cut = kappa * G
    keep = sp.values[:cut] > tol
    theta = np.zeros(len(sp))
    theta[:cut][keep] = 1.0 / np.sqrt(sp.values[:cut][keep])
    M = sp.vectors[:, :cut] * theta[:cut]
    return A @ M, M, theta


def _solve_stabilized(crystal, rec, A, sp, kappa, tol, tau, diags, seed):
    """Best kappa-generated H-invariant fiber subspace at a fixed representative.

    The data operator X = A A* commutes with the transport representation of
    the stabilizer H.  In each isotypic component (irrep dimension d) the
    subspace may hold at most kappa [G:H] d copies of the irrep, so the top
    kappa [G:H] d^2 eigenvectors of X restricted there are kept.
    """
    group = crystal.group
    G = group.order
    stab = list(rec.stabilizer)
    index = G // len(stab)
    P = [transport_matrix(crystal, h, rec.rep) for h in stab]
    pos = {h: k for k, h in enumerate(stab)}
    classes = [[pos[h] for h in cls] for cls in conjugacy_classes(group, stab)]
    X = A @ A.conj().T
    pieces = []
    for Q, d, _mult in spectra.isotypic_decomposition(P, classes):
        spc = eig_hermitian(Q.conj().T @ X @ Q, require_psd=True)
        budget = min(kappa * index * d * d, len(spc))
        k = int(np.sum(spc.values[:budget] > tol))
        tied, window = spectra.detect_cut_tie(spc.values, k, tau, spc.norm)
        if tied and d > 1 and k < len(spc):
            Ps = [Q.conj().T @ p @ Q for p in P]
            try:
                Pk = spectra.reynolds_symmetrize(_proj(spc.vectors[:, :k]), Ps)
                pieces.append(Q @ orthonormal_range(Pk))
                diags.append({"orbit_rep": rec.rep, "event": "tie_symmetrized",
                              "irrep_dim": d, "window": list(window)})
                continue
            except RankCollapse:
                k = window[0] - window[0] % d
                diags.append({"orbit_rep": rec.rep, "event": "tie_dropped",
                              "irrep_dim": d, "window": list(window)})
        pieces.append(Q @ spc.vectors[:, :k])
    J = np.concatenate(pieces, axis=1) if pieces else np.zeros((A.shape[0], 0))

    # kappa [G:H] seed vectors whose H-orbits span J, then Parsevalized.
    members = {w: g for g, w in rec.members}
    coset = np.empty(G, dtype=np.int64)       # g = h g_j: (j, h)
    hpart = np.empty(G, dtype=np.int64)
    order_j = [w for _g, w in rec.members]
    for g in range(G):
        w = crystal.section_act[g, rec.rep]
        gj = members[w]
        coset[g] = order_j.index(w)
        hpart[g] = group.mul[g, group.inv[gj]]
    rng = np.random.default_rng([seed, rec.rep])
    dimJ = J.shape[1]
    U = np.zeros((A.shape[0], kappa * G), dtype=complex)
    if dimJ:
        for _attempt in range(16):
            C = rng.normal(size=(dimJ, kappa * index)) + 1j * rng.normal(size=(dimJ, kappa * index))
            Wv = J @ C
            B = np.empty((A.shape[0], kappa * G), dtype=complex)
            for i in range(kappa):
                for g in range(G):
                    B[:, i * G + g] = P[pos[int(hpart[g])]] @ Wv[:, i * index + coset[g]]
            root = pinv_sqrt(B.conj().T @ B)
            if root.rank == dimJ:
                U = B @ root.matrix
                break
        else:
            raise RankCollapse(f"no spanning seed found at orbit rep {rec.rep}")
    return U


def _solve_orbit(crystal, rec, fib, kappa, m, eps_rank, tau, scale, seed):
    G = crystal.group.order
    A = fib[:, rec.rep, :].T
    sp = label_lex(eig_hermitian(A.conj().T @ A, require_psd=True), m, G)
    tol = eps_rank * max(sp.values[0], scale)
    cut = kappa * G
    bound = float(np.sum(sp.values[cut:]))
    tie = spectra.detect_cut_tie(sp.values, cut, tau, sp.norm)
    diags = []
    if len(rec.stabilizer) == 1:
        U, M, theta = _solve_free(A, sp, kappa, G, tol)
    else:
        U = _solve_stabilized(crystal, rec, A, sp, kappa, tol, tau, diags, seed)
        theta = np.zeros(len(sp))
        nz = sp.values > tol
        theta[nz] = 1.0 / np.sqrt(sp.values[nz])
        # A^+ = V diag(theta^2) V*
        M = (sp.vectors * theta**2) @ sp.vectors.conj().T @ A.conj().T @ U
    basis = orthonormal_range(U) if U.size else np.zeros((A.shape[0], 0))
    residual = fiber_residual(basis, A)
    if residual > bound + 1e-9 * max(1.0, float(np.sum(sp.values))):
        diags.append({"orbit_rep": rec.rep, "event": "multiplicity_constrained",
                      "gap": residual - bound})
    return OrbitSolve(rec.rep, rec.stabilizer, sp, theta, U, M, residual, bound, tie, diags)


def solve_optimal(crystal, data, kappa, eps_rank=EPS_RANK, tau_tie=TAU_TIE, jobs=1, seed=0):
    """Optimal Gamma-invariant subspace of length <= kappa for ``data``.

    ``seed`` only affects the generic mixing used at fibers with a nontrivial
    stabilizer; the subspace and the error do not depend on it.

    Returns (GeneratorSet, SolveReport).
    """
    data = list(data)
    if not data:
        raise EmptyFamily("dataset is empty")
    m = len(data)
    if int(kappa) != kappa or not 1 <= kappa <= m:
        raise BadKappa(f"kappa must be in 1..{m}, got {kappa!r}", "kappa")
    kappa = int(kappa)
    G = crystal.group.order
    fib = family_fibers(crystal, data)
    scale = _fiber_scale(fib)

    def work(rec):
        return _solve_orbit(crystal, rec, fib, kappa, m, eps_rank, tau_tie, scale, seed)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            solves = list(pool.map(work, crystal.orbits))
    else:
        solves = [work(rec) for rec in crystal.orbits]

    H = np.zeros((kappa, crystal.n_fibers, crystal.n_ann), dtype=complex)
    for rec, osol in zip(crystal.orbits, solves):
        for g, w in rec.members:
            for i in range(kappa):
                H[i, w] = _untransport(crystal, g, rec.rep, osol.U[:, i * G + g])
    psis = tuple(defiberize(crystal, H[i]) for i in range(kappa))

    achieved = error_functional(crystal, data, generators=psis, eps_rank=eps_rank)
    L = crystal.lattice_size
    bound = sum(s.bound / len(s.stabilizer) for s in solves) / L
    predicted = sum(s.residual / len(s.stabilizer) for s in solves) / L
    diagnostics = tuple(d for s in solves for d in s.diagnostics)
    constrained = any(d["event"] in ("multiplicity_constrained", "tie_dropped")
                      for d in diagnostics)
    orbit_info = tuple({
        "rep": s.rep,
        "rep_frequency": [int(c) for c in crystal.section.reps[s.rep]],
        "stabilizer_order": len(s.stabilizer),
        "orbit_size": crystal.orbits[k].size,
        "labels": [list(lab) for lab in s.spectrum.labels],
        "eigenvalues": [float(v) for v in s.spectrum.values],
        "cut_tie": bool(s.tie[0]),
        "fiber_residual": s.residual,
        "fiber_bound": s.bound,
    } for k, s in enumerate(solves))
    report = SolveReport(kappa, m, orbit_info, achieved, bound, predicted, constrained,
                         diagnostics)
    return GeneratorSet(psis, kappa, m, tuple(solves)), report


def generator_coefficients(crystal, data, gens, i, w):
    """Coefficients C_i^{(j, g')}(w) expressing T[psi_i](w) in the data fibers.

    For free orbits this is sum_g theta_{i,g} V^{i,g}(w) 1_{g* Omega_0}(w) with
    eigenvectors transported as V(w) = lambda_{g^-1} V(w0).  At stabilized
    orbits the same transport is applied to the stored synthesis coefficients.
    ``i`` is 0-based.
    """
    if not gens.provenance:
        raise StateMissing("generator set carries no solver state")
    if not 0 <= i < gens.kappa:
        raise BadKappa(f"generator index {i} outside 0..{gens.kappa - 1}")
    o = int(crystal.orbit_of[w])
    g = int(crystal.member_g[w])
    osol = gens.provenance[o]
    G = crystal.group.order
    back = lambda_perm(crystal.group, crystal.group.inv[g], gens.m)
    if osol.free:
        col = i * G + g
        V_w = osol.spectrum.vectors[back, :]
        return osol.theta[col] * V_w[:, col]
    return osol.M[:, i * G + g][back]


def parseval_gap(crystal, psis):
    """max_w ||(H H*)^2 - H H*|| for the fiber synthesis H(w) of the Gamma-orbit."""
    fib = family_fibers(crystal, psis)
    worst = 0.0
    for w in range(crystal.n_fibers):
        Hw = fib[:, w, :].T
        S = Hw @ Hw.conj().T
        worst = max(worst, float(np.linalg.norm(S @ S - S, 2)))
    return worst


def project(crystal, f, psis, tol=1e-8):
    """P_W f = sum over the orbit frame of <f, eta> eta, computed fiberwise."""
    psis = list(psis)
    gap = parseval_gap(crystal, psis)
    if gap > tol:
        raise NotParseval(f"generator orbit is not a Parseval frame (gap {gap:.3e})")
    fib = family_fibers(crystal, psis)
    F = fiberize(crystal, f)
    out = np.empty_like(F)
    for w in range(crystal.n_fibers):
        Hw = fib[:, w, :].T
        out[w] = Hw @ (Hw.conj().T @ F[w])
    return defiberize(crystal, out)
