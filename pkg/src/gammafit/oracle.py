"""Brute-force verifiers.

Nothing here goes through the fiberization or the Jacobi eigensolver: orbits
are built by explicit index permutations of the ambient space, bases by
modified Gram-Schmidt, and reference spectra by closed forms or Rayleigh
quotient iteration.  Agreement with the main pipeline is therefore evidence.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, ValidationError

MAX_COLUMNS = 4096


@dataclass(frozen=True)
class FrameReport:
    operator_norm_gap: float
    worst_vector_gap: float
    lower_bound: float
    upper_bound: float


def _points(spec):
    return np.indices(spec.shape).reshape(spec.d, -1).T


def _flat(spec, pts):
    return np.ravel_multi_index(tuple((pts % spec.N).T), spec.shape)


def orbit_vectors(crystal, psis):
    """Columns T_k R_g psi for k in Lambda, g in G, every psi, as a (|R|, n) matrix."""
    spec = crystal.spec
    psis = [np.asarray(p, dtype=complex).reshape(-1) for p in psis]
    n = len(psis) * crystal.group.order * crystal.lattice_size
    if n > MAX_COLUMNS:
        raise ValidationError(f"orbit has {n} vectors, oracle cap is {MAX_COLUMNS}")
    pts = _points(spec)
    cols = []
    for psi in psis:
        for mat in crystal.group.mats:
            moved = _flat(spec, pts @ np.asarray(mat).T)
            r = np.empty_like(psi)
            r[moved] = psi                      # (R_g psi)(g x) = psi(x)
            for k in crystal.lattice.elements:
                dest = _flat(spec, pts + k)
                t = np.empty_like(r)
                t[dest] = r                     # (T_k f)(x + k) = f(x)
                cols.append(t)
    if not cols:
        return np.zeros((spec.size, 0), dtype=complex)
    return np.stack(cols, axis=1)


def gram_schmidt(A, tol=1e-10):
    """Orthonormal basis of span(A) by modified Gram-Schmidt, two passes per column."""
    A = np.asarray(A, dtype=complex)
    scale = max((np.linalg.norm(A[:, j]) for j in range(A.shape[1])), default=0.0)
    basis = []
    for j in range(A.shape[1]):
        v = A[:, j].copy()
        for _ in range(2):
            for q in basis:
                v -= q * np.vdot(q, v)
        nv = np.linalg.norm(v)
        if nv > tol * max(scale, 1e-300):
            basis.append(v / nv)
    if not basis:
        return np.zeros((A.shape[0], 0), dtype=complex)
    return np.stack(basis, axis=1)


def orbit_projection(crystal, spanning):
    Q = gram_schmidt(orbit_vectors(crystal, spanning)) if len(spanning) else \
        np.zeros((crystal.spec.size, 0), dtype=complex)
    return Q @ Q.conj().T


def frame_operator(crystal, psis, span=None):
    """Compare S = sum over the orbit of eta eta* with the projection onto a subspace.

    The subspace is the Gamma-invariant span of ``span`` (default: of ``psis``).
    """
    E = orbit_vectors(crystal, psis)
    S = E @ E.conj().T
    P = orbit_projection(crystal, list(psis) if span is None else list(span))
    D = S - P
    gap = float(np.linalg.norm(D, 2))
    worst = float(np.max(np.linalg.norm(D, axis=0), initial=0.0))
    vals = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    nz = vals[vals > 1e-9 * max(vals.max(initial=0.0), 1e-300)]
    lo = float(nz.min()) if len(nz) else 0.0
    hi = float(nz.max()) if len(nz) else 0.0
    return FrameReport(gap, worst, lo, hi)


def brute_projection_error(crystal, data, spanning):
    """sum_i ||f_i - P_V f_i||^2, V the Gamma-invariant span of ``spanning``."""
    P = orbit_projection(crystal, list(spanning))
    total = 0.0
    for f in data:
        f = np.asarray(f, dtype=complex).reshape(-1)
        total += float(np.linalg.norm(f - P @ f) ** 2)
    return total


# ------------------------------------------------------------------ reference spectra

def _small_eigs(A):
    n = A.shape[0]
    if n == 1:
        return np.array([A[0, 0].real])
    if n == 2:
        a, d = A[0, 0].real, A[1, 1].real
        b2 = abs(A[0, 1]) ** 2
        disc = np.sqrt((a - d) ** 2 / 4 + b2)
        return np.array([(a + d) / 2 + disc, (a + d) / 2 - disc])
    # n == 3: trigonometric solution of the characteristic cubic
    q = np.trace(A).real / 3
    B = A - q * np.eye(3)
    p = np.sqrt(np.sum(np.abs(B) ** 2).real / 6)
    if p == 0:
        return np.array([q, q, q])
    r = np.clip(np.linalg.det(B / p).real / 2, -1.0, 1.0)
    phi = np.arccos(r) / 3
    e1 = q + 2 * p * np.cos(phi)
    e3 = q + 2 * p * np.cos(phi + 2 * np.pi / 3)
    return np.array([e1, 3 * q - e1 - e3, e3])


def _rayleigh(A, rng, max_iter=100):
    n = A.shape[0]
    if n == 1:
        return A[0, 0].real, np.ones(1, dtype=complex)
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    x /= np.linalg.norm(x)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(8):                           # a few power steps on a positive shift
        x = A @ x + 2 * scale * x
        x /= np.linalg.norm(x)
    for _ in range(max_iter):
        mu = np.vdot(x, A @ x).real
        res = np.linalg.norm(A @ x - mu * x)
        if res <= 1e-14 * scale:
            return mu, x
        try:
            y = np.linalg.solve(A - mu * np.eye(n), x)
        except np.linalg.LinAlgError:
            return mu, x
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            return mu, x
        x = y / ny
    mu = np.vdot(x, A @ x).real
    if np.linalg.norm(A @ x - mu * x) > 1e-10 * scale:
        raise ConvergenceFailure("Rayleigh quotient iteration did not converge")
    return mu, x


def eig_reference(A, seed=0):
    """Eigenvalues of a Hermitian matrix (size <= 16) in decreasing order."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n > 16:
        raise ValidationError(f"eig_reference handles size <= 16, got {n}")
    A = 0.5 * (A + A.conj().T)
    if n <= 3:
        return np.sort(_small_eigs(A))[::-1]
    rng = np.random.default_rng(seed)
    found, vals = [], []
    for _ in range(n):
        if found:
            Z = gram_schmidt(np.concatenate([np.stack(found, 1), np.eye(n)], axis=1))
            Z = Z[:, len(found):]
        else:
            Z = np.eye(n, dtype=complex)
        mu, y = _rayleigh(Z.conj().T @ A @ Z, rng)
        v = Z @ y
        found.append(v / np.linalg.norm(v))
        vals.append(mu)
    return np.sort(np.array(vals))[::-1]


# ------------------------------------------------------------------ optimality probe

def _residual(A, J):
    R = A - J @ (J.conj().T @ A)
    return float(np.sum(np.abs(R) ** 2))


def perturbation_probe(A, J, trials=100, seed=0):
    """Largest drop of sum ||a - P_J a||^2 found by a random search around J.

    Each trial moves the current subspace by a Cayley unitary of random size
    or by rotating one of its directions towards the complement, and keeps
    the move when the residual decreases.  Returns 0 when nothing improves.
    """
    A = np.asarray(A, dtype=complex)
    J = np.asarray(J, dtype=complex)
    n, r = A.shape[0], J.shape[1]
    base = _residual(A, J)
    if r in (0, n):
        return 0.0
    cur, cur_res = J, base
    for t, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        if t % 2 == 0:
            K = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            K = 0.5 * (K + K.conj().T)
            K *= 10 ** rng.uniform(-6, 0) / np.linalg.norm(K, 2)
            I = np.eye(n)
            cand = np.linalg.solve(I - 1j * K, I + 1j * K) @ cur
        else:
            comp = gram_schmidt(np.concatenate([cur, np.eye(n)], axis=1))[:, r:]
            u = cur @ _unit(rng, r)
            v = comp @ _unit(rng, comp.shape[1])
            th = rng.uniform(0, np.pi / 2)
            cand = cur + np.outer((np.cos(th) - 1) * u + np.sin(th) * v, u.conj() @ cur)
        res = _residual(A, cand)
        if res < cur_res:
            cur, cur_res = cand, res
    return max(0.0, base - cur_res)


def _unit(rng, k):
    z = rng.normal(size=k) + 1j * rng.normal(size=k)
    return z / np.linalg.norm(z)
