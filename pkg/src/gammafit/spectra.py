"""Hermitian eigendecomposition and the spectral helpers built on it.

The eigensolver is a cyclic Jacobi method with complex rotations.  It is used
for every decomposition in the main pipeline; the oracle module deliberately
does not import it.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceFailure, NotHermitian, NotPsdWhenRequired, RankCollapse,
                     ValidationError)

EPS_RANK = 1e-12
TAU_TIE = 1e-9
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray      # non-increasing
    vectors: np.ndarray     # columns
    labels: tuple = ()      # (i, g) per position once label_lex has run
    sweeps: int = 0
    norm: float = 0.0       # Frobenius norm of the input

    def __len__(self):
        return len(self.values)


def _rotate(A, V, p, q):
    apq = A[p, q]
    mag = abs(apq)
    phase = apq / mag
    app, aqq = A[p, p].real, A[q, q].real
    theta = (aqq - app) / (2.0 * mag)
    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # columns p, q are mixed by U = [[c, s], [-s conj(phase), c conj(phase)]]
    U = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
    idx = [p, q]
    A[:, idx] = A[:, idx] @ U
    A[idx, :] = U.conj().T @ A[idx, :]
    A[p, q] = A[q, p] = 0.0
    A[p, p] = app - t * mag
    A[q, q] = aqq + t * mag
    V[:, idx] = V[:, idx] @ U


def jacobi_eigh(A, tol=1e-12, max_sweeps=30):
    """Cyclic Jacobi sweeps; returns (eigenvalues, eigenvectors, sweeps).

    Once the off-diagonal Frobenius norm is below ``tol * ||A||_F`` one more
    sweep is made: convergence is quadratic, so it brings the eigenvectors to
    working precision instead of stopping at ``tol``.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    fro = np.linalg.norm(A)
    if n < 2 or fro == 0.0:
        return A.diagonal().real.copy(), V, 0
    target = tol * fro
    skip = 1e-4 * np.finfo(float).eps * fro / n
    sweeps, polished = 0, False
    for sweeps in range(1, max_sweeps + 1):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off <= target:
            if polished or off <= skip:
                sweeps -= 1
                break
            polished = True
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) > skip:
                    _rotate(A, V, p, q)
    else:
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off > target:
            raise ConvergenceFailure(
                f"Jacobi did not converge in {max_sweeps} sweeps (off = {off:.3e})")
    return A.diagonal().real.copy(), V, sweeps


def _fix_phases(V):
    for j in range(V.shape[1]):
        col = V[:, j]
        k = int(np.argmax(np.abs(col)))
        if abs(col[k]) > 0:
            V[:, j] = col * (abs(col[k]) / col[k])
    return V


def eig_hermitian(A, require_psd=False):
    """Decreasing spectrum of a Hermitian matrix.

    Largest-modulus component of each eigenvector is made real positive.
    With ``require_psd`` eigenvalues below ``-1e-10 ||A||`` raise
    NotPsdWhenRequired and smaller negatives are clamped to zero.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    fro = float(np.linalg.norm(A))
    asym = float(np.linalg.norm(A - A.conj().T))
    if asym > HERMITIAN_TOL * max(fro, 1e-300):
        raise NotHermitian(f"||A - A*|| = {asym:.3e} exceeds {HERMITIAN_TOL} * ||A||")
    H = 0.5 * (A + A.conj().T)
    vals, vecs, sweeps = jacobi_eigh(H)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], _fix_phases(vecs[:, order])
    if require_psd:
        floor = -PSD_TOL * fro
        if len(vals) and vals[-1] < floor:
            raise NotPsdWhenRequired(f"eigenvalue {vals[-1]:.3e} below {floor:.3e}")
        vals = np.maximum(vals, 0.0)
    return Spectrum(vals, vecs, (), sweeps, fro)


def label_lex(spectrum, m, group_order):
    """Attach (i, g) labels, i = 1..m, position p = (i-1)|G| + g."""
    if len(spectrum) != m * group_order:
        raise ValidationError(
            f"spectrum has {len(spectrum)} entries, expected {m} * {group_order}")
    labels = tuple((p // group_order + 1, p % group_order) for p in range(len(spectrum)))
    return Spectrum(spectrum.values, spectrum.vectors, labels, spectrum.sweeps, spectrum.norm)


@dataclass(frozen=True)
class PsdFactor:
    matrix: np.ndarray
    rank: int
    tol: float


def pinv_sqrt(G, eps_rank=EPS_RANK, scale=None):
    """Square root of the Moore-Penrose pseudoinverse of a PSD matrix.

    Eigenvalues above ``eps_rank * max(lambda_max, scale)`` are kept; ``scale``
    lets a caller share one threshold across many fibers.
    """
    sp = eig_hermitian(G, require_psd=True)
    top = sp.values[0] if len(sp) else 0.0
    tol = eps_rank * max(top, scale or 0.0)
    keep = sp.values > tol
    inv_root = np.zeros(len(sp))
    inv_root[keep] = 1.0 / np.sqrt(sp.values[keep])
    M = (sp.vectors * inv_root) @ sp.vectors.conj().T
    return PsdFactor(M, int(keep.sum()), tol)


def detect_cut_tie(values, cut, tau=TAU_TIE, norm=None):
    """Does the cut between positions cut-1 and cut split a tied multiplet?

    Returns (tied, (lo, hi)) where [lo, hi) is the maximal window of values
    chained to the cut by gaps <= tau * norm.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if not 0 <= cut <= n:
        raise ValidationError(f"cut {cut} outside [0, {n}]")
    if norm is None:
        norm = float(np.sqrt(np.sum(values**2)))
    thr = tau * norm
    if cut == 0 or cut == n or abs(values[cut - 1] - values[cut]) > thr:
        return False, (cut, cut)
    lo, hi = cut - 1, cut + 1
    while lo > 0 and abs(values[lo - 1] - values[lo]) <= thr:
        lo -= 1
    while hi < n and abs(values[hi - 1] - values[hi]) <= thr:
        hi += 1
    return True, (lo, hi)


def reynolds_symmetrize(P, unitaries, tol=1e-10):
    """Projection onto the >1/2 eigenspace of the group average of P.

    Raises RankCollapse when the result loses or gains rank.
    """
    P = np.asarray(P, dtype=complex)
    if (np.linalg.norm(P @ P - P) > tol * max(1.0, np.linalg.norm(P))
            or np.linalg.norm(P - P.conj().T) > tol * max(1.0, np.linalg.norm(P))):
        raise ValidationError("input is not an orthogonal projection")
    avg = sum(h @ P @ h.conj().T for h in unitaries) / len(unitaries)
    sp = eig_hermitian(avg)
    keep = sp.values > 0.5
    rank_in = int(round(np.trace(P).real))
    if int(keep.sum()) != rank_in:
        raise RankCollapse(
            f"symmetrized projection has rank {int(keep.sum())}, expected {rank_in}")
    B = sp.vectors[:, keep]
    return B @ B.conj().T


def orthonormal_range(A, eps_rank=EPS_RANK, scale=None):
    """Orthonormal basis of the column span of A via the Gramian spectrum.

    A second pass restores orthonormality lost to small kept singular values.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    sp = eig_hermitian(A.conj().T @ A, require_psd=True)
    top = sp.values[0] if len(sp) else 0.0
    keep = sp.values > eps_rank * max(top, scale or 0.0)
    if not keep.any():
        return np.zeros((A.shape[0], 0), dtype=complex)
    B = A @ sp.vectors[:, keep] / np.sqrt(sp.values[keep])
    sp2 = eig_hermitian(B.conj().T @ B, require_psd=True)
    return B @ sp2.vectors / np.sqrt(sp2.values)


def isotypic_decomposition(unitaries, classes, seed=0x5eed):
    """Split C^n into isotypic components of a finite unitary representation.

    ``unitaries[k]`` represents the k-th group element and ``classes`` lists
    conjugacy classes as lists of positions into ``unitaries``.  A random
    Hermitian combination of class sums (central elements) is diagonalized;
    its eigenspaces are the isotypic components.  Returns a list of
    ``(basis, irrep_dim, multiplicity)``.
    """
    n = unitaries[0].shape[0]
    order = len(unitaries)
    rng = np.random.default_rng(seed)
    M = np.zeros((n, n), dtype=complex)
    for cls in classes:
        C = sum(unitaries[k] for k in cls)
        a, b = rng.uniform(0.5, 1.5, size=2)
        M += a * (C + C.conj().T) + 1j * b * (C - C.conj().T)
    sp = eig_hermitian(M)
    scale = max(1.0, float(np.max(np.abs(sp.values))))
    blocks, start = [], 0
    for p in range(1, n + 1):
        if p == n or sp.values[p - 1] - sp.values[p] > 1e-6 * scale:
            blocks.append((start, p))
            start = p
    out = []
    for lo, hi in blocks:
        Q = sp.vectors[:, lo:hi]
        chars = np.array([np.trace(Q.conj().T @ U @ Q) for U in unitaries])
        mult = int(round(np.sqrt(np.sum(np.abs(chars)**2) / order)))
        dim = hi - lo
        if mult < 1 or dim % mult:
            raise RankCollapse(f"isotypic block of size {dim} has multiplicity {mult}")
        out.append((Q, dim // mult, mult))
    return out
