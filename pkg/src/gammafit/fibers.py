"""Fourier transform on (Z_N)^d, fiberization and the Gamma-adapted operators.

Normalization: unitary DFT, fibers scaled by sqrt(|Lambda|) and each fiber
weighted by 1/|Lambda|.  With these choices the fiberization is an isometry
and a Parseval family has fiber frame operators equal to projections.

A signal is an ndarray of shape (N,)*d (flat length-N^d arrays are accepted
and reshaped).  A fiber field is an array of shape (|Omega|, |Lambda^perp|).
"""
import numpy as np

from .errors import EmptyFamily, InconsistentSpec


def as_signal(crystal, f):
    f = np.asarray(f, dtype=complex)
    shape = crystal.spec.shape
    if f.shape == shape:
        return f
    if f.size == crystal.spec.size:
        return f.reshape(shape)
    raise InconsistentSpec(f"signal of shape {f.shape} does not live on {shape}")


def dft(crystal, f):
    """f^(xi) = N^{-d/2} sum_x conj<xi, x> f(x)."""
    return np.fft.fftn(as_signal(crystal, f), norm="ortho")


def idft(crystal, fhat):
    return np.fft.ifftn(as_signal(crystal, fhat), norm="ortho")


def translate(crystal, k, f):
    """(T_k f)(x) = f(x - k)."""
    k = crystal.spec.check(k)
    return np.roll(as_signal(crystal, f), k, axis=tuple(range(crystal.spec.d)))


def rotate(crystal, g, f):
    """(R_g f)(x) = f(g^-1 x)."""
    f = as_signal(crystal, f)
    src = crystal.group.space_perm[crystal.group.inv[g]]
    return f.reshape(-1)[src].reshape(f.shape)


def _scale(crystal):
    return np.sqrt(crystal.lattice_size)


def fiberize(crystal, f):
    """T[f][w, t] = sqrt|Lambda| * f^(reps[w] + ann[t])."""
    fhat = dft(crystal, f).reshape(-1)
    return _scale(crystal) * fhat[crystal.section.fiber_index]


def fiber_at(crystal, f, xi):
    """Fiber at an arbitrary frequency: sqrt|Lambda| * (f^(xi + s))_s."""
    spec = crystal.spec
    fhat = dft(crystal, f).reshape(-1)
    idx = spec.flat_index(np.asarray(xi, dtype=np.int64)[None, :] + crystal.ann.elements)
    return _scale(crystal) * fhat[idx]


def defiberize(crystal, F):
    F = np.asarray(F, dtype=complex)
    if F.shape != (crystal.n_fibers, crystal.n_ann):
        raise InconsistentSpec(f"fiber field of shape {F.shape}, expected "
                               f"{(crystal.n_fibers, crystal.n_ann)}")
    fhat = np.empty(crystal.spec.size, dtype=complex)
    fhat[crystal.section.fiber_index] = F / _scale(crystal)
    return idft(crystal, fhat.reshape(crystal.spec.shape))


def weighted_norm(crystal, F):
    return float(np.sqrt(np.sum(np.abs(F)**2) / crystal.lattice_size))


def gamma_frequency(crystal, w0, g):
    """The unreduced frequency g* reps[w0]."""
    rep = crystal.section.reps[w0]
    return tuple(int(c) for c in (crystal.group.mats[g].T @ rep) % crystal.spec.N)


def fiberize_gamma(crystal, f):
    """T_G[f][o, g] = T[f](g* rep_o) for each orbit representative.

    The frequency g* rep_o is used as is (not reduced into the section), so
    T_G[R_u f](w, g) = r_u T_G[f](w, g u) holds exactly.
    """
    fhat = dft(crystal, f).reshape(-1)
    spec = crystal.spec
    out = np.empty((len(crystal.orbits), crystal.group.order, crystal.n_ann), dtype=complex)
    for o, rec in enumerate(crystal.orbits):
        for g in range(crystal.group.order):
            xi = np.asarray(gamma_frequency(crystal, rec.rep, g))
            idx = spec.flat_index(xi[None, :] + crystal.ann.elements)
            out[o, g] = fhat[idx]
    return _scale(crystal) * out


def pi_rep(crystal, g, F):
    """(Pi(g) F)(w) = r_g F(g* w), with F read at the unreduced frequency."""
    F = np.asarray(F)
    dest = crystal.section_act[g]                      # (W,)
    perm = crystal.transport[g]                        # (W, T)
    return np.take_along_axis(F[dest], perm, axis=1)


def rotated_family(crystal, phis):
    """Phi_G = [R_g phi_i] in lexicographic (i, g) order."""
    phis = list(phis)
    if not phis:
        raise EmptyFamily("family of signals is empty")
    return [rotate(crystal, g, phi) for phi in phis for g in range(crystal.group.order)]


def family_fibers(crystal, phis, rotated=True):
    """Array (n|G| or n, |Omega|, |Lambda^perp|) of fiberized family members."""
    fam = rotated_family(crystal, phis) if rotated else list(phis)
    if not fam:
        raise EmptyFamily("family of signals is empty")
    return np.stack([fiberize(crystal, f) for f in fam])


def pre_gramian(crystal, phis, omega):
    """Columns T[R_g phi_i](omega) in (i, g) order.

    ``omega`` is a section index or an explicit frequency tuple.
    """
    fam = rotated_family(crystal, phis)
    if isinstance(omega, (int, np.integer)):
        return np.stack([fiberize(crystal, f)[omega] for f in fam], axis=1)
    return np.stack([fiber_at(crystal, f, omega) for f in fam], axis=1)


def gramian(crystal, phis, omega):
    J = pre_gramian(crystal, phis, omega)
    return J.conj().T @ J


def bracket(crystal, phi, psi, xi):
    """[phi, psi](xi) = sum_s phi^(xi + s) conj(psi^(xi + s)), unscaled."""
    a = fiber_at(crystal, phi, xi)
    b = fiber_at(crystal, psi, xi)
    return complex(np.sum(a * b.conj()) / crystal.lattice_size)
