"""Finite abelian group R = (Z_N)^d, its dual, lattices, annihilators and sections.

Points and frequencies are both d-tuples of residues mod N.  Every enumerated
set is kept sorted lexicographically, which coincides with row-major flat
index order, so ``flat_index`` of a sorted list is increasing.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentSpec, ValidationError

_MAX_SIZE = 10**7


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GroupSpec:
    """The ambient group (Z_N)^d."""

    N: int
    d: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValidationError(f"modulus must be an integer >= 2, got {self.N!r}", "group.N")
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"dimension must be an integer >= 1, got {self.d!r}", "group.d")
        if self.N ** self.d > _MAX_SIZE:
            raise ValidationError(f"|R| = {self.N}^{self.d} is too large", "group")

    @property
    def size(self):
        return self.N ** self.d

    @property
    def shape(self):
        return (self.N,) * self.d

    def all_points(self):
        """All elements of R as an (N^d, d) integer array in flat-index order."""
        grids = np.indices(self.shape).reshape(self.d, -1).T
        return np.ascontiguousarray(grids, dtype=np.int64)

    def flat_index(self, pts):
        pts = np.asarray(pts, dtype=np.int64) % self.N
        if pts.shape[-1] != self.d:
            raise InconsistentSpec(f"expected {self.d}-vectors, got shape {pts.shape}")
        return np.ravel_multi_index(tuple(np.moveaxis(pts, -1, 0)), self.shape)

    def point(self, flat):
        return tuple(int(c) for c in np.unravel_index(int(flat), self.shape))

    def check(self, x):
        x = tuple(int(c) % self.N for c in np.atleast_1d(x))
        if len(x) != self.d:
            raise InconsistentSpec(f"expected a {self.d}-tuple, got {x}")
        return x


def pairing(spec, xi, x):
    """Character value <xi, x> = exp(2 pi i xi.x / N)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=np.int64))
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    if xi.shape[-1] != spec.d or x.shape[-1] != spec.d:
        raise InconsistentSpec(
            f"pairing needs {spec.d}-vectors, got {xi.shape[-1]} and {x.shape[-1]}")
    phase = np.sum(xi * x, axis=-1) % spec.N
    return np.exp(2j * np.pi * phase / spec.N)


@dataclass(frozen=True)
class Lattice:
    spec: GroupSpec
    generators: np.ndarray
    elements: np.ndarray = field(repr=False)
    flat: np.ndarray = field(repr=False)
    member: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x):
        return bool(self.member[self.spec.flat_index(x)])


def enumerate_lattice(spec, generators):
    """Subgroup of (Z_N)^d generated by the columns of ``generators``."""
    gens = np.atleast_2d(np.asarray(generators, dtype=np.int64))
    if gens.shape[0] != spec.d:
        if spec.d == 1 and gens.shape[1] == 1:
            gens = gens.T
        else:
            raise ValidationError(
                f"lattice generators must have {spec.d} rows, got shape {gens.shape}", "lattice")
    gens = gens % spec.N
    member = np.zeros(spec.size, dtype=bool)
    member[0] = True
    frontier = [np.zeros(spec.d, dtype=np.int64)]
    while frontier:
        nxt = []
        for x in frontier:
            for j in range(gens.shape[1]):
                y = (x + gens[:, j]) % spec.N
                fy = spec.flat_index(y)
                if not member[fy]:
                    member[fy] = True
                    nxt.append(y)
        frontier = nxt
    flat = np.flatnonzero(member)
    pts = spec.all_points()[flat]
    return Lattice(spec, _frozen(gens), _frozen(pts), _frozen(flat), _frozen(member))


@dataclass(frozen=True)
class Annihilator:
    spec: GroupSpec
    elements: np.ndarray = field(repr=False)
    flat: np.ndarray = field(repr=False)
    position: np.ndarray = field(repr=False)   # flat freq -> index, -1 if absent

    def __len__(self):
        return len(self.elements)

    def index_of(self, xi):
        p = int(self.position[self.spec.flat_index(xi)])
        if p < 0:
            raise KeyError(f"{tuple(xi)} is not in the annihilator")
        return p


def annihilator(lat):
    """Frequencies l with <l, k> = 1 for every k in the lattice.

    Tested exactly on the generators: l.k = 0 mod N.
    """
    spec = lat.spec
    freqs = spec.all_points()
    mask = np.all((freqs @ lat.generators) % spec.N == 0, axis=1)
    flat = np.flatnonzero(mask)
    position = np.full(spec.size, -1, dtype=np.int64)
    position[flat] = np.arange(len(flat))
    if len(flat) * len(lat) != spec.size:
        raise InconsistentSpec("|lattice| * |annihilator| != |R|")
    return Annihilator(spec, _frozen(freqs[flat]), _frozen(flat), _frozen(position))


@dataclass(frozen=True)
class CosetSection:
    """Lexicographically smallest representatives of the cosets of the annihilator."""

    ann: Annihilator
    reps: np.ndarray = field(repr=False)
    rep_flat: np.ndarray = field(repr=False)
    rep_of: np.ndarray = field(repr=False)   # flat freq -> section index
    ann_of: np.ndarray = field(repr=False)   # flat freq -> annihilator index
    fiber_index: np.ndarray = field(repr=False)   # [omega, t] -> flat(reps[omega] + ann[t])

    @property
    def spec(self):
        return self.ann.spec

    def __len__(self):
        return len(self.reps)

    def reduce(self, xi):
        """Return (rep index, annihilator index) with xi = reps[rep] + ann[index]."""
        f = self.spec.flat_index(xi)
        return int(self.rep_of[f]), int(self.ann_of[f])


def coset_section(ann):
    spec = ann.spec
    freqs = spec.all_points()
    rep_of = np.full(spec.size, -1, dtype=np.int64)
    ann_of = np.full(spec.size, -1, dtype=np.int64)
    reps = []
    for f in range(spec.size):
        if rep_of[f] >= 0:
            continue
        r = len(reps)
        reps.append(f)
        coset = spec.flat_index(freqs[f] + ann.elements)
        rep_of[coset] = r
        ann_of[coset] = np.arange(len(ann))
    rep_flat = np.asarray(reps, dtype=np.int64)
    rep_pts = freqs[rep_flat]
    fiber_index = spec.flat_index(rep_pts[:, None, :] + ann.elements[None, :, :])
    return CosetSection(ann, _frozen(rep_pts), _frozen(rep_flat), _frozen(rep_of),
                        _frozen(ann_of), _frozen(fiber_index))

