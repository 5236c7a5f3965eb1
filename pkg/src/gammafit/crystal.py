"""Point groups, the semidirect product Lambda x| G, and their actions.

Conventions
-----------
* ``g.mul[a, b]`` is the index of ``mats[a] @ mats[b] mod N``; index 0 is the identity.
* The spatial action is ``x -> g x``; the dual action is ``xi -> g^T xi`` so that
  ``<g* xi, x> = <xi, g x>`` and ``g1* g2* = (g2 g1)*``.
* On the section the dual action is taken modulo the annihilator:
  ``act_on_section(g, w)`` is the coset of ``g* reps[w]``.  The leftover
  annihilator element (the "shift") is tracked explicitly, see ``transport``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import LatticeNotPreserved, NotAGroup, NotInvertible, ValidationError
from .lca import GroupSpec, annihilator, coset_section, enumerate_lattice


def int_det(m):
    """Exact determinant of a small integer matrix (cofactor expansion)."""
    m = [[int(v) for v in row] for row in m]
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * m[0][j] * int_det(minor)
    return total


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointGroup:
    spec: GroupSpec
    mats: np.ndarray                       # (|G|, d, d), entries in [0, N)
    mul: np.ndarray = field(repr=False)    # (|G|, |G|)
    inv: np.ndarray = field(repr=False)    # (|G|,)
    space_perm: np.ndarray = field(repr=False)   # [g, flat x] -> flat(g x)
    dual_perm: np.ndarray = field(repr=False)    # [g, flat xi] -> flat(g^T xi)
    source_index: tuple = ()               # position of each element in the input list

    def __len__(self):
        return len(self.mats)

    @property
    def order(self):
        return len(self.mats)


def validate_point_group(mats, lat):
    """Check that ``mats`` is a finite group of automorphisms preserving ``lat``.

    The identity is moved to the front; the other elements keep their input
    order.  Raises NotInvertible, NotAGroup or LatticeNotPreserved.
    """
    spec = lat.spec
    N, d = spec.N, spec.d
    arrs = []
    for idx, m in enumerate(mats):
        a = np.asarray(m, dtype=np.int64)
        if a.shape != (d, d):
            raise ValidationError(f"expected a {d}x{d} matrix, got shape {a.shape}",
                                  f"point_group[{idx}]")
        a = a % N
        if np.gcd(int_det(a) % N, N) != 1:
            raise NotInvertible(f"determinant {int_det(a)} is not a unit mod {N}",
                                f"point_group[{idx}]")
        arrs.append(a)
    if not arrs:
        raise NotAGroup("empty point group", "point_group")

    keys = [a.tobytes() for a in arrs]
    if len(set(keys)) != len(keys):
        dup = next(i for i, k in enumerate(keys) if keys.index(k) != i)
        raise NotAGroup("duplicate element", f"point_group[{dup}]")
    eye = np.eye(d, dtype=np.int64) % N
    try:
        e_idx = keys.index(eye.tobytes())
    except ValueError:
        raise NotAGroup("identity matrix missing", "point_group") from None
    order = [e_idx] + [i for i in range(len(arrs)) if i != e_idx]
    arrs = [arrs[i] for i in order]
    lookup = {a.tobytes(): k for k, a in enumerate(arrs)}

    n = len(arrs)
    mul = np.empty((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            prod = (arrs[a] @ arrs[b]) % N
            k = lookup.get(prod.tobytes())
            if k is None:
                raise NotAGroup(
                    f"product of elements {order[a]} and {order[b]} is not in the set",
                    "point_group")
            mul[a, b] = k
    inv = np.empty(n, dtype=np.int64)
    for a in range(n):
        hits = np.flatnonzero(mul[a] == 0)
        if len(hits) != 1 or mul[hits[0], a] != 0:
            raise NotAGroup(f"element {order[a]} has no inverse in the set", "point_group")
        inv[a] = hits[0]

    pts = spec.all_points()
    space_perm = np.empty((n, spec.size), dtype=np.int64)
    dual_perm = np.empty((n, spec.size), dtype=np.int64)
    for k, a in enumerate(arrs):
        space_perm[k] = spec.flat_index(pts @ a.T)
        dual_perm[k] = spec.flat_index(pts @ a)
        if not np.all(lat.member[space_perm[k][lat.flat]]):
            raise LatticeNotPreserved("g Lambda != Lambda", f"point_group[{order[k]}]")

    return PointGroup(spec, _frozen(np.stack(arrs)), _frozen(mul), _frozen(inv),
                      _frozen(space_perm), _frozen(dual_perm), tuple(order))


def act_space(group, g, x):
    x = np.asarray(x, dtype=np.int64)
    return tuple(int(c) for c in (group.mats[g] @ x) % group.spec.N)


def act_dual(group, g, xi):
    xi = np.asarray(xi, dtype=np.int64)
    return tuple(int(c) for c in (group.mats[g].T @ xi) % group.spec.N)


@dataclass(frozen=True)
class GammaElement:
    k: tuple
    g: int


def gamma_compose(group, a, b):
    """(k, g) . (k', g') = (k + g k', g g')."""
    gk = np.asarray(act_space(group, a.g, b.k))
    k = tuple(int(c) for c in (np.asarray(a.k) + gk) % group.spec.N)
    return GammaElement(k, int(group.mul[a.g, b.g]))


def lambda_rep(group, g, n):
    """Block left-regular representation: (lambda_g c)_{j,h} = c_{j, g^-1 h}."""
    G = group.order
    L = np.zeros((n * G, n * G))
    src = group.mul[group.inv[g]]
    for j in range(n):
        L[j * G + np.arange(G), j * G + src] = 1.0
    return L


def lambda_perm(group, g, n):
    """Index form of ``lambda_rep``: (lambda_g c)[p] = c[perm[p]]."""
    G = group.order
    src = group.mul[group.inv[g]]
    return (np.arange(n)[:, None] * G + src[None, :]).ravel()


@dataclass(frozen=True)
class OrbitRecord:
    rep: int
    members: tuple        # ((g, omega), ...), first entry (0, rep)
    stabilizer: tuple     # sorted group indices

    @property
    def size(self):
        return len(self.members)


@dataclass(frozen=True)
class Crystal:
    """Everything fixed by (N, d, Lambda, G): the ambient data of a problem."""

    spec: GroupSpec
    lattice: object
    ann: object
    section: object
    group: PointGroup
    section_act: np.ndarray = field(repr=False)    # [g, w] -> section index of g* reps[w]
    section_shift: np.ndarray = field(repr=False)  # [g, w] -> ann index of the leftover
    r_perm: np.ndarray = field(repr=False)         # [g, t] -> pos(g* ann[t])
    transport: np.ndarray = field(repr=False)      # [g, w, t] -> pos(shift + g* ann[t])
    orbits: tuple = ()
    orbit_of: np.ndarray = field(default=None, repr=False)   # w -> orbit number
    member_g: np.ndarray = field(default=None, repr=False)   # w -> g with g* rep ~ w

    @property
    def n_fibers(self):
        return len(self.section)

    @property
    def n_ann(self):
        return len(self.ann)

    @property
    def lattice_size(self):
        return len(self.lattice)


def build_crystal(N, d, lattice_generators, point_group):
    spec = GroupSpec(N, d)
    lat = enumerate_lattice(spec, lattice_generators)
    ann = annihilator(lat)
    sec = coset_section(ann)
    group = validate_point_group(point_group, lat)

    G, W = group.order, len(sec)
    moved = group.dual_perm[:, sec.rep_flat]               # (G, W) flat freq of g* rep
    section_act = sec.rep_of[moved]
    section_shift = sec.ann_of[moved]
    r_perm = ann.position[group.dual_perm[:, ann.flat]]    # (G, T)
    shifts = ann.elements[section_shift]                   # (G, W, d)
    g_ann = ann.elements[r_perm]                           # (G, T, d)
    transport = ann.position[spec.flat_index(shifts[:, :, None, :] + g_ann[:, None, :, :])]
    crystal = Crystal(spec, lat, ann, sec, group, _frozen(section_act),
                      _frozen(section_shift), _frozen(r_perm), _frozen(transport))
    orbits = orbit_partition(crystal)
    orbit_of = np.empty(W, dtype=np.int64)
    member_g = np.empty(W, dtype=np.int64)
    for o, rec in enumerate(orbits):
        for g, w in rec.members:
            orbit_of[w] = o
            member_g[w] = g
    return Crystal(spec, lat, ann, sec, group, crystal.section_act, crystal.section_shift,
                   crystal.r_perm, crystal.transport, tuple(orbits), _frozen(orbit_of),
                   _frozen(member_g))


def act_on_section(crystal, g, w):
    return int(crystal.section_act[g, w])


def r_rep(crystal, g):
    """Permutation pi with (r_g a)[t] = a[pi[t]], i.e. pi(pos(s)) = pos(g* s)."""
    return crystal.r_perm[g]


def r_matrix(crystal, g):
    T = crystal.n_ann
    R = np.zeros((T, T))
    R[np.arange(T), crystal.r_perm[g]] = 1.0
    return R


def transport_matrix(crystal, g, w):
    """Unitary P with T[R_g f](w) = P T[f](act_on_section(g, w)).

    Equals r_g when g* reps[w] is itself a representative.
    """
    T = crystal.n_ann
    P = np.zeros((T, T))
    P[np.arange(T), crystal.transport[g, w]] = 1.0
    return P


def orbit_partition(crystal):
    """Orbits of the section under the dual action, with exact stabilizers."""
    W = crystal.n_fibers
    G = crystal.group.order
    seen = np.zeros(W, dtype=bool)
    records = []
    for w0 in range(W):
        if seen[w0]:
            continue
        members = []
        hit = set()
        stab = []
        for g in range(G):
            w = int(crystal.section_act[g, w0])
            if w == w0:
                stab.append(g)
            if w not in hit:
                hit.add(w)
                members.append((g, w))
                seen[w] = True
        records.append(OrbitRecord(w0, tuple(members), tuple(sorted(stab))))
    return records


def conjugacy_classes(group, subset):
    """Conjugacy classes of the subgroup given by ``subset`` (group indices)."""
    subset = list(subset)
    left = set(subset)
    classes = []
    for h in subset:
        if h not in left:
            continue
        cls = sorted({int(group.mul[group.mul[x, h], group.inv[x]]) for x in subset})
        classes.append(cls)
        left -= set(cls)
    return classes
