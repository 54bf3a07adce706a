"""Finite n-dimensional cylindric atom structures and frame-level validation.

Equational validation on the complex algebra would scan 2^|atoms| elements,
so all checks run on the frame correspondents instead: each cylindrifier
accessibility T_i must be an equivalence, the T_i must commute, and the
diagonal sets must satisfy the standard interaction laws.  The chosen
correspondents are listed in the README next to their equational
counterparts.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .errors import InvalidParameterError, SpecError, StructureMismatchError
from .report import ValidationReport


def _bits(mask):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class CaAtomStructure:
    """dim, atoms, accessibility masks per index, diagonal masks per index pair.

    ``nbr(i, a)`` is the bitmask of atoms T_i-related to atom a.  On frames
    built by the generators every T_i is an equivalence by construction;
    loaded frames keep whatever relation the file gave (``check_ca_axioms``
    reports violations rather than refusing to build).
    """

    def __init__(self, dim, atoms, nbr, diag, name="ca", provenance=None):
        if dim < 3:
            raise InvalidParameterError("dimension must be at least 3")
        self.dim = dim
        self.atoms = tuple(atoms)
        self.index = {a: i for i, a in enumerate(self.atoms)}
        if len(self.index) != len(self.atoms):
            raise SpecError("duplicate atom names")
        self._nbr = [list(nbr[i]) for i in range(dim)]
        self._diag = {}
        full = (1 << len(self.atoms)) - 1
        for i in range(dim):
            for j in range(dim):
                if i == j:
                    self._diag[(i, j)] = full
                else:
                    self._diag[(i, j)] = diag.get((i, j), diag.get((j, i), 0))
        self.name = name
        self.provenance = provenance
        self._cls_cache = {}

    # -- construction helpers ------------------------------------------

    @classmethod
    def from_keys(cls, dim, atoms, key_fns, diag_sets, name="ca",
                  provenance=None):
        """Build with T_i = same-key equivalence (key_fns[i]: atom name -> key)."""
        atoms = tuple(atoms)
        index = {a: i for i, a in enumerate(atoms)}
        nbr = []
        for i in range(dim):
            groups = {}
            for a in atoms:
                groups.setdefault(key_fns[i](a), []).append(index[a])
            mask_of = {}
            for members in groups.values():
                m = 0
                for x in members:
                    m |= 1 << x
                for x in members:
                    mask_of[x] = m
            nbr.append([mask_of[x] for x in range(len(atoms))])
        diag = {}
        for (i, j), members in diag_sets.items():
            m = 0
            for a in members:
                m |= 1 << index[a]
            diag[(i, j)] = m
        return cls(dim, atoms, nbr, diag, name=name, provenance=provenance)

    # -- queries ---------------------------------------------------------

    def __len__(self):
        return len(self.atoms)

    def full_mask(self):
        return (1 << len(self.atoms)) - 1

    def nbr(self, i, a):
        return self._nbr[i][a]

    def related(self, i, a, b):
        return (self._nbr[i][a] >> b) & 1 == 1

    def diag_mask(self, i, j):
        return self._diag[(i, j)]

    def in_diag(self, a, i, j):
        return (self._diag[(i, j)] >> a) & 1 == 1

    def diag_profile(self, a):
        """Frozenset of index pairs (i,j), i<j, with atom a below d_ij."""
        return frozenset(
            (i, j) for i in range(self.dim) for j in range(i + 1, self.dim)
            if self.in_diag(a, i, j))

    def classes(self, i):
        """(cls, masks): cls[a] = class id, masks[id] = member bitmask.

        Requires T_i to be an equivalence (generated frames always qualify).
        """
        if i not in self._cls_cache:
            cls = [-1] * len(self.atoms)
            masks = []
            seen = {}
            for a in range(len(self.atoms)):
                m = self._nbr[i][a]
                cid = seen.get(m)
                if cid is None:
                    cid = len(masks)
                    seen[m] = cid
                    masks.append(m)
                cls[a] = cid
            self._cls_cache[i] = (cls, masks)
        return self._cls_cache[i]

    def element(self, names_or_indices=()):
        mask = 0
        for a in names_or_indices:
            mask |= 1 << (self.index[a] if isinstance(a, str) else a)
        return CaElement(self, mask)

    # -- serialization ----------------------------------------------------

    def to_json(self):
        acc = {}
        for i in range(self.dim):
            pairs = []
            for a in range(len(self.atoms)):
                for b in _bits(self._nbr[i][a]):
                    if b > a:
                        pairs.append([self.atoms[a], self.atoms[b]])
            acc[str(i)] = pairs
        diag = {}
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                diag[f"{i},{j}"] = [self.atoms[a]
                                    for a in _bits(self._diag[(i, j)])]
        return {"kind": "ca", "dim": self.dim, "atoms": list(self.atoms),
                "acc": acc, "diag": diag, "close": True}

    @classmethod
    def load_json(cls, data, name=None):
        if isinstance(data, str):
            data = json.loads(data)
        if data.get("kind") != "ca":
            raise SpecError('expected "kind": "ca"')
        dim = int(data["dim"])
        atoms = tuple(data["atoms"])
        index = {a: i for i, a in enumerate(atoms)}
        close = bool(data.get("close", False))
        nbr = []
        for i in range(dim):
            rows = [0] * len(atoms)
            for a, b in data.get("acc", {}).get(str(i), []):
                ia, ib = index[a], index[b]
                rows[ia] |= 1 << ib
                if close:
                    rows[ib] |= 1 << ia
            if close:
                for a in range(len(atoms)):
                    rows[a] |= 1 << a
                changed = True
                while changed:
                    changed = False
                    for a in range(len(atoms)):
                        acc = rows[a]
                        for b in _bits(rows[a]):
                            acc |= rows[b]
                        if acc != rows[a]:
                            rows[a] = acc
                            changed = True
                    # re-symmetrize after transitive growth
                    for a in range(len(atoms)):
                        for b in _bits(rows[a]):
                            if not (rows[b] >> a) & 1:
                                rows[b] |= 1 << a
                                changed = True
            nbr.append(rows)
        diag = {}
        for key, members in data.get("diag", {}).items():
            i, j = (int(p) for p in key.split(","))
            m = 0
            for a in members:
                m |= 1 << index[a]
            diag[(i, j)] = m
        return cls(dim, atoms, nbr, diag, name=name or data.get("name", "ca"))


@dataclass(frozen=True)
class CaElement:
    """Bitset element of the complex algebra over one frame."""

    structure: CaAtomStructure
    mask: int

    def _check(self, other):
        if other.structure is not self.structure:
            raise StructureMismatchError("elements of different frames")

    def __or__(self, other):
        self._check(other)
        return CaElement(self.structure, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return CaElement(self.structure, self.mask & other.mask)

    def __le__(self, other):
        self._check(other)
        return self.mask | other.mask == other.mask

    def __iter__(self):
        return _bits(self.mask)

    def names(self):
        return [self.structure.atoms[i] for i in self]


def cyl(s: CaAtomStructure, i: int, x: CaElement) -> CaElement:
    """Cylindrification: all atoms T_i-related to some atom of x."""
    if not 0 <= i < s.dim:
        raise InvalidParameterError(f"index {i} out of range for dim {s.dim}")
    if x.structure is not s:
        raise StructureMismatchError("element of a different frame")
    out = 0
    for a in _bits(x.mask):
        out |= s.nbr(i, a)
    return CaElement(s, out)


# -- validation --------------------------------------------------------


def check_ca_axioms(s: CaAtomStructure) -> ValidationReport:
    """Frame correspondents for membership of Cm(S) in CA_n.

    Checks: each T_i reflexive/symmetric/transitive, pairwise commutation,
    E_ii full, E_ij symmetric, the diagonal witness law
    E_ij = { a : exists b T_k-related with b in E_ik and E_kj }, and
    uniqueness: distinct atoms below d_ij are never T_i-related.
    """
    rep = ValidationReport(f"ca-axioms({s.name})")
    n = len(s.atoms)
    names = s.atoms

    witness = None
    for i in range(s.dim):
        for a in range(n):
            if not (s.nbr(i, a) >> a) & 1:
                witness = {"index": i, "atom": names[a], "kind": "reflexive"}
                break
            for b in _bits(s.nbr(i, a)):
                if not (s.nbr(i, b) >> a) & 1:
                    witness = {"index": i, "pair": [names[a], names[b]],
                               "kind": "symmetric"}
                    break
                if s.nbr(i, b) != s.nbr(i, a):
                    diff = s.nbr(i, b) ^ s.nbr(i, a)
                    c = diff.bit_length() - 1
                    witness = {"index": i,
                               "chain": [names[a], names[b], names[c]],
                               "kind": "transitive"}
                    break
            if witness:
                break
        if witness:
            break
    rep.add("acc-equivalence", witness is None, witness)
    if witness is not None:
        # downstream checks assume partitions exist
        return rep

    witness = None
    for i in range(s.dim):
        for j in range(i + 1, s.dim):
            ci, _ = s.classes(i)
            cj, _ = s.classes(j)
            nb = {}
            for a in range(n):
                nb.setdefault(ci[a], set()).add(cj[a])
            vmap = {}
            for a in range(n):
                u, v = ci[a], cj[a]
                prev = vmap.get(v)
                if prev is None:
                    vmap[v] = (u, a)
                elif nb[prev[0]] != nb[u]:
                    # extract concrete non-commuting pair
                    u1, a1 = prev
                    big, small = (u1, u) if nb[u1] - nb[u] else (u, u1)
                    v2 = next(iter(nb[big] - nb[small]))
                    c = next(x for x in range(n)
                             if ci[x] == big and cj[x] == v2)
                    b = a1 if big == u else a
                    witness = {"indices": [i, j],
                               "pair": [names[b], names[c]]}
                    break
            if witness:
                break
        if witness:
            break
    rep.add("acc-commutation", witness is None, witness)

    full = s.full_mask()
    bad = next((i for i in range(s.dim)
                if s.diag_mask(i, i) != full), None)
    rep.add("diag-ii-full", bad is None, bad)

    witness = None
    for i in range(s.dim):
        for j in range(s.dim):
            if s.diag_mask(i, j) != s.diag_mask(j, i):
                witness = [i, j]
                break
        if witness:
            break
    rep.add("diag-symmetric", witness is None, witness)

    witness = None
    for i, j, k in itertools.permutations(range(s.dim), 3):
        seed = s.diag_mask(i, k) & s.diag_mask(k, j)
        lifted = 0
        for a in _bits(seed):
            lifted |= s.nbr(k, a)
        if lifted != s.diag_mask(i, j):
            diff = lifted ^ s.diag_mask(i, j)
            a = diff.bit_length() - 1
            witness = {"indices": [i, j, k], "atom": names[a]}
            break
    rep.add("diag-witness", witness is None, witness)

    witness = None
    for i in range(s.dim):
        for j in range(s.dim):
            if i == j:
                continue
            dm = s.diag_mask(i, j)
            for a in _bits(dm):
                inter = s.nbr(i, a) & dm
                if inter != 1 << a:
                    b = next(b for b in _bits(inter) if b != a)
                    witness = {"indices": [i, j],
                               "pair": [names[a], names[b]]}
                    break
            if witness:
                break
        if witness:
            break
    rep.add("diag-uniqueness", witness is None, witness)
    return rep


# -- generators --------------------------------------------------------


def tuple_atom_name(t):
    return "t" + "".join(str(c) for c in t)


def full_set_frame(n: int, base_size: int) -> CaAtomStructure:
    """Atom structure of the full n-dimensional set algebra over a finite base.

    Atoms are n-tuples over the base; two atoms are T_i-related iff they
    agree off i; E_ij collects the tuples with equal i,j coordinates.
    """
    if base_size < 1:
        raise InvalidParameterError("base_size must be >= 1")
    tuples = list(itertools.product(range(base_size), repeat=n))
    atoms = [tuple_atom_name(t) for t in tuples]
    of = dict(zip(atoms, tuples))

    def key(i):
        return lambda a: of[a][:i] + of[a][i + 1:]

    diag = {}
    for i in range(n):
        for j in range(i + 1, n):
            diag[(i, j)] = [a for a in atoms if of[a][i] == of[a][j]]
    return CaAtomStructure.from_keys(
        n, atoms, [key(i) for i in range(n)], diag,
        name=f"full_set_frame({n},{base_size})")


# -- neat reducts -------------------------------------------------------


def neat_reduct_atoms(s: CaAtomStructure, m: int):
    """Atoms of Nr_m(Cm S): connected components under the outer T_i.

    Elements fixed by every c_i with i >= m are exactly the unions of these
    components (x <= c_i x and c_i is completely additive).  Returns the
    partition as a list of sorted atom-index lists.
    """
    if m >= s.dim:
        raise InvalidParameterError("target dimension must be below dim")
    if m < 1:
        raise InvalidParameterError("target dimension must be positive")
    n = len(s.atoms)
    comp = [-1] * n
    comps = []
    for a in range(n):
        if comp[a] != -1:
            continue
        cid = len(comps)
        stack = [a]
        members = []
        comp[a] = cid
        while stack:
            x = stack.pop()
            members.append(x)
            for i in range(m, s.dim):
                for y in _bits(s.nbr(i, x)):
                    if comp[y] == -1:
                        comp[y] = cid
                        stack.append(y)
        comps.append(sorted(members))
    return comps


def neat_reduct_frame(s: CaAtomStructure, m: int) -> CaAtomStructure:
    """Induced m-dimensional frame on the neat-reduct components.

    Accessibility and diagonals restrict to indices below m and lift to
    components; provenance records the source frame and component map.
    """
    if m < 3:
        raise InvalidParameterError(
            "induced frames need dimension >= 3; use neat_reduct_atoms")
    comps = neat_reduct_atoms(s, m)
    comp_of = {}
    for cid, members in enumerate(comps):
        for a in members:
            comp_of[a] = cid
    atoms = [f"C{cid}" for cid in range(len(comps))]
    nbr = []
    for i in range(m):
        rows = [0] * len(comps)
        for a in range(len(s.atoms)):
            for b in _bits(s.nbr(i, a)):
                rows[comp_of[a]] |= 1 << comp_of[b]
        nbr.append(rows)
    diag = {}
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            mask = 0
            for a in _bits(s.diag_mask(i, j)):
                mask |= 1 << comp_of[a]
            diag[(i, j)] = mask
    prov = {
        "source": s.name,
        "components": {f"C{cid}": [s.atoms[a] for a in members]
                       for cid, members in enumerate(comps)},
    }
    return CaAtomStructure(m, atoms, nbr, diag,
                           name=f"neat_reduct({s.name},{m})",
                           provenance=prov)
