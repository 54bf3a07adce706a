"""Finite relation-algebra atom structures and their complex-algebra operations.

A structure is stored representation-free: a finite atom set, the subset of
identity atoms, an involutive converse map, and the ternary consistency
predicate ``consistent(x, y, z)`` meaning "atom z lies below x;y".  Files and
generators may describe the predicate by its complement (forbidden triangles);
the constructor closes everything under the Peirce/cycle transforms and the
identity law before the structure is ever used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import (
    InvalidParameterError,
    SpecError,
    StructureMismatchError,
)
from .report import ValidationReport


def _cycle_orbit(triple, conv):
    """Orbit of (x,y,z) under the cycle law for 'z below x;y'."""
    seen = set()
    todo = [triple]
    while todo:
        x, y, z = todo.pop()
        if (x, y, z) in seen:
            continue
        seen.add((x, y, z))
        todo.append((conv[x], z, y))
        todo.append((z, conv[y], x))
        todo.append((conv[y], conv[x], conv[z]))
    return seen


class RaAtomStructure:
    """Atoms, identity atoms, converse, and the triangle predicate.

    Instances are immutable after construction and safe to share.  Use
    :meth:`from_forbidden` / :meth:`from_consistent` / :meth:`load_json`
    rather than the raw constructor; they normalize the input.
    """

    def __init__(self, atoms, identity, conv, consistent, name="ra"):
        self.atoms = tuple(atoms)
        self.index = {a: i for i, a in enumerate(self.atoms)}
        if len(self.index) != len(self.atoms):
            raise SpecError("duplicate atom names")
        self.identity = frozenset(identity)
        self.conv = tuple(conv)
        self.consistent_set = frozenset(consistent)
        self.name = name
        n = len(self.atoms)
        self._comp = [[0] * n for _ in range(n)]
        for x, y, z in self.consistent_set:
            self._comp[x][y] |= 1 << z
        self._full = (1 << n) - 1

    # -- construction -------------------------------------------------

    @classmethod
    def from_forbidden(cls, atoms, identity, converse=None, forbidden=(),
                       strict=False, name="ra"):
        return cls._build(atoms, identity, converse, forbidden=forbidden,
                          strict=strict, name=name)

    @classmethod
    def from_consistent(cls, atoms, identity, converse=None, consistent=(),
                        strict=False, name="ra"):
        return cls._build(atoms, identity, converse, consistent=consistent,
                          strict=strict, name=name)

    @classmethod
    def _build(cls, atoms, identity, converse, forbidden=None,
               consistent=None, strict=False, name="ra"):
        atoms = tuple(atoms)
        index = {a: i for i, a in enumerate(atoms)}
        if len(index) != len(atoms):
            raise SpecError("duplicate atom names")
        ident = frozenset(index[a] for a in identity)
        if not ident:
            raise SpecError("at least one identity atom is required")
        conv = list(range(len(atoms)))
        for a, b in (converse or {}).items():
            conv[index[a]] = index[b]
        for i, j in enumerate(conv):
            if conv[j] != i:
                raise SpecError(
                    f"converse is not involutive at {atoms[i]} -> {atoms[j]}")
        if {conv[i] for i in ident} != ident:
            raise SpecError("converse must fix the identity atoms setwise")

        n = len(atoms)
        everything = {(x, y, z) for x in range(n) for y in range(n)
                      for z in range(n)}

        def to_triples(lst):
            out = set()
            for t in lst:
                if len(t) != 3:
                    raise SpecError(f"triangle {t!r} must have 3 atoms")
                try:
                    out.add(tuple(index[a] for a in t))
                except KeyError as e:
                    raise SpecError(f"unknown atom {e.args[0]!r} in triangle")
            return out

        if (forbidden is None) == (consistent is None):
            raise SpecError("give exactly one of forbidden/consistent")
        if forbidden is not None:
            bad = to_triples(forbidden)
        else:
            bad = everything - to_triples(consistent)

        # Identity normalization: e;x meets z only at z=x, x;e likewise,
        # and x;y meets identity only at y = conv(x).
        for x in range(n):
            for y in range(n):
                for z in range(n):
                    if x in ident and z != y:
                        bad.add((x, y, z))
                    if y in ident and z != x:
                        bad.add((x, y, z))
                    if z in ident and y != conv[x]:
                        bad.add((x, y, z))

        closed = set()
        for t in bad:
            closed |= _cycle_orbit(t, conv)
        if strict:
            given = to_triples(forbidden) if forbidden is not None else None
            if given is not None and closed != given:
                extra = sorted(closed - given)[:3]
                raise SpecError(
                    "strict load: closure added forbidden triangles, "
                    f"e.g. {[tuple(atoms[i] for i in t) for t in extra]}")
            if forbidden is None:
                kept = everything - closed
                if kept != to_triples(consistent):
                    raise SpecError(
                        "strict load: closure removed consistent triangles")

        cons = everything - closed
        s = cls(atoms, ident, conv, cons, name=name)
        for a in range(n):
            if not any((e, a, a) in cons for e in ident):
                raise SpecError(
                    f"atom {atoms[a]!r} has no identity atom below e;{atoms[a]}")
        return s

    # -- basic queries ------------------------------------------------

    def __len__(self):
        return len(self.atoms)

    def atom_name(self, i):
        return self.atoms[i]

    def names(self, indices):
        return [self.atoms[i] for i in sorted(indices)]

    def is_identity(self, i):
        return i in self.identity

    def diversity_atoms(self):
        return [i for i in range(len(self.atoms)) if i not in self.identity]

    def consistent(self, x, y, z) -> bool:
        return (self._comp[x][y] >> z) & 1 == 1

    def comp_mask(self, x, y) -> int:
        return self._comp[x][y]

    def full_mask(self) -> int:
        return self._full

    def atom_set(self, names_or_indices=()) -> "AtomSet":
        mask = 0
        for a in names_or_indices:
            mask |= 1 << (self.index[a] if isinstance(a, str) else a)
        return AtomSet(self, mask)

    def is_symmetric(self) -> bool:
        return all(self.conv[i] == i for i in range(len(self.atoms)))

    def is_integral(self) -> bool:
        return len(self.identity) == 1

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        n = len(self.atoms)
        forbidden = sorted(
            (x, y, z)
            for x in range(n) for y in range(n) for z in range(n)
            if not self.consistent(x, y, z))
        return {
            "kind": "ra",
            "atoms": list(self.atoms),
            "identity": [self.atoms[i] for i in sorted(self.identity)],
            "converse": {self.atoms[i]: self.atoms[self.conv[i]]
                         for i in range(n) if self.conv[i] != i},
            "forbidden": [[self.atoms[x], self.atoms[y], self.atoms[z]]
                          for (x, y, z) in forbidden],
        }

    @classmethod
    def load_json(cls, data, name=None):
        if isinstance(data, str):
            data = json.loads(data)
        if data.get("kind") != "ra":
            raise SpecError('expected "kind": "ra"')
        strict = bool(data.get("strict", False))
        kwargs = dict(
            atoms=data["atoms"],
            identity=data["identity"],
            converse=data.get("converse", {}),
            strict=strict,
            name=name or data.get("name", "ra"),
        )
        has_f = "forbidden" in data
        has_c = "consistent" in data
        if has_f == has_c:
            raise SpecError('give exactly one of "forbidden"/"consistent"')
        if has_f:
            return cls.from_forbidden(forbidden=data["forbidden"], **kwargs)
        return cls.from_consistent(consistent=data["consistent"], **kwargs)


@dataclass(frozen=True)
class AtomSet:
    """Bitset of atoms owned by one structure."""

    structure: RaAtomStructure
    mask: int

    def _check(self, other):
        if other.structure is not self.structure:
            raise StructureMismatchError(
                "atom sets belong to different structures")

    def __or__(self, other):
        self._check(other)
        return AtomSet(self.structure, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return AtomSet(self.structure, self.mask & other.mask)

    def __le__(self, other):
        self._check(other)
        return self.mask | other.mask == other.mask

    def __iter__(self):
        m, i = self.mask, 0
        while m:
            if m & 1:
                yield i
            m >>= 1
            i += 1

    def names(self):
        return [self.structure.atoms[i] for i in self]

    def __bool__(self):
        return self.mask != 0


def compose(s: RaAtomStructure, xs: AtomSet, ys: AtomSet) -> AtomSet:
    """Complex-algebra composition { z : some x in xs, y in ys with z below x;y }."""
    if xs.structure is not s or ys.structure is not s:
        raise StructureMismatchError("compose arguments must belong to s")
    out = 0
    for x in xs:
        for y in ys:
            out |= s.comp_mask(x, y)
    return AtomSet(s, out)


def converse_set(s: RaAtomStructure, xs: AtomSet) -> AtomSet:
    if xs.structure is not s:
        raise StructureMismatchError("converse argument must belong to s")
    out = 0
    for x in xs:
        out |= 1 << s.conv[x]
    return AtomSet(s, out)


# -- validation ------------------------------------------------------


def check_ra_axioms(s: RaAtomStructure) -> ValidationReport:
    """Frame-level correspondents of the RA axioms on the atom structure.

    Verdicts: converse involution, converse fixes identity, cycle (Peirce)
    closure, identity law, per-atom domain identity, and atom-level
    associativity.  Failures carry a minimal witness; they are report
    entries, never exceptions.
    """
    rep = ValidationReport(f"ra-axioms({s.name})")
    n = len(s.atoms)
    names = s.atoms

    bad = next((i for i in range(n) if s.conv[s.conv[i]] != i), None)
    rep.add("converse-involution", bad is None,
            None if bad is None else names[bad])

    ok = {s.conv[i] for i in s.identity} == s.identity
    rep.add("converse-fixes-identity", ok,
            None if ok else sorted(names[i] for i in s.identity))

    witness = None
    for x in range(n):
        for y in range(n):
            for z in range(n):
                if not s.consistent(x, y, z):
                    continue
                for t in _cycle_orbit((x, y, z), s.conv):
                    if not s.consistent(*t):
                        witness = ([names[x], names[y], names[z]],
                                   [names[t[0]], names[t[1]], names[t[2]]])
                        break
                if witness:
                    break
            if witness:
                break
        if witness:
            break
    rep.add("peirce-closure", witness is None, witness)

    witness = None
    for e in s.identity:
        for x in range(n):
            for z in range(n):
                if s.consistent(e, x, z) and z != x:
                    witness = [names[e], names[x], names[z]]
                    break
            if witness:
                break
        if witness:
            break
    rep.add("identity-law", witness is None, witness)

    missing = next(
        (a for a in range(n)
         if not any(s.consistent(e, a, a) for e in s.identity)), None)
    rep.add("domain-identity", missing is None,
            None if missing is None else names[missing])

    # (a;b);c = a;(b;c) at the atom level, via composition bitmasks.
    witness = None
    for a in range(n):
        for b in range(n):
            ab = s.comp_mask(a, b)
            for c in range(n):
                left = 0
                m = ab
                x = 0
                while m:
                    if m & 1:
                        left |= s.comp_mask(x, c)
                    m >>= 1
                    x += 1
                right = 0
                m = s.comp_mask(b, c)
                y = 0
                while m:
                    if m & 1:
                        right |= s.comp_mask(a, y)
                    m >>= 1
                    y += 1
                if left != right:
                    diff = (left ^ right)
                    d = diff.bit_length() - 1
                    witness = [names[a], names[b], names[c], names[d]]
                    break
            if witness:
                break
        if witness:
            break
    rep.add("associativity", witness is None, witness)
    return rep


# -- generators ------------------------------------------------------


def gen_ek23(k: int) -> RaAtomStructure:
    """Maddux's algebra with k symmetric diversity atoms.

    A diversity triangle is consistent exactly when its three labels are not
    all equal; identity triangles follow the identity law.
    """
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    atoms = ["Id"] + [f"a{i}" for i in range(1, k + 1)]
    forbidden = [[a, a, a] for a in atoms[1:]]
    return RaAtomStructure.from_forbidden(
        atoms, ["Id"], {}, forbidden, name=f"E_{k}(2,3)")


@dataclass(frozen=True)
class TriangleRule:
    """One forbidden-triangle pattern over colour-class names.

    ``pattern`` lists three class names; ``constraint`` refines when a
    matching triangle is actually forbidden:

    - "none": every matching triangle is forbidden;
    - "monochromatic": forbidden only if the three atoms are equal;
    - "red-indices-match": pattern of three pair-indexed atoms; forbidden
      unless the three index pairs arise from one injective assignment of
      points to the triangle's corners;
    - "order-preserving": pattern (g, g, r) with integer-indexed g's and a
      pair-indexed r; forbidden unless tints can be associated to the red
      indices by an order-preserving partial function.
    """

    pattern: tuple[str, str, str]
    constraint: str = "none"
    polarity: str = "forbid"

    def to_json(self):
        return {"pattern": list(self.pattern), "constraint": self.constraint,
                "polarity": self.polarity}

    @classmethod
    def from_json(cls, data):
        pat = tuple(data["pattern"])
        if len(pat) != 3:
            raise SpecError("pattern must list three class names")
        return cls(pat, data.get("constraint", "none"),
                   data.get("polarity", "forbid"))


def _pairs_coherent(p1, p2, p3):
    """True iff three unordered index pairs come from one injective corner map.

    Reading p1 on edge (x,y), p2 on (y,z), p3 on (x,z): some assignment of
    points to corners must reproduce all three pairs.
    """
    for fx, fy in ((p1[0], p1[1]), (p1[1], p1[0])):
        if fy not in p2:
            continue
        fz = p2[0] if p2[1] == fy else p2[1]
        if len({fx, fy, fz}) == 3 and frozenset((fx, fz)) == frozenset(p3):
            return True
    return False


def _order_preserving(i, j, pair):
    """Some association of tints i,j with the two red indices is an
    order-preserving partial function."""
    k, l = pair
    for ki, li in ((k, l), (l, k)):
        if i == j and ki != li:
            continue
        if i < j and not ki < li:
            continue
        if j < i and not li < ki:
            continue
        return True
    return False


class ColourRuleSpec:
    """Named disjoint families of symmetric atoms plus forbidden patterns.

    ``classes`` maps a class name to its index list; indices are ints or int
    pairs (pairs yield atoms like ``r[0,1]``).  One identity atom ``Id`` is
    always added.
    """

    def __init__(self, classes: dict, rules: Iterable[TriangleRule]):
        self.classes = {}
        for cname, indices in classes.items():
            if not indices:
                raise SpecError(f"colour class {cname!r} is empty")
            self.classes[cname] = list(indices)
        self.rules = list(rules)
        for rule in self.rules:
            for cname in rule.pattern:
                if cname not in self.classes:
                    raise SpecError(
                        f"pattern references undeclared class {cname!r}")
            if rule.polarity != "forbid":
                raise SpecError(f"unsupported polarity {rule.polarity!r}")

    @staticmethod
    def atom_name(cname, idx):
        if isinstance(idx, (tuple, list)):
            return f"{cname}[{','.join(str(i) for i in idx)}]"
        return f"{cname}{idx}"

    def to_json(self):
        return {
            "classes": {c: [list(i) if isinstance(i, (tuple, list)) else i
                            for i in idxs]
                        for c, idxs in self.classes.items()},
            "rules": [r.to_json() for r in self.rules],
        }

    @classmethod
    def from_json(cls, data):
        classes = {
            c: [tuple(i) if isinstance(i, list) else i for i in idxs]
            for c, idxs in data["classes"].items()}
        rules = [TriangleRule.from_json(r) for r in data.get("rules", [])]
        return cls(classes, rules)


def _rule_forbids(rule: TriangleRule, triple, cls_of, idx_of):
    """Does this rule forbid the (unordered) diversity triangle?

    ``triple`` is a tuple of atom ids; all atoms here are symmetric, so a
    triangle matches if SOME arrangement of its atoms fits the pattern.
    """
    import itertools

    for arr in set(itertools.permutations(triple)):
        if tuple(cls_of[a] for a in arr) != rule.pattern:
            continue
        if rule.constraint == "none":
            return True
        if rule.constraint == "monochromatic":
            if arr[0] == arr[1] == arr[2]:
                return True
        elif rule.constraint == "red-indices-match":
            p1, p2, p3 = (idx_of[a] for a in arr)
            if not _pairs_coherent(tuple(p1), tuple(p2), tuple(p3)):
                return True
        elif rule.constraint == "order-preserving":
            # arrangement (g^i, g^j, r_pair): greens meet at a corner
            i, j = idx_of[arr[0]], idx_of[arr[1]]
            pair = tuple(idx_of[arr[2]])
            if not _order_preserving(i, j, pair):
                return True
        else:
            raise SpecError(f"unknown constraint {rule.constraint!r}")
    return False


def gen_from_colour_rules(spec: ColourRuleSpec) -> RaAtomStructure:
    """Materialize the symmetric integral structure whose forbidden diversity
    triangles are exactly the instantiations of the spec's patterns."""
    atoms = ["Id"]
    cls_of = {}
    idx_of = {}
    for cname in spec.classes:
        for idx in spec.classes[cname]:
            name = ColourRuleSpec.atom_name(cname, idx)
            if name in idx_of:
                raise SpecError(f"duplicate atom {name!r}")
            atoms.append(name)
            cls_of[name] = cname
            idx_of[name] = idx
    index = {a: i for i, a in enumerate(atoms)}
    div = atoms[1:]
    forbidden = []
    import itertools

    for triple in itertools.combinations_with_replacement(div, 3):
        if any(_rule_forbids(r, triple, cls_of, idx_of) for r in spec.rules):
            forbidden.append(list(triple))
    return RaAtomStructure.from_forbidden(
        atoms, ["Id"], {}, forbidden, name="colour-rules")


# -- atom splitting (finite blow-up truncation) ----------------------

SplitRule = Callable[[tuple, tuple, tuple, bool], bool]
"""Decides consistency of a copy-triple from the originals.

Called as rule((P,i), (Q,j), (R,k), base_ok) where base_ok is the original
triple's consistency; returns the copy-triple's consistency.  The paper's
synchronizing relation between copy indices is deliberately pluggable here.
"""


def default_split_rule(x, y, z, base_ok):
    """Defer to the original triple; forbid triples monochromatic in one copy."""
    if not base_ok:
        return False
    return not (x == y == z)


def split_atoms(s: RaAtomStructure, copies: int,
                rule: SplitRule = default_split_rule) -> RaAtomStructure:
    """Split every diversity atom into ``copies`` copies.

    Projecting copies to originals is a bounded morphism on the consistency
    predicate wherever the rule defers to the original.  The result is
    re-closed under the cycle law (the closure removes any rule decisions
    that were not cycle-stable).
    """
    if copies < 1:
        raise InvalidParameterError("copies must be >= 1")
    names = {}
    atoms = [s.atoms[e] for e in sorted(s.identity)]
    for a in s.diversity_atoms():
        for i in range(copies):
            names[(a, i)] = (f"{s.atoms[a]}^{i}" if copies > 1
                             else s.atoms[a])
            atoms.append(names[(a, i)])
    converse = {}
    for (a, i), nm in names.items():
        converse[nm] = names[(s.conv[a], i)]
    ids = [s.atoms[e] for e in sorted(s.identity)]

    # name -> (original index, copy index); identity atoms carry copy None
    rev = {}
    for e in sorted(s.identity):
        rev[s.atoms[e]] = (e, None)
    for (a, i), nm in names.items():
        rev[nm] = (a, i)

    forbidden = []
    for xn in atoms:
        for yn in atoms:
            for zn in atoms:
                (p, i), (q, j), (r, k) = rev[xn], rev[yn], rev[zn]
                base_ok = s.consistent(p, q, r)
                if None in (i, j, k):
                    ok = base_ok  # identity-involving: defer outright
                else:
                    ok = rule((p, i), (q, j), (r, k), base_ok)
                if not ok:
                    forbidden.append([xn, yn, zn])
    return RaAtomStructure.from_forbidden(
        atoms, ids, converse, forbidden, name=f"split({s.name},{copies})")


def split_projection(split: RaAtomStructure, original: RaAtomStructure):
    """Map each split atom back to its original (by name convention)."""
    proj = {}
    for i, nm in enumerate(split.atoms):
        base = nm.split("^")[0]
        proj[i] = original.index[base]
    return proj
