"""Brute-force finite-base representation oracles.

Independent of the game solvers: these search exhaustively for a single
square base carrying a complete representation.  For a relation algebra the
object searched is an edge labelling of a finite base with identity exactly
on the diagonal, converse-compatible, triangle-consistent, and saturated
(every consistent split of every edge is witnessed by a point).  For a
cylindric frame it is a total labelling of the n-tuples over the base
satisfying the network conditions plus cylindrifier saturation.

Bases are interchangeable points, so the search prunes by canonical-first
assignment: whenever all entries over a leading point set are assigned,
the partial structure must be lexicographically minimal under permutations
of those points.  Minimality of a full labelling implies minimality of
every leading block under this entry order, so the pruning never loses an
isomorphism class (tests compare pruned and unpruned runs).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import BudgetExceededError, InvalidParameterError
from .report import global_budget


@dataclass
class SearchResult:
    outcome: str  # "found" | "exhausted" | "budget"
    base_size: int | None
    witness: dict | None
    stats: dict = field(default_factory=dict)

    def to_json(self):
        out = {"outcome": self.outcome, "stats": self.stats}
        if self.base_size is not None:
            out["base_size"] = self.base_size
        if self.witness is not None:
            out["witness"] = self.witness
        return out


class _Counter:
    def __init__(self, limit):
        self.limit = limit
        self.nodes = 0
        self.leaves = 0

    def step(self):
        self.nodes += 1
        if self.nodes > self.limit:
            raise BudgetExceededError("search budget exceeded",
                                      {"nodes": self.nodes - 1})


# -- relation algebra case ----------------------------------------------


def _ra_entry_order(b):
    """Pairs over 0..b-1, leading point blocks first."""
    order = []
    for p in range(b):
        block = [(p, p)]
        for q in range(p):
            block.append((q, p))
            block.append((p, q))
        order.append(block)
    return order


def _ra_lexmin(L, p):
    """Is the labelling on points 0..p lex-minimal under their permutations?"""
    blocks = _ra_entry_order(p + 1)
    entries = [e for block in blocks for e in block]
    base = tuple(L[e] for e in entries)
    for sigma in itertools.permutations(range(p + 1)):
        if sigma == tuple(range(p + 1)):
            continue
        for e in entries:
            x, y = e
            v = L[(sigma[x], sigma[y])]
            w = L[e]
            if v != w:
                if v < w:
                    return False
                break
    return True


def _ra_saturated(s, L, b):
    na = len(s.atoms)
    for x in range(b):
        for y in range(b):
            lab = L[(x, y)]
            for d in range(na):
                for e in range(na):
                    if not s.consistent(d, e, lab):
                        continue
                    if not any(L[(x, z)] == d and L[(z, y)] == e
                               for z in range(b)):
                        return False, (x, y, d, e)
    return True, None


def find_ra_representation(s, base_max=6, budget=None,
                           symmetry_pruning=True) -> SearchResult:
    """Search bases 1..base_max for a saturated square edge labelling.

    found  => Cm(s) is completely representable on that base;
    exhausted => no base up to the bound works (larger or infinite bases
    remain possible and are reported as unknown).
    """
    if base_max < 1:
        raise InvalidParameterError("base_max must be >= 1")
    counter = _Counter(budget or global_budget())
    ids = sorted(s.identity)
    div = [a for a in range(len(s.atoms)) if a not in s.identity]
    for b in range(1, base_max + 1):
        witness = _ra_search(s, b, ids, div, counter, symmetry_pruning)
        if witness is not None:
            return SearchResult(
                "found", b,
                {"kind": "ra-representation",
                 "base_size": b,
                 "labels": {f"{x},{y}": s.atoms[witness[(x, y)]]
                            for x in range(b) for y in range(b)}},
                {"nodes": counter.nodes, "leaves": counter.leaves})
    return SearchResult("exhausted", None, None,
                        {"base_max": base_max, "nodes": counter.nodes,
                         "leaves": counter.leaves})


def _ra_search(s, b, ids, div, counter, pruning):
    blocks = _ra_entry_order(b)
    L = {}

    def triangles_ok(x, y):
        lab = L[(x, y)]
        for z in range(b):
            if (x, z) in L and (z, y) in L:
                if not s.consistent(L[(x, z)], L[(z, y)], lab):
                    return False
        return True

    def place(p):
        # all entries over 0..p-1 are assigned; add point p
        if p == b:
            counter.leaves += 1
            ok, _ = _ra_saturated(s, L, b)
            return dict(L) if ok else None
        slots = [(q, p) for q in range(p)]

        def fill(k):
            counter.step()
            if k == len(slots):
                if pruning and not _ra_lexmin(L, p):
                    return None
                return place(p + 1)
            q, _ = slots[k]
            for a in div:
                L[(q, p)] = a
                L[(p, q)] = s.conv[a]
                if triangles_ok(q, p) and triangles_ok(p, q):
                    out = fill(k + 1)
                    if out is not None:
                        return out
                del L[(q, p)]
                del L[(p, q)]
            return None

        for e in ids:
            L[(p, p)] = e
            if triangles_ok(p, p):
                out = fill(0)
                if out is not None:
                    return out
            del L[(p, p)]
        return None

    return place(0)


def verify_ra_witness(s, witness) -> tuple[bool, str]:
    """Independent re-validation of a found RA labelling."""
    b = witness["base_size"]
    L = {}
    for key, name in witness["labels"].items():
        x, y = (int(t) for t in key.split(","))
        L[(x, y)] = s.index[name]
    for x in range(b):
        for y in range(b):
            if (x, y) not in L:
                return False, f"missing edge ({x},{y})"
            if (L[(x, y)] in s.identity) != (x == y):
                return False, f"identity misplaced at ({x},{y})"
            if L[(y, x)] != s.conv[L[(x, y)]]:
                return False, f"converse broken at ({x},{y})"
            for z in range(b):
                if not s.consistent(L[(x, z)], L[(z, y)], L[(x, y)]):
                    return False, f"triangle ({x},{z},{y}) inconsistent"
    ok, gap = _ra_saturated(s, L, b)
    if not ok:
        x, y, d, e = gap
        return False, (f"unsaturated: edge ({x},{y}) lacks witness for "
                       f"({s.atoms[d]};{s.atoms[e]})")
    return True, "ok"


# -- cylindric frame case ------------------------------------------------


def _ca_blocks(n, b):
    """Tuple variables over 0..b-1 grouped by leading point.

    Within a block, tuples with few distinct coordinates come first: the
    two-point tuples pin down fresh edges, after which wider tuples are
    forced by coherence.
    """
    blocks = []
    for p in range(b):
        block = [t for t in itertools.product(range(p + 1), repeat=n)
                 if max(t) == p]
        block.sort(key=lambda t: (len(set(t)), t))
        blocks.append(block)
    return blocks


def _ca_lexmin(L, p, n):
    blocks = _ca_blocks(n, p + 1)
    entries = [t for block in blocks for t in block]
    for sigma in itertools.permutations(range(p + 1)):
        if sigma == tuple(range(p + 1)):
            continue
        for t in entries:
            v = L[tuple(sigma[c] for c in t)]
            w = L[t]
            if v != w:
                if v < w:
                    return False
                break
    return True


def _ca_saturated(frame, L, b):
    n = frame.dim
    for t, lab in L.items():
        for i in range(n):
            realized = 0
            for z in range(b):
                realized |= 1 << L[t[:i] + (z,) + t[i + 1:]]
            if frame.nbr(i, lab) & ~realized:
                a = (frame.nbr(i, lab) & ~realized).bit_length() - 1
                return False, (t, i, a)
    return True, None


def find_ca_representation(frame, base_max=4, budget=None,
                           symmetry_pruning=True) -> SearchResult:
    """Search bases 1..base_max for a complete square representation:
    a total coherent labelling of the n-tuples with cylindrifier
    saturation."""
    if base_max < 1:
        raise InvalidParameterError("base_max must be >= 1")
    counter = _Counter(budget or global_budget())
    from .networks import _profile_masks, tuple_profile

    prof_masks = _profile_masks(frame)
    for b in range(1, base_max + 1):
        witness = _ca_search(frame, b, counter, prof_masks,
                             symmetry_pruning)
        if witness is not None:
            return SearchResult(
                "found", b,
                {"kind": "ca-representation",
                 "base_size": b,
                 "labels": {",".join(str(c) for c in t):
                            frame.atoms[witness[t]]
                            for t in sorted(witness)}},
                {"nodes": counter.nodes, "leaves": counter.leaves})
    return SearchResult("exhausted", None, None,
                        {"base_max": base_max, "nodes": counter.nodes,
                         "leaves": counter.leaves})


def _ca_search(frame, b, counter, prof_masks, pruning):
    from .networks import tuple_profile

    n = frame.dim
    blocks = _ca_blocks(n, b)
    L = {}
    # forward-checked candidate masks and the coherence adjacency
    cand = {}
    neighbours = {}
    all_tuples = [t for block in blocks for t in block]
    for t in all_tuples:
        cand[t] = prof_masks.get(tuple_profile(t), 0)
        nb = []
        for i in range(n):
            for z in range(b):
                u = t[:i] + (z,) + t[i + 1:]
                if u != t:
                    nb.append((i, u))
        neighbours[t] = nb

    def place(p):
        if p == b:
            counter.leaves += 1
            ok, _ = _ca_saturated(frame, L, b)
            return dict(L) if ok else None
        block = blocks[p]
        pending = set(block)

        def fill():
            counter.step()
            if not pending:
                if pruning and not _ca_lexmin(L, p, n):
                    return None
                return place(p + 1)
            t = min(pending, key=lambda u: (cand[u].bit_count(), u))
            pending.discard(t)
            mask = cand[t]
            while mask:
                low = mask & -mask
                a = low.bit_length() - 1
                mask ^= low
                L[t] = a
                trail = []
                ok = True
                for i, u in neighbours[t]:
                    if u in L:
                        continue
                    old = cand[u]
                    new = old & frame.nbr(i, a)
                    if new != old:
                        trail.append((u, old))
                        cand[u] = new
                        if not new:
                            ok = False
                            break
                if ok:
                    out = fill()
                    if out is not None:
                        return out
                for u, old in trail:
                    cand[u] = old
                del L[t]
            pending.add(t)
            return None

        return fill()

    return place(0)


def verify_ca_witness(frame, witness) -> tuple[bool, str]:
    """Independent re-validation of a found CA labelling."""
    from .networks import Network, validate_network

    b = witness["base_size"]
    labels = {}
    for key, name in witness["labels"].items():
        t = tuple(int(c) for c in key.split(","))
        labels[t] = frame.index[name]
    expect = set(itertools.product(range(b), repeat=frame.dim))
    if set(labels) != expect:
        return False, "labelling is not total on the base tuples"
    net = Network(frame, tuple(range(b)), labels)
    rep = validate_network(frame, net)
    if not rep.ok:
        return False, "; ".join(c.name for c in rep.failures())
    ok, gap = _ca_saturated(frame, labels, b)
    if not ok:
        t, i, a = gap
        return False, (f"unsaturated: tuple {t} index {i} misses "
                       f"{frame.atoms[a]}")
    return True, "ok"
