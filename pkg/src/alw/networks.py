"""Atomic networks over a cylindric atom structure.

A network is a total labelling of the n-tuples over a finite node set by
atoms, subject to the two coherence conditions: the label's diagonal profile
must mirror the tuple's repeats, and tuples agreeing off an index carry
T_i-related labels.  Completing a partially known network (placing a fresh
node, relabelling a reused one) is a finite constraint search; the search
here is exhaustive with forward checking and returns solutions in a fixed
deterministic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import BudgetExceededError
from .report import ValidationReport


def tuple_profile(t):
    """Equality pattern of a tuple as a frozenset of index pairs."""
    return frozenset((i, j) for i in range(len(t))
                     for j in range(i + 1, len(t)) if t[i] == t[j])


def _profile_masks(frame):
    cache = getattr(frame, "_profile_masks", None)
    if cache is None:
        cache = {}
        for a in range(len(frame.atoms)):
            p = frame.diag_profile(a)
            cache[p] = cache.get(p, 0) | (1 << a)
        frame._profile_masks = cache
    return cache


def kernel_tuple(profile, n):
    """Canonical block tuple for an equality profile (first-occurrence ids)."""
    block = {}
    out = []
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for i, j in profile:
        parent[find(j)] = find(i)
    for i in range(n):
        r = find(i)
        if r not in block:
            block[r] = len(block)
        out.append(block[r])
    return tuple(out)


@dataclass
class Network:
    """Total atomic network on a finite node set."""

    frame: object
    nodes: tuple
    labels: dict = field(default_factory=dict)

    def label(self, t):
        return self.labels[t]

    def all_tuples(self):
        return itertools.product(self.nodes, repeat=self.frame.dim)

    def with_nodes(self, nodes):
        return Network(self.frame, tuple(sorted(nodes)), dict(self.labels))

    def node_signature(self, v):
        sig = []
        for t, a in self.labels.items():
            if v not in t:
                continue
            marks = tuple(x == v for x in t)
            seen = {}
            kern = []
            for x in t:
                if x not in seen:
                    seen[x] = len(seen)
                kern.append(seen[x])
            sig.append((marks, tuple(kern), a))
        sig.sort()
        return tuple(sig)

    def canonical_key(self):
        """Label sequence minimized over node orderings compatible with the
        per-node invariant signatures.  Isomorphic networks (same frame) get
        equal keys; the game is invariant under node renaming."""
        cached = getattr(self, "_canon", None)
        if cached is not None:
            return cached
        n = self.frame.dim
        nodes = list(self.nodes)
        q = len(nodes)
        groups = {}
        for v in nodes:
            groups.setdefault(self.node_signature(v), []).append(v)
        ordered_groups = [groups[k] for k in sorted(groups)]
        positions = list(itertools.product(range(q), repeat=n))
        best = None
        for perm_parts in itertools.product(
                *(itertools.permutations(g) for g in ordered_groups)):
            order = [v for part in perm_parts for v in part]
            key = tuple(self.labels[tuple(order[p] for p in pos)]
                        for pos in positions)
            if best is None or key < best:
                best = key
        self._canon = (q, best)
        return self._canon

    def pretty(self):
        frame = self.frame
        lines = [f"nodes: {list(self.nodes)}"]
        for t in sorted(self.labels):
            lines.append(f"  {t} -> {frame.atoms[self.labels[t]]}")
        return "\n".join(lines)

    def to_json(self):
        return {
            "nodes": list(self.nodes),
            "labels": {",".join(str(x) for x in t): self.frame.atoms[a]
                       for t, a in sorted(self.labels.items())},
        }


def validate_network(frame, net: Network) -> ValidationReport:
    """Check both network coherence conditions exhaustively."""
    rep = ValidationReport("network")
    witness = None
    for t, a in net.labels.items():
        prof = tuple_profile(t)
        if frame.diag_profile(a) != prof:
            witness = {"tuple": list(t), "atom": frame.atoms[a]}
            break
    rep.add("diagonal-condition", witness is None, witness)

    witness = None
    for t, a in net.labels.items():
        for i in range(frame.dim):
            for z in net.nodes:
                u = t[:i] + (z,) + t[i + 1:]
                if u == t:
                    continue
                if not frame.related(i, net.labels[u], a):
                    witness = {"tuples": [list(t), list(u)], "index": i}
                    break
            if witness:
                break
        if witness:
            break
    rep.add("cylindrifier-condition", witness is None, witness)
    return rep


class CompletionBudget:
    """Counts branch decisions across one completion search."""

    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def spend(self):
        self.used += 1
        if self.used > self.limit:
            raise BudgetExceededError(
                "completion search budget exceeded",
                {"branch_limit": self.limit})


def complete_labelling(frame, nodes, fixed, free, pre=None, budget=None,
                       limit=None):
    """All total coherent labellings extending ``fixed`` on ``free`` tuples.

    fixed: dict tuple -> atom (already coherent among themselves);
    free:  list of tuples to label;
    pre:   dict tuple -> atom forced assignments inside ``free``.

    Solutions come out in ascending atom order along a fixed variable order,
    so the result list is deterministic.  ``limit`` caps the number of
    solutions collected (None = all).
    """
    if budget is None:
        budget = CompletionBudget(10 ** 9)
    n = frame.dim
    prof_masks = _profile_masks(frame)
    free = list(dict.fromkeys(free))
    free_set = set(free)
    # initial candidate masks: profile plus coherence with fixed labels
    cand = {}
    neighbours = {t: [] for t in free}
    for t in free:
        mask = prof_masks.get(tuple_profile(t), 0)
        for i in range(n):
            for z in nodes:
                u = t[:i] + (z,) + t[i + 1:]
                if u == t:
                    continue
                if u in free_set:
                    neighbours[t].append((i, u))
                else:
                    mask &= frame.nbr(i, fixed[u])
        cand[t] = mask
    for t, a in (pre or {}).items():
        cand[t] &= 1 << a
    solutions = []
    assigned = {}

    order_hint = {t: k for k, t in enumerate(free)}

    def pick():
        best = None
        for t in free:
            if t in assigned:
                continue
            c = cand[t].bit_count()
            key = (c, order_hint[t])
            if best is None or key < best[0]:
                best = (key, t)
        return None if best is None else best[1]

    def run():
        t = pick()
        if t is None:
            solutions.append(dict(assigned))
            return len(solutions) != limit
        mask = cand[t]
        while mask:
            low = mask & -mask
            a = low.bit_length() - 1
            mask ^= low
            budget.spend()
            assigned[t] = a
            trail = []
            ok = True
            for i, u in neighbours[t]:
                if u in assigned:
                    continue
                old = cand[u]
                new = old & frame.nbr(i, a)
                if new != old:
                    trail.append((u, old))
                    cand[u] = new
                    if new == 0:
                        ok = False
                        break
            if ok and not run():
                for u, old in trail:
                    cand[u] = old
                del assigned[t]
                return False
            for u, old in trail:
                cand[u] = old
            del assigned[t]
        return True

    run()
    return solutions


def atom_network(frame, atom, budget=None, limit=None):
    """All networks realizing one atom on its diagonal-profile blocks.

    The atom sits on nodes 0..q-1 (q = number of blocks in its profile);
    remaining tuples are completed coherently.
    """
    n = frame.dim
    pattern = kernel_tuple(frame.diag_profile(atom), n)
    q = max(pattern) + 1
    nodes = tuple(range(q))
    free = list(itertools.product(nodes, repeat=n))
    sols = complete_labelling(frame, nodes, {}, free,
                              pre={pattern: atom}, budget=budget, limit=limit)
    return [Network(frame, nodes, s) for s in sols]
