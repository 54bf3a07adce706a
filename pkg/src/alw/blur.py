"""Complex and strong blur conditions on finite relation algebras.

A candidate certificate is a family J of nonempty identity-free atom sets
plus the width parameter l.  The five numbered conditions follow the
displayed formulas: the quantifier prefix of the safety condition (4) runs
over V_1..V_l and W_2..W_l even though V_1 never occurs in the matrix (the
asymmetry is reported, not repaired), and the strong variant differs from
(4) only in quantifying T universally.

The safety core safe(V, W, T) is implemented in two documented readings,
selectable per call:

- "cover" (default): every t in T lies below some v;w with v in V, w in W.
- "forall": every t in T lies below every such v;w.

The displayed inequality in the source reads "v;w <= t", which as a
complex-algebra statement is never satisfiable beyond trivial cases; both
readings above use the witnessing direction t <= v;w.  Reports record which
reading produced them.  The synchronizing index relation of the blow-up is
NOT checked here: certificates cover the complex blur only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import BudgetExceededError, InvalidParameterError, SpecError
from .report import ValidationReport, global_budget

SAFE_SEMANTICS = ("cover", "forall")


@dataclass
class BlurCertificate:
    structure: object
    J: list  # list of frozensets of atom indices
    l: int

    def __post_init__(self):
        if self.l < 2:
            raise InvalidParameterError("blur parameter l must be >= 2")
        self.J = [frozenset(w) for w in self.J]

    @classmethod
    def from_names(cls, s, families, l):
        J = []
        for fam in families:
            J.append(frozenset(s.index[a] for a in fam))
        return cls(s, J, l)

    def to_json(self):
        s = self.structure
        return {"J": [sorted(s.atoms[a] for a in w) for w in self.J],
                "l": self.l}

    @classmethod
    def load_json(cls, s, data):
        return cls.from_names(s, data["J"], int(data["l"]))


def _diversity(s):
    return [a for a in range(len(s.atoms)) if a not in s.identity]


def _comp_set(s, p, w_set):
    out = 0
    for w in w_set:
        out |= s.comp_mask(p, w)
    return out


def safe(s, V, W, T, semantics="cover"):
    if semantics == "forall":
        return all(s.consistent(v, w, t)
                   for v in V for w in W for t in T)
    if semantics == "cover":
        return all(any(s.consistent(v, w, t) for v in V for w in W)
                   for t in T)
    raise SpecError(f"unknown safe semantics {semantics!r}")


def _guard(count, budget):
    if count > budget:
        raise BudgetExceededError(
            f"blur condition scan needs {count} tuples (budget {budget})",
            {"tuples": count, "budget": budget})


def check_complex_blur(cert: BlurCertificate, semantics="cover",
                       budget=None) -> ValidationReport:
    """Verdicts for the five complex-blur conditions with minimal witnesses."""
    s = cert.structure
    J = cert.J
    l = cert.l
    budget = budget or global_budget()
    I = _diversity(s)
    I_mask = 0
    for a in I:
        I_mask |= 1 << a
    rep = ValidationReport(f"complex-{l}-blur({s.name})")
    rep.semantics = semantics

    witness = None
    for k, w_set in enumerate(J):
        if not w_set:
            witness = {"member": k, "reason": "empty"}
            break
        bad = sorted(w_set & s.identity)
        if bad:
            witness = {"member": k,
                       "identity_atoms": [s.atoms[a] for a in bad]}
            break
    rep.add("condition-1-members", witness is None, witness)

    union = frozenset().union(*J) if J else frozenset()
    ok = union == frozenset(I)
    missing = sorted(set(I) - union)
    rep.add("condition-2-cover", ok,
            None if ok else {"missing": [s.atoms[a] for a in missing]})

    witness = None
    for p in I:
        for k, w_set in enumerate(J):
            got = _comp_set(s, p, w_set)
            if I_mask & ~got:
                miss = (I_mask & ~got).bit_length() - 1
                witness = {"P": s.atoms[p],
                           "W": sorted(s.atoms[a] for a in w_set),
                           "missing": s.atoms[miss]}
                break
        if witness:
            break
    rep.add("condition-3-composition-cover", witness is None, witness)

    # (4): quantifier prefix as displayed (V_1 plays no role in the matrix)
    if J:
        _guard(len(J) ** (2 * (l - 1)), budget)
    witness = None
    pairs = list(itertools.product(range(len(J)), repeat=2))
    for choice in itertools.product(pairs, repeat=l - 1):
        # choice[i-2] = (V_i, W_i) for i = 2..l
        found = any(
            all(safe(s, J[vi], J[wi], J[t], semantics)
                for vi, wi in choice)
            for t in range(len(J)))
        if not found:
            witness = {
                "V": [sorted(s.atoms[a] for a in J[vi])
                      for vi, _ in choice],
                "W": [sorted(s.atoms[a] for a in J[wi])
                      for _, wi in choice],
            }
            break
    rep.add("condition-4-existential-safety", witness is None, witness)

    if I:
        _guard(len(I) ** (2 * (l - 1)) * max(len(J), 1), budget)
    witness = None
    for pq in itertools.product(itertools.product(I, repeat=2),
                                repeat=l - 1):
        inter = (1 << len(s.atoms)) - 1
        for p, q in pq:
            inter &= s.comp_mask(p, q)
        for k, w_set in enumerate(J):
            w_mask = 0
            for a in w_set:
                w_mask |= 1 << a
            if not (w_mask & inter):
                witness = {
                    "P": [s.atoms[p] for p, _ in pq],
                    "Q": [s.atoms[q] for _, q in pq],
                    "W": sorted(s.atoms[a] for a in w_set),
                }
                break
        if witness:
            break
    rep.add("condition-5-intersection", witness is None, witness)
    return rep


def check_strong_blur(cert: BlurCertificate, semantics="cover",
                      budget=None) -> ValidationReport:
    """Strong variant: the safety clause with T universally quantified.

    A strong blur is a complex blur whose safety holds for every T, so the
    report embeds the complex verdict; strong pass implies complex pass by
    construction and the implication is asserted.
    """
    s = cert.structure
    J = cert.J
    l = cert.l
    budget = budget or global_budget()
    complex_rep = check_complex_blur(cert, semantics=semantics,
                                     budget=budget)
    rep = ValidationReport(f"strong-{l}-blur({s.name})")
    rep.semantics = semantics
    for c in complex_rep.checks:
        rep.add(c.name, c.passed, c.witness)

    if J:
        _guard(len(J) ** (2 * (l - 1) + 1), budget)
    witness = None
    pairs = list(itertools.product(range(len(J)), repeat=2))
    for choice in itertools.product(pairs, repeat=l - 1):
        for t in range(len(J)):
            bad = next(((vi, wi) for vi, wi in choice
                        if not safe(s, J[vi], J[wi], J[t], semantics)),
                       None)
            if bad is not None:
                witness = {
                    "V": sorted(s.atoms[a] for a in J[bad[0]]),
                    "W": sorted(s.atoms[a] for a in J[bad[1]]),
                    "T": sorted(s.atoms[a] for a in J[t]),
                }
                break
        if witness:
            break
    rep.add("strong-safety", witness is None, witness)

    assert not (rep.ok and not complex_rep.ok), \
        "strong blur passed while complex blur failed"
    return rep


def partitions(items):
    """All set partitions, deterministically ordered."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def partition_candidates(s):
    """Default candidate generator: every set partition of the diversity
    atoms, larger parts first."""
    I = _diversity(s)
    seen = set()
    out = []
    for part in partitions(I):
        J = tuple(sorted((frozenset(p) for p in part),
                         key=lambda w: (len(w), sorted(w))))
        if J not in seen:
            seen.add(J)
            out.append([frozenset(p) for p in part])
    out.sort(key=lambda js: (len(js),
                             [sorted(w) for w in
                              sorted(js, key=lambda w: sorted(w))]))
    return out


@dataclass
class BlurSearchResult:
    certificate: BlurCertificate | None
    report: ValidationReport | None
    stats: dict = field(default_factory=dict)


def search_blur(s, l, candidates=None, semantics="cover",
                budget=None) -> BlurSearchResult:
    """First candidate family passing the strong check, else failure stats.

    ``candidates`` is any finite iterable of J families (lists of atom-index
    sets); the default enumerates all partitions of the diversity atoms.
    """
    budget = budget or global_budget()
    if candidates is None:
        candidates = partition_candidates(s)
    fail_counts = {}
    tried = 0
    for J in candidates:
        tried += 1
        if tried > budget:
            raise BudgetExceededError("blur search budget exceeded",
                                      {"tried": tried - 1})
        cert = BlurCertificate(s, list(J), l)
        rep = check_strong_blur(cert, semantics=semantics, budget=budget)
        if rep.ok:
            return BlurSearchResult(cert, rep,
                                    {"tried": tried, "semantics": semantics})
        first_fail = rep.failures()[0].name
        fail_counts[first_fail] = fail_counts.get(first_fail, 0) + 1
    return BlurSearchResult(None, None,
                            {"tried": tried, "semantics": semantics,
                             "failures": dict(sorted(fail_counts.items()))})
