"""Basic matrices, Mat_n enumeration, basis checks, and induced frames.

An n-dimensional basic matrix over a relation algebra labels an n x n grid
with atoms so that the diagonal carries identity atoms and every triangle
composes: f(x,y) lies below f(x,z);f(z,y).  The set of all such matrices,
Mat_n, is checked for the two cylindric-basis properties (triangle
witnessing and amalgamation); when they hold, the matrices form the atoms
of an n-dimensional cylindric frame.

Width-m relational bases are decided two independent ways (a survivor
fixpoint over total m-node labelings and a lazy safety game over partial
networks); the paths must agree and tests enforce that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ca import CaAtomStructure
from .errors import BudgetExceededError, InvalidParameterError, PreconditionError
from .report import ValidationReport, global_budget


def matrix_entries(mat, n):
    return [[mat[x * n + y] for y in range(n)] for x in range(n)]


def matrix_name(s, mat, n):
    return "|".join(
        ",".join(s.atoms[mat[x * n + y]] for y in range(n)) for x in range(n))


def matrix_grid(s, mat, n):
    """n x n atom-name grid, one row per line."""
    width = max(len(a) for a in s.atoms)
    return "\n".join(
        " ".join(s.atoms[mat[x * n + y]].ljust(width) for y in range(n))
        for x in range(n))


def is_basic_matrix(s, mat, n):
    for x in range(n):
        if mat[x * n + x] not in s.identity:
            return False
    for x in range(n):
        for y in range(n):
            for z in range(n):
                if not s.consistent(mat[x * n + z], mat[z * n + y],
                                    mat[x * n + y]):
                    return False
    return True


@dataclass
class MatrixFamily:
    """A set of basic matrices over one structure, in canonical order."""

    structure: object
    dim: int
    matrices: list = field(default_factory=list)

    def __len__(self):
        return len(self.matrices)

    def __iter__(self):
        return iter(self.matrices)

    def key_off(self, mat, skip):
        """Entries avoiding every node in ``skip`` (row-major order)."""
        n = self.dim
        return tuple(mat[x * n + y] for x in range(n) for y in range(n)
                     if x not in skip and y not in skip)


def enumerate_mat(s, n, budget=None) -> MatrixFamily:
    """All n-dimensional basic matrices, in deterministic row-major order.

    Off-diagonal lower entries are the converses of the upper ones (forced
    by the identity and triangle laws on normalized structures); the
    enumeration ranges over diagonals and upper triangles and re-checks all
    triangle laws.
    """
    if n < 2:
        raise InvalidParameterError("matrix dimension must be >= 2")
    budget = budget or global_budget()
    ids = sorted(s.identity)
    atoms = range(len(s.atoms))
    upper = [(x, y) for x in range(n) for y in range(x + 1, n)]
    count = len(ids) ** n * len(s.atoms) ** len(upper)
    if count > budget:
        raise BudgetExceededError(
            f"Mat_{n} enumeration needs {count} candidates (budget {budget})",
            {"candidates": count, "budget": budget})
    out = []
    for diag in itertools.product(ids, repeat=n):
        for labels in itertools.product(atoms, repeat=len(upper)):
            mat = [0] * (n * n)
            for x in range(n):
                mat[x * n + x] = diag[x]
            for (x, y), a in zip(upper, labels):
                mat[x * n + y] = a
                mat[y * n + x] = s.conv[a]
            if is_basic_matrix(s, mat, n):
                out.append(tuple(mat))
    return MatrixFamily(s, n, out)


def check_cylindric_basis(fam: MatrixFamily) -> ValidationReport:
    """Triangle witnessing plus pairwise amalgamation, with minimal witnesses."""
    s = fam.structure
    n = fam.dim
    rep = ValidationReport(f"cylindric-basis(dim={n})")

    realized = {(m[0 * n + 1], m[0 * n + 2], m[2 * n + 1]) for m in fam}
    witness = None
    na = len(s.atoms)
    for b in range(na):
        for c in range(na):
            for a in range(na):
                if s.consistent(b, c, a) and (a, b, c) not in realized:
                    witness = {"a": s.atoms[a], "b": s.atoms[b],
                               "c": s.atoms[c]}
                    break
            if witness:
                break
        if witness:
            break
    rep.add("triangle-witness", witness is None, witness)

    # index matrices by their off-x entries for fast amalgam lookups
    by_off = {}
    for x in range(n):
        d = {}
        for m in fam:
            d.setdefault(fam.key_off(m, {x}), []).append(m)
        by_off[x] = d

    witness = None
    for x in range(n):
        for y in range(n):
            buckets = {}
            for m in fam:
                buckets.setdefault(fam.key_off(m, {x, y}), []).append(m)
            for bucket in buckets.values():
                for f, g in itertools.product(bucket, repeat=2):
                    gy = fam.key_off(g, {y})
                    found = any(fam.key_off(h, {y}) == gy
                                for h in by_off[x].get(fam.key_off(f, {x}),
                                                       ()))
                    if not found:
                        witness = {"x": x, "y": y,
                                   "f": matrix_name(s, f, n),
                                   "g": matrix_name(s, g, n)}
                        break
                if witness:
                    break
            if witness:
                break
        if witness:
            break
    rep.add("amalgamation", witness is None, witness)
    return rep


def frame_from_basis(fam: MatrixFamily) -> CaAtomStructure:
    """The cylindric frame whose atoms are the basis matrices.

    T_i is agreement off node i; the (i,j) diagonal collects matrices with
    an identity atom at entry (i,j).
    """
    check = check_cylindric_basis(fam)
    if not check.ok:
        raise PreconditionError("family is not a cylindric basis",
                                witness=[c.to_json() for c in
                                         check.failures()])
    s = fam.structure
    n = fam.dim
    names = {matrix_name(s, m, n): m for m in fam}

    def key(i):
        return lambda name: fam.key_off(names[name], {i})

    diag = {}
    for i in range(n):
        for j in range(i + 1, n):
            diag[(i, j)] = [nm for nm, m in names.items()
                            if m[i * n + j] in s.identity]
    frame = CaAtomStructure.from_keys(
        n, sorted(names), [key(i) for i in range(n)], diag,
        name=f"Mat_{n}({s.name})")
    frame.provenance = {"source": s.name, "kind": "cylindric-basis-frame"}
    return frame


# -- relational bases ---------------------------------------------------


def _total_networks(s, m, budget):
    """All total m-node edge labelings satisfying the basic-matrix laws."""
    fam = enumerate_mat(s, m, budget=budget)
    return list(fam.matrices)


def _relabelings(s, net, m, z, x, y, d, e):
    """Total networks agreeing with net off z and witnessing (d,e) at z."""
    base = list(net)
    base[x * m + z] = d
    base[z * m + x] = s.conv[d]
    base[z * m + y] = e
    base[y * m + z] = s.conv[e]
    others = [w for w in range(m) if w not in (x, y, z)]
    out = []
    ids = sorted(s.identity)
    for diag_z in ids:
        base[z * m + z] = diag_z
        for labels in itertools.product(range(len(s.atoms)),
                                        repeat=len(others)):
            cand = list(base)
            for w, a in zip(others, labels):
                cand[z * m + w] = s.conv[a]
                cand[w * m + z] = a
            if is_basic_matrix(s, cand, m):
                out.append(tuple(cand))
    return out


@dataclass
class BasisResult:
    exists: bool
    width: int
    basis: list | None
    certificate: dict | None
    stats: dict

    def to_json(self, s):
        body = {"exists": self.exists, "width": self.width,
                "stats": self.stats}
        if self.basis is not None:
            body["basis_size"] = len(self.basis)
        if self.certificate is not None:
            body["certificate"] = self.certificate
        return body


def relational_basis_exists(s, m, budget=None,
                            method="fixpoint") -> BasisResult:
    """Decide existence of an m-dimensional relational basis over s.

    fixpoint: greatest fixpoint over all total m-node labelings under the
    witness obligation "for every consistent split of every edge and every
    named spare node there is a surviving relabelling at that node".
    game: the same safety condition computed lazily from single-edge seed
    networks.  Both must agree; "yes" returns the surviving family, "no"
    a dead demand.
    """
    if m < 3:
        raise InvalidParameterError("basis width must be >= 3")
    budget = budget or global_budget()
    if method == "game":
        return _basis_game(s, m, budget)
    nets = _total_networks(s, m, budget)
    alive = set(nets)
    na = len(s.atoms)
    splits = [(d, e) for d in range(na) for e in range(na)]
    removed_example = None
    changed = True
    sweeps = 0
    while changed:
        changed = False
        sweeps += 1
        for net in sorted(alive):
            ok = True
            for x in range(m):
                for y in range(m):
                    lab = net[x * m + y]
                    for d, e in splits:
                        if not s.consistent(d, e, lab):
                            continue
                        for z in range(m):
                            if z in (x, y):
                                continue
                            if net[x * m + z] == d and net[z * m + y] == e:
                                continue  # net itself witnesses at z
                            if any(cand in alive for cand in
                                   _relabelings(s, net, m, z, x, y, d, e)):
                                continue
                            ok = False
                            if removed_example is None:
                                removed_example = {
                                    "network": [s.atoms[a] for a in net],
                                    "demand": {"x": x, "y": y, "z": z,
                                               "d": s.atoms[d],
                                               "e": s.atoms[e]},
                                }
                            break
                        if not ok:
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                alive.discard(net)
                changed = True
    stats = {"pool": len(nets), "survivors": len(alive), "sweeps": sweeps}
    missing = None
    for a in range(na):
        if not any(net[0 * m + 1] == a for net in alive):
            missing = a
            break
    if alive and missing is None:
        return BasisResult(True, m, sorted(alive), None, stats)
    cert = {"missing_atom": None if missing is None else s.atoms[missing],
            "last_removed": removed_example}
    return BasisResult(False, m, None, cert, stats)


def _basis_game(s, m, budget):
    """Safety-game formulation over partial networks with <= m nodes.

    The opener names the spare slot z together with the split (d, e); the
    responder relabels exactly that slot (growing the network when z is the
    fresh slot).  Demands already witnessed in place are skipped.
    """
    # partial network: (q, entries) with q nodes, entries row-major q x q
    def demands_partial(q, net):
        na = len(s.atoms)
        out = []
        slots = list(range(q)) + ([q] if q < m else [])
        for x in range(q):
            for y in range(q):
                lab = net[x * q + y]
                for d in range(na):
                    for e in range(na):
                        if not s.consistent(d, e, lab):
                            continue
                        for z in slots:
                            if z in (x, y):
                                continue
                            if (z < q and net[x * q + z] == d
                                    and net[z * q + y] == e):
                                continue
                            out.append((x, y, z, d, e))
        return out

    def responses(q, net, x, y, z, d, e):
        out = []
        if z == q:
            nq = q + 1
            base = [0] * (nq * nq)
            for u in range(q):
                for v in range(q):
                    base[u * nq + v] = net[u * q + v]
        else:
            nq = q
            base = list(net)
        base[x * nq + z] = d
        base[z * nq + x] = s.conv[d]
        base[z * nq + y] = e
        base[y * nq + z] = s.conv[e]
        others = [w for w in range(nq) if w not in (x, y, z)]
        for diag_z in sorted(s.identity):
            base[z * nq + z] = diag_z
            for labels in itertools.product(range(len(s.atoms)),
                                            repeat=len(others)):
                cand = list(base)
                for w, a in zip(others, labels):
                    cand[z * nq + w] = s.conv[a]
                    cand[w * nq + z] = a
                if is_basic_matrix(s, cand, nq):
                    out.append((nq, tuple(cand)))
        return out

    seeds = []
    fam2 = enumerate_mat(s, 2, budget=budget)
    for mat in fam2:
        seeds.append((2, mat))
    reps = {}
    frontier = list(seeds)
    obligations = {}
    explored = 0
    while frontier:
        state = frontier.pop()
        if state in reps:
            continue
        reps[state] = True
        explored += 1
        if explored > budget:
            raise BudgetExceededError("basis game exploration budget",
                                      {"explored": explored})
        q, net = state
        obs = []
        for (x, y, z, d, e) in demands_partial(q, net):
            resp = responses(q, net, x, y, z, d, e)
            obs.append(resp)
            frontier.extend(resp)
        obligations[state] = obs
    region = set(obligations)
    changed = True
    while changed:
        changed = False
        for state in sorted(region):
            for resp in obligations[state]:
                if not any(r in region for r in resp):
                    region.discard(state)
                    changed = True
                    break
    stats = {"explored": explored, "region": len(region)}
    ok = all(any(st in region for st in seeds if st[1][0 * 2 + 1] == a)
             for a in range(len(s.atoms)))
    if ok:
        return BasisResult(True, m, None, None, stats)
    missing = next(a for a in range(len(s.atoms))
                   if not any(st in region for st in seeds
                              if st[1][0 * 2 + 1] == a))
    return BasisResult(False, m, None,
                       {"missing_atom": s.atoms[missing]}, stats)
