"""Finite rainbow cylindric atom structures from green/red index data.

Atoms are equivalence classes of surjections from the dimension onto a
coloured graph; concretely each atom is stored as a kernel pattern (which
coordinates coincide) plus a coloured graph on the kernel blocks.  Edge
colours: apex greens g0^t (t a tint), upper greens g_1..g_{n-2}, whites
w_0..w_{n-2}, and reds r_{k,l} over unordered index pairs.  Green-free
(n-1)-node subsets carry a shade of yellow: a set of tints that must cover
the tints of all cones standing on that subset.

The forbidden-triangle rule table is data, not code: rules can be loaded
from JSON, and the mandatory core (all-green forbidden, red indices must
match) is validated before generation.  The Z/N truncation adds the
order-preserving constraint tying apex-green tints to red indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ca import CaAtomStructure
from .errors import InvalidParameterError, SpecError
from .games import ForallMove
from .ra import TriangleRule


def colour_str(c):
    kind = c[0]
    if kind == "g0":
        return f"g0^{c[1]}"
    if kind == "g":
        return f"g{c[1]}"
    if kind == "w":
        return f"w{c[1]}"
    if kind == "r":
        return f"r{c[1][0]}.{c[1][1]}"
    raise SpecError(f"unknown colour {c!r}")


def flip(c):
    """Colour of an edge read against its stored orientation.

    Reds carry an ordered index pair (the two directions are converse
    labels); all other colours are symmetric.
    """
    if c[0] == "r":
        return ("r", (c[1][1], c[1][0]))
    return c


def _term_matches(term, colour):
    kind = colour[0]
    if term == "green":
        return kind in ("g0", "g")
    if term == "g0":
        return kind == "g0"
    if term == "gi":
        return kind == "g"
    if term == "white":
        return kind == "w"
    if term == "w0":
        return colour == ("w", 0)
    if term == "red":
        return kind == "r"
    raise SpecError(f"unknown pattern term {term!r}")


def _op_function(i, p, j, q):
    """{(i,p),(j,q)} is an order-preserving partial function."""
    if i == j:
        return p == q
    if i < j:
        return p < q
    return q < p


def triangle_allowed(rules, c1, c2, c3):
    """c1 read along x->y, c2 along y->z, c3 along x->z.

    Directed data matters for the red rules: red matching requires one
    assignment of red indices to the three corners reproducing all three
    ordered labels, which is what forces embeddings of red cliques.
    """
    tri = (c1, c2, c3)
    for rule in rules:
        if rule.constraint == "red-indices-match":
            if all(c[0] == "r" for c in tri):
                (a, b), (c, d), (e, f) = c1[1], c2[1], c3[1]
                if not (b == c and a == e and d == f):
                    return False
            continue
        if rule.constraint == "order-preserving":
            reds = [k for k, c in enumerate(tri) if c[0] == "r"]
            if len(reds) == 1 and all(tri[k][0] == "g0" for k in range(3)
                                      if k != reds[0]):
                slot = reds[0]
                p, q = tri[slot][1]
                if slot == 0:    # red x->y; greens (z,x), (z,y)
                    ti, tj = c3[1], c2[1]
                elif slot == 1:  # red y->z; greens (x,y), (x,z)
                    ti, tj = c1[1], c3[1]
                else:            # red x->z; greens (y,x), (y,z)
                    ti, tj = c1[1], c2[1]
                if not _op_function(ti, p, tj, q):
                    return False
            continue
        for arr in set(itertools.permutations(range(3))):
            cols = tuple(tri[p] for p in arr)
            if not all(_term_matches(t, c) for t, c in zip(rule.pattern,
                                                           cols)):
                continue
            if rule.constraint == "none":
                return False
            if rule.constraint == "matching-white":
                gis = [c[1] for c in cols[:2]]
                if gis[0] == gis[1] and cols[2] == ("w", gis[0]):
                    return False
            elif rule.constraint not in ("red-indices-match",
                                         "order-preserving"):
                raise SpecError(f"unknown constraint {rule.constraint!r}")
    return True


def default_rules(n, order_preserving=False):
    rules = [
        TriangleRule(("green", "green", "green"), "none"),
        TriangleRule(("g0", "g0", "w0"), "none"),
        TriangleRule(("gi", "gi", "white"), "matching-white"),
        TriangleRule(("red", "red", "red"), "red-indices-match"),
    ]
    if order_preserving:
        rules.append(TriangleRule(("g0", "g0", "red"), "order-preserving"))
    return rules


def _has_mandatory_rules(rules):
    has_green = any(r.pattern == ("green", "green", "green")
                    and r.constraint == "none" for r in rules)
    has_red = any(r.pattern == ("red", "red", "red")
                  and r.constraint == "red-indices-match" for r in rules)
    return has_green, has_red


@dataclass
class RainbowSpec:
    """Parameters of one finite rainbow frame."""

    n: int
    green_tints: tuple
    red_pairs: tuple
    yellow_shades: tuple = ()
    rules: tuple = ()
    name: str = "rainbow"

    def __post_init__(self):
        if self.n < 3:
            raise InvalidParameterError("rainbow dimension must be >= 3")
        if not self.green_tints:
            raise SpecError("empty green tint range")
        if not self.rules:
            self.rules = tuple(default_rules(self.n))
        if not self.yellow_shades:
            self.yellow_shades = (frozenset(self.green_tints),)
        self.yellow_shades = tuple(frozenset(s) for s in self.yellow_shades)
        has_green, has_red = _has_mandatory_rules(self.rules)
        if not has_green:
            raise SpecError("rule table must forbid all-green triangles")
        if not has_red:
            raise SpecError("rule table must enforce red index matching")

    def colours(self):
        """Edge palette; reds appear in both orientations (converse pair)."""
        out = [("g0", t) for t in sorted(self.green_tints)]
        out += [("g", i) for i in range(1, self.n - 1)]
        out += [("w", i) for i in range(self.n - 1)]
        directed = set()
        for k, l in self.red_pairs:
            directed.add((k, l))
            directed.add((l, k))
        out += [("r", p) for p in sorted(directed)]
        return out

    def is_green(self, c):
        return c[0] in ("g0", "g")

    def rules_json(self):
        return [r.to_json() for r in self.rules]

    @classmethod
    def ca_n_plus_one_n(cls, n):
        """The finite rainbow frame on greens n+1 and reds n (CA_{n+1,n})."""
        return cls(
            n=n,
            green_tints=tuple(range(1, n + 2)),
            red_pairs=tuple(itertools.combinations(range(n), 2)),
            name=f"CA_{n + 1},{n}",
        )

    @classmethod
    def zn_truncation(cls, g_min, red_max, n=3):
        """Finite cut of the Z/N rainbow with the order-preserving red rule."""
        if g_min > 0:
            raise InvalidParameterError("green tints must include 0 (g_min <= 0)")
        if red_max < 1:
            raise InvalidParameterError("red index range is empty")
        return cls(
            n=n,
            green_tints=tuple(range(g_min, 1)),
            red_pairs=tuple(itertools.combinations(range(red_max), 2)),
            rules=tuple(default_rules(n, order_preserving=True)),
            name=f"ZN(g_min={g_min},red_max={red_max})",
        )


@dataclass(frozen=True)
class ColouredGraph:
    """Complete coloured graph on nodes 0..q-1 with optional yellow labels.

    Edges are stored for u < v with the colour read along u -> v; reading
    the other way flips red index pairs.
    """

    q: int
    edges: tuple  # sorted tuple of ((u, v), colour), u < v
    yellows: tuple  # sorted tuple of ((nodes...), sorted tint tuple)

    def edge(self, u, v):
        key = (u, v) if u < v else (v, u)
        for e, c in self.edges:
            if e == key:
                return c if key == (u, v) else flip(c)
        raise KeyError((u, v))


def _cone_tints(spec, q, edge_of, base):
    """Tints of all cones standing on the (n-1)-set ``base``."""
    tints = set()
    others = [z for z in range(q) if z not in base]
    for z in others:
        for arrangement in itertools.permutations(base):
            c0 = edge_of(arrangement[0], z)
            if c0[0] != "g0":
                continue
            if all(edge_of(arrangement[j], z) == ("g", j)
                   for j in range(1, spec.n - 1)):
                tints.add(c0[1])
    return tints


def _graphs_on(spec, q):
    """All legal coloured graphs on q nodes, deterministically ordered."""
    palette = spec.colours()
    pairs = list(itertools.combinations(range(q), 2))
    track_yellow = len(spec.yellow_shades) > 1
    out = []

    def edge_lookup(assign):
        def edge_of(u, v):
            if u < v:
                return assign[(u, v)]
            return flip(assign[(v, u)])
        return edge_of

    def backtrack(idx, assign):
        if idx == len(pairs):
            edge_of = edge_lookup(assign)
            yellow_sets = []
            for base in itertools.combinations(range(q), spec.n - 1):
                if any(spec.is_green(edge_of(u, v))
                       for u, v in itertools.combinations(base, 2)):
                    continue
                need = _cone_tints(spec, q, edge_of, base)
                shades = [s for s in spec.yellow_shades if need <= s]
                if not shades:
                    return
                yellow_sets.append((base, shades))
            edges = tuple(sorted(assign.items()))
            if not track_yellow:
                out.append(ColouredGraph(q, edges, ()))
                return
            for combo in itertools.product(
                    *(shades for _, shades in yellow_sets)):
                yel = tuple(sorted(
                    (base, tuple(sorted(shade)))
                    for (base, _), shade in zip(yellow_sets, combo)))
                out.append(ColouredGraph(q, edges, yel))
            return
        u, v = pairs[idx]
        edge_of = edge_lookup(assign)
        for c in palette:
            ok = True
            for w in range(q):
                if w == u or w == v:
                    continue
                pair_uw = (u, w) if u < w else (w, u)
                pair_vw = (v, w) if v < w else (w, v)
                if pair_uw in assign and pair_vw in assign:
                    # directed cycle u -> v -> w, u -> w
                    if not triangle_allowed(spec.rules, c,
                                            edge_of(v, w),
                                            edge_of(u, w)):
                        ok = False
                        break
            if ok:
                assign[(u, v)] = c
                backtrack(idx + 1, assign)
                del assign[(u, v)]

    backtrack(0, {})
    return out


def _atom_name(pattern, graph):
    parts = ["k" + "".join(str(b) for b in pattern)]
    for (u, v), c in graph.edges:
        parts.append(f"{u}{v}:{colour_str(c)}")
    for base, shade in graph.yellows:
        parts.append("y" + "".join(str(b) for b in base) + ":"
                     + ",".join(str(t) for t in shade))
    return "|".join(parts)


def _restrict(pattern, graph, skip):
    """Induced labelled structure on the coordinates off ``skip``.

    Blocks are renumbered by first occurrence; edges whose endpoints swap
    order under the renumbering have their colour flipped.
    """
    coords = [c for c in range(len(pattern)) if c != skip]
    hit = []
    for c in coords:
        if pattern[c] not in hit:
            hit.append(pattern[c])
    remap = {b: k for k, b in enumerate(hit)}
    sub_edges = []
    for (u, v), c in graph.edges:
        if u not in remap or v not in remap:
            continue
        nu, nv = remap[u], remap[v]
        if nu < nv:
            sub_edges.append(((nu, nv), c))
        else:
            sub_edges.append(((nv, nu), flip(c)))
    sub_pattern = tuple(remap[pattern[c]] for c in coords)
    sub_yellows = tuple(sorted(
        (tuple(sorted(remap[b] for b in base)), shade)
        for base, shade in graph.yellows
        if all(b in remap for b in base)))
    return (sub_pattern, tuple(sorted(sub_edges)), sub_yellows)


def _kernel_patterns(n, q):
    """Surjective block patterns n -> q, blocks ordered by first occurrence."""
    out = []
    for assign in itertools.product(range(q), repeat=n):
        if max(assign) + 1 != q:
            continue
        seen = {}
        pat = []
        for b in assign:
            if b not in seen:
                seen[b] = len(seen)
            pat.append(seen[b])
        pat = tuple(pat)
        if pat == assign and pat not in out:
            out.append(pat)
    return out


def gen_rainbow_frame(spec: RainbowSpec) -> CaAtomStructure:
    """Atoms = rule-respecting coloured graphs on <= n nodes, carried by all
    kernel patterns of the dimension; accessibility = agreement off a
    coordinate; diagonals from the kernel."""
    n = spec.n
    graphs = {q: _graphs_on(spec, q) for q in range(1, n + 1)}
    atoms = []
    info = []
    for q in range(1, n + 1):
        for pattern in _kernel_patterns(n, q):
            for graph in graphs[q]:
                atoms.append(_atom_name(pattern, graph))
                info.append((pattern, graph))
    index_of = {a: i for i, a in enumerate(atoms)}
    data = dict(zip(atoms, info))

    def key(i):
        def f(name):
            pattern, graph = data[name]
            return _restrict(pattern, graph, i)
        return f

    diag = {}
    for i in range(n):
        for j in range(i + 1, n):
            diag[(i, j)] = [a for a in atoms
                            if data[a][0][i] == data[a][0][j]]
    frame = CaAtomStructure.from_keys(
        n, atoms, [key(i) for i in range(n)], diag, name=spec.name)
    frame.meta = {
        "rainbow_spec": spec,
        "atom_info": {index_of[a]: data[a] for a in atoms},
        "atom_key": {data[a]: index_of[a] for a in atoms},
    }
    return frame


def gen_ca_n_plus_one_n(n) -> CaAtomStructure:
    return gen_rainbow_frame(RainbowSpec.ca_n_plus_one_n(n))


def gen_zn_truncation(g_min, red_max, n=3) -> CaAtomStructure:
    return gen_rainbow_frame(RainbowSpec.zn_truncation(g_min, red_max, n=n))


# -- scripted opener policies -------------------------------------------


def cone_atom(frame, tint):
    """The cone graph with a fresh-tinted apex over the standard base."""
    spec = frame.meta["rainbow_spec"]
    n = spec.n
    edges = {}
    for i, j in itertools.combinations(range(n - 1), 2):
        edges[(i, j)] = ("w", 0)
    for j in range(1, n - 1):
        edges[(j, n - 1)] = ("g", j)
    edges[(0, n - 1)] = ("g0", tint)
    yellows = ()
    if len(spec.yellow_shades) > 1:
        shade = max(spec.yellow_shades, key=lambda s: (len(s), sorted(s)))
        if tint not in shade:
            raise SpecError("no yellow shade covers the cone tint")
        yellows = ((tuple(range(n - 1)), tuple(sorted(shade))),)
    graph = ColouredGraph(n, tuple(sorted(edges.items())), yellows)
    pattern = tuple(range(n))
    idx = frame.meta["atom_key"].get((pattern, graph))
    if idx is None:
        raise SpecError(f"cone atom with tint {tint} missing from frame")
    return idx


class ConeBombardment:
    """Deterministic opener policy: cones with the listed tints over the
    fixed base 0..n-2, one fresh apex per round; when fresh nodes run out
    (and ``designate_reuse`` is set) the oldest apex is recycled with the
    last tint."""

    def __init__(self, tints, designate_reuse=False):
        if not tints:
            raise InvalidParameterError("need at least one tint")
        self.tints = list(tints)
        self.designate_reuse = designate_reuse

    def initial_atom(self, frame):
        return cone_atom(frame, self.tints[0])

    def move(self, frame, net, rnd, m):
        spec = frame.meta["rainbow_spec"]
        n = spec.n
        idx = rnd - 1
        apexes = [z for z in range(n - 1, m)]
        fresh = next((z for z in apexes if z not in net.nodes), None)
        if fresh is not None:
            if idx >= len(self.tints):
                return None
            tint = self.tints[idx]
            u = max(z for z in net.nodes if z >= n - 1)
            target = tuple(range(n - 1)) + (u,)
            return ForallMove(target, n - 1, cone_atom(frame, tint), None)
        if not self.designate_reuse:
            return None
        tint = self.tints[min(idx, len(self.tints) - 1)]
        extra = idx - (m - n + 1)
        recycled = (n - 1) + (extra % (m - n + 1))
        u = max(z for z in net.nodes if z >= n - 1 and z != recycled)
        target = tuple(range(n - 1)) + (u,)
        return ForallMove(target, n - 1, cone_atom(frame, tint), recycled)
