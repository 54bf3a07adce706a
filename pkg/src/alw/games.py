"""Atomic games on cylindric atom structures and exact solvers.

Conventions (fixed here, documented in the README):

- Round 1: the opener picks any atom; the responder completes it to a
  network on the atom's diagonal-profile blocks.  Rounds 2..k: cylindrifier
  demands.
- A demand (x, i, a) is legal when the current label of x is T_i-related
  to a.  The responder may answer with the unchanged network when some node
  already witnesses the demand, or by filling a fresh node while the node
  budget m allows.  Networks never shrink and labels are never overwritten
  in the bounded/no-reuse games.
- In the reuse game the opener may additionally designate a node to be
  (re)used: all tuples through that node are relabelled, everything else is
  kept.  This follows the way reuse is exercised in descent strategies
  ("re-uses the node 2"): the opener names the recycled node.

Winner determination is exact: backward induction for bounded games,
greatest-fixpoint (safety) computation over canonically hashed positions for
the unbounded ones.  All results are schedule-independent; tie-breaking is
lexicographic throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BudgetExceededError, InvalidParameterError
from .networks import Network, atom_network, complete_labelling

EXISTS = "exists"
FORALL = "forall"


@dataclass(frozen=True)
class ForallMove:
    """A cylindrifier demand; ``target is None`` encodes the opening move."""

    target: tuple | None
    index: int
    atom: int
    node: int | None = None

    @classmethod
    def initial(cls, atom):
        return cls(None, -1, atom, None)

    def is_initial(self):
        return self.target is None

    def to_json(self, frame):
        if self.is_initial():
            return {"initial": frame.atoms[self.atom]}
        out = {"tuple": list(self.target), "index": self.index,
               "atom": frame.atoms[self.atom]}
        if self.node is not None:
            out["node"] = self.node
        return out


@dataclass
class GamePosition:
    """State between rounds: the current network plus game bookkeeping."""

    frame: object
    network: Network | None
    m: int
    rounds_left: int | None = None
    reuse: bool = False
    pending: ForallMove | None = None


def _witnessed(net: Network, mv: ForallMove):
    x, i, a = mv.target, mv.index, mv.atom
    for z in net.nodes:
        if net.labels[x[:i] + (z,) + x[i + 1:]] == a:
            return True
    return False


def legal_forall_moves(pos: GamePosition):
    """Exactly the legal demands at this position, in lexicographic order.

    At the empty initial position these are the opening atom choices.  In
    the reuse game, designated-node variants are included for every node
    not pinned by the demand tuple (plus the least fresh node, if any).
    """
    frame, net = pos.frame, pos.network
    if net is None:
        return [ForallMove.initial(a) for a in range(len(frame.atoms))]
    moves = []
    fresh = _fresh_node(net, pos.m)
    for x in sorted(net.labels):
        lab = net.labels[x]
        for i in range(frame.dim):
            mask = frame.nbr(i, lab)
            a = 0
            m = mask
            while m:
                if m & 1:
                    moves.append(ForallMove(x, i, a, None))
                    if pos.reuse:
                        pinned = {x[j] for j in range(frame.dim) if j != i}
                        for z in net.nodes:
                            if z not in pinned:
                                moves.append(ForallMove(x, i, a, z))
                        if fresh is not None:
                            moves.append(ForallMove(x, i, a, fresh))
                m >>= 1
                a += 1
    return moves


def _fresh_node(net: Network, m: int):
    used = set(net.nodes)
    for z in range(m):
        if z not in used:
            return z
    return None


def exists_responses(pos: GamePosition, mv: ForallMove, budget=None,
                     limit=None):
    """All legal responder networks, deterministically ordered.

    Empty result means the responder loses this round.
    """
    frame = pos.frame
    if mv.is_initial():
        return atom_network(frame, mv.atom, budget=budget, limit=limit)
    net = pos.network
    x, i, a = mv.target, mv.index, mv.atom
    if not frame.related(i, net.labels[x], a):
        raise InvalidParameterError("illegal demand: atom not T_i-related")
    out = []
    if mv.node is None:
        if _witnessed(net, mv):
            out.append(net)
        fresh = _fresh_node(net, pos.m)
        if fresh is not None:
            out.extend(_fill_node(pos, net, fresh, x, i, a, budget, limit))
        return out
    # designated node: only meaningful in the reuse game
    z = mv.node
    pinned = {x[j] for j in range(frame.dim) if j != i}
    if z in pinned:
        raise InvalidParameterError("designated node is pinned by the tuple")
    if z not in net.nodes and (z >= pos.m or _fresh_node(net, pos.m) is None):
        raise InvalidParameterError("designated node outside budget")
    return _fill_node(pos, net, z, x, i, a, budget, limit)


def _fill_node(pos, net: Network, z, x, i, a, budget, limit):
    frame = pos.frame
    nodes = tuple(sorted(set(net.nodes) | {z}))
    fixed = {t: lab for t, lab in net.labels.items() if z not in t}
    free = [t for t in itertools.product(nodes, repeat=frame.dim)
            if z in t]
    y = x[:i] + (z,) + x[i + 1:]
    sols = complete_labelling(frame, nodes, fixed, free, pre={y: a},
                              budget=budget, limit=limit)
    out = []
    for s in sols:
        labels = dict(fixed)
        labels.update(s)
        out.append(Network(frame, nodes, labels))
    return out


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.positions = 0

    def count(self):
        self.positions += 1
        if self.positions > self.limit:
            raise BudgetExceededError(
                "position budget exceeded",
                {"positions_explored": self.positions - 1,
                 "limit": self.limit})


@dataclass
class GameResult:
    winner: str
    strategy: object
    trace: list
    positions_explored: int

    def to_json(self, frame, game, m, rounds=None):
        return {
            "game": game,
            "nodes": m,
            "rounds": rounds,
            "winner": self.winner,
            "trace": self.trace,
            "positions_explored": self.positions_explored,
        }


class BoundedStrategy:
    """Positional strategy backed by the bounded solver's memo table."""

    def __init__(self, solver, winner):
        self._solver = solver
        self.winner = winner

    def forall_move(self, net, rounds_left):
        return self._solver.best_forall_move(net, rounds_left)

    def exists_response(self, pos, mv, rounds_left):
        return self._solver.best_exists_response(pos, mv, rounds_left)


class _BoundedSolver:
    def __init__(self, frame, m, k, budget_limit, prune_witnessed=True):
        if m < frame.dim:
            raise InvalidParameterError("need at least dim nodes")
        if k < 1:
            raise InvalidParameterError("need at least one round")
        self.frame = frame
        self.m = m
        self.k = k
        self.memo = {}
        self.budget = _Budget(budget_limit)
        self.prune = prune_witnessed

    def pos(self, net):
        return GamePosition(self.frame, net, self.m)

    def value(self, net, r):
        key = (net.canonical_key(), r)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.budget.count()
        self.memo[key] = self._compute(net, r)
        return self.memo[key]

    def _moves(self, net):
        moves = legal_forall_moves(self.pos(net))
        if self.prune:
            moves = [mv for mv in moves if not _witnessed(net, mv)]
        return moves

    def _compute(self, net, r):
        if r <= 0:
            return EXISTS
        moves = self._moves(net)
        if not moves:
            return EXISTS  # saturated: every demand is already witnessed
        for mv in moves:
            responses = exists_responses(self.pos(net), mv)
            if all(self.value(M, r - 1) == FORALL for M in responses):
                return FORALL
        return EXISTS

    def best_forall_move(self, net, r):
        for mv in self._moves(net):
            responses = exists_responses(self.pos(net), mv)
            if all(self.value(M, r - 1) == FORALL for M in responses):
                return mv
        return None

    def best_exists_response(self, pos, mv, r):
        responses = exists_responses(pos, mv)
        for M in responses:
            if self.value(M, r - 1) == EXISTS:
                return M
        return responses[0] if responses else None

    def solve(self):
        # Opening round: the opener picks an atom, the responder completes.
        winner = EXISTS
        win_atom = None
        for a in range(len(self.frame.atoms)):
            completions = atom_network(self.frame, a)
            if all(self.value(N, self.k - 1) == FORALL for N in completions):
                winner = FORALL
                win_atom = a
                break
        strategy = BoundedStrategy(self, winner)
        trace = []
        if winner == FORALL:
            trace = self._trace(win_atom)
        return GameResult(winner, strategy, trace,
                          self.budget.positions)

    def _trace(self, atom):
        """A forcing line: opener's winning moves versus maximally
        resistant responder play."""
        frame = self.frame
        trace = [{"round": 1, "move": ForallMove.initial(atom).to_json(frame)}]
        completions = atom_network(frame, atom)
        if not completions:
            trace[-1]["response"] = None
            return trace
        net = max(completions,
                  key=lambda N: self._resistance(N, self.k - 1))
        trace[-1]["response"] = net.to_json()
        r = self.k - 1
        rnd = 2
        while r > 0:
            mv = self.best_forall_move(net, r)
            if mv is None:
                break
            step = {"round": rnd, "move": mv.to_json(frame)}
            responses = exists_responses(self.pos(net), mv)
            if not responses:
                step["response"] = None
                trace.append(step)
                break
            net = max(responses, key=lambda M: self._resistance(M, r - 1))
            step["response"] = net.to_json()
            trace.append(step)
            r -= 1
            rnd += 1
        return trace

    def _resistance(self, net, r):
        """Rounds the responder can still survive from here (capped at r)."""
        if r <= 0 or self.value(net, r) == EXISTS:
            return r
        lo, hi = 0, r  # value is monotone in r
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.value(net, mid) == EXISTS:
                lo = mid
            else:
                hi = mid - 1
        return lo


def solve_bounded(frame, m, k, budget_limit=200_000,
                  prune_witnessed=True) -> GameResult:
    """Exact winner of the k-round, m-node atomic game, by backward induction."""
    return _BoundedSolver(frame, m, k, budget_limit, prune_witnessed).solve()


class SafetyStrategy:
    """Responder strategy staying inside the winning region W."""

    def __init__(self, frame, region, m, reuse):
        self.frame = frame
        self.region = region
        self.m = m
        self.reuse = reuse

    def exists_response(self, pos, mv):
        for M in exists_responses(pos, mv):
            if M.canonical_key() in self.region:
                return M
        return None


def _explore(frame, m, reuse, budget_limit):
    """Reachable canonical positions and their unwitnessed obligations."""
    budget = _Budget(budget_limit)
    reps = {}
    obligations = {}
    frontier = []
    openers = {}
    for a in range(len(frame.atoms)):
        comps = atom_network(frame, a)
        openers[a] = [N.canonical_key() for N in comps]
        for N in comps:
            key = N.canonical_key()
            if key not in reps:
                reps[key] = N
                budget.count()
                frontier.append(key)
    while frontier:
        key = frontier.pop()
        net = reps[key]
        pos = GamePosition(frame, net, m, reuse=reuse)
        obs = []
        for mv in legal_forall_moves(pos):
            if _witnessed(net, mv):
                continue
            resp_keys = []
            for M in exists_responses(pos, mv):
                mk = M.canonical_key()
                if mk not in reps:
                    reps[mk] = M
                    budget.count()
                    frontier.append(mk)
                resp_keys.append(mk)
            obs.append(resp_keys)
        obligations[key] = obs
    return reps, obligations, openers, budget


def _greatest_fixpoint(obligations):
    region = set(obligations)
    changed = True
    while changed:
        changed = False
        for key in sorted(region):
            for resp_keys in obligations[key]:
                if not any(rk in region for rk in resp_keys):
                    region.discard(key)
                    changed = True
                    break
    return region


def solve_omega_reuse(frame, m, budget_limit=200_000) -> GameResult:
    """Winner of the omega-rounded reuse game via the safety fixpoint.

    The responder wins iff, for every opening atom, some completion lies in
    the largest position set closed under "every demand has a response back
    into the set".
    """
    if m < frame.dim:
        raise InvalidParameterError("need at least dim nodes")
    reps, obligations, openers, budget = _explore(frame, m, True, budget_limit)
    region = _greatest_fixpoint(obligations)
    loser_atom = None
    for a, keys in openers.items():
        if not any(k in region for k in keys):
            loser_atom = a
            break
    winner = FORALL if loser_atom is not None else EXISTS
    strategy = SafetyStrategy(frame, region, m, True)
    trace = []
    if loser_atom is not None:
        trace = [{"round": 1,
                  "move": ForallMove.initial(loser_atom).to_json(frame)}]
    return GameResult(winner, strategy, trace, budget.positions)


def solve_omega_no_reuse(frame, m, budget_limit=200_000) -> GameResult:
    """Winner of the omega-rounded no-reuse game G^m_omega.

    Networks only grow here, so the reachable position space is finite and
    the safety fixpoint is exact.
    """
    if m < frame.dim:
        raise InvalidParameterError("need at least dim nodes")
    reps, obligations, openers, budget = _explore(frame, m, False,
                                                  budget_limit)
    region = _greatest_fixpoint(obligations)
    loser_atom = None
    for a, keys in openers.items():
        if not any(k in region for k in keys):
            loser_atom = a
            break
    winner = FORALL if loser_atom is not None else EXISTS
    strategy = SafetyStrategy(frame, region, m, False)
    trace = []
    if loser_atom is not None:
        trace = [{"round": 1,
                  "move": ForallMove.initial(loser_atom).to_json(frame)}]
    return GameResult(winner, strategy, trace, budget.positions)


# -- neat-embedding exclusion -----------------------------------------


@dataclass
class ExclusionReport:
    verdict: str  # "excluded" | "inconclusive"
    method: str
    detail: dict

    def to_json(self):
        return {"verdict": self.verdict, "method": self.method,
                "detail": self.detail}


def certify_not_SNr(frame, m, budget_limit=200_000, policy=None,
                    horizon=64) -> ExclusionReport:
    """One-directional neat-embedding exclusion test.

    "excluded" (Cm S is outside S Nr_n CA_m) is returned exactly when the
    opener provably wins the no-reuse omega game on m nodes: either the
    safety fixpoint says so, or a supplied scripted opener policy beats an
    exhaustive responder.  The converse direction is not decided, so the
    other outcome is "inconclusive".
    """
    if m <= frame.dim:
        raise InvalidParameterError("dilation dimension must exceed dim")
    if policy is not None:
        res = verify_scripted_strategy(frame, policy, m, reuse=False,
                                       horizon=horizon)
        if res.verdict == "forced-win":
            return ExclusionReport(
                "excluded", "scripted-forall-win",
                {"rounds": res.max_depth, "branches": res.branches})
        return ExclusionReport(
            "inconclusive", "scripted-forall-win",
            {"reason": res.verdict, "detail": res.detail})
    try:
        result = solve_omega_no_reuse(frame, m, budget_limit)
    except BudgetExceededError as e:
        return ExclusionReport("inconclusive", "safety-fixpoint",
                               {"reason": "budget-exceeded", **e.stats})
    if result.winner == FORALL:
        return ExclusionReport(
            "excluded", "safety-fixpoint",
            {"positions_explored": result.positions_explored,
             "trace": result.trace})
    return ExclusionReport(
        "inconclusive", "safety-fixpoint",
        {"reason": "responder-wins",
         "positions_explored": result.positions_explored})


# -- scripted opener policies ------------------------------------------


@dataclass
class ScriptResult:
    verdict: str  # "forced-win" | "refuted" | "refuted-at-horizon"
    max_depth: int
    branches: int
    lines: list
    detail: dict


def verify_scripted_strategy(frame, policy, m, reuse=False,
                             horizon=64) -> ScriptResult:
    """Play a deterministic opener policy against an exhaustive responder.

    forced-win iff every responder counter-line dies within the horizon.
    The policy must produce a legal move at every reachable position; an
    illegal or missing move refutes the script on the spot.
    """
    try:
        atom = policy.initial_atom(frame)
    except Exception as e:
        return ScriptResult("refuted", 0, 0, [],
                            {"reason": f"initial move failed: {e}"})
    completions = atom_network(frame, atom)
    branches = 0
    max_depth = 0
    lines = []

    def walk(net, rnd, prefix):
        nonlocal branches, max_depth
        max_depth = max(max_depth, rnd)
        if rnd > horizon:
            return ("refuted-at-horizon",
                    {"surviving_line": prefix, "round": rnd})
        pos = GamePosition(frame, net, m, reuse=reuse)
        mv = policy.move(frame, net, rnd, m)
        if mv is None:
            return ("refuted", {"reason": "policy passed", "round": rnd})
        if mv.is_initial():
            return ("refuted", {"reason": "unexpected opening move",
                                "round": rnd})
        try:
            if not frame.related(mv.index, net.labels[mv.target], mv.atom):
                raise InvalidParameterError("atom not T_i-related")
            if not reuse and mv.node is not None:
                raise InvalidParameterError(
                    "designated node in a no-reuse game")
            responses = exists_responses(pos, mv)
        except (InvalidParameterError, KeyError) as e:
            return ("refuted", {"reason": f"illegal move at round {rnd}: {e}",
                                "move": mv.to_json(frame)})
        if not responses:
            branches += 1
            lines.append(prefix + [(mv, None)])
            return None
        for M in responses:
            out = walk(M, rnd + 1, prefix + [(mv, M)])
            if out is not None:
                return out
        return None

    if not completions:
        return ScriptResult("forced-win", 1, 1, [], {"reason": "no opening"})
    for N in completions:
        out = walk(N, 2, [(ForallMove.initial(atom), N)])
        if out is not None:
            return ScriptResult(out[0], max_depth, branches, lines, out[1])
    return ScriptResult("forced-win", max_depth, branches, lines, {})


def play_match(frame, m, k, forall_policy, exists_policy, reuse=False):
    """Referee one play-through; returns the winner.

    Policies are callables: forall_policy(pos, moves) -> move,
    exists_policy(pos, mv, responses) -> network.
    """
    pos = GamePosition(frame, None, m, reuse=reuse)
    mv = forall_policy(pos, legal_forall_moves(pos))
    responses = exists_responses(pos, mv)
    if not responses:
        return FORALL
    net = exists_policy(pos, mv, responses)
    for _ in range(k - 1):
        pos = GamePosition(frame, net, m, reuse=reuse)
        moves = legal_forall_moves(pos)
        mv = forall_policy(pos, moves)
        if mv is None:
            return EXISTS
        responses = exists_responses(pos, mv)
        if not responses:
            return FORALL
        net = exists_policy(pos, mv, responses)
    return EXISTS
