"""Core model types: concurrent stochastic games, coalition reduction,
end-component analysis, and MDP extraction.

A game has players 1..n with pairwise-disjoint action alphabets plus a shared
idle symbol.  At each state a player's available actions are the enabled
actions belonging to their alphabet, or idle if they have none; the defined
joint actions are exactly the product of the per-player availability sets.
All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    EmptyCoalition,
    FullCoalition,
    IncompleteStrategy,
    ModelError,
    UnknownPlayer,
)

IDLE = "-"

__all__ = [
    "IDLE",
    "Csg",
    "RewardStructure",
    "CoalitionGame",
    "EndComponent",
    "Mdp",
    "MemoryStrategy",
    "AssumptionReport",
    "coalition_game",
    "enumerate_mecs",
    "check_assumption",
    "joint_mdp",
    "induce_mdp",
]


@dataclass(frozen=True)
class RewardStructure:
    """Nonnegative action rewards r_A(s, alpha) and state rewards r_S(s)."""

    action_rewards: dict = field(default_factory=dict)
    state_rewards: dict = field(default_factory=dict)

    def action(self, state, joint):
        return self.action_rewards.get((state, joint), Fraction(0))

    def state(self, state):
        return self.state_rewards.get(state, Fraction(0))


@dataclass(frozen=True)
class Csg:
    """A concurrent stochastic game over named players and states.

    `trans[s][alpha]` maps each defined joint action tuple `alpha` (one entry
    per player, idle written as IDLE) to a probability distribution
    {successor: probability}.  Use `Csg.create` to validate and normalise.
    """

    players: tuple
    alphabets: dict
    states: tuple
    initial: tuple
    trans: dict
    labels: dict
    rewards: dict = field(default_factory=dict)

    @classmethod
    def create(cls, players, alphabets, states, initial, trans, labels=None,
               rewards=None):
        players = tuple(players)
        if not players or len(set(players)) != len(players):
            raise ModelError("players must be a nonempty list of distinct names")
        alphabets = {p: frozenset(alphabets.get(p, ())) for p in players}
        seen_actions = set()
        for p in players:
            if IDLE in alphabets[p]:
                raise ModelError(f"idle symbol {IDLE!r} may not appear in an alphabet")
            if seen_actions & alphabets[p]:
                raise ModelError("player alphabets must be pairwise disjoint")
            seen_actions |= alphabets[p]

        states = tuple(states)
        state_set = set(states)
        if not states or len(state_set) != len(states):
            raise ModelError("states must be a nonempty list of distinct names")
        initial = tuple(initial)
        if not initial or not set(initial) <= state_set:
            raise ModelError("initial states must be a nonempty subset of states")

        trans = {s: dict(trans.get(s, {})) for s in states}
        for s in states:
            if not trans[s]:
                # idle-deadlock normalisation: an all-idle self-loop
                trans[s] = {(IDLE,) * len(players): {s: Fraction(1)}}
            per_player = [set() for _ in players]
            for alpha, dist in trans[s].items():
                if len(alpha) != len(players):
                    raise ModelError(f"joint action {alpha} has wrong arity at {s}")
                for i, a in enumerate(alpha):
                    if a != IDLE and a not in alphabets[players[i]]:
                        raise ModelError(
                            f"action {a!r} not in alphabet of {players[i]} at {s}")
                    per_player[i].add(a)
                dist = {t: Fraction(p) if not isinstance(p, float) else p
                        for t, p in dist.items()}
                trans[s][alpha] = dist
                if any(p <= 0 for p in dist.values()):
                    raise ModelError(f"non-positive probability at {s}, {alpha}")
                if sum(dist.values()) != 1:
                    raise ModelError(f"distribution at {s}, {alpha} does not sum to 1")
                if not set(dist) <= state_set:
                    raise ModelError(f"unknown successor at {s}, {alpha}")
            for i, avail in enumerate(per_player):
                if IDLE in avail and len(avail) > 1:
                    raise ModelError(
                        f"player {players[i]} both idles and acts at {s}")
            expected = 1
            for avail in per_player:
                expected *= len(avail)
            if len(trans[s]) != expected:
                raise ModelError(
                    f"joint actions at {s} are not a full product of "
                    f"per-player availability sets")

        labels = {s: frozenset(labels.get(s, ())) if labels else frozenset()
                  for s in states}

        reward_structs = {}
        for name, rs in (rewards or {}).items():
            action_rewards, state_rewards = {}, {}
            for (s, alpha), val in rs.action_rewards.items():
                val = Fraction(val) if not isinstance(val, float) else val
                if val < 0:
                    raise ModelError(f"negative action reward in {name!r}")
                if s not in state_set or alpha not in trans[s]:
                    raise ModelError(f"reward {name!r} on undefined action {s}, {alpha}")
                if val != 0:
                    action_rewards[(s, alpha)] = val
            for s, val in rs.state_rewards.items():
                val = Fraction(val) if not isinstance(val, float) else val
                if val < 0:
                    raise ModelError(f"negative state reward in {name!r}")
                if s not in state_set:
                    raise ModelError(f"reward {name!r} on unknown state {s}")
                if val != 0:
                    state_rewards[s] = val
            reward_structs[name] = RewardStructure(action_rewards, state_rewards)

        # prune unreachable states, preserving declaration order
        reached = set(initial)
        frontier = list(initial)
        while frontier:
            s = frontier.pop()
            for dist in trans[s].values():
                for t in dist:
                    if t not in reached:
                        reached.add(t)
                        frontier.append(t)
        if reached != state_set:
            states = tuple(s for s in states if s in reached)
            trans = {s: trans[s] for s in states}
            labels = {s: labels[s] for s in states}
            reward_structs = {
                name: RewardStructure(
                    {k: v for k, v in rs.action_rewards.items() if k[0] in reached},
                    {s: v for s, v in rs.state_rewards.items() if s in reached})
                for name, rs in reward_structs.items()}

        return cls(players, alphabets, states, initial, trans, labels,
                   reward_structs)

    def available(self, state, player):
        idx = self.players.index(player)
        return sorted({alpha[idx] for alpha in self.trans[state]})


@dataclass(frozen=True)
class CoalitionGame:
    """Two-player regrouping of a game: side 1 is the coalition, side 2 the rest.

    Actions of each side are tuples over the members' actions in ascending
    player-index order; `trans[s][(a1, a2)]` carries the base distribution of
    the flattened joint action.
    """

    base: Csg
    coalition: tuple       # side-1 player names, ascending base index
    rest: tuple            # side-2 player names, ascending base index
    trans: dict            # state -> {(tuple1, tuple2): dist}
    _flatten: dict         # (state, tuple1, tuple2) -> base joint action

    @property
    def states(self):
        return self.base.states

    @property
    def initial(self):
        return self.base.initial

    @property
    def labels(self):
        return self.base.labels

    def actions1(self, state):
        return sorted({pair[0] for pair in self.trans[state]})

    def actions2(self, state):
        return sorted({pair[1] for pair in self.trans[state]})

    def flatten(self, state, a1, a2):
        return self._flatten[(state, a1, a2)]

    def action_reward(self, name, state, a1, a2):
        return self.base.rewards[name].action(state, self.flatten(state, a1, a2))

    def state_reward(self, name, state):
        return self.base.rewards[name].state(state)


def coalition_game(game: Csg, coalition) -> CoalitionGame:
    """Regroup an n-player game into the two-player coalition game."""
    members = list(coalition)
    for p in members:
        if p not in game.players:
            raise UnknownPlayer(f"unknown player {p!r}")
    if not members:
        raise EmptyCoalition("coalition must contain at least one player")
    member_set = set(members)
    if len(member_set) == len(game.players):
        raise FullCoalition("coalition must be a proper subset of the players")
    side1 = tuple(p for p in game.players if p in member_set)
    side2 = tuple(p for p in game.players if p not in member_set)
    idx1 = [game.players.index(p) for p in side1]
    idx2 = [game.players.index(p) for p in side2]
    trans = {}
    flatten = {}
    for s in game.states:
        trans[s] = {}
        for alpha, dist in game.trans[s].items():
            a1 = tuple(alpha[i] for i in idx1)
            a2 = tuple(alpha[i] for i in idx2)
            trans[s][(a1, a2)] = dist
            flatten[(s, a1, a2)] = alpha
    return CoalitionGame(game, side1, side2, trans, flatten)


@dataclass(frozen=True)
class EndComponent:
    """A sub-game (states, retained actions) that is strongly connected and
    closed under the retained actions; non_terminal records whether the base
    game can still leave it via some defined action."""

    states: frozenset
    sub_trans: dict        # (state, joint-action) -> distribution
    non_terminal: bool

    def __contains__(self, state):
        return state in self.states


def _sccs(nodes, edges):
    """Strongly connected components (iterative Tarjan), as a list of sets."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    result = []
    counter = [0]
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(edges.get(succ, ()))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    t = stack.pop()
                    on_stack.discard(t)
                    comp.add(t)
                    if t == node:
                        break
                result.append(comp)
    return result


def _mec_state_sets(trans):
    """Maximal end components of `trans` (state -> action -> dist), as
    (state set, retained {(state, action): dist}) pairs."""
    candidates = [set(trans)]
    final = []
    while candidates:
        group = candidates.pop()
        while True:
            retained = {s: [a for a, dist in trans[s].items()
                            if set(dist) <= group]
                        for s in group}
            dropped = {s for s, acts in retained.items() if not acts}
            if dropped:
                group -= dropped
                if not group:
                    break
                continue
            edges = {s: {t for a in retained[s] for t in trans[s][a]}
                     for s in group}
            comps = _sccs(sorted(group, key=str), edges)
            if len(comps) == 1:
                final.append((group, {(s, a): trans[s][a]
                                      for s in group for a in retained[s]}))
                break
            candidates.extend(comps)
            break
    return final


def enumerate_mecs(game: Csg):
    """All maximal end components of the game, flagged (non-)terminal."""
    mecs = []
    for group, sub in _mec_state_sets(game.trans):
        non_terminal = any(
            t not in group
            for s in group
            for dist in game.trans[s].values()
            for t in dist)
        mecs.append(EndComponent(frozenset(group), sub, non_terminal))
    mecs.sort(key=lambda ec: sorted(map(str, ec.states)))
    return mecs


@dataclass(frozen=True)
class Mdp:
    """A plain MDP: `choices[s]` lists (choice-id, distribution) pairs.

    Optional reward maps: `action_rewards[(state, choice-id)]` and
    `state_rewards[state]`, missing entries meaning zero.
    """

    states: tuple
    initial: tuple
    choices: dict
    action_rewards: dict = field(default_factory=dict)
    state_rewards: dict = field(default_factory=dict)

    def action_reward(self, state, choice):
        return self.action_rewards.get((state, choice), Fraction(0))

    def state_reward(self, state):
        return self.state_rewards.get(state, Fraction(0))


def joint_mdp(game) -> Mdp:
    """The MDP where one controller picks whole joint actions.

    Accepts a Csg or a CoalitionGame (anything with states/initial/trans).
    Reward structures are not attached; engines that need them read the
    source game directly.
    """
    choices = {s: sorted(game.trans[s].items()) for s in game.states}
    return Mdp(tuple(game.states), tuple(game.initial), choices)


class MemoryStrategy:
    """Interface for a finite-memory randomised strategy of one side.

    The memory mode is consulted before acting in a state and updated on
    observing the successor state.
    """

    initial_mode = None

    def distribution(self, state, mode):
        """Map from this side's action to probability; None if undefined."""
        raise NotImplementedError

    def update(self, mode, next_state):
        """Memory mode after moving to `next_state`."""
        raise NotImplementedError


def induce_mdp(cg: CoalitionGame, fixed: int, strategy: MemoryStrategy) -> Mdp:
    """Fold one side's strategy into the game, leaving the other side free.

    `fixed` is 1 or 2 (which side follows `strategy`).  The result is an MDP
    over reachable (state, memory-mode) pairs whose choices are the free
    side's actions; transition probabilities and action rewards are averaged
    over the fixed side's randomisation.  Every named reward structure of the
    base game is folded and attached.
    """
    if fixed not in (1, 2):
        raise ModelError("fixed side must be 1 or 2")
    reward_names = sorted(getattr(cg.base, "rewards", {}))
    init = [(s, strategy.initial_mode) for s in cg.initial]
    states = []
    seen = set(init)
    frontier = list(init)
    choices = {}
    action_rewards = {}
    state_rewards = {}
    while frontier:
        node = frontier.pop(0)
        states.append(node)
        s, mode = node
        sigma = strategy.distribution(s, mode)
        if sigma is None:
            raise IncompleteStrategy(f"no strategy entry for state {s!r}, mode {mode!r}")
        free_actions = cg.actions2(s) if fixed == 1 else cg.actions1(s)
        node_choices = []
        for b in free_actions:
            dist = {}
            reward = {name: Fraction(0) for name in reward_names}
            for a, pa in sigma.items():
                if pa == 0:
                    continue
                pair = (a, b) if fixed == 1 else (b, a)
                if pair not in cg.trans[s]:
                    raise IncompleteStrategy(
                        f"strategy plays unavailable action {a!r} at {s!r}")
                for name in reward_names:
                    reward[name] += pa * cg.action_reward(name, s, *pair)
                for t, pt in cg.trans[s][pair].items():
                    succ = (t, strategy.update(mode, t))
                    dist[succ] = dist.get(succ, 0) + pa * pt
            node_choices.append((b, dist))
            for name in reward_names:
                if reward[name]:
                    action_rewards.setdefault(name, {})[(node, b)] = reward[name]
            for succ in dist:
                if succ not in seen:
                    seen.add(succ)
                    frontier.append(succ)
        choices[node] = node_choices
        for name in reward_names:
            rs = cg.state_reward(name, s)
            if rs:
                state_rewards.setdefault(name, {})[node] = rs
    mdp = Mdp(tuple(states), tuple(init), choices)
    # attach folded reward maps per structure name for callers that need them
    object.__setattr__(mdp, "named_action_rewards", action_rewards)
    object.__setattr__(mdp, "named_state_rewards", state_rewards)
    return mdp


@dataclass(frozen=True)
class AssumptionReport:
    """Result of checking the convergence assumption for a query.

    finite_only: the query has only finite-horizon objectives (trivial pass).
    nonterminal_mecs: non-terminal maximal end components (relevant to
        infinite-horizon probabilistic objectives).
    reward_issues: list of (objective index, states from which the target is
        not reached almost surely under every profile) for infinite-horizon
        reward objectives.
    """

    finite_only: bool
    nonterminal_mecs: tuple
    reward_issues: tuple

    @property
    def passed(self):
        return not self.nonterminal_mecs and not self.reward_issues

    @property
    def severity(self):
        return "ok" if self.passed else "warning"

    def messages(self):
        out = []
        for ec in self.nonterminal_mecs:
            names = ", ".join(sorted(map(str, ec.states)))
            out.append(f"non-terminal end component {{{names}}} may prevent "
                       f"value-iteration convergence")
        for idx, states in self.reward_issues:
            names = ", ".join(sorted(map(str, states)))
            out.append(f"objective {idx + 1}: target not reached almost surely "
                       f"under all profiles (offending states: {names})")
        return out


def check_assumption(game: Csg, query) -> AssumptionReport:
    """Check the no-nonterminal-end-component assumption for a query.

    Finite-horizon-only queries pass trivially.  Infinite-horizon
    probabilistic objectives trigger a report of every non-terminal maximal
    end component; infinite-horizon reward objectives additionally require
    the target to be reached with probability 1 under all strategy profiles
    (min reachability probability 1 on the joint-action MDP).
    """
    from .mdp import prob1_min_set          # local import: avoids a cycle
    from .properties import satisfying_states

    objectives = query.objectives
    infinite = [obj for obj in objectives if not obj.is_finite_horizon()]
    if not infinite:
        return AssumptionReport(True, (), ())
    nonterminal = ()
    if any(obj.kind == "P" for obj in infinite):
        nonterminal = tuple(ec for ec in enumerate_mecs(game) if ec.non_terminal)
    reward_issues = []
    if any(obj.kind == "R" for obj in infinite):
        mdp = joint_mdp(game)
        for idx, obj in enumerate(objectives):
            if obj.kind != "R" or obj.is_finite_horizon():
                continue
            targets = satisfying_states(game, obj.target)
            sure = prob1_min_set(mdp, targets)
            bad = [s for s in game.states if s not in sure]
            if bad:
                reward_issues.append((idx, tuple(bad)))
    return AssumptionReport(False, nonterminal, tuple(reward_issues))
