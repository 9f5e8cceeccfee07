"""Equilibrium engine: social-welfare-optimal Nash values for two-coalition
objective pairs.

Finite-horizon pairs are solved by exact backwards induction, infinite-horizon
pairs by value iteration; both solve one bimatrix game per state and stage,
falling back to single-objective MDP computations at states where one
objective is already settled.  Mixed pairs (one finite, one infinite horizon)
are reduced to infinite-horizon pairs on a step-counter product game.

Vocabulary used below for an objective at a state:
  "won":   the objective is already satisfied (until target reached /
           reachability-reward target reached, value fixed at 1 resp. 0);
  "lost":  it can no longer be satisfied (until constraint violated);
  settled: won or lost — only the other objective has stakes left, so both
           coalitions cooperate on its single-objective optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .bimatrix import BimatrixGame, solve_swne
from .errors import (
    NotConverged,
    PropertyError,
    UnsupportedOperator,
)
from .model import CoalitionGame, check_assumption, coalition_game, joint_mdp
from .mdp import expected_reward, reach_prob, step_prob
from .properties import (
    Atom,
    NashNode,
    Objective,
    TrueF,
    ZeroSumNode,
    classify_horizon,
    satisfying_states,
)

__all__ = [
    "PairResult",
    "Evaluation",
    "local_game",
    "solve_bounded_pair",
    "solve_unbounded_pair",
    "mixed_horizon_transform",
    "evaluate",
    "sat_operator",
]

DEFAULT_CONV_EPSILON = 1e-6
DEFAULT_MAX_ITERS = 10000
_OSC_TOL = 1e-12
_EXACT_STATE_LIMIT = 64

ONE = Fraction(1)
ZERO = Fraction(0)


# --- results ---------------------------------------------------------------------

@dataclass
class PairResult:
    """Outcome of solving one objective pair on a two-coalition game."""

    values: dict                 # state -> (v1, v2)
    iterations: int
    converged: bool
    kind: str                    # "bounded" | "unbounded"
    diagnostic: str = None
    trace: list = None           # value vectors per sweep (index 0 = start)
    profiles: object = None      # per-state local profiles; bounded: per stage
    aux: dict = field(default_factory=dict)


@dataclass
class Evaluation:
    """Result of evaluating a formula on a game."""

    formula: object
    kind: str                    # state-set | nash-query | nash-threshold |
                                 # zero-sum-query | zero-sum-threshold
    sat: frozenset = None
    values: dict = None          # per-state pair (nash) or scalar (zero-sum)
    initial: dict = None         # initial state -> value(s) / boolean
    solve: PairResult = None
    game: object = None          # the two-coalition game that was solved
    embedding: dict = None       # base state -> solved-game state (mixed only)
    assumption: object = None


# --- helpers ---------------------------------------------------------------------

def _sat(game, formula):
    """Satisfying states, resolving labels on the underlying game."""
    base = game.base if isinstance(game, CoalitionGame) else game
    return satisfying_states(base, formula)


def _horizon(obj: Objective):
    if obj.op == "X":
        return 1
    return obj.bound


def _mdp_reward_maps(game, name):
    action, state = {}, {}
    for s in game.states:
        for pair in game.trans[s]:
            val = game.action_reward(name, s, *pair)
            if val:
                action[(s, pair)] = val
        val = game.state_reward(name, s)
        if val:
            state[s] = val
    return action, state


def _statuses(game, objectives):
    """Per objective: (win set, lose set, settleable flag)."""
    out = []
    for obj in objectives:
        if obj.kind == "P" and obj.op == "U":
            win = _sat(game, obj.sub2)
            cons = _sat(game, obj.sub1)
            lose = frozenset(s for s in game.states
                             if s not in win and s not in cons)
            out.append((win, lose, True))
        elif obj.kind == "R" and obj.op == "F":
            win = _sat(game, obj.sub2)
            out.append((win, frozenset(), True))
        else:
            out.append((frozenset(), frozenset(), False))
    return out


def _settled_value(obj, won):
    if obj.kind == "P":
        return ONE if won else ZERO
    return ZERO


def local_game(game, state, continuation, rewards=(None, None)) -> BimatrixGame:
    """The one-shot game at `state` over coalition actions.

    Each payoff entry is the expected continuation value; per objective,
    `rewards` may name a reward structure whose state and action rewards are
    added (the cumulative and reachability-reward shapes).
    """
    acts1, acts2 = game.actions1(state), game.actions2(state)
    z1, z2 = [], []
    for a in acts1:
        row1, row2 = [], []
        for b in acts2:
            dist = game.trans[state][(a, b)]
            vals = [sum(p * continuation[t][l] for t, p in dist.items())
                    for l in (0, 1)]
            for l, name in enumerate(rewards):
                if name is not None:
                    vals[l] += game.state_reward(name, state) + \
                        game.action_reward(name, state, a, b)
            row1.append(vals[0])
            row2.append(vals[1])
        z1.append(row1)
        z2.append(row2)
    return BimatrixGame.from_rows(z1, z2)


def _reward_names(objectives):
    return tuple(obj.reward if obj.kind == "R" and obj.op in ("C", "F") else None
                 for obj in objectives)


# --- bounded pairs ----------------------------------------------------------------

def _coop_family(game, jmdp, obj, with_strategy):
    """Single-objective max-value vectors at horizons 0..horizon(obj)."""
    k = _horizon(obj)
    if obj.kind == "P" and obj.op == "U":
        cons = _sat(game, obj.sub1)
        return reach_prob(jmdp, _sat(game, obj.sub2), "max", bound=k,
                          constraint=cons, all_horizons=True,
                          with_strategy=with_strategy)
    if obj.kind == "P" and obj.op == "X":
        target = _sat(game, obj.sub2)
        base = {s: ONE if s in target else ZERO for s in game.states}
        vals, strat = step_prob(jmdp, target, "max", with_strategy=True)
        history = [base, vals]
        return (history, [None, strat]) if with_strategy else history
    action, state = _mdp_reward_maps(game, obj.reward)
    if obj.op == "I":
        return expected_reward(jmdp, "I", k=k, state_rewards=state,
                               all_horizons=True, with_strategy=with_strategy)
    return expected_reward(jmdp, "C", k=k, action_rewards=action,
                           state_rewards=state, all_horizons=True,
                           with_strategy=with_strategy)


def solve_bounded_pair(cg, query: NashNode, trace=True) -> PairResult:
    """Exact backwards induction for a pair of finite-horizon objectives."""
    o1, o2 = query.objectives
    k1, k2 = _horizon(o1), _horizon(o2)
    k = min(k1, k2)
    pads = (k1 - k, k2 - k)
    jmdp = joint_mdp(cg)
    coop = []
    coop_strats = []
    for obj in (o1, o2):
        family, strats = _coop_family(cg, jmdp, obj, with_strategy=True)
        coop.append(family)
        coop_strats.append(strats)
    stat = _statuses(cg, (o1, o2))
    rewards = _reward_names((o1, o2))
    step_rewards = tuple(name if obj.op == "C" else None
                         for name, obj in zip(rewards, (o1, o2)))

    vals = {s: (coop[0][pads[0]][s], coop[1][pads[1]][s]) for s in cg.states}
    history = [vals]
    stage_profiles = [None]
    for n in range(1, k + 1):
        new = {}
        profiles = {}
        for s in cg.states:
            settled = []
            for l, (win, lose, can) in enumerate(stat):
                if can and s in win:
                    settled.append(True)
                elif can and s in lose:
                    settled.append(False)
                else:
                    settled.append(None)
            if settled[0] is not None and settled[1] is not None:
                new[s] = (_settled_value(o1, settled[0]),
                          _settled_value(o2, settled[1]))
                profiles[s] = ("settled",)
            elif settled[0] is not None:
                new[s] = (_settled_value(o1, settled[0]),
                          coop[1][n + pads[1]][s])
                profiles[s] = ("coop", 1)
            elif settled[1] is not None:
                new[s] = (coop[0][n + pads[0]][s],
                          _settled_value(o2, settled[1]))
                profiles[s] = ("coop", 0)
            else:
                game = local_game(cg, s, vals, step_rewards)
                chosen, _ = solve_swne(game)
                new[s] = (chosen.u, chosen.v)
                profiles[s] = ("mix", cg.actions1(s), cg.actions2(s),
                               chosen.x, chosen.y)
        vals = new
        history.append(vals)
        stage_profiles.append(profiles)

    return PairResult(
        values=vals, iterations=k, converged=True, kind="bounded",
        trace=history if trace else None, profiles=stage_profiles,
        aux={"coop_strats": coop_strats, "pads": pads, "statuses": stat,
             "horizon": k})


# --- unbounded pairs --------------------------------------------------------------

def _unbounded_fixed_rows(cg, query, jmdp):
    """Constant value rows, plus single-objective optima and strategies."""
    o1, o2 = query.objectives
    stat = _statuses(cg, (o1, o2))
    (win1, lose1, _), (win2, lose2, _) = stat
    fixed = {}
    aux = {"statuses": stat, "opt_vals": [None, None],
           "opt_strats": [None, None]}
    if o1.kind == "P":
        cons1, cons2 = _sat(cg, o1.sub1), _sat(cg, o2.sub1)
        pmax1, strat1 = reach_prob(jmdp, win1, "max", constraint=cons1,
                                   with_strategy=True)
        pmax2, strat2 = reach_prob(jmdp, win2, "max", constraint=cons2,
                                   with_strategy=True)
        aux["opt_vals"] = [pmax1, pmax2]
        aux["opt_strats"] = [strat1, strat2]
        for s in cg.states:
            in1, in2 = s in win1, s in win2
            if in1 and in2:
                fixed[s] = (ONE, ONE)
            elif in1:
                fixed[s] = (ONE, pmax2[s])
            elif in2:
                fixed[s] = (pmax1[s], ONE)
            elif s in lose1 and s in lose2:
                fixed[s] = (ZERO, ZERO)
            elif s in lose2:                 # only objective 1 still live
                fixed[s] = (pmax1[s], ZERO)
            elif s in lose1:
                fixed[s] = (ZERO, pmax2[s])
        return fixed, aux

    maps1 = _mdp_reward_maps(cg, o1.reward)
    maps2 = _mdp_reward_maps(cg, o2.reward)
    need2 = {s for s in cg.states if s in win1 and s not in win2}
    need1 = {s for s in cg.states if s in win2 and s not in win1}
    rmax1 = rmax2 = None
    if need1:
        rmax1, strat1 = expected_reward(
            jmdp, "F", targets=win1, action_rewards=maps1[0],
            state_rewards=maps1[1], needed_states=need1, with_strategy=True)
        aux["opt_vals"][0], aux["opt_strats"][0] = rmax1, strat1
    if need2:
        rmax2, strat2 = expected_reward(
            jmdp, "F", targets=win2, action_rewards=maps2[0],
            state_rewards=maps2[1], needed_states=need2, with_strategy=True)
        aux["opt_vals"][1], aux["opt_strats"][1] = rmax2, strat2
    for s in cg.states:
        in1, in2 = s in win1, s in win2
        if in1 and in2:
            fixed[s] = (ZERO, ZERO)
        elif in1:
            fixed[s] = (ZERO, rmax2[s])
        elif in2:
            fixed[s] = (rmax1[s], ZERO)
    return fixed, aux


def _max_delta(a, b, combine):
    return max(combine(a[s], b[s]) for s in a) if a else 0.0


def solve_unbounded_pair(cg, query: NashNode, conv_epsilon=DEFAULT_CONV_EPSILON,
                         max_iters=DEFAULT_MAX_ITERS, trace="auto",
                         exact=None) -> PairResult:
    """Value iteration for a pair of infinite-horizon objectives.

    Converges when the per-state sum of the two values is stable below
    `conv_epsilon` and, guarding against the sum masking oscillation, each
    individual value is stable for two consecutive sweeps.  A detected
    period-two oscillation or exhausting `max_iters` raises NotConverged
    carrying the partial result.
    """
    o1, o2 = query.objectives
    if exact is None:
        exact = len(cg.states) <= _EXACT_STATE_LIMIT
    keep_trace = trace if trace != "auto" else len(cg.states) <= 2000
    jmdp = joint_mdp(cg)
    fixed, aux = _unbounded_fixed_rows(cg, query, jmdp)
    rewards = _reward_names((o1, o2)) if o1.kind == "R" else (None, None)
    free = [s for s in cg.states if s not in fixed]

    def norm(v):
        return v if exact else float(v)

    vals = {s: fixed.get(s, (ZERO, ZERO)) for s in cg.states}
    vals = {s: (norm(a), norm(b)) for s, (a, b) in vals.items()}
    history = [vals]
    profiles = {}
    stable = 0
    osc = 0
    diagnostic = None
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new = dict(vals)
        for s in free:
            game = local_game(cg, s, vals, rewards)
            chosen, _ = solve_swne(game)
            new[s] = (norm(chosen.u), norm(chosen.v))
            profiles[s] = ("mix", cg.actions1(s), cg.actions2(s),
                           chosen.x, chosen.y)
        history.append(new)
        prev = vals
        vals = new
        sum_delta = _max_delta(
            {s: vals[s] for s in free}, prev,
            lambda a, b: abs((a[0] + a[1]) - (b[0] + b[1])))
        per_delta = _max_delta(
            {s: vals[s] for s in free}, prev,
            lambda a, b: max(abs(a[0] - b[0]), abs(a[1] - b[1])))
        stable = stable + 1 if per_delta < conv_epsilon else 0
        if sum_delta < conv_epsilon and stable >= 2:
            converged = True
            break
        if len(history) >= 3:
            back2 = _max_delta({s: vals[s] for s in free}, history[-3],
                               lambda a, b: max(abs(a[0] - b[0]),
                                                abs(a[1] - b[1])))
            osc = osc + 1 if (back2 <= _OSC_TOL and
                              per_delta >= conv_epsilon) else 0
            if osc >= 2:
                diagnostic = (
                    "oscillation: individual values repeat with period 2 "
                    "while their sum is constant; no equilibrium value "
                    "vector is being approached")
                break
        if not keep_trace and len(history) > 4:
            history.pop(0)

    result = PairResult(
        values=vals, iterations=iterations, converged=converged,
        kind="unbounded", diagnostic=diagnostic,
        trace=history, profiles=profiles, aux=aux)
    if not converged:
        message = diagnostic or (
            f"value iteration did not converge within {iterations} sweeps")
        raise NotConverged(message, result)
    return result


# --- mixed horizons ---------------------------------------------------------------

@dataclass(frozen=True)
class ProductGame:
    """Step-counter product of a two-coalition game: states are (s, layer)
    with the layer counting up to an absorbing cap."""

    base: object
    layers: int                  # cap value L; layers are 0..L
    states: tuple
    initial: tuple
    trans: dict
    labels: dict
    reward_maps: dict            # name -> (action map, state map)

    def actions1(self, state):
        return self.base.actions1(state[0])

    def actions2(self, state):
        return self.base.actions2(state[0])

    def action_reward(self, name, state, a1, a2):
        return self.reward_maps[name][0].get((state, (a1, a2)), ZERO)

    def state_reward(self, name, state):
        return self.reward_maps[name][1].get(state, ZERO)


def mixed_horizon_transform(cg, query: NashNode):
    """Reduce a mixed-horizon pair to an infinite-horizon pair on a product.

    Returns (product game, rewritten query, embedding base-state -> product
    state).  Values of the original pair at s equal values of the rewritten
    pair at (s, 0).
    """
    objectives = list(query.objectives)
    fi = 0 if objectives[0].is_finite_horizon() else 1
    obj = objectives[fi]

    if obj.kind == "P" and obj.op == "X":
        cap = 2
    elif obj.kind == "P":                    # bounded until
        cap = obj.bound + 1
    elif obj.op == "I":
        cap = obj.bound + 1
    else:                                    # bounded cumulative
        cap = obj.bound

    states = tuple((s, i) for i in range(cap + 1) for s in cg.states)
    initial = tuple((s, 0) for s in cg.states)
    trans = {}
    for (s, i) in states:
        nxt = min(i + 1, cap)
        trans[(s, i)] = {pair: {(t, nxt): p for t, p in dist.items()}
                         for pair, dist in cg.trans[s].items()}

    base_labels = (cg.base if isinstance(cg, CoalitionGame) else cg).labels
    labels = {(s, i): set(base_labels[s]) for (s, i) in states}

    # rewrite the finite objective over fresh layer-indexed propositions
    if obj.kind == "P" and obj.op == "X":
        target = _sat(cg, obj.sub2)
        for (s, i) in states:
            if i == 1 and s in target:
                labels[(s, i)].add("__next")
        new_obj = Objective("P", "U", sub1=TrueF(), sub2=Atom("__next"))
    elif obj.kind == "P":
        k = obj.bound
        cons, target = _sat(cg, obj.sub1), _sat(cg, obj.sub2)
        for (s, i) in states:
            if i <= k - 1 and s in cons:
                labels[(s, i)].add("__cons")
            if i <= k and s in target:
                labels[(s, i)].add("__target")
        new_obj = Objective("P", "U", sub1=Atom("__cons"),
                            sub2=Atom("__target"))
    else:
        for (s, i) in states:
            if i == cap:
                labels[(s, i)].add("__top")
        new_obj = Objective("R", "F", sub2=Atom("__top"), reward="__bounded")

    reward_maps = {}
    source = cg.base if isinstance(cg, CoalitionGame) else cg
    names = set()
    for o in objectives:
        if o.reward is not None:
            names.add(o.reward)
    for name in names:
        action, state = {}, {}
        for (s, i) in states:
            for pair in cg.trans[s]:
                val = cg.action_reward(name, s, *pair)
                if val:
                    action[((s, i), pair)] = val
            val = cg.state_reward(name, s)
            if val:
                state[(s, i)] = val
        reward_maps[name] = (action, state)
    if obj.kind == "R":
        action, state = {}, {}
        k = obj.bound
        for (s, i) in states:
            if obj.op == "I":
                if i == k:
                    val = cg.state_reward(obj.reward, s)
                    if val:
                        state[(s, i)] = val
            elif i < k:
                val = cg.state_reward(obj.reward, s)
                if val:
                    state[(s, i)] = val
                for pair in cg.trans[s]:
                    val = cg.action_reward(obj.reward, s, *pair)
                    if val:
                        action[((s, i), pair)] = val
        reward_maps["__bounded"] = (action, state)

    objectives[fi] = new_obj
    new_query = NashNode(query.coalition1, query.coalition2, query.relation,
                         query.threshold, tuple(objectives), query.epsilon)
    product = ProductGame(cg, cap, states, initial, trans,
                          {s: frozenset(l) for s, l in labels.items()},
                          reward_maps)
    valuations = getattr(source, "valuations", None)
    if valuations is not None:
        object.__setattr__(product, "valuations",
                           {(s, i): valuations[s] for (s, i) in states})
        object.__setattr__(product, "constants",
                           getattr(source, "constants", {}))
    embedding = {s: (s, 0) for s in cg.states}
    return product, new_query, embedding


# --- evaluation and nested operators -----------------------------------------------

def _compare(value, relation, threshold):
    return {"<": value < threshold, "<=": value <= threshold,
            ">": value > threshold, ">=": value >= threshold}[relation]


def _zero_sum_values(game, node: ZeroSumNode):
    """Per-state optimal values for the supported zero-sum fragment: the
    grand coalition (pure cooperation, an MDP problem)."""
    if set(node.coalition) != set(game.players):
        raise UnsupportedOperator(
            "zero-sum coalition operators are supported only for the grand "
            "coalition (general stochastic-game solving is out of scope)")
    optimise = "min" if node.relation in ("<", "<=", "min=?") else "max"
    obj = node.objective
    mdp = joint_mdp(game)
    if obj.kind == "P":
        if obj.op == "X":
            return step_prob(mdp, satisfying_states(game, obj.sub2), optimise)
        return reach_prob(mdp, satisfying_states(game, obj.sub2), optimise,
                          bound=obj.bound,
                          constraint=satisfying_states(game, obj.sub1))
    action, state = {}, {}
    for s in game.states:
        for alpha in game.trans[s]:
            val = game.rewards[obj.reward].action(s, alpha)
            if val:
                action[(s, alpha)] = val
        val = game.rewards[obj.reward].state(s)
        if val:
            state[s] = val
    if obj.op in ("I", "C"):
        return expected_reward(mdp, obj.op, k=obj.bound, action_rewards=action,
                               state_rewards=state, optimise=optimise)
    return expected_reward(mdp, "F",
                           targets=satisfying_states(game, obj.sub2),
                           action_rewards=action, state_rewards=state,
                           optimise=optimise)


def _solve_nash(csg, node: NashNode, conv_epsilon=DEFAULT_CONV_EPSILON,
                max_iters=DEFAULT_MAX_ITERS, trace="auto", exact=None):
    """Dispatch a Nash query to the matching solver.

    Returns (result, solved game, embedding, assumption report, per-base-state
    values)."""
    cg = coalition_game(csg, node.coalition1)
    horizon = classify_horizon(node)
    if horizon == "both-finite":
        report = check_assumption(csg, node)
        result = solve_bounded_pair(cg, node)
        return result, cg, None, report, result.values
    if horizon == "both-infinite":
        report = check_assumption(csg, node)
        result = solve_unbounded_pair(cg, node, conv_epsilon=conv_epsilon,
                                      max_iters=max_iters, trace=trace,
                                      exact=exact)
        return result, cg, None, report, result.values
    product, new_query, embedding = mixed_horizon_transform(cg, node)
    report = check_assumption(product, new_query)
    result = solve_unbounded_pair(product, new_query,
                                  conv_epsilon=conv_epsilon,
                                  max_iters=max_iters, trace=trace,
                                  exact=exact)
    values = {s: result.values[embedding[s]] for s in cg.states}
    return result, product, embedding, report, values


def sat_operator(game, node):
    """States satisfying a nested (threshold-form) coalition operator."""
    if isinstance(node, ZeroSumNode):
        if node.threshold is None:
            raise PropertyError(
                "a numerical query cannot appear as a state subformula")
        vals = _zero_sum_values(game, node)
        return frozenset(s for s in game.states
                         if _compare(vals[s], node.relation, node.threshold))
    if isinstance(node, NashNode):
        if node.threshold is None:
            raise PropertyError(
                "a numerical query cannot appear as a state subformula")
        _, _, _, _, values = _solve_nash(game, node)
        return frozenset(
            s for s in game.states
            if _compare(values[s][0] + values[s][1], node.relation,
                        node.threshold))
    raise PropertyError(f"unsupported operator node {node!r}")


def evaluate(csg, formula, conv_epsilon=DEFAULT_CONV_EPSILON,
             max_iters=DEFAULT_MAX_ITERS, trace="auto",
             exact=None) -> Evaluation:
    """Evaluate a parsed property on a game.

    Boolean state formulae yield a satisfying set; coalition operators in
    query form yield per-state values with a summary at the initial states,
    in threshold form a satisfying set plus initial-state truth values.
    """
    if isinstance(formula, ZeroSumNode):
        vals = _zero_sum_values(csg, formula)
        if formula.threshold is None:
            return Evaluation(formula, "zero-sum-query", values=vals,
                              initial={s: vals[s] for s in csg.initial})
        sat = frozenset(s for s in csg.states
                        if _compare(vals[s], formula.relation,
                                    formula.threshold))
        return Evaluation(formula, "zero-sum-threshold", sat=sat, values=vals,
                          initial={s: s in sat for s in csg.initial})
    if isinstance(formula, NashNode):
        result, game, embedding, report, values = _solve_nash(
            csg, formula, conv_epsilon=conv_epsilon, max_iters=max_iters,
            trace=trace, exact=exact)
        if formula.threshold is None:
            return Evaluation(formula, "nash-query", values=values,
                              initial={s: values[s] for s in csg.initial},
                              solve=result, game=game, embedding=embedding,
                              assumption=report)
        sat = frozenset(s for s in csg.states
                        if _compare(values[s][0] + values[s][1],
                                    formula.relation, formula.threshold))
        return Evaluation(formula, "nash-threshold", sat=sat, values=values,
                          initial={s: s in sat for s in csg.initial},
                          solve=result, game=game, embedding=embedding,
                          assumption=report)
    sat = satisfying_states(csg, formula)
    return Evaluation(formula, "state-set", sat=sat,
                      initial={s: s in sat for s in csg.initial})
