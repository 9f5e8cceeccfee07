"""MDP model checking used as a sub-routine by the game engines.

Covers maximal/minimal reachability probabilities (bounded and unbounded,
optionally with an until-style constraint set), one-step probabilities,
expected rewards (instantaneous, cumulative, reachability), qualitative
prob-1 analysis, and extraction of optimal strategies.

Unbounded values are computed by value iteration after qualitative
precomputation of the probability-0 and probability-1 state sets, so states
decided qualitatively carry exact 0/1 values even when iteration runs in
floating point.  Bounded values are exact backward steps over whatever number
type the model carries (rationals stay rational).
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InfiniteValue, SolverError
from .model import Mdp, _mec_state_sets

__all__ = [
    "reach_prob",
    "step_prob",
    "expected_reward",
    "prob1_min_set",
]

DEFAULT_EPSILON = 1e-6
DEFAULT_MAX_ITERS = 100000

# relative slack when recovering argmax/argmin sets from float-valued vectors
_ARG_TOL = 1e-9


def _edges(mdp, allowed=None):
    out = {}
    for s in mdp.states:
        if allowed is not None and s not in allowed:
            out[s] = set()
            continue
        succ = set()
        for _, dist in mdp.choices[s]:
            succ |= set(dist)
        out[s] = succ
    return out


def _backward_reachable(mdp, sources, allowed=None):
    """States with a path to `sources` (path interior restricted to `allowed`)."""
    edges = _edges(mdp, allowed)
    preds = {s: set() for s in mdp.states}
    for s, succ in edges.items():
        for t in succ:
            if t in preds:
                preds[t].add(s)
    reached = set(sources) & set(mdp.states)
    frontier = list(reached)
    while frontier:
        t = frontier.pop()
        for s in preds[t]:
            if s not in reached and (allowed is None or s in allowed):
                reached.add(s)
                frontier.append(s)
    return reached


def prob1_min_set(mdp: Mdp, targets):
    """States from which EVERY strategy reaches `targets` almost surely.

    The complement consists of states with a target-avoiding path into an end
    component that itself avoids the targets.
    """
    targets = set(targets) & set(mdp.states)
    avoid = [s for s in mdp.states if s not in targets]
    sub = {s: {cid: dist for cid, dist in mdp.choices[s]} for s in avoid}
    core = set()
    for group, _ in _mec_state_sets(sub):
        core |= group
    bad = _backward_reachable(mdp, core, allowed=set(avoid))
    return {s for s in mdp.states if s not in bad}


def _prob1_max_set(mdp, targets, allowed):
    """States from which SOME strategy reaches `targets` almost surely.

    Standard double fixpoint: repeatedly keep only states that can reach the
    targets while never leaving the current candidate set.
    """
    targets = set(targets)
    universe = {s for s in mdp.states if s in allowed} | targets
    while True:
        reach = set(targets)
        changed = True
        while changed:
            changed = False
            for s in universe:
                if s in reach or s in targets:
                    continue
                for _, dist in mdp.choices[s]:
                    if set(dist) <= universe and set(dist) & reach:
                        reach.add(s)
                        changed = True
                        break
        if reach == universe:
            return reach
        universe = reach


def _prob0_min_set(mdp, targets, allowed):
    """States where SOME strategy avoids `targets` forever.

    Greatest fixpoint of "has an action staying inside the set".  States
    outside `allowed` (until-constraint violations) trivially avoid.
    """
    targets = set(targets)
    outside = {s for s in mdp.states if s not in allowed and s not in targets}
    group = {s for s in mdp.states if s not in targets}
    while True:
        keep = set()
        for s in group:
            if s in outside:
                keep.add(s)
                continue
            for _, dist in mdp.choices[s]:
                if set(dist) <= group:
                    keep.add(s)
                    break
        if keep == group:
            return group
        group = keep


def _optimise(values, optimise):
    return max(values) if optimise == "max" else min(values)


def _iterate(mdp, fixed, undecided, bellman, epsilon, max_iters):
    """Generic unbounded value iteration over the undecided states."""
    vals = dict(fixed)
    for s in undecided:
        vals[s] = 0.0
    if not undecided:
        return vals
    for _ in range(max_iters):
        new = dict(vals)
        delta = 0.0
        for s in undecided:
            nv = bellman(s, vals)
            new[s] = nv
            delta = max(delta, abs(nv - vals[s]) / max(1.0, abs(nv)))
        vals = new
        if delta < epsilon:
            return vals
    raise SolverError("MDP value iteration exceeded the iteration limit")


def reach_prob(mdp: Mdp, targets, optimise="max", bound=None, constraint=None,
               epsilon=DEFAULT_EPSILON, max_iters=DEFAULT_MAX_ITERS,
               with_strategy=False, all_horizons=False):
    """(Constrained) reachability probabilities, optimised over strategies.

    With `constraint` the event is (constraint U targets); without, plain
    eventual reachability.  `bound=k` gives the k-step bounded variant (exact
    backward steps); `all_horizons` additionally returns the value vectors of
    every horizon 0..k.  With `with_strategy`, also returns the optimal
    strategy: a map state -> choice-id (unbounded, memoryless) or a list
    indexed by remaining steps 1..k (bounded).
    """
    targets = set(targets)
    allowed = set(mdp.states) if constraint is None else (set(constraint) | targets)

    if bound is not None:
        zero = Fraction(0)
        vals = {s: Fraction(1) if s in targets else zero for s in mdp.states}
        history = [vals]
        steps = [None]
        for _ in range(bound):
            new = {}
            step_choice = {}
            for s in mdp.states:
                if s in targets:
                    new[s] = Fraction(1)
                    continue
                if s not in allowed:
                    new[s] = zero
                    continue
                best = None
                best_choice = None
                for cid, dist in mdp.choices[s]:
                    val = sum(p * vals[t] for t, p in dist.items())
                    if best is None or (val > best if optimise == "max" else val < best):
                        best, best_choice = val, cid
                new[s] = best
                step_choice[s] = best_choice
            vals = new
            history.append(vals)
            steps.append(step_choice)
        result = history if all_horizons else vals
        return (result, steps) if with_strategy else result

    # qualitative analysis
    if optimise == "max":
        can = _backward_reachable(mdp, targets, allowed=allowed - targets) | targets
        one = _prob1_max_set(mdp, targets, allowed)
        zero = {s for s in mdp.states if s not in can}
    else:
        one = prob1_min_set(mdp, targets) if constraint is None else \
            _prob1_min_constrained(mdp, targets, allowed)
        zero = _prob0_min_set(mdp, targets, allowed)

    fixed = {}
    for s in mdp.states:
        if s in targets or s in one:
            fixed[s] = Fraction(1)
        elif s in zero or s not in allowed:
            fixed[s] = Fraction(0)
    undecided = [s for s in mdp.states if s not in fixed]

    def bellman(s, vals):
        return _optimise([sum(p * vals[t] for t, p in dist.items())
                          for _, dist in mdp.choices[s]], optimise)

    vals = _iterate(mdp, fixed, undecided, bellman, epsilon, max_iters)
    if not with_strategy:
        return vals
    strategy = _extract_reach_strategy(mdp, vals, targets, allowed, one,
                                       optimise, zero)
    return vals, strategy


def _prob1_min_constrained(mdp, targets, allowed):
    """prob1_min for a constrained event: leaving `allowed` counts as failure."""
    bad_exit = {s for s in mdp.states if s not in allowed}
    result = set()
    base = prob1_min_set(mdp, targets)
    # a state surely satisfies (constraint U target) under all strategies iff
    # it reaches the targets a.s. AND cannot touch a constraint-violating
    # state before doing so
    touch_bad = _backward_reachable(mdp, bad_exit, allowed=allowed - targets)
    for s in mdp.states:
        if s in targets or (s in base and s not in touch_bad):
            result.add(s)
    return result


def _extract_reach_strategy(mdp, vals, targets, allowed, one_set, optimise, zero):
    """Memoryless optimal strategy for (un)constrained reachability.

    Optimal actions must conserve the value; for maximisation we additionally
    require positive-probability progress towards the targets (assigned in
    BFS layers), which rules out value-conserving cycles.
    """
    strategy = {}
    candidates = {}
    for s in mdp.states:
        if s in targets:
            strategy[s] = mdp.choices[s][0][0]
            continue
        if s not in allowed or s in zero and optimise == "max":
            strategy[s] = mdp.choices[s][0][0]
            continue
        cand = []
        best = vals[s]
        for cid, dist in mdp.choices[s]:
            val = sum(p * vals[t] for t, p in dist.items())
            if abs(val - best) <= _ARG_TOL * max(1.0, abs(best)):
                cand.append(cid)
        candidates[s] = cand
    if optimise == "min":
        # staying put can only lower reach probability, so any conserving
        # choice is optimal for minimisation
        for s, cand in candidates.items():
            strategy[s] = cand[0]
        return strategy
    assigned = set(targets)
    pending = dict(candidates)
    while pending:
        progressed = False
        for s in sorted(pending, key=str):
            dists = dict(mdp.choices[s])
            for cid in pending[s]:
                if set(dists[cid]) & assigned:
                    strategy[s] = cid
                    assigned.add(s)
                    del pending[s]
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            # remaining states have value 0 (cannot progress); any choice
            for s in pending:
                strategy[s] = candidates[s][0]
            break
    return strategy


def step_prob(mdp: Mdp, targets, optimise="max", with_strategy=False):
    """One-step (next-state) probabilities of hitting `targets`."""
    targets = set(targets)
    vals = {}
    strategy = {}
    for s in mdp.states:
        best = None
        best_choice = None
        for cid, dist in mdp.choices[s]:
            val = sum(p for t, p in dist.items() if t in targets)
            if best is None or (val > best if optimise == "max" else val < best):
                best, best_choice = val, cid
        vals[s] = best
        strategy[s] = best_choice
    return (vals, strategy) if with_strategy else vals


def expected_reward(mdp: Mdp, kind, *, k=None, targets=None,
                    action_rewards=None, state_rewards=None, optimise="max",
                    epsilon=DEFAULT_EPSILON, max_iters=DEFAULT_MAX_ITERS,
                    with_strategy=False, all_horizons=False,
                    needed_states=None):
    """Optimal expected reward for one of the three reward shapes.

    kind "I": state reward observed after exactly k steps.
    kind "C": state+action rewards accumulated over the first k steps.
    kind "F": rewards accumulated until first hitting `targets`; requires the
        targets to be reached almost surely under every strategy from each
        state in `needed_states` (default: all), else InfiniteValue is raised
        carrying the offending states.
    """
    a_rew = action_rewards or {}
    s_rew = state_rewards or {}

    def ar(s, cid):
        return a_rew.get((s, cid), 0)

    def sr(s):
        return s_rew.get(s, 0)

    if kind in ("I", "C"):
        if k is None or k < 0:
            raise SolverError("bounded reward objectives need a bound k >= 0")
        vals = {s: (sr(s) if kind == "I" else Fraction(0)) for s in mdp.states}
        history = [vals]
        steps = [None]
        for _ in range(k):
            new = {}
            step_choice = {}
            for s in mdp.states:
                best = None
                best_choice = None
                for cid, dist in mdp.choices[s]:
                    val = sum(p * vals[t] for t, p in dist.items())
                    if kind == "C":
                        val += ar(s, cid)
                    if best is None or (val > best if optimise == "max" else val < best):
                        best, best_choice = val, cid
                if kind == "C":
                    best += sr(s)
                new[s] = best
                step_choice[s] = best_choice
            vals = new
            history.append(vals)
            steps.append(step_choice)
        result = history if all_horizons else vals
        return (result, steps) if with_strategy else result

    if kind != "F":
        raise SolverError(f"unknown reward objective kind {kind!r}")
    targets = set(targets or ())
    finite = prob1_min_set(mdp, targets)
    wanted = set(needed_states) if needed_states is not None else set(mdp.states)
    bad = sorted((s for s in wanted if s not in finite), key=str)
    if bad:
        raise InfiniteValue(
            "expected reachability reward is infinite: targets are not "
            "reached almost surely under all strategies", states=bad)
    fixed = {s: Fraction(0) for s in targets}
    undecided = [s for s in mdp.states if s in finite and s not in targets]

    def bellman(s, vals):
        return float(sr(s)) + _optimise(
            [float(ar(s, cid)) + sum(p * vals[t] for t, p in dist.items())
             for cid, dist in mdp.choices[s]], optimise)

    vals = _iterate(mdp, fixed, undecided, bellman, epsilon, max_iters)
    for s in mdp.states:
        vals.setdefault(s, None)        # states with infinite value, unrequested
    if not with_strategy:
        return vals
    strategy = {}
    for s in mdp.states:
        if s in targets or vals[s] is None:
            strategy[s] = mdp.choices[s][0][0]
            continue
        # all strategies reach the targets here, so any conserving choice is
        # optimal
        best = None
        best_choice = None
        for cid, dist in mdp.choices[s]:
            val = float(ar(s, cid)) + sum(p * vals[t] for t, p in dist.items())
            if best is None or (val > best if optimise == "max" else val < best):
                best, best_choice = val, cid
        strategy[s] = best_choice
    return vals, strategy
