"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written with different algorithms from the
main code so that agreement is meaningful:

- an equilibrium finder based on support-pair enumeration and solving
  indifference equations (the main solver enumerates polytope vertices);
- a brute-force maximal-end-component search for small models;
- a pure-strategy-profile Markov-chain evaluator for reachability values;
- an exhaustive memoryless-strategy MDP evaluator.
"""

from fractions import Fraction
from itertools import chain, combinations, product


def _solve_unique(matrix, rhs):
    """Return the unique rational solution of matrix @ sol = rhs, else None.

    None is returned both for singular square systems and for non-square
    systems without a unique solution.
    """
    rows = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    n_vars = len(matrix[0])
    pivots = []
    r = 0
    for c in range(n_vars):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        rows[r] = [v / rows[r][c] for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    if len(pivots) < n_vars:
        return None
    for i in range(r, len(rows)):
        if rows[i][n_vars] != 0:
            return None
    sol = [Fraction(0)] * n_vars
    for i, c in enumerate(pivots):
        sol[c] = rows[i][n_vars]
    return sol


def _nonempty_subsets(n):
    return chain.from_iterable(combinations(range(n), k) for k in range(1, n + 1))


def _strategy_candidates(payoffs, n_own, n_other):
    """Best-response-compatible vertex strategies for one side.

    `payoffs[i][j]` is the payoff the OTHER player gets from their pure
    strategy i when this side plays pure strategy j.  For every support S and
    every |S|-subset T of the other player's pure strategies we solve the
    indifference system (payoff of every i in T equals w, strategy sums to 1,
    support S) and keep unique, nonnegative solutions where w is a global
    best response.  This covers degenerate games, where more strategies can
    be tight than the support size alone would pin down.

    Returns a list of (dist, w, tight) where `tight` is the exact set of the
    other player's best responses against `dist`.
    """
    found = {}
    for support in _nonempty_subsets(n_own):
        for tight_rows in combinations(range(n_other), len(support)):
            # unknowns: dist_j for j in support, then w
            a = [[payoffs[i][j] for j in support] + [Fraction(-1)]
                 for i in tight_rows]
            b = [Fraction(0)] * len(tight_rows)
            a.append([Fraction(1)] * len(support) + [Fraction(0)])
            b.append(Fraction(1))
            sol = _solve_unique(a, b)
            if sol is None:
                continue
            probs, w = sol[:-1], sol[-1]
            if any(p < 0 for p in probs):
                continue
            dist = [Fraction(0)] * n_own
            for j, p in zip(support, probs):
                dist[j] = p
            values = [sum(payoffs[i][j] * dist[j] for j in range(n_own))
                      for i in range(n_other)]
            if any(val > w for val in values):
                continue
            tight = frozenset(i for i, val in enumerate(values) if val == w)
            found[tuple(dist)] = (tuple(dist), w, tight)
    return list(found.values())


def nash_equilibria_by_support(z1, z2):
    """All Nash equilibria of the bimatrix game (z1, z2), by support pairs.

    Candidate strategies for each side are generated from indifference
    systems (see `_strategy_candidates`); a pair is an equilibrium exactly
    when each player's support lies inside their set of best responses to
    the other's strategy.  Returns a sorted, deduplicated list of
    (x, y, u, v) tuples of Fractions.
    """
    z1 = [[Fraction(v) for v in row] for row in z1]
    z2 = [[Fraction(v) for v in row] for row in z2]
    l, m = len(z1), len(z1[0])
    z2t = [[z2[i][j] for i in range(l)] for j in range(m)]
    y_cands = _strategy_candidates(z1, m, l)       # row player indifferent
    x_cands = _strategy_candidates(z2t, l, m)      # column player indifferent
    found = {}
    for x, v, tight_cols in x_cands:
        x_support = {i for i, p in enumerate(x) if p > 0}
        for y, u, tight_rows in y_cands:
            if not x_support <= tight_rows:
                continue
            if not all(y[j] == 0 or j in tight_cols for j in range(m)):
                continue
            found[(x, y)] = (x, y, u, v)
    return sorted(found.values())


def maximal_end_components(transitions):
    """Maximal end components of a small game/MDP, by brute force.

    `transitions` maps state -> {action: {successor: prob}}.  A set of
    states S with a nonempty action selection is an end component if every
    retained action's successors stay in S and the chosen sub-graph is
    strongly connected.  We enumerate all state subsets (so only use this on
    models with a handful of states) and keep the maximal ones.
    """
    states = sorted(transitions)
    candidates = []
    for k in range(1, len(states) + 1):
        for subset in combinations(states, k):
            inside = set(subset)
            keep = {s: [a for a, dist in transitions[s].items()
                        if set(dist) <= inside]
                    for s in subset}
            if any(not acts for acts in keep.values()):
                continue
            # strong connectivity of the retained sub-graph
            edges = {s: set() for s in subset}
            for s in subset:
                for a in keep[s]:
                    edges[s] |= set(transitions[s][a])
            def reaches_all(start):
                seen = {start}
                frontier = [start]
                while frontier:
                    nxt = frontier.pop()
                    for t in edges[nxt]:
                        if t not in seen:
                            seen.add(t)
                            frontier.append(t)
                return seen == inside
            if all(reaches_all(s) for s in subset):
                candidates.append(inside)
    return [c for c in candidates
            if not any(c < other for other in candidates)]


def chain_reach_probability(transitions, choice, targets, source, horizon=None):
    """Probability of reaching `targets` from `source` under pure `choice`.

    `choice` maps state -> action; the induced Markov chain is evaluated by
    exact linear solving (unbounded) or backward iteration (bounded).
    Unbounded evaluation assumes target and non-reaching states are detected
    by graph search, so it is exact.
    """
    states = sorted(transitions)
    idx = {s: i for i, s in enumerate(states)}
    succ = {s: transitions[s][choice[s]] for s in states}
    targets = set(targets)
    if horizon is not None:
        vals = {s: Fraction(1) if s in targets else Fraction(0) for s in states}
        for _ in range(horizon):
            vals = {s: Fraction(1) if s in targets else
                    sum(Fraction(p) * vals[t] for t, p in succ[s].items())
                    for s in states}
        return vals[source]
    # states that can reach a target at all
    can = set(targets)
    changed = True
    while changed:
        changed = False
        for s in states:
            if s not in can and any(t in can for t in succ[s]):
                can.add(s)
                changed = True
    if source not in can:
        return Fraction(0)
    unknowns = [s for s in states if s in can and s not in targets]
    if not unknowns:
        return Fraction(1) if source in targets else Fraction(0)
    pos = {s: i for i, s in enumerate(unknowns)}
    a, b = [], []
    for s in unknowns:
        row = [Fraction(0)] * len(unknowns)
        row[pos[s]] = Fraction(1)
        rhs = Fraction(0)
        for t, p in succ[s].items():
            p = Fraction(p)
            if t in targets:
                rhs += p
            elif t in pos:
                row[pos[t]] -= p
        a.append(row)
        b.append(rhs)
    sol = _solve_unique(a, b)
    if source in targets:
        return Fraction(1)
    return sol[pos[source]]


def mdp_extreme_reach(transitions, targets, maximise=True):
    """Optimal reachability probabilities over all memoryless strategies.

    Exhaustively evaluates every pure memoryless strategy with
    `chain_reach_probability` and takes the per-state optimum.  Memoryless
    pure strategies suffice for MDP reachability, so this is exact (and
    exponential - small models only).
    """
    states = sorted(transitions)
    actions = [sorted(transitions[s]) for s in states]
    best = None
    for combo in product(*actions):
        choice = dict(zip(states, combo))
        vals = [chain_reach_probability(transitions, choice, targets, s)
                for s in states]
        if best is None:
            best = vals
        elif maximise:
            best = [max(a, b) for a, b in zip(best, vals)]
        else:
            best = [min(a, b) for a, b in zip(best, vals)]
    return dict(zip(states, best))


def swne_value(z1, z2):
    """The (u, v) pair of the welfare-optimal equilibrium of (z1, z2).

    Selection mirrors the documented rule — maximum payoff sum, preferring an
    equal-payoff equilibrium, else one maximal for the first player — but is
    computed from this module's independent equilibrium finder.  The chosen
    value pair is unique under that rule, so no tie-breaking on strategies is
    needed.
    """
    equilibria = nash_equilibria_by_support(z1, z2)
    best_sum = max(u + v for _, _, u, v in equilibria)
    pool = [(u, v) for _, _, u, v in equilibria if u + v == best_sum]
    equal = [(u, v) for u, v in pool if u == v]
    if equal:
        return equal[0]
    best_u = max(u for u, _ in pool)
    return next((u, v) for u, v in pool if u == best_u)


def bounded_max_reach(transitions, targets, horizon):
    """Cooperative max probabilities of reaching `targets` within h steps.

    `transitions` maps state -> {joint-action: {successor: prob}}.  Returns a
    list of per-state value dicts indexed by horizon 0..horizon.
    """
    targets = set(targets)
    states = sorted(transitions)
    vals = {s: Fraction(1) if s in targets else Fraction(0) for s in states}
    family = [vals]
    for _ in range(horizon):
        vals = {s: Fraction(1) if s in targets else
                max(sum(Fraction(p) * vals[t] for t, p in dist.items())
                    for dist in transitions[s].values())
                for s in states}
        family.append(vals)
    return family


def bounded_reach_pair(transitions, targets1, targets2, horizon):
    """Equilibrium values of a bounded reachability-objective pair.

    Backwards induction over `horizon` stages: states inside a target are
    settled for that objective (value 1, the other objective continued
    cooperatively at the remaining horizon); elsewhere the one-shot game over
    the joint actions' continuation values is solved for its welfare-optimal
    equilibrium.  Joint actions must be (side-1 action, side-2 action) pairs.
    Exact rationals throughout.
    """
    states = sorted(transitions)
    coop1 = bounded_max_reach(transitions, targets1, horizon)
    coop2 = bounded_max_reach(transitions, targets2, horizon)
    targets1, targets2 = set(targets1), set(targets2)
    vals = {s: (Fraction(s in targets1), Fraction(s in targets2))
            for s in states}
    for n in range(1, horizon + 1):
        new = {}
        for s in states:
            in1, in2 = s in targets1, s in targets2
            if in1 and in2:
                new[s] = (Fraction(1), Fraction(1))
            elif in1:
                new[s] = (Fraction(1), coop2[n][s])
            elif in2:
                new[s] = (coop1[n][s], Fraction(1))
            else:
                acts1 = sorted({pair[0] for pair in transitions[s]})
                acts2 = sorted({pair[1] for pair in transitions[s]})
                z1 = [[sum(Fraction(p) * vals[t][0]
                           for t, p in transitions[s][(a, b)].items())
                       for b in acts2] for a in acts1]
                z2 = [[sum(Fraction(p) * vals[t][1]
                           for t, p in transitions[s][(a, b)].items())
                       for b in acts2] for a in acts1]
                new[s] = swne_value(z1, z2)
        vals = new
    return vals


def bounded_cumulative_pair(transitions, rewards1, rewards2, horizon):
    """Equilibrium values of a pair of bounded cumulative-reward objectives.

    `rewards_l` maps (state, joint-action) to the reward that objective l
    collects in that step (state plus action share).  Neither objective ever
    settles, so every stage of the backwards induction is a one-shot
    equilibrium solve over reward-plus-continuation payoffs.
    """
    states = sorted(transitions)
    vals = {s: (Fraction(0), Fraction(0)) for s in states}
    for _ in range(horizon):
        new = {}
        for s in states:
            acts1 = sorted({pair[0] for pair in transitions[s]})
            acts2 = sorted({pair[1] for pair in transitions[s]})
            z1 = [[Fraction(rewards1.get((s, (a, b)), 0)) +
                   sum(Fraction(p) * vals[t][0]
                       for t, p in transitions[s][(a, b)].items())
                   for b in acts2] for a in acts1]
            z2 = [[Fraction(rewards2.get((s, (a, b)), 0)) +
                   sum(Fraction(p) * vals[t][1]
                       for t, p in transitions[s][(a, b)].items())
                   for b in acts2] for a in acts1]
            new[s] = swne_value(z1, z2)
        vals = new
    return vals
