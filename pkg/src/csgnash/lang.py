"""Guarded-command modelling language for concurrent stochastic games.

PRISM-like surface syntax with one extension: commands may be labelled with a
LIST of actions `[a1,a2,...]`, at most one per player, exactly one belonging
to the owning module's player.  Such a command fires only when every named
player picks the listed action, which lets a single command update variables
in a correlated way across players' choices (e.g. a shared channel).

    csg
    const int emax = 10;
    const double q2 = 0.75;
    player p1 user1, channel endplayer
    player p2 user2 endplayer
    module user1
      e1 : [0..emax] init emax;
      [t1] e1>0 -> (e1'=e1-1);
    endmodule
    ...
    rewards "r1"
      [t1,t2] true : q2;      // action reward, unnamed players unconstrained
      e1=0 : 1;               // state reward
    endrewards
    label "sent1" = s1=1;

Semantics per step: every player whose modules have an enabled own-action
command picks one such action (players with none idle); the joint action
fires, in every module, the unique matching enabled command (none: the
module's variables freeze; more than one: UpdateClash).  Updates of firing
commands are sampled independently per module and read the pre-state.  Each
variable is written only by its declaring module, so writes never conflict.

State exploration is breadth-first from the initial valuation with a stable
order, all arithmetic exact (decimal literals become rationals).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    AlphabetViolation,
    ModelSyntaxError,
    ModelTypeError,
    ProbabilitySum,
    RangeOverflow,
    UndeclaredSymbol,
    UndefinedConstant,
    UpdateClash,
)
from .expr import (
    Lit,
    TokenStream,
    eval_expr,
    free_vars,
    parse_expression,
    tokenize,
)
from .model import IDLE, Csg, RewardStructure

__all__ = ["parse_model", "build_csg", "load_model", "ModelAst"]


# --- AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: str           # int | double | bool | None (untyped)
    value: object       # expression AST or None (must be overridden)
    line: int


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str           # int | bool
    low: object         # expression (int only)
    high: object
    init: object
    line: int


@dataclass(frozen=True)
class Command:
    actions: tuple      # one or more action names
    guard: object
    updates: tuple      # ((prob expression, ((var, expression), ...)), ...)
    line: int


@dataclass(frozen=True)
class Module:
    name: str
    variables: tuple
    commands: tuple
    line: int


@dataclass(frozen=True)
class PlayerBlock:
    name: str
    modules: tuple
    actions: tuple      # explicitly declared alphabet entries
    line: int


@dataclass(frozen=True)
class RewardItem:
    actions: tuple      # () for state rewards
    guard: object
    value: object
    line: int


@dataclass(frozen=True)
class RewardBlock:
    name: str
    items: tuple


@dataclass(frozen=True)
class ModelAst:
    constants: tuple
    players: tuple
    modules: tuple
    rewards: tuple
    labels: tuple       # (name, expression) pairs
    alphabets: dict = field(default_factory=dict)   # player -> frozenset
    owner: dict = field(default_factory=dict)       # module -> player
    action_owner: dict = field(default_factory=dict)


# --- parser ----------------------------------------------------------------------

def parse_model(text) -> ModelAst:
    ts = TokenStream(tokenize(text))
    constants, players, modules, rewards, labels = [], [], [], [], []
    tok = ts.peek()
    if tok.kind == "id" and tok.value in ("csg", "smg"):
        ts.next()
    while ts.peek().kind != "end":
        tok = ts.peek()
        if tok.kind != "id":
            ts.error(f"unexpected token {tok.value!r}")
        if tok.value == "const":
            constants.append(_parse_const(ts))
        elif tok.value == "player":
            players.append(_parse_player(ts))
        elif tok.value == "module":
            modules.append(_parse_module(ts))
        elif tok.value == "rewards":
            rewards.append(_parse_rewards(ts))
        elif tok.value == "label":
            labels.append(_parse_label(ts))
        else:
            ts.error(f"unexpected declaration {tok.value!r}")
    ast = ModelAst(tuple(constants), tuple(players), tuple(modules),
                   tuple(rewards), tuple(labels))
    return _check_model(ast)


def _parse_const(ts):
    tok = ts.next()
    line = tok.line
    typ = None
    name_tok = ts.expect_id()
    if name_tok.value in ("int", "double", "bool"):
        typ = name_tok.value
        name_tok = ts.expect_id()
    value = None
    if ts.take_sym("="):
        value = parse_expression(ts)
    ts.expect_sym(";")
    return ConstDecl(name_tok.value, typ, value, line)


def _parse_player(ts):
    tok = ts.next()
    name = ts.expect_id().value
    mods, actions = [], []
    while True:
        item = ts.peek()
        if item.kind == "id" and item.value == "endplayer":
            ts.next()
            break
        if ts.take_sym("["):
            actions.append(ts.expect_id().value)
            ts.expect_sym("]")
        else:
            mods.append(ts.expect_id().value)
        ts.take_sym(",")
    if not mods and not actions:
        raise ModelSyntaxError(f"player {name!r} lists no modules or actions",
                               tok.line, tok.col)
    return PlayerBlock(name, tuple(mods), tuple(actions), tok.line)


def _parse_module(ts):
    tok = ts.next()
    name = ts.expect_id().value
    variables, commands = [], []
    while True:
        nxt = ts.peek()
        if nxt.kind == "id" and nxt.value == "endmodule":
            ts.next()
            break
        if nxt.kind == "end":
            ts.error(f"unterminated module {name!r}")
        if ts.at_sym("["):
            commands.append(_parse_command(ts))
        else:
            variables.append(_parse_vardecl(ts))
    return Module(name, tuple(variables), tuple(commands), tok.line)


def _parse_vardecl(ts):
    name_tok = ts.expect_id()
    ts.expect_sym(":")
    if ts.take_sym("["):
        low = parse_expression(ts)
        ts.expect_sym("..")
        high = parse_expression(ts)
        ts.expect_sym("]")
        kind = "int"
    else:
        tok = ts.expect_id()
        if tok.value != "bool":
            raise ModelSyntaxError("expected a [lo..hi] range or bool",
                                   tok.line, tok.col)
        kind = "bool"
        low = high = None
    init_tok = ts.expect_id()
    if init_tok.value != "init":
        raise ModelSyntaxError("variable ranges are mandatory and need an "
                               "'init' value", init_tok.line, init_tok.col)
    init = parse_expression(ts)
    ts.expect_sym(";")
    return VarDecl(name_tok.value, kind, low, high, init, name_tok.line)


def _parse_action_list(ts):
    ts.expect_sym("[")
    actions = [ts.expect_id().value]
    while ts.take_sym(","):
        actions.append(ts.expect_id().value)
    ts.expect_sym("]")
    return tuple(actions)


def _parse_command(ts):
    tok = ts.peek()
    actions = _parse_action_list(ts)
    guard = parse_expression(ts)
    ts.expect_sym("->")
    updates = [_parse_branch(ts)]
    while ts.take_sym("+"):
        updates.append(_parse_branch(ts))
    ts.expect_sym(";")
    return Command(actions, guard, tuple(updates), tok.line)


def _parse_branch(ts):
    """One update alternative: `prob : assignments` or bare assignments."""
    save = ts.pos
    try:
        prob = parse_expression(ts, min_level=3)
        if ts.take_sym(":"):
            return (prob, _parse_assignments(ts))
    except (ModelSyntaxError, ModelTypeError):
        pass
    ts.pos = save
    return (Lit(1), _parse_assignments(ts))


def _parse_assignments(ts):
    tok = ts.peek()
    if tok.kind == "id" and tok.value == "true":
        ts.next()
        return ()
    assigns = [_parse_assignment(ts)]
    while ts.take_sym("&"):
        assigns.append(_parse_assignment(ts))
    return tuple(assigns)


def _parse_assignment(ts):
    ts.expect_sym("(")
    name = ts.expect_id()
    ts.expect_sym("'")
    ts.expect_sym("=")
    value = parse_expression(ts)
    ts.expect_sym(")")
    return (name.value, value)


def _parse_rewards(ts):
    ts.next()
    tok = ts.next()
    if tok.kind not in ("id", "str"):
        raise ModelSyntaxError("rewards block needs a name", tok.line, tok.col)
    name = tok.value
    items = []
    while True:
        nxt = ts.peek()
        if nxt.kind == "id" and nxt.value == "endrewards":
            ts.next()
            break
        if nxt.kind == "end":
            ts.error(f"unterminated rewards block {name!r}")
        actions = _parse_action_list(ts) if ts.at_sym("[") else ()
        guard = parse_expression(ts)
        ts.expect_sym(":")
        value = parse_expression(ts)
        ts.expect_sym(";")
        items.append(RewardItem(actions, guard, value, nxt.line))
    return RewardBlock(name, tuple(items))


def _parse_label(ts):
    ts.next()
    tok = ts.next()
    if tok.kind != "str":
        raise ModelSyntaxError('labels are declared as label "name" = pred;',
                               tok.line, tok.col)
    ts.expect_sym("=")
    value = parse_expression(ts)
    ts.expect_sym(";")
    return (tok.value, value)


# --- static checks ----------------------------------------------------------------

def _check_model(ast: ModelAst) -> ModelAst:
    if not ast.modules:
        raise ModelSyntaxError("a model needs at least one module")
    module_by_name = {}
    for mod in ast.modules:
        if mod.name in module_by_name:
            raise ModelSyntaxError(f"duplicate module {mod.name!r}", mod.line)
        module_by_name[mod.name] = mod

    owner = {}
    for block in ast.players:
        for mname in block.modules:
            if mname not in module_by_name:
                raise UndeclaredSymbol(f"player {block.name!r} lists unknown "
                                       f"module {mname!r}", block.line)
            if mname in owner:
                raise ModelSyntaxError(f"module {mname!r} belongs to two "
                                       f"players", block.line)
            owner[mname] = block.name
    for mod in ast.modules:
        if mod.name not in owner:
            raise ModelSyntaxError(f"module {mod.name!r} is not assigned to "
                                   f"a player", mod.line)

    # pass 1: alphabets = declared actions + single-labelled command actions
    alphabets = {block.name: set(block.actions) for block in ast.players}
    for mod in ast.modules:
        for cmd in mod.commands:
            if len(cmd.actions) == 1:
                alphabets[owner[mod.name]].add(cmd.actions[0])
    action_owner = {}
    for player, acts in alphabets.items():
        for a in acts:
            if a in action_owner and action_owner[a] != player:
                raise AlphabetViolation(
                    f"action {a!r} appears in the alphabets of "
                    f"{action_owner[a]!r} and {player!r}")
            action_owner[a] = player

    # pass 2: action-list commands
    for mod in ast.modules:
        player = owner[mod.name]
        for cmd in mod.commands:
            if len(cmd.actions) == 1:
                continue
            owners = []
            for a in cmd.actions:
                if a not in action_owner:
                    raise AlphabetViolation(
                        f"action {a!r} in a list command is not in any "
                        f"player's alphabet", cmd.line)
                owners.append(action_owner[a])
            if len(set(owners)) != len(owners):
                raise AlphabetViolation(
                    "a list command may name at most one action per player",
                    cmd.line)
            if owners.count(player) != 1:
                raise AlphabetViolation(
                    f"exactly one action of a list command must belong to "
                    f"the owning module's player {player!r}", cmd.line)

    # every variable written by a module is declared by it; no duplicates
    declared = {}
    for mod in ast.modules:
        for var in mod.variables:
            if var.name in declared:
                raise ModelSyntaxError(f"variable {var.name!r} declared twice",
                                       var.line)
            declared[var.name] = mod.name
    for mod in ast.modules:
        for cmd in mod.commands:
            for _, assigns in cmd.updates:
                for name, _ in assigns:
                    if declared.get(name) != mod.name:
                        raise UndeclaredSymbol(
                            f"module {mod.name!r} writes variable {name!r} "
                            f"which it does not declare", cmd.line)

    # symbol resolution in expressions
    known = set(declared) | {c.name for c in ast.constants}
    def check_expr(node, line):
        for name in free_vars(node):
            if name not in known:
                raise UndeclaredSymbol(f"unknown symbol {name!r}", line)
    for c in ast.constants:
        if c.value is not None:
            check_expr(c.value, c.line)
    for mod in ast.modules:
        for var in mod.variables:
            for part in (var.low, var.high, var.init):
                if part is not None:
                    check_expr(part, var.line)
        for cmd in mod.commands:
            check_expr(cmd.guard, cmd.line)
            for prob, assigns in cmd.updates:
                check_expr(prob, cmd.line)
                for _, value in assigns:
                    check_expr(value, cmd.line)
    for block in ast.rewards:
        for item in block.items:
            check_expr(item.guard, item.line)
            check_expr(item.value, item.line)
            for a in item.actions:
                if a not in action_owner:
                    raise AlphabetViolation(
                        f"reward item names unknown action {a!r}", item.line)
    for name, pred in ast.labels:
        check_expr(pred, 0)

    return ModelAst(ast.constants, ast.players, ast.modules, ast.rewards,
                    ast.labels,
                    {p: frozenset(a) for p, a in alphabets.items()},
                    owner, action_owner)


# --- constant resolution ------------------------------------------------------------

def _parse_override(text):
    if isinstance(text, str):
        if text == "true":
            return True
        if text == "false":
            return False
        try:
            return int(text)
        except ValueError:
            pass
        try:
            return Fraction(text)
        except ValueError:
            raise ModelTypeError(f"cannot parse constant value {text!r}")
    return text


def resolve_constants(ast: ModelAst, overrides=None):
    overrides = {k: _parse_override(v) for k, v in (overrides or {}).items()}
    declared = {c.name: c for c in ast.constants}
    for name in overrides:
        if name not in declared:
            raise UndeclaredSymbol(f"override for unknown constant {name!r}")
    env = {}
    pending = list(ast.constants)
    while pending:
        progress = False
        remaining = []
        for c in pending:
            if c.name in overrides:
                env[c.name] = overrides[c.name]
                progress = True
                continue
            if c.value is None:
                raise UndefinedConstant(
                    f"constant {c.name!r} has no value; supply one with "
                    f"-const {c.name}=...", c.line)
            try:
                env[c.name] = eval_expr(c.value, env)
                progress = True
            except UndeclaredSymbol:
                remaining.append(c)
        if not progress:
            names = ", ".join(c.name for c in remaining)
            raise UndefinedConstant(f"circular constant definitions: {names}")
        pending = remaining
    for name, value in env.items():
        typ = declared[name].type
        if typ == "int" and (isinstance(value, bool) or
                             (isinstance(value, Fraction) and value.denominator != 1)
                             or not isinstance(value, (int, Fraction))):
            raise ModelTypeError(f"constant {name!r} must be an integer")
        if typ == "int" and isinstance(value, Fraction):
            env[name] = int(value)
        if typ == "double" and (isinstance(value, bool) or
                                not isinstance(value, (int, Fraction))):
            raise ModelTypeError(f"constant {name!r} must be numeric")
        if typ == "bool" and not isinstance(value, bool):
            raise ModelTypeError(f"constant {name!r} must be boolean")
    return env


# --- state-space construction ---------------------------------------------------------

class _VarInfo:
    def __init__(self, decl, constants):
        self.name = decl.name
        self.kind = decl.kind
        if decl.kind == "int":
            self.low = eval_expr(decl.low, constants)
            self.high = eval_expr(decl.high, constants)
            if isinstance(self.low, Fraction) or isinstance(self.high, Fraction):
                self.low, self.high = int(self.low), int(self.high)
            if self.low > self.high:
                raise RangeOverflow(f"empty range for variable {decl.name!r}")
        init = eval_expr(decl.init, constants)
        if decl.kind == "int":
            if isinstance(init, bool) or not isinstance(init, (int, Fraction)):
                raise ModelTypeError(f"init of {decl.name!r} must be an integer")
            init = int(init)
            if not self.low <= init <= self.high:
                raise RangeOverflow(f"init of {decl.name!r} outside its range")
        elif not isinstance(init, bool):
            raise ModelTypeError(f"init of {decl.name!r} must be boolean")
        self.init = init

    def check(self, value, line):
        if self.kind == "int":
            if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
                raise ModelTypeError(
                    f"assignment to {self.name!r} must be an integer")
            if isinstance(value, Fraction):
                if value.denominator != 1:
                    raise ModelTypeError(
                        f"assignment to {self.name!r} must be an integer")
                value = int(value)
            if not self.low <= value <= self.high:
                raise RangeOverflow(
                    f"variable {self.name!r} leaves its range [{self.low}.."
                    f"{self.high}] (value {value})")
            return value
        if not isinstance(value, bool):
            raise ModelTypeError(f"assignment to {self.name!r} must be boolean")
        return value


def build_csg(ast: ModelAst, overrides=None) -> Csg:
    """Explore the reachable state space and return the game.

    The returned Csg additionally carries `valuations` (state -> variable
    environment), `constants`, `var_order`, and `label_names` so properties
    can refer to model variables.
    """
    constants = resolve_constants(ast, overrides)
    players = tuple(block.name for block in ast.players)
    var_infos = []
    for mod in ast.modules:
        for decl in mod.variables:
            var_infos.append((mod.name, _VarInfo(decl, constants)))
    var_order = tuple(info.name for _, info in var_infos)
    info_by_name = {info.name: info for _, info in var_infos}

    module_cmds = {mod.name: mod.commands for mod in ast.modules}
    player_modules = {block.name: block.modules for block in ast.players}

    def env_of(state):
        env = dict(constants)
        env.update(zip(var_order, state))
        return env

    def own_action(cmd, player):
        for a in cmd.actions:
            if ast.action_owner[a] == player:
                return a
        return None

    def available(player, env):
        acts = set()
        for mname in player_modules[player]:
            for cmd in module_cmds[mname]:
                mine = own_action(cmd, player)
                if mine is not None and _truth(cmd.guard, env, cmd.line):
                    acts.add(mine)
        return sorted(acts)

    def matching_command(mname, joint_by_player, env, state):
        found = None
        for cmd in module_cmds[mname]:
            if not all(joint_by_player.get(ast.action_owner[a]) == a
                       for a in cmd.actions):
                continue
            if not _truth(cmd.guard, env, cmd.line):
                continue
            if found is not None:
                raise UpdateClash(
                    f"module {mname!r}: two commands (lines {found.line} and "
                    f"{cmd.line}) fire together at state "
                    f"{dict(zip(var_order, state))}")
            found = cmd
        return found

    init_state = tuple(info.init for _, info in var_infos)
    order = [init_state]
    seen = {init_state}
    trans = {}
    queue = [init_state]
    while queue:
        state = queue.pop(0)
        env = env_of(state)
        avail = {}
        any_available = False
        for player in players:
            acts = available(player, env)
            if acts:
                any_available = True
            avail[player] = acts or [IDLE]
        state_trans = {}
        if not any_available:
            trans[state] = {}          # Csg.create adds the idle self-loop
            continue
        joints = [()]
        for player in players:
            joints = [j + (a,) for j in joints for a in avail[player]]
        for joint in joints:
            joint_by_player = dict(zip(players, joint))
            dist = {(): Fraction(1)}
            for mod in ast.modules:
                cmd = matching_command(mod.name, joint_by_player, env, state)
                if cmd is None:
                    continue
                branches = []
                total = Fraction(0)
                for prob, assigns in cmd.updates:
                    p = eval_expr(prob, env)
                    if isinstance(p, bool) or not isinstance(p, (int, Fraction)):
                        raise ModelTypeError(
                            f"probability is not numeric at line {cmd.line}")
                    p = Fraction(p)
                    if p < 0:
                        raise ProbabilitySum(
                            f"negative probability at line {cmd.line}")
                    total += p
                    if p > 0:
                        branches.append((p, assigns))
                if total != 1:
                    raise ProbabilitySum(
                        f"probabilities at line {cmd.line} sum to {total} at "
                        f"state {dict(zip(var_order, state))}")
                new_dist = {}
                for partial, pp in dist.items():
                    for p, assigns in branches:
                        resolved = []
                        for name, value_expr in assigns:
                            value = info_by_name[name].check(
                                eval_expr(value_expr, env), cmd.line)
                            resolved.append((name, value))
                        key = partial + tuple(resolved)
                        new_dist[key] = new_dist.get(key, Fraction(0)) + pp * p
                dist = new_dist
            succ_dist = {}
            for assigns, p in dist.items():
                new_env = dict(zip(var_order, state))
                for name, value in assigns:
                    new_env[name] = value
                succ = tuple(new_env[name] for name in var_order)
                succ_dist[succ] = succ_dist.get(succ, Fraction(0)) + p
            state_trans[joint] = succ_dist
            for succ in succ_dist:
                if succ not in seen:
                    seen.add(succ)
                    order.append(succ)
                    queue.append(succ)
        trans[state] = state_trans

    # labels
    labels = {}
    for state in order:
        env = env_of(state)
        labels[state] = {name for name, pred in ast.labels
                         if _truth(pred, env, 0)}

    # rewards
    rewards = {}
    for block in ast.rewards:
        action_rewards, state_rewards = {}, {}
        for state in order:
            env = env_of(state)
            for item in block.items:
                if not _truth(item.guard, env, item.line):
                    continue
                value = eval_expr(item.value, env)
                if not item.actions:
                    state_rewards[state] = state_rewards.get(state, 0) + value
                    continue
                wanted = {ast.action_owner[a]: a for a in item.actions}
                for joint in trans[state]:
                    by_player = dict(zip(players, joint))
                    if all(by_player.get(p) == a for p, a in wanted.items()):
                        key = (state, joint)
                        action_rewards[key] = action_rewards.get(key, 0) + value
        rewards[block.name] = RewardStructure(action_rewards, state_rewards)

    game = Csg.create(players, ast.alphabets, order, [init_state], trans,
                      labels, rewards)
    valuations = {s: dict(zip(var_order, s)) for s in game.states}
    object.__setattr__(game, "valuations", valuations)
    object.__setattr__(game, "constants", dict(constants))
    object.__setattr__(game, "var_order", var_order)
    object.__setattr__(game, "label_names", frozenset(n for n, _ in ast.labels))
    return game


def _truth(expr, env, line):
    value = eval_expr(expr, env)
    if not isinstance(value, bool):
        raise ModelTypeError(f"expected a boolean condition at line {line}")
    return value


def load_model(path, overrides=None) -> Csg:
    with open(path, encoding="utf-8") as handle:
        return build_csg(parse_model(handle.read()), overrides)
