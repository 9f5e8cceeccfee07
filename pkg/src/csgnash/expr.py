"""Shared tokenizer, expression AST, parser, and evaluator.

Used by both the model language and the property language.  Numbers are kept
exact: integer literals as ints, decimal literals as Fractions.  Boolean and
arithmetic operators follow the usual precedence

    |  <  &  <  !  <  comparisons  <  + -  <  * /  <  unary -  <  atoms

and the functions min, max, floor, ceil, pow, mod are available.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ModelSyntaxError, ModelTypeError, UndeclaredSymbol

__all__ = [
    "Token", "TokenStream", "tokenize",
    "Lit", "Var", "Unary", "Binary", "Call",
    "parse_expression", "eval_expr", "free_vars", "expr_to_text",
]

_SYMBOLS = [
    "<<", ">>", "<=", ">=", "!=", "=?", "->", "..",
    "&", "|", "!", "(", ")", "[", "]", "{", "}",
    "+", "-", "*", "/", ",", ";", ":", "=", "<", ">", "?", "'",
]


@dataclass(frozen=True)
class Token:
    kind: str          # num | id | str | sym | end
    value: object
    line: int
    col: int


def tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i) or c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ModelSyntaxError("unterminated string", line, col)
            tokens.append(Token("str", text[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and not text.startswith("..", j):
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                value = Fraction(text[i:j])
            else:
                value = int(text[i:j])
            tokens.append(Token("num", value, line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("id", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ModelSyntaxError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("end", None, line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.peek()
        if tok.kind != "end":
            self.pos += 1
        return tok

    def at_sym(self, *symbols):
        tok = self.peek()
        return tok.kind == "sym" and tok.value in symbols

    def take_sym(self, *symbols):
        if self.at_sym(*symbols):
            return self.next()
        return None

    def expect_sym(self, symbol):
        tok = self.next()
        if tok.kind != "sym" or tok.value != symbol:
            raise ModelSyntaxError(
                f"expected {symbol!r}, got {tok.value!r}", tok.line, tok.col)
        return tok

    def expect_id(self):
        tok = self.next()
        if tok.kind != "id":
            raise ModelSyntaxError(
                f"expected a name, got {tok.value!r}", tok.line, tok.col)
        return tok

    def error(self, message):
        tok = self.peek()
        raise ModelSyntaxError(message, tok.line, tok.col)


# --- expression AST -----------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class Var:
    name: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


_FUNCS = {"min", "max", "floor", "ceil", "pow", "mod"}
_CMP = ("=", "!=", "<=", ">=", "<", ">")


def parse_expression(ts: TokenStream, min_level=0):
    """Precedence-climbing parser; levels: 0 '|', 1 '&', 2 comparisons,
    3 additive, 4 multiplicative."""
    return _parse_or(ts) if min_level == 0 else _LEVELS[min_level](ts)


def _parse_or(ts):
    node = _parse_and(ts)
    while ts.take_sym("|"):
        node = Binary("|", node, _parse_and(ts))
    return node


def _parse_and(ts):
    node = _parse_cmp(ts)
    while ts.take_sym("&"):
        node = Binary("&", node, _parse_cmp(ts))
    return node


def _parse_cmp(ts):
    node = _parse_add(ts)
    if ts.at_sym(*_CMP):
        op = ts.next().value
        node = Binary(op, node, _parse_add(ts))
    return node


def _parse_add(ts):
    node = _parse_mul(ts)
    while ts.at_sym("+", "-"):
        op = ts.next().value
        node = Binary(op, node, _parse_mul(ts))
    return node


def _parse_mul(ts):
    node = _parse_unary(ts)
    while ts.at_sym("*", "/"):
        op = ts.next().value
        node = Binary(op, node, _parse_unary(ts))
    return node


def _parse_unary(ts):
    if ts.take_sym("-"):
        return Unary("-", _parse_unary(ts))
    if ts.take_sym("!"):
        return Unary("!", _parse_unary(ts))
    return _parse_atom(ts)


def _parse_atom(ts):
    tok = ts.peek()
    if tok.kind == "num":
        ts.next()
        return Lit(tok.value)
    if tok.kind == "id":
        ts.next()
        if tok.value in ("true", "false"):
            return Lit(tok.value == "true")
        if tok.value in _FUNCS and ts.at_sym("("):
            ts.next()
            args = [parse_expression(ts)]
            while ts.take_sym(","):
                args.append(parse_expression(ts))
            ts.expect_sym(")")
            return Call(tok.value, tuple(args))
        return Var(tok.value, tok.line, tok.col)
    if ts.take_sym("("):
        node = parse_expression(ts)
        ts.expect_sym(")")
        return node
    ts.error(f"expected an expression, got {tok.value!r}")


_LEVELS = {0: _parse_or, 1: _parse_and, 2: _parse_cmp, 3: _parse_add,
           4: _parse_mul}


def free_vars(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return free_vars(node.operand)
    if isinstance(node, Binary):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_vars(a)
        return out
    return set()


def _need_num(value, node):
    if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
        raise ModelTypeError(f"expected a number in {expr_to_text(node)}")
    return value


def _need_bool(value, node):
    if not isinstance(value, bool):
        raise ModelTypeError(f"expected a boolean in {expr_to_text(node)}")
    return value


def eval_expr(node, env):
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Var):
        if node.name not in env:
            raise UndeclaredSymbol(f"unknown symbol {node.name!r}",
                                   node.line, node.col)
        return env[node.name]
    if isinstance(node, Unary):
        val = eval_expr(node.operand, env)
        if node.op == "-":
            return -_need_num(val, node)
        return not _need_bool(val, node)
    if isinstance(node, Binary):
        lhs = eval_expr(node.left, env)
        if node.op == "&":
            return _need_bool(lhs, node) and _need_bool(eval_expr(node.right, env), node)
        if node.op == "|":
            return _need_bool(lhs, node) or _need_bool(eval_expr(node.right, env), node)
        rhs = eval_expr(node.right, env)
        if node.op == "=":
            return lhs == rhs
        if node.op == "!=":
            return lhs != rhs
        if node.op in ("<", "<=", ">", ">="):
            lhs, rhs = _need_num(lhs, node), _need_num(rhs, node)
            return {"<": lhs < rhs, "<=": lhs <= rhs,
                    ">": lhs > rhs, ">=": lhs >= rhs}[node.op]
        lhs, rhs = _need_num(lhs, node), _need_num(rhs, node)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if node.op == "/":
            return Fraction(lhs) / rhs
    if isinstance(node, Call):
        args = [eval_expr(a, env) for a in node.args]
        if node.func in ("min", "max"):
            nums = [_need_num(a, node) for a in args]
            return min(nums) if node.func == "min" else max(nums)
        if node.func == "floor":
            import math
            return math.floor(_need_num(args[0], node))
        if node.func == "ceil":
            import math
            return math.ceil(_need_num(args[0], node))
        if node.func == "pow":
            return _need_num(args[0], node) ** int(_need_num(args[1], node))
        if node.func == "mod":
            return int(_need_num(args[0], node)) % int(_need_num(args[1], node))
    raise ModelTypeError(f"cannot evaluate {node!r}")


def expr_to_text(node):
    if isinstance(node, Lit):
        if isinstance(node.value, bool):
            return "true" if node.value else "false"
        if isinstance(node.value, Fraction) and node.value.denominator != 1:
            # literal Fractions come from decimal tokens, so the denominator
            # is of the form 2^a 5^b and an exact decimal rendering exists
            num, den = node.value.numerator, node.value.denominator
            twos = fives = 0
            while den % 2 == 0:
                den //= 2
                twos += 1
            while den % 5 == 0:
                den //= 5
                fives += 1
            if den != 1:
                return f"{node.value.numerator}/{node.value.denominator}"
            k = max(twos, fives)
            digits = str(abs(num) * 10 ** k // node.value.denominator).rjust(k + 1, "0")
            sign = "-" if num < 0 else ""
            return f"{sign}{digits[:-k]}.{digits[-k:]}"
        return str(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"{node.op}({expr_to_text(node.operand)})"
    if isinstance(node, Binary):
        return f"({expr_to_text(node.left)} {node.op} {expr_to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(expr_to_text(a) for a in node.args)})"
    return repr(node)
