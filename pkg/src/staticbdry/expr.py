"""Closed-form scalar expressions: parsing, printing, exact differentiation.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

Note that with this grammar ``-x^2`` parses as ``(-x)^2``. There is no
implicit multiplication, so ``2r`` is a syntax error.

Trees are immutable and hash-consed only loosely (structural equality with a
cached hash), which lets :func:`compile_exprs` share common subexpressions
between the many derivative trees of a metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

__all__ = [
    "Expr", "Const", "Var", "Neg", "BinOp", "Call",
    "ExprError", "ExprSyntaxError", "UnknownFunctionError",
    "ExprDomainError", "UnboundVariableError",
    "FUNCTIONS", "parse", "as_expr", "to_source", "differentiate",
    "evaluate", "free_vars", "substitute", "compile_exprs",
    "const", "add", "sub", "mul", "div", "power", "neg", "call",
]


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownFunctionError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    pass


class UnboundVariableError(ExprError, LookupError):
    pass


FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "abs")


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __str__(self):
        return to_source(self)

    # operator sugar, folds constants like the differentiation rules do
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)


def _node(cls):
    cls = dataclass(frozen=True, eq=False, repr=True)(cls)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(self._key()))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._key() == other._key()

    cls.__post_init__ = __post_init__
    cls.__hash__ = __hash__
    cls.__eq__ = __eq__
    return cls


@_node
class Const(Expr):
    value: float
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def _key(self):
        return ("c", self.value)


@_node
class Var(Expr):
    name: str
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def _key(self):
        return ("v", self.name)


@_node
class Neg(Expr):
    arg: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def _key(self):
        return ("neg", self.arg)


@_node
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def _key(self):
        return (self.op, self.left, self.right)


@_node
class Call(Expr):
    func: str
    arg: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def _key(self):
        return ("f", self.func, self.arg)


ExprLike = Union[Expr, str, int, float]

ZERO = Const(0.0)
ONE = Const(1.0)


# -- numeric kernels shared by the interpreter, constant folding and compiled code

def _div(a, b):
    if b == 0.0:
        raise ExprDomainError("division by zero")
    return a / b


def _is_integer(x):
    return math.isfinite(x) and x == math.floor(x)


def _pow(a, b):
    if _is_integer(b):
        if a == 0.0 and b < 0:
            raise ExprDomainError("zero raised to a negative power")
    elif a < 0.0:
        raise ExprDomainError(f"non-integer power {b!r} of negative base {a!r}")
    elif a == 0.0 and b < 0:
        raise ExprDomainError("zero raised to a negative power")
    try:
        return math.pow(a, b)
    except OverflowError as exc:
        raise ExprDomainError(f"overflow in {a!r}^{b!r}") from exc


def _log(a):
    if a <= 0.0:
        raise ExprDomainError(f"log of nonpositive value {a!r}")
    return math.log(a)


def _sqrt(a):
    if a < 0.0:
        raise ExprDomainError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError as exc:
        raise ExprDomainError(f"overflow in exp({a!r})") from exc


def _trig(fn):
    def wrapped(a):
        try:
            return fn(a)
        except ValueError as exc:
            raise ExprDomainError(f"{fn.__name__} of {a!r}") from exc
    wrapped.__name__ = fn.__name__
    return wrapped


_FUNC_IMPL = {
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "sin": _trig(math.sin),
    "cos": _trig(math.cos),
    "abs": abs,
}

_BIN_IMPL = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}


# -- smart constructors: constant folding plus the x*0, x*1 family only

def const(value) -> Const:
    value = float(value)
    if value == 0.0:
        value = 0.0  # drop the sign of -0.0
    return Const(value)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def _fold(op, a, b):
    try:
        return const(_BIN_IMPL[op](a.value, b.value))
    except ExprDomainError:
        return None


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold("+", a, b) or BinOp("+", a, b)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(b, Neg):
        return BinOp("-", a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold("-", a, b) or BinOp("-", a, b)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(b, Neg):
        return BinOp("+", a, b.arg)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold("*", a, b) or BinOp("*", a, b)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold("/", a, b) or BinOp("/", a, b)
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return _fold("^", a, b) or BinOp("^", a, b)
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(func: str, a: Expr) -> Expr:
    if func not in _FUNC_IMPL:
        raise UnknownFunctionError(f"unknown function {func!r}", 0)
    if isinstance(a, Const):
        try:
            return const(_FUNC_IMPL[func](a.value))
        except ExprDomainError:
            pass
    return Call(func, a)


_SMART = {"+": add, "-": sub, "*": mul, "/": div, "^": power}


# -- parsing

def _tokenize(source):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    while k < n and source[k].isdigit():
                        k += 1
                    j = k
            tokens.append(("num", source[i:j], i))
            i = j
            continue
        if c.isascii() and c.isalpha():
            j = i
            while j < n and source[j].isascii() and source[j].isalnum():
                j += 1
            tokens.append(("ident", source[i:j], i))
            i = j
            continue
        if c in "+-*/^()":
            tokens.append((c, c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.open_parens = []

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, tok, what):
        if tok[0] == "end" and self.open_parens:
            raise ExprSyntaxError("unbalanced '('", self.open_parens[-1])
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ExprSyntaxError(f"expected {what}, found {found}", tok[2])

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(tok, "operator or end of input")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self):
        base = self.unary()
        if self.peek()[0] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def unary(self):
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.advance()
        kind, text, at = tok
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if self.peek()[0] == "(":
                if text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {text!r}", at)
                return Call(text, self.parenthesized())
            return Var(text)
        if kind == "(":
            self.pos -= 1
            return self.parenthesized()
        self.fail(tok, "number, identifier or '('")

    def parenthesized(self):
        tok = self.advance()
        self.open_parens.append(tok[2])
        e = self.expr()
        close = self.advance()
        if close[0] != ")":
            self.fail(close, "')'")
        self.open_parens.pop()
        return e


def parse(source: str) -> Expr:
    """Parse `source` into an expression tree (no simplification)."""
    return _Parser(source).parse()


def as_expr(value: ExprLike) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return const(value)
    raise TypeError(f"cannot make an expression from {value!r}")


# -- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_ATOM = 5


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg) or (isinstance(e, Const) and e.value < 0):
        return 3
    return _ATOM


def _num(value):
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_source(e: Expr) -> str:
    """Print `e` in the input grammar; ``parse(to_source(e))`` rebuilds it."""
    if isinstance(e, Const):
        return _num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        return f"-{inner}" if _prec(e.arg) == _ATOM else f"-({inner})"
    p = _PREC[e.op]
    left, right = to_source(e.left), to_source(e.right)
    if e.op == "^":
        if _prec(e.left) != _ATOM:
            left = f"({left})"
        if _prec(e.right) not in (_ATOM, 4):
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p or _prec(e.left) == 3:
        left = f"({left})"
    if _prec(e.right) <= p or _prec(e.right) == 3:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# -- analysis and rewriting

def free_vars(e: Expr) -> frozenset:
    out = set()
    stack = [e]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, BinOp):
            stack += [node.left, node.right]
        elif isinstance(node, (Neg, Call)):
            stack.append(node.arg)
    return frozenset(out)


def substitute(e: Expr, bindings: Mapping[str, ExprLike]) -> Expr:
    """Replace variables by values or expressions, folding constants."""
    table = {k: as_expr(v) for k, v in bindings.items()}
    memo = {}

    def walk(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = node
        elif isinstance(node, Var):
            out = table.get(node.name, node)
        elif isinstance(node, Neg):
            out = neg(walk(node.arg))
        elif isinstance(node, Call):
            out = call(node.func, walk(node.arg))
        else:
            out = _SMART[node.op](walk(node.left), walk(node.right))
        memo[node] = out
        return out

    return walk(e)


def differentiate(e: ExprLike, var: str) -> Expr:
    """Exact symbolic derivative of `e` with respect to `var`."""
    e = as_expr(e)
    memo = {}

    def d(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if node.name == var else ZERO
        elif isinstance(node, Neg):
            out = neg(d(node.arg))
        elif isinstance(node, Call):
            u = node.arg
            du = d(u)
            if _is_const(du, 0.0):
                out = ZERO
            elif node.func == "exp":
                out = mul(node, du)
            elif node.func == "log":
                out = div(du, u)
            elif node.func == "sqrt":
                out = div(du, mul(const(2), node))
            elif node.func == "sin":
                out = mul(call("cos", u), du)
            elif node.func == "cos":
                out = neg(mul(call("sin", u), du))
            else:  # abs; undefined where u = 0 through the division
                out = mul(div(u, node), du)
        else:
            u, v = node.left, node.right
            du, dv = d(u), d(v)
            if node.op == "+":
                out = add(du, dv)
            elif node.op == "-":
                out = sub(du, dv)
            elif node.op == "*":
                out = add(mul(du, v), mul(u, dv))
            elif node.op == "/":
                if _is_const(dv, 0.0):
                    out = div(du, v)
                else:
                    out = div(sub(mul(du, v), mul(u, dv)), power(v, const(2)))
            elif _is_const(dv, 0.0):
                out = mul(mul(v, power(u, sub(v, ONE))), du)
            elif _is_const(du, 0.0):
                out = mul(mul(node, call("log", u)), dv)
            else:
                out = mul(node, add(mul(dv, call("log", u)), div(mul(v, du), u)))
        memo[node] = out
        return out

    return d(e)


def evaluate(e: ExprLike, env: Mapping[str, float]) -> float:
    """Evaluate `e` with variables bound by `env` (tree-walking interpreter)."""
    e = as_expr(e)
    missing = free_vars(e) - set(env)
    if missing:
        raise UnboundVariableError(f"unbound variable(s): {', '.join(sorted(missing))}")
    memo = {}

    def ev(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Var):
            out = float(env[node.name])
        elif isinstance(node, Neg):
            out = -ev(node.arg)
        elif isinstance(node, Call):
            out = _FUNC_IMPL[node.func](ev(node.arg))
        else:
            out = _BIN_IMPL[node.op](ev(node.left), ev(node.right))
        memo[id(node)] = out
        return out

    return ev(e)


_OP_CODE = {"+": "{} + {}", "-": "{} - {}", "*": "{} * {}", "/": "_div({}, {})",
            "^": "_pow({}, {})"}


def _mp_scope():
    import mpmath

    def mdiv(a, b):
        if b == 0:
            raise ExprDomainError("division by zero")
        return a / b

    def mpow(a, b):
        if b == int(b):
            if a == 0 and b < 0:
                raise ExprDomainError("zero raised to a negative power")
            return a ** int(b)
        if a < 0:
            raise ExprDomainError(f"non-integer power {b!r} of negative base {a!r}")
        if a == 0 and b < 0:
            raise ExprDomainError("zero raised to a negative power")
        return mpmath.power(a, b)

    def mlog(a):
        if a <= 0:
            raise ExprDomainError(f"log of nonpositive value {a!r}")
        return mpmath.log(a)

    def msqrt(a):
        if a < 0:
            raise ExprDomainError(f"sqrt of negative value {a!r}")
        return mpmath.sqrt(a)

    scope = {"_div": mdiv, "_pow": mpow, "_f_exp": mpmath.exp, "_f_log": mlog,
             "_f_sqrt": msqrt, "_f_sin": mpmath.sin, "_f_cos": mpmath.cos, "_f_abs": mpmath.fabs}
    return mpmath, scope


def compile_exprs(exprs: Sequence[ExprLike], names: Sequence[str],
                  dps: int = 0) -> Callable[..., tuple]:
    """Compile expressions into one function of positional `names` values.

    Common subexpressions across all of `exprs` are computed once. The returned
    callable gives a tuple with one float per expression and raises
    :class:`ExprDomainError` exactly where :func:`evaluate` would.

    With ``dps > 0`` the arithmetic runs in mpmath at that many decimal
    digits and the tuple holds ``mpf`` values. Constants in the tree are
    taken as the binary floats they already are.
    """
    exprs = [as_expr(e) for e in exprs]
    names = list(names)
    unknown = set().union(*(free_vars(e) for e in exprs)) - set(names) if exprs else set()
    if unknown:
        raise UnboundVariableError(f"unbound variable(s): {', '.join(sorted(unknown))}")
    arg_of = {name: f"a{i}" for i, name in enumerate(names)}
    lines = []
    temps = {}

    def emit(node):
        hit = temps.get(node)
        if hit is not None:
            return hit
        stack = [(node, False)]
        while stack:
            cur, ready = stack.pop()
            if cur in temps:
                continue
            if isinstance(cur, Const):
                temps[cur] = repr(cur.value)
                continue
            if isinstance(cur, Var):
                temps[cur] = arg_of[cur.name]
                continue
            kids = [cur.left, cur.right] if isinstance(cur, BinOp) else [cur.arg]
            if not ready:
                stack.append((cur, True))
                stack.extend((k, False) for k in kids if k not in temps)
                continue
            if isinstance(cur, Neg):
                code = f"-{temps[cur.arg]}"
            elif isinstance(cur, Call):
                code = f"_f_{cur.func}({temps[cur.arg]})"
            else:
                code = _OP_CODE[cur.op].format(temps[cur.left], temps[cur.right])
            name = f"t{len(lines)}"
            lines.append(f"    {name} = {code}")
            temps[cur] = name
        return temps[node]

    outs = [emit(e) for e in exprs]
    src = "def _compiled({}):\n{}\n    return ({},)\n".format(
        ", ".join(arg_of[n] for n in names),
        "\n".join(lines) if lines else "    pass",
        ", ".join(outs),
    ) if outs else "def _compiled(*args):\n    return ()\n"
    if dps:
        mpmath, scope = _mp_scope()
    else:
        scope = {"_div": _div, "_pow": _pow}
        scope.update({f"_f_{k}": v for k, v in _FUNC_IMPL.items()})
    exec(compile(src, "<staticbdry.expr>", "exec"), scope)
    inner = scope["_compiled"]

    def run(*values):
        try:
            if dps:
                with mpmath.workdps(dps):
                    return tuple(map(mpmath.mpf, inner(*map(mpmath.mpf, values))))
            return inner(*map(float, values))
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise ExprDomainError(str(exc)) from exc

    run.source = src
    return run
