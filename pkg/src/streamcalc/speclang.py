"""Parser and static analysis for the stream-equation DSL.

Statements end with `;`.  Equation forms:

    v(0) = <elem>;        v'(0) = <elem>;      (initial values)
    v' = <term>;          v'' = <term>;        (derivative equations)
    delta(v) = <term>;    ddx(v) = <term>;     (non-standard derivatives)
    even(v) = w;          odd(v) = w;          (even-odd specifications)
    algebra Q;                                  (coefficient domain)

Operation definitions:

    def f(x1, ..., xk) { out = <headexpr>; deriv = <term>; }

optionally with guarded clause lists:

    def f(a, b) {
      when a(0) < b(0) => { out = a(0); deriv = f(a', b); }
      otherwise        => { out = b(0); deriv = f(a, b'); }
    }

Higher-order equations are flattened into first-order systems; the
fresh unknowns are named `<var>#k`.  A derivative of an unknown on a
right-hand side is only accepted when the unknown's own equation has
strictly higher order (so `c' = c';` is rejected outright).
"""

import enum
from dataclasses import dataclass, field

from . import calculus
from .algebra import get_algebra, rationals
from .errors import (
    AlgebraMismatch,
    ArityMismatch,
    HeadNotInvertible,
    MissingInitialValue,
    NoExactSqrt,
    SpecSyntaxError,
    UnknownSymbol,
    UnsupportedOp,
)

KEYWORDS = {
    "algebra", "def", "when", "otherwise", "out", "deriv",
    "and", "or", "not", "inf", "true", "false",
    "X", "inv", "shuffle", "hadamard", "sqrt",
    "even", "odd", "zip", "merge", "delta", "ddx",
}

_CALL_OPS = {"inv": 1, "shuffle": 2, "hadamard": 2, "sqrt": 1, "even": 1,
             "odd": 1, "zip": 2, "merge": 2, "delta": 1, "ddx": 1}


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class HLit:
    value: object


@dataclass(frozen=True)
class HArg:
    """Head of the index-th operation argument."""

    index: int


@dataclass(frozen=True)
class HOp:
    op: str  # + - * neg inv sqrt
    args: tuple


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class DVar:
    """Derivative of an argument; order >= 2 is outside the GSOS shape."""

    name: str
    order: int = 1


@dataclass(frozen=True)
class Const:
    """Constant stream [h] of a head expression."""

    value: object  # HLit / HArg / HOp


@dataclass(frozen=True)
class OpApp:
    symbol: str
    args: tuple


@dataclass(frozen=True)
class TermDeriv:
    """Parse-level derivative of a whole term; never valid GSOS."""

    term: object
    order: int


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: object
    right: object


@dataclass(frozen=True)
class BoolOp:
    op: str  # and / or
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class GsosClause:
    guard: object  # None for the unconditional / otherwise clause
    out: object
    deriv: object
    span: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class GsosDef:
    symbol: str
    params: tuple
    clauses: tuple
    span: tuple = field(default=None, compare=False)

    @property
    def arity(self):
        return len(self.params)


class Kind(enum.Enum):
    SIMPLE = "simple"
    LINEAR = "linear"
    CONTEXT_FREE = "context-free"
    NONSTD = "non-standard"
    EVEN_ODD = "even-odd"
    GENERAL = "general"


@dataclass
class EquationSystem:
    """A first-order equation system (already flattened).

    tail_op is 'tail' for ordinary derivatives, or 'delta'/'ddx' for the
    non-standard ones; even-odd systems use evens/odds instead of rhs.
    """

    algebra: object
    variables: tuple
    heads: dict
    tail_op: str = "tail"
    rhs: dict = field(default_factory=dict)
    evens: dict = field(default_factory=dict)
    odds: dict = field(default_factory=dict)

    def __eq__(self, other):
        return (isinstance(other, EquationSystem)
                and self.algebra is other.algebra
                and self.variables == other.variables
                and self.heads == other.heads
                and self.tail_op == other.tail_op
                and self.rhs == other.rhs
                and self.evens == other.evens
                and self.odds == other.odds)


@dataclass
class SpecFile:
    algebra: object
    algebra_name: str
    defs: dict
    system: object  # EquationSystem or None

    def __eq__(self, other):
        return (isinstance(other, SpecFile)
                and self.algebra is other.algebra
                and self.defs == other.defs
                and self.system == other.system)


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER SYM EOF
    text: str
    span: tuple


_TWO_CHAR = ("=>", "<=", ">=", "!=")
_ONE_CHAR = "()[]{};,='+-*<>/"


def _lex(source):
    tokens = []
    line, col, i = 1, 1, 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        span = (line, col)
        if source[i:i + 2] in _TWO_CHAR:
            tokens.append(Token("SYM", source[i:i + 2], span))
            i += 2
            col += 2
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_#"):
                j += 1
            tokens.append(Token("IDENT", source[i:j], span))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("NUMBER", source[i:j], span))
            col += j - i
            i = j
            continue
        if c in _ONE_CHAR:
            tokens.append(Token("SYM", c, span))
            i += 1
            col += 1
            continue
        raise SpecSyntaxError(f"unexpected character {c!r}", span)
    tokens.append(Token("EOF", "", (line, col)))
    return tokens


# ---------------------------------------------------------------------------
# Parser


@dataclass
class _RawEquation:
    var: str
    order: int
    op: str  # tail / delta / ddx / even / odd / init
    rhs: object
    span: tuple


class _Parser:
    def __init__(self, source, algebra_override=None):
        self.tokens = _lex(source)
        self.pos = 0
        self.algebra = algebra_override or rationals()
        self.algebra_name = self.algebra.name
        self.algebra_override = algebra_override
        self.saw_statement = False
        self.defs = {}
        self.inits = {}  # var -> {order: (value, span)}
        self.tails = {}  # var -> _RawEquation
        self.evens = {}
        self.odds = {}
        self.var_order = []

    # -- token helpers

    def peek(self, k=0):
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind, text=None):
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise SpecSyntaxError(f"expected {want!r}, found {tok.text or 'end of input'!r}",
                                  tok.span)
        return tok

    def at_sym(self, text):
        tok = self.peek()
        return tok.kind == "SYM" and tok.text == text

    def eat_sym(self, text):
        if self.at_sym(text):
            self.next()
            return True
        return False

    # -- entry point

    def parse(self):
        while self.peek().kind != "EOF":
            self.statement()
        return self.finish()

    def statement(self):
        tok = self.peek()
        if tok.kind != "IDENT":
            raise SpecSyntaxError(f"expected a statement, found {tok.text!r}", tok.span)
        if tok.text == "algebra":
            self.algebra_statement()
            return
        self.saw_statement = True
        if tok.text == "def":
            self.def_statement()
        elif tok.text in ("even", "odd"):
            self.even_odd_statement()
        elif tok.text in ("delta", "ddx"):
            self.nonstd_statement()
        else:
            self.equation_statement()

    def algebra_statement(self):
        tok = self.next()
        if self.saw_statement:
            raise SpecSyntaxError("algebra directive must precede the equations", tok.span)
        name_tok = self.expect("IDENT")
        name = name_tok.text
        if self.eat_sym("("):
            arg = self.expect("NUMBER")
            self.expect("SYM", ")")
            name = f"{name}({arg.text})"
        self.expect("SYM", ";")
        try:
            alg = get_algebra(name)
        except Exception as err:
            raise SpecSyntaxError(str(err), name_tok.span) from None
        self.algebra_name = name
        if self.algebra_override is None:
            self.algebra = alg

    def even_odd_statement(self):
        which = self.next().text
        self.expect("SYM", "(")
        var = self.ident("stream variable")
        self.expect("SYM", ")")
        self.expect("SYM", "=")
        target_tok = self.expect("IDENT")
        self.expect("SYM", ";")
        table = self.evens if which == "even" else self.odds
        if var.text in table:
            raise SpecSyntaxError(f"duplicate {which} equation for {var.text!r}", var.span)
        table[var.text] = (target_tok.text, target_tok.span)
        self.note_var(var.text)

    def nonstd_statement(self):
        which = self.next().text
        self.expect("SYM", "(")
        var = self.ident("stream variable")
        self.expect("SYM", ")")
        self.expect("SYM", "=")
        rhs = self.term(def_params=None)
        self.expect("SYM", ";")
        self.add_tail(_RawEquation(var.text, 1, which, rhs, var.span))

    def equation_statement(self):
        var = self.ident("stream variable")
        order = 0
        while self.eat_sym("'"):
            order += 1
        if self.eat_sym("("):
            zero = self.expect("NUMBER")
            if zero.text != "0":
                raise SpecSyntaxError("initial values are given at index 0", zero.span)
            self.expect("SYM", ")")
            self.expect("SYM", "=")
            value = self.element()
            self.expect("SYM", ";")
            slot = self.inits.setdefault(var.text, {})
            if order in slot:
                raise SpecSyntaxError(
                    f"duplicate initial value for {var.text + chr(39) * order}", var.span)
            slot[order] = (value, var.span)
            self.note_var(var.text)
            return
        if order == 0:
            raise SpecSyntaxError(f"expected \"'\" or \"(0)\" after {var.text!r}", var.span)
        self.expect("SYM", "=")
        rhs = self.term(def_params=None)
        self.expect("SYM", ";")
        self.add_tail(_RawEquation(var.text, order, "tail", rhs, var.span))

    def add_tail(self, eq):
        if eq.var in self.tails:
            raise SpecSyntaxError(f"duplicate equation for {eq.var!r}", eq.span)
        self.tails[eq.var] = eq
        self.note_var(eq.var)

    def note_var(self, name):
        if name not in self.var_order:
            self.var_order.append(name)

    def ident(self, what):
        tok = self.next()
        if tok.kind != "IDENT" or tok.text in KEYWORDS:
            raise SpecSyntaxError(f"expected {what}, found {tok.text!r}", tok.span)
        return tok

    # -- operation definitions

    def def_statement(self):
        self.next()  # def
        name = self.ident("operation name")
        if name.text in self.defs or name.text in calculus.BUILTIN_ARITY:
            raise SpecSyntaxError(f"redefinition of {name.text!r}", name.span)
        self.expect("SYM", "(")
        params = []
        if not self.at_sym(")"):
            while True:
                params.append(self.ident("parameter name").text)
                if not self.eat_sym(","):
                    break
        self.expect("SYM", ")")
        if len(set(params)) != len(params):
            raise SpecSyntaxError("duplicate parameter names", name.span)
        self.expect("SYM", "{")
        clauses = []
        if self.peek().text in ("when", "otherwise"):
            while not self.at_sym("}"):
                clauses.append(self.guarded_clause(params))
        else:
            clauses.append(self.clause_body(params, None, self.peek().span))
        self.expect("SYM", "}")
        self.defs[name.text] = GsosDef(name.text, tuple(params), tuple(clauses),
                                       span=name.span)

    def guarded_clause(self, params):
        tok = self.next()
        if tok.text == "when":
            guard = self.guard(params)
        elif tok.text == "otherwise":
            guard = None
        else:
            raise SpecSyntaxError("expected 'when' or 'otherwise'", tok.span)
        self.expect("SYM", "=>")
        self.expect("SYM", "{")
        clause = self.clause_body(params, guard, tok.span)
        self.expect("SYM", "}")
        return clause

    def clause_body(self, params, guard, span):
        self.expect("IDENT", "out")
        self.expect("SYM", "=")
        out = self.headexpr(params)
        self.expect("SYM", ";")
        self.expect("IDENT", "deriv")
        self.expect("SYM", "=")
        deriv = self.term(def_params=params)
        self.expect("SYM", ";")
        return GsosClause(guard, out, deriv, span=span)

    def guard(self, params):
        return self.guard_or(params)

    def guard_or(self, params):
        left = self.guard_and(params)
        parts = [left]
        while self.peek().text == "or":
            self.next()
            parts.append(self.guard_and(params))
        return parts[0] if len(parts) == 1 else BoolOp("or", tuple(parts))

    def guard_and(self, params):
        left = self.guard_atom(params)
        parts = [left]
        while self.peek().text == "and":
            self.next()
            parts.append(self.guard_atom(params))
        return parts[0] if len(parts) == 1 else BoolOp("and", tuple(parts))

    def guard_atom(self, params):
        if self.peek().text == "not":
            self.next()
            self.expect("SYM", "(")
            inner = self.guard(params)
            self.expect("SYM", ")")
            return Not(inner)
        left = self.headexpr(params)
        tok = self.next()
        if tok.kind != "SYM" or tok.text not in ("=", "!=", "<", "<=", ">", ">="):
            raise SpecSyntaxError("expected a comparison operator", tok.span)
        right = self.headexpr(params)
        return Cmp(tok.text, left, right)

    # -- head expressions

    def headexpr(self, params):
        left = self.headterm(params)
        while self.peek().text in ("+", "-") and self.peek().kind == "SYM":
            op = self.next().text
            right = self.headterm(params)
            left = HOp("+" if op == "+" else "-", (left, right))
        return left

    def headterm(self, params):
        left = self.headfactor(params)
        while self.at_sym("*"):
            self.next()
            left = HOp("*", (left, self.headfactor(params)))
        return left

    def headfactor(self, params):
        tok = self.peek()
        if self.eat_sym("-"):
            return HOp("neg", (self.headfactor(params),))
        if self.eat_sym("("):
            inner = self.headexpr(params)
            self.expect("SYM", ")")
            return inner
        if tok.kind == "NUMBER":
            return HLit(self.number_literal())
        if tok.kind == "IDENT" and tok.text == "inv":
            self.next()
            self.expect("SYM", "(")
            inner = self.headexpr(params)
            self.expect("SYM", ")")
            return HOp("inv", (inner,))
        if tok.kind == "IDENT" and tok.text in ("inf", "true", "false"):
            self.next()
            return HLit(self.parse_element(tok.text, tok.span))
        if tok.kind == "IDENT":
            if params is not None and tok.text in params:
                self.next()
                self.expect("SYM", "(")
                zero = self.expect("NUMBER")
                if zero.text != "0":
                    raise SpecSyntaxError("argument heads are written x(0)", zero.span)
                self.expect("SYM", ")")
                return HArg(params.index(tok.text))
            raise UnknownSymbol(f"{tok.text!r} is not usable in a head expression",
                                tok.span)
        raise SpecSyntaxError(f"unexpected {tok.text!r} in head expression", tok.span)

    def number_literal(self):
        tok = self.expect("NUMBER")
        text = tok.text
        if self.at_sym("/") and self.peek(1).kind == "NUMBER":
            self.next()
            text += "/" + self.expect("NUMBER").text
        return self.parse_element(text, tok.span)

    def parse_element(self, text, span):
        try:
            return self.algebra.parse(text)
        except AlgebraMismatch as err:
            raise SpecSyntaxError(str(err), span) from None

    def element(self):
        """An algebra element: a head expression with no argument heads."""
        expr = self.headexpr(params=None)
        try:
            return eval_headexpr(expr, (), self.algebra)
        except AlgebraMismatch as err:
            raise SpecSyntaxError(str(err), self.peek().span) from None

    # -- stream terms

    def term(self, def_params):
        left = self.addend(def_params)
        while self.peek().kind == "SYM" and self.peek().text in ("+", "-"):
            op = self.next().text
            right = self.addend(def_params)
            left = OpApp(op, (left, right))
        return left

    def addend(self, def_params):
        left = self.term_unary(def_params)
        while self.at_sym("*"):
            self.next()
            left = OpApp("*", (left, self.term_unary(def_params)))
        return left

    def term_unary(self, def_params):
        if self.at_sym("-"):
            self.next()
            return OpApp("-", (self.term_unary(def_params),))
        return self.term_postfix(def_params)

    def term_postfix(self, def_params):
        base = self.term_primary(def_params)
        order = 0
        while self.at_sym("'"):
            self.next()
            order += 1
        if order == 0:
            return base
        if isinstance(base, Var):
            return DVar(base.name, order)
        return TermDeriv(base, order)

    def term_primary(self, def_params):
        tok = self.peek()
        if self.eat_sym("("):
            inner = self.term(def_params)
            self.expect("SYM", ")")
            return inner
        if self.eat_sym("["):
            expr = self.headexpr(def_params)
            self.expect("SYM", "]")
            if def_params is None:
                expr = HLit(eval_headexpr(expr, (), self.algebra))
            return Const(expr)
        if tok.kind == "NUMBER":
            return Const(HLit(self.number_literal()))
        if tok.kind != "IDENT":
            raise SpecSyntaxError(f"unexpected {tok.text!r} in term", tok.span)
        name = tok.text
        if name == "X":
            self.next()
            return OpApp("X", ())
        if name in _CALL_OPS:
            self.next()
            args = self.call_args(def_params, tok)
            arity = _CALL_OPS[name]
            if len(args) != arity:
                raise ArityMismatch(f"{name} takes {arity} argument(s)", tok.span)
            return OpApp(name, tuple(args))
        if name in KEYWORDS:
            raise SpecSyntaxError(f"{name!r} cannot appear here", tok.span)
        self.next()
        if self.at_sym("("):
            args = self.call_args(def_params, tok)
            return OpApp(name, tuple(args))
        return Var(name)

    def call_args(self, def_params, tok):
        self.expect("SYM", "(")
        args = []
        if not self.at_sym(")"):
            while True:
                args.append(self.term(def_params))
                if not self.eat_sym(","):
                    break
        self.expect("SYM", ")")
        return args

    # -- resolution and flattening

    def finish(self):
        for d in self.defs.values():
            self.resolve_def(d)
        system = self.build_system() if (self.inits or self.tails or self.evens) else None
        return SpecFile(self.algebra, self.algebra_name, self.defs, system)

    def resolve_def(self, d):
        for clause in d.clauses:
            self.resolve_def_term(clause.deriv, d)

    def resolve_def_term(self, t, d):
        if isinstance(t, Var):
            if t.name not in d.params:
                raise UnknownSymbol(f"{t.name!r} is not a parameter of {d.symbol!r}",
                                    d.span)
        elif isinstance(t, DVar):
            if t.name not in d.params:
                raise UnknownSymbol(f"{t.name!r} is not a parameter of {d.symbol!r}",
                                    d.span)
        elif isinstance(t, TermDeriv):
            self.resolve_def_term(t.term, d)
        elif isinstance(t, OpApp):
            self.check_arity(t, d.span)
            for a in t.args:
                self.resolve_def_term(a, d)

    def check_arity(self, t, span):
        if t.symbol in calculus.BUILTIN_ARITY:
            arity = calculus.BUILTIN_ARITY[t.symbol]
            ok = len(t.args) in arity if isinstance(arity, tuple) else len(t.args) == arity
            if not ok:
                raise ArityMismatch(f"{t.symbol!r} applied to {len(t.args)} argument(s)",
                                    span)
        elif t.symbol in self.defs:
            if len(t.args) != self.defs[t.symbol].arity:
                raise ArityMismatch(
                    f"{t.symbol!r} takes {self.defs[t.symbol].arity} argument(s)", span)
        else:
            raise UnknownSymbol(f"unknown operation {t.symbol!r}", span)

    def build_system(self):
        if self.evens or self.odds:
            return self.build_even_odd()
        orders = {}
        for var, eq in self.tails.items():
            orders[var] = eq.order
        for var, slots in self.inits.items():
            if var not in self.tails:
                raise SpecSyntaxError(f"{var!r} has initial values but no equation",
                                      slots[min(slots)][1])
        ops = {eq.op for eq in self.tails.values()}
        if len(ops) > 1:
            raise SpecSyntaxError("cannot mix tail, delta, and ddx equations in one system")
        tail_op = ops.pop() if ops else "tail"
        if tail_op in ("delta", "ddx") and any(eq.order > 1 for eq in self.tails.values()):
            raise SpecSyntaxError("non-standard equations must be first order")

        # check initial values: order-n equation needs exactly orders 0..n-1
        heads = {}
        for var, eq in self.tails.items():
            slots = self.inits.get(var, {})
            for j in range(eq.order):
                if j not in slots:
                    missing = var + "'" * j
                    raise MissingInitialValue(
                        f"order-{eq.order} equation for {var!r} needs {missing}(0)",
                        eq.span)
            for j in slots:
                if j >= eq.order:
                    raise SpecSyntaxError(
                        f"initial value {var + chr(39) * j}(0) exceeds the equation order",
                        slots[j][1])
            heads[var] = slots[0][0]

        variables = []
        rhs = {}
        for var in self.var_order:
            if var not in self.tails:
                continue
            eq = self.tails[var]
            variables.append(var)
            if eq.order == 1:
                rhs[var] = eq.rhs
                continue
            for k in range(1, eq.order):
                fresh = f"{var}#{k}"
                variables.append(fresh)
                heads[fresh] = self.inits[var][k][0]
            rhs[var] = Var(f"{var}#1")
            for k in range(1, eq.order - 1):
                rhs[f"{var}#{k}"] = Var(f"{var}#{k + 1}")
            rhs[f"{var}#{eq.order - 1}"] = eq.rhs

        sys = EquationSystem(self.algebra, tuple(variables),
                             {v: heads[v] for v in variables},
                             tail_op=tail_op, rhs=rhs)
        for var in variables:
            sys.rhs[var] = self.resolve_system_term(sys.rhs[var], orders)
        return sys

    def resolve_system_term(self, t, orders):
        if isinstance(t, Var):
            if t.name in orders or "#" in t.name:
                return t
            if t.name in self.defs and self.defs[t.name].arity == 0:
                return OpApp(t.name, ())
            raise UnknownSymbol(f"unknown stream variable {t.name!r}")
        if isinstance(t, DVar):
            order = orders.get(t.name)
            if order is None:
                raise UnknownSymbol(f"unknown stream variable {t.name!r}")
            if t.order >= order:
                raise SpecSyntaxError(
                    f"derivative {t.name + chr(39) * t.order} on a right-hand side "
                    "is not allowed (the equation has no unique solution)")
            return Var(f"{t.name}#{t.order}")
        if isinstance(t, TermDeriv):
            raise SpecSyntaxError("derivative of a compound term on a right-hand side")
        if isinstance(t, OpApp):
            self.check_arity(t, None)
            return OpApp(t.symbol,
                         tuple(self.resolve_system_term(a, orders) for a in t.args))
        return t

    def build_even_odd(self):
        if self.tails:
            raise SpecSyntaxError("cannot mix even-odd and derivative equations")
        variables = tuple(self.var_order)
        heads, evens, odds = {}, {}, {}
        for var in variables:
            slots = self.inits.get(var, {})
            if 0 not in slots:
                raise MissingInitialValue(f"{var!r} needs an initial value")
            heads[var] = slots[0][0]
            for table, label in ((self.evens, "even"), (self.odds, "odd")):
                if var not in table:
                    raise SpecSyntaxError(f"{var!r} has no {label} equation")
                target, span = table[var]
                if target not in self.var_order:
                    raise UnknownSymbol(f"unknown stream variable {target!r}", span)
                (evens if label == "even" else odds)[var] = target
        return EquationSystem(self.algebra, variables, heads,
                              tail_op="tail", evens=evens, odds=odds)


def parse(text, algebra=None):
    """Parse DSL text into a SpecFile; `algebra` overrides the directive."""
    return _Parser(text, algebra_override=algebra).parse()


def parse_term(text, spec):
    """Parse a standalone term against a spec file's symbols."""
    parser = _Parser(text, algebra_override=spec.algebra)
    parser.defs = dict(spec.defs)
    term = parser.term(def_params=None)
    trailing = parser.peek()
    if trailing.kind != "EOF":
        raise SpecSyntaxError(f"unexpected {trailing.text!r} after the term",
                              trailing.span)
    variables = set(spec.system.variables) if spec.system else set()

    def resolve(t):
        if isinstance(t, Var):
            if t.name in variables:
                return t
            if t.name in parser.defs and parser.defs[t.name].arity == 0:
                return OpApp(t.name, ())
            raise UnknownSymbol(f"unknown stream variable {t.name!r}")
        if isinstance(t, DVar):
            if t.name not in variables:
                raise UnknownSymbol(f"unknown stream variable {t.name!r}")
            return t
        if isinstance(t, TermDeriv):
            raise SpecSyntaxError("derivative of a compound term")
        if isinstance(t, OpApp):
            parser.check_arity(t, None)
            return OpApp(t.symbol, tuple(resolve(a) for a in t.args))
        return t

    return resolve(term)


# ---------------------------------------------------------------------------
# Head expression evaluation


def eval_headexpr(expr, heads, alg):
    """Evaluate a head expression given the tuple of argument heads."""
    if isinstance(expr, HLit):
        return alg.coerce(expr.value)
    if isinstance(expr, HArg):
        return heads[expr.index]
    if isinstance(expr, HOp):
        args = [eval_headexpr(a, heads, alg) for a in expr.args]
        if expr.op == "+":
            return alg.add(*args)
        if expr.op == "*":
            return alg.mul(*args)
        if expr.op == "-":
            return alg.sub(*args)
        if expr.op == "neg":
            if alg.neg is None:
                raise UnsupportedOp(f"{alg.name} has no negation")
            return alg.neg(args[0])
        if expr.op == "inv":
            if alg.inv is None:
                raise UnsupportedOp(f"{alg.name} has no inverses")
            value = alg.inv(args[0])
            if value is None:
                raise HeadNotInvertible(f"{alg.fmt(args[0])} has no inverse")
            return value
        if expr.op == "sqrt":
            if alg.sqrt is None:
                raise NoExactSqrt(f"{alg.name} has no square roots")
            value = alg.sqrt(args[0])
            if value is None:
                raise NoExactSqrt(f"{alg.fmt(args[0])} has no exact square root")
            return value
    raise AlgebraMismatch(f"bad head expression {expr!r}")


# ---------------------------------------------------------------------------
# Classification


def term_constant_value(t, alg):
    """The element denoted by a constant term, or None."""
    if isinstance(t, Const) and isinstance(t.value, HLit):
        return alg.coerce(t.value.value)
    if isinstance(t, OpApp) and t.symbol == "*" and len(t.args) == 2:
        a = term_constant_value(t.args[0], alg)
        b = term_constant_value(t.args[1], alg)
        if a is not None and b is not None:
            return alg.mul(a, b)
    if isinstance(t, OpApp) and t.symbol == "-" and alg.neg is not None:
        if len(t.args) == 1:
            a = term_constant_value(t.args[0], alg)
            return None if a is None else alg.neg(a)
    return None


def as_linear_combination(t, alg):
    """Interpret a term as a finite linear combination of variables.

    Returns {var: coefficient} or None if the term is not linear.  The
    zero constant is the empty combination; other constants are not
    linear (the format has no affine part).
    """
    if isinstance(t, Var):
        return {t.name: alg.one}
    const = term_constant_value(t, alg)
    if const is not None:
        return {} if alg.is_zero(const) else None
    if isinstance(t, OpApp):
        if t.symbol == "+" and len(t.args) == 2:
            left = as_linear_combination(t.args[0], alg)
            right = as_linear_combination(t.args[1], alg)
            if left is None or right is None:
                return None
            for k, v in right.items():
                left[k] = alg.add(left[k], v) if k in left else v
            return left
        if t.symbol == "-" and alg.neg is not None:
            if len(t.args) == 1:
                inner = as_linear_combination(t.args[0], alg)
                if inner is None:
                    return None
                return {k: alg.neg(v) for k, v in inner.items()}
            left = as_linear_combination(t.args[0], alg)
            right = as_linear_combination(t.args[1], alg)
            if left is None or right is None:
                return None
            for k, v in right.items():
                nv = alg.neg(v)
                left[k] = alg.add(left[k], nv) if k in left else nv
            return left
        if t.symbol == "*" and len(t.args) == 2:
            for c_ix, t_ix in ((0, 1), (1, 0)):
                c = term_constant_value(t.args[c_ix], alg)
                if c is not None:
                    inner = as_linear_combination(t.args[t_ix], alg)
                    if inner is None:
                        return None
                    return {k: alg.mul(c, v) for k, v in inner.items()}
            return None
    return None


def as_polynomial(t, alg):
    """Interpret a term as a polynomial over words of variables (and X).

    Returns {word-tuple: coefficient} or None.  The empty word stands
    for [1]; plain constants embed as coefficient * empty word.
    """
    if isinstance(t, Var):
        return {(t.name,): alg.one}
    if isinstance(t, OpApp) and t.symbol == "X" and not t.args:
        return {("X",): alg.one}
    if isinstance(t, Const) and isinstance(t.value, HLit):
        c = alg.coerce(t.value.value)
        return {} if alg.is_zero(c) else {(): c}
    if isinstance(t, OpApp):
        if t.symbol == "+" and len(t.args) == 2:
            left = as_polynomial(t.args[0], alg)
            right = as_polynomial(t.args[1], alg)
            if left is None or right is None:
                return None
            return poly_add(left, right, alg)
        if t.symbol == "*" and len(t.args) == 2:
            left = as_polynomial(t.args[0], alg)
            right = as_polynomial(t.args[1], alg)
            if left is None or right is None:
                return None
            return poly_mul(left, right, alg)
        if t.symbol == "-" and alg.neg is not None:
            if len(t.args) == 1:
                inner = as_polynomial(t.args[0], alg)
                if inner is None:
                    return None
                return {w: alg.neg(c) for w, c in inner.items()}
            left = as_polynomial(t.args[0], alg)
            right = as_polynomial(t.args[1], alg)
            if left is None or right is None:
                return None
            return poly_add(left, {w: alg.neg(c) for w, c in right.items()}, alg)
    return None


def poly_add(p, q, alg):
    out = dict(p)
    for w, c in q.items():
        s = alg.add(out[w], c) if w in out else c
        if alg.is_zero(s):
            out.pop(w, None)
        else:
            out[w] = s
    return out


def poly_mul(p, q, alg):
    out = {}
    for w1, c1 in p.items():
        for w2, c2 in q.items():
            w = w1 + w2
            c = alg.mul(c1, c2)
            s = alg.add(out[w], c) if w in out else c
            if alg.is_zero(s):
                out.pop(w, None)
            else:
                out[w] = s
    return out


def is_simple(sys):
    return (sys.tail_op == "tail" and not sys.evens
            and all(isinstance(t, Var) for t in sys.rhs.values()))


def is_linear(sys):
    if sys.tail_op != "tail" or sys.evens:
        return False
    return all(as_linear_combination(t, sys.algebra) is not None
               for t in sys.rhs.values())


def is_context_free(sys):
    if sys.tail_op != "tail" or sys.evens:
        return False
    return all(as_polynomial(t, sys.algebra) is not None
               for t in sys.rhs.values())


def classify(sys):
    """The most specific format an equation system falls in."""
    if sys.evens:
        return Kind.EVEN_ODD
    if sys.tail_op != "tail":
        return Kind.NONSTD
    if is_simple(sys):
        return Kind.SIMPLE
    if is_linear(sys):
        return Kind.LINEAR
    if is_context_free(sys):
        return Kind.CONTEXT_FREE
    return Kind.GENERAL


# ---------------------------------------------------------------------------
# GSOS validation


@dataclass(frozen=True)
class Ok:
    sos: bool = False


@dataclass(frozen=True)
class Violation:
    reason: str
    span: tuple = field(default=None, compare=False)


def validate_gsos(d):
    """Check that a definition is in the stream GSOS shape.

    The derivative terms must live in T_Sigma({x1..xk, y1..yk}): no
    higher derivatives, no derivative applied to a compound term.  The
    guard list must be exhaustive: a final `otherwise`, or a complete
    three-way comparison of one pair of head expressions.
    """
    uses_x = False
    for clause in d.clauses:
        issue, clause_uses_x = _scan_deriv(clause.deriv)
        if issue is not None:
            return Violation(issue, d.span)
        uses_x = uses_x or clause_uses_x
    if not _guards_exhaustive(d.clauses):
        return Violation("guards are not exhaustive", d.span)
    return Ok(sos=not uses_x)


def _scan_deriv(t):
    if isinstance(t, TermDeriv):
        return "derivative applied to a compound term", False
    if isinstance(t, DVar):
        if t.order >= 2:
            return "higher derivative of an argument", False
        return None, False
    if isinstance(t, Var):
        return None, True
    if isinstance(t, OpApp):
        uses_x = False
        for a in t.args:
            issue, sub_x = _scan_deriv(a)
            if issue is not None:
                return issue, False
            uses_x = uses_x or sub_x
        return None, uses_x
    return None, False


def _guards_exhaustive(clauses):
    if clauses and clauses[-1].guard is None:
        return all(c.guard is not None for c in clauses[:-1])
    guards = [c.guard for c in clauses]
    if len(guards) != 3 or not all(isinstance(g, Cmp) for g in guards):
        return False
    pairs = {(g.left, g.right) for g in guards}
    if len(pairs) != 1:
        return False
    return {g.op for g in guards} == {"<", "=", ">"}


# ---------------------------------------------------------------------------
# Zero consistency for even-odd systems


@dataclass(frozen=True)
class ZeroConsistent:
    pass


@dataclass(frozen=True)
class ZeroInconsistent:
    state: str


def check_zero_consistency(sys):
    """Every variable must satisfy x(0) = (even x)(0)."""
    alg = sys.algebra
    for var in sys.variables:
        target = sys.evens[var]
        if not alg.eq(sys.heads[var], sys.heads[target]):
            return ZeroInconsistent(var)
    return ZeroConsistent()


# ---------------------------------------------------------------------------
# Printing (parse . print == identity on ASTs)


def format_headexpr(expr, alg, params, level=0):
    if isinstance(expr, HLit):
        text = alg.fmt(expr.value)
        if text.startswith("-") and level > 0:
            return f"({text})"
        return text
    if isinstance(expr, HArg):
        return f"{params[expr.index]}(0)"
    op = expr.op
    if op == "neg":
        return f"-{format_headexpr(expr.args[0], alg, params, 3)}"
    if op == "inv":
        return f"inv({format_headexpr(expr.args[0], alg, params)})"
    if op == "sqrt":
        return f"sqrt({format_headexpr(expr.args[0], alg, params)})"
    own = 1 if op in ("+", "-") else 2
    left = format_headexpr(expr.args[0], alg, params, own)
    right = format_headexpr(expr.args[1], alg, params, own + 1)
    text = f"{left} {op} {right}"
    return f"({text})" if own < level else text


def format_term(t, alg, params=(), level=0):
    if isinstance(t, Var):
        return t.name
    if isinstance(t, DVar):
        return t.name + "'" * t.order
    if isinstance(t, TermDeriv):
        return format_term(t.term, alg, params, 4) + "'" * t.order
    if isinstance(t, Const):
        return f"[{format_headexpr(t.value, alg, params)}]"
    if isinstance(t, OpApp):
        sym = t.symbol
        if sym == "X":
            return "X"
        if sym == "-" and len(t.args) == 1:
            return f"-{format_term(t.args[0], alg, params, 3)}"
        if sym in ("+", "-", "*"):
            own = 1 if sym in ("+", "-") else 2
            left = format_term(t.args[0], alg, params, own)
            right = format_term(t.args[1], alg, params, own + 1)
            text = f"{left} {sym} {right}"
            return f"({text})" if own < level else text
        args = ", ".join(format_term(a, alg, params) for a in t.args)
        return f"{sym}({args})"
    raise TypeError(f"not a term: {t!r}")


def format_guard(g, alg, params):
    if isinstance(g, Cmp):
        return (f"{format_headexpr(g.left, alg, params)} {g.op} "
                f"{format_headexpr(g.right, alg, params)}")
    if isinstance(g, BoolOp):
        return f" {g.op} ".join(format_guard(a, alg, params) for a in g.args)
    if isinstance(g, Not):
        return f"not ({format_guard(g.arg, alg, params)})"
    raise TypeError(f"not a guard: {g!r}")


def print_spec(spec):
    lines = [f"algebra {spec.algebra_name};"]
    alg = spec.algebra
    for d in spec.defs.values():
        header = f"def {d.symbol}({', '.join(d.params)})"
        if len(d.clauses) == 1 and d.clauses[0].guard is None:
            c = d.clauses[0]
            lines.append(f"{header} {{ out = {format_headexpr(c.out, alg, d.params)}; "
                         f"deriv = {format_term(c.deriv, alg, d.params)}; }}")
        else:
            lines.append(header + " {")
            for c in d.clauses:
                head = ("otherwise" if c.guard is None
                        else f"when {format_guard(c.guard, alg, d.params)}")
                lines.append(f"  {head} => {{ out = {format_headexpr(c.out, alg, d.params)}; "
                             f"deriv = {format_term(c.deriv, alg, d.params)}; }}")
            lines.append("}")
    sys = spec.system
    if sys is not None:
        for var in sys.variables:
            lines.append(f"{var}(0) = {alg.fmt(sys.heads[var])};")
        for var in sys.variables:
            if sys.evens:
                lines.append(f"even({var}) = {sys.evens[var]};")
                lines.append(f"odd({var}) = {sys.odds[var]};")
            elif sys.tail_op == "tail":
                lines.append(f"{var}' = {format_term(sys.rhs[var], alg)};")
            else:
                lines.append(f"{sys.tail_op}({var}) = {format_term(sys.rhs[var], alg)};")
    return "\n".join(lines) + "\n"
