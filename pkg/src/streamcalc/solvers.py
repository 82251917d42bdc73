"""Solution methods for the equation-system formats.

Simple systems unfold their finite automaton.  Linear systems get two
independent routes: exact closed forms through the matrix method
(I - X*M)^-1 * N over rational expressions, and a coinductive unfolding
whose states are coefficient vectors.  Context-free systems unfold the
automaton whose states are polynomials over words of unknowns.
Non-standard systems (delta, d/dX, delta_o) are solved by the rewrite
delta(x) = t  =>  x' = t + x, by the reconstruction
x' = ddx(x) (.) nats^-1, and by direct unfolding with a user-supplied
inverse, respectively.
"""

from dataclasses import dataclass

from . import calculus, speclang
from .algebra import (
    Poly,
    RatExpr,
    gauss_solve,
    ratexpr_derivative,
    ratexpr_head,
)
from .errors import UnsupportedOp
from .speclang import Const, HLit, Kind, OpApp, Var
from .stream import Stream, UnfoldOrigin, unfold


# ---------------------------------------------------------------------------
# Simple systems


@dataclass
class SimpleAutomaton:
    """A finite stream automaton: one output and one successor per state."""

    algebra: object
    outputs: dict
    next: dict

    @property
    def states(self):
        return tuple(self.outputs)


def automaton_of_simple(sys):
    if speclang.classify(sys) is not Kind.SIMPLE:
        raise UnsupportedOp("not a simple system")
    return SimpleAutomaton(sys.algebra, dict(sys.heads),
                           {v: sys.rhs[v].name for v in sys.variables})


def unfold_automaton(aut, state):
    return unfold(aut.algebra, state,
                  lambda q: (aut.outputs[q], aut.next[q]))


def solve_simple(sys):
    aut = automaton_of_simple(sys)
    return {v: unfold_automaton(aut, v) for v in sys.variables}


# ---------------------------------------------------------------------------
# Eventual periodicity


@dataclass(frozen=True)
class Periodic:
    """sigma^(k) = sigma^(n) with k < n."""

    k: int
    n: int


@dataclass(frozen=True)
class PeriodicityUnknown:
    pass


def detect_eventually_periodic(obj, bound=4096):
    """Decide eventual periodicity by walking decidable state spaces.

    Accepts a canonical RatExpr (states: canonical derivatives) or a
    Stream carrying an unfold origin (states: automaton states).  For
    anything else the question is not decidable from a prefix and
    PeriodicityUnknown is returned.
    """
    if isinstance(obj, RatExpr):
        step = lambda r: (None, ratexpr_derivative(r))
        state = obj
    elif isinstance(obj, Stream) and isinstance(obj.origin, UnfoldOrigin):
        origin = obj.origin
        step = origin.step
        state = origin.state
    else:
        return PeriodicityUnknown()
    seen = {}
    for i in range(bound):
        try:
            if state in seen:
                return Periodic(seen[state], i)
            seen[state] = i
        except TypeError:
            return PeriodicityUnknown()
        state = step(state)[1]
    return PeriodicityUnknown()


# ---------------------------------------------------------------------------
# Linear systems


@dataclass
class LinearSystem:
    """x_i' = sum_j M[i][j] * x_j with initial values o."""

    algebra: object
    names: tuple
    o: tuple
    M: tuple

    @property
    def n(self):
        return len(self.names)


def linear_system_of(sys):
    alg = sys.algebra
    rows = []
    heads = []
    for v in sys.variables:
        lc = speclang.as_linear_combination(sys.rhs[v], alg)
        if lc is None:
            raise UnsupportedOp(f"equation for {v!r} is not linear")
        unknown = set(lc) - set(sys.variables)
        if unknown:
            raise UnsupportedOp(f"unknown variables {sorted(unknown)}")
        rows.append(tuple(lc.get(w, alg.zero) for w in sys.variables))
        heads.append(sys.heads[v])
    return LinearSystem(alg, tuple(sys.variables), tuple(heads), tuple(rows))


def solve_linear_matrix(ls):
    """Closed forms by the matrix method: solve (I - X*M) x = N.

    det(I - X*M) always has head 1, so elimination never fails.  The
    algebra must be a field; semiring systems only have the coinductive
    route.
    """
    alg = ls.algebra
    if alg.kind != "field":
        raise UnsupportedOp("the matrix method needs a field algebra")
    n = ls.n
    matrix = []
    for i in range(n):
        row = []
        for j in range(n):
            const = alg.one if i == j else alg.zero
            row.append(RatExpr.from_poly(Poly(alg, (const, alg.neg(ls.M[i][j])))))
        matrix.append(row)
    rhs = [RatExpr.const(alg, ls.o[i]) for i in range(n)]
    return gauss_solve(matrix, rhs)


def solve_linear_coinductive(ls):
    """Streams whose states are coefficient vectors over the unknowns.

    Works over any semiring: evolving a state only adds and multiplies.
    """
    alg = ls.algebra
    n = ls.n

    def step(vec):
        out = alg.zero
        for c, o in zip(vec, ls.o):
            out = alg.add(out, alg.mul(c, o))
        nxt = tuple(
            _dot(alg, vec, tuple(ls.M[j][k] for j in range(n)))
            for k in range(n)
        )
        return out, nxt

    basis = [tuple(alg.one if j == i else alg.zero for j in range(n))
             for i in range(n)]
    return {name: unfold(alg, basis[i], step)
            for i, name in enumerate(ls.names)}


def _dot(alg, u, v):
    acc = alg.zero
    for a, b in zip(u, v):
        acc = alg.add(acc, alg.mul(a, b))
    return acc


def ratexpr_stream(r):
    """Expand a rational expression by iterated head/derivative."""
    return unfold(r.algebra, r,
                  lambda state: (ratexpr_head(state), ratexpr_derivative(state)))


def rational_to_linear(r):
    """Companion linear system of a canonical rational expression.

    Successive derivatives of num/den keep the same denominator, so the
    first linear dependence among them shows up as a dependence of the
    shifted numerators; it is found by exact elimination and bounds the
    dimension by 1 + max(deg num, deg den).
    """
    alg = r.algebra
    if r.is_zero():
        return LinearSystem(alg, ("x0",), (alg.zero,), ((alg.zero,),))
    q = r.den
    dim = max(r.num.degree, q.degree - 1) + 1
    numerators = [r.num]
    heads = []
    while True:
        p = numerators[-1]
        head = p.at_zero()  # q(0) = 1 in canonical form
        heads.append(head)
        coeffs = _solve_dependence(alg, numerators[:-1], p, dim)
        if coeffs is not None:
            d = len(numerators) - 1
            if d == 0:
                # only for the zero stream, handled above
                raise AssertionError("unreachable")
            names = tuple(f"x{i}" for i in range(d))
            rows = []
            for i in range(d - 1):
                rows.append(tuple(alg.one if j == i + 1 else alg.zero
                                  for j in range(d)))
            rows.append(tuple(coeffs))
            return LinearSystem(alg, names, tuple(heads[:d]), tuple(rows))
        numerators.append((p - q.scale(head)).shift_down())


def _solve_dependence(alg, basis, target, dim):
    """Coefficients a with sum a_i basis_i = target, or None."""
    cols = len(basis)
    rows = [[v.coeff(i) for v in basis] + [target.coeff(i)] for i in range(dim)]
    pivots = []
    row = 0
    for col in range(cols):
        pivot = next((i for i in range(row, dim)
                      if not alg.is_zero(rows[i][col])), None)
        if pivot is None:
            pivots.append(None)
            continue
        rows[row], rows[pivot] = rows[pivot], rows[row]
        inv = alg.inv(rows[row][col])
        rows[row] = [alg.mul(inv, x) for x in rows[row]]
        for i in range(dim):
            if i != row and not alg.is_zero(rows[i][col]):
                f = rows[i][col]
                rows[i] = [alg.sub(a, alg.mul(f, b))
                           for a, b in zip(rows[i], rows[row])]
        pivots.append(row)
        row += 1
    for i in range(row, dim):
        if not alg.is_zero(rows[i][cols]):
            return None  # inconsistent: target independent of the basis
    solution = [alg.zero] * cols
    for col, prow in enumerate(pivots):
        if prow is not None:
            solution[col] = rows[prow][cols]
    return solution


# ---------------------------------------------------------------------------
# Context-free systems


@dataclass
class ContextFreeSystem:
    """x' = polynomial over words of unknowns (and the X atom)."""

    algebra: object
    names: tuple
    o: dict
    d: dict


def context_free_system_of(sys):
    alg = sys.algebra
    d = {}
    for v in sys.variables:
        poly = speclang.as_polynomial(sys.rhs[v], alg)
        if poly is None:
            raise UnsupportedOp(f"equation for {v!r} is not context-free")
        letters = {x for w in poly for x in w} - set(sys.variables) - {"X"}
        if letters:
            raise UnsupportedOp(f"unknown variables {sorted(letters)}")
        d[v] = poly
    return ContextFreeSystem(alg, tuple(sys.variables),
                             {v: sys.heads[v] for v in sys.variables}, d)


def solve_context_free(cfs):
    """Unfold the automaton on polynomial states.

    Output of a word is the product of its letters' outputs; the
    derivative of a word is the Leibniz expansion where each letter is
    replaced by its defining polynomial, weighted by the heads of the
    letters before it.  Both are memoised per word.
    """
    alg = cfs.algebra
    letter_o = dict(cfs.o)
    letter_o["X"] = alg.zero
    letter_d = dict(cfs.d)
    letter_d["X"] = {(): alg.one}
    out_memo = {(): alg.one}
    deriv_memo = {}

    def word_out(w):
        value = out_memo.get(w)
        if value is None:
            value = alg.one
            for letter in w:
                value = alg.mul(value, letter_o[letter])
                if alg.is_zero(value):
                    break
            out_memo[w] = value
        return value

    def word_deriv(w):
        poly = deriv_memo.get(w)
        if poly is None:
            poly = {}
            prefix = alg.one
            for i, letter in enumerate(w):
                if i:
                    prefix = alg.mul(prefix, letter_o[w[i - 1]])
                    if alg.is_zero(prefix):
                        break
                suffix = w[i + 1:]
                for u, c in letter_d[letter].items():
                    coeff = alg.mul(prefix, c)
                    if alg.is_zero(coeff):
                        continue
                    word = u + suffix
                    acc = alg.add(poly[word], coeff) if word in poly else coeff
                    if alg.is_zero(acc):
                        poly.pop(word, None)
                    else:
                        poly[word] = acc
            deriv_memo[w] = poly
        return poly

    def poly_out(p):
        acc = alg.zero
        for w, c in p.items():
            acc = alg.add(acc, alg.mul(c, word_out(w)))
        return acc

    def poly_deriv(p):
        acc = {}
        for w, c in p.items():
            for u, cu in word_deriv(w).items():
                coeff = alg.mul(c, cu)
                s = alg.add(acc[u], coeff) if u in acc else coeff
                if alg.is_zero(s):
                    acc.pop(u, None)
                else:
                    acc[u] = s
        return acc

    def go(p):
        return Stream(alg, lambda: (poly_out(p), go(poly_deriv(p))))

    return {v: go({(v,): alg.one}) for v in cfs.names}


# ---------------------------------------------------------------------------
# Non-standard systems


def _interpret_basic(t, env, alg):
    """Evaluate a simple/linear/context-free right-hand side to a stream."""
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const) and isinstance(t.value, HLit):
        return calculus.constant(alg, t.value.value)
    if isinstance(t, OpApp):
        if t.symbol == "X":
            return calculus.x_stream(alg)
        if t.symbol == "+":
            return calculus.add(*(_interpret_basic(a, env, alg) for a in t.args))
        if t.symbol == "*":
            return calculus.conv_mul(*(_interpret_basic(a, env, alg) for a in t.args))
        if t.symbol == "-":
            args = [_interpret_basic(a, env, alg) for a in t.args]
            return calculus.neg(args[0]) if len(args) == 1 else calculus.sub(*args)
    raise UnsupportedOp(f"not a simple/linear/context-free term: {t!r}")


def solve_nonstd(sys, delta_op=None, delta_op_inv=None):
    """Solve a delta-, ddx-, or delta_o-system.

    delta systems are rewritten into standard ones by x' = delta(x) + x;
    ddx systems are unfolded directly through x' = ddx(x) (.) nats^-1,
    which needs a field of characteristic zero; delta_o systems are
    unfolded with the user-supplied inverse of b -> o(a, b).
    """
    alg = sys.algebra
    if sys.tail_op == "delta":
        if alg.neg is None:
            raise UnsupportedOp("delta systems need a ring")
        rewritten = speclang.EquationSystem(
            alg, sys.variables, dict(sys.heads), tail_op="tail",
            rhs={v: OpApp("+", (sys.rhs[v], Var(v))) for v in sys.variables})
        kind = speclang.classify(rewritten)
        if kind in (Kind.SIMPLE, Kind.LINEAR):
            return solve_linear_coinductive(linear_system_of(rewritten))
        if kind is Kind.CONTEXT_FREE:
            return solve_context_free(context_free_system_of(rewritten))
        raise UnsupportedOp("delta system right-hand sides must be "
                            "simple, linear, or context-free")

    if sys.tail_op == "ddx":
        if alg.kind != "field" or alg.characteristic != 0:
            raise UnsupportedOp("ddx systems need a field of characteristic 0 "
                                "(division by the naturals)")
        env = {v: Stream.defer(alg) for v in sys.variables}
        inv_nats = calculus.nats_inv(alg)
        for v in sys.variables:
            head = sys.heads[v]
            rhs_stream = _interpret_basic(sys.rhs[v], env, alg)
            env[v].resolve(lambda h=head, t=rhs_stream:
                           (h, calculus.hadamard(t, inv_nats)))
        return env

    if sys.tail_op == "delta_o":
        if delta_op is None or delta_op_inv is None:
            raise UnsupportedOp("delta_o systems need the operation and its inverse")
        env = {v: Stream.defer(alg) for v in sys.variables}

        def rest(prev, ts):
            def cell():
                b = delta_op_inv(prev, ts.head)
                return b, rest(b, ts.tail)

            return Stream(alg, cell)

        for v in sys.variables:
            head = sys.heads[v]
            rhs_stream = _interpret_basic(sys.rhs[v], env, alg)
            env[v].resolve(lambda h=head, t=rhs_stream: (h, rest(h, t)))
        return env

    raise UnsupportedOp(f"not a non-standard system: {sys.tail_op!r}")
