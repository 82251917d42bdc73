"""The built-in stream operations.

Each operation is implemented by its defining stream differential
equation -- head plus a lazily built tail -- rather than by an index
formula, so the independent index formulas stay available as test
oracles.  Non-causal operations (even, odd, delta, ddx, delta_o) reach
further than one element into their argument and use delayed tails to
keep whatever productivity the argument offers.
"""

from .algebra import same_algebra
from .errors import (
    HeadNotInvertible,
    NoExactSqrt,
    UnorderedAlgebra,
    UnsupportedOp,
)
from .stream import Stream, cons

_ZEROS = {}


def zeros(alg):
    z = _ZEROS.get(alg)
    if z is None:
        z = Stream.defer(alg)
        z.resolve(lambda: (alg.zero, z))
        _ZEROS[alg] = z
    return z


def constant(alg, a):
    """[a] = (a, 0, 0, ...)."""
    a = alg.coerce(a)
    return Stream(alg, lambda: (a, zeros(alg)))


def x_stream(alg):
    """X = (0, 1, 0, 0, ...)."""
    return cons(alg.zero, constant(alg, alg.one))


def ones(alg):
    s = Stream.defer(alg)
    s.resolve(lambda: (alg.one, s))
    return s


def nats(alg):
    """(1, 2, 3, ...) by n-fold addition; defined over any semiring."""

    def from_(a):
        return Stream(alg, lambda: (a, from_(alg.add(a, alg.one))))

    return from_(alg.one)


def nats_inv(alg):
    """(1, 1/2, 1/3, ...); needs a field of characteristic zero."""
    if alg.kind != "field" or alg.characteristic != 0:
        raise UnsupportedOp("nats_inv needs a characteristic-zero field")

    def from_(a):
        return Stream(alg, lambda: (alg.inv(a), from_(alg.add(a, alg.one))))

    return from_(alg.one)


def add(s, t):
    alg = same_algebra(s.algebra, t.algebra)
    return Stream(alg, lambda: (alg.add(s.head, t.head), add(s.tail, t.tail)))


def neg(s):
    alg = s.algebra
    if alg.neg is None:
        raise UnsupportedOp(f"minus needs a ring, not {alg.name}")
    return Stream(alg, lambda: (alg.neg(s.head), neg(s.tail)))


def sub(s, t):
    return add(s, neg(t))


def scalar(a, s):
    alg = s.algebra
    a = alg.coerce(a)
    return Stream(alg, lambda: (alg.mul(a, s.head), scalar(a, s.tail)))


def conv_mul(s, t):
    """Convolution product, by (s*t)' = (s'*t) + ([s(0)]*t').

    The [a]*sigma factor is realised as the elementwise scalar action
    (a -> [a] is a semiring homomorphism), which keeps the derivative
    expansion linear in size instead of branching at every level.
    """
    alg = same_algebra(s.algebra, t.algebra)

    def cell():
        a = s.head
        return (alg.mul(a, t.head),
                add(conv_mul(s.tail, t), scalar(a, t.tail)))

    return Stream(alg, cell)


def conv_inv(s):
    """Convolution inverse; needs an invertible head and a negation."""
    alg = s.algebra
    if alg.inv is None:
        raise UnsupportedOp(f"{alg.name} has no multiplicative inverses")
    if alg.neg is None:
        raise UnsupportedOp(f"convolution inverse needs a ring, not {alg.name}")
    out = Stream.defer(alg)

    def cell():
        h = alg.inv(s.head)
        if h is None:
            raise HeadNotInvertible(f"head {alg.fmt(s.head)} has no inverse")
        return (h, scalar(alg.neg(h), conv_mul(s.tail, out)))

    out.resolve(cell)
    return out


def shuffle_mul(s, t):
    """Shuffle product, by (s@t)' = (s'@t) + (s@t').

    Derivative nodes are shared per argument pair: the n-th derivative
    expands over the binomial lattice of argument derivatives, so
    without sharing the node count would double at every level.
    """
    alg = same_algebra(s.algebra, t.algebra)
    memo = {}

    def go(a, b):
        key = (id(a), id(b))
        node = memo.get(key)
        if node is None:
            def cell(a=a, b=b):
                return alg.mul(a.head, b.head), add(go(a.tail, b), go(a, b.tail))

            node = Stream(alg, cell)
            memo[key] = node
        return node

    return go(s, t)


def hadamard(s, t):
    alg = same_algebra(s.algebra, t.algebra)
    return Stream(alg, lambda: (alg.mul(s.head, t.head),
                                hadamard(s.tail, t.tail)))


def sqrt_stream(s):
    """Square root: head sqrt(s(0)), tail s' / ([sqrt(s(0))] + sqrt(s))."""
    alg = s.algebra
    if alg.sqrt is None:
        raise NoExactSqrt(f"{alg.name} has no square roots")
    out = Stream.defer(alg)

    def cell():
        r = alg.sqrt(s.head)
        if r is None:
            raise NoExactSqrt(f"{alg.fmt(s.head)} has no exact square root")
        return (r, conv_mul(s.tail, conv_inv(add(constant(alg, r), out))))

    out.resolve(cell)
    return out


def even(s):
    alg = s.algebra

    def cell():
        # even(s)' = even(s''), and s'' must stay undemanded until needed
        return (s.head, even(Stream.delay(alg, lambda: s.tail.tail)))

    return Stream(alg, cell)


def odd(s):
    return even(Stream.delay(s.algebra, lambda: s.tail))


def zip_streams(s, t):
    """Interleave: zip(s, t) = (s0, t0, s1, t1, ...)."""
    alg = same_algebra(s.algebra, t.algebra)
    return Stream(alg, lambda: (s.head, zip_streams(t, s.tail)))


def merge(s, t):
    """Sorted merge dropping duplicates; needs an ordered algebra."""
    alg = same_algebra(s.algebra, t.algebra)
    if not alg.ordered:
        raise UnorderedAlgebra(f"merge needs an order on {alg.name}")

    def cell():
        a, b = s.head, t.head
        if alg.lt(a, b):
            return a, merge(s.tail, t)
        if alg.eq(a, b):
            return a, merge(s.tail, t.tail)
        return b, merge(s, t.tail)

    return Stream(alg, cell)


def delta(s):
    """Forward difference (s(1)-s(0), s(2)-s(1), ...)."""
    alg = s.algebra
    if alg.neg is None:
        raise UnsupportedOp(f"delta needs a ring, not {alg.name}")

    def cell():
        return alg.sub(s.tail.head, s.head), delta(Stream.delay(alg, lambda: s.tail))

    return Stream(alg, cell)


def ddx(s):
    """Formal power series derivative (s(1), 2*s(2), 3*s(3), ...)."""
    alg = s.algebra

    def from_(t, k):
        return Stream(alg, lambda: (alg.nat_mul(k, t.head), from_(t.tail, k + 1)))

    return Stream.delay(alg, lambda: from_(s.tail, 1))


def delta_o(op, s):
    """(op(s0,s1), op(s1,s2), ...) for a user binary operation.

    For this to carry a final-automaton structure the user must ensure
    b -> op(a, b) is invertible for every a; the engine does not check.
    """
    alg = s.algebra

    def cell():
        return op(s.head, s.tail.head), delta_o(op, Stream.delay(alg, lambda: s.tail))

    return Stream(alg, cell)


def stream_of_poly(p):
    """The stream of a polynomial's coefficients padded with zeros."""
    out = zeros(p.algebra)
    for c in reversed(p.coeffs):
        out = cons(c, out)
    return out


# DSL keyword -> implementation, used by the evaluators.
BUILTIN_ARITY = {
    "+": 2, "-": (1, 2), "*": 2, "inv": 1, "X": 0,
    "shuffle": 2, "hadamard": 2, "sqrt": 1,
    "even": 1, "odd": 1, "zip": 2, "merge": 2,
    "delta": 1, "ddx": 1,
}


def apply_builtin(symbol, args, alg):
    if symbol == "+":
        return add(*args)
    if symbol == "-":
        return neg(args[0]) if len(args) == 1 else sub(*args)
    if symbol == "*":
        return conv_mul(*args)
    if symbol == "inv":
        return conv_inv(args[0])
    if symbol == "X":
        return x_stream(alg)
    if symbol == "shuffle":
        return shuffle_mul(*args)
    if symbol == "hadamard":
        return hadamard(*args)
    if symbol == "sqrt":
        return sqrt_stream(args[0])
    if symbol == "even":
        return even(args[0])
    if symbol == "odd":
        return odd(args[0])
    if symbol == "zip":
        return zip_streams(*args)
    if symbol == "merge":
        return merge(*args)
    if symbol == "delta":
        return delta(args[0])
    if symbol == "ddx":
        return ddx(args[0])
    raise UnsupportedOp(f"unknown builtin {symbol!r}")
