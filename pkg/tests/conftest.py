"""Shared test helpers: random exact values, streams, and oracles."""

import random
from fractions import Fraction

from streamcalc import Poly, rationals, ratexpr_normalize
from streamcalc.solvers import LinearSystem, solve_linear_coinductive
from streamcalc.stream import Stream, take

Q = rationals()


def rand_fraction(rng, span=9):
    return Fraction(rng.randint(-span, span), rng.randint(1, span))


def rand_poly(rng, max_deg=6, span=9):
    degree = rng.randint(0, max_deg)
    return Poly(Q, [rand_fraction(rng, span) for _ in range(degree + 1)])


def rand_ratexpr(rng, max_deg=6):
    """A random canonical rational expression (denominator head != 0)."""
    num = rand_poly(rng, max_deg)
    while True:
        den = rand_poly(rng, max_deg)
        if not Q.is_zero(den.at_zero()):
            return ratexpr_normalize(num, den)


def rand_linear_system(rng, max_n=5, span=5):
    n = rng.randint(1, max_n)
    names = tuple(f"v{i}" for i in range(n))
    o = tuple(Fraction(rng.randint(-span, span)) for _ in range(n))
    M = tuple(tuple(Fraction(rng.randint(-span, span)) for _ in range(n))
              for _ in range(n))
    return LinearSystem(Q, names, o, M)


def rand_rational_stream(rng, max_n=4):
    """A random stream solved from a small linear system over Q."""
    ls = rand_linear_system(rng, max_n)
    return solve_linear_coinductive(ls)[ls.names[0]]


def from_fn(alg, fn):
    """Stream of fn(0), fn(1), ... -- test scaffolding only."""

    def go(i):
        return Stream(alg, lambda: (alg.coerce(fn(i)), go(i + 1)))

    return go(0)


def conv_oracle(xs, ys):
    """Direct double-loop convolution of two prefixes (the eq-for-products
    summation), independent of the stream implementation."""
    n = min(len(xs), len(ys))
    return [sum((xs[k] * ys[i - k] for k in range(i + 1)), Fraction(0))
            for i in range(n)]


def prefix(stream, n, budget=200_000):
    return take(stream, n, budget)


def seeded(seed):
    return random.Random(seed)
