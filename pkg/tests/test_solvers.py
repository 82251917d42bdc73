"""Solution methods per format, closed forms, and the rational round trip."""

from fractions import Fraction

import pytest

from conftest import (
    Q,
    prefix,
    rand_linear_system,
    rand_ratexpr,
    seeded,
)
from streamcalc import (
    Poly,
    UnsupportedOp,
    bounded_eq,
    parse,
    ratexpr_normalize,
)
from streamcalc.algebra import naturals
from streamcalc.solvers import (
    ContextFreeSystem,
    Periodic,
    PeriodicityUnknown,
    SimpleAutomaton,
    context_free_system_of,
    detect_eventually_periodic,
    linear_system_of,
    rational_to_linear,
    ratexpr_stream,
    solve_context_free,
    solve_linear_coinductive,
    solve_linear_matrix,
    solve_nonstd,
    solve_simple,
    unfold_automaton,
)
from streamcalc.speclang import EquationSystem
from streamcalc.stream import Equal
from streamcalc.stream import bounded_eq


def P(*ints):
    return Poly.from_ints(Q, ints)


class TestSimple:
    def test_alternating_pair(self):
        spec = parse("s(0)=1; s'=t; t(0)=0; t'=s;")
        sol = solve_simple(spec.system)
        assert prefix(sol["s"], 6) == [1, 0, 1, 0, 1, 0]
        assert prefix(sol["t"], 6) == [0, 1, 0, 1, 0, 1]

    def test_one_state_loop(self):
        spec = parse("s(0)=7; s'=s;")
        assert prefix(solve_simple(spec.system)["s"], 4) == [7] * 4

    def test_four_state_chain(self):
        # x0 -0-> x1 <-1/0-> x2, x3 self-loop on 0
        aut = SimpleAutomaton(Q, {"x0": 0, "x1": 1, "x2": 0, "x3": 0},
                              {"x0": "x1", "x1": "x2", "x2": "x1", "x3": "x3"})
        assert prefix(unfold_automaton(aut, "x0"), 6) == [0, 1, 0, 1, 0, 1]
        assert prefix(unfold_automaton(aut, "x3"), 4) == [0, 0, 0, 0]


class TestOneLetterLanguages:
    def test_membership_bitstream(self):
        # the language {a^n | n = 1 + 3k} as a Boolean stream automaton
        from streamcalc.algebra import booleans

        aut = SimpleAutomaton(booleans(), {"q0": False, "q1": True, "q2": False},
                              {"q0": "q1", "q1": "q2", "q2": "q0"})
        stream = unfold_automaton(aut, "q0")
        assert prefix(stream, 9) == [n % 3 == 1 for n in range(9)]
        assert detect_eventually_periodic(stream) == Periodic(0, 3)


class TestPeriodicity:
    def test_periodic_prefix_rebuilds_the_stream(self):
        # Prop 4.1 direction 3 => 1: from sigma^(k) = sigma^(n) build the
        # n-state simple automaton over the prefix and compare behaviours
        from fractions import Fraction as F

        from streamcalc.algebra import gf
        from streamcalc.automatic import binary_rational_stream
        from streamcalc.stream import bounded_eq as beq

        stream = binary_rational_stream(F(17, 5))
        verdict = detect_eventually_periodic(stream)
        k, n = verdict.k, verdict.n
        values = prefix(stream, n)
        aut = SimpleAutomaton(
            gf(2), {f"x{i}": values[i] for i in range(n)},
            {f"x{i}": (f"x{i + 1}" if i < n - 1 else f"x{k}") for i in range(n)})
        rebuilt = unfold_automaton(aut, "x0")
        assert isinstance(beq(rebuilt, stream, 64), Equal)

    def test_alternating(self):
        spec = parse("s(0)=1; s'=t; t(0)=0; t'=s;")
        sol = solve_simple(spec.system)
        assert detect_eventually_periodic(sol["s"]) == Periodic(0, 2)

    def test_binary_seventeen_fifths(self):
        from streamcalc.automatic import binary_rational_stream

        stream = binary_rational_stream(Fraction(17, 5))
        verdict = detect_eventually_periodic(stream)
        assert verdict == Periodic(3, 7)
        assert verdict.n - verdict.k == 4

    def test_fibonacci_unknown(self):
        r = ratexpr_normalize(P(0, 1), P(1, -1, -1))
        assert detect_eventually_periodic(r, bound=500) == PeriodicityUnknown()
        # oracle: the values grow strictly, so no period can exist
        values = prefix(ratexpr_stream(r), 40)
        assert all(values[i] < values[i + 1] for i in range(2, 39))

    def test_rational_periodic(self):
        r = ratexpr_normalize(P(1), P(1, 0, -1))  # 1/(1-X^2) = (1,0,1,0,...)
        assert detect_eventually_periodic(r) == Periodic(0, 2)

    def test_plain_stream_unknown(self):
        from streamcalc.calculus import ones

        assert detect_eventually_periodic(ones(Q)) == PeriodicityUnknown()


class TestLinearMatrix:
    def test_fibonacci(self):
        spec = parse("s(0)=0; s'(0)=1; s'' = s' + s;")
        ls = linear_system_of(spec.system)
        forms = dict(zip(ls.names, solve_linear_matrix(ls)))
        assert forms["s"] == ratexpr_normalize(P(0, 1), P(1, -1, -1))

    def test_naturals(self):
        spec = parse("s(0)=1; s' = s + t; t(0)=1; t'=t;")
        ls = linear_system_of(spec.system)
        forms = dict(zip(ls.names, solve_linear_matrix(ls)))
        assert forms["s"] == ratexpr_normalize(P(1), P(1, -1) * P(1, -1))

    def test_alternating(self):
        spec = parse("s(0)=0; s'(0)=1; s'' = -s;")
        ls = linear_system_of(spec.system)
        forms = dict(zip(ls.names, solve_linear_matrix(ls)))
        assert forms["s"] == ratexpr_normalize(P(0, 1), P(1, 0, 1))

    def test_powers(self):
        spec = parse("s(0)=1; s' = 3*s;")
        ls = linear_system_of(spec.system)
        assert solve_linear_matrix(ls)[0] == ratexpr_normalize(P(1), P(1, -3))

    def test_nth_powers_closed_forms(self):
        spec = parse("""
        p0(0)=1; p0' = p0;
        p1(0)=1; p1' = p0 + p1;
        p2(0)=1; p2' = p0 + 2*p1 + p2;
        p3(0)=1; p3' = p0 + 3*p1 + 3*p2 + p3;
        """)
        ls = linear_system_of(spec.system)
        forms = dict(zip(ls.names, solve_linear_matrix(ls)))
        one_minus_x = P(1, -1)
        assert forms["p2"] == ratexpr_normalize(
            P(1, 1), one_minus_x * one_minus_x * one_minus_x)
        assert forms["p3"] == ratexpr_normalize(
            P(1, 4, 1), one_minus_x * one_minus_x * one_minus_x * one_minus_x)
        # and the streams really are the n-th powers
        for name, power in (("p0", 0), ("p1", 1), ("p2", 2), ("p3", 3)):
            values = prefix(ratexpr_stream(forms[name]), 10)
            assert values == [Fraction((k + 1) ** power) for k in range(10)]

    def test_semiring_refused(self):
        Nat = naturals()
        from streamcalc.solvers import LinearSystem

        ls = LinearSystem(Nat, ("x",), (1,), ((1,),))
        with pytest.raises(UnsupportedOp):
            solve_linear_matrix(ls)
        # the coinductive route still works
        assert prefix(solve_linear_coinductive(ls)["x"], 4) == [1, 1, 1, 1]


class TestLinearCoinductive:
    def test_nats(self):
        spec = parse("s(0)=1; s'=s; t(0)=0; t' = t + s;")
        sol = solve_linear_coinductive(linear_system_of(spec.system))
        assert prefix(sol["t"], 6) == [0, 1, 2, 3, 4, 5]

    def test_zero_system(self):
        spec = parse("s(0)=0; s' = 0*s;")
        sol = solve_linear_coinductive(linear_system_of(spec.system))
        assert prefix(sol["s"], 5) == [0] * 5

    def test_powers(self):
        spec = parse("s(0)=1; s' = 3*s;")
        sol = solve_linear_coinductive(linear_system_of(spec.system))
        assert prefix(sol["s"], 5) == [1, 3, 9, 27, 81]

    def test_agrees_with_matrix_method(self):
        rng = seeded(42)
        for _ in range(100):
            ls = rand_linear_system(rng, max_n=5)
            streams = solve_linear_coinductive(ls)
            forms = solve_linear_matrix(ls)
            i = rng.randrange(ls.n)
            assert isinstance(
                bounded_eq(streams[ls.names[i]], ratexpr_stream(forms[i]),
                           64, budget=2_000_000),
                Equal)

    def test_integer_coefficients_give_integer_streams(self):
        rng = seeded(43)
        for _ in range(50):
            ls = rand_linear_system(rng, max_n=4)
            streams = solve_linear_coinductive(ls)
            for name in ls.names:
                assert all(v.denominator == 1 for v in prefix(streams[name], 64))


class TestRationalToLinear:
    def test_fibonacci_companion(self):
        r = ratexpr_normalize(P(0, 1), P(1, -1, -1))
        ls = rational_to_linear(r)
        assert ls.n == 2
        assert ls.o == (0, 1)
        assert ls.M == ((Fraction(0), Fraction(1)), (Fraction(1), Fraction(1)))

    def test_constant(self):
        r = ratexpr_normalize(P(5), P(1))
        ls = rational_to_linear(r)
        roundtrip = solve_linear_matrix(ls)[0]
        assert roundtrip == r

    def test_zero(self):
        ls = rational_to_linear(ratexpr_normalize(P(), P(1)))
        assert solve_linear_matrix(ls)[0].is_zero()

    def test_ones(self):
        r = ratexpr_normalize(P(1), P(1, -1))
        ls = rational_to_linear(r)
        assert ls.n == 1
        assert ls.o == (1,)
        assert ls.M == ((Fraction(1),),)

    def test_roundtrip_on_random_rationals(self):
        rng = seeded(44)
        for _ in range(100):
            r = rand_ratexpr(rng, max_deg=6)
            ls = rational_to_linear(r)
            assert ls.n <= 1 + max(r.num.degree, r.den.degree)
            assert solve_linear_matrix(ls)[0] == r


class TestContextFree:
    def test_catalan(self):
        spec = parse("algebra Nat; s(0)=1; s' = s*s;")
        sol = solve_context_free(context_free_system_of(spec.system))
        assert prefix(sol["s"], 9) == [1, 1, 2, 5, 14, 42, 132, 429, 1430]

    def test_schroder(self):
        spec = parse("algebra Nat; s(0)=1; s' = s + s*s;")
        sol = solve_context_free(context_free_system_of(spec.system))
        assert prefix(sol["s"], 9) == [1, 2, 6, 22, 90, 394, 1806, 8558, 41586]

    def test_thue_morse_f2(self):
        spec = parse("""
        algebra F2;
        t(0)=0; t' = m*m + X*s*s;
        s(0)=1; s' = s*s + X*n*n;
        m(0)=1; m' = t*t + X*n*n;
        n(0)=0; n' = n*n + X*s*s;
        """)
        sol = solve_context_free(context_free_system_of(spec.system))
        assert prefix(sol["t"], 8) == [0, 1, 1, 0, 1, 0, 0, 1]

    def test_linear_shaped_system_matches_linear_solver(self):
        rng = seeded(45)
        for _ in range(30):
            ls = rand_linear_system(rng, max_n=3, span=3)
            coinductive = solve_linear_coinductive(ls)
            cfs = ContextFreeSystem(
                Q, ls.names, dict(zip(ls.names, ls.o)),
                {ls.names[i]: {(ls.names[j],): ls.M[i][j]
                               for j in range(ls.n) if not Q.is_zero(ls.M[i][j])}
                 for i in range(ls.n)})
            by_cf = solve_context_free(cfs)
            for name in ls.names:
                assert isinstance(
                    bounded_eq(by_cf[name], coinductive[name], 32), Equal)


class TestNonStandard:
    def test_delta_powers_of_two(self):
        spec = parse("algebra Z; x(0)=1; delta(x) = x;")
        assert prefix(solve_nonstd(spec.system)["x"], 6) == [1, 2, 4, 8, 16, 32]

    def test_delta_zero_gives_constant(self):
        spec = parse("algebra Z; x(0)=9; delta(x) = 0*x;")
        assert prefix(solve_nonstd(spec.system)["x"], 5) == [9] * 5

    def test_ddx_inverse_factorials(self):
        import math

        spec = parse("algebra Q; x(0)=1; ddx(x) = x;")
        got = prefix(solve_nonstd(spec.system)["x"], 8)
        assert got == [Fraction(1, math.factorial(n)) for n in range(8)]

    def test_ddx_needs_characteristic_zero(self):
        spec = parse("algebra F2; x(0)=1; ddx(x) = x;")
        with pytest.raises(UnsupportedOp):
            solve_nonstd(spec.system)

    def test_delta_needs_ring(self):
        sys = EquationSystem(naturals(), ("x",), {"x": 1}, tail_op="delta",
                             rhs={"x": __import__("streamcalc.speclang",
                                                  fromlist=["Var"]).Var("x")})
        with pytest.raises(UnsupportedOp):
            solve_nonstd(sys)

    def test_delta_o_direct_unfold(self):
        # o(a, b) = b - 2a with inverse b = t + 2a; delta_o(x) = x, x(0)=1
        # means x(n+1) = x(n) + 2x(n) = 3x(n)
        from streamcalc.speclang import Var

        sys = EquationSystem(Q, ("x",), {"x": Fraction(1)}, tail_op="delta_o",
                             rhs={"x": Var("x")})
        sol = solve_nonstd(sys, delta_op=lambda a, b: b - 2 * a,
                           delta_op_inv=lambda a, t: t + 2 * a)
        assert prefix(sol["x"], 5) == [1, 3, 9, 27, 81]
        # check the defining equation: delta_o(x) = x
        from streamcalc.calculus import delta_o

        assert prefix(delta_o(lambda a, b: b - 2 * a, sol["x"]), 4) \
            == prefix(sol["x"], 4)
