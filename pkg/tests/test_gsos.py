"""The syntactic stream automaton: traces, evaluation, system solving."""

import pytest

from conftest import Q, prefix, rand_rational_stream, seeded
from streamcalc import NonProductive, SpecError, bounded_eq, parse, parse_term
from streamcalc import calculus
from streamcalc.gsos import Engine, d_d, eval_term, load_system, o_d, solve_system_with_defs, term_of_state
from streamcalc.solvers import linear_system_of, solve_linear_coinductive
from streamcalc.speclang import Const, HLit, OpApp, Var
from streamcalc.stream import Equal, take


def ex84_setup():
    """sigma=(2,0,0,...), tau=ones, delta=(1,0,0,...) over the arithmetic
    signature, as in the worked syntactic-automaton example."""
    engine = Engine(Q)
    sigma = calculus.constant(Q, 2)
    tau = calculus.ones(Q)
    delta = calculus.constant(Q, 1)
    return engine, sigma, tau, delta


class TestSyntacticAutomaton:
    def test_leaf_clauses(self):
        engine, sigma, tau, delta = ex84_setup()
        leaf = engine.leaf(sigma)
        assert o_d(leaf) == 2
        assert d_d(leaf) is engine.leaf(sigma.tail)

    def test_product_of_sum_transition(self):
        # sigma x (tau + delta) --4--> (sigma' x (tau+delta)) + ([2] x (tau'+delta'))
        engine, sigma, tau, delta = ex84_setup()
        plus = engine.app("+", [engine.leaf(tau), engine.leaf(delta)])
        state = engine.app("*", [engine.leaf(sigma), plus])
        assert o_d(state) == 4
        expected = engine.app("+", [
            engine.app("*", [engine.leaf(sigma.tail), plus]),
            engine.app("*", [engine.lit(2),
                             engine.app("+", [engine.leaf(tau.tail),
                                              engine.leaf(delta.tail)])]),
        ])
        assert d_d(state) is expected  # hash-consed identity

    def test_constant_times_leaf_transition(self):
        # [5] x sigma --10--> ([0] x sigma) + ([5] x sigma'), where the
        # displayed [0] in the second factor is the stream sigma' itself
        engine, sigma, _, _ = ex84_setup()
        state = engine.app("*", [engine.lit(5), engine.leaf(sigma)])
        assert o_d(state) == 10
        expected = engine.app("+", [
            engine.app("*", [engine.lit(0), engine.leaf(sigma)]),
            engine.app("*", [engine.lit(5), engine.leaf(sigma.tail)]),
        ])
        assert d_d(state) is expected
        # and that leaf really is the zero stream
        assert isinstance(
            bounded_eq(sigma.tail, calculus.zeros(Q), 8), Equal)

    def test_state_printing(self):
        engine, sigma, _, _ = ex84_setup()
        state = engine.app("*", [engine.lit(5), engine.leaf(sigma, name="sigma")])
        assert term_of_state(state) == "([5] * sigma)"


class TestEvalTerm:
    def test_example_product_stream(self):
        _, sigma, tau, delta = ex84_setup()
        term = OpApp("*", (Var("a"), OpApp("+", (Var("b"), Var("c")))))
        got = eval_term(term, {"a": sigma, "b": tau, "c": delta})
        assert prefix(got, 4) == [4, 2, 2, 2]

    def test_constant_times_stream(self):
        _, sigma, _, _ = ex84_setup()
        got = eval_term(OpApp("*", (Const(HLit(5)), Var("a"))), {"a": sigma})
        assert prefix(got, 4) == [10, 0, 0, 0]
        assert prefix(got.tail, 3) == [0, 0, 0]

    def test_bare_leaf(self):
        rng = seeded(1)
        s = rand_rational_stream(rng)
        assert isinstance(bounded_eq(eval_term(Var("a"), {"a": s}), s, 32), Equal)

    def test_homomorphism_property(self):
        # [[f(t1,...,tk)]] = f([[t1]],...,[[tk]]) on prefixes
        rng = seeded(2)
        for _ in range(20):
            s = rand_rational_stream(rng)
            t = rand_rational_stream(rng)
            whole = eval_term(
                OpApp("*", (Var("a"), OpApp("+", (Var("b"), OpApp("X", ()))))),
                {"a": s, "b": t})
            parts = calculus.conv_mul(s, calculus.add(t, calculus.x_stream(Q)))
            assert isinstance(bounded_eq(whole, parts, 32, budget=500_000), Equal)

    def test_redeclared_builtins_agree_with_native(self):
        # user GSOS definitions of +, x, shuffle, zip vs the calculus ops
        spec = parse("""
        algebra Q;
        def plus(a, b) { out = a(0) + b(0); deriv = plus(a', b'); }
        def times(a, b) { out = a(0) * b(0);
                          deriv = plus(times(a', b), times([a(0)], b')); }
        def shuf(a, b) { out = a(0) * b(0);
                         deriv = plus(shuf(a', b), shuf(a, b')); }
        def zp(a, b) { out = a(0); deriv = zp(b, a'); }
        def mrg(a, b) {
          when a(0) < b(0) => { out = a(0); deriv = mrg(a', b); }
          when a(0) = b(0) => { out = a(0); deriv = mrg(a', b'); }
          when a(0) > b(0) => { out = b(0); deriv = mrg(a, b'); }
        }
        """)
        rng = seeded(3)
        pairs = [
            ("plus", calculus.add),
            ("times", calculus.conv_mul),
            ("shuf", calculus.shuffle_mul),
            ("zp", calculus.zip_streams),
        ]
        for _ in range(10):
            s = rand_rational_stream(rng)
            t = rand_rational_stream(rng)
            for symbol, native in pairs:
                by_def = eval_term(OpApp(symbol, (Var("a"), Var("b"))),
                                   {"a": s, "b": t}, defs=spec.defs)
                assert isinstance(
                    bounded_eq(by_def, native(s, t), 32, budget=500_000), Equal)
        by_def = eval_term(OpApp("mrg", (Var("a"), Var("b"))),
                           {"a": calculus.nats(Q), "b": calculus.nats(Q)},
                           defs=spec.defs)
        assert prefix(by_def, 5) == [1, 2, 3, 4, 5]

    def test_full_table_transcription(self):
        # every stream-calculus operation written out as a DSL definition
        # passes validation and agrees with its native implementation
        from streamcalc.speclang import Ok, validate_gsos

        spec = parse("""
        algebra Q;
        def kzero() { out = 0; deriv = kzero(); }
        def k5() { out = 5; deriv = kzero(); }
        def plus(a, b) { out = a(0) + b(0); deriv = plus(a', b'); }
        def sc3(a) { out = 3 * a(0); deriv = sc3(a'); }
        def mns(a) { out = -a(0); deriv = mns(a'); }
        def times(a, b) { out = a(0) * b(0);
                          deriv = plus(times(a', b), times([a(0)], b')); }
        def cinv(a) { out = inv(a(0));
                      deriv = times(times([-inv(a(0))], a'), cinv(a)); }
        """)
        for d in spec.defs.values():
            assert isinstance(validate_gsos(d), Ok), d.symbol
        rng = seeded(7)
        s = rand_rational_stream(rng)
        t = rand_rational_stream(rng)
        shifted = calculus.add(s, calculus.constant(Q, 1 + abs(s.head)))
        cases = [
            (OpApp("k5", ()), calculus.constant(Q, 5), {}),
            (OpApp("plus", (Var("a"), Var("b"))), calculus.add(s, t),
             {"a": s, "b": t}),
            (OpApp("sc3", (Var("a"),)), calculus.scalar(3, s), {"a": s}),
            (OpApp("mns", (Var("a"),)), calculus.neg(s), {"a": s}),
            (OpApp("times", (Var("a"), Var("b"))), calculus.conv_mul(s, t),
             {"a": s, "b": t}),
            (OpApp("cinv", (Var("a"),)), calculus.conv_inv(shifted),
             {"a": shifted}),
        ]
        for term, native, env in cases:
            by_def = eval_term(term, env, defs=spec.defs, algebra=Q)
            assert isinstance(
                bounded_eq(by_def, native, 32, budget=2_000_000), Equal), term

    def test_sos_never_touches_arguments(self):
        # an SOS definition substitutes only derivatives: the x-substitution
        # counter must stay at zero
        spec = parse("def plus(a, b) { out = a(0) + b(0); deriv = plus(a', b'); }")
        engine = Engine(Q, spec.defs)
        state = engine.from_term(OpApp("plus", (Var("a"), Var("b"))),
                                 {"a": calculus.ones(Q), "b": calculus.nats(Q)})
        take(engine.behaviour(state), 16)
        assert engine.stats["x_subst"] == 0

    def test_gsos_definition_required(self):
        spec = parse("def evn(a) { out = a(0); deriv = evn(a''); }")
        with pytest.raises(SpecError):
            Engine(Q, spec.defs)


class TestSubtermReplacement:
    def test_bisimilar_subterm_preserves_prefix(self):
        # replacing tau+delta by a stream with the same 32-prefix leaves
        # the evaluated term's 32-prefix unchanged
        rng = seeded(4)
        for _ in range(10):
            s = rand_rational_stream(rng)
            t = rand_rational_stream(rng)
            u = calculus.add(s, t)
            v = calculus.add(t, s)  # same stream, different construction
            assert isinstance(bounded_eq(u, v, 32), Equal)
            outer1 = eval_term(OpApp("*", (Var("w"), Var("u"))),
                               {"w": s, "u": u})
            outer2 = eval_term(OpApp("*", (Var("w"), Var("u"))),
                               {"w": s, "u": v})
            assert prefix(outer1, 32) == prefix(outer2, 32)


class TestSolveSystems:
    def test_nats_through_signature_extension(self):
        spec = parse("s(0)=1; s'=s; t(0)=0; t' = t + s;")
        by_engine = solve_system_with_defs(spec.system)
        by_linear = solve_linear_coinductive(linear_system_of(spec.system))
        for name in ("s", "t"):
            assert isinstance(
                bounded_eq(by_engine[name], by_linear[name], 64), Equal)
        assert prefix(by_engine["t"], 6) == [0, 1, 2, 3, 4, 5]

    def test_hamming_with_defs(self):
        spec = parse("g(0)=1; g' = merge(2*g, merge(3*g, 5*g));")
        got = solve_system_with_defs(spec.system)
        assert prefix(got["g"], 12) == [1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16]

    def test_even_loop_is_nonproductive(self):
        spec = parse("s(0)=0; s' = even(s);")
        stream = solve_system_with_defs(spec.system)["s"]
        with pytest.raises(NonProductive):
            take(stream, 3)

    def test_zip_of_tail_form(self):
        # the even-odd-of-tail format x' = zip(x_j, x_k) runs on the engine
        # with the native zip; here x(n+1) alternates y's and x's own values
        spec = parse("""
        algebra Q;
        x(0)=0; x' = zip(y, x);
        y(0)=1; y' = y;
        """)
        got = solve_system_with_defs(spec.system)
        values = prefix(got["x"], 9)
        # oracle: x(0) = 0, x(2k+1) = y(k) = 1, x(2k+2) = x(k)
        expected = [0] * 9
        for k in range(4):
            expected[2 * k + 1] = 1
            expected[2 * k + 2] = expected[k]
        assert values == expected == [0, 1, 0, 1, 1, 1, 0, 1, 1]

    def test_fibonacci(self):
        spec = parse("s(0)=0; s'(0)=1; s'' = s' + s;")
        got = solve_system_with_defs(spec.system)
        assert prefix(got["s"], 8) == [0, 1, 1, 2, 3, 5, 8, 13]


class TestEvalCli:
    def test_parse_term_eval(self):
        spec = parse("""
        algebra Q;
        def times2(a) { out = 2 * a(0); deriv = times2(a'); }
        s(0)=1; s' = s;
        """)
        engine = Engine(Q, spec.defs)
        load_system(engine, spec.system)
        term = parse_term("times2(s) + [1]", spec)
        got = engine.behaviour(engine.from_term(term))
        assert prefix(got, 4) == [3, 2, 2, 2]


class TestNativeFallbacks:
    def test_delta_and_ddx_inside_general_systems(self):
        spec = parse("""
        algebra Q;
        t(0) = 1; t' = t + t;
        s(0) = 0; s' = delta(t);
        u(0) = 0; u' = ddx(t);
        """)
        got = solve_system_with_defs(spec.system)
        assert prefix(got["t"], 5) == [1, 2, 4, 8, 16]
        # delta(t) = (1, 2, 4, ...) and ddx(t) = (2, 8, 24, 64, ...)
        assert prefix(got["s"], 5) == [0, 1, 2, 4, 8]
        assert prefix(got["u"], 5) == [0, 2, 8, 24, 64]
