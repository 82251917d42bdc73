"""Command line front end.

Exit codes: 0 success / proof; 1 refutation or validation failure;
2 unknown / budget exhausted / non-productive; 3 parse or usage errors.
Output is plain deterministic text; diagnostics go to stderr as single
`error: <Kind>: <message>` lines.
"""

import argparse
import sys
from fractions import Fraction

from . import automatic, equivalence, gsos, solvers, speclang
from .algebra import format_ratexpr, get_algebra
from .errors import (
    BudgetExhausted,
    GsosViolation,
    SpecError,
    StreamCalcError,
    UnsupportedOp,
)
from .speclang import Kind, OpApp, Var
from .stream import take

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _ArgumentParser(prog="streamcalc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, budget=True, count=True, algebra=True):
        if count:
            p.add_argument("-n", type=int, default=20, dest="count")
        if budget:
            p.add_argument("--budget", type=int, default=10_000)
        if algebra:
            p.add_argument("--algebra", default=None)

    p = sub.add_parser("solve", help="print a solution prefix")
    p.add_argument("selector", metavar="SPEC#VAR")
    common(p)

    p = sub.add_parser("eval", help="evaluate a term over a definition file")
    p.add_argument("--defs", required=True)
    p.add_argument("--term", required=True)
    common(p)

    p = sub.add_parser("closed-form", help="rational closed form of a linear system")
    p.add_argument("selector", metavar="SPEC#VAR")
    common(p, budget=False, count=False)

    p = sub.add_parser("equiv", help="decide or semi-decide stream equality")
    p.add_argument("left", metavar="SPECA#VAR")
    p.add_argument("right", metavar="SPECB#VAR")
    p.add_argument("--up-to", dest="up_to", default=None,
                   help="comma-separated operations for the congruence closure")
    p.add_argument("--prefix", type=int, default=64,
                   help="refutation pre-scan depth")
    common(p, count=False)

    p = sub.add_parser("kernel", help="2-kernel of a stream")
    p.add_argument("selector", metavar="SPEC#VAR")
    common(p)

    p = sub.add_parser("at", help="single element by bbin indexing")
    p.add_argument("index", type=int)
    p.add_argument("selector", metavar="SPEC#VAR")
    common(p, count=False)

    p = sub.add_parser("bbin", help="binary expansion of a rational")
    p.add_argument("rational")
    common(p, budget=False, algebra=False)

    p = sub.add_parser("check", help="parse, classify, validate, probe")
    p.add_argument("spec")
    common(p, count=False)
    return parser


def _load(path, algebra_name):
    override = None
    if algebra_name:
        try:
            override = get_algebra(algebra_name)
        except UnsupportedOp as err:
            raise _UsageError(str(err)) from None
    with open(path, encoding="utf-8") as handle:
        return speclang.parse(handle.read(), algebra=override)


def _selector(text):
    if "#" not in text:
        raise _UsageError(f"selector {text!r} must look like file.sde#var")
    path, var = text.rsplit("#", 1)
    return path, var


def _solve_spec(spec):
    """Solution streams of a spec file's system, routed by its format."""
    sys_ = spec.system
    if sys_ is None:
        raise SpecError("the file defines no equation system")
    kind = speclang.classify(sys_)
    if kind is Kind.SIMPLE:
        return solvers.solve_simple(sys_), kind
    if kind is Kind.LINEAR:
        return solvers.solve_linear_coinductive(
            solvers.linear_system_of(sys_)), kind
    if kind is Kind.CONTEXT_FREE:
        # same unique solution as the polynomial-state automaton, but the
        # hash-consed term states stay polynomial on systems whose
        # polynomial states explode (e.g. the Thue-Morse F2 system)
        return gsos.solve_system_with_defs(sys_, spec.defs), kind
    if kind is Kind.NONSTD:
        return solvers.solve_nonstd(sys_), kind
    if kind is Kind.EVEN_ODD:
        aut = automatic.compile_evenodd(sys_)
        return {v: automatic.stream_of(aut, v) for v in sys_.variables}, kind
    return gsos.solve_system_with_defs(sys_, spec.defs), kind


def _format_prefix(alg, values):
    return ", ".join(alg.fmt(v) for v in values)


def _cmd_solve(args, out):
    path, var = _selector(args.selector)
    spec = _load(path, args.algebra)
    streams, _ = _solve_spec(spec)
    if var not in streams:
        raise SpecError(f"no variable {var!r} in {path}")
    values = take(streams[var], args.count, args.budget)
    print(_format_prefix(spec.algebra, values), file=out)
    return EXIT_OK


def _cmd_eval(args, out):
    spec = _load(args.defs, args.algebra)
    term = speclang.parse_term(args.term, spec)
    engine = gsos.Engine(spec.algebra, spec.defs)
    if spec.system is not None:
        gsos.load_system(engine, spec.system)
    state = engine.from_term(term)
    values = take(engine.behaviour(state), args.count, args.budget)
    print(_format_prefix(spec.algebra, values), file=out)
    return EXIT_OK


def _closed_forms(spec):
    sys_ = spec.system
    if sys_ is None:
        raise SpecError("the file defines no equation system")
    kind = speclang.classify(sys_)
    if kind not in (Kind.SIMPLE, Kind.LINEAR):
        raise UnsupportedOp(f"closed forms need a linear system, got {kind.value}")
    ls = solvers.linear_system_of(sys_)
    forms = solvers.solve_linear_matrix(ls)
    return dict(zip(ls.names, forms))


def _cmd_closed_form(args, out):
    path, var = _selector(args.selector)
    spec = _load(path, args.algebra)
    forms = _closed_forms(spec)
    if var not in forms:
        raise SpecError(f"no variable {var!r} in {path}")
    print(format_ratexpr(forms[var]), file=out)
    return EXIT_OK


def _rename_system(sys_, suffix):
    mapping = {v: f"{v}{suffix}" for v in sys_.variables}

    def rn(t):
        if isinstance(t, Var):
            return Var(mapping.get(t.name, t.name))
        if isinstance(t, OpApp):
            return OpApp(t.symbol, tuple(rn(a) for a in t.args))
        return t

    return speclang.EquationSystem(
        sys_.algebra,
        tuple(mapping[v] for v in sys_.variables),
        {mapping[v]: sys_.heads[v] for v in sys_.variables},
        tail_op=sys_.tail_op,
        rhs={mapping[v]: rn(sys_.rhs[v]) for v in sys_.rhs},
        evens={mapping[v]: mapping[w] for v, w in sys_.evens.items()},
        odds={mapping[v]: mapping[w] for v, w in sys_.odds.items()},
    ), mapping


def _cmd_equiv(args, out):
    path_a, var_a = _selector(args.left)
    path_b, var_b = _selector(args.right)
    spec_a = _load(path_a, args.algebra)
    spec_b = _load(path_b, args.algebra)
    if spec_a.algebra is not spec_b.algebra:
        raise UnsupportedOp("the two specifications use different algebras")
    for sp, var in ((spec_a, var_a), (spec_b, var_b)):
        if sp.system is None or var not in sp.system.variables:
            raise SpecError(f"no variable {var!r}")

    kind_a = speclang.classify(spec_a.system)
    kind_b = speclang.classify(spec_b.system)
    linear = (Kind.SIMPLE, Kind.LINEAR)
    if (kind_a in linear and kind_b in linear
            and spec_a.algebra.kind == "field" and args.up_to is None):
        forms_a = _closed_forms(spec_a)
        forms_b = _closed_forms(spec_b)
        result = equivalence.equiv_rational(forms_a[var_a], forms_b[var_b])
        if isinstance(result, equivalence.Proved):
            print("Proved", file=out)
            print(f"closed form: {format_ratexpr(forms_a[var_a])}", file=out)
            return EXIT_OK
        print(f"Refuted at index {result.index}: "
              f"{spec_a.algebra.fmt(result.left)} != "
              f"{spec_a.algebra.fmt(result.right)}", file=out)
        return EXIT_REFUTED

    defs = dict(spec_a.defs)
    for name, d in spec_b.defs.items():
        if name in defs and defs[name] != d:
            raise SpecError(f"conflicting definitions of {name!r}")
        defs[name] = d
    sys_b = spec_b.system
    if set(sys_b.variables) & set(spec_a.system.variables):
        sys_b, mapping = _rename_system(sys_b, "#b")
        var_b = mapping[var_b]
    engine = gsos.Engine(spec_a.algebra, defs)
    states_a = gsos.load_system(engine, spec_a.system)
    states_b = gsos.load_system(engine, sys_b)
    left, right = states_a[var_a], states_b[var_b]

    if args.prefix > 0:
        from .stream import Differ, bounded_eq

        scan = bounded_eq(engine.behaviour(left), engine.behaviour(right),
                          args.prefix, args.budget)
        if isinstance(scan, Differ):
            print(f"Refuted at index {scan.index}: "
                  f"{spec_a.algebra.fmt(scan.left)} != "
                  f"{spec_a.algebra.fmt(scan.right)}", file=out)
            return EXIT_REFUTED

    sig_ops = None
    if args.up_to is not None:
        sig_ops = frozenset(s.strip() for s in args.up_to.split(",") if s.strip())
    result = equivalence.equiv_up_to(left, right, engine=engine,
                                     sig_ops=sig_ops, budget=args.budget)
    if isinstance(result, equivalence.Proved):
        cert = result.certificate
        print("Proved", file=out)
        scope = "user signature" if cert.beyond_table1 else "stream calculus"
        print(f"certificate (bisimulation-up-to, {scope}):", file=out)
        for line in cert.render():
            print(f"  {line}", file=out)
        return EXIT_OK
    if isinstance(result, equivalence.Refuted):
        print(f"Refuted at index {result.index}: "
              f"{spec_a.algebra.fmt(result.left)} != "
              f"{spec_a.algebra.fmt(result.right)}", file=out)
        return EXIT_REFUTED
    print(f"Unknown ({result.reason})", file=out)
    return EXIT_UNKNOWN


def _cmd_kernel(args, out):
    path, var = _selector(args.selector)
    spec = _load(path, args.algebra)
    streams, _ = _solve_spec(spec)
    if var not in streams:
        raise SpecError(f"no variable {var!r} in {path}")
    result = automatic.kernel2(streams[var], budget=min(args.budget, 512))
    if isinstance(result, automatic.KernelUnknown):
        print("Unknown (kernel did not close within the budget)", file=out)
        return EXIT_UNKNOWN
    label = "exact" if result.exact else "heuristic"
    print(f"2-kernel ({label}, {len(result.automaton.states)} states):", file=out)
    print(result.automaton.dump(), file=out)
    return EXIT_OK


def _cmd_at(args, out):
    path, var = _selector(args.selector)
    spec = _load(path, args.algebra)
    if args.index < 0:
        raise _UsageError("the index must be nonnegative")
    sys_ = spec.system
    if (sys_ is not None and speclang.classify(sys_) is Kind.EVEN_ODD
            and var in sys_.variables):
        aut = automatic.compile_evenodd(sys_)
        print(spec.algebra.fmt(automatic.value_at(aut, var, args.index)), file=out)
        return EXIT_OK
    streams, _ = _solve_spec(spec)
    if var not in streams:
        raise SpecError(f"no variable {var!r} in {path}")
    values = take(streams[var], args.index + 1, args.budget)
    print(spec.algebra.fmt(values[-1]), file=out)
    return EXIT_OK


def _cmd_bbin(args, out):
    try:
        q = Fraction(args.rational)
    except (ValueError, ZeroDivisionError):
        raise _UsageError(f"{args.rational!r} is not a rational number") from None
    bits = automatic.binary_encode_rational(q, args.count)
    print(" ".join(str(b) for b in bits), file=out)
    return EXIT_OK


def _cmd_check(args, out):
    spec = _load(args.spec, args.algebra)
    status = EXIT_OK
    defs = len(spec.defs)
    eqs = len(spec.system.variables) if spec.system else 0
    print(f"parse: ok (algebra {spec.algebra.name}, {eqs} unknown(s), "
          f"{defs} definition(s))", file=out)
    for name, d in spec.defs.items():
        verdict = speclang.validate_gsos(d)
        if isinstance(verdict, speclang.Ok):
            shape = "sos" if verdict.sos else "gsos"
            print(f"def {name}: ok ({shape})", file=out)
        else:
            print(f"def {name}: violation ({verdict.reason})", file=out)
            status = max(status, EXIT_REFUTED)
    sys_ = spec.system
    if sys_ is None:
        return status
    kind = speclang.classify(sys_)
    print(f"kind: {kind.value}", file=out)
    if kind is Kind.EVEN_ODD:
        verdict = speclang.check_zero_consistency(sys_)
        if isinstance(verdict, speclang.ZeroConsistent):
            print("zero-consistency: ok", file=out)
        else:
            print(f"zero-consistency: violation at {verdict.state}", file=out)
            return max(status, EXIT_REFUTED)
    try:
        streams, _ = _solve_spec(spec)
    except StreamCalcError as err:
        print(f"solve: failed ({err})", file=out)
        return max(status, EXIT_REFUTED)
    probe_budget = min(args.budget, 1000)
    for var in sys_.variables:
        try:
            values = take(streams[var], 3, probe_budget)
        except BudgetExhausted as err:
            kind_name = type(err).__name__
            print(f"probe {var}: {kind_name} at index {err.index}", file=out)
            status = max(status, EXIT_UNKNOWN)
        else:
            print(f"probe {var}: ok ({_format_prefix(spec.algebra, values)})",
                  file=out)
    return status


_COMMANDS = {
    "solve": _cmd_solve,
    "eval": _cmd_eval,
    "closed-form": _cmd_closed_form,
    "equiv": _cmd_equiv,
    "kernel": _cmd_kernel,
    "at": _cmd_at,
    "bbin": _cmd_bbin,
    "check": _cmd_check,
}


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except _UsageError as use:
        print(f"error: usage: {use}", file=err)
        return EXIT_USAGE
    except FileNotFoundError as missing:
        print(f"error: usage: {missing}", file=err)
        return EXIT_USAGE
    except GsosViolation as violation:
        print(f"error: GsosViolation: {violation}", file=err)
        return EXIT_REFUTED
    except SpecError as spec_err:
        print(f"error: {type(spec_err).__name__}: {spec_err}", file=err)
        return EXIT_USAGE
    except BudgetExhausted as stalled:
        print(f"error: {type(stalled).__name__}: {stalled}", file=err)
        return EXIT_UNKNOWN
    except StreamCalcError as failure:
        print(f"error: {type(failure).__name__}: {failure}", file=err)
        return EXIT_REFUTED


def main():
    raise SystemExit(run())
