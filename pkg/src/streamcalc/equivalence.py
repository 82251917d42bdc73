"""Deciding and semi-deciding stream equality.

Three procedures, by decidability:

* rational streams: canonical forms make equality a cross-multiplication
  check -- never Unknown;
* finite stream automata: partition refinement decides bisimilarity,
  refutations come with the first disagreeing index;
* terms over a GSOS signature: a budgeted bisimulation-up-to search.
  The candidate relation grows along the (deterministic) derivative
  chain; a pair is discharged when it lies in the congruence closure of
  the relation under the chosen operations, where closure membership
  also admits instantiating a relation pair whose leaves are stream
  variables (the heads of such pairs were compared as polynomials, so
  every instantiation is covered).

Every Proved result carries a certificate that an independent pass can
re-check.
"""

from dataclasses import dataclass, field

from .algebra import RatExpr, ratexpr_derivative, ratexpr_head, same_algebra
from .errors import UnsupportedOp
from .gsos import Engine, State, SymbolicStuck, SymHead, sym_equal, term_of_state


@dataclass(frozen=True)
class Proved:
    certificate: object


@dataclass(frozen=True)
class Refuted:
    index: int
    left: object
    right: object


@dataclass(frozen=True)
class Unknown:
    budget: int
    reason: str = "budget exceeded"


# Table 1 operations (constants are literal states, not applications).
TABLE1_OPS = frozenset({"+", "-", "neg", "*", "inv", "X"})

# The closure relates streams, not terms; for these operations the two
# operand orders denote the same stream (the coefficient algebras are
# commutative semirings), so congruence steps may also pair operands
# crosswise.
COMMUTATIVE_OPS = frozenset({"+", "*", "shuffle", "hadamard", "merge"})


# ---------------------------------------------------------------------------
# Rational streams


@dataclass(frozen=True)
class RationalCertificate:
    """Witness p1*q2 = p2*q1; checkable by independent convolution."""

    left: RatExpr
    right: RatExpr
    product: object  # the common cross product polynomial


def equiv_rational(r1, r2):
    alg = same_algebra(r1.algebra, r2.algebra)
    lhs = r1.num * r2.den
    rhs = r2.num * r1.den
    if lhs == rhs:
        return Proved(RationalCertificate(r1, r2, lhs))
    diff = lhs - rhs
    index = next(i for i, c in enumerate(diff.coeffs) if not alg.is_zero(c))
    a, b = r1, r2
    for _ in range(index):
        a, b = ratexpr_derivative(a), ratexpr_derivative(b)
    return Refuted(index, ratexpr_head(a), ratexpr_head(b))


def _convolve(alg, p, q):
    # deliberately separate from Poly.__mul__: the verifier's own loop
    n = len(p) + len(q) - 1 if p and q else 0
    out = [alg.zero] * n
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = alg.add(out[i + j], alg.mul(a, b))
    while out and alg.is_zero(out[-1]):
        out.pop()
    return out


def verify_rational_certificate(cert):
    alg = cert.left.algebra
    lhs = _convolve(alg, cert.left.num.coeffs, cert.right.den.coeffs)
    rhs = _convolve(alg, cert.right.num.coeffs, cert.left.den.coeffs)
    if len(lhs) != len(rhs):
        return False
    if not all(alg.eq(a, b) for a, b in zip(lhs, rhs)):
        return False
    return list(cert.product.coeffs) == lhs


# ---------------------------------------------------------------------------
# Finite stream automata


@dataclass(frozen=True)
class BisimCertificate:
    """A bisimulation relation between two finite automata."""

    left: object
    right: object
    relation: frozenset  # pairs (x, y), x in left, y in right


def bisim_finite(aut1, s1, aut2, s2):
    """Decide the behaviours of two finite-automaton states.

    Partition refinement (Moore) on the disjoint union computes
    bisimilarity; refutations report the first disagreeing index by a
    prefix walk, which is bounded by |S1|*|S2| steps.
    """
    alg = same_algebra(aut1.algebra, aut2.algebra)
    states = [("L", x) for x in aut1.states] + [("R", y) for y in aut2.states]

    def out(tagged):
        tag, q = tagged
        return (aut1 if tag == "L" else aut2).outputs[q]

    def nxt(tagged):
        tag, q = tagged
        return (tag, (aut1 if tag == "L" else aut2).next[q])

    block = {}
    outputs = {}
    for st in states:
        o = out(st)
        key = next((k for k in outputs if alg.eq(outputs[k], o)), None)
        if key is None:
            key = len(outputs)
            outputs[key] = o
        block[st] = key
    while True:
        signature = {st: (block[st], block[nxt(st)]) for st in states}
        keys = {}
        new_block = {}
        for st in states:
            sig = signature[st]
            if sig not in keys:
                keys[sig] = len(keys)
            new_block[st] = keys[sig]
        if new_block == block:
            break
        block = new_block

    if block[("L", s1)] == block[("R", s2)]:
        relation = frozenset(
            (x, y)
            for x in aut1.states
            for y in aut2.states
            if block[("L", x)] == block[("R", y)]
        )
        return Proved(BisimCertificate(aut1, aut2, relation))
    x, y = s1, s2
    for i in range(len(aut1.states) * len(aut2.states) + 1):
        a, b = aut1.outputs[x], aut2.outputs[y]
        if not alg.eq(a, b):
            return Refuted(i, a, b)
        x, y = aut1.next[x], aut2.next[y]
    raise AssertionError("refinement and walk disagree")


def verify_bisim_certificate(cert, s1, s2):
    alg = cert.left.algebra
    rel = cert.relation
    if (s1, s2) not in rel:
        return False
    for x, y in rel:
        if not alg.eq(cert.left.outputs[x], cert.right.outputs[y]):
            return False
        if (cert.left.next[x], cert.right.next[y]) not in rel:
            return False
    return True


# ---------------------------------------------------------------------------
# Bisimulation-up-to for GSOS terms


@dataclass
class UpToCertificate:
    """The relation built by the up-to search, plus its closure steps.

    pairs: the relation R (engine states).  discharge: the closure
    derivation showing the final derivative pair is in R-bar.  ops_used:
    operations exercised by congruence steps; proofs that leave Table 1
    are flagged (the classic theorem covers the stream calculus
    signature; the general-signature soundness rests on the abstract
    GSOS argument).
    """

    engine: Engine
    roots: tuple
    pairs: list
    discharge: object
    sig_ops: object
    ops_used: frozenset = field(default_factory=frozenset)

    @property
    def beyond_table1(self):
        return bool(self.ops_used - TABLE1_OPS)

    def render(self):
        lines = []
        for u, v in self.pairs:
            lines.append(f"{term_of_state(u)}  ~  {term_of_state(v)}")
        return lines


def _match(engine, pattern, state, theta):
    """Match a relation pair component against a state.

    Stream variables in the pattern are schema variables; bindings are
    kept per base name with a derivative-order anchor so that x and x'
    can only map to a state and its derivative.
    """
    if not pattern.has_vars:
        return pattern is state
    if pattern.kind == "var":
        anchor = theta.get(pattern.name)
        if anchor is None:
            theta[pattern.name] = (pattern.order, state)
            return True
        order, bound = anchor
        if pattern.order >= order:
            probe = bound
            for _ in range(pattern.order - order):
                probe = engine.derivative(probe)
            return probe is state
        probe = state
        for _ in range(order - pattern.order):
            probe = engine.derivative(probe)
        if probe is bound:
            theta[pattern.name] = (pattern.order, state)
            return True
        return False
    if pattern.kind == "app" and state.kind == "app":
        if pattern.symbol != state.symbol or len(pattern.args) != len(state.args):
            return False
        return all(_match(engine, p, s, theta)
                   for p, s in zip(pattern.args, state.args))
    return False


def _closure_membership(engine, pair, relation, sig_ops, used):
    """Derivation that pair is in R-bar, or None.

    R-bar: the diagonal, instances of relation pairs, and closure under
    the operations in sig_ops (congruence steps, also crosswise for
    commutative operations).
    """
    u, v = pair
    if u is v:
        return ("refl", u)
    for a, b in relation:
        theta = {}
        if _match(engine, a, u, theta) and _match(engine, b, v, theta):
            return ("hyp", (a, b))
    if (u.kind == "app" and v.kind == "app" and u.symbol == v.symbol
            and len(u.args) == len(v.args)
            and (sig_ops is None or u.symbol in sig_ops)):
        pairings = [tuple(zip(u.args, v.args))]
        if u.symbol in COMMUTATIVE_OPS and len(u.args) == 2:
            pairings.append(((u.args[0], v.args[1]), (u.args[1], v.args[0])))
        for pairing in pairings:
            subs = []
            for child in pairing:
                sub = _closure_membership(engine, child, relation, sig_ops, used)
                if sub is None:
                    subs = None
                    break
                subs.append(sub)
            if subs is not None:
                used.add(u.symbol)
                return ("cong", u.symbol, tuple(subs))
    return None


def equiv_up_to(t1, t2, defs=None, env=None, sig_ops=None, budget=2000,
                algebra=None, engine=None):
    """Budgeted bisimulation-up-to between two terms.

    Terms may be speclang Terms (variables unbound in env become
    universally quantified stream variables) or prebuilt engine States.
    sig_ops restricts which operations congruence steps may cross;
    None means the full declared signature.
    """
    if engine is None:
        if algebra is None:
            raise UnsupportedOp("equiv_up_to needs an algebra or an engine")
        engine = Engine(algebra, defs)
    alg = engine.algebra

    def to_state(t):
        return t if isinstance(t, State) else engine.from_term(
            t, env, symbolic=True)

    try:
        s1, s2 = to_state(t1), to_state(t2)
    except SymbolicStuck as stuck:
        # e.g. a non-causal builtin applied to a universally quantified
        # variable: no syntactic state exists for it
        return Unknown(budget, str(stuck))
    depth_cap = max(64, min(budget, 400))
    _ensure_recursion_room(depth_cap)
    relation = []
    used = set()
    current = (s1, s2)
    index = 0
    while True:
        derivation = _closure_membership(engine, current, relation, sig_ops, used)
        if derivation is not None:
            cert = UpToCertificate(engine, (s1, s2), relation, derivation,
                                   sig_ops, frozenset(used))
            return Proved(cert)
        if max(current[0].depth, current[1].depth) > depth_cap:
            return Unknown(budget, "state depth exceeded")
        try:
            a = engine.output(current[0])
            b = engine.output(current[1])
            if not sym_equal(alg, a, b):
                if isinstance(a, SymHead) or isinstance(b, SymHead):
                    return Unknown(budget, "symbolic heads not provably equal")
                return Refuted(index, a, b)
            relation.append(current)
            if len(relation) > budget:
                return Unknown(budget)
            current = (engine.derivative(current[0]),
                       engine.derivative(current[1]))
        except SymbolicStuck as stuck:
            return Unknown(budget, str(stuck))
        index += 1


def _ensure_recursion_room(depth_cap):
    import sys

    needed = 16 * depth_cap + 2000
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)


def verify_up_to_certificate(cert):
    """Re-check an up-to certificate against the up-to definition alone:
    every relation pair has equal outputs and its derivative pair in the
    closure, and the roots are covered."""
    engine = cert.engine
    alg = engine.algebra

    def in_closure(pair):
        u, v = pair
        if u is v:
            return True
        for a, b in cert.pairs:
            theta = {}
            if _match(engine, a, u, theta) and _match(engine, b, v, theta):
                return True
        if (u.kind == "app" and v.kind == "app" and u.symbol == v.symbol
                and len(u.args) == len(v.args)
                and (cert.sig_ops is None or u.symbol in cert.sig_ops)):
            if all(in_closure(p) for p in zip(u.args, v.args)):
                return True
            if u.symbol in COMMUTATIVE_OPS and len(u.args) == 2:
                return (in_closure((u.args[0], v.args[1]))
                        and in_closure((u.args[1], v.args[0])))
        return False

    try:
        for u, v in cert.pairs:
            if not sym_equal(alg, engine.output(u), engine.output(v)):
                return False
            if not in_closure((engine.derivative(u), engine.derivative(v))):
                return False
        return in_closure(cert.roots)
    except SymbolicStuck:
        return False


def verify_certificate(result, *roots):
    """Dispatch on the certificate kind of a Proved result."""
    cert = result.certificate
    if isinstance(cert, RationalCertificate):
        return verify_rational_certificate(cert)
    if isinstance(cert, BisimCertificate):
        return verify_bisim_certificate(cert, *roots)
    if isinstance(cert, UpToCertificate):
        return verify_up_to_certificate(cert)
    return False
