"""Exact coefficient domains, polynomials, and rational expressions.

Every built-in algebra is exact: arbitrary-precision rationals and
integers, prime fields by modular arithmetic, Booleans, naturals, and
the min-plus (tropical) semiring over exact rationals extended with
+infinity.  No floating point is used anywhere except the two infinity
markers (``math.inf`` for tropical, ``-inf`` as the degree of the zero
polynomial), which are exact values.
"""

import math
from fractions import Fraction

from .errors import (
    AlgebraMismatch,
    DenominatorHeadZero,
    SingularMatrix,
    UnsupportedOp,
)

NEG_INF = float("-inf")  # degree of the zero polynomial
INF = math.inf  # additive zero of the tropical semiring


class Algebra:
    """A pluggable exact coefficient domain.

    ``kind`` is one of ``semiring``, ``ring``, ``field``.  Rings add
    ``neg``; fields add ``inv`` (partial: undefined at zero).  The
    remaining hooks are optional and ``None`` when absent:

    * ``inv`` may also be present on a non-field as a partial map over
      the invertible elements (e.g. ±1 in the integers),
    * ``sqrt`` is an exact partial square root,
    * ``lt`` is a total order (present iff ``ordered``).

    ``coerce`` normalises foreign representations (plain ints into Q,
    integers mod p, ...) and raises :class:`AlgebraMismatch` for values
    outside the carrier.  Instances are compared by identity; the module
    registry memoises them so that e.g. ``get_algebra("Fp(3)")`` always
    returns the same object.
    """

    __slots__ = (
        "name",
        "kind",
        "ordered",
        "zero",
        "one",
        "add",
        "mul",
        "eq",
        "neg",
        "inv",
        "sqrt",
        "lt",
        "coerce",
        "parse",
        "fmt",
        "characteristic",
        "sample",
    )

    def __init__(self, name, kind, zero, one, add, mul, eq, coerce, parse, fmt,
                 sample, neg=None, inv=None, sqrt=None, lt=None,
                 characteristic=None):
        if kind not in ("semiring", "ring", "field"):
            raise ValueError(f"bad algebra kind {kind!r}")
        if kind in ("ring", "field") and neg is None:
            raise ValueError(f"{name}: kind {kind} requires neg")
        if kind == "field" and inv is None:
            raise ValueError(f"{name}: fields require inv")
        self.name = name
        self.kind = kind
        self.ordered = lt is not None
        self.zero = zero
        self.one = one
        self.add = add
        self.mul = mul
        self.eq = eq
        self.neg = neg
        self.inv = inv
        self.sqrt = sqrt
        self.lt = lt
        self.coerce = coerce
        self.parse = parse
        self.fmt = fmt
        self.characteristic = characteristic
        self.sample = sample

    def sub(self, a, b):
        if self.neg is None:
            raise UnsupportedOp(f"{self.name} has no subtraction")
        return self.add(a, self.neg(b))

    def is_zero(self, a):
        return self.eq(a, self.zero)

    def nat_mul(self, n, a):
        """n-fold sum of ``a`` (double-and-add); works in any semiring."""
        acc = self.zero
        base = a
        while n:
            if n & 1:
                acc = self.add(acc, base)
            n >>= 1
            if n:
                base = self.add(base, base)
        return acc

    def __repr__(self):
        return f"<Algebra {self.name}>"


def same_algebra(a, b):
    if a is not b:
        raise AlgebraMismatch(f"{a.name} vs {b.name}")
    return a


# ---------------------------------------------------------------------------
# Built-in algebras


def _q_coerce(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    raise AlgebraMismatch(f"{x!r} is not a rational")


def _q_sqrt(a):
    if a < 0:
        return None
    rn, rd = math.isqrt(a.numerator), math.isqrt(a.denominator)
    if rn * rn == a.numerator and rd * rd == a.denominator:
        return Fraction(rn, rd)
    return None


def _q_sample(rng):
    return Fraction(rng.randint(-9, 9), rng.randint(1, 9))


def _int_coerce(x):
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    raise AlgebraMismatch(f"{x!r} is not an integer")


def _int_sqrt(a):
    if a < 0:
        return None
    r = math.isqrt(a)
    return r if r * r == a else None


def _int_inv(a):
    return a if a in (1, -1) else None


def _parse_int(text):
    try:
        return int(text)
    except ValueError:
        raise AlgebraMismatch(f"bad integer literal {text!r}") from None


def _parse_q(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise AlgebraMismatch(f"bad rational literal {text!r}") from None


_Q = Algebra(
    name="Q", kind="field",
    zero=Fraction(0), one=Fraction(1),
    add=lambda a, b: a + b, mul=lambda a, b: a * b,
    eq=lambda a, b: a == b,
    neg=lambda a: -a,
    inv=lambda a: None if a == 0 else 1 / Fraction(a),
    sqrt=_q_sqrt,
    lt=lambda a, b: a < b,
    coerce=_q_coerce,
    parse=lambda t: _q_coerce(_parse_q(t)),
    fmt=str,
    characteristic=0,
    sample=_q_sample,
)

_Z = Algebra(
    name="Z", kind="ring",
    zero=0, one=1,
    add=lambda a, b: a + b, mul=lambda a, b: a * b,
    eq=lambda a, b: a == b,
    neg=lambda a: -a,
    inv=_int_inv,
    sqrt=_int_sqrt,
    lt=lambda a, b: a < b,
    coerce=_int_coerce,
    parse=_parse_int,
    fmt=str,
    characteristic=0,
    sample=lambda rng: rng.randint(-9, 9),
)


def _nat_coerce(x):
    n = _int_coerce(x)
    if n < 0:
        raise AlgebraMismatch(f"{n} is not a natural number")
    return n


_NAT = Algebra(
    name="Nat", kind="semiring",
    zero=0, one=1,
    add=lambda a, b: a + b, mul=lambda a, b: a * b,
    eq=lambda a, b: a == b,
    inv=lambda a: 1 if a == 1 else None,
    sqrt=_int_sqrt,
    lt=lambda a, b: a < b,
    coerce=_nat_coerce,
    parse=lambda t: _nat_coerce(_parse_int(t)),
    fmt=str,
    sample=lambda rng: rng.randint(0, 9),
)


def _bool_coerce(x):
    if isinstance(x, bool):
        return x
    if x in (0, 1):
        return bool(x)
    raise AlgebraMismatch(f"{x!r} is not a Boolean")


def _bool_parse(text):
    if text in ("0", "false"):
        return False
    if text in ("1", "true"):
        return True
    raise AlgebraMismatch(f"bad Boolean literal {text!r}")


_BOOL = Algebra(
    name="Bool", kind="semiring",
    zero=False, one=True,
    add=lambda a, b: a or b, mul=lambda a, b: a and b,
    eq=lambda a, b: a is b,
    inv=lambda a: True if a else None,
    sqrt=lambda a: a,
    coerce=_bool_coerce,
    parse=_bool_parse,
    fmt=lambda a: "1" if a else "0",
    sample=lambda rng: rng.random() < 0.5,
)


def _trop_coerce(x):
    if x == INF:
        return INF
    return _q_coerce(x)


def _trop_parse(text):
    if text == "inf":
        return INF
    return _q_coerce(_parse_q(text))


_TROPICAL = Algebra(
    name="Tropical", kind="semiring",
    zero=INF, one=Fraction(0),
    add=min, mul=lambda a, b: a + b,
    eq=lambda a, b: a == b,
    inv=lambda a: None if a == INF else -a,
    sqrt=lambda a: INF if a == INF else a / 2,
    coerce=_trop_coerce,
    parse=_trop_parse,
    fmt=lambda a: "inf" if a == INF else str(a),
    sample=lambda rng: INF if rng.random() < 0.15 else Fraction(rng.randint(-9, 9)),
)


_GF_CACHE = {}


def gf(p):
    """The prime field F_p; instances are memoised per p."""
    if p in _GF_CACHE:
        return _GF_CACHE[p]
    if p < 2 or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
        raise ValueError(f"{p} is not prime")

    def coerce(x):
        if isinstance(x, int) and not isinstance(x, bool):
            return x % p
        if isinstance(x, Fraction) and math.gcd(x.denominator, p) == 1:
            return x.numerator * pow(x.denominator, -1, p) % p
        raise AlgebraMismatch(f"{x!r} is not in F_{p}")

    def sqrt(a):
        # brute force; fine for the small moduli used in specs
        for b in range(p):
            if b * b % p == a:
                return b
        return None

    alg = Algebra(
        name="F2" if p == 2 else f"Fp({p})", kind="field",
        zero=0, one=1 % p,
        add=lambda a, b: (a + b) % p, mul=lambda a, b: (a * b) % p,
        eq=lambda a, b: a == b,
        neg=lambda a: (-a) % p,
        inv=lambda a: None if a % p == 0 else pow(a, -1, p),
        sqrt=sqrt,
        coerce=coerce,
        parse=lambda t: coerce(_parse_int(t)),
        fmt=str,
        characteristic=p,
        sample=lambda rng: rng.randrange(p),
    )
    _GF_CACHE[p] = alg
    return alg


_NAMED = {"Q": _Q, "Z": _Z, "Nat": _NAT, "Bool": _BOOL, "Tropical": _TROPICAL}


def get_algebra(name):
    """Resolve an algebra directive: Q, Z, F2, Fp(p), Bool, Nat, Tropical."""
    if name in _NAMED:
        return _NAMED[name]
    if name == "F2":
        return gf(2)
    if name.startswith("Fp(") and name.endswith(")"):
        try:
            p = int(name[3:-1])
        except ValueError:
            raise UnsupportedOp(f"bad modulus in {name!r}") from None
        return gf(p)
    raise UnsupportedOp(f"unknown algebra {name!r}")


def registered_algebras():
    return [_Q, _Z, _NAT, _BOOL, _TROPICAL, gf(2), gf(5)]


def rationals():
    return _Q


def integers():
    return _Z


def naturals():
    return _NAT


def booleans():
    return _BOOL


def tropical():
    return _TROPICAL


# ---------------------------------------------------------------------------
# Polynomials


class Poly:
    """Dense polynomial over an Algebra; coefficient of X^i at position i.

    The representation is normalised (no trailing zeros), which makes it
    unique per polynomial; the zero polynomial has degree -inf.
    """

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra, coeffs):
        while coeffs and algebra.is_zero(coeffs[-1]):
            coeffs = coeffs[:-1]
        self.algebra = algebra
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_ints(cls, algebra, ints):
        return cls(algebra, [algebra.coerce(c) for c in ints])

    @classmethod
    def const(cls, algebra, a):
        return cls(algebra, (algebra.coerce(a),))

    @classmethod
    def x(cls, algebra):
        return cls(algebra, (algebra.zero, algebra.one))

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self):
        return not self.coeffs

    def coeff(self, i):
        return self.coeffs[i] if i < len(self.coeffs) else self.algebra.zero

    def at_zero(self):
        return self.coeff(0)

    def shift_down(self):
        """Exact division by X; requires a zero constant term."""
        if self.coeffs and not self.algebra.is_zero(self.coeffs[0]):
            raise ValueError("polynomial not divisible by X")
        return Poly(self.algebra, self.coeffs[1:])

    def scale(self, a):
        alg = self.algebra
        return Poly(alg, [alg.mul(a, c) for c in self.coeffs])

    def __add__(self, other):
        alg = same_algebra(self.algebra, other.algebra)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(alg, [alg.add(self.coeff(i), other.coeff(i)) for i in range(n)])

    def __sub__(self, other):
        alg = same_algebra(self.algebra, other.algebra)
        if alg.neg is None:
            raise UnsupportedOp(f"{alg.name} has no subtraction")
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(alg, [alg.sub(self.coeff(i), other.coeff(i)) for i in range(n)])

    def __neg__(self):
        alg = self.algebra
        if alg.neg is None:
            raise UnsupportedOp(f"{alg.name} has no negation")
        return Poly(alg, [alg.neg(c) for c in self.coeffs])

    def __mul__(self, other):
        alg = same_algebra(self.algebra, other.algebra)
        if self.is_zero() or other.is_zero():
            return Poly(alg, ())
        out = [alg.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = alg.add(out[i + j], alg.mul(a, b))
        return Poly(alg, out)

    def __eq__(self, other):
        return (isinstance(other, Poly) and self.algebra is other.algebra
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((id(self.algebra), self.coeffs))

    def divmod(self, other):
        """Euclidean division; denominator algebra must be a field."""
        alg = same_algebra(self.algebra, other.algebra)
        if alg.kind != "field":
            raise UnsupportedOp("polynomial division needs a field")
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        lead_inv = alg.inv(other.coeffs[-1])
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(alg, ()), self
        quot = [alg.zero] * (dq + 1)
        for k in range(dq, -1, -1):
            top = rem[k + len(other.coeffs) - 1]
            if alg.is_zero(top):
                continue
            q = alg.mul(top, lead_inv)
            quot[k] = q
            for j, b in enumerate(other.coeffs):
                rem[k + j] = alg.sub(rem[k + j], alg.mul(q, b))
        return Poly(alg, quot), Poly(alg, rem)

    def monic(self):
        alg = self.algebra
        if self.is_zero():
            return self
        lead = self.coeffs[-1]
        if alg.eq(lead, alg.one):
            return self
        return self.scale(alg.inv(lead))

    def __repr__(self):
        return f"Poly({self.algebra.name}, {format_poly(self)!r})"


def poly_arith(op, a, b):
    """Spec-surface polynomial arithmetic: op in {add, sub, mul}."""
    same_algebra(a.algebra, b.algebra)
    if op == "add":
        return a + b
    if op == "sub":
        if a.algebra.kind == "semiring":
            raise UnsupportedOp(f"sub over semiring {a.algebra.name}")
        return a - b
    if op == "mul":
        return a * b
    raise UnsupportedOp(f"unknown polynomial op {op!r}")


def poly_gcd(a, b):
    """Monic gcd by the Euclidean algorithm over a field."""
    alg = same_algebra(a.algebra, b.algebra)
    if alg.kind != "field":
        raise UnsupportedOp("gcd needs a field")
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic()


def format_poly(p):
    """Render as `a0 + a1*X + a2*X^2`, folding unit coefficients and signs."""
    alg = p.algebra
    if p.is_zero():
        return alg.fmt(alg.zero)
    parts = []
    for i, c in enumerate(p.coeffs):
        if alg.is_zero(c):
            continue
        text = alg.fmt(c)
        negative = text.startswith("-")
        mag = text[1:] if negative else text
        if i == 0:
            body = mag
        else:
            xpow = "X" if i == 1 else f"X^{i}"
            body = xpow if mag == alg.fmt(alg.one) else f"{mag}*{xpow}"
        if not parts:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f"- {body}" if negative else f"+ {body}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Rational expressions


class RatExpr:
    """Canonical rational expression num/den with den(0) = 1.

    Canonical means gcd(num, den) = 1 and the denominator is normalised
    to constant term one, so equality of values is exactly structural
    equality.  Use :func:`ratexpr_normalize` to construct one.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den, _raw=False):
        if not _raw:
            canon = ratexpr_normalize(num, den)
            num, den = canon.num, canon.den
        self.num = num
        self.den = den

    @property
    def algebra(self):
        return self.num.algebra

    @classmethod
    def from_poly(cls, p):
        r = cls.__new__(cls)
        r.num = p
        r.den = Poly.const(p.algebra, p.algebra.one)
        return r

    @classmethod
    def const(cls, algebra, a):
        return cls.from_poly(Poly.const(algebra, a))

    def is_zero(self):
        return self.num.is_zero()

    def __add__(self, other):
        return ratexpr_normalize(self.num * other.den + other.num * self.den,
                                 self.den * other.den)

    def __sub__(self, other):
        return ratexpr_normalize(self.num * other.den - other.num * self.den,
                                 self.den * other.den)

    def __neg__(self):
        return ratexpr_normalize(-self.num, self.den)

    def __mul__(self, other):
        return ratexpr_normalize(self.num * other.num, self.den * other.den)

    def reciprocal(self):
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of the zero rational expression")
        if self.num.algebra.is_zero(self.num.at_zero()):
            raise DenominatorHeadZero("inverse has denominator head zero")
        return ratexpr_normalize(self.den, self.num)

    def __truediv__(self, other):
        return self * other.reciprocal()

    def __eq__(self, other):
        return (isinstance(other, RatExpr) and self.num == other.num
                and self.den == other.den)

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatExpr({format_ratexpr(self)!r})"


def ratexpr_normalize(num, den):
    """Canonicalise num/den; requires den(0) != 0.

    The gcd is removed and both parts are scaled so that den(0) = 1,
    which matches every displayed closed form (1/(1-X), X/(1-X-X^2),
    (1+X)/(1-X)^3, ...) and keeps head computation trivial.
    """
    alg = same_algebra(num.algebra, den.algebra)
    if alg.kind != "field":
        raise UnsupportedOp("rational expressions need a field algebra")
    if alg.is_zero(den.at_zero()):
        raise DenominatorHeadZero(f"denominator {format_poly(den)} vanishes at 0")
    if num.is_zero():
        one = Poly.const(alg, alg.one)
        return RatExpr(Poly(alg, ()), one, _raw=True)
    g = poly_gcd(num, den)
    if g.degree > 0:
        num = num.divmod(g)[0]
        den = den.divmod(g)[0]
    scale = alg.inv(den.at_zero())
    if not alg.eq(scale, alg.one):
        num = num.scale(scale)
        den = den.scale(scale)
    return RatExpr(num, den, _raw=True)


def ratexpr_head(r):
    """Initial value of the stream denoted by r: num(0)/den(0) = num(0)."""
    alg = r.algebra
    return alg.mul(r.num.at_zero(), alg.inv(r.den.at_zero()))


def ratexpr_derivative(r):
    """Stream derivative: (num - head*den) / (X*den), with the division
    by X exact because the shifted numerator has zero constant term."""
    head = ratexpr_head(r)
    shifted = (r.num - r.den.scale(head)).shift_down()
    return ratexpr_normalize(shifted, r.den)


def format_ratexpr(r):
    return f"({format_poly(r.num)})/({format_poly(r.den)})"


# ---------------------------------------------------------------------------
# Exact linear solving over rational expressions


def gauss_solve(matrix, rhs):
    """Solve M x = b over rational expressions by Gaussian elimination.

    Pivots are chosen by nonzero *head* (value at 0), which keeps every
    intermediate entry a valid rational expression: if no column entry
    has a nonzero head the head matrix is singular, contradicting the
    precondition that det(M) has an invertible head.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("shape mismatch")
    rows = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    alg = rhs[0].algebra if n else None
    for col in range(n):
        pivot = None
        for i in range(col, n):
            if not alg.is_zero(ratexpr_head(rows[i][col])):
                pivot = i
                break
        if pivot is None:
            raise SingularMatrix(f"no invertible-head pivot in column {col}")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = rows[col][col].reciprocal()
        rows[col] = [entry * inv for entry in rows[col]]
        for i in range(n):
            if i == col:
                continue
            factor = rows[i][col]
            if factor.is_zero():
                continue
            rows[i] = [a - factor * b for a, b in zip(rows[i], rows[col])]
    return [rows[i][n] for i in range(n)]
