"""Laurent series at infinity, the building-block expansions, and the
rational-expression mini-language.

A LaurentSeries holds finitely many coefficients of an expansion

    S(z) = c_0 z^top + c_1 z^(top-1) + ... + c_(L-1) z^(top-L+1) + O(z^(top-L))

where every power above ``top`` is exactly zero and nothing is known at
or below the tail exponent top-L.  Arithmetic tracks truncation
honestly: a product or quotient knows min(L1, L2) coefficients, never
more, and addition knows down to the higher of the two tails.

The two series every experiment starts from:

  * 1/phi(z) = z - sqrt(z^2-1), the inverse Zhukovskii branch that is
    small at infinity.  Its odd coefficients are Catalan numbers over
    powers of two, so they are exact dyadic rationals.
  * ff(z) = prod_j sqrt((A_j - 1/phi(z)) / (B_j - 1/phi(z))), the
    square-root algebraic function the whole study is about, with the
    branch fixed so that the value at infinity is prod sqrt(A_j/B_j).

On top of those, a tiny expression language (variables z and w, the
four arithmetic operators, complex literals) selects the actual
function f as a rational combination of z and ff.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

from mpmath import mp

from .errors import (ExpressionSyntaxError, TruncationError, ValidationError,
                     ZeroSeriesError)
from .precision import PrecisionContext

Number = Union["mp.mpf", "mp.mpc"]


class LaurentSeries:
    """Immutable truncated Laurent expansion at infinity."""

    __slots__ = ("top_exponent", "coefficients")

    def __init__(self, top_exponent: int, coefficients: Sequence[Number]):
        if len(coefficients) < 1:
            raise ValidationError("a series needs at least one coefficient")
        self.top_exponent = int(top_exponent)
        self.coefficients = tuple(coefficients)

    # -- structure ---------------------------------------------------------

    @property
    def length(self) -> int:
        return len(self.coefficients)

    @property
    def tail_exponent(self) -> int:
        """Highest exponent about which nothing is known: O(z^tail)."""
        return self.top_exponent - len(self.coefficients)

    def coefficient(self, exponent: int) -> Number:
        """Coefficient of z^exponent; exact zero above top, error below tail."""
        if exponent > self.top_exponent:
            return mp.zero
        if exponent <= self.tail_exponent:
            raise TruncationError(
                f"coefficient of z^{exponent} is below the truncation "
                f"(tail O(z^{self.tail_exponent}))")
        return self.coefficients[self.top_exponent - exponent]

    def truncated(self, length: int) -> "LaurentSeries":
        if length < 1 or length > self.length:
            raise ValidationError("cannot truncate to length "
                                  f"{length} from {self.length}")
        return LaurentSeries(self.top_exponent, self.coefficients[:length])

    def max_abs(self):
        return max((abs(c) for c in self.coefficients), default=mp.zero)

    def is_zero_to_truncation(self, rel_tol=None) -> bool:
        m = self.max_abs()
        if m == 0:
            return True
        if rel_tol is None:
            return False
        return m <= rel_tol

    def __repr__(self):
        head = ", ".join(mp.nstr(c, 8) for c in self.coefficients[:4])
        if self.length > 4:
            head += ", ..."
        return (f"LaurentSeries(top={self.top_exponent}, "
                f"len={self.length}, [{head}])")

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self):
        return LaurentSeries(self.top_exponent,
                             [-c for c in self.coefficients])

    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        top = max(self.top_exponent, other.top_exponent)
        tail = max(self.tail_exponent, other.tail_exponent)
        if tail >= top:
            # one operand is exhausted before the other begins
            raise TruncationError("sum has no known coefficients")
        out = []
        for e in range(top, tail, -1):
            a = self.coefficients[self.top_exponent - e] \
                if self.tail_exponent < e <= self.top_exponent else mp.zero
            b = other.coefficients[other.top_exponent - e] \
                if other.tail_exponent < e <= other.top_exponent else mp.zero
            out.append(a + b)
        return LaurentSeries(top, out)

    def __sub__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        la, lb = self.length, other.length
        n = min(la, lb)
        a, b = self.coefficients, other.coefficients
        out = []
        for k in range(n):
            # coefficient k of the product, indices i + j = k
            s = mp.zero
            lo = 0 if k < lb else k - lb + 1
            hi = min(k, la - 1)
            for i in range(lo, hi + 1):
                s += a[i] * b[k - i]
            out.append(s)
        return LaurentSeries(self.top_exponent + other.top_exponent, out)

    def scale(self, c: Number) -> "LaurentSeries":
        return LaurentSeries(self.top_exponent,
                             [c * x for x in self.coefficients])

    def _stripped(self, zero_tol) -> "LaurentSeries":
        """Drop leading coefficients that vanish at tolerance."""
        coeffs = self.coefficients
        m = self.max_abs()
        if m == 0:
            raise ZeroSeriesError("series is identically zero to truncation")
        cut = m * zero_tol
        k = 0
        while k < len(coeffs) and abs(coeffs[k]) <= cut:
            k += 1
        if k == len(coeffs):
            raise ZeroSeriesError("series is zero to truncation at tolerance")
        return LaurentSeries(self.top_exponent - k, coeffs[k:])

    def reciprocal(self, ctx: PrecisionContext) -> "LaurentSeries":
        with ctx.workprec(16):
            g = self._stripped(ctx.tolerance(2))
            g0 = g.coefficients[0]
            L = g.length
            h = [1 / g0]
            for k in range(1, L):
                s = mp.zero
                for j in range(1, k + 1):
                    s += g.coefficients[j] * h[k - j]
                h.append(-s / g0)
            return LaurentSeries(-g.top_exponent, h)

    def __truediv__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        # the caller threads precision through module functions; division
        # inherits the ambient mpmath precision
        ctx = PrecisionContext(max(mp.prec, 64))
        return self * other.reciprocal(ctx)

    def sqrt(self, ctx: PrecisionContext) -> "LaurentSeries":
        """Series square root, branch fixed by the principal root of the
        leading coefficient.  Requires an even top exponent."""
        with ctx.workprec(16):
            g = self._stripped(ctx.tolerance(2))
            if g.top_exponent % 2:
                raise ValidationError(
                    "series square root needs an even leading exponent, got "
                    f"{g.top_exponent}")
            r0 = mp.sqrt(g.coefficients[0])
            L = g.length
            r = [r0]
            for k in range(1, L):
                s = g.coefficients[k]
                for j in range(1, k):
                    s -= r[j] * r[k - j]
                r.append(s / (2 * r0))
            return LaurentSeries(g.top_exponent // 2, r)


def constant_series(value: Number, tail_exponent: int) -> LaurentSeries:
    if tail_exponent >= 0:
        raise ValidationError("constant series needs tail below exponent 0")
    coeffs = [mp.zero] * (-tail_exponent)
    coeffs[0] = value
    return LaurentSeries(0, coeffs)


def z_series(tail_exponent: int) -> LaurentSeries:
    if tail_exponent >= 1:
        raise ValidationError("z series needs tail below exponent 1")
    coeffs = [mp.zero] * (1 - tail_exponent)
    coeffs[0] = mp.one
    return LaurentSeries(1, coeffs)


# ---------------------------------------------------------------------------
# reference expansions


def series_phi_inverse(order: int, ctx: PrecisionContext) -> LaurentSeries:
    """Expansion of 1/phi(z) = z - sqrt(z^2 - 1) at infinity.

    The coefficient of z^(-(2k+1)) is Catalan(k) / 2^(2k+1) and every
    even exponent vanishes identically.  Computed through the integer
    Catalan recurrence, so each stored coefficient is an exact dyadic
    rational whenever the working precision can hold it.
    """
    if order < 1:
        raise ValidationError("order must be >= 1")
    with ctx.workprec(16):
        coeffs = [mp.zero] * order
        cat = 1
        k = 0
        while 2 * k < order:
            coeffs[2 * k] = mp.ldexp(mp.mpf(cat), -(2 * k + 1))
            cat = cat * 2 * (2 * k + 1) // (k + 2)
            k += 1
        return LaurentSeries(-1, coeffs)


def series_ff(spec: "FunctionSpec", order: int,
              ctx: PrecisionContext) -> LaurentSeries:
    """Expansion at infinity of the square-root product the spec encodes.

    Each factor (A_j - t)/(B_j - t) with t = 1/phi(z) gets a series
    square root seeded by the principal root of A_j/B_j; the branch is
    fixed once at the constant term, which makes the value at infinity
    the principal product of sqrt(A_j/B_j) (positive in the real
    regime).
    """
    if order < 1:
        raise ValidationError("order must be >= 1")
    with ctx.workprec(16):
        if not spec.pairs:
            return constant_series(mp.one, -order)
        t = series_phi_inverse(order + 1, ctx)
        result = None
        for a, b in spec.pairs:
            num = constant_series(a, t.tail_exponent) - t
            den = constant_series(b, t.tail_exponent) - t
            factor = (num * den.reciprocal(ctx)).sqrt(ctx)
            result = factor if result is None else result * factor
        return result.truncated(order)


# ---------------------------------------------------------------------------
# function specification


_ORDER_MSG = ("real-regime pairs must satisfy A_1<B_1<...<A_k<B_k<-1 and "
              "1<A_(k+1)<B_(k+1)<...<B_m")


@dataclass(frozen=True)
class FunctionSpec:
    """Branch-pair parameters plus the rational expression selecting f.

    pairs: sequence of (A_j, B_j) as mpmath numbers.  Real pairs must
    satisfy the interleaving order away from [-1,1]; non-real pairs must
    be complex conjugates with modulus above 1.
    expression: AST over z and w, where w stands for the square-root
    product; defaults to plain w.
    """

    pairs: Tuple[Tuple[Number, Number], ...]
    expression: "ExpressionNode" = field(default=None)

    def __post_init__(self):
        pairs = tuple((_as_mp(a), _as_mp(b)) for a, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if self.expression is None:
            object.__setattr__(self, "expression", Var("w"))
        self._validate()

    def _validate(self):
        for a, b in self.pairs:
            if abs(a) <= 1 or abs(b) <= 1:
                raise ValidationError(
                    f"branch parameters need modulus above 1: {a}, {b}")
        real = all(_is_real(a) and _is_real(b) for a, b in self.pairs)
        if real:
            vals = [(mp.mpf(a), mp.mpf(b)) for a, b in self.pairs]
            neg = [p for p in vals if p[0] < 0]
            pos = [p for p in vals if p[0] > 0]
            flat = [x for p in neg for x in p] + [x for p in pos for x in p]
            expect = sorted(flat)
            if flat != expect or len(flat) != len(set(flat)):
                raise ValidationError(_ORDER_MSG)
            for a, b in neg:
                if not (a < b < -1):
                    raise ValidationError(_ORDER_MSG)
            for a, b in pos:
                if not (1 < a < b):
                    raise ValidationError(_ORDER_MSG)
        else:
            for a, b in self.pairs:
                if _is_real(a) and _is_real(b):
                    if not mp.mpf(a) < mp.mpf(b):
                        raise ValidationError("real pair needs A < B")
                    continue
                if abs(mp.conj(a) - b) > 0:
                    raise ValidationError(
                        "non-real pairs must be complex conjugates: "
                        f"{a} vs {b}")
        object.__setattr__(self, "_regime", "real" if real else "complex")

    @property
    def regime(self) -> str:
        return self._regime

    @property
    def m(self) -> int:
        return len(self.pairs)

    def value_at_infinity(self):
        """prod sqrt(A_j/B_j) with principal roots."""
        v = mp.one
        for a, b in self.pairs:
            v *= mp.sqrt(a / b)
        return v


_COMPLEX_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*"
    r"(?:([+-])?\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*i)?\s*$")


def parse_number(text: str):
    """Parse decimal or a+bi notation at the ambient working precision."""
    m = _COMPLEX_RE.match(text)
    if not m or not text.strip() or (m.group(1) is None and m.group(2) is None
                                     and m.group(3) is None
                                     and "i" not in text):
        raise ValidationError(f"cannot parse number {text!r}")
    has_i = text.rstrip().endswith("i")
    re_part, sign, im_digits = m.group(1), m.group(2), m.group(3)
    if not has_i:
        if re_part is None:
            raise ValidationError(f"cannot parse number {text!r}")
        return mp.mpf(re_part)
    if sign is None and im_digits is None:
        # bare "3i" style: the first group holds the imaginary digits
        imag = mp.mpf(re_part) if re_part is not None else mp.one
        return mp.mpc(0, imag)
    imag = mp.mpf(im_digits) if im_digits is not None else mp.one
    if sign == "-":
        imag = -imag
    real = mp.mpf(re_part) if re_part is not None else mp.zero
    return mp.mpc(real, imag)


def _as_mp(x):
    if isinstance(x, str):
        v = parse_number(x)
    else:
        v = mp.mpmathify(x)
    if isinstance(v, mp.mpc) and v.imag == 0:
        return v.real
    return v


def _is_real(x) -> bool:
    return isinstance(x, mp.mpf) or (hasattr(x, "imag") and x.imag == 0)


# ---------------------------------------------------------------------------
# expression language
#
# expr   := term (('+'|'-') term)*
# term   := factor (('*'|'/') factor)*
# factor := 'z' | 'w' | number | number 'i' | '(' expr ')' | '-' factor
#
# Numbers are decimal literals, optionally with exponent; a trailing i
# makes an imaginary literal.  Complex values like 3+2i come out of the
# grammar as sums.  Literals keep their source text and are converted
# at evaluation time, so the same AST reproduces bit-identical values
# at any working precision.


@dataclass(frozen=True)
class Var:
    name: str  # "z" or "w"


@dataclass(frozen=True)
class Literal:
    text: str        # decimal mantissa as written
    imaginary: bool = False

    def value(self):
        v = mp.mpf(self.text)
        return mp.mpc(0, v) if self.imaginary else v


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "ExpressionNode"
    right: "ExpressionNode"


@dataclass(frozen=True)
class Negate:
    operand: "ExpressionNode"


ExpressionNode = Union[Var, Literal, Binary, Negate]

_NUMBER_RE = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?(i?)")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        i, text = 0, self.text
        while i < len(text):
            if text[i].isspace():
                i += 1
                continue
            ch = text[i]
            if ch in "zw()+-*/":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            m = _NUMBER_RE.match(text, i)
            if m:
                literal = m.group(1) + (m.group(2) or "")
                self.tokens.append(("num", (literal, m.group(3) == "i"), i))
                i = m.end()
                continue
            raise ExpressionSyntaxError(f"unexpected character {ch!r}", i)

    def peek(self):
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is not None:
            self.index += 1
        return tok


def parse_expression(text: str) -> ExpressionNode:
    """Parse the expression grammar into an AST; errors carry offsets."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    lx = _Lexer(text)
    node = _parse_expr(lx)
    trailing = lx.peek()
    if trailing is not None:
        raise ExpressionSyntaxError(
            f"unexpected token {trailing[0]!r}", trailing[2])
    return node


def _parse_expr(lx: _Lexer) -> ExpressionNode:
    node = _parse_term(lx)
    while True:
        tok = lx.peek()
        if tok and tok[0] in "+-":
            lx.next()
            rhs = _parse_term(lx)
            node = Binary(tok[0], node, rhs)
        else:
            return node


def _parse_term(lx: _Lexer) -> ExpressionNode:
    node = _parse_factor(lx)
    while True:
        tok = lx.peek()
        if tok and tok[0] in "*/":
            lx.next()
            rhs = _parse_factor(lx)
            node = Binary(tok[0], node, rhs)
        else:
            return node


def _parse_factor(lx: _Lexer) -> ExpressionNode:
    tok = lx.next()
    if tok is None:
        raise ExpressionSyntaxError("unexpected end of input", len(lx.text))
    kind, value, pos = tok
    if kind == "num":
        return Literal(value[0], value[1])
    if kind in ("z", "w"):
        return Var(kind)
    if kind == "-":
        return Negate(_parse_factor(lx))
    if kind == "(":
        node = _parse_expr(lx)
        closing = lx.next()
        if closing is None or closing[0] != ")":
            where = closing[2] if closing else len(lx.text)
            raise ExpressionSyntaxError("expected ')'", where)
        return node
    raise ExpressionSyntaxError(f"unexpected token {kind!r}", pos)


def pretty_print(node: ExpressionNode) -> str:
    """Canonical text form; parse(pretty_print(ast)) == ast."""
    return _pp(node, 0)


def _pp(node, need):
    # binding levels: additive 0, multiplicative 1, negation 2, atoms 3;
    # parenthesize whenever a node binds looser than its context requires
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Literal):
        return node.text + ("i" if node.imaginary else "")
    if isinstance(node, Negate):
        s = "-" + _pp(node.operand, 2)
        return f"({s})" if need > 2 else s
    if node.op in "+-":
        level = 0
        s = f"{_pp(node.left, 0)} {node.op} {_pp(node.right, 1)}"
    else:
        level = 1
        s = f"{_pp(node.left, 1)} {node.op} {_pp(node.right, 2)}"
    return f"({s})" if need > level else s


def expression_uses_w(node: ExpressionNode) -> bool:
    if isinstance(node, Var):
        return node.name == "w"
    if isinstance(node, Binary):
        return expression_uses_w(node.left) or expression_uses_w(node.right)
    if isinstance(node, Negate):
        return expression_uses_w(node.operand)
    return False


def series_eval_expression(ast: ExpressionNode, w_series: LaurentSeries,
                           order: int,
                           ctx: PrecisionContext) -> LaurentSeries:
    """Evaluate the AST over Laurent series, w bound to w_series.

    Exact leaves (z, literals) enter with the same tail as w_series so
    the truncation bookkeeping is driven by the supplied expansion.
    Poles at infinity (net positive powers of z) are supported.
    """
    if w_series.length < order:
        raise TruncationError(
            f"w series carries {w_series.length} coefficients, "
            f"need {order}")
    tail = w_series.tail_exponent
    with ctx.workprec(16):
        result = _eval_node(ast, w_series, tail, ctx)
        if result.length > order:
            result = result.truncated(order)
        return result


def _eval_node(node, w_series, tail, ctx):
    if isinstance(node, Var):
        return w_series if node.name == "w" else z_series(tail)
    if isinstance(node, Literal):
        return constant_series(node.value(), tail)
    if isinstance(node, Negate):
        return -_eval_node(node.operand, w_series, tail, ctx)
    left = _eval_node(node.left, w_series, tail, ctx)
    right = _eval_node(node.right, w_series, tail, ctx)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    return left * right.reciprocal(ctx)


def evaluate_expression_at(ast: ExpressionNode, z: Number,
                           w: Number) -> Number:
    """Pointwise evaluation of the AST at numeric (z, w)."""
    if isinstance(ast, Var):
        return z if ast.name == "z" else w
    if isinstance(ast, Literal):
        return ast.value()
    if isinstance(ast, Negate):
        return -evaluate_expression_at(ast.operand, z, w)
    a = evaluate_expression_at(ast.left, z, w)
    b = evaluate_expression_at(ast.right, z, w)
    if ast.op == "+":
        return a + b
    if ast.op == "-":
        return a - b
    if ast.op == "*":
        return a * b
    return a / b
