"""Exact scalars of the form p/q + (r/s) * theta.

theta is either absent, sqrt(m) for a squarefree integer m, or a named
transcendental constant. The only property used of a transcendental theta is
that 1 and theta are linearly independent over Q; its float value is kept for
display and for ordering.
"""
import math
import re
from dataclasses import dataclass
from fractions import Fraction

import sympy

from utils.errors import UnsupportedField

TRANSCENDENTALS = {"pi": math.pi, "e": math.e}

_ALLOWED = re.compile(r"^(?:sqrt|pi|e|E|\d+(?:\.\d+)?|[+\-*/()\s])+$")


@dataclass(frozen=True)
class Theta:
    """Irrational generator: ``kind`` is 'sqrt' (with radicand m) or 'transcendental'."""

    kind: str
    m: int = 0
    name: str = ""

    @property
    def value(self):
        if self.kind == "sqrt":
            return math.sqrt(self.m)
        return TRANSCENDENTALS[self.name]

    def __str__(self):
        return f"sqrt({self.m})" if self.kind == "sqrt" else self.name


def _squarefree_split(n):
    """n = square * core with core squarefree."""
    square, core = 1, 1
    for prime, power in sympy.factorint(n).items():
        square *= prime ** (power // 2)
        core *= prime ** (power % 2)
    return square, core


@dataclass(frozen=True)
class ExactScalar:
    rational: Fraction = Fraction(0)
    coeff: Fraction = Fraction(0)
    theta: Theta = None

    def __post_init__(self):
        object.__setattr__(self, "rational", Fraction(self.rational))
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        if self.coeff == 0:
            object.__setattr__(self, "theta", None)
        elif self.theta is None:
            raise UnsupportedField("Irrational coefficient given without a generator")

    @classmethod
    def of(cls, value):
        if isinstance(value, ExactScalar):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        raise UnsupportedField(f"Cannot represent {value!r} exactly")

    @classmethod
    def sqrt(cls, n):
        n = Fraction(n)
        if n < 0:
            raise UnsupportedField(f"sqrt of negative {n} is not real")
        # sqrt(p/q) = sqrt(p q) / q
        square, core = _squarefree_split(n.numerator * n.denominator) if n else (0, 1)
        if core == 1:
            return cls(Fraction(square, n.denominator))
        return cls(coeff=Fraction(square, n.denominator), theta=Theta("sqrt", m=core))

    @classmethod
    def transcendental(cls, name, coeff=1):
        if name not in TRANSCENDENTALS:
            raise UnsupportedField(f"Unknown transcendental constant {name!r}")
        return cls(coeff=Fraction(coeff), theta=Theta("transcendental", name=name))

    @property
    def is_rational(self):
        return self.theta is None

    def _join(self, other):
        other = ExactScalar.of(other)
        if self.theta and other.theta and self.theta != other.theta:
            raise UnsupportedField(f"Cannot mix generators {self.theta} and {other.theta}")
        return other, self.theta or other.theta

    def __add__(self, other):
        other, theta = self._join(other)
        return ExactScalar(self.rational + other.rational, self.coeff + other.coeff, theta)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar(-self.rational, -self.coeff, self.theta)

    def __sub__(self, other):
        return self + (-ExactScalar.of(other))

    def __rsub__(self, other):
        return ExactScalar.of(other) - self

    def __mul__(self, other):
        other, theta = self._join(other)
        cross = self.coeff * other.coeff
        if cross and theta.kind != "sqrt":
            raise UnsupportedField(f"{theta} squared leaves Q({theta})")
        square = theta.m if cross else 0
        return ExactScalar(
            self.rational * other.rational + cross * square,
            self.rational * other.coeff + self.coeff * other.rational,
            theta,
        )

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("ExactScalar division by zero")
        if self.is_rational:
            return ExactScalar(1 / self.rational)
        if self.theta.kind != "sqrt":
            if self.rational == 0:
                raise UnsupportedField(f"1/{self.theta} leaves Q({self.theta})")
            raise UnsupportedField(f"Cannot invert {self} in Q({self.theta})")
        norm = self.rational ** 2 - self.coeff ** 2 * self.theta.m
        return ExactScalar(self.rational / norm, -self.coeff / norm, self.theta)

    def __truediv__(self, other):
        return self * ExactScalar.of(other).inverse()

    def __rtruediv__(self, other):
        return ExactScalar.of(other) * self.inverse()

    def is_zero(self):
        return self.rational == 0 and self.coeff == 0

    def sign(self):
        """Sign of the value; exact for quadratic surds."""
        if self.is_zero():
            return 0
        if self.is_rational:
            return 1 if self.rational > 0 else -1
        if self.theta.kind == "sqrt":
            a, b = self.rational, self.coeff
            if a >= 0 and b >= 0:
                return 1
            if a <= 0 and b <= 0:
                return -1
            # opposite signs: compare a^2 with b^2 m
            dominant = a if a * a > b * b * self.theta.m else b
            return 1 if dominant > 0 else -1
        return 1 if float(self) > 0 else -1

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def _cmp(self, other):
        return (self - ExactScalar.of(other)).sign()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            try:
                return self._cmp(other) == 0
            except UnsupportedField:
                return False
        return NotImplemented

    def __hash__(self):
        return hash((self.rational, self.coeff, self.theta))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __float__(self):
        value = float(self.rational)
        if self.theta is not None:
            value += float(self.coeff) * self.theta.value
        return value

    def __str__(self):
        if self.is_rational:
            return str(self.rational)
        if self.coeff == 1:
            irrational = str(self.theta)
        elif self.coeff == -1:
            irrational = f"-{self.theta}"
        else:
            irrational = f"{self.coeff}*{self.theta}"
        if self.rational == 0:
            return irrational
        joiner = "" if irrational.startswith("-") else "+"
        return f"{self.rational}{joiner}{irrational}"

    def __repr__(self):
        return f"ExactScalar({self})"


def parse_exact(text):
    """
    Parse strings such as ``1/3+2*sqrt(5)``, ``sqrt(2)/2`` or ``3*pi``.

    Args:
        text: expression over integers, decimals, sqrt(), pi and e

    Returns:
        ExactScalar
    """
    text = str(text).strip()
    if not text or not _ALLOWED.match(text):
        raise UnsupportedField(f"Cannot parse exact scalar from {text!r}")
    try:
        expr = sympy.expand(sympy.sympify(text, rational=True, locals={"e": sympy.E}))
    except (sympy.SympifyError, TypeError, SyntaxError) as e:
        raise UnsupportedField(f"Cannot parse exact scalar from {text!r}: {e}")

    result = ExactScalar()
    for term in sympy.Add.make_args(expr):
        coeff, rest = term.as_coeff_Mul()
        if not coeff.is_Rational:
            raise UnsupportedField(f"Term {term} of {text!r} is not exact")
        coeff = Fraction(int(coeff.p), int(coeff.q))
        if rest == 1:
            result = result + coeff
        elif rest == sympy.pi:
            result = result + ExactScalar.transcendental("pi", coeff)
        elif rest == sympy.E:
            result = result + ExactScalar.transcendental("e", coeff)
        elif rest.is_Pow and rest.exp == sympy.Rational(1, 2) and rest.base.is_Integer:
            result = result + ExactScalar(coeff=coeff, theta=Theta("sqrt", m=int(rest.base)))
        else:
            raise UnsupportedField(f"Term {term} of {text!r} leaves a single quadratic or transcendental extension")
    return result
