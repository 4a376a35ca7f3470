"""Forward-mode dual numbers carrying a value and one first derivative.

A :class:`Dual` is an immutable ``(value, deriv)`` pair.  Arithmetic with other
duals or with plain reals follows the sum, product and quotient rules, so any
function written against ``+ - * /`` and the module-level :func:`exp`,
:func:`sqrt` and :func:`max_zero` helpers returns its derivative alongside its
value when called on a seeded dual.  The helpers also accept plain floats,
which lets one pricing routine serve both plain and differentiated evaluation.
"""

from __future__ import annotations

import math
from operator import itemgetter
from typing import Callable, Union

__all__ = [
    "Dual",
    "DualDivisionByZero",
    "NonPositiveSqrt",
    "Scalar",
    "constant",
    "derivative",
    "exp",
    "max_zero",
    "sqrt",
    "value_of",
    "variable",
]

_new = tuple.__new__


class DualDivisionByZero(ZeroDivisionError):
    """Raised when dividing by a dual (or real) whose value is zero."""


class NonPositiveSqrt(ValueError):
    """Raised by :func:`sqrt` for a non-positive argument (derivative undefined at 0)."""


class Dual(tuple):
    """Immutable value/derivative pair, ``value + deriv * eps`` with ``eps**2 = 0``.

    Ordering comparisons look at ``value`` only; equality is structural, so
    ``Dual(9, 6) == Dual(9.0, 6.0)`` but ``Dual(1, 0) != Dual(1, 1)``.
    """

    __slots__ = ()

    def __new__(cls, value: float, deriv: float = 0.0) -> "Dual":
        return _new(cls, (float(value), float(deriv)))

    value = property(itemgetter(0), doc="Function value.")
    deriv = property(itemgetter(1), doc="Derivative with respect to the seeded variable.")

    def __repr__(self) -> str:
        return f"Dual({self[0]!r}, {self[1]!r})"

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        a, da = self
        if type(other) is Dual:
            b, db = other
            return _new(Dual, (a + b, da + db))
        return _new(Dual, (a + other, da))

    def __radd__(self, other):
        a, da = self
        return _new(Dual, (other + a, da))

    def __sub__(self, other):
        a, da = self
        if type(other) is Dual:
            b, db = other
            return _new(Dual, (a - b, da - db))
        return _new(Dual, (a - other, da))

    def __rsub__(self, other):
        a, da = self
        return _new(Dual, (other - a, -da))

    def __mul__(self, other):
        a, da = self
        if type(other) is Dual:
            b, db = other
            return _new(Dual, (a * b, a * db + da * b))
        return _new(Dual, (a * other, da * other))

    def __rmul__(self, other):
        a, da = self
        return _new(Dual, (other * a, other * da))

    def __truediv__(self, other):
        a, da = self
        if type(other) is Dual:
            b, db = other
            if b == 0.0:
                raise DualDivisionByZero("division by a dual with zero value")
            return _new(Dual, (a / b, (da * b - a * db) / (b * b)))
        if other == 0:
            raise DualDivisionByZero("division of a dual by zero")
        return _new(Dual, (a / other, da / other))

    def __rtruediv__(self, other):
        b, db = self
        if b == 0.0:
            raise DualDivisionByZero("division by a dual with zero value")
        return _new(Dual, (other / b, -other * db / (b * b)))

    def __neg__(self):
        a, da = self
        return _new(Dual, (-a, -da))

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self[0] < 0.0 else self

    # value-only ordering --------------------------------------------------------

    def __lt__(self, other):
        return self[0] < value_of(other)

    def __le__(self, other):
        return self[0] <= value_of(other)

    def __gt__(self, other):
        return self[0] > value_of(other)

    def __ge__(self, other):
        return self[0] >= value_of(other)

    def __float__(self) -> float:
        return self[0]

    __hash__ = tuple.__hash__


Scalar = Union[float, Dual]


def variable(x: float) -> Dual:
    """Seed ``x`` as the variable being differentiated (deriv = 1)."""
    return Dual(x, 1.0)


def constant(x: float) -> Dual:
    return Dual(x, 0.0)


def value_of(x: Scalar) -> float:
    return x[0] if type(x) is Dual else x


def derivative(f: Callable[[Dual], Scalar], x: float) -> float:
    """Derivative of ``f`` at ``x`` by forward-mode propagation."""
    y = f(variable(x))
    return y[1] if type(y) is Dual else 0.0


def exp(x: Scalar) -> Scalar:
    if type(x) is Dual:
        a, da = x
        ea = math.exp(a)
        return _new(Dual, (ea, ea * da))
    return math.exp(x)


def sqrt(x: Scalar) -> Scalar:
    if type(x) is Dual:
        a, da = x
        if not a > 0.0:
            raise NonPositiveSqrt(f"sqrt of non-positive dual value {a!r}")
        ra = math.sqrt(a)
        return _new(Dual, (ra, da / (2.0 * ra)))
    if not x > 0.0:
        raise NonPositiveSqrt(f"sqrt of non-positive value {x!r}")
    return math.sqrt(x)


def max_zero(x: Scalar) -> Scalar:
    """``max(0, x)``; at exactly zero the derivative is taken as 0."""
    if type(x) is Dual:
        return x if x[0] > 0.0 else _ZERO
    return x if x > 0.0 else 0.0


_ZERO = Dual(0.0, 0.0)
