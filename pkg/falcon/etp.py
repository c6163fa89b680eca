"""Exact term algebra for functions of the staircase coordinate ``s``.

A :class:`Profile` is a finite sum of terms::

    c * s**p * ln(s)**k * exp(rate*s) * {1 | cos(freq*s) | sin(freq*s)}

with ``k`` in {0, 1}. Profiles are closed under differentiation, linear
combination and the products met in second-order residuals. Antiderivatives
exist for most terms; the rest raise :class:`~falcon.exceptions.QuadratureFallback`
so callers can switch to numeric quadrature.

The text form round-trips through :meth:`Profile.parse`::

    9*exp(-2*s) - 7*exp(-3*s)
    -2*exp(0.25*s)*cos(3*s) + 0.5*exp(0.25*s)*sin(3*s)
    s^1.5 + ln(s)*exp(s)*cos(2*s)
"""

import logging
import math
import re
from typing import Dict, Iterable, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import ArgumentError, DomainError, QuadratureFallback, UnsupportedTermError

logger = logging.getLogger(__name__)

Phase = Literal["none", "cos", "sin"]
TermKey = Tuple[float, int, float, float, str]
ArrayLike = Union[float, np.ndarray]

KEY_DECIMALS = 12
_PHASE_ORDER = {"none": 0, "cos": 1, "sin": 2}


def _rounded(value: float, decimals: int) -> float:
    # + 0.0 folds -0.0 into 0.0
    return round(value, decimals) + 0.0


class Term(BaseModel):
    """One product ``coef * s^power * ln(s)^log_exp * exp(rate*s) * trig(freq*s)``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    coef: float
    power: float = 0.0
    log_exp: int = Field(default=0, ge=0, le=1)
    rate: float = 0.0
    freq: float = Field(default=0.0, ge=0.0)
    phase: Phase = "none"

    @model_validator(mode="after")
    def check_phase(self) -> "Term":
        if (self.phase == "none") != (self.freq == 0.0):
            raise ValueError(f"phase {self.phase!r} does not match frequency {self.freq}")
        return self

    def key(self, decimals: int = KEY_DECIMALS) -> TermKey:
        return (
            _rounded(self.power, decimals),
            self.log_exp,
            _rounded(self.rate, decimals),
            _rounded(self.freq, decimals),
            self.phase,
        )

    def sort_key(self, decimals: int = KEY_DECIMALS) -> Tuple[float, int, float, float, int]:
        power, log_exp, rate, freq, phase = self.key(decimals)
        return (power, log_exp, -rate, freq, _PHASE_ORDER[phase])

    def with_coef(self, coef: float) -> "Term":
        return self.model_copy(update={"coef": coef})

    @property
    def requires_positive(self) -> bool:
        return self.power < 0 or self.log_exp == 1

    @property
    def requires_nonnegative(self) -> bool:
        return not float(self.power).is_integer()

    def value(self, s: np.ndarray) -> np.ndarray:
        out = np.full(np.shape(s), self.coef, dtype=float)
        if self.power != 0.0:
            out = out * np.power(s, self.power)
        if self.log_exp:
            out = out * np.log(s)
        if self.rate != 0.0:
            out = out * np.exp(self.rate * s)
        if self.phase == "cos":
            out = out * np.cos(self.freq * s)
        elif self.phase == "sin":
            out = out * np.sin(self.freq * s)
        return out

    def derivative(self) -> List["Term"]:
        """Product rule over the four factors."""
        c = self.coef
        parts = []
        if self.power != 0.0:
            parts.append(
                self.model_copy(update={"coef": c * self.power, "power": self.power - 1.0})
            )
        if self.log_exp:
            parts.append(self.model_copy(update={"power": self.power - 1.0, "log_exp": 0}))
        if self.rate != 0.0:
            parts.append(self.with_coef(c * self.rate))
        if self.phase == "cos":
            parts.append(self.model_copy(update={"coef": -c * self.freq, "phase": "sin"}))
        elif self.phase == "sin":
            parts.append(self.model_copy(update={"coef": c * self.freq, "phase": "cos"}))
        return parts


def make_term(
    coef: float,
    power: float = 0.0,
    log_exp: int = 0,
    rate: float = 0.0,
    freq: float = 0.0,
    phase: Phase = "none",
) -> Optional[Term]:
    """Build a term in canonical form, or None when it vanishes identically."""
    if coef == 0.0:
        return None
    if log_exp > 1:
        raise UnsupportedTermError(f"ln(s)^{log_exp} is outside the term algebra")
    if freq < 0.0:
        freq = -freq
        if phase == "sin":
            coef = -coef
    if freq == 0.0:
        if phase == "sin":
            return None
        phase = "none"
    elif phase == "none":
        raise ValueError(f"frequency {freq} given without a trigonometric factor")
    return Term(
        coef=float(coef),
        power=float(power) + 0.0,
        log_exp=log_exp,
        rate=float(rate) + 0.0,
        freq=float(freq),
        phase=phase,
    )


class Profile(BaseModel):
    """Normalized sum of :class:`Term`; the empty sum is the zero profile."""

    model_config = ConfigDict(frozen=True)

    terms: Tuple[Term, ...] = ()

    @classmethod
    def from_terms(
        cls, terms: Iterable[Optional[Term]], decimals: int = KEY_DECIMALS
    ) -> "Profile":
        merged: Dict[TermKey, Term] = {}
        for term in terms:
            if term is None:
                continue
            key = term.key(decimals)
            if key in merged:
                merged[key] = merged[key].with_coef(merged[key].coef + term.coef)
            else:
                merged[key] = term
        kept = [t for t in merged.values() if t.coef != 0.0]
        kept.sort(key=lambda t: t.sort_key(decimals))
        return cls(terms=tuple(kept))

    # Constructors

    @classmethod
    def zero(cls) -> "Profile":
        return cls()

    @classmethod
    def constant(cls, c: float) -> "Profile":
        return cls.from_terms([make_term(c)])

    @classmethod
    def monomial(cls, c: float, power: float) -> "Profile":
        return cls.from_terms([make_term(c, power)])

    @classmethod
    def exp(cls, rate: float, c: float = 1.0) -> "Profile":
        return cls.from_terms([make_term(c, rate=rate)])

    @classmethod
    def trig(
        cls,
        freq: float,
        phase: Phase = "cos",
        c: float = 1.0,
        rate: float = 0.0,
        power: float = 0.0,
    ) -> "Profile":
        return cls.from_terms([make_term(c, power, 0, rate, freq, phase)])

    @classmethod
    def parse(cls, text: str) -> "Profile":
        return _Parser(text).parse()

    # Arithmetic

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: Union["Profile", float]) -> "Profile":
        other = _as_profile(other)
        return Profile.from_terms(self.terms + other.terms)

    __radd__ = __add__

    def __sub__(self, other: Union["Profile", float]) -> "Profile":
        return self + (-_as_profile(other))

    def __rsub__(self, other: float) -> "Profile":
        return _as_profile(other) - self

    def __neg__(self) -> "Profile":
        return self.scale(-1.0)

    def __mul__(self, other: Union["Profile", float]) -> "Profile":
        if isinstance(other, Profile):
            return multiply(self, other)
        return self.scale(float(other))

    __rmul__ = __mul__

    def scale(self, factor: float) -> "Profile":
        if factor == 0.0:
            return Profile()
        return Profile.from_terms(t.with_coef(t.coef * factor) for t in self.terms)

    # Calculus

    def derivative(self) -> "Profile":
        return differentiate(self)

    def antiderivative(self) -> "Profile":
        return antiderivative(self)

    def evaluate(self, s: ArrayLike) -> ArrayLike:
        return evaluate(self, s)

    def derivative_evaluate(self, s: ArrayLike) -> ArrayLike:
        return evaluate(differentiate(self), s)

    def invert(self) -> "Profile":
        """Reciprocal of a single exponential-power term."""
        if len(self.terms) != 1:
            raise UnsupportedTermError(f"cannot invert the {len(self.terms)}-term profile {self}")
        t = self.terms[0]
        if t.log_exp or t.phase != "none":
            raise UnsupportedTermError(f"cannot invert {self}", term=t)
        return Profile.from_terms([make_term(1.0 / t.coef, -t.power, 0, -t.rate)])

    def exponentiate(self) -> "Profile":
        """``exp`` of a sum of constants, ``c*s`` and ``c*ln(s)`` terms."""
        coef, power, rate = 1.0, 0.0, 0.0
        for t in self.terms:
            if t.rate != 0.0 or t.phase != "none":
                raise UnsupportedTermError(f"exp({self}) is outside the term algebra", term=t)
            if t.power == 0.0 and t.log_exp == 0:
                coef *= math.exp(t.coef)
            elif t.power == 1.0 and t.log_exp == 0:
                rate += t.coef
            elif t.power == 0.0 and t.log_exp == 1:
                power += t.coef
            else:
                raise UnsupportedTermError(f"exp({self}) is outside the term algebra", term=t)
        return Profile.from_terms([make_term(coef, power, 0, rate)])

    # Inspection

    @property
    def requires_positive(self) -> bool:
        return any(t.requires_positive for t in self.terms)

    @property
    def leading_coefficient(self) -> float:
        return self.terms[0].coef if self.terms else 0.0

    @property
    def max_coefficient(self) -> float:
        return max((abs(t.coef) for t in self.terms), default=0.0)

    def keys(self, decimals: int = KEY_DECIMALS) -> List[TermKey]:
        return [t.key(decimals) for t in self.terms]

    def chop(self, tol: float = 1e-12, scale: Optional[float] = None) -> "Profile":
        """Drop terms whose coefficient is below ``tol * scale`` (default: own largest)."""
        scale = self.max_coefficient if scale is None else scale
        return Profile(terms=tuple(t for t in self.terms if abs(t.coef) > tol * scale))

    def is_zero(self, tol: float = 0.0, scale: Optional[float] = None) -> bool:
        return len(self.chop(tol, scale).terms) == 0

    def isclose(self, other: "Profile", rel: float = 1e-12, abs_tol: float = 1e-12) -> bool:
        scale = max(self.max_coefficient, other.max_coefficient)
        return all(abs(t.coef) <= abs_tol + rel * scale for t in (self - other).terms)

    def coefficient(self, key: TermKey, decimals: int = KEY_DECIMALS) -> float:
        for t in self.terms:
            if t.key(decimals) == key:
                return t.coef
        return 0.0

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for i, t in enumerate(self.terms):
            body = _term_body(t)
            if i == 0:
                pieces.append(f"-{body}" if t.coef < 0 else body)
            else:
                pieces.append(f" - {body}" if t.coef < 0 else f" + {body}")
        return "".join(pieces)


def _as_profile(value: Union[Profile, float]) -> Profile:
    return value if isinstance(value, Profile) else Profile.constant(float(value))


def combine(a: Profile, b: Profile, ca: float = 1.0, cb: float = 1.0) -> Profile:
    """``ca * a + cb * b``, normalized."""
    return Profile.from_terms(
        [t.with_coef(t.coef * ca) for t in a.terms] + [t.with_coef(t.coef * cb) for t in b.terms]
    )


def differentiate(pr: Profile) -> Profile:
    return Profile.from_terms(part for t in pr.terms for part in t.derivative())


def evaluate(pr: Profile, s: ArrayLike) -> ArrayLike:
    """Sum of the term values at ``s``; ``0**0`` is 1."""
    arr = np.asarray(s, dtype=float)
    if pr.requires_positive and np.any(arr <= 0.0):
        raise DomainError(f"{pr} needs s > 0", value=float(np.min(arr)))
    if any(t.requires_nonnegative for t in pr.terms) and np.any(arr < 0.0):
        raise DomainError(f"{pr} needs s >= 0", value=float(np.min(arr)))
    total = np.zeros(arr.shape, dtype=float)
    for t in pr.terms:
        total = total + t.value(arr)
    return float(total) if total.ndim == 0 else total


def _multiply_terms(a: Term, b: Term) -> List[Optional[Term]]:
    coef = a.coef * b.coef
    power = a.power + b.power
    log_exp = a.log_exp + b.log_exp
    if log_exp > 1:
        raise UnsupportedTermError("product would need ln(s)^2", term=(a, b))
    rate = a.rate + b.rate
    if a.phase == "none" or b.phase == "none":
        trig = b if a.phase == "none" else a
        return [make_term(coef, power, log_exp, rate, trig.freq, trig.phase)]

    # product-to-sum
    u, v, half = a.freq, b.freq, 0.5 * coef
    if a.phase == "cos" and b.phase == "cos":
        pairs = [(half, u - v, "cos"), (half, u + v, "cos")]
    elif a.phase == "sin" and b.phase == "sin":
        pairs = [(half, u - v, "cos"), (-half, u + v, "cos")]
    elif a.phase == "sin":
        pairs = [(half, u + v, "sin"), (half, u - v, "sin")]
    else:
        pairs = [(half, u + v, "sin"), (-half, u - v, "sin")]
    return [make_term(c, power, log_exp, rate, f, ph) for c, f, ph in pairs]


def multiply(a: Profile, b: Profile) -> Profile:
    return Profile.from_terms(
        p for ta in a.terms for tb in b.terms for p in _multiply_terms(ta, tb)
    )


def _antiderivative_term(t: Term) -> List[Optional[Term]]:
    c, p, k = t.coef, t.power, t.log_exp
    if t.rate == 0.0 and t.phase == "none":
        if k == 0:
            if p == -1.0:
                return [make_term(c, 0.0, 1)]
            return [make_term(c / (p + 1.0), p + 1.0)]
        if p == -1.0:
            raise QuadratureFallback("ln(s)/s integrates to ln(s)^2/2", term=t)
        q = p + 1.0
        return [make_term(c / q, q, 1), make_term(-c / q**2, q, 0)]

    if k != 0 or p < 0 or not float(p).is_integer():
        raise QuadratureFallback(
            f"{Profile(terms=(t,))} has no antiderivative in the algebra", term=t
        )

    # int s^n e^{zs} ds = e^{zs} sum_j (-1)^j n!/(n-j)! s^(n-j) / z^(j+1)
    n = int(p)
    out: List[Optional[Term]] = []
    if t.phase == "none":
        for j in range(n + 1):
            w = c * (-1) ** j * math.perm(n, j) / t.rate ** (j + 1)
            out.append(make_term(w, n - j, 0, t.rate))
        return out
    z = complex(t.rate, t.freq)
    for j in range(n + 1):
        w = c * (-1) ** j * math.perm(n, j) / z ** (j + 1)
        if t.phase == "cos":
            out.append(make_term(w.real, n - j, 0, t.rate, t.freq, "cos"))
            out.append(make_term(-w.imag, n - j, 0, t.rate, t.freq, "sin"))
        else:
            out.append(make_term(w.imag, n - j, 0, t.rate, t.freq, "cos"))
            out.append(make_term(w.real, n - j, 0, t.rate, t.freq, "sin"))
    return out


def antiderivative(pr: Profile) -> Profile:
    """Term-wise antiderivative with zero constant of integration."""
    return Profile.from_terms(p for t in pr.terms for p in _antiderivative_term(t))


def _fmt(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def _scaled_s(factor: float) -> str:
    if factor == 1.0:
        return "s"
    if factor == -1.0:
        return "-s"
    return f"{_fmt(factor)}*s"


def _term_body(t: Term) -> str:
    factors = []
    if t.power != 0.0:
        factors.append("s" if t.power == 1.0 else f"s^{_fmt(t.power)}")
    if t.log_exp:
        factors.append("ln(s)")
    if t.rate != 0.0:
        factors.append(f"exp({_scaled_s(t.rate)})")
    if t.phase != "none":
        factors.append(f"{t.phase}({_scaled_s(t.freq)})")
    magnitude = abs(t.coef)
    if not factors:
        return _fmt(magnitude)
    if magnitude != 1.0:
        factors.insert(0, _fmt(magnitude))
    return "*".join(factors)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>exp|cos|sin|ln|s)|(?P<op>[-+*/^()]))"
)


class _Parser:
    """Recursive-descent reader for the profile text form."""

    def __init__(self, text: str):
        self.text = text
        self.tokens: List[Tuple[str, str]] = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            match = _TOKEN.match(stripped, pos)
            if match is None:
                raise ArgumentError(f"cannot parse profile {text!r} at position {pos}")
            kind = match.lastgroup or ""
            self.tokens.append((kind, match.group(kind)))
            pos = match.end()
        self.index = 0

    def _peek(self) -> Optional[str]:
        return self.tokens[self.index][1] if self.index < len(self.tokens) else None

    def _next(self) -> Tuple[str, str]:
        if self.index >= len(self.tokens):
            raise ArgumentError(f"unexpected end of profile {self.text!r}")
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _expect(self, value: str) -> None:
        kind, got = self._next()
        if got != value:
            raise ArgumentError(f"expected {value!r} in profile {self.text!r}, got {got!r}")

    def parse(self) -> Profile:
        if not self.tokens:
            raise ArgumentError("empty profile string")
        result = self._expression()
        if self.index != len(self.tokens):
            raise ArgumentError(f"trailing input in profile {self.text!r}")
        return result

    def _expression(self) -> Profile:
        sign = 1.0
        while self._peek() in ("+", "-"):
            sign *= -1.0 if self._next()[1] == "-" else 1.0
        result = self._product().scale(sign)
        while self._peek() in ("+", "-"):
            op = self._next()[1]
            term = self._product()
            result = result + term if op == "+" else result - term
        return result

    def _product(self) -> Profile:
        result = self._unary()
        while self._peek() in ("*", "/"):
            op = self._next()[1]
            factor = self._unary()
            result = multiply(result, factor if op == "*" else factor.invert())
        return result

    def _unary(self) -> Profile:
        if self._peek() == "-":
            self._next()
            return -self._unary()
        if self._peek() == "+":
            self._next()
            return self._unary()
        return self._power()

    def _power(self) -> Profile:
        base = self._atom()
        if self._peek() != "^":
            return base
        self._next()
        exponent = _constant_value(self._unary(), self.text)
        return _raise(base, exponent, self.text)

    def _atom(self) -> Profile:
        kind, value = self._next()
        if kind == "num":
            return Profile.constant(float(value))
        if value == "(":
            inner = self._expression()
            self._expect(")")
            return inner
        if value == "s":
            return Profile.monomial(1.0, 1.0)
        if value in ("exp", "cos", "sin", "ln"):
            self._expect("(")
            arg = self._expression()
            self._expect(")")
            return _apply(value, arg, self.text)
        raise ArgumentError(f"unexpected {value!r} in profile {self.text!r}")


def _constant_value(pr: Profile, text: str) -> float:
    if not pr.terms:
        return 0.0
    if len(pr.terms) == 1 and pr.terms[0].key() == (0.0, 0, 0.0, 0.0, "none"):
        return pr.terms[0].coef
    raise ArgumentError(f"exponent {pr} in profile {text!r} must be a number")


def _linear_factor(pr: Profile) -> Optional[float]:
    if len(pr.terms) == 1 and pr.terms[0].key() == (1.0, 0, 0.0, 0.0, "none"):
        return pr.terms[0].coef
    return None


def _apply(name: str, arg: Profile, text: str) -> Profile:
    if name == "exp":
        return arg.exponentiate()
    if name == "ln":
        factor = _linear_factor(arg)
        if factor is None or factor <= 0:
            raise ArgumentError(f"ln() in profile {text!r} only accepts c*s with c > 0")
        return Profile.from_terms([make_term(math.log(factor)), make_term(1.0, 0.0, 1)])
    factor = _linear_factor(arg)
    if factor is None:
        if not arg.terms or arg.terms[0].key() == (0.0, 0, 0.0, 0.0, "none"):
            value = _constant_value(arg, text)
            return Profile.constant(math.cos(value) if name == "cos" else math.sin(value))
        raise ArgumentError(f"{name}() in profile {text!r} only accepts c*s")
    return Profile.from_terms([make_term(1.0, 0.0, 0, 0.0, factor, name)])


def _raise(base: Profile, exponent: float, text: str) -> Profile:
    if float(exponent).is_integer() and exponent >= 0:
        result = Profile.constant(1.0)
        for _ in range(int(exponent)):
            result = multiply(result, base)
        return result
    if len(base.terms) == 1:
        t = base.terms[0]
        if t.log_exp == 0 and t.phase == "none" and (t.coef > 0 or float(exponent).is_integer()):
            return Profile.from_terms(
                [make_term(t.coef**exponent, t.power * exponent, 0, t.rate * exponent)]
            )
    raise ArgumentError(f"cannot raise {base} to {exponent} in profile {text!r}")
