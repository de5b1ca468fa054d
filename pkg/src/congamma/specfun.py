"""Arbitrary-precision reals and the special functions the counting series need.

Big-float arithmetic is delegated to mpmath.  Every thread gets its own
mpmath context, so nothing here touches the shared ``mpmath.mp`` state and
all functions are safe to call concurrently.
"""

from __future__ import annotations

import math
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass, replace
from fractions import Fraction

import mpmath
from mpmath.ctx_mp import MPContext

from .errors import DomainError, PrecisionExhausted

MIN_DIGITS = 16
GUARD_DIGITS = 10
# working precision may grow to HEADROOM * digits before a computation gives up
HEADROOM = 20
LOG10_E = math.log10(math.e)

_local = threading.local()


def _context():
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _local.ctx = MPContext()
    return ctx


@contextmanager
def workdps(dps):
    """Thread-local mpmath context at ``dps`` decimal digits (restored on exit)."""
    ctx = _context()
    saved = ctx.prec
    ctx.dps = int(dps)
    try:
        yield ctx
    finally:
        ctx.prec = saved


def _to_mpf(ctx, x):
    if isinstance(x, BigReal):
        return ctx.mpf(x.value)
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")


@dataclass(frozen=True, eq=False)
class BigReal:
    """A real number carried at an explicit decimal precision."""

    value: mpmath.mpf
    precision_digits: int

    def __post_init__(self):
        if int(self.precision_digits) < MIN_DIGITS:
            raise DomainError(
                f"precision_digits must be >= {MIN_DIGITS}, got {self.precision_digits}",
                "digits",
            )
        object.__setattr__(self, "precision_digits", int(self.precision_digits))
        with workdps(self.precision_digits) as ctx:
            v = +_to_mpf(ctx, self.value)
        # hand out a plain mpmath.mpf (unrounded) so callers can compute with it
        # under their own mpmath.workdps settings
        object.__setattr__(self, "value", mpmath.mp.make_mpf(v._mpf_))

    @classmethod
    def from_decimal(cls, text, digits):
        text = text.strip()
        if not _DECIMAL.match(text):
            raise ValueError(f"not a decimal number: {text!r}")
        return cls(text, digits)

    def to_decimal(self):
        with workdps(self.precision_digits) as ctx:
            return ctx.nstr(self.value, self.precision_digits, strip_zeros=False)

    def __str__(self):
        return self.to_decimal()

    def __repr__(self):
        return f"BigReal({self.to_decimal()!r}, {self.precision_digits})"

    def __float__(self):
        return float(self.value)

    def __int__(self):
        return int(self.value)

    def _binary(self, other, op, reflected=False):
        if isinstance(other, BigReal):
            digits = max(self.precision_digits, other.precision_digits)
        elif isinstance(other, (int, float, Fraction, mpmath.mpf)):
            digits = self.precision_digits
        else:
            return NotImplemented
        with workdps(digits + 2) as ctx:
            a, b = _to_mpf(ctx, self), _to_mpf(ctx, other)
            if reflected:
                a, b = b, a
            return BigReal(op(a, b), digits)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: a + b, True)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: a - b, True)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: a * b, True)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: a / b, True)

    def __neg__(self):
        return BigReal(mpmath.mp.make_mpf(mpmath.libmp.mpf_neg(self.value._mpf_)), self.precision_digits)

    def __abs__(self):
        return BigReal(mpmath.mp.make_mpf(mpmath.libmp.mpf_abs(self.value._mpf_)), self.precision_digits)

    def _cmp_value(self, other):
        if isinstance(other, BigReal):
            return other.value
        return other

    def __eq__(self, other):
        if not isinstance(other, (BigReal, int, float, Fraction, mpmath.mpf)):
            return NotImplemented
        return self.value == self._cmp_value(other)

    def __hash__(self):
        return hash(self.value)

    def __lt__(self, other):
        return self.value < self._cmp_value(other)

    def __le__(self, other):
        return self.value <= self._cmp_value(other)

    def __gt__(self, other):
        return self.value > self._cmp_value(other)

    def __ge__(self, other):
        return self.value >= self._cmp_value(other)


@dataclass(frozen=True)
class PrecisionPolicy:
    """How precisely series are evaluated and where they may be cut off.

    ``digits`` is the precision of every returned value.  Intermediate sums
    run at a higher working precision chosen a priori from the expected
    cancellation; if that exceeds ``max_digits`` (default ``HEADROOM *
    digits``) the computation raises :class:`PrecisionExhausted`.
    """

    digits: int = 50
    max_terms: int = 10_000_000
    tail_tol: float = 1e-12
    max_digits: int | None = None

    def __post_init__(self):
        if self.digits < MIN_DIGITS:
            raise DomainError(f"digits must be >= {MIN_DIGITS}", "digits")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1", "max_terms")
        if not self.tail_tol > 0:
            raise DomainError("tail_tol must be > 0", "tail_tol")

    @property
    def digit_cap(self):
        return self.max_digits if self.max_digits is not None else HEADROOM * self.digits

    def working(self, extra):
        """Working precision for ``extra`` digits of expected cancellation."""
        need = self.digits + GUARD_DIGITS + int(math.ceil(max(extra, 0.0)))
        if need > self.digit_cap:
            suggested = max(self.digits, int(math.ceil(need / HEADROOM)))
            raise PrecisionExhausted(
                f"needs {need} working digits but the cap is {self.digit_cap}; "
                f"rerun with --digits {suggested}",
                need,
                suggested,
            )
        return need

    def doubled(self):
        return replace(self, digits=2 * self.digits,
                       max_digits=None if self.max_digits is None else 2 * self.max_digits)


DEFAULT_POLICY = PrecisionPolicy()


@dataclass(frozen=True)
class SeriesResult:
    input_x: float
    value: BigReal
    terms_used: int
    tail_bound: BigReal
    precision_used: int
    warning: str | None = None

    def __float__(self):
        return float(self.value)


class SeriesSum:
    """Accumulate an infinite series under the package truncation rule.

    Summation stops once three consecutive terms are below
    ``tail_tol * max(1, |partial|)`` and the caller has certified that the
    terms are in their monotone-decay regime.  The tail bound is the last
    term magnitude plus a rounding allowance.
    """

    RUN = 3

    def __init__(self, ctx, policy, wp):
        self.ctx = ctx
        self.policy = policy
        self.wp = wp
        self.total = ctx.mpf(0)
        self.abs_total = ctx.mpf(0)
        self.last = ctx.mpf(0)
        self.terms = 0
        self._small = 0

    def add(self, term, decaying=True, ratio=None):
        """Add a term; return True once the series may be truncated.

        ``ratio`` is a certified bound on later term ratios for series that do
        not alternate; the omitted tail is then bounded geometrically.
        """
        ctx = self.ctx
        self.total += term
        mag = abs(term)
        self.abs_total += mag
        if ratio is not None:
            ratio = ctx.mpf(ratio)
            mag = mag * ratio / (1 - ratio) if ratio < 1 else ctx.inf
        self.last = mag
        self.terms += 1
        scale = max(ctx.mpf(1), abs(self.total))
        if mag < self.policy.tail_tol * scale / 2:
            self._small += 1
        else:
            self._small = 0
        done = self._small >= self.RUN and decaying
        if self.terms >= self.policy.max_terms and not done:
            raise PrecisionExhausted(
                f"series not converged after max_terms={self.policy.max_terms}",
                self.wp, self.policy.digits, param="max_terms",
            )
        return done

    def tail_bound(self, value=None):
        ctx = self.ctx
        value = self.total if value is None else value
        rounding = self.abs_total * ctx.mpf(10) ** (2 - self.wp)
        output = abs(value) * ctx.mpf(10) ** (1 - self.policy.digits)
        return self.last + rounding + output

    def result(self, x, warning=None, scale=1):
        ctx = self.ctx
        value = self.total * scale
        bound = self.tail_bound(value) * abs(ctx.mpf(scale))
        digits = self.policy.digits
        return SeriesResult(float(x), BigReal(value, digits), self.terms,
                            BigReal(bound, digits), self.wp, warning)


def _positive_int(n, name="n"):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"{name} must be a positive integer, got {n!r}", name)
    return int(n)


def _log10_factorial(n):
    return math.lgamma(n + 1) / math.log(10)


def _series_branch(n, z):
    """True where the all-positive power series beats the closed form."""
    return abs(z) < 1 or 0 < z < n


def gamma_cancellation_digits(n, z):
    """Decimal digits lost evaluating the regularized gamma at (n, z).

    On the closed-form branch this is the cost of (n-1)!(1 - e^-z sum_{k<n} z^k/k!);
    the series branch only accumulates rounding over its terms.
    """
    z = float(z)
    if z == 0:
        return 0.0
    if _series_branch(n, z):
        return math.log10(n + 1) + 2
    y = abs(z)
    # the regularized value is bounded below by y^n/n! (z<0) or e^-z z^n/n! (z>0)
    log10_small = n * math.log10(y) - _log10_factorial(n)
    if z > 0:
        log10_small -= z * LOG10_E
        inner = 0.0
    else:
        inner = y * LOG10_E
    return inner + max(0.0, -log10_small) + math.log10(n + 1)


def _regularized(ctx, n, z):
    """gamma(n, z)/(n-1)! in the caller's context."""
    if _series_branch(n, float(z)):
        eps = ctx.eps
        if z < 0:
            # (-1)^n y^n/(n-1)! sum_k y^k/(k! (n+k)), all terms positive
            y = -z
            term, total, k = ctx.mpf(1), ctx.mpf(0), 0
            while True:
                total += term / (n + k)
                k += 1
                term = term * y / k
                if term < eps * total:
                    break
            return (-1) ** n * y**n / ctx.factorial(n - 1) * total
        # e^-z sum_{k>=n} z^k/k!, ratios z/(k+1) < 1
        first = ctx.exp(n * ctx.log(z) - z - ctx.loggamma(n + 1))
        term, total, k = ctx.mpf(1), ctx.mpf(0), n
        while True:
            total += term
            k += 1
            term = term * z / k
            if term < eps * total:
                break
        return first * total
    term = ctx.mpf(1)
    partial = ctx.mpf(0)
    for k in range(n):
        partial += term
        term = term * z / (k + 1)
    return 1 - ctx.exp(-z) * partial


def lower_gamma(n, z, policy=DEFAULT_POLICY):
    """Lower incomplete gamma of positive integer order at any real argument.

    Uses the closed form (n-1)! (1 - e^{-z} sum_{k<n} z^k/k!).  For z < 0
    the inner sum alternates with terms up to ~e^|z|, so it is run at
    ``digits + |z| log10 e + guard`` digits or more.  Near zero, and for
    0 < z < n, the closed form cancels almost completely and a power series
    with positive terms is summed instead.
    """
    n = _positive_int(n)
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        zf = _to_mpf(ctx, z)
    if not ctx.isfinite(zf):
        raise DomainError("z must be finite", "z")
    if zf == 0:
        return BigReal(0, policy.digits)
    wp = policy.working(gamma_cancellation_digits(n, zf))
    with workdps(wp) as ctx:
        zw = _to_mpf(ctx, z)
        value = ctx.factorial(n - 1) * _regularized(ctx, n, zw)
        return BigReal(value, policy.digits)


def regularized_p(n, z, policy=DEFAULT_POLICY):
    """P(n, z) = gamma(n, z) / Gamma(n)."""
    n = _positive_int(n)
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        zf = _to_mpf(ctx, z)
    if not ctx.isfinite(zf):
        raise DomainError("z must be finite", "z")
    if zf == 0:
        return BigReal(0, policy.digits)
    wp = policy.working(gamma_cancellation_digits(n, zf))
    with workdps(wp) as ctx:
        return BigReal(_regularized(ctx, n, _to_mpf(ctx, z)), policy.digits)


def factorize(n):
    """Prime factorization of a positive integer as {p: exponent}."""
    n = _positive_int(n)
    out = {}
    while n % 2 == 0:
        out[2] = out.get(2, 0) + 1
        n //= 2
    p = 3
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius(n):
    factors = factorize(n)
    if any(e > 1 for e in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


def zeta_int(k, policy=DEFAULT_POLICY):
    """Riemann zeta at an integer k >= 2."""
    if isinstance(k, bool) or int(k) != k or k < 2:
        raise DomainError(f"zeta_int needs an integer k >= 2, got {k!r}", "k")
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        return BigReal(ctx.zeta(int(k)), policy.digits)


def log_integral(x, policy=DEFAULT_POLICY):
    """Principal-value li(x) for x > 1; x <= 1 is rejected rather than regularized."""
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _to_mpf(ctx, x)
        if not xv > 1:
            raise DomainError(f"log_integral needs x > 1, got {x!r}", "x")
        return BigReal(ctx.li(xv), policy.digits)


def riemann_r(x, policy=DEFAULT_POLICY):
    """Riemann's R(x) from Gram's series 1 + sum (log x)^k / (k k! zeta(k+1))."""
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _to_mpf(ctx, x)
        if not xv >= 1:
            raise DomainError(f"riemann_r needs x >= 1, got {x!r}", "x")
        y = ctx.log(xv)
    # positive terms, so only rounding accumulation needs guarding
    wp = policy.working(math.log10(float(y) * math.e + 10))
    with workdps(wp) as ctx:
        y = ctx.log(_to_mpf(ctx, x))
        total = ctx.mpf(1)
        power = ctx.mpf(1)
        eps = ctx.mpf(10) ** (-wp)
        k = 0
        while True:
            k += 1
            power = power * y / k
            term = power / (k * ctx.zeta(k + 1))
            total += term
            if k + 1 > y and term < eps * total:
                break
            if k > policy.max_terms:
                raise PrecisionExhausted("Gram series did not converge", wp,
                                         policy.digits, param="max_terms")
        return BigReal(total, policy.digits)
