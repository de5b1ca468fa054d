"""Counting functions of the constrained gamma process.

Every series here is built from lower incomplete gammas at the negative
argument -log x, evaluated through the closed form
gamma(m, -y) = (m-1)! (1 - x sum_{k<m} (-y)^k / k!) with the inner partial
sums shared across m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .errors import DomainError
from .sieve import small_primes
from .specfun import (
    DEFAULT_POLICY,
    GUARD_DIGITS,
    LOG10_E,
    BigReal,
    SeriesSum,
    SeriesResult,
    _to_mpf,
    factorize,
    mobius,
    workdps,
)

TWIN_CUTOFF = 100


def _neg_log(x, ctx):
    return -ctx.log(x)


@dataclass(frozen=True)
class ScalingChoice:
    """Scaling applied to the cut-off; ``lam(x, ctx)`` is evaluated in ``ctx``."""

    lam: Callable = _neg_log
    name: str = "-log x"


NEG_LOG = ScalingChoice()


@dataclass(frozen=True)
class DoubleSpec:
    i: int
    gap: int
    constant: BigReal


def _x_value(ctx, x):
    xv = _to_mpf(ctx, x)
    if not ctx.isfinite(xv):
        raise DomainError("x must be finite", "x")
    return xv


def _log10_float(x):
    x = float(x)
    return math.log10(x) if x > 0 else 0.0


# --- integers ----------------------------------------------------------------


def integer_count(x, policy=DEFAULT_POLICY):
    """sum_{n>=1} P(n, x), the expected number of integers up to x.

    P(n, x) is the upper tail Pr(K >= n) of a Poisson(x) variable, so the
    terms are assembled from Poisson weights p_k = e^-x x^k/k!.  Weights
    left of ``x - t sqrt(x)`` are below the working precision (Chernoff) and
    the corresponding leading terms are taken as 1; that error goes into the
    tail bound.
    """
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _x_value(ctx, x)
    if not xv > 0:
        raise DomainError(f"integer_count needs x > 0, got {x!r}", "x")
    xf = float(xv)
    wp = policy.working(2 * _log10_float(xf + 1) + 5)
    t = math.sqrt(2 * math.log(10) * (wp + _log10_float(xf + 1)))
    k_lo = max(0, int(math.floor(xf - t * math.sqrt(xf))))
    with workdps(wp) as ctx:
        xv = _x_value(ctx, x)
        acc = SeriesSum(ctx, policy, wp)
        acc.total = ctx.mpf(k_lo)
        acc.terms = k_lo
        left_mass = ctx.exp(-ctx.mpf(t) ** 2 / 2) if k_lo else ctx.mpf(0)
        p = ctx.exp(k_lo * ctx.log(xv) - xv - ctx.loggamma(k_lo + 1))
        cum = ctx.mpf(0)
        k = k_lo
        n = k_lo
        while True:
            n += 1
            # P(n, x) = 1 - sum_{k<n} p_k
            while k < n:
                cum += p
                k += 1
                p = p * xv / k
            term = 1 - cum
            past_mode = n > xv
            ratio = xv / (n + 1) if past_mode else None
            if acc.add(term, decaying=past_mode, ratio=ratio):
                break
        acc.last += k_lo * left_mass
        return acc.result(xf)


# --- constants ---------------------------------------------------------------


@lru_cache(maxsize=64)
def _twin_constant(digits, cutoff):
    odd = [int(p) for p in small_primes(cutoff)[1:]]
    # P_{>cutoff}(k) = primezeta(k) - sum_{p<=cutoff} p^-k loses ~k log10(cutoff/2) digits
    kmax = int((digits + GUARD_DIGITS) / math.log10(cutoff / 2.0)) + 5
    wp = digits + GUARD_DIGITS + int(kmax * math.log10(cutoff / 2.0)) + 5
    with workdps(wp) as ctx:
        head = ctx.mpf(1)
        for p in odd:
            head *= 1 - ctx.mpf(1) / (p - 1) ** 2
        # log(1 - 1/(p-1)^2) = -sum_{k>=2} (2^k - 2)/k p^-k
        tail = ctx.mpf(0)
        eps = ctx.mpf(10) ** (-(digits + GUARD_DIGITS))
        for k in range(2, 10 * kmax):
            rest = ctx.primezeta(k) - ctx.fsum(ctx.mpf(p) ** -k for p in [2] + odd)
            term = (2**k - 2) * rest / k
            tail += term
            if abs(term) < eps * abs(tail):
                break
        return BigReal(head * ctx.exp(-tail), digits)


def twin_constant(policy=DEFAULT_POLICY, cutoff=TWIN_CUTOFF):
    """C_2 = prod_{p>2} (1 - 1/(p-1)^2).

    Odd primes up to ``cutoff`` are multiplied out directly; the remaining
    factor is exp(-sum_k (2^k - 2)/k * sum_{p>cutoff} p^-k), with the inner
    prime sums taken from the prime zeta function.
    """
    return _twin_constant(policy.digits, int(cutoff))


def twin_constant_truncated(cutoff, digits=DEFAULT_POLICY.digits):
    """The bare Euler product over odd primes <= cutoff (no tail)."""
    odd = small_primes(int(cutoff))[1:]
    with workdps(digits + GUARD_DIGITS) as ctx:
        prod = ctx.mpf(1)
        for p in odd:
            prod *= 1 - ctx.mpf(1) / (int(p) - 1) ** 2
        return BigReal(prod, digits)


def odd_prime_factor_ratio(i):
    """prod_{odd p | i} (p-1)/(p-2) as an exact (numerator, denominator)."""
    num = den = 1
    for p in factorize(i):
        if p > 2:
            num *= p - 1
            den *= p - 2
    return num, den


def double_constant(i, policy=DEFAULT_POLICY):
    if isinstance(i, bool) or int(i) != i or i < 1:
        raise DomainError(f"i must be a positive integer, got {i!r}", "i")
    i = int(i)
    num, den = odd_prime_factor_ratio(i)
    c2 = twin_constant(policy)
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        return DoubleSpec(i, 2 * i, BigReal(ctx.mpf(c2.value) * num / den, policy.digits))


# --- single primes -----------------------------------------------------------


def pi1_bar(x, policy=DEFAULT_POLICY, scaling=NEG_LOG):
    """Average prime count -sum_n gamma(n, lam(x)) / n!.

    For lam = -log x the inner alternating sums carry terms up to ~x, and
    term n absorbs an absolute error ~eps x^2, hence ~2 log10 x extra digits.
    """
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _x_value(ctx, x)
        if not xv >= 1:
            raise DomainError(f"pi1_bar needs x >= 1, got {x!r}", "x")
        lam = float(scaling.lam(xv, ctx))
    extra = (2 * abs(lam) * LOG10_E if lam < 0 else 0.0) + math.log10(abs(lam) * 3 + 10)
    wp = policy.working(extra)
    with workdps(wp) as ctx:
        xv = _x_value(ctx, x)
        lam = scaling.lam(xv, ctx)
        e = ctx.exp(-lam)
        acc = SeriesSum(ctx, policy, wp)
        power = ctx.mpf(1)  # lam^(n-1)/(n-1)!
        partial = ctx.mpf(0)  # sum_{k<n} lam^k/k!
        n = 0
        while True:
            n += 1
            partial += power
            power = power * lam / n
            # -gamma(n, lam)/n! = -(1 - e^-lam partial)/n
            term = -(1 - e * partial) / n
            if acc.add(term, decaying=n + 1 > abs(lam)):
                break
        return acc.result(float(xv))


def _floor_log2(ctx, xv):
    n = int(ctx.floor(ctx.log(xv, 2)))
    while 2 ** (n + 1) <= xv:
        n += 1
    while n > 0 and 2**n > xv:
        n -= 1
    return n


def mobius_inverted_pi(x, policy=DEFAULT_POLICY):
    """sum_{n <= log2 x} mu(n)/n * pi1_bar(x^(1/n))."""
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _x_value(ctx, x)
        if not xv >= 2:
            raise DomainError(f"mobius_inverted_pi needs x >= 2, got {x!r}", "x")
    wp = policy.working(2 * _log10_float(xv) + 5)
    with workdps(wp) as ctx:
        xv = _x_value(ctx, x)
        nmax = _floor_log2(ctx, xv)
        total = ctx.mpf(0)
        bound = ctx.mpf(0)
        terms = 0
        used = wp
        for n in range(1, nmax + 1):
            mu = mobius(n)
            if mu == 0:
                continue
            root = BigReal(ctx.root(xv, n), wp)
            part = pi1_bar(root, policy)
            total += mu * ctx.mpf(part.value.value) / n
            bound += ctx.mpf(part.tail_bound.value) / n
            terms += part.terms_used
            used = max(used, part.precision_used)
        bound += abs(total) * ctx.mpf(10) ** (1 - policy.digits)
        return SeriesResult(float(xv), BigReal(total, policy.digits), terms,
                            BigReal(bound, policy.digits), used)


# --- prime doubles -----------------------------------------------------------


def _double_series_plan(y, policy):
    """(terms needed, extra working digits) for the prime-double series at log x = y."""
    log10_x = y * LOG10_E
    target = math.log10(policy.tail_tol) - 6
    n = 1
    worst = 0.0
    while True:
        m = 2 * n - 1
        # |gamma(m, -y)| <= x y^m / m, divided by (n!)^2
        log_term = (log10_x + (m * math.log10(y) if y > 0 else -math.inf)
                    - math.log10(m) - 2 * math.lgamma(n + 1) / math.log(10))
        # coefficient (m-1)!/(n!)^2 multiplying the cancelling bracket
        worst = max(worst, (math.lgamma(m) - 2 * math.lgamma(n + 1)) / math.log(10))
        if n + 1 > y and log_term < target:
            break
        n += 1
    return n, 2 * log10_x + worst + math.log10(n + 1)


def double_series(x, policy=DEFAULT_POLICY):
    """sum_{n>=1} (-1)^n gamma(2n-1, -log x) / (n!)^2, the i-independent factor
    of the prime-double counts."""
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _x_value(ctx, x)
        if not xv >= 1:
            raise DomainError(f"prime-double series needs x >= 1, got {x!r}", "x")
        y = float(ctx.log(xv))
    _, extra = _double_series_plan(y, policy)
    wp = policy.working(extra)
    with workdps(wp) as ctx:
        xv = _x_value(ctx, x)
        return _double_series_at(ctx, xv, policy, wp)


def _odd_neg_gammas(ctx, u):
    """Yield (n, gamma(2n-1, -log u)) for n = 1, 2, ... sharing inner sums."""
    y = ctx.log(u)
    power = ctx.mpf(1)  # (-y)^k / k!
    partial = ctx.mpf(0)
    k = 0
    fact = ctx.mpf(1)  # (2n-2)!
    n = 0
    while True:
        n += 1
        m = 2 * n - 1
        while k < m:
            partial += power
            k += 1
            power = power * (-y) / k
        if n > 1:
            fact *= (m - 1) * (m - 2)
        yield n, fact * (1 - u * partial)


def _double_series_at(ctx, xv, policy, wp):
    acc = SeriesSum(ctx, policy, wp)
    y = ctx.log(xv)
    inv_fact = ctx.mpf(1)
    for n, g in _odd_neg_gammas(ctx, xv):
        inv_fact /= n
        term = (-1) ** n * g * inv_fact**2
        if acc.add(term, decaying=n + 1 > y):
            break
    return acc.result(float(xv))


def pi2i_bar(x, i, policy=DEFAULT_POLICY):
    """Average count of prime doubles (p, p+2i) up to x: C_2i times the double series."""
    spec = double_constant(i, policy)
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _x_value(ctx, x)
    warning = None
    if not xv - 2 > 2 * spec.i:
        warning = f"x={x} is outside the validity range x-2 > 2i (i={spec.i})"
    series = double_series(x, policy)
    with workdps(series.precision_used) as ctx:
        c = ctx.mpf(spec.constant.value)
        value = c * ctx.mpf(series.value.value)
        bound = c * ctx.mpf(series.tail_bound.value) + abs(value) * ctx.mpf(10) ** (1 - policy.digits)
        return SeriesResult(series.input_x, BigReal(value, policy.digits), series.terms_used,
                            BigReal(bound, policy.digits), series.precision_used, warning)
