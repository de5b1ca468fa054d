"""Goldbach straddles: prime doubles (p, p+2i) centred on x, and the derived
expectation, failure probability and Cramér gap estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .counting import (
    _double_series_plan,
    _odd_neg_gammas,
    _x_value,
    double_constant,
    double_series,
    pi2i_bar,
    twin_constant,
)
from .errors import DomainError, ResourceError
from .specfun import (
    DEFAULT_POLICY,
    GUARD_DIGITS,
    BigReal,
    SeriesSum,
    SeriesResult,
    _to_mpf,
    gamma_cancellation_digits,
    workdps,
)

DIRECT_LIMIT = 10**4


class Mode(str, Enum):
    DIRECT = "direct"
    FACTORED = "factored"
    PAPER_LOWER_BOUND = "paper_lower_bound"


@dataclass(frozen=True)
class StraddleReport:
    x: int
    S: BigReal
    mode: Mode
    c2i_sum_used: BigReal
    log10_failure: BigReal
    i_max: int
    tail_bound: BigReal


def _check_x(ctx, x, lowest):
    xv = _x_value(ctx, x)
    if not xv >= lowest:
        raise DomainError(f"x must be >= {lowest}, got {x!r}", "x")
    return xv


def delta_pm(n, x, policy=DEFAULT_POLICY):
    """(Delta+, Delta-) for odd order 2n-1 around the point x.

    Delta+ = g(x+1) - g(x),  Delta- = g(x) - g(x-1),  g(u) = gamma(2n-1, -log u).
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}", "n")
    n = int(n)
    m = 2 * n - 1
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _check_x(ctx, x, 2)
        y = float(ctx.log(xv + 1))
    # each gamma carries ~x * y^m / m, the differences are ~1/x of that
    extra = gamma_cancellation_digits(m, -y) + 2 * math.log10(float(xv) + 1)
    wp = policy.working(extra)
    with workdps(wp) as ctx:
        xv = _to_mpf(ctx, x)
        fact = ctx.factorial(m - 1)

        def g(u):
            s = -ctx.log(u)
            term, partial = ctx.mpf(1), ctx.mpf(0)
            for k in range(m):
                partial += term
                term = term * s / (k + 1)
            return fact * (1 - u * partial)

        mid = g(xv)
        return (BigReal(g(xv + 1) - mid, policy.digits),
                BigReal(mid - g(xv - 1), policy.digits))


def straddle_series(x, policy=DEFAULT_POLICY):
    """H(x) = sum_n (-1)^n (Delta+ + Delta-) / (n!)^2, the i-independent
    factor of the straddle density."""
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _check_x(ctx, x, 2)
        y = float(ctx.log(xv + 1))
    _, extra = _double_series_plan(y, policy)
    wp = policy.working(extra + math.log10(float(xv) + 1))
    with workdps(wp) as ctx:
        xv = _to_mpf(ctx, x)
        acc = SeriesSum(ctx, policy, wp)
        hi = _odd_neg_gammas(ctx, xv + 1)
        lo = _odd_neg_gammas(ctx, xv - 1)
        inv_fact = ctx.mpf(1)
        for (n, g_hi), (_, g_lo) in zip(hi, lo):
            inv_fact /= n
            term = (-1) ** n * (g_hi - g_lo) * inv_fact**2
            if acc.add(term, decaying=n + 1 > y):
                break
        return acc.result(float(xv))


def _scaled(series, factor, policy, warning=None):
    with workdps(series.precision_used) as ctx:
        f = ctx.mpf(factor)
        value = f * ctx.mpf(series.value.value)
        bound = abs(f) * ctx.mpf(series.tail_bound.value) + abs(value) * ctx.mpf(10) ** (1 - policy.digits)
        return SeriesResult(series.input_x, BigReal(value, policy.digits), series.terms_used,
                            BigReal(bound, policy.digits), series.precision_used, warning)


def straddle_density(i, x, policy=DEFAULT_POLICY):
    """P_i(x) = (C_2i / 2i) H(x), density of doubles (p, p+2i) with p+i = x."""
    spec = double_constant(i, policy)
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        xv = _check_x(ctx, x, 3)
        if 2 * spec.i > 2 * xv - 2:
            raise DomainError(f"need 2i <= 2x-2, got i={spec.i}, x={x}", "i")
        factor = ctx.mpf(spec.constant.value) / (2 * spec.i)
    return _scaled(straddle_series(x, policy), factor, policy)


def _product_bound(a, b, ctx):
    av, bv = ctx.mpf(a.value.value), ctx.mpf(b.value.value)
    return abs(av) * ctx.mpf(b.tail_bound.value) + abs(bv) * ctx.mpf(a.tail_bound.value)


def straddle_expectation(x, policy=DEFAULT_POLICY, mode=Mode.FACTORED,
                         cache_path=None, threads=1):
    """S(x) = sum_{i=1}^{x-3} pi2i_bar(2x) P_i(x).

    ``direct`` evaluates every summand separately; ``factored`` uses
    S = G(2x) H(x) sum_i C_2i^2/(2i); ``paper_lower_bound`` replaces that
    i-sum by C_2/2.
    """
    mode = Mode(mode)
    if isinstance(x, bool) or int(x) != x:
        raise DomainError(f"x must be an integer, got {x!r}", "x")
    x = int(x)
    if x < 4:
        raise DomainError(f"x must be >= 4, got {x}", "x")
    i_max = x - 3
    digits = policy.digits
    if mode is Mode.DIRECT:
        if x > DIRECT_LIMIT:
            raise ResourceError(f"direct mode is limited to x <= {DIRECT_LIMIT}", "x")
        wp = policy.digits + GUARD_DIGITS
        with workdps(wp) as ctx:
            total = ctx.mpf(0)
            bound = ctx.mpf(0)
            csum = ctx.mpf(0)
            for i in range(1, i_max + 1):
                a = pi2i_bar(2 * x, i, policy)
                b = straddle_density(i, x, policy)
                total += ctx.mpf(a.value.value) * ctx.mpf(b.value.value)
                bound += _product_bound(a, b, ctx)
                c = ctx.mpf(double_constant(i, policy).constant.value)
                csum += c * c / (2 * i)
            c_used = csum
    else:
        g = double_series(2 * x, policy)
        h = straddle_series(x, policy)
        if mode is Mode.FACTORED:
            from .sieve import c2i_square_sum

            c = c2i_square_sum(i_max, policy, cache_path=cache_path, threads=threads)
        else:
            c = twin_constant(policy) / 2
        with workdps(digits + GUARD_DIGITS) as ctx:
            cv = ctx.mpf(c.value)
            gh = ctx.mpf(g.value.value) * ctx.mpf(h.value.value)
            total = gh * cv
            bound = _product_bound(g, h, ctx) * cv
            c_used = cv
    with workdps(digits + GUARD_DIGITS) as ctx:
        bound += abs(total) * ctx.mpf(10) ** (1 - digits)
        S = BigReal(total, digits)
        return StraddleReport(x, S, mode, BigReal(c_used, digits),
                              BigReal(-ctx.mpf(S.value) * ctx.log10(ctx.e), digits), i_max,
                              BigReal(bound, digits))


def failure_probability(report):
    """(1 - e^-S clamped to [0, 1], log10 e^-S)."""
    S = report.S if isinstance(report, StraddleReport) else report
    digits = S.precision_digits if isinstance(S, BigReal) else DEFAULT_POLICY.digits
    with workdps(digits + GUARD_DIGITS) as ctx:
        s = _to_mpf(ctx, S)
        p = -ctx.expm1(-s)
        p = min(max(p, ctx.mpf(0)), ctx.mpf(1))
        return BigReal(p, digits), BigReal(-s * ctx.log10(ctx.e), digits)


def cramer_gap(p, policy=DEFAULT_POLICY):
    """Expected gap after the prime p, 1/P_1(p+1)."""
    if isinstance(p, bool) or int(p) != p or p < 3:
        raise DomainError(f"p must be an integer >= 3, got {p!r}", "p")
    dens = straddle_density(1, int(p) + 1, policy)
    with workdps(policy.digits + GUARD_DIGITS) as ctx:
        return BigReal(1 / ctx.mpf(dens.value.value), policy.digits)
