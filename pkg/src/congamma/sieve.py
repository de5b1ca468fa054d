"""Exact prime data from a segmented, odd-only sieve, and the oracles built on it."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, RangeError, ResourceError
from .specfun import DEFAULT_POLICY, BigReal, workdps

DEFAULT_SEGMENT = 1 << 20  # odd entries per segment
LIMIT_CEILING = 1 << 32

C2I_BLOCK = 10**6
C2I_CHECKPOINT = 10**7
C2I_CEILING = 4 * 10**9


def small_primes(n):
    """All primes <= n as int64 (plain sieve, used for base primes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if is_p[p]:
            is_p[p * p :: 2 * p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def _sieve_segment(seg, size, n_odd, base):
    """Packed primality bits for odd numbers 2j+1, j in [seg*size, seg*size+size)."""
    j0 = seg * size
    count = min(size, n_odd - j0)
    mask = np.ones(count, dtype=bool)
    lo = 2 * j0 + 1
    hi = 2 * (j0 + count - 1) + 1
    if j0 == 0:
        mask[0] = False  # the number 1
    for p in base:
        p = int(p)
        if p * p > hi:
            break
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start % 2 == 0:
            start += p
        if start > hi:
            continue
        mask[(start - lo) // 2 :: p] = False
    packed = np.packbits(mask, bitorder="little")
    return packed, int(mask.sum())


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Primality of every integer up to ``limit``.

    Odd numbers only, one packed bit each, built segment by segment; bit j of
    the concatenated array is the primality of 2j+1.
    """

    limit: int
    segment_size: int
    bits: np.ndarray
    segment_counts: np.ndarray  # odd primes before each segment, length nseg+1

    def is_prime(self, n):
        n = int(n)
        if n < 2 or n > self.limit:
            if n > self.limit:
                raise RangeError(f"{n} exceeds table limit {self.limit}", "x")
            return False
        if n % 2 == 0:
            return n == 2
        j = (n - 1) // 2
        return bool((self.bits[j >> 3] >> (j & 7)) & 1)

    def is_prime_array(self, ns):
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and int(ns.max()) > self.limit:
            raise RangeError(f"{int(ns.max())} exceeds table limit {self.limit}", "x")
        out = ns == 2
        odd = (ns % 2 == 1) & (ns > 1)
        j = (ns[odd] - 1) // 2
        out[odd] = ((self.bits[j >> 3] >> (j & 7)) & 1).astype(bool)
        return out

    def count_upto(self, x):
        x = int(math.floor(x))
        if x > self.limit:
            raise RangeError(f"{x} exceeds table limit {self.limit}", "x")
        if x < 2:
            return 0
        if x < 3:
            return 1
        jmax = (x - 1) // 2
        seg = jmax // self.segment_size
        j0 = seg * self.segment_size
        start_byte = j0 >> 3
        chunk = np.unpackbits(self.bits[start_byte : (jmax >> 3) + 1], bitorder="little")
        inside = int(chunk[: jmax - j0 + 1].sum())
        return 1 + int(self.segment_counts[seg]) + inside

    def primes(self, lo=2, hi=None):
        """Primes p with lo <= p <= hi as an int64 array."""
        hi = self.limit if hi is None else int(math.floor(hi))
        if hi > self.limit:
            raise RangeError(f"{hi} exceeds table limit {self.limit}", "x")
        lo = max(int(math.ceil(lo)), 2)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        jlo = max((lo - 1) // 2, 0)
        jhi = (hi - 1) // 2
        chunk = np.unpackbits(self.bits[jlo >> 3 : (jhi >> 3) + 1], bitorder="little")
        base = (jlo >> 3) << 3
        idx = np.flatnonzero(chunk[jlo - base : jhi - base + 1]) + jlo
        odd = 2 * idx.astype(np.int64) + 1
        odd = odd[(odd >= lo) & (odd <= hi)]
        if lo <= 2 <= hi:
            return np.concatenate([np.array([2], dtype=np.int64), odd])
        return odd

    def __len__(self):
        return self.count_upto(self.limit)


def primes_up_to(limit, segment_size=DEFAULT_SEGMENT, threads=1, ceiling=LIMIT_CEILING):
    limit = int(limit)
    if limit < 2:
        raise DomainError("limit must be >= 2", "limit")
    if limit > ceiling:
        raise ResourceError(f"limit {limit} exceeds the configured ceiling {ceiling}", "limit")
    if segment_size < 8 or segment_size % 8:
        raise DomainError("segment_size must be a positive multiple of 8", "segment_size")
    n_odd = (limit - 1) // 2 + 1
    nseg = -(-n_odd // segment_size)
    hi = 2 * (n_odd - 1) + 1
    base = small_primes(math.isqrt(hi))[1:]

    def work(seg):
        return _sieve_segment(seg, segment_size, n_odd, base)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(nseg)))
    else:
        parts = [work(s) for s in range(nseg)]
    bits = np.concatenate([p for p, _ in parts]) if parts else np.zeros(0, np.uint8)
    counts = np.zeros(nseg + 1, dtype=np.int64)
    counts[1:] = np.cumsum([c for _, c in parts])
    return PrimeTable(limit, segment_size, bits, counts)


def _check_range(x, table):
    if x > table.limit:
        raise RangeError(f"x={x} exceeds table limit {table.limit}", "x")


def pi_exact(x, table):
    _check_range(x, table)
    return table.count_upto(x)


def iroot(n, k):
    """Largest r with r**k <= n."""
    if n < 2:
        return n
    r = int(round(n ** (1.0 / k)))
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def big_pi_fraction(x, table):
    """Riemann's prime-power count sum_{p^k <= x} 1/k as an exact Fraction."""
    _check_range(x, table)
    n = int(math.floor(x))
    total = Fraction(0)
    k = 1
    while True:
        r = iroot(n, k)
        if r < 2:
            break
        total += Fraction(table.count_upto(r), k)
        k += 1
    return total


def big_pi_exact(x, table, digits=DEFAULT_POLICY.digits):
    return BigReal(big_pi_fraction(x, table), digits)


def double_count_exact(i, x, table):
    """Prime doubles (p, p+2i) with the larger member <= x."""
    if i < 1:
        raise DomainError("i must be >= 1", "i")
    x = int(math.floor(x))
    if 2 * i > x - 2:
        raise RangeError(f"need 2i <= x-2, got i={i}, x={x}", "i")
    _check_range(x, table)
    p = table.primes(2, x - 2 * i)
    return int(table.is_prime_array(p + 2 * i).sum())


@dataclass(frozen=True)
class StraddleCount:
    x: int
    count: int


def straddle_count_exact(x, table):
    """Number of i in [1, x-3] with x-i and x+i both prime."""
    x = int(x)
    if x < 4:
        raise DomainError("x must be >= 4", "x")
    if 2 * x - 3 > table.limit:
        raise RangeError(f"straddle count at x={x} needs primality up to {2 * x - 3}", "x")
    q = table.primes(3, x - 1)
    return StraddleCount(x, int(table.is_prime_array(2 * x - q).sum()))


# --- sum of squared prime-double constants -------------------------------------


def c2i_block_sum(lo, hi, base):
    """sum_{lo <= i < hi} g(i)/(2i) with g(i) = prod_{odd p | i} ((p-1)/(p-2))^2.

    Odd prime factors up to sqrt(hi) are divided out of a running cofactor;
    whatever remains above 1 is a single large prime.
    """
    i = np.arange(lo, hi, dtype=np.int64)
    rem = i // (i & -i)
    g = np.ones(hi - lo, dtype=np.float64)
    n = hi - lo
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        s = (-lo) % p
        if s >= n:
            continue
        g[s::p] *= ((p - 1) / (p - 2)) ** 2
        q = p
        while q < hi:
            s = (-lo) % q
            if s >= n:
                break
            rem[s::q] //= p
            q *= p
    big = rem > 1
    r = rem[big].astype(np.float64)
    g[big] *= ((r - 1) / (r - 2)) ** 2
    return float(np.sum(g / (2.0 * i)))


def _blocks(start, stop):
    """Aligned block ranges covering i in (start, stop]; start is block aligned."""
    lo = start + 1
    while lo <= stop:
        hi = min((lo - 1) // C2I_BLOCK * C2I_BLOCK + C2I_BLOCK, stop) + 1
        yield lo, hi
        lo = hi


def c2i_partial_sum(start, stop, threads=1, base=None):
    """Exact sum of the per-block float sums over i in (start, stop].

    Blocks are aligned to multiples of C2I_BLOCK so any split of a range
    reproduces the same block floats, and the dyadic partial sums add exactly.
    """
    if base is None:
        base = small_primes(math.isqrt(max(stop, 4)) + 1)[1:]
    blocks = list(_blocks(start, stop))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sums = list(pool.map(lambda b: c2i_block_sum(b[0], b[1], base), blocks))
    else:
        sums = [c2i_block_sum(lo, hi, base) for lo, hi in blocks]
    total = Fraction(0)
    for s in sums:
        total += Fraction(s)
    return total


def c2i_raw_sum(limit, cache_path=None, threads=1, verify=True, ceiling=C2I_CEILING):
    """sum_{i<=limit} (C_2i/C_2)^2/(2i) as an exact dyadic Fraction.

    With ``cache_path`` the sweep resumes from the largest checkpoint <= limit
    and appends a checkpoint every C2I_CHECKPOINT values of i.
    """
    from . import cache

    limit = int(limit)
    if limit < 1:
        raise DomainError("limit must be >= 1", "limit")
    if limit > ceiling:
        raise ResourceError(f"limit {limit} exceeds the configured ceiling {ceiling}", "limit")
    base = small_primes(math.isqrt(limit) + 1)[1:]
    start, total = 0, Fraction(0)
    records = []
    if cache_path is not None:
        records = cache.read_cache(cache_path)
        rec = cache.resume_point(records, limit)
        if rec is not None:
            if verify:
                cache.verify_checkpoint(records, rec, base=base)
            start, total = rec.checkpoint_i, rec.exact_sum()
    last_written = max((r.checkpoint_i for r in records), default=0)
    new = []
    point = start
    while point < limit:
        nxt = min((point // C2I_CHECKPOINT + 1) * C2I_CHECKPOINT, limit)
        total += c2i_partial_sum(point, nxt, threads, base)
        point = nxt
        if cache_path is not None and point > last_written:
            new.append(cache.CacheRecord.from_sum("c2i_square_sum", point, total))
            if len(new) >= 10:
                cache.append_records(cache_path, new)
                last_written = point
                new = []
    if cache_path is not None and new:
        cache.append_records(cache_path, new)
    return total


def c2i_square_sum(limit, policy=DEFAULT_POLICY, cache_path=None, threads=1):
    """sum_{i=1}^{limit} C_2i^2/(2i).

    Per-term factors are double precision (relative error ~1e-15); the
    block sums are accumulated exactly and scaled by C_2^2 at full precision.
    """
    from .counting import twin_constant

    raw = c2i_raw_sum(limit, cache_path=cache_path, threads=threads)
    c2 = twin_constant(policy)
    with workdps(policy.digits + 10) as ctx:
        value = ctx.mpf(c2.value) ** 2 * (ctx.mpf(raw.numerator) / raw.denominator)
        return BigReal(value, policy.digits)
