"""Append-only checkpoint cache for long sweeps.

One record per line, tab separated::

    kind <TAB> checkpoint_i <TAB> sum_decimal <TAB> digits

For ``c2i_square_sum`` the stored sum is sum_{i<=checkpoint_i} (C_2i/C_2)^2/(2i)
as accumulated by the sweep.  The accumulator is a dyadic rational, so
``sum_decimal`` is its exact decimal expansion and ``digits`` its number of
significant digits.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

from .errors import CacheCorruption

KINDS = ("c2i_square_sum",)
_NUMBER = re.compile(r"[+-]?\d+(?:\.\d+)?\Z")


def exact_decimal(frac):
    """Exact decimal expansion of a Fraction whose denominator is a power of two."""
    den = frac.denominator
    k = den.bit_length() - 1
    if den != 1 << k:
        raise ValueError("denominator is not a power of two")
    digits = frac.numerator * 5**k
    sign = "-" if digits < 0 else ""
    s = str(abs(digits)).rjust(k + 1, "0")
    if k == 0:
        return sign + s
    return f"{sign}{s[:-k]}.{s[-k:]}"


def significant_digits(text):
    return len(text.lstrip("+-").replace(".", "").lstrip("0")) or 1


@dataclass(frozen=True)
class CacheRecord:
    kind: str
    checkpoint_i: int
    sum_decimal: str
    digits: int

    @classmethod
    def from_sum(cls, kind, checkpoint_i, total):
        text = exact_decimal(total)
        return cls(kind, int(checkpoint_i), text, significant_digits(text))

    def exact_sum(self):
        return Fraction(Decimal(self.sum_decimal))

    def to_line(self):
        return f"{self.kind}\t{self.checkpoint_i}\t{self.sum_decimal}\t{self.digits}"


def default_cache_dir():
    env = os.environ.get("CONGAMMA_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "congamma"


def parse_line(line, lineno):
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise CacheCorruption(f"line {lineno}: expected 4 tab-separated fields", lineno)
    kind, ckpt, text, digits = parts
    if kind not in KINDS:
        raise CacheCorruption(f"line {lineno}: unknown kind {kind!r}", lineno)
    if not ckpt.isdigit() or not digits.isdigit() or not _NUMBER.match(text):
        raise CacheCorruption(f"line {lineno}: malformed record", lineno)
    if significant_digits(text) != int(digits):
        raise CacheCorruption(f"line {lineno}: digit count does not match sum", lineno)
    return CacheRecord(kind, int(ckpt), text, int(digits))


def read_cache(path, kind="c2i_square_sum"):
    """Records of ``kind`` in file order; a missing file reads as empty."""
    path = Path(path)
    if not path.exists():
        return []
    records = []
    last = 0
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = parse_line(line, lineno)
            if rec.kind != kind:
                continue
            if rec.checkpoint_i <= last:
                raise CacheCorruption(f"line {lineno}: checkpoints not increasing", lineno)
            last = rec.checkpoint_i
            records.append(rec)
    return records


def append_records(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a") as fh:
        for rec in records:
            fh.write(rec.to_line() + "\n")


def _aligned(rec):
    from .sieve import C2I_BLOCK

    return rec.checkpoint_i % C2I_BLOCK == 0


def resume_point(records, limit):
    """Largest usable checkpoint <= limit, or None to start from i=1.

    A record exactly at ``limit`` is used as is; otherwise only block-aligned
    checkpoints qualify, so a resumed sweep adds the same block sums a cold
    sweep would.
    """
    best = None
    for rec in records:
        if rec.checkpoint_i == limit or (rec.checkpoint_i < limit and _aligned(rec)):
            best = rec
    return best


def verify_checkpoint(records, rec, base=None):
    """Recompute the segment ending at ``rec`` and compare with the stored sums."""
    from .sieve import c2i_partial_sum

    prev = None
    for r in records:
        if r.checkpoint_i < rec.checkpoint_i and _aligned(r):
            prev = r
    start = prev.checkpoint_i if prev else 0
    start_sum = prev.exact_sum() if prev else Fraction(0)
    segment = c2i_partial_sum(start, rec.checkpoint_i, base=base)
    if start_sum + segment != rec.exact_sum():
        lineno = records.index(rec) + 1
        raise CacheCorruption(
            f"checkpoint {rec.checkpoint_i} (record {lineno}) does not match recomputation",
            lineno,
        )
