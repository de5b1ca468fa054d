"""Command-line entry point: grid sweeps over the package operations with
CSV/JSON reports.

Exit status is 0 on success, 2 when a parameter is invalid and 3 when a
computation needs more digits than ``--digits`` allows.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .errors import CongammaError, PrecisionExhausted
from .specfun import BigReal, PrecisionPolicy

COMMANDS = ("identity", "primes", "doubles", "goldbach", "cramer", "sieve",
            "prop-step", "prop-green", "prop-spectrum")
FORMATS = ("csv", "json")


class ValidationError(CongammaError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str = "identity"
    x: str = "10"
    i: str = "1"
    digits: int = 50
    max_terms: int = 10_000_000
    tail_tol: float = 1e-12
    mode: str = ""
    format: str = "csv"
    threads: int = 1
    cache_path: str = ""
    compare: str = ""
    energy: str = "2"
    v0: str = "1"
    potential: str = ""
    x_a: float = -1.0
    x_b: float = 1.0
    depth: int = 40
    width: float = 1.0

    def validate(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}", "command")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}", "format")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1", "threads")
        if self.compare not in ("", "sieve"):
            raise ValidationError("compare accepts only 'sieve'", "compare")
        if self.depth < 0:
            raise ValidationError("depth must be >= 0", "depth")
        return self

    def policy(self):
        return PrecisionPolicy(digits=self.digits, max_terms=self.max_terms,
                               tail_tol=self.tail_tol)

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        return cls(**parse_config_text(text))


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_ALIASES = {"cache": "cache_path", "E": "energy", "V0": "v0", "L": "width"}


def _convert(key, raw):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ValidationError(f"{key}: cannot parse {raw!r}", key) from None
    return raw


def parse_config_text(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.strip()
        if not body or body.startswith("#"):
            continue
        key, sep, value = body.partition("=")
        key = _ALIASES.get(key.strip(), key.strip().replace("-", "_"))
        if not sep or key not in _TYPES:
            raise ValidationError(f"config line {lineno}: unknown or malformed entry", "config")
        out[key] = _convert(key, value.strip())
    return out


# --- grids -------------------------------------------------------------------


def _dec(text, param):
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise ValidationError(f"{param}: {text!r} is not a number", param) from None
    if not d.is_finite():
        raise ValidationError(f"{param}: {text!r} is not finite", param)
    return d


def parse_grid(spec, param="x"):
    """``a:b:log10`` (decades), ``a:b:log10:n`` or ``a:b:lin:n``, or ``v1,v2,...``."""
    spec = str(spec).strip()
    if ":" not in spec:
        return [_dec(t, param) for t in spec.split(",") if t.strip()]
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ValidationError(f"{param}: grid must be start:stop:scale[:count]", param)
    a, b = _dec(parts[0], param), _dec(parts[1], param)
    scale = parts[2].strip()
    count = None
    if len(parts) == 4:
        try:
            count = int(parts[3])
        except ValueError:
            raise ValidationError(f"{param}: bad point count {parts[3]!r}", param) from None
        if count < 1:
            raise ValidationError(f"{param}: point count must be >= 1", param)
    if b < a:
        raise ValidationError(f"{param}: stop is below start", param)
    if scale == "log10":
        if a <= 0:
            raise ValidationError(f"{param}: log grids need a positive start", param)
        if count is None:
            out, v = [], a
            while v <= b:
                out.append(v)
                v *= 10
            return out
        la, lb = math.log10(a), math.log10(b)
        if count == 1:
            return [a]
        return [Decimal(repr(10 ** (la + (lb - la) * j / (count - 1)))) for j in range(count)]
    if scale == "lin":
        if count is None:
            raise ValidationError(f"{param}: lin grids need a point count", param)
        if count == 1:
            return [a]
        return [a + (b - a) * j / (count - 1) for j in range(count)]
    raise ValidationError(f"{param}: unknown scale {scale!r}", param)


def _as_int(d, param):
    if d != d.to_integral_value():
        raise ValidationError(f"{param}: {d} is not an integer", param)
    return int(d)


def _num(d):
    """Decimal to the float or int expected by the numeric code."""
    return int(d) if d == d.to_integral_value() and abs(d) < 2**53 else float(d)


def _fmt(v):
    if isinstance(v, BigReal):
        return v.to_decimal()
    if isinstance(v, Decimal):
        return format(v.normalize(), "f") if v == v.to_integral_value() else str(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


# --- commands ----------------------------------------------------------------


def _rel(a, b, digits):
    from .specfun import workdps

    with workdps(digits + 10) as ctx:
        av, bv = ctx.mpf(a.value if isinstance(a, BigReal) else a), ctx.mpf(b)
        return BigReal(abs(av - bv) / abs(bv), digits)


def _table_for(limit):
    from .sieve import primes_up_to

    return primes_up_to(max(int(limit), 2))


def cmd_identity(cfg, grid):
    from .counting import integer_count

    pol = cfg.policy()

    def row(x):
        r = integer_count(_num(x), pol)
        err = BigReal(abs(r.value - BigReal.from_decimal(str(x), pol.digits)), pol.digits)
        return [x, r.value, err, r.terms_used, r.tail_bound, r.precision_used]

    return ["x", "N", "abs_err", "terms", "tail_bound", "working_digits"], row


def cmd_primes(cfg, grid):
    from .counting import pi1_bar
    from .sieve import big_pi_exact

    pol = cfg.policy()
    if cfg.compare == "sieve":
        table = _table_for(max(grid))

        def row(x):
            r = pi1_bar(_num(x), pol)
            exact = big_pi_exact(_num(x), table, pol.digits)
            return [x, r.value, exact, _rel(r.value, exact.value, pol.digits), r.terms_used, pol.digits]

        return ["x", "pi1_bar", "Pi_exact", "rel_err", "terms", "digits"], row

    def row(x):
        r = pi1_bar(_num(x), pol)
        return [x, r.value, r.terms_used, r.tail_bound, pol.digits]

    return ["x", "pi1_bar", "terms", "tail_bound", "digits"], row


def cmd_doubles(cfg, grid):
    from .counting import pi2i_bar
    from .sieve import double_count_exact

    pol = cfg.policy()
    i = _as_int(_dec(cfg.i, "i"), "i")
    head = ["x", "i", "pi2i_bar", "terms", "tail_bound", "warning", "digits"]
    table = _table_for(max(grid)) if cfg.compare == "sieve" else None
    if table is not None:
        head.insert(3, "exact_count")

    def row(x):
        r = pi2i_bar(_num(x), i, pol)
        out = [x, i, r.value, r.terms_used, r.tail_bound, r.warning, pol.digits]
        if table is not None:
            out.insert(3, double_count_exact(i, _as_int(x, "x"), table))
        return out

    return head, row


def cmd_goldbach(cfg, grid):
    from . import cache
    from .goldbach import Mode, failure_probability, straddle_expectation
    from .sieve import straddle_count_exact

    pol = cfg.policy()
    try:
        mode = Mode(cfg.mode or "factored")
    except ValueError:
        raise ValidationError(f"unknown mode {cfg.mode!r}", "mode") from None
    path = None
    if mode is Mode.FACTORED:
        path = Path(cfg.cache_path) if cfg.cache_path else cache.default_cache_dir() / "c2i.cache"
    head = ["x", "mode", "S", "c2i_sum", "log10_failure", "prob_straddled", "tail_bound", "i_max", "digits"]
    table = _table_for(2 * _as_int(max(grid), "x")) if cfg.compare == "sieve" else None
    if table is not None:
        head += ["straddle_exact", "S_over_exact"]

    def row(x):
        rep = straddle_expectation(_as_int(x, "x"), pol, mode, cache_path=path, threads=cfg.threads)
        prob, _ = failure_probability(rep)
        out = [x, mode.value, rep.S, rep.c2i_sum_used, rep.log10_failure, prob,
               rep.tail_bound, rep.i_max, pol.digits]
        if table is not None:
            exact = straddle_count_exact(_as_int(x, "x"), table).count
            out += [exact, rep.S / exact if exact else None]
        return out

    # the cache has one writer, so goldbach rows run sequentially
    return head, row


def cmd_cramer(cfg, grid):
    from .goldbach import cramer_gap
    from .specfun import workdps

    pol = cfg.policy()

    def row(p):
        gap = cramer_gap(_as_int(p, "x"), pol)
        with workdps(pol.digits + 10) as ctx:
            ratio = BigReal(ctx.mpf(gap.value) / ctx.log(int(p)) ** 2, pol.digits)
        return [p, gap, ratio, pol.digits]

    return ["p", "gap", "gap_over_log2", "digits"], row


def cmd_sieve(cfg, grid):
    from .sieve import big_pi_exact, pi_exact

    table = _table_for(max(grid))

    def row(x):
        return [x, pi_exact(_num(x), table), big_pi_exact(_num(x), table, cfg.digits)]

    return ["x", "pi_exact", "Pi_exact"], row


def cmd_prop_step(cfg, grid):
    from .propagator import step_coeffs

    v0 = float(_dec(cfg.v0, "v0"))

    def row(E):
        c = step_coeffs(float(E), v0)
        return [E, v0, c.r.real, c.r.imag, c.t.real, c.t.imag, abs(c.r) ** 2 + abs(c.t) ** 2 - 1]

    return ["E", "V0", "r_re", "r_im", "t_re", "t_im", "flux_dev"], row


def _potential(cfg):
    from .propagator import PiecewisePotential

    if not cfg.potential:
        raise ValidationError("prop-green needs --potential FILE", "potential")
    try:
        return PiecewisePotential.read(cfg.potential)
    except OSError as exc:
        raise ValidationError(f"cannot read potential: {exc}", "potential") from None


def cmd_prop_green(cfg, grid):
    from .propagator import path_decomposition_green, transfer_matrix_green

    pot = _potential(cfg)

    def row(E):
        o = transfer_matrix_green(pot, float(E), cfg.x_a, cfg.x_b)
        r = path_decomposition_green(pot, float(E), cfg.x_a, cfg.x_b, cfg.depth)
        err = abs(r.value - o.value) / abs(o.value)
        return [E, cfg.x_a, cfg.x_b, o.value.real, o.value.imag, r.value.real, r.value.imag,
                cfg.depth, err, r.converged]

    return ["E", "x_a", "x_b", "oracle_re", "oracle_im", "recursion_re", "recursion_im",
            "depth", "rel_err", "converged"], row


def cmd_prop_spectrum(cfg, grid):
    from .propagator import bounce_spectrum

    v0 = math.inf if cfg.v0.strip().lower() in ("inf", "infinity") else float(_dec(cfg.v0, "v0"))
    lo, hi = float(min(grid)), float(max(grid))
    roots = bounce_spectrum(cfg.width, v0, (lo, hi) if len(grid) > 1 else None)
    return ["n", "L", "V0", "E"], roots


HANDLERS = {
    "identity": cmd_identity, "primes": cmd_primes, "doubles": cmd_doubles,
    "goldbach": cmd_goldbach, "cramer": cmd_cramer, "sieve": cmd_sieve,
    "prop-step": cmd_prop_step, "prop-green": cmd_prop_green,
    "prop-spectrum": cmd_prop_spectrum,
}
_ENERGY_GRID = {"prop-step", "prop-green", "prop-spectrum"}


def evaluate(cfg):
    """(header, rows) for a validated config; rows hold formatted strings."""
    cfg.validate()
    cfg.policy()
    param = "energy" if cfg.command in _ENERGY_GRID else "x"
    grid = parse_grid(cfg.energy if param == "energy" else cfg.x, param)
    if not grid:
        raise ValidationError(f"{param}: empty grid", param)
    head, row = HANDLERS[cfg.command](cfg, grid)
    if cfg.command == "prop-spectrum":
        v0 = cfg.v0.strip()
        rows = [[n, cfg.width, v0, e] for n, e in enumerate(row, 1)]
    elif cfg.threads > 1 and cfg.command != "goldbach":
        with ThreadPoolExecutor(cfg.threads) as pool:
            rows = list(pool.map(row, grid))
    else:
        rows = [row(x) for x in grid]
    return head, [[_fmt(v) for v in r] for r in rows]


def render(head, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(head, r)) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    w.writerows(rows)
    return buf.getvalue()


def run(cfg, out=None, err=None):
    """Execute ``cfg``; returns the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        head, rows = evaluate(cfg)
    except PrecisionExhausted as exc:
        err.write(f"error [{exc.param}]: {exc}\nsuggested: --digits {exc.suggested_digits}\n")
        return 3
    except CongammaError as exc:
        err.write(f"error [{exc.param}]: {exc}\n")
        return 2
    out.write(render(head, rows, cfg.format))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="congamma", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--x", help="grid: a:b:log10[:n], a:b:lin:n or comma list")
    p.add_argument("--i")
    p.add_argument("--digits", type=int)
    p.add_argument("--max-terms", type=int, dest="max_terms")
    p.add_argument("--tail-tol", type=float, dest="tail_tol")
    p.add_argument("--mode", help="goldbach: direct, factored or paper_lower_bound")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--threads", type=int)
    p.add_argument("--cache", dest="cache_path")
    p.add_argument("--compare", choices=("sieve",))
    p.add_argument("--E", dest="energy", help="energy grid for prop-* commands")
    p.add_argument("--V0", dest="v0")
    p.add_argument("--potential")
    p.add_argument("--x-a", type=float, dest="x_a")
    p.add_argument("--x-b", type=float, dest="x_b")
    p.add_argument("--depth", type=int)
    p.add_argument("--L", type=float, dest="width")
    return p


def config_from_args(argv):
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc}", "config") from None
    for key, v in vars(args).items():
        if key != "config" and v is not None:
            values[key] = v
    return ExperimentConfig(**values)


def main(argv=None):
    try:
        cfg = config_from_args(argv)
    except CongammaError as exc:
        sys.stderr.write(f"error [{exc.param}]: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
