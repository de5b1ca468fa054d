"""One-dimensional kernels and fixed-energy Green's functions (hbar = m = 1).

The Green's function convention is G = (E - H + i0)^-1 with
H = -1/2 d^2/dx^2 + V, so the free case is e^{ik|x-x'|}/(ik), k = sqrt(2E).
Wavenumbers in classically forbidden regions use the principal square
root, k = i*kappa, which makes every "outgoing" exponential decay.
"""

from __future__ import annotations

import cmath
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ConvergenceError, DomainError


def wavenumber(E, V):
    return cmath.sqrt(2 * (E - V))


@dataclass(frozen=True)
class PiecewisePotential:
    """Constant values[j] on region j = (breakpoints[j-1], breakpoints[j])."""

    breakpoints: tuple = ()
    values: tuple = (0.0,)

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        v = tuple(float(u) for u in self.values)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if len(v) != len(b) + 1:
            raise DomainError("need exactly one more value than breakpoints", "values")
        if any(not math.isfinite(t) for t in b + v):
            raise DomainError("breakpoints and values must be finite", "breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise DomainError("breakpoints must be strictly increasing", "breakpoints")

    @property
    def n_regions(self):
        return len(self.values)

    def region(self, x):
        """Index of the region containing x; a breakpoint belongs to the region on its right."""
        return bisect_right(self.breakpoints, float(x))

    def walls(self, j):
        """(left, right) wall positions of region j, None for +-infinity."""
        b = self.breakpoints
        return (b[j - 1] if j > 0 else None, b[j] if j < len(b) else None)

    def to_text(self):
        return (
            "breakpoints: " + " ".join(repr(t) for t in self.breakpoints) + "\n"
            + "values: " + " ".join(repr(t) for t in self.values) + "\n"
        )

    @classmethod
    def from_text(cls, text):
        fields = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, sep, rest = line.partition(":")
            key = key.strip()
            if not sep or key not in ("breakpoints", "values") or key in fields:
                raise DomainError(f"malformed potential line {line!r}", "potential")
            try:
                fields[key] = [float(t) for t in rest.split()]
            except ValueError:
                raise DomainError(f"non-numeric entry in {line!r}", "potential") from None
        if "values" not in fields:
            raise DomainError("potential file has no values line", "potential")
        return cls(tuple(fields.get("breakpoints", ())), tuple(fields["values"]))

    @classmethod
    def read(cls, path):
        return cls.from_text(Path(path).read_text())

    def write(self, path):
        Path(path).write_text(self.to_text())


@dataclass(frozen=True)
class ScatterCoeffs:
    r: complex
    t: complex
    k_left: complex
    k_right: complex


@dataclass(frozen=True)
class GreenEval:
    value: complex
    energy: float
    x_a: float
    x_b: float
    method: str
    converged: bool = True
    increment: float = 0.0


@dataclass(frozen=True)
class KernelEval:
    value: complex
    converged: bool
    last_term: float


# --- time-domain kernels -------------------------------------------------------


def free_kernel(x_a, x_b, T, imaginary=False):
    """Free propagator; ``imaginary=True`` reads T as tau and returns the heat kernel."""
    if T == 0:
        raise DomainError("T must be nonzero", "T")
    d2 = (x_b - x_a) ** 2
    if imaginary:
        if T < 0:
            raise DomainError("imaginary time must be positive", "T")
        return complex((2 * math.pi * T) ** -0.5 * math.exp(-d2 / (2 * T)))
    return cmath.sqrt(2j * math.pi * T) ** -1 * cmath.exp(1j * d2 / (2 * T))


@dataclass(frozen=True)
class HalfLine:
    b: float = 0.0


@dataclass(frozen=True)
class Box:
    L: float


def dirichlet_kernel(geometry, x_a, x_b, T, n_images=50, imaginary=True, tol=1e-14):
    """Image sum for a kernel vanishing on the walls of ``geometry``."""

    def k0(a, b):
        return free_kernel(a, b, T, imaginary)

    if isinstance(geometry, HalfLine):
        value = k0(x_a, x_b) - k0(2 * geometry.b - x_a, x_b)
        return KernelEval(value, True, 0.0)
    if not isinstance(geometry, Box) or not geometry.L > 0:
        raise DomainError("geometry must be HalfLine(b) or Box(L) with L > 0", "geometry")
    L = geometry.L
    value = k0(x_a, x_b) - k0(-x_a, x_b)
    last = 0.0
    for n in range(1, n_images + 1):
        pair = 0j
        for s in (n, -n):
            pair += k0(x_a + 2 * s * L, x_b) - k0(-x_a + 2 * s * L, x_b)
        value += pair
        last = abs(pair)
    return KernelEval(value, last <= tol * max(1.0, abs(value)), last)


# --- interfaces --------------------------------------------------------------


def step_coeffs(E, V0):
    """Flux-normalized reflection and transmission for a step from 0 to V0."""
    if not E > 0:
        raise DomainError("E must be positive", "E")
    if E == V0:
        raise DomainError("E = V0 is degenerate (zero wavenumber)", "E")
    k0, k1 = wavenumber(E, 0.0), wavenumber(E, V0)
    r = (k0 - k1) / (k0 + k1)
    t = 2 * cmath.sqrt(k0 * k1) / (k0 + k1)
    return ScatterCoeffs(r, t, k0, k1)


def _ks(potential, E):
    ks = [wavenumber(E, v) for v in potential.values]
    if any(k == 0 for k in ks):
        raise DomainError("E equals a region value (zero wavenumber)", "E")
    return ks


def _refs(potential):
    """Phase reference point for each region: its left wall, or b_1 for region 0."""
    b = potential.breakpoints
    if not b:
        return [0.0]
    return [b[0]] + list(b)


def _sweep(potential, ks, start, coeffs, direction):
    """Carry (A, B) of psi = A e^{ik(x-c)} + B e^{-ik(x-c)} from region ``start`` outward."""
    b = potential.breakpoints
    c = _refs(potential)
    out = {start: coeffs}
    j = start
    while 0 <= j + direction < len(ks):
        A, B = out[j]
        k = ks[j]
        if direction > 0:
            x = b[j]
            nxt = j + 1
        else:
            x = b[j - 1]
            nxt = j - 1
        d = x - c[j]
        val = A * cmath.exp(1j * k * d) + B * cmath.exp(-1j * k * d)
        der = 1j * k * (A * cmath.exp(1j * k * d) - B * cmath.exp(-1j * k * d))
        k2 = ks[nxt]
        d2 = x - c[nxt]
        A2 = 0.5 * (val + der / (1j * k2)) * cmath.exp(-1j * k2 * d2)
        B2 = 0.5 * (val - der / (1j * k2)) * cmath.exp(1j * k2 * d2)
        out[nxt] = (A2, B2)
        j = nxt
    return out


def _psi(potential, ks, amps, x):
    j = potential.region(x)
    A, B = amps[j]
    k = ks[j]
    d = x - _refs(potential)[j]
    e1, e2 = cmath.exp(1j * k * d), cmath.exp(-1j * k * d)
    return A * e1 + B * e2, 1j * k * (A * e1 - B * e2)


def transfer_matrix_green(potential, E, x_a, x_b, rtol=1e-13):
    """Exact Green's function 2 psi_L(x<) psi_R(x>) / W from interface matching."""
    ks = _ks(potential, E)
    n = len(ks) - 1
    left = _sweep(potential, ks, 0, (0j, 1 + 0j), +1)
    right = _sweep(potential, ks, n, (1 + 0j, 0j), -1)
    lo, hi = sorted((float(x_a), float(x_b)))
    pl, dl = _psi(potential, ks, left, lo)
    pr, dr = _psi(potential, ks, right, lo)
    W = pl * dr - dl * pr
    scale = abs(pl * dr) + abs(dl * pr)
    if W == 0 or abs(W) <= rtol * scale:
        raise ConvergenceError(f"Wronskian vanishes at E={E}: bound state or resonance", "E")
    ph, _ = _psi(potential, ks, right, hi)
    return GreenEval(2 * pl * ph / W, float(E), float(x_a), float(x_b), "oracle")


def scattering_coeffs(potential, E):
    """Flux-normalized (r, t) for a wave incident from the left.

    Phases refer to the first breakpoint on the left and the last on the right.
    """
    ks = _ks(potential, E)
    n = len(ks) - 1
    right = _sweep(potential, ks, n, (1 + 0j, 0j), -1)
    A0, B0 = right[0]
    r = B0 / A0
    t = cmath.sqrt(ks[n] / ks[0]) / A0
    return ScatterCoeffs(r, t, ks[0], ks[n])


# --- path decomposition --------------------------------------------------------


def _restricted(ks, potential, j, x_a, x_b):
    """Green's function of region j alone, vanishing on its walls."""
    k = ks[j]
    a, b = potential.walls(j)
    d = abs(x_a - x_b)
    if a is None and b is None:
        return cmath.exp(1j * k * d) / (1j * k)
    if a is None or b is None:
        s = b if a is None else a
        via = abs(x_a - s) + abs(s - x_b)
        return (cmath.exp(1j * k * d) - cmath.exp(1j * k * via)) / (1j * k)
    lo, hi = sorted((x_a, x_b))
    W = b - a
    return -2 * cmath.sin(k * (lo - a)) * cmath.sin(k * (b - hi)) / (k * cmath.sin(k * W))


def _boundary(ks, potential, j, x, wall):
    """Point-to-boundary kernel of region j, normalized to 1 at its exit ``wall``."""
    k = ks[j]
    a, b = potential.walls(j)
    if a is None or b is None:
        return cmath.exp(1j * k * abs(x - wall))
    s = cmath.sin(k * (b - a))
    if wall == a:
        return cmath.sin(k * (b - x)) / s
    return cmath.sin(k * (x - a)) / s


def _interface_source(potential, ks, s, x_b, levels):
    """Bounce sum for a unit source on interface s (1-based), out to ``levels``
    left-to-right turns, evaluated at x_b."""
    b = potential.breakpoints
    n = len(b)
    W = [None] + [b[j] - b[j - 1] for j in range(1, n)] + [None]
    prop = [None] + [cmath.exp(1j * ks[j] * W[j]) for j in range(1, n)] + [None]
    g = 2 / (1j * (ks[s - 1] + ks[s]))
    jb = potential.region(x_b)
    k = ks[jb]
    lw, rw = potential.walls(jb)
    right = [0j] * (n + 1)  # right-moving amplitude at the left wall of region j
    left = [0j] * (n + 1)  # left-moving amplitude at the right wall of region j
    right[s] = g
    left[s - 1] = g
    total = 0j
    for _ in range(levels + 1):
        for j in range(1, n):  # rightward sweep: reflections stay on this level
            if right[j] == 0:
                continue
            a = right[j] * prop[j]
            kl, kr = ks[j], ks[j + 1]
            right[j + 1] += 2 * kl / (kl + kr) * a
            left[j] += (kl - kr) / (kl + kr) * a
        nxt = [0j] * (n + 1)
        for j in range(n - 1, 0, -1):  # leftward sweep: reflections start the next level
            if left[j] == 0:
                continue
            a = left[j] * prop[j]
            kl, kr = ks[j - 1], ks[j]
            left[j - 1] += 2 * kr / (kl + kr) * a
            nxt[j] += (kr - kl) / (kl + kr) * a
        if lw is not None:
            total += right[jb] * cmath.exp(1j * k * (x_b - lw))
        if rw is not None:
            total += left[jb] * cmath.exp(1j * k * (rw - x_b))
        right = nxt
        left = [0j] * (n + 1)
    return total


def _decomposed(potential, ks, x_a, x_b, depth):
    i = potential.region(x_a)
    j = potential.region(x_b)
    value = _restricted(ks, potential, i, x_a, x_b) if i == j else 0j
    if depth == 0:
        return value
    b = potential.breakpoints
    for s in (i, i + 1):  # interfaces bounding region i (1-based)
        if 1 <= s <= len(b):
            wall = b[s - 1]
            value += _boundary(ks, potential, i, x_a, wall) * _interface_source(
                potential, ks, s, x_b, depth - 1)
    return value


def path_decomposition_green(potential, E, x_a, x_b, depth, tol=1e-10):
    """Restricted kernel of x_a's region plus boundary kernels times the bounce
    sum from each wall; ``depth`` counts retained recursion levels."""
    if isinstance(depth, bool) or int(depth) != depth or depth < 0:
        raise DomainError("depth must be a non-negative integer", "depth")
    depth = int(depth)
    ks = _ks(potential, E)
    value = _decomposed(potential, ks, float(x_a), float(x_b), depth)
    inc = 0.0
    if depth > 0:
        prev = _decomposed(potential, ks, float(x_a), float(x_b), depth - 1)
        inc = abs(value - prev)
    converged = depth == 0 or inc <= tol * max(abs(value), 1e-300)
    return GreenEval(value, float(E), float(x_a), float(x_b), f"recursion({depth})",
                     converged, inc)


# --- spectra -----------------------------------------------------------------


def _bounce_phase(E, L, V0):
    k = math.sqrt(2 * E)
    if math.isinf(V0):
        return 2 * k * L + 2 * math.pi  # r = -1 at both walls
    kappa = math.sqrt(2 * (V0 - E))
    return 2 * k * L - 4 * math.atan2(kappa, k)


def bounce_spectrum(L, V0, E_range=None, tol=1e-12, scan=2000):
    """Energies in ``E_range`` where 1 - r1 r2 e^{2ikL} = 0 for a well of width L.

    The well is 0 inside and V0 outside (``math.inf`` for hard walls); the
    bounce phase 2kL + 2 arg r is scanned for crossings of multiples of 2 pi,
    which are then bisected to ``tol`` in E.
    """
    if not L > 0:
        raise DomainError("L must be positive", "L")
    if not V0 > 0:
        raise DomainError("V0 must be positive", "V0")
    if E_range is None:
        if math.isinf(V0):
            raise DomainError("an infinite well needs an explicit E_range", "E_range")
        E_range = (0.0, V0)
    lo, hi = (float(t) for t in E_range)
    lo = max(lo, 0.0)
    if not math.isinf(V0):
        hi = min(hi, V0)
    if not hi > lo or not tol > 0:
        raise DomainError("E_range must be non-empty and tol positive", "E_range")
    # keep the scan off the endpoints where k or kappa vanish
    pad = (hi - lo) * 1e-15
    grid = [lo + pad + (hi - lo - 2 * pad) * t / scan for t in range(scan + 1)]
    phases = [_bounce_phase(e, L, V0) / (2 * math.pi) for e in grid]
    roots = []
    for e1, e2, p1, p2 in zip(grid, grid[1:], phases, phases[1:]):
        for m in range(math.floor(min(p1, p2)) + 1, math.floor(max(p1, p2)) + 1):
            a, b = e1, e2
            fa = p1 - m
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = _bounce_phase(mid, L, V0) / (2 * math.pi) - m
                if (fm > 0) == (fa > 0):
                    a, fa = mid, fm
                else:
                    b = mid
            roots.append(0.5 * (a + b))
    return roots
