"""Multi-well potentials with validated extrema.

A potential is supplied as a callable pair (U, U') together with the declared
minima m_1 < ... < m_n and interior maxima s_1 < ... < s_{n-1}; construction
validates the declarations (interleaving, nondegeneracy, strict drift sign
between consecutive extrema) instead of root-finding.  Everything downstream
only ever evaluates U' and reads the extrema, so potentials are cheap,
immutable and freely shareable.

Three constructors cover the CLI surface: the builtin three-well example
(unit slopes away from the extrema, linear derivative across a small
neighbourhood of each), polynomials given by coefficients, and piecewise
linear interpolants loaded from a two-column breakpoint table.
"""

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Potential", "make_potential", "well_index", "example_potential",
           "from_polynomial", "from_breakpoints"]

_NONDEG_STEP = 1e-5
_SIGN_SAMPLES = 33


@dataclass(frozen=True)
class Potential:
    """Validated multi-well potential; use make_potential to construct."""

    eval: object
    deriv: object
    minima: tuple
    maxima: tuple
    # interior points where U' is not differentiable; finite-difference
    # consistency checks must keep clear of these
    kinks: tuple = field(default=())

    @property
    def n(self):
        return len(self.minima)


def _check_sign(du, lo, hi, want, label):
    """U' must hold a strict sign on the open interval (lo, hi)."""
    pts = lo + (hi - lo) * (np.arange(1, _SIGN_SAMPLES + 1) / (_SIGN_SAMPLES + 1.0))
    vals = np.asarray([float(du(t)) for t in pts])
    bad = vals * want <= 0.0
    if bad.any():
        t = pts[bad][0]
        raise ValueError(
            f"potential rejected at {label}: U'({t:.6g}) = {vals[bad][0]:.3g}, "
            f"expected sign {'+' if want > 0 else '-'} on ({lo:.6g}, {hi:.6g})")


def make_potential(u, du, minima, maxima, kinks=()):
    """Validate declared extrema of the callable pair (u, du) and wrap them.

    Checks, with a diagnostic naming the first offending extremum:
    interleaving m_1 < s_1 < m_2 < ... < m_n, second-difference convexity
    sign at every extremum (a V- or A-corner passes, so piecewise-linear
    examples need no special casing), and strict drift sign on every open
    interval between consecutive extrema.
    """
    minima = tuple(float(m) for m in minima)
    maxima = tuple(float(s) for s in maxima)
    if len(minima) < 2:
        raise ValueError(f"need at least 2 minima, got {len(minima)}")
    if len(maxima) != len(minima) - 1:
        raise ValueError(
            f"{len(minima)} minima require {len(minima) - 1} interior maxima, got {len(maxima)}")
    inter = [x for pair in zip(minima, maxima + (None,)) for x in pair if x is not None]
    for a, b in zip(inter, inter[1:]):
        if not a < b:
            raise ValueError(f"extrema not interleaved: {a} !< {b}")
    span = minima[-1] - minima[0]
    e = _NONDEG_STEP * max(1.0, span)
    for i, m in enumerate(minima, start=1):
        dd = (float(u(m + e)) - 2.0 * float(u(m)) + float(u(m - e))) / e ** 2
        if not dd > 0.0:
            raise ValueError(f"minimum m_{i} = {m} is degenerate: second difference {dd:.3g} <= 0")
    for i, s in enumerate(maxima, start=1):
        dd = (float(u(s + e)) - 2.0 * float(u(s)) + float(u(s - e))) / e ** 2
        if not dd < 0.0:
            raise ValueError(f"maximum s_{i} = {s} is degenerate: second difference {dd:.3g} >= 0")
    for i in range(len(minima)):
        m = minima[i]
        if i > 0:
            _check_sign(du, maxima[i - 1], m, -1.0, f"(s_{i}, m_{i + 1})")
        if i < len(maxima):
            _check_sign(du, m, maxima[i], +1.0, f"(m_{i + 1}, s_{i + 1})")
    _check_sign(du, minima[0] - max(1.0, span / 4), minima[0], -1.0, "left of m_1")
    _check_sign(du, minima[-1], minima[-1] + max(1.0, span / 4), +1.0, f"right of m_{len(minima)}")
    return Potential(eval=u, deriv=du, minima=minima, maxima=maxima,
                     kinks=tuple(float(k) for k in kinks))


def well_index(x, p):
    """Index i (1-based) of the well [s_{i-1}, s_i) containing x.

    Interior maxima belong to the well on their right (left-closed
    convention); the outer boundaries are s_0 = -inf, s_n = +inf, so every
    real x has a well.
    """
    return bisect_right(p.maxima, x) + 1


def _piecewise_linear_derivative(knots_x, knots_v):
    """Callable pair (U, U') for U' linear between knots, constant outside.

    U is the exact integral of the interpolant (piecewise quadratic),
    anchored at U(knots_x[0]) = 0; the trapezoid rule is exact here.
    """
    kx = np.asarray(knots_x, dtype=float)
    kv = np.asarray(knots_v, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(np.diff(kx) * (kv[:-1] + kv[1:]) / 2.0)])
    slopes = np.diff(kv) / np.diff(kx)

    def du(x):
        return np.interp(x, kx, kv)

    def u(x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(kx, x, side="right") - 1, 0, len(kx) - 2)
        t = x - kx[i]
        inside = cum[i] + t * kv[i] + 0.5 * slopes[i] * t ** 2
        below = kv[0] * (x - kx[0])
        above = cum[-1] + kv[-1] * (x - kx[-1])
        out = np.where(x < kx[0], below, np.where(x >= kx[-1], above, inside))
        return out if out.ndim else float(out)

    return u, du


def example_potential(halfwidth=0.1):
    """Builtin three-well potential of the worked example.

    Minima -4.015, 0.468, 3.966 and maxima -1.034, 1.921; U' = -+1 outside
    a neighbourhood of each extremum and linear inside it.  `halfwidth` is
    the neighbourhood half-width; it must stay below half the smallest
    spacing between extrema so the unit-slope plateaus exist.
    """
    minima = (-4.015, 0.468, 3.966)
    maxima = (-1.034, 1.921)
    ext = sorted(minima + maxima)
    gap = min(b - a for a, b in zip(ext, ext[1:]))
    if not 0.0 < halfwidth < gap / 2.0:
        raise ValueError(f"halfwidth must lie in (0, {gap / 2.0:.4g}), got {halfwidth}")
    kx, kv = [], []
    sign = -1.0  # U' approaching m_1 from the left
    for e in ext:
        kx += [e - halfwidth, e, e + halfwidth]
        kv += [sign, 0.0, -sign]
        sign = -sign
    u, du = _piecewise_linear_derivative(kx, kv)
    return make_potential(u, du, minima, maxima, kinks=tuple(kx))


def from_polynomial(coeffs):
    """Potential from polynomial coefficients (ascending powers).

    Critical points come from the exact derivative polynomial's real roots,
    classified by the sign of U'' there; the usual validation then runs on
    the result.  The polynomial must start and end in a rising tail with at
    least two minima, i.e. be a genuine multi-well shape.
    """
    poly = np.polynomial.Polynomial(list(coeffs))
    dpoly = poly.deriv()
    ddpoly = dpoly.deriv()
    roots = dpoly.roots()
    crit = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-9 * (1.0 + abs(r)))
    minima = [x for x in crit if ddpoly(x) > 0]
    maxima = [x for x in crit if ddpoly(x) < 0]
    if len(minima) < 2:
        raise ValueError(f"polynomial has {len(minima)} minima, need at least 2: {list(coeffs)}")
    return make_potential(poly, dpoly, minima, maxima)


def from_breakpoints(table):
    """Potential from a piecewise-linear breakpoint table.

    `table` is a sequence of (x, U(x)) rows (or a 2-column array) with
    strictly increasing x.  U' is the segment slope, extrema are the
    breakpoints where the slope changes sign, and U' is defined as 0 there
    so minima are exact fixed points of the deterministic motion.
    """
    arr = np.asarray(table, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ValueError(f"breakpoint table must be K x 2 with K >= 4, got shape {arr.shape}")
    bx, bu = arr[:, 0], arr[:, 1]
    if not (np.diff(bx) > 0).all():
        raise ValueError("breakpoint abscissae must be strictly increasing")
    slopes = np.diff(bu) / np.diff(bx)
    if slopes[0] >= 0 or slopes[-1] <= 0:
        raise ValueError("outer segments must slope downward on the left, upward on the right")
    flips = np.nonzero(slopes[:-1] * slopes[1:] < 0)[0]
    minima = [float(bx[i + 1]) for i in flips if slopes[i] < 0]
    maxima = [float(bx[i + 1]) for i in flips if slopes[i] > 0]
    ext = np.asarray(sorted(minima + maxima))

    def u(x):
        x = np.asarray(x, dtype=float)
        inside = np.interp(x, bx, bu)
        below = bu[0] + slopes[0] * (x - bx[0])
        above = bu[-1] + slopes[-1] * (x - bx[-1])
        out = np.where(x < bx[0], below, np.where(x > bx[-1], above, inside))
        return out if out.ndim else float(out)

    def du(x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(bx, x, side="right") - 1, 0, len(slopes) - 1)
        out = slopes[i]
        at_ext = np.isin(x, ext)
        out = np.where(at_ext, 0.0, out)
        return out if out.ndim else float(out)

    return make_potential(u, du, minima, maxima, kinks=tuple(float(b) for b in bx))
