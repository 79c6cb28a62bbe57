"""Finite state space and interval partition for the discrete dynamics.

A Mesh is an ordered set of states x with a partition of [-R, R) into
half-open cells I_x = [a_x, b_x), one state strictly inside each cell, all
minima of the potential among the states, and all barriers (the interior
maxima plus the truncation points -R and R) among the cell endpoints.  The
structural requirement that makes the deterministic motion nontrivial is the
displacement condition: for every non-minimum state the one-step drift
x - h U'(x) must leave the state's own cell.  The map T sending x to the
state of the cell the drift lands in is then a contraction onto the minima:
orbits are monotone and absorbed in a minimum cell after finitely many steps.

Two constructions are provided.  build_uniform tiles each well with equal
cells of width close to 2R/N (the interior maxima are cell boundaries
exactly), puts states at the centers and replaces the center of each
minimum-containing cell by the minimum itself; it is the mesh of the
numerical experiments.
build_adaptive follows the constructive recipe behind the existence proof:
cells around each minimum of width delta/2, then successive drift pre-images
z_1, z_2, ... marching from each minimum cell toward the enclosing barriers,
each pre-image stretch subdivided into cells with states at midpoints.  Both
run the same validation pass; every invariant here is machine-checked after
every build.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .potential import well_index

__all__ = ["Mesh", "MeshError", "build_uniform", "build_adaptive",
           "t_max", "min_clearance", "to_table"]


class MeshError(ValueError):
    """A constructed mesh violates a structural invariant."""


@dataclass(frozen=True)
class Mesh:
    """Immutable state set over [-R, R); use the build_* constructors.

    edges has one more entry than states; cell i is [edges[i], edges[i+1]).
    barriers holds the n+1 well boundaries [-R, s_1, ..., s_{n-1}, R]; both
    constructions realize the interior maxima as cell endpoints exactly.
    wells and target_idx are per-state arrays; minima_idx locates the
    potential's minima within states.
    """

    states: np.ndarray
    edges: np.ndarray
    h: float
    delta: float
    gamma: float
    R: float
    potential: object
    wells: np.ndarray = field(repr=False)
    minima_idx: np.ndarray = field(repr=False)
    barriers: np.ndarray = field(repr=False)
    target_idx: np.ndarray = field(repr=False)

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_wells(self):
        return len(self.minima_idx)

    def landing(self):
        """Drift image x - h U'(x) of every state."""
        return self.states - self.h * np.asarray(self.potential.deriv(self.states))

    def well_of(self, x):
        """Well index of a real point, by this mesh's own barriers."""
        return int(np.searchsorted(self.barriers[1:-1], x, side="right")) + 1

    def target(self, x):
        """State T(x) reached by the drift from state x."""
        i = int(np.searchsorted(self.states, x))
        if i >= len(self.states) or self.states[i] != x:
            raise ValueError(f"{x} is not a state of this mesh")
        return float(self.states[self.target_idx[i]])


def _cell_of(edges, y):
    """Cell index containing y; a point on a boundary belongs to the right cell."""
    return np.searchsorted(edges, y, side="right") - 1


def _validate(m):
    e, s = m.edges, m.states
    if not (np.diff(e) > 0).all():
        raise MeshError("cell endpoints not strictly increasing")
    if e[0] != -m.R or e[-1] != m.R:
        raise MeshError(f"partition covers [{e[0]}, {e[-1]}), expected [{-m.R}, {m.R})")
    if not ((s > e[:-1]) & (s < e[1:])).all():
        bad = int(np.argmin((s > e[:-1]) & (s < e[1:])))
        raise MeshError(f"state {s[bad]} not strictly inside its cell [{e[bad]}, {e[bad + 1]})")
    wmax = np.diff(e).max()
    if wmax > m.delta / 2 * (1 + 1e-12):
        raise MeshError(f"cell width {wmax} exceeds delta/2 = {m.delta / 2}")
    if 1.0 / m.R + m.h + m.delta > m.gamma * (1 + 1e-12):
        raise MeshError(f"budget violated: 1/R + h + delta = "
                        f"{1.0 / m.R + m.h + m.delta} > gamma = {m.gamma}")
    for i, m_i in zip(m.minima_idx, m.potential.minima):
        if s[i] != m_i:
            raise MeshError(f"minimum {m_i} missing from states (found {s[i]} at slot {i})")
    for b in m.barriers:
        j = np.searchsorted(e, b)
        if j >= len(e) or e[j] != b:
            raise MeshError(f"barrier {b} is not a cell endpoint")
    if np.isin(m.barriers[1:-1], s).any():
        raise MeshError("an interior barrier coincides with a state")
    land = m.landing()
    if (land < e[0]).any() or (land >= e[-1]).any():
        bad = s[(land < e[0]) | (land >= e[-1])]
        raise MeshError(f"drift leaves [-R, R) from states {bad[:5]}")
    is_min = np.zeros(len(s), dtype=bool)
    is_min[m.minima_idx] = True
    own = (land >= e[:-1]) & (land < e[1:])
    stuck = own & ~is_min
    if stuck.any():
        bad = s[stuck]
        raise MeshError(
            f"displacement condition fails at {stuck.sum()} states (drift does not leave "
            f"the cell), e.g. {bad[:5]}; increase h or refine the mesh")
    if (m.target_idx[m.minima_idx] != m.minima_idx).any():
        raise MeshError("a minimum is not a fixed point of T")
    if (m.wells[m.target_idx] != m.wells).any():
        bad = s[m.wells[m.target_idx] != m.wells]
        raise MeshError(f"drift crosses a barrier from states {bad[:5]}")


def _finish(states, edges, h, delta, gamma, R, p, wells, barriers):
    states = np.asarray(states, dtype=float)
    edges = np.asarray(edges, dtype=float)
    minima_idx = np.searchsorted(states, p.minima)
    land = states - h * np.asarray(p.deriv(states))
    target_idx = _cell_of(edges, land)
    m = Mesh(states=states, edges=edges, h=float(h), delta=float(delta),
             gamma=float(gamma), R=float(R), potential=p,
             wells=np.asarray(wells, dtype=int), minima_idx=minima_idx,
             barriers=np.asarray(barriers, dtype=float), target_idx=target_idx)
    _validate(m)
    return m


def build_uniform(p, R, N, h):
    """N near-equal cells over [-R, R), states at centers, maxima on edges.

    The interval is split at the interior maxima and each band is tiled
    with equal cells of width as close to 2R/N as the band allows, N cells
    in total (largest-remainder apportionment).  Exact barrier placement
    matters: the metastable eigenvalues of the scaled generator converge
    to the rates of whatever barriers the mesh realizes, and a barrier
    moved by even half a cell shifts them far beyond the eigenvalue
    tolerances this mesh is used for.  Each minimum replaces the center of
    the cell containing it (it must be interior to that cell).  The
    displacement condition is validated and fails loudly when h |U'|
    cannot clear half a cell.
    """
    if not (R > 0 and N >= 3 and h > 0):
        raise ValueError(f"need R > 0, N >= 3, h > 0, got {R}, {N}, {h}")
    if not (-R < p.maxima[0] and p.maxima[-1] < R and -R < p.minima[0] and p.minima[-1] < R):
        raise MeshError(f"extrema of the potential do not fit inside [{-R}, {R})")
    w = 2.0 * R / N
    bands = np.concatenate([[-R], np.asarray(p.maxima), [R]])
    ideal = np.diff(bands) / w
    counts = np.floor(ideal).astype(int)
    for _ in range(N - counts.sum()):
        counts[np.argmax(ideal - counts)] += 1
    if (counts < 1).any():
        raise MeshError(f"N = {N} leaves a well without cells (band counts {counts})")
    edges = np.concatenate([np.linspace(bands[i], bands[i + 1], counts[i] + 1)[:-1]
                            for i in range(len(counts))] + [[R]])
    states = (edges[:-1] + edges[1:]) / 2.0
    wells = np.repeat(np.arange(1, len(counts) + 1), counts)
    for m_i in p.minima:
        k = _cell_of(edges, m_i)
        if not edges[k] < m_i < edges[k + 1]:
            raise MeshError(f"minimum {m_i} falls on a cell boundary; change N or R")
        states[k] = m_i
    delta = 2.0 * np.diff(edges).max()
    gamma = 1.0 / R + h + delta
    return _finish(states, edges, h, delta, gamma, R, p, wells, bands)


def _subdivide(lo, hi, maxw):
    """Edges of equal cells covering [lo, hi), width at most maxw.

    The cell count is forced odd: chunks map onto each other under the
    drift, and for a piecewise-linear drift the map sends midpoints of
    equal subdivisions exactly onto midpoints (odd counts) or exactly onto
    cell boundaries (even counts).  Odd counts keep every landing point
    strictly inside a cell, so the clearance D stays positive.
    """
    ncells = max(1, int(np.ceil((hi - lo) / maxw - 1e-12)))
    if ncells % 2 == 0:
        ncells += 1
    return np.linspace(lo, hi, ncells + 1)


def _march(g, start, inset, barrier, direction, maxw):
    """Cells covering the stretch from `start` to `barrier` by drift pre-images.

    Marches in `direction` (+1 right, -1 left) from start: each chunk runs
    between consecutive solutions of g(z_next) = z_prev, cut off at `inset`
    (the barrier pulled back by delta/4, where the drift still traps), and
    is subdivided into cells of width at most maxw with states at the
    midpoints.  The outermost cell is then stretched to touch `barrier`;
    its state keeps the pre-extension midpoint, so the drift still exits
    the cell.  Returns (cell_edges, states), ordered left to right.
    """
    pieces = []
    z_prev = start
    while True:
        # a root of g(z) = z_prev exists inside the remaining stretch iff g
        # at the inset overshoots z_prev (g is increasing); else this chunk
        # is the last one and runs to the inset
        if direction > 0:
            done = g(inset) - z_prev <= 0.0
        else:
            done = g(inset) - z_prev >= 0.0
        if done:
            z_next = inset
        else:
            a, b = (z_prev, inset) if direction > 0 else (inset, z_prev)
            z_next = brentq(lambda t: g(t) - z_prev, a, b, xtol=1e-14, rtol=8.9e-16)
        chunk = (z_prev, z_next) if direction > 0 else (z_next, z_prev)
        if chunk[1] > chunk[0]:
            pieces.append(_subdivide(chunk[0], chunk[1], maxw))
        if done:
            break
        z_prev = z_next
    if not pieces:
        raise MeshError(f"empty stretch between {start} and {barrier}")
    if direction < 0:
        pieces.reverse()
    cell_edges = np.concatenate([pc if i == 0 else pc[1:] for i, pc in enumerate(pieces)])
    states = (cell_edges[:-1] + cell_edges[1:]) / 2.0
    if direction > 0:
        cell_edges[-1] = barrier
    else:
        cell_edges[0] = barrier
    return cell_edges, states


def build_adaptive(p, gamma):
    """Mesh by the constructive pre-image recipe, for a given budget gamma.

    Chooses R strictly above 3/gamma and the outer minima, delta strictly
    under gamma/3 and an eighth of the smallest extremum spacing, and the
    largest h = gamma / 3 / 2^k under which the drift traps each stretch
    between consecutive extrema inside its well (checked on a dense sample,
    together with monotonicity of z - h U'(z), so pre-images are unique).
    Around each minimum sits a cell of width delta/2; the rest of each well
    is covered marching pre-image chunks toward the barriers, subdivided
    into cells of width at most delta/4 with states at midpoints, the cell
    at each barrier stretched to touch it.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    minima = np.asarray(p.minima)
    maxima = np.asarray(p.maxima)
    R = max(3.0 / gamma, abs(minima[0]), abs(minima[-1])) + 1.0
    ext = np.sort(np.concatenate([minima, maxima]))
    delta = 0.999 * min(gamma / 3.0, np.diff(ext).min() / 8.0)
    bar = np.concatenate([[-R], maxima, [R]])

    def g_of(h):
        return lambda t: t - h * float(p.deriv(t))

    def traps(h):
        grid = np.linspace(-R, R, 4097)
        gg = grid - h * np.asarray(p.deriv(grid))
        if not (np.diff(gg) > 0).all():
            return False
        for i, m_i in enumerate(minima):
            for lo, hi, tlo, thi in (
                    (bar[i] + delta / 4, m_i - delta / 4, bar[i], m_i),
                    (m_i + delta / 4, bar[i + 1] - delta / 4, m_i, bar[i + 1])):
                t = np.linspace(lo, hi, 513)
                gt = t - h * np.asarray(p.deriv(t))
                if (gt < tlo).any() or (gt > thi).any():
                    return False
        return True

    h = gamma / 3.0
    for _ in range(60):
        if traps(h):
            break
        h /= 2.0
    else:
        raise MeshError(f"no admissible time step under gamma = {gamma}: "
                        f"drift cannot be trapped within wells")

    g = g_of(h)
    all_edges = []
    all_states = []
    all_wells = []
    for i, m_i in enumerate(minima):
        lo_cell = m_i - delta / 4
        hi_cell = m_i + delta / 4
        le, ls = _march(g, lo_cell, bar[i] + delta / 4, bar[i], -1, delta / 4)
        re, rs = _march(g, hi_cell, bar[i + 1] - delta / 4, bar[i + 1], +1, delta / 4)
        # stitch: left stretch, the minimum cell, right stretch share endpoints
        seg_edges = np.concatenate([le, [hi_cell], re[1:]])
        seg_states = np.concatenate([ls, [m_i], rs])
        if all_edges:
            seg_edges = seg_edges[1:]
        all_edges.append(seg_edges)
        all_states.append(seg_states)
        all_wells.append(np.full(len(seg_states), i + 1, dtype=int))
    edges = np.concatenate(all_edges)
    states = np.concatenate(all_states)
    wells = np.concatenate(all_wells)
    return _finish(states, edges, h, delta, gamma, R, p, wells, bar)


def t_max(m):
    """Largest number of drift steps any state needs to reach a minimum.

    Also asserts what makes the count meaningful: orbits are monotone in
    the state ordering and every orbit is absorbed (a cycle off the minima
    set means the mesh is structurally broken).
    """
    n = m.n_states
    depth = np.full(n, -1, dtype=np.int64)
    depth[m.minima_idx] = 0
    for x0 in range(n):
        if depth[x0] >= 0:
            continue
        path = []
        x = x0
        while depth[x] < 0:
            depth[x] = -2  # on the current path
            path.append(x)
            nxt = m.target_idx[x]
            if depth[nxt] == -2:
                raise MeshError(f"drift orbit cycles without reaching a minimum, "
                                f"e.g. through state {m.states[nxt]}")
            x = nxt
        deltas = np.diff(np.asarray(path + [x]))
        if not ((deltas >= 0).all() or (deltas <= 0).all()):
            raise MeshError(f"drift orbit from {m.states[x0]} is not monotone")
        d = depth[x]
        for y in reversed(path):
            d += 1
            depth[y] = d
    return max(1, int(depth.max()))


def min_clearance(m):
    """Smallest distance from any drift landing point to its cell's endpoints."""
    land = m.landing()
    j = m.target_idx
    d = np.minimum(land - m.edges[j], m.edges[j + 1] - land)
    val = float(d.min())
    if val < 1e-14:
        k = int(np.argmin(d))
        raise MeshError(f"drift from state {m.states[k]} lands on a cell boundary "
                        f"(clearance {val}); the mesh is degenerate")
    return val


def to_table(m):
    """Text table (state, a, b, well, target-index), one row per state."""
    lines = ["# state a b well target"]
    for i in range(m.n_states):
        lines.append(f"{m.states[i]:.17g} {m.edges[i]:.17g} {m.edges[i + 1]:.17g} "
                     f"{m.wells[i]} {m.target_idx[i]}")
    return "\n".join(lines) + "\n"
