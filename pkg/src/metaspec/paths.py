"""Path-level functionals: committors, hitting statistics, well processes.

Committor probabilities (hit minimum m_j before any other minimum) come from
exact absorbing-chain solves; Monte Carlo only ever cross-checks them.  The
eigenvector representation says a metastable eigenvector is, up to O(eps^alpha),
the committor-weighted combination of its values at the minima;
eigvec_residual measures exactly that defect.

Simulation samples each step by inverse CDF on precomputed cumulative rows,
with uniforms drawn in chunks from a counter-based Philox stream keyed by
the seed, so runs are reproducible and the hot loop can live in a compiled
kernel.  The well process classifies the path by wells with a debounce rule:
a switch only registers when the path comes within delta of the new well's
minimum, which suppresses chatter of jumps landing just across a barrier
and falling straight back.  Holding times are reported in rescaled time
t = k h eps^alpha, the clock in which the limit dynamics is a Markov chain
on the minima.
"""

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .mesh import t_max as _t_max

__all__ = ["PathStats", "WellRates", "committor", "committors", "eigvec_residual",
           "simulate", "return_time_stats", "well_process_rates"]

_CHUNK = 1 << 20
_SAMPLE_CAP = 10_000_000  # steps per return-time sample before flagging


@dataclass(frozen=True)
class PathStats:
    """Return-time samples and derived estimates from one start state."""

    seed: int
    n_samples: int
    start_index: int
    tau_samples: np.ndarray = field(repr=False)
    hit_freq: np.ndarray
    laplace: tuple  # ((u, mean exp(u tau)), ...)
    excess_frac: float  # fraction of samples beyond t_max steps
    t_max: int
    partial: bool  # some samples hit the step cap before returning

    def as_dict(self):
        return {
            "seed": self.seed,
            "n_samples": self.n_samples,
            "start_index": self.start_index,
            "tau_samples": self.tau_samples.tolist(),
            "hit_freq": self.hit_freq.tolist(),
            "laplace": [{"u": float(u), "estimate": float(v)} for u, v in self.laplace],
            "excess_frac": self.excess_frac,
            "t_max": self.t_max,
            "partial": self.partial,
        }


@dataclass(frozen=True)
class WellRates:
    """Estimated generator of the well process plus sampling diagnostics."""

    rates: np.ndarray
    ci_halfwidth: np.ndarray
    counts: np.ndarray
    occupation: np.ndarray
    horizon: float
    epsilon: float
    seed: int
    wide_ci: bool  # fewer than 10 transitions on some off-diagonal pair

    def as_dict(self):
        return {
            "rates": self.rates.tolist(),
            "ci_halfwidth": self.ci_halfwidth.tolist(),
            "counts": self.counts.tolist(),
            "occupation": self.occupation.tolist(),
            "horizon": self.horizon,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "wide_ci": self.wide_ci,
        }


def _transient_solve(P, rhs_cols):
    """Solve the absorbing-chain system on the non-minima block."""
    m = P.mesh
    n_states = m.n_states
    trans = np.setdiff1d(np.arange(n_states), m.minima_idx)
    A = np.eye(len(trans)) - P.matrix[np.ix_(trans, trans)]
    B = P.matrix[np.ix_(trans, m.minima_idx)] @ rhs_cols
    try:
        sol = lu_solve(lu_factor(A), B)
    except np.linalg.LinAlgError as ex:
        raise ArithmeticError(
            "transient block is singular; the chain does not absorb into the minima") from ex
    return trans, sol


def committors(P):
    """All committor probabilities at once, as an (N, n) column stack.

    Column j solves: 1 at m_j, 0 at the other minima, harmonic elsewhere.
    One LU factorization serves all wells.
    """
    m = P.mesh
    n = m.n_wells
    trans, sol = _transient_solve(P, np.eye(n))
    K = np.zeros((m.n_states, n))
    K[m.minima_idx, np.arange(n)] = 1.0
    K[trans] = sol
    return K


def committor(P, j):
    """Probability, per start state, of hitting m_j before the other minima."""
    if not 1 <= j <= P.mesh.n_wells:
        raise ValueError(f"well index {j} out of range 1..{P.mesh.n_wells}")
    return committors(P)[:, j - 1]


def eigvec_residual(P, ev):
    """Defect of the committor representation for one metastable eigenvector.

    Computes max over states of |psi_x - sum_j psi_{m_j} K_j(x)| with K the
    exact committors of P and psi the (already normalized) eigenvector of
    the report ev.
    """
    K = committors(P)
    psi = np.asarray(ev.vector)
    recon = K @ psi[P.mesh.minima_idx]
    return float(np.abs(psi - recon).max())


@numba.njit(cache=True)
def _step_kernel(C, cur, us, out):
    n = C.shape[1]
    for t in range(us.shape[0]):
        u = us[t]
        row = C[cur]
        lo, hi = 0, n - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if row[mid] > u:
                hi = mid
            else:
                lo = mid + 1
        cur = lo
        out[t] = cur
    return cur


@numba.njit(cache=True)
def _rates_kernel(C, dwell, us, cur, curw, counts, steps_in_well):
    n = C.shape[1]
    for t in range(us.shape[0]):
        u = us[t]
        row = C[cur]
        lo, hi = 0, n - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if row[mid] > u:
                hi = mid
            else:
                lo = mid + 1
        cur = lo
        steps_in_well[curw - 1] += 1
        j = dwell[cur]
        if j > 0 and j != curw:
            counts[curw - 1, j - 1] += 1
            curw = j
    return cur, curw


@numba.njit(cache=True)
def _return_kernel(C, min_well, x0, us, state, tau, hit, cap):
    # state = (sample index, current position, steps in current sample)
    n = C.shape[1]
    i, cur, k = state[0], state[1], state[2]
    for t in range(us.shape[0]):
        if i >= tau.shape[0]:
            break
        u = us[t]
        row = C[cur]
        lo, hi = 0, n - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if row[mid] > u:
                hi = mid
            else:
                lo = mid + 1
        cur = lo
        k += 1
        if min_well[cur] > 0 or k >= cap:
            tau[i] = k
            hit[i] = min_well[cur]
            i += 1
            cur = x0
            k = 0
    state[0], state[1], state[2] = i, cur, k


def _cumrows(P):
    C = np.cumsum(P.matrix, axis=1)
    C[:, -1] = 1.0 + 1e-12  # guard: a uniform can exceed the row total by dust
    return np.ascontiguousarray(C)


def _uniform_stream(seed):
    return np.random.Generator(np.random.Philox(seed))


def simulate(P, x0, steps, seed):
    """Path of state indices of length steps + 1, starting at index x0.

    Deterministic in (P, x0, steps, seed); each step inverts the current
    row's cumulative table at a Philox uniform.
    """
    if not (0 <= x0 < P.dim):
        raise ValueError(f"start index {x0} out of range")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    C = _cumrows(P)
    rng = _uniform_stream(seed)
    path = np.empty(steps + 1, dtype=np.int64)
    path[0] = x0
    cur = x0
    done = 0
    while done < steps:
        k = min(_CHUNK, steps - done)
        cur = _step_kernel(C, cur, rng.random(k), path[done + 1:done + 1 + k])
        done += k
    return path


def return_time_stats(P, x0, n_samples, seed, u_values=()):
    """Samples of the first return time to the minima set, from index x0.

    Returns PathStats with the raw step counts tau (first k >= 1 with the
    chain in a minimum), the frequency of which minimum was hit first, the
    empirical Laplace transform mean exp(u tau) at the supplied u values,
    and the fraction of samples exceeding the deterministic absorption
    horizon t_max.  A sample still running after ten million steps is cut
    off and flags the result partial.
    """
    m = P.mesh
    if not (0 <= x0 < P.dim):
        raise ValueError(f"start index {x0} out of range")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    C = _cumrows(P)
    min_well = np.zeros(P.dim, dtype=np.int64)
    min_well[m.minima_idx] = np.arange(1, m.n_wells + 1)
    tau = np.zeros(n_samples, dtype=np.int64)
    hit = np.zeros(n_samples, dtype=np.int64)
    state = np.array([0, x0, 0], dtype=np.int64)
    rng = _uniform_stream(seed)
    while state[0] < n_samples:
        _return_kernel(C, min_well, x0, rng.random(_CHUNK), state, tau, hit, _SAMPLE_CAP)
    partial = bool((hit == 0).any())
    ok = hit > 0
    freq = np.bincount(hit[ok], minlength=m.n_wells + 1)[1:] / max(ok.sum(), 1)
    lap = tuple((float(u), float(np.mean(np.exp(float(u) * tau)))) for u in u_values)
    tm = _t_max(m)
    return PathStats(seed=seed, n_samples=n_samples, start_index=x0, tau_samples=tau,
                     hit_freq=freq, laplace=lap, excess_frac=float((tau > tm).mean()),
                     t_max=tm, partial=partial)


def well_process_rates(P, x0, horizon_rescaled, seed):
    """Generator estimate for the process of wells visited by the chain.

    Runs ceil(horizon / (h eps^alpha)) steps from index x0, logs debounced
    well switches (a switch counts when the path gets within delta of the
    new well's minimum) and estimates rate i -> j as transition count over
    rescaled time spent in well i.  The diagonal is the negated row sum.
    ci_halfwidth holds 1.96 sqrt(count)/time normal-approximation half
    widths; fewer than 10 transitions on any off-diagonal pair sets
    wide_ci.
    """
    m = P.mesh
    if not (0 <= x0 < P.dim):
        raise ValueError(f"start index {x0} out of range")
    dt = P.h * P.epsilon ** P.alpha
    steps = int(np.ceil(horizon_rescaled / dt))
    if steps < 1:
        raise ValueError("horizon too short for a single step")
    C = _cumrows(P)
    n = m.n_wells
    dwell = np.zeros(P.dim, dtype=np.int64)
    for j, mi in enumerate(m.minima_idx, start=1):
        near = np.abs(m.states - m.states[mi]) <= m.delta
        dwell[near] = j
    counts = np.zeros((n, n), dtype=np.int64)
    steps_in_well = np.zeros(n, dtype=np.int64)
    cur = x0
    curw = int(m.wells[x0])
    rng = _uniform_stream(seed)
    done = 0
    while done < steps:
        k = min(_CHUNK, steps - done)
        cur, curw = _rates_kernel(C, dwell, rng.random(k), cur, curw, counts, steps_in_well)
        done += k
    time_in_well = steps_in_well * dt
    rates = np.zeros((n, n))
    ci = np.zeros((n, n))
    off = ~np.eye(n, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        rates[off] = (counts / time_in_well[:, None])[off]
        ci[off] = (1.96 * np.sqrt(np.maximum(counts, 1)) / time_in_well[:, None])[off]
    rates[np.isnan(rates)] = 0.0
    ci[np.isnan(ci)] = np.inf
    np.fill_diagonal(rates, -rates.sum(axis=1))
    return WellRates(rates=rates, ci_halfwidth=ci, counts=counts,
                     occupation=steps_in_well / max(steps, 1), horizon=float(horizon_rescaled),
                     epsilon=P.epsilon, seed=seed,
                     wide_ci=bool((counts[off] < 10).any()))
