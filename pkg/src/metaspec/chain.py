"""Transition matrices, scaled generators, and the inter-well limit generator.

The chain moves in one step from state x to the cell I_y hit by the drifted
and perturbed point x - h U'(x) + eps h^(1/alpha) L1; the outermost columns
absorb everything beyond the truncation range (reflection at the barriers
-R and R).  The scaled generator is (P - I) / (h eps^alpha); its diagonal is
assembled as the negated off-diagonal row sum, never as (p_xx - 1), because
at eps = 1e-5 the subtraction would lose nine digits and conservativity.

The limit generator is the n x n matrix of inter-well rates

    q_ij = (1/2) | |s_{j-1} - m_i|^-alpha - |s_j - m_i|^-alpha |,  i != j,

with s_0 = -inf and s_n = +inf (those terms vanish), and diagonal
-(1/2)(|s_{i-1} - m_i|^-alpha + |s_i - m_i|^-alpha).  The lumped-rate matrix
compresses a transition matrix onto the wells the same way and converges to
the limit generator at rate eps^alpha.

Row assembly is embarrassingly parallel; a thread pool sized by the
METASPEC_THREADS environment variable (default: cpu count) works the rows.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .stable import make_params, partition_probs

__all__ = ["StochasticMatrix", "Generator", "LimitGenerator",
           "transition_matrix", "generator", "limit_generator", "lumped_rates", "to_csv"]

_ROW_SUM_ABORT = 1e-9


def _workers():
    env = os.environ.get("METASPEC_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class StochasticMatrix:
    """Dense one-step transition probabilities over a mesh."""

    matrix: np.ndarray = field(repr=False)
    mesh: object
    alpha: float
    epsilon: float

    @property
    def h(self):
        return self.mesh.h

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Generator:
    """Scaled generator (P - I) / (h eps^alpha), exactly conservative."""

    matrix: np.ndarray = field(repr=False)
    mesh: object
    alpha: float
    epsilon: float

    @property
    def h(self):
        return self.mesh.h

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class LimitGenerator:
    """Inter-well jump rates between the n minima."""

    matrix: np.ndarray = field(repr=False)
    minima: tuple
    maxima: tuple
    alpha: float

    @property
    def n(self):
        return len(self.minima)


def transition_matrix(m, alpha, epsilon, params=None):
    """One-step transition matrix of the perturbed chain on mesh m.

    Row x holds the stable-law masses of the mesh cells around the drifted
    point x - h U'(x), with the first and last columns taking the tails
    beyond [-R, R).  Whatever tiny mass the quadrature loses (capped at
    1e-9, typically 1e-13) is folded into the diagonal so each row sums to
    1 at working precision.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if params is None:
        params = make_params(alpha)
    scale = epsilon * m.h ** (1.0 / alpha)
    breaks = m.edges[1:-1]
    land = m.landing()
    n = m.n_states

    def row(i):
        return partition_probs(breaks, land[i], scale, params)

    with ThreadPoolExecutor(max_workers=_workers()) as ex:
        rows = list(ex.map(row, range(n)))
    P = np.vstack(rows)
    dust = 1.0 - P.sum(axis=1)
    worst = np.abs(dust).max()
    if worst > _ROW_SUM_ABORT:
        i = int(np.argmax(np.abs(dust)))
        raise ArithmeticError(
            f"row {i} (state {m.states[i]}) sums to 1{-dust[i]:+.3e}; "
            f"stable-law evaluation is off beyond {_ROW_SUM_ABORT}")
    P[np.arange(n), np.arange(n)] += dust
    return StochasticMatrix(matrix=P, mesh=m, alpha=float(alpha), epsilon=float(epsilon))


def generator(P):
    """Scaled generator of a transition matrix, conservative by construction."""
    scale = 1.0 / (P.h * P.epsilon ** P.alpha)
    Q = P.matrix * scale
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Generator(matrix=Q, mesh=P.mesh, alpha=P.alpha, epsilon=P.epsilon)


def limit_generator(p, alpha):
    """Inter-well rate matrix of the potential's minima, n x n."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    minima = np.asarray(p.minima)
    n = len(minima)
    s = np.concatenate([[-np.inf], np.asarray(p.maxima), [np.inf]])
    Q = np.zeros((n, n))
    for i in range(n):
        with np.errstate(divide="ignore"):
            A = np.abs(s - minima[i]) ** -alpha  # A[0] = A[n] = 0
        for j in range(n):
            if j == i:
                Q[i, i] = -0.5 * (A[i] + A[i + 1])
            else:
                Q[i, j] = 0.5 * abs(A[j] - A[j + 1])
    return LimitGenerator(matrix=Q, minima=p.minima, maxima=p.maxima, alpha=float(alpha))


def lumped_rates(P):
    """Compression of a transition matrix onto the wells, as a rate matrix.

    Entry (i, j), i != j, is the total probability of jumping from the
    minimum m_i into well j, divided by h eps^alpha.  The diagonal is the
    negated off-diagonal row sum; by row stochasticity this equals the
    Kronecker-corrected own-well sum but costs no cancellation (the direct
    form subtracts numbers agreeing to nine digits at eps = 1e-5).
    """
    m = P.mesh
    n = m.n_wells
    scale = 1.0 / (P.h * P.epsilon ** P.alpha)
    out = np.zeros((n, n))
    for i, xi in enumerate(m.minima_idx):
        row = P.matrix[xi]
        for j in range(1, n + 1):
            if j != i + 1:
                out[i, j - 1] = row[m.wells == j].sum() * scale
        out[i, i] = -np.sum(out[i])
    return out


def to_csv(a):
    """Row-major CSV with 17 significant digits; accepts 1-D or 2-D arrays."""
    a = np.atleast_2d(np.asarray(a))
    return "\n".join(",".join(f"{v:.17e}" for v in row) for row in a) + "\n"
