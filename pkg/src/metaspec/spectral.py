"""Spectrum of the scaled generator and its metastable structure.

The full spectrum comes from the dense nonsymmetric eigensolver (balancing,
Hessenberg reduction, implicitly shifted QR, as LAPACK geev does); it is
always computed on the scaled generator directly, never on the transition
matrix and transformed afterwards, because the interesting eigenvalues of P
sit within unit roundoff of 1 and would come out as pure noise.

classify splits the spectrum into the n eigenvalues of smallest modulus
(the metastable cluster, with the near-zero eigenvalue snapped to exact 0
and its raw size kept as a residual) and the bulk, whose moduli diverge
like eps^-alpha; the gap ratio between the two is the quantitative handle
on metastability.  Eigenvectors come from inverse iteration on an LU
factorization and are normalized so the largest-modulus entry over the
minima states equals one; well_constancy measures how far such a vector is
from being constant on each well at the limit vector's level.

charpoly_check compares the characteristic polynomial of the scaled
generator, rescaled by (-eps^alpha h)^(N-n), against that of the n x n
limit generator.  Determinants only ever exist here as (sign, log
magnitude) pairs; a 200 x 200 matrix with entries of size 1e10 overflows
any direct determinant.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .chain import _workers, generator, limit_generator, transition_matrix

__all__ = ["SpectrumReport", "EigvecReport", "eigenvalues", "classify",
           "eigenvector", "well_constancy", "eigvec_analysis", "charpoly_check"]

_RESID_TOL = 1e-10
_MAX_INVIT = 50


def _c(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


@dataclass(frozen=True)
class SpectrumReport:
    """Spectrum split into metastable cluster and bulk."""

    all_eigenvalues: np.ndarray = field(repr=False)
    cluster_sigma1: np.ndarray
    bulk_sigma2: np.ndarray = field(repr=False)
    gap_ratio: float
    limit_eigenvalues: np.ndarray
    matched_pairs: tuple  # (cluster eigenvalue, limit eigenvalue, distance)
    zero_residual: float
    ambiguous_cluster: bool  # gap_ratio < 2: the modulus split is not trustworthy
    degenerate_pairs: tuple  # cluster pairs with relative gap < 1e-6

    def as_dict(self):
        return {
            "all_eigenvalues": [_c(z) for z in self.all_eigenvalues],
            "cluster_sigma1": [_c(z) for z in self.cluster_sigma1],
            "bulk_sigma2": [_c(z) for z in self.bulk_sigma2],
            "gap_ratio": self.gap_ratio,
            "limit_eigenvalues": [_c(z) for z in self.limit_eigenvalues],
            "matched_pairs": [{"eigenvalue": _c(a), "limit": _c(b), "distance": float(d)}
                              for a, b, d in self.matched_pairs],
            "zero_residual": self.zero_residual,
            "ambiguous_cluster": self.ambiguous_cluster,
            "degenerate_pairs": [[_c(a), _c(b)] for a, b in self.degenerate_pairs],
        }


@dataclass(frozen=True)
class EigvecReport:
    """One metastable eigenvector against its well-constant limit shape."""

    order: int
    eigenvalue: complex
    vector: np.ndarray = field(repr=False)
    limit_eigenvalue: complex
    limit_vector: np.ndarray
    well_constancy_error: float

    def as_dict(self):
        return {
            "order": self.order,
            "eigenvalue": _c(self.eigenvalue),
            "vector": [_c(z) for z in self.vector],
            "limit_eigenvalue": _c(self.limit_eigenvalue),
            "limit_vector": [_c(z) for z in self.limit_vector],
            "well_constancy_error": self.well_constancy_error,
        }


def eigenvalues(A):
    """All eigenvalues of a dense real or complex square matrix."""
    A = np.asarray(A)
    if not np.isfinite(A).all():
        raise ValueError("matrix has non-finite entries")
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as ex:
        raise ArithmeticError(f"QR iteration failed to converge: {ex}") from ex
    return lam.astype(complex)


def classify(spec, Q_limit):
    """Split a spectrum into the n smallest-modulus eigenvalues and the bulk.

    The smallest-modulus eigenvalue is snapped to exact 0 (its raw modulus
    is kept as zero_residual); the cluster is paired to the limit spectrum
    by repeatedly matching the globally closest pair.  gap_ratio below 2
    only sets a flag: far from the limit the modulus split is a heuristic,
    not a guarantee.
    """
    spec = np.asarray(spec, dtype=complex)
    lam_Q = eigenvalues(Q_limit.matrix)
    n = Q_limit.n
    if len(spec) < n:
        raise ValueError(f"need at least {n} eigenvalues, got {len(spec)}")
    order = np.argsort(np.abs(spec), kind="stable")
    sigma1 = spec[order[:n]].copy()
    sigma2 = spec[order[n:]]
    zero_residual = float(np.abs(sigma1[0]))
    sigma1[0] = 0.0
    if len(sigma2):
        gap = float(np.abs(sigma2).min() / np.abs(sigma1).max())
    else:
        gap = np.inf
    pairs = []
    left = list(sigma1)
    right = list(lam_Q[np.argsort(np.abs(lam_Q), kind="stable")])
    while left:
        dist = np.array([[abs(a - b) for b in right] for a in left])
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        pairs.append((left.pop(i), right.pop(j), float(dist[i, j])))
    degen = []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = sigma1[i], sigma1[j]
            scale = max(abs(a), abs(b))
            if scale > 0 and abs(a - b) / scale < 1e-6:
                degen.append((a, b))
    return SpectrumReport(
        all_eigenvalues=spec, cluster_sigma1=sigma1, bulk_sigma2=sigma2,
        gap_ratio=gap, limit_eigenvalues=lam_Q, matched_pairs=tuple(pairs),
        zero_residual=zero_residual, ambiguous_cluster=gap < 2.0,
        degenerate_pairs=tuple(degen))


def eigenvector(A, lam, norm_idx=None, seed=7):
    """Right eigenvector of A for the (approximate) eigenvalue lam.

    Inverse iteration with a partial-pivoted LU of A - lam I and a seeded
    random start, run until || A psi - lam psi || <= 1e-10 ||A|| ||psi||
    (Frobenius norm for A).  An exactly singular shift is nudged by one
    part in 1e-14.  The result is scaled so that the largest-modulus entry
    over norm_idx (default: all entries) equals exactly 1.
    """
    A = np.asarray(A, dtype=complex)
    N = A.shape[0]
    normA = np.linalg.norm(A)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(N) + 0j
    v /= np.linalg.norm(v)
    shift = complex(lam)
    for attempt in range(3):
        M = A - shift * np.eye(N)
        with np.errstate(all="ignore"), warnings.catch_warnings():
            # an exactly singular shift is expected for lam = 0; the
            # non-finite solve below triggers the nudge, no need to warn
            warnings.simplefilter("ignore", LinAlgWarning)
            try:
                lu = lu_factor(M, check_finite=False)
            except np.linalg.LinAlgError:
                lu = None
        if lu is not None and np.isfinite(lu[0]).all():
            break
        shift += (1e-14 * (abs(shift) + normA)) * (attempt + 1)
    else:
        raise ArithmeticError(f"cannot factor A - lambda I at lambda = {lam}")
    for _ in range(_MAX_INVIT):
        with np.errstate(all="ignore"):
            w = lu_solve(lu, v, check_finite=False)
        if not np.isfinite(w).all():
            # the shift hit the eigenvalue too exactly; restart nudged
            shift += 1e-14 * (abs(shift) + normA)
            return eigenvector(A, shift, norm_idx=norm_idx, seed=seed + 1)
        v = w / np.linalg.norm(w)
        resid = np.linalg.norm(A @ v - complex(lam) * v)
        if resid <= _RESID_TOL * normA * np.linalg.norm(v):
            idx = np.arange(N) if norm_idx is None else np.asarray(norm_idx)
            anchor = idx[np.argmax(np.abs(v[idx]))]
            return v / v[anchor]
    raise ArithmeticError(
        f"inverse iteration did not reach residual {_RESID_TOL:.0e} * ||A|| "
        f"in {_MAX_INVIT} steps at lambda = {lam} (last residual {resid:.3e})")


def well_constancy(vec, limit_vec, wells):
    """Sup-norm distance of an eigenvector from its well-constant limit.

    vec lives on the states, limit_vec on the wells (1-based indices in
    `wells`); both are expected under the minima-max normalization.
    """
    vec = np.asarray(vec)
    step = np.asarray(limit_vec)[np.asarray(wells) - 1]
    return float(np.abs(vec - step).max())


def eigvec_analysis(G, report, m):
    """EigvecReports for every matched metastable pair of a generator.

    Pairs are processed in increasing limit-eigenvalue modulus, so order 1
    is the zero mode.  Both the discrete and the limit eigenvector are
    normalized over the minima entries (for the limit generator every
    entry is a minimum).
    """
    out = []
    pairs = sorted(report.matched_pairs, key=lambda t: abs(t[1]))
    QL = limit_generator(m.potential, G.alpha)
    for i, (lam_eps, lam_Q, _) in enumerate(pairs, start=1):
        vec = eigenvector(G.matrix, lam_eps, norm_idx=m.minima_idx)
        lvec = eigenvector(QL.matrix, lam_Q)
        err = well_constancy(vec, lvec, m.wells)
        out.append(EigvecReport(order=i, eigenvalue=complex(lam_eps), vector=vec,
                                limit_eigenvalue=complex(lam_Q), limit_vector=lvec,
                                well_constancy_error=err))
    return out


def _slogdet_shifted(Q, lam):
    sign, logabs = np.linalg.slogdet(Q - lam * np.eye(Q.shape[0]))
    return sign, logabs


def charpoly_check(m, alpha, epsilon, lambdas, params=None):
    """Scaled characteristic polynomial of the generator against the limit.

    For each lambda returns (lambda, scaled, limit, abs_error) where
    scaled = (-eps^alpha h)^(N-n) det(Q_eps - lambda I), assembled in log
    space, and limit = det(Q - lambda I).  Overflow of the final
    combination is reported as an infinite error rather than an exception.
    """
    P = transition_matrix(m, alpha, epsilon, params=params)
    G = generator(P)
    QL = limit_generator(m.potential, alpha)
    N, n = G.dim, QL.n
    log_scale = (N - n) * np.log(epsilon ** alpha * m.h)
    sign_scale = (-1.0) ** (N - n)

    def one(lam):
        lam = complex(lam)
        s_eps, l_eps = _slogdet_shifted(G.matrix.astype(complex), lam)
        s_q, l_q = _slogdet_shifted(QL.matrix.astype(complex), lam)
        with np.errstate(over="ignore"):
            scaled = sign_scale * s_eps * np.exp(l_eps + log_scale)
            limit = s_q * np.exp(l_q)
        err = abs(scaled - limit) if np.isfinite(scaled) else np.inf
        return lam, scaled, limit, float(err)

    with ThreadPoolExecutor(max_workers=_workers()) as ex:
        return list(ex.map(one, lambdas))
