import numpy as np
import numpy.testing as npt
import pytest

from metaspec import paths, spectral


def test_committors_partition_of_unity(pipeline, mesh203):
    P, _ = pipeline.at(1e-3)
    K = paths.committors(P)
    assert K.shape == (203, 3)
    npt.assert_allclose(K.sum(axis=1), 1.0, rtol=0, atol=1e-10)
    assert K.min() >= -1e-12 and K.max() <= 1.0 + 1e-12
    # exact boundary data on the minima
    npt.assert_array_equal(K[mesh203.minima_idx], np.eye(3))


def test_committor_localization(pipeline, mesh203):
    # small-noise chains almost surely fall to their own minimum first
    P, _ = pipeline.at(1e-3)
    for j in (1, 2, 3):
        q = paths.committor(P, j)
        assert q[mesh203.wells == j].min() >= 0.99


def test_committor_rejects_bad_well(pipeline):
    P, _ = pipeline.at(1e-3)
    for j in (0, 4):
        with pytest.raises(ValueError):
            paths.committor(P, j)


def test_eigvec_residual_scaling(pipeline, mesh203, limitQ):
    # fidelity of the committor representation improves like eps^alpha
    expected = {
        0.03: (4.579094e-4, 1.547609e-3),
        0.01: (6.309746e-5, 2.147788e-4),
        3e-3: (7.225382e-6, 2.461585e-5),
    }
    r2s, r3s = [], []
    for eps, (e2, e3) in expected.items():
        P, G = pipeline.at(eps)
        rep = spectral.classify(spectral.eigenvalues(G.matrix), limitQ)
        reps = spectral.eigvec_analysis(G, rep, mesh203)
        r2 = paths.eigvec_residual(P, reps[1])
        r3 = paths.eigvec_residual(P, reps[2])
        npt.assert_allclose(r2, e2, rtol=1e-3)
        npt.assert_allclose(r3, e3, rtol=1e-3)
        r2s.append(r2)
        r3s.append(r3)
    le = np.log(list(expected))
    for r in (r2s, r3s):
        slope = np.polyfit(le, np.log(r), 1)[0]
        assert 0.75 * 1.8 <= slope <= 1.25 * 1.8


def test_simulate_deterministic_and_validated(pipeline):
    P, _ = pipeline.at(0.1)
    a = paths.simulate(P, 100, 500, seed=5)
    b = paths.simulate(P, 100, 500, seed=5)
    npt.assert_array_equal(a, b)
    c = paths.simulate(P, 100, 500, seed=6)
    assert (a != c).any()
    assert a[0] == 100 and len(a) == 501
    assert (0 <= a).all() and (a < P.dim).all()
    with pytest.raises(ValueError):
        paths.simulate(P, -1, 10, seed=0)
    with pytest.raises(ValueError):
        paths.simulate(P, 0, 0, seed=0)


def test_simulate_follows_drift_orbit_at_tiny_eps(pipeline, mesh203):
    # at eps = 1e-5 each step leaves the deterministic map with
    # probability < 1e-6; this seed never does over 80 steps
    P, _ = pipeline.at(1e-5)
    path = paths.simulate(P, 5, 80, seed=9)
    orbit = [5]
    for _ in range(80):
        orbit.append(mesh203.target_idx[orbit[-1]])
    npt.assert_array_equal(path, orbit)
    assert path[-1] == mesh203.minima_idx[0]


def test_return_time_stats_against_committors(pipeline):
    P, _ = pipeline.at(0.1)
    x0 = 60
    K = paths.committors(P)
    st = paths.return_time_stats(P, x0, 20000, seed=42, u_values=(-0.5, -1.0))
    assert st.n_samples == 20000 and st.start_index == x0
    assert not st.partial
    assert st.tau_samples.min() >= 1
    npt.assert_allclose(st.hit_freq.sum(), 1.0, rtol=0, atol=1e-12)
    # binomial agreement with the exact absorption law, per well
    sig = np.sqrt(K[x0] * (1 - K[x0]) / st.n_samples)
    assert (np.abs(st.hit_freq - K[x0]) <= 4.0 * sig).all()
    # derived statistics recompute from the raw samples
    assert st.excess_frac == (st.tau_samples > st.t_max).mean()
    for u, est in st.laplace:
        npt.assert_allclose(est, np.exp(u * st.tau_samples).mean(), rtol=1e-13)
        assert 0.0 < est < 1.0


def test_return_time_stats_reproducible(pipeline):
    P, _ = pipeline.at(0.1)
    a = paths.return_time_stats(P, 60, 500, seed=7)
    b = paths.return_time_stats(P, 60, 500, seed=7)
    npt.assert_array_equal(a.tau_samples, b.tau_samples)
    npt.assert_array_equal(a.hit_freq, b.hit_freq)
    c = paths.return_time_stats(P, 60, 500, seed=8)
    assert (a.tau_samples != c.tau_samples).any()


def test_well_process_rates_structure(pipeline, mesh203):
    P, _ = pipeline.at(0.1)
    W = paths.well_process_rates(P, mesh203.minima_idx[1], 5.0, seed=1)
    off = W.rates.copy()
    np.fill_diagonal(off, 0.0)
    assert (off >= 0.0).all()
    assert (off.sum(axis=1) + np.diag(W.rates) == 0.0).all()
    npt.assert_allclose(W.occupation.sum(), 1.0, rtol=1e-12)
    assert (np.diag(W.counts) == 0).all()
    # a 5-unit horizon sees at most a couple of switches
    assert W.wide_ci
    assert W.epsilon == 0.1 and W.seed == 1 and W.horizon == 5.0
    with pytest.raises(ValueError):
        paths.well_process_rates(P, mesh203.minima_idx[1], 0.0, seed=1)


def test_path_stats_round_trips_to_dict(pipeline):
    P, _ = pipeline.at(0.1)
    st = paths.return_time_stats(P, 60, 50, seed=3, u_values=(-1.0,))
    d = st.as_dict()
    assert d["n_samples"] == 50 and len(d["tau_samples"]) == 50
    assert d["laplace"][0]["u"] == -1.0
    W = paths.well_process_rates(P, 60, 5.0, seed=3)
    dw = W.as_dict()
    assert np.array(dw["rates"]).shape == (3, 3)
    assert isinstance(dw["wide_ci"], bool)
