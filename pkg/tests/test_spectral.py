import numpy as np
import numpy.testing as npt
import pytest

from metaspec import spectral

# limit spectrum of the builtin example at alpha = 1.8, by decreasing value;
# inverse iteration needs the shift accurate to ~1e-11, so full precision
LIMIT_EIGS = np.array([0.0, -0.12438393245106334, -0.5791924820845709])


def test_eigenvalues_identity():
    lam = spectral.eigenvalues(np.eye(5))
    npt.assert_array_equal(np.sort_complex(lam), np.ones(5))


def test_eigenvalues_exact_conjugate_pair():
    # 90-degree rotation: eigenvalues are exactly +-i, paired bitwise
    lam = np.sort_complex(spectral.eigenvalues([[0.0, -1.0], [1.0, 0.0]]))
    npt.assert_array_equal(lam, np.array([-1j, 1j]))


def test_eigenvalues_trace_det():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((6, 6))
    lam = spectral.eigenvalues(A)
    npt.assert_allclose(lam.sum(), np.trace(A), rtol=0, atol=1e-12)
    npt.assert_allclose(np.prod(lam), np.linalg.det(A), rtol=1e-10)
    # real input: spectrum closed under conjugation
    npt.assert_allclose(np.sort_complex(lam), np.sort_complex(lam.conj()),
                        rtol=0, atol=1e-13)


def test_eigenvalues_rejects_nonfinite():
    with pytest.raises(ValueError):
        spectral.eigenvalues([[1.0, np.nan], [0.0, 1.0]])


def test_classify_at_moderate_eps(pipeline, limitQ):
    _, G = pipeline.at(0.01)
    rep = spectral.classify(spectral.eigenvalues(G.matrix), limitQ)
    cl = np.sort_complex(rep.cluster_sigma1)
    npt.assert_allclose(cl.real, [-0.57934043, -0.12442156, 0.0],
                        rtol=0, atol=1e-7)
    npt.assert_array_equal(cl.imag, np.zeros(3))
    assert rep.zero_residual <= 1e-10
    assert max(d for _, _, d in rep.matched_pairs) <= 1.5e-4
    npt.assert_allclose(rep.gap_ratio, 3.191045e4, rtol=1e-3)
    assert not rep.ambiguous_cluster
    assert rep.degenerate_pairs == ()
    assert len(rep.bulk_sigma2) == 200


def test_classify_refines_toward_limit(pipeline, limitQ):
    _, G = pipeline.at(1e-5)
    rep = spectral.classify(spectral.eigenvalues(G.matrix), limitQ)
    dists = sorted(d for _, _, d in rep.matched_pairs)
    assert dists[0] <= 1e-12          # snapped zero against the limit zero
    assert dists[1] <= 5e-7
    assert dists[2] <= 2e-5
    npt.assert_allclose(rep.gap_ratio, 1.386676e10, rtol=1e-3)
    # the raw near-zero eigenvalue carries the eigensolver's backward error,
    # which grows with ||G|| ~ eps^-alpha
    assert rep.zero_residual <= 2e-5


def test_classify_synthetic_flags(limitQ):
    spec = [1e-12 + 0j, -0.3 + 0j, -0.5 + 0j, -0.9 + 0j]
    rep = spectral.classify(spec, limitQ)
    assert rep.ambiguous_cluster and rep.gap_ratio < 2.0

    spec = [0j, -0.2 + 0j, -0.2 * (1 + 1e-9) + 0j, -80.0 + 0j]
    rep = spectral.classify(spec, limitQ)
    assert len(rep.degenerate_pairs) == 1
    assert not rep.ambiguous_cluster

    with pytest.raises(ValueError):
        spectral.classify([0j, -1.0 + 0j], limitQ)


def test_eigenvector_residual_and_anchor():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((8, 8))
    Qo, _ = np.linalg.qr(B)
    A = Qo @ np.diag(np.arange(1.0, 9.0)) @ Qo.T
    v = spectral.eigenvector(A, 3.0)
    assert np.linalg.norm(A @ v - 3.0 * v) <= 1e-10 * np.linalg.norm(A) * np.linalg.norm(v)
    assert v[np.argmax(np.abs(v))] == 1.0
    npt.assert_allclose(np.abs(v / np.linalg.norm(v)), np.abs(Qo[:, 2]), atol=1e-9)
    # anchoring restricted to a subset pins that subset's largest entry
    w = spectral.eigenvector(A, 3.0, norm_idx=[0, 1, 2])
    sub = np.abs(w[:3])
    assert w[np.argmax(sub)] == 1.0


def test_limit_eigenvectors_three_decimals(limitQ):
    v1 = spectral.eigenvector(limitQ.matrix, LIMIT_EIGS[0])
    npt.assert_allclose(v1, np.ones(3), rtol=0, atol=1e-12)
    v2 = spectral.eigenvector(limitQ.matrix, LIMIT_EIGS[1])
    npt.assert_allclose(v2.real, [-0.629, 0.280, 1.0], rtol=0, atol=5e-4)
    v3 = spectral.eigenvector(limitQ.matrix, LIMIT_EIGS[2])
    npt.assert_allclose(v3.real, [-0.088, 1.0, -0.245], rtol=0, atol=5e-4)
    for v in (v1, v2, v3):
        npt.assert_array_equal(v.imag, np.zeros(3))


def test_well_constancy_manual():
    wells = np.array([1, 1, 2, 2, 3])
    vec = np.array([1.0, 1.1, -0.5, -0.4, 0.25])
    limit_vec = np.array([1.0, -0.5, 0.2])
    assert spectral.well_constancy(vec, limit_vec, wells) == pytest.approx(0.1)


def test_eigvec_analysis_sweep(pipeline, mesh203, limitQ):
    # frozen sup-norm deviations from the well-constant limit shape
    expected = {
        0.03: (1.439219e-2, 1.772611e-2),
        0.01: (2.366886e-3, 2.330402e-3),
        3e-3: (2.143794e-4, 2.323186e-4),
    }
    prev = (np.inf, np.inf)
    for eps, (w2, w3) in expected.items():
        _, G = pipeline.at(eps)
        rep = spectral.classify(spectral.eigenvalues(G.matrix), limitQ)
        reps = spectral.eigvec_analysis(G, rep, mesh203)
        assert [r.order for r in reps] == [1, 2, 3]
        assert reps[0].well_constancy_error <= 1e-7
        npt.assert_allclose(reps[1].well_constancy_error, w2, rtol=1e-3)
        npt.assert_allclose(reps[2].well_constancy_error, w3, rtol=1e-3)
        assert reps[1].well_constancy_error < prev[0]
        assert reps[2].well_constancy_error < prev[1]
        prev = (reps[1].well_constancy_error, reps[2].well_constancy_error)
        # eigenvalue order follows the limit moduli
        mods = [abs(r.limit_eigenvalue) for r in reps]
        assert mods == sorted(mods)


def test_charpoly_zero_lambda(mesh30, params18):
    out = spectral.charpoly_check(mesh30, 1.8, 1e-3, [0.0], params=params18)
    lam, scaled, limit, err = out[0]
    assert lam == 0.0
    assert limit == 0.0
    assert err <= 1e-9


def test_charpoly_in_band_slopes(mesh30, params18):
    # residuals against the limit polynomial, well inside the regime where
    # the bulk factors have settled near 1
    eps_list = (1e-3, 3e-4, 1e-4)
    expected = {
        -0.05: (2.607186e-5, 2.298395e-6, 3.111566e-7),
        -0.3: (1.910487e-4, 1.674240e-5, 2.265489e-6),
        -0.8: (1.505611e-3, 1.315042e-4, 1.779174e-5),
    }
    for lam, errs_exp in expected.items():
        errs = []
        for eps, e_exp in zip(eps_list, errs_exp):
            out = spectral.charpoly_check(mesh30, 1.8, eps, [lam], params=params18)
            _, scaled, limit, err = out[0]
            assert abs(scaled.imag) == 0.0
            npt.assert_allclose(err, e_exp, rtol=1e-3)
            errs.append(err)
        slope = np.polyfit(np.log(eps_list), np.log(errs), 1)[0]
        assert 0.8 * 1.8 <= slope <= 1.2 * 1.8
