"""Spectrum reports, distribution discrepancy, scaling studies, clustering."""

import numpy as np
import pytest

from gltkit import spectra
from gltkit.fem import MeshConfig, assemble_pk_2d, assemble_qk
from gltkit.spectra import (
    SpectrumReport,
    cluster_outliers,
    dense_hermitian_spectrum,
    distribution_discrepancy,
    extremal_eigenvalues,
    extremal_scaling_study,
)
from gltkit.symbols import builtin


def test_tridiagonal_closed_form():
    A = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])
    w = dense_hermitian_spectrum(A).eigenvalues
    assert np.allclose(w, [2 - np.sqrt(2), 2.0, 2 + np.sqrt(2)], atol=1e-12)


def test_identity_spectrum():
    w = dense_hermitian_spectrum(np.eye(17)).eigenvalues
    assert np.allclose(w, 1.0)


def test_cap_refusal():
    with pytest.raises(ValueError, match="extremal"):
        dense_hermitian_spectrum(np.eye(10), cap=5)


def test_nonsymmetric_rejected():
    with pytest.raises(ValueError):
        dense_hermitian_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_min_eigenvalue_scaling_band():
    # lambda_min ~ C / N for the 2D quadratic family
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=8))
    w = dense_hermitian_spectrum(A).eigenvalues
    scaled = w[0] * A.dimension
    # regression band recorded at first run (value ~ 19.7, close to 2 pi^2)
    assert 10.0 < scaled < 40.0


def test_extremal_iterative_matches_dense():
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=8))
    lmin, lmax = extremal_eigenvalues(A)
    w = dense_hermitian_spectrum(A).eigenvalues
    assert abs(lmin - w[0]) < 1e-6 * abs(w[0])
    assert abs(lmax - w[-1]) < 1e-6 * abs(w[-1])


def test_distribution_discrepancy_decreases():
    sym = builtin("f_P1")
    stats = []
    for n in (16, 32):
        A = assemble_pk_2d(MeshConfig(d=2, family="P", k=1, n_sub=n))
        rep = dense_hermitian_spectrum(A)
        stats.append(distribution_discrepancy(rep, sym, None))
    assert stats[1][0] < stats[0][0]


def test_distribution_constant_scaling():
    sym = builtin("f_P1")
    A1 = assemble_pk_2d(MeshConfig(d=2, family="P", k=1, n_sub=12))
    Ac = assemble_pk_2d(MeshConfig(d=2, family="P", k=1, n_sub=12, a=lambda x, y: 2.0))
    m1 = distribution_discrepancy(dense_hermitian_spectrum(A1), sym, None)
    mc = distribution_discrepancy(dense_hermitian_spectrum(Ac), sym, 2.0)
    assert abs(mc[0] - 2.0 * m1[0]) < 1e-10
    assert abs(mc[1] - 2.0 * m1[1]) < 1e-10


def test_distribution_outliers_small_for_smooth_coefficient():
    a = lambda x, y: np.exp(x + y)
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=16, a=a))
    rep = dense_hermitian_spectrum(A)
    _, _, frac = distribution_discrepancy(rep, builtin("f_P2"), a)
    assert frac < 0.05


def test_cluster_outliers_counts():
    rep = SpectrumReport(np.ones(50), 50)
    assert cluster_outliers(rep, 1.0, 0.1) == (0, 0.0)
    rep2 = SpectrumReport(np.array([0.5, 1.0, 1.05, 2.0]), 4)
    count, frac = cluster_outliers(rep2, 1.0, 0.1)
    assert count == 2 and abs(frac - 0.5) < 1e-15
    with pytest.raises(ValueError):
        cluster_outliers(rep, 1.0, 0.0)


def test_spd_spectra_positive():
    for cfg in (MeshConfig(d=2, family="P", k=3, n_sub=3),
                MeshConfig(d=2, family="Q", k=2, n_sub=4),
                MeshConfig(d=1, family="Q", k=4, n_sub=8)):
        A = assemble_pk_2d(cfg) if cfg.family == "P" else assemble_qk(cfg)
        w = dense_hermitian_spectrum(A).eigenvalues
        assert w[0] > 0


def test_extremal_scaling_study_k1():
    rows = extremal_scaling_study(1, 2, (8, 16, 32))
    # classical 5-point stencil: lambda_min = 8 sin^2(pi h / 2) and
    # lambda_min * N -> 2 pi^2 from above
    for rec in rows:
        n = rec["n_sub"]
        lam_exact = 8 * np.sin(np.pi / (2 * n)) ** 2
        assert abs(rec["lambda_min"] - lam_exact) < 1e-10
        # lambda_min * n^2 approaches 2 pi^2; N = (n-1)^2 lags by O(1/n)
        assert abs(rec["lambda_min"] * n ** 2 - 2 * np.pi ** 2) < 0.3
    gaps = [abs(r["lambda_min_scaled"] - 2 * np.pi ** 2) for r in rows]
    assert gaps == sorted(gaps, reverse=True)


def test_extremal_scaling_study_k2_band():
    rows = extremal_scaling_study(2, 2, (8, 16, 32))
    assert [r["N"] for r in rows] == [225, 961, 3969]
    vals = [r["lambda_min_scaled"] for r in rows]
    for a, b in zip(vals, vals[1:]):
        assert 0.8 <= b / a <= 1.25
    lmaxs = [r["lambda_max"] for r in rows]
    assert lmaxs == sorted(lmaxs)
    assert lmaxs[-1] < 32.0 / 3.0


def test_spectrum_csv():
    rep = SpectrumReport(np.array([1.0, 2.0]), 2)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "index,eigenvalue" and len(lines) == 3
