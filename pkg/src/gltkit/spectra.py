"""Spectra of assembled matrices and distribution/clustering diagnostics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import MeshConfig, SparseSymmetricMatrix, assemble_pk_2d, assemble_qk
from .symbols import MatrixSymbol, rearranged_sampling

DENSE_SPECTRUM_LIMIT = 4000


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray          # ascending
    dimension: int
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        for i, v in enumerate(self.eigenvalues):
            w.writerow([i + 1, repr(float(v))])
        return buf.getvalue()


def _dense_of(A) -> np.ndarray:
    if isinstance(A, SparseSymmetricMatrix):
        return A.dense()
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A)


def dense_hermitian_spectrum(A, cap: int = DENSE_SPECTRUM_LIMIT,
                             metadata: dict | None = None) -> SpectrumReport:
    """Full sorted spectrum of a symmetric matrix; refuses above the cap."""
    M = _dense_of(A)
    n = M.shape[0]
    if n > cap:
        raise ValueError(
            f"dimension {n} exceeds the dense cap {cap}; use extremal_eigenvalues instead")
    if not np.allclose(M, M.T.conj(), atol=1e-10 * max(1.0, float(np.abs(M).max()))):
        raise ValueError("matrix is not symmetric")
    w = np.linalg.eigvalsh(M)
    return SpectrumReport(np.sort(w), n, metadata or {})


def extremal_eigenvalues(A, tol: float = 1e-8) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a large sparse SPD matrix, iterative path."""
    Ac = A.csr if isinstance(A, SparseSymmetricMatrix) else sp.csr_matrix(A)
    lmax = float(spla.eigsh(Ac, k=1, which="LA", tol=tol,
                            return_eigenvectors=False)[0])
    lmin = float(spla.eigsh(Ac, k=1, sigma=0.0, which="LM", tol=tol,
                            return_eigenvectors=False)[0])
    return lmin, lmax


def distribution_discrepancy(spec: SpectrumReport, sym: MatrixSymbol, a=None,
                             rel_threshold: float = 0.05):
    """Compare a sorted spectrum against the rearranged symbol sampling.

    Returns (mean_abs_diff, max_abs_diff, outlier_fraction), where outliers
    are indices whose absolute mismatch exceeds ``rel_threshold`` of the
    spectral scale max|s| of the sampling.
    """
    s = rearranged_sampling(sym, a, spec.dimension)
    w = spec.eigenvalues
    diff = np.abs(w - s)
    scale = float(np.abs(s).max())
    frac = float(np.mean(diff > rel_threshold * scale))
    return float(diff.mean()), float(diff.max()), frac


def cluster_outliers(spec: SpectrumReport, center: float, eps: float):
    """Count of eigenvalues outside (center - eps, center + eps), and fraction."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = spec.eigenvalues
    count = int(np.sum((w <= center - eps) | (w >= center + eps)))
    return count, count / spec.dimension


def extremal_scaling_study(k: int, d: int, n_subs, family: str | None = None,
                           cap: int = DENSE_SPECTRUM_LIMIT) -> list[dict]:
    """Extremal eigenvalues and conditioning across mesh sizes.

    One row per size: (N, lambda_min, lambda_max, lambda_min * N^{2/d},
    kappa / N^{2/d}).  Uses the triangular family in 2D by default.
    """
    family = family or ("P" if d == 2 else "Q")
    rows = []
    for n_sub in n_subs:
        cfg = MeshConfig(d=d, family=family, k=k, n_sub=int(n_sub))
        A = assemble_pk_2d(cfg) if family == "P" else assemble_qk(cfg)
        N = A.dimension
        if N <= cap:
            w = dense_hermitian_spectrum(A, cap=cap).eigenvalues
            lmin, lmax = float(w[0]), float(w[-1])
        else:
            lmin, lmax = extremal_eigenvalues(A)
        scale = float(N) ** (2.0 / d)
        rows.append({"n_sub": int(n_sub), "N": N, "lambda_min": lmin,
                     "lambda_max": lmax, "lambda_min_scaled": lmin * scale,
                     "condition_scaled": (lmax / lmin) / scale})
    return rows
