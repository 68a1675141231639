"""Experiment runners behind the service endpoints and CLI subcommands.

Each runner is a pure function from validated parameters to an
ExperimentResult: a column/row table, a summary dict, and optional named
artifacts (file contents keyed by file name).  All randomness is drawn
from a caller-supplied seed, so re-running a configuration reproduces the
output byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import fem, solvers, spectra, symbols, tgm, toeplitz
from .coefficients import coefficient

DEFAULT_SEED = 0x5EED


@dataclass
class ExperimentResult:
    experiment: str
    params: dict
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)


def _pk_symbol(k: int) -> symbols.MatrixSymbol:
    return symbols.builtin(f"f_P{k}")


# ---------------------------------------------------------------------------


def run_surface_extrema(k: int = 2, grid: int = 1024, **_) -> ExperimentResult:
    """Minimum/maximum of every eigenvalue surface of the 2D degree-k symbol."""
    sym = _pk_symbol(k)
    sample = symbols.eig_surfaces(sym, grid)
    rows = []
    for rec in symbols.surface_extrema(sample):
        rows.append([rec["surface"], repr(rec["min"]), repr(rec["argmin"][0]),
                     repr(rec["argmin"][1]), repr(rec["max"]),
                     repr(rec["argmax"][0]), repr(rec["argmax"][1])])
    return ExperimentResult(
        "surface-extrema", {"k": k, "grid": grid},
        ["surface", "min", "argmin_1", "argmin_2", "max", "argmax_1", "argmax_2"],
        rows)


def run_symbol_check(samples: int = 1000, kmax: int = 4,
                     seed: int = DEFAULT_SEED, **_) -> ExperimentResult:
    """Determinant identities of the built-in symbols at random angles."""
    rng = np.random.default_rng(seed)
    rows = []

    def det_at(sym, pts):
        return np.array([np.linalg.det(symbols.evaluate(sym, t)).real for t in pts])

    # 2D closed forms
    pts = rng.uniform(-np.pi, np.pi, size=(samples, 2))
    c1, c2 = np.cos(pts[:, 0]), np.cos(pts[:, 1])
    d2 = det_at(_pk_symbol(2), pts)
    ref2 = (4096.0 / 81.0) * (5.0 - 2.0 * c1 - 2.0 * c2 - c1 * c2)
    rows.append(["det_fP2", samples, repr(float(np.max(np.abs(d2 - ref2) / np.abs(ref2)))), ""])
    d3 = det_at(_pk_symbol(3), pts)
    a3 = 205891132094649.0 / 81920000000.0
    ref3 = a3 * (-c2 * c1 ** 2 - c1 * c2 ** 2 + 4 * c1 ** 2 + 4 * c2 ** 2
                 - 80 * c1 * c2 - 195 * c1 - 195 * c2 + 464)
    rows.append(["det_fP3", samples, repr(float(np.max(np.abs(d3 - ref3) / np.abs(ref3)))), ""])

    # 1D: det f_k = d_k (2 - 2 cos t) with the exact constant
    from .lagrange import det_identity_constant
    pts1 = rng.uniform(-np.pi, np.pi, size=(samples, 1))
    for k in range(1, kmax + 1):
        dk = float(det_identity_constant(k))
        dets = det_at(symbols.qk_1d_symbol(k), pts1)
        ref = dk * (2.0 - 2.0 * np.cos(pts1[:, 0]))
        err = float(np.max(np.abs(dets - ref) / np.abs(ref)))
        rows.append([f"det_fQ{k}_1d", samples, repr(err), repr(dk)])
    return ExperimentResult("symbol-check", {"samples": samples, "kmax": kmax, "seed": seed},
                            ["identity", "samples", "max_rel_err", "constant"], rows)


def run_assemble(family: str = "P", k: int = 2, d: int = 2, n_sub: int = 8,
                 a: str = "one", **_) -> ExperimentResult:
    """Assemble a stiffness matrix and export it in Matrix Market format."""
    cfg = fem.MeshConfig(d=d, family=family, k=k, n_sub=n_sub, a=coefficient(a, d))
    A = fem.assemble_pk_2d(cfg) if family == "P" else fem.assemble_qk(cfg)
    name = f"stiffness_{family}{k}_d{d}_n{n_sub}_{a}.mtx"
    rows = [[A.dimension, int(A.csr.nnz), name]]
    return ExperimentResult("assemble",
                            {"family": family, "k": k, "d": d, "n_sub": n_sub, "a": a},
                            ["dimension", "nnz", "artifact"], rows,
                            artifacts={name: A.to_matrix_market()})


def run_distribution(k: int = 2, n_sub: int = 16, a: str = "exp_xy", **_) -> ExperimentResult:
    """Sorted spectrum of the triangular-element matrix against the symbol sampling."""
    af = coefficient(a, 2)
    cfg = fem.MeshConfig(d=2, family="P", k=k, n_sub=n_sub, a=af)
    A = fem.assemble_pk_2d(cfg)
    spec = spectra.dense_hermitian_spectrum(A, metadata={"k": k, "n_sub": n_sub, "a": a})
    sym = _pk_symbol(k)
    sampled = symbols.rearranged_sampling(sym, af, spec.dimension)
    mean_abs, max_abs, frac = spectra.distribution_discrepancy(spec, sym, af)
    rows = [[i + 1, repr(float(w)), repr(float(s))]
            for i, (w, s) in enumerate(zip(spec.eigenvalues, sampled))]
    return ExperimentResult("distribution", {"k": k, "n_sub": n_sub, "a": a},
                            ["index", "eigenvalue", "symbol_sample"], rows,
                            summary={"N": spec.dimension, "mean_abs_diff": mean_abs,
                                     "max_abs_diff": max_abs, "outlier_fraction": frac})


def run_extremal_scaling(k: int = 2, d: int = 2, sizes=(8, 16, 32), **_) -> ExperimentResult:
    recs = spectra.extremal_scaling_study(k, d, sizes)
    rows = [[r["n_sub"], r["N"], repr(r["lambda_min"]), repr(r["lambda_max"]),
             repr(r["lambda_min_scaled"]), repr(r["condition_scaled"])] for r in recs]
    return ExperimentResult("extremal-scaling", {"k": k, "d": d, "sizes": list(sizes)},
                            ["n_sub", "N", "lambda_min", "lambda_max",
                             "lambda_min_scaled", "condition_scaled"], rows)


def _toeplitz_pair(k: int, n: int, limit: int = 4096):
    """Dense T_n(f_Pk) and its boundary-imposed variant of the same size.

    The clustering experiment is specified densely up to 4096, slightly above
    the general dense threshold, hence the explicit limit.
    """
    op = toeplitz.toeplitz_from_symbol(_pk_symbol(k), (n, n))
    T = op.dense(limit=limit)
    keep = toeplitz.cut_keep_indices(k, (n, n))
    return T, toeplitz.impose_dirichlet_like(T, keep)


def run_pcg(precond: str = "diag-scaled", k: int = 2, sizes=None, a: str = "exp_xy",
            tol: float = 1e-6, seed: int = DEFAULT_SEED, **_) -> ExperimentResult:
    """PCG iteration counts for the three preconditioning strategies.

    ``diag-scaled`` runs on triangular-element matrices over mesh sizes;
    ``identity``/``ic0``/``strang`` run on the symbol-generated matrix and
    its boundary-imposed variant over block counts, with a seeded random
    right-hand side (the convention that reproduces the reference counts).
    """
    rows = []
    timings: list = []
    if precond == "diag-scaled":
        sizes = list(sizes or (4, 8, 16, 32, 64))
        af = coefficient(a, 2)
        for n_sub in sizes:
            Aa = fem.assemble_pk_2d(fem.MeshConfig(d=2, family="P", k=k, n_sub=n_sub, a=af))
            A1 = fem.assemble_pk_2d(fem.MeshConfig(d=2, family="P", k=k, n_sub=n_sub))
            M = solvers.diag_scaled_preconditioner(Aa, A1)
            b = Aa.matvec(np.ones(Aa.dimension))
            t0 = time.perf_counter()
            x, it = solvers.pcg(Aa, b, M, tol=tol)
            timings.append(1000.0 * (time.perf_counter() - t0))
            res = float(np.linalg.norm(b - Aa.matvec(x)) / np.linalg.norm(b))
            rows.append([n_sub, Aa.dimension, it, repr(res)])
        cols = ["n_sub", "N", "iterations", "final_residual"]
        params = {"precond": precond, "k": k, "sizes": sizes, "a": a, "tol": tol}
        return ExperimentResult("pcg", params, cols, rows,
                                summary={"wall_time_ms": timings})

    if precond not in ("identity", "ic0", "strang"):
        raise ValueError(f"unknown preconditioner {precond!r}")
    sizes = list(sizes or (4, 8, 16))
    for n in sizes:
        T, Tb = _toeplitz_pair(k, n)
        N = T.shape[0]
        for variant, A in (("toeplitz", T), ("fem_bc", Tb)):
            if precond == "identity":
                M = solvers.IdentityPreconditioner()
            elif precond == "ic0":
                M = solvers.ichol0(A)
            else:
                C = toeplitz.strang_corrected_preconditioner(
                    _pk_symbol(k), (n, n), h=1.0 / n, mode="global")
                M = solvers.StrangCirculantPreconditioner(C)
            b = np.random.default_rng(seed).standard_normal(N)
            t0 = time.perf_counter()
            x, it = solvers.pcg(A, b, M, tol=tol)
            timings.append(1000.0 * (time.perf_counter() - t0))
            res = float(np.linalg.norm(b - A @ x) / np.linalg.norm(b))
            rows.append([n, N, variant, it, repr(res)])
    cols = ["n_blocks", "N", "variant", "iterations", "final_residual"]
    params = {"precond": precond, "k": k, "sizes": sizes, "tol": tol, "seed": seed}
    return ExperimentResult("pcg", params, cols, rows,
                            summary={"wall_time_ms": timings})


def run_weak_cluster(k: int = 2, sizes=(4, 8, 16), eps: float = 0.1,
                     **_) -> ExperimentResult:
    """Outlier counts of the circulant-preconditioned spectrum around 1."""
    rows = []
    for n in sizes:
        T, Tb = _toeplitz_pair(k, n)
        N = T.shape[0]
        C = toeplitz.strang_corrected_preconditioner(
            _pk_symbol(k), (n, n), h=1.0 / n, mode="global")
        half = C.apply_inv_sqrt(np.eye(N))
        for variant, A in (("toeplitz", T), ("fem_bc", Tb)):
            M = C.apply_inv_sqrt(A @ half)
            spec = spectra.SpectrumReport(np.sort(np.linalg.eigvalsh(0.5 * (M + M.T))), N)
            count, frac = spectra.cluster_outliers(spec, 1.0, eps)
            rows.append([n, N, variant, count, repr(frac)])
    return ExperimentResult("weak-cluster", {"k": k, "sizes": list(sizes), "eps": eps},
                            ["n_blocks", "N", "variant", "n_out", "fraction"], rows)


def run_multigrid(k: int = 2, d: int = 1, sizes=(8, 16, 32, 64, 128, 256, 512),
                  tol: float = 1e-6, a: str = "one", mode: str = "both",
                  **_) -> ExperimentResult:
    """Two-grid / V-cycle iteration counts on tensor-element matrices."""
    af = coefficient(a, d)
    modes = ("two_grid", "v_cycle") if mode == "both" else (mode,)
    rows = []
    timings: list = []
    for n_sub in sizes:
        cfg = fem.MeshConfig(d=d, family="Q", k=k, n_sub=int(n_sub), a=af)
        A = fem.assemble_qk(cfg)
        hier = solvers.build_hierarchy(A, k, d, int(n_sub))
        b = A.matvec(np.ones(A.dimension))
        for m in modes:
            t0 = time.perf_counter()
            x, it = solvers.multigrid_solve(hier, b, tol=tol, mode=m)
            timings.append(1000.0 * (time.perf_counter() - t0))
            res = float(np.linalg.norm(b - A.matvec(x)) / np.linalg.norm(b))
            rows.append([int(n_sub), A.dimension, m, it, repr(res)])
    return ExperimentResult("multigrid",
                            {"k": k, "d": d, "sizes": list(sizes), "tol": tol,
                             "a": a, "mode": mode},
                            ["n_sub", "N", "mode", "iterations", "final_residual"],
                            rows, summary={"wall_time_ms": timings})


def run_tgm_check(k: int = 2, grid: int = 512, delta: float = 1e-3, **_) -> ExperimentResult:
    """Two-grid condition report for the degree-k symbol pair."""
    f = symbols.qk_1d_symbol(k)
    p = symbols.projector_symbol(k)
    rep = tgm.verify_conditions(f, p, g=grid, delta=delta)
    rows = [[k, rep.zero_order_at_pi, repr(rep.condition_b_min), repr(rep.condition_r_max),
             repr(rep.condition_r_max_half_grid), repr(rep.condition_r_rel_change),
             repr(rep.commutator_det), repr(rep.commutator_frobenius)]]
    return ExperimentResult("tgm-check", {"k": k, "grid": grid, "delta": delta},
                            ["k", "zero_order_at_pi", "condition_b_min", "condition_r_max",
                             "condition_r_max_half_grid", "condition_r_rel_change",
                             "commutator_det", "commutator_frobenius"], rows,
                            summary={"report": rep.to_json()},
                            artifacts={f"tgm_check_Q{k}.json": rep.to_json()})


REGISTRY = {
    "surface-extrema": run_surface_extrema,
    "symbol-check": run_symbol_check,
    "assemble": run_assemble,
    "distribution": run_distribution,
    "extremal-scaling": run_extremal_scaling,
    "pcg": run_pcg,
    "weak-cluster": run_weak_cluster,
    "multigrid": run_multigrid,
    "tgm-check": run_tgm_check,
}


def run(name: str, **params) -> ExperimentResult:
    if name not in REGISTRY:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(REGISTRY)}")
    return REGISTRY[name](**params)
