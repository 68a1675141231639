"""Iterative solvers: preconditioned CG, IC(0), Gauss-Seidel smoothing, and
symbol-driven two-grid / V-cycle multigrid with Galerkin coarsening.

The PCG stopping rule is the true relative residual ||b - A x|| / ||b||;
iteration counts reported by the experiment tables are counts of this loop
(or of two-grid/V-cycle sweeps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import SparseSymmetricMatrix
from .symbols import projector_symbol
from .toeplitz import BlockCirculantMatrix, toeplitz_from_symbol


def _as_matvec(A):
    if isinstance(A, SparseSymmetricMatrix):
        M = A.csr
        return M.shape[0], lambda v: M @ v
    if sp.issparse(A):
        return A.shape[0], lambda v: A @ v
    if isinstance(A, np.ndarray):
        return A.shape[0], lambda v: A @ v
    if hasattr(A, "matvec"):
        return A.shape[0], A.matvec
    raise TypeError(f"cannot interpret {type(A)!r} as a linear operator")


# ---------------------------------------------------------------------------
# preconditioners


class IdentityPreconditioner:
    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        return v


class StrangCirculantPreconditioner:
    """Wraps a corrected block circulant; apply_inverse is its O(N log N) solve."""

    def __init__(self, circ: BlockCirculantMatrix):
        circ.ensure_positive_definite()
        self.circ = circ

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        return self.circ.solve(v)


class IncompleteCholesky0:
    """Zero-fill incomplete Cholesky on the sparsity pattern of A."""

    def __init__(self, L: sp.csr_matrix, shift: float = 0.0):
        self.L = L.tocsr()
        self.Lt = sp.csr_matrix(L.T)
        self.shift = shift

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        y = spla.spsolve_triangular(self.L, v, lower=True)
        return spla.spsolve_triangular(self.Lt, y, lower=False)


def _ic0_factor(A: sp.csr_matrix) -> sp.csr_matrix:
    """IC(0): Cholesky restricted to the lower pattern of A.

    Raises ValueError on a nonpositive pivot.
    """
    n = A.shape[0]
    Al = sp.tril(A, 0).tocsr()
    indptr, indices, data = Al.indptr, Al.indices, Al.data
    rows: list[dict] = [dict() for _ in range(n)]
    for i in range(n):
        ri = rows[i]
        for t in range(indptr[i], indptr[i + 1]):
            j = int(indices[t])
            s = float(data[t])
            rj = rows[j]
            # subtract the inner product of computed rows i and j (cols < j)
            if len(ri) <= len(rj):
                for c, v in ri.items():
                    if c < j:
                        w = rj.get(c)
                        if w is not None:
                            s -= v * w
            else:
                for c, w in rj.items():
                    if c < j:
                        v = ri.get(c)
                        if v is not None:
                            s -= v * w
            if j == i:
                if s <= 0.0:
                    raise ValueError(f"nonpositive pivot {s:.3e} at row {i}")
                ri[j] = np.sqrt(s)
            else:
                ri[j] = s / rows[j][j]
    rr, cc, vv = [], [], []
    for i, ri in enumerate(rows):
        for j, v in ri.items():
            rr.append(i)
            cc.append(j)
            vv.append(v)
    return sp.coo_matrix((vv, (rr, cc)), shape=(n, n)).tocsr()


def ichol0(A, max_retries: int = 3) -> IncompleteCholesky0:
    """IC(0) preconditioner with diagonal-shift retries on pivot breakdown."""
    Ac = A.csr if isinstance(A, SparseSymmetricMatrix) else sp.csr_matrix(A)
    shift = 0.0
    base = 1e-3 * float(Ac.diagonal().mean())
    for attempt in range(max_retries + 1):
        try:
            M = Ac if shift == 0.0 else (Ac + shift * sp.eye(Ac.shape[0], format="csr"))
            return IncompleteCholesky0(_ic0_factor(sp.csr_matrix(M)), shift)
        except ValueError:
            if attempt == max_retries:
                raise
            shift = base * (10.0 ** attempt)
    raise AssertionError("unreachable")


class DiagScaledConstantCoeffPreconditioner:
    """Constant-coefficient solve conjugated by the diagonal ratio.

    apply_inverse(v) = Dt^{-1/2} A_1^{-1} Dt^{-1/2} v with Dt the ratio of
    the diagonals of the variable- and unit-coefficient matrices; the inner
    solve uses a cached sparse LU of the unit-coefficient matrix.
    """

    def __init__(self, A_var, A_one):
        Av = A_var.csr if isinstance(A_var, SparseSymmetricMatrix) else sp.csr_matrix(A_var)
        Ao = A_one.csr if isinstance(A_one, SparseSymmetricMatrix) else sp.csr_matrix(A_one)
        dv, do = Av.diagonal(), Ao.diagonal()
        if np.any(dv <= 0) or np.any(do <= 0):
            raise ValueError("diagonals must be positive")
        self._scale = 1.0 / np.sqrt(dv / do)
        self._lu = spla.splu(Ao.tocsc())

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        return self._scale * self._lu.solve(self._scale * v)


def diag_scaled_preconditioner(A_var, A_one) -> DiagScaledConstantCoeffPreconditioner:
    return DiagScaledConstantCoeffPreconditioner(A_var, A_one)


# ---------------------------------------------------------------------------
# conjugate gradient


def pcg(A, b: np.ndarray, M=None, tol: float = 1e-6, maxit: int = 5000):
    """Preconditioned conjugate gradient.

    Returns (x, iterations); iterations == -1 flags non-convergence within
    maxit.  Raises on NaN breakdown.
    """
    n, matvec = _as_matvec(A)
    b = np.asarray(b, dtype=float)
    if M is None:
        M = IdentityPreconditioner()
    x = np.zeros(n)
    r = b.copy()
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        return x, 0
    if np.linalg.norm(r) / nb <= tol:
        return x, 0
    z = M.apply_inverse(r)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, maxit + 1):
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp == 0.0:
            raise FloatingPointError("breakdown in conjugate gradient")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.linalg.norm(r))
        if not np.isfinite(res):
            raise FloatingPointError("breakdown in conjugate gradient")
        if res / nb <= tol:
            return x, it
        z = M.apply_inverse(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, -1


# ---------------------------------------------------------------------------
# smoothing and grid transfer


def _split_for_gs(A: sp.csr_matrix):
    lower = sp.tril(A, 0).tocsr()
    upper = sp.triu(A, 1).tocsr()
    if np.any(lower.diagonal() == 0.0):
        raise ValueError("zero diagonal entry; Gauss-Seidel undefined")
    return lower, upper


def gauss_seidel_sweep(A, x: np.ndarray, b: np.ndarray,
                       direction: str = "forward") -> np.ndarray:
    """One forward Gauss-Seidel sweep (the only supported direction)."""
    if direction != "forward":
        raise ValueError("only forward sweeps are supported")
    Ac = A.csr if isinstance(A, SparseSymmetricMatrix) else sp.csr_matrix(A)
    lower, upper = _split_for_gs(Ac)
    return spla.spsolve_triangular(lower, b - upper @ x, lower=True)


def build_projector(k: int, fine_subintervals: int, d: int = 1) -> sp.csr_matrix:
    """Prolongation from the coarsened mesh (half the subintervals) to the fine one.

    1D: the banded matrix of the degree-k transfer symbol times the
    downsampling pattern, cropped to the internal-DOF rectangle; matches
    the reference stencils for k = 1, 2, 3.  2D: tensor product of the 1D
    operator with itself.
    """
    n_f = int(fine_subintervals)
    if n_f % 2 != 0:
        raise ValueError("fine subinterval count must be even")
    n_c = n_f // 2
    if n_c < 1:
        raise ValueError("coarse mesh would be empty")
    psym = projector_symbol(k)
    T = toeplitz_from_symbol(psym, (n_f,)).dense()
    cols: list[int] = []
    for b in range(1, n_f, 2):          # even block columns, 1-based
        cols.extend(range(b * k, (b + 1) * k))
    P = T[:, cols][: k * n_f - 1, : k * n_c - 1]
    P1 = sp.csr_matrix(np.real(P))
    if d == 1:
        return P1
    if d == 2:
        return sp.kron(P1, P1).tocsr()
    raise ValueError("d must be 1 or 2")


# ---------------------------------------------------------------------------
# multigrid


@dataclass
class _Level:
    A: sp.csr_matrix
    P: sp.csr_matrix | None = None       # prolongation from the next coarser level
    lower: sp.csr_matrix | None = None
    upper: sp.csr_matrix | None = None
    solve: object = None                 # exact solve (coarsest only)

    def prep_smoother(self):
        if self.lower is None:
            self.lower, self.upper = _split_for_gs(self.A)


@dataclass
class MultigridHierarchy:
    """Galerkin chain of (matrix, prolongation) pairs, finest first."""

    levels: list
    k: int
    d: int
    n_sub: int
    nu_pre: int = 1
    nu_post: int = 1

    @property
    def dimensions(self) -> list[int]:
        return [lev.A.shape[0] for lev in self.levels]


def default_coarsest_threshold(k: int, d: int) -> int:
    # DOF count of the two-subinterval mesh
    return (2 * k - 1) ** d


def build_hierarchy(A_fine, k: int, d: int, n_sub: int,
                    coarsest_threshold: int | None = None) -> MultigridHierarchy:
    """Coarsen by factor two per level down to the threshold, Galerkin products.

    Requires the subinterval count to stay even while coarsening; stops at
    n_sub = 2 (or earlier once the threshold is reached).
    """
    if coarsest_threshold is None:
        coarsest_threshold = default_coarsest_threshold(k, d)
    Ac = A_fine.csr if isinstance(A_fine, SparseSymmetricMatrix) else sp.csr_matrix(A_fine)
    levels = [_Level(Ac.tocsr())]
    n = n_sub
    while n >= 4 and n % 2 == 0 and levels[-1].A.shape[0] >= coarsest_threshold:
        P = build_projector(k, n, d)
        levels[-1].P = P
        coarse = (P.T @ levels[-1].A @ P).tocsr()
        levels.append(_Level(coarse))
        n //= 2
    if len(levels) == 1:
        raise ValueError(f"cannot coarsen a mesh with {n_sub} subintervals")
    for lev in levels[:-1]:
        lev.prep_smoother()
    levels[-1].solve = spla.splu(levels[-1].A.tocsc()).solve
    return MultigridHierarchy(levels, k, d, n_sub)


def _cycle(levels, s: int, x: np.ndarray, b: np.ndarray,
           nu_pre: int, nu_post: int) -> np.ndarray:
    lev = levels[s]
    if lev.solve is not None:
        return lev.solve(b)
    for _ in range(nu_pre):
        x = spla.spsolve_triangular(lev.lower, b - lev.upper @ x, lower=True)
    r = b - lev.A @ x
    y = _cycle(levels, s + 1, np.zeros(lev.P.shape[1]), lev.P.T @ r, nu_pre, nu_post)
    x = x + lev.P @ y
    for _ in range(nu_post):
        x = spla.spsolve_triangular(lev.lower, b - lev.upper @ x, lower=True)
    return x


def multigrid_solve(hierarchy: MultigridHierarchy, b: np.ndarray,
                    tol: float = 1e-6, maxit: int = 200,
                    mode: str = "v_cycle"):
    """Iterate two-grid or V-cycle sweeps to the relative-residual tolerance.

    Two-grid mode uses exactly the two finest levels with an exact coarse
    solve.  Returns (x, iterations); raises on sustained residual growth.
    """
    if mode not in ("two_grid", "v_cycle"):
        raise ValueError("mode must be 'two_grid' or 'v_cycle'")
    levels = hierarchy.levels
    if mode == "two_grid":
        fine = levels[0]
        coarse = _Level(levels[1].A)
        coarse.solve = spla.splu(coarse.A.tocsc()).solve
        levels = [fine, coarse]
    b = np.asarray(b, dtype=float)
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        return np.zeros_like(b), 0
    x = np.zeros_like(b)
    prev = np.inf
    growth = 0
    for it in range(1, maxit + 1):
        x = _cycle(levels, 0, x, b, hierarchy.nu_pre, hierarchy.nu_post)
        res = float(np.linalg.norm(b - hierarchy.levels[0].A @ x))
        if res / nb <= tol:
            return x, it
        if res > prev:
            growth += 1
            if growth >= 5:
                raise FloatingPointError("multigrid residual grew for 5 consecutive sweeps")
        else:
            growth = 0
        prev = res
    return x, -1
