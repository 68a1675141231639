"""Stiffness assembly on (0,1)^d with Dirichlet boundary eliminated.

Two element families:

* triangular Lagrange elements of degree 1..3 on the uniform triangulation
  of the unit square obtained by splitting every cell along the
  anti-diagonal (type-1 triangle with the right angle at the first vertex,
  type-2 with the right angle at the second);
* tensor-product Lagrange elements of degree 1..8 on uniform line/square
  meshes, with per-element Gauss-Legendre quadrature for variable
  coefficients.

Triangular elemental matrices are derived once in exact rational
arithmetic (monomial integrals over the reference triangle), so constant
coefficient assembly is exact up to the single rational-to-float
conversion.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np
import scipy.io
import scipy.sparse as sp

from .lagrange import lagrange_polynomials
from .toeplitz import cut_keep_indices


@dataclass
class SparseSymmetricMatrix:
    """Assembled stiffness matrix in compressed-row form, exactly symmetric."""

    csr: sp.csr_matrix

    def __post_init__(self):
        self.csr = sp.csr_matrix(self.csr)

    @property
    def dimension(self) -> int:
        return self.csr.shape[0]

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def column_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        return self.csr.data

    def dense(self) -> np.ndarray:
        return self.csr.toarray()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.csr @ v

    def to_matrix_market(self) -> str:
        buf = io.BytesIO()
        scipy.io.mmwrite(buf, self.csr, symmetry="symmetric")
        return buf.getvalue().decode()

    @staticmethod
    def from_lower_coo(rows, cols, vals, dim: int) -> "SparseSymmetricMatrix":
        """Build from lower-triangle COO entries (i >= j); mirrored exactly."""
        L = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
        D = sp.diags(L.diagonal())
        A = L + L.T - D
        A.sum_duplicates()
        return SparseSymmetricMatrix(A.tocsr())


@dataclass
class MeshConfig:
    """Element family, degree, mesh resolution, and diffusion coefficient."""

    d: int
    family: str               # "P" (triangular, d=2) or "Q" (tensor)
    k: int
    n_sub: int
    a: object = None          # None -> constant 1; else callable on [0,1]^d

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if self.family not in ("P", "Q"):
            raise ValueError("family must be 'P' or 'Q'")
        if self.family == "P":
            if self.d != 2:
                raise ValueError("triangular elements are 2D only")
            if self.k not in (1, 2, 3):
                raise ValueError("triangular family supports k in {1,2,3}")
        else:
            if not (1 <= self.k <= 8):
                raise ValueError("tensor family supports k in 1..8")
        if self.n_sub < 2:
            raise ValueError("need at least 2 subintervals per axis")


# ---------------------------------------------------------------------------
# triangular elements: exact reference machinery


def _ref_nodes(k: int):
    f = Fraction
    if k == 1:
        return [(f(0), f(0)), (f(1), f(0)), (f(0), f(1))]
    if k == 2:
        h = f(1, 2)
        return [(f(0), f(0)), (f(1), f(0)), (f(0), f(1)), (h, h), (f(0), h), (h, f(0))]
    if k == 3:
        t = f(1, 3)
        return [(f(0), f(0)), (f(1), f(0)), (f(0), f(1)),
                (2 * t, t), (t, 2 * t), (f(0), 2 * t), (f(0), t),
                (t, f(0)), (2 * t, f(0)), (t, t)]
    raise ValueError(f"unsupported triangular degree {k}")


def _tri_monomial_integral(a: int, b: int) -> Fraction:
    # integral of x^a y^b over the unit reference triangle
    return Fraction(factorial(a) * factorial(b), factorial(a + b + 2))


def _shape_gradients(k: int):
    """Exact monomial expansions of the reference shape-function gradients."""
    nodes = _ref_nodes(k)
    mono = [(a, b) for a in range(k + 1) for b in range(k + 1 - a)]
    n = len(nodes)
    V = [[x ** a * y ** b for (a, b) in mono] for (x, y) in nodes]
    # exact inverse by Gauss-Jordan
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(V)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                fac = aug[r][col]
                aug[r] = [x - fac * y for x, y in zip(aug[r], aug[col])]
    vinv = [row[n:] for row in aug]
    grads = []
    for i in range(n):
        dx: dict = {}
        dy: dict = {}
        for (a, b), row in zip(mono, vinv):
            c = row[i]
            if c == 0:
                continue
            if a > 0:
                dx[(a - 1, b)] = dx.get((a - 1, b), Fraction(0)) + a * c
            if b > 0:
                dy[(a, b - 1)] = dy.get((a, b - 1), Fraction(0)) + b * c
        grads.append((dx, dy))
    return grads


def _exact_elemental(k: int, verts) -> list[list[Fraction]]:
    """Exact stiffness elemental matrix for a triangle with rational vertices."""
    grads = _shape_gradients(k)
    (x1, y1), (x2, y2), (x3, y3) = [(Fraction(v[0]), Fraction(v[1])) for v in verts]
    J = ((x2 - x1, x3 - x1), (y2 - y1, y3 - y1))
    detJ = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    JinvT = ((J[1][1] / detJ, -J[1][0] / detJ), (-J[0][1] / detJ, J[0][0] / detJ))
    n = len(grads)

    def mapped(g, row):
        out: dict = {}
        for m, c in g[0].items():
            out[m] = out.get(m, Fraction(0)) + JinvT[row][0] * c
        for m, c in g[1].items():
            out[m] = out.get(m, Fraction(0)) + JinvT[row][1] * c
        return out

    A = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        gi = (mapped(grads[i], 0), mapped(grads[i], 1))
        for j in range(i + 1):
            gj = (mapped(grads[j], 0), mapped(grads[j], 1))
            s = Fraction(0)
            for row in range(2):
                for (a1, b1), c1 in gi[row].items():
                    for (a2, b2), c2 in gj[row].items():
                        s += c1 * c2 * _tri_monomial_integral(a1 + a2, b1 + b2)
            A[i][j] = A[j][i] = abs(detJ) * s
    return A


_TYPE1_VERTS = ((0, 0), (1, 0), (0, 1))
_TYPE2_VERTS = ((1, 0), (1, 1), (0, 1))   # right angle at the second vertex

_elemental_cache: dict = {}


def elemental_matrix_pk(k: int, triangle_type: int, exact: bool = False):
    """Elemental stiffness matrix of the degree-k triangle (unit coefficient).

    The mesh triangles are all congruent right triangles, so the matrix is
    independent of the edge length; type 1 has the right angle at vertex 1,
    type 2 at vertex 2.
    """
    if triangle_type not in (1, 2):
        raise ValueError("triangle_type must be 1 or 2")
    key = (k, triangle_type)
    if key not in _elemental_cache:
        verts = _TYPE1_VERTS if triangle_type == 1 else _TYPE2_VERTS
        _elemental_cache[key] = _exact_elemental(k, verts)
    M = _elemental_cache[key]
    if exact:
        return M
    return np.array([[float(x) for x in row] for row in M])


def _cell_triangles(k: int):
    """Per-cell triangles as (type, vertex offsets, node offsets on the k-grid).

    Offsets are in units of the fine node grid (spacing h/k); the cell spans
    k fine steps per axis.  Node offsets follow the reference ordering.
    """
    out = []
    for ttype, verts in ((1, ((0, 0), (k, 0), (0, k))), (2, ((k, 0), (k, k), (0, k)))):
        (x1, y1), (x2, y2), (x3, y3) = verts
        offsets = []
        for (xh, yh) in _ref_nodes(k):
            px = x1 + (x2 - x1) * xh + (x3 - x1) * yh
            py = y1 + (y2 - y1) * xh + (y3 - y1) * yh
            offsets.append((int(px), int(py)))
        out.append((ttype, verts, offsets))
    return out


def assemble_pk_2d(cfg: MeshConfig) -> SparseSymmetricMatrix:
    """Triangular stiffness matrix over internal nodes, lexicographic (x fastest).

    A variable coefficient is sampled at the barycenter of each triangle and
    applied as a scalar factor, keeping every elemental matrix an exact
    scaling of the reference one.
    """
    if cfg.family != "P":
        raise ValueError("assemble_pk_2d needs a triangular-family config")
    k, n = cfg.k, cfg.n_sub
    m = n * k
    nd = m - 1
    dim = nd * nd
    h = 1.0 / n
    ael = {t: elemental_matrix_pk(k, t) for t in (1, 2)}
    tris = _cell_triangles(k)
    rows: list = []
    cols: list = []
    vals: list = []
    for cy in range(n):
        for cx in range(n):
            for ttype, verts, offsets in tris:
                if cfg.a is None:
                    scale = 1.0
                else:
                    bx = (cx + (verts[0][0] + verts[1][0] + verts[2][0]) / (3.0 * k)) * h
                    by = (cy + (verts[0][1] + verts[1][1] + verts[2][1]) / (3.0 * k)) * h
                    scale = float(cfg.a(bx, by))
                    if scale <= 0:
                        raise ValueError(f"coefficient must be positive, got {scale} at ({bx}, {by})")
                A = ael[ttype]
                gids = []
                for (ox, oy) in offsets:
                    p, q = cx * k + ox, cy * k + oy
                    gids.append((q - 1) * nd + (p - 1) if 0 < p < m and 0 < q < m else -1)
                for li, gi in enumerate(gids):
                    if gi < 0:
                        continue
                    for lj in range(len(gids)):
                        gj = gids[lj]
                        if gj < 0 or gj > gi:
                            continue
                        v = A[li, lj]
                        if v != 0.0:
                            rows.append(gi)
                            cols.append(gj)
                            vals.append(scale * v)
    return SparseSymmetricMatrix.from_lower_coo(rows, cols, vals, dim)


# ---------------------------------------------------------------------------
# tensor-product elements


def _reference_values(k: int, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the 1D basis at the given reference points."""
    polys = lagrange_polynomials(k)
    val = np.array([[float(p(float(t))) for t in points] for p in polys])
    der = np.array([[float(p.derivative()(float(t))) for t in points] for p in polys])
    return val, der


def _exact_1d_element_matrices(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference stiffness and mass elemental matrices, exact then floated."""
    polys = lagrange_polynomials(k)
    ders = [p.derivative() for p in polys]
    K = [[float((ders[i] * ders[j]).integral_01()) for j in range(k + 1)] for i in range(k + 1)]
    M = [[float((polys[i] * polys[j]).integral_01()) for j in range(k + 1)] for i in range(k + 1)]
    return np.array(K), np.array(M)


def _assemble_1d(k: int, n: int, element: np.ndarray) -> sp.csr_matrix:
    nd = n * k - 1
    rows, cols, vals = [], [], []
    for e in range(n):
        gids = [e * k + l - 1 for l in range(k + 1)]
        for li, gi in enumerate(gids):
            if not (0 <= gi < nd):
                continue
            for lj, gj in enumerate(gids):
                if 0 <= gj < nd and gj <= gi and element[li, lj] != 0.0:
                    rows.append(gi)
                    cols.append(gj)
                    vals.append(element[li, lj])
    return SparseSymmetricMatrix.from_lower_coo(rows, cols, vals, nd).csr


def stiffness_1d(k: int, n: int) -> sp.csr_matrix:
    """Unit-coefficient 1D stiffness (unnormalized; h * A matches the cut symbol matrix)."""
    K, _ = _exact_1d_element_matrices(k)
    return _assemble_1d(k, n, K * n)   # elementwise 1/h factor


def mass_1d(k: int, n: int) -> sp.csr_matrix:
    _, M = _exact_1d_element_matrices(k)
    return _assemble_1d(k, n, M / n)


def assemble_qk(cfg: MeshConfig) -> SparseSymmetricMatrix:
    """Tensor-element stiffness over internal DOFs.

    Constant coefficient uses exact per-element matrices (1D) and the tensor
    identity stiffness (x) mass + mass (x) stiffness (2D).  A variable
    coefficient is integrated per element with (k+1)-point Gauss-Legendre
    per axis.
    """
    if cfg.family != "Q":
        raise ValueError("assemble_qk needs a tensor-family config")
    k, n, d = cfg.k, cfg.n_sub, cfg.d
    h = 1.0 / n
    if cfg.a is None:
        if d == 1:
            return SparseSymmetricMatrix(stiffness_1d(k, n))
        K1 = stiffness_1d(k, n)
        M1 = mass_1d(k, n)
        A = sp.kron(M1, K1) + sp.kron(K1, M1)
        return SparseSymmetricMatrix(A.tocsr())

    nq = k + 1
    xq, wq = np.polynomial.legendre.leggauss(nq)
    tq = (xq + 1.0) / 2.0
    wq = wq / 2.0
    val, der = _reference_values(k, tq)
    nd = n * k - 1
    if d == 1:
        rows, cols, vals = [], [], []
        for e in range(n):
            xs = (e + tq) * h
            av = np.array([float(cfg.a(x)) for x in xs])
            if np.any(av <= 0):
                raise ValueError("coefficient must be positive on the mesh")
            Ael = (der * (wq * av)) @ der.T / h
            gids = [e * k + l - 1 for l in range(k + 1)]
            for li, gi in enumerate(gids):
                if not (0 <= gi < nd):
                    continue
                for lj, gj in enumerate(gids):
                    if 0 <= gj < nd and gj <= gi:
                        rows.append(gi)
                        cols.append(gj)
                        vals.append(Ael[li, lj])
        return SparseSymmetricMatrix.from_lower_coo(rows, cols, vals, nd)

    rows, cols, vals = [], [], []
    # d == 2: local dof (ly, lx); gradients scale as 1/h, area as h^2
    for ey in range(n):
        ys = (ey + tq) * h
        for ex in range(n):
            xs = (ex + tq) * h
            av = np.array([[float(cfg.a(x, y)) for x in xs] for y in ys])
            if np.any(av <= 0):
                raise ValueError("coefficient must be positive on the mesh")
            Ael = np.zeros((k + 1, k + 1, k + 1, k + 1))
            for qy in range(nq):
                for qx in range(nq):
                    w = wq[qy] * wq[qx] * av[qy, qx]
                    dx = np.outer(val[:, qy], der[:, qx])
                    dy = np.outer(der[:, qy], val[:, qx])
                    Ael += w * (np.multiply.outer(dx, dx) + np.multiply.outer(dy, dy))
            gx = [ex * k + l - 1 for l in range(k + 1)]
            gy = [ey * k + l - 1 for l in range(k + 1)]
            for ly in range(k + 1):
                if not (0 <= gy[ly] < nd):
                    continue
                for lx in range(k + 1):
                    if not (0 <= gx[lx] < nd):
                        continue
                    gi = gy[ly] * nd + gx[lx]
                    for my in range(k + 1):
                        if not (0 <= gy[my] < nd):
                            continue
                        for mx in range(k + 1):
                            if not (0 <= gx[mx] < nd):
                                continue
                            gj = gy[my] * nd + gx[mx]
                            if gj <= gi:
                                rows.append(gi)
                                cols.append(gj)
                                vals.append(Ael[ly, lx, my, mx])
    return SparseSymmetricMatrix.from_lower_coo(rows, cols, vals, nd * nd)


# ---------------------------------------------------------------------------
# node grouping relating the mesh ordering to the cut symbol matrix


def pk_grouping_permutation(k: int, n_sub: int) -> np.ndarray:
    """Mesh-to-grouped-index bijection for the cut symbol-matrix comparison.

    Internal nodes in lexicographic mesh order (x fastest) are mapped to the
    cell-row-major grouped order (cell row, cell column, node offsets), the
    grouping of nodal values in bundles of k^2 per cell.  For k=1 this is
    the identity.
    """
    if k not in (1, 2, 3):
        raise ValueError("grouping defined for triangular degrees 1..3")
    n = n_sub
    m = n * k
    nd = m - 1
    # grouped rank of each (yblock, xblock, yoff, xoff), skipping cut slots
    rank = {}
    pos = 0
    for yb in range(n):
        for xb in range(n):
            for cy in range(k):
                if yb * k + cy >= m - 1:
                    continue
                for cx in range(k):
                    if xb * k + cx >= m - 1:
                        continue
                    rank[(yb, xb, cy, cx)] = pos
                    pos += 1
    perm = np.empty(nd * nd, dtype=np.int64)
    for q in range(1, m):
        yb, cy = divmod(q - 1, k)
        for p in range(1, m):
            xb, cx = divmod(p - 1, k)
            perm[(q - 1) * nd + (p - 1)] = rank[(yb, xb, cy, cx)]
    return perm


def grouped_to_toeplitz_cut(k: int, n_sub: int) -> np.ndarray:
    """Positions of the grouped ordering inside the native cut ordering.

    The cut of the two-level symbol matrix keeps indices in the operator's
    own nesting (level 1 outermost); this index array re-enumerates them in
    the cell-row-major grouped order used by pk_grouping_permutation, so
    that  A[i, j] == cut[g2t[perm[i]], g2t[perm[j]]].
    """
    n = n_sub
    keep = cut_keep_indices(k, (n, n))
    native_pos = {int(idx): pos for pos, idx in enumerate(keep)}
    out = []
    r = k * k
    for yb in range(n):
        for xb in range(n):
            for cy in range(k):
                if yb * k + cy >= n * k - 1:
                    continue
                for cx in range(k):
                    if xb * k + cx >= n * k - 1:
                        continue
                    native = (xb * n + yb) * r + cy * k + cx
                    out.append(native_pos[native])
    return np.array(out, dtype=np.int64)
