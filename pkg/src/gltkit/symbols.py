"""Matrix-valued trigonometric symbols and their eigenvalue surfaces.

A symbol is a finite Fourier sum f(t) = sum_j B_j exp(i <j, t>) with
r x r matrix coefficients indexed by multi-indices j in Z^t.  This module
holds the generic representation, constructors for the built-in symbols
(the 2D triangular-element stiffness symbols of block size 1/4/9, the 1D
tensor-element symbols of any degree, and the grid-transfer symbols), and
the sampling utilities: eigenvalue surfaces on a periodic grid, their
extrema, and the monotone rearrangement used as a spectral predictor.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .lagrange import build_1d_symbol_blocks

HERMITIAN_TOL = 1e-13


@dataclass(frozen=True)
class MatrixSymbol:
    """Trigonometric polynomial with matrix coefficients.

    blocks maps multi-index tuples (length = levels) to (block_size x
    block_size) complex arrays.  Immutable after construction; the arrays
    are copied and write-protected.
    """

    levels: int
    block_size: int
    blocks: dict = field(repr=False)
    hermitian: bool = True

    def __post_init__(self):
        clean = {}
        for j, B in self.blocks.items():
            j = tuple(int(x) for x in (j if isinstance(j, tuple) else (j,)))
            if len(j) != self.levels:
                raise ValueError(f"multi-index {j} does not have {self.levels} entries")
            B = np.array(B, dtype=complex)
            if B.shape != (self.block_size, self.block_size):
                raise ValueError(f"block {j} has shape {B.shape}")
            B.setflags(write=False)
            clean[j] = B
        object.__setattr__(self, "blocks", clean)
        if self.hermitian:
            for j, B in clean.items():
                neg = tuple(-x for x in j)
                other = clean.get(neg)
                if other is None or not np.allclose(other, B.conj().T, atol=1e-14):
                    raise ValueError(f"hermitian flag set but block {j} breaks symmetry")

    @property
    def degree(self) -> tuple[int, ...]:
        out = [0] * self.levels
        for j in self.blocks:
            for l, jl in enumerate(j):
                out[l] = max(out[l], abs(jl))
        return tuple(out)


def evaluate(sym: MatrixSymbol, theta) -> np.ndarray:
    """Pointwise value of the symbol; Hermitian within 1e-13 when flagged."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (sym.levels,):
        raise ValueError(f"theta must have {sym.levels} components")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    M = np.zeros((sym.block_size, sym.block_size), dtype=complex)
    for j, B in sym.blocks.items():
        M += B * np.exp(1j * float(np.dot(j, theta)))
    return M


def evaluate_grid(sym: MatrixSymbol, thetas: np.ndarray) -> np.ndarray:
    """Vectorized evaluation at an (..., levels) array of points."""
    thetas = np.asarray(thetas, dtype=float)
    r = sym.block_size
    M = np.zeros(thetas.shape[:-1] + (r, r), dtype=complex)
    for j, B in sym.blocks.items():
        phase = np.exp(1j * (thetas @ np.asarray(j, dtype=float)))
        M += phase[..., None, None] * B
    return M


# ---------------------------------------------------------------------------
# built-in symbols


def _one_level(blocks_by_int: dict, r: int, hermitian: bool = True) -> MatrixSymbol:
    return MatrixSymbol(1, r, {(j,): B for j, B in blocks_by_int.items()}, hermitian)


def qk_1d_symbol(k: int) -> MatrixSymbol:
    """Degree-k 1D stiffness symbol K_0 + K_1 e^{it} + K_1^T e^{-it}."""
    K0, K1 = build_1d_symbol_blocks(k)
    blocks = {0: K0, 1: K1, -1: K1.T.copy()}
    return _one_level(blocks, k)


def p1_2d_symbol() -> MatrixSymbol:
    one = lambda v: np.array([[float(v)]])
    blocks = {(0, 0): one(4), (1, 0): one(-1), (-1, 0): one(-1),
              (0, 1): one(-1), (0, -1): one(-1)}
    return MatrixSymbol(2, 1, blocks)


def p2_2d_symbol() -> MatrixSymbol:
    """4x4 symbol of the quadratic triangular-element stiffness on (0,1)^2."""
    al, be, ga = 16.0 / 3.0, 4.0 / 3.0, 4.0
    c00 = np.zeros((4, 4))
    for i in range(3):
        c00[i, i] = al
    c00[3, 3] = ga
    for i, j in ((0, 1), (0, 2), (1, 3), (2, 3)):
        c00[i, j] = c00[j, i] = -be
    c10 = np.zeros((4, 4))
    c10[0, 1] = c10[2, 3] = -be
    c10[3, 3] = be / 4.0
    c01 = np.zeros((4, 4))
    c01[0, 2] = c01[1, 3] = -be
    c01[3, 3] = be / 4.0
    blocks = {(0, 0): c00, (1, 0): c10, (-1, 0): c10.T.copy(),
              (0, 1): c01, (0, -1): c01.T.copy()}
    return MatrixSymbol(2, 4, blocks)


# entries of the 9x9 cubic symbol: (row, col) -> list of (j1, j2, coefficient),
# upper triangle only; Hermitian completion fills the rest.
_P3_COEFFS = {"al": 81.0 / 10.0, "be": 27.0 / 4.0, "ga": 3.0 / 40.0,
              "de": 57.0 / 80.0, "ep": 21.0 / 16.0, "ze": 17.0 / 5.0, "et": 7.0 / 40.0}


def p3_2d_symbol() -> MatrixSymbol:
    """9x9 symbol of the cubic triangular-element stiffness on (0,1)^2."""
    al, be, ga, de, ep, ze, et = (_P3_COEFFS[n] for n in ("al", "be", "ga", "de", "ep", "ze", "et"))
    corner = [(0, 0, -ga), (1, 0, ga), (0, 1, ga), (1, 1, -ga)]
    upper = {
        (0, 0): [(0, 0, al)], (0, 1): [(0, 0, -al / 4)], (0, 2): [(1, 0, -al / 4)],
        (0, 3): [(0, 0, -al / 4)], (0, 6): [(0, 1, -al / 4)],
        (1, 1): [(0, 0, be)], (1, 2): [(0, 0, -be / 4), (1, 0, be / 20)],
        (1, 3): [(0, 0, -be / 5)], (1, 4): [(0, 0, -al / 4)],
        (1, 5): [(0, 0, be / 20), (1, 0, be / 20)],
        (1, 6): [(0, 0, be / 20), (0, 1, be / 20)],
        (1, 7): [(0, 0, be / 20), (0, 1, -be / 4)],
        (1, 8): corner,
        (2, 2): [(0, 0, be)], (2, 3): [(0, 0, be / 20), (-1, 0, be / 20)],
        (2, 5): [(0, 0, -be / 2)],
        (2, 8): [(0, 0, de), (1, 0, -ga / 2), (0, 1, -ep), (-1, 1, -ga / 2)],
        (3, 3): [(0, 0, be)], (3, 4): [(0, 0, -al / 4)],
        (3, 5): [(0, 0, be / 20), (1, 0, -be / 4)],
        (3, 6): [(0, 0, -be / 4), (0, 1, be / 20)],
        (3, 7): [(0, 0, be / 20), (0, 1, be / 20)],
        (3, 8): corner,
        (4, 4): [(0, 0, al)], (4, 5): [(0, 0, -al / 4)], (4, 7): [(0, 0, -al / 4)],
        (5, 5): [(0, 0, be)],
        (5, 8): [(0, 0, -ep), (1, 0, -ga / 2), (0, 1, de), (-1, 1, -ga / 2)],
        (6, 6): [(0, 0, be)], (6, 7): [(0, 0, -be / 2)],
        (6, 8): [(0, 0, de), (1, 0, -ep), (1, -1, -ga / 2), (0, 1, -ga / 2)],
        (7, 7): [(0, 0, be)],
        (7, 8): [(0, 0, -ep), (1, 0, de), (1, -1, -ga / 2), (0, 1, -ga / 2)],
        (8, 8): [(0, 0, ze), (1, 0, -et), (-1, 0, -et), (0, 1, -et), (0, -1, -et)],
    }
    blocks: dict = {}

    def put(j1, j2, i, jj, v):
        key = (j1, j2)
        if key not in blocks:
            blocks[key] = np.zeros((9, 9), dtype=complex)
        blocks[key][i, jj] += v

    for (i, jj), terms in upper.items():
        for (j1, j2, v) in terms:
            put(j1, j2, i, jj, v)
            if i != jj:
                put(-j1, -j2, jj, i, np.conj(v))
    return MatrixSymbol(2, 9, blocks)


def projector_symbol(k: int) -> MatrixSymbol:
    """Symbol of the grid-transfer (prolongation) operator for degree k."""
    if k == 1:
        return _one_level({0: [[1.0]], 1: [[0.5]], -1: [[0.5]]}, 1, hermitian=False)
    if k == 2:
        blocks = {0: [[3 / 4, 3 / 8], [0, 1]],
                  1: [[0, 3 / 8], [0, 0]],
                  -1: [[3 / 4, -1 / 8], [1, 0]],
                  2: [[0, -1 / 8], [0, 0]]}
        return _one_level(blocks, 2, hermitian=False)
    if k == 3:
        blocks = {0: [[0, 1, 0], [-5 / 16, 15 / 16, 5 / 16], [0, 0, 1]],
                  1: [[0, 0, 5 / 16], [0, 0, 0], [0, 0, -1 / 16]],
                  -1: [[15 / 16, -5 / 16, 1 / 16], [1, 0, 0], [9 / 16, 9 / 16, -1 / 16]],
                  2: [[0, 0, 0], [0, 0, 1 / 16], [0, 0, 0]]}
        return _one_level(blocks, 3, hermitian=False)
    raise ValueError(f"no projector symbol for degree {k}")


_BUILTINS = {"f_P1": p1_2d_symbol, "f_P2": p2_2d_symbol, "f_P3": p3_2d_symbol,
             "p_Q1": lambda: projector_symbol(1), "p_Q2": lambda: projector_symbol(2),
             "p_Q3": lambda: projector_symbol(3)}


def builtin(name: str, k: int | None = None) -> MatrixSymbol:
    """Look up a named symbol. 1D stiffness symbols are 'f_Qk_1d' with k, or 'f_Q3_1d'."""
    if name in _BUILTINS:
        return _BUILTINS[name]()
    if name == "f_Qk_1d":
        if k is None:
            raise ValueError("f_Qk_1d requires the degree k")
        return qk_1d_symbol(k)
    if name.startswith("f_Q") and name.endswith("_1d"):
        return qk_1d_symbol(int(name[3:-3]))
    raise ValueError(f"unknown symbol name {name!r}")


# ---------------------------------------------------------------------------
# sampling


@dataclass
class SurfaceSample:
    """Sorted eigenvalue surfaces on the periodic grid t_l = -pi + 2 pi m / g."""

    levels: int
    block_size: int
    grid_count: int
    axis: np.ndarray              # the g grid points shared by every axis
    values: np.ndarray            # shape (g,)*levels + (r,), ascending in r

    def grid_point(self, idx: tuple[int, ...]) -> np.ndarray:
        return self.axis[list(idx)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"theta_{l+1}" for l in range(self.levels)]
                   + [f"s_{i+1}" for i in range(self.block_size)])
        flat = self.values.reshape(-1, self.block_size)
        mesh = np.stack(np.meshgrid(*([self.axis] * self.levels), indexing="ij"),
                        axis=-1).reshape(-1, self.levels)
        for t, row in zip(mesh, flat):
            w.writerow([repr(float(x)) for x in t] + [repr(float(v)) for v in row])
        return buf.getvalue()


def eig_surfaces(sym: MatrixSymbol, g: int) -> SurfaceSample:
    """Eigenvalues of the symbol on a g-per-axis periodic grid, sorted pointwise.

    The grid excludes +pi (duplicate of -pi).  Tiny imaginary parts from the
    Hermitian evaluation are discarded by the eigensolver.
    """
    if not sym.hermitian:
        raise ValueError("eigenvalue surfaces require a Hermitian symbol")
    if g < 2:
        raise ValueError("grid count must be at least 2")
    axis = -np.pi + 2.0 * np.pi * np.arange(g) / g
    r = sym.block_size
    t = sym.levels
    shape = (g,) * t
    values = np.empty(shape + (r,))
    flat = values.reshape(-1, r)
    mesh = np.stack(np.meshgrid(*([axis] * t), indexing="ij"), axis=-1).reshape(-1, t)
    # chunked batched eigensolve; block sizes are tiny so throughput is all
    # that matters
    chunk = max(1, (1 << 22) // (r * r))
    for i0 in range(0, mesh.shape[0], chunk):
        M = evaluate_grid(sym, mesh[i0:i0 + chunk])
        flat[i0:i0 + chunk] = np.linalg.eigvalsh(M)
    return SurfaceSample(t, r, g, axis, values)


def surface_extrema(sample: SurfaceSample) -> list[dict]:
    """Per-surface minimum and maximum with their grid locations."""
    r = sample.block_size
    flat = sample.values.reshape(-1, r)
    if flat.size == 0:
        raise ValueError("empty surface sample")
    rows = []
    for i in range(r):
        s = flat[:, i]
        imin, imax = int(np.argmin(s)), int(np.argmax(s))
        loc_min = np.unravel_index(imin, (sample.grid_count,) * sample.levels)
        loc_max = np.unravel_index(imax, (sample.grid_count,) * sample.levels)
        rows.append({
            "surface": i + 1,
            "min": float(s[imin]),
            "argmin": tuple(float(x) for x in sample.grid_point(loc_min)),
            "max": float(s[imax]),
            "argmax": tuple(float(x) for x in sample.grid_point(loc_max)),
        })
    return rows


def rearranged_sampling(sym: MatrixSymbol, a, target_count: int) -> np.ndarray:
    """Ascending rearrangement of coefficient-scaled symbol eigenvalues.

    Samples a(x) * eig(f(t)) over uniform product grids (x on (0,1]^t at the
    diagonal-sampling points i/g, t on the periodic grid), using the same
    per-axis count g for both grids, the smallest with block_size * g^t >=
    target_count.  All values are pooled, sorted, and linearly resampled to
    exactly target_count entries.

    ``a`` may be None / a constant / a callable of t coordinates; it must be
    positive wherever sampled.
    """
    if target_count < 2:
        raise ValueError("target_count must be at least 2")
    d = sym.levels
    r = sym.block_size
    g = 2
    while r * g ** d < target_count:
        g += 1
    sample = eig_surfaces(sym, g)
    xs = (np.arange(g) + 1.0) / g
    if a is None:
        av = np.ones((g,) * d)
    elif np.isscalar(a):
        av = float(a) * np.ones((g,) * d)
    else:
        mesh = np.meshgrid(*([xs] * d), indexing="ij")
        av = np.vectorize(lambda *c: float(a(*c)))(*mesh)
    if np.any(av <= 0):
        raise ValueError("coefficient must be positive at every sample point")
    pool = (av.reshape(av.shape + (1,) * (d + 1))
            * sample.values.reshape((1,) * d + sample.values.shape)).ravel()
    pool.sort()
    pos = np.linspace(0.0, len(pool) - 1.0, target_count)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, len(pool) - 1)
    frac = pos - lo
    return pool[lo] * (1.0 - frac) + pool[hi] * frac
