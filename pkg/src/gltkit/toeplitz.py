"""Multilevel block Toeplitz and circulant operators generated by a symbol.

The Toeplitz operator is implicit: its matvec embeds every level into a
circulant of twice the size and runs FFTs, so the cost is O(N log N).
Dense materialization is available below a size threshold for tests,
spectra, and the principal-submatrix cuts that relate the operator to
assembled stiffness matrices.

Index convention (matching the Kronecker construction of the generating
sum): level 1 is outermost, the block component is innermost, and the
flat index of (b_1, ..., b_t, c) is ((b_1 n_2 + b_2) ... ) r + c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symbols import MatrixSymbol, evaluate_grid

DENSE_LIMIT = 4000


def _check_sizes(sym: MatrixSymbol, n) -> tuple[int, ...]:
    n = tuple(int(x) for x in (n if np.iterable(n) else (n,)))
    if len(n) != sym.levels:
        raise ValueError(f"need {sym.levels} level sizes, got {n}")
    for deg, nl in zip(sym.degree, n):
        if deg >= nl:
            raise ValueError(f"symbol degree {deg} must be below the level size {nl}")
    return n


def _fft_grid_blocks(sym: MatrixSymbol, m: tuple[int, ...], negate: bool) -> np.ndarray:
    """Symbol samples on the circulant frequency grid 2 pi j / m.

    The numpy forward FFT carries e^{-i...}, so circulant eigenblocks in the
    fft->multiply->ifft pipeline are the symbol evaluated at -2 pi j / m;
    ``negate`` selects that orientation.
    """
    axes = [2.0 * np.pi * np.arange(ml) / ml for ml in m]
    if negate:
        axes = [-ax for ax in axes]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return evaluate_grid(sym, mesh)


@dataclass
class BlockToeplitzOperator:
    """Implicit multilevel block Toeplitz matrix T_n(f)."""

    symbol: MatrixSymbol
    n: tuple[int, ...]

    def __post_init__(self):
        self.n = _check_sizes(self.symbol, self.n)
        self.r = self.symbol.block_size
        self.N = self.r * int(np.prod(self.n))
        self._m = tuple(2 * nl for nl in self.n)
        self._eigblocks = _fft_grid_blocks(self.symbol, self._m, negate=True)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.N)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.N,):
            raise ValueError(f"vector must have length {self.N}")
        t = len(self.n)
        V = np.zeros(self._m + (self.r,), dtype=complex)
        V[tuple(slice(0, nl) for nl in self.n)] = v.reshape(self.n + (self.r,))
        Vh = np.fft.fftn(V, axes=tuple(range(t)), norm="ortho")
        Wh = np.einsum("...ij,...j->...i", self._eigblocks, Vh)
        W = np.fft.ifftn(Wh, axes=tuple(range(t)), norm="ortho")
        out = W[tuple(slice(0, nl) for nl in self.n)].reshape(-1)
        if self.symbol.hermitian and np.isrealobj(v):
            return np.ascontiguousarray(out.real)
        return np.ascontiguousarray(out)

    def dense(self, limit: int | None = None) -> np.ndarray:
        """Explicit matrix; refuses above the dense materialization threshold."""
        limit = DENSE_LIMIT if limit is None else limit
        if self.N > limit:
            raise ValueError(f"dense materialization capped at {limit}, N={self.N}")
        t = len(self.n)
        r = self.r
        T = np.zeros((self.N, self.N), dtype=complex)
        strides = np.cumprod((self.n + (1,))[::-1])[::-1][1:]  # block strides per level
        for j, B in self.symbol.blocks.items():
            ranges = [np.arange(max(0, jl), min(nl, nl + jl)) for jl, nl in zip(j, self.n)]
            mesh = np.meshgrid(*ranges, indexing="ij")
            rows_b = sum(m.ravel() * s for m, s in zip(mesh, strides))
            cols_b = rows_b - int(np.dot(j, strides))
            for rb, cb in zip(rows_b, cols_b):
                T[rb * r:(rb + 1) * r, cb * r:(cb + 1) * r] += B
        if np.allclose(T.imag, 0, atol=1e-14):
            return T.real.copy()
        return T


def toeplitz_from_symbol(sym: MatrixSymbol, n) -> BlockToeplitzOperator:
    return BlockToeplitzOperator(sym, n if np.iterable(n) else (n,))


@dataclass
class BlockCirculantMatrix:
    """Multilevel block circulant with cached spectral factorization.

    Supports matvec, solve, and the symmetric inverse square root, each in
    O(N log N) via length-n FFTs and cached per-frequency block data.
    Corrections lift the singular zero-frequency block:

    - ``"symbol"``: h^2 times the all-ones block added to every frequency
      (a symbol-level correction);
    - ``"global"``: the rank-one matrix correction h^2 e e^T with e the
      all-ones vector of the full dimension, which touches only the
      zero-frequency block with weight h^2 N(n).
    """

    symbol: MatrixSymbol
    n: tuple[int, ...]
    correction: str | None = None
    h: float | None = None

    def __post_init__(self):
        self.n = _check_sizes(self.symbol, self.n)
        self.r = self.symbol.block_size
        self.N = self.r * int(np.prod(self.n))
        if self.correction not in (None, "symbol", "global"):
            raise ValueError(f"unknown correction {self.correction!r}")
        if self.correction is not None and self.h is None:
            raise ValueError("corrections require the mesh width h")
        G = _fft_grid_blocks(self.symbol, self.n, negate=True)
        ones = np.ones((self.r, self.r))
        if self.correction == "symbol":
            G = G + (self.h ** 2) * ones
        elif self.correction == "global":
            G = G.copy()
            G[(0,) * len(self.n)] += (self.h ** 2) * int(np.prod(self.n)) * ones
        self.samples = G
        self._lam = None
        self._U = None
        if self.symbol.hermitian:
            self._lam, self._U = np.linalg.eigh(G)

    # -- spectral data -----------------------------------------------------
    def block_eigenvalues(self) -> np.ndarray:
        if self._lam is None:
            raise ValueError("block eigenvalues cached only for Hermitian symbols")
        return self._lam

    def ensure_positive_definite(self) -> None:
        lam_min = float(self.block_eigenvalues().min())
        if lam_min <= 0:
            j = np.unravel_index(int(np.argmin(self._lam.min(axis=-1))), self.n)
            raise ValueError(
                f"circulant block at frequency index {j} is not positive definite "
                f"(min eigenvalue {lam_min:.3e}); check the correction h or the symbol")

    # -- transforms ----------------------------------------------------------
    def _apply(self, blocks: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Apply the per-frequency blocks to a vector or a matrix of columns."""
        v = np.asarray(v)
        single = v.ndim == 1
        if v.shape[0] != self.N:
            raise ValueError(f"vectors must have length {self.N}")
        cols = 1 if single else v.shape[1]
        t = len(self.n)
        V = v.reshape(self.n + (self.r, cols))
        Vh = np.fft.fftn(V, axes=tuple(range(t)), norm="ortho")
        Wh = np.einsum("...ij,...jc->...ic", blocks, Vh)
        W = np.fft.ifftn(Wh, axes=tuple(range(t)), norm="ortho")
        out = W.reshape(self.N) if single else W.reshape(self.N, cols)
        if np.isrealobj(v) and self.symbol.hermitian:
            # contiguous copy: .real alone is a strided view that knocks
            # downstream matmuls off the BLAS fast path
            return np.ascontiguousarray(out.real)
        return np.ascontiguousarray(out)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self._apply(self.samples, v)

    def _raise_singular(self) -> None:
        dets = np.abs(np.linalg.det(self.samples))
        j = np.unravel_index(int(np.argmin(dets)), self.n)
        raise ValueError(f"singular circulant block at frequency index {j}")

    def solve(self, v: np.ndarray) -> np.ndarray:
        if self._lam is not None:
            # inverting a numerically singular block would not raise on its
            # own; detect it from the cached block eigenvalues
            amax = float(np.abs(self._lam).max())
            if float(np.abs(self._lam).min()) <= 1e-14 * amax:
                self._raise_singular()
        try:
            inv = np.linalg.inv(self.samples)
        except np.linalg.LinAlgError:
            self._raise_singular()
        self.solve = lambda w, _inv=inv: self._apply(_inv, w)  # cache
        return self._apply(inv, v)

    def apply_inv_sqrt(self, v: np.ndarray) -> np.ndarray:
        """Action of the inverse symmetric square root (Hermitian PD only)."""
        self.ensure_positive_definite()
        lam, U = self._lam, self._U
        blocks = (U * (lam[..., None, :] ** -0.5)) @ np.conj(np.swapaxes(U, -1, -2))
        self.apply_inv_sqrt = lambda w, _b=blocks: self._apply(_b, w)
        return self._apply(blocks, v)

    def dense(self) -> np.ndarray:
        if self.N > DENSE_LIMIT:
            raise ValueError(f"dense materialization capped at {DENSE_LIMIT}, N={self.N}")
        return self.matvec(np.eye(self.N))


def circulant_from_symbol(sym: MatrixSymbol, n) -> BlockCirculantMatrix:
    return BlockCirculantMatrix(sym, n if np.iterable(n) else (n,))


def strang_corrected_preconditioner(sym: MatrixSymbol, n, h: float,
                                    mode: str = "symbol") -> BlockCirculantMatrix:
    """Circulant preconditioner with the h^2-rank-structured correction.

    ``mode="symbol"`` adds h^2 times the all-ones block to the generating
    symbol; ``mode="global"`` applies the rank-one correction h^2 e e^T to
    the assembled circulant instead.  Either way, every block eigenvalue
    must come out strictly positive.
    """
    C = BlockCirculantMatrix(sym, n if np.iterable(n) else (n,), correction=mode, h=h)
    C.ensure_positive_definite()
    return C


# ---------------------------------------------------------------------------
# principal-submatrix cuts


def cut_keep_slots(k: int, n: int) -> np.ndarray:
    """Kept per-level slots: all of 0..nk-1 except the very last."""
    return np.arange(n * k - 1)


def cut_keep_indices(k: int, n: tuple[int, ...]) -> np.ndarray:
    """Flat kept indices of the per-level leading principal cut.

    The block component is the k^t tensor of per-level offsets with the
    LEVEL-1 offset fastest (the block layout of the 2D stiffness symbols:
    component = c_2 * k + c_1 while level 1 is the outermost block level).
    Per level, the cut deletes the last of the n*k scalar slots; jointly
    this removes the last row/column inside every inner block together
    with the last outer block line.
    """
    t = len(n)
    r = k ** t
    slot_sets = [cut_keep_slots(k, nl) for nl in n]
    mesh = np.meshgrid(*slot_sets, indexing="ij")
    slots = [m.ravel() for m in mesh]
    blocks = [s // k for s in slots]
    offs = [s % k for s in slots]
    flat_block = blocks[0]
    for lvl in range(1, t):
        flat_block = flat_block * n[lvl] + blocks[lvl]
    comp = offs[t - 1]
    for lvl in range(t - 2, -1, -1):
        comp = comp * k + offs[lvl]
    return flat_block * r + comp


def cut_principal(op: BlockToeplitzOperator, k: int | None = None,
                  mode: str = "last_row_col_per_block_and_last_block") -> np.ndarray:
    """Dense leading-principal cut relating T_n(f) to the stiffness matrix.

    For one level this is the (nk-1) x (nk-1) leading principal submatrix;
    for two levels the cut acts per level as described in cut_keep_indices.
    ``k`` defaults to block_size ** (1/levels).
    """
    if mode != "last_row_col_per_block_and_last_block":
        raise ValueError(f"unknown cut mode {mode!r}")
    t = len(op.n)
    if k is None:
        k = round(op.r ** (1.0 / t))
    if k ** t != op.r:
        raise ValueError(f"block size {op.r} is not a {t}-fold tensor of degree {k}")
    keep = cut_keep_indices(k, op.n)
    T = op.dense()
    return T[np.ix_(keep, keep)]


def impose_dirichlet_like(T: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Boundary-condition imposition that keeps the size unchanged.

    Rows/columns outside ``keep`` are replaced by identity rows/columns, the
    standard way of pinning eliminated boundary entries while preserving
    the matrix dimension.
    """
    N = T.shape[0]
    mask = np.zeros(N, dtype=bool)
    mask[keep] = True
    out = T.copy()
    out[~mask, :] = 0.0
    out[:, ~mask] = 0.0
    out[np.ix_(~mask, ~mask)] = np.eye(int((~mask).sum()))
    return out
