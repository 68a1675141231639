"""Block Toeplitz/circulant operators: matvec, solves, corrections, cuts."""

import numpy as np
import pytest

from gltkit import symbols, toeplitz
from gltkit.symbols import builtin, evaluate
from gltkit.toeplitz import (
    BlockCirculantMatrix,
    circulant_from_symbol,
    cut_keep_indices,
    cut_principal,
    impose_dirichlet_like,
    strang_corrected_preconditioner,
    toeplitz_from_symbol,
)

RNG = np.random.default_rng(0x5EED)


def dense_toeplitz_reference(sym, n):
    """Independent dense construction straight from the coefficient placement."""
    n = tuple(n)
    r = sym.block_size
    sizes = list(n)
    N = r * int(np.prod(sizes))
    T = np.zeros((N, N), dtype=complex)
    import itertools

    blocks = list(itertools.product(*[range(s) for s in sizes]))
    pos = {b: i for i, b in enumerate(blocks)}
    for bi in blocks:
        for bj in blocks:
            j = tuple(x - y for x, y in zip(bi, bj))
            B = sym.blocks.get(j)
            if B is None:
                continue
            i0, j0 = pos[bi] * r, pos[bj] * r
            T[i0:i0 + r, j0:j0 + r] = B
    return T


def dense_circulant_reference(sym, n):
    n = tuple(n)
    r = sym.block_size
    import itertools

    blocks = list(itertools.product(*[range(s) for s in n]))
    pos = {b: i for i, b in enumerate(blocks)}
    N = r * len(blocks)
    C = np.zeros((N, N), dtype=complex)
    for j, B in sym.blocks.items():
        for bi in blocks:
            bj = tuple((x - jx) % s for x, jx, s in zip(bi, j, n))
            i0, j0 = pos[bi] * r, pos[bj] * r
            C[i0:i0 + r, j0:j0 + r] += B
    return C


def test_scalar_toeplitz_tridiagonal():
    sym = builtin("f_Qk_1d", k=1)
    T = toeplitz_from_symbol(sym, (4,)).dense()
    expect = np.array([[2, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 2.0]])
    assert np.abs(T - expect).max() == 0.0


def test_dense_matches_reference_and_matvec():
    for name, n in (("f_P2", (3, 3)), ("f_P3", (4, 4)), ("f_Qk_1d", None)):
        sym = builtin(name, k=3) if name == "f_Qk_1d" else builtin(name)
        nn = n or (6,)
        op = toeplitz_from_symbol(sym, nn)
        ref = dense_toeplitz_reference(sym, nn)
        assert np.abs(op.dense() - ref).max() < 1e-15
        v = RNG.standard_normal(op.N)
        assert np.abs(op.matvec(v) - ref.real @ v).max() < 1e-12


def test_operator_hermitian():
    op = toeplitz_from_symbol(builtin("f_P3"), (3, 3))
    x = RNG.standard_normal(op.N)
    y = RNG.standard_normal(op.N)
    assert abs(op.matvec(x) @ y - x @ op.matvec(y)) < 1e-12 * np.linalg.norm(x) * np.linalg.norm(y)


def test_degree_must_fit():
    with pytest.raises(ValueError):
        toeplitz_from_symbol(builtin("p_Q2"), (2,))   # degree 2 needs n > 2


def test_block_row_sums_at_interior():
    # f(0) annihilates constants, so T applied to the all-ones vector vanishes
    # away from the boundary blocks
    op = toeplitz_from_symbol(builtin("f_P2"), (3, 3))
    w = op.matvec(np.ones(op.N))
    interior_block = (1 * 3 + 1) * 4          # middle block of the 3x3 block grid
    assert np.abs(w[interior_block:interior_block + 4]).max() < 1e-13


def test_scalar_circulant_eigenvalues():
    sym = builtin("f_Qk_1d", k=1)
    C = circulant_from_symbol(sym, (4,))
    lam = np.sort(C.block_eigenvalues().ravel())
    assert np.allclose(lam, sorted([0.0, 2.0, 4.0, 2.0]), atol=1e-14)


def test_circulant_matches_reference():
    sym = builtin("f_P2")
    C = circulant_from_symbol(sym, (4, 4))
    ref = dense_circulant_reference(sym, (4, 4)).real
    assert np.abs(C.dense() - ref).max() < 1e-12


def test_circulant_solve_round_trip():
    sym = builtin("f_P2")
    C = strang_corrected_preconditioner(sym, (8, 8), h=1.0 / 8.0)
    x = RNG.standard_normal(C.N)
    y = C.solve(C.matvec(x))
    assert np.linalg.norm(y - x) / np.linalg.norm(x) < 1e-10


def test_circulant_block_eigs_real():
    C = circulant_from_symbol(builtin("f_P3"), (3, 3))
    lam = C.block_eigenvalues()
    assert lam.dtype.kind == "f"


def test_singular_solve_reports_frequency():
    C = circulant_from_symbol(builtin("f_P1"), (4, 4))
    with pytest.raises(ValueError, match="frequency"):
        C.solve(np.ones(C.N))


def test_strang_correction_modes():
    sym = builtin("f_P1")
    for mode in ("symbol", "global"):
        C = strang_corrected_preconditioner(sym, (8, 8), h=1.0 / 8.0, mode=mode)
        assert C.block_eigenvalues().min() > 0
    # symbol mode with r=1: zero-frequency block becomes exactly h^2
    C = strang_corrected_preconditioner(sym, (8, 8), h=1.0 / 8.0, mode="symbol")
    assert abs(C.samples[0, 0, 0, 0].real - 1.0 / 64.0) < 1e-15


def test_symbol_correction_norm_bound():
    # the all-ones block has spectral norm r, so eigenvalue shifts stay below r h^2
    sym = builtin("f_P2")
    h = 1.0 / 16.0
    C0 = circulant_from_symbol(sym, (16, 16))
    C1 = BlockCirculantMatrix(sym, (16, 16), correction="symbol", h=h)
    shift = np.abs(C1.block_eigenvalues() - C0.block_eigenvalues()).max()
    assert shift <= 4 * h * h + 1e-14


def test_global_correction_is_rank_one():
    sym = builtin("f_P2")
    n = (4, 4)
    h = 0.25
    base = circulant_from_symbol(sym, n).dense()
    glob = BlockCirculantMatrix(sym, n, correction="global", h=h).dense()
    N = base.shape[0]
    assert np.abs((glob - base) - h * h * np.ones((N, N))).max() < 1e-12


def test_eigenvalue_localization():
    # all eigenvalues of the dense operator inside the symbol's eigenvalue range
    sym = builtin("f_P2")
    op = toeplitz_from_symbol(sym, (8, 8))
    w = np.linalg.eigvalsh(op.dense())
    s = symbols.eig_surfaces(sym, 128)
    lo, hi = s.values.min(), s.values.max()
    assert w.min() >= lo - 1e-10 and w.max() <= hi + 1e-10


def test_cut_1d_matches_leading_principal():
    sym = builtin("f_Qk_1d", k=2)
    op = toeplitz_from_symbol(sym, (4,))
    cut = cut_principal(op)
    assert cut.shape == (7, 7)
    assert np.abs(cut - op.dense()[:7, :7]).max() == 0.0


def test_cut_2d_k1_is_five_point_laplacian():
    op = toeplitz_from_symbol(builtin("f_P1"), (4, 4))
    cut = cut_principal(op)
    assert cut.shape == (9, 9)
    assert np.allclose(np.diag(cut), 4.0)
    offdiag = cut - np.diag(np.diag(cut))
    assert set(np.round(np.unique(offdiag), 12)) <= {-1.0, 0.0}


def test_keep_indices_count():
    for k, n in ((2, 4), (3, 3)):
        keep = cut_keep_indices(k, (n, n))
        assert len(keep) == (n * k - 1) ** 2


def test_impose_dirichlet_like():
    op = toeplitz_from_symbol(builtin("f_P2"), (3, 3))
    T = op.dense()
    keep = cut_keep_indices(2, (3, 3))
    Tb = impose_dirichlet_like(T, keep)
    assert Tb.shape == T.shape
    mask = np.zeros(T.shape[0], dtype=bool)
    mask[keep] = True
    assert np.abs(Tb[np.ix_(mask, mask)] - T[np.ix_(mask, mask)]).max() == 0.0
    assert np.abs(Tb[np.ix_(~mask, ~mask)] - np.eye((~mask).sum())).max() == 0.0
    assert np.abs(Tb[np.ix_(mask, ~mask)]).max() == 0.0


def test_dense_cap():
    with pytest.raises(ValueError):
        toeplitz_from_symbol(builtin("f_P2"), (64, 64)).dense()
