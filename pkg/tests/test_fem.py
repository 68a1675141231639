"""Assembly: elemental matrices, stiffness matrices, symbol-matrix equivalences."""

from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp

from gltkit import fem, toeplitz
from gltkit.fem import (
    MeshConfig,
    assemble_pk_2d,
    assemble_qk,
    elemental_matrix_pk,
    grouped_to_toeplitz_cut,
    pk_grouping_permutation,
)
from gltkit.symbols import builtin
from gltkit.toeplitz import cut_principal, toeplitz_from_symbol


def test_elemental_k1_exact():
    f = Fraction
    A1 = elemental_matrix_pk(1, 1, exact=True)
    assert A1 == [[f(1), f(-1, 2), f(-1, 2)],
                  [f(-1, 2), f(1, 2), f(0)],
                  [f(-1, 2), f(0), f(1, 2)]]
    A2 = elemental_matrix_pk(1, 2, exact=True)
    assert A2 == [[f(1, 2), f(-1, 2), f(0)],
                  [f(-1, 2), f(1), f(-1, 2)],
                  [f(0), f(-1, 2), f(1, 2)]]


def test_elemental_k2_reference_entries():
    A = elemental_matrix_pk(2, 1)
    expect = np.array([
        [1, 1 / 6, 1 / 6, 0, -2 / 3, -2 / 3],
        [1 / 6, 1 / 2, 0, 0, 0, -2 / 3],
        [1 / 6, 0, 1 / 2, 0, -2 / 3, 0],
        [0, 0, 0, 8 / 3, -4 / 3, -4 / 3],
        [-2 / 3, 0, -2 / 3, -4 / 3, 8 / 3, 0],
        [-2 / 3, -2 / 3, 0, -4 / 3, 0, 8 / 3],
    ])
    assert np.abs(A - expect).max() < 1e-14


def test_elemental_k3_spot_entries():
    A = elemental_matrix_pk(3, 1)
    assert abs(A[9, 9] - 81.0 / 10.0) < 1e-14
    assert abs(A[0, 0] - 17.0 / 20.0) < 1e-14
    assert abs(A[0, 6] + 51.0 / 80.0) < 1e-14
    assert abs(A[3, 3] - 27.0 / 8.0) < 1e-14
    assert abs(A[9, 3] + 81.0 / 40.0) < 1e-14


def test_elemental_type2_is_permuted_type1():
    # both triangle shapes carry the same spectrum (congruent elements)
    for k in (1, 2, 3):
        w1 = np.linalg.eigvalsh(elemental_matrix_pk(k, 1))
        w2 = np.linalg.eigvalsh(elemental_matrix_pk(k, 2))
        assert np.abs(w1 - w2).max() < 1e-12


def test_mesh_config_validation():
    with pytest.raises(ValueError):
        MeshConfig(d=1, family="P", k=2, n_sub=4)
    with pytest.raises(ValueError):
        MeshConfig(d=2, family="P", k=4, n_sub=4)
    with pytest.raises(ValueError):
        MeshConfig(d=2, family="Q", k=9, n_sub=4)
    with pytest.raises(ValueError):
        MeshConfig(d=2, family="P", k=2, n_sub=1)


def test_p1_assembly_is_five_point_stencil():
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=1, n_sub=4)).dense()
    assert A.shape == (9, 9)
    assert np.allclose(np.diag(A), 4.0)
    assert np.allclose(A, A.T)
    # nonzero off-diagonals are exactly the four neighbors with -1
    offs = A - np.diag(np.diag(A))
    assert set(np.round(np.unique(offs), 14)) <= {-1.0, 0.0}


@pytest.mark.parametrize("k,n", [(1, 4), (2, 2), (2, 4), (3, 2), (3, 3)])
def test_pk_equals_permuted_cut_toeplitz(k, n):
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=k, n_sub=n)).dense()
    op = toeplitz_from_symbol(builtin(f"f_P{k}"), (n, n))
    cut = cut_principal(op)
    perm = pk_grouping_permutation(k, n)
    g2t = grouped_to_toeplitz_cut(k, n)
    B = cut[np.ix_(g2t[perm], g2t[perm])]
    assert np.abs(A - B).max() < 1e-12


def test_grouping_identity_for_k1():
    assert np.array_equal(pk_grouping_permutation(1, 5), np.arange(16))


def test_grouping_is_bijection():
    for k, n in ((2, 2), (3, 2)):
        perm = pk_grouping_permutation(k, n)
        assert sorted(perm) == list(range((n * k - 1) ** 2))


def test_assembly_exact_symmetry():
    a = lambda x, y: np.exp(x + y)
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=6, a=a)).csr
    assert (A != A.T).nnz == 0


def test_variable_coefficient_spd():
    a = lambda x, y: np.exp(x + y)
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=8, a=a)).dense()
    np.linalg.cholesky(A)   # raises if not SPD


def test_nonpositive_coefficient_rejected():
    with pytest.raises(ValueError):
        assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=4, a=lambda x, y: x - 2.0))
    with pytest.raises(ValueError):
        assemble_qk(MeshConfig(d=1, family="Q", k=2, n_sub=4, a=lambda x: -1.0))


def test_interior_row_sums_vanish():
    # constant functions are annihilated away from the boundary
    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=6)).csr
    w = A @ np.ones(A.shape[0])
    nd = 2 * 6 - 1
    interior = [q * nd + p for q in range(2, nd - 2) for p in range(2, nd - 2)]
    assert np.abs(w[interior]).max() < 1e-12


def test_q1d_k1_tridiagonal():
    A = assemble_qk(MeshConfig(d=1, family="Q", k=1, n_sub=4)).dense()
    assert np.abs(A / 4.0 - np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2.0]])).max() < 1e-14


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_q1d_matches_cut_toeplitz(k):
    n = 8
    A = assemble_qk(MeshConfig(d=1, family="Q", k=k, n_sub=n)).dense()
    cut = cut_principal(toeplitz_from_symbol(builtin("f_Qk_1d", k=k), (n,)))
    assert np.abs(A / n - cut).max() < 1e-12


def test_q2d_dimension_and_tensor_identity():
    A = assemble_qk(MeshConfig(d=2, family="Q", k=2, n_sub=8))
    assert A.dimension == 15 ** 2
    # elementwise quadrature path agrees with the exact tensor assembly
    B = assemble_qk(MeshConfig(d=2, family="Q", k=2, n_sub=4, a=lambda x, y: 1.0))
    C = assemble_qk(MeshConfig(d=2, family="Q", k=2, n_sub=4))
    assert np.abs(B.dense() - C.dense()).max() < 1e-12


def test_q1d_variable_quadrature_exact_for_linear():
    # a(x) = x integrates exactly with Gauss-Legendre; compare against sympy
    import sympy

    x = sympy.Symbol("x")
    k, n = 2, 2
    A = assemble_qk(MeshConfig(d=1, family="Q", k=k, n_sub=n, a=lambda t: t)).dense()
    # dense reference: basis functions on [0,1] split into n elements
    knots = [sympy.Rational(j, n * k) for j in range(n * k + 1)]
    basis = []
    for j in range(1, n * k):
        # piecewise Lagrange basis on its element(s)
        e_of = lambda idx: idx // k
        exprs = {}
        for e in range(n):
            lo, hi = sympy.Rational(e, n), sympy.Rational(e + 1, n)
            nodes = [lo + (hi - lo) * sympy.Rational(m, k) for m in range(k + 1)]
            if not any(knots[j] == nd for nd in nodes):
                continue
            li = nodes.index(knots[j])
            expr = sympy.Integer(1)
            for m, nd in enumerate(nodes):
                if m != li:
                    expr *= (x - nd) / (nodes[li] - nd)
            exprs[e] = expr
        basis.append(exprs)
    ref = np.zeros_like(A)
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            s = sympy.Integer(0)
            for e in set(bi) & set(bj):
                lo, hi = sympy.Rational(e, n), sympy.Rational(e + 1, n)
                s += sympy.integrate(x * sympy.diff(bi[e], x) * sympy.diff(bj[e], x), (x, lo, hi))
            ref[i, j] = float(s)
    assert np.abs(A - ref).max() < 1e-12


def test_matrix_market_round_trip(tmp_path):
    import scipy.io

    A = assemble_pk_2d(MeshConfig(d=2, family="P", k=2, n_sub=3))
    text = A.to_matrix_market()
    path = tmp_path / "a.mtx"
    path.write_text(text)
    B = scipy.io.mmread(str(path)).tocsr()
    assert np.abs((B - A.csr)).max() < 1e-15
    assert "symmetric" in text.splitlines()[0]
