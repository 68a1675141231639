"""Exact Lagrange-basis machinery on [0, 1] with equispaced knots.

Everything in this module is computed in exact rational arithmetic
(`fractions.Fraction`); floats appear only when the caller converts the
final blocks.  This removes any tolerance question from the foundation:
the gradient Gram matrices and the tridiagonal-block data derived from
them are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_DEGREE = 8


@dataclass(frozen=True)
class Polynomial:
    """Univariate polynomial with exact rational coefficients, ascending order."""

    coeffs: tuple[Fraction, ...]

    def __call__(self, t):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def derivative(self) -> "Polynomial":
        return Polynomial(tuple(d * c for d, c in enumerate(self.coeffs) if d > 0))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(tuple(out))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [Fraction(0)] * (n - len(self.coeffs))
        for j, b in enumerate(other.coeffs):
            a[j] += b
        return Polynomial(tuple(a))

    def integral_01(self) -> Fraction:
        """Integral over [0, 1], term by term."""
        return sum((c / (d + 1) for d, c in enumerate(self.coeffs)), Fraction(0))


@dataclass(frozen=True)
class GradGram:
    """Gram matrix of basis-derivative inner products on [0, 1], exact entries."""

    entries: tuple[tuple[Fraction, ...], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def as_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])


def _check_degree(k: int) -> None:
    if not (1 <= int(k) <= MAX_DEGREE):
        raise ValueError(f"degree k must be in 1..{MAX_DEGREE}, got {k}")


def lagrange_polynomials(k: int) -> list[Polynomial]:
    """Basis of degree-k interpolation polynomials on knots j/k, j=0..k.

    The i-th polynomial is 1 at knot i/k and 0 at every other knot, so the
    family sums identically to one.
    """
    _check_degree(k)
    polys = []
    for i in range(k + 1):
        p = Polynomial((Fraction(1),))
        for j in range(k + 1):
            if j == i:
                continue
            # linear factor (k t - j)/(i - j)
            p = p * Polynomial((Fraction(-j, i - j), Fraction(k, i - j)))
        polys.append(p)
    return polys


def grad_inner_products(k: int) -> GradGram:
    """Exact (k+1)x(k+1) matrix of integrals of products of basis derivatives."""
    _check_degree(k)
    dpolys = [p.derivative() for p in lagrange_polynomials(k)]
    rows = []
    for i in range(k + 1):
        rows.append(tuple((dpolys[i] * dpolys[j]).integral_01() for j in range(k + 1)))
    return GradGram(tuple(rows))


def build_1d_symbol_blocks(k: int, exact: bool = False):
    """Blocks (K_0, K_1) of the degree-k one-dimensional stiffness symbol.

    K_0 carries the within-period couplings (with the wrap-around entry
    folded into its last diagonal element) and K_1, nonzero only in its
    last column, the couplings to the next period.  The symbol
    K_0 + K_1 e^{i t} + K_1^T e^{-i t} is Hermitian for real t.

    With ``exact=True`` the blocks are returned as nested Fraction tuples;
    the default converts once to float64 (round to nearest).
    """
    _check_degree(k)
    g = grad_inner_products(k).entries
    K0 = [[g[i][j] for j in range(1, k + 1)] for i in range(1, k + 1)]
    K0[k - 1][k - 1] += g[0][0]
    K1 = [[Fraction(0)] * k for _ in range(k)]
    for i in range(1, k + 1):
        K1[i - 1][k - 1] = g[0][i]
    if exact:
        return tuple(tuple(r) for r in K0), tuple(tuple(r) for r in K1)
    to_f = lambda M: np.array([[float(x) for x in row] for row in M])
    return to_f(K0), to_f(K1)


def det_identity_constant(k: int) -> Fraction:
    """Exact constant d_k in det(f_k(t)) = d_k (2 - 2 cos t).

    Equals the determinant of the gradient Gram matrix restricted to the
    interior basis functions; the restriction to indices 1..k and to
    1..k-1 give the same value.
    """
    _check_degree(k)
    g = grad_inner_products(k).entries
    sub = [[g[i][j] for j in range(1, k + 1)] for i in range(1, k + 1)]
    return _fraction_det(sub)


def _fraction_det(m) -> Fraction:
    """Determinant by fraction-free-ish Gaussian elimination, exact."""
    n = len(m)
    if n == 0:
        return Fraction(1)
    a = [list(map(Fraction, row)) for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            if a[r][col] == 0:
                continue
            f = a[r][col] * inv
            for c in range(col, n):
                a[r][c] -= f * a[col][c]
    return det
