"""Minimal dense linear-algebra kernel.

Everything the solution pipeline needs reduces to four operations on small
dense matrices: LU solves, eigendecomposition of triangular matrices with
distinct diagonals, analytic matrix functions through a known eigenbasis, and
the moment kernel I(a, b; D) = int_a^b D x e^(Dx) dx.  All matrices in this
package are triangular or similar to a triangular matrix with a spectrum that
is known in closed form, so matrix functions never need Pade or Schur
machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergentIntegral, RepeatedDiagonal, Singular

__all__ = [
    "EigenSystem",
    "lu_factor",
    "lu_solve",
    "solve_right",
    "inv",
    "unitri_inv",
    "tri_eigen",
    "mat_func",
    "i_kernel",
    "cond_1norm",
    "gauss_panels",
]

# Pivot threshold: relative to the max-norm of the matrix being factored.
_PIVOT_TOL = 1e-14

# Relative diagonal gap below which a triangular eigenbasis is meaningless.
_GAP_TOL = 1e-9


@dataclass(frozen=True)
class EigenSystem:
    """Left eigendecomposition of a square matrix A.

    Rows of ``left_vectors`` are left eigenvectors: V @ A = diag(values) @ V,
    hence A = V^{-1} diag(values) V and f(A) = V^{-1} diag(f(values)) V.
    """

    values: np.ndarray
    left_vectors: np.ndarray
    inverse_vectors: np.ndarray

    @property
    def cond(self) -> float:
        """1-norm condition estimate of the eigenvector basis."""
        return cond_1norm(self.left_vectors, self.inverse_vectors)

    def matrix(self) -> np.ndarray:
        """Reassemble the decomposed matrix."""
        return mat_func(self, lambda v: v)


def cond_1norm(a: np.ndarray, a_inv: np.ndarray) -> float:
    return float(np.abs(a).sum(axis=0).max() * np.abs(a_inv).sum(axis=0).max())


def lu_factor(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """LU with scaled partial pivoting; returns (packed LU, permutation).

    Pivots are selected and the singularity test applied relative to each
    candidate row's own max-norm, so strongly row-graded but regular
    matrices (eigenvector bases of well-separated spectra) factor cleanly.
    Raises Singular when the best pivot falls below 1e-14 of its row scale.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    row_scale = np.abs(a).max(axis=1)
    if row_scale.min() == 0.0:
        raise Singular("matrix has a zero row")
    perm = np.arange(n)
    for j in range(n):
        scaled = np.abs(a[j:, j]) / row_scale[j:]
        p = j + int(np.argmax(scaled))
        if scaled[p - j] < _PIVOT_TOL:
            raise Singular(
                f"pivot {a[p, j]:.3e} below {_PIVOT_TOL:.0e} of its row "
                f"scale at column {j}"
            )
        if p != j:
            a[[j, p]] = a[[p, j]]
            row_scale[[j, p]] = row_scale[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        a[j + 1:, j] /= a[j, j]
        a[j + 1:, j + 1:] -= np.outer(a[j + 1:, j], a[j, j + 1:])
    return a, perm


def lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b by partial-pivot LU; b may have several columns."""
    lu, perm = lu_factor(a)
    b = np.asarray(b, dtype=float)
    vector = b.ndim == 1
    x = b.reshape(len(b), -1)[perm].astype(float)
    n = lu.shape[0]
    for j in range(n):          # forward: L y = P b, unit diagonal
        x[j + 1:] -= np.outer(lu[j + 1:, j], x[j])
    for j in range(n - 1, -1, -1):  # backward: U x = y
        x[j] /= lu[j, j]
        if j:
            x[:j] -= np.outer(lu[:j, j], x[j])
    return x[:, 0] if vector else x


def solve_right(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Solve x @ a = b (row-vector convention)."""
    return lu_solve(np.asarray(a, float).T, np.asarray(b, float).T).T


def inv(a: np.ndarray) -> np.ndarray:
    return lu_solve(a, np.eye(len(a)))


def unitri_inv(v: np.ndarray, orientation: str) -> np.ndarray:
    """Inverse of a unitriangular matrix by substitution (no pivoting).

    The eigenvector bases here have unit pivots with all fill on one side;
    substitution preserves their row grading where permuted elimination
    would destroy it.
    """
    n = len(v)
    out = np.eye(n)
    if orientation == "upper":
        for j in range(1, n):
            for i in range(j - 1, -1, -1):
                out[i, j] = -v[i, i + 1:j + 1] @ out[i + 1:j + 1, j]
    elif orientation == "lower":
        for j in range(n - 1):
            for i in range(j + 1, n):
                out[i, j] = -v[i, j:i] @ out[j:i, j]
    else:
        raise ValueError("orientation must be 'upper' or 'lower'")
    return out


def tri_eigen(t: np.ndarray, orientation: str) -> EigenSystem:
    """Eigendecomposition of a triangular matrix with distinct diagonal.

    Eigenvalues are the diagonal entries; the left eigenvector for the pivot
    at position i is normalized to 1 there and filled in by substitution
    toward the open side of the triangle.  The eigenvector matrix is
    unitriangular, so its inverse always exists.
    """
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    if orientation not in ("upper", "lower"):
        raise ValueError("orientation must be 'upper' or 'lower'")
    d = np.diag(t).copy()
    scale = max(np.abs(d).max(), 1e-300)
    gaps = np.abs(d[:, None] - d[None, :]) + np.eye(n) * scale
    if gaps.min() <= _GAP_TOL * scale:
        raise RepeatedDiagonal(
            f"diagonal gap {gaps.min():.3e} below {_GAP_TOL:.0e} * scale"
        )
    v = np.eye(n)
    if orientation == "upper":
        for i in range(n):
            for j in range(i + 1, n):
                v[i, j] = v[i, i:j] @ t[i:j, j] / (d[i] - d[j])
    else:
        for i in range(n):
            for j in range(i - 1, -1, -1):
                v[i, j] = v[i, j + 1:i + 1] @ t[j + 1:i + 1, j] / (d[i] - d[j])
    return EigenSystem(values=d, left_vectors=v,
                       inverse_vectors=unitri_inv(v, orientation))


def mat_func(es: EigenSystem, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function through the eigenbasis.

    The result R satisfies v @ R = f(theta) * v for every stored eigenpair.
    """
    fv = np.asarray(f(es.values), dtype=float)
    return es.inverse_vectors @ (fv[:, None] * es.left_vectors)


def _ik_series(th: float, a: float, b: float) -> float:
    # int_a^b th*x*e^(th*x) dx expanded about th = 0; five terms keep the
    # truncation far below 1e-12 at the switch point.
    acc = 0.0
    for n, denom in enumerate((2.0, 3.0, 8.0, 30.0, 144.0)):
        acc += th ** (n + 1) * (b ** (n + 2) - a ** (n + 2)) / denom
    return acc


def _ik_scalar(th: float, a: float, b: float) -> float:
    if b == np.inf:
        if th >= 0.0:
            raise DivergentIntegral(f"eigenvalue {th} >= 0 with b = inf")
        return -a * np.exp(th * a) + np.exp(th * a) / th
    if abs(th) * max(abs(a), abs(b)) < 1e-6:
        return _ik_series(th, a, b)
    ea, eb = np.exp(th * a), np.exp(th * b)
    return (b * eb - a * ea) - (eb - ea) / th


def i_kernel(a: float, b: float, es: EigenSystem) -> np.ndarray:
    """I(a, b; D) = int_a^b D x e^(Dx) dx applied through D's eigenbasis.

    Finite case needs 0 <= a <= b; b = inf needs a strictly negative
    spectrum (DivergentIntegral otherwise).  Singular D is handled by the
    continuous extension of the scalar kernel at 0.
    """
    if not 0.0 <= a <= b:
        raise ValueError("need 0 <= a <= b")
    g = np.array([_ik_scalar(float(th), a, b) for th in es.values])
    return es.inverse_vectors @ (g[:, None] * es.left_vectors)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def gauss_panels(f, a: float, b: float, tol: float = 1e-10, max_splits: int = 8):
    """Composite 32-point Gauss-Legendre; panel count doubles until stable.

    ``f`` maps a scalar to an ndarray; returns the converged integral.
    """
    if b <= a:
        first = f(a)
        return np.zeros_like(first)

    def composite(panels: int):
        total = None
        edges = np.linspace(a, b, panels + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            part = half * sum(
                w * f(mid + half * x) for x, w in zip(_GL_NODES, _GL_WEIGHTS)
            )
            total = part if total is None else total + part
        return total

    prev = composite(1)
    panels = 2
    for _ in range(max_splits):
        cur = composite(panels)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur
        prev, panels = cur, panels * 2
    return prev
