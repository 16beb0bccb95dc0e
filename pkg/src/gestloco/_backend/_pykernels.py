"""Pure-Python/numpy implementations of the hot kernels.

This is the fallback selected when the compiled extension is unavailable.
Semantics match ``_ckernels`` exactly; floating-point results may differ in
the last bits because numpy/BLAS may sum in a different order.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def rbf_gram(x: np.ndarray, gamma: float) -> np.ndarray:
    """Symmetric RBF Gram matrix K[i, j] = exp(-gamma * ||x_i - x_j||^2)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def rbf_cross(queries: np.ndarray, refs: np.ndarray, gamma: float) -> np.ndarray:
    """K[i, j] = exp(-gamma * ||queries_i - refs_j||^2), shape (n_queries, n_refs)."""
    q = np.ascontiguousarray(queries, dtype=np.float64)
    r = np.ascontiguousarray(refs, dtype=np.float64)
    d2 = (np.einsum("ij,ij->i", q, q)[:, None]
          + np.einsum("ij,ij->i", r, r)[None, :]
          - 2.0 * (q @ r.T))
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def smo_solve(k: np.ndarray, y: np.ndarray, c_reg: float, tol: float,
              max_iter: int) -> tuple[np.ndarray, float, float, int]:
    """Solve the soft-margin SVM dual on a precomputed kernel matrix.

    Sequential minimal optimization with maximal-violating-pair working-set
    selection. ``y`` holds +/-1 labels. Returns (alpha, bias, violation,
    iterations) where ``violation`` is the final KKT gap m(alpha) - M(alpha).
    Deterministic: ties in the pair selection resolve to the lowest index.
    """
    k = np.ascontiguousarray(k, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5*a'Qa - e'a at a = 0

    it = 0
    violation = np.inf
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < c_reg)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c_reg))
        if not up.any() or not low.any():
            violation = 0.0
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        violation = yg[i] - yg[j]
        if violation <= tol:
            break

        yi, yj = y[i], y[j]
        quad = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if quad <= 0.0:
            quad = 1e-12
        delta = violation / quad

        old_ai, old_aj = alpha[i], alpha[j]
        ai = old_ai + yi * delta
        aj = old_aj - yj * delta
        # project back onto the box keeping y_i*a_i + y_j*a_j constant
        s = yi * old_ai + yj * old_aj
        ai = min(max(ai, 0.0), c_reg)
        aj = yj * (s - yi * ai)
        aj = min(max(aj, 0.0), c_reg)
        ai = yi * (s - yj * aj)
        ai = min(max(ai, 0.0), c_reg)
        alpha[i], alpha[j] = ai, aj

        dai = ai - old_ai
        daj = aj - old_aj
        if dai != 0.0:
            grad += (yi * dai) * (y * k[i])
        if daj != 0.0:
            grad += (yj * daj) * (y * k[j])
        it += 1

    bias = _smo_bias(alpha, grad, y, c_reg)
    return alpha, bias, float(max(violation, 0.0)), it


def _smo_bias(alpha: np.ndarray, grad: np.ndarray, y: np.ndarray, c_reg: float) -> float:
    """Bias from KKT: -y_t*grad_t averaged over free vectors, else the gap midpoint."""
    yg = -y * grad
    free = (alpha > 0.0) & (alpha < c_reg)
    if free.any():
        return float(np.mean(yg[free]))
    up = ((y > 0) & (alpha < c_reg)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c_reg))
    hi = np.max(yg[up]) if up.any() else 0.0
    lo = np.min(yg[low]) if low.any() else 0.0
    return float(0.5 * (hi + lo))


def biquad_run(b0: float, b1: float, b2: float, a1: float, a2: float,
               x: np.ndarray, s1: float, s2: float) -> tuple[np.ndarray, float, float]:
    """Direct form II transposed biquad over a block; returns (y, s1, s2).

    Per sample:  y = b0*x + s1;  s1 = (b1*x - a1*y) + s2;  s2 = b2*x - a2*y
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(len(x)):
        xi = x[i]
        yi = b0 * xi + s1
        s1 = (b1 * xi - a1 * yi) + s2
        s2 = b2 * xi - a2 * yi
        out[i] = yi
    return out, s1, s2
