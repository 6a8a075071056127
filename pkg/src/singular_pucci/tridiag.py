"""Thomas algorithm for tridiagonal systems.

Row ``i`` reads ``sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]``
(``sub[0]`` and ``sup[-1]`` are ignored). For an M-matrix (positive
diagonal, nonpositive off-diagonals, diagonally dominant) and a nonnegative
right-hand side every operation below combines quantities of fixed sign,
so the computed solution is nonnegative in floating point as well.
"""
import numpy as np


def solve(sub, diag, sup, rhs):
    n = len(diag)
    cp = np.empty(n)
    dp = np.empty(n)
    sub = np.asarray(sub, dtype=float).tolist()
    diag = np.asarray(diag, dtype=float).tolist()
    sup = np.asarray(sup, dtype=float).tolist()
    rhs = np.asarray(rhs, dtype=float).tolist()
    c_prev = sup[0] / diag[0]
    d_prev = rhs[0] / diag[0]
    cp[0], dp[0] = c_prev, d_prev
    for i in range(1, n):
        m = diag[i] - sub[i] * c_prev
        if m == 0.0:
            raise ZeroDivisionError(f"zero pivot in row {i}")
        c_prev = sup[i] / m if i < n - 1 else 0.0
        d_prev = (rhs[i] - sub[i] * d_prev) / m
        cp[i], dp[i] = c_prev, d_prev
    x = np.empty(n)
    x[-1] = dp[-1]
    cpl, dpl = cp.tolist(), dp.tolist()
    nxt = dpl[-1]
    for i in range(n - 2, -1, -1):
        nxt = dpl[i] - cpl[i] * nxt
        x[i] = nxt
    return x


def is_m_matrix(sub, diag, sup) -> bool:
    """Sign pattern and weak row dominance of an M-matrix."""
    sub = np.asarray(sub, dtype=float).copy()
    sup = np.asarray(sup, dtype=float).copy()
    sub[0] = 0.0
    sup[-1] = 0.0
    diag = np.asarray(diag, dtype=float)
    return bool(np.all(diag > 0) and np.all(sub <= 0) and np.all(sup <= 0)
                and np.all(diag + sub + sup >= -1e-12 * diag))
