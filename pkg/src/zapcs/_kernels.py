"""Compiled inner loops for the ZAP recursion.

Each kernel advances ``x`` in place for up to ``n_steps`` iterations, adds
every new iterate into ``acc`` (used for block means) and returns
``(steps_taken, stationary)``; ``stationary`` is set when an update left
``x`` bit-for-bit unchanged, at which point the kernel stops early.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def l1_steps(x, B, use_kernel, gamma, n_steps, acc):
    # P s = B (B^T s) if B spans ker(A), else s - B (B^T s) with B spanning row(A)
    N, k = B.shape
    s = np.empty(N)
    c = np.empty(k)
    for it in range(n_steps):
        for i in range(N):
            xi = x[i]
            s[i] = 1.0 if xi > 0.0 else (-1.0 if xi < 0.0 else 0.0)
        for j in range(k):
            c[j] = 0.0
        for i in range(N):
            si = s[i]
            if si != 0.0:
                for j in range(k):
                    c[j] += B[i, j] * si
        moved = False
        for i in range(N):
            v = 0.0
            for j in range(k):
                v += B[i, j] * c[j]
            ps = v if use_kernel else s[i] - v
            new = x[i] - gamma * ps
            if new != x[i]:
                moved = True
            x[i] = new
            acc[i] += new
        if not moved:
            return it + 1, True
    return n_steps, False


@njit(cache=True)
def l0_attract(x, alpha, out):
    inv = 1.0 / alpha
    a2 = alpha * alpha
    for i in range(x.shape[0]):
        xi = x[i]
        if -inv <= xi < 0.0:
            out[i] = -a2 * xi - alpha
        elif 0.0 < xi <= inv:
            out[i] = -a2 * xi + alpha
        else:
            out[i] = 0.0


@njit(cache=True)
def l0_steps(x, A, Apinv, y, gamma, alpha, n_steps, acc):
    # zero-point attraction then projection back onto {A x = y}
    M, N = A.shape
    f = np.empty(N)
    xh = np.empty(N)
    r = np.empty(M)
    for it in range(n_steps):
        l0_attract(x, alpha, f)
        for i in range(N):
            xh[i] = x[i] - gamma * f[i]
        for m in range(M):
            v = y[m]
            for i in range(N):
                v -= A[m, i] * xh[i]
            r[m] = v
        moved = False
        for i in range(N):
            v = xh[i]
            for m in range(M):
                v += Apinv[i, m] * r[m]
            if v != x[i]:
                moved = True
            x[i] = v
            acc[i] += v
        if not moved:
            return it + 1, True
    return n_steps, False
