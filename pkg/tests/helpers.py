"""Shared brute-force oracles for the test suite.

These deliberately use naive O(n^2)/double-loop formulations so they stay
independent of the FFT-based production code paths they are used to check.
"""

import numpy as np


def conv2d_oracle(u, h):
    """Direct double-loop circular convolution with a centre-anchored kernel."""
    H, W = u.shape
    kh, kw = h.shape
    ch, cw = kh // 2, kw // 2
    out = np.zeros((H, W))
    for i in range(H):
        for j in range(W):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += h[a, b] * u[(i - (a - ch)) % H, (j - (b - cw)) % W]
            out[i, j] = acc
    return out


def dft2_oracle(u):
    """Direct O(n^2) orthonormal 2-D DFT summation."""
    u = np.asarray(u, dtype=np.complex128)
    H, W = u.shape
    out = np.zeros((H, W), dtype=np.complex128)
    for k in range(H):
        for l in range(W):
            acc = 0.0 + 0.0j
            for m in range(H):
                for n in range(W):
                    acc += u[m, n] * np.exp(-2j * np.pi * (k * m / H + l * n / W))
            out[k, l] = acc
    return out / np.sqrt(H * W)


def central_diff_grad(value_fn, x, step):
    """Dense central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (value_fn(x + e) - value_fn(x - e)) / (2.0 * step)
    return g
