"""Brute-force oracles used to freeze expected values.

Everything here is written as directly as possible (nested loops, explicit
digit arithmetic) and deliberately shares no code with the library paths it
checks.
"""

import numpy as np


def contract_loops(x, y):
    """Contract last mode of x with first mode of y by explicit summation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    assert x.shape[-1] == y.shape[0]
    out = np.zeros(x.shape[:-1] + y.shape[1:])
    for ix in np.ndindex(*x.shape[:-1]):
        for iy in np.ndindex(*y.shape[1:]):
            out[ix + iy] = sum(x[ix + (k,)] * y[(k,) + iy] for k in range(x.shape[-1]))
    return out


def conv3d_loops(x, k):
    """SAME-padded stride-1 cross-correlation by six nested position/filter loops."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    dim_t, dim_h, dim_w, c_in = x.shape
    t, h, w, _, s_out = k.shape
    ot, oh, ow = t // 2, h // 2, w // 2
    out = np.zeros((dim_t, dim_h, dim_w, s_out))
    for i in range(dim_t):
        for j in range(dim_h):
            for kk in range(dim_w):
                for a in range(t):
                    ii = i + a - ot
                    if not 0 <= ii < dim_t:
                        continue
                    for b in range(h):
                        jj = j + b - oh
                        if not 0 <= jj < dim_h:
                            continue
                        for c in range(w):
                            ll = kk + c - ow
                            if not 0 <= ll < dim_w:
                                continue
                            for m in range(c_in):
                                for s in range(s_out):
                                    out[i, j, kk, s] += x[ii, jj, ll, m] * k[a, b, c, m, s]
    return out


def mixed_radix(index, radices):
    """Little-endian digit decomposition: radix 0 is the fastest digit."""
    digits = []
    q = int(index)
    for r in radices:
        digits.append(q % r)
        q //= r
    assert q == 0
    return tuple(digits)


def best_factor_pair(p):
    """Divisor pair (u, l), u >= l, u*l = p, with the smallest gap u - l."""
    best = None
    for l in range(1, int(p**0.5) + 1):
        if p % l == 0:
            u = p // l
            if best is None or u - l < best[0] - best[1]:
                best = (u, l)
    return best


def gram_full_row_rank(m):
    """Full row rank check via the Gram determinant, independent of any SVD."""
    m = np.asarray(m, dtype=float)
    sign, _ = np.linalg.slogdet(m @ m.T)
    return sign != 0
