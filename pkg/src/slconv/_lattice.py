"""Compiled kernels for the transformation-operator integral equations.

Kernels are stored on the characteristic lattice: node ``(a, b)`` stands for
the point x = (a + b) h / 2, t = b h, so the grid point (x_i, t_j) is the
lattice node (2 i - j, j). In these variables every integral equation of the
family solved here takes the Goursat form

    W(a, b) = B(a, b) + 1/4 * iint_{[b, a] x [c, b]} S,

with source S = q(x) W + N[W] + extra, where N is the convolution term
sum_k M(k h) W(a - k, b - k). Lattice arrays have shape (2 n + 1, n + 1);
entries outside the slice domain are left at zero.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def march(qf, m, h, c, bmax, row0, msource, extra, has_extra):
    """Solve one slice ``b >= c`` of the Goursat system up to row ``bmax``.

    qf : q on the half-step grid (length 2n + 1).
    m : M on the grid (length n + 1), used by the convolution term.
    row0 : boundary values on the row b = c, indexed by a.
    msource : per-row additive source (M(b h) for P, zeros otherwise).
    extra : lattice array added to the source at (a - c, b - c) when
        ``has_extra`` (the P-tilde term of the linearization kernel).

    Returns ``(W, S)``; S excludes ``msource``.
    """
    n2 = qf.shape[0] - 1
    n = n2 // 2
    W = np.zeros((n2 + 1, n + 1), dtype=np.complex128)
    S = np.zeros((n2 + 1, n + 1), dtype=np.complex128)
    march_into(W, S, qf, m, h, c, bmax, row0, msource, extra, has_extra)
    return W, S


@njit(cache=True, nogil=True)
def march_into(W, S, qf, m, h, c, bmax, row0, msource, extra, has_extra):
    """:func:`march` writing into preallocated arrays.

    Only rows c..bmax of the slice are written; those are also the only
    entries read, so the buffers can be reused across slices.
    """
    n2 = qf.shape[0] - 1
    cell = h * h / 16.0
    m0 = m[0]
    for a in range(c, n2 - c + 1):
        W[a, c] = row0[a]
        s = qf[a + c] * row0[a]
        if has_extra:
            s += extra[a - c, 0]
        S[a, c] = s
    W[c, c] = 0.0
    S[c, c] = 0.0
    for b in range(c + 1, bmax + 1):
        W[b, b] = 0.0
        S[b, b] = 0.0
        mb = msource[b]
        mbm = msource[b - 1]
        kmax = b - c
        for a in range(b + 1, n2 - b + 1):
            nk = 0.5 * m[kmax] * W[a - kmax, b - kmax]
            for k in range(1, kmax):
                nk += m[k] * W[a - k, b - k]
            known = h * nk
            if has_extra:
                known += extra[a - c, b - c]
            diag = qf[a + b] + 0.5 * h * m0
            rest = (W[a - 1, b] + W[a, b - 1] - W[a - 1, b - 1]
                    + cell * (S[a - 1, b] + S[a, b - 1] + S[a - 1, b - 1]
                              + known + mb + mb + mbm + mbm))
            # S[a-1, b] carries msource of row b, S[*, b-1] that of row b-1
            w = rest / (1.0 - cell * diag)
            W[a, b] = w
            S[a, b] = diag * w + known


@njit(cache=True, nogil=True)
def derivative_terms(S, h, c, a, b):
    """Quarter-weighted line integrals of S giving d/dt of the kernel at (a, b).

    1/4 [ int_{a'=b}^{a} S(a', b) - int_{b'=c}^{b} S(a, b') - int_{b'=c}^{b} S(b, b') ]
    """
    r1 = 0.0j
    if a > b:
        r1 = 0.5 * (S[b, b] + S[a, b])
        for ap in range(b + 1, a):
            r1 += S[ap, b]
    r2 = 0.0j
    r3 = 0.0j
    if b > c:
        r2 = 0.5 * (S[a, c] + S[a, b])
        r3 = 0.5 * (S[b, c] + S[b, b])
        for bp in range(c + 1, b):
            r2 += S[a, bp]
            r3 += S[b, bp]
    return 0.25 * h * (r1 - r2 - r3)


@njit(cache=True, nogil=True)
def derivative_row(S, h, c, i_row, j_lo, j_hi):
    """d/dt terms along the grid row x = x_{i_row} for t-indices j_lo..j_hi."""
    out = np.zeros(j_hi - j_lo + 1, dtype=np.complex128)
    for j in range(j_lo, j_hi + 1):
        out[j - j_lo] = derivative_terms(S, h, c, 2 * i_row - j, j)
    return out


@njit(cache=True, nogil=True)
def phi_slices(qf, m, pt, h, c_lo, c_hi, x_hi):
    """Phi(x_i, t_c) for c_lo <= c <= c_hi, c <= i <= x_hi.

    Each slice solves the linearization kernel with parameter tau = t_c and
    reads its x-derivative on the line of first argument pi.
    """
    n2 = qf.shape[0] - 1
    n = n2 // 2
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    zsrc = np.zeros(n + 1, dtype=np.complex128)
    row0 = np.zeros(n2 + 1, dtype=np.complex128)
    W = np.zeros((n2 + 1, n + 1), dtype=np.complex128)
    S = np.zeros((n2 + 1, n + 1), dtype=np.complex128)
    for c in range(c_lo, c_hi + 1):
        for a in range(n2 + 1):
            row0[a] = (a - c) * h / 4.0
        bmax = min(x_hi, n)
        march_into(W, S, qf, m, h, c, bmax, row0, zsrc, pt, True)
        for i in range(c, bmax + 1):
            out[i, c] = -0.5 + derivative_terms(S, h, c, n2 - i, i)
    return out


@njit(cache=True, nogil=True)
def pyramid(qf, m, pt, h):
    """Linearization kernel on every grid triple, values[i, j, k]."""
    n2 = qf.shape[0] - 1
    n = n2 // 2
    out = np.zeros((n + 1, n + 1, n + 1), dtype=np.complex128)
    zsrc = np.zeros(n + 1, dtype=np.complex128)
    row0 = np.zeros(n2 + 1, dtype=np.complex128)
    W = np.zeros((n2 + 1, n + 1), dtype=np.complex128)
    S = np.zeros((n2 + 1, n + 1), dtype=np.complex128)
    for c in range(n + 1):
        for a in range(n2 + 1):
            row0[a] = (a - c) * h / 4.0
        march_into(W, S, qf, m, h, c, n, row0, zsrc, pt, True)
        for i in range(c, n + 1):
            for j in range(c, i + 1):
                out[i, j, c] = W[2 * i - j, j]
    return out


@njit(cache=True, nogil=True)
def volterra_s(q, m, lam, h):
    """Trapezoid march for S(x, lambda); the kernel vanishes on the diagonal."""
    n = q.shape[0] - 1
    rho = np.sqrt(lam + 0j)
    ker = np.empty(n + 1, dtype=np.complex128)
    for k in range(n + 1):
        x = k * h
        if abs(rho) < 1e-8:
            ker[k] = x - lam * x ** 3 / 6.0
        else:
            ker[k] = np.sin(rho * x) / rho
    s = np.zeros(n + 1, dtype=np.complex128)
    g = np.zeros(n + 1, dtype=np.complex128)
    for i in range(1, n + 1):
        acc = 0.5 * ker[i] * g[0]
        for j in range(1, i):
            acc += ker[i - j] * g[j]
        s[i] = ker[i] + h * acc
        conv = 0.5 * m[0] * s[i] + 0.5 * m[i] * s[0]
        for l in range(1, i):
            conv += m[i - l] * s[l]
        g[i] = q[i] * s[i] + h * conv
    return s
