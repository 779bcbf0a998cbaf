# Numba-compiled GEMM loops.
#
# Every kernel accumulates each output element in float32, in ascending k,
# starting from the value already stored in C.  No kernel reassociates a
# reduction, so blocked, parallel and naive results agree bit for bit and the
# partition parameters only change the memory traffic.
import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def naive_nn(a, b, c):
    m, k = a.shape
    n = b.shape[1]
    for i in range(m):
        for j in range(n):
            acc = np.float32(0.0)
            for p in range(k):
                acc += a[i, p] * b[p, j]
            c[i, j] = acc


@njit(nogil=True, cache=True)
def naive_nt(a, b, c):
    m, k = a.shape
    n = b.shape[0]
    for i in range(m):
        for j in range(n):
            acc = np.float32(0.0)
            for p in range(k):
                acc += a[i, p] * b[j, p]
            c[i, j] = acc


@njit(nogil=True, cache=True)
def panel_nn(a, b, c, acc, i0, i1, j0, j1, p0, p1):
    # C[i0:i1, j0:j1] += A[i0:i1, p0:p1] @ B[p0:p1, j0:j1]
    # B is walked row-wise along n; the private row buffer lets LLVM
    # vectorize across j without alias checks.
    w = j1 - j0
    for i in range(i0, i1):
        for j in range(w):
            acc[j] = c[i, j0 + j]
        for p in range(p0, p1):
            av = a[i, p]
            brow = b[p, j0:j1]
            for j in range(w):
                acc[j] += av * brow[j]
        for j in range(w):
            c[i, j0 + j] = acc[j]


@njit(nogil=True, cache=True)
def _dot_into(a, b, c, i, j, p0, p1):
    s = c[i, j]
    for p in range(p0, p1):
        s += a[i, p] * b[j, p]
    c[i, j] = s


@njit(nogil=True, cache=True)
def panel_nt(a, b, c, acc, i0, i1, j0, j1, p0, p1):
    # C[i0:i1, j0:j1] += A[i0:i1, p0:p1] @ B[j0:j1, p0:p1].T
    # B rows are read with unit stride along k.  A 4x4 register tile keeps
    # sixteen independent scalar chains in flight.
    i = i0
    while i + 4 <= i1:
        a0 = a[i]
        a1 = a[i + 1]
        a2 = a[i + 2]
        a3 = a[i + 3]
        j = j0
        while j + 4 <= j1:
            b0 = b[j]
            b1 = b[j + 1]
            b2 = b[j + 2]
            b3 = b[j + 3]
            c00 = c[i, j]
            c01 = c[i, j + 1]
            c02 = c[i, j + 2]
            c03 = c[i, j + 3]
            c10 = c[i + 1, j]
            c11 = c[i + 1, j + 1]
            c12 = c[i + 1, j + 2]
            c13 = c[i + 1, j + 3]
            c20 = c[i + 2, j]
            c21 = c[i + 2, j + 1]
            c22 = c[i + 2, j + 2]
            c23 = c[i + 2, j + 3]
            c30 = c[i + 3, j]
            c31 = c[i + 3, j + 1]
            c32 = c[i + 3, j + 2]
            c33 = c[i + 3, j + 3]
            for p in range(p0, p1):
                x0 = a0[p]
                x1 = a1[p]
                x2 = a2[p]
                x3 = a3[p]
                y0 = b0[p]
                y1 = b1[p]
                y2 = b2[p]
                y3 = b3[p]
                c00 += x0 * y0
                c01 += x0 * y1
                c02 += x0 * y2
                c03 += x0 * y3
                c10 += x1 * y0
                c11 += x1 * y1
                c12 += x1 * y2
                c13 += x1 * y3
                c20 += x2 * y0
                c21 += x2 * y1
                c22 += x2 * y2
                c23 += x2 * y3
                c30 += x3 * y0
                c31 += x3 * y1
                c32 += x3 * y2
                c33 += x3 * y3
            c[i, j] = c00
            c[i, j + 1] = c01
            c[i, j + 2] = c02
            c[i, j + 3] = c03
            c[i + 1, j] = c10
            c[i + 1, j + 1] = c11
            c[i + 1, j + 2] = c12
            c[i + 1, j + 3] = c13
            c[i + 2, j] = c20
            c[i + 2, j + 1] = c21
            c[i + 2, j + 2] = c22
            c[i + 2, j + 3] = c23
            c[i + 3, j] = c30
            c[i + 3, j + 1] = c31
            c[i + 3, j + 2] = c32
            c[i + 3, j + 3] = c33
            j += 4
        for jj in range(j, j1):
            for ii in range(i, i + 4):
                _dot_into(a, b, c, ii, jj, p0, p1)
        i += 4
    for ii in range(i, i1):
        for jj in range(j0, j1):
            _dot_into(a, b, c, ii, jj, p0, p1)


@njit(nogil=True, cache=True)
def blocked_serial(a, b, c, nt, bm, bn, bk):
    # Loop nest: K panels outermost, then M blocks, then N blocks.
    m, k = a.shape
    n = c.shape[1]
    acc = np.empty(bn, np.float32)
    for p0 in range(0, k, bk):
        p1 = min(p0 + bk, k)
        for i0 in range(0, m, bm):
            i1 = min(i0 + bm, m)
            for j0 in range(0, n, bn):
                j1 = min(j0 + bn, n)
                if nt:
                    panel_nt(a, b, c, acc, i0, i1, j0, j1, p0, p1)
                else:
                    panel_nn(a, b, c, acc, i0, i1, j0, j1, p0, p1)


@njit(nogil=True, cache=True)
def blocked_owned(a, b, c, nt, blocks, bk):
    # Each row of ``blocks`` is (i0, i1, j0, j1); the caller owns these C
    # blocks exclusively and runs the full K loop for each of them.
    k = a.shape[1]
    w = 1
    for t in range(blocks.shape[0]):
        w = max(w, blocks[t, 3] - blocks[t, 2])
    acc = np.empty(w, np.float32)
    for t in range(blocks.shape[0]):
        i0 = blocks[t, 0]
        i1 = blocks[t, 1]
        j0 = blocks[t, 2]
        j1 = blocks[t, 3]
        for p0 in range(0, k, bk):
            p1 = min(p0 + bk, k)
            if nt:
                panel_nt(a, b, c, acc, i0, i1, j0, j1, p0, p1)
            else:
                panel_nn(a, b, c, acc, i0, i1, j0, j1, p0, p1)
