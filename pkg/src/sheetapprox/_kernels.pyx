# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch integrator for Kac-Stroock kernels.

Same contract as ``sheetapprox._kernels_py.ks_integrate_batch``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow
from libc.stdlib cimport free, realloc
from libc.string cimport memset

cnp.import_array()

cdef enum:
    MAXD = 8


cdef inline double _anti(double x, double expo, double scale) nogil:
    # antiderivative of x^{(d-1)/2}: 2/(d+1) x^{(d+1)/2}
    if x <= 0.0:
        return 0.0
    return scale * pow(x, expo)


def ks_integrate_batch(double[:, ::1] sorted_coords,
                       long long[:, ::1] ranks,
                       long long[::1] offsets,
                       double[::1] coef,
                       double[:, ::1] lo,
                       double[:, ::1] hi,
                       long long[::1] owner,
                       Py_ssize_t nfuncs,
                       double[::1] box,
                       long long budget):
    """Sum over parity cells of ``sign * prod_i int t_i^{(d-1)/2}`` per integrand.

    ``sorted_coords[i, offsets[s]:offsets[s+1]]`` are the coordinates of sheet
    ``s`` sorted along axis ``i``; ``ranks[p, i]`` is the 1-based position of
    point ``p`` in that order.
    """
    cdef Py_ssize_t d = box.shape[0]
    cdef Py_ssize_t nsheets = offsets.shape[0] - 1
    cdef Py_ssize_t nterms = coef.shape[0]
    if d > MAXD:
        raise ValueError("dimension too large for the compiled kernel")
    out_arr = np.zeros((nsheets, nfuncs), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    cdef double expo = (d + 1) / 2.0
    cdef double scale = 2.0 / (d + 1)
    cdef Py_ssize_t s, p, i, j, a, K, side, o0
    cdef long long cells, idx, maxcells = 0, c
    cdef Py_ssize_t stride[MAXD]
    cdef Py_ssize_t lo_a[MAXD]
    cdef Py_ssize_t hi_a[MAXD]
    cdef Py_ssize_t cur[MAXD]
    cdef double partial[MAXD + 1]
    cdef unsigned char *par = NULL
    cdef double *A = NULL
    cdef Py_ssize_t maxside = 0
    cdef double e0, e1, l, h, x0, x1, acc
    cdef int done

    try:
        for s in range(nsheets):
            o0 = offsets[s]
            K = offsets[s + 1] - o0
            side = K + 1
            cells = 1
            for i in range(d):
                cells *= side
                if cells > budget:
                    raise MemoryError(f"parity grid needs {side ** d} cells, budget is {budget}")
            if cells > maxcells:
                par = <unsigned char *> realloc(par, cells)
                if par == NULL:
                    raise MemoryError()
                maxcells = cells
            if side > maxside:
                A = <double *> realloc(A, d * side * sizeof(double))
                if A == NULL:
                    raise MemoryError()
                maxside = side
            stride[d - 1] = 1
            for i in range(d - 2, -1, -1):
                stride[i] = stride[i + 1] * side
            memset(par, 0, cells)
            for p in range(K):
                idx = 0
                for i in range(d):
                    idx += ranks[o0 + p, i] * stride[i]
                par[idx] ^= 1
            # prefix xor along each axis turns point marks into N(t) mod 2
            for i in range(d):
                for c in range(cells):
                    if (c // stride[i]) % side >= 1:
                        par[c] ^= par[c - stride[i]]

            for j in range(nterms):
                if coef[j] == 0.0:
                    continue
                done = 0
                for i in range(d):
                    l = lo[j, i]
                    h = hi[j, i]
                    lo_a[i] = side
                    hi_a[i] = 0
                    for a in range(side):
                        e0 = 0.0 if a == 0 else sorted_coords[i, o0 + a - 1]
                        e1 = box[i] if a == K else sorted_coords[i, o0 + a]
                        x0 = e0 if e0 > l else l
                        x1 = e1 if e1 < h else h
                        if x1 > x0:
                            A[i * side + a] = _anti(x1, expo, scale) - _anti(x0, expo, scale)
                            if a < lo_a[i]:
                                lo_a[i] = a
                            hi_a[i] = a + 1
                        else:
                            A[i * side + a] = 0.0
                    if hi_a[i] <= lo_a[i]:
                        done = 1
                        break
                if done:
                    continue
                # odometer over the sub-box of cells meeting the support
                acc = 0.0
                partial[0] = 1.0
                for i in range(d):
                    cur[i] = lo_a[i]
                    partial[i + 1] = partial[i] * A[i * side + cur[i]]
                while True:
                    idx = 0
                    for i in range(d):
                        idx += cur[i] * stride[i]
                    if par[idx]:
                        acc -= partial[d]
                    else:
                        acc += partial[d]
                    i = d - 1
                    while i >= 0:
                        cur[i] += 1
                        if cur[i] < hi_a[i]:
                            break
                        cur[i] = lo_a[i]
                        i -= 1
                    if i < 0:
                        break
                    for a in range(i, d):
                        partial[a + 1] = partial[a] * A[a * side + cur[a]]
                out[s, owner[j]] += coef[j] * acc
    finally:
        free(par)
        free(A)
    return out_arr
