# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Leray-density kernel: bordered determinant per node by Gaussian elimination."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef int MAXD = 16


cdef inline double cabs1(double complex z) nogil:
    return fabs(z.real) + fabs(z.imag)


cdef double complex det_inplace(double complex[:, ::1] M, int size) nogil:
    cdef int i, j, k, p
    cdef double best, v
    cdef double complex det = 1.0, piv, invpiv, f, tmp
    for k in range(size):
        p = k
        best = cabs1(M[k, k])
        for i in range(k + 1, size):
            v = cabs1(M[i, k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return 0.0
        if p != k:
            for j in range(k, size):
                tmp = M[k, j]
                M[k, j] = M[p, j]
                M[p, j] = tmp
            det = -det
        piv = M[k, k]
        det = det * piv
        invpiv = 1.0 / piv
        for i in range(k + 1, size):
            f = M[i, k] * invpiv
            if f != 0:
                for j in range(k + 1, size):
                    M[i, j] = M[i, j] - f * M[k, j]
    return det


def leray_density(theta, dtheta, pre, post):
    cdef double complex[:, ::1] th = np.ascontiguousarray(theta, dtype=np.complex128)
    cdef double complex[:, :, ::1] dth = np.ascontiguousarray(dtheta, dtype=np.complex128)
    cdef double complex[:, :, ::1] pr = np.ascontiguousarray(pre, dtype=np.complex128)
    cdef double complex[:, :, ::1] po = np.ascontiguousarray(post, dtype=np.complex128)
    cdef Py_ssize_t N = th.shape[0]
    cdef int n = th.shape[1]
    cdef int D = dth.shape[2]
    cdef int a = pr.shape[1]
    cdef int b = po.shape[1]
    if D + 1 > MAXD:
        raise ValueError("chart dimension too large for the compiled kernel")
    out = np.empty(N, dtype=np.complex128)
    cdef double complex[::1] res = out
    cdef double complex[:, ::1] M = np.zeros((D + 1, D + 1), dtype=np.complex128)
    cdef double sgn = -1.0 if (a + D) % 2 else 1.0
    cdef Py_ssize_t q
    cdef int r, c
    with nogil:
        for q in range(N):
            for r in range(a):
                for c in range(D):
                    M[r, c] = pr[q, r, c]
                M[r, D] = 0
            for r in range(n):
                for c in range(D):
                    M[a + r, c] = dth[q, r, c]
                M[a + r, D] = th[q, r]
            for r in range(b):
                for c in range(D):
                    M[a + n + r, c] = po[q, r, c]
                M[a + n + r, D] = 0
            res[q] = sgn * det_inplace(M, D + 1)
    return out


def cf_density(e, de, w, dz, pre, A, dA, mu0, dmu0, bint normalize):
    cdef double complex[:, ::1] E = np.ascontiguousarray(e, dtype=np.complex128)
    cdef double complex[:, :, ::1] dE = np.ascontiguousarray(de, dtype=np.complex128)
    cdef double complex[:, ::1] W = np.ascontiguousarray(w, dtype=np.complex128)
    cdef double complex[:, :, ::1] dZ = np.ascontiguousarray(dz, dtype=np.complex128)
    cdef double complex[:, :, ::1] pr = np.ascontiguousarray(pre, dtype=np.complex128)
    cdef Py_ssize_t N = E.shape[0]
    cdef int n = E.shape[1]
    cdef int D = dE.shape[2]
    cdef int a = pr.shape[1]
    cdef bint hasA = A is not None
    cdef bint hasmu = mu0 is not None
    cdef double complex[:, ::1] Am
    cdef double complex[:, :, ::1] dAm
    cdef double[::1] M0
    cdef double[:, ::1] dM0
    if hasA:
        Am = np.ascontiguousarray(A, dtype=np.complex128)
        dAm = np.ascontiguousarray(dA, dtype=np.complex128)
    if hasmu:
        M0 = np.ascontiguousarray(mu0, dtype=np.float64)
        dM0 = np.ascontiguousarray(dmu0, dtype=np.float64)
    if a + 2 * n - 1 != D:
        raise ValueError("form degree does not match chart dimension")
    if D + 1 > MAXD:
        raise ValueError("chart dimension too large for the compiled kernel")
    out = np.empty(N, dtype=np.complex128)
    cdef double complex[::1] res = out
    cdef double complex[:, ::1] M = np.zeros((D + 1, D + 1), dtype=np.complex128)
    cdef double complex[::1] dL = np.zeros(D, dtype=np.complex128)
    cdef double sgn = -1.0 if (a + D) % 2 else 1.0
    cdef Py_ssize_t q
    cdef int r, c, j
    cdef double complex L, invL, bj, m0
    with nogil:
        for q in range(N):
            if normalize:
                L = 0
                for j in range(n):
                    L = L + E[q, j] * W[q, j]
                for c in range(D):
                    dL[c] = 0
                    for j in range(n):
                        dL[c] = dL[c] + dE[q, j, c] * W[q, j] + E[q, j] * dZ[q, j, c]
                invL = 1.0 / L
            else:
                invL = 1.0
            m0 = M0[q] if hasmu else 1.0
            for r in range(a):
                for c in range(D):
                    M[r, c] = pr[q, r, c]
                M[r, D] = 0
            for j in range(n):
                bj = E[q, j] * invL
                for c in range(D):
                    if normalize:
                        M[a + j, c] = m0 * (dE[q, j, c] * invL - bj * dL[c] * invL)
                    else:
                        M[a + j, c] = m0 * dE[q, j, c]
                    if hasmu:
                        M[a + j, c] = M[a + j, c] + bj * dM0[q, c]
                    if hasA:
                        M[a + j, c] = M[a + j, c] + dAm[q, j, c]
                M[a + j, D] = m0 * bj
                if hasA:
                    M[a + j, D] = M[a + j, D] + Am[q, j]
            for r in range(n):
                for c in range(D):
                    M[a + n + r, c] = dZ[q, r, c]
                M[a + n + r, D] = 0
            res[q] = sgn * det_inplace(M, D + 1)
    return out
