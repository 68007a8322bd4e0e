# Compiled lane of the hot kernels. Mirrors kernels/pure.py.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, pow, INFINITY

cnp.import_array()


def maxpro_pair_sum(D):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(D, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t p = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s = 0.0, prod, d
    for i in range(n):
        for j in range(i + 1, n):
            prod = 1.0
            for k in range(p):
                d = A[i, k] - A[j, k]
                if d == 0.0:
                    return INFINITY
                prod *= d * d
            s += 1.0 / prod
    return s


cdef double _pair_products(double[:, ::1] D, double[:, ::1] P) nogil:
    # fills P[i,j] = prod_k (D[i,k]-D[j,k])^-2 and returns the upper-triangle sum
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t p = D.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s = 0.0, prod, d
    for i in range(n):
        P[i, i] = 0.0
        for j in range(i + 1, n):
            prod = 1.0
            for k in range(p):
                d = D[i, k] - D[j, k]
                prod *= d * d
            prod = 1.0 / prod
            P[i, j] = prod
            P[j, i] = prod
            s += prod
    return s


def anneal_lhd(D0, cols, ia, ib, u, double t0, double decay, Py_ssize_t sweep_len):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] D_arr = np.array(D0, dtype=np.float64, order="C")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cols_arr = np.ascontiguousarray(cols, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ia_arr = np.ascontiguousarray(ia, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ib_arr = np.ascontiguousarray(ib, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_arr = np.ascontiguousarray(u, dtype=np.float64)

    cdef double[:, ::1] D = D_arr
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t p = D.shape[1]
    cdef double npairs = n * (n - 1) / 2.0
    cdef double inv_p = 1.0 / p

    cdef cnp.ndarray[cnp.float64_t, ndim=2] P_arr = np.zeros((n, n))
    cdef double[:, ::1] P = P_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=2] best_arr = D_arr.copy()
    cdef double[:, ::1] best = best_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] new_Pa_arr = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] new_Pb_arr = np.zeros(n)
    cdef double[::1] new_Pa = new_Pa_arr
    cdef double[::1] new_Pb = new_Pb_arr

    cdef Py_ssize_t n_prop = cols_arr.shape[0]
    cdef Py_ssize_t n_sweeps = n_prop // sweep_len
    cdef cnp.ndarray[cnp.float64_t, ndim=1] trace_arr = np.empty(n_sweeps)
    cdef double[::1] trace = trace_arr

    cdef double S, psi, best_S, best_psi, temp
    cdef double xa, xb, da, db, ra, rb, dS, S_new, psi_new
    cdef Py_ssize_t m = 0, sweep, q, c, a, b, j, i, k
    cdef bint accept

    S = _pair_products(D, P)
    psi = pow(S / npairs, inv_p)
    best_S = S
    best_psi = psi
    temp = t0

    for sweep in range(n_sweeps):
        S = _pair_products(D, P)
        psi = pow(S / npairs, inv_p)
        for q in range(sweep_len):
            c = cols_arr[m]
            a = ia_arr[m]
            b = ib_arr[m]
            xa = D[a, c]
            xb = D[b, c]
            dS = 0.0
            for j in range(n):
                if j == a or j == b:
                    new_Pa[j] = P[a, j]
                    new_Pb[j] = P[b, j]
                    continue
                da = xa - D[j, c]
                db = xb - D[j, c]
                ra = (da * da) / (db * db)
                rb = (db * db) / (da * da)
                new_Pa[j] = P[a, j] * ra
                new_Pb[j] = P[b, j] * rb
                dS += new_Pa[j] - P[a, j] + new_Pb[j] - P[b, j]
            S_new = S + dS
            psi_new = pow(S_new / npairs, inv_p)
            accept = psi_new <= psi or u_arr[m] < exp(-(psi_new - psi) / temp)
            if accept:
                D[a, c] = xb
                D[b, c] = xa
                for j in range(n):
                    P[a, j] = new_Pa[j]
                    P[j, a] = new_Pa[j]
                for j in range(n):
                    P[b, j] = new_Pb[j]
                    P[j, b] = new_Pb[j]
                S = S_new
                psi = psi_new
                if psi < best_psi:
                    best_psi = psi
                    best_S = S
                    for i in range(n):
                        for k in range(p):
                            best[i, k] = D[i, k]
            m += 1
        trace[sweep] = best_psi
        temp *= decay
    return best_arr, best_S, trace_arr


def idw_apply(idx, w, fields):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] I = np.ascontiguousarray(idx, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] F = np.ascontiguousarray(fields, dtype=np.float64)
    cdef Py_ssize_t T = F.shape[0]
    cdef Py_ssize_t Q = I.shape[0]
    cdef Py_ssize_t K = I.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((T, Q))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] f = F
    cdef double[:, ::1] ww = W
    cdef long[:, ::1] ii = I
    cdef Py_ssize_t t, q, k
    cdef double acc
    with nogil:
        for t in range(T):
            for q in range(Q):
                acc = 0.0
                for k in range(K):
                    acc += ww[q, k] * f[t, ii[q, k]]
                out[t, q] = acc
    return out_arr


def gaussian_corr(X, Y, eta):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] B = np.ascontiguousarray(Y, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] E = np.ascontiguousarray(eta, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[0]
    cdef Py_ssize_t p = A.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((n, m))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] a = A
    cdef double[:, ::1] b = B
    cdef double[::1] e = E
    cdef Py_ssize_t i, j, k
    cdef double acc, d
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(p):
                    d = a[i, k] - b[j, k]
                    acc += e[k] * d * d
                out[i, j] = exp(-acc)
    return out_arr
