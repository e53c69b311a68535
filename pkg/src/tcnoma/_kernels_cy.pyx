# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: trellis walk and add-compare-select Viterbi."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def walk(const int[:, ::1] branch_of_input, const int[:, ::1] next_state,
         const int[::1] inputs, const int[:, ::1] tail_table):
    cdef Py_ssize_t n = inputs.shape[0], t = tail_table.shape[0], i
    cdef int s = 0, b
    states_arr = np.zeros(n + t + 1, dtype=np.int32)
    branches_arr = np.empty(n + t, dtype=np.int32)
    cdef int[::1] states = states_arr
    cdef int[::1] branches = branches_arr
    for i in range(n):
        b = branch_of_input[s, inputs[i]]
        branches[i] = b
        s = next_state[s, b]
        states[i + 1] = s
    for i in range(t):
        b = tail_table[i, s]
        branches[n + i] = b
        s = next_state[s, b]
        states[n + i + 1] = s
    return states_arr, branches_arr


def viterbi(const double[::1] y_re, const double[::1] y_im,
            const int[:, ::1] next_state,
            const double[:, :, ::1] lab_re, const double[:, :, ::1] lab_im,
            Py_ssize_t n_info, const int[:, ::1] tail_table):
    cdef Py_ssize_t n = y_re.shape[0]
    cdef Py_ssize_t S = lab_re.shape[0], B = lab_re.shape[1], M = lab_re.shape[2]
    cdef Py_ssize_t t = tail_table.shape[0]
    if n - n_info != t:
        raise ValueError(f"{n} samples with {n_info} info steps need a {n - n_info}-step tail table, got {t}")

    metric_arr = np.full(S, np.inf)
    new_arr = np.empty(S)
    pred_s_arr = np.full((n, S), -1, dtype=np.int32)
    pred_b_arr = np.full((n, S), -1, dtype=np.int32)
    pred_m_arr = np.full((n, S), -1, dtype=np.int32)
    cdef double[::1] metric = metric_arr
    cdef double[::1] new_metric = new_arr
    cdef double[::1] tmp
    cdef int[:, ::1] pred_s = pred_s_arr
    cdef int[:, ::1] pred_b = pred_b_arr
    cdef int[:, ::1] pred_m = pred_m_arr

    cdef Py_ssize_t i, s, b, m, ns, tb, m_best
    cdef double yr, yi, dr, di, d, dmin, cand, best
    cdef Py_ssize_t key, best_key
    metric[0] = 0.0

    for i in range(n):
        yr = y_re[i]
        yi = y_im[i]
        for s in range(S):
            new_metric[s] = INFINITY
        for s in range(S):
            if metric[s] == INFINITY:
                continue
            for b in range(B):
                if i < n_info:
                    m_best = 0
                    dr = yr - lab_re[s, b, 0]
                    di = yi - lab_im[s, b, 0]
                    dmin = dr * dr + di * di
                    for m in range(1, M):
                        dr = yr - lab_re[s, b, m]
                        di = yi - lab_im[s, b, m]
                        d = dr * dr + di * di
                        if d < dmin:
                            dmin = d
                            m_best = m
                else:
                    tb = tail_table[i - n_info, s]
                    if tb != b:
                        continue
                    m_best = 0
                    dr = yr - lab_re[s, b, 0]
                    di = yi - lab_im[s, b, 0]
                    dmin = dr * dr + di * di
                cand = metric[s] + dmin
                ns = next_state[s, b]
                best = new_metric[ns]
                if cand < best:
                    new_metric[ns] = cand
                    pred_s[i, ns] = <int>s
                    pred_b[i, ns] = <int>b
                    pred_m[i, ns] = <int>m_best
                elif cand == best:
                    # ties: lowest branch, then parallel index, then predecessor
                    key = (b * M + m_best) * S + s
                    best_key = (pred_b[i, ns] * M + pred_m[i, ns]) * S + pred_s[i, ns]
                    if key < best_key:
                        pred_s[i, ns] = <int>s
                        pred_b[i, ns] = <int>b
                        pred_m[i, ns] = <int>m_best
        tmp = metric
        metric = new_metric
        new_metric = tmp

    if metric[0] == INFINITY:
        raise ValueError("no terminated path reaches state 0")
    states_arr = np.empty(n + 1, dtype=np.int32)
    branches_arr = np.empty(n, dtype=np.int32)
    parallel_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] states = states_arr
    cdef int[::1] branches = branches_arr
    cdef int[::1] parallel = parallel_arr
    cdef int cs = 0
    states[n] = 0
    for i in range(n - 1, -1, -1):
        branches[i] = pred_b[i, cs]
        parallel[i] = pred_m[i, cs]
        cs = pred_s[i, cs]
        states[i] = cs
    return float(metric[0]), states_arr, branches_arr, parallel_arr
