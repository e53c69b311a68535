"""Pure NumPy implementations of the hot kernels.

Bit-for-bit equivalent to ``_kernels_cy``: same arithmetic order, same
tie-breaking. Used when the compiled extension is unavailable or when
``TCNOMA_PURE_PYTHON=1``.
"""
import numpy as np


def walk(branch_of_input, next_state, inputs, tail_table):
    n = inputs.shape[0]
    t = tail_table.shape[0]
    states = np.zeros(n + t + 1, dtype=np.int32)
    branches = np.empty(n + t, dtype=np.int32)
    s = 0
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
    return states, branches


def viterbi(y_re, y_im, next_state, lab_re, lab_im, n_info, tail_table):
    n = y_re.shape[0]
    S, B, M = lab_re.shape
    t = tail_table.shape[0]
    if n - n_info != t:
        raise ValueError(f"{n} samples with {n_info} info steps need a {n - n_info}-step tail table, got {t}")
    metric = np.full(S, np.inf)
    metric[0] = 0.0
    pred_s = np.full((n, S), -1, dtype=np.int32)
    pred_b = np.full((n, S), -1, dtype=np.int32)
    pred_m = np.full((n, S), -1, dtype=np.int32)

    ns_flat = next_state.reshape(-1)
    s_idx = np.repeat(np.arange(S, dtype=np.int64), B)
    b_idx = np.tile(np.arange(B, dtype=np.int64), S)
    rows = np.arange(S)

    for i in range(n):
        dr = y_re[i] - lab_re
        di = y_im[i] - lab_im
        d = dr * dr + di * di
        if i < n_info:
            m_best = d.argmin(axis=2)
            dmin = np.take_along_axis(d, m_best[:, :, None], axis=2)[:, :, 0]
        else:
            m_best = np.zeros((S, B), dtype=np.int64)
            dmin = np.full((S, B), np.inf)
            tb = tail_table[i - n_info]
            ok = tb >= 0
            dmin[rows[ok], tb[ok]] = d[rows[ok], tb[ok], 0]
        cand = (metric[:, None] + dmin).reshape(-1)
        m_flat = m_best.reshape(-1)
        live = np.isfinite(cand)
        new_metric = np.full(S, np.inf)
        if live.any():
            c, nsl = cand[live], ns_flat[live]
            sl, bl, ml = s_idx[live], b_idx[live], m_flat[live]
            key = (bl * M + ml) * S + sl
            order = np.lexsort((key, c))
            _, first = np.unique(nsl[order], return_index=True)
            win = order[first]
            tgt = nsl[win]
            new_metric[tgt] = c[win]
            pred_s[i, tgt] = sl[win]
            pred_b[i, tgt] = bl[win]
            pred_m[i, tgt] = ml[win]
        metric = new_metric

    if not np.isfinite(metric[0]):
        raise ValueError("no terminated path reaches state 0")
    states = np.empty(n + 1, dtype=np.int32)
    branches = np.empty(n, dtype=np.int32)
    parallel = np.empty(n, dtype=np.int32)
    s = 0
    states[n] = 0
    for i in range(n - 1, -1, -1):
        branches[i] = pred_b[i, s]
        parallel[i] = pred_m[i, s]
        s = pred_s[i, s]
        states[i] = s
    return float(metric[0]), states, branches, parallel
