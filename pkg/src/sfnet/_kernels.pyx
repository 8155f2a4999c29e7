# cython: language_level=3
"""Compiled inner loops. Signatures mirror ``sfnet._kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def scatter_add_rows(double[:, ::1] out, const cnp.int64_t[::1] idx, const double[:, ::1] src):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t d = out.shape[1]
    cdef Py_ssize_t v = out.shape[0]
    cdef Py_ssize_t i, j, r
    if src.shape[0] != n or src.shape[1] != d:
        raise ValueError("scatter_add_rows: shape mismatch")
    for i in range(n):
        r = idx[i]
        if r < 0 or r >= v:
            raise IndexError("scatter_add_rows: row index out of range")
        for j in range(d):
            out[r, j] += src[i, j]


def midrank_positive_sum(const double[::1] scores, const cnp.int8_t[::1] labels):
    """Sum of midranks of positives; ``scores`` must be sorted ascending."""
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i = 0, j, t
    cdef double rank_sum = 0.0
    cdef double midrank
    cdef Py_ssize_t n_pos = 0, pos_in_group
    while i < n:
        j = i
        pos_in_group = 0
        while j < n and scores[j] == scores[i]:
            pos_in_group += labels[j]
            j += 1
        # ranks i+1 .. j share the mean (i + 1 + j) / 2
        midrank = 0.5 * (i + 1 + j)
        rank_sum += midrank * pos_in_group
        n_pos += pos_in_group
        i = j
    return rank_sum, n_pos


def roc_staircase(const double[::1] scores, const cnp.int8_t[::1] labels):
    """Cumulative (fp, tp) counts per distinct threshold; scores sorted descending."""
    cdef Py_ssize_t n = scores.shape[0]
    fp_out = np.zeros(n + 1, dtype=np.int64)
    tp_out = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] fp = fp_out
    cdef cnp.int64_t[::1] tp = tp_out
    cdef Py_ssize_t i = 0, j, m = 1
    cdef cnp.int64_t cfp = 0, ctp = 0
    while i < n:
        j = i
        while j < n and scores[j] == scores[i]:
            # branchless: labels are random, so a branch mispredicts half the time
            ctp += labels[j]
            cfp += 1 - labels[j]
            j += 1
        fp[m] = cfp
        tp[m] = ctp
        m += 1
        i = j
    return fp_out[:m], tp_out[:m]


def top_k_hits(const double[:, ::1] probs, const cnp.int64_t[::1] targets, Py_ssize_t k):
    """Count rows whose target ranks within the k best (ties: lower index first)."""
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t c = probs.shape[1]
    cdef Py_ssize_t i, j, t, ahead
    cdef Py_ssize_t hits = 0
    cdef double pt
    for i in range(n):
        t = targets[i]
        pt = probs[i, t]
        ahead = 0
        for j in range(c):
            if probs[i, j] > pt or (probs[i, j] == pt and j < t):
                ahead += 1
        if ahead < k:
            hits += 1
    return hits
