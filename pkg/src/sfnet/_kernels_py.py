"""Numpy fallbacks for the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def scatter_add_rows(out, idx, src):
    if src.shape != (idx.shape[0], out.shape[1]):
        raise ValueError("scatter_add_rows: shape mismatch")
    if idx.size and (idx.min() < 0 or idx.max() >= out.shape[0]):
        raise IndexError("scatter_add_rows: row index out of range")
    # unbuffered, applied in index order like the compiled loop
    np.add.at(out, idx, src)


def midrank_positive_sum(scores, labels):
    n = scores.shape[0]
    if n == 0:
        return 0.0, 0
    starts = np.flatnonzero(np.r_[True, scores[1:] != scores[:-1]])
    ends = np.r_[starts[1:], n]
    midranks = 0.5 * (starts + 1 + ends)
    pos = np.add.reduceat(labels.astype(np.int64), starts)
    return float(np.sum(midranks * pos)), int(pos.sum())


def roc_staircase(scores, labels):
    n = scores.shape[0]
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    ends = np.r_[np.flatnonzero(scores[1:] != scores[:-1]) + 1, n]
    lab = labels.astype(np.int64)
    tp = np.cumsum(lab)[ends - 1]
    fp = ends - tp
    return np.r_[0, fp].astype(np.int64), np.r_[0, tp].astype(np.int64)


def top_k_hits(probs, targets, k):
    n, c = probs.shape
    pt = probs[np.arange(n), targets][:, None]
    cols = np.arange(c)[None, :]
    ahead = (probs > pt) | ((probs == pt) & (cols < targets[:, None]))
    return int(np.sum(ahead.sum(axis=1) < k))
