"""Pure-numpy kernels; the reference implementation the numba backend must match."""

import math

import numpy as np

from .._update_math import MU_MAX, MU_MIN, new_weight

NAME = "numpy"


def stump_scan(u, sort_idx, cand_ptr, cand_split):
    """Best decision stump against signed example weights u.

    Scans every (feature, candidate threshold, polarity) triple using one
    prefix sum per sorted feature.  Ties break toward the smaller feature
    index, then the smaller threshold (candidate order), then polarity +1.
    Returns (feature, flat candidate index, polarity, edge).
    """
    d = sort_idx.shape[0]
    best_f = -1
    best_c = -1
    best_pol = 1
    best_edge = -np.inf
    for f in range(d):
        us = u[sort_idx[f]]
        prefix = np.concatenate(([0.0], np.cumsum(us)))
        total = prefix[-1]
        splits = cand_split[cand_ptr[f]:cand_ptr[f + 1]]
        e_plus = total - 2.0 * prefix[splits]
        ip = int(np.argmax(e_plus))
        vp = float(e_plus[ip])
        e_minus = -e_plus
        im = int(np.argmax(e_minus))
        vm = float(e_minus[im])
        if vm > vp or (vm == vp and im < ip):
            ci, pol, val = im, -1, vm
        else:
            ci, pol, val = ip, 1, vp
        if val > best_edge:
            best_f = f
            best_c = int(cand_ptr[f]) + ci
            best_pol = pol
            best_edge = val
    return best_f, best_c, best_pol, best_edge


def coordinate_sweep(order, w, mu, pos_ptr, pos_idx, neg_ptr, neg_idx,
                     c_over_p, stagewise, w_old_out, w_new_out):
    """One pass of sequential coordinate updates over the picked variables.

    Updates w and mu in place; records the before/after value of every pick.
    """
    half = 1.0 / (2.0 * c_over_p)
    for q in range(order.shape[0]):
        j = int(order[q])
        pidx = pos_idx[pos_ptr[j]:pos_ptr[j + 1]]
        nidx = neg_idx[neg_ptr[j]:neg_ptr[j + 1]]
        s_pos = float(mu[pidx].sum())
        s_neg = float(mu[nidx].sum())
        w_j = float(w[j])
        w_new = new_weight(w_j, s_pos, s_neg, half, stagewise)
        if w_new != w_j:
            mu[pidx] = np.clip(mu[pidx] * math.exp(w_j - w_new), MU_MIN, MU_MAX)
            mu[nidx] = np.clip(mu[nidx] * math.exp(w_new - w_j), MU_MIN, MU_MAX)
            w[j] = w_new
        w_old_out[q] = w_j
        w_new_out[q] = w_new


def _segment_sums(values, ptr):
    """Sum of values over contiguous CSR segments, tolerating empty segments."""
    out = np.zeros(ptr.shape[0] - 1)
    if values.size == 0:
        return out
    starts = ptr[:-1]
    nonempty = ptr[1:] > starts
    if nonempty.any():
        out[nonempty] = np.add.reduceat(values, starts[nonempty])
    return out


def violation_values(w, mu, pos_ptr, pos_idx, neg_ptr, neg_idx, c_over_p, theta_out):
    """KKT violation value of every variable, written into theta_out."""
    g = _segment_sums(mu[pos_idx], pos_ptr) - _segment_sums(mu[neg_idx], neg_ptr)
    r = c_over_p * g
    np.copyto(theta_out, np.where(w > 0.0, np.abs(1.0 - r), np.maximum(0.0, r - 1.0)))
