"""Numba-jitted kernels; semantics identical to the numpy backend."""

import math

import numpy as np
from numba import njit

from .._update_math import MU_MAX, MU_MIN
from .._update_math import new_weight as _new_weight_py

NAME = "numba"

_new_weight = njit(cache=True)(_new_weight_py)


@njit(cache=True)
def stump_scan(u, sort_idx, cand_ptr, cand_split):
    d, m = sort_idx.shape
    best_f = -1
    best_c = -1
    best_pol = 1
    best_edge = -np.inf
    prefix = np.empty(m + 1)
    for f in range(d):
        prefix[0] = 0.0
        acc = 0.0
        for i in range(m):
            acc += u[sort_idx[f, i]]
            prefix[i + 1] = acc
        total = acc
        for ci in range(cand_ptr[f], cand_ptr[f + 1]):
            e = total - 2.0 * prefix[cand_split[ci]]
            if e > best_edge:
                best_f = f
                best_c = ci
                best_pol = 1
                best_edge = e
            if -e > best_edge:
                best_f = f
                best_c = ci
                best_pol = -1
                best_edge = -e
    return best_f, best_c, best_pol, best_edge


@njit(cache=True)
def coordinate_sweep(order, w, mu, pos_ptr, pos_idx, neg_ptr, neg_idx,
                     c_over_p, stagewise, w_old_out, w_new_out):
    half = 1.0 / (2.0 * c_over_p)
    for q in range(order.shape[0]):
        j = order[q]
        s_pos = 0.0
        for t in range(pos_ptr[j], pos_ptr[j + 1]):
            s_pos += mu[pos_idx[t]]
        s_neg = 0.0
        for t in range(neg_ptr[j], neg_ptr[j + 1]):
            s_neg += mu[neg_idx[t]]
        w_j = w[j]
        w_new = _new_weight(w_j, s_pos, s_neg, half, stagewise)
        if w_new != w_j:
            f_pos = math.exp(w_j - w_new)
            f_neg = math.exp(w_new - w_j)
            for t in range(pos_ptr[j], pos_ptr[j + 1]):
                v = mu[pos_idx[t]] * f_pos
                if v > MU_MAX:
                    v = MU_MAX
                elif v < MU_MIN:
                    v = MU_MIN
                mu[pos_idx[t]] = v
            for t in range(neg_ptr[j], neg_ptr[j + 1]):
                v = mu[neg_idx[t]] * f_neg
                if v > MU_MAX:
                    v = MU_MAX
                elif v < MU_MIN:
                    v = MU_MIN
                mu[neg_idx[t]] = v
            w[j] = w_new
        w_old_out[q] = w_j
        w_new_out[q] = w_new


@njit(cache=True)
def violation_values(w, mu, pos_ptr, pos_idx, neg_ptr, neg_idx, c_over_p, theta_out):
    for j in range(w.shape[0]):
        g = 0.0
        for t in range(pos_ptr[j], pos_ptr[j + 1]):
            g += mu[pos_idx[t]]
        for t in range(neg_ptr[j], neg_ptr[j + 1]):
            g -= mu[neg_idx[t]]
        r = c_over_p * g
        if w[j] > 0.0:
            v = 1.0 - r
            theta_out[j] = -v if v < 0.0 else v
        else:
            v = r - 1.0
            theta_out[j] = v if v > 0.0 else 0.0
