"""Scalar coordinate-update formula shared verbatim by both kernel backends."""

import math

from .model import MARGIN_CLAMP

# Cap for the stage-wise weight update when the negative-side sum is zero
# (a separable learner would otherwise get an infinite weight), chosen equal
# to the margin clamp so the exponential-loss arithmetic stays consistent.
WEIGHT_CAP = MARGIN_CLAMP

# The mu cache stores exp(-margin) for clamped margins, so entries live in
# [exp(-MARGIN_CLAMP), exp(+MARGIN_CLAMP)].
MU_MIN = math.exp(-MARGIN_CLAMP)
MU_MAX = math.exp(MARGIN_CLAMP)


def new_weight(w_j, s_pos, s_neg, half_p_over_c, stagewise):
    """Optimal new value for one coordinate given the raw mu sums over its
    positive/negative constraint lists (s_pos, s_neg include the current w_j
    factor, so V+ = s_pos * exp(w_j) and V- = s_neg * exp(-w_j)).

    The exact minimizer max{0, log(sqrt(V+V- + a^2) - a) - log V-} with
    a = p/(2C) is evaluated in the cancellation-free equivalent form

        max{0, w_j + log s_pos - log(sqrt(s_pos*s_neg + a^2) + a)}

    which also yields the correct analytic limit log(C*V+/p) as V- -> 0.
    The stage-wise variant is the large-C limit max{0, 0.5*log(V+/V-)}.
    """
    if s_pos <= 0.0:
        # V+ = 0: the objective is non-decreasing in w_j, so the bound is active.
        return 0.0
    if stagewise:
        if s_neg <= 0.0:
            return WEIGHT_CAP
        w_new = w_j + 0.5 * (math.log(s_pos) - math.log(s_neg))
        if w_new < 0.0:
            return 0.0
        if w_new > WEIGHT_CAP:
            return WEIGHT_CAP
        return w_new
    s = s_pos * s_neg
    if math.isinf(s):
        # Saturated mu sums; the half-log-ratio is the exact large-product limit.
        w_new = w_j + 0.5 * (math.log(s_pos) - math.log(s_neg))
    else:
        a = half_p_over_c
        w_new = w_j + math.log(s_pos) - math.log(math.sqrt(s + a * a) + a)
    return w_new if w_new > 0.0 else 0.0
