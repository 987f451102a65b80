"""Simulations-based probability-in-bounds estimator.

Future errors are drawn i.i.d. from the fitted t law and each draw is weighted
by the error density of the current noncausal component implied by it,
``g(u_T - sum_{m=1}^{M} psi^m eps_{T+m})``.  The future value is

    pi_{T+h} = phi^h pi_T + sum_{m=1}^{M} c_m eps_{T+m},
    c_m = sum_{k=1}^{min(h, m)} phi^(h-k) psi^(m-k).
"""

import numpy as np
from scipy.special import logsumexp

from .. import rng
from ..errors import DegenerateWeightsError, InputError
from ..mar_process import t_logpdf
from .paths import (ProbabilityForecast, causal_component, mar11_params,
                    mass_split, weighted_median)

DEFAULT_M = 50
BATCH = 1 << 15


def lls_coefficients(phi, psi, h, M):
    """(c, d): future value loadings ``c_m`` and weight loadings ``d_m = psi^m``."""
    m = np.arange(1, M + 1)
    c = np.zeros(M)
    for k in range(1, h + 1):
        sel = m >= k
        c[sel] += phi ** (h - k) * psi ** (m[sel] - k)
    return c, psi ** m


def lls_simulate(fit, series, h, N, M=DEFAULT_M, seed=0, batch=BATCH, label="lls"):
    """Terminal values ``pi_{T+h}`` and log weights for N simulated error vectors."""
    if h < 1:
        raise InputError("horizon must be >= 1")
    if M < 2 * h:
        raise InputError(f"truncation M={M} must be at least 2h={2 * h}")
    if N < 1:
        raise InputError("N must be >= 1")
    phi, psi, dof, scale = mar11_params(fit)
    pi_T = float(series.values[-1])
    u_T = float(causal_component(series, fit)[-1])
    c, d = lls_coefficients(phi, psi, h, M)
    values = np.empty(N)
    logw = np.empty(N)
    for lo in range(0, N, batch):
        hi = min(N, lo + batch)
        eps = scale * rng.student_t_matrix(seed, label, lo, hi, M, dof)
        values[lo:hi] = phi ** h * pi_T + eps @ c
        logw[lo:hi] = t_logpdf(u_T - eps @ d, dof, scale)
    return values, logw


def normalized_weights(logw):
    """Self-normalized weights and effective sample size, computed in log space."""
    if logw.size == 0 or not np.any(np.isfinite(logw)):
        raise DegenerateWeightsError("all importance weights are numerically zero", 0.0)
    lse = logsumexp(logw)
    w = np.exp(logw - lse)
    ess = 1.0 / float(np.sum(w * w))
    return w, ess


def lls_probability(fit, series, bounds, h, N, M=DEFAULT_M, seed=0, batch=BATCH,
                    min_ess=1.0):
    """Probability that ``pi_{T+h}`` lies in ``bounds`` (BoundsSeries or (lo, up))."""
    if isinstance(bounds, tuple):
        lo, up = bounds
    else:
        lo, up = bounds.at(series.end + h)
    values, logw = lls_simulate(fit, series, h, N, M, seed, batch)
    w, ess = normalized_weights(logw)
    if ess < min_ess:
        raise DegenerateWeightsError("importance weights collapsed onto too few draws", ess)
    p_in, below, above = mass_split(values, w, lo, up)
    return ProbabilityForecast(series.end, h, p_in, below, above, "LLS",
                               {"N": N, "M": M, "seed": seed},
                               point_mean=float(w @ values),
                               point_median=weighted_median(values, w), ess=ess)
