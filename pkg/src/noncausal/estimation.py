"""Approximate maximum likelihood for MAR / MARX / SMAR models with t errors.

The objective is the plain product of Student-t error densities over a fixed
window of residuals.  Optimization runs in an unconstrained space:

* each lag/lead polynomial is parameterized by its partial autocorrelations
  ``tanh(x)`` (stationary by construction),
* ``dof = 2 + exp(a)`` and ``scale = exp(b)``,
* exogenous loadings are free.

Each start is polished by Nelder-Mead followed by BFGS; the best point ever
evaluated is kept, so a start that is already optimal can never get worse.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .errors import (AlignmentError, CollinearityError, ConvergenceError,
                     InputError, InsufficientDataError, NoncausalError)
from .mar_process import (MarModel, MarxModel, SmarModel, apply_laurent,
                          t_logpdf)
from .timeseries import TimeSeries, format_date

log = logging.getLogger(__name__)

PACF_CLIP = 1.0 - 1e-7
#: log(dof - 2) is kept in this range; 1e6 degrees of freedom is Gaussian for all purposes
LOG_DOF_RANGE = (-10.0, np.log(1e6))
GRID_MAGNITUDES = (0.3, 0.8)
DEFAULT_N_STARTS = 8


# -- reparameterization ------------------------------------------------------

def pacf_to_coeffs(p):
    """Partial autocorrelations -> coefficients of a stationary AR polynomial."""
    p = np.asarray(p, dtype=float)
    c = np.zeros(0)
    for k, pk in enumerate(p):
        c = np.concatenate([c - pk * c[::-1], [pk]]) if k else np.array([pk])
    return c


def coeffs_to_pacf(c):
    """Inverse of :func:`pacf_to_coeffs` (step-down recursion)."""
    c = np.array(c, dtype=float)
    k = c.size
    p = np.zeros(k)
    for j in range(k, 0, -1):
        pk = float(np.clip(c[j - 1], -PACF_CLIP, PACF_CLIP))
        p[j - 1] = pk
        if j > 1:
            prev = c[:j - 1]
            c = (prev + pk * prev[::-1]) / (1.0 - pk * pk)
    return p


def _to_free(p):
    return np.arctanh(np.clip(p, -PACF_CLIP, PACF_CLIP))


def _from_free(x):
    return np.clip(np.tanh(x), -PACF_CLIP, PACF_CLIP)


@dataclass(frozen=True)
class _Layout:
    """Which parameters a fit carries, and how they map to a model."""

    r: int
    s: int
    R: int = 0
    S: int = 0
    offsets: tuple = ()
    exog_names: tuple = ()

    @property
    def n_params(self):
        return self.r + self.s + (self.R > 0) + (self.S > 0) + len(self.offsets) + 2

    def names(self):
        out = [f"lag{i + 1}" for i in range(self.r)] + [f"lead{i + 1}" for i in range(self.s)]
        if self.R:
            out.append(f"seasonal_lag{self.R}")
        if self.S:
            out.append(f"seasonal_lead{self.S}")
        names = self.exog_names or tuple(f"x{i + 1}" for i in range(len(self.offsets)))
        out += [f"beta_{n}[{o:+d}]" for n, o in zip(names, self.offsets)]
        return out + ["dof", "scale"]

    def split(self, nat):
        """Natural vector -> (phi, psi, seasonal_lag, seasonal_lead, beta, dof, scale)."""
        i = 0
        phi = nat[i:i + self.r]; i += self.r
        psi = nat[i:i + self.s]; i += self.s
        slag = nat[i] if self.R else 0.0; i += bool(self.R)
        slead = nat[i] if self.S else 0.0; i += bool(self.S)
        beta = nat[i:i + len(self.offsets)]; i += len(self.offsets)
        return phi, psi, slag, slead, beta, nat[i], nat[i + 1]

    def natural(self, theta):
        i = 0
        parts = []
        for k in (self.r, self.s):
            parts.append(pacf_to_coeffs(_from_free(theta[i:i + k])))
            i += k
        for flag in (self.R, self.S):
            if flag:
                parts.append(_from_free(theta[i:i + 1]))
                i += 1
        q = len(self.offsets)
        parts.append(theta[i:i + q])
        i += q
        parts.append([2.0 + np.exp(np.clip(theta[i], *LOG_DOF_RANGE)), np.exp(theta[i + 1])])
        return np.concatenate(parts)

    def free(self, nat):
        phi, psi, slag, slead, beta, dof, scale = self.split(np.asarray(nat, dtype=float))
        parts = [_to_free(coeffs_to_pacf(phi)), _to_free(coeffs_to_pacf(psi))]
        if self.R:
            parts.append(_to_free(np.array([slag])))
        if self.S:
            parts.append(_to_free(np.array([slead])))
        parts.append(beta)
        parts.append([np.clip(np.log(max(dof - 2.0, 1e-300)), *LOG_DOF_RANGE), np.log(scale)])
        return np.concatenate(parts)

    def to_model(self, nat):
        phi, psi, slag, slead, beta, dof, scale = self.split(np.asarray(nat, dtype=float))
        base = MarModel.from_coeffs(phi, psi, dof, scale)
        if self.offsets:
            return MarxModel(base, beta, self.offsets)
        if self.R or self.S:
            return SmarModel(base, slag, slead, self.R, self.S)
        return base

    def laurent(self, phi, psi, slag, slead):
        lag = np.concatenate([[1.0], -phi])
        lead = np.concatenate([[1.0], -psi])
        if self.R:
            seas = np.zeros(self.R + 1)
            seas[0], seas[-1] = 1.0, -slag
            lag = np.convolve(lag, seas)
        if self.S:
            seas = np.zeros(self.S + 1)
            seas[0], seas[-1] = 1.0, -slead
            lead = np.convolve(lead, seas)
        return np.convolve(lag, lead[::-1]), self.s + self.S, self.r + self.R


class _Objective:
    """Log-likelihood of a layout on a fixed residual window ``t0 .. t0+n-1``."""

    def __init__(self, y, layout, t0, n, xmat=None):
        self.y = np.asarray(y, dtype=float)
        self.layout = layout
        self.t0, self.n = int(t0), int(n)
        a, b = layout.s + layout.S, layout.r + layout.R
        if self.t0 < b or self.t0 + self.n > self.y.size - a or self.n < 1:
            raise InsufficientDataError("likelihood window exceeds the computable residuals")
        self.xmat = xmat
        self.calls = 0

    def residuals(self, nat):
        L = self.layout
        phi, psi, slag, slead, beta, _, _ = L.split(nat)
        c, a, b = L.laurent(phi, psi, slag, slead)
        lo = self.t0 - b
        seg = self.y[lo:lo + self.n + c.size - 1]
        eps = apply_laurent(seg, c, a)
        if self.xmat is not None and beta.size:
            eps = eps - self.xmat @ beta
        return eps

    def loglik(self, nat):
        self.calls += 1
        *_, dof, scale = self.layout.split(nat)
        if not (dof > 2 and scale > 0 and np.isfinite(dof) and np.isfinite(scale)):
            return -np.inf
        eps = self.residuals(nat)
        val = float(np.sum(t_logpdf(eps, dof, scale)))
        return val if np.isfinite(val) else -np.inf

    def neg_free(self, theta):
        with np.errstate(over="ignore", invalid="ignore"):
            ll = self.loglik(self.layout.natural(theta))
        return -ll if np.isfinite(ll) else 1e300


# -- results -----------------------------------------------------------------

@dataclass
class FitResult:
    model: object
    loglik: float
    n_effective: int
    bic: float
    std_errors: np.ndarray = None
    converged: bool = False
    n_starts_used: int = 0
    params: np.ndarray = None
    param_names: tuple = ()
    grad_norm: float = np.nan
    window_start: int = 0          # month ordinal of the first residual in the likelihood
    series_end: int = 0            # month ordinal of the last observation used
    alternatives: list = field(default_factory=list)

    @property
    def order(self):
        base = self.model if isinstance(self.model, MarModel) else self.model.base
        return base.r, base.s

    def summary(self):
        r, s = self.order
        kind = type(self.model).__name__.replace("Model", "").upper()
        lines = [f"{kind}({r},{s})  loglik={self.loglik:.4f}  n={self.n_effective}  "
                 f"bic={self.bic:.4f}  converged={self.converged}"]
        se = self.std_errors if self.std_errors is not None else np.full(len(self.params), np.nan)
        for name, val, e in zip(self.param_names, self.params, se):
            lines.append(f"  {name:>18s} {val: .6f}  ({e:.6f})")
        return "\n".join(lines)


def _fd_gradient(f, x, rel=1e-5):
    g = np.zeros(x.size)
    for i in range(x.size):
        h = rel * max(1.0, abs(x[i]))
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _fd_hessian(f, x, rel=1e-4):
    k = x.size
    H = np.zeros((k, k))
    hs = rel * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = hs[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / hs[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = hs[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej)
                                 - f(x - ei + ej) + f(x - ei - ej)) / (4 * hs[i] * hs[j])
    return H


def _std_errors(obj, nat):
    """Observed-information standard errors in the natural parameterization."""
    try:
        H = _fd_hessian(lambda v: -obj.loglik(v), nat)
        if not np.all(np.isfinite(H)):
            return np.full(nat.size, np.nan)
        cov = np.linalg.inv(H)
        d = np.diag(cov)
        return np.where(d > 0, np.sqrt(np.abs(d)), np.nan)
    except np.linalg.LinAlgError:
        return np.full(nat.size, np.nan)


def _local_optimum(obj, theta0):
    """Nelder-Mead then BFGS from one start; returns the best (theta, f) evaluated."""
    best = [np.array(theta0, dtype=float), obj.neg_free(theta0)]

    def f(th):
        val = obj.neg_free(th)
        if val < best[1]:
            best[0], best[1] = np.array(th), val
        return val

    if not best[1] < 1e300:
        return best[0], best[1]
    k = theta0.size
    optimize.minimize(f, theta0, method="Nelder-Mead",
                      options={"xatol": 1e-5, "fatol": 1e-8, "maxiter": 300 * k,
                               "maxfev": 400 * k, "adaptive": k > 3})
    optimize.minimize(f, best[0].copy(), method="BFGS", jac="3-point",
                      options={"gtol": 1e-8, "maxiter": 200})
    return best[0], best[1]


def _run_fit(obj, starts, series, n_starts, with_se=True):
    """Optimize from each natural-space start and package the best one."""
    L = obj.layout
    best_theta, best_f, used = None, np.inf, 0
    for nat0 in starts[:max(1, n_starts)]:
        used += 1
        theta, fval = _local_optimum(obj, L.free(nat0))
        if fval < best_f:
            best_theta, best_f = theta, fval
    if best_theta is None or not best_f < 1e300:
        raise ConvergenceError(
            f"no start produced a finite likelihood for layout {L}", best=None)
    nat = L.natural(best_theta)
    ll = -best_f
    grad = _fd_gradient(obj.loglik, nat)
    grad_norm = float(np.linalg.norm(grad)) if np.all(np.isfinite(grad)) else np.inf
    k = L.n_params
    try:
        model = L.to_model(nat)
    except NoncausalError as exc:
        raise ConvergenceError(f"optimum is not a valid model: {exc}", best=nat) from exc
    return FitResult(
        model=model, loglik=ll, n_effective=obj.n,
        bic=-2.0 * ll + k * np.log(obj.n),
        std_errors=_std_errors(obj, nat) if with_se else None,
        converged=bool(grad_norm < 1e-4 * (1.0 + abs(ll))),
        n_starts_used=used, params=nat, param_names=tuple(L.names()),
        grad_norm=grad_norm,
        window_start=series.start + obj.t0, series_end=series.end)


# -- pseudo-causal AR and start values ---------------------------------------

@dataclass
class ArFit:
    p: int
    coeffs: np.ndarray
    rss: float
    n: int
    bic_table: dict
    resid_sd: float


def _values(series):
    return series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)


def _lagmat(y, p, t0):
    """Columns y_{t-1..t-p} for t = t0 .. len(y)-1."""
    return np.column_stack([y[t0 - j:y.size - j] for j in range(1, p + 1)]) if p else \
        np.zeros((y.size - t0, 0))


def _ols_ar(y, p, t0):
    Z = _lagmat(y, p, t0)
    target = y[t0:]
    if p:
        coef, *_ = np.linalg.lstsq(Z, target, rcond=None)
        resid = target - Z @ coef
    else:
        coef, resid = np.zeros(0), target
    return coef, float(resid @ resid), resid


def fit_pseudo_causal(series, p_max=15):
    """BIC choice of the AR order p in 0..p_max, all on one common sample."""
    y = _values(series)
    if y.size <= p_max + 10:
        raise InsufficientDataError(f"need more than p_max + 10 = {p_max + 10} observations")
    n = y.size - p_max
    table = {}
    fits = {}
    for p in range(p_max + 1):
        coef, rss, resid = _ols_ar(y, p, p_max)
        rss = max(rss, 1e-300)
        table[p] = float(n * np.log(rss / n) + p * np.log(n))
        fits[p] = (coef, rss, resid)
    p_best = min(table, key=lambda p: (table[p], p))
    coef, rss, resid = fits[p_best]
    return p_best, ArFit(p_best, coef, rss, n, table, float(np.sqrt(rss / n)))


def _split_roots(ar_coeffs, s):
    """Factor a pseudo-causal AR polynomial into (lag, lead) coefficient starts.

    The reciprocal roots of the AR polynomial are shared out between the lag
    and the lead polynomial in every way that keeps conjugate pairs together.
    """
    p = len(ar_coeffs)
    if p == 0:
        return []
    lam = np.roots(np.concatenate([[1.0], -np.asarray(ar_coeffs)]))
    mod = np.abs(lam)
    lam = np.where(mod >= 0.99, lam / np.maximum(mod, 1e-12) * 0.99, lam)
    out = []
    for lead_idx in itertools.combinations(range(p), s):
        lead_l = lam[list(lead_idx)]
        lag_l = np.delete(lam, list(lead_idx))
        lead_c, lag_c = np.atleast_1d(np.poly(lead_l)), np.atleast_1d(np.poly(lag_l))
        if np.any(np.abs(np.imag(lead_c)) > 1e-8) or np.any(np.abs(np.imag(lag_c)) > 1e-8):
            continue
        out.append((-np.real(lag_c[1:]), -np.real(lead_c[1:])))
    # put the "larger roots to the lead" assignment first
    out.sort(key=lambda pair: -np.sum(np.abs(pair[1])))
    uniq = []
    for pair in out:
        if not any(np.allclose(pair[0], u[0]) and np.allclose(pair[1], u[1]) for u in uniq):
            uniq.append(pair)
    return uniq


def _grid_polys(k):
    """Grid starts for one polynomial: first coefficient in {+-0.3, +-0.8}."""
    if k == 0:
        return [np.zeros(0)]
    out = []
    for sign in (1.0, -1.0):
        for m in GRID_MAGNITUDES:
            c = np.zeros(k)
            c[0] = sign * m
            out.append(c)
    return out


def coefficient_starts(y, r, s):
    """Ordered (lag, lead) start pairs: root factorizations first, then the sign/magnitude grid."""
    pairs = []
    if r + s > 0 and y.size > r + s + 10:
        coef, _, _ = _ols_ar(y, r + s, r + s)
        pairs.extend(_split_roots(coef, s))
    grid = list(itertools.product(_grid_polys(r), _grid_polys(s)))
    # interleave so the first few grid starts cover both magnitudes and signs
    grid.sort(key=lambda pq: (
        (np.sign(pq[0][:1]).sum() < 0) + (np.sign(pq[1][:1]).sum() < 0),
        abs(float(pq[0][:1].sum() if pq[0].size else 0) - float(pq[1][:1].sum() if pq[1].size else 0))))
    for pair in grid:
        if not any(np.allclose(pair[0], q[0]) and np.allclose(pair[1], q[1]) for q in pairs):
            pairs.append(pair)
    return pairs


def _scale_start(eps, dof=4.0):
    sd = float(np.std(eps)) if eps.size else 1.0
    sd = sd if sd > 0 else 1.0
    return sd * np.sqrt((dof - 2.0) / dof)


# -- MAR ---------------------------------------------------------------------

def _default_window(T, layout, extra_lead=0, extra_lag=0):
    t0 = layout.r + layout.R + extra_lag
    n = T - t0 - (layout.s + layout.S + extra_lead)
    return t0, n


def fit_mar_amle(series, r, s, n_starts=DEFAULT_N_STARTS, window=None, extra_starts=(),
                 with_se=True):
    """AMLE of MAR(r, s).

    ``window = (t0, n)`` fixes the residual indices (0-based, relative to the
    series) entering the likelihood; the default uses every computable one.
    ``extra_starts`` are natural-parameter vectors tried before the grid.
    """
    if n_starts < 1:
        raise InputError("n_starts must be >= 1")
    y = _values(series)
    if y.size <= r + s + 10:
        raise InsufficientDataError(f"need more than r+s+10 = {r + s + 10} observations")
    layout = _Layout(r, s)
    t0, n = window if window is not None else _default_window(y.size, layout)
    obj = _Objective(y, layout, t0, n)
    starts = [np.asarray(st, dtype=float) for st in extra_starts]
    for lag, lead in coefficient_starts(y, r, s):
        nat = np.concatenate([lag, lead, [4.0, 1.0]])
        nat[-1] = _scale_start(obj.residuals(nat))
        starts.append(nat)
    ts = series if isinstance(series, TimeSeries) else TimeSeries(0, y)
    return _run_fit(obj, starts, ts, n_starts if not extra_starts else n_starts + len(extra_starts),
                    with_se=with_se)


def select_mar(series, p, n_starts=DEFAULT_N_STARTS, with_se=True):
    """Best MAR(r, s) with r + s = p, all candidates on the window t in [p, T-1-p].

    Ties go to the larger r.  Every candidate is kept in ``alternatives``.
    """
    if p < 0:
        raise InputError("p must be >= 0")
    y = _values(series)
    window = (p, y.size - 2 * p)
    fits, errors = [], []
    for r in range(p, -1, -1):
        try:
            fits.append(fit_mar_amle(series, r, p - r, n_starts, window=window, with_se=with_se))
        except NoncausalError as exc:
            errors.append(f"MAR({r},{p - r}): {exc}")
            log.warning("candidate MAR(%d,%d) failed: %s", r, p - r, exc)
    if not fits:
        raise ConvergenceError("every MAR candidate failed: " + "; ".join(errors))
    best = fits[0]
    for f in fits[1:]:
        if f.loglik > best.loglik:
            best = f
    best.alternatives = [f for f in fits if f is not best]
    return best


# -- ARDL ----------------------------------------------------------------------

@dataclass
class ArdlFit:
    p: int
    x_lags: tuple
    coef: np.ndarray
    coef_names: tuple
    rss: float
    n: int
    bic: float
    residuals: np.ndarray


def _panel_for(series, X):
    """Panel rows aligned with the series dates (row i <-> series index i)."""
    if X.start > series.start or X.end < series.end:
        raise AlignmentError("exogenous panel does not cover the series dates")
    return X.values[series.start - X.start:series.start - X.start + len(series)]


def fit_ardl(series, X, max_lag_y=12, max_lag_x=4):
    """BIC-selected ARDL(p, k_1, ..., k_q) by least squares on a common sample.

    Regressor i enters with x_{i,t}, ..., x_{i,t-k_i}.  Columns that are
    identically zero carry no information and are dropped with a zero
    coefficient.
    """
    y = _values(series)
    xv = _panel_for(series, X)
    t0 = max(max_lag_y, max_lag_x)
    if y.size - t0 <= max_lag_y + (max_lag_x + 1) * X.q + 5:
        raise InsufficientDataError("not enough observations for the ARDL search")
    n = y.size - t0
    target = y[t0:]
    active = [i for i in range(X.q) if np.any(xv[:, i] != 0)]
    best = None
    lag_ranges = [range(max_lag_x + 1) if i in active else range(1) for i in range(X.q)]
    for p in range(max_lag_y + 1):
        ycols = _lagmat(y, p, t0)
        for ks in itertools.product(*lag_ranges):
            cols, names = [ycols], [f"y_lag{j}" for j in range(1, p + 1)]
            for i in active:
                for j in range(ks[i] + 1):
                    cols.append(xv[t0 - j:y.size - j, i][:, None])
                    names.append(f"{X.names[i]}_lag{j}")
            Z = np.hstack(cols)
            if Z.shape[1]:
                coef, *_ = np.linalg.lstsq(Z, target, rcond=None)
                resid = target - Z @ coef
            else:
                coef, resid = np.zeros(0), target
            rss = max(float(resid @ resid), 1e-300)
            bic = n * np.log(rss / n) + Z.shape[1] * np.log(n)
            if best is None or bic < best[0] - 1e-12:
                best = (bic, p, ks, Z, coef, names, rss, resid)
    bic, p, ks, Z, coef, names, rss, resid = best
    if Z.shape[1] and np.linalg.cond(Z) > 1e10:
        raise CollinearityError("ARDL design is collinear (condition number > 1e10)")
    return ArdlFit(p, tuple(ks), coef, tuple(names), rss, n, bic, resid)


# -- MARX --------------------------------------------------------------------

def _marx_window(y_len, X_rows, r, s, offsets_pool=(-1, 0, 1)):
    lo_off, hi_off = min(offsets_pool), max(offsets_pool)
    t0 = max(r, -lo_off)
    last = min(y_len - 1 - s, X_rows - 1 - hi_off)
    return t0, last - t0 + 1


def _xmat(xv, t0, n, offsets):
    return np.column_stack([xv[t0 + o:t0 + o + n, i] for i, o in enumerate(offsets)])


def fit_marx_amle(series, X, r, s, offsets, n_starts=DEFAULT_N_STARTS, window=None,
                  base=None, with_se=True):
    """AMLE of a MARX(r, s, q) with fixed regressor offsets.

    ``base`` (a MAR FitResult on the same window) seeds the starts; the
    beta = 0 start is always included so the MARX likelihood is never below
    the MAR one.
    """
    y = _values(series)
    xv = _panel_for(series, X)
    offsets = tuple(int(o) for o in offsets)
    if len(offsets) != X.q:
        raise InputError("one offset per regressor required")
    if window is None:
        window = _marx_window(y.size, xv.shape[0], r, s, offsets)
    t0, n = window
    xm = _xmat(xv, t0, n, offsets)
    layout = _Layout(r, s, offsets=offsets, exog_names=X.names)
    obj = _Objective(y, layout, t0, n, xm)
    if base is None:
        base = fit_mar_amle(series, r, s, n_starts, window=window, with_se=False)
    mar_nat = base.params
    phi, psi = mar_nat[:r], mar_nat[r:r + s]
    dof, scale = mar_nat[-2], mar_nat[-1]
    mar_obj = _Objective(y, _Layout(r, s), t0, n)
    eps = mar_obj.residuals(mar_nat)
    beta_ols, *_ = np.linalg.lstsq(xm, eps, rcond=None)
    starts = [np.concatenate([phi, psi, beta_ols, [dof, scale]]),
              np.concatenate([phi, psi, np.zeros(X.q), [dof, scale]])]
    for lag, lead in coefficient_starts(y, r, s):
        nat = np.concatenate([lag, lead, beta_ols, [4.0, 1.0]])
        nat[-1] = _scale_start(obj.residuals(nat))
        starts.append(nat)
    ts = series if isinstance(series, TimeSeries) else TimeSeries(0, y)
    res = _run_fit(obj, starts, ts, max(n_starts, 2), with_se=with_se)
    res.alternatives = [base]
    return res


def select_marx_offsets(series, X, r, s, n_starts=DEFAULT_N_STARTS, with_se=True):
    """Fit MARX for every offset combination in {-1, 0, +1}^q; keep the best likelihood."""
    y = _values(series)
    xv = _panel_for(series, X)
    if X.q < 1:
        raise InputError("need at least one regressor")
    window = _marx_window(y.size, xv.shape[0], r, s)
    base = fit_mar_amle(series, r, s, n_starts, window=window, with_se=False)
    fits = []
    for offs in itertools.product((-1, 0, 1), repeat=X.q):
        try:
            fits.append(fit_marx_amle(series, X, r, s, offs, n_starts, window=window,
                                      base=base, with_se=False))
        except NoncausalError as exc:
            log.warning("MARX offsets %s failed: %s", offs, exc)
    if not fits:
        raise ConvergenceError("every MARX offset combination failed")
    best = max(fits, key=lambda f: f.loglik)
    if with_se:
        obj = _Objective(y, _Layout(r, s, offsets=best.model.offsets, exog_names=X.names),
                         window[0], window[1], _xmat(xv, window[0], window[1], best.model.offsets))
        best.std_errors = _std_errors(obj, best.params)
    best.alternatives = [base] + [f for f in fits if f is not best]
    return best


# -- SMAR --------------------------------------------------------------------

def fit_smar(series, base, D1, D2=None, n_starts=DEFAULT_N_STARTS, with_se=True):
    """Compare the two seasonal MAR candidates built on ``base``'s orders.

    Without ``D2``: SMAR(r,s)(D1,0) against SMAR(r,s)(0,D1).  With ``D2``:
    lag at D1 / lead at D2 against lag at D2 / lead at D1.  All parameters are
    re-estimated jointly on the window common to both candidates; the MAR
    refit on that window is kept in ``alternatives`` for comparison.
    """
    if D1 < 1 or (D2 is not None and D2 < 1):
        raise InputError("seasonal displacements must be >= 1")
    r, s = base.order
    y = _values(series)
    cands = [(D1, 0), (0, D1)] if D2 is None else [(D1, D2), (D2, D1)]
    maxR = max(c[0] for c in cands)
    maxS = max(c[1] for c in cands)
    t0 = r + maxR
    n = y.size - t0 - s - maxS
    if n <= r + s + 10:
        raise InsufficientDataError("series too short for the seasonal displacements")
    mar_nat = base.params[:r + s]
    mar = fit_mar_amle(series, r, s, n_starts, window=(t0, n),
                       extra_starts=[base.params], with_se=False)
    phi, psi = mar.params[:r], mar.params[r:r + s]
    dof, scale = mar.params[-2], mar.params[-1]
    fits = []
    for R, S in cands:
        layout = _Layout(r, s, R, S)
        obj = _Objective(y, layout, t0, n)
        seas_starts = [[0.0] * ((R > 0) + (S > 0))]
        for v in (0.3, -0.3, 0.6, -0.6):
            seas_starts.append([v] * ((R > 0) + (S > 0)))
        starts = [np.concatenate([phi, psi, st, [dof, scale]]) for st in seas_starts]
        starts.append(np.concatenate([mar_nat[:r], mar_nat[r:], seas_starts[0],
                                      base.params[-2:]]))
        ts = series if isinstance(series, TimeSeries) else TimeSeries(0, y)
        fits.append(_run_fit(obj, starts, ts, n_starts, with_se=with_se))
    best = max(fits, key=lambda f: f.loglik)
    best.alternatives = [f for f in fits if f is not best] + [mar]
    return best


# -- diagnostics ---------------------------------------------------------------

@dataclass
class DiagnosticsReport:
    acf: np.ndarray
    significant_displacements: list
    jarque_bera: tuple
    band: float


def sample_acf(x, max_lag):
    x = np.asarray(x, dtype=float) - np.mean(x)
    denom = float(x @ x)
    return np.array([1.0] + [float(x[k:] @ x[:-k]) / denom for k in range(1, max_lag + 1)])


def diagnostics(resid, max_lag=24):
    x = _values(resid)
    n = x.size
    if n <= max_lag + 5:
        raise InsufficientDataError("residual series too short for the requested ACF")
    acf = sample_acf(x, max_lag)
    band = 2.0 / np.sqrt(n)
    flagged = [k for k in range(1, max_lag + 1) if abs(acf[k]) > band]
    d = x - x.mean()
    m2 = np.mean(d ** 2)
    skew = np.mean(d ** 3) / m2 ** 1.5
    kurt = np.mean(d ** 4) / m2 ** 2
    jb = n * (skew ** 2 / 6.0 + (kurt - 3.0) ** 2 / 24.0)
    return DiagnosticsReport(acf, flagged, (float(jb), float(stats.chi2.sf(jb, 2))), band)


def write_diagnostics_csv(report, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("lag,acf,flag\n")
        for k, v in enumerate(report.acf):
            flag = int(k > 0 and k in report.significant_displacements)
            fh.write(f"{k},{float(v)!r},{flag}\n")


# -- recursive stability ---------------------------------------------------------

def recursive_estimates(series, initial_window=100, n_starts=DEFAULT_N_STARTS, p_max=15,
                        orders=None, step=1):
    """Expanding-window refits, one per end point ``initial_window .. T``.

    Orders are re-identified at each end point (pseudo-causal BIC, then
    :func:`select_mar`) unless ``orders=(r, s)`` pins them.
    """
    if len(series) < initial_window:
        raise InsufficientDataError("series shorter than the initial window")
    out = []
    ends = list(range(initial_window, len(series) + 1, step))
    if ends[-1] != len(series):
        ends.append(len(series))
    for end in ends:
        sub = TimeSeries(series.start, series.values[:end], series.name)
        if orders is None:
            p, _ = fit_pseudo_causal(sub, p_max)
            fit = select_mar(sub, p, n_starts)
        else:
            fit = fit_mar_amle(sub, orders[0], orders[1], n_starts)
        out.append(fit)
    return out


def coefficient_paths(fits):
    """End dates and parameter paths keyed by parameter name (NaN when absent)."""
    names = []
    for f in fits:
        for nm in f.param_names:
            if nm not in names:
                names.append(nm)
    paths = {nm: np.array([dict(zip(f.param_names, f.params)).get(nm, np.nan) for f in fits])
             for nm in names}
    return [format_date(f.series_end) for f in fits], paths


# -- reports -------------------------------------------------------------------

def fit_report(fit):
    """Key-value lines describing a fit (model serialization is separate)."""
    r, s = fit.order
    lines = [
        f"kind={type(fit.model).__name__}",
        f"r={r}", f"s={s}",
        f"loglik={float(fit.loglik)!r}",
        f"n_effective={fit.n_effective}",
        f"bic={float(fit.bic)!r}",
        f"converged={str(fit.converged).lower()}",
        f"grad_norm={float(fit.grad_norm)!r}",
        f"n_starts_used={fit.n_starts_used}",
        f"window_start={format_date(fit.window_start)}",
        f"series_end={format_date(fit.series_end)}",
    ]
    se = fit.std_errors if fit.std_errors is not None else np.full(len(fit.params), np.nan)
    for name, val, e in zip(fit.param_names, fit.params, se):
        lines.append(f"param.{name}={float(val)!r}")
        lines.append(f"se.{name}={float(e)!r}")
    for alt in fit.alternatives:
        ar, as_ = alt.order
        tag = type(alt.model).__name__
        if isinstance(alt.model, SmarModel):
            tag += f"({alt.model.R},{alt.model.S})"
        if isinstance(alt.model, MarxModel):
            tag += "(" + ",".join(f"{o:+d}" for o in alt.model.offsets) + ")"
        lines.append(f"alternative.{tag}.{ar}_{as_}.loglik={float(alt.loglik)!r}")
    return "\n".join(lines) + "\n"


def residual_series(series, fit, X=None):
    """Residuals of a fitted model on its likelihood window."""
    from .mar_process import residuals
    return residuals(series, fit.model, X)
