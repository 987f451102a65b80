"""Mixed causal-noncausal autoregressions: model objects, filtering, simulation.

A MAR(r, s) process satisfies

    Phi(L) Psi(F) y_t = eps_t,      F = L^{-1},

with ``Phi(z) = 1 - phi_1 z - ... - phi_r z^r`` acting on lags and
``Psi(z) = 1 - psi_1 z - ... - psi_s z^s`` acting on leads.  The MARX variant
subtracts ``beta' X`` (each regressor at its own offset) and the SMAR variant
multiplies in ``(1 - phi* L^R)(1 - psi* F^S)``.

Every model reduces to a Laurent polynomial in L, ``sum_k c_k L^k`` with
``k = -a..b``, so ``eps_t = sum_k c_k y_{t-k}``; that is how residuals are
computed for all three model types.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from . import rng
from .errors import (AlignmentError, InputError, InsufficientDataError,
                     NonStationaryError, ParseError, UnsupportedOrderError)
from .timeseries import TimeSeries, month_ordinal

#: a root counts as outside the unit circle iff its modulus exceeds this
ROOT_BOUNDARY = 1.0 + 1e-8


# -- polynomials -------------------------------------------------------------

@dataclass(frozen=True)
class LagPolynomial:
    """``1 - c_1 z - ... - c_k z^k``; ``direction`` says whether z is L or F."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    direction: str = "lag"

    def __post_init__(self):
        c = np.atleast_1d(np.array(self.coeffs, dtype=float))
        if c.ndim != 1:
            raise InputError("polynomial coefficients must be a vector")
        if self.direction not in ("lag", "lead"):
            raise InputError("direction must be 'lag' or 'lead'")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self):
        return self.coeffs.size

    def poly(self):
        """Coefficients of the polynomial in ascending powers, leading 1 included."""
        return np.concatenate([[1.0], -self.coeffs])


def root_moduli(coeffs):
    """Moduli of the roots of ``1 - c_1 z - ... - c_k z^k``.

    Computed as reciprocals of companion-matrix eigenvalue moduli; a zero
    eigenvalue means a root at infinity.
    """
    c = np.asarray(coeffs, dtype=float)
    k = c.size
    if k == 0:
        return np.zeros(0)
    comp = np.zeros((k, k))
    comp[0] = c
    comp[1:, :-1] = np.eye(k - 1)
    lam = np.abs(np.linalg.eigvals(comp))
    with np.errstate(divide="ignore"):
        return np.where(lam > 0, 1.0 / lam, np.inf)


def check_stationarity(poly):
    """(ok, root moduli) for a LagPolynomial or a plain coefficient vector."""
    coeffs = poly.coeffs if isinstance(poly, LagPolynomial) else poly
    moduli = root_moduli(coeffs)
    return bool(np.all(moduli > ROOT_BOUNDARY)), moduli


# -- noise -------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Student-t errors: ``eps = scale * t(dof)``."""

    dof: float
    scale: float

    def __post_init__(self):
        if not self.dof > 2:
            raise InputError(f"degrees of freedom must exceed 2, got {self.dof}")
        if not self.scale > 0:
            raise InputError(f"scale must be positive, got {self.scale}")

    def logpdf(self, x):
        return t_logpdf(x, self.dof, self.scale)

    def pdf(self, x):
        return np.exp(t_logpdf(x, self.dof, self.scale))


def t_logpdf(x, dof, scale):
    """Log density of ``scale * t(dof)``."""
    x = np.asarray(x, dtype=float)
    # betaln keeps the gamma-ratio accurate for very large dof
    const = -special.betaln(0.5 * dof, 0.5) - 0.5 * np.log(dof) - np.log(scale)
    z = x / scale
    return const - 0.5 * (dof + 1) * np.log1p(z * z / dof)


# -- models ------------------------------------------------------------------

@dataclass(frozen=True)
class MarModel:
    lag_poly: LagPolynomial
    lead_poly: LagPolynomial
    noise: NoiseSpec

    def __post_init__(self):
        for name, poly in (("lag", self.lag_poly), ("lead", self.lead_poly)):
            ok, mod = check_stationarity(poly)
            if not ok:
                raise NonStationaryError(
                    f"{name} polynomial has a root of modulus {mod.min():.6g} <= 1")

    @classmethod
    def from_coeffs(cls, lag=(), lead=(), dof=5.0, scale=1.0):
        return cls(LagPolynomial(lag, "lag"), LagPolynomial(lead, "lead"),
                   NoiseSpec(float(dof), float(scale)))

    @property
    def r(self):
        return self.lag_poly.order

    @property
    def s(self):
        return self.lead_poly.order

    @property
    def phi(self):
        return self.lag_poly.coeffs

    @property
    def psi(self):
        return self.lead_poly.coeffs

    @property
    def base(self):
        return self


@dataclass(frozen=True)
class MarxModel:
    base: MarModel
    beta: np.ndarray
    offsets: tuple

    def __post_init__(self):
        b = np.atleast_1d(np.array(self.beta, dtype=float))
        offs = tuple(int(o) for o in self.offsets)
        if b.size != len(offs) or b.size < 1:
            raise InputError("beta and offsets must be non-empty and of equal length")
        if any(o not in (-1, 0, 1) for o in offs):
            raise InputError("offsets must be -1, 0 or +1")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "offsets", offs)

    @property
    def q(self):
        return self.beta.size


@dataclass(frozen=True)
class SmarModel:
    """MAR with order-1 seasonal lag at ``R`` and seasonal lead at ``S``.

    A displacement of 0 marks an absent seasonal factor (its coefficient must
    then be 0).
    """

    base: MarModel
    seasonal_lag: float = 0.0
    seasonal_lead: float = 0.0
    R: int = 0
    S: int = 0

    def __post_init__(self):
        for coef, disp, label in ((self.seasonal_lag, self.R, "lag"),
                                  (self.seasonal_lead, self.S, "lead")):
            if int(disp) < 0:
                raise InputError("seasonal displacements must be >= 0")
            if not abs(coef) < 1.0 / ROOT_BOUNDARY:
                raise NonStationaryError(f"seasonal {label} coefficient {coef} not inside (-1, 1)")
            if int(disp) == 0 and coef != 0:
                raise InputError(f"seasonal {label} coefficient given without displacement")
        object.__setattr__(self, "R", int(self.R))
        object.__setattr__(self, "S", int(self.S))
        object.__setattr__(self, "seasonal_lag", float(self.seasonal_lag))
        object.__setattr__(self, "seasonal_lead", float(self.seasonal_lead))


def _base(model):
    return model if isinstance(model, MarModel) else model.base


def causal_poly(model):
    """Full lag-side polynomial (ascending powers of L), seasonal factor included."""
    base = _base(model)
    p = base.lag_poly.poly()
    if isinstance(model, SmarModel) and model.R > 0:
        seas = np.zeros(model.R + 1)
        seas[0], seas[-1] = 1.0, -model.seasonal_lag
        p = np.convolve(p, seas)
    return p


def noncausal_poly(model):
    """Full lead-side polynomial (ascending powers of F)."""
    base = _base(model)
    p = base.lead_poly.poly()
    if isinstance(model, SmarModel) and model.S > 0:
        seas = np.zeros(model.S + 1)
        seas[0], seas[-1] = 1.0, -model.seasonal_lead
        p = np.convolve(p, seas)
    return p


def laurent(model):
    """(c, a, b): ``eps_t = sum_{k=-a}^{b} c[k + a] y_{t-k}``."""
    lag = causal_poly(model)
    lead = noncausal_poly(model)
    # powers of F become negative powers of L
    return np.convolve(lag, lead[::-1]), lead.size - 1, lag.size - 1


def apply_laurent(y, c, a):
    """Values ``sum_k c_k y_{t-k}`` for every t where all terms exist.

    Output element i corresponds to t = i + b with b = len(c) - 1 - a.
    """
    y = np.asarray(y, dtype=float)
    if y.size < c.size:
        return np.zeros(0)
    return np.convolve(y, c, mode="valid")


# -- filtering ---------------------------------------------------------------

def filter_components(series, model):
    """Causal/noncausal decomposition.

    ``u_t = Phi(L) y_t`` (defined from the (r+1)-th observation on) and
    ``v_t = Psi(F) y_t`` (defined up to the (T-s)-th observation).
    """
    base = _base(model)
    r, s = base.r, base.s
    y = series.values
    if len(y) <= r + s:
        raise InsufficientDataError(f"need more than r+s={r + s} observations")
    lag = base.lag_poly.poly()
    lead = base.lead_poly.poly()
    u = np.convolve(y, lag, mode="valid")
    v = np.convolve(y, lead[::-1], mode="valid")
    return (TimeSeries(series.start + r, u, "u"),
            TimeSeries(series.start, v, "v"))


def _exog_matrix(X, first, count, offsets):
    """Rows ``X_{t+offset_i}`` for t = first..first+count-1 (ordinals), stacked per regressor."""
    out = np.empty((count, len(offsets)))
    for i, off in enumerate(offsets):
        lo = first + off - X.start
        if lo < 0 or lo + count > len(X):
            raise AlignmentError("exogenous panel does not cover the required dates")
        out[:, i] = X.values[lo:lo + count, i]
    return out


def residual_window(model, series_start, series_len, X=None):
    """First ordinal and count of the computable residuals."""
    _, a, b = laurent(model)
    first = series_start + b
    last = series_start + series_len - 1 - a
    if isinstance(model, MarxModel):
        if X is None:
            raise InputError("MARX residuals need the exogenous panel")
        first = max(first, max(X.start - o for o in model.offsets))
        last = min(last, min(X.end - o for o in model.offsets))
    return first, last - first + 1


def residuals(series, model, X=None):
    """Innovations implied by ``model`` on ``series`` (as a TimeSeries)."""
    c, a, b = laurent(model)
    first, n = residual_window(model, series.start, len(series), X)
    if n < 1:
        raise InsufficientDataError("series too short for the model's displacements")
    eps = apply_laurent(series.values, c, a)
    i0 = first - (series.start + b)
    eps = eps[i0:i0 + n]
    if isinstance(model, MarxModel):
        eps = eps - _exog_matrix(X, first, n, model.offsets) @ model.beta
    return TimeSeries(first, eps, "residual")


# -- moving-average form -----------------------------------------------------

@dataclass(frozen=True)
class TwoSidedMaWeights:
    """``y_t = sum_{j=-B}^{B} w_j eps_{t-j}``; ``weights[j + B]`` is w_j."""

    weights: np.ndarray
    B: int

    def weight(self, j):
        return float(self.weights[j + self.B]) if abs(j) <= self.B else 0.0


def _inverse_series(coeffs, length):
    """Power series of 1 / (1 - c_1 z - ... - c_k z^k) up to z^(length-1)."""
    imp = np.zeros(length)
    imp[0] = 1.0
    return signal.lfilter([1.0], np.concatenate([[1.0], -np.asarray(coeffs)]), imp)


def invert_to_ma(model, tolerance=1e-10):
    base = _base(model)
    for poly in (base.lag_poly, base.lead_poly):
        if not check_stationarity(poly)[0]:
            raise NonStationaryError("MA inversion needs both polynomials stationary")
    rho = 0.0
    for poly in (base.lag_poly, base.lead_poly):
        if poly.order:
            rho = max(rho, 1.0 / root_moduli(poly.coeffs).min())
    if rho == 0.0:
        length = max(base.r, base.s) + 2
    else:
        length = int(np.ceil(np.log(tolerance * 1e-3) / np.log(rho))) + 20 * (base.r + base.s) + 10
        length = min(max(length, 10), 200_000)
    a = _inverse_series(base.phi, length)
    bb = _inverse_series(base.psi, length)
    w = np.convolve(a, bb[::-1])   # index k + length - 1 holds w_k
    ks = np.arange(w.size) - (length - 1)
    big = np.abs(w) >= tolerance
    B = int(np.abs(ks[big]).max()) if big.any() else 0
    return TwoSidedMaWeights(w[length - 1 - B:length + B].copy(), B)


# -- simulation --------------------------------------------------------------

def default_burn(model):
    lag, lead = causal_poly(model), noncausal_poly(model)
    return max(200, 50 * (lag.size + lead.size - 1))


def simulate(model, n, seed, X=None, burn=None, start=None, label="simulate"):
    """Simulate ``n`` observations by the (u, y) double recursion.

    Draws ``n + 2 * burn`` innovations, solves ``Psi(F) u = z`` backwards from
    a zero terminal value (``z = eps + beta' X`` for MARX), then
    ``Phi(L) y = u`` forwards from zero, and keeps the central ``n`` points.
    For MARX, row i of ``X`` is aligned with simulated time i (burn-in
    included).  Returns ``(series, innovations)``.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    base = _base(model)
    if burn is None:
        burn = default_burn(model)
    total = n + 2 * burn
    eps = base.noise.scale * rng.student_t(seed, label, 0, total, base.noise.dof)
    z = eps.copy()
    if isinstance(model, MarxModel):
        if X is None or len(X) < total:
            raise InputError(f"MARX simulation needs {total} rows of exogenous data")
        Xv = X.values[:total]
        for i, off in enumerate(model.offsets):
            shifted = np.zeros(total)
            lo, hi = max(0, -off), min(total, total - off)
            shifted[lo:hi] = Xv[lo + off:hi + off, i]
            z += model.beta[i] * shifted
    lead = noncausal_poly(model)
    lag = causal_poly(model)
    u = signal.lfilter([1.0], lead, z[::-1])[::-1]
    y = signal.lfilter([1.0], lag, u)
    if start is None:
        start = month_ordinal(2000, 1)
    keep = slice(burn, burn + n)
    return (TimeSeries(start, y[keep], "y"), TimeSeries(start, eps[keep], "innovation"))


# -- additive form -----------------------------------------------------------

@dataclass(frozen=True)
class AdditiveExpansion:
    """``y_t = sum_d weights[d] * y_{t+d} + error_factor * eps_t``."""

    weights: dict
    error_factor: float

    def weight(self, d):
        return self.weights.get(d, 0.0)


def expand_additive(model):
    """Additive (one-equation) form of a MAR(r<=1, s<=1), optionally with a seasonal lead."""
    if isinstance(model, MarxModel):
        raise UnsupportedOrderError("additive expansion is not defined for MARX models")
    base = _base(model)
    if base.r > 1 or base.s > 1:
        raise UnsupportedOrderError("additive expansion supports r <= 1 and s <= 1 only")
    if isinstance(model, SmarModel) and model.seasonal_lag != 0:
        raise UnsupportedOrderError("additive expansion does not cover a seasonal lag factor")
    c, a, _ = laurent(model)
    c0 = c[a]
    weights = {}
    for idx, ck in enumerate(c):
        k = idx - a
        if k != 0 and ck != 0:
            # eps_t = c0 y_t + sum c_k y_{t-k}  =>  y_t = -sum (c_k/c0) y_{t-k} + eps/c0
            weights[-k] = float(-ck / c0) + 0.0
    if base.r == 0:
        weights.setdefault(-1, 0.0)
    if base.s == 0:
        weights.setdefault(1, 0.0)
    return AdditiveExpansion(dict(sorted(weights.items())), float(1.0 / c0))


# -- serialization -----------------------------------------------------------

MODEL_KEYS = ("r", "s", "lag_coeffs", "lead_coeffs", "dof", "scale", "beta",
              "offsets", "seasonal_lag", "seasonal_lead", "R", "S")


def _num(x):
    return format(float(x), ".17g")


def model_to_dict(model):
    base = _base(model)
    d = {
        "r": str(base.r), "s": str(base.s),
        "lag_coeffs": ",".join(_num(x) for x in base.phi),
        "lead_coeffs": ",".join(_num(x) for x in base.psi),
        "dof": _num(base.noise.dof), "scale": _num(base.noise.scale),
        "beta": "", "offsets": "",
        "seasonal_lag": "0", "seasonal_lead": "0", "R": "0", "S": "0",
    }
    if isinstance(model, MarxModel):
        d["beta"] = ",".join(_num(x) for x in model.beta)
        d["offsets"] = ",".join(str(o) for o in model.offsets)
    if isinstance(model, SmarModel):
        d.update(seasonal_lag=_num(model.seasonal_lag), seasonal_lead=_num(model.seasonal_lead),
                 R=str(model.R), S=str(model.S))
    return d


def dumps_model(model):
    d = model_to_dict(model)
    return "".join(f"{k}={d[k]}\n" for k in MODEL_KEYS)


def read_keyvalue(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _vec(text):
    return np.array([float(x) for x in text.split(",") if x.strip()], dtype=float)


def model_from_dict(d):
    missing = [k for k in MODEL_KEYS if k not in d]
    if missing:
        raise ParseError(f"model file lacks {', '.join(missing)}")
    try:
        lag, lead = _vec(d["lag_coeffs"]), _vec(d["lead_coeffs"])
        if lag.size != int(d["r"]) or lead.size != int(d["s"]):
            raise ParseError("r/s do not match the coefficient counts")
        base = MarModel.from_coeffs(lag, lead, float(d["dof"]), float(d["scale"]))
        beta = _vec(d["beta"])
        offsets = tuple(int(x) for x in d["offsets"].split(",") if x.strip())
        seas = (float(d["seasonal_lag"]), float(d["seasonal_lead"]), int(d["R"]), int(d["S"]))
    except ValueError as exc:
        raise ParseError(f"bad model file value: {exc}") from exc
    has_seasonal = any(seas)
    if beta.size and has_seasonal:
        raise ParseError("a model cannot be both MARX and SMAR")
    if beta.size:
        return MarxModel(base, beta, offsets)
    if has_seasonal:
        return SmarModel(base, *seas)
    return base


def loads_model(text):
    return model_from_dict(read_keyvalue(text))


def save_model(model, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads_model(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
