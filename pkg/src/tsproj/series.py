"""Time-series containers, lag algebra, ARMA/SARMA simulation and
stationarity checks.

All operations are pure functions of their inputs; randomness is owned
per-call through an explicit seed, so everything here is reproducible and
thread-safe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels

STATIONARITY_TOL = 1e-8


class StationarityError(ValueError):
    """Raised when AR/MA coefficients have a root on or inside the unit circle."""


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real-valued observations with an optional seasonal period."""

    values: np.ndarray
    period: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self):
        values = _as_float_vector(self.values, "values")
        if values.size == 0:
            raise ValueError("a time series needs at least one observation")
        object.__setattr__(self, "values", values)
        if self.period is not None:
            s = int(self.period)
            if not 2 <= s < values.size:
                raise ValueError(
                    f"period must satisfy 2 <= s < {values.size}, got {s}")
            object.__setattr__(self, "period", s)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ArmaOrder:
    """Non-seasonal (p, q) order pair."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError("orders must be non-negative")


@dataclass(frozen=True)
class SarmaOrder:
    """Multiplicative seasonal order (p, q) x (P, Q)_s."""

    nonseasonal: ArmaOrder
    seasonal: ArmaOrder
    s: int

    def __post_init__(self):
        if self.s < 2:
            raise ValueError("seasonal period s must be at least 2")


@dataclass(frozen=True)
class ArmaParams:
    """Intercept, AR and MA coefficients and the innovation scale."""

    c: float = 0.0
    phi: np.ndarray = field(default_factory=lambda: np.empty(0))
    theta: np.ndarray = field(default_factory=lambda: np.empty(0))
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_float_vector(self.phi, "phi"))
        object.__setattr__(self, "theta", _as_float_vector(self.theta, "theta"))
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be a positive finite number")

    @property
    def p(self) -> int:
        return self.phi.size

    @property
    def q(self) -> int:
        return self.theta.size

    def require_stationary(self) -> None:
        """Reject parameters whose AR or MA polynomial has a root inside or
        on the unit circle."""
        if not check_stationarity(self.phi):
            raise StationarityError(f"AR coefficients {self.phi} are non-stationary")
        if not check_stationarity(-self.theta):
            raise StationarityError(f"MA coefficients {self.theta} are non-invertible")


def check_stationarity(coefficients, tol: float = STATIONARITY_TOL) -> bool:
    """True iff all roots of 1 - c_1 z - ... - c_k z^k lie outside the unit
    circle by more than ``tol``.

    Roots are found as eigenvalues of the companion matrix of the reversed
    polynomial, which is robust for the small degrees used here. To test MA
    invertibility of ``theta``, pass ``-theta`` (the MA polynomial carries
    plus signs).
    """
    coefficients = _as_float_vector(coefficients, "coefficients")
    coefficients = np.trim_zeros(coefficients, "b")
    if coefficients.size == 0:
        return True
    # 1 - c_1 z - ... - c_k z^k has the same roots as the monic polynomial
    # z^k - (c_{k-1}/-c_k) ... ; use numpy's companion-based solver.
    poly = np.concatenate(([1.0], -coefficients))
    roots = np.roots(poly[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + tol))


def polynomial_product(a, b, stride_b: int = 1) -> np.ndarray:
    """Convolve coefficient sequence ``a`` with ``b`` upsampled by ``stride_b``.

    Treats both sequences as polynomials in the lag operator (constant term
    first); ``stride_b`` realizes seasonal polynomials in L^s. The result has
    length deg(a) + stride_b * deg(b) + 1.
    """
    a = _as_float_vector(a, "a")
    b = _as_float_vector(b, "b")
    if stride_b < 1:
        raise ValueError("stride_b must be a positive integer")
    if a.size == 0 or b.size == 0:
        raise ValueError("polynomials must have at least a constant term")
    upsampled = np.zeros((b.size - 1) * stride_b + 1)
    upsampled[::stride_b] = b
    return np.convolve(a, upsampled)


def default_burn_in(p: int, q: int) -> int:
    """Burn-in long enough for the retained segment to be near-stationary."""
    return 10 * (p + q + 1) + 50


def simulate_arma(params: ArmaParams, length: int, burn_in: Optional[int] = None,
                  seed: int = 0) -> TimeSeries:
    """Simulate an ARMA(p, q) series with zero initial conditions.

    Draws ``burn_in + length`` innovations from Normal(0, sigma^2), runs the
    recursion y_t = c + sum(phi_i y_{t-i}) + e_t + sum(theta_j e_{t-j}) and
    discards the first ``burn_in`` values. Deterministic for a fixed seed.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    params.require_stationary()
    if burn_in is None:
        burn_in = default_burn_in(params.p, params.q)
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rng = np.random.default_rng(seed)
    innovations = rng.normal(0.0, params.sigma, size=burn_in + length)
    y = kernels.simulate_core(params.c, params.phi, params.theta, innovations)
    return TimeSeries(y[burn_in:])


def expand_sarma(params: ArmaParams, seasonal_params: ArmaParams,
                 s: int) -> ArmaParams:
    """Expand the multiplicative SARMA polynomials into one ArmaParams.

    Phi(L^s) phi(L) y = Theta(L^s) theta(L) e becomes an ARMA of orders
    (p + s P, q + s Q). The intercept and sigma are taken from the
    non-seasonal parameter set.
    """
    if s < 2:
        raise ValueError("seasonal period s must be at least 2")
    ar_poly = polynomial_product(
        np.concatenate(([1.0], -params.phi)),
        np.concatenate(([1.0], -seasonal_params.phi)),
        stride_b=s,
    )
    ma_poly = polynomial_product(
        np.concatenate(([1.0], params.theta)),
        np.concatenate(([1.0], seasonal_params.theta)),
        stride_b=s,
    )
    return ArmaParams(c=params.c, phi=-ar_poly[1:], theta=ma_poly[1:],
                      sigma=params.sigma)


def simulate_sarma(params: ArmaParams, seasonal_params: ArmaParams, s: int,
                   length: int, burn_in: Optional[int] = None,
                   seed: int = 0) -> TimeSeries:
    """Simulate a multiplicative SARMA(p, q) x (P, Q)_s series.

    Both parameter sets must be stationary/invertible; generation delegates
    to :func:`simulate_arma` on the expanded polynomial product.
    """
    params.require_stationary()
    seasonal_params.require_stationary()
    expanded = expand_sarma(params, seasonal_params, s)
    if burn_in is None:
        burn_in = default_burn_in(params.p + s * seasonal_params.p,
                                  params.q + s * seasonal_params.q)
    out = simulate_arma(expanded, length, burn_in=burn_in, seed=seed)
    return TimeSeries(out.values, period=s if s < length else None)


def difference(series: TimeSeries, d: int = 0, D: int = 0,
               s: Optional[int] = None) -> TimeSeries:
    """Apply (1 - L)^d (1 - L^s)^D to the series."""
    if d < 0 or D < 0:
        raise ValueError("differencing orders must be non-negative")
    if D > 0:
        if s is None:
            s = series.period
        if s is None or s < 2:
            raise ValueError("seasonal differencing requires a period s >= 2")
    needed = d + D * (s or 0)
    if len(series) <= needed:
        raise ValueError(
            f"series of length {len(series)} too short for d={d}, D={D}, s={s}")
    values = series.values
    for _ in range(d):
        values = values[1:] - values[:-1]
    for _ in range(D):
        values = values[s:] - values[:-s]
    period = series.period if D == 0 else None
    if period is not None and period >= values.size:
        period = None
    return TimeSeries(values, period=period, name=series.name)


def sample_acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag (biased 1/T denominator)."""
    values = series.values if isinstance(series, TimeSeries) else \
        _as_float_vector(series, "series")
    n = values.size
    if not 0 <= max_lag < n:
        raise ValueError("max_lag must satisfy 0 <= max_lag < len(series)")
    centered = values - values.mean()
    denom = centered @ centered
    if denom == 0.0:
        # constant series: autocovariance is identically zero beyond lag 0
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = (centered[k:] @ centered[:-k]) / denom
    return acf


def sample_pacf(series, max_lag: int) -> np.ndarray:
    """Sample partial autocorrelations via the Durbin-Levinson recursion.

    Entry 0 is 1.0 by convention; entry k is the lag-k partial correlation.
    """
    acf = sample_acf(series, max_lag)
    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    if max_lag == 0:
        return pacf
    prev = np.array([acf[1]])
    pacf[1] = acf[1]
    prev_err = 1.0 - acf[1] ** 2
    for k in range(2, max_lag + 1):
        num = acf[k] - prev @ acf[k - 1:0:-1]
        rho = num / prev_err if prev_err > 0 else 0.0
        cur = np.empty(k)
        cur[:-1] = prev - rho * prev[::-1]
        cur[-1] = rho
        pacf[k] = rho
        prev_err *= (1.0 - rho ** 2)
        prev = cur
    return pacf


def lag_design(series, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and response for regressing y_t on its first p lags.

    Row t holds [1, y_{t-1}, ..., y_{t-p}]; the response is y_{p+1..T}.
    """
    values = series.values if isinstance(series, TimeSeries) else \
        _as_float_vector(series, "series")
    return strided_lag_design(values, p, stride=1)


def strided_lag_design(values: np.ndarray, order: int,
                       stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Lag design with regressors at lags stride, 2*stride, ..., order*stride."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    span = order * stride
    if order < 0 or stride < 1:
        raise ValueError("order must be >= 0 and stride >= 1")
    if span >= n:
        raise ValueError(
            f"lag span {span} leaves no design rows for a series of length {n}")
    rows = n - span
    design = np.ones((rows, order + 1))
    for k in range(1, order + 1):
        design[:, k] = values[span - k * stride:n - k * stride]
    return design, values[span:].copy()


def load_csv(path) -> TimeSeries:
    """Read a series from a one-column (value) or two-column (index, value)
    CSV file; a single header row is detected and skipped."""
    rows = []
    with open(path, newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            cells = [cell.strip() for cell in row if cell.strip() != ""]
            if len(row) != len(cells):
                raise ValueError(f"{path}:{lineno}: empty field")
            if not cells:
                continue
            if len(cells) > 2:
                raise ValueError(f"{path}:{lineno}: expected 1 or 2 columns")
            rows.append((lineno, cells))
    if rows and not _is_number(rows[0][1][-1]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    values = []
    for lineno, cells in rows:
        cell = cells[-1]
        if not _is_number(cell):
            raise ValueError(f"{path}:{lineno}: cannot parse value {cell!r}")
        values.append(float(cell))
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"{path}: non-finite value in series")
    return TimeSeries(np.asarray(values))


def save_csv(series: TimeSeries, path) -> None:
    """Write the series as a two-column CSV with a header row."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", series.name or "value"])
        for t, v in enumerate(series.values, start=1):
            writer.writerow([t, repr(float(v))])


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def as_values(series) -> np.ndarray:
    """Accept a TimeSeries or array-like and return the float vector."""
    if isinstance(series, TimeSeries):
        return series.values
    return _as_float_vector(series, "series")
