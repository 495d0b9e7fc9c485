"""Global LAD estimation of DAR(1) parameters, its randomly weighted variant,
the Gaussian QMLE comparator and the AAE accuracy metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from darglade import _kernels
from darglade.errors import DegenerateSeries, LengthMismatch, NonConvergence
from darglade.model import DarParams, SignedLogSeries

_MAX_LOG_SCALE2 = 700.0


@dataclass(frozen=True)
class ThetaBox:
    """Compact parameter box for ``(phi, alpha, omega)``."""

    phi_lo: float = -5.0
    phi_hi: float = 5.0
    alpha_lo: float = 1e-6
    alpha_hi: float = 50.0
    omega_lo: float = 1e-6
    omega_hi: float = 50.0

    def __post_init__(self):
        if not (self.phi_lo < self.phi_hi and self.alpha_lo < self.alpha_hi
                and self.omega_lo < self.omega_hi):
            raise ValueError("box bounds must satisfy lo < hi componentwise")
        if not (self.alpha_lo > 0 and self.omega_lo > 0):
            raise ValueError("alpha and omega lower bounds must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_lo, self.phi_hi, self.alpha_lo,
                         self.alpha_hi, self.omega_lo, self.omega_hi])

    def contains(self, theta: DarParams) -> bool:
        return (self.phi_lo <= theta.phi <= self.phi_hi
                and self.alpha_lo <= theta.alpha <= self.alpha_hi
                and self.omega_lo <= theta.omega <= self.omega_hi)

    def to_unconstrained(self, theta: DarParams) -> np.ndarray:
        """Inverse of the optimizer's box transform (clipped slightly inside)."""
        def logit(v, lo, hi):
            p = (v - lo) / (hi - lo)
            p = min(max(p, 1e-300), 1.0 - 1e-12)
            return math.log(p) - math.log1p(-p)

        return np.array([
            min(max(theta.phi, self.phi_lo), self.phi_hi),
            logit(theta.alpha, self.alpha_lo, self.alpha_hi),
            logit(theta.omega, self.omega_lo, self.omega_hi),
        ])

    def from_unconstrained(self, x: np.ndarray) -> DarParams:
        phi, alpha, omega, _ = _kernels.to_params(np.asarray(x, dtype=float), self.as_array())
        return DarParams(phi, alpha, omega)


def sample_scale2(series: SignedLogSeries) -> float:
    """Median of ``y_t^2`` over nonzero observations, computed in log space."""
    nz = series.logmag[series.sign != 0]
    if nz.size == 0:
        raise DegenerateSeries("all observations are zero")
    return math.exp(min(2.0 * float(np.median(nz)), _MAX_LOG_SCALE2))


def default_box(series: SignedLogSeries) -> ThetaBox:
    """Default box; both omega bounds scale with ``y^2`` so fits are scale-equivariant.

    The upper bound uses the median of ``y_t^2``; the lower bound uses the
    smallest nonzero ``y_t^2``, which stays moderate on explosive paths where
    the median is astronomically large.
    """
    nz = series.logmag[series.sign != 0]
    if nz.size == 0:
        raise DegenerateSeries("all observations are zero")
    hi = 50.0 * sample_scale2(series)
    lo = 1e-6 * math.exp(max(min(2.0 * float(nz.min()), _MAX_LOG_SCALE2), -_MAX_LOG_SCALE2))
    return ThetaBox(omega_lo=min(lo, 1e-6 * hi), omega_hi=hi)


@dataclass(frozen=True)
class OptimizerSettings:
    xtol: float = 1e-8
    ftol: float = 1e-10
    max_evals: int = 20_000
    n_starts: int = 5
    # initial simplex edge lengths in transformed coordinates
    step: tuple = (0.25, 1.0, 1.0)
    warm_step: tuple = (0.05, 0.2, 0.2)
    # finish LAD fits with an exact phi / Newton (alpha, omega) block descent
    polish: bool = True


@dataclass(frozen=True)
class FitResult:
    theta_hat: DarParams
    objective_value: float
    converged: bool
    n_evals: int
    at_boundary: bool
    start_index: int = 0
    criterion: str = field(default="lad")


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Nonnegative random weights attached to the time indices ``1..n``."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a 1-d array of finite nonnegative values")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return len(self.w)

    @classmethod
    def exponential(cls, gen: np.random.Generator, n: int) -> "WeightVector":
        return cls(gen.standard_exponential(n))

    @classmethod
    def ones(cls, n: int) -> "WeightVector":
        return cls(np.ones(n))


def _design(series: SignedLogSeries):
    return tuple(np.ascontiguousarray(x) for x in series.lagged_design())


def objective(series: SignedLogSeries, theta: DarParams) -> float:
    """Per-observation LAD criterion ``L_n(theta) / n``."""
    return weighted_objective(series, theta, WeightVector.ones(series.n))


def weighted_objective(series: SignedLogSeries, theta: DarParams, w: WeightVector) -> float:
    if isinstance(w, WeightVector):
        w = w.w
    if len(w) != series.n:
        raise LengthMismatch(f"{len(w)} weights for {series.n} terms")
    a, b, u, m2 = _design(series)
    return _kernels.criterion(theta.phi, theta.alpha, theta.omega, a, b, u, m2,
                              np.ascontiguousarray(w, dtype=float), _kernels.LAD)


def gaussian_objective(series: SignedLogSeries, theta: DarParams) -> float:
    a, b, u, m2 = _design(series)
    return _kernels.criterion(theta.phi, theta.alpha, theta.omega, a, b, u, m2,
                              np.ones(series.n), _kernels.GAUSS)


def _check_series(series: SignedLogSeries):
    if series.n < 9:
        raise DegenerateSeries("need at least 10 observations")
    nz = series.sign != 0
    if not nz.any():
        raise DegenerateSeries("all observations are zero")
    distinct = {(int(s), float(l)) for s, l in zip(series.sign, series.logmag)}
    if len(distinct) < 3:
        raise DegenerateSeries("fewer than three distinct values")


def _moment_guess(series: SignedLogSeries) -> tuple[float, float, float]:
    """Rough ``(phi, alpha, omega)`` from robust lag statistics.

    ``phi`` is the median lag-one ratio ``y_t / y_{t-1}``; ``omega`` the
    median squared innovation among the quarter of steps with the smallest
    ``|y_{t-1}|``; ``alpha`` the median squared relative innovation among the
    quarter with the largest ``|y_{t-1}|``. All three are invariant to sign
    flips and equivariant under rescaling.
    """
    a, b, _, m2 = series.lagged_design()
    keep = a != 0
    rho = float(np.median(b[keep] / a[keep])) if keep.any() else 0.0
    rho = min(max(rho, -2.0), 2.0)
    r = b - rho * a
    lag_mag = series.logmag[:-1]
    order = np.argsort(lag_mag, kind="mergesort")
    q = max(len(order) // 4, 1)
    low, high = order[:q], order[-q:]
    with np.errstate(divide="ignore"):
        log_r2 = np.log(r * r) + m2
    log_r2 = log_r2[low][np.isfinite(log_r2[low])]
    omega = math.exp(min(float(np.median(log_r2)), _MAX_LOG_SCALE2)) if log_r2.size else 1.0
    high = high[keep[high]]
    alpha = float(np.median((r[high] / a[high]) ** 2)) if high.size else 1.0
    return rho, alpha, omega


def default_starts(series: SignedLogSeries, box: ThetaBox) -> list[DarParams]:
    """Box centre plus four perturbations of a robust moment guess."""
    rho, al, om = _moment_guess(series)
    centre = box.from_unconstrained(np.array([0.5 * (box.phi_lo + box.phi_hi), 0.0, 0.0]))
    raw = [
        (centre.phi, centre.alpha, centre.omega),
        (rho, al, om),
        (rho, 4.0 * al, 0.25 * om),
        (0.5 * rho, 0.25 * al, 4.0 * om),
        (0.0, al, om),
    ]

    def clip(v, lo, hi):
        return min(max(v, lo), hi)

    return [
        DarParams(clip(p, box.phi_lo, box.phi_hi),
                  clip(a_, box.alpha_lo * 2, box.alpha_hi / 2),
                  clip(o_, box.omega_lo * 2, box.omega_hi / 2))
        for p, a_, o_ in raw
    ]


def _at_boundary(theta: DarParams, box: ThetaBox, rel: float = 1e-6) -> bool:
    span = box.phi_hi - box.phi_lo
    return (theta.phi <= box.phi_lo + rel * span or theta.phi >= box.phi_hi - rel * span
            or theta.alpha <= box.alpha_lo * (1 + 1e-3) or theta.alpha >= box.alpha_hi * (1 - rel)
            or theta.omega <= box.omega_lo * (1 + 1e-3) or theta.omega >= box.omega_hi * (1 - rel))


def _fit(series, box, w, opts, starts, kind, step):
    if box is None:
        box = default_box(series)
    if opts is None:
        opts = OptimizerSettings()
    _check_series(series)
    if starts is None:
        starts = default_starts(series, box)[: opts.n_starts]
    a, b, u, m2 = _design(series)
    w = np.ascontiguousarray(w, dtype=float)
    box_arr = box.as_array()
    step = np.asarray(step, dtype=float)

    best = None
    total_evals = 0
    for k, start in enumerate(starts):
        x0 = box.to_unconstrained(start)
        x, f, evals, ok = _kernels.nelder_mead(
            x0, step, box_arr, a, b, u, m2, w, kind, opts.xtol, opts.ftol, opts.max_evals
        )
        total_evals += evals
        if not ok:
            continue
        theta = box.from_unconstrained(x)
        if kind == _kernels.LAD and opts.polish:
            phi, alpha, omega, f_pol = _kernels.polish_lad(
                theta.phi, theta.alpha, theta.omega, a, b, u, m2, w, box_arr, 100)
            # the polish only takes non-increasing moves on the theta-dependent
            # part, so its end point is kept even if rounding makes f read higher
            theta, f = DarParams(phi, alpha, omega), f_pol
        if best is None or f < best[1]:
            best = (theta, f, k)
    if best is None:
        raise NonConvergence(f"no start converged within {opts.max_evals} evaluations")
    theta, f, k = best
    return FitResult(
        theta_hat=theta,
        objective_value=float(f),
        converged=True,
        n_evals=total_evals,
        at_boundary=_at_boundary(theta, box),
        start_index=k,
        criterion="lad" if kind == _kernels.LAD else "gauss",
    )


def glade(series: SignedLogSeries, box: ThetaBox | None = None,
          opts: OptimizerSettings | None = None,
          starts: Sequence[DarParams] | None = None) -> FitResult:
    """Global LAD estimate: multi-start Nelder-Mead minimum of the LAD criterion.

    Starts are tried in order and the lowest objective wins; exact ties keep
    the earlier start.
    """
    opts = opts or OptimizerSettings()
    return _fit(series, box, np.ones(series.n), opts, starts, _kernels.LAD, opts.step)


def weighted_glade(series: SignedLogSeries, box: ThetaBox | None, w: WeightVector,
                   opts: OptimizerSettings | None = None,
                   starts: Sequence[DarParams] | None = None,
                   warm: bool = False) -> FitResult:
    """Minimiser of the randomly weighted LAD criterion.

    Uses the same algorithm and settings as :func:`glade`. ``warm=True``
    switches to the tighter initial simplex meant for a start at an existing
    estimate.
    """
    opts = opts or OptimizerSettings()
    w = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if len(w) != series.n:
        raise LengthMismatch(f"{len(w)} weights for {series.n} terms")
    step = opts.warm_step if warm else opts.step
    return _fit(series, box, w, opts, starts, _kernels.LAD, step)


def qmle(series: SignedLogSeries, box: ThetaBox | None = None,
         opts: OptimizerSettings | None = None,
         starts: Sequence[DarParams] | None = None) -> FitResult:
    """Gaussian quasi-maximum likelihood estimate over the same box."""
    opts = opts or OptimizerSettings()
    return _fit(series, box, np.ones(series.n), opts, starts, _kernels.GAUSS, opts.step)


def aae(fit: FitResult | DarParams, truth: DarParams) -> float:
    """Average absolute error ``(|phi_hat - phi| + |alpha_hat/alpha - 1|) / 2``."""
    est = fit.theta_hat if isinstance(fit, FitResult) else fit
    return 0.5 * (abs(est.phi - truth.phi) + abs(est.alpha / truth.alpha - 1.0))
