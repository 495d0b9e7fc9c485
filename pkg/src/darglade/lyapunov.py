"""Top Lyapunov exponent: sample estimators, quadrature truth and the
stationarity boundary in the ``(phi, alpha)`` plane."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from darglade.errors import EmptySet, NoRoot, SingularTerm
from darglade.estimation import FitResult, WeightVector
from darglade.model import DarParams, InnovationSpec, SignedLogSeries, residuals
from darglade.numerics import DEFAULT_TOL, integrate_log_kernel


@dataclass(frozen=True)
class TruncationWindow:
    """``I_n = [-n^2, -n^-2] U [n^-2, n^2]``."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("window needs n >= 2")

    @property
    def lo(self) -> float:
        return float(self.n) ** -2

    @property
    def hi(self) -> float:
        return float(self.n) ** 2

    def contains(self, x) -> np.ndarray:
        ax = np.abs(x)
        return (ax >= self.lo) & (ax <= self.hi)


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: float
    n_a1: int
    n_a2: int
    truncated_count: int


def _moduli(phi_hat, alpha_hat, eta):
    if not alpha_hat > 0:
        raise ValueError("alpha_hat must be positive")
    z = np.asarray(eta, dtype=float) * math.sqrt(alpha_hat)
    return phi_hat + z, phi_hat - z


def gamma_natural(phi_hat: float, alpha_hat: float, residuals) -> float:
    """Symmetrised mean of ``log|phi +- eta_t sqrt(alpha)|`` over all ``t``."""
    plus, minus = _moduli(phi_hat, alpha_hat, residuals)
    if np.any(plus == 0.0) or np.any(minus == 0.0):
        raise SingularTerm("a log-modulus term is exactly zero; use gamma_truncated")
    n = len(plus)
    return float((np.log(np.abs(plus)).sum() + np.log(np.abs(minus)).sum()) / (2 * n))


def gamma_truncated(phi_hat: float, alpha_hat: float, residuals,
                    window: TruncationWindow | None = None) -> GammaEstimate:
    """Truncated estimator: terms outside the window are dropped, divisor stays ``2n``."""
    plus, minus = _moduli(phi_hat, alpha_hat, residuals)
    n = len(plus)
    window = window or TruncationWindow(n)
    in1, in2 = window.contains(plus), window.contains(minus)
    total = np.log(np.abs(plus[in1])).sum() + np.log(np.abs(minus[in2])).sum()
    n1, n2 = int(in1.sum()), int(in2.sum())
    return GammaEstimate(float(total / (2 * n)), n1, n2, 2 * n - n1 - n2)


def gamma_resampled(series: SignedLogSeries, fit_star: FitResult, w: WeightVector,
                    window: TruncationWindow | None = None) -> float:
    """Random-weighting replicate of the Lyapunov estimate.

    Residuals come from the weighted fit ``fit_star``; each of the two
    truncated sums is a ``w``-weighted mean over its own index set.
    """
    w = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    theta = fit_star.theta_hat
    eta = residuals(series, theta)
    if len(w) != len(eta):
        raise ValueError("weight vector length does not match series")
    window = window or TruncationWindow(len(eta))
    plus, minus = _moduli(theta.phi, theta.alpha, eta)
    halves = []
    for vals in (plus, minus):
        inside = window.contains(vals)
        wsum = w[inside].sum()
        if not wsum > 0:
            raise EmptySet("truncated index set carries zero weight")
        halves.append(float((w[inside] * np.log(np.abs(vals[inside]))).sum() / wsum))
    return 0.5 * (halves[0] + halves[1])


def true_gamma(params: DarParams, spec: InnovationSpec, tol: float = DEFAULT_TOL) -> float:
    """``E log|phi + eta sqrt(alpha)|`` by quadrature against the innovation density."""
    return integrate_log_kernel(spec.density, params.phi, params.alpha, tol)


def _gamma_at(spec, phi, alpha, tol):
    return integrate_log_kernel(spec.density, phi, alpha, tol)


def boundary_alpha(spec: InnovationSpec, phi: float, tol: float = 1e-8,
                   alpha_lo: float = 1e-6, alpha_hi: float = 1e6,
                   max_iter: int = 200) -> float:
    """The ``alpha`` at which the Lyapunov exponent crosses zero for this ``phi``.

    Bisection on ``log(alpha)`` exploiting monotonicity in ``alpha``; the
    upper end of the bracket grows geometrically if needed.
    """
    if _gamma_at(spec, phi, alpha_lo, DEFAULT_TOL) >= 0:
        raise NoRoot(f"Lyapunov exponent already non-negative as alpha -> 0 at phi={phi}")
    hi = alpha_hi
    for _ in range(20):
        if _gamma_at(spec, phi, hi, DEFAULT_TOL) > 0:
            break
        hi *= 10.0
    else:
        raise NoRoot(f"no sign change found up to alpha={hi:g}")
    lo = alpha_lo
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if _gamma_at(spec, phi, mid, DEFAULT_TOL) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)
