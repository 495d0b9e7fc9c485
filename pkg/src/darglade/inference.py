"""Random-weighting standard errors, the stationarity t-test and closed-form
asymptotic standard errors used as diagnostics."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from darglade.errors import DarError, SingularSigma
from darglade.estimation import (
    FitResult,
    OptimizerSettings,
    ThetaBox,
    WeightVector,
    weighted_glade,
)
from darglade.lyapunov import TruncationWindow, gamma_resampled
from darglade.model import DarParams, InnovationSpec, SignedLogSeries
from darglade.numerics import derive_stream

MIN_B = 50


def exponential_weights(gen: np.random.Generator, n: int) -> np.ndarray:
    return gen.standard_exponential(n)


def unit_weights(gen: np.random.Generator, n: int) -> np.ndarray:
    return np.ones(n)


@dataclass(frozen=True, eq=False)
class ResampleSummary:
    """Replicates ``(phi*, alpha*, omega*, gamma*)`` and their column SDs.

    SEs are on the per-sample scale, i.e. the replicate SD itself (divisor
    ``B - 1``); multiply by ``sqrt(n)`` for the root-n scale.
    """

    B: int
    replicates: np.ndarray
    se_phi: float
    se_alpha: float
    se_omega: float
    se_gamma: float
    n_redrawn: int = 0
    n_failed: int = 0

    @property
    def ses(self) -> np.ndarray:
        return np.array([self.se_phi, self.se_alpha, self.se_omega, self.se_gamma])


def _replicate(series, box, opts, window, seed, b, B, weight_law, base, warm):
    last_err = None
    for index in (b, B + b):
        gen = derive_stream(seed, index).gen
        w = WeightVector(weight_law(gen, series.n))
        try:
            fit = weighted_glade(series, box, w, opts,
                                 starts=[base.theta_hat] if warm else None, warm=warm)
            g = gamma_resampled(series, fit, w, window)
        except DarError as err:
            last_err = err
            continue
        t = fit.theta_hat
        return np.array([t.phi, t.alpha, t.omega, g]), index != b
    return None, last_err


def rw_variance(series: SignedLogSeries, fit: FitResult, box: ThetaBox | None = None,
                B: int = 500, window: TruncationWindow | None = None, seed: int = 0,
                opts: OptimizerSettings | None = None,
                weight_law: Callable[[np.random.Generator, int], np.ndarray] = exponential_weights,
                warm_start: bool = True, threads: int = 1) -> ResampleSummary:
    """Random-weighting standard errors for ``theta_hat`` and ``gamma_hat``.

    Replicate ``b`` draws its weights from ``derive_stream(seed, b)``, refits
    the weighted criterion and recomputes the Lyapunov estimate. A failed
    replicate is redrawn once from stream ``B + b`` and then dropped.

    ``warm_start`` starts each refit from ``fit.theta_hat`` with a small
    simplex; switch it off to rerun the full multi-start of :func:`glade`.
    """
    if B < MIN_B:
        raise ValueError(f"B must be at least {MIN_B}, got {B}")
    window = window or TruncationWindow(series.n)

    def one(b):
        return _replicate(series, box, opts, window, seed, b, B, weight_law, fit, warm_start)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(1, B + 1)))
    else:
        results = [one(b) for b in range(1, B + 1)]

    rows = [r for r, _ in results if r is not None]
    n_redrawn = sum(1 for r, flag in results if r is not None and flag)
    n_failed = B - len(rows)
    if len(rows) < 2:
        raise DarError(f"only {len(rows)} of {B} resampling replicates succeeded")
    reps = np.vstack(rows)
    # shifting by the first replicate is exact for identical rows and reduces cancellation
    sd = (reps - reps[0]).std(axis=0, ddof=1)
    return ResampleSummary(B, reps, *map(float, sd), n_redrawn=n_redrawn, n_failed=n_failed)


# ---------------------------------------------------------------------------
# closed-form diagnostics
# ---------------------------------------------------------------------------


def asymptotic_se_explosive(params: DarParams, spec: InnovationSpec, n: int) -> tuple[float, float]:
    """Per-sample SEs of ``(phi_hat, alpha_hat)`` in the explosive regime."""
    a0 = params.alpha
    var_phi = a0 / (4.0 * spec.f0**2)
    var_alpha = 4.0 * (spec.kappa_eta - 1.0) * a0**2
    return math.sqrt(var_phi / n), math.sqrt(var_alpha / n)


def sigma_moments(series: SignedLogSeries, theta: DarParams) -> dict[tuple[int, int], float]:
    """Sample analogues of ``E y^{2i} / (omega + alpha y^2)^j`` over lagged values.

    Only the entries needed for the stationary covariance are returned.
    """
    a, _, u, _ = series.lagged_design()
    v = theta.omega * u + theta.alpha * a * a
    a2 = a * a
    return {
        (0, 0): 1.0,
        (1, 1): float(np.mean(a2 / v)),
        (2, 2): float(np.mean((a2 / v) ** 2)),
        (1, 2): float(np.mean(u * a2 / (v * v))),
        (0, 2): float(np.mean(u * u / (v * v))),
    }


def asymptotic_se_stationary(series: SignedLogSeries, theta: DarParams,
                             spec: InnovationSpec) -> tuple[float, float, float]:
    """Plug-in per-sample SEs of ``(phi, alpha, omega)`` for a stationary path.

    Needs the innovation law for ``f(0)`` and ``E eta^2``, so it is a check
    on the random-weighting SEs rather than a replacement.
    """
    s = sigma_moments(series, theta)
    sigma = np.array([[s[2, 2], s[1, 2]], [s[1, 2], s[0, 2]]])
    if not np.all(np.isfinite(sigma)) or np.linalg.cond(sigma) > 1e12:
        raise SingularSigma("moment matrix is numerically singular")
    cov = 4.0 * (spec.kappa_eta - 1.0) * np.linalg.inv(sigma)
    var_phi = 1.0 / (4.0 * s[1, 1] * spec.f0**2)
    n = series.n
    return (math.sqrt(var_phi / n), math.sqrt(cov[0, 0] / n), math.sqrt(cov[1, 1] / n))


# ---------------------------------------------------------------------------
# testing
# ---------------------------------------------------------------------------


def t_statistic(gamma_hat: float, se_gamma: float) -> float:
    """``T_n`` with a per-sample SE, i.e. ``gamma_hat / se_gamma``."""
    if not se_gamma > 0:
        raise ValueError("se_gamma must be positive")
    return gamma_hat / se_gamma


_FMT = "{:.6g}"


@dataclass(frozen=True)
class TestReport:
    """Outcome of the two one-sided stationarity tests at one level."""

    __test__ = False  # not a pytest class

    gamma_hat: float
    se_gamma: float
    n: int
    t_stat: float
    level: float
    ci_lo: float
    ci_hi: float
    st_reject: bool
    ns_reject: bool
    p_st: float
    p_ns: float

    def fields(self) -> list[tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return _FMT.format(v)

    def to_text(self) -> str:
        return "\n".join(f"{k} = {self._fmt(v)}" for k, v in self.fields()) + "\n"

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in dataclasses.fields(cls))

    def to_csv_row(self) -> str:
        return ",".join(self._fmt(v) for _, v in self.fields())

    @classmethod
    def from_text(cls, text: str) -> "TestReport":
        raw = {}
        for line in text.splitlines():
            if "=" in line:
                k, v = (s.strip() for s in line.split("=", 1))
                raw[k] = v
        kwargs = {}
        for f in dataclasses.fields(cls):
            v = raw[f.name]
            if f.type in ("bool", bool):
                kwargs[f.name] = v == "true"
            elif f.type in ("int", int):
                kwargs[f.name] = int(v)
            else:
                kwargs[f.name] = float(v)
        return cls(**kwargs)


def test_stationarity(gamma_hat: float, se_gamma: float, n: int, level: float = 0.05) -> TestReport:
    """Both one-sided tests plus the two-sided confidence interval.

    ST rejects ``gamma < 0`` when ``T_n > z_{1-level}``; NS rejects
    ``gamma > 0`` when ``T_n < z_{level}``.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    t = t_statistic(gamma_hat, se_gamma)
    half = se_gamma * float(ndtri(1.0 - level / 2.0))
    return TestReport(
        gamma_hat=float(gamma_hat),
        se_gamma=float(se_gamma),
        n=int(n),
        t_stat=float(t),
        level=float(level),
        ci_lo=float(gamma_hat - half),
        ci_hi=float(gamma_hat + half),
        st_reject=bool(t > ndtri(1.0 - level)),
        ns_reject=bool(t < ndtri(level)),
        p_st=float(1.0 - ndtr(t)),
        p_ns=float(ndtr(t)),
    )


test_stationarity.__test__ = False
