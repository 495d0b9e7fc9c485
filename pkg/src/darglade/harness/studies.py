"""Monte Carlo studies: parameter summaries, rejection frequencies and AAE pairs.

Replicate ``r`` owns ``derive_stream(cfg.seed, r)`` for its path and a child
seed of that stream for its resampling weights, so results do not depend on
the number of worker threads. Work is spread over replicates only.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from darglade.errors import ConfigError, DarError
from darglade.estimation import aae, glade, qmle
from darglade.harness.config import PowerGrid, StudyConfig
from darglade.inference import rw_variance, test_stationarity
from darglade.lyapunov import TruncationWindow, gamma_truncated, true_gamma
from darglade.model import DarParams, residuals, simulate
from darglade.numerics import derive_stream

log = logging.getLogger(__name__)

PARAM_NAMES = ("phi", "alpha", "omega", "gamma")


@dataclass(frozen=True)
class Table1Row:
    parameter: str
    true_value: float
    bias: float
    se: float
    see: float
    cp: float

    HEADER = ("parameter", "true_value", "bias", "se", "see", "cp")

    def as_tuple(self):
        return (self.parameter, self.true_value, self.bias, self.se, self.see, self.cp)


@dataclass(frozen=True)
class PowerCell:
    which: str
    phi0: float
    n: int
    replications: int
    rejections: int

    HEADER = ("test", "phi0", "n", "replications", "rejections", "rejection_rate")

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replications

    def as_tuple(self):
        return (self.which, self.phi0, self.n, self.replications, self.rejections,
                self.rejection_rate)


def burn_in_for(cfg: StudyConfig) -> int:
    if cfg.burn_in is not None:
        return cfg.burn_in
    return 500 if true_gamma(cfg.params, cfg.spec) < 0 else 0


def map_replicates(fn: Callable[[int], object], count: int, threads: int) -> list:
    """``[fn(0), ..., fn(count - 1)]``, evaluated on ``threads`` workers."""
    if threads <= 1:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, range(count)))


def _simulate(cfg: StudyConfig, r: int, burn: int):
    stream = derive_stream(cfg.seed, r)
    series = simulate(cfg.params, cfg.spec, cfg.n, burn, stream)
    return series, stream.child_seed()


def _full_replicate(cfg: StudyConfig, r: int, burn: int):
    """Estimates and random-weighting SEs of ``(phi, alpha, omega, gamma)``."""
    series, seed = _simulate(cfg, r, burn)
    try:
        fit = glade(series, opts=cfg.optimizer)
        theta = fit.theta_hat
        gam = gamma_truncated(theta.phi, theta.alpha, residuals(series, theta))
        summary = rw_variance(series, fit, B=cfg.B, window=TruncationWindow(series.n),
                              seed=seed, opts=cfg.optimizer)
    except DarError as err:
        log.warning("replicate %d failed: %s", r, err)
        return None
    est = np.array([theta.phi, theta.alpha, theta.omega, gam.gamma_hat])
    return est, summary.ses


@dataclass(frozen=True, eq=False)
class Table1Replicates:
    """Per-replicate estimates and SEs, rows in replicate order."""

    truth: np.ndarray
    estimates: np.ndarray
    ses: np.ndarray
    n_failed: int

    def rows(self, level: float = 0.05) -> list[Table1Row]:
        """Bias, SE, SEE and coverage of the two-sided ``1 - level`` normal interval."""
        if self.estimates.shape[0] < 2:
            raise DarError("need at least two successful replicates")
        z = float(ndtri(1.0 - level / 2.0))
        bias = self.estimates.mean(axis=0) - self.truth
        se = self.estimates.std(axis=0, ddof=1)
        see = self.ses.mean(axis=0)
        cover = np.abs(self.estimates - self.truth) <= z * self.ses
        cp = cover.mean(axis=0)
        return [Table1Row(PARAM_NAMES[k], float(self.truth[k]), float(bias[k]),
                          float(se[k]), float(see[k]), float(cp[k])) for k in range(4)]


def table1_replicates(cfg: StudyConfig) -> Table1Replicates:
    if cfg.replications < 2:
        raise ConfigError("replications must be at least 2 for a standard error")
    burn = burn_in_for(cfg)
    gamma0 = true_gamma(cfg.params, cfg.spec)
    truth = np.array([cfg.params.phi, cfg.params.alpha, cfg.params.omega, gamma0])
    out = map_replicates(lambda r: _full_replicate(cfg, r, burn), cfg.replications, cfg.threads)
    ok = [o for o in out if o is not None]
    if not ok:
        raise DarError("every replicate failed")
    return Table1Replicates(truth, np.vstack([e for e, _ in ok]),
                            np.vstack([s for _, s in ok]), len(out) - len(ok))


def run_table1_study(cfg: StudyConfig) -> list[Table1Row]:
    return table1_replicates(cfg).rows(0.05)


def power_design(phi0: float, spec, n: int, base: StudyConfig, alpha_ratio: float = 2.0) -> StudyConfig:
    """The rejection-frequency design: ``alpha = alpha_ratio * phi``, ``omega = 0.5``."""
    return base.with_(params=DarParams(phi0, alpha_ratio * phi0, 0.5), spec=spec, n=n)


def _t_replicate(cfg: StudyConfig, r: int, burn: int):
    series, seed = _simulate(cfg, r, burn)
    try:
        fit = glade(series, opts=cfg.optimizer)
        theta = fit.theta_hat
        gam = gamma_truncated(theta.phi, theta.alpha, residuals(series, theta))
        summary = rw_variance(series, fit, B=cfg.B, window=TruncationWindow(series.n),
                              seed=seed, opts=cfg.optimizer)
        report = test_stationarity(gam.gamma_hat, summary.se_gamma, series.n, cfg.level)
    except (DarError, ValueError) as err:
        log.warning("replicate %d failed: %s", r, err)
        return None
    return report


def power_reports(cfg: StudyConfig) -> list:
    """Test reports for every replicate of one design (``None`` marks a failure)."""
    burn = burn_in_for(cfg)
    return map_replicates(lambda r: _t_replicate(cfg, r, burn), cfg.replications, cfg.threads)


def power_cell(cfg: StudyConfig, reports: Sequence, which: str) -> PowerCell:
    which = which.upper()
    done = [rep for rep in reports if rep is not None]
    if not done:
        raise DarError("every replicate failed")
    attr = "st_reject" if which == "ST" else "ns_reject"
    hits = sum(1 for rep in done if getattr(rep, attr))
    return PowerCell(which, cfg.params.phi, cfg.n, len(done), hits)


def run_power_study(configs: Sequence[StudyConfig], which: str) -> list[PowerCell]:
    which = which.upper()
    if which not in ("ST", "NS"):
        raise ValueError("which must be 'ST' or 'NS'")
    return [power_cell(cfg, power_reports(cfg), which) for cfg in configs]


def power_grid_configs(base: StudyConfig, grid: PowerGrid) -> list[StudyConfig]:
    return [power_design(phi, base.spec, n, base, grid.alpha_ratio)
            for n in grid.ns for phi in grid.phis]


def qmle_pseudo_truth(params: DarParams, spec) -> DarParams:
    """Values the Gaussian QMLE targets when innovations have ``E eta^2 = kappa``."""
    k = spec.kappa_eta
    return DarParams(params.phi, k * params.alpha, k * params.omega)


def _aae_replicate(cfg: StudyConfig, r: int, burn: int):
    series, _ = _simulate(cfg, r, burn)
    try:
        g = glade(series, opts=cfg.optimizer)
        q = qmle(series, opts=cfg.optimizer)
    except DarError as err:
        log.warning("replicate %d failed: %s", r, err)
        return None
    return aae(g, cfg.params), aae(q, qmle_pseudo_truth(cfg.params, cfg.spec))


AAE_HEADER = ("replicate", "aae_glade", "aae_qmle")


def run_aae_study(cfg: StudyConfig) -> list[tuple[int, float, float]]:
    """Paired ``(replicate, aae_glade, aae_qmle)`` rows; failed replicates are skipped.

    The QMLE is scored against its own pseudo-true value, which rescales
    ``alpha`` by ``E eta^2``; the relative alpha error keeps the two
    estimators comparable without rescaling either one.
    """
    burn = burn_in_for(cfg)
    out = map_replicates(lambda r: _aae_replicate(cfg, r, burn), cfg.replications, cfg.threads)
    return [(r, *pair) for r, pair in enumerate(out) if pair is not None]
