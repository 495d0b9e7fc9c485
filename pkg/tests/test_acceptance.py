"""Acceptance criteria at desk scale (300 replications, B = 200).

Each test records one PASS/FAIL line that is echoed in the terminal summary.
The Monte Carlo criteria take several minutes each on one core.
"""

import math
import time

import numpy as np
import pytest

from darglade import (
    DarParams,
    asymptotic_se_explosive,
    derive_stream,
    gamma_natural,
    gamma_truncated,
    get_innovation,
    glade,
    residuals,
    rw_variance,
    simulate,
    true_gamma,
    weighted_glade,
)
from darglade.estimation import OptimizerSettings, WeightVector
from darglade.harness import csvio
from darglade.harness.cli import fit_report
from darglade.harness.config import StudyConfig
from darglade.harness.studies import (
    Table1Row,
    power_cell,
    power_design,
    power_reports,
    run_aae_study,
    table1_replicates,
)
from darglade.inference import unit_weights
from darglade.lyapunov import TruncationWindow

from conftest import record

pytestmark = pytest.mark.acceptance

EULER = 0.5772156649015329
SEED = 20240601
STAT = (0.7, 0.4, 0.5)
EXPL = (1.0, 3.0, 0.5)


# ---------------------------------------------------------------------------
# 1-3: quadrature and closed forms
# ---------------------------------------------------------------------------


def test_criterion_1_lyapunov_quadrature():
    cases = [(STAT, "normal", -0.523), (STAT, "laplace", -0.440), (STAT, "st3", -0.473),
             (EXPL, "normal", 0.242), (EXPL, "laplace", 0.227), (EXPL, "st3", 0.183)]
    t0 = time.perf_counter()
    errs = [abs(true_gamma(DarParams(*p), get_innovation(k)) - v) for p, k, v in cases]
    null = abs(true_gamma(DarParams(0.922, 1.844, 0.5), get_innovation("st3")))
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-3 and null <= 2e-3 and elapsed < 1.0
    record(1, ok, f"max table error {max(errs):.2e} (<=1e-3), null point |gamma| {null:.2e} "
                  f"(<=2e-3), {elapsed:.3f}s (<1s)")
    assert ok


def test_criterion_2_closed_form_oracles():
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0, 4.0):
        lap = 0.5 * math.log(alpha) - EULER
        nor = 0.5 * math.log(alpha) + 0.5 * (math.log(math.pi / 4) - EULER)
        worst = max(worst,
                    abs(true_gamma(DarParams(0.0, alpha, 1.0), get_innovation("laplace")) - lap),
                    abs(true_gamma(DarParams(0.0, alpha, 1.0), get_innovation("normal")) - nor))
    ok = worst <= 1e-6
    record(2, ok, f"max deviation from closed forms {worst:.2e} (<=1e-6)")
    assert ok


def test_criterion_3_explosive_closed_form_ses():
    table = {"normal": (0.139, 0.223), "laplace": (0.090, 0.292), "st3": (0.109, None)}
    rel = []
    parts = []
    for name, ref in table.items():
        se = asymptotic_se_explosive(DarParams(*EXPL), get_innovation(name), 400)
        for got, want in zip(se, ref):
            if want is not None:
                rel.append(abs(got / want - 1))
        parts.append(f"{name} ({se[0]:.3f}, {se[1]:.3f})")
    ok = max(rel) <= 0.05
    record(3, ok, f"{'; '.join(parts)}; max relative gap {max(rel):.3f} (<=0.05)")
    assert ok


# ---------------------------------------------------------------------------
# 4: bias, SE and coverage study at desk scale
# ---------------------------------------------------------------------------

# n = 400 standard errors per row, used to scale the phi bands of the stationary Normal design
TABLE1_SE = {
    ("normal", STAT): {"phi": 0.072, "alpha": 0.056, "omega": 0.068, "gamma": 0.074},
    ("normal", EXPL): {"phi": 0.139, "alpha": 0.223, "gamma": 0.045},
    ("laplace", EXPL): {"phi": 0.090, "alpha": 0.292, "gamma": 0.049},
    ("st3", EXPL): {"phi": 0.109, "alpha": 0.375, "gamma": 0.054},
}
PHI_SE = 0.072


def table1_checks(row: Table1Row, ref_se: float) -> list[str]:
    """Failed checks for one row; bands are the phi bands rescaled by the row's SE."""
    k = ref_se / PHI_SE
    failed = []
    if abs(row.bias) > 0.02 * k:
        failed.append(f"|bias| {abs(row.bias):.4f} > {0.02 * k:.4f}")
    if not 0.05 * k <= row.se <= 0.10 * k:
        failed.append(f"SE {row.se:.4f} outside [{0.05 * k:.4f}, {0.10 * k:.4f}]")
    if abs(row.see / row.se - 1) > 0.35:
        failed.append(f"SEE/SE {row.see / row.se:.3f}")
    if not 0.90 <= row.cp <= 0.98:
        failed.append(f"CP {row.cp:.3f}")
    return failed


@pytest.mark.slow
@pytest.mark.parametrize("name, design", list(TABLE1_SE), ids=lambda x: str(x))
def test_criterion_4_table1(name, design):
    cfg = StudyConfig(DarParams(*design), get_innovation(name), n=400, replications=300, B=200,
                      seed=SEED)
    t0 = time.perf_counter()
    reps = table1_replicates(cfg)
    rows = {r.parameter: r for r in reps.rows(0.05)}
    failed = []
    summary = []
    for param, ref_se in TABLE1_SE[(name, design)].items():
        r = rows[param]
        summary.append(f"{param} bias={r.bias:+.4f} SE={r.se:.4f} SEE={r.see:.4f} CP={r.cp:.3f}")
        failed += [f"{param}: {msg}" for msg in table1_checks(r, ref_se)]
    ok = not failed
    regime = "stationary" if design == STAT else "explosive"
    record(4, ok, f"{regime} {name}: " + "; ".join(summary)
           + f"; {reps.n_failed} failed reps; {time.perf_counter() - t0:.0f}s"
           + ("" if ok else " | " + "; ".join(failed)))
    assert ok, failed


# ---------------------------------------------------------------------------
# 5: rejection frequencies
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def power_runs():
    base = StudyConfig(DarParams(*STAT), get_innovation("st3"), n=400, replications=300, B=200,
                       seed=SEED)
    runs = {}
    for phi0 in (1.3, 0.922, 0.6):
        cfg = power_design(phi0, get_innovation("st3"), 400, base)
        reports = power_reports(cfg)
        runs[phi0] = (power_cell(cfg, reports, "ST"), power_cell(cfg, reports, "NS"))
    return runs


@pytest.mark.slow
def test_criterion_5_rejection_frequencies(power_runs):
    checks = [
        ("ST", 1.3, lambda r: r >= 0.98, ">=0.98"),
        ("ST", 0.922, lambda r: 0.02 <= r <= 0.11, "in [0.02, 0.11]"),
        ("NS", 0.6, lambda r: r >= 0.97, ">=0.97"),
        ("NS", 0.922, lambda r: 0.02 <= r <= 0.10, "in [0.02, 0.10]"),
        ("ST", 0.6, lambda r: r <= 0.01, "<=0.01"),
        ("NS", 1.3, lambda r: r <= 0.02, "<=0.02"),
    ]
    parts, ok = [], True
    for which, phi0, rule, text in checks:
        cell = power_runs[phi0][0 if which == "ST" else 1]
        good = rule(cell.rejection_rate)
        ok &= good
        parts.append(f"{which}@{phi0}={cell.rejection_rate:.3f}"
                     f"({cell.rejections}/{cell.replications}) {text}{'' if good else ' FAILED'}")
    record(5, ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------------------
# 6: AAE ordering
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_6_aae_ordering():
    parts, ok = [], True
    for design in (STAT, EXPL):
        for name in ("normal", "laplace", "st3"):
            cfg = StudyConfig(DarParams(*design), get_innovation(name), n=200, replications=200,
                              B=200, seed=SEED)
            rows = np.array([r[1:] for r in run_aae_study(cfg)])
            med_g, med_q = np.median(rows, axis=0)
            good = med_q <= med_g if name == "normal" else med_g < med_q
            ok &= good
            parts.append(f"{'stat' if design == STAT else 'expl'} {name} "
                         f"GLADE {med_g:.4f} vs QMLE {med_q:.4f}{'' if good else ' FAILED'}")
    record(6, ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------------------
# 7: property suites
# ---------------------------------------------------------------------------


def test_criterion_7_properties():
    problems = []
    xtol = OptimizerSettings().xtol
    normal, st3 = get_innovation("normal"), get_innovation("st3")
    paths = [simulate(DarParams(*STAT), normal, 400, 500, derive_stream(SEED, k)) for k in range(3)]
    paths += [simulate(DarParams(*EXPL), st3, 400, 0, derive_stream(SEED, 10 + k)) for k in range(3)]

    for s in paths:
        fit = glade(s)
        if glade(-s) != fit:
            problems.append("sign flip")
        for c in (0.1, 10.0):
            th = glade(s.scaled(c)).theta_hat
            if (abs(th.phi - fit.theta_hat.phi) > 10 * xtol
                    or abs(th.alpha - fit.theta_hat.alpha) > 10 * xtol
                    or abs(th.omega / c**2 - fit.theta_hat.omega) > 10 * xtol * max(1, fit.theta_hat.omega)):
                problems.append(f"scale c={c}")
        if weighted_glade(s, None, WeightVector.ones(s.n)) != fit:
            problems.append("unit-weight fit")
    s = paths[0]
    fit = glade(s)
    for warm in (True, False):
        ses = rw_variance(s, fit, B=50, weight_law=unit_weights, warm_start=warm).ses
        if np.any(ses != 0):
            problems.append(f"unit-weight SEs {ses}")
    th = fit.theta_hat
    eta = residuals(s, th)
    g = gamma_truncated(th.phi, th.alpha, eta)
    if g.truncated_count != 0 or g.gamma_hat != gamma_natural(th.phi, th.alpha, eta):
        problems.append("gamma_natural != gamma_truncated")

    small = StudyConfig(DarParams(*STAT), normal, n=100, replications=8, B=50, seed=SEED)
    csvs = []
    for threads in (1, 8):
        reps = table1_replicates(small.with_(threads=threads))
        csvs.append(csvio.write_csv(Table1Row.HEADER, [r.as_tuple() for r in reps.rows()]))
    if csvs[0] != csvs[1]:
        problems.append("thread determinism")

    big = simulate(DarParams(1.3, 2.6, 0.5), st3, 800, 0, derive_stream(SEED, 99))
    bfit = glade(big)
    bg = gamma_truncated(bfit.theta_hat.phi, bfit.theta_hat.alpha, residuals(big, bfit.theta_hat))
    bse = rw_variance(big, bfit, B=50, window=TruncationWindow(big.n)).ses
    if not (np.isfinite(bfit.objective_value) and np.isfinite(bg.gamma_hat) and np.all(np.isfinite(bse))):
        problems.append("explosive n=800 overflow")

    ok = not problems
    record(7, ok, "sign flip, scale equivariance (10*xtol), unit weights, natural=truncated, "
                  f"thread determinism, n=800 phi=1.3 path (max logmag {big.logmag.max():.0f})"
           + ("" if ok else " | " + ", ".join(problems)))
    assert ok


# ---------------------------------------------------------------------------
# 8: verdict direction on the fitted rate model
# ---------------------------------------------------------------------------

LIBOR_FIT = DarParams(0.994, 0.0086, 1.5454e-5)


def libor_path(k):
    # LIBOR sits near 6; the fitted omega is negligible next to alpha*y^2 at that level
    return simulate(LIBOR_FIT, get_innovation("st3"), 369, 0, derive_stream(2024, k), y_start=6.0)


def test_criterion_8_fit_verdict_direction():
    pinned = dict(fit_report(libor_path(0), 1000, 0.05, 0))
    ns, st = [], []
    for k in range(12):
        rep = dict(fit_report(libor_path(k), 200, 0.05, k))
        ns.append(rep["ns_reject"])
        st.append(rep["st_reject"])
    ok = pinned["ns_reject"] and not pinned["st_reject"] and sum(ns) >= 7 and not any(st)
    record(8, ok, f"pinned path: gamma_hat={pinned['gamma_hat']:.4f}, T_n={pinned['t_stat']:.2f}, "
                  f"NS reject={pinned['ns_reject']}; NS rejected on {sum(ns)}/12 paths (>=7), "
                  f"ST on {sum(st)}/12 (=0); real-data digits excluded (series unavailable)")
    assert ok
