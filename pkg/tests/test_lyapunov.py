import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darglade import (
    DarParams,
    boundary_alpha,
    derive_stream,
    gamma_natural,
    gamma_resampled,
    gamma_truncated,
    get_innovation,
    glade,
    residuals,
    simulate,
    true_gamma,
    weighted_glade,
)
from darglade.errors import EmptySet, NoRoot, SingularTerm
from darglade.estimation import WeightVector
from darglade.lyapunov import TruncationWindow

from conftest import STATIONARY

EULER = 0.5772156649015329
SPECS = ["normal", "laplace", "st3"]


class TestGammaNatural:
    def test_hand_example(self):
        assert gamma_natural(0.0, 1.0, [math.e, 1 / math.e]) == pytest.approx(0.0, abs=1e-15)

    def test_tiny_alpha_limit(self):
        assert gamma_natural(1.0, 1e-14, [0.5, -2.0, 1.5]) == pytest.approx(0.0, abs=1e-6)

    def test_singular_term(self):
        with pytest.raises(SingularTerm):
            gamma_natural(1.0, 1.0, [-1.0, 0.3])

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            gamma_natural(1.0, 0.0, [0.3])

    @pytest.mark.parametrize("name", SPECS)
    def test_lln_at_truth(self, name):
        spec = get_innovation(name)
        _, eta = simulate(STATIONARY, spec, 100_000, 0, derive_stream(40, 0), return_innovations=True)
        z = eta * math.sqrt(STATIONARY.alpha)
        terms = 0.5 * (np.log(np.abs(STATIONARY.phi + z)) + np.log(np.abs(STATIONARY.phi - z)))
        est = gamma_natural(STATIONARY.phi, STATIONARY.alpha, eta)
        assert abs(est - true_gamma(STATIONARY, spec)) <= 3 * terms.std(ddof=1) / math.sqrt(len(eta))


class TestGammaTruncated:
    def test_all_inside_equals_natural(self, stationary_path):
        th = glade(stationary_path).theta_hat
        eta = residuals(stationary_path, th)
        g = gamma_truncated(th.phi, th.alpha, eta)
        assert g.truncated_count == 0
        assert g.gamma_hat == gamma_natural(th.phi, th.alpha, eta)

    @settings(max_examples=60)
    @given(st.lists(st.floats(-5, 5).filter(lambda x: abs(x) > 0.01), min_size=5, max_size=40),
           st.floats(-1.5, 1.5), st.floats(0.05, 4.0))
    def test_agree_when_window_is_wide(self, eta, phi, alpha):
        plus = np.abs(phi + np.array(eta) * math.sqrt(alpha))
        minus = np.abs(phi - np.array(eta) * math.sqrt(alpha))
        window = TruncationWindow(10_000)
        if not (window.contains(plus).all() and window.contains(minus).all()):
            return
        assert gamma_truncated(phi, alpha, eta, window).gamma_hat == gamma_natural(phi, alpha, eta)

    def test_single_term_window_membership(self):
        n = 4
        phi, alpha = 1.0, 1.0
        # first term: phi + eta = n^-3 is outside, its mirror 2 - n^-3 is inside
        eta = np.array([n ** -3 - 1.0, 0.3, -0.4, 0.5])
        g = gamma_truncated(phi, alpha, eta)
        assert g.n_a1 == 3 and g.n_a2 == 4 and g.truncated_count == 1
        plus, minus = phi + eta, phi - eta
        expected = (np.log(np.abs(plus[1:])).sum() + np.log(np.abs(minus)).sum()) / (2 * n)
        assert g.gamma_hat == pytest.approx(expected, rel=1e-15)

    def test_exact_zero_is_dropped(self):
        g = gamma_truncated(1.0, 1.0, [-1.0, 0.3, 0.2])
        assert g.truncated_count == 1 and math.isfinite(g.gamma_hat)

    def test_full_pipeline_envelope(self, stationary_path):
        th = glade(stationary_path).theta_hat
        g = gamma_truncated(th.phi, th.alpha, residuals(stationary_path, th))
        assert abs(g.gamma_hat - (-0.523)) <= 0.222

    def test_scale_invariance(self, stationary_path):
        def gamma_of(series):
            th = glade(series).theta_hat
            return gamma_truncated(th.phi, th.alpha, residuals(series, th)).gamma_hat

        base = gamma_of(stationary_path)
        for c in (0.1, 10.0):
            assert gamma_of(stationary_path.scaled(c)) == pytest.approx(base, abs=1e-7)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", SPECS)
    def test_pipeline_bias(self, name):
        spec = get_innovation(name)
        g0 = true_gamma(STATIONARY, spec)
        est = []
        for r in range(200):
            s = simulate(STATIONARY, spec, 400, 500, derive_stream(41, r))
            th = glade(s).theta_hat
            est.append(gamma_truncated(th.phi, th.alpha, residuals(s, th)).gamma_hat)
        assert abs(np.mean(est) - g0) <= 0.02


class TestGammaResampled:
    def test_unit_weights_reduce_to_natural(self, stationary_path):
        fit = glade(stationary_path)
        th = fit.theta_hat
        g = gamma_resampled(stationary_path, fit, WeightVector.ones(stationary_path.n))
        assert g == pytest.approx(gamma_natural(th.phi, th.alpha, residuals(stationary_path, th)),
                                  rel=1e-13)

    def test_per_set_divisors(self):
        # with a truncated term the sets have different sizes and each uses its own
        from darglade.estimation import FitResult
        from darglade import SignedLogSeries
        y = np.array([1.0, 0.0, 0.5, -0.7, 0.2])
        series = SignedLogSeries.from_values(y)
        theta = DarParams(0.0, 1.0, 1.0)
        fit = FitResult(theta, 0.0, True, 0, False)
        eta = residuals(series, theta)
        w = np.array([2.0, 1.0, 0.5, 1.5])
        plus, minus = eta, -eta  # phi = 0, alpha = 1
        window = TruncationWindow(4)
        ins = window.contains(plus)
        assert not ins.all()
        half = (w[ins] * np.log(np.abs(plus[ins]))).sum() / w[ins].sum()
        assert gamma_resampled(series, fit, WeightVector(w), window) == pytest.approx(half, rel=1e-14)

    def test_empty_set(self):
        from darglade.estimation import FitResult
        from darglade import SignedLogSeries
        series = SignedLogSeries.from_values([1.0, 0.3, -0.2, 0.4])
        fit = FitResult(DarParams(0.0, 1.0, 1.0), 0.0, True, 0, False)
        with pytest.raises(EmptySet):
            gamma_resampled(series, fit, WeightVector(np.zeros(3)))

    def test_permuted_weights_change_result(self, stationary_path):
        fit = glade(stationary_path)
        gen = derive_stream(42, 0).gen
        w = WeightVector.exponential(gen, stationary_path.n)
        p = WeightVector(gen.permutation(w.w))
        a = gamma_resampled(stationary_path, weighted_glade(stationary_path, None, w), w)
        b = gamma_resampled(stationary_path, weighted_glade(stationary_path, None, p), p)
        assert a != b

    def test_replicate_spread(self, stationary_path):
        fit = glade(stationary_path)
        reps = []
        for b in range(500):
            w = WeightVector.exponential(derive_stream(43, b).gen, stationary_path.n)
            f = weighted_glade(stationary_path, None, w, starts=[fit.theta_hat], warm=True)
            reps.append(gamma_resampled(stationary_path, f, w))
        assert abs(np.std(reps, ddof=1) / 0.076 - 1) <= 0.30


class TestTrueGamma:
    @pytest.mark.parametrize("params, name, expected", [
        ((0.7, 0.4), "normal", -0.523),
        ((0.7, 0.4), "laplace", -0.440),
        ((0.7, 0.4), "st3", -0.473),
        ((1.0, 3.0), "normal", 0.242),
        ((1.0, 3.0), "laplace", 0.227),
        ((1.0, 3.0), "st3", 0.183),
    ])
    def test_table_values(self, params, name, expected):
        assert true_gamma(DarParams(*params, 0.5), get_innovation(name)) == pytest.approx(expected, abs=1e-3)

    def test_null_point(self):
        assert true_gamma(DarParams(0.922, 1.844, 0.5), get_innovation("st3")) == pytest.approx(0.0, abs=2e-3)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 4.0])
    def test_closed_forms(self, alpha):
        lap = 0.5 * math.log(alpha) - EULER
        nor = 0.5 * math.log(alpha) + 0.5 * (math.log(math.pi / 4) - EULER)
        assert true_gamma(DarParams(0.0, alpha, 1.0), get_innovation("laplace")) == pytest.approx(lap, abs=1e-6)
        assert true_gamma(DarParams(0.0, alpha, 1.0), get_innovation("normal")) == pytest.approx(nor, abs=1e-6)

    @pytest.mark.parametrize("name", SPECS)
    @pytest.mark.parametrize("phi", [0.3, 0.9, 1.4])
    def test_symmetric_in_phi(self, name, phi):
        spec = get_innovation(name)
        assert true_gamma(DarParams(phi, 1.1, 1.0), spec) == pytest.approx(
            true_gamma(DarParams(-phi, 1.1, 1.0), spec), abs=1e-9)

    @pytest.mark.parametrize("name", SPECS)
    def test_increasing_in_alpha_at_phi_zero(self, name):
        spec = get_innovation(name)
        vals = [true_gamma(DarParams(0.0, a, 1.0), spec) for a in np.geomspace(0.01, 20, 20)]
        assert np.all(np.diff(vals) > 0)

    @pytest.mark.parametrize("name", ["normal", "laplace"])
    @pytest.mark.parametrize("phi", [0.5, 0.9, 1.2])
    def test_small_alpha_expansion(self, name, phi):
        # log|phi + x| = log|phi| + x/phi - x^2/(2 phi^2) + ..., so the exponent
        # first falls with alpha when phi != 0
        spec = get_innovation(name)
        alpha = 1e-4
        approx = math.log(phi) - alpha * spec.kappa_eta / (2 * phi**2)
        assert true_gamma(DarParams(phi, alpha, 1.0), spec) == pytest.approx(approx, abs=1e-6)

    @pytest.mark.parametrize("name", SPECS)
    @pytest.mark.parametrize("phi", [0.3, 0.7, 0.95])
    def test_single_sign_change_inside_unit_interval(self, name, phi):
        spec = get_innovation(name)
        vals = np.array([true_gamma(DarParams(phi, a, 1.0), spec) for a in np.geomspace(1e-3, 50, 40)])
        signs = np.sign(vals)
        assert signs[0] < 0 and signs[-1] > 0
        assert np.count_nonzero(np.diff(signs)) == 1


class TestBoundary:
    def test_null_point(self):
        assert boundary_alpha(get_innovation("st3"), 0.922) == pytest.approx(1.844, abs=5e-3)

    def test_closed_forms(self):
        assert boundary_alpha(get_innovation("laplace"), 0.0) == pytest.approx(math.exp(2 * EULER), abs=1e-6)
        assert boundary_alpha(get_innovation("normal"), 0.0) == pytest.approx(
            math.exp(EULER) * 4 / math.pi, abs=1e-6)

    def test_gamma_vanishes_on_boundary(self):
        spec = get_innovation("normal")
        for phi in (-0.8, 0.4, 0.95):
            a = boundary_alpha(spec, phi)
            assert true_gamma(DarParams(phi, a, 1.0), spec) == pytest.approx(0.0, abs=1e-7)

    @pytest.mark.parametrize("phi", [1.1, -1.5])
    def test_no_root_when_exponent_starts_positive(self, phi):
        with pytest.raises(NoRoot):
            boundary_alpha(get_innovation("normal"), phi)
