import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hetjb import montecarlo as mc
from hetjb.errors import ExperimentError, InvalidInputError
from hetjb.jb_test import Method
from hetjb.rng import make_rng


class TestProfiles:
    def test_seasonal_values(self):
        assert mc.variance_profile_seasonal(1e-12) == pytest.approx(3.15, abs=1e-9)
        # 1 + 2 e^0.5 + 0.45 sin(5 pi / 2 + pi / 6) = 1 + 2 e^0.5 + 0.45 cos(pi / 6)
        assert mc.variance_profile_seasonal(0.5) == pytest.approx(1 + 2 * math.exp(0.5) + 0.45 * math.cos(math.pi / 6))
        assert mc.variance_profile_seasonal(0.5) == pytest.approx(4.6871, abs=1e-4)
        assert mc.variance_profile_seasonal(1.0) == pytest.approx(1 + 2 * math.e - 0.3, rel=1e-12)

    @settings(max_examples=100)
    @given(r=st.floats(1e-9, 1.0))
    def test_positive(self, r):
        assert mc.variance_profile_seasonal(r) > 1.0
        assert mc.variance_profile_trend(r) > 3.0
        assert mc.sd_profile_seasonal(r) ** 2 == pytest.approx(mc.variance_profile_seasonal(r))

    @pytest.mark.parametrize("r", [0.0, -0.1, 1.01])
    def test_domain(self, r):
        with pytest.raises(InvalidInputError):
            mc.variance_profile_seasonal(r)

    def test_vectorised(self):
        r = np.linspace(0.1, 1.0, 10)
        np.testing.assert_allclose(mc.variance_profile_seasonal(r), [mc.variance_profile_seasonal(x) for x in r])


class TestInnovations:
    @pytest.mark.parametrize("kind", [mc.Gaussian(), mc.Mixture(0.3), mc.Mixture(1.0), mc.Mixture(math.pi / 2)])
    def test_unit_variance(self, kind):
        x = mc.draw_innovation(kind, make_rng(5), 10 ** 6)
        assert abs(x.mean()) < 0.01
        assert abs(x.var() - 1.0) < 0.01

    def test_skewness_at_pi_over_2(self):
        # skewness is scale free, so it equals that of chi-square(1), sqrt(8)
        x = mc.draw_innovation(mc.Mixture(math.pi / 2), make_rng(5), 10 ** 6)
        assert stats.skew(x) == pytest.approx(math.sqrt(8), abs=0.06)

    def test_skewness_scales_with_sin_cubed(self):
        x = mc.draw_innovation(mc.Mixture(1.0), make_rng(6), 10 ** 6)
        assert stats.skew(x) == pytest.approx(math.sin(1.0) ** 3 * math.sqrt(8), abs=0.05)

    def test_small_delta_is_gaussian(self):
        a = mc.draw_innovation(mc.Gaussian(), make_rng(9), 100)
        b = mc.draw_innovation(mc.Mixture(1e-9), make_rng(9), 100)
        np.testing.assert_allclose(a, b, atol=1e-8)

    @pytest.mark.parametrize("delta", [0.0, -0.5, 2.0])
    def test_invalid_delta(self, delta):
        with pytest.raises(InvalidInputError):
            mc.Mixture(delta)


class TestSimulate:
    def test_white_noise(self):
        y = mc.simulate_dgp(mc.DgpConfig(a0=0.0, n=10_000, seed=1))
        assert stats.kstest(y.values, "norm").pvalue > 0.01

    def test_ar1_autocorrelation(self):
        y = mc.simulate_dgp(mc.DgpConfig(n=50_000, seed=2)).values
        assert np.corrcoef(y[1:], y[:-1])[0, 1] == pytest.approx(0.4, abs=0.02)

    def test_deterministic(self):
        cfg = mc.DgpConfig(n=200, variance="seasonal", innovation=mc.Mixture(0.7), seed=77)
        np.testing.assert_array_equal(mc.simulate_dgp(cfg).values, mc.simulate_dgp(cfg).values)
        other = mc.simulate_dgp(mc.DgpConfig(n=200, variance="seasonal", innovation=mc.Mixture(0.7), seed=78))
        assert not np.array_equal(mc.simulate_dgp(cfg).values, other.values)

    def test_windowed_variance(self):
        y = mc.simulate_dgp(mc.DgpConfig(n=100_000, variance="seasonal", seed=1)).values
        ratio = y[85_000:95_000].var() / y[5_000:15_000].var()
        assert ratio > 1.5
        # the AR scaling cancels, leaving the profile ratio
        assert ratio == pytest.approx(mc.variance_profile_seasonal(0.9) / mc.variance_profile_seasonal(0.1), rel=0.1)

    def test_custom_profile(self):
        cfg = mc.DgpConfig(a0=0.0, n=40_000, variance=lambda r: 4.0 + 0 * r, seed=3)
        assert mc.simulate_dgp(cfg).values.var() == pytest.approx(4.0, rel=0.03)

    def test_burn_in_starts_at_profile_limit(self):
        cfg = mc.DgpConfig(n=50, variance="seasonal")
        h = mc._scale_path(cfg)
        assert h.size == mc.BURN_IN + 50
        np.testing.assert_allclose(h[: mc.BURN_IN], math.sqrt(3.15))
        assert h[-1] == pytest.approx(mc.sd_profile_seasonal(1.0))

    @pytest.mark.parametrize(
        "kwargs", [{"a0": 1.0}, {"n": 19}, {"variance": "nope"}]
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(InvalidInputError):
            mc.DgpConfig(**kwargs)


class TestConfidenceBand:
    def test_n1000(self):
        lo, hi = mc.confidence_band(1000, 0.05)
        assert (round(lo, 2), round(hi, 2)) == (3.65, 6.35)

    def test_n250(self):
        lo, hi = mc.confidence_band(250, 0.05)
        assert (round(lo, 2), round(hi, 2)) == (2.30, 7.70)

    def test_collapses(self):
        lo, hi = mc.confidence_band(10 ** 12, 0.05)
        assert lo == pytest.approx(5.0, abs=1e-3) and hi == pytest.approx(5.0, abs=1e-3)

    @pytest.mark.parametrize("args", [(0, 0.05), (10, 0.0), (10, 1.0)])
    def test_invalid(self, args):
        with pytest.raises(InvalidInputError):
            mc.confidence_band(*args)


class TestParseTest:
    @pytest.mark.parametrize(
        "text,method,gamma",
        [
            ("T_st", Method.ST, None),
            ("T_cv", Method.CV, None),
            ("T_boot", Method.BOOT, None),
            ("T_f", Method.F, 1.0),
            ("T_f(1.5)", Method.F, 1.5),
            ("T_f,boot(2)", Method.F_BOOT, 2.0),
            (" T_f,boot ", Method.F_BOOT, 1.0),
        ],
    )
    def test_valid(self, text, method, gamma):
        spec = mc.parse_test(text)
        assert spec.method is method and spec.gamma == gamma

    def test_labels(self):
        assert mc.parse_test("T_f(1.5)").label == "T_f(1.5)"
        assert mc.parse_test("T_cv").label == "T_cv"

    @pytest.mark.parametrize("text", ["T_xx", "T_cv(1)", "T_f(-1)", "T_f(0)", ""])
    def test_invalid(self, text):
        with pytest.raises(InvalidInputError):
            mc.parse_test(text)


class TestSizeExperiment:
    def test_single_replication(self):
        rep = mc.size_experiment(["T_st", "T_cv", "T_f(1)", "T_boot"], [50], 1, master_seed=3, replicates=19)
        for t in rep.tests:
            assert rep.frequency(t)[0] in (0.0, 100.0)

    def test_homoscedastic_n400_in_band(self):
        rep = mc.size_experiment(["T_st"], [400], 1000, master_seed=2024)
        lo, hi = rep.band
        assert lo < rep.cell("T_st", 400) < hi
        # frozen from this seed
        assert rep.cell("T_st", 400) == 6.0

    def test_reproducible_and_parallel(self):
        kw = dict(scenario=mc.DgpConfig(variance="seasonal"), master_seed=11, replicates=19)
        a = mc.size_experiment(["T_st", "T_boot"], [60, 80], 12, **kw)
        b = mc.size_experiment(["T_st", "T_boot"], [60, 80], 12, jobs=2, **kw)
        assert a.to_dict() == b.to_dict()
        assert all(0 <= f <= 100 for t in a.tests for f in a.frequency(t))

    def test_report_dict(self):
        rep = mc.size_experiment(["T_st"], [50], 20, master_seed=1)
        d = rep.to_dict()
        assert d["N"] == 20 and d["axis"] == "n" and d["axis_values"] == [50]
        assert d["frequency"]["T_st"] == rep.frequency("T_st")
        assert "T_st" in rep.to_text()

    def test_failures_over_limit(self, monkeypatch):
        monkeypatch.setattr(mc, "run_tests", lambda fit, specs, *a: [float("nan")] * len(specs))
        with pytest.raises(ExperimentError):
            mc.size_experiment(["T_st"], [50], 10)

    def test_isolated_failure_tolerated(self, monkeypatch):
        real = mc.run_tests
        calls = []

        def flaky(fit, specs, *a):
            calls.append(1)
            return [float("nan")] * len(specs) if len(calls) == 1 else real(fit, specs, *a)

        monkeypatch.setattr(mc, "run_tests", flaky)
        rep = mc.size_experiment(["T_st"], [50], 200, master_seed=2)
        assert rep.valid["T_st"] == [199] and rep.failures("T_st") == [1]

    def test_empty_tests(self):
        with pytest.raises(InvalidInputError):
            mc.size_experiment([], [50], 10)


class TestPowerExperiment:
    def test_grid(self):
        g = mc.default_delta_grid()
        assert len(g) == 8 and g[-1] == pytest.approx(math.pi / 2)
        np.testing.assert_allclose(np.diff(g), math.pi / 16)

    def test_strongly_skewed_alternative(self):
        rep = mc.power_experiment(["T_st"], 100, [math.pi / 2], 1000, 2024)
        assert rep.cell("T_st", math.pi / 2) > 50
        # frozen from this seed
        assert rep.cell("T_st", math.pi / 2) == 100.0

    def test_common_draws_across_delta(self):
        rep = mc.power_experiment(["T_st"], 100, [0.2, 0.6, 1.0, 1.4], 200, 5)
        f = rep.frequency("T_st")
        assert f == sorted(f)
