"""
Tests for empirical CDFs, the gamma reference, gamma fits, CDF offsets and
fading margins.
"""

import numpy as np
import pytest
from scipy import special

from mimo.hardening.core import SubsetPolicy
from mimo.hardening.tails import (
    _solve_shape,
    cdf_offset,
    cdf_offset_range,
    dof_curve,
    ecdf,
    ecdf_table,
    fading_margin,
    fading_margin_table,
    fit_gamma,
    gamma_quantile,
    gamma_reference_cdf,
    iid_margin_table,
    is_reliable,
    quantile,
)
from mimo.hardening.computation import combined_gain, normalize
from mimo.hardening.validation import ConfigError, DataError, InsufficientSamplesError


class TestEcdf:
    """Hazen plotting positions and quantiles."""

    def test_positions(self):
        dist = ecdf([3.0, 1.0, 4.0, 2.0])
        assert dist.values.tolist() == [1.0, 2.0, 3.0, 4.0]
        assert dist.positions.tolist() == pytest.approx([0.125, 0.375, 0.625, 0.875])
        assert dist.method == "hazen"

    def test_quantile_interpolates(self):
        dist = ecdf([1.0, 2.0, 3.0, 4.0])
        assert quantile(dist, 0.5) == pytest.approx(2.5)
        assert quantile(dist, 0.25) == pytest.approx(1.5)

    def test_quantile_clamps_at_ends(self):
        dist = ecdf([1.0, 2.0, 3.0, 4.0])
        assert quantile(dist, 0.01) == 1.0
        assert quantile(dist, 0.99) == 4.0

    def test_quantile_probability_range(self):
        dist = ecdf([1.0, 2.0])
        with pytest.raises(ConfigError):
            quantile(dist, 0.0)
        with pytest.raises(ConfigError):
            quantile(dist, 1.0)

    def test_reliability(self):
        dist = ecdf(np.arange(1, 10_001, dtype=float))
        assert is_reliable(dist, 1e-3)
        assert not is_reliable(dist, 1e-4)
        assert is_reliable(dist, 0.5)

    def test_invalid_samples(self):
        with pytest.raises(InsufficientSamplesError):
            ecdf([])
        with pytest.raises(DataError):
            ecdf([1.0, np.nan])

    def test_table_keeps_small_samples_whole(self):
        rows = ecdf_table(ecdf([2.0, 1.0, 3.0]))
        assert [r["value"] for r in rows] == [1.0, 2.0, 3.0]

    def test_table_thins_large_samples(self, rng):
        dist = ecdf(rng.random(50_000))
        rows = ecdf_table(dist, points=200)
        assert len(rows) <= 200
        assert rows[0]["value"] == dist.values[0]
        assert rows[-1]["value"] == dist.values[-1]
        probs = [r["probability"] for r in rows]
        assert probs == sorted(probs)


class TestGammaReference:
    """Gamma(M, 1/M) CDF and quantile."""

    def test_single_antenna_is_exponential(self):
        x = np.array([0.1, 1.0, 3.0])
        assert gamma_reference_cdf(1.0, x) == pytest.approx(1 - np.exp(-x))
        assert gamma_reference_cdf(1.0, 0.0) == 0.0

    @pytest.mark.parametrize("shape", [1.0, 2.0, 4.0])
    def test_quantile_inverts_cdf(self, shape):
        for x in np.geomspace(1e-6, 10.0, 40):
            p = gamma_reference_cdf(shape, x)
            if p < 1.0 - 1e-6:
                assert gamma_quantile(shape, p) == pytest.approx(x, rel=1e-9)
            else:
                # x is not recoverable once P(x) rounds this close to 1
                assert gamma_reference_cdf(shape, gamma_quantile(shape, p)) == pytest.approx(p, abs=1e-12)

    def test_median_of_hundred_antennas(self):
        assert gamma_quantile(100.0, 0.5) == pytest.approx(0.9967, abs=1e-4)

    def test_invalid_arguments(self):
        with pytest.raises(ConfigError):
            gamma_reference_cdf(0.0, 1.0)
        with pytest.raises(ConfigError):
            gamma_reference_cdf(2.0, -1.0)
        with pytest.raises(ConfigError):
            gamma_quantile(2.0, 1.0)


class TestGammaFit:
    """Shape and scale estimation."""

    def test_solver_recovers_shape(self):
        for a in (0.3, 1.0, 3.0, 50.0):
            s = np.log(a) - special.digamma(a)
            assert _solve_shape(s, 1e-12, 200) == pytest.approx(a, rel=1e-8)

    @pytest.mark.parametrize("a", [1e-3, 0.05, 1e4])
    def test_solver_extreme_shapes(self, a):
        s = np.log(a) - special.digamma(a)
        assert _solve_shape(s, 1e-12, 200) == pytest.approx(a, rel=1e-6)

    def test_solver_warns_when_capped(self, caplog):
        s = np.log(3.0) - special.digamma(3.0)
        with caplog.at_level("WARNING", logger="mimo.hardening.tails"):
            _solve_shape(s, 1e-14, 1)
        assert "stopped after 1 iterations" in caplog.text

    @pytest.mark.parametrize("method", ["mle", "mom"])
    def test_joint_fit(self, rng, method):
        samples = rng.gamma(shape=5.0, scale=0.4, size=100_000)
        fit = fit_gamma(samples, method=method, scale_mode="joint")
        assert fit.shape == pytest.approx(5.0, rel=0.05)
        assert fit.scale == pytest.approx(0.4, rel=0.05)
        assert fit.sample_count == 100_000

    @pytest.mark.parametrize("method", ["mle", "mom"])
    def test_constrained_fit(self, rng, method):
        samples = rng.gamma(shape=8.0, scale=1 / 8.0, size=100_000)
        fit = fit_gamma(samples, method=method, scale_mode="constrained")
        assert fit.shape == pytest.approx(8.0, rel=0.05)
        assert fit.scale == pytest.approx(1 / fit.shape)

    @pytest.mark.parametrize("shape", [1.0, 4.0, 10.0, 100.0])
    def test_mle_and_mom_agree(self, rng, shape):
        samples = rng.gamma(shape=shape, scale=1 / shape, size=1_000_000)
        mle = fit_gamma(samples, method="mle")
        mom = fit_gamma(samples, method="mom")
        assert mle.shape == pytest.approx(mom.shape, rel=0.03)
        assert mle.scale == pytest.approx(mom.scale, rel=0.03)

    def test_too_few_samples(self, rng):
        with pytest.raises(InsufficientSamplesError):
            fit_gamma(rng.random(99) + 0.1)

    def test_non_positive_samples(self, rng):
        samples = rng.random(200) + 0.1
        samples[5] = 0.0
        with pytest.raises(DataError):
            fit_gamma(samples)

    def test_constant_samples(self):
        with pytest.raises(DataError):
            fit_gamma(np.ones(200))

    def test_unknown_method(self, rng):
        with pytest.raises(ConfigError):
            fit_gamma(rng.random(200) + 0.1, method="bayes")
        with pytest.raises(ConfigError):
            fit_gamma(rng.random(200) + 0.1, scale_mode="free")


class TestDofCurve:
    """Fitted shape reads as effective antenna count."""

    def test_iid_shape_tracks_size(self, iid_tensor):
        curve = dof_curve(iid_tensor, SubsetPolicy(sizes=(1, 4, 16)))
        for point in curve.points:
            assert point.fit.shape == pytest.approx(point.subset_size, rel=0.1)
            assert point.fit.method == "mle"
            assert point.alternate.method == "mom"
        assert curve.shape_slope() == pytest.approx(1.0, rel=0.1)
        assert len(curve.to_rows()) == 6


class TestCdfOffset:
    """Gap between reference and empirical quantiles."""

    def test_iid_offset_is_small(self, iid_tensor):
        dist = ecdf(combined_gain(normalize(iid_tensor)))
        offset = cdf_offset(dist, 100.0, 1e-2)
        assert offset.reliable
        assert offset.unit == "db"
        assert abs(offset.value) < 0.2

    def test_linear_unit(self, iid_tensor):
        dist = ecdf(combined_gain(normalize(iid_tensor)))
        offset = cdf_offset(dist, 100.0, 1e-2, unit="linear")
        assert offset.value == pytest.approx(gamma_quantile(100.0, 1e-2) - quantile(dist, 1e-2))

    def test_heavier_tail_is_positive(self, rng):
        dist = ecdf(rng.gamma(shape=2.0, scale=0.5, size=10_000))
        assert cdf_offset(dist, 8.0, 1e-2).value > 0

    def test_unknown_unit(self, iid_tensor):
        dist = ecdf(combined_gain(normalize(iid_tensor)))
        with pytest.raises(ConfigError):
            cdf_offset(dist, 100.0, 1e-2, unit="neper")

    def test_range_over_sizes(self, iid_tensor):
        result = cdf_offset_range(iid_tensor, SubsetPolicy(sizes=(1, 2, 4, 16, 100)), p=1e-3)
        assert [size for size, _ in result.offsets] == [4, 16, 100]
        assert result.skipped == 0
        assert -1.5 < result.minimum <= result.maximum < 1.5

    def test_range_skips_unreliable(self, iid_tensor):
        result = cdf_offset_range(iid_tensor, SubsetPolicy(sizes=(4, 16)), p=1e-4)
        assert result.skipped == 2
        assert result.minimum is None and result.maximum is None

    def test_range_needs_a_size(self, iid_tensor):
        with pytest.raises(ConfigError):
            cdf_offset_range(iid_tensor, SubsetPolicy(sizes=(1, 2)), min_size=3)


class TestFadingMargin:
    """Median-to-tail quantile ratio."""

    def test_single_antenna_analytic(self):
        assert fading_margin(1.0, 1e-5) == pytest.approx(48.41, abs=0.01)

    def test_hundred_antennas_analytic(self):
        margin = fading_margin(100.0, 1e-5)
        assert 1.5 < margin <= 4.3

    def test_median_has_no_margin(self):
        assert fading_margin(4.0, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_probability_range(self):
        with pytest.raises(ConfigError):
            fading_margin(1.0, 0.6)
        with pytest.raises(ConfigError):
            fading_margin(1.0, 0.0)

    def test_empirical_matches_analytic(self, iid_tensor):
        table = fading_margin_table(iid_tensor, SubsetPolicy(sizes=(1, 10, 100)), p_list=[0.1])
        for row in table.rows:
            assert row.margin_db == pytest.approx(row.reference_margin_db, abs=0.5)

    def test_unreliable_rows(self, iid_tensor):
        table = fading_margin_table(iid_tensor, SubsetPolicy(sizes=(1, 10, 100)), p_list=[1e-3, 1e-4])
        assert len(table.rows) == 6
        assert table.unreliable_count == 3
        assert all(r["reliable"] is False for r in table.to_rows() if r["p"] == 1e-4)

    def test_iid_table(self):
        table = iid_margin_table([1, 100], p_list=[1e-5])
        assert table.unreliable_count == 0
        assert table.rows[0].margin_db == pytest.approx(48.41, abs=0.01)
        assert table.rows[1].margin_db == table.rows[1].reference_margin_db

    def test_margin_shrinks_with_antennas(self):
        margins = [r.margin_db for r in iid_margin_table([1, 2, 4, 8, 16], p_list=[1e-3]).rows]
        assert margins == sorted(margins, reverse=True)
