import numpy as np
import pytest

from bspline_psd.summary import (
    DegenerateBandWarning,
    PsdSamples,
    covered,
    iae,
    pointwise_summary,
    read_summary_csv,
    summarize,
    uniform_band,
    write_summary_csv,
)


def curves(seed=0, S=400, G=30):
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.1, 3.0, G)
    base = 1 + np.sin(grid) ** 2
    return PsdSamples(grid, base * np.exp(0.3 * rng.standard_normal((S, G))))


class TestPointwise:
    def test_identical_curves(self):
        c = np.tile([1.0, 2.0, 3.0], (5, 1))
        med, lo, hi = pointwise_summary(c, 0.1)
        np.testing.assert_array_equal(med, [1, 2, 3])
        np.testing.assert_array_equal(lo, med)
        np.testing.assert_array_equal(hi, med)

    def test_median_of_three(self):
        c = np.array([[1.0], [2.0], [3.0]])
        med, lo, hi = pointwise_summary(c, 0.0)
        assert med[0] == 2 and lo[0] == 1 and hi[0] == 3

    def test_normal_quantiles(self):
        rng = np.random.default_rng(1)
        c = 5 + 2 * rng.standard_normal((200_000, 2))
        _, lo, hi = pointwise_summary(c, 0.1)
        np.testing.assert_allclose(lo, 5 - 1.6449 * 2, atol=0.03)
        np.testing.assert_allclose(hi, 5 + 1.6449 * 2, atol=0.03)

    def test_linear_interpolation(self):
        c = np.arange(11.0)[:, None]
        _, lo, hi = pointwise_summary(c, 0.15)
        assert lo[0] == pytest.approx(0.75) and hi[0] == pytest.approx(9.25)

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            pointwise_summary(np.ones((3, 2)), 1.5)


class TestUniformBand:
    def test_constant_multiple_of_mad(self):
        med = np.array([1.0, 2.0, 5.0])
        mad = np.array([0.1, 0.5, 0.2])
        c = 3.0
        # rows med, med +- mad, med +- c mad: per-point mad stays exactly mad
        rows = [med, med + mad, med - mad, med + c * mad, med - c * mad]
        lo, hi, zeta, m, d = uniform_band(np.array(rows), alpha=0.0)
        np.testing.assert_allclose(d, mad)
        assert zeta == pytest.approx(c)
        np.testing.assert_allclose(lo, med - c * mad)
        np.testing.assert_allclose(hi, med + c * mad)

    def test_alpha_one_is_minimum(self):
        s = curves()
        c = s.curves
        med = np.median(c, axis=0)
        mad = np.median(np.abs(c - med), axis=0)
        stat = np.max(np.abs(c - med) / mad, axis=1)
        assert uniform_band(s, 1.0)[2] == pytest.approx(stat.min())

    def test_contains_pointwise(self):
        s = curves(2)
        summ = summarize(s, 0.1)
        assert np.all(summ.lo_unif <= summ.lo_point + 1e-12)
        assert np.all(summ.hi_unif >= summ.hi_point - 1e-12)
        assert np.all(summ.lo_point <= summ.median) and np.all(summ.median <= summ.hi_point)

    def test_scale_equivariance(self):
        s = curves(3)
        lo, hi, zeta, med, mad = uniform_band(s, 0.1)
        lo2, hi2, zeta2, med2, mad2 = uniform_band(PsdSamples(s.grid, 7.5 * s.curves), 0.1)
        assert zeta2 == pytest.approx(zeta, rel=1e-12)
        np.testing.assert_allclose(lo2, 7.5 * lo, rtol=1e-12)
        np.testing.assert_allclose(hi2, 7.5 * hi, rtol=1e-12)
        np.testing.assert_allclose(mad2, 7.5 * mad, rtol=1e-12)

    def test_zeta_nonincreasing_in_alpha(self):
        s = curves(4)
        z = [uniform_band(s, a)[2] for a in np.linspace(0, 1, 21)]
        assert np.all(np.diff(z) <= 1e-12)

    def test_zero_mad_points_excluded(self):
        c = np.array([[1.0, 1.0], [1.0, 2.0], [1.0, 3.0], [1.0, 10.0]])
        lo, hi, zeta, med, mad = uniform_band(c, 0.0)
        assert lo[0] == hi[0] == 1.0
        assert np.isfinite(zeta)

    def test_degenerate_warns(self):
        with pytest.warns(DegenerateBandWarning):
            lo, hi, zeta, _, _ = uniform_band(np.ones((4, 3)), 0.1)
        assert zeta == 0.0
        np.testing.assert_array_equal(lo, hi)

    def test_log_scale_band(self):
        s = curves(9)
        summ = summarize(s, 0.1, log_scale=True)
        lo, hi, zeta, med, _ = uniform_band(PsdSamples(s.grid, np.log(s.curves)), 0.1)
        np.testing.assert_allclose(summ.lo_unif, np.exp(lo), rtol=1e-12)
        np.testing.assert_allclose(summ.hi_unif, np.exp(hi), rtol=1e-12)
        assert summ.zeta == zeta
        assert np.all(summ.lo_unif > 0)
        # multiplicative: the band is symmetric about the median on the log scale
        np.testing.assert_allclose(np.log(summ.hi_unif) + np.log(summ.lo_unif), 2 * med, rtol=1e-12)
        # pointwise summaries are unaffected by the scale
        lin = summarize(s, 0.1)
        np.testing.assert_array_equal(summ.median, lin.median)
        np.testing.assert_array_equal(summ.lo_point, lin.lo_point)

    def test_log_scale_scaling(self):
        s = curves(10)
        a = summarize(s, 0.1, log_scale=True)
        b = summarize(PsdSamples(s.grid, 3.0 * s.curves), 0.1, log_scale=True)
        assert b.zeta == pytest.approx(a.zeta, rel=1e-12)
        np.testing.assert_allclose(b.hi_unif, 3.0 * a.hi_unif, rtol=1e-12)

    def test_log_scale_needs_positive(self):
        with pytest.raises(ValueError):
            summarize(np.array([[1.0, 0.0], [2.0, 1.0]]), 0.1, log_scale=True)

    def test_log_view(self):
        summ = summarize(curves(5), 0.1)
        logs = summ.log()
        np.testing.assert_allclose(logs["median"], np.log(summ.median))


class TestIae:
    def test_identical(self):
        lam = np.linspace(0.1, 3, 40)
        f = lambda x: 1 + np.cos(x) ** 2  # noqa: E731
        assert iae(lam, f(lam), lambda x: f(x) + 0 * x) < 1e-2
        assert iae(lam, np.ones(40), lambda x: np.ones_like(x)) == 0.0

    def test_constant_offset(self):
        lam = np.linspace(0.05, 3.1, 50)
        assert iae(lam, np.full(50, 2.5), lambda x: np.full_like(x, 2.0)) == pytest.approx(0.5 * np.pi, abs=1e-6)

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        lam = np.sort(rng.uniform(0.1, 3, 30))
        a, b = rng.random(30), rng.random(30)
        fa = lambda x: np.interp(x, lam, a)  # noqa: E731
        fb = lambda x: np.interp(x, lam, b)  # noqa: E731
        assert iae(lam, a, fb) == pytest.approx(iae(lam, b, fa), rel=1e-12)
        assert iae(lam, a, fb) > 0

    def test_grid_floor(self):
        with pytest.raises(ValueError):
            iae([1.0, 2.0], [1.0, 1.0], np.ones_like, n_grid=1000)


class TestCovered:
    def test_basic(self):
        med = np.array([1.0, 2.0, 3.0])
        assert covered(med, med - 0.1, med + 0.1)
        truth = med.copy()
        truth[1] = 2.2
        assert not covered(truth, med - 0.1, med + 0.1)

    def test_callable(self):
        grid = np.linspace(0, 1, 5)
        assert covered(lambda x: x, grid - 0.01, grid + 0.01, grid)

    def test_monotone_in_width(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            truth, med = rng.random(10), rng.random(10)
            w = rng.random(10)
            if covered(truth, med - w, med + w):
                assert covered(truth, med - 1.5 * w, med + 1.5 * w)


def test_summary_csv_roundtrip(tmp_path):
    s = curves(8)
    summ = summarize(s, 0.1)
    path = tmp_path / "summary.csv"
    write_summary_csv(path, summ)
    text = path.read_text()
    assert text.splitlines()[0] == "freq,median,lo_point,hi_point,lo_unif,hi_unif"
    back = read_summary_csv(path)
    np.testing.assert_array_equal(back["median"], summ.median)
    np.testing.assert_array_equal(back["lo_unif"], summ.lo_unif)
    write_summary_csv(tmp_path / "again.csv", summ)
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()
