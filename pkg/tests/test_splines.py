import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from bspline_psd.splines import (
    BsplineDensityBasis,
    KnotSequence,
    basis_matrix,
    bspline_integral,
    build_knots,
    effective_weights,
    eval_bspline,
    eval_density,
    eval_mixture,
)


def random_knots(rng, r=None, zero_prob=0.2):
    r = int(rng.integers(0, 4)) if r is None else r
    nd = int(rng.integers(1, 9))
    d = rng.random(nd)
    d[rng.random(nd) < zero_prob] = 0.0
    if d.sum() == 0:
        d[0] = 1.0
    return build_knots(d, r)


def quad_bspline(j, ks):
    lo, hi = ks.knots[j - 1], ks.knots[j + ks.degree]
    if hi == lo:
        return 0.0
    # integrate piecewise between distinct knots so quad never straddles a kink
    pts = np.unique(ks.knots[(ks.knots >= lo) & (ks.knots <= hi)])
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(lambda w: eval_bspline(w, j, ks), a, b, epsabs=1e-13, epsrel=1e-13)[0]
    return total


class TestKnotSequence:
    def test_rejects_unclamped(self):
        with pytest.raises(ValueError):
            KnotSequence(1, [0, 0.2, 0.5, 1, 1])

    def test_rejects_decreasing(self):
        with pytest.raises(ValueError):
            KnotSequence(0, [0, 0.6, 0.4, 1])

    def test_basis_size(self):
        ks = KnotSequence.equidistant(3, 8)
        assert ks.basis_size == 8
        assert ks.knots.size == 12


class TestBuildKnots:
    def test_single_interval_is_bernstein(self):
        ks = build_knots([1.0], 3)
        np.testing.assert_array_equal(ks.knots, [0, 0, 0, 0, 1, 1, 1, 1])

    def test_cumulative_sum(self):
        np.testing.assert_array_equal(build_knots([0.5, 0.5], 0).knots, [0, 0.5, 1])

    def test_zero_difference_gives_coincident_knots(self):
        ks = build_knots([0.2, 0.0, 0.8], 1)
        np.testing.assert_allclose(ks.internal_knots, [0.2, 0.2])

    def test_renormalizes(self):
        ks = build_knots([1.0, 1.0, 2.0], 2)
        np.testing.assert_allclose(ks.internal_knots, [0.25, 0.5])
        assert ks.knots[ks.basis_size] == 1.0

    def test_right_end_exact_after_roundoff(self):
        d = np.full(7, 0.1)
        ks = build_knots(d, 3)
        assert np.all(ks.knots[ks.basis_size :] == 1.0)
        assert np.all(np.diff(ks.knots) >= 0)

    @pytest.mark.parametrize("bad", [[], [-0.1, 1.1], [0.0, 0.0]])
    def test_errors(self, bad):
        with pytest.raises(ValueError):
            build_knots(bad, 2)


class TestEvalBspline:
    def test_degree0_indicator(self):
        ks = build_knots([0.5, 0.5], 0)
        assert eval_bspline(0.25, 1, ks) == 1.0
        assert eval_bspline(0.25, 2, ks) == 0.0
        assert eval_bspline(0.5, 1, ks) == 0.0  # half-open

    def test_hat_function_peak(self):
        ks = KnotSequence(1, [0, 0, 0.5, 1, 1])
        assert eval_bspline(0.5, 2, ks) == 1.0
        assert eval_bspline(0.25, 2, ks) == pytest.approx(0.5)

    def test_partition_of_unity_cubic(self):
        ks = KnotSequence.equidistant(3, 8)
        total = sum(eval_bspline(0.3, j, ks) for j in range(1, 9))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_right_boundary_closed(self):
        ks = KnotSequence.equidistant(2, 5)
        assert eval_bspline(1.0, 5, ks) == 1.0
        assert sum(eval_bspline(1.0, j, ks) for j in range(1, 6)) == 1.0

    def test_right_boundary_with_trailing_coincident_knots(self):
        ks = build_knots([0.6, 0.4, 0.0], 1)
        vals = [eval_bspline(1.0, j, ks) for j in range(1, ks.basis_size + 1)]
        assert sum(vals) == pytest.approx(1.0)
        assert vals[-1] == 0.0  # degenerate last spline

    def test_errors(self):
        ks = KnotSequence.equidistant(2, 4)
        with pytest.raises(IndexError):
            eval_bspline(0.5, 0, ks)
        with pytest.raises(IndexError):
            eval_bspline(0.5, 5, ks)
        with pytest.raises(ValueError):
            eval_bspline(1.2, 1, ks)

    def test_bernstein_basis(self):
        ks = build_knots([1.0], 3)
        w = 0.37
        for j in range(1, 5):
            expected = stats.binom.pmf(j - 1, 3, w)
            assert eval_bspline(w, j, ks) == pytest.approx(expected, abs=1e-14)

    def test_local_support(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            ks = random_knots(rng)
            for j in range(1, ks.basis_size + 1):
                lo, hi = ks.knots[j - 1], ks.knots[j + ks.degree]
                for w in rng.random(5):
                    if w < lo or w > hi:
                        assert eval_bspline(w, j, ks) == 0.0


class TestBasisMatrix:
    def test_matches_recursion(self):
        rng = np.random.default_rng(7)
        grid = np.r_[0.0, np.sort(rng.random(40)), 1.0]
        for _ in range(200):
            ks = random_knots(rng, zero_prob=0.35)
            grid_k = np.r_[grid, ks.knots]
            fast = basis_matrix(grid_k, ks)
            slow = np.array([[eval_bspline(w, j, ks) for j in range(1, ks.basis_size + 1)] for w in grid_k])
            np.testing.assert_allclose(fast, slow, atol=1e-13)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            basis_matrix([-0.1], KnotSequence.equidistant(1, 3))


@settings(max_examples=200, deadline=None)
@given(
    r=st.integers(0, 4),
    deltas=st.lists(st.floats(0, 1), min_size=1, max_size=10).filter(lambda d: sum(d) > 1e-6),
    omega=st.floats(0, 1),
)
def test_partition_of_unity_property(r, deltas, omega):
    ks = build_knots(deltas, r)
    total = sum(eval_bspline(omega, j, ks) for j in range(1, ks.basis_size + 1))
    assert abs(total - 1.0) < 1e-12
    assert abs(basis_matrix([omega], ks).sum() - 1.0) < 1e-12


class TestIntegral:
    def test_degree0_width(self):
        ks = build_knots([0.5, 0.5], 0)
        assert bspline_integral(1, ks) == 0.5

    def test_cubic_bernstein_quarter(self):
        ks = build_knots([1.0], 3)
        for j in range(1, 5):
            # quadrature oracle for C(3, j-1) w^(j-1) (1-w)^(4-j)
            q = integrate.quad(lambda w: stats.binom.pmf(j - 1, 3, w), 0, 1)[0]
            assert q == pytest.approx(0.25, abs=1e-12)
            assert bspline_integral(j, ks) == pytest.approx(0.25, abs=1e-15)

    def test_coincident_support_is_zero(self):
        ks = build_knots([0.3, 0, 0, 0, 0, 0.7], 3)
        # spline 5 sits on knots xi_4..xi_8, all equal to 0.3
        assert bspline_integral(5, ks) == 0.0

    def test_matches_quadrature(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            ks = random_knots(rng)
            for j in range(1, ks.basis_size + 1):
                assert abs(bspline_integral(j, ks) - quad_bspline(j, ks)) < 1e-8

    def test_index_error(self):
        with pytest.raises(IndexError):
            bspline_integral(9, KnotSequence.equidistant(1, 3))


class TestDensity:
    def test_bernstein_beta14(self):
        basis = BsplineDensityBasis.from_knots(build_knots([1.0], 3))
        # 4 (1 - w)^3 at w = 0
        assert eval_density(0.0, 1, basis) == pytest.approx(4.0, abs=1e-13)

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_bernstein_equals_beta(self, r):
        basis = BsplineDensityBasis.from_knots(build_knots([1.0], r))
        grid = np.linspace(0, 1, 101)
        for j in range(1, r + 2):
            np.testing.assert_allclose(eval_density(grid, j, basis), stats.beta.pdf(grid, j, r - j + 2), atol=1e-10)

    def test_integrates_to_one(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            basis = BsplineDensityBasis.from_knots(random_knots(rng))
            ks = basis.knot_sequence
            for j in range(1, ks.basis_size + 1):
                if basis.degenerate[j - 1]:
                    continue
                assert quad_bspline(j, ks) / basis.normalizers[j - 1] == pytest.approx(1.0, abs=1e-8)

    def test_degenerate_is_zero(self):
        basis = BsplineDensityBasis.from_knots(build_knots([0.3, 0, 0, 0, 0, 0.7], 3))
        assert basis.degenerate[4]
        np.testing.assert_array_equal(eval_density(np.linspace(0, 1, 11), 5, basis), 0.0)
        assert eval_density(0.3, 5, basis) == 0.0


class TestMixture:
    def test_single_weight_bernstein(self):
        basis = BsplineDensityBasis.from_knots(build_knots([1.0], 3))
        assert eval_mixture(0.0, [1, 0, 0, 0], basis) == pytest.approx(4.0)

    def test_uniform_weights_integrate_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            basis = BsplineDensityBasis.from_knots(random_knots(rng, zero_prob=0.0))
            k = basis.knot_sequence.basis_size
            pts = np.unique(basis.knot_sequence.knots)
            q = sum(
                integrate.quad(lambda w: eval_mixture(w, np.full(k, 1.0 / k), basis), a, b, epsabs=1e-12)[0]
                for a, b in zip(pts[:-1], pts[1:])
            )
            assert q == pytest.approx(1.0, abs=1e-8)

    def test_zero_weights(self):
        basis = BsplineDensityBasis.from_knots(KnotSequence.equidistant(3, 6))
        np.testing.assert_array_equal(eval_mixture(np.linspace(0, 1, 7), np.zeros(6), basis), 0.0)

    def test_redistribution_preserves_mass(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            basis = BsplineDensityBasis.from_knots(random_knots(rng, zero_prob=0.5))
            k = basis.knot_sequence.basis_size
            w = rng.dirichlet(np.ones(k)) * 0.8
            weff = effective_weights(w, basis)
            assert weff.sum() == pytest.approx(w.sum(), abs=1e-14)
            assert np.all(weff[basis.degenerate] == 0)
            ks = basis.knot_sequence
            pts = np.unique(ks.knots)
            total = sum(
                integrate.quad(lambda x: eval_mixture(x, w, basis), a, b, epsabs=1e-12)[0]
                for a, b in zip(pts[:-1], pts[1:])
            )
            assert total == pytest.approx(w.sum(), abs=1e-8)

    def test_all_mass_on_degenerate(self):
        basis = BsplineDensityBasis.from_knots(build_knots([0.3, 0, 0, 0, 0, 0.7], 3))
        w = np.zeros(basis.knot_sequence.basis_size)
        w[4] = 1.0
        weff = effective_weights(w, basis)
        assert weff.sum() == pytest.approx(1.0)
        assert weff[4] == 0

    def test_negative_weight_rejected(self):
        basis = BsplineDensityBasis.from_knots(KnotSequence.equidistant(1, 3))
        with pytest.raises(ValueError):
            eval_mixture(0.5, [1, -0.5, 0.5], basis)
