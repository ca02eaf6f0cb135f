import math

import pytest

from freewalk.errors import DivergenceError, GroupSpecError
from freewalk.green import GreenEvaluator, sphere_sizes, spectral_radius
from freewalk.walks import return_probabilities

from oracles import F2_RADIUS, f2_first_passage, f2_green, z2z2z2_radius


@pytest.fixture(scope="module")
def ev(f2_srw):
    return GreenEvaluator(f2_srw)


class TestSpectralRadius:
    def test_f2_radius(self, f2_srw):
        seq = return_probabilities(f2_srw, 4000, method="radial")
        est = spectral_radius(seq)
        assert abs(est.rho_hat - 1.0 / F2_RADIUS) < 1e-3
        assert est.rho_lower <= est.rho_hat
        assert est.exceeds_one  # R_hat > 1: the group is non-amenable

    def test_z2cubed_radius(self, z2cubed_srw):
        seq = return_probabilities(z2cubed_srw, 4000, method="radial")
        est = spectral_radius(seq)
        assert abs(est.rho_hat - 1.0 / z2z2z2_radius()) < 2e-3

    def test_lower_bound_is_monotone(self, f2_srw):
        short = spectral_radius(return_probabilities(f2_srw, 400, method="radial"))
        long = spectral_radius(return_probabilities(f2_srw, 2000, method="radial"))
        assert long.rho_lower >= short.rho_lower - 1e-12


class TestClosedForms:
    def test_green_at_one(self, ev):
        g = ev.green((), (), 1.0)
        assert math.isclose(g.value, 1.5, rel_tol=1e-9)
        assert math.isclose(g.value, f2_green(1.0), rel_tol=1e-9)

    def test_first_passage_at_one(self, ev):
        a = ((0, (1,)),)
        fp = ev.first_passage((), a, 1.0)
        assert math.isclose(fp.value, 1.0 / 3.0, rel_tol=1e-9)
        assert math.isclose(fp.value, f2_first_passage(1.0), rel_tol=1e-9)

    def test_green_off_diagonal(self, ev):
        a = ((0, (1,)),)
        g = ev.green((), a, 1.0)
        assert math.isclose(g.value, 0.5, rel_tol=1e-9)

    def test_factored_crosses_cut_vertex(self, ev, f2):
        # F(a^-1, b | 1) factors through e: (1/3)^2
        ainv = ((0, (-1,)),)
        b = ((1, (1,)),)
        g = ev.green(ainv, b, 1.0, method="factored")
        direct = ev.green(ainv, b, 1.0, method="series")
        assert math.isclose(g.value, direct.value, rel_tol=1e-6)
        fp1 = ev.first_passage(ainv, (), 1.0)
        fp2 = ev.first_passage((), b, 1.0)
        assert math.isclose(fp1.value * fp2.value, 1.0 / 9.0, rel_tol=1e-8)

    def test_closed_form_across_grid(self, ev):
        for frac in (0.3, 0.6, 0.9, 0.99):
            r = frac * ev.R_hat
            assert math.isclose(
                ev.green((), (), r).value, f2_green(r), rel_tol=1e-6
            )

    def test_divergence_beyond_radius(self, ev):
        with pytest.raises(DivergenceError):
            ev.green((), (), ev.R_hat * 1.1)


class TestDerivative:
    def test_series_vs_identity(self, ev):
        for frac in (0.5, 0.8, 0.9):
            r = frac * ev.R_hat
            series = ev.green_derivative((), (), r, mode="series").value
            ident = ev.green_derivative((), (), r, mode="identity").value
            assert abs(series - ident) / series < 1e-3

    def test_derivative_positive_and_increasing(self, ev):
        vals = [
            ev.green_derivative((), (), f * ev.R_hat, mode="series").value
            for f in (0.3, 0.6, 0.9)
        ]
        assert all(v > 0 for v in vals)
        assert vals == sorted(vals)


class TestISums:
    def test_i1_matches_closed_form(self, ev):
        # I1 = sum over gamma of G(e,gamma)^2; in the tree every gamma at
        # word distance m contributes (G f^m)^2 and |S_m| = 4*3^(m-1)
        r = 0.9 * ev.R_hat
        f = f2_first_passage(r)
        g = f2_green(r)
        expected = g * g * (1 + sum(4 * 3 ** (m - 1) * f ** (2 * m) for m in range(1, 400)))
        s = ev.i_sums(r, sphere_stop_tol=1e-9)
        assert math.isclose(s.i1, expected, rel_tol=1e-4)

    def test_i2_matches_derivative_composition(self, ev):
        # I2 = sum_gamma G(e,gamma) * d/dr(r G(gamma,e)) via the identity
        # applied twice; evaluated sphere by sphere in the tree
        r = 0.9 * ev.R_hat
        f = f2_first_passage(r)
        g = f2_green(r)
        eps = 1e-7
        def d_rg(m):
            lo, hi = r - eps, r + eps
            return (
                hi * f2_green(hi) * f2_first_passage(hi) ** m
                - lo * f2_green(lo) * f2_first_passage(lo) ** m
            ) / (2 * eps)
        expected = g * d_rg(0)
        for m in range(1, 400):
            expected += 4 * 3 ** (m - 1) * (g * f**m) * d_rg(m)
        s = ev.i_sums(r, sphere_stop_tol=1e-9)
        assert math.isclose(s.i2, expected, rel_tol=1e-4)

    def test_parabolic_sums_finite(self, ev):
        res = ev.parabolic_i_sums(0, ev.R_hat, order=1)
        assert math.isfinite(res)

    def test_requires_single_syllable_support(self, f2):
        from fractions import Fraction
        from freewalk.walks import StepMeasure

        ab = ((0, (1,)), (1, (1,)))
        ba = ((1, (-1,)), (0, (-1,)))
        a = ((0, (1,)),)
        ai = ((0, (-1,)),)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # reach warning is expected here
            mu = StepMeasure(
                f2,
                {ab: Fraction(1, 4), ba: Fraction(1, 4), a: Fraction(1, 4), ai: Fraction(1, 4)},
            )
        ev2 = GreenEvaluator(mu, horizon=40, ball_bound=8)
        with pytest.raises(GroupSpecError):
            ev2.i_sums(1.0)


class TestSphereSizes:
    def test_f2_word_spheres(self, f2):
        sizes = sphere_sizes(f2, 20)
        assert sizes[0] == 1
        for n in range(1, 21):
            assert sizes[n] == 4 * 3 ** (n - 1)

    def test_z2z3_spheres_match_direct(self, z2z3):
        sizes = sphere_sizes(z2z3, 15)
        for n in range(8):
            assert sizes[n] == len(z2z3.sphere(n, metric="word"))
