import math
from fractions import Fraction

import pytest

from freewalk.green import GreenEvaluator
from freewalk.parabolic import (
    degeneracy_test,
    first_return_kernel,
    induced_green,
    kernel_matrix,
    kernel_spectral_radius,
)

from oracles import F2_RADIUS, f2_first_passage


@pytest.fixture(scope="module")
def ev(f2_srw):
    return GreenEvaluator(f2_srw)


class TestExactKernel:
    def test_tree_row_exact_entries(self, f2_srw):
        kern = first_return_kernel(f2_srw, 0, Fraction(1), max_len=20)
        assert kern.row[(1,)] == Fraction(1, 4)
        assert kern.row[(-1,)] == Fraction(1, 4)
        assert set(kern.row) == {(1,), (-1,), (0,)}

    def test_identity_entry_tail_certified(self, f2_srw):
        # the only open entry is at e; its exact limit is
        # 2 * (1/4) * F(b,e|1) = 1/6.  Per-length excursion weights are
        # Catalan numbers times (3/16)^m, so consecutive length increments
        # shrink by strictly less than 3/4; the geometric bound
        # tail(L) <= 4 * (row(L+2) - row(L)) is then certified by exact
        # increments, and a long vectorized run lands inside it.
        rows = {
            L: first_return_kernel(f2_srw, 0, Fraction(1), max_len=L).row[(0,)]
            for L in (16, 18, 20, 22)
        }
        incs = [rows[18] - rows[16], rows[20] - rows[18], rows[22] - rows[20]]
        assert all(i > 0 for i in incs)
        for a, b in zip(incs, incs[1:]):
            assert b / a < Fraction(3, 4)
        gap20 = Fraction(1, 6) - rows[20]
        assert gap20 <= 4 * (rows[22] - rows[20])
        k_long = first_return_kernel(
            f2_srw, 0, 1.0, max_len=140, ball_radius=11, exact=False
        )
        assert abs(1.0 / 6.0 - k_long.row[(0,)]) < 1e-6

    def test_prune_is_lossless(self, f2_srw):
        pruned = first_return_kernel(f2_srw, 0, Fraction(1), max_len=14)
        wide = first_return_kernel(
            f2_srw, 0, Fraction(1), max_len=14, ball_radius=14
        )
        assert pruned.row == wide.row

    def test_symmetric_row(self, z2z3_srw):
        kern = first_return_kernel(z2z3_srw, 1, Fraction(1), max_len=16)
        # row from e over Z/3 payloads: entries at 1 and 2 agree by symmetry
        assert kern.row[1] == kern.row[2]


class TestKernelMatrix:
    def test_translation_invariance(self, f2_srw, f2):
        kern = first_return_kernel(f2_srw, 0, Fraction(1), max_len=12)
        states, mat = kernel_matrix(kern, f2, factor_ball=5)
        idx = {p: i for i, p in enumerate(states)}
        # M[(1,), (2,)] should equal the row value at (1,)
        assert mat[idx[(1,)], idx[(2,)]] == float(kern.row[(1,)])
        assert mat[idx[(3,)], idx[(3,)]] == float(kern.row[(0,)])

    def test_finite_factor_matrix_shape(self, z2z3_srw, z2z3):
        kern = first_return_kernel(z2z3_srw, 1, Fraction(1), max_len=12)
        states, mat = kernel_matrix(kern, z2z3, factor_ball=10)
        assert mat.shape == (3, 3)


class TestSpectralRadius:
    def test_f2_kernel_radius_below_one(self, f2_srw, f2, ev):
        kern = first_return_kernel(f2_srw, 0, ev.R_hat, 40, 9, exact=False)
        est = kernel_spectral_radius(kern, f2, factor_ball=30)
        assert est.converged
        assert 0.8 < est.rho < 0.95
        # the full kernel mass at R is (R/2)(1 + f(R)) with f(R) = 1/sqrt(3);
        # evaluate at the exact radius since R_hat may overshoot by ~1e-6
        full = (F2_RADIUS / 2.0) * (1.0 + f2_first_passage(F2_RADIUS))
        assert est.rho < full < 1.0

    def test_radius_grows_with_truncation(self, f2_srw, f2, ev):
        rhos = []
        for L, B in ((10, 5), (20, 7), (30, 9)):
            kern = first_return_kernel(f2_srw, 0, ev.R_hat, L, B, exact=False)
            rhos.append(kernel_spectral_radius(kern, f2, factor_ball=20).rho)
        assert rhos == sorted(rhos)


class TestInducedGreen:
    def test_matches_green_at_one(self, f2_srw, f2, ev):
        kern = first_return_kernel(f2_srw, 0, 1.0, max_len=60, ball_radius=10, exact=False)
        for payload, target in (((0,), ()), ((1,), ((0, (1,)),)), ((2,), ((0, (2,)),))):
            got = induced_green(kern, f2, (), target, 1.0, factor_ball=80)
            want = ev.green((), target, 1.0).value
            assert abs(got - want) / want < 1e-2

    def test_matches_green_below_radius(self, f2_srw, f2, ev):
        r = 0.9 * ev.R_hat
        kern = first_return_kernel(f2_srw, 0, r, max_len=60, ball_radius=10, exact=False)
        a2 = ((0, (2,)),)
        got = induced_green(kern, f2, (), a2, 1.0, factor_ball=80)
        want = ev.green((), a2, r).value
        assert abs(got - want) / want < 1e-2


class TestDegeneracy:
    def test_f2_verdict(self, f2_srw, ev):
        report = degeneracy_test(f2_srw, ev.R_hat)
        assert report.verdict == "non-degenerate"
        for v in report.per_factor:
            assert v.stabilized
            assert v.rho_hat < 0.95
            assert v.rho_extrapolated < 1.0

    def test_finite_factor_verdict(self, z2z3_srw, z2z3_srw_ev=None):
        ev23 = GreenEvaluator(z2z3_srw)
        report = degeneracy_test(
            z2z3_srw, ev23.R_hat, ladder=((30, 8), (45, 9), (60, 10))
        )
        assert report.verdict == "non-degenerate"

    def test_short_ladder_is_inconclusive(self, f2_srw, ev):
        report = degeneracy_test(
            f2_srw, ev.R_hat, ladder=((4, 4), (6, 5)), stab_tol=1e-4
        )
        assert report.verdict == "inconclusive"
