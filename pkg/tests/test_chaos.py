import math

import numpy as np
import pytest

from poisson_chaos.chaos import (
    charlier_block_oracle, charlier_polynomials, chaos_value, check_limit,
    clt_criterion, combine_fourth_moment, eval_I1, eval_I2, fourth_moment_chaos,
    levy_khinchine_cf, rep_block, single_clt_check, tail_mass,
)
from poisson_chaos.contractions import product_expand
from poisson_chaos.kernels import BlockKernel, GridKernel, OUSingleKernel
from poisson_chaos.point_process import (
    DiscreteControl, PointPattern, SupportError, Window, replication_seed,
    sample_pattern,
)

CTRL = DiscreteControl(values=(1.0,), weights=(1.0,))


def pattern_of(x_values, window):
    x = np.asarray(x_values, dtype=float)
    return PointPattern(np.ones_like(x), x, window, window.length, 0)


class TestEvalI1:
    def test_indicator_is_centered_count(self):
        g = GridKernel((0.0, 1.0), np.array([1.0]))
        w = Window(0.0, 1.0)
        pat = pattern_of([0.2, 0.5, 0.9], w)
        assert eval_I1(g, pat, CTRL) == pytest.approx(2.0)

    def test_empty_pattern_minus_compensator(self):
        g = GridKernel((0.0, 2.0), np.array([1.5]))
        w = Window(0.0, 2.0)
        pat = pattern_of([], w)
        assert eval_I1(g, pat, CTRL) == pytest.approx(-3.0)

    def test_support_leak_rejected(self):
        g = GridKernel((0.0, 3.0), np.array([1.0]))
        with pytest.raises(SupportError):
            eval_I1(g, pattern_of([0.5], Window(0.0, 1.0)), CTRL)

    def test_mc_variance_is_isometry(self):
        g = GridKernel((0.0, 1.0, 2.0, 3.0), np.array([1.0, -2.0, 0.5]))
        w = Window(0.0, 3.0)
        norm_sq = g.l2_norm_sq(CTRL, w)
        rng = np.random.default_rng(replication_seed(11, 0))
        vals = np.array([eval_I1(g, sample_pattern(CTRL, w, rng), CTRL)
                         for _ in range(40_000)])
        se = vals.var(ddof=1) * math.sqrt(2.0 / vals.size) * 1.5
        assert vals.var(ddof=1) == pytest.approx(norm_sq, abs=3 * se)
        assert abs(vals.mean()) < 4 * math.sqrt(norm_sq / vals.size)


class TestEvalI2:
    def test_product_of_disjoint_counts(self):
        # sym(1_{B1 x B2}) integrates to N^(B1) N^(B2) exactly per path
        f = GridKernel((0.0, 1.0, 2.0), np.array([[0.0, 0.5], [0.5, 0.0]]))
        w = Window(0.0, 2.0)
        for xs in ([0.2, 0.4, 1.5], [0.3], [], [1.1, 1.9, 0.7, 0.2]):
            pat = pattern_of(xs, w)
            n1 = np.count_nonzero(pat.x < 1.0) - 1.0
            n2 = np.count_nonzero(pat.x >= 1.0) - 1.0
            assert eval_I2(f, pat, CTRL) == pytest.approx(n1 * n2, abs=1e-12)

    def test_empty_pattern_compensator_only(self):
        f = GridKernel((0.0, 1.0), np.array([[1.0]]))
        w = Window(0.0, 1.0)
        assert eval_I2(f, pattern_of([], w), CTRL) == pytest.approx(1.0)

    def test_block_kernel_equals_charlier_closed_form(self, unit_jump):
        n = 7
        f = BlockKernel(n)
        w = Window(0.0, float(n))
        rng = np.random.default_rng(replication_seed(12, 0))
        for _ in range(200):
            pat = sample_pattern(unit_jump, w, rng)
            direct = eval_I2(f, pat, unit_jump)
            oracle = charlier_block_oracle(pat, n)
            assert direct == pytest.approx(oracle, abs=1e-12)

    def test_symmetrization_invariance_exact(self):
        vals = np.array([[0.3, 2.0, -1.0], [0.0, 1.0, 0.5], [1.0, -0.5, 0.2]])
        g = GridKernel((0.0, 1.0, 2.0, 3.0), vals)
        w = Window(0.0, 3.0)
        rng = np.random.default_rng(replication_seed(13, 0))
        for _ in range(50):
            pat = sample_pattern(CTRL, w, rng)
            assert eval_I2(g, pat, CTRL) == pytest.approx(
                eval_I2(g.symmetrize(), pat, CTRL), abs=1e-12)

    def test_mc_variance_and_orthogonality(self):
        f = BlockKernel(4)
        g = GridKernel((0.0, 1.0, 2.0, 3.0, 4.0), np.array([1.0, -1.0, 0.5, 0.0]))
        w = Window(0.0, 4.0)
        rng = np.random.default_rng(replication_seed(14, 0))
        i1s, i2s = [], []
        for _ in range(100_000):
            pat = sample_pattern(CTRL, w, rng)
            i1s.append(eval_I1(g, pat, CTRL))
            i2s.append(eval_I2(f, pat, CTRL))
        i1s, i2s = np.array(i1s), np.array(i2s)
        r = i1s.size
        # isometry: Var I2 = 2 ||f||^2 within 4 se; mean 0 within 4 se
        target = 2.0 * f.l2_norm_sq(CTRL, w)
        se_var = i2s.var(ddof=1) * math.sqrt(2.0 / r) * 2.0  # heavy-tail slack
        assert i2s.var(ddof=1) == pytest.approx(target, abs=4 * se_var)
        assert abs(i2s.mean()) < 4 * i2s.std(ddof=1) / math.sqrt(r)
        # orthogonality of chaoses: empirical covariance compatible with 0
        cov = np.mean(i1s * i2s)
        se_cov = np.std(i1s * i2s, ddof=1) / math.sqrt(r)
        assert abs(cov) < 4 * se_cov


class TestCharlier:
    def test_all_counts_one(self, unit_jump):
        n = 9
        pat = pattern_of(np.arange(n) + 0.5, Window(0.0, float(n)))
        assert charlier_block_oracle(pat, n) == pytest.approx(-n / math.sqrt(2 * n))

    def test_empty_single_block(self, unit_jump):
        pat = pattern_of([], Window(0.0, 1.0))
        assert charlier_block_oracle(pat, 1) == pytest.approx(2 ** -0.5)

    def test_polynomial_recurrence_matches_brute_force(self):
        # orthogonality E[C_j C_k] = delta_jk k! m^k for a Poisson count
        rng = np.random.default_rng(replication_seed(15, 0))
        m = 1.0
        counts = rng.poisson(m, size=400_000)
        polys = charlier_polynomials(counts - m, m, 4)
        for k in (1, 2, 3, 4):
            mean = polys[k].mean()
            se = polys[k].std(ddof=1) / math.sqrt(counts.size)
            assert abs(mean) < 5 * se
            second = np.mean(polys[k] ** 2)
            se2 = np.std(polys[k] ** 2, ddof=1) / math.sqrt(counts.size)
            assert second == pytest.approx(math.factorial(k) * m ** k, abs=5 * se2)


class TestPathwiseProductFormula:
    def test_p1q1_exact_on_aligned_grids(self):
        edges = (0.0, 1.0, 2.0, 3.0)
        g = GridKernel(edges, np.array([1.0, -0.5, 2.0]))
        h = GridKernel(edges, np.array([0.3, 1.0, -1.0]))
        w = Window(0.0, 3.0)
        exp = product_expand(1, 1, g, h, CTRL, w)
        by_order = {t.order: t for t in exp.terms}
        rng = np.random.default_rng(replication_seed(16, 0))
        for _ in range(100):
            pat = sample_pattern(CTRL, w, rng)
            lhs = eval_I1(g, pat, CTRL) * eval_I1(h, pat, CTRL)
            rhs = (eval_I2(by_order[2].kernel, pat, CTRL)
                   + eval_I1(by_order[1].kernel, pat, CTRL)
                   + by_order[0].kernel)
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_p2q2_exact_via_block_counts(self):
        # on one unit-mass block the expansion closes exactly with the
        # orthogonal-polynomial values for orders 3 and 4
        w = Window(0.0, 1.0)
        f = GridKernel((0.0, 1.0), np.array([[1.0]]))
        exp = product_expand(2, 2, f, f, CTRL, w)
        rng = np.random.default_rng(replication_seed(17, 0))
        for _ in range(200):
            pat = sample_pattern(CTRL, w, rng)
            count = np.array([len(pat)], dtype=float)
            c = charlier_polynomials(count - 1.0, 1.0, 4)
            i2 = eval_I2(f, pat, CTRL)
            assert i2 == pytest.approx(c[2][0], abs=1e-12)
            lhs = i2 ** 2
            # I4 + 4 I3 + 4 I2(1_{B^2}) + 2 I2(f) + 4 I1(1_B) + 2||f||^2
            rhs = (c[4][0] + 4.0 * c[3][0] + 4.0 * c[2][0] + 2.0 * c[2][0]
                   + 4.0 * c[1][0] + 2.0 * f.l2_norm_sq(CTRL, w))
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_p2q2_coefficient_two_fails(self):
        # the face-value coefficient 2 on the order-1 term breaks the identity
        w = Window(0.0, 1.0)
        f = GridKernel((0.0, 1.0), np.array([[1.0]]))
        rng = np.random.default_rng(replication_seed(18, 0))
        bad = 0
        for _ in range(50):
            pat = sample_pattern(CTRL, w, rng)
            count = np.array([len(pat)], dtype=float)
            c = charlier_polynomials(count - 1.0, 1.0, 4)
            lhs = eval_I2(f, pat, CTRL) ** 2
            rhs = (c[4][0] + 4.0 * c[3][0] + 6.0 * c[2][0] + 2.0 * c[1][0] + 1.0)
            if abs(lhs - rhs) > 1e-9:
                bad += 1
        assert bad > 0


class TestFourthMoment:
    def test_block_value(self, unit_jump):
        for n in (1, 10, 50):
            f = BlockKernel(n)
            got = fourth_moment_chaos(f, unit_jump, Window(0.0, float(n)))
            assert got == pytest.approx(3.0 + 37.0 / n, rel=1e-13)

    def test_zero_kernel(self):
        z = GridKernel((0.0, 1.0), np.zeros((1, 1)))
        assert fourth_moment_chaos(z, CTRL, Window(0.0, 1.0)) == 0.0

    def test_degree_four_homogeneity(self, unit_jump):
        f = BlockKernel(5)
        w = Window(0.0, 5.0)
        c = 1.7
        base_parts = (2.0 * f.l2_norm_sq(unit_jump, w),
                      *__import__("poisson_chaos.contractions", fromlist=["contraction_norms"])
                      .contraction_norms(f, unit_jump, w))
        scaled = fourth_moment_chaos(f.scaled(c), unit_jump, w)
        want = (3.0 * (c ** 2 * base_parts[0]) ** 2
                + 48.0 * c ** 4 * base_parts[1] + 96.0 * c ** 4 * base_parts[3]
                + 4.0 * c ** 4 * base_parts[2])
        assert scaled == pytest.approx(want, rel=1e-12)

    def test_identity_recomputed_two_ways(self, unit_jump):
        from poisson_chaos.contractions import contraction_norms
        f = BlockKernel(8)
        w = Window(0.0, 8.0)
        packaged = fourth_moment_chaos(f, unit_jump, w)
        n11, n21, n10 = contraction_norms(f, unit_jump, w)
        raw = combine_fourth_moment(2.0 * f.l2_norm_sq(unit_jump, w), n11, n21, n10)
        assert packaged == pytest.approx(raw, rel=1e-9)

    def test_mc_exact_second_moment_is_three_plus_forty_over_n(self):
        # the exact E[(F^2 - 2 I2(f *_2^0 f))^2] is 3 + 40/n; the stated
        # combination gives 3 + 37/n and both sit inside the stated MC band
        n, reps = 50, 200_000
        rng = np.random.default_rng(replication_seed(19, 0))
        vals = np.array([rep_block(n, rng) for _ in range(reps)])
        g2 = np.mean(vals[:, 1] ** 2)
        se = np.std(vals[:, 1] ** 2, ddof=1) / math.sqrt(reps)
        assert g2 == pytest.approx(3.0 + 40.0 / n, abs=4 * se)


class TestCriterionEngine:
    def test_block_family_passes(self, unit_jump):
        ns = [10, 30, 100, 300, 1000]
        verdict = clt_criterion([BlockKernel(n) for n in ns], unit_jump,
                                [Window(0.0, float(n)) for n in ns], index=ns)
        assert verdict.passed
        for check in verdict.checks:
            if check.target == 0.0 and check.slope is not None:
                assert -1.2 < check.slope < -0.8

    def test_fixed_support_family_fails_on_fourth_power(self):
        base = GridKernel((0.0, 1.0), np.array([[2.0 ** -0.5]]))
        ns = [10, 100, 1000]
        verdict = clt_criterion([base] * 3, CTRL, Window(0.0, 1.0), index=ns)
        assert not verdict.passed
        failing = {c.name for c in verdict.checks if not c.passed}
        assert "fourth_power" in failing

    def test_report_fields_consistent(self, unit_jump):
        verdict = clt_criterion([BlockKernel(4)], unit_jump, Window(0.0, 4.0))
        rep = verdict.reports[0]
        assert rep.norm2_doubled == pytest.approx(1.0)
        assert rep.fourth_moment_chaos == pytest.approx(
            combine_fourth_moment(rep.norm2_doubled, rep.n11, rep.n21, rep.n10), rel=1e-12)

    def test_single_check_unit_blocks(self, unit_jump):
        # g_n = n^{-1/2} sum_{j<=n} 1_{B_j}: ||g||^2 = 1 exact, cube integral n^{-1/2}
        def make(n):
            return GridKernel(tuple(float(j) for j in range(n + 1)),
                              np.full(n, n ** -0.5))
        ns = [1, 4, 16, 64, 256, 1024]
        verdict = single_clt_check([make(n) for n in ns], unit_jump,
                                   [Window(0.0, float(n)) for n in ns], index=ns)
        assert verdict.passed

    def test_single_check_constant_fails(self):
        g = GridKernel((0.0, 1.0), np.array([1.0]))
        verdict = single_clt_check([g] * 4, CTRL, Window(0.0, 1.0), index=[1, 2, 3, 4])
        assert not verdict.passed

    def test_single_check_ou_rescaled_passes(self, symmetric_jump):
        ts = [25.0 * 4 ** k for k in range(6)]   # 25 .. 25600
        kerns = [OUSingleKernel(1.0, t).scaled(1.0 / math.sqrt(2.0)) for t in ts]
        wins = [Window(-14.0, t) for t in ts]
        verdict = single_clt_check(kerns, symmetric_jump, wins, index=ts)
        assert verdict.passed


class TestCharacteristicFunction:
    def test_theta_zero(self):
        g = GridKernel((0.0, 1.0), np.array([1.0]))
        assert levy_khinchine_cf(g, 0.0, CTRL, Window(0.0, 1.0)) == 1.0 + 0.0j

    def test_indicator_centered_poisson(self):
        # g = 1_B, mu(B) = m: exp(m (e^{i theta} - 1 - i theta))
        m = 2.5
        g = GridKernel((0.0, m), np.array([1.0]))
        w = Window(0.0, m)
        for theta in (-2.0, 0.7, 3.1):
            want = np.exp(m * (np.exp(1j * theta) - 1.0 - 1j * theta))
            assert levy_khinchine_cf(g, theta, CTRL, w) == pytest.approx(want, rel=1e-12)

    def test_quadrature_path_matches_grid_path(self):
        # non-grid kernels integrate the exponent by quadrature; compare with
        # the exact cell-sum path on a kernel representable both ways
        from poisson_chaos.kernels import Kernel

        g_grid = GridKernel((0.0, 1.0, 2.0), np.array([0.8, -0.3]))

        class FnKernel(Kernel):
            arity = 1

            def __call__(self, u, x):
                return g_grid(u, x)

        w = Window(0.0, 2.0)
        for theta in (0.5, -1.7):
            exact = levy_khinchine_cf(g_grid, theta, CTRL, w)
            quad = levy_khinchine_cf(FnKernel(), theta, CTRL, w)
            assert quad == pytest.approx(exact, rel=1e-8)

    def test_empirical_cf_matches(self):
        g = GridKernel((0.0, 1.0, 2.0), np.array([1.0, -0.7]))
        w = Window(0.0, 2.0)
        rng = np.random.default_rng(replication_seed(20, 0))
        reps = 100_000
        vals = np.array([eval_I1(g, sample_pattern(CTRL, w, rng), CTRL)
                         for _ in range(reps)])
        thetas = np.linspace(-3.0, 3.0, 13)
        for theta in thetas:
            emp = np.mean(np.exp(1j * theta * vals))
            want = levy_khinchine_cf(g, float(theta), CTRL, w)
            assert abs(emp - want) < 4.0 / math.sqrt(reps)


class TestHelpers:
    def test_check_limit_rules(self):
        idx = [1, 2, 4, 8]
        ok = check_limit("x", idx, [1.0 / i for i in idx], 0.0, rel_tol=0.3)
        assert ok.passed
        stuck = check_limit("x", idx, [1.0, 1.0, 1.0, 1.0], 0.0)
        assert not stuck.passed
        conv = check_limit("x", idx, [1.3, 1.1, 1.05, 1.01], 1.0)
        assert conv.passed

    def test_chaos_value_total(self):
        g = GridKernel((0.0, 1.0), np.array([1.0]))
        f = GridKernel((0.0, 1.0), np.array([[1.0]]))
        w = Window(0.0, 1.0)
        pat = pattern_of([0.5, 0.6], w)
        cv = chaos_value(2.0, g, f, pat, CTRL)
        assert cv.total == pytest.approx(cv.c + cv.i1 + cv.i2)

    def test_tail_mass_monotone(self):
        rng = np.random.default_rng(0)
        s = rng.normal(size=10_000)
        tm = tail_mass(s, [1.0, 10.0, 100.0])
        assert tm[1.0] >= tm[10.0] >= tm[100.0]
