"""Singular-window kernel: probe quadrature, envelopes, operator families."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from boselab.grid import Grid1D, GridError
from boselab import collapse as C


class TestProbe:
    def test_theta_constants(self):
        probe = C.make_probe(0.25)
        assert probe.theta_l1 == pytest.approx(7.719684800738541, rel=1e-12)
        assert probe.theta_mass == pytest.approx(1.206900322437876, rel=1e-12)
        # mass oracle: the window transform at zero frequency is the
        # plain integral of the bump
        oracle = 2.0 * quad(lambda t: math.exp(1.0 - 1.0 / (1.0 - t * t)),
                            0.0, 1.0, limit=200)[0]
        assert probe.theta_mass == pytest.approx(oracle, rel=1e-12)

    def test_window_transform_table_vs_quadrature(self):
        probe = C.make_probe(0.25)
        xi = np.array([0.0, 0.5, 1.7, 5.0, 20.0, 100.0])
        diff = np.abs(probe.theta_hat(xi) - C.theta_hat_quadrature(xi, order=400))
        assert np.max(diff) < 1e-12

    def test_refined_doubles_quadrature_orders(self):
        probe = C.make_probe(0.1)
        fine = probe.refined()
        assert fine.epsilon == probe.epsilon
        assert fine.gl_order == 2 * probe.gl_order
        assert fine.window_order == 2 * probe.window_order

    def test_validation(self):
        with pytest.raises(GridError, match="nonnegative"):
            C.make_probe(-0.1)
        with pytest.raises(GridError, match="positive integer"):
            C.make_probe(0.1, refine=0)


class TestKernelH:
    def test_eps_zero_reduces_to_pure_singularity(self):
        # at epsilon = 0 both brackets collapse and H = |u|^{-1} int|theta^|
        p0 = C.make_probe(0.0)
        vals = [C.kernel_H(p0, e, x, 1.0)
                for (e, x) in [(0.0, 0.0), (11.0, -3.0), (-5.0, 40.0)]]
        assert max(vals) - min(vals) < 1e-8
        assert vals[0] == pytest.approx(p0.theta_l1, rel=1e-8)
        assert C.kernel_H(p0, 2.0, 1.0, -3.0) * 3.0 == pytest.approx(
            p0.theta_l1, rel=1e-8)

    def test_rejects_u_zero(self):
        with pytest.raises(GridError, match="undefined at u = 0"):
            C.kernel_H(C.make_probe(0.1), 0.0, 0.0, 0.0)

    @pytest.mark.parametrize("eps,expected", [
        (0.05, -0.8000261833064866),
        (0.10, -0.6003410545107978),
        (0.15, -0.4030238056484697),
    ])
    def test_small_u_exponent(self, eps, expected):
        # H ~ |u|^{4 eps - 1} near u = 0
        probe = C.make_probe(eps)
        us = np.array([1e-4, 1e-5])
        hv = C.kernel_H(probe, 0.0, 0.0, us)
        slope = np.log(hv[1] / hv[0]) / np.log(us[1] / us[0])
        assert slope == pytest.approx(expected, rel=1e-8)
        assert abs(slope - (4.0 * eps - 1.0)) < 0.005

    def test_envelope_is_order_one(self):
        # |u| <sigma>^{2e} <sigma+2u>^{2e} H stays bounded over random
        # feature positions
        probe = C.make_probe(0.25)
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(60):
            eta = rng.uniform(-30, 30)
            xi1 = rng.uniform(-20, 20)
            u = rng.uniform(-8, 8)
            if abs(u) < 1e-3:
                continue
            sig = eta / u - 2.0 * xi1
            env = (C.kernel_H(probe, eta, xi1, u) * abs(u)
                   * (1.0 + sig ** 2) ** 0.25
                   * (1.0 + (sig + 2.0 * u) ** 2) ** 0.25)
            worst = max(worst, env)
        assert worst == pytest.approx(10.195146198280877, rel=1e-8)
        assert worst < 20.0

    def test_monotone_in_epsilon(self):
        for (eta, xi1, u) in [(0.0, 0.0, 0.3), (7.0, -2.0, 1.7)]:
            hs = [C.kernel_H(C.make_probe(e), eta, xi1, u)
                  for e in (0.0, 0.05, 0.15, 0.25)]
            assert all(a >= b - 1e-12 for a, b in zip(hs, hs[1:]))


class TestIntegralI:
    def test_reference_value_and_parts(self):
        probe = C.make_probe(0.25)
        res = C.integral_I(probe, 0.0, 0.0)
        assert sorted(res) == ["I1", "I2", "n_u_nodes", "tail_estimate",
                               "value"]
        assert res["value"] == pytest.approx(20.55468845200618, rel=1e-10)
        assert res["value"] == pytest.approx(res["I1"] + res["I2"],
                                             rel=1e-14)
        assert 0.0 < res["tail_estimate"] < 0.01 * res["value"]

    def test_node_doubling_stable(self):
        probe = C.make_probe(0.25)
        coarse = C.integral_I(probe, 0.0, 0.0)["value"]
        fine = C.integral_I(probe.refined(), 0.0, 0.0)["value"]
        assert abs(fine - coarse) / coarse < 1e-3

    def test_even_in_xi1(self):
        probe = C.make_probe(0.25)
        a = C.integral_I(probe, 7.0, 3.0)["value"]
        b = C.integral_I(probe, 7.0, -3.0)["value"]
        assert a == pytest.approx(b, rel=1e-12)

    def test_grows_as_epsilon_shrinks(self):
        v25 = C.integral_I(C.make_probe(0.25), 0.0, 0.0)["value"]
        v10 = C.integral_I(C.make_probe(0.1), 0.0, 0.0)["value"]
        assert v10 == pytest.approx(64.30081491881703, rel=1e-10)
        assert v10 > 2.0 * v25


class TestLemmaF:
    TABLE = {0.0: 14.599371490353404, 1.0: 13.046887994358096,
             10.0: 6.569658764187402, 1000.0: 1.1146538109591875}

    def test_reference_table_and_symmetry(self):
        probe = C.make_probe(0.1)
        ref = C.lemma_F_reference(probe)
        assert ref == pytest.approx(17.902340004081555, rel=1e-10)
        for e, expected in self.TABLE.items():
            v = C.lemma_F(probe, e)
            assert v == pytest.approx(expected, rel=1e-10)
            assert C.lemma_F(probe, -e) == pytest.approx(v, rel=1e-13)
            assert v <= ref

    def test_decay_rate(self):
        # F(e) ~ |e|^{-4 eps} for large |e|
        slope = (math.log(self.TABLE[10.0] / self.TABLE[1000.0])
                 / math.log(10.0 / 1000.0))
        assert abs(slope + 0.4) < 0.05
        comp = [v * max(1.0, abs(e)) ** 0.4 for e, v in self.TABLE.items()]
        assert max(comp) / min(comp) == pytest.approx(1.354044916844532,
                                                      rel=1e-8)
        assert max(comp) / min(comp) < 5.0

    def test_against_adaptive_quadrature(self):
        probe = C.make_probe(0.1)

        def f_int(u, e, eps):
            return (abs(u - e) ** (-8 * eps)
                    * (1 + u * u) ** (-0.5 * (1 - 4 * eps)))

        pieces = [(-4e6, -10.0), (-10.0, 0.0), (0.0, 10.0 - 1e-9),
                  (10.0 + 1e-9, 30.0), (30.0, 4e6)]
        oracle = sum(quad(f_int, a, b, args=(10.0, 0.1), limit=400)[0]
                     for a, b in pieces)
        oracle += 2.0 * (4e6) ** (-0.4) / 0.4  # analytic tail beyond 4e6
        assert C.lemma_F(probe, 10.0) == pytest.approx(oracle, rel=1e-6)

    def test_node_doubling_stable(self):
        probe = C.make_probe(0.1)
        coarse = C.lemma_F(probe, 10.0)
        fine = C.lemma_F(probe.refined(), 10.0)
        assert abs(fine - coarse) / coarse < 1e-6

    def test_domain_restriction(self):
        for eps in (0.0, 0.125, 0.25):
            with pytest.raises(GridError, match="1/8"):
                C.lemma_F(C.make_probe(eps), 1.0)


class TestOptimalityScan:
    DELTAS = [1e-2, 1e-3, 1e-4, 1e-5]

    def test_linear_fit_recovers_exact_line(self):
        fit = C.linear_fit(np.array([0.0, 1.0, 2.0, 3.0]),
                           np.array([1.0, 4.0, 7.0, 10.0]))
        assert fit["slope"] == pytest.approx(3.0, abs=1e-12)
        assert fit["intercept"] == pytest.approx(1.0, abs=1e-12)
        assert fit["r_squared"] == pytest.approx(1.0, abs=1e-12)

    def test_epsilon_zero_mode_is_exactly_logarithmic(self):
        res = C.optimality_scan(C.make_probe(0.0), "epsilon_zero",
                                self.DELTAS)
        assert res["slope"] == pytest.approx(2.0, abs=1e-9)
        assert res["r_squared"] == pytest.approx(1.0, abs=1e-12)
        # int_{d<|u|<1} du/|u| = 2 ln(1/d)
        expected = sorted((2.0 * math.log(1.0 / d) for d in self.DELTAS),
                          reverse=True)
        assert res["values"] == pytest.approx(expected, rel=1e-12)

    def test_infinite_window_mode_diverges_logarithmically(self):
        res = C.optimality_scan(C.make_probe(0.25), "T_infinite",
                                self.DELTAS)
        assert res["slope"] == pytest.approx(1.999983662122224, rel=1e-8)
        assert res["slope"] > 0.0
        assert res["r_squared"] > 0.9999

    def test_control_mode_stays_bounded(self):
        res = C.optimality_scan(C.make_probe(0.25), "control", self.DELTAS)
        assert abs(res["slope"]) < 0.1
        assert res["slope"] == pytest.approx(0.04721703959321842, rel=1e-8)

    def test_unknown_mode(self):
        with pytest.raises(GridError, match="unknown optimality mode"):
            C.optimality_scan(C.make_probe(0.25), "bogus", self.DELTAS)


def _band_limited(grid, rng):
    v = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    vk = np.fft.fft(v)
    vk[np.abs(grid.k) > 0.6 * grid.k_max] = 0.0
    return np.fft.ifft(vk)


class TestWeightedKernelNorm:
    def test_rank_two_gram_matches_dense_operator(self):
        # independent route: conjugate the kernel by the dense fractional
        # weight and take the Frobenius norm
        g = Grid1D(32, 4.0)
        rng = np.random.default_rng(7)
        a1, b1, a2, b2 = (_band_limited(g, rng) for _ in range(4))
        eye = np.eye(g.n)
        fmat = np.fft.fft(eye, axis=0)
        kernel = np.outer(a1, b1) - np.outer(a2, b2)
        for eps in (0.0, 0.1, 0.25):
            got = C._rank2_norm_sq(g, eps, a1, b1, a2, b2)
            w = np.fft.ifft((1.0 + g.k ** 2)[:, None] ** (eps / 2.0) * fmat,
                            axis=0)
            dense = np.linalg.norm(w @ kernel @ w.T, "fro") ** 2 * g.h ** 2
            assert got == pytest.approx(dense, rel=1e-12)

    def test_pair_profile_input_norm_matches_dense(self):
        g = Grid1D(32, 4.0)
        rng = np.random.default_rng(7)
        f, p = _band_limited(g, rng), _band_limited(g, rng)
        khat = (rng.standard_normal((g.n, g.n))
                + 1j * rng.standard_normal((g.n, g.n)))
        member = C.PairProfileMember(f=f, khat=khat, p=p, label="probe")
        got = member.weighted_input_norm(g, 0.25)
        w2 = (1.0 + g.k ** 2) ** 0.25
        kern = (g.h / g.n) ** 2 * np.sum(
            w2[:, None] * w2[None, :] * np.abs(khat) ** 2)

        def hnorm(v):
            return np.sqrt(g.h / g.n * np.sum(
                (1.0 + g.k ** 2) ** 0.25 * np.abs(np.fft.fft(v)) ** 2))

        assert got == pytest.approx(hnorm(f) * hnorm(p) * np.sqrt(kern),
                                    rel=1e-12)


class TestOperatorFamilies:
    def test_baseline_and_modulation_ratios(self):
        g = Grid1D(256, 8.0)
        members = [C.make_baseline_member(g)]
        members += C.make_modulation_family(g, [4.0, 16.0, 64.0])
        res = C.direct_operator_test(g, members, epsilon=0.25,
                                     t_window=2.0, n_tau=257)
        assert [r["label"] for r in res] == [
            "baseline", "modulation lambda=4", "modulation lambda=16",
            "modulation lambda=64"]
        assert res[0]["ratio"] == pytest.approx(0.15765139504689055,
                                                rel=1e-8)
        mods = [r["ratio"] for r in res[1:]]
        assert mods == pytest.approx([0.24015947215938224,
                                      0.22455212139888822,
                                      0.22460348204179673], rel=1e-8)
        # modulation leaves the ratio flat: no growth in lambda
        assert max(mods) / min(mods) < 2.0
        for r in res:
            assert r["epsilon"] == 0.25
            assert r["lhs"] <= r["rhs"] * r["ratio"] * (1 + 1e-12)

    def test_baseline_ratio_survives_grid_refinement(self):
        coarse = C.direct_operator_test(
            Grid1D(256, 8.0), [C.make_baseline_member(Grid1D(256, 8.0))],
            epsilon=0.25, t_window=2.0, n_tau=257)[0]["ratio"]
        fine = C.direct_operator_test(
            Grid1D(512, 8.0), [C.make_baseline_member(Grid1D(512, 8.0))],
            epsilon=0.25, t_window=2.0, n_tau=257)[0]["ratio"]
        assert abs(fine - coarse) / coarse < 1e-8

    def test_counter_rotating_family_feels_epsilon(self):
        g = Grid1D(256, 8.0)
        family = C.make_counter_rotating_family(g, [4.0, 16.0, 64.0])
        r25 = [x["ratio"] for x in C.direct_operator_test(
            g, family, epsilon=0.25, t_window=0.1, n_tau=257)]
        assert r25 == pytest.approx([0.018629019735445174,
                                     0.010902251631644466,
                                     0.006140856129470737], rel=1e-8)
        assert r25[0] > r25[1] > r25[2]
        r05 = C.direct_operator_test(g, family, epsilon=0.05,
                                     t_window=0.1, n_tau=257)
        growth = r05[1]["ratio"] / r25[1]
        assert growth == pytest.approx(2.829465589106397, rel=1e-8)
        assert growth > 2.0

    def test_multiscale_family_separates_epsilon(self):
        # ratio grows like sqrt(J) with J dyadic shells at epsilon = 0 but
        # stays bounded once the weight carries a positive exponent
        g = Grid1D(1024, 64.0)
        family = C.make_multiscale_family(g, [1, 4], v0=1.0)
        flat = C.direct_operator_test(g, family, epsilon=0.0,
                                      t_window=0.5, n_tau=65)
        weighted = C.direct_operator_test(g, family, epsilon=0.25,
                                          t_window=0.5, n_tau=65)
        growth0 = flat[1]["ratio"] / flat[0]["ratio"]
        growth25 = weighted[1]["ratio"] / weighted[0]["ratio"]
        assert growth0 == pytest.approx(1.994415474291058, rel=1e-8)
        assert abs(growth0 - 2.0) < 0.1
        assert growth25 == pytest.approx(1.18764086294786, rel=1e-8)
        assert growth25 < 1.4

    def test_dilation_family_crosses_alpha_half(self):
        # trace ratios scale like Lambda^{1/2 - alpha}
        g = Grid1D(512, 4.0)
        family = C.make_dilation_family(g, [4.0, 16.0, 64.0])
        strong = C.trace_lemma_check(g, family, alpha=0.75)
        weak = C.trace_lemma_check(g, family, alpha=0.25)
        assert sorted(strong[0]) == ["alpha", "label", "lhs", "ratio", "rhs"]
        decay = strong[-1]["ratio"] / strong[0]["ratio"]
        growth = weak[-1]["ratio"] / weak[0]["ratio"]
        assert decay == pytest.approx(0.46077163306939856, rel=1e-8)
        assert decay < 0.7
        assert growth == pytest.approx(1.6549022129913726, rel=1e-8)
        assert growth > 1.3

    def test_rejects_zero_member(self):
        g = Grid1D(32, 4.0)
        zero = np.zeros(g.n, complex)
        member = C.SeparableKernelMember(f=zero, g=zero, p=zero, q=zero)
        with pytest.raises(GridError, match="not normalizable"):
            C.direct_operator_test(g, [member], epsilon=0.1,
                                   t_window=0.5, n_tau=17)

    def test_rejects_unresolved_dyadic_band(self):
        with pytest.raises(GridError, match="resolved band"):
            C.make_multiscale_family(Grid1D(1024, 64.0), [6], v0=1.0)
