import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from selfnorm.constants import DomainError, c_gamma, c_gamma_r
from selfnorm.processes import (Bernstein, BoundedAbove, BoundedBelow,
                                BrownianGrid, CertificationError,
                                Counterexample56, Counterexample65,
                                MvBrownianGrid, Rademacher, ScaledSymmetric,
                                TruncatedCentering, UnsupportedVariantError,
                                WeightedIID, check_lambda, chunk_rng,
                                exp_supermartingale_value, geometric_grid,
                                make_process, path_rng, spec_from_json,
                                spec_to_json, truncated_supermartingale_value)


def run_steps(spec, seed, n):
    h = make_process(spec, seed)
    return [h.step() for _ in range(n)], h


class TestDeterminism:
    def test_equal_handles_equal_streams(self):
        s1, _ = run_steps(Rademacher(), 42, 1000)
        s2, _ = run_steps(Rademacher(), 42, 1000)
        assert [st.a_n for st in s1] == [st.a_n for st in s2]

    def test_different_seeds_differ(self):
        s1, _ = run_steps(Rademacher(), 42, 200)
        s2, _ = run_steps(Rademacher(), 43, 200)
        assert [st.a_n for st in s1] != [st.a_n for st in s2]

    def test_chunk_streams_reproducible(self):
        d1 = ScaledSymmetric().draw(chunk_rng(7, 3), 0, 64, 8)
        d2 = ScaledSymmetric().draw(chunk_rng(7, 3), 0, 64, 8)
        assert np.array_equal(d1, d2)

    def test_path_and_chunk_streams_distinct(self):
        a = path_rng(7, 0).random(16)
        b = chunk_rng(7, 0).random(16)
        assert not np.array_equal(a, b)


class TestParameterValidation:
    def test_bounded_below_gamma(self):
        with pytest.raises(DomainError):
            BoundedBelow(m_bound=1.0, gamma=1.0, r=1.5)

    def test_bounded_above_lambda0(self):
        with pytest.raises(DomainError):
            BoundedAbove(m_bound=2.0, lambda0=1.0)  # needs lambda0 <= 1/M

    def test_scaled_symmetric_law(self):
        with pytest.raises(DomainError):
            ScaledSymmetric(law="cauchy")

    def test_truncated_centering_params(self):
        with pytest.raises(DomainError):
            TruncatedCentering(base="heavy", alpha=1.5)
        with pytest.raises(DomainError):
            TruncatedCentering(base="normal", lam=0.0)

    def test_weighted_iid_rule(self):
        with pytest.raises(DomainError):
            WeightedIID(weights="squares")


class TestAccumulators:
    def test_rademacher_v_is_n(self):
        states, _ = run_steps(Rademacher(), 11, 50)
        for st in states:
            assert st.v_n_sq == float(st.n)
            assert st.b_pow_r == float(st.n)
            assert abs(st.a_n) <= st.n

    def test_bounded_above_inflated_accumulator(self):
        spec = BoundedAbove(m_bound=1.0, lambda0=1.0)
        states, _ = run_steps(spec, 11, 20)
        for st in states:
            assert st.b_pow_r == pytest.approx(1.5 * st.n, rel=1e-12)

    def test_bounded_below_order_r_accumulator(self):
        spec = BoundedBelow(m_bound=1.0, gamma=0.5, r=1.5)
        c = c_gamma_r(0.5, 1.5)
        states, h = run_steps(spec, 11, 30)
        manual = 1.5 * c * sum(abs(d) ** 1.5 for d in h.increments)
        assert states[-1].b_pow_r == pytest.approx(manual, rel=1e-12)

    def test_brownian_grid_b_is_time(self):
        spec = BrownianGrid(times=(0.5, 1.0, 2.0, 4.0))
        states, _ = run_steps(spec, 11, 4)
        assert [st.b_pow_r for st in states] == [0.5, 1.0, 2.0, 4.0]

    def test_grid_exhaustion(self):
        spec = BrownianGrid(times=(0.5, 1.0))
        h = make_process(spec, 3)
        h.step(), h.step()
        with pytest.raises(IndexError):
            h.step()


class TestTruncatedMeans:
    """Every analytic truncated mean is checked against direct numerical
    integration of the variant's density."""

    def quad_mean(self, density, c, d, lo, hi):
        val, _ = integrate.quad(lambda x: x * density(x), max(c, lo), min(d, hi),
                                limit=200)
        return val

    def test_normal(self):
        spec = TruncatedCentering(base="normal")
        for c, d in ((-1.0, 2.0), (-0.5, 0.5), (0.3, 4.0)):
            want = self.quad_mean(stats.norm.pdf, c, d, -40.0, 40.0)
            assert spec.truncated_mean(5, c, d) == pytest.approx(want, abs=1e-10)

    def test_lognormal_scaled_symmetric(self):
        spec = ScaledSymmetric(law="lognormal", mu=0.2, sigma=0.8)
        pdf = lambda x: 0.5 * stats.lognorm.pdf(abs(x), 0.8, scale=math.exp(0.2))
        for c, d in ((-2.0, 3.0), (0.5, 10.0), (-5.0, -0.2)):
            want = self.quad_mean(pdf, c, d, -200.0, 200.0)
            assert spec.truncated_mean(1, c, d) == pytest.approx(want, abs=1e-8)

    def test_pareto_scaled_symmetric(self):
        spec = ScaledSymmetric(law="pareto", shape=3.0, xm=1.0)
        pdf = lambda x: 0.5 * 3.0 * abs(x) ** -4.0 if abs(x) >= 1.0 else 0.0
        for c, d in ((-4.0, 4.0), (1.5, 30.0), (-10.0, 0.0)):
            want = self.quad_mean(pdf, c, d, -1e4, 1e4)
            assert spec.truncated_mean(1, c, d) == pytest.approx(want, abs=1e-6)

    def test_symmetric_window_is_zero(self):
        for spec in (Rademacher(), ScaledSymmetric()):
            assert spec.truncated_mean(1, -3.0, 3.0 + 1e-12) == pytest.approx(0.0, abs=1e-12)

    def test_rademacher_atoms(self):
        spec = Rademacher()
        assert spec.truncated_mean(1, -2.0, 2.0) == 0.0
        assert spec.truncated_mean(1, 0.0, 2.0) == 0.5
        assert spec.truncated_mean(1, -2.0, 0.0) == -0.5

    def test_shifted_exponential_below(self):
        # d = M(1 - E): density exp((x-M)/M)/M on (-inf, M]
        m = 1.5
        spec = BoundedAbove(m_bound=m, lambda0=0.5)
        pdf = lambda x: math.exp((x - m) / m) / m if x <= m else 0.0
        for c, d in ((-3.0, 1.0), (-math.inf, m), (0.1, 0.9)):
            want = self.quad_mean(pdf, max(c, -200.0), d, -200.0, m)
            assert spec.truncated_mean(1, c, d) == pytest.approx(want, abs=1e-10)

    def test_shifted_exponential_above(self):
        # d = M(E - 1): density exp(-(x+M)/M)/M on [-M, inf)
        m = 0.7
        spec = Bernstein(m_bound=m)
        pdf = lambda x: math.exp(-(x + m) / m) / m if x >= -m else 0.0
        for c, d in ((-2.0, 3.0), (0.0, math.inf), (-0.5, 0.5)):
            want = self.quad_mean(pdf, c, min(d, 200.0), -m, 200.0)
            assert spec.truncated_mean(1, c, d) == pytest.approx(want, abs=1e-10)

    def test_heavy_tail(self):
        spec = TruncatedCentering(base="heavy", alpha=0.5, d1=1.0, d2=2.0)
        y0 = spec.y0
        assert y0 == pytest.approx(36.0, rel=1e-12)

        def pdf(x):
            if x >= y0:
                return 0.5 * spec.d1 * x ** -1.5
            if x <= -y0:
                return 0.5 * spec.d2 * abs(x) ** -1.5
            return 0.0

        for c, d in ((-100.0, 200.0), (-1e4, 50.0), (40.0, 1e5)):
            want = self.quad_mean(pdf, c, d, -1e7, 1e7)
            assert spec.truncated_mean(1, c, d) == pytest.approx(want, rel=1e-6, abs=1e-9)

    def test_factorial_weights_unsupported(self):
        with pytest.raises(UnsupportedVariantError):
            WeightedIID(weights="factorial").truncated_mean(1, -1.0, 1.0)


class TestThreePointLaw:
    def test_exact_zero_mean(self):
        from selfnorm.processes import _cx56_probs
        n = np.arange(20, 5000, dtype=float)
        p_plus, p_minus, p_big, m_n, valid = _cx56_probs(n)
        assert np.all(valid)
        mean = (p_plus - p_minus) / np.sqrt(n) - p_big * m_n
        assert np.max(np.abs(mean)) < 1e-15

    def test_probabilities_sum_to_one(self):
        from selfnorm.processes import _cx56_probs
        n = np.arange(20, 5000, dtype=float)
        p_plus, p_minus, p_big, _, _ = _cx56_probs(n)
        assert np.allclose(p_plus + p_minus + p_big, 1.0, atol=1e-15)

    def test_empirical_mean_near_zero(self):
        spec = Counterexample56()
        d = spec.draw(chunk_rng(3, 0), 99, 100, 200000)  # X_100 over many paths
        se = float(np.std(d)) / math.sqrt(d.size)
        assert abs(float(np.mean(d))) < 5.0 * se + 1e-12

    def test_early_steps_are_zero(self):
        spec = Counterexample56()
        d = spec.draw(chunk_rng(3, 0), 0, 2, 100)
        assert np.all(d == 0.0)

    def test_conditional_variance_track(self):
        spec = Counterexample65()
        s_sq = spec.s_n_sq(1000)
        assert s_sq.shape == (1000,)
        assert np.all(np.diff(s_sq) >= 0.0)


class TestCertification:
    def test_counterexample_not_certified(self):
        with pytest.raises(CertificationError):
            check_lambda(Counterexample56(), 0.1)

    def test_restricted_range(self):
        spec = BoundedAbove(m_bound=1.0, lambda0=0.5)
        check_lambda(spec, 0.5)
        with pytest.raises(CertificationError):
            check_lambda(spec, 0.6)
        with pytest.raises(CertificationError):
            check_lambda(spec, -0.1)

    def test_all_lambda_variants(self):
        for spec in (Rademacher(), ScaledSymmetric(), BrownianGrid(times=(1.0,))):
            check_lambda(spec, -5.0)
            check_lambda(spec, 5.0)

    def test_heavy_asymmetric_uncertified(self):
        assert TruncatedCentering(base="heavy", alpha=0.5, d1=1.0, d2=2.0).certification is None
        assert TruncatedCentering(base="heavy", alpha=0.5, d1=1.0, d2=1.0).certification == ("all", math.inf)


class TestSupermartingaleValues:
    def test_initial_and_zero_lambda(self):
        h = make_process(Rademacher(), 4)
        assert exp_supermartingale_value(h, 1.0) == 1.0
        h.step()
        assert exp_supermartingale_value(h, 0.0) == 1.0

    def test_matches_state_formula(self):
        h = make_process(Rademacher(), 4)
        for _ in range(25):
            st = h.step()
        lam = 0.7
        want = math.exp(lam * st.a_n - lam * lam * st.b_pow_r / 2.0)
        assert exp_supermartingale_value(h, lam) == pytest.approx(want, rel=1e-12)

    def test_bernstein_weight_denominator(self):
        spec = Bernstein(m_bound=1.0)
        h = make_process(spec, 4)
        for _ in range(10):
            st = h.step()
        lam = 0.5
        want = math.exp(lam * st.a_n - lam * lam * st.b_pow_r / (2.0 * (1.0 - lam)))
        assert exp_supermartingale_value(h, lam) == pytest.approx(want, rel=1e-12)

    def test_overflow_goes_to_inf(self):
        h = make_process(BrownianGrid(times=(1.0,)), 4)
        h.step()
        h.a = 1e6  # force an astronomically large state
        h.b_pow_r = 1.0
        assert exp_supermartingale_value(h, 1.0) == math.inf


class TestTruncatedSupermartingale:
    def test_zero_path_is_one(self):
        h = make_process(Counterexample56(), 4)  # X_1 = X_2 = 0 by construction
        h.step(), h.step()
        assert truncated_supermartingale_value(h, 0.5, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_hand_value_r2(self):
        h = make_process(Rademacher(), 9)
        for _ in range(5):
            h.step()
        # window [-0.5, 1.0) contains neither Rademacher atom, so mu_i = 0
        got = truncated_supermartingale_value(h, 0.5, 1.0)
        want = math.exp(sum(y - y * y for y in h.increments))
        assert got == pytest.approx(want, rel=1e-12)

    def test_parameter_validation(self):
        h = make_process(Rademacher(), 9)
        h.step()
        with pytest.raises(DomainError):
            truncated_supermartingale_value(h, 1.2, 1.0)
        with pytest.raises(DomainError):
            truncated_supermartingale_value(h, 0.5, 2.0 / c_gamma(0.5))

    def test_order_r_cap(self):
        h = make_process(Rademacher(), 9)
        h.step()
        cap = 1.0 / c_gamma_r(0.5, 1.5)
        truncated_supermartingale_value(h, 0.5, cap, r=1.5)
        with pytest.raises(DomainError):
            truncated_supermartingale_value(h, 0.5, 1.01 * cap, r=1.5)


class TestGrids:
    def test_geometric_grid_shape(self):
        ts = geometric_grid(t0=1e-2, rho=2.0, horizon=10.0)
        assert ts[0] == 1e-2 and ts[-1] == 10.0
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_geometric_grid_validation(self):
        for kw in ({"t0": 0.0}, {"rho": 1.0}, {"horizon": 1e-5}):
            with pytest.raises(DomainError):
                geometric_grid(**kw)

    def test_mv_increment_variance(self):
        spec = MvBrownianGrid(dim=2, t0=0.5, rho=2.0, horizon=8.0)
        dts = np.diff(np.concatenate([[0.0], spec.times]))
        d = spec.draw(chunk_rng(1, 0), 0, len(spec.times), 100000)
        var = np.var(d, axis=0)  # (T, m)
        se = dts[:, None] * math.sqrt(2.0 / 100000)
        assert np.all(np.abs(var - dts[:, None]) < 6.0 * se)

    def test_mv_state_exposes_vector_and_time(self):
        spec = MvBrownianGrid(dim=3, t0=0.5, rho=2.0, horizon=8.0)
        h = make_process(spec, 2)
        st = h.step()
        assert st.extras["m_vec"].shape == (3,)
        assert st.extras["t"] == 0.5
        assert st.b_pow_r == 0.5


class TestWeightedIID:
    def test_factorial_scaled_state(self):
        spec = WeightedIID(weights="factorial")
        h = make_process(spec, 6)
        states = [h.step() for _ in range(8)]
        signs = h.increments
        for n, st in enumerate(states, start=1):
            w = [math.factorial(i) for i in range(1, n + 1)]
            s = sum(wi * yi for wi, yi in zip(w, signs))
            v = sum((wi * yi) ** 2 for wi, yi in zip(w, signs))
            fact = math.factorial(n)
            assert st.a_n == pytest.approx(s / fact, rel=1e-12)
            assert st.v_n_sq == pytest.approx(v / fact**2, rel=1e-12)

    def test_ones_matches_rademacher_accumulators(self):
        states, _ = run_steps(WeightedIID(weights="ones"), 6, 20)
        for st in states:
            assert st.v_n_sq == float(st.n)


class TestSerialization:
    @pytest.mark.parametrize("spec", [
        Rademacher(),
        ScaledSymmetric(law="pareto", shape=3.0, xm=2.0),
        BoundedAbove(m_bound=2.0, lambda0=0.25),
        Bernstein(m_bound=0.5),
        BoundedBelow(m_bound=1.0, gamma=0.4, r=1.5),
        BrownianGrid(times=(0.5, 1.0, 2.0)),
        MvBrownianGrid(dim=3, t0=1e-2, rho=1.5, horizon=100.0),
        Counterexample56(),
        Counterexample65(),
        TruncatedCentering(base="heavy", alpha=0.5, d1=1.0, d2=2.0),
        WeightedIID(weights="factorial"),
    ])
    def test_round_trip(self, spec):
        back = spec_from_json(json.dumps(spec_to_json(spec)))
        assert back == spec

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            spec_from_json({"variant": "levy_flight"})

    def test_bad_parameters(self):
        with pytest.raises(DomainError):
            spec_from_json({"variant": "rademacher", "nope": 1})
