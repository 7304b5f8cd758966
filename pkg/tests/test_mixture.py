import json
import math

import numpy as np
import pytest

from selfnorm.constants import DomainError
from selfnorm.mixture import (Density, GaussianMixture, PointMasses,
                              RobbinsSiegmund, boundary, crossing_bound,
                              general_r_asymptotic, measure_from_json,
                              measure_to_json, mv_boundary_test, mv_statistic,
                              psi, rs_asymptotic)

C_2SQRTPI = 2.0 * math.sqrt(math.pi)


def atom_boundary(v, c, lam, w, r=2.0):
    return (math.log(c / w) + lam**r * v / r) / lam


class TestPsi:
    def test_single_atom_closed_form(self):
        F = PointMasses(atoms=((0.3, 2.0),))
        for u, v in ((0.0, 1.0), (5.0, 10.0), (-3.0, 0.5)):
            want = 2.0 * math.exp(0.3 * u - 0.09 * v / 2.0)
            assert psi(u, v, F) == pytest.approx(want, rel=1e-12)

    def test_atom_sum(self):
        F = PointMasses(atoms=((0.1, 1.0), (0.4, 0.5)))
        want = math.exp(0.1 * 2 - 0.01 * 3 / 2) + 0.5 * math.exp(0.4 * 2 - 0.16 * 3 / 2)
        assert psi(2.0, 3.0, F) == pytest.approx(want, rel=1e-12)

    def test_small_v_limit_is_total_mass(self):
        F = PointMasses(atoms=((0.2, 1.5), (0.5, 0.5)))
        assert psi(0.0, 1e-12, F) == pytest.approx(F.total_mass, rel=1e-10)
        D = Density(f=lambda lam: np.ones_like(lam), lambda0=1.0)
        assert psi(0.0, 1e-10, D) == pytest.approx(1.0, rel=1e-8)

    def test_rs_golden_value(self):
        # independent high-precision quadrature oracle (substituted integrand
        # with an analytic tail), frozen
        F = RobbinsSiegmund(1.0)
        assert psi(0.0, 1.0, F) == pytest.approx(1.44001136121338569, rel=1e-9)

    def test_rs_total_mass(self):
        assert RobbinsSiegmund(1.0).total_mass == pytest.approx(1.0 / math.log(2.0), rel=1e-15)
        assert RobbinsSiegmund(2.0).total_mass == pytest.approx(
            math.log(2.0) ** -2.0 / 2.0, rel=1e-15)

    def test_strictly_increasing_in_u(self):
        F = RobbinsSiegmund(1.0)
        us = np.linspace(-5.0, 20.0, 12)
        vals = [psi(float(u), 4.0, F) for u in us]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_strictly_decreasing_in_v(self):
        F = RobbinsSiegmund(1.0)
        vs = np.logspace(-2, 4, 10)
        vals = [psi(1.0, float(v), F) for v in vs]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestBoundary:
    def test_single_atom_matches_closed_form(self):
        F = PointMasses(atoms=((0.3, 2.0),))
        for v, c in ((1.0, 5.0), (100.0, 2.0), (1e6, 50.0)):
            want = atom_boundary(v, c, 0.3, 2.0)
            assert abs(boundary(v, c, F) - want) <= 1e-8 * (1.0 + abs(want))

    def test_round_trip(self):
        F = RobbinsSiegmund(1.0)
        for v in (10.0, 1e3, 1e6):
            for c in (2.0, 20.0):
                u = boundary(v, c, F)
                assert abs(psi(u, v, F) - c) <= 1e-8 * c

    def test_round_trip_order_r(self):
        F = RobbinsSiegmund(1.0)
        u = boundary(1e4, 5.0, F, r=1.5)
        assert abs(psi(u, 1e4, F, r=1.5) - 5.0) <= 1e-8 * 5.0

    def test_midpoint_concavity(self):
        F = RobbinsSiegmund(1.0)
        vs = np.geomspace(10.0, 1e8, 15)
        b = np.array([boundary(float(v), 10.0, F) for v in vs])
        mids = np.array([boundary(0.5 * (float(vs[i]) + float(vs[i + 2])), 10.0, F)
                         for i in range(len(vs) - 2)])
        assert np.all(mids >= 0.5 * (b[:-2] + b[2:]) - 1e-9 * np.abs(mids))

    def test_slope_limit_single_atom(self):
        # beta(v)/v approaches lam/2 when the support infimum is lam
        F = PointMasses(atoms=((0.3, 1.0),))
        assert boundary(1e10, 5.0, F) / 1e10 == pytest.approx(0.15, rel=1e-6)

    def test_uniform_density_growth(self):
        # bounded density with positive infimum: beta ~ sqrt(v log v)
        D = Density(f=lambda lam: np.ones_like(lam), lambda0=1.0)
        ratios = [boundary(v, 10.0, D) / math.sqrt(v * math.log(v))
                  for v in (1e4, 1e6, 1e8)]
        assert ratios[0] > ratios[1] > ratios[2]
        assert abs(ratios[-1] - 1.0) < 0.15

    def test_engine_regression_against_asymptotics(self):
        # frozen ratios, verified independently with high-precision quadrature
        # and bisection; regression-guards the quadrature + root-finder pair
        F = RobbinsSiegmund(1.0)
        got6 = boundary(1e6, C_2SQRTPI, F) / rs_asymptotic(1e6, C_2SQRTPI, 1.0)
        got8 = boundary(1e8, C_2SQRTPI, F) / rs_asymptotic(1e8, C_2SQRTPI, 1.0)
        got_r = boundary(1e10, C_2SQRTPI, F, r=1.5) / general_r_asymptotic(1e10, 1.5)
        assert got6 == pytest.approx(0.8983209309291558, rel=1e-9)
        assert got8 == pytest.approx(0.9285842734315176, rel=1e-9)
        assert got_r == pytest.approx(1.2231034869333133, rel=1e-9)


class TestAsymptotics:
    def test_rs_reference_term_vanishes(self):
        v = 1e10
        l2 = math.log(math.log(v))
        l3 = math.log(l2)
        want = math.sqrt(2.0 * v * (l2 + 2.5 * l3))
        assert rs_asymptotic(v, C_2SQRTPI, 1.0) == pytest.approx(want, rel=1e-14)

    def test_rs_extra_log_term(self):
        v = 1e10
        base = rs_asymptotic(v, C_2SQRTPI, 1.0)
        bigger = rs_asymptotic(v, 2.0 * C_2SQRTPI, 1.0)
        assert bigger**2 - base**2 == pytest.approx(2.0 * v * math.log(2.0), rel=1e-9)

    def test_rs_domain(self):
        with pytest.raises(DomainError):
            rs_asymptotic(2.0, 1.0, 1.0)

    def test_general_r2_consistency(self):
        v = 1e6
        want = math.sqrt(2.0 * v * math.log(math.log(v)))
        assert general_r_asymptotic(v, 2.0) == pytest.approx(want, rel=1e-14)

    def test_general_r15_value(self):
        v = math.exp(math.exp(2.0))
        want = v ** (2.0 / 3.0) * (1.5 * 2.0 / 0.5) ** (1.0 / 3.0)
        assert general_r_asymptotic(v, 1.5) == pytest.approx(want, rel=1e-14)

    def test_general_domain(self):
        with pytest.raises(DomainError):
            general_r_asymptotic(1.0, 2.0)
        with pytest.raises(DomainError):
            general_r_asymptotic(1e6, 1.0)


class TestCrossingBound:
    def test_values(self):
        F = PointMasses(atoms=((0.2, 0.7),))
        assert crossing_bound(F.total_mass, F) == 1.0
        assert crossing_bound(2.0 * F.total_mass, F) == pytest.approx(0.5, rel=1e-15)
        assert crossing_bound(0.01, F) == 1.0  # capped at a probability


class TestMultivariate:
    def test_empty_state(self):
        G = GaussianMixture(np.eye(2))
        assert mv_statistic(np.zeros(2), np.zeros((2, 2)), G) == 0.0

    def test_scalar_reduction(self):
        G = GaussianMixture(np.eye(1))
        q, a = 0.7, 1.3
        want = 0.5 * (-math.log1p(q) + a * a / (1.0 + q))
        assert mv_statistic(np.array([a]), np.array([[q]]), G) == pytest.approx(want, rel=1e-13)

    def test_hand_value_dim2(self):
        G = GaussianMixture(np.eye(2))
        got = mv_statistic(np.array([1.0, 1.0]), np.eye(2), G)
        assert got == pytest.approx(0.5 * (1.0 - 2.0 * math.log(2.0)), rel=1e-13)

    def test_threshold_equivalence(self):
        rng = np.random.default_rng(5)
        G = GaussianMixture(np.array([[2.0, 0.3], [0.3, 1.0]]))
        for _ in range(50):
            x = rng.standard_normal((2, 4))
            Q = x @ x.T
            s = 2.0 * rng.standard_normal(2)
            c = float(rng.uniform(1.01, 3.0))
            want = mv_statistic(s, Q, G) >= math.log(c)
            assert mv_boundary_test(s, Q, G, c) == want

    def test_zero_state_never_crosses(self):
        G = GaussianMixture(np.eye(3))
        assert not mv_boundary_test(np.zeros(3), np.zeros((3, 3)), G, 1.5)

    def test_invalid_precision(self):
        with pytest.raises(DomainError):
            GaussianMixture(np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite

    def test_c_must_exceed_one(self):
        G = GaussianMixture(np.eye(2))
        with pytest.raises(DomainError):
            mv_boundary_test(np.zeros(2), np.zeros((2, 2)), G, 1.0)


class TestSerialization:
    def test_point_masses_round_trip(self):
        F = PointMasses(atoms=((0.1, 1.0), (0.4, 0.5)))
        back = measure_from_json(json.dumps(measure_to_json(F)))
        assert isinstance(back, PointMasses)
        assert back.atoms == F.atoms

    def test_rs_round_trip(self):
        obj = measure_to_json(RobbinsSiegmund(1.5))
        assert obj["type"] == "density_rs"
        back = measure_from_json(obj)
        assert isinstance(back, RobbinsSiegmund) and back.delta == 1.5

    def test_gaussian_round_trip(self):
        G = GaussianMixture(np.array([[2.0, 0.3], [0.3, 1.0]]))
        back = measure_from_json(measure_to_json(G))
        assert isinstance(back, GaussianMixture)
        assert np.allclose(back.precision, G.precision)

    def test_unknown_type(self):
        with pytest.raises(DomainError):
            measure_from_json({"type": "nope"})


class TestValidation:
    def test_point_masses_invariants(self):
        with pytest.raises(DomainError):
            PointMasses(atoms=((0.0, 1.0),))
        with pytest.raises(DomainError):
            PointMasses(atoms=((0.5, -1.0),))

    def test_rs_delta(self):
        with pytest.raises(DomainError):
            RobbinsSiegmund(0.0)

    def test_density_support(self):
        with pytest.raises(DomainError):
            Density(f=lambda lam: np.ones_like(lam), lambda0=1.0, support_low=2.0)

    def test_boundary_c_positive(self):
        F = PointMasses(atoms=((0.3, 1.0),))
        with pytest.raises(DomainError):
            boundary(1.0, 0.0, F)
