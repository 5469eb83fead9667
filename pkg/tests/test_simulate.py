import math
from fractions import Fraction

import numpy as np
import pytest

from qdp.errors import CancellationToZeroError, RateNegativityError
from qdp.polynomial import UniPoly
from qdp.poset import PowerSet
from qdp.simulate import (ABSORBED, EXITED, STEP_CAP, TIME_LIMIT, DDMCModel,
                          Jump, SamplePath, SDEModel,
                          characteristics_from_rates, em_ensemble,
                          em_integrate, replica_rng, rescale, ssa_ensemble,
                          ssa_simulate)


def PSC(d):
    return PowerSet.from_coeffs(d)


def logistic_model(N, lam):
    return DDMCModel((Jump(1, PSC({(1, 0): 1, (1, 1): 1})),
                      Jump(-1, PSC({(1, 0): 1, (2, 0): 1}))), N, lam)


class TestCharacteristics:
    def test_logistic(self):
        ch = characteristics_from_rates(logistic_model(100, 0.0))
        assert ch.F.as_dict() == {(1, 1): Fraction(1), (2, 0): Fraction(-1)}
        assert ch.G.as_dict() == {(1, 0): Fraction(2), (1, 1): Fraction(1),
                                  (2, 0): Fraction(1)}
        assert ch.G_env.as_dict() == {(1, 0): Fraction(2)}

    def test_symmetric_rates_cancel_in_drift(self):
        m = DDMCModel((Jump(1, PSC({(1, 0): 1})), Jump(-1, PSC({(1, 0): 1}))),
                      100, 0.0)
        ch = characteristics_from_rates(m)
        assert len(ch.F) == 0
        assert ch.G.as_dict() == {(1, 0): Fraction(2)}

    def test_double_jump(self):
        m = DDMCModel((Jump(2, PSC({(1, 0): 1})),), 100, 0.0)
        ch = characteristics_from_rates(m)
        assert ch.F.as_dict() == {(1, 0): Fraction(2)}
        assert ch.G.as_dict() == {(1, 0): Fraction(4)}

    def test_linearity(self):
        q = PSC({(1, 0): Fraction(2, 3), (2, 0): 1})
        one = characteristics_from_rates(DDMCModel((Jump(1, q),), 10, 0.0))
        tripled = characteristics_from_rates(
            DDMCModel((Jump(1, q.scaled(3)),), 10, 0.0))
        assert tripled.F.as_dict() == one.F.scaled(3).as_dict()
        assert tripled.G.as_dict() == one.G.scaled(3).as_dict()

    def test_cancellation_error(self):
        m = DDMCModel((Jump(0, PSC({(1, 0): 1})),), 10, 0.0)
        with pytest.raises(CancellationToZeroError):
            characteristics_from_rates(m)


class TestSSA:
    def test_absorbing_state(self):
        p = ssa_simulate(logistic_model(100, 0.0), 0.0, 5.0, seed=1)
        assert p.terminal == ABSORBED
        assert np.all(p.values == 0.0)

    def test_zero_horizon(self):
        p = ssa_simulate(logistic_model(100, 0.0), 0.05, 0.0, seed=1)
        assert len(p.times) == 1
        assert (p.times[0], p.values[0]) == (0.0, 0.05)

    def test_reproducible(self):
        m = logistic_model(200, 0.1)
        p1 = ssa_simulate(m, 0.05, 2.0, seed=7, replica=4)
        p2 = ssa_simulate(m, 0.05, 2.0, seed=7, replica=4)
        assert np.array_equal(p1.times, p2.times)
        assert np.array_equal(p1.values, p2.values)

    def test_replicas_differ(self):
        m = logistic_model(200, 0.1)
        p1 = ssa_simulate(m, 0.05, 2.0, seed=7, replica=0)
        p2 = ssa_simulate(m, 0.05, 2.0, seed=7, replica=1)
        assert not np.array_equal(p1.values, p2.values)

    def test_lattice_x0_required(self):
        with pytest.raises(ValueError):
            ssa_simulate(logistic_model(100, 0.0), 0.0512, 1.0, seed=1)

    def test_law_of_large_numbers(self):
        """Mean of x(1) across replicas tracks x' = -x^2 from 0.05.

        The chain mean carries a real O(1/N) offset from the ODE (the exact
        master-equation value at these parameters is 0.047505), so the 3-SE
        band around the ODE value leaves only ~2 SE of slack for luck.
        """
        m = logistic_model(400, 0.0)
        vals = [ssa_simulate(m, 0.05, 1.0, seed=1000, replica=r,
                             record_times=[1.0]).value_at(1.0)
                for r in range(10_000)]
        ode = 0.05 / (1 + 0.05 * 1.0)
        se = np.std(vals) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - ode) < 3 * se

    def test_exponential_interevent_times(self):
        """Constant-rate jumps: gaps pass a KS test against Exp(N*r)."""
        m = DDMCModel((Jump(1, PSC({(0, 0): Fraction(1)})),), 100, 0.0)
        p = ssa_simulate(m, 0.0, 110.0, seed=5)
        gaps = np.diff(p.times)[:10_000]
        assert len(gaps) == 10_000
        rate = 100.0
        emp = np.arange(1, len(gaps) + 1) / len(gaps)
        cdf = 1.0 - np.exp(-rate * np.sort(gaps))
        d = np.max(np.maximum(np.abs(emp - cdf),
                              np.abs(emp - 1 / len(gaps) - cdf)))
        assert d < 1.63 / math.sqrt(len(gaps))  # 1% one-sample critical value

    def test_step_cap_reported(self):
        m = DDMCModel((Jump(1, PSC({(0, 0): 1})),), 100, 0.0)
        p = ssa_simulate(m, 0.0, 100.0, seed=1, max_steps=50)
        assert p.terminal == STEP_CAP

    def test_state_cap_reported(self):
        m = DDMCModel((Jump(1, PSC({(0, 0): 1})),), 100, 0.0)
        p = ssa_simulate(m, 0.0, 100.0, seed=1, state_cap=30)
        assert p.terminal == EXITED
        assert p.values[-1] == pytest.approx(0.30)

    def test_grid_recording_matches_full_path(self):
        m = logistic_model(150, 0.2)
        grid = np.linspace(0.0, 2.0, 17)
        full = ssa_simulate(m, 0.1, 2.0, seed=9, replica=2)
        sampled = ssa_simulate(m, 0.1, 2.0, seed=9, replica=2,
                               record_times=grid)
        for t in grid:
            assert sampled.value_at(t) == full.value_at(t)

    def test_negative_rate_raises(self):
        # density 1 - 10x goes negative above x = 0.1; start beyond it
        m = DDMCModel.__new__(DDMCModel)
        object.__setattr__(m, "jumps",
                           (Jump(1, PSC({(0, 0): 1, (1, 0): -10})),))
        object.__setattr__(m, "N", 100)
        object.__setattr__(m, "lam", 0.0)
        with pytest.raises(RateNegativityError):
            ssa_simulate(m, 0.5, 10.0, seed=3)

    def test_ensemble_threads_consistent(self):
        m = logistic_model(100, 0.0)
        serial = ssa_ensemble(m, 0.05, 1.0, 8, seed=3, threads=1)
        parallel = ssa_ensemble(m, 0.05, 1.0, 8, seed=3, threads=2)
        for p, q in zip(serial, parallel):
            assert np.array_equal(p.times, q.times)
            assert np.array_equal(p.values, q.values)


class TestRescale:
    def path(self):
        return SamplePath(np.array([0.0, 2.0]), np.array([0.1, 0.3]),
                          TIME_LIMIT)

    def test_identity_bit_exact(self):
        p = self.path()
        q = rescale(p, 1.0, 1.0, 0.0)
        assert np.array_equal(q.times, p.times)
        assert np.array_equal(q.values, p.values)

    def test_arithmetic(self):
        q = rescale(self.path(), 10.0, 2.0, 0.1)
        assert np.array_equal(q.times, [0.0, 1.0])
        assert np.allclose(q.values, [0.0, 2.0])

    def test_constant_path(self):
        p = SamplePath(np.array([0.0, 1.0]), np.array([0.5, 0.5]), TIME_LIMIT)
        q = rescale(p, 4.0, 3.0, 0.25)
        assert np.allclose(q.values, 1.0)

    def test_composes_multiplicatively(self):
        p = self.path()
        q = rescale(rescale(p, 2.0, 4.0), 3.0, 0.5)
        r = rescale(p, 6.0, 2.0)
        assert np.allclose(q.times, r.times)
        assert np.allclose(q.values, r.values)


class TestEM:
    def test_constant_when_coefficients_vanish(self):
        sde = SDEModel(UniPoly.zero(), UniPoly.zero())
        p = em_integrate(sde, 0.7, 1.0, 0.01, seed=1)
        assert np.all(p.values == 0.7)

    def test_deterministic_decay(self):
        sde = SDEModel(UniPoly.from_terms({1: -1}), UniPoly.zero())
        p = em_integrate(sde, 1.0, 1.0, 1e-4, seed=1)
        assert abs(p.values[-1] - math.exp(-1)) < 1e-3

    def test_ou_stationary_variance(self):
        sde = SDEModel(UniPoly.from_terms({1: -1}), UniPoly.from_terms({0: 2}))
        paths = em_ensemble(sde, 0.0, 5.0, 0.01, 100_000, seed=11,
                            record_times=[5.0])
        ys = np.array([p.value_at(5.0) for p in paths])
        assert np.var(ys) == pytest.approx(1.0, rel=0.02)

    def test_reproducible(self):
        sde = SDEModel(UniPoly.from_terms({1: -1}), UniPoly.from_terms({0: 2}))
        p1 = em_integrate(sde, 0.5, 1.0, 0.01, seed=3, replica=2)
        p2 = em_integrate(sde, 0.5, 1.0, 0.01, seed=3, replica=2)
        assert np.array_equal(p1.values, p2.values)

    def test_ensemble_matches_single_paths(self):
        sde = SDEModel(UniPoly.from_terms({1: -1}), UniPoly.from_terms({0: 2}))
        grid = [0.5, 1.0]
        ens = em_ensemble(sde, 0.2, 1.0, 0.01, 5, seed=21, record_times=grid)
        for r in range(5):
            single = em_integrate(sde, 0.2, 1.0, 0.01, seed=21, replica=r)
            for t in grid:
                assert ens[r].value_at(t) == pytest.approx(single.value_at(t),
                                                           abs=1e-12)

    def test_absorption_at_zero(self):
        # Feller-type noise from a tiny start is absorbed quickly
        sde = SDEModel(UniPoly.zero(), UniPoly.from_terms({1: 2}),
                       domain=(0.0, None), boundary="absorb")
        paths = em_ensemble(sde, 0.01, 2.0, 1e-3, 200, seed=4,
                            record_times=[2.0])
        frac = np.mean([p.terminal == ABSORBED for p in paths])
        assert frac > 0.5
        for p in paths:
            if p.terminal == ABSORBED:
                assert p.value_at(2.0) == 0.0

    def test_stop_policy_flags_exit(self):
        sde = SDEModel(UniPoly.from_terms({0: 1}), UniPoly.zero(),
                       domain=(None, 0.5), boundary="stop")
        p = em_integrate(sde, 0.0, 2.0, 0.01, seed=1)
        assert p.terminal == EXITED
        assert p.values[-1] >= 0.5

    def test_strong_order_refinement(self):
        """Halving dt on a shared Brownian path shrinks the endpoint gap."""
        drift = UniPoly.from_terms({1: -1})
        diff = UniPoly.from_terms({0: 2})

        def em_with_noise(dw, dt):
            y = 1.0
            for inc in dw:
                y = y + float(drift(y)) * dt + math.sqrt(float(diff(y))) * inc
            return y

        gaps = {0: [], 1: []}
        base_dt = 0.05
        n = int(round(1.0 / base_dt))
        for s in range(100):
            fine = replica_rng(123, s).standard_normal(4 * n) \
                * math.sqrt(base_dt / 4)
            mid = fine.reshape(-1, 2).sum(axis=1)
            coarse = mid.reshape(-1, 2).sum(axis=1)
            y_c = em_with_noise(coarse, base_dt)
            y_m = em_with_noise(mid, base_dt / 2)
            y_f = em_with_noise(fine, base_dt / 4)
            gaps[0].append(abs(y_c - y_m))
            gaps[1].append(abs(y_m - y_f))
        assert np.median(gaps[1]) < np.median(gaps[0])
