import math

import numpy as np
import pytest

from hyperstab.errors import AdmissibilityViolation, AssumptionViolation
from hyperstab.linear_sim import GridState, simulate, sine_bump_pair
from hyperstab.lyapunov import CertifiedStable, CertifiedUnstable, Inconclusive, LinearSystemParams
from hyperstab.quasilinear import (
    AmplifyingSource,
    AssumptionLog,
    CouplingSource,
    DissipativeSource,
    QuasilinearModel,
    certify_model,
    certify_ql_instability,
    certify_ql_stability,
    instability_gain_bound,
    model_eval,
    simulate_ql,
)
from hyperstab.weights import Constant, WeightParams, half_ratio

DMAX = 1.0 / (22 * 0.02)  # gives c = 1, d = 1.2 for a = 1.1, gamma = 0.02


def _recheck_stable(c, d, eps0, m, length, k, p):
    s = math.sqrt(p.upsilon)
    z = p.psi * length
    t = math.tanh(z)
    src = 0.5 * c * p.psi * (1 / s - s)
    hr = (s * (1 + 1 / math.cosh(z)) - t) / (s * (1 + 1 / math.cosh(z)) + t)
    return 3 * m + eps0 <= src and k * k <= (c / d) * hr and p.upsilon > t * t


class TestModel:
    def test_equilibrium(self):
        model = QuasilinearModel.from_box(1.3, 0.1, DissipativeSource(0.2), 1.0, 0.1)
        lp, lm, gp, gm = model_eval(model, np.zeros(5), np.zeros(5))
        np.testing.assert_array_equal(lp, 1.3)
        np.testing.assert_array_equal(lm, -1.3)
        assert not gp.any() and not gm.any()

    def test_speeds(self):
        model = QuasilinearModel.from_box(1.0, 0.1, DissipativeSource(0.2), 1.0, 0.1)
        lp, lm, _, _ = model_eval(model, np.array([0.5]), np.array([0.5]))
        np.testing.assert_allclose(lp, 1.1, rtol=1e-15)
        np.testing.assert_allclose(lm, -1.1, rtol=1e-15)

    def test_amplifying_equality_case(self):
        model = QuasilinearModel.from_box(1.0, 0.0, AmplifyingSource(2.0), 1.0, 0.1)
        _, _, gp, _ = model_eval(model, np.array([0.3]), np.array([0.0]))
        np.testing.assert_allclose(gp, 0.6, rtol=1e-15)
        np.testing.assert_allclose(0.3 * gp, 2.0 * 0.3**2, rtol=1e-15)

    def test_source_bounds(self):
        rng = np.random.default_rng(2)
        dp, dm = rng.normal(size=(2, 100))
        for src in (DissipativeSource(0.3), CouplingSource(0.3)):
            gp, gm = src(dp, dm)
            bound = 0.3 * (np.abs(dp) + np.abs(dm))
            assert np.all(np.abs(gp) <= bound + 1e-15) and np.all(np.abs(gm) <= bound + 1e-15)

    def test_box_bounds(self):
        model = QuasilinearModel.from_box(1.1, 0.02, DissipativeSource(0.05), DMAX, 0.01)
        assert model.c == pytest.approx(1.0) and model.d == pytest.approx(1.2)
        with pytest.raises(ValueError):
            QuasilinearModel.from_box(1.0, 0.5, DissipativeSource(0.05), 1.0, 0.01)
        with pytest.raises(ValueError):
            QuasilinearModel(1.1, 0.02, DissipativeSource(0.05), 1.05, 1.2, 0.01, DMAX)

    def test_admissibility(self):
        model = QuasilinearModel.from_box(1.0, 0.1, DissipativeSource(0.05), 0.5, 0.01)
        with pytest.raises(AdmissibilityViolation):
            model_eval(model, np.array([0.6]), np.array([0.6]))


class TestStability:
    def test_example(self):
        v = certify_ql_stability(1.0, 1.2, 0.01, 0.05, 1.0, 0.3, 0.3)
        assert isinstance(v, CertifiedStable) and v.rate > 0
        assert _recheck_stable(1.0, 1.2, 0.01, 0.05, 1.0, 0.3, v.witness)
        np.testing.assert_allclose(v.rate, v.witness.psi * math.sqrt(v.witness.upsilon), rtol=1e-15)

    def test_length_condition(self):
        v = certify_ql_stability(1.0, 1.0, 0.1, 0.2, 1.0, 0.3, 0.3)
        assert isinstance(v, Inconclusive) and "1.4" in v.reason

    def test_source_term_bounded_by_half_c(self):
        rng = np.random.default_rng(4)
        c, length = 1.7, 1.0
        for _ in range(2000):
            psi = 10 ** rng.uniform(-4, 1)
            t2 = math.tanh(psi * length) ** 2
            ups = t2 + rng.uniform(1e-9, 1) * (1 - t2)
            s = math.sqrt(ups)
            assert 0.5 * c * psi * (1 / s - s) <= c / 2 + 1e-12

    def test_gain_too_large(self):
        # k^2 <= (c/d) * ratio < c/d
        v = certify_ql_stability(1.0, 1.2, 0.01, 0.05, 1.0, 0.95, 0.3)
        assert isinstance(v, Inconclusive)


class TestInstability:
    def test_example(self):
        v = certify_ql_instability(2.0, 0.1, 1.0, 1.2, 1.0, 0.6, 0.6, 1.5)
        assert isinstance(v, CertifiedUnstable)
        assert v.witness == WeightParams(1.5, 1.0, 1.0)
        np.testing.assert_allclose(instability_gain_bound(1.0, 1.2, 1.5), 1.2 * math.exp(-1.5), rtol=1e-15)
        np.testing.assert_allclose(instability_gain_bound(1.0, 1.2, 1.5), 0.26776, atol=5e-6)

    def test_zero_gain(self):
        assert isinstance(certify_ql_instability(2.0, 0.1, 1.0, 1.2, 1.0, 0.0, 0.6, 1.5), Inconclusive)

    def test_short_domain(self):
        v = certify_ql_instability(2.0, 0.1, 1.0, 1.2, 0.5, 0.6, 0.6, 1.5)
        assert isinstance(v, Inconclusive) and "0.95" in v.reason

    def test_assumption(self):
        with pytest.raises(AssumptionViolation):
            certify_ql_instability(0.1, 0.1, 1.0, 1.2, 1.0, 0.6, 0.6, 1.5)

    def test_bound_matches_weight_ratio(self):
        # with upsilon = 1 the ratio at L/2 is exp(-psi L)
        for length in (0.5, 1.0, 3.0):
            p = WeightParams(1.5 / length, 1.0, length)
            np.testing.assert_allclose((1.2 / 1.0) * half_ratio(p), instability_gain_bound(1.0, 1.2, 1.5), rtol=1e-13)

    def test_bound_decays_with_length(self):
        vals = [(1.2 / 1.0) * half_ratio(WeightParams(0.7, 1.0, L)) for L in (1, 2, 4, 8, 16)]
        assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-4


class TestExclusivity:
    def test_dispatch_by_source(self):
        for m in np.linspace(0.0, 0.2, 5):
            for k in np.linspace(0, 1.5, 7):
                for src in (DissipativeSource(m), CouplingSource(m)):
                    model = QuasilinearModel(1.1, 0.02, src, 1.0, 1.2, 0.01)
                    assert not isinstance(certify_model(model, 1.0, k, k), CertifiedUnstable)
                model = QuasilinearModel(1.1, 0.02, AmplifyingSource(m + 0.2), 1.0, 1.2, 0.01)
                assert not isinstance(certify_model(model, 1.0, k, k, eta=1.0), CertifiedStable)

    def test_eta_required(self):
        model = QuasilinearModel(1.1, 0.02, AmplifyingSource(2.0), 1.0, 1.2, 0.1)
        with pytest.raises(ValueError):
            certify_model(model, 1.0, 0.6, 0.6)


class TestSimulateQL:
    def test_zero_data(self):
        model = QuasilinearModel.from_box(1.1, 0.02, DissipativeSource(0.05), DMAX, 0.01)
        res = simulate_ql(model, 0.3, 0.3, initial=GridState.zeros(50, 1.0), t_final=1.0)
        assert all(r.energy == 0 for r in res.records)
        log = res.log.to_array()
        np.testing.assert_array_equal(log[:, 1], 0.0)
        np.testing.assert_allclose(log[:, 2:4], 1.1)
        np.testing.assert_allclose(log[:, 4:6], -1.1)
        assert res.log.ok

    def test_linear_limit(self):
        m, k, n, T = 0.2, 0.5, 200, 3.0
        model = QuasilinearModel(1.0, 0.0, CouplingSource(m), 1.0, 1.0, 0.01)
        q = simulate_ql(model, k, 1.0, t_final=T, n_cells=n, weights=Constant(1.0))
        lin = simulate(LinearSystemParams(m, 1.0, k), t_final=T, n_cells=n)
        np.testing.assert_allclose(q.state.delta_plus, lin.state.delta_plus, atol=1e-10, rtol=0)
        np.testing.assert_allclose(q.state.delta_minus, lin.state.delta_minus, atol=1e-10, rtol=0)
        np.testing.assert_allclose(q.column("energy"), lin.column("energy"), rtol=1e-10)

    def test_stable_run(self):
        model = QuasilinearModel.from_box(1.1, 0.02, DissipativeSource(0.05), DMAX, 0.01)
        res = simulate_ql(model, 0.3, 0.3, t_final=4.0, n_cells=200)
        e = res.column("energy")
        assert np.all(e[1:] <= e[:-1] * (1 + 1e-3))
        assert res.log.ok
        assert res.meta["certificate"] == "S"

    def test_unstable_run(self):
        model = QuasilinearModel.from_box(1.1, 0.02, AmplifyingSource(2.0), DMAX, 0.1)
        res = simulate_ql(model, 0.6, 0.6, t_final=2.0, n_cells=200, eta=1.5)
        e = res.column("energy")
        assert np.all(e[1:] >= e[:-1] * (1 - 1e-3))
        assert e[-1] > e[0]
        assert res.log.ok

    def test_gradient_monitor(self):
        model = QuasilinearModel.from_box(1.1, 0.02, DissipativeSource(0.05), DMAX, 0.01)
        x = np.linspace(0, 1, 201)
        bump = 0.5 * np.sin(5 * np.pi * x) ** 2
        init = GridState.from_arrays(bump, np.zeros_like(bump), 1.0)
        res = simulate_ql(model, 0.0, 0.0, initial=init, t_final=0.2, weights=Constant(1.0))
        assert not res.log.ok
        assert any("d_x lambda" in v for v in res.log.violations)

    def test_admissibility_abort_carries_log(self):
        model = QuasilinearModel.from_box(1.0, 0.1, AmplifyingSource(3.0), 0.05, 0.5)
        init = sine_bump_pair(100, 1.0, 0.04)
        with pytest.raises(AdmissibilityViolation) as info:
            simulate_ql(model, 1.0, 1.0, initial=init, t_final=5.0, weights=Constant(1.0))
        assert isinstance(info.value.log, AssumptionLog)
        assert len(info.value.log.rows) > 0

    def test_needs_certificate_without_weights(self):
        model = QuasilinearModel(1.0, 0.0, DissipativeSource(0.3), 1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            simulate_ql(model, 0.3, 0.3, t_final=0.1, n_cells=20)
