import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperstab.errors import DomainViolation, PositivityViolation
from hyperstab.weights import (
    Affine,
    Constant,
    Exponential,
    Hyperbolic,
    WeightParams,
    evaluate,
    evaluate_derivative,
    half_ratio,
    ratio,
    sample_table,
    validate,
)


@st.composite
def valid_params(draw):
    psi = draw(st.floats(0.01, 4.0))
    length = draw(st.floats(0.1, 2.0))
    frac = draw(st.floats(0.02, 1.0))
    t2 = math.tanh(psi * length) ** 2
    return WeightParams(psi, t2 + frac * (1.0 - t2), length)


class TestValidate:
    def test_unit_upsilon_ok(self):
        assert validate(WeightParams(1.0, 1.0, 1.0)).upsilon == 1.0

    def test_figure_one_parameters_ok(self):
        # 0.87004 is 3/2 tanh^2(1) to five digits
        np.testing.assert_allclose(1.5 * math.tanh(1.0) ** 2, 0.87004, atol=5e-6)
        validate(WeightParams(1.0, 0.87004, 1.0))

    def test_below_positivity_bound(self):
        with pytest.raises(PositivityViolation):
            validate(WeightParams(1.0, 0.5, 1.0))

    def test_boundary_rejected(self):
        with pytest.raises(PositivityViolation):
            validate(WeightParams(1.0, math.tanh(1.0) ** 2, 1.0))

    @pytest.mark.parametrize("psi,ups,length", [(0.0, 1.0, 1.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 1.0)])
    def test_bad_fields(self, psi, ups, length):
        with pytest.raises(ValueError):
            validate(WeightParams(psi, ups, length))


class TestEvaluate:
    def test_sqrt_upsilon_at_origin(self):
        fam = Hyperbolic(WeightParams(1.0, 0.87004, 1.0))
        np.testing.assert_allclose(evaluate(fam, "plus", 0.0), 0.93276, atol=5e-6)

    def test_exponential_value(self):
        np.testing.assert_allclose(evaluate(Exponential(1.0, 1.0), "plus", 0.5), math.exp(-0.5), rtol=1e-14)

    def test_plus_at_right_end(self):
        fam = Hyperbolic(WeightParams(1.0, 0.87004, 1.0))
        exact = float(mp.sqrt(mp.mpf("0.87004")) * mp.cosh(1) - mp.sinh(1))
        np.testing.assert_allclose(evaluate(fam, "plus", 1.0), exact, rtol=1e-13)
        # the five-digit reference figure is accurate to one unit in the last place
        np.testing.assert_allclose(evaluate(fam, "plus", 1.0), 0.26413, atol=1e-5)

    def test_outside_domain(self):
        with pytest.raises(DomainViolation):
            evaluate(Hyperbolic(WeightParams(1.0, 1.0, 1.0)), "plus", 1.1)

    def test_bad_side(self):
        with pytest.raises(ValueError):
            evaluate(Constant(1.0), "left", 0.0)


class TestDerivative:
    def test_exponential_slopes_at_origin(self):
        fam = Hyperbolic(WeightParams(2.0, 1.0, 1.0))
        np.testing.assert_allclose(evaluate_derivative(fam, "plus", 0.0), -2.0, rtol=1e-14)
        np.testing.assert_allclose(evaluate_derivative(fam, "minus", 0.0), 2.0, rtol=1e-14)

    def test_affine_slope(self):
        fam = Affine(0.2, 1.0)
        x = np.linspace(-1, 1, 7)
        np.testing.assert_allclose(evaluate_derivative(fam, "plus", x), 0.4)
        np.testing.assert_allclose(evaluate_derivative(fam, "minus", x), -0.4)

    def test_representation_squares_to_psi2(self):
        p = WeightParams(1.3, 0.9, 1.0)
        r = Hyperbolic(p).representation()
        np.testing.assert_allclose(r @ r, p.psi**2 * np.eye(2), atol=1e-13)


class TestAffineConstant:
    def test_positivity(self):
        with pytest.raises(PositivityViolation):
            Affine(0.5, 1.0)

    def test_zero_slope_is_constant(self):
        x = np.linspace(-1, 1, 11)
        for fam in (Affine(0.0, 1.0), Constant(1.0)):
            hp, hm = fam.values(x)
            np.testing.assert_array_equal(hp, 1.0)
            np.testing.assert_array_equal(hm, 1.0)

    def test_affine_values(self):
        hp, hm = Affine(0.3, 1.0).values(np.array([-1.0, 0.0, 1.0]))
        np.testing.assert_allclose(hp, [0.4, 1.0, 1.6])
        np.testing.assert_allclose(hm, [1.6, 1.0, 0.4])


class TestRatio:
    def test_one_at_origin(self):
        assert ratio(WeightParams(0.7, 0.8, 1.0), 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_at_right_end(self):
        s = mp.sqrt(mp.mpf("0.87004"))
        exact = float((s - mp.tanh(1)) / (s + mp.tanh(1)))
        np.testing.assert_allclose(ratio(WeightParams(1.0, 0.87004, 1.0), 1.0), exact, rtol=1e-13)
        np.testing.assert_allclose(exact, 0.10102, atol=5e-6)

    def test_half_ratio_closed_form(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            psi = rng.uniform(0.05, 3.0)
            length = rng.uniform(0.2, 2.0)
            t2 = math.tanh(psi * length) ** 2
            ups = t2 + rng.uniform(0.05, 1.0) * (1 - t2)
            p = WeightParams(psi, ups, length)
            np.testing.assert_allclose(half_ratio(p), ratio(p, length / 2), rtol=1e-12)


class TestSampleTable:
    def test_columns(self):
        p = WeightParams(1.0, 0.87004, 1.0)
        tab = sample_table(p, 5)
        assert tab.shape == (5, 4)
        np.testing.assert_allclose(tab[:, 0], np.linspace(-1, 1, 5))
        np.testing.assert_allclose(tab[:, 3], tab[:, 1] / tab[:, 2], rtol=1e-14)


class TestWeightIdentities:
    """Identities of the hyperbolic family checked on random valid parameters."""

    @settings(max_examples=50, deadline=None)
    @given(valid_params())
    def test_reflection(self, p):
        fam = Hyperbolic(p)
        x = np.linspace(-p.half_length, p.half_length, 201)
        np.testing.assert_allclose(fam.minus(x), fam.plus(-x), rtol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(valid_params())
    def test_second_derivative(self, p):
        fam = Hyperbolic(p)
        x = np.linspace(-p.half_length, p.half_length, 201)
        r = fam.representation()
        d1p, d1m = fam.derivatives(x)
        d2p = r[0, 0] * d1p + r[0, 1] * d1m
        d2m = r[1, 0] * d1p + r[1, 1] * d1m
        hp, hm = fam.values(x)
        np.testing.assert_allclose(d2p, p.psi**2 * hp, rtol=1e-10)
        np.testing.assert_allclose(d2m, p.psi**2 * hm, rtol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(valid_params(), st.integers(0, 2**32 - 1))
    def test_derivative_vs_finite_difference(self, p, seed):
        # central difference evaluated in 30-digit arithmetic, so the oracle
        # carries no cancellation error from cosh - sinh
        fam = Hyperbolic(p)
        h = mp.mpf("1e-5")
        x = np.random.default_rng(seed).uniform(-p.half_length + 2e-5, p.half_length - 2e-5, 50)
        dp, dm = fam.derivatives(x)
        with mp.workdps(30):
            s, psi = mp.sqrt(mp.mpf(p.upsilon)), mp.mpf(p.psi)

            def hp(t):
                return s * mp.cosh(psi * t) - mp.sinh(psi * t)

            fd_p = [float((hp(mp.mpf(t) + h) - hp(mp.mpf(t) - h)) / (2 * h)) for t in x]
            fd_m = [float((hp(-mp.mpf(t) - h) - hp(-mp.mpf(t) + h)) / (2 * h)) for t in x]
        np.testing.assert_allclose(dp, fd_p, rtol=1e-6)
        np.testing.assert_allclose(dm, fd_m, rtol=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(valid_params())
    def test_monotone(self, p):
        fam = Hyperbolic(p)
        x = np.linspace(-p.half_length, p.half_length, 1000)
        assert np.all(np.diff(fam.plus(x)) <= 0)
        assert np.all(np.diff(fam.minus(x)) >= 0)
        assert np.all(fam.plus(x) > 0)

    @settings(max_examples=50, deadline=None)
    @given(valid_params())
    def test_ratio_decreasing_in_unit_interval(self, p):
        x = np.linspace(0, p.half_length, 400)
        q = ratio(p, x)
        assert np.all(np.diff(q) < 0)
        assert np.all((q[1:] > 0) & (q[1:] < 1))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.01, 4.0), st.floats(0.1, 2.0))
    def test_exponential_special_case(self, psi, length):
        x = np.linspace(-length, length, 101)
        h = Hyperbolic(WeightParams(psi, 1.0, length))
        e = Exponential(psi, length)
        np.testing.assert_allclose(h.plus(x), e.plus(x), rtol=1e-14)
        np.testing.assert_allclose(h.minus(x), e.minus(x), rtol=1e-14)
        # cosh - sinh cancels for large psi x; compare on the scale of the larger weight
        scale = 1e-14 * math.exp(psi * length)
        np.testing.assert_allclose(h.plus(x), np.exp(-psi * x), rtol=1e-14, atol=scale)
        np.testing.assert_allclose(h.minus(x), np.exp(psi * x), rtol=1e-14, atol=scale)
