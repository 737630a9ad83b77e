from __future__ import annotations

import math
import time

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from edrpricing.errors import CalibrationRangeError, DomainError, NoRealSolutionError, SingularSlopeError
from edrpricing.prospect_utility import (
    CALIBRATION_FRACTIONS,
    CALIBRATION_RETURNS,
    KTUtilityParams,
    SlopeCase,
    calibrate_risk_aversion,
    iso_utility_curvature,
    iso_utility_path_curvature,
    iso_utility_slope,
    kt_value,
    risk_aversion_table,
    risk_neutral_amplitude,
    rnc_residual,
    rnc_slope,
    solve_shrink,
    trace_risk_neutral_curve,
    utility_score,
)
from edrpricing.risk_measures import gaussian_edr

from oracles import (
    REFERENCE_CALIBRATION,
    amplitude_closed_form,
    amplitude_grid_scan,
    iso_utility_gap,
    shrink_grid_scan,
)

LAM = 2.25


def after(a, x, lam=LAM):
    return KTUtilityParams(a, lam, -x)


class TestValueFunction:
    def test_examples(self):
        p = KTUtilityParams(5.0)
        assert kt_value(p, 0.05) == pytest.approx(0.221199, abs=1e-6)
        assert kt_value(p, 0.0) == 0.0
        assert kt_value(p, -0.05) == pytest.approx(-0.497698, abs=1e-6)

    @given(st.floats(0.1, 20), st.floats(1.0, 5.0), st.floats(1e-4, 1.0))
    def test_loss_mirror(self, a, lam, w):
        p = KTUtilityParams(a, lam)
        assert kt_value(p, -w) == -lam * kt_value(p, w)

    def test_shape_on_grid(self):
        p = KTUtilityParams(3.0)
        w = np.linspace(-0.5, 0.5, 1001)
        v = kt_value(p, w)
        assert np.all(np.diff(v) > 0)
        second = v[2:] - 2 * v[1:-1] + v[:-2]
        mid = w[1:-1]
        assert np.all(second[mid > 1e-9] < 0)
        assert np.all(second[mid < -1e-9] > 0)
        assert v[500] == 0.0

    def test_array_matches_scalar(self):
        p = KTUtilityParams(2.0, 3.0)
        w = np.array([-0.3, -0.01, 0.0, 0.02, 0.4])
        assert np.array_equal(kt_value(p, w), [kt_value(p, float(x)) for x in w])

    def test_param_validation(self):
        with pytest.raises(DomainError):
            KTUtilityParams(0.0)
        with pytest.raises(DomainError):
            KTUtilityParams(1.0, lam=0.5)


class TestAmplitude:
    def test_anchor(self):
        t = time.perf_counter()
        y = risk_neutral_amplitude(after(5, 0.05))
        assert time.perf_counter() - t < 1.0
        assert y == pytest.approx(0.0718, abs=5e-4)
        assert 0.05 + y == pytest.approx(0.122, abs=5e-4)

    def test_zero_loss(self):
        assert risk_neutral_amplitude(after(5, 0.0)) == 0.0

    def test_a2_against_grid_scan(self):
        y = risk_neutral_amplitude(after(2, 0.05))
        assert y == pytest.approx(amplitude_grid_scan(2, LAM, 0.05), abs=1e-8)
        assert y == pytest.approx(0.0122, abs=1e-4)

    def test_positive_reference_rejected(self):
        with pytest.raises(DomainError):
            risk_neutral_amplitude(KTUtilityParams(5, LAM, 0.05))

    @pytest.mark.parametrize("a,x", [(10, 0.05), (5, 0.5), (0.5, 1.0)])
    def test_no_real_solution(self, a, x):
        assert amplitude_closed_form(a, LAM, x) is None
        with pytest.raises(NoRealSolutionError):
            risk_neutral_amplitude(after(a, x))

    @given(st.floats(0.1, 20.0), st.floats(1.0, 4.0), st.floats(1e-3, 0.5))
    def test_matches_closed_form(self, a, lam, x):
        ref = amplitude_closed_form(a, lam, x)
        if ref is None:
            with pytest.raises(NoRealSolutionError):
                risk_neutral_amplitude(after(a, x, lam))
        else:
            assert risk_neutral_amplitude(after(a, x, lam)) == pytest.approx(ref, abs=1e-8)

    def test_increasing_in_a(self):
        ys = [risk_neutral_amplitude(after(a, 0.05)) for a in (0.5, 1, 2, 5)]
        assert all(u < v for u, v in zip(ys, ys[1:]))
        assert risk_neutral_amplitude(after(1e-4, 0.05)) < 1e-5

    @pytest.mark.parametrize("u", [0.01, 0.5, 1.0])
    @pytest.mark.parametrize("a", [0.5, 5, 10])
    def test_solution_grows_with_remaining_loss(self, a, u):
        h = 1e-6
        lo, hi = amplitude_closed_form(a, LAM, u - h), amplitude_closed_form(a, LAM, u + h)
        if lo is None or hi is None:
            with pytest.raises(NoRealSolutionError):
                risk_neutral_amplitude(after(a, u))
            return
        d = (risk_neutral_amplitude(after(a, u + h)) - risk_neutral_amplitude(after(a, u - h))) / (2 * h)
        assert d > 0


class TestCurve:
    def test_endpoints_anchor(self):
        c = trace_risk_neutral_curve(after(5, 0.05), 101)
        assert c.points[0].shrink == 0.0 and c.points[-1].shrink == c.y
        assert c.points[0].variance == pytest.approx(0.122**2, abs=2e-4)
        assert c.points[-1].variance == 0.0
        assert not c.gaps

    def test_interior_against_grid_scan(self):
        p = after(5, 0.05)
        y = risk_neutral_amplitude(p)
        c2 = solve_shrink(p, 0.05, y, 0.025)
        assert c2 == pytest.approx(shrink_grid_scan(5, LAM, 0.05, y, 0.025), abs=1e-6)

    @pytest.mark.parametrize("a,x", [(2, 0.02), (2, 0.05), (5, 0.02), (5, 0.05), (10, 0.02)])
    def test_properties(self, a, x):
        p = after(a, x)
        c = trace_risk_neutral_curve(p, 101)
        amps = np.array([q.amplitude for q in c.points])
        assert np.all(np.diff(amps) < 0)
        assert amps[0] == pytest.approx(x + c.y) and amps[-1] == 0.0
        for q in c.points:
            assert abs(rnc_residual(p, x, c.y, q.expected_return, q.shrink)) < 1e-7
            assert q.edr_coordinate <= q.expected_return <= q.prospect_coordinate

    @pytest.mark.parametrize("a,x", [(2, 0.05), (5, 0.05), (10, 0.02)])
    def test_shrink_closed_form(self, a, x):
        # the balance equation in (x - c1, y - c2) is the amplitude equation
        p = after(a, x)
        c = trace_risk_neutral_curve(p, 51)
        for q in c.points[1:-1]:
            ref = c.y - amplitude_closed_form(a, LAM, x - q.expected_return)
            assert q.shrink == pytest.approx(ref, abs=1e-10)

    def test_slope_matches_differences(self):
        p = after(5, 0.05)
        c = trace_risk_neutral_curve(p, 1001)
        c1 = np.array([q.expected_return for q in c.points])
        c2 = np.array([q.shrink for q in c.points])
        fd = (c2[2:] - c2[:-2]) / (c1[2:] - c1[:-2])
        an = [rnc_slope(p, 0.05, c.y, u, v) for u, v in zip(c1[1:-1], c2[1:-1])]
        assert np.max(np.abs(fd - an)) < 1e-3

    def test_slope_endpoints(self):
        p = after(5, 0.05)
        y = risk_neutral_amplitude(p)
        assert rnc_slope(p, 0.05, y, 0.05, y) == 0.0
        assert rnc_slope(p, 0.05, y, 0.0, 0.0) == pytest.approx(6.2809, abs=1e-3)

    def test_singular_slope(self):
        p = KTUtilityParams(1.0, 2.0)
        # denominator e^{-a(d-y)} - lam e^{-a(2c+d-2x-y)} vanishes when 2a(c-x) = ln lam
        c = 0.5 * math.log(2.0)
        with pytest.raises(SingularSlopeError):
            rnc_slope(p, c, 0.0, 0.0, 0.0)

    def test_needs_two_points(self):
        with pytest.raises(DomainError):
            trace_risk_neutral_curve(after(5, 0.05), 1)


class TestIsoUtility:
    def test_examples(self):
        s, case = iso_utility_slope(3, 0.1, 0.0)
        assert s == pytest.approx(-0.88235, abs=1e-5) and case is SlopeCase.NORMAL
        s, case = iso_utility_slope(3, 0.5, 0.0)
        assert s == pytest.approx(1.7442, abs=1e-4) and case is SlopeCase.STEEP
        assert iso_utility_slope(3, 0.1, 0.1) == (0.0, SlopeCase.NORMAL)
        assert iso_utility_curvature(3, 0.1, 0.0) == pytest.approx(16.61, abs=1e-2)
        assert utility_score(3, 0.1, 0.0) == pytest.approx(0.0765625, abs=1e-15)
        assert utility_score(3, 0.07, 0.07) == 0.07

    def test_singular(self):
        e = 0.64 / 2.0
        s, case = iso_utility_slope(2.0, e, 0.0)
        assert math.isnan(s) and case is SlopeCase.SINGULAR
        with pytest.raises(SingularSlopeError):
            iso_utility_curvature(2.0, e, 0.0)

    def test_edr_above_mean(self):
        with pytest.raises(DomainError):
            utility_score(3, 0.0, 0.1)

    @given(st.floats(0.5, 10), st.floats(-0.3, 0.3), st.floats(1e-3, 0.06))
    def test_derivatives_match_iso_curve(self, a, edr, gap):
        u = utility_score(a, edr + gap, edr)
        k = a / 0.64 * gap
        assume(k < 0.9)
        # step scaled to the distance from the k = 1 singularity
        h = 1e-4 * 0.64 * (1 - k) / a
        g = lambda z: iso_utility_gap(a, u, z)
        assert g(edr) == pytest.approx(edr + gap, abs=1e-12)
        slope, case = iso_utility_slope(a, edr + gap, edr)
        fd1 = (g(edr + h) - g(edr - h)) / (2 * h)
        fd2 = (g(edr + h) - 2 * g(edr) + g(edr - h)) / h**2
        assert fd1 == pytest.approx(slope, rel=1e-5, abs=1e-9)
        assert fd2 == pytest.approx(iso_utility_path_curvature(a, edr + gap, edr), rel=1e-3)
        # the fixed-E form is the derivative of the slope with E held constant
        s = lambda z: iso_utility_slope(a, edr + gap, z)[0]
        fd_fixed = (s(edr + h) - s(edr - h)) / (2 * h)
        assert fd_fixed == pytest.approx(iso_utility_curvature(a, edr + gap, edr), rel=1e-3)

    @given(st.floats(0.5, 10), st.floats(0.001, 0.5), st.floats(-0.5, 0.2))
    def test_case_labels(self, a, gap, edr):
        k = a / 0.64 * gap
        assume(abs(k - 1) > 1e-9)
        slope, case = iso_utility_slope(a, edr + gap, edr)
        if k < 1:
            assert case is SlopeCase.NORMAL and slope < 0
            assert iso_utility_curvature(a, edr + gap, edr) > 0
            assert iso_utility_path_curvature(a, edr + gap, edr) > 0
        else:
            assert case is SlopeCase.STEEP and slope > 1

    @pytest.mark.parametrize("a,mu,sigma", [(3, 0.08, 0.2), (5, 0.1, 0.1), (1, 0.02, 0.4)])
    def test_gaussian_consistency(self, a, mu, sigma):
        via_edr = utility_score(a, mu, gaussian_edr(mu, sigma))
        mean_variance = mu - 0.5 * a * sigma**2
        rounding = 0.5 * a * sigma**2 * abs(1 - (2 / math.pi) / 0.64)
        assert abs(via_edr - mean_variance) <= rounding + 1e-15


class TestCalibration:
    def test_reference_table(self):
        table = risk_aversion_table()
        assert len(table) == 20 and all(len(r) == 7 for r in table)
        for row, ref in zip(table, REFERENCE_CALIBRATION):
            got = [row[f"{x:g}"] for x in CALIBRATION_FRACTIONS]
            assert np.max(np.abs(np.array(got) - ref)) < 1e-5

    def test_anchors(self):
        assert calibrate_risk_aversion(0.5, 0.01) == pytest.approx(0.665896, abs=1e-6)
        assert calibrate_risk_aversion(0.95, 0.20) == pytest.approx(3.393772, abs=1e-6)

    @given(st.sampled_from(CALIBRATION_FRACTIONS), st.sampled_from(CALIBRATION_RETURNS[:-1]))
    def test_unit_slope_in_expected_return(self, x, e):
        step = calibrate_risk_aversion(x, e + 0.01) - calibrate_risk_aversion(x, e)
        assert step == pytest.approx(0.01, abs=1e-14)

    def test_out_of_range(self):
        with pytest.raises(CalibrationRangeError):
            calibrate_risk_aversion(0.01, 0.0)
        with pytest.raises(DomainError):
            calibrate_risk_aversion(1.0, 0.05)
