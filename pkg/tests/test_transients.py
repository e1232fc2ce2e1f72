# Peak time, width and opacity scans of the transmitted density

import math

import numpy as np

from common import GAAS, GAAS_TAU_P, GAAS_DELTA_TAU, GAAS_FULL_WIDTH, gaas_solution, gaas_series, raises
from units import DomainError
from barrier import BarrierSpec
from shutter import ShutterSolution, psi_free
from transients import (AnalysisError, WidthUndefinedError, WidthRule, DEFAULT_WIDTH_RULE, TimeSeries,
                        density_series, find_peak, transient_summary, calibrate_width_rule, scan_spec,
                        opacity_scan, scan_deviation)

def _gaussian(tau):
    return np.exp(-0.5 * (np.asarray(tau) - 5.0) ** 2)

FWHM = 2.0 * math.sqrt(2.0 * math.log(2.0))

def test_synthetic_peak_with_evaluator():
    taus = np.linspace(0.05, 10.0, 200)
    series = TimeSeries(0.0, taus, _gaussian(taus), evaluator=lambda t: float(_gaussian(t)))
    full = transient_summary(series, WidthRule.FULL_WIDTH)
    assert abs(full.tau_p - 5.0) < 1e-5
    assert abs(full.delta_tau - FWHM) < 1e-6
    right = transient_summary(series, "right_half")
    left = transient_summary(series, WidthRule.LEFT_HALF)
    assert abs(right.delta_tau - 0.5 * FWHM) < 1e-5
    assert abs(left.delta_tau - 0.5 * FWHM) < 1e-5

def test_synthetic_peak_on_grid():
    taus = np.linspace(0.05, 10.0, 200)
    summary = transient_summary(TimeSeries(0.0, taus, _gaussian(taus)))
    assert abs(summary.tau_p - 5.0) < 1e-2
    assert abs(summary.delta_tau - FWHM) < 1e-2
    assert summary.width_rule == DEFAULT_WIDTH_RULE

def test_no_interior_maximum():
    taus = np.linspace(0.1, 5.0, 50)
    raises(AnalysisError, find_peak, TimeSeries(0.0, taus, 1.0 - np.exp(-taus)))

def test_width_undefined():
    taus = np.linspace(0.1, 5.0, 50)
    values = np.where(taus < 1.0, taus, 1.0 - 0.1 * (taus - 1.0))
    e = raises(WidthUndefinedError, transient_summary, TimeSeries(0.0, taus, values))
    assert e.side == "right"
    assert transient_summary(TimeSeries(0.0, taus, values), WidthRule.LEFT_HALF).delta_tau > 0

def test_time_series_validation():
    raises(DomainError, TimeSeries, 0.0, [1.0, 2.0], [1.0])
    raises(DomainError, TimeSeries, 0.0, [1.0, 1.0], [1.0, 2.0])
    raises(DomainError, TimeSeries, 0.0, [1.0, 2.0], [1.0, -2.0])

def test_density_series_arguments():
    sol = gaas_solution()
    raises(DomainError, density_series, sol, -5.0, 10.0, 64)
    raises(DomainError, density_series, sol, -5.0, 10.0, 64, workers=4)
    free = BarrierSpec.free(GAAS.L, GAAS.mass_ratio, GAAS.E)
    assert density_series(ShutterSolution.build(free), -5.0, 10.0, 64).values.shape == (64,)
    raises(DomainError, density_series, sol, GAAS.L, 10.0, 8)
    raises(DomainError, density_series, sol, GAAS.L, 0.0, 100)

def test_causal_flag():
    series = density_series(gaas_solution(), GAAS.L, 0.1, 20)
    assert abs(series.tau_0 - GAAS.L / 299.792458) < 1e-15
    assert not series.causal[0] and series.causal[-1]
    assert np.all(series.causal == (series.taus >= series.tau_0))

def test_gaas_peak():
    summary = transient_summary(gaas_series())
    assert abs(summary.tau_p - GAAS_TAU_P) <= 0.03 * GAAS_TAU_P
    assert abs(summary.tau_p / GAAS.tau_f - 0.46) <= 0.02
    assert summary.tau_p < GAAS.tau_f
    assert summary.delta_tau > summary.tau_p

def test_width_rule_calibration():
    best, summaries = calibrate_width_rule(gaas_series(), GAAS_DELTA_TAU)
    assert best == WidthRule.FULL_WIDTH == DEFAULT_WIDTH_RULE
    full = summaries[WidthRule.FULL_WIDTH]
    assert abs(full.delta_tau - GAAS_FULL_WIDTH) <= 0.03 * GAAS_FULL_WIDTH
    assert abs(full.t_left - 2.737) <= 0.05 and abs(full.t_right - 9.532) <= 0.1
    assert abs(full.delta_tau / GAAS.tau_f - 0.59) <= 0.03
    assert full.delta_tau > full.tau_p
    # the half-width rules fall further from the quoted width
    assert abs(summaries[WidthRule.RIGHT_HALF].delta_tau - 4.245) <= 0.1
    assert abs(summaries[WidthRule.LEFT_HALF].delta_tau - 2.55) <= 0.1
    assert all(s.delta_tau < 0.6 * GAAS_DELTA_TAU for s in summaries.values())

def test_gaas_series_shape():
    series = gaas_series()
    _, _, peak = find_peak(series)
    assert series.values[0] < 1e-3 * peak
    assert series.values[-1] < 0.1 * peak
    # secondary structure after the main peak
    window = (series.taus > 2.0 * GAAS.tau_f) & (series.taus < 4.0 * GAAS.tau_f)
    curvature = np.sign(np.diff(series.values[window], 2))
    assert np.count_nonzero(np.diff(curvature)) >= 2

def test_peak_time_step_independence():
    sol = gaas_solution()
    a = find_peak(density_series(sol, GAAS.L, 3.0 * GAAS.tau_f, 300))[1]
    b = find_peak(density_series(sol, GAAS.L, 3.0 * GAAS.tau_f, 600))[1]
    assert abs(a - b) <= 0.002 * a

def test_parallel_series():
    sol = gaas_solution()
    a = density_series(sol, GAAS.L, 2.0 * GAAS.tau_f, 64)
    b = density_series(sol, GAAS.L, 2.0 * GAAS.tau_f, 64, workers=4)
    assert np.array_equal(a.values, b.values)

def test_free_series():
    free = BarrierSpec.free(GAAS.L, GAAS.mass_ratio, GAAS.E)
    series = density_series(ShutterSolution.build(free), free.L, 3.0 * free.tau_f, 64)
    expected = np.abs(psi_free(free.k, free.mass_ratio, free.L, series.taus)) ** 2
    assert np.allclose(series.values, expected, rtol=1e-12, atol=0)

def test_scan_spec():
    s = scan_spec(GAAS, "length", 5.0)
    assert abs(s.alpha - 5.0) < 1e-12 and s.V0 == GAAS.V0
    h = scan_spec(GAAS, "height", 8.0)
    assert abs(h.alpha - 8.0) < 1e-12 and h.L == GAAS.L and h.E == GAAS.E
    raises(DomainError, scan_spec, GAAS, "mass", 5.0)

def test_scan_arguments():
    raises(DomainError, opacity_scan, GAAS, "length", (2.0, 5.0), 3)
    raises(DomainError, opacity_scan, GAAS, "length", (0.5, 5.0), 4)

def test_thin_barrier_plateau():
    points = opacity_scan(GAAS, "length", (2.0, 5.0), 4)
    assert all(p.ok for p in points)
    tau_p = np.array([p.tau_p for p in points])
    assert (tau_p.max() - tau_p.min()) / tau_p.mean() < 0.15

def test_opaque_barrier_growth():
    points = opacity_scan(GAAS, "length", (6.0, 10.0), 5)
    assert all(p.ok for p in points)
    alpha = np.array([p.alpha for p in points])
    tau_p = np.array([p.tau_p for p in points])
    assert np.all(np.diff(tau_p) > 0)
    fit = np.polyval(np.polyfit(alpha, tau_p, 1), alpha)
    assert np.max(np.abs(fit - tau_p)) < 0.1 * (tau_p.max() - tau_p.min())
    for p in points:
        if not math.isnan(p.delta_tau):
            assert p.delta_tau > p.tau_p

def test_height_scan_deviation():
    points = opacity_scan(GAAS, "height", (6.0, 12.0), 4)
    deviation = scan_deviation(points)
    assert math.isfinite(deviation) and deviation < 1.0

def test_failed_points_are_flagged():
    points = opacity_scan(GAAS, "length", (2.0, 5.0), 4, steps=8)
    assert len(points) == 4
    assert not any(p.ok for p in points)
    assert all("DomainError" in p.error and math.isnan(p.tau_p) for p in points)
    raises(AnalysisError, scan_deviation, points)
