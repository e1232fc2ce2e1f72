#
# Copyright (2025) The tunnel-tx authors
#
# This program is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License,
# or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <https://www.gnu.org/licenses/>.
#

import math
import enum
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from units import TunnelingError, DomainError, energy_from_wavenumber, light_crossing_time
from shutter import ShutterSolution, check_position, normalized_density
from clocks import clock_table, ClockUndefinedError

MIN_STEPS = 16
SCAN_MIN_WINDOW = 30.0      # fs
SCAN_WINDOW_TF = 4.0        # in units of tau_f
SCAN_STEPS = 800
REPORTED_DELTA_TAU = 13.48  # fs, quoted width at the example point; the closest rule gives 6.8 fs

class AnalysisError(TunnelingError):
    pass

class WidthUndefinedError(AnalysisError):
    def __init__(self, side, msg):
        self.side = side
        super().__init__(f"half-maximum crossing on the {side} side: {msg}")

class WidthRule(enum.Enum):
    FULL_WIDTH = "full_width"
    RIGHT_HALF = "right_half"
    LEFT_HALF = "left_half"

# closest to the quoted width at the example point of the three rules
DEFAULT_WIDTH_RULE = WidthRule.FULL_WIDTH

@dataclass
class TimeSeries:
    x: float
    taus: np.ndarray
    values: np.ndarray
    evaluator: object = None    # continuous tau -> normalized density, when available
    tau_0: float = 0.0

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.taus.shape != self.values.shape or self.taus.ndim != 1:
            raise DomainError("time series needs matching 1-D tau and value arrays")
        if np.any(np.diff(self.taus) <= 0):
            raise DomainError("time series taus must be strictly increasing")
        if np.any(self.values < 0):
            raise DomainError("normalized density cannot be negative")

    @property
    def causal(self):
        return self.taus >= self.tau_0

@dataclass(frozen=True)
class TransientSummary:
    tau_p: float
    delta_tau: float
    peak_value: float
    tau_0: float
    width_rule: WidthRule
    t_left: float = None
    t_right: float = None

def density_series(sol, x, t_max, steps, workers=1, logger=None):
    if steps < MIN_STEPS:
        raise DomainError(f"density series needs at least {MIN_STEPS} steps, got {steps}")
    if not t_max > 0:
        raise DomainError(f"t_max must be positive, got {t_max}")
    check_position(sol.spec, x)

    taus = t_max * np.arange(1, steps + 1) / steps

    def evaluate(chunk):
        try:
            return normalized_density(sol, x, chunk)
        except TunnelingError as e:
            raise AnalysisError(f"evaluation failed at x={x} nm, tau in [{chunk[0]:.6g}, {chunk[-1]:.6g}] fs: {e}") from e

    if workers > 1:
        chunks = np.array_split(taus, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.concatenate(list(pool.map(evaluate, chunks)))
    else:
        values = evaluate(taus)

    if logger is not None:
        logger.debug(f"density series at x={x} nm: {steps} points up to {t_max:.4f} fs, max {values.max():.6g}")

    def evaluator(tau):
        try:
            return float(normalized_density(sol, x, tau))
        except TunnelingError as e:
            raise AnalysisError(f"evaluation failed at x={x} nm, tau={tau:.6g} fs: {e}") from e

    return TimeSeries(x, taus, values, evaluator=evaluator, tau_0=light_crossing_time(sol.spec.L))

def _parabolic_vertex(t, v):
    (t0, t1, t2), (v0, v1, v2) = t, v
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    A = (t2 * (v1 - v0) + t1 * (v0 - v2) + t0 * (v2 - v1)) / denom
    B = (t2 * t2 * (v0 - v1) + t1 * t1 * (v2 - v0) + t0 * t0 * (v1 - v2)) / denom
    C = (t1 * t2 * (t1 - t2) * v0 + t2 * t0 * (t2 - t0) * v1 + t0 * t1 * (t0 - t1) * v2) / denom
    if A >= 0:
        return t1, v1
    tv = -B / (2.0 * A)
    return tv, A * tv * tv + B * tv + C

def find_peak(series):
    """Grid maximum, parabolic refinement, then a bounded polish on the evaluator."""
    values, taus = series.values, series.taus
    i = int(np.argmax(values))
    if i == 0 or i == len(values) - 1:
        raise AnalysisError(f"no interior maximum at x={series.x} nm (maximum at tau={taus[i]:.6g} fs)")
    lo, hi = taus[i - 1], taus[i + 1]
    tau_p, peak = _parabolic_vertex(taus[i - 1:i + 2], values[i - 1:i + 2])

    if series.evaluator is not None:
        res = minimize_scalar(lambda t: -series.evaluator(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-7 * hi})
        if -res.fun >= values[i]:
            tau_p, peak = float(res.x), float(-res.fun)
        else:
            tau_p, peak = taus[i], values[i]
    return i, float(tau_p), float(peak)

def _crossing(series, i_in, i_out, half):
    # i_in above half, i_out below; the two indices are adjacent
    a, b = sorted((series.taus[i_in], series.taus[i_out]))
    if series.evaluator is not None:
        return brentq(lambda t: series.evaluator(t) - half, a, b, xtol=1e-10)
    va, vb = series.values[min(i_in, i_out)], series.values[max(i_in, i_out)]
    return a + (half - va) * (b - a) / (vb - va)

def half_max_crossings(series, i_peak, peak, need_left=True, need_right=True):
    half = 0.5 * peak
    below = series.values < half
    t_left = t_right = None
    if need_left:
        left = np.nonzero(below[:i_peak])[0]
        if len(left) == 0:
            raise WidthUndefinedError("left", f"density stays above {half:.6g} before the peak")
        j = left[-1]
        t_left = _crossing(series, j + 1, j, half)
    if need_right:
        right = np.nonzero(below[i_peak + 1:])[0]
        if len(right) == 0:
            raise WidthUndefinedError("right", f"density stays above {half:.6g} up to tau={series.taus[-1]:.6g} fs")
        j = i_peak + 1 + right[0]
        t_right = _crossing(series, j - 1, j, half)
    return t_left, t_right

def transient_summary(series, rule=DEFAULT_WIDTH_RULE):
    rule = WidthRule(rule)
    i, tau_p, peak = find_peak(series)
    t_left, t_right = half_max_crossings(series, i, peak,
                                         need_left=rule != WidthRule.RIGHT_HALF,
                                         need_right=rule != WidthRule.LEFT_HALF)
    if rule == WidthRule.FULL_WIDTH:
        delta_tau = t_right - t_left
    elif rule == WidthRule.RIGHT_HALF:
        delta_tau = t_right - tau_p
    else:
        delta_tau = tau_p - t_left

    if not tau_p > series.tau_0:
        raise AnalysisError(f"peak at tau={tau_p:.6g} fs precedes the causal cutoff {series.tau_0:.6g} fs")
    if not delta_tau > 0:
        raise AnalysisError(f"non-positive width {delta_tau:.6g} fs under rule {rule.value}")
    return TransientSummary(tau_p, delta_tau, peak, series.tau_0, rule, t_left, t_right)

def calibrate_width_rule(series, target=REPORTED_DELTA_TAU):
    """Rule whose width lands closest to target, with every rule's summary."""
    summaries = {}
    for rule in WidthRule:
        try:
            summaries[rule] = transient_summary(series, rule)
        except WidthUndefinedError:
            pass
    if not summaries:
        raise AnalysisError("no width rule is defined for this series")
    best = min(summaries, key=lambda r: abs(summaries[r].delta_tau - target))
    return best, summaries


@dataclass(frozen=True)
class ScanPoint:
    alpha: float
    V0: float
    L: float
    tau_p: float = math.nan
    delta_tau: float = math.nan
    tau_B: float = math.nan
    peak_value: float = math.nan
    error: str = None

    @property
    def ok(self):
        return self.error is None

def scan_spec(base, vary, alpha):
    if vary == "length":
        return base.replace(L=alpha / base.k0)
    if vary == "height":
        k0 = alpha / base.L
        return base.replace(V0=energy_from_wavenumber(k0, base.mass_ratio))
    raise DomainError(f"scan variable must be 'length' or 'height', got {vary!r}")

def scan_point(spec, truncation=100, steps=SCAN_STEPS, rule=DEFAULT_WIDTH_RULE, logger=None):
    try:
        sol = ShutterSolution.build(spec, truncation=truncation)
        t_max = max(SCAN_WINDOW_TF * spec.tau_f, SCAN_MIN_WINDOW)
        series = density_series(sol, spec.L, t_max, steps)
        i, tau_p, peak = find_peak(series)
        try:
            delta_tau = transient_summary(series, rule).delta_tau
        except WidthUndefinedError as e:
            if logger is not None:
                logger.warning(f"alpha={spec.alpha:.4f}: {e}")
            delta_tau = math.nan
        try:
            tau_B = clock_table(spec).tau_B
        except ClockUndefinedError as e:
            tau_B = e.table.tau_B
    except TunnelingError as e:
        if logger is not None:
            logger.warning(f"scan point alpha={spec.alpha:.4f} ({spec.describe()}) failed: {type(e).__name__}: {e}")
        return ScanPoint(spec.alpha, spec.V0, spec.L, error=f"{type(e).__name__}: {e}")
    return ScanPoint(spec.alpha, spec.V0, spec.L, tau_p, delta_tau, tau_B, peak)

def opacity_scan(base, vary, alpha_range, points, truncation=100, steps=SCAN_STEPS,
                 rule=DEFAULT_WIDTH_RULE, workers=1, logger=None):
    lo, hi = alpha_range
    if points < 4:
        raise DomainError(f"opacity scan needs at least 4 points, got {points}")
    if not 1 <= lo <= hi:
        raise DomainError(f"opacity range must satisfy 1 <= lo <= hi, got ({lo}, {hi})")
    specs = [scan_spec(base, vary, a) for a in np.linspace(lo, hi, points)]
    run = lambda s: scan_point(s, truncation=truncation, steps=steps, rule=rule, logger=logger)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            result = list(pool.map(run, specs))
    else:
        result = [run(s) for s in specs]

    if logger is not None:
        failed = sum(1 for p in result if not p.ok)
        logger.info(f"opacity scan over {vary}: {points} points, {failed} failed")
    return result

def scan_deviation(points):
    """max |tau_B - tau_p| / tau_p over the successful points."""
    good = [p for p in points if p.ok]
    if not good:
        raise AnalysisError("no successful scan points")
    return max(abs(p.tau_B - p.tau_p) / p.tau_p for p in good)
