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

"""Crank-Nicolson reference integrator for the shutter problem.

Second-order finite differences between hard walls at x_left and x_right,

    (1 + i dt H / 2 hbar) psi^{n+1} = (1 - i dt H / 2 hbar) psi^n

with the left-hand operator factorized once (SuperLU). The barrier is
cell-averaged onto the grid, so the discrete barrier has width exactly L
even when 0 or L fall between nodes.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from units import TunnelingError, DomainError, CONSTANTS
from barrier import transmission_amplitude
from transients import TimeSeries
from shutter import normalized_density

DEFAULT_DX = 0.02           # nm
DEFAULT_DT = 0.0025         # fs
DEFAULT_T_MAX_TF = 3.0
WALL_MARGIN = 1.1
SPEED_SAMPLES = 4096
TAPER_SPEED_FACTOR = 3.0
POINTS_PER_WAVELENGTH = 40
MAX_PHASE_STEP = 0.1        # rad per step at 3 max(k, k0)
STEP_NORM_LIMIT = 1e-10
TOTAL_NORM_LIMIT = 1e-8
PASS_THRESHOLD = 0.05
EDGE_TAPER = 0.25           # fraction of |x_left| over which the initial wave is ramped to zero

class GridError(DomainError):
    pass

class IntegratorFault(TunnelingError):
    pass

def max_group_velocity(hbar_m, dx, dt):
    """Fastest group velocity (nm/fs) the discrete Crank-Nicolson propagator supports.

    A plane wave exp(ipx) on the grid has frequency w = hbar_m (1 - cos p dx)/dx^2;
    a Crank-Nicolson step turns it by 2 atan(w dt/2), which slows it by
    1/(1 + (w dt/2)^2).
    """
    p = np.linspace(0.0, math.pi / dx, SPEED_SAMPLES)
    omega = hbar_m * (1.0 - np.cos(p * dx)) / dx ** 2
    v = hbar_m * np.sin(p * dx) / dx / (1.0 + (0.5 * dt * omega) ** 2)
    return float(v.max())

@dataclass(frozen=True)
class GridSpec:
    x_left: float   # nm
    x_right: float  # nm
    dx: float       # nm
    dt: float       # fs

    @classmethod
    def default(cls, spec, t_max=None, dx=DEFAULT_DX, dt=DEFAULT_DT):
        """Walls just beyond the round trip of the fastest grid wave back to x=L by t_max."""
        if t_max is None:
            t_max = DEFAULT_T_MAX_TF * spec.tau_f
        reach = WALL_MARGIN * max_group_velocity(spec.hbar_m, dx, dt) * t_max
        taper = (TAPER_SPEED_FACTOR * spec.hbar_m * spec.k * t_max - spec.L) / (1.0 - EDGE_TAPER)
        left = max(0.5 * (reach - spec.L), taper, spec.L)
        right = max(0.5 * (reach + spec.L), 2.0 * spec.L)
        return cls(x_left=-float(math.ceil(left)), x_right=float(math.ceil(right)), dx=dx, dt=dt)

    def scaled(self, dx_factor=1.0, dt_factor=1.0, x_left_factor=1.0):
        return GridSpec(self.x_left * x_left_factor, self.x_right, self.dx * dx_factor, self.dt * dt_factor)

    def validate(self, spec, t_max, logger=None):
        if not self.x_left < 0 or not self.x_right > spec.L:
            raise GridError(f"grid [{self.x_left}, {self.x_right}] nm must enclose the shutter and the barrier [0, {spec.L}]")
        if not self.dx > 0 or not self.dt > 0:
            raise GridError(f"dx and dt must be positive, got dx={self.dx}, dt={self.dt}")

        # waves leave the shutter edge, bounce off a wall and must not be back at x=L by t_max
        reach = WALL_MARGIN * max_group_velocity(spec.hbar_m, self.dx, self.dt) * t_max
        if 2.0 * abs(self.x_left) + spec.L < reach:
            raise GridError(f"left wall at {self.x_left} nm reflects back to x=L before t={t_max:.4g} fs "
                            f"(need |x_left| >= {0.5 * (reach - spec.L):.4g} nm)")
        if 2.0 * self.x_right - spec.L < reach:
            raise GridError(f"right wall at {self.x_right} nm reflects back to x=L before t={t_max:.4g} fs "
                            f"(need x_right >= {0.5 * (reach + spec.L):.4g} nm)")

        speed = TAPER_SPEED_FACTOR * spec.hbar_m * spec.k
        if (1.0 - EDGE_TAPER) * abs(self.x_left) + spec.L < speed * t_max:
            need = (speed * t_max - spec.L) / (1.0 - EDGE_TAPER)
            raise GridError(f"tapered edge at {self.x_left} nm is within reach of x=L before t={t_max:.4g} fs "
                            f"(need |x_left| >= {need:.4g} nm)")

        shortest = 2.0 * math.pi / max(spec.k, spec.k0)
        if self.dx > shortest / POINTS_PER_WAVELENGTH:
            raise GridError(f"dx={self.dx} nm exceeds {shortest / POINTS_PER_WAVELENGTH:.4g} nm")

        k_max = 3.0 * max(spec.k, spec.k0)
        omega = 0.5 * spec.hbar_m * k_max ** 2
        if omega * self.dt > MAX_PHASE_STEP:
            raise GridError(f"dt={self.dt} fs too coarse: phase step {omega * self.dt:.3g} rad at k={k_max:.3g}/nm")

        strict = self.dx ** 2 / (spec.hbar_m * math.pi)
        if self.dt > strict and logger is not None:
            logger.debug(f"dt={self.dt} fs above the grid-scale bound {strict:.3g} fs; grid-scale modes are not populated")

def barrier_profile(x, dx, spec):
    """Cell average of V over [x - dx/2, x + dx/2]."""
    overlap = np.minimum(x + 0.5 * dx, spec.L) - np.maximum(x - 0.5 * dx, 0.0)
    return spec.V0 * np.clip(overlap, 0.0, dx) / dx

def edge_taper(x, x_left):
    """sin^2 ramp from 0 at the left wall to 1 at (1 - EDGE_TAPER) x_left.

    The cutoff wave is nonzero at a generic wall position; the ramp removes
    the jump there.
    """
    width = EDGE_TAPER * abs(x_left)
    s = np.clip((x - x_left) / width, 0.0, 1.0)
    return np.sin(0.5 * math.pi * s) ** 2

def _probe_weights(x, probes):
    out = []
    for p in probes:
        j = int(np.searchsorted(x, p, side="right")) - 1
        if j < 0 or j >= len(x) - 1:
            raise GridError(f"probe x={p} nm outside the grid interior")
        w = (p - x[j]) / (x[j + 1] - x[j])
        out.append((j, w))
    return out

def evolve_reference(spec, grid, t_max, probes, logger=None):
    """|psi|^2/|T|^2 at each probe, one value per step from t=0 to t_max."""
    grid.validate(spec, t_max, logger=logger)
    dx, dt = grid.dx, grid.dt
    nodes = np.arange(int(round(grid.x_left / dx)), int(round(grid.x_right / dx)) + 1)
    x = nodes[1:-1] * dx    # walls excluded
    n = len(x)

    a = CONSTANTS.hbar2_over_2me / spec.mass_ratio
    diag = 2.0 * a / dx ** 2 + barrier_profile(x, dx, spec)
    off = np.full(n - 1, -a / dx ** 2)
    c = 0.5j * dt / CONSTANTS.hbar
    lhs = sparse.diags([c * off, 1.0 + c * diag, c * off], [-1, 0, 1], format="csc")
    rhs = sparse.diags([-c * off, 1.0 - c * diag, -c * off], [-1, 0, 1], format="csr")
    lu = splu(lhs, permc_spec="NATURAL")

    k = spec.k
    psi = np.where(x < 0, np.exp(1j * k * x) - np.exp(-1j * k * x), 0.0).astype(complex)
    psi *= edge_taper(x, grid.x_left)
    norm0 = np.vdot(psi, psi).real * dx

    steps = int(math.ceil(t_max / dt - 1e-9))
    taus = dt * np.arange(steps + 1)
    weights = _probe_weights(x, probes)
    values = np.empty((len(probes), steps + 1))
    T2 = abs(complex(transmission_amplitude(spec, k))) ** 2

    def record(i):
        for p, (j, w) in enumerate(weights):
            amp = (1.0 - w) * psi[j] + w * psi[j + 1]
            values[p, i] = abs(amp) ** 2 / T2

    record(0)
    norm_prev = norm0
    worst_step = 0.0
    for i in range(1, steps + 1):
        psi = lu.solve(rhs @ psi)
        norm = np.vdot(psi, psi).real * dx
        worst_step = max(worst_step, abs(norm - norm_prev) / norm0)
        if abs(norm - norm0) / norm0 > TOTAL_NORM_LIMIT:
            raise IntegratorFault(f"norm drift {abs(norm - norm0) / norm0:.3e} at t={taus[i]:.4f} fs (step {i})")
        norm_prev = norm
        record(i)

    if worst_step > STEP_NORM_LIMIT:
        raise IntegratorFault(f"per-step norm change {worst_step:.3e} above {STEP_NORM_LIMIT:g}")
    if logger is not None:
        logger.debug(f"Crank-Nicolson: {n} nodes, {steps} steps, worst per-step norm change {worst_step:.2e}")

    tau_0 = spec.L / CONSTANTS.c
    return {p: TimeSeries(p, taus, values[j], tau_0=tau_0) for j, p in enumerate(probes)}

@dataclass(frozen=True)
class DiscrepancyReport:
    linf: float
    l2: float
    threshold: float
    taus: np.ndarray
    analytic: np.ndarray
    reference: np.ndarray

    @property
    def passed(self):
        return self.linf <= self.threshold

def compare_with_analytic(sol, grid, window, logger=None):
    spec = sol.spec
    t_lo, t_hi = window
    if not 0.1 * spec.tau_f <= t_lo < t_hi:
        raise DomainError(f"comparison window ({t_lo}, {t_hi}) fs must start at or after 0.1 tau_f = {0.1 * spec.tau_f:.4g} fs")
    series = evolve_reference(spec, grid, t_hi, [spec.L], logger=logger)[spec.L]

    mask = (series.taus >= t_lo) & (series.taus <= t_hi)
    taus = series.taus[mask]
    reference = series.values[mask]
    analytic = normalized_density(sol, spec.L, taus)

    diff = analytic - reference
    linf = float(np.max(np.abs(diff)) / np.max(np.abs(analytic)))
    l2 = float(np.linalg.norm(diff) / np.linalg.norm(analytic))
    report = DiscrepancyReport(linf, l2, PASS_THRESHOLD, taus, analytic, reference)
    if logger is not None:
        logger.info(f"analytic vs Crank-Nicolson over [{t_lo:.4g}, {t_hi:.4g}] fs: L_inf {linf:.3e}, L2 {l2:.3e}, "
                    f"{'PASS' if report.passed else 'FAIL'}")
    return report
