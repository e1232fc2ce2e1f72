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

# Tunneling clocks for a stationary beam:
#
#   tau_f  = m L / (hbar k)                 free passage
#   tau_BL = m L / (hbar kappa)             Buttiker-Landauer
#   tau_y  = -hbar d arg T / dV0            Larmor, in-plane (tau_LM)
#   tau_z  = -hbar d ln|T| / dV0            Larmor, out-of-plane
#   tau_B  = sqrt(tau_y^2 + tau_z^2)        Buttiker
#   tau_D  = hbar d(arg T + kL) / dE        phase delay

import math
import cmath
from dataclasses import dataclass, replace

import numpy as np

from units import TunnelingError, DomainError, CONSTANTS
from barrier import transmission_amplitude

REL_STEP = 1e-5
CROSS_CHECK_TOLERANCE = 1e-6
CLOCK_NAMES = ("tau_LM", "tau_BL", "tau_B", "tau_D")

class ClockUndefinedError(TunnelingError):
    def __init__(self, msg, table=None):
        self.table = table
        super().__init__(msg)

@dataclass(frozen=True)
class ClockTable:
    tau_f: float
    tau_LM: float
    tau_BL: float
    tau_B: float
    tau_D: float
    tau_y: float
    tau_z: float

    def as_dict(self):
        return {name: getattr(self, name) for name in ("tau_f", "tau_LM", "tau_BL", "tau_B", "tau_D", "tau_y", "tau_z")}

def _transmission(spec):
    return complex(transmission_amplitude(spec, spec.k))

def _richardson(samples, h):
    # samples at x0 - h, x0 - h/2, x0 + h/2, x0 + h
    fm, fmh, fph, fp = samples
    d_h = (fp - fm) / (2.0 * h)
    d_h2 = (fph - fmh) / h
    return (4.0 * d_h2 - d_h) / 3.0

def _stencil(x0):
    h = REL_STEP * abs(x0) if x0 != 0 else REL_STEP
    return h, (x0 - h, x0 - 0.5 * h, x0 + 0.5 * h, x0 + h)

def _height_derivatives(spec):
    # d arg T / dV0 and d ln|T| / dV0
    h, points = _stencil(spec.V0)
    T = [_transmission(replace(spec, V0=v)) for v in points]
    phase = np.unwrap([cmath.phase(t) for t in T])
    logmag = [math.log(abs(t)) for t in T]
    return _richardson(phase, h), _richardson(logmag, h)

def _energy_derivative(spec):
    # d(arg T + kL) / dE
    h, points = _stencil(spec.E)
    specs = [replace(spec, E=e) for e in points]
    phase = np.unwrap([cmath.phase(_transmission(s)) for s in specs])
    total = [p + s.k * s.L for p, s in zip(phase, specs)]
    return _richardson(total, h)

def closed_form_clocks(spec):
    """Exact tau_y, tau_z, tau_D for E < V0 from T = 2ik kappa exp(-ikL) / Z,
    Z = (k^2 - kappa^2) sinh(kappa L) + 2i kappa k cosh(kappa L)."""
    if not spec.E < spec.V0:
        raise DomainError(f"closed-form clocks need E < V0, got E={spec.E} eV, V0={spec.V0} eV")
    k, kappa, L = spec.k, spec.kappa, spec.L
    t = math.tanh(kappa * L)
    # everything divided by cosh(kappa L)
    Z = complex((k * k - kappa * kappa) * t, 2.0 * kappa * k)
    Z_kappa = complex(-2.0 * kappa * t + (k * k - kappa * kappa) * L, 2.0 * k + 2.0 * kappa * k * L * t)
    Z_k = complex(2.0 * k * t, 2.0 * kappa)
    r_kappa = Z_kappa / Z
    r_k = Z_k / Z

    c = spec.mass_ratio / (2.0 * CONSTANTS.hbar2_over_2me)    # d(k^2)/dE
    hbar = CONSTANTS.hbar
    tau_y = hbar * r_kappa.imag * c / kappa
    tau_z = hbar * (r_kappa.real - 1.0 / kappa) * c / kappa
    tau_D = -hbar * (r_k.imag * c / k - r_kappa.imag * c / kappa)
    return {"tau_y": tau_y, "tau_z": tau_z, "tau_D": tau_D}

def clock_table(spec, logger=None):
    hbar = CONSTANTS.hbar
    d_phase, d_log = _height_derivatives(spec)
    tau_y = -hbar * d_phase
    tau_z = -hbar * d_log
    tau_B = math.sqrt(tau_y ** 2 + tau_z ** 2)
    tau_D = hbar * _energy_derivative(spec)
    tau_f = spec.tau_f

    if not spec.E < spec.V0:
        table = ClockTable(tau_f, tau_y, math.nan, tau_B, tau_D, tau_y, tau_z)
        raise ClockUndefinedError(f"tau_BL undefined for E={spec.E} eV >= V0={spec.V0} eV", table=table)

    tau_BL = spec.L / (spec.hbar_m * spec.kappa)
    table = ClockTable(tau_f, tau_y, tau_BL, tau_B, tau_D, tau_y, tau_z)

    exact = closed_form_clocks(spec)
    for name, value in exact.items():
        numeric = getattr(table, name)
        if abs(numeric - value) > CROSS_CHECK_TOLERANCE * max(abs(value), 1e-12):
            if logger is not None:
                logger.warning(f"{name}: numerical {numeric:.10g} fs vs closed form {value:.10g} fs")
    if logger is not None:
        logger.debug(f"clocks for {spec.describe()}: " + ", ".join(f"{k}={v:.6g}" for k, v in table.as_dict().items()))
    return table

def rank_against(table, tau_p):
    """The four clocks as (name, value), nearest to tau_p first; ties favor tau_B, then name."""
    if not tau_p > 0:
        raise DomainError(f"tau_p must be positive, got {tau_p}")
    return sorted(((name, getattr(table, name)) for name in CLOCK_NAMES),
                  key=lambda item: (abs(item[1] - tau_p), item[0] != "tau_B", item[0]))
