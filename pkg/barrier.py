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

# Stationary scattering off a rectangular barrier V0 on [0, L].
#
# J(k) = (q+k)^2 exp(-iqL) - (q-k)^2 exp(iqL) vanishes at q=0 for every
# barrier, which is not a pole. Everything here goes through the entire
# function D(k) = J(k)/q, written with cos(qL) and sinc(qL) (both even
# in q, hence free of the branch point):
#
#   D(k) = 4k cos(qL) - 2iL (k^2 + q^2) sinc(qL)
#
# T(k) = 4kq exp(-ikL)/J(k) = 4k exp(-ikL)/D(k).

import math
import dataclasses
from dataclasses import dataclass

import numpy as np

from units import TunnelingError, DomainError, hbar_over_mass, wavenumber_from_energy, free_passage_time
from cerf import EXP_LIMIT

SINC_SERIES_BAND = 1e-4
S1_SERIES_BAND = 0.1

class BarrierOverflowError(TunnelingError):
    pass

@dataclass(frozen=True)
class BarrierSpec:
    V0: float           # eV
    L: float            # nm
    mass_ratio: float   # m*/m_e
    E: float            # eV

    def __post_init__(self):
        if not self.V0 >= 0:
            raise DomainError(f"barrier height must be non-negative, got V0={self.V0} eV")
        if not self.L > 0:
            raise DomainError(f"barrier width must be positive, got L={self.L} nm")
        if not self.mass_ratio > 0:
            raise DomainError(f"mass ratio must be positive, got {self.mass_ratio}")
        if not self.E > 0:
            raise DomainError(f"incident energy must be positive, got E={self.E} eV")

    @classmethod
    def free(cls, L, mass_ratio, E):
        return cls(V0=0.0, L=L, mass_ratio=mass_ratio, E=E)

    @property
    def is_free(self):
        return self.V0 == 0

    @property
    def k(self):
        return wavenumber_from_energy(self.E, self.mass_ratio)

    @property
    def k0(self):
        return wavenumber_from_energy(self.V0, self.mass_ratio)

    @property
    def alpha(self):
        return self.k0 * self.L

    @property
    def kappa(self):
        # decay constant under the barrier, tunneling regime only
        if self.E >= self.V0:
            raise DomainError(f"kappa undefined for E={self.E} eV >= V0={self.V0} eV")
        return math.sqrt(self.k0 ** 2 - self.k ** 2)

    @property
    def hbar_m(self):
        return hbar_over_mass(self.mass_ratio)

    @property
    def tau_f(self):
        return free_passage_time(self.L, self.k, self.mass_ratio)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def describe(self):
        return f"V0={self.V0:g} eV, L={self.L:g} nm, m*={self.mass_ratio:g}, E={self.E:g} eV"


def _as_complex(k):
    k = np.asarray(k, dtype=complex)
    return k[()] if k.ndim == 0 else k

def sinc(u):
    """sin(u)/u for complex u, series near the origin."""
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < SINC_SERIES_BAND
    safe = np.where(small, 1.0, u)
    u2 = u * u
    out = np.where(small, 1.0 - u2 / 6.0 + u2 * u2 / 120.0, np.sin(safe) / safe)
    return out[()] if out.ndim == 0 else out

def _s1(u):
    # (sin u - u cos u)/u^3 = -sinc'(u)/u
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < S1_SERIES_BAND
    safe = np.where(small, 1.0, u)
    u2 = u * u
    series = 1.0 / 3.0 - u2 / 30.0 + u2 * u2 / 840.0 - u2 * u2 * u2 / 45360.0
    out = np.where(small, series, (np.sin(safe) - safe * np.cos(safe)) / safe ** 3)
    return out[()] if out.ndim == 0 else out

def _square(k):
    # k^2 with the sign of zero imaginary parts normalized, so q(-k) = q(k) on the real axis
    k2 = k * k
    return np.where(k2.imag == 0, k2.real + 0j, k2)

def channel_momentum(k, spec):
    """q = (k^2 - k0^2)^(1/2), principal branch: q = i*kappa for 0 < k < k0."""
    k = _as_complex(k)
    q = np.sqrt(_square(k) - spec.k0 ** 2)
    return q[()] if np.ndim(q) == 0 else q

def d_det(k, spec):
    k = _as_complex(k)
    u = channel_momentum(k, spec) * spec.L
    return 4.0 * k * np.cos(u) - 2j * spec.L * (2.0 * k * k - spec.k0 ** 2) * sinc(u)

def d_det_prime(k, spec):
    k = _as_complex(k)
    L = spec.L
    u = channel_momentum(k, spec) * L
    s = sinc(u)
    return (4.0 * np.cos(u) - 4.0 * L * L * k * k * s - 8j * L * k * s
            + 2j * L ** 3 * k * (2.0 * k * k - spec.k0 ** 2) * _s1(u))

def j_det(k, spec):
    k = _as_complex(k)
    q = channel_momentum(k, spec)
    if np.any(np.abs(np.imag(q * spec.L)) > EXP_LIMIT):
        raise BarrierOverflowError(f"|Im(qL)| beyond exp range at k={k!r}; use j_det_scaled")
    return q * d_det(k, spec)

def j_det_prime(k, spec):
    """dJ/dk = dq/dk * D + q * D' with dq/dk = k/q."""
    k = _as_complex(k)
    q = channel_momentum(k, spec)
    if np.any(q == 0):
        raise DomainError(f"dJ/dk is singular at the branch point k={k!r}")
    return (k / q) * d_det(k, spec) + q * d_det_prime(k, spec)

def j_det_scaled(k, spec):
    """J(k) as (log|J|, arg J), safe for any |Im(qL)|."""
    k = complex(k)
    q = complex(channel_momentum(k, spec))
    u = q * spec.L
    if abs(u.imag) < 1.0:
        J = q * complex(d_det(k, spec))
        return math.log(abs(J)), math.atan2(J.imag, J.real)
    # factor exp(|Im u|) out of cos(u) and sin(u)
    s = abs(u.imag)
    ep = np.exp(1j * u - s)
    em = np.exp(-1j * u - s)
    cos_s = 0.5 * (ep + em)
    sinc_s = (ep - em) / (2j * u)
    D_s = 4.0 * k * cos_s - 2j * spec.L * (2.0 * k * k - spec.k0 ** 2) * sinc_s
    J_s = q * D_s
    return math.log(abs(J_s)) + s, math.atan2(J_s.imag, J_s.real)

def scattering_amplitudes(spec, k):
    """(T, R) for unit incident amplitude exp(ikx); transmitted wave T exp(ikx)."""
    k = _as_complex(k)
    D = d_det(k, spec)
    u = channel_momentum(k, spec) * spec.L
    T = 4.0 * k * np.exp(-1j * k * spec.L) / D
    R = -2j * spec.k0 ** 2 * spec.L * sinc(u) / D
    return T, R

def transmission_amplitude(spec, k):
    return scattering_amplitudes(spec, k)[0]

def stationary_wave(x, k, spec):
    """phi(x,k) inside the barrier, matched to T(k) exp(ikx) at x=L."""
    x = np.asarray(x, dtype=float)
    tol = 1e-12 * spec.L
    if np.any(x < -tol) or np.any(x > spec.L + tol):
        raise DomainError(f"stationary_wave needs 0 <= x <= L={spec.L} nm, got x={x}")
    k = complex(k)
    q = complex(channel_momentum(k, spec))
    T, _ = scattering_amplitudes(spec, k)
    s = spec.L - x
    out = T * np.exp(1j * k * spec.L) * (np.cos(q * s) - 1j * k * s * sinc(q * s))
    return out[()] if np.ndim(out) == 0 else out

def stationary_density(spec, x):
    """Long-time limit |psi|^2/|T|^2: |phi(x,k)|^2/|T|^2 inside, 1 beyond x=L."""
    x = np.asarray(x, dtype=float)
    k = spec.k
    T2 = abs(transmission_amplitude(spec, k)) ** 2
    inside = np.clip(x, 0.0, spec.L)
    out = np.where(x >= spec.L, 1.0, np.abs(stationary_wave(inside, k, spec)) ** 2 / T2)
    return out[()] if out.ndim == 0 else out
