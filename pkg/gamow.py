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

# Resonant (Gamow) states of the rectangular barrier:
#
#   u_n(x) = C_n (exp(i q_n x) + b_n exp(-i q_n x)),  0 <= x <= L
#
# normalized by  int_0^L u_n^2 dx + i (u_n^2(0) + u_n^2(L)) / (2 k_n) = 1.
# Only C_n^2 is stored; every consumer needs products of two u factors.

import math
import cmath
import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.integrate import fixed_quad

from units import TunnelingError
from poles import RESIDUAL_LIMIT

NORM_LIMIT = 1e-10
QUAD_BASE_POINTS = 64

class GamowConstructionError(TunnelingError):
    pass

@dataclass(frozen=True)
class GamowState:
    pole: object        # poles.Pole
    b: complex
    C_sq: complex
    norm_residual: float
    L: float

    def shape(self, x):
        # exp(iqx) + b exp(-iqx)
        q = self.pole.q
        return np.exp(1j * q * x) + self.b * np.exp(-1j * q * x)

    def shape_prime(self, x):
        q = self.pole.q
        return 1j * q * (np.exp(1j * q * x) - self.b * np.exp(-1j * q * x))

    def u_sq(self, x):
        return self.C_sq * self.shape(x) ** 2

    def product(self, x):
        """u_n(0) u_n(x)."""
        return self.C_sq * (1.0 + self.b) * self.shape(x)

    def mirror(self):
        # u_{-n} = conj(u_n), k_{-n} = -conj(k_n)
        return GamowState(self.pole.mirror(), self.b.conjugate(), self.C_sq.conjugate(), self.norm_residual, self.L)

    def normalization_residual(self):
        """|<u|u> - 1| with the interior integral done by Gauss-Legendre quadrature."""
        points = QUAD_BASE_POINTS + int(math.ceil(abs(self.pole.q) * self.L))
        interior, _ = fixed_quad(self.u_sq, 0.0, self.L, n=points)
        boundary = 1j * (self.u_sq(0.0) + self.u_sq(self.L)) / (2.0 * self.pole.k)
        return float(abs(interior + boundary - 1.0))

    def outgoing_residuals(self):
        """Relative mismatch of u'/u against +ik at x=L and -ik at x=0."""
        k = self.pole.k
        right = self.shape_prime(self.L) / self.shape(self.L) - 1j * k
        left = self.shape_prime(0.0) / self.shape(0.0) + 1j * k
        return abs(right) / abs(k), abs(left) / abs(k)

def interior_integral(q, b, L):
    """Closed form of int_0^L (exp(iqx) + b exp(-iqx))^2 dx."""
    e2 = cmath.exp(2j * q * L)
    return (e2 - 1.0) / (2j * q) + 2.0 * b * L + b * b * (1.0 - 1.0 / e2) / (2j * q)

def build_state(pole, spec):
    if pole.residual > RESIDUAL_LIMIT:
        raise GamowConstructionError(f"pole n={pole.index} is not certified (residual {pole.residual:.2e})")
    k, q, L = pole.k, pole.q, spec.L
    # (q+k)/(q-k) without the cancellation in q-k
    b = -(q + k) ** 2 / spec.k0 ** 2
    g0 = (1.0 + b) ** 2
    gL = (cmath.exp(1j * q * L) + b * cmath.exp(-1j * q * L)) ** 2
    norm = interior_integral(q, b, L) + 1j * (g0 + gL) / (2.0 * k)
    if norm == 0:
        raise GamowConstructionError(f"vanishing normalization at pole n={pole.index}")
    state = GamowState(pole, b, 1.0 / norm, math.nan, L)
    residual = state.normalization_residual()
    if not residual <= NORM_LIMIT:
        raise GamowConstructionError(f"normalization residual {residual:.3e} above {NORM_LIMIT:g} at pole n={pole.index}")
    return dataclasses.replace(state, norm_residual=residual)

def build_states(poles, spec, logger=None):
    states = tuple(build_state(p, spec) for p in poles)
    if logger is not None:
        logger.debug(f"built {len(states)} Gamow states, max norm residual {max(s.norm_residual for s in states):.2e}")
    return states

def residue_internal(state, x, k):
    """phi_n(x) = 2ik u_n(0) u_n(x) / (k^2 - k_n^2)."""
    kn = state.pole.k
    return 2j * k * state.product(x) / (k * k - kn * kn)

def residue_transmitted(state, spec, k):
    """T_n = phi_n(L) exp(-i k_n L)."""
    return residue_internal(state, spec.L, k) * cmath.exp(-1j * state.pole.k * spec.L)
