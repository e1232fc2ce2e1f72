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

"""Faddeeva function and scaled complementary error function.

The upper half-plane is evaluated with scipy's ``wofz`` (Johnson's
Faddeeva package, relative accuracy ~1e-13). The lower half-plane goes
through the continuation

    w(z) = 2 exp(-z^2) - w(-z)

which loses relative accuracy only where exp(-z^2) dominates a much
smaller true value. Points with |Im z| below ``AXIS_BAND`` are sent to
``wofz`` directly: the reflection would add and subtract two O(1) terms
for no gain there.
"""

import numpy as np
from scipy.special import wofz

from units import TunnelingError, DomainError

AXIS_BAND = 1e-6
EXP_LIMIT = 709.0   # log(DBL_MAX) ~ 709.78

class FaddeevaOverflowError(TunnelingError):
    def __init__(self, z):
        self.z = complex(z)
        super().__init__(f"exp(-z^2) overflows in Faddeeva reflection at z={self.z!r}")

def faddeeva(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("Faddeeva argument must be finite")

    lower = z.imag < -AXIS_BAND
    out = np.empty_like(z)
    out[~lower] = wofz(z[~lower])

    if np.any(lower):
        zl = z[lower]
        expo = -(zl * zl)
        overflow = expo.real > EXP_LIMIT
        if np.any(overflow):
            raise FaddeevaOverflowError(zl[overflow][0])
        out[lower] = 2.0 * np.exp(expo) - wofz(-zl)

    if out.ndim == 0:
        return complex(out)
    return out

def erfc_scaled(y):
    """exp(y^2) * erfc(y), evaluated as w(i*y)."""
    return faddeeva(1j * np.asarray(y, dtype=complex))
