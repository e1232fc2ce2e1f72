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

# Unit system: energy eV, length nm, time fs, wavenumber 1/nm,
# mass as a ratio to the electron mass.

import math
from dataclasses import dataclass

class TunnelingError(Exception):
    pass

class DomainError(TunnelingError):
    pass

@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 0.6582119569              # eV*fs
    hbar2_over_2me: float = 0.0380998212    # eV*nm^2
    c: float = 299.792458                   # nm/fs

CONSTANTS = PhysicalConstants()

def hbar_over_mass(mass_ratio):
    """hbar/m in nm^2/fs for an effective mass given as a ratio to m_e."""
    if not mass_ratio > 0:
        raise DomainError(f"mass ratio must be positive, got {mass_ratio}")
    return 2.0 * CONSTANTS.hbar2_over_2me / (mass_ratio * CONSTANTS.hbar)

def wavenumber_from_energy(E, mass_ratio):
    if not mass_ratio > 0:
        raise DomainError(f"mass ratio must be positive, got {mass_ratio}")
    if not E >= 0:
        raise DomainError(f"energy must be non-negative, got {E} eV")
    return math.sqrt(E * mass_ratio / CONSTANTS.hbar2_over_2me)

def energy_from_wavenumber(k, mass_ratio):
    if not mass_ratio > 0:
        raise DomainError(f"mass ratio must be positive, got {mass_ratio}")
    return CONSTANTS.hbar2_over_2me * k * k / mass_ratio

def free_passage_time(L, k, mass_ratio):
    """Classical time m*L/(hbar*k) to cross a distance L."""
    if not k > 0:
        raise DomainError(f"free passage time needs k > 0, got {k}")
    return L / (hbar_over_mass(mass_ratio) * k)

def light_crossing_time(L):
    return L / CONSTANTS.c
