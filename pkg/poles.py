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

# Resonance poles k_n of the rectangular barrier: the zeros of J(k) in the
# fourth quadrant, n = 1, 2, ... in order of increasing Re k.
#
# Each pole is located in three stages:
#
#   1. fixed point of  q L = n pi - 2i Log((q + k)/k0),  k = sqrt(q^2 + k0^2),
#      which is J = 0 rewritten so that each n picks exactly one root.
#      The map contracts with factor |2/(kL)|.
#   2. damped Newton on D(k) = J(k)/q in double precision
#   3. Newton polish in POLISH_DPS-digit arithmetic (mpmath); D is a
#      difference of terms of size exp(|Im qL|) and its double-precision
#      floor grows with n and with shrinking opacity

import math
import cmath
import threading
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import mpmath
import numpy as np
from scipy.integrate import trapezoid

from units import TunnelingError
from barrier import channel_momentum, d_det, d_det_prime

MAX_ITERATIONS = 100
MAX_HALVINGS = 40
FIXED_POINT_ITERATIONS = 500
FIXED_POINT_TOLERANCE = 1e-15
RESIDUAL_LIMIT = 1e-10
STEP_TOLERANCE = 1e-12
POLISH_DPS = 32
POLISH_ITERATIONS = 8
DUPLICATE_TOLERANCE = 1e-8
WINDING_SLACK = 0.3
MIN_EDGE_POINTS = 2000

_local = threading.local()

def _mp():
    # one context per thread: mpmath functions adjust the working precision in place
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _local.ctx = mpmath.mp.clone()
        ctx.dps = POLISH_DPS
    return ctx

class PoleConvergenceError(TunnelingError):
    def __init__(self, n, msg):
        self.n = n
        super().__init__(f"pole n={n}: {msg}")

class PoleEnumerationError(TunnelingError):
    pass

class ContourTooCloseError(TunnelingError):
    pass

@dataclass(frozen=True)
class Pole:
    index: int          # n > 0 fourth quadrant, -n for the mirror
    k: complex
    q: complex
    residual: float

    def __post_init__(self):
        if self.index > 0 and not (self.k.real > 0 and self.k.imag < 0):
            raise PoleEnumerationError(f"pole n={self.index} at k={self.k!r} is not in the fourth quadrant")

    def mirror(self):
        """Third-quadrant partner -conj(k_n)."""
        return Pole(-self.index, -self.k.conjugate(), -self.q.conjugate(), self.residual)

@dataclass(frozen=True)
class Contour:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def edges(self):
        # counter-clockwise
        a = complex(self.re_lo, self.im_lo)
        b = complex(self.re_hi, self.im_lo)
        c = complex(self.re_hi, self.im_hi)
        d = complex(self.re_lo, self.im_hi)
        return [(a, b), (b, c), (c, d), (d, a)]

    def distance(self, k):
        """Distance from k to the boundary of the rectangle."""
        inside = self.re_lo <= k.real <= self.re_hi and self.im_lo <= k.imag <= self.im_hi
        if inside:
            return min(k.real - self.re_lo, self.re_hi - k.real, k.imag - self.im_lo, self.im_hi - k.imag)
        dx = max(self.re_lo - k.real, 0.0, k.real - self.re_hi)
        dy = max(self.im_lo - k.imag, 0.0, k.imag - self.im_hi)
        return math.hypot(dx, dy)

@dataclass(frozen=True)
class PoleCertificate:
    count: int
    expected: int
    contour: Contour
    winding: complex

    @property
    def ok(self):
        return self.count == self.expected

def seed(spec, n, seed_scale=1.0):
    """Asymptotic q_n: Re(qL) = n*pi, Im(qL) = -ln(4 n^2 pi^2 / alpha^2), magnitude >= ln 2."""
    depth = max(math.log(4.0 * n * n * math.pi ** 2 / spec.alpha ** 2), math.log(2.0))
    return complex(n * math.pi, -depth * seed_scale) / spec.L

def branch_root(spec, n, q):
    """Iterate q L = n pi - 2i Log((q+k)/k0) from q; returns k."""
    k0sq, L = spec.k0 ** 2, spec.L
    for _ in range(FIXED_POINT_ITERATIONS):
        k = cmath.sqrt(q * q + k0sq)
        q_new = (n * math.pi - 2j * cmath.log((q + k) / spec.k0)) / L
        done = abs(q_new - q) <= FIXED_POINT_TOLERANCE * abs(q_new)
        q = q_new
        if done:
            break
    return cmath.sqrt(q * q + k0sq)

def _mp_det(ctx, k, spec):
    # q, D(k), D'(k) in the context's precision
    L, k0sq = ctx.mpf(spec.L), ctx.mpf(spec.k0) ** 2
    q = ctx.sqrt(k * k - k0sq)
    u = q * L
    c, s = ctx.cos(u), ctx.sin(u)
    sinc = s / u
    s1 = (s - u * c) / u ** 3
    a = 2 * k * k - k0sq
    D = 4 * k * c - 2j * L * a * sinc
    dD = 4 * c - 4 * L * L * k * k * sinc - 8j * L * k * sinc + 2j * L ** 3 * k * a * s1
    return q, D, dD

def scaled_residual(k, spec):
    """|J(k)| / |k J'(k)|, evaluated in extended precision."""
    ctx = _mp()
    kk = ctx.mpc(complex(k))
    q, D, dD = _mp_det(ctx, kk, spec)
    return float(abs(q * D) / abs(kk * ((kk / q) * D + q * dD)))

def polish_pole(spec, k):
    ctx = _mp()
    kk = ctx.mpc(complex(k))
    tol = ctx.mpf(10) ** (4 - POLISH_DPS)
    for _ in range(POLISH_ITERATIONS):
        _, D, dD = _mp_det(ctx, kk, spec)
        step = D / dD
        kk -= step
        if abs(step) <= tol * abs(kk):
            break
    return complex(kk)

def refine_pole(spec, n, seed_scale=1.0, logger=None):
    k = branch_root(spec, n, seed(spec, n, seed_scale))
    Dk = complex(d_det(k, spec))

    for iteration in range(MAX_ITERATIONS):
        step = Dk / complex(d_det_prime(k, spec))
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            k_new = k - lam * step
            D_new = complex(d_det(k_new, spec))
            if abs(D_new) < abs(Dk):
                break
            lam *= 0.5
        else:
            # no descent left: sitting on the rounding floor
            break
        k, Dk = k_new, D_new
        if abs(lam * step) <= STEP_TOLERANCE * abs(k):
            break
    else:
        raise PoleConvergenceError(n, f"Newton did not converge after {MAX_ITERATIONS} iterations (k={k!r})")

    k = polish_pole(spec, k)
    if not (k.real > 0 and k.imag < 0):
        raise PoleConvergenceError(n, f"Newton left the fourth quadrant (k={k!r})")
    residual = scaled_residual(k, spec)
    if residual > RESIDUAL_LIMIT:
        raise PoleConvergenceError(n, f"scaled residual {residual:.3e} above {RESIDUAL_LIMIT:g} (k={k!r})")

    if logger is not None:
        logger.debug(f"pole n={n}: k={k.real:.12f}{k.imag:+.12f}j after {iteration + 1} iterations, residual {residual:.2e}")
    return Pole(n, k, complex(channel_momentum(k, spec)), residual)

def enumerate_poles(spec, count, workers=1, logger=None):
    if count < 1:
        raise PoleEnumerationError(f"pole count must be >= 1, got {count}")
    if spec.is_free:
        raise PoleEnumerationError("free propagation (V0=0) has no S-matrix poles")

    indices = range(1, count + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(lambda n: refine_pole(spec, n, logger=logger), indices))
    else:
        found = [refine_pole(spec, n, logger=logger) for n in indices]

    found.sort(key=lambda p: (p.k.real, p.index))
    for a, b in zip(found, found[1:]):
        if abs(b.k - a.k) < DUPLICATE_TOLERANCE * abs(b.k):
            raise PoleEnumerationError(f"seeds n={a.index} and n={b.index} collapsed onto the same pole k={b.k!r}")

    poles = tuple(Pole(i + 1, p.k, p.q, p.residual) for i, p in enumerate(found))
    if logger is not None:
        logger.info(f"found {len(poles)} poles for {spec.describe()}, max residual {max(p.residual for p in poles):.2e}")
    return poles

def winding_number(spec, contour, spacing=None):
    """(1/2 pi i) * contour integral of D'/D, trapezoid rule per edge."""
    if spacing is None:
        spacing = min(contour.re_hi - contour.re_lo, contour.im_hi - contour.im_lo) / MIN_EDGE_POINTS
    total = 0j
    for a, b in contour.edges():
        npts = max(MIN_EDGE_POINTS, int(math.ceil(abs(b - a) / spacing)) + 1)
        z = a + (b - a) * np.linspace(0.0, 1.0, npts)
        f = d_det_prime(z, spec) / d_det(z, spec)
        total += trapezoid(f, z)
    return total / (2j * math.pi)

def pole_contour(spec, poles, next_pole):
    re_hi = 0.5 * (poles[-1].k.real + next_pole.k.real)
    depth = max(abs(p.k.imag) for p in poles)
    return Contour(re_lo=0.0, re_hi=re_hi,
                   im_lo=-(2.0 * depth + 2.0 / spec.L),
                   im_hi=-0.5 * min(abs(p.k.imag) for p in poles))

def verify_pole_count(spec, poles, logger=None):
    if len(poles) == 0:
        raise PoleEnumerationError("cannot certify an empty pole set")
    poles = sorted(poles, key=lambda p: p.k.real)
    next_pole = refine_pole(spec, max(p.index for p in poles) + 1)
    contour = pole_contour(spec, poles, next_pole)
    d_min = min(contour.distance(p.k) for p in list(poles) + [next_pole])
    winding = winding_number(spec, contour, spacing=d_min / 40.0)

    count = int(round(winding.real))
    if abs(winding - count) > WINDING_SLACK:
        raise ContourTooCloseError(f"winding number {winding:.4f} is not near an integer (contour {contour})")
    if logger is not None:
        logger.debug(f"winding number {winding.real:.6f}{winding.imag:+.1e}j over {contour}")
    return PoleCertificate(count=count, expected=len(poles), contour=contour, winding=winding)
