# Shared parameters and cached solutions for the test modules

import os, sys
import functools

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from barrier import BarrierSpec
from poles import enumerate_poles
from gamow import build_states
from shutter import ShutterSolution
from transients import density_series

# V0/E = 5 and kL = 5 in a GaAs-like effective mass
GAAS = BarrierSpec(V0=0.711, L=10.0, mass_ratio=0.067, E=0.1422)
GAAS_TAU_P = 5.326
GAAS_DELTA_TAU = 13.48
GAAS_FULL_WIDTH = 6.795     # fs, half-maximum crossings at 2.737 and 9.532 fs
GAAS_T2 = 5.332e-9

def raises(exc, fn, *args, **kwargs):
    """Call fn and return the exception of type exc it raised; fail otherwise."""
    try:
        fn(*args, **kwargs)
    except exc as e:
        return e
    raise AssertionError(f"{getattr(fn, '__name__', fn)} did not raise {exc.__name__}")

@functools.lru_cache(maxsize=None)
def gaas_poles(count=100):
    return enumerate_poles(GAAS, count)

@functools.lru_cache(maxsize=None)
def gaas_states(count=100):
    return build_states(gaas_poles(count), GAAS)

@functools.lru_cache(maxsize=None)
def gaas_solution(truncation=100):
    return ShutterSolution(GAAS, gaas_states(max(truncation, 100)), truncation)

@functools.lru_cache(maxsize=None)
def gaas_series(t_max_tf=20.0, steps=4000):
    return density_series(gaas_solution(), GAAS.L, t_max_tf * GAAS.tau_f, steps)
