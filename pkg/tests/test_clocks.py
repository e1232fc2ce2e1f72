# Tunneling clocks for the stationary beam

import math

from common import GAAS, GAAS_TAU_P, GAAS_DELTA_TAU, raises
from units import DomainError
from clocks import ClockUndefinedError, CLOCK_NAMES, clock_table, closed_form_clocks, rank_against

def test_gaas_clocks():
    table = clock_table(GAAS)
    assert abs(table.tau_f - 11.56) <= 0.005 * 11.56
    assert abs(table.tau_BL - 5.79) <= 0.01 * 5.79
    assert table.tau_B == math.sqrt(table.tau_y ** 2 + table.tau_z ** 2)
    assert table.tau_LM == table.tau_y
    for name in CLOCK_NAMES:
        value = getattr(table, name)
        assert math.isfinite(value) and value > 0

def test_numerical_against_closed_form():
    for spec in (GAAS, GAAS.replace(L=5.0), GAAS.replace(E=0.4)):
        table = clock_table(spec)
        exact = closed_form_clocks(spec)
        for name, value in exact.items():
            assert abs(getattr(table, name) - value) <= 1e-6 * abs(value)

def test_clocks_within_peak_width():
    table = clock_table(GAAS)
    for name in CLOCK_NAMES:
        assert abs(getattr(table, name) - GAAS_TAU_P) <= GAAS_DELTA_TAU

def test_ranking():
    table = clock_table(GAAS)
    names = [name for name, _ in rank_against(table, GAAS_TAU_P)]
    assert names[0] == "tau_BL"
    assert names.index("tau_B") < names.index("tau_D")
    assert names.index("tau_B") < names.index("tau_LM")
    assert rank_against(table, table.tau_D)[0][0] == "tau_D"
    raises(DomainError, rank_against, table, 0.0)

def test_opaque_limit():
    ratios = []
    for alpha in (8.0, 12.0, 15.0, 20.0):
        table = clock_table(GAAS.replace(L=alpha / GAAS.k0))
        ratios.append(table.tau_B / table.tau_BL)
    assert all(r > 1.0 for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[2] - 1.0 < 0.05

def test_hartman_effect():
    short = clock_table(GAAS).tau_D
    long = clock_table(GAAS.replace(L=2.0 * GAAS.L)).tau_D
    assert abs(long - short) <= 0.01 * short

def test_above_barrier():
    e = raises(ClockUndefinedError, clock_table, GAAS.replace(E=1.0))
    assert math.isnan(e.table.tau_BL)
    assert math.isfinite(e.table.tau_D)
    raises(DomainError, closed_form_clocks, GAAS.replace(E=1.0))

def test_vanishing_barrier():
    spec = GAAS.replace(V0=1e-9)
    e = raises(ClockUndefinedError, clock_table, spec)
    assert abs(e.table.tau_D - spec.tau_f) <= 1e-3 * spec.tau_f
