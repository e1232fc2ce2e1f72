# Crank-Nicolson reference against the analytic solution

import dataclasses

import numpy as np

from common import GAAS, GAAS_TAU_P, GAAS_FULL_WIDTH, gaas_solution, gaas_series, raises
from units import DomainError
from barrier import BarrierSpec
from shutter import ShutterSolution
from transients import WidthRule, find_peak, transient_summary
from oracle import (GridError, GridSpec, DEFAULT_DX, DEFAULT_DT, barrier_profile, edge_taper, max_group_velocity,
                    evolve_reference, compare_with_analytic)

def test_default_grid():
    grid = GridSpec.default(GAAS)
    assert grid.dx == DEFAULT_DX and grid.dt == DEFAULT_DT
    assert grid.x_left < -500.0 and grid.x_right > 500.0
    t_max = 3.0 * GAAS.tau_f
    grid.validate(GAAS, t_max)
    raises(GridError, grid.scaled(x_left_factor=0.8).validate, GAAS, t_max)
    raises(GridError, dataclasses.replace(grid, x_right=0.8 * grid.x_right).validate, GAAS, t_max)
    # shorter runs need less room
    short = GridSpec.default(GAAS, GAAS.tau_f)
    assert grid.x_left < short.x_left < 0 and GAAS.L < short.x_right < grid.x_right

def test_grid_validation():
    t_max = 3.0 * GAAS.tau_f
    grid = GridSpec.default(GAAS)
    raises(GridError, dataclasses.replace(grid, x_left=-10.0).validate, GAAS, t_max)
    raises(GridError, dataclasses.replace(grid, x_right=120.0).validate, GAAS, t_max)
    raises(GridError, dataclasses.replace(grid, x_right=5.0).validate, GAAS, t_max)
    raises(GridError, dataclasses.replace(grid, dx=0.2).validate, GAAS, t_max)
    raises(GridError, dataclasses.replace(grid, dt=0.5).validate, GAAS, t_max)
    raises(GridError, dataclasses.replace(grid, dt=0.0).validate, GAAS, t_max)
    assert issubclass(GridError, DomainError)

def test_max_group_velocity():
    h = GAAS.hbar_m
    v = max_group_velocity(h, DEFAULT_DX, DEFAULT_DT)
    assert 25.0 < v < 35.0
    # bounded by the lattice speed limit hbar/(m dx)
    assert v < h / DEFAULT_DX
    assert max_group_velocity(h, DEFAULT_DX, 0.5 * DEFAULT_DT) > v
    assert max_group_velocity(h, 0.5 * DEFAULT_DX, 0.25 * DEFAULT_DT) > 1.9 * v

def test_cell_averaged_barrier():
    dx = 0.02
    x = np.arange(-50, 551) * dx
    V = barrier_profile(x, dx, GAAS)
    assert abs(V.sum() * dx - GAAS.V0 * GAAS.L) < 1e-9
    assert abs(V.max() - GAAS.V0) < 1e-12 and V.min() == 0.0
    # edge between nodes
    shifted = GAAS.replace(L=GAAS.L + 0.25 * dx)
    assert abs(barrier_profile(x, dx, shifted).sum() * dx - shifted.V0 * shifted.L) < 1e-9

def test_reference_starts_from_zero():
    grid = GridSpec.default(GAAS)
    series = evolve_reference(GAAS, grid, 10 * grid.dt, [5.0, GAAS.L])
    for x in (5.0, GAAS.L):
        assert series[x].values[0] == 0.0
        assert series[x].taus[0] == 0.0

def test_window_must_avoid_initial_transient():
    raises(DomainError, compare_with_analytic, gaas_solution(), GridSpec.default(GAAS), (0.01, 5.0))

def test_free_propagation():
    free = BarrierSpec.free(GAAS.L, GAAS.mass_ratio, GAAS.E)
    sol = ShutterSolution.build(free)
    report = compare_with_analytic(sol, GridSpec.default(free), (0.2 * free.tau_f, 3.0 * free.tau_f))
    assert report.linf <= 0.01

def test_gaas_validation():
    report = compare_with_analytic(gaas_solution(), GridSpec.default(GAAS), (0.5 * GAAS.tau_f, 3.0 * GAAS.tau_f))
    assert report.passed

def test_reference_peak_and_width():
    t_max = 1.2 * GAAS.tau_f
    series = evolve_reference(GAAS, GridSpec.default(GAAS, t_max), t_max, [GAAS.L])[GAAS.L]
    _, tau_p, _ = find_peak(series)
    assert abs(tau_p - GAAS_TAU_P) <= 0.03 * GAAS_TAU_P
    reference = transient_summary(series, WidthRule.FULL_WIDTH).delta_tau
    analytic = transient_summary(gaas_series(), WidthRule.FULL_WIDTH).delta_tau
    assert abs(analytic - GAAS_FULL_WIDTH) <= 0.01 * GAAS_FULL_WIDTH
    assert abs(reference - analytic) <= 0.03 * analytic

def test_refined_grid_agrees_better():
    sol = gaas_solution(200)
    window = (0.5 * GAAS.tau_f, 1.0 * GAAS.tau_f)
    coarse = compare_with_analytic(sol, GridSpec.default(GAAS, window[1]), window)
    fine = compare_with_analytic(sol, GridSpec.default(GAAS, window[1], dx=0.5 * DEFAULT_DX, dt=0.25 * DEFAULT_DT),
                                 window)
    assert coarse.passed
    assert fine.linf < coarse.linf

def test_left_wall_position():
    t_max = GAAS.tau_f
    grid = GridSpec.default(GAAS, t_max)
    a = evolve_reference(GAAS, grid, t_max, [GAAS.L])[GAAS.L]
    b = evolve_reference(GAAS, grid.scaled(x_left_factor=2.0), t_max, [GAAS.L])[GAAS.L]
    mask = a.taus >= 0.5 * GAAS.tau_f
    assert np.max(np.abs(a.values[mask] - b.values[mask])) <= 1e-3 * np.max(a.values[mask])

def test_edge_taper():
    x = np.linspace(-400.0, 0.0, 401)
    w = edge_taper(x, -400.0)
    assert w[0] == 0.0 and np.all(w[x >= -300.0] == 1.0)
    assert np.all(np.diff(w) >= 0)
