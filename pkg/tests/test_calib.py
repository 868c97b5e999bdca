"""Calibration pipelines: rescaling, g2 fit, edge slopes, efficiency rig."""

import numpy as np
import pytest

from twophoton import calib, meanfield, models
from twophoton.calib import (
    CalibCurve,
    EfficiencyRigSpec,
    NoLinearTailError,
    edge_slope_from_map,
    excess_loss,
    excess_loss_from_product,
    fit_g2,
    kb_from_edge_slope,
    qubit_numbersplit,
    rescale_axes,
    response_peak_spacing,
)

TWO_PI = 2 * np.pi


def synthetic_classical_curve(g2, kappa_a, kappa_b, gain_x=0.37, gain_y=13.3,
                              n=25, span=6.0):
    eps_c = meanfield.critical_drive(g2, kappa_a, kappa_b)
    eps = np.linspace(0.0, span * eps_c, n)
    nbar = np.array([meanfield.nbar_zero_detuning(e, g2, kappa_a, kappa_b) for e in eps])
    return CalibCurve(gain_x * eps, gain_y * nbar), eps


def test_rescale_recovers_absolute_axes():
    g2, ka, kb = 0.9, 1.1, 30.0
    curve, eps = synthetic_classical_curve(g2, ka, kb)
    resc = rescale_axes(curve, ka, kb)
    # x axis must equal |eps_d g2| to 1e-6 relative
    expected = eps * g2
    err = np.max(np.abs(resc.x - expected)) / expected.max()
    assert err < 1e-6


def test_rescaled_tail_slope_is_one():
    g2, ka, kb = 1.3, 0.7, 24.0
    curve, _ = synthetic_classical_curve(g2, ka, kb)
    resc = rescale_axes(curve, ka, kb)
    xc = ka * kb / 8.0
    tail = resc.x > 2.5 * xc
    slope, icpt = np.polyfit(resc.x[tail], resc.y[tail], 1)
    assert abs(slope - 1.0) < 1e-6
    assert abs(-icpt / slope - xc) < 1e-6 * xc


def test_rescale_invariant_under_power_gain():
    g2, ka, kb = 1.0, 1.0, 20.0
    curve, _ = synthetic_classical_curve(g2, ka, kb, gain_y=1.0)
    boosted = CalibCurve(curve.eps_d, 57.0 * curve.power)
    r1 = rescale_axes(curve, ka, kb)
    r2 = rescale_axes(boosted, ka, kb)
    assert np.allclose(r1.x, r2.x)
    assert np.allclose(r1.y, r2.y)


def test_rescale_needs_linear_tail():
    # all-below-threshold data has no linear tail
    curve = CalibCurve(np.linspace(0, 1, 10), np.zeros(10))
    with pytest.raises(NoLinearTailError):
        rescale_axes(curve, 1.0, 10.0)


def test_fit_g2_round_trip():
    g2_true, ka, kb = 1.0, 1.0, 24.0  # threshold photon number = 3
    xc = ka * kb / 8.0
    xs = xc * np.linspace(0.5, 3.0, 9)
    dim = 30
    ys = calib.quantum_curve_model(xs, g2_true, ka, kb, dim)
    resc = calib.RescaledCurve(xs, ys, 1.0, 1.0, 0, 1.0, ka, kb)
    fit = fit_g2(resc, ka, kb, dim)
    assert abs(fit.g2 - g2_true) / g2_true < 0.05


def test_fit_g2_objective_well_shaped():
    g2_true, ka, kb = 1.0, 1.0, 24.0
    xc = ka * kb / 8.0
    xs = xc * np.linspace(0.6, 1.8, 5)
    dim = 48
    ys = calib.quantum_curve_model(xs, g2_true, ka, kb, dim)

    def sse(g2):
        model = calib.quantum_curve_model(xs, g2, ka, kb, dim)
        return np.sum((model - ys) ** 2)

    assert sse(g2_true) < sse(0.5 * g2_true)
    assert sse(g2_true) < sse(2.0 * g2_true)


def test_fit_g2_invariant_under_power_gain():
    # the y gain is absorbed exactly by the rescale, so the fit is unchanged
    g2_true, ka, kb = 1.0, 1.0, 24.0
    eps_c = meanfield.critical_drive(g2_true, ka, kb)
    eps = np.linspace(0.0, 4 * eps_c, 30)
    dim = 40
    ys = calib.quantum_curve_model(eps * g2_true, g2_true, ka, kb, dim)
    fits = []
    for gain in (1.0, 21.5):
        curve = CalibCurve(0.8 * eps, gain * ys)
        resc = rescale_axes(curve, ka, kb)
        fits.append(fit_g2(resc, ka, kb, dim))
    assert abs(fits[0].g2 - fits[1].g2) < 1e-9 * fits[0].g2


def test_edge_slope_recovery_paper_anisotropy():
    # kappa_b / kappa_a = 276 (16 MHz / 58 kHz)
    g2, ka, kb = 1.0, 1.0, 276.0
    product = 6.0 * ka * kb / 8.0
    eps_d = product / g2
    da = meanfield.symmetric_grid(1.2 * 4 * product / kb, 161)
    db = meanfield.symmetric_grid(1.2 * 4 * product / ka, 161)
    grid = meanfield.nbar_map(g2, eps_d, ka, kb, da, db)
    slope = edge_slope_from_map(da, db, grid, ka, kb)
    kb_est = kb_from_edge_slope(slope, ka)
    assert abs(kb_est - kb) / kb < 0.02


def test_kb_from_slope_basics():
    assert kb_from_edge_slope(-1.0, 2.5) == 2.5
    with pytest.raises(ValueError):
        kb_from_edge_slope(0.3, 1.0)


def test_kb_recovery_lands_in_paper_range():
    # recovered within [13, 20] MHz for the paper geometry
    ka = TWO_PI * 58e3
    kb = TWO_PI * 16e6
    slope = -kb / ka * 1.03  # 3% measurement error
    est = kb_from_edge_slope(slope, ka)
    assert TWO_PI * 13e6 <= est <= TWO_PI * 20e6


def test_excess_loss_closed_form():
    assert excess_loss(0.4, 0.1, 0.0) == 0.4
    # kappa2/2pi = 370 Hz at nbar = 20 adds 14.8 kHz of internal loss
    added = excess_loss(0.0, TWO_PI * 370.0, 20.0)
    assert abs(added - TWO_PI * 14.8e3) < TWO_PI * 1.0


def test_excess_loss_linear_in_nbar():
    k2 = 0.37
    vals = [excess_loss(1.0, k2, n) for n in (0.0, 1.0, 2.0, 5.0)]
    slopes = np.diff(vals) / np.diff([0.0, 1.0, 2.0, 5.0])
    assert np.allclose(slopes, 2 * k2)


def test_excess_loss_two_forms_agree():
    g2, kb, nbar, kai = 0.8, 40.0, 6.0, 0.3
    kappa2 = 4 * g2 ** 2 / kb
    alpha_g2_sq = nbar * g2 ** 2
    assert abs(excess_loss(kai, kappa2, nbar)
               - excess_loss_from_product(kai, alpha_g2_sq, kb)) < 1e-12


def rig_table_values():
    return EfficiencyRigSpec(t1=19.3e-6, t2=24.3e-6, chi=TWO_PI * 1.75e6,
                             kappa_a_c=TWO_PI * 38e3, kappa_a_i=TWO_PI * 17e3)


def test_rig_no_memory_drive_gives_zero_amplitude():
    rig = rig_table_values()
    resp = qubit_numbersplit(rig, np.linspace(-1, 1, 5) * rig.chi, 0.0,
                             0.1 * rig.kappa_1, dim_a=6)
    assert np.max(np.abs(resp.a_amp)) < 1e-10


def test_rig_reduces_to_driven_cavity():
    rig = EfficiencyRigSpec(t1=19.3e-6, t2=24.3e-6, chi=1e-30,
                            kappa_a_c=TWO_PI * 38e3, kappa_a_i=TWO_PI * 17e3)
    omega_a = 0.25 * rig.kappa_a
    resp = qubit_numbersplit(rig, np.array([0.0]), omega_a, 0.0, dim_a=12)
    expected = -2j * omega_a / rig.kappa_a
    assert abs(resp.a_amp[0] - expected) < 1e-8


def test_rig_number_splitting_spacing():
    rig = rig_table_values()
    omega_a = 0.55 * rig.kappa_a        # nbar ~ 1.2
    omega_q = 2.0e4
    grid = np.linspace(-0.6, 2.6, 65) * rig.chi
    resp = qubit_numbersplit(rig, grid, omega_a, omega_q, dim_a=10)
    spacing = response_peak_spacing(resp.delta_q, resp.qubit_pop)
    step = grid[1] - grid[0]
    assert abs(spacing - rig.chi) < 2 * step


def test_rig_validation():
    with pytest.raises(ValueError):
        EfficiencyRigSpec(t1=10e-6, t2=30e-6, chi=1.0, kappa_a_c=1.0, kappa_a_i=1.0)
    with pytest.raises(ValueError):
        EfficiencyRigSpec(t1=10e-6, t2=10e-6, chi=-1.0, kappa_a_c=1.0, kappa_a_i=1.0)
