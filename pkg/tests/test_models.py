"""Model builders and circuit/effective parameter conversions."""

import numpy as np
import pytest

from twophoton import liouville, models
from twophoton.liouville import build_liouvillian, steady_state
from twophoton.qcore import TruncationError, herm_defect, number

TWO_PI = 2 * np.pi


def test_reduced_model_damped_cavity_limit():
    p = models.ReducedParams(eps2=0.0, kappa2=0.0, kappa_a=0.7)
    spec = models.reduced_model(p, 6)
    assert spec.H.data.nnz == 0
    assert len(spec.collapse_ops) == 1


def test_pointer_amplitude_closed_form():
    # eps2/2pi = 1 kHz, kappa2/2pi = 0.37 kHz, kappa_a = 0 -> nbar = 2 eps2/kappa2
    p = models.ReducedParams(eps2=TWO_PI * 1e3, kappa2=TWO_PI * 0.37e3, kappa_a=0.0)
    assert abs(p.pointer_nbar() - 2.0 / 0.37) < 1e-12
    assert abs(p.pointer_nbar() - 5.405) < 1e-3


def test_paper_regime_loss_ratio():
    # kappa_a/2pi = 58 kHz over kappa_2/2pi = 370 Hz lands near 150
    ratio = 58e3 / 370.0
    assert abs(ratio - 157.0) < 1.0
    assert abs(ratio - 150.0) / 150.0 < 0.05


def test_two_mode_uncoupled_buffer_amplitude():
    # g2 = 0: two uncoupled cavities, buffer settles at -eps_d/(Delta_b + i kappa_b/2)
    dims = (4, 8)
    kappa_b, eps_d, delta_b = 1.0, 0.3, 0.2
    p = models.TwoModeParams(g2=1e-12, eps_d=eps_d, kappa_a=0.5, kappa_b=kappa_b,
                             delta_b=delta_b)
    spec = models.two_mode_model(p, dims)
    rho = steady_state(build_liouvillian(spec))
    b = models.mode_op(models.annihilation(dims[1]), dims, 1)
    beta = rho.expect(b)
    expected = -eps_d / (delta_b + 1j * kappa_b / 2)
    assert abs(beta - expected) < 1e-6


def test_two_mode_hamiltonian_hermitian():
    p = models.TwoModeParams(g2=0.4 + 0.1j, eps_d=0.8 - 0.3j, kappa_a=0.2,
                             kappa_b=3.0, delta_a=0.1, delta_b=-0.4)
    spec = models.two_mode_model(p, (6, 5))
    assert herm_defect(spec.H.data) < 1e-12


def test_adiabatic_map_paper_values():
    # g2/2pi = 39 kHz, kappa_b/2pi = 16 MHz -> kappa2/2pi = 380 Hz, in [270, 410]
    pieces = models.adiabatic_map(TWO_PI * 39e3, 0.0, TWO_PI * 16e6)
    kappa2_hz = pieces.kappa2 / TWO_PI
    assert abs(kappa2_hz - 380.25) < 0.1
    assert 270.0 <= kappa2_hz <= 410.0


def test_adiabatic_map_zero_detuning_kerr():
    pieces = models.adiabatic_map(1.0, 2.0, 10.0, delta_b=0.0)
    assert pieces.kerr == 0.0
    assert abs(pieces.kappa2 - 4.0 / 10.0) < 1e-14
    assert abs(pieces.eps2 - 2.0 * 2.0 / 10.0) < 1e-14


def test_adiabatic_map_detuned_arithmetic_oracle():
    g2, kappa_b = 0.7 + 0.2j, 5.0
    delta_b = kappa_b / 2
    pieces = models.adiabatic_map(g2, 1.0, kappa_b, delta_b)
    # direct complex arithmetic
    gamma = g2 / (delta_b + 1j * kappa_b / 2)
    assert abs(pieces.gamma - gamma) < 1e-15
    assert abs(abs(gamma) ** 2 - abs(g2) ** 2 / (kappa_b ** 2 / 2)) < 1e-15


def test_adiabatic_regime_cross_model_oracle():
    # two-mode steady nbar matches the reduced model within 10% at kappa_b = 100 |g2|
    g2 = 1.0
    kappa_b = 100.0
    kappa2 = 4 * g2 ** 2 / kappa_b
    kappa_a = 0.5 * kappa2
    nbar_target = 2.0
    eps2 = kappa2 * nbar_target / 2 + kappa_a / 4
    eps_d = eps2 * kappa_b / (2 * g2)

    rp = models.ReducedParams(eps2=eps2, kappa2=kappa2, kappa_a=kappa_a)
    dim_mem = 16
    rho_r = steady_state(build_liouvillian(models.reduced_model(rp, dim_mem)))
    n_r = rho_r.expect(number(dim_mem)).real

    tp = models.TwoModeParams(g2=g2, eps_d=eps_d, kappa_a=kappa_a, kappa_b=kappa_b)
    dims = (dim_mem, 5)
    rho_t = steady_state(build_liouvillian(models.two_mode_model(tp, dims)))
    n_t = rho_t.expect(models.memory_photon_number(dims=dims)).real

    assert abs(n_t - n_r) / n_r < 0.10


def test_phase_covariance_of_reduced_model():
    # eps2 -> eps2 e^{i theta} rotates <a^2> by e^{i theta}
    dim = 20
    theta = 0.73
    base = models.ReducedParams(eps2=1.0, kappa2=1.0, kappa_a=0.3)
    rot = models.ReducedParams(eps2=np.exp(1j * theta), kappa2=1.0, kappa_a=0.3)
    a = models.annihilation(dim)
    a2 = a @ a
    v0 = steady_state(build_liouvillian(models.reduced_model(base, dim))).expect(a2)
    v1 = steady_state(build_liouvillian(models.reduced_model(rot, dim))).expect(a2)
    assert abs(v1 - v0 * np.exp(1j * theta)) < 1e-8 * abs(v0)


def test_kerr_meanfield_limits():
    assert abs(models.kerr_meanfield_nbar(models.KerrParams(kerr=0.5, eps2=1.0, kappa_a=0.0))
               - 2.0 / 0.5) < 1e-12
    assert models.kerr_meanfield_nbar(models.KerrParams(kerr=0.5, eps2=0.1, kappa_a=0.4)) == 0.0


def test_kerr_model_meanfield_consistency():
    # quantum steady state of the Kerr model sits near the mean-field branch
    p = models.KerrParams(kerr=0.8, eps2=1.2, kappa_a=0.4)
    nbar_mf = models.kerr_meanfield_nbar(p)
    dim = 24
    rho = steady_state(build_liouvillian(models.kerr_model(p, dim)))
    nbar_q = rho.expect(number(dim)).real
    assert abs(nbar_q - nbar_mf) / nbar_mf < 0.35  # quantum fluctuations allowed


def test_asymptote_discriminates_kerr_from_two_photon():
    # Kerr nbar asymptote extrapolates through the origin; the two-photon
    # asymptote has a strictly positive x-intercept.
    kappa_a = 1.0
    eps_grid = np.linspace(20.0, 60.0, 9)  # eps2 >> kappa_a
    kerr_n = [models.kerr_meanfield_nbar(models.KerrParams(kerr=1.0, eps2=e, kappa_a=kappa_a))
              for e in eps_grid]
    two_n = [models.ReducedParams(eps2=e, kappa2=1.0, kappa_a=kappa_a).pointer_nbar()
             for e in eps_grid]
    k_slope, k_icpt = np.polyfit(eps_grid, kerr_n, 1)
    t_slope, t_icpt = np.polyfit(eps_grid, two_n, 1)
    assert abs(k_icpt / k_slope) < 2e-3 * eps_grid.mean()   # through the origin
    assert -t_icpt / t_slope > 0.2                          # positive x-intercept
    assert abs(-t_icpt / t_slope - kappa_a / 4) < 1e-9


def test_circuit_derived_table_values():
    # E_C/h = 72.6 MHz, E_L/h = 62.40 GHz
    phi_b, omega_b0, _ = models.circuit_derived(72.6e6, 62.40e9, 37.0e9, 0.036, 0.0)
    assert abs(phi_b - 0.220) < 0.001
    assert abs(omega_b0 / TWO_PI - 6.020e9) < 5e6


def test_circuit_derived_pump_sign():
    _, _, g2p = models.circuit_derived(72.6e6, 62.4e9, 37.0e9, 0.036, 0.15)
    _, _, g2m = models.circuit_derived(72.6e6, 62.4e9, 37.0e9, 0.036, -0.15)
    assert abs(g2p + g2m) < 1e-12 * abs(g2p)


def test_truncation_guard():
    with pytest.raises(TruncationError):
        models.reduced_model(models.ReducedParams(eps2=10.0, kappa2=1.0, kappa_a=0.0), 10)


def test_two_mode_dims_validation():
    p = models.TwoModeParams(g2=1.0, eps_d=1.0, kappa_a=1.0, kappa_b=1.0)
    with pytest.raises(ValueError):
        models.two_mode_model(p, (8,))
    with pytest.raises(ValueError):
        models.two_mode_model(p, (8, 3))
