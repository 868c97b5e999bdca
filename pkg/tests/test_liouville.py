"""Superoperator assembly, steady states, evolution, spectral gaps."""

import numpy as np
import pytest

from twophoton import liouville, models
from twophoton.liouville import (
    DegenerateSteadyStateError,
    ModelSpec,
    build_liouvillian,
    evolve,
    kernel_multiplicity,
    manifold_mix,
    parity_masks,
    spectral_gap,
    steady_state,
    trace_indices,
    unvec,
    vec,
)
from twophoton.qcore import DensityMatrix, annihilation, coherent, fock, number, zero


def decay_spec(dim, kappa=1.0):
    return ModelSpec(zero(dim), [np.sqrt(kappa) * annihilation(dim)])


def lindblad_terms_dense(H, c_ops, rho):
    """Element-by-element oracle for the three Lindblad terms."""
    out = -1j * (H @ rho - rho @ H)
    for C in c_ops:
        Cd = C.conj().T
        out += C @ rho @ Cd - 0.5 * (Cd @ C @ rho + rho @ Cd @ C)
    return out


def test_action_matches_term_by_term_oracle():
    dim = 12
    rng = np.random.default_rng(3)
    a = annihilation(dim)
    eps2 = 0.7 + 0.2j
    p = models.ReducedParams(eps2=eps2, kappa2=0.5, kappa_a=0.3)
    spec = models.reduced_model(p, dim)
    L = build_liouvillian(spec)

    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x + x.conj().T
    rho /= np.trace(rho)

    via_super = unvec(L.matrix @ vec(rho), dim)
    H = spec.H.to_dense()
    cs = [c.to_dense() for c in spec.collapse_ops]
    direct = lindblad_terms_dense(H, cs, rho)
    assert np.max(np.abs(via_super - direct)) < 1e-12 * max(1.0, np.max(np.abs(direct)))


def test_trace_preservation_row_functional():
    spec = models.reduced_model(models.ReducedParams(eps2=1.0, kappa2=0.8, kappa_a=0.2), 14)
    L = build_liouvillian(spec)
    assert L.trace_residual < 1e-9 * L.norm_scale()


def test_steady_state_pure_decay_is_vacuum():
    L = build_liouvillian(decay_spec(6))
    rho = steady_state(L)
    expected = fock(6, 0).to_density().data
    assert np.max(np.abs(rho.data - expected)) < 1e-10


def test_steady_state_driven_damped_closed_form():
    # H = eps (a + a^dag), L = sqrt(kappa) a  ->  <a> = -2 i eps / kappa
    dim, eps, kappa = 25, 0.4, 1.3
    a = annihilation(dim)
    H = eps * (a + a.dag())
    spec = ModelSpec(H, [np.sqrt(kappa) * a])
    rho = steady_state(build_liouvillian(spec))
    val = rho.expect(a)
    assert abs(val - (-2j * eps / kappa)) < 1e-8


def test_steady_state_no_drive_is_vacuum():
    p = models.ReducedParams(eps2=0.0, kappa2=0.5, kappa_a=0.3)
    rho = steady_state(build_liouvillian(models.reduced_model(p, 10)))
    assert abs(rho.expect(number(10)).real) < 1e-10


def test_steady_state_matches_long_time_integration():
    # kappa_a = 0 makes the kernel degenerate: steady_state must refuse, and
    # the spectral projection of the initial state onto the kernel must agree
    # with long-time integration.
    dim = 30
    p = models.ReducedParams(eps2=2.0, kappa2=1.0, kappa_a=0.0)
    spec = models.reduced_model(p, dim)
    L = build_liouvillian(spec)
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(L)

    n_op = number(dim)
    rho0 = coherent(dim, np.sqrt(2.0)).to_density()
    rho_inf = liouville.steady_projection(L, rho0)
    res = evolve(spec, rho0, np.linspace(0, 60.0, 31), [n_op], liou=L)
    n_final = res.expectations[0, -1].real
    assert abs(n_final - rho_inf.expect(n_op).real) < 1e-6


def test_degenerate_kernel_multiplicity_four():
    # two-photon model without single-photon loss: steady manifold spanned by
    # the four |C+-><C+-| sector operators
    dim = 25
    p = models.ReducedParams(eps2=2.0, kappa2=1.0, kappa_a=0.0)
    L = build_liouvillian(models.reduced_model(p, dim))
    mult, basis = kernel_multiplicity(L)
    assert mult == 4
    assert basis.shape[1] == 4


def test_evolve_constant_under_zero_generator():
    dim = 5
    spec = ModelSpec(zero(dim), [])
    rho0 = coherent(dim, 0.5).to_density()
    res = evolve(spec, rho0, np.linspace(0, 3, 7), [number(dim)])
    assert np.max(np.abs(res.expectations[0] - res.expectations[0][0])) < 1e-9


def test_evolve_decay_closed_form():
    dim, kappa = 8, 0.9
    spec = decay_spec(dim, kappa)
    rho0 = fock(dim, 1).to_density()
    times = np.linspace(0, 4.0, 41)
    res = evolve(spec, rho0, times, [number(dim)])
    expected = np.exp(-kappa * times)
    assert np.max(np.abs(res.expectations[0].real - expected)) < 1e-7
    assert res.trace_drift < 1e-8


def test_evolve_preserves_hermiticity():
    p = models.ReducedParams(eps2=1.5, kappa2=0.8, kappa_a=0.4)
    spec = models.reduced_model(p, 20)
    rho0 = coherent(20, 1.2).to_density()
    res = evolve(spec, rho0, np.linspace(0, 5, 11), [number(20)])
    assert res.herm_defect < 1e-8


def test_steady_state_is_fixed_point_of_evolve():
    p = models.ReducedParams(eps2=1.2, kappa2=0.6, kappa_a=0.5)
    spec = models.reduced_model(p, 18)
    L = build_liouvillian(spec)
    rho = steady_state(L)
    kappa_max = spec.rate_scale()
    res = evolve(spec, rho, np.linspace(0, 10.0 / kappa_max, 5), [number(18)], liou=L)
    assert np.max(np.abs(res.final_state.data - rho.data)) < 1e-7


def test_spectral_gap_pure_decay():
    L = build_liouvillian(decay_spec(7, kappa=0.8))
    gap = spectral_gap(L, "full")
    assert abs(gap - 0.4) < 1e-9  # coherence eigenvalue kappa/2


def test_spectral_gap_odd_sector_matches_evolve_fit():
    # eps2 = 0: <a> decays at the odd-sector gap
    dim = 16
    p = models.ReducedParams(eps2=0.0, kappa2=0.7, kappa_a=0.5)
    spec = models.reduced_model(p, dim)
    L = build_liouvillian(spec)
    gap = spectral_gap(L, "odd")

    a = annihilation(dim)
    rho0 = coherent(dim, 0.25).to_density()
    times = np.linspace(0, 6.0, 60)
    res = evolve(spec, rho0, times, [a], liou=L)
    sig = np.abs(res.expectations[0])
    rate = -np.polyfit(times, np.log(sig), 1)[0]
    assert abs(rate - gap) / gap < 0.02


def test_parity_masks_partition():
    even, odd = parity_masks((4,))
    assert len(even) + len(odd) == 16
    assert set(even).isdisjoint(odd)
    # diagonal (population) indices are all in the even sector
    assert set(trace_indices(4)).issubset(set(even))


def test_gap_grows_with_nbar_at_small_kappa_a():
    # ln(T_bf) slope vs nbar approaches 2 per photon in the small kappa_a
    # limit (kappa_a = 0 exactly has an infinitely degenerate kernel).
    kappa2 = 1.0
    kappa_a = 0.05 * kappa2
    nbars = np.array([2.0, 3.0, 4.0])
    gaps = []
    for nb in nbars:
        eps2 = kappa2 * nb / 2 + kappa_a / 4
        dim = int(4 * nb) + 8
        p = models.ReducedParams(eps2=eps2, kappa2=kappa2, kappa_a=kappa_a)
        L = build_liouvillian(models.reduced_model(p, dim))
        gaps.append(spectral_gap(L, "odd"))
    gaps = np.array(gaps)
    assert np.all(np.diff(1.0 / gaps) > 0)
    slope = np.polyfit(nbars, np.log(1.0 / gaps), 1)[0]
    assert 1.6 < slope < 2.4


def test_truncation_convergence_check():
    # gap changes by < 1% when the truncation grows by 25%
    p = models.ReducedParams(eps2=1.0, kappa2=1.0, kappa_a=0.2)
    dims = (16, 20)
    gaps = []
    for dim in dims:
        L = build_liouvillian(models.reduced_model(p, dim))
        gaps.append(spectral_gap(L, "odd"))
    assert abs(gaps[1] - gaps[0]) / gaps[0] < 0.01
