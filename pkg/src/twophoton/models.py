"""ModelSpec builders for the three physical models and parameter conversions.

Rates are angular frequencies (rad/s) everywhere inside the package; the CLI
converts to and from ordinary frequency (Hz) at the boundary.  Complex g2 and
eps_d are supported throughout even though the working point treats them as
real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qcore
from .liouville import ModelSpec
from .qcore import TruncationError, annihilation, identity, mode_op, number, tensor


@dataclass
class ReducedParams:
    """Effective single-mode model: two-photon drive/loss plus residual terms.

    `kerr` is the induced quartic rate produced by a detuned buffer; the
    zero-detuning model has kerr = 0 exactly.
    """

    eps2: complex
    kappa2: float
    kappa_a: float
    delta_a: float = 0.0
    kerr: float = 0.0

    def __post_init__(self):
        if self.kappa2 < 0 or self.kappa_a < 0:
            raise ValueError("loss rates must be nonnegative")

    def pointer_nbar(self) -> float:
        """|alpha|^2 = (2/kappa2)(|eps2| - kappa_a/4), clipped at 0."""
        if self.kappa2 == 0:
            return 0.0
        return max((2.0 / self.kappa2) * (abs(self.eps2) - self.kappa_a / 4.0), 0.0)


@dataclass
class TwoModeParams:
    """Memory-buffer model: two-to-one exchange, buffer drive, two loss channels."""

    g2: complex
    eps_d: complex
    kappa_a: float
    kappa_b: float
    delta_a: float = 0.0
    delta_b: float = 0.0

    def __post_init__(self):
        if self.kappa_a <= 0 or self.kappa_b <= 0:
            raise ValueError("kappa_a and kappa_b must be positive")


@dataclass
class KerrParams:
    """Driven Kerr oscillator used as the discriminating alternative model."""

    kerr: float
    eps2: complex
    kappa_a: float

    def __post_init__(self):
        if self.kerr <= 0:
            raise ValueError("Kerr rate must be positive")


@dataclass
class AdiabaticPieces:
    """Effective single-mode pieces from eliminating a fast buffer."""

    eps2: complex
    kappa2: float
    kerr: float
    gamma: complex
    squeeze: complex  # eps_d * gamma, the raw squeezing coefficient


def reduced_model(p: ReducedParams, dim: int) -> ModelSpec:
    """H = -Delta_a n + i eps2 a^dag2 - i eps2* a^2 (+ kerr a^dag2 a^2);
    collapse sqrt(kappa2) a^2, sqrt(kappa_a) a."""
    nbar = p.pointer_nbar()
    if p.kappa2 > 0 and dim < 4 * nbar:
        raise TruncationError(
            f"dim = {dim} < 4 * expected nbar = {4 * nbar:.1f}; increase the truncation"
        )
    a = annihilation(dim)
    ad = a.dag()
    H = (-p.delta_a) * (ad @ a) + (1j * p.eps2) * (ad @ ad) + (-1j * np.conj(p.eps2)) * (a @ a)
    if p.kerr != 0.0:
        H = H + p.kerr * (ad @ ad @ a @ a)
    c_ops = []
    if p.kappa2 > 0:
        c_ops.append(np.sqrt(p.kappa2) * (a @ a))
    if p.kappa_a > 0:
        c_ops.append(np.sqrt(p.kappa_a) * a)
    return ModelSpec(H, c_ops)


def two_mode_model(p: TwoModeParams, dims) -> ModelSpec:
    """H = -Delta_a n_a - Delta_b n_b + g2* a^2 b^dag + g2 a^dag2 b - eps_d b^dag - eps_d* b;
    collapse sqrt(kappa_a) a, sqrt(kappa_b) b."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 2:
        raise ValueError(f"dims must be [memory, buffer], got {dims}")
    if dims[1] < 4:
        raise ValueError(f"buffer dim {dims[1]} < 4")
    a = mode_op(annihilation(dims[0]), dims, 0)
    b = mode_op(annihilation(dims[1]), dims, 1)
    ad, bd = a.dag(), b.dag()
    H = (-p.delta_a) * (ad @ a) + (-p.delta_b) * (bd @ b) \
        + np.conj(p.g2) * (a @ a @ bd) + p.g2 * (ad @ ad @ b) \
        + (-p.eps_d) * bd + (-np.conj(p.eps_d)) * b
    c_ops = [np.sqrt(p.kappa_a) * a, np.sqrt(p.kappa_b) * b]
    return ModelSpec(H, c_ops)


def adiabatic_map(g2: complex, eps_d: complex, kappa_b: float,
                  delta_b: float = 0.0) -> AdiabaticPieces:
    """Eliminate the buffer: gamma = g2/(Delta_b + i kappa_b/2), two-photon loss
    kappa_b |gamma|^2, squeezing eps_d gamma, induced Kerr Delta_b |gamma|^2.

    At Delta_b = 0 this reduces to kappa2 = 4|g2|^2/kappa_b and
    eps2 = 2 g2 eps_d / kappa_b, with zero Kerr.
    """
    if kappa_b <= 0:
        raise ValueError("kappa_b must be positive")
    gamma = g2 / (delta_b + 1j * kappa_b / 2.0)
    kappa2 = kappa_b * abs(gamma) ** 2
    kerr = delta_b * abs(gamma) ** 2
    # Squeezing term -eps_d gamma a^dag2 rewritten in the i eps2 a^dag2 form.
    eps2 = 1j * eps_d * gamma
    return AdiabaticPieces(eps2=eps2, kappa2=kappa2, kerr=kerr,
                           gamma=gamma, squeeze=eps_d * gamma)


def reduced_from_two_mode(p: TwoModeParams) -> ReducedParams:
    pieces = adiabatic_map(p.g2, p.eps_d, p.kappa_b, p.delta_b)
    return ReducedParams(eps2=pieces.eps2, kappa2=pieces.kappa2,
                         kappa_a=p.kappa_a, delta_a=p.delta_a, kerr=pieces.kerr)


def kerr_meanfield_nbar(p: KerrParams) -> float:
    """Dissipative-Kerr pointer photon number, sqrt((4 eps2)^2 - kappa_a^2)/(2K)."""
    e = abs(p.eps2)
    if e < p.kappa_a / 4.0:
        return 0.0
    return float(np.sqrt((4.0 * e) ** 2 - p.kappa_a ** 2) / (2.0 * p.kerr))


def kerr_model(p: KerrParams, dim: int) -> ModelSpec:
    """Driven Kerr oscillator whose mean-field steady state matches
    kerr_meanfield_nbar: H = i eps2 a^dag2 - i eps2* a^2 - (K/2) a^dag2 a^2."""
    nbar = kerr_meanfield_nbar(p)
    if dim < 4 * nbar:
        raise TruncationError(
            f"dim = {dim} < 4 * expected nbar = {4 * nbar:.1f}; increase the truncation"
        )
    a = annihilation(dim)
    ad = a.dag()
    H = (1j * p.eps2) * (ad @ ad) + (-1j * np.conj(p.eps2)) * (a @ a) \
        + (-p.kerr / 2.0) * (ad @ ad @ a @ a)
    c_ops = [np.sqrt(p.kappa_a) * a] if p.kappa_a > 0 else []
    return ModelSpec(H, c_ops)


def circuit_derived(e_c: float, e_l: float, e_j: float, upsilon: float,
                    eps_p: float, sign: int = -1):
    """Derived circuit quantities from junction energies (in E/h units, Hz).

    Returns (phi_b, omega_b0 [rad/s], g2 [rad/s]) with
    phi_b = (2 E_C/E_L)^(1/4), omega_b0 = sqrt(8 E_L E_C)/hbar and
    hbar g2 = sign * (1/2) E_J eps_p upsilon^2 phi_b^3.

    The sign of g2 is a convention tied to the flux operating point
    (phi_sum = +-pi/2); `sign=-1` follows the pumped-saddle convention,
    flip it for the mirrored working point.
    """
    if e_c <= 0 or e_l <= 0 or e_j <= 0:
        raise ValueError("energies must be positive")
    if sign not in (-1, 1):
        raise ValueError("sign must be +-1")
    phi_b = (2.0 * e_c / e_l) ** 0.25
    omega_b0 = 2.0 * np.pi * np.sqrt(8.0 * e_l * e_c)
    g2 = sign * 0.5 * (2.0 * np.pi * e_j) * eps_p * upsilon ** 2 * phi_b ** 3
    return phi_b, omega_b0, g2


def memory_photon_number(dims=None, dim: int = None) -> qcore.OperatorMatrix:
    """a^dag a on the memory mode, single-mode or the first mode of a tensor space."""
    if dims is not None:
        dims = tuple(dims)
        return mode_op(number(dims[0]), dims, 0)
    return number(dim)
