"""Flux-threaded SQUID-with-shunt analysis: potential, saddles, flux maps.

The nonlinear dipole is a two-junction loop split by a central inductance,
biased by a common (phi_sum) and a differential (phi_diff) flux.  Energies
are stored as E/h in Hz throughout this module; returned mode frequencies
are ordinary frequencies in Hz.

The flux map quantizes the two-mode circuit point by point: locate the
classical potential minimum, displace the buffer Fock basis there, build the
full cosine via an eigenbasis of the phase operator, diagonalize, and label
the eigenstates by overlap with the bare single-excitation states.
Anticrossing pixels where the labeling overlap degrades are flagged rather
than interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .qcore import annihilation, identity, tensor


@dataclass
class AtsParams:
    """Circuit energies (E/h, Hz), hybridization and the bare memory frequency."""

    e_c: float            # charging energy of the buffer island
    e_l: float            # inductive energy of the central shunt
    e_j: float            # mean junction energy
    de_j: float           # junction asymmetry (half-difference)
    upsilon: float        # memory-buffer hybridization factor
    f_a0: float           # bare memory frequency (Hz)

    def __post_init__(self):
        if not self.e_l > 2 * self.de_j >= 0:
            raise ValueError("require E_L > 2 dE_J >= 0")
        if not 0 < self.upsilon < 1:
            raise ValueError("hybridization must sit in (0, 1)")
        if self.e_c <= 0 or self.e_j <= 0:
            raise ValueError("energies must be positive")

    @property
    def phi_b(self) -> float:
        """Buffer zero-point phase fluctuation (2 E_C / E_L)^(1/4)."""
        return (2.0 * self.e_c / self.e_l) ** 0.25

    @property
    def f_b0(self) -> float:
        """Bare buffer frequency sqrt(8 E_L E_C)/h in Hz."""
        return np.sqrt(8.0 * self.e_l * self.e_c)


@dataclass(frozen=True)
class FluxPoint:
    """Common/differential flux biases, reducible to one symmetry cell.

    The potential is invariant under (phi_sum, phi_diff) -> (phi_sum + pi,
    phi_diff +- pi), so everything lives in phi_sum in [0, pi), phi_diff in
    [-pi/2, pi/2) up to winding counts.
    """

    phi_sum: float
    phi_diff: float

    @property
    def phi_left(self) -> float:
        return self.phi_sum + self.phi_diff

    @property
    def phi_right(self) -> float:
        return self.phi_sum - self.phi_diff

    def canonical(self):
        """Equivalent point in the fundamental cell plus winding counts."""
        n_sum = int(np.floor(self.phi_sum / np.pi))
        s = self.phi_sum - n_sum * np.pi
        d = self.phi_diff + n_sum * np.pi  # each sum-shift allows a diff-shift
        n_diff = int(np.floor((d + np.pi / 2) / np.pi))
        d = d - n_diff * np.pi
        return FluxPoint(s, d), (n_sum, n_diff)


def potential(p: AtsParams, fp: FluxPoint, phi) -> np.ndarray:
    """Inductive energy (Hz) at phase drop phi across the central inductance.

    U = E_L phi^2 / 2 - 2 E_J cos(phi_sum) cos(phi + phi_diff)
        + 2 dE_J sin(phi_sum) sin(phi + phi_diff)
    """
    phi = np.asarray(phi, dtype=float)
    return (0.5 * p.e_l * phi ** 2
            - 2.0 * p.e_j * np.cos(fp.phi_sum) * np.cos(phi + fp.phi_diff)
            + 2.0 * p.de_j * np.sin(fp.phi_sum) * np.sin(phi + fp.phi_diff))


def potential_d1(p: AtsParams, fp: FluxPoint, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return (p.e_l * phi
            + 2.0 * p.e_j * np.cos(fp.phi_sum) * np.sin(phi + fp.phi_diff)
            + 2.0 * p.de_j * np.sin(fp.phi_sum) * np.cos(phi + fp.phi_diff))


def potential_d2(p: AtsParams, fp: FluxPoint, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return (p.e_l
            + 2.0 * p.e_j * np.cos(fp.phi_sum) * np.cos(phi + fp.phi_diff)
            - 2.0 * p.de_j * np.sin(fp.phi_sum) * np.sin(phi + fp.phi_diff))


def potential_minimum(p: AtsParams, fp: FluxPoint) -> float:
    """Global minimum of the potential over the phase drop.

    2 E_J / E_L may exceed 1, so the landscape can hold several local
    minima; a coarse scan seeds Newton iterations on the analytic gradient
    (the curvature map needs the minimum to near machine precision).
    """
    grid = np.linspace(-np.pi, np.pi, 241)
    vals = potential(p, fp, grid)
    phi = float(grid[int(np.argmin(vals))])
    for _ in range(60):
        g = float(potential_d1(p, fp, phi))
        h = float(potential_d2(p, fp, phi))
        if h <= 0:
            break
        step = g / h
        phi -= step
        if abs(step) < 1e-15 * max(1.0, abs(phi)):
            return phi
    res = optimize.minimize_scalar(lambda x: float(potential(p, fp, x)),
                                   bounds=(phi - 0.1, phi + 0.1), method="bounded",
                                   options={"xatol": 1e-14})
    return float(res.x)


@dataclass
class SaddleAnalysis:
    which: int                  # +1 for phi_diff = +pi/2, -1 for -pi/2
    inductive_energy: float     # E_L -+ 2 dE_J at the critical point
    m_matrix: np.ndarray        # quadratic form of the inductive-energy map
    det_m: float
    is_saddle: bool


def saddle_phi_min(p: AtsParams, which: int, eps: float, delta: float) -> float:
    """First-order displaced minimum near (pi/2, +-pi/2):
    phi_min = +-(2 E_J eps + 2 dE_J delta) / (E_L -+ 2 dE_J)."""
    sgn = 1.0 if which > 0 else -1.0
    return sgn * (2 * p.e_j * eps + 2 * p.de_j * delta) / (p.e_l - sgn * 2 * p.de_j)


def inductive_energy(p: AtsParams, which: int, eps: float, delta: float) -> float:
    """Curvature d^2U/dphi^2 at the displaced minimum near the critical point."""
    fp = FluxPoint(np.pi / 2 + eps, which * np.pi / 2 + delta)
    phi0 = potential_minimum(p, fp)
    return float(potential_d2(p, fp, phi0))


def saddle_analysis(p: AtsParams, which: int = 1) -> SaddleAnalysis:
    """Quadratic geometry of the inductive-energy map at (pi/2, +-pi/2).

    The map E(eps, delta) = d^2U/dphi^2 at the displaced minimum has the
    closed quadratic form E = E0 + x^T M x with

        M = 4 (E_L -+ dE_J)/(E_L -+ 2 dE_J)^2 [[E_J^2, E_J dE_J],
                                               [E_J dE_J, dE_J^2]]
            +- [[dE_J, E_J], [E_J, dE_J]]

    and det M = E_L^2 (dE_J^2 - E_J^2)/(E_L -+ 2 dE_J)^2 < 0 whenever
    dE_J < E_J, so the critical point is a saddle of the frequency map.
    """
    if which not in (1, -1):
        raise ValueError("which must be +-1")
    if p.de_j >= p.e_j:
        raise ValueError("dE_J >= E_J: the critical point is not a saddle")
    sgn = float(which)
    denom = p.e_l - sgn * 2 * p.de_j
    rank1 = np.array([[p.e_j ** 2, p.e_j * p.de_j],
                      [p.e_j * p.de_j, p.de_j ** 2]])
    cross = np.array([[p.de_j, p.e_j], [p.e_j, p.de_j]])
    m = 4 * (p.e_l - sgn * p.de_j) / denom ** 2 * rank1 + sgn * cross
    det_m = p.e_l ** 2 * (p.de_j ** 2 - p.e_j ** 2) / denom ** 2
    return SaddleAnalysis(which, denom, m, float(det_m), det_m < 0)


def numeric_m_matrix(p: AtsParams, which: int, h: float = 1e-4) -> np.ndarray:
    """Second-difference Hessian/2 of the inductive-energy map (oracle for M)."""
    def e(eps, delta):
        return inductive_energy(p, which, eps, delta)

    e0 = e(0.0, 0.0)
    dxx = (e(h, 0.0) - 2 * e0 + e(-h, 0.0)) / h ** 2
    dyy = (e(0.0, h) - 2 * e0 + e(0.0, -h)) / h ** 2
    dxy = (e(h, h) - e(h, -h) - e(-h, h) + e(-h, -h)) / (4 * h ** 2)
    return 0.5 * np.array([[dxx, dxy], [dxy, dyy]])


@dataclass
class ModeFrequencies:
    f_memory: float
    f_buffer: float
    overlap_memory: float
    overlap_buffer: float
    ambiguous: bool


def point_frequencies(p: AtsParams, fp: FluxPoint, dims=(10, 14),
                      overlap_floor: float = 0.5) -> ModeFrequencies:
    """Lowest memory-like and buffer-like transitions at one flux point.

    Builds H/h = f_a0 a^dag a + f_b0 (b^dag b + beta (b + b^dag)) + U_J(Phi)
    with Phi = phi_min + phi_b (b + b^dag + upsilon (a + a^dag)) in the
    displaced buffer basis (beta = phi_min / (2 phi_b) cancels the linear
    term at the true minimum), then diagonalizes and labels eigenstates by
    their overlap with the displaced single-excitation states.
    """
    dim_a, dim_b = dims
    phi0 = potential_minimum(p, fp)
    a = tensor([annihilation(dim_a), identity(dim_b)])
    b = tensor([identity(dim_a), annihilation(dim_b)])
    quad_a = (a + a.dag()).to_dense()
    quad_b = (b + b.dag()).to_dense()

    phase = phi0 * np.eye(dim_a * dim_b) + p.phi_b * (quad_b + p.upsilon * quad_a)
    w, v = np.linalg.eigh(phase)
    arg = w + fp.phi_diff
    cos_m = (v * np.cos(arg)) @ v.conj().T
    sin_m = (v * np.sin(arg)) @ v.conj().T

    beta = phi0 / (2.0 * p.phi_b)
    h_mat = (p.f_a0 * (a.dag() @ a).to_dense()
             + p.f_b0 * (b.dag() @ b).to_dense()
             + p.f_b0 * beta * quad_b
             - 2.0 * p.e_j * np.cos(fp.phi_sum) * cos_m
             + 2.0 * p.de_j * np.sin(fp.phi_sum) * sin_m)
    evals, evecs = np.linalg.eigh(h_mat)

    idx_a = 1 * dim_b      # |1_a, 0_b> in the displaced basis
    idx_b = 1              # |0_a, 1_b>
    ov_a = np.abs(evecs[idx_a, :]) ** 2
    ov_b = np.abs(evecs[idx_b, :]) ** 2
    # ground state excluded from excitation labeling
    ov_a[0] = ov_b[0] = 0.0
    ka = int(np.argmax(ov_a))
    kb = int(np.argmax(ov_b))
    f_mem = float(evals[ka] - evals[0])
    f_buf = float(evals[kb] - evals[0])
    ambiguous = bool(ov_a[ka] < overlap_floor or ov_b[kb] < overlap_floor or ka == kb)
    return ModeFrequencies(f_mem, f_buf, float(ov_a[ka]), float(ov_b[kb]), ambiguous)


@dataclass
class FluxMap:
    phi_sum: np.ndarray
    phi_diff: np.ndarray
    f_memory: np.ndarray     # Hz, shape (len(phi_sum), len(phi_diff))
    f_buffer: np.ndarray
    ambiguous: np.ndarray    # bool mask


def flux_map(p: AtsParams, phi_sum_grid, phi_diff_grid, dims=(8, 12),
             max_workers: int = 1) -> FluxMap:
    """Mode-frequency maps over a flux grid; rows follow phi_sum."""
    phi_sum_grid = np.asarray(phi_sum_grid, dtype=float)
    phi_diff_grid = np.asarray(phi_diff_grid, dtype=float)
    shape = (phi_sum_grid.size, phi_diff_grid.size)
    f_mem = np.empty(shape)
    f_buf = np.empty(shape)
    amb = np.zeros(shape, dtype=bool)

    def row(i):
        for j, pd in enumerate(phi_diff_grid):
            mf = point_frequencies(p, FluxPoint(phi_sum_grid[i], pd), dims)
            f_mem[i, j] = mf.f_memory
            f_buf[i, j] = mf.f_buffer
            amb[i, j] = mf.ambiguous

    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(row, range(shape[0])))
    else:
        for i in range(shape[0]):
            row(i)
    return FluxMap(phi_sum_grid, phi_diff_grid, f_mem, f_buf, amb)


def extract_params(f_b1: float, f_b2: float, f_bmax: float, e_c: float):
    """Invert the weak-hybridization saddle/maximum frequencies for energies.

    f_b1,b2 = sqrt(8 E_C (E_L -+ 2 dE_J)) at the two saddle families and
    f_bmax = sqrt(8 E_C (E_L + 2 E_J)) at zero flux; all quantities in Hz
    (E/h for energies).  Returns (e_l, de_j, e_j).
    """
    if not (0 < f_b1 <= f_b2):
        raise ValueError("need f_b2 >= f_b1 > 0")
    if f_bmax <= f_b2:
        raise ValueError("f_bmax must exceed the saddle frequencies")
    e_l = (f_b1 ** 2 + f_b2 ** 2) / (16.0 * e_c)
    de_j = (f_b2 ** 2 - f_b1 ** 2) / (32.0 * e_c)
    e_j = (f_bmax ** 2 / (8.0 * e_c) - e_l) / 2.0
    if e_j <= 0 or e_l <= 0:
        raise ValueError("inconsistent inputs: negative energy")
    return e_l, de_j, e_j


def memory_kerr_estimate(p: AtsParams) -> float:
    """Indicative fourth-order memory self-Kerr at the saddle, in Hz.

    At the operating point the junction cosine survives only through the
    asymmetry, contributing a quartic dE_J (upsilon phi_b)^4 per photon
    pair.  Order-of-magnitude only; no higher corrections are included.
    """
    return p.de_j * (p.upsilon * p.phi_b) ** 4
