"""Semi-classical steady-state analysis of the memory-buffer system.

Critical point, photon-number branches, detuning "diamond" maps, edge
geometry and the mean-field flow.  The geometric construction: steady
solutions solve |alpha|^2 = (eps_d/g2*) e^{-2i theta_a} + z on the positive
real axis, where z = (i kappa_a/2 + Delta_a)(i kappa_b/2 + Delta_b)/(2|g2|^2).
The circle of radius |eps_d/g2| centered on z crosses the axis 0, 1 or 2
times, giving 1, 3 or 5 solutions (vacuum plus a +-alpha pair per crossing).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import liouville, models


@dataclass
class SteadyBranch:
    """One semi-classical steady solution of the two-mode system."""

    alpha: complex
    beta: complex
    nbar: float
    z: complex
    branch: str  # "vacuum" or "bright"


def critical_drive(g2, kappa_a: float, kappa_b: float) -> float:
    """Drive amplitude of the classical threshold, |eps_d| = kappa_a kappa_b / (8 |g2|)."""
    return kappa_a * kappa_b / (8.0 * abs(g2))


def nbar_zero_detuning(eps_d, g2, kappa_a: float, kappa_b: float) -> float:
    """max(|eps_d/g2| - kappa_a kappa_b/(8 |g2|^2), 0) at zero detuning."""
    if kappa_a < 0 or kappa_b <= 0:
        raise ValueError("rates must be positive")
    return max(abs(eps_d) / abs(g2) - kappa_a * kappa_b / (8.0 * abs(g2) ** 2), 0.0)


def aux_z(p: models.TwoModeParams) -> complex:
    return ((1j * p.kappa_a / 2 + p.delta_a) * (1j * p.kappa_b / 2 + p.delta_b)
            / (2.0 * abs(p.g2) ** 2))


def nbar_detuned(p: models.TwoModeParams) -> float:
    """Bright-branch photon number at arbitrary detunings (0 outside the diamond)."""
    z = aux_z(p)
    r = abs(p.eps_d) / abs(p.g2)
    if r ** 2 <= z.imag ** 2:
        return 0.0
    return max(z.real + np.sqrt(r ** 2 - z.imag ** 2), 0.0)


def steady_branches(p: models.TwoModeParams):
    """All semi-classical steady solutions, largest-field branch tagged "bright".

    Returns a list of SteadyBranch: the vacuum solution always, plus a
    +-alpha pair for each circle/axis intersection with |alpha|^2 > 0.
    Which solution the experiment settles on under a drive sweep (hysteresis)
    is not modeled; callers get every root.
    """
    z = aux_z(p)
    beta_vac = -p.eps_d / (p.delta_b + 1j * p.kappa_b / 2)
    out = [SteadyBranch(0.0, beta_vac, 0.0, z, "vacuum")]
    r = abs(p.eps_d) / abs(p.g2)
    disc = r ** 2 - z.imag ** 2
    if disc <= 0:
        return out
    roots = [z.real + np.sqrt(disc), z.real - np.sqrt(disc)]
    nmax = max(roots)
    for x in roots:
        if x <= 0:
            continue
        # e^{-2i theta} = (x - z) g2* / eps_d on the circle
        phase = (x - z) * np.conj(p.g2) / p.eps_d
        theta = -np.angle(phase) / 2.0
        for s in (1.0, -1.0):
            alpha = s * np.sqrt(x) * np.exp(1j * theta)
            beta = (1j * p.kappa_a / 2 + p.delta_a) * np.exp(2j * theta) / (2 * p.g2)
            tag = "bright" if x == nmax else "dim"
            out.append(SteadyBranch(alpha, beta, x, z, tag))
    return out


@dataclass
class DiamondEdges:
    """Parametric edge curves of the bright region in the detuning plane.

    Linear edges solve kappa_a Delta_b + kappa_b Delta_a = +-4|eps_d g2| and
    live where Delta_a Delta_b > kappa_a kappa_b/4; the curved edges solve
    (kappa_a^2/4 + Delta_a^2)(kappa_b^2/4 + Delta_b^2) = |2 eps_d g2|^2 in the
    complementary domain.  Edges depend on the product eps_d * g2 only.
    """

    product: float
    kappa_a: float
    kappa_b: float
    linear_slope: float
    linear_edges: list = field(default_factory=list)   # (delta_a, delta_b) arrays
    curved_edges: list = field(default_factory=list)

    def domain_sign(self, delta_a, delta_b):
        return np.sign(np.asarray(delta_a) * np.asarray(delta_b)
                       - self.kappa_a * self.kappa_b / 4.0)


def diamond_edges(product: float, kappa_a: float, kappa_b: float,
                  n_points: int = 201) -> DiamondEdges:
    """Edge curves for a given |eps_d g2| product."""
    if product <= 0:
        raise ValueError("the drive-coupling product must be positive")
    edges = DiamondEdges(product, kappa_a, kappa_b, linear_slope=-kappa_b / kappa_a)

    # Linear edges exist once the line reaches the positive domain,
    # i.e. when Da^2 - (4P/kb) Da + ka^2/4 = 0 has real roots.
    disc = (4 * product / kappa_b) ** 2 - kappa_a ** 2
    if disc > 0:
        lo = (4 * product / kappa_b - np.sqrt(disc)) / 2
        hi = (4 * product / kappa_b + np.sqrt(disc)) / 2
        da = np.linspace(lo, hi, n_points)
        db = (4 * product - kappa_b * da) / kappa_a
        edges.linear_edges.append((da, db))
        edges.linear_edges.append((-da, -db))

    # Curved edges: Delta_b^2 = 4 P^2/(kappa_a^2/4 + Delta_a^2) - kappa_b^2/4 >= 0.
    amax2 = (4 * product / kappa_b) ** 2 - kappa_a ** 2 / 4
    if amax2 > 0:
        da = np.linspace(-np.sqrt(amax2), np.sqrt(amax2), n_points)
        db2 = (2 * product) ** 2 / (kappa_a ** 2 / 4 + da ** 2) - kappa_b ** 2 / 4
        db = np.sqrt(np.clip(db2, 0.0, None))
        sign = edges.domain_sign(da, db)
        keep_top = sign <= 0
        sign_bot = edges.domain_sign(da, -db)
        keep_bot = sign_bot <= 0
        edges.curved_edges.append((da[keep_top], db[keep_top]))
        edges.curved_edges.append((da[keep_bot], -db[keep_bot]))
    return edges


def nbar_map(g2, eps_d, kappa_a, kappa_b, delta_a_grid, delta_b_grid) -> np.ndarray:
    """Bright-branch photon number on a (Delta_b, Delta_a) grid.

    Rows follow delta_b_grid, columns delta_a_grid, matching the CSV map
    layout (header row of Delta_a, first column Delta_b).
    """
    da = np.asarray(delta_a_grid, dtype=float)
    db = np.asarray(delta_b_grid, dtype=float)
    out = np.empty((db.size, da.size))
    for i, dbv in enumerate(db):
        for j, dav in enumerate(da):
            p = models.TwoModeParams(g2=g2, eps_d=eps_d, kappa_a=kappa_a,
                                     kappa_b=kappa_b, delta_a=dav, delta_b=dbv)
            out[i, j] = nbar_detuned(p)
    return out


def symmetric_grid(half_width: float, n: int) -> np.ndarray:
    """Odd-count grid symmetric about 0 so the center pixel is exactly (0, 0)."""
    if n % 2 == 0:
        n += 1
    return np.linspace(-half_width, half_width, n)


def meanfield_flow(p: models.TwoModeParams, alpha0: complex, beta0: complex,
                   t_final: float, n_points: int = 400,
                   rtol: float = 1e-8, atol: float = 1e-10):
    """Integrate d alpha/dt = (i Delta_a - kappa_a/2) alpha - 2i g2 alpha* beta,
    d beta/dt  = (i Delta_b - kappa_b/2) beta - i g2* alpha^2 + i eps_d."""

    def rhs(_t, y):
        alpha, beta = y
        dalpha = (1j * p.delta_a - p.kappa_a / 2) * alpha - 2j * p.g2 * np.conj(alpha) * beta
        dbeta = (1j * p.delta_b - p.kappa_b / 2) * beta - 1j * np.conj(p.g2) * alpha ** 2 \
            + 1j * p.eps_d
        return [dalpha, dbeta]

    times = np.linspace(0.0, t_final, n_points)
    sol = solve_ivp(rhs, (0.0, t_final), np.array([alpha0, beta0], dtype=complex),
                    t_eval=times, rtol=rtol, atol=atol, method="DOP853")
    if not sol.success:
        raise RuntimeError(f"mean-field flow integration failed: {sol.message}")
    return sol.t, sol.y[0], sol.y[1]


def fixed_point_residual(p: models.TwoModeParams, alpha: complex, beta: complex) -> float:
    """max |d(alpha,beta)/dt| at a candidate steady point."""
    dalpha = (1j * p.delta_a - p.kappa_a / 2) * alpha - 2j * p.g2 * np.conj(alpha) * beta
    dbeta = (1j * p.delta_b - p.kappa_b / 2) * beta - 1j * np.conj(p.g2) * alpha ** 2 \
        + 1j * p.eps_d
    return float(max(abs(dalpha), abs(dbeta)))


def quantum_vs_classical_curve(g2, kappa_a, kappa_b, eps_d_grid, dim: int,
                               quantum: bool = True):
    """Semi-classical and quantum steady-state nbar along a drive sweep.

    The quantum branch solves the steady state of the adiabatically
    eliminated single-mode model at each drive and returns Tr(rho a^dag a);
    it needs kappa_a > 0 so the steady state is unique.
    """
    eps_d_grid = np.asarray(eps_d_grid, dtype=float)
    classical = np.array([nbar_zero_detuning(e, g2, kappa_a, kappa_b) for e in eps_d_grid])
    if not quantum:
        return classical, None
    if kappa_a <= 0:
        raise ValueError("the quantum branch requires kappa_a > 0 (unique steady state)")
    n_op = models.memory_photon_number(dim=dim)
    quantum_nbar = np.empty_like(classical)
    for i, eps_d in enumerate(eps_d_grid):
        pieces = models.adiabatic_map(g2, eps_d, kappa_b, 0.0)
        rp = models.ReducedParams(eps2=pieces.eps2, kappa2=pieces.kappa2, kappa_a=kappa_a)
        spec = models.reduced_model(rp, dim)
        rho = liouville.steady_state(liouville.build_liouvillian(spec))
        quantum_nbar[i] = rho.expect(n_op).real
    return classical, quantum_nbar
