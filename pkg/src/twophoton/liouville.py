"""Lindblad superoperator assembly, time evolution, steady states, spectral gaps.

Superoperators use the column-stacking convention, vec(rho) = rho.reshape(-1,
order='F'), so vec(A rho B) = kron(B.T, A) vec(rho).  Everything downstream
(trace functional, parity masks, steady-state row replacement) depends on this
choice.

Steady states are found by sparse LU with one row replaced by the trace
constraint; an eigen-solver pass first counts the numerical null space and
raises `DegenerateSteadyStateError` (with the multiplicity and a kernel basis)
instead of silently picking one element of a steady manifold.  The spectral
gap is extracted with shift-invert Arnoldi targeting 0; photon-parity sectors
are carved out of the superoperator with index masks on Fock parity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .qcore import DensityMatrix, OperatorMatrix, herm_defect

# Relative threshold below which an eigenvalue of L counts as stationary.
ZERO_TOL = 1e-10
# Dense eigensolver cutoff for the superoperator side.
DENSE_EIG_SIDE = 420


class DegenerateSteadyStateError(RuntimeError):
    """The Lindbladian kernel is more than one-dimensional."""

    def __init__(self, multiplicity: int, kernel_basis: np.ndarray, dims):
        self.multiplicity = int(multiplicity)
        self.kernel_basis = kernel_basis  # columns are vec'd kernel elements
        self.dims = tuple(dims)
        super().__init__(
            f"steady state is not unique: numerical null space has dimension {multiplicity}"
        )


class SteadyStateError(RuntimeError):
    """Direct steady-state solve did not converge to the requested residual."""


class StiffnessError(RuntimeError):
    """Adaptive integration failed (step-size underflow or solver abort)."""


@dataclass
class ModelSpec:
    """Hamiltonian plus collapse operators, the common currency of all solvers.

    `H` is in angular frequency units (rad/s); each collapse operator is
    already scaled by sqrt(rate).  All operators must share dims and H must
    be Hermitian.
    """

    H: OperatorMatrix
    collapse_ops: list

    def __post_init__(self):
        defect = herm_defect(self.H.data)
        scale = max(1.0, _max_abs(self.H.data))
        if defect > 1e-10 * scale:
            raise ValueError(f"H is not Hermitian: max|H - H^dag| = {defect:.3g}")
        for c in self.collapse_ops:
            if c.dims != self.H.dims:
                raise ValueError(f"collapse op dims {c.dims} != H dims {self.H.dims}")

    @property
    def dims(self) -> tuple:
        return self.H.dims

    @property
    def dim(self) -> int:
        return self.H.dim

    def rate_scale(self) -> float:
        """Fastest rate in the model, used for step-size and horizon choices."""
        scales = [_max_abs(self.H.data)]
        for c in self.collapse_ops:
            cd = c.data
            scales.append(_max_abs(cd.conj().T @ cd))
        return max(float(s) for s in scales if s > 0) if any(scales) else 1.0


@dataclass
class Liouvillian:
    """Column-stacked Lindblad generator of side prod(dims)^2."""

    dims: tuple
    matrix: sp.csr_matrix
    trace_residual: float = field(default=0.0)

    @property
    def side(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def norm_scale(self) -> float:
        """Infinity norm of L, the reference scale for residual thresholds."""
        return float(abs(self.matrix).sum(axis=1).max()) if self.matrix.nnz else 1.0


def _max_abs(mat) -> float:
    if sp.issparse(mat):
        return float(np.max(np.abs(mat.data))) if mat.nnz else 0.0
    return float(np.max(np.abs(mat))) if mat.size else 0.0


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


def trace_indices(dim: int) -> np.ndarray:
    """Vec indices carrying the diagonal of rho under column stacking."""
    return np.arange(dim) * (dim + 1)


def build_liouvillian(spec: ModelSpec) -> Liouvillian:
    """L(rho) = -i[H, rho] + sum_k (C rho C^dag - {C^dag C, rho}/2)."""
    d = spec.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    H = spec.H.data
    L = -1j * (sp.kron(eye, H, format="csr") - sp.kron(H.T, eye, format="csr"))
    for c in spec.collapse_ops:
        C = c.data
        CdC = (C.conj().T @ C).tocsr()
        L = L + sp.kron(C.conj(), C, format="csr") \
            - 0.5 * sp.kron(eye, CdC, format="csr") \
            - 0.5 * sp.kron(CdC.T, eye, format="csr")
    L = L.tocsr()
    # Trace preservation: the row functional Tr(.) annihilates L.
    tvec = np.asarray(L[trace_indices(d), :].sum(axis=0)).ravel()
    resid = float(np.max(np.abs(tvec))) if tvec.size else 0.0
    return Liouvillian(spec.dims, L, trace_residual=resid)


def _near_zero_eigs(mat: sp.csr_matrix, k: int, scale: float):
    """Eigenvalues/vectors of smallest magnitude, dense below DENSE_EIG_SIDE."""
    n = mat.shape[0]
    if n <= DENSE_EIG_SIDE:
        vals, vecs = np.linalg.eig(mat.toarray())
        order = np.argsort(np.abs(vals))
        take = order[: min(k, n)]
        return vals[take], vecs[:, take]
    k = min(k, n - 2)
    try:
        vals, vecs = spla.eigs(mat, k=k, sigma=0, which="LM")
    except RuntimeError:
        # exactly singular LU factor: nudge the shift off zero
        vals, vecs = spla.eigs(mat, k=k, sigma=-1e-9 * scale, which="LM")
    order = np.argsort(np.abs(vals))
    return vals[order], vecs[:, order]


def kernel_multiplicity(liou: Liouvillian, k: int = 6, zero_tol: float = ZERO_TOL):
    """Count near-zero eigenvalues of L and return the kernel basis columns."""
    scale = liou.norm_scale()
    vals, vecs = _near_zero_eigs(liou.matrix, k, scale)
    mask = np.abs(vals) < zero_tol * scale
    mult = int(np.count_nonzero(mask))
    if mult >= k and liou.side > DENSE_EIG_SIDE:
        # escalate until the null space is fully resolved
        vals, vecs = _near_zero_eigs(liou.matrix, min(2 * k + 4, liou.side - 2), scale)
        mask = np.abs(vals) < zero_tol * scale
        mult = int(np.count_nonzero(mask))
    return mult, vecs[:, mask]


def steady_state(liou: Liouvillian, check_unique: bool = True,
                 resid_tol: float = 1e-9, zero_tol: float = ZERO_TOL) -> DensityMatrix:
    """Unique steady state of L by direct solve with a trace-constraint row.

    Raises `DegenerateSteadyStateError` when the numerical null space has
    dimension > 1 (reporting the multiplicity), and `SteadyStateError` when
    the residual ||L vec(rho)|| exceeds resid_tol * ||L||.
    """
    d = liou.dim
    scale = liou.norm_scale()
    if check_unique:
        mult, basis = kernel_multiplicity(liou, zero_tol=zero_tol)
        if mult > 1:
            raise DegenerateSteadyStateError(mult, basis, liou.dims)

    L = liou.matrix.tolil(copy=True)
    weight = scale if scale > 0 else 1.0
    L[0, :] = 0.0
    L[0, trace_indices(d)] = weight
    rhs = np.zeros(liou.side, dtype=complex)
    rhs[0] = weight
    sol = spla.splu(L.tocsc()).solve(rhs)

    resid = float(np.linalg.norm(liou.matrix @ sol))
    nrm = float(np.linalg.norm(sol))
    if not np.isfinite(resid) or resid > resid_tol * scale * max(nrm, 1.0):
        # eigen-solver fallback: take the eigenvector closest to zero
        vals, vecs = _near_zero_eigs(liou.matrix, 4, scale)
        sol = vecs[:, 0]
        resid = float(np.linalg.norm(liou.matrix @ sol))
        if resid > resid_tol * scale * float(np.linalg.norm(sol)):
            raise SteadyStateError(
                f"steady-state residual {resid:.3g} > {resid_tol:.1g} * ||L|| = "
                f"{resid_tol * scale:.3g}"
            )
    rho = unvec(sol, d)
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    return DensityMatrix(liou.dims, rho)


def steady_projection(liou: Liouvillian, rho0: DensityMatrix,
                      zero_tol: float = ZERO_TOL) -> DensityMatrix:
    """Asymptotic state of an initial condition via the kernel spectral projector.

    Pairs the right kernel of L with the left kernel (conserved quantities)
    and projects vec(rho0) onto the steady manifold.  For a unique steady
    state this returns it regardless of rho0.
    """
    scale = liou.norm_scale()
    mult, right = kernel_multiplicity(liou, zero_tol=zero_tol)
    if mult == 0:
        raise SteadyStateError("no stationary eigenvalue found")
    lvals, left = _near_zero_eigs(liou.matrix.conj().T.tocsr(), max(mult + 2, 6), scale)
    left = left[:, np.abs(lvals) < zero_tol * scale]
    if left.shape[1] < mult:
        raise SteadyStateError("left kernel not fully resolved")
    left = left[:, :mult]
    overlap = left.conj().T @ right
    coeffs = np.linalg.solve(overlap, left.conj().T @ vec(rho0.data))
    rho = unvec(right @ coeffs, liou.dim)
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    return DensityMatrix(liou.dims, rho)


def manifold_mix(kernel_basis: np.ndarray, dims) -> DensityMatrix:
    """A physical (hermitian, PSD, trace-1) state inside a steady manifold.

    Picks the kernel combination with maximal trace, hermitizes, clips
    negative eigenvalues and renormalizes.  Any observable that is constant
    on the manifold can be evaluated on the result.
    """
    dims = tuple(dims)
    d = int(np.prod(dims))
    tsel = np.zeros(d * d, dtype=complex)
    tsel[trace_indices(d)] = 1.0
    coeffs = kernel_basis.conj().T @ tsel
    if np.linalg.norm(coeffs) < 1e-14:
        raise ValueError("kernel contains no traceful element")
    v = kernel_basis @ coeffs
    rho = unvec(v, d)
    rho = (rho + rho.conj().T) / 2
    w, U = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    rho = (U * w) @ U.conj().T
    rho = rho / np.trace(rho).real
    return DensityMatrix(dims, rho)


@dataclass
class EvolveResult:
    times: np.ndarray
    expectations: np.ndarray  # shape (n_observables, n_times)
    trace_drift: float
    herm_defect: float
    final_state: DensityMatrix


def evolve(spec: ModelSpec, rho0: DensityMatrix, times, observables,
           rtol: float = 1e-8, atol: float = 1e-10, method: str = "DOP853",
           liou: Liouvillian | None = None) -> EvolveResult:
    """Integrate d rho/dt = L(rho) and return Tr(rho_t O) for each observable.

    Adaptive embedded Runge-Kutta (DOP853 by default).  Step-size underflow
    or solver failure raises `StiffnessError` with the solver diagnostic.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be an increasing grid with >= 2 points")
    if liou is None:
        liou = build_liouvillian(spec)
    L = liou.matrix
    y0 = vec(rho0.data)

    if method in ("BDF", "Radau", "LSODA"):
        # implicit solvers need real arithmetic; stack Re/Im blocks
        n = L.shape[0]
        Lr = sp.bmat([[L.real, -L.imag], [L.imag, L.real]], format="csr")
        y0r = np.concatenate([y0.real, y0.imag])
        sol = solve_ivp(lambda t, y: Lr @ y, (times[0], times[-1]), y0r,
                        t_eval=times, method=method, rtol=rtol, atol=atol,
                        jac=Lr.tocsc())
        if sol.success:
            sol.y = sol.y[:n] + 1j * sol.y[n:]
    else:
        sol = solve_ivp(lambda t, y: L @ y, (times[0], times[-1]), y0,
                        t_eval=times, method=method, rtol=rtol, atol=atol)
    if not sol.success:
        raise StiffnessError(
            f"integrator {method} failed: {sol.message} "
            f"(rate scale {spec.rate_scale():.3g}; consider a stiff method)"
        )

    d = spec.dim
    tidx = trace_indices(d)
    traces = sol.y[tidx, :].sum(axis=0)
    drift = float(np.max(np.abs(traces - 1.0)))

    obs = list(observables)
    exps = np.empty((len(obs), len(times)), dtype=complex)
    for j, op in enumerate(obs):
        # Tr(rho O) = vec(O^T)^T vec(rho) under column stacking
        ovec = vec(np.asarray(op.data.T.todense()))
        exps[j, :] = ovec @ sol.y

    rho_f = unvec(sol.y[:, -1], d)
    hdef = herm_defect(rho_f)
    rho_f = (rho_f + rho_f.conj().T) / 2
    rho_f = rho_f / np.trace(rho_f).real
    return EvolveResult(times, exps, drift, float(hdef),
                        DensityMatrix(spec.dims, rho_f, validate=False))


def fock_parities(dims, modes=None) -> np.ndarray:
    """Photon-number parity (0/1) of each basis index, summed over `modes`."""
    dims = tuple(dims)
    if modes is None:
        modes = range(len(dims))
    grids = np.indices(dims).reshape(len(dims), -1)
    par = np.zeros(grids.shape[1], dtype=int)
    for m in modes:
        par += grids[m]
    return par % 2


def parity_masks(dims, modes=None):
    """Even/odd superoperator index masks from Fock parity.

    A vec index (r, c) sits in the even sector when parity(r) + parity(c)
    is even.  The Lindbladian of any model whose operators are
    parity-definite preserves these sectors.
    """
    dims = tuple(dims)
    d = int(np.prod(dims))
    par = fock_parities(dims, modes)
    # vec index = r + c*d
    tot = (par[:, None] + par[None, :]) % 2  # tot[r, c]
    flat = tot.reshape(-1, order="F")
    return np.flatnonzero(flat == 0), np.flatnonzero(flat == 1)


def spectral_gap(liou: Liouvillian, sector: str = "full", parity_modes=None,
                 k: int = 8, zero_tol: float = ZERO_TOL) -> float:
    """Decay rate of the slowest non-stationary mode, optionally per parity sector.

    Returns -Re of the nonzero eigenvalue with smallest |Re| in the requested
    sector; stationary eigenvalues are discarded by |lambda| < zero_tol*||L||.
    The bit-flip rate of the two-photon models is the parity-odd gap.  If the
    generator does not preserve the requested sector the function warns and
    falls back to the full spectrum.
    """
    if sector not in ("full", "even", "odd"):
        raise ValueError(f"unknown sector {sector!r}")
    scale = liou.norm_scale()
    mat = liou.matrix
    if sector != "full":
        even, odd = parity_masks(liou.dims, parity_modes)
        keep = even if sector == "even" else odd
        drop = odd if sector == "even" else even
        off = mat[keep][:, drop]
        off_norm = float(np.max(np.abs(off.data))) if off.nnz else 0.0
        if off_norm > 1e-9 * scale:
            warnings.warn(
                f"generator does not preserve the {sector} parity sector "
                f"(off-block max {off_norm:.3g}); falling back to full spectrum",
                stacklevel=2,
            )
            keep = None
        if keep is not None:
            mat = mat[keep][:, keep].tocsr()

    vals, _ = _near_zero_eigs(mat, k, scale)
    nonzero = vals[np.abs(vals) >= zero_tol * scale]
    if nonzero.size == 0:
        raise RuntimeError("no non-stationary eigenvalue found; increase k")
    lam = nonzero[np.argmin(np.abs(nonzero.real))]
    return float(-lam.real)
