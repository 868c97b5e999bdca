"""Truncated Fock-space linear algebra: operators, states, tensor products.

Operators are stored sparse (CSR), states and density matrices dense.
Mode ordering convention, fixed throughout the package: memory first,
buffer second, qubit last.  All objects are immutable after construction
and all operations are pure, so values can be shared freely across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12
STATE_NORM_TOL = 1e-10
DM_TRACE_TOL = 1e-9
DM_HERM_TOL = 1e-10
DM_MIN_EIG = -1e-8


class TruncationError(ValueError):
    """Requested amplitude does not fit in the truncated Fock space."""


def _as_dims(dims) -> tuple:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"dims must be positive, got {dims}")
    return dims


@dataclass(frozen=True)
class OperatorMatrix:
    """Sparse complex operator on a (tensor-)Fock space.

    `dims` lists the per-mode truncation dimensions; `data` is square with
    side prod(dims).  If `hermitian` is set the constructor verifies
    max|M - M^dag| < 1e-12.
    """

    dims: tuple
    data: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        d = int(np.prod(self.dims))
        mat = sp.csr_matrix(self.data, dtype=complex)
        if mat.shape != (d, d):
            raise ValueError(f"operator shape {mat.shape} != ({d}, {d}) from dims {self.dims}")
        object.__setattr__(self, "data", mat)
        if self.hermitian:
            defect = herm_defect(mat)
            if defect >= HERMITIAN_TOL:
                raise ValueError(f"operator marked hermitian but max|M - M^dag| = {defect:.3g}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.dims, self.data.conj().T.tocsr(), hermitian=self.hermitian)

    def to_dense(self) -> np.ndarray:
        return self.data.toarray()

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")
        return OperatorMatrix(self.dims, (self.data @ other.data).tocsr())

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")
        return OperatorMatrix(self.dims, (self.data + other.data).tocsr())

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "OperatorMatrix":
        return OperatorMatrix(self.dims, (self.data * complex(scalar)).tocsr())

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return (-1.0) * self


def herm_defect(mat) -> float:
    """max|M - M^dag| for a sparse or dense matrix."""
    if sp.issparse(mat):
        diff = (mat - mat.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    diff = mat - mat.conj().T
    return float(np.max(np.abs(diff))) if diff.size else 0.0


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on a (tensor-)Fock space."""

    dims: tuple
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        vec = np.asarray(self.data, dtype=complex).ravel()
        d = int(np.prod(self.dims))
        if vec.size != d:
            raise ValueError(f"state length {vec.size} != prod(dims) {d}")
        nrm = np.linalg.norm(vec)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        vec = vec / nrm
        vec.setflags(write=False)
        object.__setattr__(self, "data", vec)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.dims, np.outer(self.data, self.data.conj()))

    def expect(self, op: OperatorMatrix) -> complex:
        return complex(np.vdot(self.data, op.data @ self.data))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.data, other.data))


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix with cached trace/hermiticity checks.

    Construction verifies trace = 1 +- 1e-9, hermiticity to 1e-10 and
    min eigenvalue >= -1e-8 unless `validate=False`.
    """

    dims: tuple
    data: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        mat = np.asarray(self.data, dtype=complex)
        d = int(np.prod(self.dims))
        if mat.shape != (d, d):
            raise ValueError(f"density matrix shape {mat.shape} != ({d}, {d})")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "data", mat)
        if self.validate:
            tr = self.trace()
            if abs(tr - 1.0) > DM_TRACE_TOL:
                raise ValueError(f"trace = {tr:.12g}, not 1 within {DM_TRACE_TOL}")
            defect = herm_defect(mat)
            if defect > DM_HERM_TOL:
                raise ValueError(f"hermiticity defect {defect:.3g} > {DM_HERM_TOL}")
            mn = self.min_eig()
            if mn < DM_MIN_EIG:
                raise ValueError(f"min eigenvalue {mn:.3g} < {DM_MIN_EIG}")

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh((self.data + self.data.conj().T) / 2).min())

    def expect(self, op: OperatorMatrix) -> complex:
        return complex(np.sum(op.data.multiply(self.data.T).data)) if sp.issparse(op.data) \
            else complex(np.trace(op.data @ self.data))


def annihilation(dim: int) -> OperatorMatrix:
    """Annihilation operator, entries sqrt(n) at (n-1, n)."""
    if dim < 2:
        raise ValueError(f"invalid dimension {dim}: need dim >= 2")
    n = np.arange(1, dim)
    mat = sp.diags(np.sqrt(n), offsets=1, shape=(dim, dim), dtype=complex)
    return OperatorMatrix((dim,), mat.tocsr())


def creation(dim: int) -> OperatorMatrix:
    return annihilation(dim).dag()


def number(dim: int) -> OperatorMatrix:
    if dim < 2:
        raise ValueError(f"invalid dimension {dim}: need dim >= 2")
    mat = sp.diags(np.arange(dim, dtype=float), dtype=complex)
    return OperatorMatrix((dim,), mat.tocsr(), hermitian=True)


def identity(dim: int) -> OperatorMatrix:
    return OperatorMatrix((dim,), sp.identity(dim, dtype=complex, format="csr"), hermitian=True)


def zero(dim: int) -> OperatorMatrix:
    return OperatorMatrix((dim,), sp.csr_matrix((dim, dim), dtype=complex), hermitian=True)


def fock(dim: int, n: int) -> StateVector:
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside [0, {dim})")
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return StateVector((dim,), vec)


def coherent(dim: int, alpha: complex) -> StateVector:
    """Truncated coherent state, explicitly renormalized.

    The truncation guard |alpha|^2 <= dim/4 keeps the Poisson tail mass
    below 1e-8, so <n> matches |alpha|^2 to better than 1e-6.
    """
    alpha = complex(alpha)
    if abs(alpha) ** 2 > dim / 4:
        raise TruncationError(
            f"|alpha|^2 = {abs(alpha)**2:.3g} exceeds dim/4 = {dim / 4:.3g}; increase dim"
        )
    amps = np.empty(dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return StateVector((dim,), amps)


def tensor(ops) -> OperatorMatrix:
    """Kronecker product of operators; dims concatenate left to right."""
    ops = list(ops)
    if not ops:
        raise ValueError("tensor of an empty list")
    dims = tuple(d for op in ops for d in op.dims)
    mat = ops[0].data
    for op in ops[1:]:
        mat = sp.kron(mat, op.data, format="csr")
    return OperatorMatrix(dims, mat, hermitian=all(op.hermitian for op in ops))


def mode_op(single: OperatorMatrix, dims, mode: int) -> OperatorMatrix:
    """Embed a single-mode operator at position `mode` of a tensor space."""
    dims = _as_dims(dims)
    if single.dims != (dims[mode],):
        raise ValueError(f"operator dim {single.dims} != dims[{mode}] = {dims[mode]}")
    factors = [identity(d) for d in dims]
    factors[mode] = single
    return tensor(factors)


def expect(op: OperatorMatrix, state) -> complex:
    """<O> for a StateVector or DensityMatrix."""
    return state.expect(op)
