"""Synthetic heterodyne measurement records and their statistics.

Two generators on purpose.  `synth_sme` integrates the diffusive stochastic
master equation and is exact physics at small Hilbert spaces; the telegraph
surrogate `synth_telegraph` produces the same record statistics for a field
parked in one of two pointer states and is the only way to reach the
100 s x ms-resolution regime on a desk.

Record convention, fixed package-wide: over one integration window of
length T_m,

    I = sqrt(G) * ( sqrt(2 kappa_c eta) * int <(a+a^dag)/2> dt  +  W_I(T_m) )
    Q = sqrt(G) * ( sqrt(2 kappa_c eta) * int <(a-a^dag)/2i> dt +  W_Q(T_m) )

with Wiener noise of variance T_m per quadrature (dW^2 = dt).  The gain G is
a pure scalar.  The raw sqrt(G) scaling is stored exactly as acquired;
`quadrature_view` converts to field-quadrature units non-destructively.

Randomness comes from a counter-based Philox generator; every synthetic
series records its seed so a run is bit-exact reproducible from
(seed, parameters).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .liouville import ModelSpec, build_liouvillian, vec
from .qcore import DensityMatrix, annihilation, fock, mode_op


class UnresolvableJumpsError(ValueError):
    """Flip time at or below the integration window; jumps cannot be resolved."""


@dataclass
class RecordMeta:
    """Acquisition metadata attached to every record."""

    gain: float            # amplification gain G (dimensionless)
    t_m: float             # integration time T_m (s)
    eta: float             # detection efficiency in (0, 1]
    kappa_c: float         # coupling rate of the monitored port (rad/s)
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_m <= 0:
            raise ValueError("T_m must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"efficiency {self.eta} outside [0, 1]")
        if self.gain <= 0 or self.kappa_c < 0:
            raise ValueError("gain must be positive and kappa_c nonnegative")


@dataclass
class IQSeries:
    """Time-ordered (I, Q) pairs; sample k covers [k*T_m, (k+1)*T_m)."""

    samples: np.ndarray  # shape (n, 2)
    meta: RecordMeta

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("samples must have shape (n, 2)")
        self.samples = arr

    @property
    def i(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def q(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.meta.t_m

    @property
    def duration(self) -> float:
        return len(self.samples) * self.meta.t_m

    def save_csv(self, path):
        """time,I,Q CSV plus a JSON meta sidecar at <path>.meta.json.

        The first line is a timestamp comment; everything below it is
        bit-exact reproducible from (seed, parameters, version).
        """
        path = Path(path)
        with open(path, "w", newline="") as fh:
            fh.write(f"# created {datetime.now(timezone.utc).isoformat()}\n")
            w = csv.writer(fh)
            w.writerow(["time_s", "I", "Q"])
            for t, (iv, qv) in zip(self.times, self.samples):
                w.writerow([f"{t:.9e}", f"{iv:.17g}", f"{qv:.17g}"])
        sidecar = path.with_suffix(path.suffix + ".meta.json")
        with open(sidecar, "w") as fh:
            json.dump(asdict(self.meta), fh, indent=2, sort_keys=True)

    @classmethod
    def load_csv(cls, path) -> "IQSeries":
        path = Path(path)
        rows = []
        with open(path) as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            header = next(reader)
            if header[0].strip().lower() not in ("time_s", "time"):
                rows.append([float(v) for v in header])
            rows.extend([float(v) for v in row] for row in reader)
        data = np.atleast_2d(np.asarray(rows, dtype=float))
        sidecar = path.with_suffix(path.suffix + ".meta.json")
        with open(sidecar) as fh:
            raw = json.load(fh)
        meta = RecordMeta(**raw)
        return cls(data[:, 1:3], meta)


def quadrature_view(series: IQSeries) -> np.ndarray:
    """Records rescaled to coincide with measurements of (a +- a^dag)/2(i).

    Pure view: divides out sqrt(G) * sqrt(2 kappa_c eta) * T_m, leaving the
    per-window average of the monitored quadratures plus scaled noise.
    """
    m = series.meta
    scale = np.sqrt(m.gain) * np.sqrt(2 * m.kappa_c * m.eta) * m.t_m
    return series.samples / scale


def _philox(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _sme_step_ops(spec: ModelSpec, kappa_c: float):
    """Dense operators for the Euler-Maruyama step on the monitored mode."""
    dims = spec.dims
    a = mode_op(annihilation(dims[0]), dims, 0) if len(dims) > 1 else annihilation(dims[0])
    c = np.sqrt(kappa_c) * a.to_dense()
    H = spec.H.to_dense()
    cs = [op.to_dense() for op in spec.collapse_ops]
    return H, cs, c


def _lindblad_rhs(H, cs, rho):
    out = -1j * (H @ rho - rho @ H)
    for C in cs:
        Cd = C.conj().T
        out += C @ rho @ Cd - 0.5 * (Cd @ C @ rho + rho @ Cd @ C)
    return out


def model_rate(spec: ModelSpec) -> float:
    """Fastest loss-rate parameter of the model.

    Collapse operators arrive pre-scaled by sqrt(rate); the rate constant is
    recovered as the smallest positive diagonal entry of C^dag C (kappa for
    an a-type channel, 2 kappa_2 for a^2).
    """
    rates = []
    for c in spec.collapse_ops:
        diag = (c.data.conj().T @ c.data).diagonal().real
        pos = diag[diag > 1e-30]
        if pos.size:
            rates.append(float(pos.min()))
    return max(rates) if rates else spec.rate_scale()


def sme_timestep(spec: ModelSpec, t_m: float, dt_max: float | None = None) -> float:
    """Fixed Euler-Maruyama step, dt <= min(1/(50 kappa_max), T_m/20).

    A hard cap at 0.25/rate_scale keeps the explicit step inside the
    stability region of the fastest (truncation-edge) Liouvillian modes.
    """
    dt = min(1.0 / (50.0 * model_rate(spec)), t_m / 20.0, 0.25 / spec.rate_scale())
    if dt_max is not None:
        dt = min(dt, dt_max)
    return dt


def synth_sme(spec: ModelSpec, meta: RecordMeta, duration: float, seed: int,
              rho0: DensityMatrix | None = None, dt: float | None = None) -> IQSeries:
    """Heterodyne record of one diffusive trajectory of the model.

    The conditional state follows

        d rho = L(rho) dt + sqrt(eta/2) M[c] rho dW_I + sqrt(eta/2) M[-ic] rho dW_Q

    with c = sqrt(kappa_c) a on the monitored (first) mode and
    M[c] rho = c rho + rho c^dag - Tr((c + c^dag) rho) rho.  Records
    accumulate dy = sqrt(2 kappa_c eta) <quadrature> dt + dW per window and
    are scaled by sqrt(G).  The trajectory average over many seeds
    reproduces the deterministic master equation.
    """
    d = spec.dim
    if d > 64:
        raise ValueError(f"Hilbert side {d} too large for trajectory integration")
    H, cs, c = _sme_step_ops(spec, meta.kappa_c)
    cq = -1j * c
    cd, cqd = c.conj().T, cq.conj().T
    c_sum, cq_sum = c + cd, cq + cqd  # 2 sqrt(kappa_c) X and 2 sqrt(kappa_c) P
    rho = (fock(d, 0).to_density() if rho0 is None else rho0).data.astype(complex).copy()

    if dt is None:
        dt = sme_timestep(spec, meta.t_m)
    n_sub = max(int(np.ceil(meta.t_m / dt)), 1)
    dt = meta.t_m / n_sub
    n_win = int(round(duration / meta.t_m))
    rng = _philox(seed)
    root_eta = np.sqrt(meta.eta / 2.0)

    samples = np.empty((n_win, 2))
    sqdt = np.sqrt(dt)
    for w in range(n_win):
        acc_i = 0.0
        acc_q = 0.0
        for _ in range(n_sub):
            dw = rng.normal(0.0, sqdt, size=2)
            tr_c = float(np.trace(c_sum @ rho).real)
            tr_q = float(np.trace(cq_sum @ rho).real)
            # record drift sqrt(2 kappa_c eta) <X> = sqrt(eta/2) Tr((c+c^dag) rho)
            acc_i += root_eta * tr_c * dt + dw[0]
            acc_q += root_eta * tr_q * dt + dw[1]

            drho = _lindblad_rhs(H, cs, rho) * dt
            if meta.eta > 0 and meta.kappa_c > 0:
                m_i = c @ rho + rho @ cd - tr_c * rho
                m_q = cq @ rho + rho @ cqd - tr_q * rho
                drho = drho + root_eta * (m_i * dw[0] + m_q * dw[1])
            rho = rho + drho
            rho = (rho + rho.conj().T) / 2
            rho = rho / np.trace(rho).real
        samples[w, 0] = acc_i
        samples[w, 1] = acc_q
    samples *= np.sqrt(meta.gain)
    out_meta = RecordMeta(meta.gain, meta.t_m, meta.eta, meta.kappa_c, seed=seed,
                          extra=dict(meta.extra, generator="sme", dt=dt))
    return IQSeries(samples, out_meta)


def sme_ensemble(spec: ModelSpec, rho0: DensityMatrix, times, observables,
                 n_traj: int, seed: int, eta: float, kappa_c: float,
                 dt: float | None = None):
    """Trajectory-averaged expectations over a batch of SME unravelings.

    Returns (mean, stderr) arrays of shape (n_observables, n_times).  The
    batch is stepped jointly in vectorized (superoperator) form with one
    Philox stream, so results are reproducible from the master seed.
    """
    times = np.asarray(times, dtype=float)
    d = spec.dim
    dims = spec.dims
    a = mode_op(annihilation(dims[0]), dims, 0) if len(dims) > 1 else annihilation(dims[0])
    c = np.sqrt(kappa_c) * a.data.tocsr()
    cq = -1j * c
    liou = build_liouvillian(spec).matrix

    eye = sp.identity(d, dtype=complex, format="csr")
    k_i = sp.kron(eye, c, format="csr") + sp.kron(c.conj(), eye, format="csr")
    k_q = sp.kron(eye, cq, format="csr") + sp.kron(cq.conj(), eye, format="csr")
    tr_row_i = np.asarray((k_i[_tr_idx(d), :]).sum(axis=0)).ravel()
    tr_row_q = np.asarray((k_q[_tr_idx(d), :]).sum(axis=0)).ravel()
    obs_rows = [vec(np.asarray(o.data.T.todense())) for o in observables]

    if dt is None:
        dt = min(1.0 / (50.0 * model_rate(spec)), 0.25 / spec.rate_scale(),
                 float(np.min(np.diff(times))) / 4.0 if len(times) > 1 else np.inf)
    rng = _philox(seed)
    root_eta = np.sqrt(eta / 2.0)

    # columns are vec'd conditional states, one per trajectory
    v = np.repeat(vec(rho0.data)[:, None], n_traj, axis=1)
    herm_perm = (np.arange(d * d).reshape(d, d, order="F").T).reshape(-1, order="F")
    vals = np.empty((len(observables), len(times), n_traj), dtype=complex)

    t = float(times[0])
    for it, target in enumerate(times):
        while t < target - 1e-12 * max(abs(target), 1.0):
            step = min(dt, target - t)
            dv = (liou @ v) * step
            if eta > 0 and kappa_c > 0:
                dw = rng.normal(0.0, np.sqrt(step), size=(2, n_traj))
                tr_i = (tr_row_i @ v).real
                tr_q = (tr_row_q @ v).real
                dv += root_eta * ((k_i @ v - v * tr_i) * dw[0]
                                  + (k_q @ v - v * tr_q) * dw[1])
            v = v + dv
            v = (v + np.conj(v[herm_perm, :])) / 2
            v = v / v[_tr_idx(d), :].sum(axis=0).real
            t += step
        for j, row in enumerate(obs_rows):
            vals[j, it, :] = row @ v

    mean = vals.mean(axis=2)
    stderr = vals.std(axis=2, ddof=1) / np.sqrt(n_traj)
    return mean, stderr


def _tr_idx(d: int) -> np.ndarray:
    return np.arange(d) * (d + 1)


def telegraph_flips(t_bf: float, duration: float, rng) -> np.ndarray:
    """Flip instants of a Poisson process of rate 1/T_bf on [0, duration)."""
    if not np.isfinite(t_bf):
        return np.array([])
    flips = []
    t = rng.exponential(t_bf)
    while t < duration:
        flips.append(t)
        t += rng.exponential(t_bf)
    return np.asarray(flips)


def synth_telegraph(nbar: float, t_bf: float, meta: RecordMeta, duration: float,
                    seed: int, s0: int = 1) -> IQSeries:
    """Fast surrogate record: hidden two-state field with Poisson flips.

    The hidden state s(t) in {+1, -1} flips at rate 1/T_bf; each window
    integrates the signal sqrt(2 kappa_c eta) * s * sqrt(nbar) exactly
    (time-weighted within the window) and adds N(0, T_m) noise.  Q carries
    noise only (phase-locked convention).  Requires T_bf > T_m.
    """
    if t_bf <= meta.t_m:
        raise UnresolvableJumpsError(
            f"T_bf = {t_bf} <= T_m = {meta.t_m}: jumps are unresolvable"
        )
    n_win = int(round(duration / meta.t_m))
    rng = _philox(seed)
    flips = telegraph_flips(t_bf, n_win * meta.t_m, rng)

    # time-weighted mean of s over each window from the piecewise-linear
    # integral F(t) = int_0^t s dt'
    knots = np.concatenate(([0.0], flips, [n_win * meta.t_m]))
    seg_sign = s0 * (-1.0) ** np.arange(len(knots) - 1)
    f_knots = np.concatenate(([0.0], np.cumsum(seg_sign * np.diff(knots))))
    edges = np.arange(n_win + 1) * meta.t_m
    f_edges = np.interp(edges, knots, f_knots)
    s_mean = np.diff(f_edges) / meta.t_m

    sig = np.sqrt(2.0 * meta.kappa_c * meta.eta) * np.sqrt(nbar)
    noise = rng.normal(0.0, np.sqrt(meta.t_m), size=(n_win, 2))
    samples = np.empty((n_win, 2))
    samples[:, 0] = sig * s_mean * meta.t_m + noise[:, 0]
    samples[:, 1] = noise[:, 1]
    samples *= np.sqrt(meta.gain)
    out_meta = RecordMeta(meta.gain, meta.t_m, meta.eta, meta.kappa_c, seed=seed,
                          extra=dict(meta.extra, generator="telegraph",
                                     nbar=nbar, t_bf=t_bf, s0=s0))
    return IQSeries(samples, out_meta)


def iq_power(series: IQSeries) -> float:
    """Statistical mean of I^2 + Q^2 over the record."""
    if len(series.samples) < 100:
        raise ValueError("need at least 100 samples for a power estimate")
    return float(np.mean(series.i ** 2 + series.q ** 2))


def iq_power_stderr(series: IQSeries) -> float:
    v = series.i ** 2 + series.q ** 2
    return float(np.std(v, ddof=1) / np.sqrt(len(v)))


def vacuum_offset(meta: RecordMeta) -> float:
    """Expected vacuum power 2 G T_m (the calibrate-out offset)."""
    return 2.0 * meta.gain * meta.t_m


def radiated_power(series: IQSeries, vacuum_power: float | None = None) -> float:
    """mean(I^2+Q^2) minus the vacuum offset, i.e. 2 G kappa_c eta T_m^2 nbar."""
    off = vacuum_offset(series.meta) if vacuum_power is None else vacuum_power
    return iq_power(series) - off


def photon_from_trace(series: IQSeries, gain: float, kappa_c: float, eta: float):
    """Photon number from record statistics at arbitrary integration time.

    nbar = (mean(I^2+Q^2) - 2 G T_m) / (2 G kappa_c eta T_m^2).  Returns
    (nbar, clipped) where clipped flags a negative numerator (reported as 0).
    """
    t_m = series.meta.t_m
    num = iq_power(series) - 2.0 * gain * t_m
    den = 2.0 * gain * kappa_c * eta * t_m ** 2
    if num < 0:
        return 0.0, True
    return num / den, False


def efficiency_from_coherent(series: IQSeries, nbar: float, kappa_c: float,
                             t_m: float | None = None) -> float:
    """Invert (mean I / sigma I)^2 = 2 eta kappa_c T_m nbar for eta.

    The series must come from a fixed coherent state with the signal on the
    I quadrature.  Gain cancels in the ratio.
    """
    if t_m is None:
        t_m = series.meta.t_m
    ibar = float(np.mean(series.i))
    sig = float(np.std(series.i, ddof=1))
    if sig == 0:
        raise ValueError("sigma(I) = 0; cannot invert")
    return (ibar / sig) ** 2 / (2.0 * nbar * kappa_c * t_m)
