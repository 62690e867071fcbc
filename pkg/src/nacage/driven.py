"""Coherent driven-dissipative response of the pumped chain.

In the frame rotating at the pump frequency, the coherent amplitudes of a
linear cavity array with uniform decay obey

    i d(alpha)/dt = [B(t) - (Omega_P + i kappa/2) 1] alpha + P,

with B(t) the (possibly modulated) chain Hamiltonian, Omega_P the pump
frequency, kappa the linewidth, and P the constant pump vector — everything
in units of J, times in 1/J.  The steady state of the static problem is
alpha = -[B - (Omega_P + i kappa/2) 1]^{-1} P.

Integration uses an adaptive Dormand-Prince 4(5) pair over the sparse
frequency-resolved term arrays of :class:`nacage.cqed.ModulatedModel`; the
kernel is JIT-compiled when numba is available, otherwise the same system is
handed to scipy's DOP853.  Doubled (pair-term) models evolve (alpha,
conj alpha) jointly; the conjugate half is used as an internal consistency
check and only the physical half is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cqed import ModulatedModel
from .dynamics import cage_region_mask
from .lattice import LatticeSpec, ModeIndex

try:  # pragma: no cover - exercised indirectly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

__all__ = [
    "DrivenError",
    "DrivenResult",
    "SspnReport",
    "DEFAULT_KAPPA_J",
    "have_compiled_kernel",
    "make_pump",
    "steady_state",
    "integrate_driven",
    "fidelity_series",
    "sspn_report",
]

DEFAULT_KAPPA_J = 0.1
_STEADY_RESIDUAL_TOL = 1e-10


class DrivenError(ValueError):
    """Raised for invalid drive setups or failed numerical criteria."""


def have_compiled_kernel() -> bool:
    """Whether the JIT-compiled integrator path is available."""
    return _HAVE_NUMBA


def make_pump(spec: LatticeSpec, index: ModeIndex, amplitude: float = 1.0) -> np.ndarray:
    """Single-mode pump vector with a real positive amplitude (units of J)."""
    if amplitude <= 0:
        raise DrivenError(f"pump amplitude must be positive, got {amplitude}")
    pump = np.zeros(spec.dim, dtype=np.complex128)
    pump[index.flatten(spec)] = amplitude
    return pump


def steady_state(
    h_static: np.ndarray, pump: np.ndarray, omega_pump: float, kappa: float
) -> np.ndarray:
    """Stationary coherent amplitudes of the statically coupled array."""
    h_static = np.asarray(h_static, dtype=np.complex128)
    pump = np.asarray(pump, dtype=np.complex128)
    if h_static.ndim != 2 or h_static.shape[0] != h_static.shape[1]:
        raise DrivenError(f"h_static must be square, got shape {h_static.shape}")
    if pump.shape != (h_static.shape[0],):
        raise DrivenError("pump vector length does not match the array size")
    if kappa <= 0:
        raise DrivenError(f"kappa must be positive, got {kappa}")
    shifted = h_static - (omega_pump + 0.5j * kappa) * np.eye(h_static.shape[0])
    alpha = np.linalg.solve(shifted, -pump)
    residual = np.linalg.norm(shifted @ alpha + pump)
    scale = np.linalg.norm(pump)
    if residual > _STEADY_RESIDUAL_TOL * scale:
        raise DrivenError(
            f"steady-state solve residual {residual:.2e} exceeds "
            f"{_STEADY_RESIDUAL_TOL:.0e} * |P| = {_STEADY_RESIDUAL_TOL * scale:.2e}"
        )
    return alpha


@dataclass(frozen=True)
class DrivenResult:
    """Driven amplitudes over a time grid (physical half only for doubled
    models).  ``conjugate_drift`` reports max |conj(alpha) - mirror half|
    for doubled models, else 0."""

    times: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)
    omega_pump: float = 0.0
    kappa: float = DEFAULT_KAPPA_J
    steps_taken: int = 0
    steps_rejected: int = 0
    used_compiled_kernel: bool = False
    conjugate_drift: float = 0.0

    def final(self) -> np.ndarray:
        return self.amplitudes[-1]


# Dormand-Prince 4(5) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = (3 / 40, 9 / 40)
_DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B5 = _DP_A[6].copy()
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4

_kernel_cache = None


def _build_kernel():
    """Compile the adaptive stepper over sparse frequency-resolved terms."""
    import numba as nb

    a = _DP_A
    c = _DP_C
    e = _DP_E

    @nb.njit(cache=True, fastmath=False)
    def kernel(rows, cols, vals, freq_idx, freqs, diag, pump, t_eval, rtol, atol):
        dim = diag.shape[0]
        n_terms = rows.shape[0]
        n_freqs = freqs.shape[0]
        n_eval = t_eval.shape[0]
        out = np.zeros((n_eval, dim), dtype=np.complex128)
        y = np.zeros(dim, dtype=np.complex128)
        k = np.zeros((7, dim), dtype=np.complex128)
        ytmp = np.zeros(dim, dtype=np.complex128)
        phases = np.zeros(n_freqs, dtype=np.complex128)

        def rhs(t, state, deriv):
            for f in range(n_freqs):
                phases[f] = np.exp(1j * freqs[f] * t)
            for i in range(dim):
                deriv[i] = diag[i] * state[i] + pump[i]
            for m in range(n_terms):
                deriv[rows[m]] += vals[m] * phases[freq_idx[m]] * state[cols[m]]
            for i in range(dim):
                deriv[i] = -1j * deriv[i]

        t = t_eval[0]
        for i in range(dim):
            y[i] = 0.0
        out_idx = 0
        if abs(t - 0.0) < 1e-300:
            out_idx = 1  # alpha(0) = 0 recorded
        dt = 1e-4
        n_steps = 0
        n_rejected = 0
        rhs(t, y, k[0])
        while out_idx < n_eval:
            target = t_eval[out_idx]
            hit = False
            if t + dt >= target:
                dt_step = target - t
                hit = True
            else:
                dt_step = dt
            # stages
            for s in range(1, 7):
                for i in range(dim):
                    acc = 0.0 + 0.0j
                    for q in range(s):
                        acc += a[s, q] * k[q, i]
                    ytmp[i] = y[i] + dt_step * acc
                rhs(t + c[s] * dt_step, ytmp, k[s])
            # ytmp currently holds the 5th-order solution (stage 6 uses b5 row)
            err_norm = 0.0
            for i in range(dim):
                err_i = 0.0 + 0.0j
                for q in range(7):
                    err_i += e[q] * k[q, i]
                err_i *= dt_step
                scale = atol + rtol * max(abs(y[i]), abs(ytmp[i]))
                ratio = abs(err_i) / scale
                err_norm += ratio * ratio
            err_norm = np.sqrt(err_norm / dim)
            if err_norm <= 1.0:
                t = t + dt_step
                for i in range(dim):
                    y[i] = ytmp[i]
                for i in range(dim):
                    k[0, i] = k[6, i]  # first-same-as-last
                n_steps += 1
                if hit:
                    for i in range(dim):
                        out[out_idx, i] = y[i]
                    out_idx += 1
            else:
                n_rejected += 1
            factor = 0.9 * err_norm ** (-0.2) if err_norm > 0 else 5.0
            if factor < 0.2:
                factor = 0.2
            elif factor > 5.0:
                factor = 5.0
            new_dt = dt_step * factor
            if not hit or new_dt < dt:
                dt = new_dt
            if dt < 1e-14:
                dt = 1e-14
        return out, n_steps, n_rejected

    return kernel


def _get_kernel():
    global _kernel_cache
    if _kernel_cache is None:
        _kernel_cache = _build_kernel()
    return _kernel_cache


def _integrate_scipy(rows, cols, vals, freq_idx, freqs, diag, pump, t_eval, rtol, atol):
    from scipy.integrate import solve_ivp

    term_freqs = freqs[freq_idx]
    dim = diag.shape[0]

    def rhs(t, y):
        deriv = diag * y + pump
        weights = vals * np.exp(1j * term_freqs * t) * y[cols]
        np.add.at(deriv, rows, weights)
        return -1j * deriv

    solution = solve_ivp(
        rhs,
        (t_eval[0], t_eval[-1]),
        np.zeros(dim, dtype=np.complex128),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:  # pragma: no cover
        raise DrivenError(f"integration failed: {solution.message}")
    return solution.y.T, int(solution.nfev // 12), 0


def integrate_driven(
    model,
    pump: np.ndarray,
    omega_pump: float,
    kappa: float,
    t_eval,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    prefer_compiled: bool = True,
) -> DrivenResult:
    """Integrate the driven array from vacuum over ``t_eval`` (units 1/J).

    ``model`` is a :class:`~nacage.cqed.ModulatedModel` of any tier, or a
    plain Hermitian matrix (treated as static).  The grid must be ascending
    and start at 0 (where alpha = 0 exactly).
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or t_eval.size < 2:
        raise DrivenError("t_eval must contain at least two time points")
    if t_eval[0] != 0.0 or np.any(np.diff(t_eval) <= 0):
        raise DrivenError("t_eval must be strictly ascending and start at 0")
    if kappa <= 0:
        raise DrivenError(f"kappa must be positive, got {kappa}")

    if isinstance(model, ModulatedModel):
        base_dim = model.spec.dim
        doubled = model.doubled
        rows, cols = model.rows, model.cols
        vals = model.vals
        freq_idx, freqs = model.freq_index, model.frequencies
    else:
        h = np.asarray(model, dtype=np.complex128)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DrivenError("static model must be a square matrix")
        base_dim = h.shape[0]
        doubled = False
        r, c = np.nonzero(h)
        rows = r.astype(np.int64)
        cols = c.astype(np.int64)
        vals = h[r, c]
        freq_idx = np.zeros(rows.size, dtype=np.int64)
        freqs = np.zeros(1, dtype=float)

    pump = np.asarray(pump, dtype=np.complex128)
    if pump.shape != (base_dim,):
        raise DrivenError(
            f"pump has shape {pump.shape}, expected ({base_dim},)"
        )
    shift = omega_pump + 0.5j * kappa
    if doubled:
        diag = np.concatenate(
            [np.full(base_dim, -shift), np.full(base_dim, np.conj(shift))]
        )
        full_pump = np.concatenate([pump, -np.conj(pump)])
    else:
        diag = np.full(base_dim, -shift, dtype=np.complex128)
        full_pump = pump

    use_compiled = prefer_compiled and _HAVE_NUMBA
    integrator = _get_kernel() if use_compiled else _integrate_scipy
    trajectory, n_steps, n_rejected = integrator(
        np.ascontiguousarray(rows, dtype=np.int64),
        np.ascontiguousarray(cols, dtype=np.int64),
        np.ascontiguousarray(vals, dtype=np.complex128),
        np.ascontiguousarray(freq_idx, dtype=np.int64),
        np.ascontiguousarray(freqs, dtype=float),
        diag,
        full_pump,
        t_eval,
        rtol,
        atol,
    )
    drift = 0.0
    if doubled:
        upper = trajectory[:, :base_dim]
        lower = trajectory[:, base_dim:]
        drift = float(np.max(np.abs(lower - np.conj(upper))))
        trajectory = upper
    return DrivenResult(
        times=t_eval,
        amplitudes=trajectory,
        omega_pump=float(omega_pump),
        kappa=float(kappa),
        steps_taken=int(n_steps),
        steps_rejected=int(n_rejected),
        used_compiled_kernel=bool(use_compiled),
        conjugate_drift=drift,
    )


def fidelity_series(result: DrivenResult, target: np.ndarray) -> np.ndarray:
    """Normalized overlap |<target|alpha(t)>| / (|target| |alpha(t)|) per
    time point; 0 wherever the response is numerically empty."""
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != (result.amplitudes.shape[1],):
        raise DrivenError("target length does not match the amplitudes")
    t_norm = np.linalg.norm(target)
    if t_norm < 1e-12:
        raise DrivenError("target state has zero norm")
    norms = np.linalg.norm(result.amplitudes, axis=1)
    overlaps = np.abs(result.amplitudes @ target.conj())
    out = np.zeros_like(norms)
    good = norms >= 1e-12
    out[good] = overlaps[good] / (norms[good] * t_norm)
    return out


@dataclass(frozen=True)
class SspnReport:
    """Steady-state photon-number split between a cage block and the rest."""

    left_edge: int
    right_edge: int
    total: float
    in_cage: float
    fraction: float
    a_cells: tuple
    b_cells: tuple
    c_cells: tuple

    def to_dict(self) -> dict:
        return {
            "left_edge": self.left_edge,
            "right_edge": self.right_edge,
            "total": self.total,
            "in_cage": self.in_cage,
            "fraction": self.fraction,
            "a_cells": list(self.a_cells),
            "b_cells": list(self.b_cells),
            "c_cells": list(self.c_cells),
        }


def sspn_report(
    amplitudes: np.ndarray, spec: LatticeSpec, left_edge: int, right_edge: int
) -> SspnReport:
    """Photon numbers |alpha|^2 resolved by cell/site, and the fraction
    inside the cage block (spinal cells [left, right] plus their apicals)."""
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    if amplitudes.shape != (spec.dim,):
        raise DrivenError(
            f"amplitudes have shape {amplitudes.shape}, expected ({spec.dim},)"
        )
    photons = np.abs(amplitudes) ** 2
    mask = cage_region_mask(spec, left_edge, right_edge)
    total = float(photons.sum())
    in_cage = float(photons[mask].sum())
    per = photons.reshape(spec.n_cells, 3, spec.n_components).sum(axis=2)
    return SspnReport(
        left_edge=int(left_edge),
        right_edge=int(right_edge),
        total=total,
        in_cage=in_cage,
        fraction=in_cage / total if total > 0 else 0.0,
        a_cells=tuple(float(x) for x in per[:, 0]),
        b_cells=tuple(float(x) for x in per[:, 1]),
        c_cells=tuple(float(x) for x in per[:, 2]),
    )
