"""FastAPI application exposing the analysis commands as POST endpoints.

Error contract: invalid or inconsistent configuration maps to HTTP 400 with
``{"detail": {"kind": "config", ...}}``; computations that start but cannot
produce a trustworthy result (unconverged solves, cage measurements touching
an open boundary, residual checks) map to HTTP 422 with ``kind="numerical"``.
Unexpected failures map to HTTP 500 with ``kind="internal"``.
"""

from __future__ import annotations

import time
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..cqed import CqedError, build_time_dependent, crosstalk_audit, make_plan, synthesize_tones
from ..driven import (
    DrivenError,
    fidelity_series,
    integrate_driven,
    make_pump,
    sspn_report,
    steady_state,
)
from ..dynamics import (
    DynamicsError,
    basis_state,
    cage_extent,
    evolve,
    predicted_cage,
    reconcile,
)
from ..gauge import GaugeError, interference_matrix
from ..lattice import (
    LatticeError,
    LatticeSpec,
    ModeIndex,
    band_structure,
    build_real_space,
    extract_compact_states,
    flatness_metric,
    symmetry_checks,
)
from . import schemas

_NUMERICAL_ERRORS = (DynamicsError, DrivenError, np.linalg.LinAlgError, FloatingPointError)
_CONFIG_ERRORS = (GaugeError, LatticeError, CqedError, ValueError, TypeError, KeyError)

_SITES = ("A", "B", "C")


class ServiceFailure(Exception):
    """Carries the HTTP status and structured error detail for a failed call."""

    def __init__(self, status_code: int, kind: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.kind = kind
        self.message = message


def _run(command: str, request, worker) -> dict:
    """Execute ``worker`` and attach a manifest over the resolved request."""
    started = time.perf_counter()
    resolved = request.model_dump(mode="json")
    try:
        payload = worker(request)
    except _NUMERICAL_ERRORS as exc:
        raise ServiceFailure(422, "numerical", str(exc)) from exc
    except _CONFIG_ERRORS as exc:
        raise ServiceFailure(400, "config", str(exc)) from exc
    except ServiceFailure:
        raise
    except Exception as exc:  # pragma: no cover - defensive catch-all
        raise ServiceFailure(500, "internal", f"{type(exc).__name__}: {exc}") from exc
    payload["manifest"] = schemas.make_manifest(command, resolved, time.perf_counter() - started)
    return payload


# ---------------------------------------------------------------------------
# Workers
# ---------------------------------------------------------------------------


def _default_chain(n_components: int, n_cells, start_cell) -> tuple[int, int]:
    """Resolve chain length and release cell, sized so cages never touch edges."""
    length = n_cells if n_cells is not None else 2 * n_components + 7
    start = start_cell if start_cell is not None else length // 2
    return length, start


def _bands_worker(req: schemas.BandsRequest) -> dict:
    links = req.links.build()
    bands = band_structure(links, req.n_k, req.orientation)
    flat = flatness_metric(bands)
    sym = symmetry_checks(links, orientation=req.orientation)
    return {
        "n_components": links.n_components,
        "k_values": bands.k_values.tolist(),
        "energies": bands.energies.tolist(),
        "flatness": flat.tolist(),
        "symmetries": {name: bool(flag) for name, flag in sym.items()},
    }


def _state_to_dict(state) -> dict:
    entries = [
        {
            "cell_offset": int(cell),
            "site": site,
            "mode": int(mode),
            "re": float(value.real),
            "im": float(value.imag),
        }
        for (cell, site, mode), value in sorted(state.amplitudes.items())
    ]
    return {
        "energy": float(state.energy),
        "window_cells": int(state.window_cells),
        "support_cells": int(state.support_cells),
        "amplitudes": entries,
    }


def _cles_worker(req: schemas.ClesRequest) -> dict:
    links = req.links.build()
    states = extract_compact_states(links, req.energy, req.window_cells, req.orientation)
    return {
        "energy": req.energy,
        "count": len(states),
        "states": [_state_to_dict(state) for state in states],
    }


def _cage_worker(req: schemas.CageRequest) -> dict:
    links = req.links.build()
    n = links.n_components
    length, start = _default_chain(n, req.n_cells, req.start_cell)
    spec = LatticeSpec(n, length)
    model = build_real_space(spec, links, req.orientation)
    initial = basis_state(spec, ModeIndex(start, "A", req.mode))
    times = np.linspace(0.0, req.t_max, req.n_times)
    result = evolve(model, initial, times)
    report = cage_extent(result, start, req.threshold)
    payload = report.to_dict()
    payload.update(
        n_cells=length,
        mode=req.mode,
        orientation=req.orientation,
        norm_drift=float(result.norm_drift()),
    )
    interference = interference_matrix(links)
    if interference.nilpotent_power is None:
        payload["predicted"] = None
    else:
        payload["predicted"] = asdict(
            predicted_cage(n, interference.nilpotent_power, req.mode, start)
        )
    return payload


def _table_worker(req: schemas.TableCheckRequest) -> dict:
    links = req.links.build()
    report = reconcile(links, threshold=req.threshold, t_max=req.t_max, n_times=req.n_times)
    return report.to_dict()


def _resolve_target(links, spec, omega_pump: float, pump_cell: int, pump_mode: int, anchor, orientation: str):
    """Embed the compact eigenstate at the pump frequency next to the pump.

    The default anchor places the state's spinal component ``pump_mode`` on
    the pumped cell, which is where a resonant pump feeds it.
    """
    states = extract_compact_states(links, omega_pump, 3, orientation)
    anchor_cell = anchor if anchor is not None else pump_cell - pump_mode
    if anchor_cell < 0:
        raise LatticeError("target anchor would sit before the first cell; set target_anchor")
    state = states[0]
    return state, anchor_cell, state.embed(spec, anchor_cell)


def _steady_worker(req: schemas.SteadyRequest) -> dict:
    links = req.links.build()
    spec = LatticeSpec(links.n_components, req.n_cells)
    model = build_real_space(spec, links, req.orientation)
    pump = make_pump(spec, ModeIndex(req.pump_cell, req.pump_site, req.pump_mode), req.pump_amplitude)
    alpha = steady_state(model.h_real, pump, req.omega_pump, req.kappa)

    amplitudes = []
    for cell in range(spec.n_cells):
        for site in _SITES:
            for mode in range(1, spec.n_components + 1):
                value = alpha[ModeIndex(cell, site, mode).flatten(spec)]
                amplitudes.append(
                    {
                        "cell": cell,
                        "site": site,
                        "mode": mode,
                        "re": float(value.real),
                        "im": float(value.imag),
                        "photons": float(abs(value) ** 2),
                    }
                )

    payload = {
        "n_cells": req.n_cells,
        "omega_pump": req.omega_pump,
        "kappa": req.kappa,
        "pump_cell": req.pump_cell,
        "pump_site": req.pump_site,
        "pump_mode": req.pump_mode,
        "photon_total": float(np.sum(np.abs(alpha) ** 2)),
        "amplitudes": amplitudes,
        "cles_overlap": None,
        "target_anchor": None,
        "sspn": None,
    }

    region_left, region_right = req.region_left, req.region_right
    if req.include_overlap:
        state, anchor_cell, target = _resolve_target(
            links, spec, req.omega_pump, req.pump_cell, req.pump_mode, req.target_anchor, req.orientation
        )
        norm = float(np.linalg.norm(target) * np.linalg.norm(alpha))
        payload["cles_overlap"] = float(abs(np.vdot(target, alpha)) / norm) if norm > 0 else 0.0
        payload["target_anchor"] = anchor_cell
        if region_left is None or region_right is None:
            offsets = [cell for (cell, site, _mode) in state.amplitudes if site == "A"]
            if not offsets:
                offsets = [cell for (cell, _site, _mode) in state.amplitudes]
            region_left = anchor_cell + min(offsets)
            region_right = anchor_cell + max(offsets)

    if region_left is not None and region_right is not None:
        payload["sspn"] = sspn_report(alpha, spec, region_left, region_right).to_dict()
    return payload


def _amplitude_overlap_series(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Normalized |<a|b>| per sample time; 0 where either field is empty."""
    inner = np.abs(np.sum(np.conj(first) * second, axis=1))
    norms = np.linalg.norm(first, axis=1) * np.linalg.norm(second, axis=1)
    out = np.zeros(len(inner))
    filled = norms > 1e-24
    out[filled] = inner[filled] / norms[filled]
    return out


def _fidelity_worker(req: schemas.FidelityRequest) -> dict:
    links = req.links.build()
    spec = LatticeSpec(links.n_components, req.n_cells)
    pump = make_pump(spec, ModeIndex(req.pump_cell, req.pump_site, req.pump_mode), req.pump_amplitude)
    t_eval = np.linspace(0.0, req.t_max, req.n_times)
    _state, anchor_cell, target = _resolve_target(
        links, spec, req.omega_pump, req.pump_cell, req.pump_mode, req.target_anchor, req.orientation
    )

    static_model = build_real_space(spec, links, req.orientation).h_real
    static_result = integrate_driven(
        static_model, pump, req.omega_pump, req.kappa, t_eval, rtol=req.rtol, atol=req.atol
    )
    fidelity_static = fidelity_series(static_result, target)
    diagnostics = static_result

    payload = {
        "tier": req.tier,
        "n_cells": req.n_cells,
        "omega_pump": req.omega_pump,
        "kappa": req.kappa,
        "target_anchor": anchor_cell,
        "times": t_eval.tolist(),
        "fidelity_static": fidelity_static.tolist(),
        "final_fidelity_static": float(fidelity_static[-1]),
        "fidelity_modulated": None,
        "final_fidelity_modulated": None,
        "overlap": None,
        "min_overlap": None,
    }

    if req.tier >= 1:
        plan = make_plan(req.omega0_ghz, req.delta_ghz, req.allow_out_of_range)
        modulated_model = build_time_dependent(spec, links, req.tier, plan, req.j_mhz, req.orientation)
        modulated_result = integrate_driven(
            modulated_model, pump, req.omega_pump, req.kappa, t_eval, rtol=req.rtol, atol=req.atol
        )
        fidelity_modulated = fidelity_series(modulated_result, target)
        overlap = _amplitude_overlap_series(static_result.amplitudes, modulated_result.amplitudes)
        filled = overlap > 0.0
        payload["fidelity_modulated"] = fidelity_modulated.tolist()
        payload["final_fidelity_modulated"] = float(fidelity_modulated[-1])
        payload["overlap"] = overlap.tolist()
        payload["min_overlap"] = float(overlap[filled].min()) if filled.any() else 0.0
        diagnostics = modulated_result

    payload.update(
        steps_taken=int(diagnostics.steps_taken),
        steps_rejected=int(diagnostics.steps_rejected),
        used_compiled_kernel=bool(diagnostics.used_compiled_kernel),
        conjugate_drift=float(diagnostics.conjugate_drift),
    )
    return payload


def _audit_worker(req: schemas.AuditRequest) -> dict:
    links = req.links.build()
    plan = make_plan(req.omega0_ghz, req.delta_ghz, req.allow_out_of_range)
    payload = crosstalk_audit(links, plan, req.j_mhz).to_dict()
    payload["tones"] = [asdict(tone) for tone in synthesize_tones(plan, links, req.j_mhz)]
    return payload


def _evolve_worker(req: schemas.EvolveRequest) -> dict:
    links = req.links.build()
    n = links.n_components
    length, start = _default_chain(n, req.n_cells, req.start_cell)
    spec = LatticeSpec(n, length, boundary=req.boundary)
    model = build_real_space(spec, links, req.orientation)
    initial = basis_state(spec, ModeIndex(start, req.site, req.mode))
    times = np.linspace(0.0, req.t_max, req.n_times)
    result = evolve(model, initial, times)
    return {
        "n_cells": length,
        "boundary": req.boundary,
        "orientation": req.orientation,
        "start_cell": start,
        "site": req.site,
        "mode": req.mode,
        "times": times.tolist(),
        "a_populations": result.site_populations("A").tolist(),
        "b_populations": result.site_populations("B").tolist(),
        "c_populations": result.site_populations("C").tolist(),
        "norm_drift": float(result.norm_drift()),
    }


# ---------------------------------------------------------------------------
# App factory
# ---------------------------------------------------------------------------


def create_app() -> FastAPI:
    app = FastAPI(
        title="nacage service",
        version=__version__,
        description="Flat-band lattice analysis: bands, compact states, caging, drives.",
    )

    @app.exception_handler(ServiceFailure)
    async def _failure_handler(_request, exc: ServiceFailure):
        return JSONResponse(
            status_code=exc.status_code,
            content={"detail": {"kind": exc.kind, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(_request, exc: RequestValidationError):
        issues = "; ".join(
            ".".join(str(part) for part in error["loc"] if part != "body") + f": {error['msg']}"
            for error in exc.errors()
        )
        return JSONResponse(
            status_code=400,
            content={"detail": {"kind": "config", "message": issues or "invalid request"}},
        )

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "schema_version": schemas.SCHEMA_VERSION,
        }

    @app.post("/v1/bands", response_model=schemas.BandsResponse)
    def bands(req: schemas.BandsRequest):
        return _run("bands", req, _bands_worker)

    @app.post("/v1/cles", response_model=schemas.ClesResponse)
    def cles(req: schemas.ClesRequest):
        return _run("cles", req, _cles_worker)

    @app.post("/v1/cage", response_model=schemas.CageResponse)
    def cage(req: schemas.CageRequest):
        return _run("cage", req, _cage_worker)

    @app.post("/v1/table-check", response_model=schemas.TableCheckResponse)
    def table_check(req: schemas.TableCheckRequest):
        return _run("table-check", req, _table_worker)

    @app.post("/v1/steady", response_model=schemas.SteadyResponse)
    def steady(req: schemas.SteadyRequest):
        return _run("steady", req, _steady_worker)

    @app.post("/v1/fidelity", response_model=schemas.FidelityResponse)
    def fidelity(req: schemas.FidelityRequest):
        return _run("fidelity", req, _fidelity_worker)

    @app.post("/v1/audit", response_model=schemas.AuditResponse)
    def audit(req: schemas.AuditRequest):
        return _run("audit", req, _audit_worker)

    @app.post("/v1/evolve", response_model=schemas.EvolveResponse)
    def evolve_route(req: schemas.EvolveRequest):
        return _run("evolve", req, _evolve_worker)

    return app
