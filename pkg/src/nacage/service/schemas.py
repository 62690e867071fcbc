"""Request and response models for the analysis service.

Every request model carries the full set of tunable knobs with explicit
defaults, so a resolved request (``model_dump``) is a complete, reproducible
description of the computation.  The response manifest echoes that resolved
configuration together with a digest over it, which changes exactly when the
effective input changes.
"""

from __future__ import annotations

import hashlib
import json
import platform
from datetime import datetime, timezone
from typing import Literal, Optional

import numpy as np
import scipy
from pydantic import BaseModel, ConfigDict, Field

from .. import __version__
from ..gauge import (
    GaugeError,
    LinkSet,
    links_from_json,
    shift_family,
    stride_family,
    u2_family,
)

SCHEMA_VERSION = "1"


class StrictModel(BaseModel):
    """Base model that rejects unknown fields (typos become config errors)."""

    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# Shared request fragments
# ---------------------------------------------------------------------------


class LinksConfig(StrictModel):
    """Declarative description of the four link unitaries.

    ``family`` selects a built-in constructor; ``custom`` takes explicit
    matrices in the row-major ``{"re": ..., "im": ...}`` wire format produced
    by :func:`nacage.gauge.links_to_json`.
    """

    family: Literal["shift", "stride", "u2", "custom"] = "u2"
    n: Optional[int] = Field(default=None, ge=1, description="component count for shift/stride")
    power: Optional[int] = Field(default=None, ge=2, description="target nilpotency index for stride")
    gamma: float = Field(default=1.0, description="interference weight for the u2 family")
    theta: float = Field(default=0.0, description="upper-path phase for the u2 family")
    psi: float = Field(default=0.0, description="lower-path phase for the u2 family")
    matrices: Optional[dict] = Field(default=None, description="explicit link document for family=custom")

    def build(self) -> LinkSet:
        if self.family == "shift":
            if self.n is None:
                raise GaugeError("links.family='shift' requires links.n")
            return shift_family(self.n)
        if self.family == "stride":
            if self.n is None or self.power is None:
                raise GaugeError("links.family='stride' requires links.n and links.power")
            return stride_family(self.n, self.power)
        if self.family == "u2":
            return u2_family(self.gamma, self.theta, self.psi)
        if self.matrices is None:
            raise GaugeError("links.family='custom' requires links.matrices")
        return links_from_json(self.matrices)


Orientation = Literal["standard", "reversed"]
SiteLabel = Literal["A", "B", "C"]


# ---------------------------------------------------------------------------
# Request models (one per command)
# ---------------------------------------------------------------------------


class BandsRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    n_k: int = Field(default=64, ge=1, le=4096, description="momentum samples across the zone")
    orientation: Orientation = "standard"


class ClesRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    energy: float = Field(description="flat-band energy to extract compact states at")
    window_cells: int = Field(default=3, ge=1, le=3)
    orientation: Orientation = "standard"


class CageRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    mode: int = Field(default=1, ge=1, description="initially occupied component on the spinal site")
    n_cells: Optional[int] = Field(default=None, ge=3, description="chain length; default 2N+7")
    start_cell: Optional[int] = Field(default=None, ge=0, description="release cell; default centre")
    orientation: Orientation = "standard"
    threshold: float = Field(default=1e-6, gt=0.0, lt=1.0)
    t_max: float = Field(default=30.0, gt=0.0)
    n_times: int = Field(default=121, ge=2)


class TableCheckRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    threshold: float = Field(default=1e-6, gt=0.0, lt=1.0)
    t_max: float = Field(default=30.0, gt=0.0)
    n_times: int = Field(default=121, ge=2)


class SteadyRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    n_cells: int = Field(default=11, ge=3)
    orientation: Orientation = "standard"
    pump_cell: int = Field(default=5, ge=0)
    pump_site: SiteLabel = "A"
    pump_mode: int = Field(default=1, ge=1)
    pump_amplitude: float = Field(default=1.0, gt=0.0)
    omega_pump: float = Field(description="pump detuning from the lattice carrier, in units of J")
    kappa: float = Field(default=0.1, gt=0.0, description="uniform photon decay rate in units of J")
    include_overlap: bool = Field(
        default=True,
        description="also report overlap with the compact eigenstate at the pump frequency",
    )
    target_anchor: Optional[int] = Field(
        default=None,
        ge=0,
        description="anchor cell for the comparison state; default pump_cell - pump_mode",
    )
    region_left: Optional[int] = Field(default=None, ge=0)
    region_right: Optional[int] = Field(default=None, ge=0)


class FidelityRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    tier: int = Field(default=0, ge=0, le=2, description="drive model: 0 static, 1 beam-splitter tones, 2 with pair terms")
    n_cells: int = Field(default=11, ge=3)
    orientation: Orientation = "standard"
    pump_cell: int = Field(default=5, ge=0)
    pump_site: SiteLabel = "A"
    pump_mode: int = Field(default=1, ge=1)
    pump_amplitude: float = Field(default=1.0, gt=0.0)
    omega_pump: float = Field(description="pump detuning from the lattice carrier, in units of J")
    kappa: float = Field(default=0.1, gt=0.0)
    t_max: float = Field(default=200.0, gt=0.0)
    n_times: int = Field(default=81, ge=2)
    target_anchor: Optional[int] = Field(default=None, ge=0)
    rtol: float = Field(default=1e-9, gt=0.0)
    atol: float = Field(default=1e-12, gt=0.0)
    omega0_ghz: float = Field(default=6.0, gt=0.0)
    delta_ghz: float = Field(default=1.0, gt=0.0)
    j_mhz: float = Field(default=10.0, gt=0.0)
    allow_out_of_range: bool = False


class AuditRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    omega0_ghz: float = Field(default=6.0, gt=0.0)
    delta_ghz: float = Field(default=1.0, gt=0.0)
    j_mhz: float = Field(default=10.0, gt=0.0)
    allow_out_of_range: bool = False


class EvolveRequest(StrictModel):
    links: LinksConfig = LinksConfig()
    n_cells: Optional[int] = Field(default=None, ge=3)
    boundary: Literal["open", "periodic"] = "open"
    orientation: Orientation = "standard"
    start_cell: Optional[int] = Field(default=None, ge=0)
    site: SiteLabel = "A"
    mode: int = Field(default=1, ge=1)
    t_max: float = Field(default=30.0, gt=0.0)
    n_times: int = Field(default=121, ge=2)


# ---------------------------------------------------------------------------
# Response models
# ---------------------------------------------------------------------------


class Manifest(StrictModel):
    """Provenance record attached to every response.

    ``config_digest`` is a SHA-256 over the command name and the canonically
    serialized resolved configuration, so it is stable across repeated runs of
    the same input and differs whenever any effective input differs.  Wall
    time and timestamp are informational and excluded from the digest.
    """

    schema_version: str
    command: str
    config_digest: str
    resolved_config: dict
    package_version: str
    numpy_version: str
    scipy_version: str
    python_version: str
    created_utc: str
    wall_time_s: float


class ErrorDetail(StrictModel):
    kind: Literal["config", "numerical", "internal"]
    message: str


class BandsResponse(StrictModel):
    manifest: Manifest
    n_components: int
    k_values: list[float]
    energies: list[list[float]]
    flatness: list[float]
    symmetries: dict[str, bool]


class AmplitudeCell(StrictModel):
    cell_offset: int
    site: SiteLabel
    mode: int
    re: float
    im: float


class CompactStateOut(StrictModel):
    energy: float
    window_cells: int
    support_cells: int
    amplitudes: list[AmplitudeCell]


class ClesResponse(StrictModel):
    manifest: Manifest
    energy: float
    count: int
    states: list[CompactStateOut]


class CageEdges(StrictModel):
    size: int
    right_edge: int
    left_edge: int


class CageResponse(StrictModel):
    manifest: Manifest
    n_cells: int
    mode: int
    orientation: Orientation
    start_cell: int
    threshold: float
    left_edge: int
    right_edge: int
    size: int
    leakage: float
    peak_population: float
    norm_drift: float
    predicted: Optional[CageEdges]


class ReconcileRowOut(StrictModel):
    mode: int
    predicted: CageEdges
    measured_reversed: CageEdges
    measured_standard: CageEdges
    leakage_reversed: float
    leakage_standard: float
    match_strict: bool
    match_reflected: bool


class TableCheckResponse(StrictModel):
    manifest: Manifest
    n_components: int
    nilpotent_power: int
    n_cells: int
    start_cell: int
    threshold: float
    all_strict: bool
    all_reflected: bool
    rows: list[ReconcileRowOut]


class SteadyAmplitude(StrictModel):
    cell: int
    site: SiteLabel
    mode: int
    re: float
    im: float
    photons: float


class SspnOut(StrictModel):
    left_edge: int
    right_edge: int
    total: float
    in_cage: float
    fraction: float
    a_cells: list[float]
    b_cells: list[float]
    c_cells: list[float]


class SteadyResponse(StrictModel):
    manifest: Manifest
    n_cells: int
    omega_pump: float
    kappa: float
    pump_cell: int
    pump_site: SiteLabel
    pump_mode: int
    photon_total: float
    amplitudes: list[SteadyAmplitude]
    cles_overlap: Optional[float]
    target_anchor: Optional[int]
    sspn: Optional[SspnOut]


class FidelityResponse(StrictModel):
    """Time-resolved projection onto the target compact state.

    ``fidelity_static`` always tracks the static effective model.  For
    ``tier >= 1`` the modulated model is integrated as well and compared:
    ``overlap`` is the normalized amplitude overlap between the two solutions
    at each sample time (0 where either field is still empty), and
    ``min_overlap`` is its minimum over the samples where both are non-empty.
    Integrator diagnostics refer to the most expensive run (the modulated one
    when present).
    """

    manifest: Manifest
    tier: int
    n_cells: int
    omega_pump: float
    kappa: float
    target_anchor: int
    times: list[float]
    fidelity_static: list[float]
    final_fidelity_static: float
    fidelity_modulated: Optional[list[float]]
    final_fidelity_modulated: Optional[float]
    overlap: Optional[list[float]]
    min_overlap: Optional[float]
    steps_taken: int
    steps_rejected: int
    used_compiled_kernel: bool
    conjugate_drift: float


class ToneOut(StrictModel):
    link_name: str
    row_mode: int
    col_mode: int
    frequency_ghz: float
    amplitude_2pi_mhz: float
    phase_rad: float


class AuditResponse(StrictModel):
    manifest: Manifest
    plan: dict
    j_mhz: float
    min_bs_detuning_ghz: float
    min_pair_detuning_ghz: float
    counts: dict[str, int]
    stark_signed_mhz: dict[str, float]
    stark_abs_mhz: dict[str, float]
    stark_bound_mhz: dict[str, float]
    bound_ok: bool
    compensation_mhz: dict[str, float]
    tones: list[ToneOut]


class EvolveResponse(StrictModel):
    manifest: Manifest
    n_cells: int
    boundary: str
    orientation: Orientation
    start_cell: int
    site: SiteLabel
    mode: int
    times: list[float]
    a_populations: list[list[float]]
    b_populations: list[list[float]]
    c_populations: list[list[float]]
    norm_drift: float


# ---------------------------------------------------------------------------
# Manifest construction
# ---------------------------------------------------------------------------


def canonical_json(config: dict) -> str:
    """Deterministic serialization used for digesting resolved configs."""
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def config_digest(command: str, resolved: dict) -> str:
    payload = f"{command}\n{canonical_json(resolved)}".encode()
    return hashlib.sha256(payload).hexdigest()


def make_manifest(command: str, resolved: dict, wall_time_s: float) -> Manifest:
    return Manifest(
        schema_version=SCHEMA_VERSION,
        command=command,
        config_digest=config_digest(command, resolved),
        resolved_config=resolved,
        package_version=__version__,
        numpy_version=np.__version__,
        scipy_version=scipy.__version__,
        python_version=platform.python_version(),
        created_utc=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        wall_time_s=round(float(wall_time_s), 6),
    )
