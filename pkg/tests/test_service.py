"""Tests for the HTTP service layer: endpoints, manifests, error mapping."""

import asyncio
import math

import httpx
import numpy as np
import pytest

from nacage.gauge import LinkSet, links_to_json
from nacage.service.app import create_app

SQRT6 = math.sqrt(6.0)

# All-identity links: both paths interfere constructively, so the walker is
# dispersive and no caging prediction applies.
IDENTITY_LINKS = {
    "family": "custom",
    "matrices": links_to_json(LinkSet(*([np.eye(1, dtype=complex)] * 4))),
}


class Api:
    """Small synchronous wrapper around the ASGI app for test calls."""

    def __init__(self):
        self._app = create_app()

    def _call(self, method: str, path: str, payload=None):
        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport, base_url="http://test") as client:
                if method == "GET":
                    response = await client.get(path)
                else:
                    response = await client.post(path, json=payload)
                return response.status_code, response.json()

        return asyncio.run(go())

    def get(self, path):
        return self._call("GET", path)

    def post(self, path, payload):
        return self._call("POST", path, payload)


@pytest.fixture(scope="module")
def api():
    return Api()


class TestHealthAndManifest:
    def test_health_reports_ok(self, api):
        status, body = api.get("/v1/health")
        assert status == 200
        assert body["status"] == "ok"
        assert body["schema_version"] == "1"

    def test_manifest_echoes_resolved_config(self, api):
        status, body = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 7})
        assert status == 200
        manifest = body["manifest"]
        assert manifest["command"] == "bands"
        resolved = manifest["resolved_config"]
        assert resolved["n_k"] == 7
        assert resolved["orientation"] == "standard"
        assert resolved["links"]["family"] == "u2"
        assert resolved["links"]["gamma"] == 1.0
        assert len(manifest["config_digest"]) == 64
        assert manifest["package_version"]
        assert manifest["wall_time_s"] >= 0.0

    def test_digest_stable_for_identical_input(self, api):
        _, first = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 7})
        _, second = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 7})
        assert first["manifest"]["config_digest"] == second["manifest"]["config_digest"]

    def test_digest_stable_when_defaults_written_out(self, api):
        _, implicit = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 7})
        _, explicit = api.post(
            "/v1/bands",
            {
                "links": {
                    "family": "u2",
                    "n": None,
                    "power": None,
                    "gamma": 1.0,
                    "theta": 0.0,
                    "psi": 0.0,
                    "matrices": None,
                },
                "n_k": 7,
                "orientation": "standard",
            },
        )
        assert implicit["manifest"]["config_digest"] == explicit["manifest"]["config_digest"]

    def test_digest_changes_with_any_field(self, api):
        _, base = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 7})
        _, other_nk = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 8})
        _, other_links = api.post("/v1/bands", {"links": {"family": "u2", "gamma": 0.5}, "n_k": 7})
        digest = base["manifest"]["config_digest"]
        assert other_nk["manifest"]["config_digest"] != digest
        assert other_links["manifest"]["config_digest"] != digest

    def test_digest_differs_between_commands(self, api):
        _, bands = api.post("/v1/bands", {"links": {"family": "u2"}})
        _, table = api.post("/v1/table-check", {"links": {"family": "u2"}})
        assert bands["manifest"]["config_digest"] != table["manifest"]["config_digest"]


class TestBandsEndpoint:
    def test_flat_bands_for_full_interference(self, api):
        status, body = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 21})
        assert status == 200
        assert body["n_components"] == 2
        assert len(body["k_values"]) == 21
        assert len(body["energies"]) == 21
        assert len(body["energies"][0]) == 6
        assert max(body["flatness"]) < 1e-10
        assert body["symmetries"] == {"chiral": True, "trs_pseudospin": True, "ph": True}

    def test_dispersive_chain_is_not_flat(self, api):
        status, body = api.post("/v1/bands", {"links": IDENTITY_LINKS, "n_k": 21})
        assert status == 200
        assert max(body["flatness"]) > 0.5

    def test_invalid_n_k_is_config_error(self, api):
        status, body = api.post("/v1/bands", {"links": {"family": "u2"}, "n_k": 0})
        assert status == 400
        assert body["detail"]["kind"] == "config"

    def test_unknown_field_is_config_error(self, api):
        status, body = api.post("/v1/bands", {"links": {"family": "u2"}, "bogus": 1})
        assert status == 400
        assert body["detail"]["kind"] == "config"


class TestClesEndpoint:
    def test_single_state_at_top_band(self, api):
        status, body = api.post("/v1/cles", {"links": {"family": "u2"}, "energy": SQRT6})
        assert status == 200
        assert body["count"] == 1
        state = body["states"][0]
        assert state["energy"] == pytest.approx(SQRT6, abs=1e-12)
        assert state["window_cells"] == 3
        assert state["support_cells"] == 3
        total = sum(a["re"] ** 2 + a["im"] ** 2 for a in state["amplitudes"])
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_missing_energy_is_config_error(self, api):
        status, body = api.post("/v1/cles", {"links": {"family": "u2"}})
        assert status == 400
        assert body["detail"]["kind"] == "config"

    def test_off_band_energy_is_config_error(self, api):
        status, body = api.post("/v1/cles", {"links": {"family": "u2"}, "energy": 1.7})
        assert status == 400
        assert body["detail"]["kind"] == "config"


class TestCageEndpoint:
    def test_defaults_size_chain_to_component_count(self, api):
        status, body = api.post("/v1/cage", {"links": {"family": "shift", "n": 2}})
        assert status == 200
        assert body["n_cells"] == 11
        assert body["start_cell"] == 5
        assert body["size"] == 2
        assert body["leakage"] < 1e-8
        # Predictions are stated in the mirrored hopping convention, so the
        # measured edges (5, 6) appear reflected through the release cell.
        assert body["predicted"] == {"size": 2, "right_edge": 5, "left_edge": 4}

    def test_near_boundary_release_is_numerical_error(self, api):
        status, body = api.post(
            "/v1/cage", {"links": {"family": "shift", "n": 3}, "start_cell": 1}
        )
        assert status == 422
        assert body["detail"]["kind"] == "numerical"

    def test_missing_family_parameter_is_config_error(self, api):
        status, body = api.post("/v1/cage", {"links": {"family": "shift"}})
        assert status == 400
        assert body["detail"]["kind"] == "config"

    def test_non_nilpotent_links_report_no_prediction(self, api):
        status, body = api.post(
            "/v1/cage", {"links": IDENTITY_LINKS, "n_cells": 31, "start_cell": 15, "t_max": 3.0}
        )
        assert status == 200
        assert body["predicted"] is None
        assert body["size"] > 1


class TestTableCheckEndpoint:
    def test_full_interference_matches_table(self, api):
        status, body = api.post("/v1/table-check", {"links": {"family": "u2"}})
        assert status == 200
        assert body["nilpotent_power"] == 2
        assert body["all_strict"] is True
        assert body["all_reflected"] is True
        assert len(body["rows"]) == 2

    def test_zero_weight_family_is_config_error(self, api):
        status, body = api.post(
            "/v1/table-check", {"links": {"family": "u2", "gamma": 0.0, "theta": math.pi}}
        )
        assert status == 400
        assert body["detail"]["kind"] == "config"

    def test_uncaged_links_are_numerical_error(self, api):
        status, body = api.post("/v1/table-check", {"links": IDENTITY_LINKS})
        assert status == 422
        assert body["detail"]["kind"] == "numerical"


class TestSteadyEndpoint:
    def test_resonant_pump_projects_onto_compact_state(self, api):
        status, body = api.post("/v1/steady", {"links": {"family": "u2"}, "omega_pump": SQRT6})
        assert status == 200
        assert body["target_anchor"] == 4
        assert body["cles_overlap"] > 0.99
        assert body["sspn"]["left_edge"] == 5
        assert body["sspn"]["right_edge"] == 6
        assert body["sspn"]["fraction"] > 0.999
        assert len(body["amplitudes"]) == 66
        total = sum(a["photons"] for a in body["amplitudes"])
        assert total == pytest.approx(body["photon_total"], rel=1e-12)

    def test_region_override_is_respected(self, api):
        status, body = api.post(
            "/v1/steady",
            {"links": {"family": "u2"}, "omega_pump": SQRT6, "region_left": 4, "region_right": 7},
        )
        assert status == 200
        assert body["sspn"]["left_edge"] == 4
        assert body["sspn"]["right_edge"] == 7

    def test_overlap_can_be_skipped(self, api):
        status, body = api.post(
            "/v1/steady",
            {"links": {"family": "u2"}, "omega_pump": 1.7, "include_overlap": False},
        )
        assert status == 200
        assert body["cles_overlap"] is None
        assert body["target_anchor"] is None
        assert body["sspn"] is None

    def test_off_band_pump_with_overlap_is_config_error(self, api):
        status, body = api.post("/v1/steady", {"links": {"family": "u2"}, "omega_pump": 1.7})
        assert status == 400
        assert body["detail"]["kind"] == "config"


class TestFidelityEndpoint:
    def test_static_drive_reaches_high_fidelity(self, api):
        status, body = api.post(
            "/v1/fidelity",
            {"links": {"family": "u2"}, "tier": 0, "omega_pump": SQRT6, "t_max": 50.0, "n_times": 26},
        )
        assert status == 200
        assert body["final_fidelity_static"] > 0.99
        assert body["steps_taken"] > 0
        assert len(body["times"]) == 26
        assert len(body["fidelity_static"]) == 26
        assert body["fidelity_static"][0] == 0.0
        assert body["fidelity_modulated"] is None
        assert body["overlap"] is None

    def test_sideband_tier_tracks_static_model(self, api):
        status, body = api.post(
            "/v1/fidelity",
            {
                "links": {"family": "u2"},
                "tier": 1,
                "n_cells": 5,
                "pump_cell": 2,
                "omega_pump": SQRT6,
                "t_max": 1.0,
                "n_times": 5,
                "target_anchor": 1,
            },
        )
        assert status == 200
        assert len(body["fidelity_modulated"]) == 5
        assert len(body["overlap"]) == 5
        assert body["overlap"][0] == 0.0
        assert body["min_overlap"] > 0.9

    def test_pair_tier_keeps_conjugate_symmetry(self, api):
        status, body = api.post(
            "/v1/fidelity",
            {
                "links": {"family": "u2"},
                "tier": 2,
                "n_cells": 5,
                "pump_cell": 2,
                "omega_pump": SQRT6,
                "t_max": 1.0,
                "n_times": 5,
                "target_anchor": 1,
            },
        )
        assert status == 200
        assert body["conjugate_drift"] < 1e-6
        assert body["min_overlap"] > 0.9

    def test_invalid_tier_is_config_error(self, api):
        status, body = api.post(
            "/v1/fidelity", {"links": {"family": "u2"}, "tier": 3, "omega_pump": SQRT6}
        )
        assert status == 400
        assert body["detail"]["kind"] == "config"


class TestAuditEndpoint:
    def test_default_plan_minima(self, api):
        status, body = api.post("/v1/audit", {"links": {"family": "u2"}})
        assert status == 200
        assert body["min_bs_detuning_ghz"] == pytest.approx(1.0, abs=1e-12)
        assert body["min_pair_detuning_ghz"] == pytest.approx(3.0, abs=1e-12)
        assert body["bound_ok"] is True
        assert len(body["tones"]) == 8
        assert sorted(body["counts"]) == ["A1", "A2", "B1", "B2", "C1", "C2"]

    def test_three_component_links_are_config_error(self, api):
        status, body = api.post("/v1/audit", {"links": {"family": "shift", "n": 3}})
        assert status == 400
        assert body["detail"]["kind"] == "config"


class TestEvolveEndpoint:
    def test_single_component_breathing(self, api):
        status, body = api.post(
            "/v1/evolve",
            {"links": {"family": "shift", "n": 1}, "t_max": 2.0, "n_times": 9},
        )
        assert status == 200
        assert body["n_cells"] == 9
        assert body["start_cell"] == 4
        times = np.asarray(body["times"])
        a_pop = np.asarray(body["a_populations"])
        np.testing.assert_allclose(a_pop[:, 4], np.cos(2.0 * times) ** 2, atol=1e-10)
        assert body["norm_drift"] < 1e-10

    def test_population_arrays_cover_every_cell(self, api):
        status, body = api.post(
            "/v1/evolve",
            {"links": {"family": "shift", "n": 2}, "n_cells": 7, "start_cell": 3, "t_max": 1.0, "n_times": 3},
        )
        assert status == 200
        for key in ("a_populations", "b_populations", "c_populations"):
            arr = np.asarray(body[key])
            assert arr.shape == (3, 7)
        totals = (
            np.asarray(body["a_populations"])
            + np.asarray(body["b_populations"])
            + np.asarray(body["c_populations"])
        ).sum(axis=1)
        np.testing.assert_allclose(totals, 1.0, atol=1e-10)

    def test_bad_boundary_is_config_error(self, api):
        status, body = api.post(
            "/v1/evolve", {"links": {"family": "shift", "n": 1}, "boundary": "twisted"}
        )
        assert status == 400
        assert body["detail"]["kind"] == "config"
