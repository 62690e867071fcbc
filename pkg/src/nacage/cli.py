"""Command-line client for the analysis service.

The client builds a request from an optional JSON config file plus flag
overrides, posts it to the service (in-process by default, or to ``--server``
for a remote instance), and prints the response as JSON or CSV.

Exit codes: ``0`` success, ``1`` configuration error (bad flags, bad config
values, rejected request), ``2`` numerical failure (the computation ran but
could not produce a trustworthy result), ``3`` I/O or transport failure
(unreadable files, unwritable output, unreachable server).

Relative ``--output`` paths resolve under ``$NACAGE_OUTPUT_DIR`` when that
variable is set.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import httpx

from . import __version__

OUTPUT_DIR_ENV = "NACAGE_OUTPUT_DIR"
CSV_SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

ENDPOINTS = {
    "bands": "/v1/bands",
    "cles": "/v1/cles",
    "cage": "/v1/cage",
    "table-check": "/v1/table-check",
    "steady": "/v1/steady",
    "fidelity": "/v1/fidelity",
    "audit": "/v1/audit",
    "evolve": "/v1/evolve",
}

_LINKS_DESTS = ("family", "n", "power", "gamma", "theta", "psi")

# Request fields each subcommand may override from the command line, keyed by
# argparse dest (identical to the service schema field names).
COMMAND_FIELDS = {
    "bands": ("n_k", "orientation"),
    "cles": ("energy", "window_cells", "orientation"),
    "cage": ("mode", "n_cells", "start_cell", "orientation", "threshold", "t_max", "n_times"),
    "table-check": ("threshold", "t_max", "n_times"),
    "steady": (
        "n_cells",
        "orientation",
        "pump_cell",
        "pump_site",
        "pump_mode",
        "pump_amplitude",
        "omega_pump",
        "kappa",
        "include_overlap",
        "target_anchor",
        "region_left",
        "region_right",
    ),
    "fidelity": (
        "tier",
        "n_cells",
        "orientation",
        "pump_cell",
        "pump_site",
        "pump_mode",
        "pump_amplitude",
        "omega_pump",
        "kappa",
        "t_max",
        "n_times",
        "target_anchor",
        "rtol",
        "atol",
        "omega0_ghz",
        "delta_ghz",
        "j_mhz",
        "allow_out_of_range",
    ),
    "audit": ("omega0_ghz", "delta_ghz", "j_mhz", "allow_out_of_range"),
    "evolve": ("n_cells", "boundary", "orientation", "start_cell", "site", "mode", "t_max", "n_times"),
}


class CliConfigError(Exception):
    """Raised for client-side configuration problems (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("client options")
    group.add_argument(
        "--server",
        metavar="URL",
        help="base URL of a running service; when omitted the command runs in-process",
    )
    group.add_argument("--timeout", type=float, default=600.0, help="request timeout in seconds")
    group.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="output format (default: json)",
    )
    group.add_argument(
        "--output",
        metavar="PATH",
        help=f"write the result to PATH; relative paths resolve under ${OUTPUT_DIR_ENV} when set",
    )
    group.add_argument(
        "--config",
        metavar="FILE",
        help="JSON file with request fields; command-line flags take precedence",
    )


def _add_links_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("link unitaries")
    group.add_argument(
        "--family",
        choices=("shift", "stride", "u2", "custom"),
        help="built-in link constructor (default: u2)",
    )
    group.add_argument("--n", type=int, help="component count for the shift/stride families")
    group.add_argument(
        "--power", "--m", type=int, dest="power", help="target nilpotency index for the stride family"
    )
    group.add_argument("--gamma", type=float, help="interference weight for the u2 family")
    group.add_argument("--theta", type=float, help="upper-path phase for the u2 family")
    group.add_argument("--psi", type=float, help="lower-path phase for the u2 family")
    group.add_argument(
        "--links-json",
        metavar="FILE",
        help="JSON document with explicit link matrices (implies --family custom)",
    )


def _add_orientation(parser, dest: str = "orientation") -> None:
    parser.add_argument(
        f"--{dest}",
        choices=("standard", "reversed"),
        help="which spinal neighbour each link unitary decorates (default: standard)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="nacage",
        description="Flat-band lattice analysis: band structure, compact states, caging, drives.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def command(name: str, help_text: str, links: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common_options(p)
        if links:
            _add_links_options(p)
        return p

    p = command("bands", "Band structure, flatness per band, and symmetry verdicts.")
    p.add_argument("--n-k", type=int, help="momentum samples across the zone (default: 64)")
    _add_orientation(p)

    p = command("cles", "Extract compact localized eigenstates at a flat-band energy.")
    p.add_argument("--energy", type=float, help="flat-band energy to extract at (required)")
    p.add_argument("--window-cells", type=int, help="support window in cells, 1-3 (default: 3)")
    _add_orientation(p)

    p = command("cage", "Release a single excitation and measure its caging extent.")
    p.add_argument("--mode", "--l", type=int, dest="mode", help="initially occupied component (default: 1)")
    p.add_argument("--n-cells", type=int, help="chain length (default: 2N+7)")
    p.add_argument("--start-cell", type=int, help="release cell (default: centre)")
    p.add_argument("--threshold", type=float, help="participation threshold (default: 1e-6)")
    p.add_argument("--t-max", "--tmax", type=float, dest="t_max", help="evolution time in 1/J (default: 30)")
    p.add_argument("--n-times", type=int, help="number of sample times (default: 121)")
    _add_orientation(p)

    p = command("table-check", "Compare measured cages against the closed-form size table.")
    p.add_argument("--threshold", type=float, help="participation threshold (default: 1e-6)")
    p.add_argument("--t-max", "--tmax", type=float, dest="t_max", help="evolution time in 1/J (default: 30)")
    p.add_argument("--n-times", type=int, help="number of sample times (default: 121)")

    p = command("steady", "Steady state under a continuous single-site pump with uniform loss.")
    p.add_argument("--n-cells", type=int, help="chain length (default: 11)")
    p.add_argument("--pump-cell", type=int, help="pumped cell (default: 5)")
    p.add_argument("--pump-site", choices=("A", "B", "C"), help="pumped site (default: A)")
    p.add_argument("--pump-mode", type=int, help="pumped component (default: 1)")
    p.add_argument("--pump-amplitude", type=float, help="pump amplitude in J (default: 1)")
    p.add_argument(
        "--omega-pump", "--omega-p", type=float, dest="omega_pump", help="pump detuning in J (required)"
    )
    p.add_argument("--kappa", type=float, help="uniform decay rate in J (default: 0.1)")
    p.add_argument(
        "--include-overlap",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="report overlap with the compact state at the pump frequency (default: on)",
    )
    p.add_argument("--target-anchor", type=int, help="anchor cell of the comparison state")
    p.add_argument("--region-left", type=int, help="left cell of the photon-counting region")
    p.add_argument("--region-right", type=int, help="right cell of the photon-counting region")
    _add_orientation(p)

    p = command("fidelity", "Time-resolved overlap of the driven field with a compact state.")
    p.add_argument("--tier", type=int, choices=(0, 1, 2), help="drive model tier (default: 0)")
    p.add_argument(
        "--band",
        choices=("sqrt6", "sqrt2"),
        help="shorthand for --omega-pump at the positive flat-band energies sqrt(6)J or sqrt(2)J",
    )
    p.add_argument("--n-cells", type=int, help="chain length (default: 11)")
    p.add_argument("--pump-cell", type=int, help="pumped cell (default: 5)")
    p.add_argument("--pump-site", choices=("A", "B", "C"), help="pumped site (default: A)")
    p.add_argument("--pump-mode", type=int, help="pumped component (default: 1)")
    p.add_argument("--pump-amplitude", type=float, help="pump amplitude in J (default: 1)")
    p.add_argument(
        "--omega-pump", "--omega-p", type=float, dest="omega_pump", help="pump detuning in J (required)"
    )
    p.add_argument("--kappa", type=float, help="uniform decay rate in J (default: 0.1)")
    p.add_argument("--t-max", "--tmax", type=float, dest="t_max", help="final time in 1/J (default: 200)")
    p.add_argument("--n-times", type=int, help="number of sample times (default: 81)")
    p.add_argument("--target-anchor", type=int, help="anchor cell of the comparison state")
    p.add_argument("--rtol", type=float, help="integrator relative tolerance (default: 1e-9)")
    p.add_argument("--atol", type=float, help="integrator absolute tolerance (default: 1e-12)")
    p.add_argument("--omega0-ghz", type=float, help="carrier frequency in GHz (default: 6)")
    p.add_argument("--delta-ghz", type=float, help="site stagger in GHz (default: 1)")
    p.add_argument("--j-mhz", type=float, help="hopping rate in MHz (default: 10)")
    p.add_argument(
        "--allow-out-of-range",
        action="store_true",
        default=None,
        help="accept carrier/stagger values outside the standard windows",
    )
    _add_orientation(p)

    p = command("audit", "Crosstalk audit of the modulated-coupler frequency plan.")
    p.add_argument("--omega0-ghz", type=float, help="carrier frequency in GHz (default: 6)")
    p.add_argument("--delta-ghz", type=float, help="site stagger in GHz (default: 1)")
    p.add_argument("--j-mhz", type=float, help="hopping rate in MHz (default: 10)")
    p.add_argument(
        "--allow-out-of-range",
        action="store_true",
        default=None,
        help="accept carrier/stagger values outside the standard windows",
    )

    p = command("evolve", "Evolve a single-site release and report site populations over time.")
    p.add_argument("--n-cells", type=int, help="chain length (default: 2N+7)")
    p.add_argument("--boundary", choices=("open", "periodic"), help="chain boundary (default: open)")
    p.add_argument("--start-cell", type=int, help="release cell (default: centre)")
    p.add_argument("--site", choices=("A", "B", "C"), help="release site (default: A)")
    p.add_argument("--mode", type=int, help="released component (default: 1)")
    p.add_argument("--t-max", type=float, help="evolution time in 1/J (default: 30)")
    p.add_argument("--n-times", type=int, help="number of sample times (default: 121)")
    _add_orientation(p)

    p = sub.add_parser("serve", help="Run the HTTP service.", description="Run the HTTP service.")
    p.add_argument("--host", default="127.0.0.1", help="bind address (default: 127.0.0.1)")
    p.add_argument("--port", type=int, default=8000, help="bind port (default: 8000)")

    return parser


# ---------------------------------------------------------------------------
# Request assembly
# ---------------------------------------------------------------------------


def _read_json_file(path: str, what: str) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliConfigError(f"{what} {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliConfigError(f"{what} {path} must contain a JSON object")
    return doc


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def build_payload(args: argparse.Namespace) -> dict:
    """Assemble the request body from the config file plus flag overrides."""
    payload: dict = {}
    if args.config:
        payload = _read_json_file(args.config, "config file")

    overrides: dict = {}
    links: dict = {}
    for dest in COMMAND_FIELDS[args.command]:
        value = getattr(args, dest)
        if value is not None:
            overrides[dest] = value
    band = getattr(args, "band", None)
    if band is not None and "omega_pump" not in overrides:
        overrides["omega_pump"] = math.sqrt({"sqrt6": 6.0, "sqrt2": 2.0}[band])
    for dest in _LINKS_DESTS:
        value = getattr(args, dest)
        if value is not None:
            links[dest] = value

    if args.links_json:
        if links.get("family") not in (None, "custom"):
            raise CliConfigError("--links-json implies --family custom")
        links = {"family": "custom", "matrices": _read_json_file(args.links_json, "link document")}
    if links:
        overrides["links"] = links

    return _merge(payload, overrides)


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------


def _post_in_process(path: str, payload: dict, timeout: float) -> tuple[int, dict]:
    from .service.app import create_app

    async def call() -> tuple[int, dict]:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service", timeout=timeout
        ) as client:
            response = await client.post(path, json=payload)
            return response.status_code, response.json()

    return asyncio.run(call())


def _post_remote(server: str, path: str, payload: dict, timeout: float) -> tuple[int, dict]:
    with httpx.Client(base_url=server, timeout=timeout) as client:
        response = client.post(path, json=payload)
        return response.status_code, response.json()


def _post(args: argparse.Namespace, path: str, payload: dict) -> tuple[int, dict]:
    if args.server:
        return _post_remote(args.server, path, payload, args.timeout)
    return _post_in_process(path, payload, args.timeout)


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------


def _manifest_comments(command: str, body: dict) -> list[str]:
    manifest = body.get("manifest", {})
    return [
        f"# nacage-csv command={command} schema={CSV_SCHEMA_VERSION}",
        f"# config_digest={manifest.get('config_digest', '')}",
        "# package_version={0} numpy={1} scipy={2}".format(
            manifest.get("package_version", ""),
            manifest.get("numpy_version", ""),
            manifest.get("scipy_version", ""),
        ),
    ]


def _comment(pairs: dict) -> str:
    return "# " + " ".join(f"{key}={value}" for key, value in pairs.items())


def _csv_table(comments: list[str], columns: list[str], rows) -> str:
    buffer = io.StringIO()
    for line in comments:
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def _csv_bands(body: dict) -> str:
    comments = _manifest_comments("bands", body)
    comments.append(_comment({"n_components": body["n_components"]}))
    comments.append("# flatness=" + ",".join(repr(v) for v in body["flatness"]))
    comments.append(
        "# symmetries=" + ",".join(f"{k}:{str(v).lower()}" for k, v in body["symmetries"].items())
    )
    n_bands = len(body["energies"][0]) if body["energies"] else 0
    columns = ["k"] + [f"band_{i + 1}" for i in range(n_bands)]
    rows = [[k] + row for k, row in zip(body["k_values"], body["energies"])]
    return _csv_table(comments, columns, rows)


def _csv_cles(body: dict) -> str:
    comments = _manifest_comments("cles", body)
    comments.append(_comment({"energy": body["energy"], "count": body["count"]}))
    columns = ["state", "energy", "window_cells", "cell_offset", "site", "mode", "re", "im"]
    rows = [
        [index, state["energy"], state["window_cells"], amp["cell_offset"], amp["site"], amp["mode"], amp["re"], amp["im"]]
        for index, state in enumerate(body["states"])
        for amp in state["amplitudes"]
    ]
    return _csv_table(comments, columns, rows)


def _csv_key_value(command: str, body: dict, keys: list[str]) -> str:
    comments = _manifest_comments(command, body)
    rows = []
    for key in keys:
        value = body.get(key)
        if isinstance(value, dict):
            rows.extend([f"{key}_{inner}", inner_value] for inner, inner_value in value.items())
        elif value is not None:
            rows.append([key, value])
    return _csv_table(comments, ["key", "value"], rows)


def _csv_cage(body: dict) -> str:
    return _csv_key_value(
        "cage",
        body,
        [
            "n_cells",
            "mode",
            "orientation",
            "start_cell",
            "threshold",
            "left_edge",
            "right_edge",
            "size",
            "leakage",
            "peak_population",
            "norm_drift",
            "predicted",
        ],
    )


def _csv_table_check(body: dict) -> str:
    comments = _manifest_comments("table-check", body)
    comments.append(
        _comment(
            {
                "n_components": body["n_components"],
                "nilpotent_power": body["nilpotent_power"],
                "n_cells": body["n_cells"],
                "start_cell": body["start_cell"],
                "threshold": body["threshold"],
                "all_strict": str(body["all_strict"]).lower(),
                "all_reflected": str(body["all_reflected"]).lower(),
            }
        )
    )
    columns = [
        "mode",
        "predicted_size",
        "predicted_right_edge",
        "predicted_left_edge",
        "reversed_size",
        "reversed_right_edge",
        "reversed_left_edge",
        "standard_size",
        "standard_right_edge",
        "standard_left_edge",
        "leakage_reversed",
        "leakage_standard",
        "match_strict",
        "match_reflected",
    ]
    rows = []
    for row in body["rows"]:
        rows.append(
            [row["mode"]]
            + [row["predicted"][k] for k in ("size", "right_edge", "left_edge")]
            + [row["measured_reversed"][k] for k in ("size", "right_edge", "left_edge")]
            + [row["measured_standard"][k] for k in ("size", "right_edge", "left_edge")]
            + [
                row["leakage_reversed"],
                row["leakage_standard"],
                str(row["match_strict"]).lower(),
                str(row["match_reflected"]).lower(),
            ]
        )
    return _csv_table(comments, columns, rows)


def _csv_steady(body: dict) -> str:
    comments = _manifest_comments("steady", body)
    summary = {
        "n_cells": body["n_cells"],
        "omega_pump": body["omega_pump"],
        "kappa": body["kappa"],
        "pump_cell": body["pump_cell"],
        "pump_site": body["pump_site"],
        "pump_mode": body["pump_mode"],
        "photon_total": body["photon_total"],
    }
    if body.get("cles_overlap") is not None:
        summary["cles_overlap"] = body["cles_overlap"]
        summary["target_anchor"] = body["target_anchor"]
    if body.get("sspn"):
        summary["sspn_left"] = body["sspn"]["left_edge"]
        summary["sspn_right"] = body["sspn"]["right_edge"]
        summary["sspn_fraction"] = body["sspn"]["fraction"]
    comments.append(_comment(summary))
    columns = ["cell", "site", "mode", "re", "im", "photons"]
    rows = [[a["cell"], a["site"], a["mode"], a["re"], a["im"], a["photons"]] for a in body["amplitudes"]]
    return _csv_table(comments, columns, rows)


def _csv_fidelity(body: dict) -> str:
    comments = _manifest_comments("fidelity", body)
    summary = {
        "tier": body["tier"],
        "n_cells": body["n_cells"],
        "omega_pump": body["omega_pump"],
        "kappa": body["kappa"],
        "target_anchor": body["target_anchor"],
        "final_fidelity_static": body["final_fidelity_static"],
        "steps_taken": body["steps_taken"],
        "steps_rejected": body["steps_rejected"],
        "used_compiled_kernel": str(body["used_compiled_kernel"]).lower(),
        "conjugate_drift": body["conjugate_drift"],
    }
    if body.get("fidelity_modulated") is not None:
        summary["final_fidelity_modulated"] = body["final_fidelity_modulated"]
        summary["min_overlap"] = body["min_overlap"]
        columns = ["time", "fidelity_static", "fidelity_modulated", "overlap"]
        rows = list(
            zip(body["times"], body["fidelity_static"], body["fidelity_modulated"], body["overlap"])
        )
    else:
        columns = ["time", "fidelity_static"]
        rows = list(zip(body["times"], body["fidelity_static"]))
    comments.append(_comment(summary))
    return _csv_table(comments, columns, rows)


def _csv_audit(body: dict) -> str:
    comments = _manifest_comments("audit", body)
    comments.append(
        _comment(
            {
                "omega0_ghz": body["plan"].get("omega0_ghz"),
                "delta_ghz": body["plan"].get("delta_ghz"),
                "j_mhz": body["j_mhz"],
                "min_bs_detuning_ghz": body["min_bs_detuning_ghz"],
                "min_pair_detuning_ghz": body["min_pair_detuning_ghz"],
                "bound_ok": str(body["bound_ok"]).lower(),
                "n_tones": len(body.get("tones", [])),
            }
        )
    )
    columns = [
        "mode",
        "count",
        "stark_signed_mhz",
        "stark_abs_mhz",
        "stark_bound_mhz",
        "compensation_mhz",
    ]
    rows = [
        [
            mode,
            body["counts"][mode],
            body["stark_signed_mhz"][mode],
            body["stark_abs_mhz"][mode],
            body["stark_bound_mhz"][mode],
            body["compensation_mhz"][mode],
        ]
        for mode in body["counts"]
    ]
    return _csv_table(comments, columns, rows)


def _csv_evolve(body: dict) -> str:
    comments = _manifest_comments("evolve", body)
    comments.append(
        _comment(
            {
                "n_cells": body["n_cells"],
                "boundary": body["boundary"],
                "orientation": body["orientation"],
                "start_cell": body["start_cell"],
                "site": body["site"],
                "mode": body["mode"],
                "norm_drift": body["norm_drift"],
            }
        )
    )
    columns = ["time", "site", "cell", "population"]
    rows = []
    for label, series in (("A", "a_populations"), ("B", "b_populations"), ("C", "c_populations")):
        for time_value, per_cell in zip(body["times"], body[label.lower() + "_populations"]):
            rows.extend([time_value, label, cell, population] for cell, population in enumerate(per_cell))
    return _csv_table(comments, columns, rows)


_CSV_WRITERS = {
    "bands": _csv_bands,
    "cles": _csv_cles,
    "cage": _csv_cage,
    "table-check": _csv_table_check,
    "steady": _csv_steady,
    "fidelity": _csv_fidelity,
    "audit": _csv_audit,
    "evolve": _csv_evolve,
}


def format_body(command: str, body: dict, output_format: str) -> str:
    if output_format == "csv":
        return _CSV_WRITERS[command](body)
    return json.dumps(body, indent=2)


def resolve_output_path(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _emit(args: argparse.Namespace, command: str, body: dict) -> int:
    text = format_body(command, body, args.format)
    if args.output:
        path = resolve_output_path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + ("\n" if not text.endswith("\n") else ""))
        print(path)
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


_ERROR_EXIT_CODES = {"config": EXIT_CONFIG, "numerical": EXIT_NUMERICAL, "internal": EXIT_NUMERICAL}


def _error_exit(status: int, body: dict) -> int:
    detail = body.get("detail")
    if isinstance(detail, dict) and "kind" in detail:
        kind = detail["kind"]
        message = detail.get("message", "")
    else:
        kind = "config" if status == 400 else "numerical"
        message = str(detail) if detail is not None else f"HTTP {status}"
    print(f"error ({kind}): {message}", file=sys.stderr)
    return _ERROR_EXIT_CODES.get(kind, EXIT_NUMERICAL)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    if args.command == "serve":
        return _serve(args)

    try:
        payload = build_payload(args)
    except CliConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        status, body = _post(args, ENDPOINTS[args.command], payload)
    except httpx.HTTPError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error (io): malformed response: {exc}", file=sys.stderr)
        return EXIT_IO

    if status != 200:
        return _error_exit(status, body)

    try:
        return _emit(args, args.command, body)
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
