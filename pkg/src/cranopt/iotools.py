"""Config ingestion and flat-file emission.

Configs are single JSON documents with one section per domain object
(``system_params``, ``pair``, ``scenario``, ``sweep``, ``simulate``,
``auction``, ``solver``, ``mcs_table``). Unknown sections or keys are
rejected outright. SNR appears in dB everywhere in configs and emitted
summaries; rates in bits/s; delays in seconds.

Emitted tables are CSV with ``#``-prefixed header lines carrying the
schema version and per-column units. Floats are written with ``repr`` so
re-ingesting a table reproduces the original values exactly.
"""

import json
import math
from pathlib import Path

import numpy as np

from .amc import McsTable, SystemParams, snr_to_db
from .linksim import SimConfig, SlotTrace
from .scenario import ScenarioSpec, SweepSpec
from .tpd import PairContext, TpdSolution

SCHEMA_VERSION = 1

_SECTION_KEYS = {
    "system_params": {
        "slot_duration", "feedback_rtt", "subcarriers_per_rb", "symbols_per_rb",
        "data_symbols_per_slot", "subcarrier_spacing", "total_rbs",
        "code_block_bits", "max_transmissions",
    },
    "pair": {
        "mean_snr_db", "arrival_rate_bps", "delay_budget_s", "lvp_threshold",
        "decode_bler_threshold",
    },
    "solver": {"rho_min", "rho_max", "bisect_tol"},
    "scenario": {
        "n_aps", "n_users", "area_m", "embb_fraction", "seed", "tx_power_dbm",
        "noise_power_dbm", "min_distance_m", "decode_bler_threshold",
    },
    "sweep": {"axis", "grid", "fixed_configs", "include_shannon", "ifc_rho"},
    "simulate": {"n_slots", "n_blocks", "seed", "conditioned"},
    "auction": {"eps", "scale"},
}


def load_config(path) -> dict:
    """Read and validate a config document; unknown keys are fatal."""
    path = Path(path)
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config root must be an object")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {version}")
    for section, body in cfg.items():
        if section in ("schema_version", "mcs_table"):
            continue
        if section not in _SECTION_KEYS:
            raise ValueError(f"{path}: unknown section {section!r}")
        unknown = set(body) - _SECTION_KEYS[section]
        if unknown:
            raise ValueError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")
    cfg["_config_dir"] = str(path.parent)
    return cfg


def build_system_params(cfg: dict) -> SystemParams:
    return SystemParams(**cfg.get("system_params", {}))


def build_table(cfg: dict) -> McsTable:
    """Bundled default table unless the config names a file or inline records."""
    spec = cfg.get("mcs_table")
    if spec is None:
        return McsTable.default()
    if isinstance(spec, str):
        path = Path(spec)
        if not path.is_absolute():
            path = Path(cfg.get("_config_dir", ".")) / path
        return McsTable.from_csv(path)
    return McsTable.from_records([(int(i), float(v)) for i, v in spec])


def build_pair_context(cfg: dict) -> PairContext:
    from .amc import ChannelModel
    from .qos import QosRequirement

    pair = cfg["pair"]
    qos_req = QosRequirement(
        arrival_rate=pair["arrival_rate_bps"],
        delay_budget=pair["delay_budget_s"],
        lvp_threshold=pair["lvp_threshold"],
        decode_bler_threshold=pair.get("decode_bler_threshold", 1e-3),
    )
    return PairContext(
        channel=ChannelModel.from_db(pair["mean_snr_db"]),
        qos=qos_req,
        params=build_system_params(cfg),
        table=build_table(cfg),
        **cfg.get("solver", {}),
    )


def build_scenario_spec(cfg: dict, seed: int | None = None) -> ScenarioSpec:
    body = dict(cfg["scenario"])
    if seed is not None:
        body["seed"] = seed
    return ScenarioSpec(**body)


def build_sim_config(cfg: dict, seed: int | None = None) -> SimConfig:
    body = dict(cfg.get("simulate", {}))
    if seed is not None:
        body["seed"] = seed
    return SimConfig(**body)


def build_sweep_spec(cfg: dict, base: PairContext) -> SweepSpec:
    body = dict(cfg["sweep"])
    body["grid"] = tuple(float(v) for v in body["grid"])
    if "fixed_configs" in body:
        body["fixed_configs"] = tuple(
            (float(r), int(x)) for r, x in body["fixed_configs"]
        )
    return SweepSpec(base=base, **body)


def _encode(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _decode(token: str):
    if token == "True":
        return True
    if token == "False":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def write_table(rows: list[dict], columns: list[tuple[str, str]], path) -> None:
    """Emit a columnar table with units in the header; column order is fixed."""
    if not rows:
        raise ValueError("refusing to emit an empty table")
    names = [name for name, _ in columns]
    lines = [
        f"# schema_version={SCHEMA_VERSION}",
        "# columns: " + ", ".join(f"{n} [{u}]" for n, u in columns),
        ",".join(names),
    ]
    for row in rows:
        lines.append(",".join(_encode(row[n]) for n in names))
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path) -> list[dict]:
    """Re-ingest a table written by :func:`write_table`."""
    rows: list[dict] = []
    names: list[str] | None = None
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if names is None:
            names = line.split(",")
            continue
        rows.append(dict(zip(names, (_decode(t) for t in line.split(",")))))
    return rows


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return None  # JSON has no inf; None marks infeasible entries
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(
        json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"
    )


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_trace(trace: SlotTrace, path) -> None:
    """Columnar per-slot trace: one row per slot, documented header."""
    data = np.column_stack([
        np.arange(len(trace)),
        trace.snr,
        trace.mcs_index,
        trace.rbs_initial,
        trace.rbs_retx,
        trace.bits_served,
        trace.bits_dropped,
    ])
    header = (
        f"schema_version={SCHEMA_VERSION}\n"
        "slot snr_linear mcs_index rbs_initial rbs_retx bits_served bits_dropped"
    )
    np.savetxt(path, data, header=header,
               fmt=["%d", "%.17g", "%d", "%d", "%d", "%d", "%d"])


def load_cost_matrix(path) -> np.ndarray:
    """Plain-text cost matrix: rows are APs, 'inf' marks infeasible pairs."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append([float(tok) for tok in line.replace(",", " ").split()])
    if not rows:
        raise ValueError(f"{path}: no matrix rows found")
    return np.array(rows, dtype=float)


def solution_record(m: int, n: int, sol: TpdSolution) -> dict:
    return {
        "ap": m,
        "user": n,
        "rb_count": sol.rb_count,
        "ber_threshold": sol.ber_threshold,
        "transmissions": sol.transmissions,
        "latency_exponent": sol.latency_exponent,
        "queue_budget_s": sol.queue_budget,
        "expected_cost_rbs": sol.expected_cost,
        "mean_bler": sol.mean_bler,
    }


def solution_from_record(rec: dict) -> TpdSolution:
    return TpdSolution(
        rb_count=rec["rb_count"],
        ber_threshold=rec["ber_threshold"],
        transmissions=rec["transmissions"],
        latency_exponent=rec["latency_exponent"],
        queue_budget=rec["queue_budget_s"],
        expected_cost=rec["expected_cost_rbs"],
        mean_bler=rec["mean_bler"],
    )


def plan_payload(plan) -> dict:
    """JSON-ready dump of a network plan; carries everything needed to re-verify."""
    scn = plan.scenario
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": {
            "spec": {
                "n_aps": scn.spec.n_aps,
                "n_users": scn.spec.n_users,
                "area_m": scn.spec.area_m,
                "embb_fraction": scn.spec.embb_fraction,
                "seed": scn.spec.seed,
                "tx_power_dbm": scn.spec.tx_power_dbm,
                "noise_power_dbm": scn.spec.noise_power_dbm,
                "min_distance_m": scn.spec.min_distance_m,
                "decode_bler_threshold": scn.spec.decode_bler_threshold,
            },
            "ap_positions": list(scn.ap_positions),
            "users": [
                {
                    "id": u.ident,
                    "position": list(u.position),
                    "traffic_class": u.traffic_class,
                    "arrival_rate_bps": u.qos.arrival_rate,
                    "delay_budget_s": u.qos.delay_budget,
                    "lvp_threshold": u.qos.lvp_threshold,
                    "decode_bler_threshold": u.qos.decode_bler_threshold,
                }
                for u in scn.users
            ],
            "mean_snr_db": snr_to_db(scn.mean_snr),
        },
        "system_params": {
            "slot_duration": scn.params.slot_duration,
            "feedback_rtt": scn.params.feedback_rtt,
            "subcarriers_per_rb": scn.params.subcarriers_per_rb,
            "symbols_per_rb": scn.params.symbols_per_rb,
            "data_symbols_per_slot": scn.params.data_symbols_per_slot,
            "subcarrier_spacing": scn.params.subcarrier_spacing,
            "total_rbs": scn.params.total_rbs,
            "code_block_bits": scn.params.code_block_bits,
            "max_transmissions": scn.params.max_transmissions,
        },
        "mcs_table": list(scn.table.efficiencies),
        "costs_rbs": plan.cost_matrix,
        "solutions": [
            solution_record(m, n, sol)
            for (m, n), sol in sorted(plan.solutions.items())
        ],
        "assignment": {
            "pairs": [list(p) for p in plan.assignment.pairs],
            "ap_for_user": list(plan.assignment.ap_for_user),
            "objective_rbs": plan.assignment.objective,
            "objective_scaled": plan.assignment.objective_scaled,
            "ap_profits": list(plan.assignment.ap_profits),
            "user_prices": list(plan.assignment.user_prices),
            "supersource_price": plan.assignment.supersource_price,
            "eps": plan.assignment.eps,
            "cost_scale": plan.assignment.cost_scale,
            "rounding_bound": plan.assignment.rounding_bound,
            "bid_count": plan.assignment.bid_count,
        },
        "best_channel": None if plan.bc_pairs is None else {
            "pairs": [list(p) for p in plan.bc_pairs],
            "objective_rbs": plan.bc_objective,
            "objective_scaled": plan.bc_objective_scaled,
        },
        "totals": {
            "cost_rbs": plan.total_cost_rbs,
            "bandwidth_hz": plan.total_bandwidth_hz,
            "per_ap_users": [list(u) for u in plan.per_ap_users],
            "per_ap_cost_rbs": list(plan.per_ap_cost_rbs),
        },
    }
