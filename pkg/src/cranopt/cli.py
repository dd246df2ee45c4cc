"""Command-line front end.

Verbs: ``solve-pair`` sizes one link, ``sweep`` runs an experiment axis,
``plan`` solves a whole scenario end to end, ``simulate`` replays a solved
link in the Monte Carlo simulator, ``verify`` re-checks an emitted plan
from scratch. Exit codes: 0 success, 2 infeasible scenario/pair, 1 any
other error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import auction, iotools, linksim, scenario as scn, tpd
from .amc import ChannelModel, McsTable, SystemParams, snr_to_db
from .auction import InfeasibleAssignmentError
from .qos import QosRequirement

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class InfeasibleOutcome(RuntimeError):
    """A requested configuration admits no feasible solution."""


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve_pair(args) -> int:
    cfg = iotools.load_config(args.config)
    ctx = iotools.build_pair_context(cfg)
    sol = tpd.solve_pair(ctx)
    if sol is None:
        raise InfeasibleOutcome("no (r, rho, X) configuration satisfies the QoS targets")
    problems = tpd.certify_solution(ctx, sol)
    if problems:
        raise RuntimeError("solution failed certification: " + "; ".join(problems))
    out = _out_dir(args)
    payload = {
        "schema_version": iotools.SCHEMA_VERSION,
        "mean_snr_db": ctx.channel.mean_snr_db,
        "solution": iotools.solution_record(-1, -1, sol),
        "bandwidth_hz": sol.expected_cost * ctx.params.rb_bandwidth_hz,
    }
    iotools.write_json(payload, out / "pair_solution.json")
    print(
        f"solved: r={sol.rb_count} rho={sol.ber_threshold:.6g} "
        f"X={sol.transmissions} theta={sol.latency_exponent:.6g} "
        f"cost={sol.expected_cost:.4f} RB/slot "
        f"({sol.expected_cost * ctx.params.rb_bandwidth_hz / 1e6:.3f} MHz)"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = iotools.load_config(args.config)
    base = iotools.build_pair_context(cfg)
    spec = iotools.build_sweep_spec(cfg, base)
    rows = scn.run_sweep(spec)
    out = _out_dir(args)
    iotools.write_table(
        rows,
        columns=[
            ("axis", "name"),
            ("value", _AXIS_UNITS[spec.axis]),
            ("strategy", "name"),
            ("feasible", "bool"),
            ("cost_rbs", "RB/slot"),
            ("bandwidth_hz", "Hz"),
            ("ber_threshold", "probability"),
            ("transmissions", "count"),
            ("latency_exponent", "1/bit"),
        ],
        path=out / "sweep.csv",
    )
    feasible = sum(1 for r in rows if r["strategy"] == "cross_layer" and r["feasible"])
    print(f"sweep {spec.axis}: {len(spec.grid)} points, "
          f"{feasible} feasible for cross_layer -> {out / 'sweep.csv'}")
    return EXIT_OK


_AXIS_UNITS = {
    "source_rate": "bit/s",
    "total_delay": "s",
    "lvp_threshold": "probability",
    "decode_bler": "probability",
    "mean_snr": "dB",
}


def cmd_plan(args) -> int:
    cfg = iotools.load_config(args.config)
    spec = iotools.build_scenario_spec(cfg, seed=args.seed)
    drop = scn.generate_scenario(
        spec, params=iotools.build_system_params(cfg), table=iotools.build_table(cfg)
    )
    auction_cfg = cfg.get("auction", {})
    plan = scn.plan_network(
        drop,
        eps=auction_cfg.get("eps"),
        scale=auction_cfg.get("scale", 1000.0),
    )
    out = _out_dir(args)
    iotools.write_json(iotools.plan_payload(plan), out / "plan.json")
    rows = [
        {
            "user": n,
            "ap": plan.assignment.ap_for_user[n],
            "traffic_class": drop.users[n].traffic_class,
            "cost_rbs": plan.cost_matrix[plan.assignment.ap_for_user[n], n],
            "bandwidth_hz": plan.cost_matrix[plan.assignment.ap_for_user[n], n]
            * drop.params.rb_bandwidth_hz,
        }
        for n in range(len(drop.users))
    ]
    iotools.write_table(
        rows,
        columns=[
            ("user", "index"), ("ap", "index"), ("traffic_class", "name"),
            ("cost_rbs", "RB/slot"), ("bandwidth_hz", "Hz"),
        ],
        path=out / "assignment.csv",
    )
    bc_note = (
        f", best-channel {plan.bc_objective:.3f} RB/slot"
        if plan.bc_objective is not None else ""
    )
    print(
        f"planned {spec.n_aps} APs x {spec.n_users} users: "
        f"total {plan.total_cost_rbs:.3f} RB/slot "
        f"({plan.total_bandwidth_hz / 1e6:.3f} MHz){bc_note} -> {out / 'plan.json'}"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = iotools.load_config(args.config)
    ctx = iotools.build_pair_context(cfg)
    sol = tpd.solve_pair(ctx)
    if sol is None:
        raise InfeasibleOutcome("no feasible configuration to simulate")
    sim_cfg = iotools.build_sim_config(cfg, seed=args.seed)
    blocks = linksim.run_block_sim(sol, ctx.channel, ctx.params, ctx.table, sim_cfg)
    queue = linksim.run_queue_sim(
        sol, ctx.qos, ctx.channel, ctx.params, ctx.table, sim_cfg
    )
    out = _out_dir(args)
    payload = {
        "schema_version": iotools.SCHEMA_VERSION,
        "solution": iotools.solution_record(-1, -1, sol),
        "block_sim": {
            "per_transmission_bler": blocks.per_transmission_bler,
            "per_transmission_se": blocks.per_transmission_se,
            "residual_rate": blocks.residual_rate,
            "residual_se": blocks.residual_se,
            "n_blocks": blocks.n_blocks,
        },
        "queue_sim": {
            "arrived_bits": queue.arrived_bits,
            "served_bits": queue.served_bits,
            "deadline_dropped_bits": queue.deadline_dropped_bits,
            "residual_lost_bits": queue.residual_lost_bits,
            "final_backlog_bits": queue.final_backlog_bits,
            "lvp": queue.lvp,
            "residual_loss_ratio": queue.residual_loss_ratio,
            "mean_backlog_bits": queue.mean_backlog_bits,
            "mean_rbs_per_slot": queue.mean_rbs_per_slot,
            "rbs_per_slot_se": queue.rbs_per_slot_se,
            "bandwidth_hz": queue.bandwidth_hz,
            "n_slots": queue.n_slots,
        },
    }
    iotools.write_json(payload, out / "sim_stats.json")
    iotools.write_trace(queue.trace, out / "trace.txt")
    print(
        f"simulated {queue.n_slots} slots: empirical LVP {queue.lvp:.3e}, "
        f"mean {queue.mean_rbs_per_slot:.3f} RB/slot (analytic {sol.expected_cost:.3f}); "
        f"BLER {blocks.per_transmission_bler:.4e} over {blocks.n_blocks} blocks"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    """Re-check an emitted plan from first principles; PASS/FAIL per check."""
    payload = iotools.read_json(Path(args.out_dir) / "plan.json")
    spec = scn.ScenarioSpec(**payload["scenario"]["spec"])
    params = SystemParams(**payload["system_params"])
    table = McsTable(tuple(payload["mcs_table"]))
    drop = scn.generate_scenario(spec, params=params, table=table)

    failures = 0

    stored_snr_db = np.array(payload["scenario"]["mean_snr_db"])
    ok = np.allclose(stored_snr_db, snr_to_db(drop.mean_snr), rtol=0, atol=1e-9)
    failures += _report("scenario regeneration matches stored channel", ok)

    pairs = [tuple(p) for p in payload["assignment"]["pairs"]]
    ap_for_user = payload["assignment"]["ap_for_user"]
    n_users, n_aps = spec.n_users, spec.n_aps
    ok = sorted(n for _, n in pairs) == list(range(n_users)) and set(
        m for m, _ in pairs
    ) == set(range(n_aps))
    failures += _report("assignment covers every user once and every AP", ok)

    solutions = {
        (rec["ap"], rec["user"]): iotools.solution_from_record(rec)
        for rec in payload["solutions"]
    }
    bad = []
    for m, n in pairs:
        ctx = scn.pair_context(drop, m, n)
        problems = tpd.certify_solution(ctx, solutions[(m, n)])
        bad += [f"({m},{n}): {p}" for p in problems]
    failures += _report(
        "assigned pair solutions re-certify against QoS constraints",
        not bad, "; ".join(bad[:3]),
    )

    costs = np.array(
        [[np.inf if c is None else c for c in row] for row in payload["costs_rbs"]]
    )
    result = auction.solve_assignment(
        costs, scale=payload["assignment"]["cost_scale"]
    )
    ok = result.objective_scaled == payload["assignment"]["objective_scaled"]
    failures += _report("fresh auction reproduces the stored scaled objective", ok)

    total = sum(costs[m, n] for m, n in pairs)
    ok = abs(total - payload["totals"]["cost_rbs"]) <= 1e-9 * max(1.0, total)
    failures += _report("stored totals match the assigned pair costs", ok)

    if failures:
        print(f"verify: {failures} check(s) FAILED")
        return EXIT_ERROR
    print("verify: all checks passed")
    return EXIT_OK


def _report(label: str, ok: bool, detail: str = "") -> int:
    print(f"{'PASS' if ok else 'FAIL'}: {label}" + (f" ({detail})" if detail and not ok else ""))
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cranopt",
        description="Cross-layer bandwidth planning under statistical QoS targets",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "solve-pair": cmd_solve_pair,
        "sweep": cmd_sweep,
        "plan": cmd_plan,
        "simulate": cmd_simulate,
        "verify": cmd_verify,
    }
    for name in handlers:
        sp = sub.add_parser(name)
        if name != "verify":
            sp.add_argument("--config", required=True, help="path to a JSON config")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--out-dir", default="out", help="output directory")

    args = parser.parse_args(argv)
    try:
        return handlers[args.command](args)
    except (InfeasibleOutcome, InfeasibleAssignmentError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
