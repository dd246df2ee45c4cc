"""Scenario generation, parameter sweeps, and end-to-end network planning.

Scenarios place APs and users uniformly in a square area and derive each
pair's mean SNR from a log-distance urban path-loss law
PL(dB) = 128.1 + 37.6 log10(d_km) with configurable transmit power and
noise floor (artifact defaults, not calibrated to any measurement).
Traffic mixes draw per-class QoS uniformly from:

    eMBB:  rate 10-20 Mbps, delay budget 10-16 ms, LVP 1e-4..1e-3
    uRLLC: rate 1-5 Mbps,   delay budget 3-9 ms,   LVP 1e-6..1e-5

Sweeps evaluate the joint solver against pinned (rho, X) ablations and an
idealized infinite-length-coding (IFC) reference that replaces the MCS
ladder by the gap-adjusted Shannon efficiency (no block errors, no ARQ).
Planning solves every pair, prices the association auction, and compares
against a best-channel (BC) association repaired to feasibility.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import amc, qos, tpd
from .amc import ChannelModel, McsTable, SystemParams
from .auction import Assignment, CostMatrix, solve_assignment
from .qos import QosRequirement
from .quadrature import adaptive_simpson
from .tpd import PairContext, TpdSolution

__all__ = [
    "ScenarioSpec",
    "UserSite",
    "Scenario",
    "SweepSpec",
    "NetworkPlan",
    "QOS_RANGES",
    "path_loss_db",
    "generate_scenario",
    "pair_context",
    "solve_all_pairs",
    "run_sweep",
    "shannon_min_rbs",
    "best_channel_pairs",
    "plan_network",
]

SWEEP_AXES = ("source_rate", "total_delay", "lvp_threshold", "decode_bler", "mean_snr")

DEFAULT_FIXED_CONFIGS = (
    (1e-5, 1), (1e-5, 2), (1e-5, 3),
    (1e-3, 1), (1e-3, 2), (1e-3, 3),
)

# (arrival rate [bits/s], delay budget [s], LVP threshold) bounds per class.
QOS_RANGES = {
    "embb": ((10e6, 20e6), (10e-3, 16e-3), (1e-4, 1e-3)),
    "urllc": ((1e6, 5e6), (3e-3, 9e-3), (1e-6, 1e-5)),
}


@dataclass(frozen=True)
class ScenarioSpec:
    """Counts, geometry, traffic mix, and radio constants of one drop."""

    n_aps: int
    n_users: int
    area_m: float = 600.0
    embb_fraction: float = 0.5
    seed: int = 0
    tx_power_dbm: float = 30.0
    noise_power_dbm: float = -90.0
    min_distance_m: float = 10.0
    decode_bler_threshold: float = 1e-3

    def __post_init__(self):
        if not 1 <= self.n_aps <= self.n_users:
            raise ValueError("need n_users >= n_aps >= 1")
        if self.area_m <= 0:
            raise ValueError("area must be positive")
        if not 0.0 <= self.embb_fraction <= 1.0:
            raise ValueError("embb_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class UserSite:
    ident: int
    position: tuple[float, float]
    qos: QosRequirement
    traffic_class: str


@dataclass(frozen=True)
class Scenario:
    """A concrete drop: sites, per-pair mean SNR, and shared radio constants."""

    spec: ScenarioSpec
    ap_positions: tuple[tuple[float, float], ...]
    users: tuple[UserSite, ...]
    mean_snr: np.ndarray            # (M, N), linear
    params: SystemParams
    table: McsTable

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.ap_positions), len(self.users)


def path_loss_db(distance_m: float, min_distance_m: float = 10.0) -> float:
    """Log-distance urban path loss, clamped below ``min_distance_m``."""
    d_km = max(distance_m, min_distance_m) / 1000.0
    return 128.1 + 37.6 * math.log10(d_km)


def generate_scenario(
    spec: ScenarioSpec,
    params: SystemParams | None = None,
    table: McsTable | None = None,
) -> Scenario:
    """Draw a deterministic scenario from its spec (same seed, same drop)."""
    params = params or SystemParams()
    table = table or McsTable.default()
    rng = np.random.default_rng(spec.seed)

    ap_xy = rng.uniform(0.0, spec.area_m, size=(spec.n_aps, 2))
    user_xy = rng.uniform(0.0, spec.area_m, size=(spec.n_users, 2))
    dist = np.linalg.norm(ap_xy[:, None, :] - user_xy[None, :, :], axis=2)
    pl = np.vectorize(lambda d: path_loss_db(d, spec.min_distance_m))(dist)
    snr_db = spec.tx_power_dbm - pl - spec.noise_power_dbm
    mean_snr = amc.snr_from_db(snr_db)
    mean_snr.setflags(write=False)

    n_embb = int(round(spec.embb_fraction * spec.n_users))
    users = []
    for n in range(spec.n_users):
        cls = "embb" if n < n_embb else "urllc"
        (r_lo, r_hi), (d_lo, d_hi), (e_lo, e_hi) = QOS_RANGES[cls]
        req = QosRequirement(
            arrival_rate=rng.uniform(r_lo, r_hi),
            delay_budget=rng.uniform(d_lo, d_hi),
            lvp_threshold=rng.uniform(e_lo, e_hi),
            decode_bler_threshold=spec.decode_bler_threshold,
        )
        req.validate_against(params)
        users.append(UserSite(n, (float(user_xy[n, 0]), float(user_xy[n, 1])), req, cls))

    return Scenario(
        spec=spec,
        ap_positions=tuple((float(x), float(y)) for x, y in ap_xy),
        users=tuple(users),
        mean_snr=mean_snr,
        params=params,
        table=table,
    )


def pair_context(scenario: Scenario, m: int, n: int, **solver_opts) -> PairContext:
    """Solver context of one (AP, user) pair."""
    return PairContext(
        channel=ChannelModel(mean_snr=float(scenario.mean_snr[m, n])),
        qos=scenario.users[n].qos,
        params=scenario.params,
        table=scenario.table,
        **solver_opts,
    )


def solve_all_pairs(
    scenario: Scenario, **solver_opts
) -> tuple[np.ndarray, dict[tuple[int, int], TpdSolution]]:
    """Cost matrix (np.inf where infeasible) and the solutions behind it.

    Pairs are independent; this loop is safe to parallelize externally.
    """
    m_count, n_count = scenario.shape
    costs = np.full((m_count, n_count), np.inf)
    solutions: dict[tuple[int, int], TpdSolution] = {}
    for m in range(m_count):
        for n in range(n_count):
            sol = tpd.solve_pair(pair_context(scenario, m, n, **solver_opts))
            if sol is not None:
                costs[m, n] = sol.expected_cost
                solutions[(m, n)] = sol
    return costs, solutions


@dataclass(frozen=True)
class SweepSpec:
    """One experiment axis against a fixed base context."""

    axis: str
    grid: tuple[float, ...]
    base: PairContext
    fixed_configs: tuple[tuple[float, int], ...] = DEFAULT_FIXED_CONFIGS
    include_shannon: bool = True
    ifc_rho: float = 1e-3           # gap parameter of the IFC reference

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if len(self.grid) < 3 or any(
            b <= a for a, b in zip(self.grid, self.grid[1:])
        ):
            raise ValueError("grid must be strictly increasing with >= 3 points")


def _context_at(spec: SweepSpec, value: float) -> PairContext:
    base = spec.base
    if spec.axis == "mean_snr":
        return dataclasses.replace(base, channel=ChannelModel.from_db(value))
    field = {
        "source_rate": "arrival_rate",
        "total_delay": "delay_budget",
        "lvp_threshold": "lvp_threshold",
        "decode_bler": "decode_bler_threshold",
    }[spec.axis]
    return dataclasses.replace(
        base, qos=dataclasses.replace(base.qos, **{field: value})
    )


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Tidy rows: one per (grid value, strategy).

    Strategies are the joint solver ("cross_layer"), each pinned
    (rho, X) pair ("fixed_rho<r>_x<X>"), and optionally the IFC reference.
    Infeasible points carry NaN bandwidth and feasible=False.
    """
    rows: list[dict] = []
    for value in spec.grid:
        ctx = _context_at(spec, value)
        bw = ctx.params.rb_bandwidth_hz

        sol = tpd.solve_pair(ctx)
        rows.append({
            "axis": spec.axis,
            "value": value,
            "strategy": "cross_layer",
            "feasible": sol is not None,
            "cost_rbs": sol.expected_cost if sol else math.nan,
            "bandwidth_hz": sol.expected_cost * bw if sol else math.nan,
            "ber_threshold": sol.ber_threshold if sol else math.nan,
            "transmissions": sol.transmissions if sol else 0,
            "latency_exponent": sol.latency_exponent if sol else math.nan,
        })
        for rho_fixed, x_fixed in spec.fixed_configs:
            cost = tpd.evaluate_fixed_config(ctx, rho_fixed, x_fixed)
            rows.append({
                "axis": spec.axis,
                "value": value,
                "strategy": f"fixed_rho{rho_fixed:g}_x{x_fixed}",
                "feasible": cost is not None,
                "cost_rbs": cost if cost is not None else math.nan,
                "bandwidth_hz": cost * bw if cost is not None else math.nan,
                "ber_threshold": rho_fixed,
                "transmissions": x_fixed,
                "latency_exponent": math.nan,
            })
        if spec.include_shannon:
            r_ifc = shannon_min_rbs(ctx, spec.ifc_rho)
            rows.append({
                "axis": spec.axis,
                "value": value,
                "strategy": "shannon_ifc",
                "feasible": r_ifc is not None,
                "cost_rbs": float(r_ifc) if r_ifc else math.nan,
                "bandwidth_hz": r_ifc * bw if r_ifc else math.nan,
                "ber_threshold": spec.ifc_rho,
                "transmissions": 1,
                "latency_exponent": math.nan,
            })
    return rows


def shannon_min_rbs(ctx: PairContext, rho: float = 1e-3) -> int | None:
    """Idealized-coding reference: fewest RBs meeting the QoS targets.

    Replaces the MCS ladder with the continuous gap-adjusted Shannon
    efficiency at gap parameter ``rho``; blocks never fail, so one
    transmission round suffices and the cost equals the allocation.
    """
    params, table = ctx.params, ctx.table
    split = qos.delay_split(ctx.qos.delay_budget, 1, params)
    if split is None:
        return None
    mean = ctx.channel.mean_snr
    sym = params.subcarriers_per_rb * params.symbols_per_rb
    upper = mean * math.log(1.0 / amc.TAIL_EPS)

    def pdf(g):
        return np.exp(-g / mean) / mean

    e_psi = sym * adaptive_simpson(
        lambda g: amc.shannon_gap_efficiency(g, rho) * pdf(g), 0.0, upper,
        rel_tol=1e-10,
    )
    arrivals = ctx.arrivals_per_slot
    for r in range(1, params.total_rbs + 1):
        e_rpsi = r * e_psi
        if e_rpsi >= arrivals / ctx.qos.lvp_threshold:
            break
        if e_rpsi <= arrivals:
            continue
        theta = qos.latency_exponent_from_info(
            e_rpsi, ctx.qos.arrival_rate, split.queue_budget,
            ctx.qos.lvp_threshold, params,
        )
        coef = theta * r * sym
        mgf = adaptive_simpson(
            lambda g: np.exp(
                -coef * np.log2(1.0 + g / (-2.0 * math.log(5.0 * rho) / 3.0))
            ) * pdf(g),
            0.0, upper, rel_tol=1e-10,
        )
        f_ec = -math.log(mgf) / (theta * params.slot_duration)
        if f_ec >= ctx.qos.arrival_rate:
            return r
    return None


def best_channel_pairs(
    scenario: Scenario, costs: np.ndarray, scale: float = 1000.0
) -> tuple[tuple[tuple[int, int], ...], float, int] | None:
    """Best-channel association repaired to cover every AP.

    Each user takes its strongest feasible AP; APs left empty then pull
    the best-channel user among those whose current AP keeps another
    user. Returns (pairs, true objective, scaled objective) or None when
    repair is impossible.
    """
    m_count, n_count = scenario.shape
    ap_of = []
    for n in range(n_count):
        feas = np.flatnonzero(np.isfinite(costs[:, n]))
        if feas.size == 0:
            return None
        ap_of.append(int(feas[np.argmax(scenario.mean_snr[feas, n])]))

    load = [sum(1 for a in ap_of if a == m) for m in range(m_count)]
    for m in range(m_count):
        while load[m] == 0:
            movable = [
                n for n in range(n_count)
                if load[ap_of[n]] > 1 and np.isfinite(costs[m, n])
            ]
            if not movable:
                return None
            n_move = max(movable, key=lambda n: (scenario.mean_snr[m, n], -n))
            load[ap_of[n_move]] -= 1
            ap_of[n_move] = m
            load[m] += 1

    pairs = tuple(sorted((ap_of[n], n) for n in range(n_count)))
    objective = float(sum(costs[m, n] for m, n in pairs))
    scaled = int(sum(int(round(scale * costs[m, n])) for m, n in pairs))
    return pairs, objective, scaled


@dataclass(frozen=True)
class NetworkPlan:
    """Full planning result: per-pair solutions, association, and totals."""

    scenario: Scenario
    cost_matrix: np.ndarray
    solutions: dict[tuple[int, int], TpdSolution]
    assignment: Assignment
    total_cost_rbs: float
    total_bandwidth_hz: float
    per_ap_users: tuple[tuple[int, ...], ...]
    per_ap_cost_rbs: tuple[float, ...]
    bc_pairs: tuple[tuple[int, int], ...] | None
    bc_objective: float | None
    bc_objective_scaled: int | None


def plan_network(
    scenario: Scenario,
    eps: float | None = None,
    scale: float = 1000.0,
    **solver_opts,
) -> NetworkPlan:
    """Solve every pair, auction the association, and certify the result.

    Raises if any selected pair fails independent re-certification; the
    auction itself already refuses to return without an eps-CS
    certificate.
    """
    costs, solutions = solve_all_pairs(scenario, **solver_opts)
    cm = CostMatrix(costs)  # raises with the unservable users listed
    assignment = solve_assignment(cm, eps=eps, scale=scale)

    problems = []
    for m, n in assignment.pairs:
        ctx = pair_context(scenario, m, n, **solver_opts)
        problems += [
            f"pair ({m}, {n}): {p}"
            for p in tpd.certify_solution(ctx, solutions[(m, n)])
        ]
    if problems:
        raise RuntimeError("plan failed re-certification: " + "; ".join(problems))

    m_count = scenario.shape[0]
    per_ap_users = tuple(
        tuple(n for a, n in assignment.pairs if a == m) for m in range(m_count)
    )
    per_ap_cost = tuple(
        float(sum(costs[m, n] for n in users)) for m, users in enumerate(per_ap_users)
    )
    total = float(sum(costs[m, n] for m, n in assignment.pairs))
    bc = best_channel_pairs(scenario, costs, scale=scale)
    return NetworkPlan(
        scenario=scenario,
        cost_matrix=costs,
        solutions=solutions,
        assignment=assignment,
        total_cost_rbs=total,
        total_bandwidth_hz=total * scenario.params.rb_bandwidth_hz,
        per_ap_users=per_ap_users,
        per_ap_cost_rbs=per_ap_cost,
        bc_pairs=bc[0] if bc else None,
        bc_objective=bc[1] if bc else None,
        bc_objective_scaled=bc[2] if bc else None,
    )
