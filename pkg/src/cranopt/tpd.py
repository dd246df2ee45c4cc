"""Per-link transmission parameter search.

For one AP-user pair, jointly picks the retransmission budget X, the
initial RB allocation r, and the BER ceiling rho that minimize the
expected RB cost per slot

    cost(r, rho, X) = r * (1 - Pbar**X) / (1 - Pbar)

subject to: the effective capacity at the induced latency exponent covers
the arrival rate, the residual block loss after X rounds stays within the
decode budget, the service mean sits inside the strict feasibility window,
and the cost fits the slot's RB supply.

The search sweeps X and r over their (small) integer ranges and solves the
remaining one-dimensional problem in rho by bisection: effective capacity
is monotone increasing in rho inside the feasibility window, while cost is
monotone increasing in rho, so the cheapest admissible rho for fixed
(X, r) is the smallest one that still covers the arrival rate.
"""

import math
from dataclasses import dataclass
from functools import cached_property

from . import amc, qos
from .amc import ChannelModel, McsTable, SystemParams
from .qos import QosRequirement

__all__ = [
    "PairContext",
    "TpdSolution",
    "expected_rb_cost",
    "solve_ber_threshold",
    "solve_pair",
    "evaluate_fixed_config",
    "certify_solution",
]


@dataclass(frozen=True)
class PairContext:
    """Everything needed to size one AP-user link."""

    channel: ChannelModel
    qos: QosRequirement
    params: SystemParams
    table: McsTable
    rho_min: float = 1e-9
    rho_max: float = 0.199
    bisect_tol: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.rho_min < self.rho_max < amc.RHO_MAX:
            raise ValueError(
                f"need 0 < rho_min < rho_max < {amc.RHO_MAX}, "
                f"got [{self.rho_min}, {self.rho_max}]"
            )
        if not self.bisect_tol > 0:
            raise ValueError("bisect_tol must be positive")
        self.qos.validate_against(self.params)

    @cached_property
    def arrivals_per_slot(self) -> float:
        """lambda * T_s [bits/slot]; the only rate conversion in the solver."""
        return self.qos.arrival_rate * self.params.slot_duration


@dataclass(frozen=True)
class TpdSolution:
    """Optimal configuration of one pair and its certified cost."""

    rb_count: int               # r*
    ber_threshold: float        # rho*
    transmissions: int          # X*
    latency_exponent: float     # theta* [1/bits]
    queue_budget: float         # D_q_th [s]
    expected_cost: float        # RBs/slot including retransmissions
    mean_bler: float            # Pbar at rho*


def expected_rb_cost(rb_count: int, mean_bler: float, transmissions: int) -> float:
    """Expected RBs/slot over the ARQ cascade: r * sum_{x<X} Pbar**x."""
    if rb_count < 1 or transmissions < 1:
        raise ValueError("rb_count and transmissions must be >= 1")
    if not 0.0 <= mean_bler < 1.0:
        raise ValueError(f"mean_bler must lie in [0, 1), got {mean_bler}")
    if mean_bler == 0.0:
        return float(rb_count)
    return rb_count * (1.0 - mean_bler**transmissions) / (1.0 - mean_bler)


def _capacity_probe(ctx: PairContext, rb_count: int, rho: float, queue_budget: float):
    """(effective capacity [bits/s], theta, E[r psi] [bits/slot]) at one rho.

    Past the upper feasibility edge (theta <= 0) the capacity is continued
    by its theta -> 0 limit E[r psi]/T_s, which exceeds lambda/eps there;
    bisection then steps back down.
    """
    e_rpsi = rb_count * amc.expected_info_per_rb(
        rho, ctx.channel.mean_snr, ctx.params, ctx.table
    )
    theta = qos.latency_exponent_from_info(
        e_rpsi,
        ctx.qos.arrival_rate,
        queue_budget,
        ctx.qos.lvp_threshold,
        ctx.params,
    )
    if theta <= 0.0:
        return e_rpsi / ctx.params.slot_duration, theta, e_rpsi
    f_ec = qos.effective_capacity(
        rho, rb_count, theta, ctx.channel, ctx.params, ctx.table
    )
    return f_ec, theta, e_rpsi


def solve_ber_threshold(
    rb_count: int,
    transmissions: int,
    ctx: PairContext,
    probe_log: list | None = None,
) -> float | None:
    """Smallest admissible BER ceiling for fixed (r, X), or None.

    Requires the delay split for ``transmissions`` to be feasible. Declares
    infeasibility when even rho_max cannot cover the arrival rate;
    otherwise bisects and returns the upper bracket endpoint, so the
    effective-capacity constraint is met from above (within one
    ``bisect_tol`` of the exact boundary). The latency exponent is
    recomputed from the delay-tail equality at every probe.
    """
    split = qos.delay_split(ctx.qos.delay_budget, transmissions, ctx.params)
    if split is None:
        raise ValueError(f"delay split infeasible for X={transmissions}")
    target = ctx.qos.arrival_rate

    f_hi, _, _ = _capacity_probe(ctx, rb_count, ctx.rho_max, split.queue_budget)
    if f_hi < target:
        return None

    lo, hi = ctx.rho_min, ctx.rho_max
    while hi - lo > ctx.bisect_tol:
        mid = 0.5 * (lo + hi)
        f_mid, _, _ = _capacity_probe(ctx, rb_count, mid, split.queue_budget)
        if probe_log is not None:
            probe_log.append((lo, mid, hi, f_mid))
        if f_mid < target:
            lo = mid
        else:
            hi = mid
    return hi


def solve_pair(ctx: PairContext, exhaustive: bool = False) -> TpdSolution | None:
    """Minimal-cost (r, rho, X) configuration for one pair, or None.

    Sweeps X up to the first delay-infeasible count, r up to the RB supply
    with an early break once r alone exceeds the best cost so far
    (cost >= r always); ``exhaustive=True`` disables the break for
    cross-checking. Ties resolve to the smallest X, then r (scan order);
    rho is determined by (X, r).
    """
    params = ctx.params
    best: TpdSolution | None = None

    for x in range(1, params.max_transmissions + 1):
        split = qos.delay_split(ctx.qos.delay_budget, x, params)
        if split is None:
            break  # larger X only shrinks the queue budget
        for r in range(1, params.total_rbs + 1):
            if not exhaustive and best is not None and r > best.expected_cost:
                break
            rho = solve_ber_threshold(r, x, ctx)
            if rho is None:
                continue
            candidate = _finish_candidate(ctx, r, x, rho, split.queue_budget)
            if candidate is None:
                continue
            if best is None or candidate.expected_cost < best.expected_cost:
                best = candidate
    return best


def _finish_candidate(
    ctx: PairContext, rb_count: int, transmissions: int, rho: float, queue_budget: float
) -> TpdSolution | None:
    """Validate the remaining constraints at the bisected rho and price it."""
    e_rpsi = rb_count * amc.expected_info_per_rb(
        rho, ctx.channel.mean_snr, ctx.params, ctx.table
    )
    if not qos.feasibility_window(
        e_rpsi, ctx.qos.arrival_rate, ctx.qos.lvp_threshold, ctx.params
    ):
        return None
    theta = qos.latency_exponent_from_info(
        e_rpsi, ctx.qos.arrival_rate, queue_budget, ctx.qos.lvp_threshold, ctx.params
    )
    if theta <= 0.0:
        return None
    pbar = amc.average_bler(
        rho, ctx.channel.mean_snr, ctx.params.code_block_bits, ctx.table
    )
    if pbar**transmissions > ctx.qos.decode_bler_threshold:
        return None
    cost = expected_rb_cost(rb_count, pbar, transmissions)
    if cost > ctx.params.total_rbs:
        return None
    return TpdSolution(
        rb_count=rb_count,
        ber_threshold=rho,
        transmissions=transmissions,
        latency_exponent=theta,
        queue_budget=queue_budget,
        expected_cost=cost,
        mean_bler=pbar,
    )


def evaluate_fixed_config(
    ctx: PairContext, rho_fixed: float, transmissions_fixed: int
) -> float | None:
    """Cost of the best allocation when rho and X are pinned (ablation baseline).

    Returns the minimal expected cost over r, or None when no allocation
    satisfies every constraint at the pinned values. Cost grows linearly
    in r at fixed (rho, X), so the smallest admissible r is optimal.
    """
    split = qos.delay_split(ctx.qos.delay_budget, transmissions_fixed, ctx.params)
    if split is None:
        return None
    pbar = amc.average_bler(
        rho_fixed, ctx.channel.mean_snr, ctx.params.code_block_bits, ctx.table
    )
    if pbar**transmissions_fixed > ctx.qos.decode_bler_threshold:
        return None
    e_psi = amc.expected_info_per_rb(
        rho_fixed, ctx.channel.mean_snr, ctx.params, ctx.table
    )
    arrivals = ctx.arrivals_per_slot
    upper = arrivals / ctx.qos.lvp_threshold

    for r in range(1, ctx.params.total_rbs + 1):
        e_rpsi = r * e_psi
        if e_rpsi >= upper:
            break  # window closes for good as r grows
        if e_rpsi <= arrivals:
            continue
        theta = qos.latency_exponent_from_info(
            e_rpsi, ctx.qos.arrival_rate, split.queue_budget,
            ctx.qos.lvp_threshold, ctx.params,
        )
        f_ec = qos.effective_capacity(
            rho_fixed, r, theta, ctx.channel, ctx.params, ctx.table
        )
        if f_ec < ctx.qos.arrival_rate:
            continue
        cost = expected_rb_cost(r, pbar, transmissions_fixed)
        if cost > ctx.params.total_rbs:
            return None  # cost only grows with r
        return cost
    return None


def certify_solution(
    ctx: PairContext, sol: TpdSolution, rel_tol: float = 1e-9
) -> list[str]:
    """Re-derive every constraint from (r*, rho*, X*) alone; [] means certified.

    Deliberately ignores how the solution was found: recomputes the delay
    split, channel expectations, exponent, capacity, loss bounds and cost
    from scratch and reports each violated condition.
    """
    problems: list[str] = []
    split = qos.delay_split(ctx.qos.delay_budget, sol.transmissions, ctx.params)
    if split is None:
        return [f"delay split infeasible at X={sol.transmissions}"]
    if not math.isclose(split.queue_budget, sol.queue_budget, rel_tol=rel_tol):
        problems.append(
            f"queue budget mismatch: {split.queue_budget} vs stored {sol.queue_budget}"
        )

    e_rpsi = sol.rb_count * amc.expected_info_per_rb(
        sol.ber_threshold, ctx.channel.mean_snr, ctx.params, ctx.table
    )
    if not qos.feasibility_window(
        e_rpsi, ctx.qos.arrival_rate, ctx.qos.lvp_threshold, ctx.params
    ):
        problems.append(f"feasibility window violated: E[r psi]={e_rpsi}")

    theta = qos.latency_exponent_from_info(
        e_rpsi, ctx.qos.arrival_rate, split.queue_budget,
        ctx.qos.lvp_threshold, ctx.params,
    )
    if theta <= 0.0:
        problems.append(f"non-positive latency exponent {theta}")
        return problems
    if not math.isclose(theta, sol.latency_exponent, rel_tol=rel_tol):
        problems.append(f"exponent mismatch: {theta} vs stored {sol.latency_exponent}")

    f_ec = qos.effective_capacity(
        sol.ber_threshold, sol.rb_count, theta, ctx.channel, ctx.params, ctx.table
    )
    if f_ec < ctx.qos.arrival_rate * (1.0 - rel_tol):
        problems.append(
            f"effective capacity {f_ec} below arrival rate {ctx.qos.arrival_rate}"
        )

    lvp = qos.lvp_estimate(
        theta, ctx.qos.arrival_rate, split.queue_budget, e_rpsi, ctx.params
    )
    if lvp > ctx.qos.lvp_threshold * (1.0 + rel_tol):
        problems.append(f"LVP estimate {lvp} exceeds target {ctx.qos.lvp_threshold}")

    pbar = amc.average_bler(
        sol.ber_threshold, ctx.channel.mean_snr, ctx.params.code_block_bits, ctx.table
    )
    if pbar**sol.transmissions > ctx.qos.decode_bler_threshold * (1.0 + rel_tol):
        problems.append(
            f"residual BLER {pbar**sol.transmissions} exceeds "
            f"{ctx.qos.decode_bler_threshold}"
        )

    cost = expected_rb_cost(sol.rb_count, pbar, sol.transmissions)
    if not math.isclose(cost, sol.expected_cost, rel_tol=rel_tol):
        problems.append(f"cost mismatch: {cost} vs stored {sol.expected_cost}")
    if cost > ctx.params.total_rbs * (1.0 + rel_tol):
        problems.append(f"cost {cost} exceeds RB supply {ctx.params.total_rbs}")
    return problems
