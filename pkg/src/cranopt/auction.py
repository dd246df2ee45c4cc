"""Forward/reverse auction for the asymmetric user-association problem.

Given an M x N cost matrix (APs by users, RBs/slot, ``inf`` marking pairs
that cannot meet QoS), find the cheapest association in which every user
is served by exactly one AP and every AP serves at least one user
(N >= M). This is an asymmetric multi-assignment problem; the auction
maintains AP profits pi, user prices p, and a supersource price mu, and
terminates in a state satisfying epsilon-complementary slackness:

    (a)  pi_m + p_n >= -cost_mn - eps      for every feasible pair,
    (b)  pi_m + p_n  = -cost_mn            for every assigned pair,
    (c)  pi_m = max_k pi_k                 for every multi-assigned AP,

which certifies exact optimality once costs are integers and eps < 1/M.

All auction arithmetic is integral: costs are rounded at a configurable
scale sigma, then multiplied by an extra factor that turns eps itself into
an integer, so the epsilon-CS checks and the optimality guarantee are
exact rather than float-approximate. Bids use the best/second-best margin
in value form (value of pair (m, n) being -cost - price); when a bidder
has a single feasible choice, the "no competition" bid is realized as the
current price plus (spread + 1 + eps), which beats any finite rival bid.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CostMatrix",
    "AuctionState",
    "Assignment",
    "InfeasibleAssignmentError",
    "AuctionLimitError",
    "integerize_costs",
    "init_state",
    "forward_round",
    "reverse_round",
    "solve_assignment",
    "verify_eps_cs",
    "brute_force_assignment",
]


class InfeasibleAssignmentError(RuntimeError):
    """No association can satisfy the problem's structural constraints."""


class AuctionLimitError(RuntimeError):
    """Bid budget exhausted; the instance is almost certainly infeasible."""


@dataclass(frozen=True)
class CostMatrix:
    """Validated AP-by-user cost table; np.inf marks infeasible pairs."""

    costs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.costs, dtype=float)
        if arr.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        m, n = arr.shape
        if not 1 <= m <= n:
            raise ValueError(f"need N >= M >= 1 APs x users, got {m} x {n}")
        if np.any(np.isnan(arr)) or np.any(arr[np.isfinite(arr)] < 0):
            raise ValueError("costs must be non-negative or inf")
        finite = np.isfinite(arr)
        bad_users = [int(j) for j in range(n) if not finite[:, j].any()]
        if bad_users:
            raise InfeasibleAssignmentError(f"users with no feasible AP: {bad_users}")
        bad_aps = [int(i) for i in range(m) if not finite[i].any()]
        if bad_aps:
            raise InfeasibleAssignmentError(f"APs with no feasible user: {bad_aps}")
        arr.setflags(write=False)
        object.__setattr__(self, "costs", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape


def integerize_costs(costs: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Round sigma-scaled costs to int64; returns (matrix, feasibility mask).

    Infeasible entries are zeroed in the matrix and excluded by the mask;
    they never enter a bid.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    arr = np.asarray(costs, dtype=float)
    feasible = np.isfinite(arr)
    top = scale * float(arr[feasible].max(initial=0.0))
    if top >= 2**53:
        raise OverflowError(f"scaled cost {top} too large to round exactly")
    out = np.zeros(arr.shape, dtype=np.int64)
    out[feasible] = np.rint(scale * arr[feasible]).astype(np.int64)
    return out, feasible


@dataclass
class AuctionState:
    """Mutable auction workspace in internal integer units."""

    scaled_costs: np.ndarray        # int64, sigma * unit scaled
    feasible: np.ndarray            # bool mask, same shape
    sigma: float                    # external -> integer cost scale
    unit: int                       # extra factor making eps integral
    eps: int                        # bid increment, internal units
    prices: np.ndarray              # per-user, int64
    profits: np.ndarray             # per-AP, int64
    pairs: set[tuple[int, int]]
    ap_users: list[set[int]]
    user_ap: list[int | None]
    unassigned_aps: set[int]
    unassigned_users: set[int]
    spread: int                     # max - min feasible cost, internal units
    mu: int = 0
    bid_count: int = 0
    bid_cap: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.scaled_costs.shape


def init_state(costs, eps: float | None = None, scale: float = 1000.0) -> AuctionState:
    """Fresh auction state: empty assignment, zero prices and profits.

    ``eps`` is the bid increment in sigma-scaled integer-cost units and
    must satisfy eps < 1/M for the optimality certificate; default
    1/(2M). Whatever the value, it is realized exactly by scaling all
    integer costs so the increment becomes the integer 1 (or more).
    """
    cm = costs if isinstance(costs, CostMatrix) else CostMatrix(costs)
    m, n = cm.shape
    int_costs, feasible = integerize_costs(cm.costs, scale)

    if eps is None:
        unit, eps_int = 2 * m, 1
    else:
        if not 0.0 < eps < 1.0 / m:
            raise ValueError(f"eps must lie in (0, 1/M) = (0, {1.0 / m}), got {eps}")
        unit = math.ceil(1.0 / eps)
        eps_int = math.floor(unit * eps) or 1  # eps_int/unit <= eps, still > 0

    scaled = int_costs * unit
    if scaled.size and int(np.abs(scaled[feasible]).max(initial=0)) > 2**60:
        raise OverflowError("internal integer costs too large")
    finite_vals = scaled[feasible]
    spread = int(finite_vals.max() - finite_vals.min()) if finite_vals.size else 0
    # Theoretical bid budget ceil(spread/eps) * M * N, padded so degenerate
    # all-equal-cost instances still have room to run.
    bid_cap = (math.ceil(spread / eps_int) + 2) * m * n + 4 * (m + n)

    return AuctionState(
        scaled_costs=scaled,
        feasible=feasible,
        sigma=float(scale),
        unit=unit,
        eps=eps_int,
        prices=np.zeros(n, dtype=np.int64),
        profits=np.zeros(m, dtype=np.int64),
        pairs=set(),
        ap_users=[set() for _ in range(m)],
        user_ap=[None] * n,
        unassigned_aps=set(range(m)),
        unassigned_users=set(range(n)),
        spread=spread,
        bid_cap=bid_cap,
    )


def _count_bid(state: AuctionState) -> None:
    state.bid_count += 1
    if state.bid_count > state.bid_cap:
        raise AuctionLimitError(
            f"bid budget {state.bid_cap} exhausted after {state.bid_count} bids; "
            "the feasibility pattern likely admits no valid association"
        )


def _add_pair(state: AuctionState, m: int, n: int) -> None:
    state.pairs.add((m, n))
    state.ap_users[m].add(n)
    state.user_ap[n] = m
    state.unassigned_aps.discard(m)
    state.unassigned_users.discard(n)


def _drop_pair(state: AuctionState, m: int, n: int, requeue_ap: bool) -> None:
    state.pairs.discard((m, n))
    state.ap_users[m].discard(n)
    state.user_ap[n] = None
    state.unassigned_users.add(n)
    if requeue_ap and not state.ap_users[m]:
        state.unassigned_aps.add(m)


def forward_round(state: AuctionState) -> AuctionState:
    """One simultaneous bidding round of the unassigned APs.

    Each AP values user n at -cost - price, bids on its best user with the
    best/second-best margin plus eps, and every user that received bids
    moves to its highest bidder at that bid price.
    """
    if not state.unassigned_aps:
        raise ValueError("forward round requires at least one unassigned AP")
    costs, prices = state.scaled_costs, state.prices
    bids: dict[int, list[tuple[int, int]]] = {}

    for m in sorted(state.unassigned_aps):
        cand = np.flatnonzero(state.feasible[m])
        values = -costs[m, cand] - prices[cand]
        k = int(np.argmax(values))  # ties resolve to the lowest user index
        n_best = int(cand[k])
        if cand.size == 1:
            bid = int(prices[n_best]) + state.spread + 1 + state.eps
        else:
            runner_up = int(np.partition(values, -2)[-2])
            bid = int(-costs[m, n_best]) - runner_up + state.eps
        _count_bid(state)
        bids.setdefault(n_best, []).append((bid, m))

    for n in sorted(bids):
        offers = bids[n]
        best_bid = max(b for b, _ in offers)
        winner = min(m for b, m in offers if b == best_bid)
        prev = state.user_ap[n]
        if prev is not None:
            _drop_pair(state, prev, n, requeue_ap=True)
        _add_pair(state, winner, n)
        state.prices[n] = best_bid
        state.profits[winner] = -costs[winner, n] - best_bid
    return state


def reverse_round(state: AuctionState) -> AuctionState:
    """One claim by the lowest-index unassigned user.

    The user takes its best-value AP; the AP's profit rises by the
    best/second-best margin plus eps, but never past the supersource
    price mu, and a strictly positive rise evicts the AP's previous user.
    A zero rise (profit already at mu) stacks the user onto the AP as an
    extra assignment.
    """
    if not state.unassigned_users:
        raise ValueError("reverse round requires at least one unassigned user")
    costs, profits = state.scaled_costs, state.profits

    n = min(state.unassigned_users)
    cand = np.flatnonzero(state.feasible[:, n])
    values = -costs[cand, n] - profits[cand]
    k = int(np.argmax(values))
    m_best = int(cand[k])
    chi = int(values[k])
    if cand.size == 1:
        delta = state.mu - int(profits[m_best])
    else:
        zeta = int(np.partition(values, -2)[-2])
        delta = min(state.mu - int(profits[m_best]), chi - zeta + state.eps)
    _count_bid(state)

    prior = set(state.ap_users[m_best])
    _add_pair(state, m_best, n)
    state.profits[m_best] += delta
    state.prices[n] = chi - delta
    if delta > 0:
        if len(prior) != 1:
            raise RuntimeError(
                f"profit rise on AP {m_best} holding {len(prior)} pairs; "
                "auction invariant broken"
            )
        _drop_pair(state, m_best, prior.pop(), requeue_ap=False)
    return state


def solve_assignment(costs, eps: float | None = None, scale: float = 1000.0) -> "Assignment":
    """Run the auction to completion and package the certified result.

    Forward rounds run until every AP holds a user, then the supersource
    price is pinned at the top profit and reverse rounds place the
    remaining users. The returned assignment carries the dual variables
    and the final state; epsilon-CS is re-verified before returning.
    """
    state = init_state(costs, eps=eps, scale=scale)
    cm_costs = np.asarray(costs.costs if isinstance(costs, CostMatrix) else costs, dtype=float)

    while state.unassigned_aps or state.unassigned_users:
        while state.unassigned_aps:
            forward_round(state)
        state.mu = int(state.profits.max())
        while state.unassigned_users:
            reverse_round(state)

    ok, report = verify_eps_cs(state)
    if not ok:
        raise RuntimeError(f"auction terminated without eps-CS certificate: {report}")
    return _package(state, cm_costs)


def _package(state: AuctionState, true_costs: np.ndarray) -> "Assignment":
    pairs = tuple(sorted(state.pairs))
    int_costs = state.scaled_costs // state.unit
    objective_scaled = int(sum(int_costs[m, n] for m, n in pairs))
    eps_sigma = state.eps / state.unit
    m_count, n_count = state.shape
    return Assignment(
        pairs=pairs,
        ap_for_user=tuple(int(state.user_ap[n]) for n in range(n_count)),
        objective=float(sum(true_costs[m, n] for m, n in pairs)),
        objective_scaled=objective_scaled,
        ap_profits=tuple(float(p) / state.unit for p in state.profits),
        user_prices=tuple(float(p) / state.unit for p in state.prices),
        supersource_price=float(state.mu) / state.unit,
        eps=eps_sigma,
        cost_scale=state.sigma,
        rounding_bound=n_count * (0.5 + eps_sigma) / state.sigma,
        bid_count=state.bid_count,
        state=state,
    )


@dataclass(frozen=True)
class Assignment:
    """Final association with its duals; prices are in sigma-scaled cost units."""

    pairs: tuple[tuple[int, int], ...]
    ap_for_user: tuple[int, ...]
    objective: float                 # sum of true (unscaled) costs
    objective_scaled: int            # sum of integerized costs, sigma units
    ap_profits: tuple[float, ...]
    user_prices: tuple[float, ...]
    supersource_price: float
    eps: float                       # increment in sigma-scaled cost units
    cost_scale: float
    rounding_bound: float            # |true objective - optimum| <= this
    bid_count: int = 0
    state: AuctionState | None = field(default=None, repr=False, compare=False)


def verify_eps_cs(state: AuctionState) -> tuple[bool, str]:
    """Check the three epsilon-CS conditions exactly; (ok, first violation)."""
    costs, prices, profits = state.scaled_costs, state.prices, state.profits
    slack = profits[:, None] + prices[None, :] + costs  # >= -eps wanted
    bad = state.feasible & (slack < -state.eps)
    if bad.any():
        m, n = map(int, np.argwhere(bad)[0])
        return False, (
            f"condition (a) violated at pair ({m}, {n}): "
            f"pi+p = {profits[m] + prices[n]} < -cost-eps = {-costs[m, n] - state.eps}"
        )
    for m, n in sorted(state.pairs):
        if profits[m] + prices[n] != -costs[m, n]:
            return False, (
                f"condition (b) violated at assigned pair ({m}, {n}): "
                f"pi+p = {profits[m] + prices[n]} != -cost = {-costs[m, n]}"
            )
    top = int(profits.max()) if len(profits) else 0
    for m, users in enumerate(state.ap_users):
        if len(users) > 1 and profits[m] != top:
            return False, (
                f"condition (c) violated: AP {m} holds {len(users)} users "
                f"at profit {profits[m]} < max profit {top}"
            )
    return True, ""


BRUTE_FORCE_MAX_APS = 5
BRUTE_FORCE_MAX_USERS = 8


def brute_force_assignment(costs) -> Assignment:
    """Exhaustive oracle: try every user->AP map that covers all APs.

    Guarded to M <= 5, N <= 8. Ties resolve to the lexicographically first
    map, scanning users' feasible APs in ascending order. The scaled
    objective mirrors the true one rounded and is only meaningful when the
    input matrix is integral.
    """
    cm = costs if isinstance(costs, CostMatrix) else CostMatrix(costs)
    m_count, n_count = cm.shape
    if m_count > BRUTE_FORCE_MAX_APS or n_count > BRUTE_FORCE_MAX_USERS:
        raise ValueError(
            f"brute force guarded to {BRUTE_FORCE_MAX_APS} x {BRUTE_FORCE_MAX_USERS}, "
            f"got {m_count} x {n_count}"
        )
    arr = cm.costs
    choices = [np.flatnonzero(np.isfinite(arr[:, n])).tolist() for n in range(n_count)]
    all_aps = set(range(m_count))

    best_obj = math.inf
    best_map: tuple[int, ...] | None = None
    for candidate in itertools.product(*choices):
        if not all_aps.issubset(candidate):
            continue
        obj = sum(arr[candidate[n], n] for n in range(n_count))
        if obj < best_obj:
            best_obj = obj
            best_map = candidate
    if best_map is None:
        raise InfeasibleAssignmentError("no user->AP map covers every AP")

    pairs = tuple(sorted((best_map[n], n) for n in range(n_count)))
    return Assignment(
        pairs=pairs,
        ap_for_user=tuple(best_map),
        objective=float(best_obj),
        objective_scaled=int(round(best_obj)),
        ap_profits=(),
        user_prices=(),
        supersource_price=0.0,
        eps=0.0,
        cost_scale=1.0,
        rounding_bound=0.0,
    )
