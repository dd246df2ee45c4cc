"""Cross-layer bandwidth planning for C-RAN downlinks.

Per AP-user pair, finds the bandwidth-minimal (RB allocation, BER ceiling,
retransmission budget, latency exponent) meeting statistical delay and
loss targets; associates users to APs by a forward/reverse auction with an
exact optimality certificate; and validates the analytic model with a
slot-level Monte Carlo link and queue simulator.
"""

from .amc import (
    ChannelModel,
    McsTable,
    MgfContext,
    SystemParams,
    snr_from_db,
    snr_to_db,
)
from .auction import (
    Assignment,
    AuctionState,
    CostMatrix,
    InfeasibleAssignmentError,
    brute_force_assignment,
    solve_assignment,
    verify_eps_cs,
)
from .linksim import BlerStats, QueueStats, SimConfig, SlotTrace, run_block_sim, run_queue_sim
from .qos import QosRequirement, effective_capacity, latency_exponent, lvp_estimate
from .quadrature import QuadratureError, adaptive_simpson
from .scenario import (
    NetworkPlan,
    Scenario,
    ScenarioSpec,
    SweepSpec,
    generate_scenario,
    plan_network,
    run_sweep,
)
from .tpd import PairContext, TpdSolution, evaluate_fixed_config, solve_pair

__version__ = "0.1.0"
