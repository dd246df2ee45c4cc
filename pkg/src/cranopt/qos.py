"""Effective-capacity statistics for statistical delay QoS.

A queue fed at constant rate ``lambda`` [bits/s] and drained by the fading
service process ``r * psi`` [bits/slot] admits an exponential tail bound on
queuing delay governed by the latency exponent theta [1/bits]:

    Pr{delay > d} ~ phi * exp(-theta * lambda * d),   phi = lambda T_s / E[r psi],

and the largest constant arrival rate sustainable at exponent theta is the
effective capacity

    EC(theta) = -ln E[exp(-theta * r * psi)] / (theta * T_s).

External interfaces take rates in bits/second and delays in seconds;
internally arrivals are converted once to bits/slot (lambda * T_s) so they
compare directly against per-slot service.
"""

import math
from dataclasses import dataclass

from . import amc
from .amc import ChannelModel, McsTable, MgfContext, SystemParams

__all__ = [
    "QosRequirement",
    "DelaySplit",
    "delay_split",
    "latency_exponent",
    "latency_exponent_from_info",
    "effective_capacity",
    "lvp_estimate",
    "feasibility_window",
]


@dataclass(frozen=True)
class QosRequirement:
    """Per-user traffic description and statistical QoS targets."""

    arrival_rate: float          # constant source rate [bits/s]
    delay_budget: float          # end-to-end delay bound D_th [s]
    lvp_threshold: float         # tolerated delay-violation probability
    decode_bler_threshold: float = 1e-3  # residual block-loss budget after ARQ

    def __post_init__(self):
        if not self.arrival_rate > 0:
            raise ValueError("arrival_rate must be positive")
        if not self.delay_budget > 0:
            raise ValueError("delay_budget must be positive")
        for name in ("lvp_threshold", "decode_bler_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    def validate_against(self, params: SystemParams) -> None:
        """At least one transmission round must fit inside the delay budget."""
        per_round = params.slot_duration + params.feedback_rtt
        if self.delay_budget <= per_round:
            raise ValueError(
                f"delay budget {self.delay_budget} s cannot fit one "
                f"transmission round of {per_round} s"
            )


@dataclass(frozen=True)
class DelaySplit:
    """Division of the delay budget into service rounds and queue headroom."""

    transmissions: int      # X
    queue_budget: float     # D_q_th = D_th - X (T_s + T_rtt) [s]
    service_delay: float    # X (T_s + T_rtt) [s]


def delay_split(delay_budget: float, transmissions: int, params: SystemParams) -> DelaySplit | None:
    """Split the total budget for X transmissions; None if nothing is left to queue."""
    if transmissions < 1:
        raise ValueError("transmissions must be >= 1")
    service = transmissions * (params.slot_duration + params.feedback_rtt)
    queue = delay_budget - service
    if queue <= 0.0:
        return None
    return DelaySplit(transmissions=transmissions, queue_budget=queue, service_delay=service)


def latency_exponent_from_info(
    mean_info_bits: float,
    arrival_rate: float,
    queue_budget: float,
    lvp_threshold: float,
    params: SystemParams,
) -> float:
    """Exponent theta that makes the delay-tail estimate hit the LVP target.

    ``mean_info_bits`` is E[r psi] in bits/slot. The result is positive
    exactly when E[r psi] < lambda T_s / eps; theta <= 0 signals that the
    service mean sits outside the feasibility window and the caller should
    treat the configuration as infeasible.
    """
    if queue_budget <= 0:
        raise ValueError("queue_budget must be positive")
    arrivals_per_slot = arrival_rate * params.slot_duration
    return -math.log(lvp_threshold * mean_info_bits / arrivals_per_slot) / (
        arrival_rate * queue_budget
    )


def latency_exponent(
    rb_count: int,
    rho: float,
    arrival_rate: float,
    queue_budget: float,
    lvp_threshold: float,
    channel: ChannelModel,
    params: SystemParams,
    table: McsTable,
) -> float:
    """Latency exponent for an ``rb_count``-RB allocation at BER ceiling ``rho``."""
    e_rpsi = rb_count * amc.expected_info_per_rb(rho, channel.mean_snr, params, table)
    return latency_exponent_from_info(
        e_rpsi, arrival_rate, queue_budget, lvp_threshold, params
    )


def effective_capacity(
    rho: float,
    rb_count: int,
    theta: float,
    channel: ChannelModel,
    params: SystemParams,
    table: McsTable,
) -> float:
    """Effective capacity [bits/s] of the AMC service process at exponent theta > 0."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    ctx = MgfContext(ber_threshold=rho, rb_count=rb_count, latency_exponent=theta)
    log_mgf = amc.ec_log_mgf(ctx, channel.mean_snr, params, table)
    return -log_mgf / (theta * params.slot_duration)


def lvp_estimate(
    theta: float,
    arrival_rate: float,
    queue_budget: float,
    mean_info_bits: float,
    params: SystemParams,
) -> float:
    """Delay-violation probability estimate phi * exp(-theta lambda D), clamped to [0, 1].

    phi = lambda T_s / E[r psi] is the queue non-empty probability; phi > 1
    (service mean below the arrival rate) only occurs outside the
    feasibility window, where the clamp applies.
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    phi = arrival_rate * params.slot_duration / mean_info_bits
    est = phi * math.exp(-theta * arrival_rate * queue_budget)
    return min(max(est, 0.0), 1.0)


def feasibility_window(
    mean_info_bits: float,
    arrival_rate: float,
    lvp_threshold: float,
    params: SystemParams,
) -> bool:
    """Strict window lambda T_s < E[r psi] < lambda T_s / eps required at an optimum."""
    arrivals_per_slot = arrival_rate * params.slot_duration
    return arrivals_per_slot < mean_info_bits < arrivals_per_slot / lvp_threshold
