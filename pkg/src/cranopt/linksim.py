"""Slot-level Monte Carlo validation of the link and queue model.

Two simulators share the channel machinery:

* block level: i.i.d. conditioned SNR draws, AMC selection at the solved
  BER ceiling, Bernoulli block failures, and an ARQ cascade with a fresh
  fading block per attempt. Estimates the per-transmission BLER and the
  residual loss after X attempts with binomial standard errors.

* queue level: a fluid FIFO queue at whole-bit granularity fed at a
  constant rate, drained by the per-slot AMC service, with head-of-line
  bits discarded once their waiting time exceeds the queue budget.
  Retransmission RB spend is tallied against the slot that produced the
  failure (steady-state accounting).

Arrivals and per-slot service are quantized to whole bits so that the
conservation identity arrived = served + dropped + backlog holds exactly
in integer arithmetic. Channel draws are conditioned on clearing the
bottom MCS threshold by default, matching the analytic normalization; the
unconditioned mode delivers zero service in outage slots (no transmission,
no RB spend) to expose the modeling gap.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import amc
from .amc import ChannelModel, McsTable, SystemParams
from .qos import QosRequirement
from .tpd import TpdSolution

__all__ = [
    "SimConfig",
    "QueueState",
    "SlotTrace",
    "BlerStats",
    "QueueStats",
    "run_block_sim",
    "run_queue_sim",
    "measure_bandwidth",
]


@dataclass(frozen=True)
class SimConfig:
    """Replication size and randomness; the seed fully determines a run."""

    n_slots: int = 100_000
    n_blocks: int = 1_000_000
    seed: int = 0
    conditioned: bool = True

    def __post_init__(self):
        if self.n_slots < 1 or self.n_blocks < 1:
            raise ValueError("n_slots and n_blocks must be positive")


@dataclass(frozen=True)
class BlerStats:
    """Empirical link-layer error rates with binomial standard errors."""

    per_transmission_bler: float
    per_transmission_se: float
    residual_rate: float            # all X attempts failed
    residual_se: float
    n_blocks: int
    transmissions: int


@dataclass(frozen=True)
class SlotTrace:
    """Per-slot record arrays of one queue-level replication."""

    snr: np.ndarray                 # linear, one draw per slot
    mcs_index: np.ndarray           # -1 marks outage
    rbs_initial: np.ndarray
    rbs_retx: np.ndarray
    bits_served: np.ndarray
    bits_dropped: np.ndarray

    def __len__(self) -> int:
        return len(self.snr)


@dataclass(frozen=True)
class QueueStats:
    """Aggregates of one queue-level replication (bits are exact integers)."""

    arrived_bits: int
    served_bits: int
    deadline_dropped_bits: int
    residual_lost_bits: int         # served but undecodable after X attempts
    final_backlog_bits: int
    lvp: float                      # deadline drops / arrivals
    residual_loss_ratio: float      # residual losses / arrivals
    mean_backlog_bits: float
    mean_rbs_per_slot: float
    rbs_per_slot_se: float
    bandwidth_hz: float
    queue_budget_slots: int
    max_served_age_slots: int       # -1 when nothing was served
    min_dropped_age_slots: int      # -1 when nothing was dropped
    n_slots: int
    trace: SlotTrace


class QueueState:
    """FIFO fluid queue at whole-bit granularity with deadline discard."""

    def __init__(self):
        self.segments: deque[list[int]] = deque()  # [bits, arrival_slot]
        self.backlog = 0
        self.deadline_dropped = 0
        self.max_served_age = -1
        self.min_dropped_age = -1

    def enqueue(self, bits: int, slot: int) -> None:
        if bits > 0:
            self.segments.append([bits, slot])
            self.backlog += bits

    def drop_expired(self, now: int, max_wait_slots: int) -> int:
        """Discard head segments that have waited longer than the budget."""
        dropped = 0
        while self.segments and now - self.segments[0][1] > max_wait_slots:
            bits, arrival = self.segments.popleft()
            age = now - arrival
            if self.min_dropped_age < 0 or age < self.min_dropped_age:
                self.min_dropped_age = age
            dropped += bits
        self.backlog -= dropped
        self.deadline_dropped += dropped
        return dropped

    def serve(self, now: int, capacity_bits: int) -> int:
        """Drain up to ``capacity_bits`` from the head, oldest first."""
        served = 0
        while capacity_bits > 0 and self.segments:
            seg = self.segments[0]
            take = seg[0] if seg[0] <= capacity_bits else capacity_bits
            seg[0] -= take
            capacity_bits -= take
            served += take
            age = now - seg[1]
            if age > self.max_served_age:
                self.max_served_age = age
            if seg[0] == 0:
                self.segments.popleft()
        self.backlog -= served
        return served


def _attempt_bler(gammas: np.ndarray, indices: np.ndarray, block_bits: int,
                  table: McsTable) -> np.ndarray:
    """Vectorized BLER per (draw, mode) pair; outage entries (index -1) get 1.0."""
    v = table.eff_array[np.maximum(indices, 0)]
    pb = 0.2 * np.exp(-1.5 * gammas / (2.0**v - 1.0))
    bler = -np.expm1(block_bits * np.log1p(-pb))
    return np.where(indices < 0, 1.0, bler)


def run_block_sim(
    solution: TpdSolution,
    channel: ChannelModel,
    params: SystemParams,
    table: McsTable,
    cfg: SimConfig,
) -> BlerStats:
    """Estimate per-transmission and residual BLER at the solved operating point.

    Draws are conditioned on no outage (the regime the analytic averages
    describe); every ARQ attempt sees an independent fading block, so all
    n_blocks * X attempt outcomes pool into the per-transmission estimate.
    """
    rng = np.random.default_rng(cfg.seed)
    thresholds = amc.switching_thresholds(solution.ber_threshold, table)
    x = solution.transmissions
    gammas = amc.sample_snr(
        channel.mean_snr, rng, size=(cfg.n_blocks, x), floor=float(thresholds[0])
    )
    indices = amc.select_mcs_indices(gammas, thresholds)
    bler = _attempt_bler(gammas, indices, params.code_block_bits, table)
    fails = rng.random((cfg.n_blocks, x)) < bler

    per_tx = float(fails.mean())
    n_attempts = fails.size
    residual = float(fails.all(axis=1).mean())
    return BlerStats(
        per_transmission_bler=per_tx,
        per_transmission_se=math.sqrt(max(per_tx * (1 - per_tx), 0.0) / n_attempts),
        residual_rate=residual,
        residual_se=math.sqrt(max(residual * (1 - residual), 0.0) / cfg.n_blocks),
        n_blocks=cfg.n_blocks,
        transmissions=x,
    )


def run_queue_sim(
    solution: TpdSolution,
    qos_req: QosRequirement,
    channel: ChannelModel,
    params: SystemParams,
    table: McsTable,
    cfg: SimConfig,
) -> QueueStats:
    """Replay the per-slot queue under the solved configuration.

    Per slot: constant arrivals enqueue; expired head-of-line bits drop;
    the slot's AMC service drains the queue; the transmitted block runs
    its ARQ cascade, spending one initial-allocation worth of RBs per
    attempt, and a fully failed cascade marks the slot's served bits as
    residual losses.
    """
    rng = np.random.default_rng(cfg.seed)
    thresholds = amc.switching_thresholds(solution.ber_threshold, table)
    floor = float(thresholds[0]) if cfg.conditioned else 0.0
    n = cfg.n_slots
    r = solution.rb_count
    x = solution.transmissions

    snr = amc.sample_snr(channel.mean_snr, rng, size=n, floor=floor)
    indices = amc.select_mcs_indices(snr, thresholds)
    psi = table.info_bits_per_rb(params)
    capacity = np.where(indices >= 0, np.floor(r * psi[np.maximum(indices, 0)]), 0.0)
    capacity = capacity.astype(np.int64)

    # ARQ cascade: attempt 1 rides the slot's own fading block, later
    # attempts draw fresh blocks with the same conditioning.
    bler = np.empty((n, x))
    bler[:, 0] = _attempt_bler(snr, indices, params.code_block_bits, table)
    if x > 1:
        g2 = amc.sample_snr(channel.mean_snr, rng, size=(n, x - 1), floor=floor)
        j2 = amc.select_mcs_indices(g2, thresholds)
        bler[:, 1:] = _attempt_bler(g2, j2, params.code_block_bits, table)
    fails = rng.random((n, x)) < bler
    success_any = ~fails.all(axis=1)
    first_success = np.argmax(~fails, axis=1)
    attempts = np.where(success_any, first_success + 1, x).astype(np.int64)
    residual_fail = ~success_any

    arrivals = int(round(qos_req.arrival_rate * params.slot_duration))
    if arrivals < 1:
        raise ValueError("arrival rate below one bit per slot")
    max_wait = int(math.floor(solution.queue_budget / params.slot_duration + 1e-9))

    queue = QueueState()
    served_arr = np.zeros(n, dtype=np.int64)
    dropped_arr = np.zeros(n, dtype=np.int64)
    rbs_initial = np.zeros(n, dtype=np.int64)
    rbs_retx = np.zeros(n, dtype=np.int64)
    residual_lost = 0
    backlog_sum = 0

    cap_list = capacity.tolist()
    attempts_list = attempts.tolist()
    residual_list = residual_fail.tolist()
    for t in range(n):
        queue.enqueue(arrivals, t)
        dropped_arr[t] = queue.drop_expired(t, max_wait)
        served = queue.serve(t, cap_list[t])
        served_arr[t] = served
        if served > 0:
            rbs_initial[t] = r
            rbs_retx[t] = r * (attempts_list[t] - 1)
            if residual_list[t]:
                residual_lost += served
        backlog_sum += queue.backlog

    arrived = arrivals * n
    served_total = int(served_arr.sum())
    dropped_total = int(dropped_arr.sum())
    total_rbs = rbs_initial + rbs_retx
    mean_rbs = float(total_rbs.mean())
    rb_se = float(total_rbs.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0

    trace = SlotTrace(
        snr=snr,
        mcs_index=indices.astype(np.int64),
        rbs_initial=rbs_initial,
        rbs_retx=rbs_retx,
        bits_served=served_arr,
        bits_dropped=dropped_arr,
    )
    return QueueStats(
        arrived_bits=arrived,
        served_bits=served_total,
        deadline_dropped_bits=dropped_total,
        residual_lost_bits=residual_lost,
        final_backlog_bits=queue.backlog,
        lvp=dropped_total / arrived,
        residual_loss_ratio=residual_lost / arrived,
        mean_backlog_bits=backlog_sum / n,
        mean_rbs_per_slot=mean_rbs,
        rbs_per_slot_se=rb_se,
        bandwidth_hz=params.rb_bandwidth_hz * mean_rbs,
        queue_budget_slots=max_wait,
        max_served_age_slots=queue.max_served_age,
        min_dropped_age_slots=queue.min_dropped_age,
        n_slots=n,
        trace=trace,
    )


def measure_bandwidth(trace: SlotTrace, params: SystemParams) -> tuple[float, float]:
    """(mean RBs/slot, bandwidth in Hz) of a recorded trace."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    mean_rbs = float((trace.rbs_initial + trace.rbs_retx).mean())
    return mean_rbs, params.rb_bandwidth_hz * mean_rbs
