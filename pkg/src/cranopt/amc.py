"""Adaptive modulation and coding over a Rayleigh block-fading channel.

The link adapts its MCS to the instantaneous SNR subject to a raw BER
ceiling ``rho``: mode j is usable above the switching threshold

    gamma_j = (2/3) (1 - 2**v_j) ln(5 rho),

and the realized BER at SNR gamma under mode j is

    Pb(j, gamma) = (1/5) exp(-1.5 gamma / (2**v_j - 1)),

so Pb equals rho exactly at the switching point. Block errors follow from
the per-bit rate over an L-bit code block. SNR is exponentially
distributed (Rayleigh power fading) with mean ``mean_snr``; all channel
averages condition on at least the bottom mode being usable
(gamma >= gamma_0) and normalize by that probability.

Units: SNR is linear everywhere in this module; convert at the boundary
with :func:`snr_from_db` / :func:`snr_to_db`.
"""

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources

import numpy as np

from .quadrature import QuadratureError, adaptive_simpson

__all__ = [
    "McsTable",
    "ChannelModel",
    "SystemParams",
    "MgfContext",
    "QuadratureError",
    "snr_from_db",
    "snr_to_db",
    "switching_thresholds",
    "select_mcs",
    "select_mcs_indices",
    "bit_error_rate",
    "block_error_rate",
    "mcs_usable_probability",
    "segment_weights",
    "average_bler",
    "expected_info_per_rb",
    "ec_mgf",
    "ec_log_mgf",
    "shannon_gap_efficiency",
    "sample_snr",
]

# Largest accepted BER ceiling: at rho = 0.2 every switching threshold
# degenerates to 0 (ln(5 rho) = 0); beyond it thresholds turn negative.
RHO_MAX = 0.2

# Top integration segment is cut where the exponential SNR weight drops to
# 1e-16 of its value at the last threshold; the discarded tail mass is
# bounded by the same factor.
TAIL_EPS = 1e-16

DEFAULT_TABLE_RESOURCE = "mcs_nr_256qam.csv"


def snr_from_db(db) -> float | np.ndarray:
    """dB -> linear power ratio."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def snr_to_db(linear) -> float | np.ndarray:
    """Linear power ratio -> dB."""
    return 10.0 * np.log10(linear)


@dataclass(frozen=True)
class McsTable:
    """Ordered MCS modes; index j carries spectral efficiency v_j [bits/symbol]."""

    efficiencies: tuple[float, ...]

    def __post_init__(self):
        if not self.efficiencies:
            raise ValueError("MCS table must be non-empty")
        eff = self.efficiencies
        if any(e <= 0 for e in eff):
            raise ValueError("spectral efficiencies must be positive")
        if any(b <= a for a, b in zip(eff, eff[1:])):
            raise ValueError("spectral efficiencies must be strictly increasing")

    @property
    def max_index(self) -> int:
        return len(self.efficiencies) - 1

    def __len__(self) -> int:
        return len(self.efficiencies)

    @cached_property
    def eff_array(self) -> np.ndarray:
        arr = np.asarray(self.efficiencies, dtype=float)
        arr.setflags(write=False)
        return arr

    def info_bits_per_rb(self, params: "SystemParams") -> np.ndarray:
        """psi_j = alpha * beta * v_j, bits carried by one RB in mode j."""
        psi = params.subcarriers_per_rb * params.symbols_per_rb * self.eff_array
        psi.setflags(write=False)
        return psi

    @classmethod
    def from_records(cls, records) -> "McsTable":
        """Build from (index, spectral_efficiency) pairs; indices must run 0..J."""
        rows = sorted(records)
        indices = [int(i) for i, _ in rows]
        if indices != list(range(len(rows))):
            raise ValueError(f"MCS indices must run 0..J contiguously, got {indices}")
        return cls(tuple(float(v) for _, v in rows))

    @classmethod
    def from_csv(cls, path) -> "McsTable":
        """Read a table file: one ``index,spectral_efficiency`` record per mode."""
        records = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                records.append((int(row[0]), float(row[1])))
        return cls.from_records(records)

    @classmethod
    def default(cls) -> "McsTable":
        """The bundled 28-mode NR 256QAM table."""
        ref = resources.files(__package__).joinpath("data", DEFAULT_TABLE_RESOURCE)
        with resources.as_file(ref) as path:
            return cls.from_csv(path)


@dataclass(frozen=True)
class ChannelModel:
    """Rayleigh-fading link described by its mean SNR (linear)."""

    mean_snr: float

    def __post_init__(self):
        if not self.mean_snr > 0:
            raise ValueError(f"mean SNR must be positive, got {self.mean_snr}")

    @classmethod
    def from_db(cls, mean_snr_db: float) -> "ChannelModel":
        return cls(mean_snr=snr_from_db(mean_snr_db))

    @property
    def mean_snr_db(self) -> float:
        return snr_to_db(self.mean_snr)


@dataclass(frozen=True)
class SystemParams:
    """Slot/RB/frame constants of the radio system.

    Defaults follow the 30 kHz subcarrier-spacing numerology: 0.5 ms slots,
    12 subcarriers x 14 symbols per RB, 273 RBs total.
    """

    slot_duration: float = 0.5e-3       # [s]
    feedback_rtt: float = 1.5e-3        # ACK/NACK turnaround [s]
    subcarriers_per_rb: int = 12
    symbols_per_rb: int = 14
    data_symbols_per_slot: int = 14
    subcarrier_spacing: float = 30e3    # [Hz]
    total_rbs: int = 273
    code_block_bits: int = 1024
    max_transmissions: int = 8

    def __post_init__(self):
        for name in (
            "slot_duration", "feedback_rtt", "subcarriers_per_rb",
            "symbols_per_rb", "data_symbols_per_slot", "subcarrier_spacing",
            "total_rbs", "code_block_bits", "max_transmissions",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def rb_bandwidth_hz(self) -> float:
        """Bandwidth equivalent of one RB/slot of allocation."""
        return (
            self.subcarriers_per_rb
            * self.symbols_per_rb
            * self.subcarrier_spacing
            / self.data_symbols_per_slot
        )


@dataclass(frozen=True)
class MgfContext:
    """Arguments of the service-process MGF E[exp(-theta * r * psi)]."""

    ber_threshold: float    # rho, in (0, 0.2)
    rb_count: int           # r >= 1
    latency_exponent: float  # theta [1/bits], >= 0

    def __post_init__(self):
        _check_rho(self.ber_threshold)
        if self.rb_count < 1:
            raise ValueError("rb_count must be >= 1")
        if self.latency_exponent < 0:
            raise ValueError("latency_exponent must be >= 0")


def _check_rho(rho: float) -> None:
    if not (0.0 < rho <= RHO_MAX):
        raise ValueError(f"BER threshold must lie in (0, {RHO_MAX}], got {rho}")


def switching_thresholds(rho: float, table: McsTable) -> np.ndarray:
    """Mode switching thresholds gamma_j, with a +inf sentinel appended.

    Strictly increasing for rho < 0.2; at the rho = 0.2 boundary all
    thresholds collapse to zero.
    """
    _check_rho(rho)
    g = (2.0 / 3.0) * (1.0 - 2.0 ** table.eff_array) * math.log(5.0 * rho)
    return np.append(g, np.inf)


def select_mcs(gamma: float, thresholds: np.ndarray) -> int | None:
    """Highest usable mode at SNR ``gamma``; None on outage (gamma < gamma_0)."""
    j = int(np.searchsorted(thresholds, gamma, side="right")) - 1
    return None if j < 0 else min(j, len(thresholds) - 2)


def select_mcs_indices(gammas: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Vectorized :func:`select_mcs`; outage is marked -1."""
    j = np.searchsorted(thresholds, gammas, side="right") - 1
    return np.minimum(j, len(thresholds) - 2)


def bit_error_rate(j: int, gamma, table: McsTable):
    """Raw BER of mode j at SNR gamma (array-compatible in gamma)."""
    v = table.efficiencies[j]
    return 0.2 * np.exp(-1.5 * np.asarray(gamma, dtype=float) / (2.0 ** v - 1.0))


def block_error_rate(j: int, gamma, block_bits: int, table: McsTable):
    """BLER of an L-bit block: 1 - (1 - Pb)**L, computed cancellation-free."""
    if block_bits < 1:
        raise ValueError("block_bits must be >= 1")
    pb = bit_error_rate(j, gamma, table)
    return -np.expm1(block_bits * np.log1p(-pb))


def mcs_usable_probability(rho: float, mean_snr: float, table: McsTable) -> float:
    """P_T: probability that the channel clears the bottom switching threshold."""
    g0 = switching_thresholds(rho, table)[0]
    return math.exp(-g0 / mean_snr)


def segment_weights(rho: float, mean_snr: float, table: McsTable) -> np.ndarray:
    """Unnormalized probability mass of each mode's SNR segment.

    Entry j is exp(-gamma_j / mean) - exp(-gamma_{j+1} / mean); the weights
    telescope to P_T exactly.
    """
    thr = switching_thresholds(rho, table)
    expo = np.exp(-thr / mean_snr)  # exp(-inf) -> 0 for the sentinel
    return expo[:-1] - expo[1:]


def average_bler(
    rho: float,
    mean_snr: float,
    block_bits: int,
    table: McsTable,
    rel_tol: float = 1e-10,
    max_depth: int = 40,
) -> float:
    """Channel-averaged BLER, conditioned on no outage.

    Integrates BLER(j, gamma) against the SNR density over each mode
    segment by adaptive Simpson quadrature, then normalizes by P_T. The
    top segment's infinite tail is truncated where the SNR weight falls to
    TAIL_EPS of its value at the last threshold.
    """
    thr = switching_thresholds(rho, table)[:-1]
    p_t = math.exp(-thr[0] / mean_snr)
    upper = thr[-1] + mean_snr * math.log(1.0 / TAIL_EPS)
    bounds = np.append(thr, upper)

    inv_mean = 1.0 / mean_snr
    total = 0.0
    for j in range(len(thr)):
        def integrand(g, j=j):
            return block_error_rate(j, g, block_bits, table) * inv_mean * np.exp(-g * inv_mean)

        try:
            total += adaptive_simpson(integrand, bounds[j], bounds[j + 1], rel_tol, max_depth)
        except QuadratureError as exc:
            raise QuadratureError(
                f"average_bler segment j={j} (rho={rho}, mean_snr={mean_snr}): {exc}",
                intervals=exc.intervals,
            ) from exc
    return total / p_t


def expected_info_per_rb(
    rho: float, mean_snr: float, params: SystemParams, table: McsTable
) -> float:
    """E[psi]: mean bits per RB under AMC, conditioned on no outage."""
    w = segment_weights(rho, mean_snr, table)
    p_t = mcs_usable_probability(rho, mean_snr, table)
    return float(w @ table.info_bits_per_rb(params)) / p_t


def ec_log_mgf(
    ctx: MgfContext, mean_snr: float, params: SystemParams, table: McsTable
) -> float:
    """log E[exp(-theta * r * psi)], evaluated in shifted form so the result
    stays finite for large theta * r."""
    w = segment_weights(ctx.ber_threshold, mean_snr, table)
    p_t = mcs_usable_probability(ctx.ber_threshold, mean_snr, table)
    exponents = -ctx.latency_exponent * ctx.rb_count * table.info_bits_per_rb(params)
    shift = exponents[0]  # psi increasing => largest exponent is at j = 0
    return float(shift + np.log(np.dot(w, np.exp(exponents - shift)) / p_t))


def ec_mgf(ctx: MgfContext, mean_snr: float, params: SystemParams, table: McsTable) -> float:
    """E[exp(-theta * r * psi)] over the conditioned SNR distribution; in (0, 1]."""
    return math.exp(ec_log_mgf(ctx, mean_snr, params, table))


def shannon_gap_efficiency(gamma: float, rho: float) -> float:
    """Gap-adjusted Shannon efficiency log2(1 + gamma/varrho), varrho = -2 ln(5 rho)/3.

    Reference curve for idealized (infinite-length) coding comparisons.
    """
    _check_rho(rho)
    if rho == RHO_MAX:
        raise ValueError("gap coefficient degenerates at rho = 0.2")
    varrho = -2.0 * math.log(5.0 * rho) / 3.0
    return float(np.log2(1.0 + np.asarray(gamma, dtype=float) / varrho))


def sample_snr(
    mean_snr: float,
    rng: np.random.Generator,
    size: int | None = None,
    floor: float = 0.0,
):
    """Exponential SNR draw(s) with mean ``mean_snr``.

    A positive ``floor`` restricts draws to gamma >= floor, matching the
    conditioned channel averages; by memorylessness this is exact
    (floor + fresh exponential), no rejection needed.
    """
    if mean_snr <= 0:
        raise ValueError("mean_snr must be positive")
    return floor + rng.exponential(mean_snr, size=size)
