"""PHY timing and per-user loss assignment for an 802.11n multicast cell.

Channel time is counted in abstract units (default 1 unit = 10^-3 ms); one
broadcast of one view occupies ``tx_duration`` units on its channel.  Loss
probabilities come either from an explicit per-user matrix (test hook) or
from a distance-based sigmoid curve per rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .model import ChannelRate, TransmissionPlan, UserChannelState

#: 802.11n MCS 0-7 data rates at 40 MHz, one spatial stream, long guard
#: interval, in Mbit/s.
DEFAULT_RATES_MBPS: Tuple[float, ...] = (13.5, 27.0, 40.5, 54.0, 81.0, 108.0, 121.5, 135.0)

_USER_STREAM = 0x5EED


@dataclass(frozen=True)
class PhyConfig:
    """Cell-level radio parameters.

    ``time_unit_s`` sets the granularity of channel-time accounting (default
    10^-3 ms = 1 microsecond).  ``ofdm_data_symbols``, ``subcarriers`` and
    ``tx_power_dbm`` are carried for completeness and feed only the optional
    fixed per-broadcast overhead.
    """

    channel_bandwidth_mhz: float = 40.0
    carrier_ghz: float = 5.0
    num_channels: int = 2
    rates_mbps: Tuple[float, ...] = DEFAULT_RATES_MBPS
    view_size_bits: int = 64_000
    time_unit_s: float = 1e-6
    ofdm_data_symbols: int = 7
    subcarriers: int = 108
    tx_power_dbm: float = 16.0
    per_broadcast_overhead_units: int = 0

    def __post_init__(self) -> None:
        if len(self.rates_mbps) != 8:
            raise ValueError(f"expected 8 data rates, got {len(self.rates_mbps)}")
        if not all(a < b for a, b in zip(self.rates_mbps, self.rates_mbps[1:])):
            raise ValueError(f"rates must be strictly increasing: {self.rates_mbps}")
        if self.view_size_bits <= 0:
            raise ValueError("view_size_bits must be positive")
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        if self.time_unit_s <= 0:
            raise ValueError("time_unit_s must be positive")
        if self.per_broadcast_overhead_units < 0:
            raise ValueError("per_broadcast_overhead_units must be >= 0")

    @property
    def num_rates(self) -> int:
        return len(self.rates_mbps)

    def all_pairs(self) -> Tuple[ChannelRate, ...]:
        return tuple(
            (c, r) for c in range(self.num_channels) for r in range(self.num_rates)
        )


def tx_duration(phy: PhyConfig, rate_index: int) -> int:
    """Channel-time units one broadcast of one view occupies at this rate.

    ceil(view size / rate), with a small relative tolerance so that exact
    multiples do not round up from float error, plus the configured fixed
    per-broadcast overhead.
    """
    if not 0 <= rate_index < phy.num_rates:
        raise ValueError(f"rate index {rate_index} out of range 0..{phy.num_rates - 1}")
    bits_per_unit = phy.rates_mbps[rate_index] * 1e6 * phy.time_unit_s
    raw = phy.view_size_bits / bits_per_unit
    return math.ceil(raw * (1.0 - 1e-12)) + phy.per_broadcast_overhead_units


def plan_airtime(plan: TransmissionPlan, phy: PhyConfig) -> Dict[str, object]:
    """Channel-time accounting for a full frame plan.

    Returns the headline ``total`` (airtime summed across channels) and the
    per-channel breakdown plus its maximum (``makespan``), since orthogonal
    channels transmit concurrently.
    """
    per_channel: Dict[int, int] = {c: 0 for c in range(phy.num_channels)}
    for (view, c, r), n in plan.counts.items():
        per_channel[c] = per_channel.get(c, 0) + n * tx_duration(phy, r)
    total = sum(per_channel.values())
    makespan = max(per_channel.values()) if per_channel else 0
    return {"total": total, "per_channel": per_channel, "makespan": makespan}


@dataclass(frozen=True)
class LossModel:
    """Loss-probability source for new users.

    explicit-matrix mode returns the configured row verbatim; the
    distance-sigmoid mode places each user uniformly at random in the cell
    disk and maps (distance, rate) to a loss probability through

        p(d, r) = 1 / (1 + exp(-(d - d50[r]) / width))

    where the per-rate midpoints d50 fall linearly from ``d50_slowest_m`` at
    the most robust rate to ``d50_fastest_m`` at the fastest, so loss is
    non-decreasing in rate index at any fixed distance.  A small per-user,
    per-channel distance multiplier differentiates the orthogonal channels.
    """

    kind: str = "distance-sigmoid"
    matrix: Optional[Mapping[object, Mapping[ChannelRate, float]]] = None
    cell_radius_m: float = 50.0
    sigmoid_width_m: float = 6.0
    d50_slowest_m: float = 90.0
    d50_fastest_m: float = 18.0
    channel_jitter: float = 0.05

    def __post_init__(self) -> None:
        if self.kind not in ("explicit-matrix", "distance-sigmoid"):
            raise ValueError(f"unknown loss model kind {self.kind!r}")
        if self.kind == "explicit-matrix" and self.matrix is None:
            raise ValueError("explicit-matrix model requires a matrix")
        if self.kind == "distance-sigmoid":
            if self.cell_radius_m <= 0 or self.sigmoid_width_m <= 0:
                raise ValueError("cell radius and sigmoid width must be positive")
            if self.d50_slowest_m < self.d50_fastest_m:
                raise ValueError(
                    "d50 must not increase with rate index "
                    f"({self.d50_slowest_m} < {self.d50_fastest_m})"
                )
            if not 0.0 <= self.channel_jitter < 1.0:
                raise ValueError("channel_jitter must be in [0, 1)")

    @staticmethod
    def explicit(matrix: Mapping[object, Mapping[ChannelRate, float]]) -> "LossModel":
        return LossModel(kind="explicit-matrix", matrix=matrix)


def sigmoid_loss(model: LossModel, distance_m: float, rate_index: int, num_rates: int) -> float:
    """Distance-to-loss curve for one rate."""
    span = model.d50_slowest_m - model.d50_fastest_m
    frac = rate_index / (num_rates - 1) if num_rates > 1 else 0.0
    d50 = model.d50_slowest_m - span * frac
    return 1.0 / (1.0 + math.exp(-(distance_m - d50) / model.sigmoid_width_m))


def assign_user_loss(
    model: LossModel,
    user_id: object,
    phy: PhyConfig,
    seed: int,
) -> UserChannelState:
    """Produce a user's full loss map, deterministically from (seed, user_id).

    In distance-sigmoid mode the user's position is drawn uniformly in the
    cell disk from a substream keyed by the user id, so the same (seed, user)
    always yields the same channel state regardless of arrival order.
    """
    if model.kind == "explicit-matrix":
        row = model.matrix.get(user_id)
        if row is None:
            raise ValueError(f"loss matrix has no row for user {user_id!r}")
        expected = set(phy.all_pairs())
        if set(row) != expected:
            raise ValueError(
                f"loss matrix row for user {user_id!r} does not cover the "
                f"{phy.num_channels}x{phy.num_rates} (channel, rate) grid"
            )
        return UserChannelState(user_id=user_id, loss=dict(row))

    g = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((int(seed), _USER_STREAM, _key_of(user_id))))
    )
    # uniform over the disk: radius scales with sqrt of a uniform draw
    distance = model.cell_radius_m * math.sqrt(g.random())
    loss: Dict[ChannelRate, float] = {}
    for c in range(phy.num_channels):
        factor = 1.0 + model.channel_jitter * (2.0 * g.random() - 1.0)
        for r in range(phy.num_rates):
            loss[(c, r)] = sigmoid_loss(model, distance * factor, r, phy.num_rates)
    return UserChannelState(user_id=user_id, loss=loss)


def _key_of(user_id: object) -> int:
    if isinstance(user_id, int):
        return user_id
    return abs(hash(str(user_id))) % (1 << 63)
