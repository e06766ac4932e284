"""Core domain types for multi-view multicast with DIBR view synthesis.

Views are indexed 1..M.  A client that misses its desired view can still
synthesize it from a received left view ``a`` and right view ``b`` whenever
``a < desired < b`` and ``b - a <= dibr_range``.  Everything here is an
immutable value type plus pure probability helpers; all randomness and state
live elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Tuple

#: (channel id, rate index) pair identifying one PHY resource.
ChannelRate = Tuple[int, int]


@dataclass(frozen=True)
class SynthesisConfig:
    """Session-wide view layout and synthesis constraint.

    total_views: number of selectable views, indexed 1..total_views.
    dibr_range: maximum index distance between the left and right views used
        for synthesis; views strictly between two received views at distance
        <= dibr_range can all be synthesized at acceptable quality.
    spacing: delivery stride used only by the spaced-transmission analysis
        (one view transmitted out of every ``spacing`` consecutive views).
    """

    total_views: int
    dibr_range: int
    spacing: int = 1

    def __post_init__(self) -> None:
        if self.total_views < 1:
            raise ValueError(f"total_views must be >= 1, got {self.total_views}")
        if self.dibr_range < 1:
            raise ValueError(f"dibr_range must be >= 1, got {self.dibr_range}")
        if not 1 <= self.spacing <= self.dibr_range:
            raise ValueError(
                f"spacing must be in 1..dibr_range={self.dibr_range}, got {self.spacing}"
            )

    def check_view(self, view: int) -> None:
        if not 1 <= view <= self.total_views:
            raise ValueError(
                f"view index {view} out of range 1..{self.total_views}"
            )


@dataclass(frozen=True)
class UserChannelState:
    """Per-user broadcast loss probabilities, keyed by (channel, rate index).

    The key set doubles as the user's capability sets: a (channel, rate)
    absent from ``loss`` cannot be received by this user at all.
    """

    user_id: object
    loss: Mapping[ChannelRate, float]

    def __post_init__(self) -> None:
        if not self.loss:
            raise ValueError("loss mapping must cover at least one (channel, rate)")
        for pair, p in self.loss.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"loss probability {p} for {pair} outside [0, 1]")

    @property
    def channels(self) -> frozenset:
        return frozenset(c for c, _ in self.loss)

    @property
    def rates(self) -> frozenset:
        return frozenset(r for _, r in self.loss)


@dataclass(frozen=True)
class TransmissionPlan:
    """Per-frame broadcast counts: (view, channel, rate index) -> count.

    Absent entries mean zero broadcasts.  A view is transmitted iff some
    count for it is positive.
    """

    counts: Mapping[Tuple[int, int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned = {}
        for key, n in self.counts.items():
            if n < 0:
                raise ValueError(f"broadcast count for {key} must be >= 0, got {n}")
            if n > 0:
                cleaned[key] = int(n)
        object.__setattr__(self, "counts", cleaned)

    def count(self, view: int, channel: int, rate: int) -> int:
        return self.counts.get((view, channel, rate), 0)

    def views(self) -> Tuple[int, ...]:
        """Views with at least one broadcast, ascending."""
        return tuple(sorted({v for v, _, _ in self.counts}))

    def is_transmitted(self, view: int) -> bool:
        return any(v == view for v, _, _ in self.counts)

    def total_broadcasts(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class APTransmissionDistribution:
    """Randomized AP schedule: per (channel, rate), a distribution over the
    number of times a view is broadcast within one frame time."""

    probs: Mapping[ChannelRate, Mapping[int, float]]

    def __post_init__(self) -> None:
        for pair, dist in self.probs.items():
            if not dist:
                raise ValueError(f"empty count distribution for {pair}")
            total = 0.0
            for n, p in dist.items():
                if n < 0:
                    raise ValueError(f"negative broadcast count {n} for {pair}")
                if p < 0.0:
                    raise ValueError(f"negative probability {p} for {pair}")
                total += p
            if abs(total - 1.0) > 1e-9:
                raise ValueError(
                    f"count distribution for {pair} sums to {total}, expected 1"
                )


@dataclass(frozen=True)
class Subscription:
    """The ordered set of views a user wants to play back."""

    user_id: object
    desired_views: Tuple[int, ...]

    def __post_init__(self) -> None:
        views = tuple(int(v) for v in self.desired_views)
        if not views:
            raise ValueError("a subscription must name at least one view")
        if len(set(views)) != len(views):
            raise ValueError(f"duplicate desired views in {views}")
        if any(v < 1 for v in views):
            raise ValueError(f"view indices must be >= 1, got {views}")
        object.__setattr__(self, "desired_views", views)

    def __len__(self) -> int:
        return len(self.desired_views)


def combined_view_loss_prob(
    user: UserChannelState, plan: TransmissionPlan, view: int
) -> float:
    """Probability that ``user`` receives none of ``view``'s broadcasts.

    Losses are independent across broadcasts, channels, and rates, so the
    result is the product of per-(channel, rate) loss probabilities raised to
    the scheduled broadcast counts.  A view with no broadcasts audible to the
    user has loss probability exactly 1 (empty product over zero receptions).
    """
    if view < 1:
        raise ValueError(f"view index {view} out of range (must be >= 1)")
    out = 1.0
    for (channel, rate), p in user.loss.items():
        n = plan.count(view, channel, rate)
        if n:
            out *= p**n
    return out


def combined_loss_prob_randomized(
    user: UserChannelState, ap_dist: APTransmissionDistribution
) -> float:
    """View loss probability under a randomized AP broadcast schedule.

    For each (channel, rate) audible to the user, the chance of missing the
    view there is sum_n P(n broadcasts) * p^n; independence across resources
    multiplies these together.
    """
    out = 1.0
    for pair, p in user.loss.items():
        dist = ap_dist.probs.get(pair)
        if dist is None:
            raise ValueError(f"AP distribution missing entry for {pair}")
        out *= sum(pn * p**n for n, pn in dist.items())
    return out
