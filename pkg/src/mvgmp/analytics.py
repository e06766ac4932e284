"""Closed-form view-failure probabilities and obtained-view fractions.

All results here are exact formulas over the erasure model in :mod:`.model`;
independent brute-force and Monte Carlo references live in :mod:`.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from .model import (
    Subscription,
    SynthesisConfig,
    TransmissionPlan,
    UserChannelState,
    combined_view_loss_prob,
)


@dataclass(frozen=True)
class AlphaResult:
    """An obtained-view fraction together with how it was derived."""

    value: float
    kind: str  # "exact-expectation" or "asymptotic"

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0 + 1e-12:
            raise ValueError(f"alpha value {self.value} outside [0, 1]")
        if self.kind not in ("exact-expectation", "asymptotic"):
            raise ValueError(f"unknown AlphaResult kind {self.kind!r}")


@dataclass(frozen=True)
class ZipfPeriodicSubscription:
    """Periodic per-view subscription probabilities c / k^s, k = 1..period.

    A view whose position within the period is k is subscribed independently
    with probability c / k^s.  These are independent marks, not a
    distribution, so they need not sum to 1; each must merely lie in [0, 1].
    """

    period: int
    exponent: float
    normalizer: float

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if self.exponent < 0.0:
            raise ValueError(f"exponent must be >= 0, got {self.exponent}")
        for k in range(1, self.period + 1):
            w = self.weight(k)
            if not 0.0 <= w <= 1.0:
                raise ValueError(
                    f"subscription probability {w} at position {k} outside [0, 1]"
                )

    def weight(self, position: int) -> float:
        """Subscription probability of the view at 1-based period position."""
        return self.normalizer / position**self.exponent

    def phase_of(self, view_index: int) -> int:
        """Map a 1-based global view index to its 1-based period position."""
        return (view_index - 1) % self.period + 1

    @property
    def weights(self) -> List[float]:
        return [self.weight(k) for k in range(1, self.period + 1)]

    @property
    def total_weight(self) -> float:
        return sum(self.weights)


def view_failure_prob(
    cfg: SynthesisConfig,
    user: UserChannelState,
    plan: TransmissionPlan,
    desired: int,
) -> float:
    """Probability the user neither receives ``desired`` nor can synthesize it.

    Failure requires two independent events: every broadcast of the desired
    view is lost, and no (left, right) pair of received views brackets it
    within distance ``cfg.dibr_range``.  The second factor is computed from
    the disjoint decomposition on the nearest received left view:

    * no left view within distance R-1 is received, or
    * the nearest received left view sits at distance k (1 <= k <= R-1) and
      every right view that could complete a pair with it is lost.

    Boundary views (1 and M) have no synthesis option, so their failure
    probability is the direct loss alone.
    """
    cfg.check_view(desired)
    _check_plan_views(cfg, plan)
    R = cfg.dibr_range
    M = cfg.total_views

    direct_loss = combined_view_loss_prob(user, plan, desired)
    if desired == 1 or desired == M:
        return direct_loss

    def loss(v: int) -> float:
        return combined_view_loss_prob(user, plan, v)

    # Nearest received left view is absent entirely: every left view close
    # enough to anchor a pair (distance <= R-1) is lost.
    no_left = 1.0
    for q in range(1, min(R - 1, desired - 1) + 1):
        no_left *= loss(desired - q)
    bracket = no_left

    # Nearest received left view at distance k: views desired-1..desired-k+1
    # lost, view desired-k received, and all right views that could pair with
    # it (desired+1 .. desired+min(R-k, M-desired)) lost.
    for k in range(1, R):
        if desired - k < 1:
            break
        term = 1.0 - loss(desired - k)
        for q in range(1, k):
            term *= loss(desired - q)
        for step in range(1, min(R - k, M - desired) + 1):
            term *= loss(desired + step)
        bracket += term

    return direct_loss * bracket


def expected_alpha_exact(
    cfg: SynthesisConfig,
    user: UserChannelState,
    plan: TransmissionPlan,
    sub: Subscription,
) -> AlphaResult:
    """Expected fraction of the subscribed views the user can obtain.

    By linearity of expectation over per-view obtained indicators this is the
    mean per-view success probability; the per-view failure events need not
    be independent.
    """
    for v in sub.desired_views:
        cfg.check_view(v)
    total = sum(
        1.0 - view_failure_prob(cfg, user, plan, v) for v in sub.desired_views
    )
    return AlphaResult(value=total / len(sub), kind="exact-expectation")


def alpha_asymptotic_uniform(loss_p: float, dibr_range: int) -> AlphaResult:
    """Limiting obtained-view fraction when every view is multicast.

    Each view is independently received with probability 1 - loss_p and
    subscribed with some fixed probability; as the number of views grows the
    obtained fraction converges almost surely to

        (1 - p) * ( sum_{k=1}^{R} k (1 - p) p^(k-1)  +  p^R )

    which is independent of the subscription probability.  At R = 1 this
    collapses to 1 - p (no synthesis benefit).
    """
    _check_prob(loss_p, "loss_p")
    if dibr_range < 1:
        raise ValueError(f"dibr_range must be >= 1, got {dibr_range}")
    p = loss_p
    cycle_reward = sum(
        k * (1.0 - p) * p ** (k - 1) for k in range(1, dibr_range + 1)
    )
    value = (1.0 - p) * (cycle_reward + p**dibr_range)
    return AlphaResult(value=value, kind="asymptotic")


def alpha_asymptotic_spaced(
    loss_p: float, dibr_range: int, spacing: int
) -> AlphaResult:
    """Limiting obtained fraction when one view is transmitted per ``spacing``.

    Transmitted views form a lattice of stride spacing; a gap of k lattice
    steps between consecutive received views spans k * spacing view indices,
    all synthesizable iff k * spacing <= R.  Equals the uniform result when
    spacing is 1.
    """
    _check_prob(loss_p, "loss_p")
    if dibr_range < 1:
        raise ValueError(f"dibr_range must be >= 1, got {dibr_range}")
    if not 1 <= spacing <= dibr_range:
        raise ValueError(
            f"spacing must be in 1..dibr_range={dibr_range}, got {spacing}"
        )
    p = loss_p
    max_gap = dibr_range // spacing
    cycle_reward = sum(
        spacing * k * (1.0 - p) * p ** (k - 1) for k in range(1, max_gap + 1)
    )
    value = (1.0 - p) * (cycle_reward + p**max_gap) / spacing
    return AlphaResult(value=value, kind="asymptotic")


def window_subscription_mass(
    zipf: ZipfPeriodicSubscription, phase: int, length: int
) -> float:
    """Expected number of subscribed views among the ``length`` positions
    following a view at period position ``phase`` (positions wrap modulo the
    period)."""
    if not 1 <= phase <= zipf.period:
        raise ValueError(f"phase {phase} out of range 1..{zipf.period}")
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    weights = zipf.weights
    m = zipf.period
    full, rest = divmod(length, m)
    total = full * zipf.total_weight
    for i in range(1, rest + 1):
        total += weights[(phase - 1 + i) % m]
    return total


def renewal_phase_kernel(success_p: float, period: int) -> List[List[float]]:
    """Transition matrix of the period-position chain embedded at receptions.

    Entry [i][j] (0-based) is the probability that the next received view
    sits at period position j+1 given the current one sits at position i+1;
    gaps are geometric with success probability ``success_p``.  The chain is
    doubly stochastic, so its stationary distribution is uniform.
    """
    _check_prob(success_p, "success_p")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    p = success_p
    denom = 1.0 - (1.0 - p) ** period
    kernel = []
    for i in range(period):
        row = []
        for j in range(period):
            gap = (j - i) % period
            if gap == 0:
                gap = period
            row.append(p * (1.0 - p) ** (gap - 1) / denom if denom > 0.0 else 0.0)
        kernel.append(row)
    return kernel


def alpha_asymptotic_zipf_consecutive(
    success_p: float, dibr_range: int, zipf: ZipfPeriodicSubscription
) -> AlphaResult:
    """Limiting obtained fraction under periodic Zipf view subscription.

    NOTE the convention flip relative to the uniform-subscription result:
    ``success_p`` is the per-view RECEPTION probability, not a loss.

    Receptions split the view axis into geometric cycles; the chain of period
    positions observed at receptions is doubly stochastic and uniform in
    steady state.  A cycle of length x starting after a received view at
    position j yields every one of the x covered views when x <= R (expected
    subscribed count = window_subscription_mass(j, x)), and only the received
    view closing the cycle when x > R.  The x > R tail is summed in closed
    form by grouping cycle lengths by their residue modulo the period.
    """
    _check_prob(success_p, "success_p")
    if dibr_range < 1:
        raise ValueError(f"dibr_range must be >= 1, got {dibr_range}")
    p = success_p
    m = zipf.period
    R = dibr_range
    weights = zipf.weights

    tail_denom = 1.0 - (1.0 - p) ** m
    # sum_{x>R} P(cycle length = x) * weight(position j+x), grouped by the
    # residue of x: positions repeat with period m while the geometric factor
    # contracts by (1-p)^m per turn.
    tail_scale = p / tail_denom if tail_denom > 0.0 else 0.0

    total = 0.0
    for j in range(1, m + 1):
        h = 0.0
        for x in range(1, R + 1):
            h += (
                window_subscription_mass(zipf, j, x)
                * p
                * (1.0 - p) ** (x - 1)
            )
        for d in range(1, m + 1):
            position = (j - 1 + R + d) % m
            h += weights[position] * tail_scale * (1.0 - p) ** (R + d - 1)
        total += h

    value = p * total / zipf.total_weight
    return AlphaResult(value=min(value, 1.0), kind="asymptotic")


def _check_prob(p: float, name: str) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")


def _check_plan_views(cfg: SynthesisConfig, plan: TransmissionPlan) -> None:
    for v, _, _ in plan.counts:
        cfg.check_view(v)
