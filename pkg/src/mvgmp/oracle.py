"""Independent reference implementations used to validate the closed forms.

Everything here deliberately re-derives the reception and synthesis rules
from first principles (a view is obtained iff received directly, or some
received pair a < view < b satisfies b - a <= R) and shares no code with
:mod:`.analytics`.  Randomness comes from numpy's PCG64 generator seeded
explicitly, so every estimate is reproducible bit-for-bit from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SynthesisConfig, TransmissionPlan, UserChannelState
from .analytics import ZipfPeriodicSubscription

#: Hard cap on the exhaustive outcome space (2**24 outcomes).
MAX_ENUMERATED_BROADCASTS = 24

_SE_CHUNKS = 100


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo mean with its standard error and provenance."""

    mean: float
    std_error: float
    samples: int
    rng_seed: int

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.std_error < 0.0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def enumerate_failure_prob(
    cfg: SynthesisConfig,
    user: UserChannelState,
    plan: TransmissionPlan,
    desired: int,
) -> float:
    """Exhaustive view-failure probability over every broadcast outcome.

    Every individual broadcast audible to the user is an independent
    Bernoulli loss; the result sums outcome probabilities over all 2**B joint
    outcomes where the desired view is neither received nor synthesizable.
    Intended for small plans only (B <= 24).
    """
    cfg.check_view(desired)
    for v, _, _ in plan.counts:
        cfg.check_view(v)

    broadcasts = []  # (view, loss probability) per individual broadcast
    for (v, c, r), n in sorted(plan.counts.items()):
        p = user.loss.get((c, r))
        if p is None:
            continue  # inaudible to this user: can never be received
        broadcasts.extend([(v, p)] * n)
    B = len(broadcasts)
    if B > MAX_ENUMERATED_BROADCASTS:
        raise ValueError(
            f"outcome space too large: {B} broadcasts > {MAX_ENUMERATED_BROADCASTS}"
        )

    # Build P(outcome) and the received-view bitmask per outcome by doubling.
    probs = np.ones(1, dtype=np.float64)
    masks = np.zeros(1, dtype=np.int64)
    for v, p in broadcasts:
        probs = np.concatenate([probs * p, probs * (1.0 - p)])
        masks = np.concatenate([masks, masks | (1 << (v - 1))])
    assert abs(float(probs.sum()) - 1.0) < 1e-9

    unique_masks, inverse = np.unique(masks, return_inverse=True)
    fail_unique = np.fromiter(
        (_is_failure(cfg, desired, int(mask)) for mask in unique_masks),
        dtype=bool,
        count=unique_masks.size,
    )
    return float(probs[fail_unique[inverse]].sum())


def _is_failure(cfg: SynthesisConfig, desired: int, mask: int) -> bool:
    """Failure indicator for one received-view set (bit v-1 set = view v)."""
    if mask & (1 << (desired - 1)):
        return False
    received = [v for v in range(1, cfg.total_views + 1) if mask & (1 << (v - 1))]
    synthesizable = any(
        a < desired < b and b - a <= cfg.dibr_range
        for a in received
        for b in received
    )
    return not synthesizable


def _obtained(received: np.ndarray, dibr_range: int) -> np.ndarray:
    """Per-view obtained flags: direct reception or a bracketing received pair.

    For each position the nearest received neighbors on each side are found
    by prefix scans; synthesis succeeds iff both exist and their distance is
    at most ``dibr_range``.
    """
    M = received.shape[0]
    idx = np.arange(M, dtype=np.int64)
    sentinel = 4 * M + 4

    last_rx = np.maximum.accumulate(np.where(received, idx, -sentinel))
    next_rx = np.minimum.accumulate(np.where(received, idx, 3 * sentinel)[::-1])[::-1]

    left_dist = np.full(M, np.inf)
    left_dist[1:] = idx[1:] - last_rx[:-1]
    right_dist = np.full(M, np.inf)
    right_dist[:-1] = next_rx[1:] - idx[:-1]

    return received | ((left_dist + right_dist) <= dibr_range)


def _chunked_estimate(
    values: np.ndarray, include: np.ndarray, samples: int, seed: int
) -> McEstimate:
    """Mean of values[include] with a standard error from contiguous chunks.

    Chunk means absorb the short-range dependence the synthesis rule induces
    between neighboring views, giving an honest standard error.
    """
    selected = values[include]
    if selected.size == 0:
        raise ValueError("no subscribed views drawn; increase the sample count")
    mean = float(selected.mean())

    chunk_means = []
    for chunk_vals, chunk_inc in zip(
        np.array_split(values, _SE_CHUNKS), np.array_split(include, _SE_CHUNKS)
    ):
        picked = chunk_vals[chunk_inc]
        if picked.size:
            chunk_means.append(picked.mean())
    k = len(chunk_means)
    se = float(np.std(chunk_means, ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    return McEstimate(mean=mean, std_error=se, samples=samples, rng_seed=seed)


def mc_alpha_uniform(
    loss_p: float,
    dibr_range: int,
    views: int,
    p_select: float,
    seed: int,
) -> McEstimate:
    """Sampled obtained-view fraction when every view is multicast once.

    Draws ``views`` independent receptions (success 1 - loss_p) and
    independent subscription marks, applies the direct-or-synthesis rule, and
    returns the obtained fraction among subscribed views.
    """
    _check_prob(loss_p, "loss_p")
    _check_prob(p_select, "p_select")
    if dibr_range < 1:
        raise ValueError(f"dibr_range must be >= 1, got {dibr_range}")
    g = _rng(seed)
    received = g.random(views) < (1.0 - loss_p)
    subscribed = g.random(views) < p_select
    obtained = _obtained(received, dibr_range)
    return _chunked_estimate(obtained, subscribed, views, seed)


def mc_alpha_spaced(
    loss_p: float,
    dibr_range: int,
    spacing: int,
    views: int,
    seed: int,
) -> McEstimate:
    """Sampled obtained fraction when only every ``spacing``-th view is sent.

    Views at indices 1, 1+spacing, 1+2*spacing, ... are transmitted once;
    every view is subscribed.  Evaluation stops at the last transmitted view
    so a trailing partial stride (never synthesizable, pure edge artifact)
    does not bias the estimate.
    """
    _check_prob(loss_p, "loss_p")
    if not 1 <= spacing <= dibr_range:
        raise ValueError(
            f"spacing must be in 1..dibr_range={dibr_range}, got {spacing}"
        )
    g = _rng(seed)
    views = views - (views - 1) % spacing  # end on a transmitted view
    transmitted = (np.arange(views) % spacing) == 0
    received = transmitted & (g.random(views) < (1.0 - loss_p))
    obtained = _obtained(received, dibr_range)
    return _chunked_estimate(obtained, np.ones(views, dtype=bool), views, seed)


def mc_alpha_zipf_consecutive(
    success_p: float,
    dibr_range: int,
    zipf: ZipfPeriodicSubscription,
    views: int,
    seed: int,
) -> McEstimate:
    """Sampled obtained fraction under periodic Zipf subscription marks.

    ``success_p`` is the per-view reception probability.  The view at global
    index k is subscribed with probability c / position^s where position is
    k's 1-based position within the period.
    """
    _check_prob(success_p, "success_p")
    if dibr_range < 1:
        raise ValueError(f"dibr_range must be >= 1, got {dibr_range}")
    g = _rng(seed)
    weights = np.asarray(zipf.weights)
    positions = np.arange(views) % zipf.period
    received = g.random(views) < success_p
    subscribed = g.random(views) < weights[positions]
    obtained = _obtained(received, dibr_range)
    return _chunked_estimate(obtained, subscribed, views, seed)


def _check_prob(p: float, name: str) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")
