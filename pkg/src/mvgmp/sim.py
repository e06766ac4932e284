"""Frame-stepped simulation of a dynamic multicast cell.

Each frame: maybe one user arrives (joins via the group-management
protocol), maybe one departs (leave plus reorganization), users may switch
desired views, then the AP transmits per its table and, in parallel
bookkeeping, per the baseline scheme that multicasts every subscribed view.
Receptions are sampled once per (user, view, channel, rate, broadcast index)
and shared between the two schemes wherever both transmit the same
broadcast, so the comparison uses common random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import protocol
from .channel import LossModel, PhyConfig, assign_user_loss, tx_duration
from .model import Subscription, SynthesisConfig, TransmissionPlan, UserChannelState
from .protocol import (
    ClientState,
    EntryKey,
    LeaveMessage,
    ViewTable,
    ap_handle_join,
    ap_handle_leave,
    change_view,
    client_reorganize_on_leave,
    expire_soft_state,
    refresh_user,
    select_views_on_join,
)

_WORKLOAD_STREAM = 0
_RECEPTION_STREAM = 1


@dataclass(frozen=True)
class PreferenceConfig:
    """How arriving users pick their desired view."""

    kind: str = "uniform"  # uniform | zipf | normal
    zipf_exponent: float = 2.0
    normal_mean: float = 0.5
    normal_variance: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "zipf", "normal"):
            raise ValueError(f"unknown preference kind {self.kind!r}")


@dataclass(frozen=True)
class WorkloadConfig:
    initial_users: int = 50
    arrival_prob: float = 0.2
    departure_prob: float = 0.3
    view_change_prob: float = 0.4
    preference: PreferenceConfig = field(default_factory=PreferenceConfig)
    frames: int = 1000
    seed: int = 1

    def __post_init__(self) -> None:
        for name in ("arrival_prob", "departure_prob", "view_change_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.initial_users < 0:
            raise ValueError("initial_users must be >= 0")


@dataclass(frozen=True)
class ProtocolParams:
    failure_threshold: float = protocol.DEFAULT_FAILURE_THRESHOLD
    max_aux_views: int = protocol.DEFAULT_MAX_AUX_VIEWS
    max_tx_count: int = protocol.DEFAULT_MAX_TX_COUNT
    soft_state_timeout: int = protocol.DEFAULT_SOFT_STATE_TIMEOUT


@dataclass(frozen=True)
class ScenarioConfig:
    synthesis: SynthesisConfig
    phy: PhyConfig
    loss_model: LossModel
    workload: WorkloadConfig
    protocol: ProtocolParams = field(default_factory=ProtocolParams)


@dataclass
class FrameOutcome:
    frame: int
    population: int
    transmitted_views: int
    channel_time_mvgmp: int
    channel_time_baseline: int
    makespan_mvgmp: int
    makespan_baseline: int
    successes_mvgmp: int
    successes_baseline: int
    per_user_success: Optional[Dict[int, bool]] = None
    per_user_success_baseline: Optional[Dict[int, bool]] = None


@dataclass
class ScenarioSummary:
    status: str
    scheme: str
    frames_counted: int
    mean_channel_time_mvgmp: float = math.nan
    mean_channel_time_baseline: float = math.nan
    mean_makespan_mvgmp: float = math.nan
    mean_makespan_baseline: float = math.nan
    mean_success_mvgmp: float = math.nan
    mean_success_baseline: float = math.nan
    view_failure_rate_mvgmp: float = math.nan
    view_failure_rate_baseline: float = math.nan
    mean_population: float = math.nan
    mean_transmitted_views: float = math.nan
    saturation_events: int = 0


@dataclass
class UserSnapshot:
    """Frozen view of one user at the end of a run."""

    user_id: int
    desired_view: int
    channel_state: UserChannelState
    receiving_plan: TransmissionPlan


@dataclass
class ScenarioResult:
    outcomes: List[FrameOutcome]
    summary: ScenarioSummary
    final_users: Dict[int, UserSnapshot]
    # uid -> [mvgmp successes, baseline successes, frames present] after warmup
    user_success_counts: Dict[int, List[int]]


def center_out_views(total_views: int) -> List[int]:
    """View indices ordered center first, then alternating outward."""
    center = (total_views + 1) // 2
    order = [center]
    step = 1
    while len(order) < total_views:
        for candidate in (center + step, center - step):
            if 1 <= candidate <= total_views and len(order) < total_views:
                order.append(candidate)
        step += 1
    return order


def sample_preference(
    pref: PreferenceConfig, total_views: int, rng: np.random.Generator
) -> int:
    """Draw one desired view index.

    uniform: equiprobable.  zipf: rank probabilities 1/k^s with rank 1 at the
    central view and further ranks alternating outward.  normal: a draw on
    the normalized axis [0, 1] (redrawn until inside it, so the interior
    views keep the mode) rounded onto 1..total_views.
    """
    if total_views == 1:
        return 1
    if pref.kind == "uniform":
        return int(rng.integers(1, total_views + 1))
    if pref.kind == "zipf":
        ranks = np.arange(1, total_views + 1, dtype=float)
        weights = ranks ** -pref.zipf_exponent
        weights /= weights.sum()
        rank = int(rng.choice(total_views, p=weights))
        return center_out_views(total_views)[rank]
    sigma = math.sqrt(pref.normal_variance)
    x = 0.5
    for _ in range(1000):
        x = rng.normal(pref.normal_mean, sigma)
        if 0.0 <= x <= 1.0:
            break
    view = int(round(x * (total_views - 1))) + 1
    return min(max(view, 1), total_views)


class _User:
    __slots__ = ("uid", "client", "baseline_view")

    def __init__(self, uid: int, client: ClientState) -> None:
        self.uid = uid
        self.client = client
        self.baseline_view = client.subscription.desired_views[0]


class Simulation:
    """One cell under both schemes; single-threaded, deterministic per seed."""

    def __init__(self, scenario: ScenarioConfig, keep_user_detail: bool = False):
        self.scenario = scenario
        self.keep_user_detail = keep_user_detail
        cfg = scenario.synthesis
        phy = scenario.phy
        self.table = ViewTable(cfg.total_views, phy.num_channels, phy.num_rates)
        self.users: Dict[int, _User] = {}
        self._next_uid = 1
        seed = scenario.workload.seed
        self._rng_workload = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, _WORKLOAD_STREAM)))
        )
        self._rng_rx = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, _RECEPTION_STREAM)))
        )
        self.saturation_events = 0
        self.user_success_counts: Dict[int, List[int]] = {}
        self._counting = False
        for _ in range(scenario.workload.initial_users):
            self._spawn_user(now=0)

    # -- population dynamics -------------------------------------------------

    def _spawn_user(self, now: int) -> None:
        uid = self._next_uid
        self._next_uid += 1
        scenario = self.scenario
        channel_state = assign_user_loss(
            scenario.loss_model, uid, scenario.phy, scenario.workload.seed
        )
        desired = sample_preference(
            scenario.workload.preference,
            scenario.synthesis.total_views,
            self._rng_workload,
        )
        params = scenario.protocol
        client = ClientState(
            user_id=uid,
            subscription=Subscription(uid, (desired,)),
            channel_state=channel_state,
            failure_threshold=params.failure_threshold,
            max_aux_views=params.max_aux_views,
            max_tx_count=params.max_tx_count,
        )
        decision = select_views_on_join(client, self.table, scenario.synthesis, scenario.phy)
        msg = decision.join_message(uid)
        if msg is not None:
            ap_handle_join(self.table, msg, now)
        client.receiving = set(decision.final_receiving)
        self.saturation_events += len(decision.saturated)
        self.users[uid] = _User(uid, client)

    def _remove_user(self, uid: int, now: int) -> None:
        user = self.users.pop(uid)
        keys = {k for k in user.client.receiving if k in self.table.entries}
        if not keys:
            return
        departing = LeaveMessage(uid, tuple(sorted(keys)))
        ap_handle_leave(self.table, departing)
        # the Leave is multicast: staying users sharing a view may reorganize
        cfg, phy = self.scenario.synthesis, self.scenario.phy
        released_views = {v for v, _, _ in departing.released}
        for other_uid in sorted(self.users):
            client = self.users[other_uid].client
            if not released_views & {v for v, _, _ in client.receiving}:
                continue
            if not any(
                self.table.entries.get(k) is not None
                and self.table.entries[k].subscribers == {other_uid}
                for k in client.receiving
            ):
                continue  # no entry kept alive solely for this client
            swap = client_reorganize_on_leave(client, departing, self.table, cfg, phy)
            if swap is None:
                continue
            leave, join = swap
            ap_handle_leave(self.table, leave)
            ap_handle_join(self.table, join, now)
            client.receiving = (client.receiving - set(leave.released)) | {
                req.key for req in join.requests
            }

    def _change_views(self, now: int) -> None:
        scenario = self.scenario
        eta = scenario.workload.view_change_prob
        for uid in sorted(self.users):
            if self._rng_workload.random() >= eta:
                continue
            user = self.users[uid]
            new_view = sample_preference(
                scenario.workload.preference,
                scenario.synthesis.total_views,
                self._rng_workload,
            )
            if new_view == user.client.subscription.desired_views[0]:
                continue
            leave, join, decision = change_view(
                user.client, new_view, self.table, scenario.synthesis, scenario.phy
            )
            if leave is not None:
                ap_handle_leave(self.table, leave)
            if join is not None:
                ap_handle_join(self.table, join, now)
            user.client.subscription = Subscription(uid, (new_view,))
            user.client.receiving = set(decision.final_receiving)
            user.baseline_view = new_view
            self.saturation_events += len(decision.saturated)

    # -- per-frame transmission and reception ---------------------------------

    def _baseline_plan(self) -> Dict[int, Tuple[int, int]]:
        """view -> (channel, rate index) for the every-subscribed-view scheme.

        Rate: fastest whose worst subscriber still meets the failure
        threshold on plain reception, else the most robust rate.  Channels
        round-robin over the subscribed views.
        """
        phy = self.scenario.phy
        threshold = self.scenario.protocol.failure_threshold
        subs: Dict[int, List[int]] = {}
        for uid, user in self.users.items():
            subs.setdefault(user.baseline_view, []).append(uid)
        plan: Dict[int, Tuple[int, int]] = {}
        for position, view in enumerate(sorted(subs)):
            channel = position % phy.num_channels
            chosen = None
            for r in range(phy.num_rates - 1, -1, -1):
                worst = max(
                    self.users[u].client.channel_state.loss.get((channel, r), 1.0)
                    for u in subs[view]
                )
                if worst <= threshold:
                    chosen = r
                    break
            if chosen is None:
                chosen = min(
                    range(phy.num_rates),
                    key=lambda r: max(
                        self.users[u].client.channel_state.loss.get((channel, r), 1.0)
                        for u in subs[view]
                    ),
                )
            plan[view] = (channel, chosen)
        return plan

    def _transmit_and_receive(self, now: int) -> FrameOutcome:
        phy = self.scenario.phy
        R = self.scenario.synthesis.dibr_range

        mv_broadcasts: List[Tuple[int, int, int, int]] = []
        mv_channel_time: Dict[int, int] = {c: 0 for c in range(phy.num_channels)}
        for key in sorted(self.table.entries):
            entry = self.table.entries[key]
            v, c, r = key
            mv_channel_time[c] += entry.airtime(phy)
            for idx in range(entry.tx_count):
                mv_broadcasts.append((v, c, r, idx))

        base_plan = self._baseline_plan()
        base_channel_time: Dict[int, int] = {c: 0 for c in range(phy.num_channels)}
        base_broadcasts = []
        for view in sorted(base_plan):
            c, r = base_plan[view]
            base_channel_time[c] += tx_duration(phy, r)
            base_broadcasts.append((view, c, r, 0))

        union = sorted(set(mv_broadcasts) | set(base_broadcasts))
        col = {b: j for j, b in enumerate(union)}
        uids = sorted(self.users)
        draws = (
            self._rng_rx.random((len(uids), len(union)))
            if union and uids
            else np.zeros((len(uids), 0))
        )

        success_mv: Dict[int, bool] = {}
        success_base: Dict[int, bool] = {}
        mv_set = set(mv_broadcasts)
        for i, uid in enumerate(uids):
            user = self.users[uid]
            loss = user.client.channel_state.loss
            desired = user.client.subscription.desired_views[0]
            row = draws[i]

            received_views: Set[int] = set()
            for key in user.client.receiving:
                entry = self.table.entries.get(key)
                if entry is None:
                    continue
                v, c, r = key
                p = loss.get((c, r))
                if p is None:
                    continue
                for idx in range(entry.tx_count):
                    b = (v, c, r, idx)
                    if b in mv_set and row[col[b]] < 1.0 - p:
                        received_views.add(v)
                        break
            ok = desired in received_views
            if not ok:
                ok = any(
                    a in received_views and b in received_views
                    for a in range(max(1, desired - R + 1), desired)
                    for b in range(desired + 1, min(self.scenario.synthesis.total_views, a + R) + 1)
                )
            success_mv[uid] = ok

            c, r = base_plan[user.baseline_view]
            p = loss.get((c, r), 1.0)
            success_base[uid] = bool(
                row[col[(user.baseline_view, c, r, 0)]] < 1.0 - p
            )

        if self._counting:
            for uid in uids:
                counts = self.user_success_counts.setdefault(uid, [0, 0, 0])
                counts[0] += int(success_mv[uid])
                counts[1] += int(success_base[uid])
                counts[2] += 1

        return FrameOutcome(
            frame=now,
            population=len(uids),
            transmitted_views=len(self.table.entries),
            channel_time_mvgmp=sum(mv_channel_time.values()),
            channel_time_baseline=sum(base_channel_time.values()),
            makespan_mvgmp=max(mv_channel_time.values()) if mv_channel_time else 0,
            makespan_baseline=max(base_channel_time.values()) if base_channel_time else 0,
            successes_mvgmp=sum(success_mv.values()),
            successes_baseline=sum(success_base.values()),
            per_user_success=dict(success_mv) if self.keep_user_detail else None,
            per_user_success_baseline=dict(success_base) if self.keep_user_detail else None,
        )

    # -- main loop -------------------------------------------------------------

    def step_frame(self, now: int) -> FrameOutcome:
        workload = self.scenario.workload
        if self._rng_workload.random() < workload.arrival_prob:
            self._spawn_user(now)
        if self._rng_workload.random() < workload.departure_prob and self.users:
            uids = sorted(self.users)
            victim = uids[int(self._rng_workload.integers(0, len(uids)))]
            self._remove_user(victim, now)
        self._change_views(now)

        outcome = self._transmit_and_receive(now)

        for uid in sorted(self.users):
            refresh_user(self.table, uid, now)
        expire_soft_state(self.table, now, self.scenario.protocol.soft_state_timeout)
        self.table.check_conservation()
        return outcome


def run_scenario(
    scenario: ScenarioConfig,
    scheme: str = "both",
    warmup: int = 100,
    keep_user_detail: bool = False,
) -> ScenarioResult:
    """Run one scenario to completion and aggregate post-warmup frames.

    Deterministic for a given (scenario, scheme): identical inputs produce
    identical outcomes, frame by frame.
    """
    if scheme not in ("mvgmp", "baseline", "both"):
        raise ValueError(f"unknown scheme {scheme!r}")
    sim = Simulation(scenario, keep_user_detail=keep_user_detail)
    outcomes: List[FrameOutcome] = []
    for now in range(scenario.workload.frames):
        if now == warmup:
            sim._counting = True
        outcomes.append(sim.step_frame(now))

    counted = [o for o in outcomes if o.frame >= warmup]
    summary = _summarize(counted, scheme, sim.saturation_events)

    final_users = {
        uid: UserSnapshot(
            user_id=uid,
            desired_view=user.client.subscription.desired_views[0],
            channel_state=user.client.channel_state,
            receiving_plan=TransmissionPlan(
                {
                    k: sim.table.entries[k].tx_count
                    for k in user.client.receiving
                    if k in sim.table.entries
                }
            ),
        )
        for uid, user in sim.users.items()
    }
    return ScenarioResult(
        outcomes=outcomes,
        summary=summary,
        final_users=final_users,
        user_success_counts=sim.user_success_counts,
    )


def _summarize(
    counted: Sequence[FrameOutcome], scheme: str, saturation_events: int
) -> ScenarioSummary:
    if not counted:
        return ScenarioSummary(
            status="insufficient data",
            scheme=scheme,
            frames_counted=0,
            saturation_events=saturation_events,
        )
    populated = [o for o in counted if o.population > 0]
    def mean(values):
        return float(np.mean(values)) if values else math.nan

    mv_rate = mean([o.successes_mvgmp / o.population for o in populated])
    base_rate = mean([o.successes_baseline / o.population for o in populated])
    return ScenarioSummary(
        status="ok",
        scheme=scheme,
        frames_counted=len(counted),
        mean_channel_time_mvgmp=mean([o.channel_time_mvgmp for o in counted]),
        mean_channel_time_baseline=mean([o.channel_time_baseline for o in counted]),
        mean_makespan_mvgmp=mean([o.makespan_mvgmp for o in counted]),
        mean_makespan_baseline=mean([o.makespan_baseline for o in counted]),
        mean_success_mvgmp=mv_rate,
        mean_success_baseline=base_rate,
        view_failure_rate_mvgmp=1.0 - mv_rate if not math.isnan(mv_rate) else math.nan,
        view_failure_rate_baseline=1.0 - base_rate if not math.isnan(base_rate) else math.nan,
        mean_population=mean([o.population for o in counted]),
        mean_transmitted_views=mean([o.transmitted_views for o in counted]),
        saturation_events=saturation_events,
    )


def run_fixed_plan_alpha(
    cfg: SynthesisConfig,
    users: Sequence[UserChannelState],
    plan: TransmissionPlan,
    frames: int,
    seed: int,
    chunk_frames: int = 2000,
) -> Dict[object, float]:
    """Empirical all-views obtained fraction per user under a fixed plan.

    Every user subscribes every view; the given plan is transmitted every
    frame and receptions are drawn independently per broadcast per user.
    Vectorized over frames for the analysis-versus-simulation comparisons.
    """
    broadcasts = [
        (v, c, r, i) for (v, c, r), n in sorted(plan.counts.items()) for i in range(n)
    ]
    if not broadcasts:
        return {u.user_id: 0.0 for u in users}
    M, R = cfg.total_views, cfg.dibr_range
    U, B = len(users), len(broadcasts)
    thresholds = np.empty((U, B))
    for ui, user in enumerate(users):
        for bi, (v, c, r, _) in enumerate(broadcasts):
            thresholds[ui, bi] = 1.0 - user.loss.get((c, r), 1.0)
    view_cols = {
        v: [bi for bi, b in enumerate(broadcasts) if b[0] == v] for v in plan.views()
    }

    g = np.random.Generator(np.random.PCG64(seed))
    obtained_sum = np.zeros(U)
    done = 0
    while done < frames:
        F = min(chunk_frames, frames - done)
        draws = g.random((F, U, B))
        rx = draws < thresholds[None, :, :]
        view_rx = np.zeros((F, U, M + 1), dtype=bool)
        for v, cols in view_cols.items():
            view_rx[:, :, v] = rx[:, :, cols].any(axis=2)
        obtained = np.zeros((F, U), dtype=float)
        for k in range(1, M + 1):
            ok = view_rx[:, :, k].copy()
            for a in range(max(1, k - R + 1), k):
                for b in range(k + 1, min(M, a + R) + 1):
                    ok |= view_rx[:, :, a] & view_rx[:, :, b]
            obtained += ok
        obtained_sum += obtained.sum(axis=0) / M
        done += F
    return {user.user_id: obtained_sum[ui] / frames for ui, user in enumerate(users)}
