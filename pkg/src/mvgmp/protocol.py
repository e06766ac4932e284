"""AP-side ViewTable maintenance and client-side view selection (MVGMP).

The AP owns a soft-state table of multicast view entries, one per
(view, channel, rate).  Clients pick which entries to join so their view
failure probability stays below a per-client threshold, preferring already
transmitted views (shared with other subscribers) over new transmissions.
All handlers are single-writer: the owning event loop invokes them
sequentially and never re-entrantly.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from . import analytics
from .channel import PhyConfig, tx_duration
from .model import Subscription, SynthesisConfig, TransmissionPlan, UserChannelState

#: (view, channel, rate index) identifying one multicast entry.
EntryKey = Tuple[int, int, int]

DEFAULT_FAILURE_THRESHOLD = 0.05
DEFAULT_MAX_AUX_VIEWS = 4
DEFAULT_MAX_TX_COUNT = 3
DEFAULT_SOFT_STATE_TIMEOUT = 3


class InvariantError(RuntimeError):
    """A protocol invariant was violated; always a bug, never user error."""


@dataclass
class ViewTableEntry:
    view: int
    channel: int
    rate_index: int
    multicast_address: int
    subscribers: Set[object] = field(default_factory=set)
    #: per-subscriber requested broadcast count; the entry is transmitted at
    #: the maximum outstanding request, so counts decay when requesters leave
    requested_tx: Dict[object, int] = field(default_factory=dict)
    last_refresh: Dict[object, int] = field(default_factory=dict)

    @property
    def key(self) -> EntryKey:
        return (self.view, self.channel, self.rate_index)

    @property
    def tx_count(self) -> int:
        return max(self.requested_tx.values(), default=1)

    def airtime(self, phy: PhyConfig) -> int:
        return self.tx_count * tx_duration(phy, self.rate_index)


class ViewTable:
    """The AP's authoritative record of multicast views and subscribers."""

    def __init__(self, total_views: int, num_channels: int, num_rates: int) -> None:
        self.total_views = total_views
        self.num_channels = num_channels
        self.num_rates = num_rates
        self.entries: Dict[EntryKey, ViewTableEntry] = {}
        self._next_address = 1

    def validate_key(self, key: EntryKey) -> None:
        v, c, r = key
        if not 1 <= v <= self.total_views:
            raise ValueError(f"view {v} out of range 1..{self.total_views}")
        if not 0 <= c < self.num_channels:
            raise ValueError(f"channel {c} out of range 0..{self.num_channels - 1}")
        if not 0 <= r < self.num_rates:
            raise ValueError(f"rate index {r} out of range 0..{self.num_rates - 1}")

    def views(self) -> List[int]:
        return sorted({e.view for e in self.entries.values()})

    def entries_for_view(self, view: int) -> List[ViewTableEntry]:
        return [e for k, e in sorted(self.entries.items()) if e.view == view]

    def keys_of_user(self, user_id: object) -> Set[EntryKey]:
        return {k for k, e in self.entries.items() if user_id in e.subscribers}

    def total_airtime(self, phy: PhyConfig) -> int:
        return sum(e.airtime(phy) for e in self.entries.values())

    def to_plan(self) -> TransmissionPlan:
        return TransmissionPlan({k: e.tx_count for k, e in self.entries.items()})

    def snapshot(self) -> "ViewTable":
        return copy.deepcopy(self)

    def check_conservation(self) -> None:
        for key, entry in self.entries.items():
            if not entry.subscribers:
                raise InvariantError(f"entry {key} has no subscribers")


@dataclass(frozen=True, order=True)
class JoinRequest:
    """One requested entry: join it if present, create it otherwise.

    ``tx_count`` is the broadcast count wanted per frame; joining an existing
    entry never lowers its count (the AP keeps the maximum requested).
    """

    view: int
    channel: int
    rate_index: int
    tx_count: int = 1

    @property
    def key(self) -> EntryKey:
        return (self.view, self.channel, self.rate_index)


@dataclass(frozen=True)
class JoinMessage:
    user_id: object
    requests: Tuple[JoinRequest, ...]

    def __post_init__(self) -> None:
        if not self.requests:
            raise ValueError("a Join message must request at least one view")


@dataclass(frozen=True)
class LeaveMessage:
    user_id: object
    released: Tuple[EntryKey, ...]

    def __post_init__(self) -> None:
        if not self.released:
            raise ValueError("a Leave message must release at least one view")


@dataclass
class ClientState:
    """Client-side protocol state: what it wants and what it receives."""

    user_id: object
    subscription: Subscription
    channel_state: UserChannelState
    receiving: Set[EntryKey] = field(default_factory=set)
    failure_threshold: float = DEFAULT_FAILURE_THRESHOLD
    max_aux_views: int = DEFAULT_MAX_AUX_VIEWS
    max_tx_count: int = DEFAULT_MAX_TX_COUNT

    def desired_views(self) -> Tuple[int, ...]:
        return self.subscription.desired_views

    def can_hear(self, key: EntryKey) -> bool:
        _, c, r = key
        return (c, r) in self.channel_state.loss


@dataclass(frozen=True)
class JoinDecision:
    """Outcome of client-side view selection.

    ``joins`` are existing table entries to subscribe to; ``new_entries`` are
    proposals to create (or raise the broadcast count of) entries;
    ``releases`` are previously received entries the selection dropped.
    ``residual_failure`` records the failure probability achieved per desired
    view; views still above threshold after saturating the most robust
    option are listed in ``saturated`` (reported, never silent).
    """

    joins: Tuple[EntryKey, ...]
    new_entries: Tuple[JoinRequest, ...]
    releases: Tuple[EntryKey, ...]
    final_receiving: Tuple[EntryKey, ...]
    residual_failure: Mapping[int, float]
    saturated: Tuple[int, ...]

    def join_message(self, user_id: object) -> Optional[JoinMessage]:
        proposed = {req.key for req in self.new_entries}
        requests = tuple(
            sorted(
                [JoinRequest(v, c, r) for (v, c, r) in self.joins if (v, c, r) not in proposed]
                + list(self.new_entries)
            )
        )
        return JoinMessage(user_id, requests) if requests else None

    def leave_message(self, user_id: object) -> Optional[LeaveMessage]:
        if not self.releases:
            return None
        return LeaveMessage(user_id, tuple(sorted(self.releases)))


# ---------------------------------------------------------------------------
# client-side selection
# ---------------------------------------------------------------------------

def _plan_for(
    table: ViewTable,
    keys: Iterable[EntryKey],
    proposals: Mapping[EntryKey, int],
) -> TransmissionPlan:
    counts: Dict[EntryKey, int] = {}
    for k in keys:
        entry = table.entries.get(k)
        if entry is not None:
            counts[k] = entry.tx_count
    for k, n in proposals.items():
        counts[k] = max(counts.get(k, 0), n)
    return TransmissionPlan(counts)


def _failure(
    client: ClientState,
    cfg: SynthesisConfig,
    table: ViewTable,
    keys: Iterable[EntryKey],
    proposals: Mapping[EntryKey, int],
    desired: int,
) -> float:
    plan = _plan_for(table, keys, proposals)
    return analytics.view_failure_prob(cfg, client.channel_state, plan, desired)


def _views_of(keys: Iterable[EntryKey], proposals: Mapping[EntryKey, int]) -> Set[int]:
    views = {v for v, _, _ in keys}
    views.update(v for v, _, _ in proposals)
    return views


def _aux_count(
    keys: Set[EntryKey], proposals: Mapping[EntryKey, int], desired: Set[int]
) -> int:
    return len(_views_of(keys, proposals) - desired)


def select_views_on_join(
    client: ClientState,
    table: ViewTable,
    cfg: SynthesisConfig,
    phy: PhyConfig,
) -> JoinDecision:
    """Pick the entries a (re)joining client should receive.

    Per desired view: join the view's own transmissions if present, then
    greedily add (left, right) synthesis pairs of already transmitted views
    by maximal failure-probability decrement until the threshold is met,
    then if still failing propose a direct entry on the cheapest qualifying
    (channel, rate, count), falling back to the most robust option at the
    maximum count.  A final pruning pass drops auxiliary views whose removal
    keeps every desired view within threshold, largest airtime first.
    """
    for v in client.desired_views():
        cfg.check_view(v)
    desired_set = set(client.desired_views())
    threshold = client.failure_threshold

    # retained entries from a previous state (change-of-view reuse); stale
    # keys whose entries vanished are silently forgotten
    working: Set[EntryKey] = {k for k in client.receiving if k in table.entries}
    proposals: Dict[EntryKey, int] = {}

    for target in client.desired_views():
        # join the target view's transmissions, cheapest entry first, adding
        # further ones only while still above threshold; extra memberships
        # would entrench redundant entries for no benefit
        direct = _audible_entries(client, table, target, phy)
        if direct and not any(k[0] == target for k in working):
            working.add(direct[0])
        fail = _failure(client, cfg, table, working, proposals, target)
        for key in direct:
            if fail <= threshold:
                break
            if key not in working:
                working.add(key)
                fail = _failure(client, cfg, table, working, proposals, target)

        while fail > threshold:
            move = _best_pair_move(
                client, table, cfg, phy, working, proposals, desired_set, target, fail
            )
            if move is None:
                break
            added, fail = move
            working |= added

        if fail > threshold:
            proposal = _best_direct_proposal(
                client, table, cfg, phy, working, proposals, target
            )
            if proposal is not None:
                request, fail = proposal
                proposals[request.key] = max(
                    proposals.get(request.key, 0), request.tx_count
                )

    _prune_auxiliaries(client, table, cfg, phy, working, proposals, desired_set)

    residual = {
        t: _failure(client, cfg, table, working, proposals, t)
        for t in client.desired_views()
    }
    saturated = tuple(t for t, f in residual.items() if f > threshold)

    previously = {k for k in client.receiving if k in table.entries}
    joins = tuple(sorted(working - previously))
    releases = tuple(sorted(previously - working))
    final = tuple(sorted(working | set(k for k in proposals)))
    new_entries = tuple(
        sorted(JoinRequest(v, c, r, n) for (v, c, r), n in proposals.items())
    )
    return JoinDecision(
        joins=joins,
        new_entries=new_entries,
        releases=releases,
        final_receiving=final,
        residual_failure=residual,
        saturated=saturated,
    )


def _best_pair_move(
    client: ClientState,
    table: ViewTable,
    cfg: SynthesisConfig,
    phy: PhyConfig,
    working: Set[EntryKey],
    proposals: Mapping[EntryKey, int],
    desired_set: Set[int],
    target: int,
    current_fail: float,
) -> Optional[Tuple[Set[EntryKey], float]]:
    """The (left, right) pair join with maximal failure decrement, or None.

    Ties break on smaller reception airtime of the newly joined entries,
    then on smaller (left, right) view indices.
    """
    R, M = cfg.dibr_range, cfg.total_views
    joined_views = _views_of(working, proposals)
    best = None
    for a in range(max(1, target - R + 1), target):
        a_new = _best_unjoined_entry(client, table, working, a, phy)
        if a_new is None and a not in joined_views:
            continue
        for b in range(target + 1, min(M, a + R) + 1):
            b_new = _best_unjoined_entry(client, table, working, b, phy)
            if b_new is None and b not in joined_views:
                continue
            added = {k for k in (a_new, b_new) if k is not None}
            if not added:
                continue
            candidate = working | added
            if _aux_count(candidate, proposals, desired_set) > client.max_aux_views:
                continue
            fail = _failure(client, cfg, table, candidate, proposals, target)
            decrement = current_fail - fail
            if decrement <= 1e-15:
                continue
            reception_airtime = sum(table.entries[k].airtime(phy) for k in added)
            rank = (-decrement, reception_airtime, a, b)
            if best is None or rank < best[0]:
                best = (rank, added, fail)
    if best is None:
        return None
    return best[1], best[2]


def _audible_entries(
    client: ClientState, table: ViewTable, view: int, phy: PhyConfig
) -> List[EntryKey]:
    """This view's entries the client can hear, cheapest airtime first.

    Preferring cheap shared entries keeps memberships off expensive robust
    ones, letting those decay once their requesters depart; reliability is
    topped up by joining more entries or synthesis pairs as needed.
    """
    return sorted(
        (e.key for e in table.entries_for_view(view) if client.can_hear(e.key)),
        key=lambda k: (
            table.entries[k].airtime(phy),
            client.channel_state.loss[(k[1], k[2])],
            k,
        ),
    )


def _best_unjoined_entry(
    client: ClientState, table: ViewTable, working: Set[EntryKey], view: int, phy: PhyConfig
) -> Optional[EntryKey]:
    for key in _audible_entries(client, table, view, phy):
        if key not in working:
            return key
    return None


def _best_direct_proposal(
    client: ClientState,
    table: ViewTable,
    cfg: SynthesisConfig,
    phy: PhyConfig,
    working: Set[EntryKey],
    proposals: Mapping[EntryKey, int],
    target: int,
) -> Optional[Tuple[JoinRequest, float]]:
    """Propose the target view's own transmission.

    Chooses the qualifying (channel, rate, count) with minimum added airtime
    (fastest rate on ties); when nothing meets the threshold even at the
    maximum count, falls back to the user's most robust (channel, rate) so
    the saturation case is explicit.
    """
    threshold = client.failure_threshold
    qualifying = []
    for (c, r), loss_p in sorted(client.channel_state.loss.items()):
        key = (target, c, r)
        entry = table.entries.get(key)
        existing = entry.tx_count if entry is not None else 0
        for n in range(existing + 1, client.max_tx_count + 1):
            trial = dict(proposals)
            trial[key] = max(trial.get(key, 0), n)
            fail = _failure(client, cfg, table, working, trial, target)
            if fail <= threshold:
                added_airtime = (n - existing) * tx_duration(phy, r)
                rank = (added_airtime, -phy.rates_mbps[r], c, n)
                qualifying.append((rank, JoinRequest(target, c, r, n), fail))
                break  # larger n only costs more on this (c, r)
    if qualifying:
        qualifying.sort(key=lambda item: item[0])
        _, request, fail = qualifying[0]
        return request, fail

    # saturation: most robust (channel, rate) at the maximum count
    (c, r), _ = min(
        client.channel_state.loss.items(), key=lambda item: (item[1], item[0][1], item[0][0])
    )
    key = (target, c, r)
    entry = table.entries.get(key)
    existing = entry.tx_count if entry is not None else 0
    n = client.max_tx_count
    if n <= existing:
        return None  # already carried at max count on the most robust pair
    trial = dict(proposals)
    trial[key] = max(trial.get(key, 0), n)
    fail = _failure(client, cfg, table, working, trial, target)
    return JoinRequest(target, c, r, n), fail


def _prune_auxiliaries(
    client: ClientState,
    table: ViewTable,
    cfg: SynthesisConfig,
    phy: PhyConfig,
    working: Set[EntryKey],
    proposals: Mapping[EntryKey, int],
    desired_set: Set[int],
) -> None:
    """Drop auxiliary views no longer needed to stay within threshold.

    Candidates are whole views (all their joined entries), largest joined
    airtime first; a view is dropped only if every desired view stays at or
    below threshold afterwards.  Mutates ``working``.
    """
    threshold = client.failure_threshold
    while True:
        aux_views = sorted(
            _views_of(working, {}) - desired_set,
            key=lambda v: (
                -sum(
                    table.entries[k].airtime(phy)
                    for k in working
                    if k[0] == v and k in table.entries
                ),
                v,
            ),
        )
        dropped = False
        for v in aux_views:
            v_keys = {k for k in working if k[0] == v}
            remaining = working - v_keys
            ok = all(
                _failure(client, cfg, table, remaining, proposals, t) <= threshold
                for t in sorted(desired_set)
            )
            if ok:
                working -= v_keys
                dropped = True
                break
        if not dropped:
            return


# ---------------------------------------------------------------------------
# AP-side handlers
# ---------------------------------------------------------------------------

def ap_handle_join(table: ViewTable, msg: JoinMessage, now: int) -> ViewTable:
    """Apply a Join: subscribe the user, creating entries as needed.

    Idempotent for repeated identical messages up to refresh timestamps; a
    request naming an existing entry never lowers its broadcast count.
    """
    for req in sorted(msg.requests):
        table.validate_key(req.key)
        if req.tx_count < 1:
            raise ValueError(f"join request {req} has tx_count < 1")
        entry = table.entries.get(req.key)
        if entry is None:
            entry = ViewTableEntry(
                view=req.view,
                channel=req.channel,
                rate_index=req.rate_index,
                multicast_address=table._next_address,
                tx_count=req.tx_count,
            )
            table._next_address += 1
            table.entries[req.key] = entry
        else:
            entry.tx_count = max(entry.tx_count, req.tx_count)
        entry.subscribers.add(msg.user_id)
        entry.last_refresh[msg.user_id] = now
    return table


def ap_handle_leave(
    table: ViewTable, msg: LeaveMessage
) -> Tuple[ViewTable, Set[EntryKey]]:
    """Apply a Leave: unsubscribe the user; stop entries nobody wants.

    Releasing an entry the user never joined is a no-op.  Returns the set of
    stopped (removed) entries.
    """
    stopped: Set[EntryKey] = set()
    for key in sorted(set(msg.released)):
        entry = table.entries.get(key)
        if entry is None or msg.user_id not in entry.subscribers:
            continue
        entry.subscribers.discard(msg.user_id)
        entry.last_refresh.pop(msg.user_id, None)
        if not entry.subscribers:
            del table.entries[key]
            stopped.add(key)
    return table, stopped


def expire_soft_state(
    table: ViewTable, now: int, timeout: int
) -> Tuple[ViewTable, Set[object]]:
    """Drop subscribers that have not refreshed within ``timeout`` frames.

    A user whose last refresh is exactly ``timeout`` frames old survives;
    one frame older and it is removed everywhere.
    """
    if timeout < 1:
        raise ValueError(f"timeout must be >= 1, got {timeout}")
    dropped: Set[object] = set()
    for key in sorted(table.entries):
        entry = table.entries[key]
        for user in sorted(entry.subscribers, key=_user_sort_key):
            if entry.last_refresh.get(user, now) < now - timeout:
                entry.subscribers.discard(user)
                entry.last_refresh.pop(user, None)
                dropped.add(user)
        if not entry.subscribers:
            del table.entries[key]
    return table, dropped


def refresh_user(table: ViewTable, user_id: object, now: int) -> None:
    """Soft-state refresh: equivalent to the user re-joining all its entries."""
    for entry in table.entries.values():
        if user_id in entry.subscribers:
            entry.last_refresh[user_id] = now


# ---------------------------------------------------------------------------
# leave-triggered reorganization and view change
# ---------------------------------------------------------------------------

def client_reorganize_on_leave(
    client: ClientState,
    departing: LeaveMessage,
    table: ViewTable,
    cfg: SynthesisConfig,
    phy: PhyConfig,
) -> Optional[Tuple[LeaveMessage, JoinMessage]]:
    """Swap a now lonely view for one that other users still subscribe to.

    Invoked by staying clients when a Leave is multicast.  The client looks
    for a view it shares with the departing user such that switching to a
    different transmitted view keeps every desired view within threshold and
    strictly reduces the number of entries kept alive solely for this
    client.  Returns the (Leave, Join) pair to send, or None.
    """
    if departing.user_id == client.user_id:
        return None
    current = {k for k in client.receiving if k in table.entries}
    shared_views = {v for v, _, _ in departing.released} & {v for v, _, _ in current}
    if not shared_views:
        return None
    base_sole = _sole_count(table, client.user_id, current)
    if base_sole == 0:
        return None

    desired = client.desired_views()
    desired_set = set(desired)
    current_views = {v for v, _, _ in current}
    best = None
    for v in sorted(shared_views):
        v_keys = {k for k in current if k[0] == v}
        for vbar in table.views():
            if vbar == v or vbar in current_views:
                continue
            audible = _audible_entries(client, table, vbar)
            if not audible:
                continue
            vbar_keys = {audible[0]}
            candidate = (current - v_keys) | vbar_keys
            if len({w for w, _, _ in candidate} - desired_set) > client.max_aux_views:
                continue
            if any(
                _failure(client, cfg, table, candidate, {}, t) > client.failure_threshold
                for t in desired
            ):
                continue
            new_sole = _sole_count(table, client.user_id, candidate)
            if new_sole >= base_sole:
                continue
            freed = sum(
                table.entries[k].airtime(phy)
                for k in v_keys
                if table.entries[k].subscribers == {client.user_id}
            )
            rank = (-freed, v, vbar)
            if best is None or rank < best[0]:
                best = (rank, v_keys, vbar_keys)
    if best is None:
        return None
    _, v_keys, vbar_keys = best
    leave = LeaveMessage(client.user_id, tuple(sorted(v_keys)))
    join = JoinMessage(
        client.user_id, tuple(sorted(JoinRequest(v, c, r) for (v, c, r) in vbar_keys))
    )
    return leave, join


def _sole_count(table: ViewTable, user_id: object, keys: Iterable[EntryKey]) -> int:
    count = 0
    for k in keys:
        entry = table.entries.get(k)
        if entry is not None and entry.subscribers == {user_id}:
            count += 1
    return count


def change_view(
    client: ClientState,
    new_view: int,
    table: ViewTable,
    cfg: SynthesisConfig,
    phy: PhyConfig,
) -> Tuple[Optional[LeaveMessage], Optional[JoinMessage], JoinDecision]:
    """Move a single-view client to a different desired view.

    Entries already received that can still serve the new view (the new view
    itself or potential synthesis partners within the quality range) are
    retained rather than churned; everything else is released.
    """
    cfg.check_view(new_view)
    if client.desired_views() == (new_view,):
        raise ValueError(f"client already subscribes view {new_view}")
    R = cfg.dibr_range
    useful = {
        k
        for k in client.receiving
        if k in table.entries and abs(k[0] - new_view) <= R - 1
    }
    trial = ClientState(
        user_id=client.user_id,
        subscription=Subscription(client.user_id, (new_view,)),
        channel_state=client.channel_state,
        receiving=useful,
        failure_threshold=client.failure_threshold,
        max_aux_views=client.max_aux_views,
        max_tx_count=client.max_tx_count,
    )
    decision = select_views_on_join(trial, table, cfg, phy)
    final = set(decision.final_receiving)
    stale = {k for k in client.receiving if k in table.entries} - final
    leave = LeaveMessage(client.user_id, tuple(sorted(stale))) if stale else None
    join = decision.join_message(client.user_id)
    return leave, join, decision


# ---------------------------------------------------------------------------
# canonical per-frame processing
# ---------------------------------------------------------------------------

def apply_frame_messages(
    table: ViewTable,
    leaves: Sequence[LeaveMessage],
    joins: Sequence[JoinMessage],
    now: int,
    timeout: int = DEFAULT_SOFT_STATE_TIMEOUT,
) -> Tuple[Set[EntryKey], Set[object]]:
    """Apply one frame's batched messages in the canonical order.

    All Leaves first, then all Joins, then soft-state expiry; within each
    phase messages are processed in (user id, content) order, so the table
    state does not depend on arrival interleaving within the frame.
    Reorganization traffic is client-side and must be injected by the caller
    between the Leave and Join phases.
    """
    stopped: Set[EntryKey] = set()
    for msg in sorted(leaves, key=lambda m: (_user_sort_key(m.user_id), m.released)):
        _, just_stopped = ap_handle_leave(table, msg)
        stopped |= just_stopped
    for msg in sorted(joins, key=lambda m: (_user_sort_key(m.user_id), m.requests)):
        ap_handle_join(table, msg, now)
    _, dropped = expire_soft_state(table, now, timeout)
    table.check_conservation()
    return stopped, dropped


def _user_sort_key(user_id: object) -> Tuple[int, object]:
    if isinstance(user_id, int):
        return (0, user_id)
    return (1, str(user_id))


# ---------------------------------------------------------------------------
# line-based trace serialization
# ---------------------------------------------------------------------------

def format_join(msg: JoinMessage) -> str:
    parts = []
    for req in msg.requests:
        item = f"{req.view}:{req.channel}:{req.rate_index}"
        if req.tx_count > 1:
            item += f":{req.tx_count}"
        parts.append(item)
    return f"JOIN user={msg.user_id} views={','.join(parts)}"


def format_leave(msg: LeaveMessage) -> str:
    parts = [f"{v}:{c}:{r}" for (v, c, r) in msg.released]
    return f"LEAVE user={msg.user_id} views={','.join(parts)}"


def format_table(table: ViewTable, frame: int) -> str:
    parts = []
    for key in sorted(table.entries):
        e = table.entries[key]
        subs = "|".join(str(u) for u in sorted(e.subscribers, key=_user_sort_key))
        parts.append(f"{e.view}:{e.channel}:{e.rate_index}:{e.tx_count}:[{subs}]")
    return f"TABLE frame={frame} entries={','.join(parts)}"


def parse_join(line: str) -> JoinMessage:
    user_id, items = _parse_message(line, "JOIN")
    requests = []
    for item in items:
        fields = item.split(":")
        if len(fields) == 3:
            v, c, r = fields
            requests.append(JoinRequest(int(v), int(c), int(r)))
        elif len(fields) == 4:
            v, c, r, n = fields
            requests.append(JoinRequest(int(v), int(c), int(r), int(n)))
        else:
            raise ValueError(f"malformed join item {item!r} in {line!r}")
    return JoinMessage(user_id, tuple(requests))


def parse_leave(line: str) -> LeaveMessage:
    user_id, items = _parse_message(line, "LEAVE")
    released = []
    for item in items:
        fields = item.split(":")
        if len(fields) != 3:
            raise ValueError(f"malformed leave item {item!r} in {line!r}")
        released.append(tuple(int(x) for x in fields))
    return LeaveMessage(user_id, tuple(released))


def _parse_message(line: str, kind: str) -> Tuple[str, List[str]]:
    tokens = line.strip().split()
    if len(tokens) != 3 or tokens[0] != kind:
        raise ValueError(f"malformed {kind} line: {line!r}")
    if not tokens[1].startswith("user=") or not tokens[2].startswith("views="):
        raise ValueError(f"malformed {kind} line: {line!r}")
    user_id = tokens[1][len("user="):]
    views = tokens[2][len("views="):]
    items = [item for item in views.split(",") if item]
    if not items:
        raise ValueError(f"{kind} line names no views: {line!r}")
    return user_id, items
