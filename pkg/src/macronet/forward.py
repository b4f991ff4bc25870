"""Build-order forward model: replays event logs into macro-state snapshots.

The model tracks one player's observable macro situation: completed own
material, material in production (with per-instance completion frames),
observed enemy material, and supply. Replaying a log and snapshotting the
state at every production start yields the state-action pairs the network
trains on.

All operations are functional: they return new states and never mutate
their inputs, so a snapshot taken mid-replay stays valid forever.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import N_ENEMY_TYPES, N_OWN_BUILDS, BuildCatalog
from .errors import ConsistencyError
from .events import EventKind, EventLog, GameEvent

INITIAL_WORKERS = 4


@dataclass(frozen=True)
class MacroState:
    """Snapshot of one player's macro situation at a frame.

    ``production`` holds one (build_id, completion_frame) entry per instance
    under construction, in start order; the public count/progress views are
    derived from it.
    """

    frame: int
    own_count: np.ndarray  # (58,) int64, completed material
    enemy_count: np.ndarray  # (33,) int64, cumulative observed
    production: tuple[tuple[int, int], ...]
    supply_used: int
    supply_max: int

    def __eq__(self, other):
        if not isinstance(other, MacroState):
            return NotImplemented
        return (
            self.frame == other.frame
            and self.supply_used == other.supply_used
            and self.supply_max == other.supply_max
            and self.production == other.production
            and np.array_equal(self.own_count, other.own_count)
            and np.array_equal(self.enemy_count, other.enemy_count)
        )

    @property
    def supply_left(self) -> int:
        return self.supply_max - self.supply_used

    def in_production_count(self) -> np.ndarray:
        counts = np.zeros(N_OWN_BUILDS, dtype=np.int64)
        for build_id, _ in self.production:
            counts[build_id] += 1
        return counts

    def production_progress(self, catalog: BuildCatalog) -> np.ndarray:
        """Per type: progress of the soonest-finishing instance, else 0."""
        soonest: dict[int, int] = {}
        for build_id, done_at in self.production:
            if build_id not in soonest or done_at < soonest[build_id]:
                soonest[build_id] = done_at
        progress = np.zeros(N_OWN_BUILDS, dtype=np.float64)
        for build_id, done_at in soonest.items():
            frames = catalog.builds[build_id].build_frames
            progress[build_id] = min(1.0, max(0.0, 1.0 - (done_at - self.frame) / frames))
        return progress

    def total_count(self, build_id: int) -> int:
        """Completed plus in-production instances of one type."""
        return int(self.own_count[build_id]) + sum(
            1 for b, _ in self.production if b == build_id
        )


@dataclass(frozen=True)
class StateActionPair:
    state: MacroState
    action: int  # BuildId whose production starts in this state


def initial_state(catalog: BuildCatalog) -> MacroState:
    """Standard opening: 4 workers and the main building, at frame 0."""
    own = np.zeros(N_OWN_BUILDS, dtype=np.int64)
    worker = catalog.builds[catalog.worker_id]
    main = catalog.builds[catalog.main_building_id]
    own[worker.id] = INITIAL_WORKERS
    own[main.id] = 1
    return MacroState(
        frame=0,
        own_count=own,
        enemy_count=np.zeros(N_ENEMY_TYPES, dtype=np.int64),
        production=(),
        supply_used=INITIAL_WORKERS * worker.supply_cost,
        supply_max=main.supply_provided,
    )


def advance(state: MacroState, to_frame: int, catalog: BuildCatalog) -> MacroState:
    """Move time forward, completing any production that finishes on the way.

    Advancing in two steps equals advancing in one; advancing by zero frames
    is the identity.
    """
    if to_frame < state.frame:
        raise ValueError(f"cannot advance backwards: {state.frame} -> {to_frame}")
    if to_frame == state.frame:
        return state
    finished = [(b, d) for b, d in state.production if d <= to_frame]
    if not finished:
        return MacroState(
            frame=to_frame,
            own_count=state.own_count,
            enemy_count=state.enemy_count,
            production=state.production,
            supply_used=state.supply_used,
            supply_max=state.supply_max,
        )
    own = state.own_count.copy()
    supply_max = state.supply_max
    for build_id, _ in finished:
        own[build_id] += 1
        supply_max += catalog.builds[build_id].supply_provided
    remaining = tuple((b, d) for b, d in state.production if d > to_frame)
    return MacroState(
        frame=to_frame,
        own_count=own,
        enemy_count=state.enemy_count,
        production=remaining,
        supply_used=state.supply_used,
        supply_max=supply_max,
    )


def apply_event(state: MacroState, event: GameEvent, catalog: BuildCatalog) -> MacroState:
    """Apply one event at its frame. Completions are advance()'s job: callers
    replaying a log must advance to the event frame first."""
    if event.frame < state.frame:
        raise ValueError(
            f"event at frame {event.frame} behind state at frame {state.frame}"
        )
    own = state.own_count
    enemy = state.enemy_count
    production = state.production
    supply_used = state.supply_used
    supply_max = state.supply_max

    if event.kind is EventKind.PRODUCED:
        spec = catalog.builds[event.type_id]
        if catalog.is_one_time(event.type_id):
            already = own[event.type_id] >= 1 or any(
                b == event.type_id for b, _ in production
            )
            if already:
                raise ConsistencyError(
                    f"frame {event.frame}: {spec.name!r} is a one-time build "
                    "and is already owned or in production"
                )
        production = production + ((event.type_id, event.frame + spec.build_frames),)
        supply_used += spec.supply_cost
    elif event.kind is EventKind.DESTROYED:
        spec = catalog.builds[event.type_id]
        if own[event.type_id] == 0:
            raise ConsistencyError(
                f"frame {event.frame}: destroyed {spec.name!r} "
                "but none is completed"
            )
        own = own.copy()
        own[event.type_id] -= 1
        supply_used -= spec.supply_cost
        supply_max -= spec.supply_provided
    else:  # EnemyObserved
        enemy = enemy.copy()
        enemy[event.type_id] += 1

    return MacroState(
        frame=event.frame,
        own_count=own,
        enemy_count=enemy,
        production=production,
        supply_used=supply_used,
        supply_max=supply_max,
    )


def replay(log: EventLog, catalog: BuildCatalog):
    """Yield (state_before_event, event) for every event, advancing time in
    between. The yielded state includes all prior events plus elapsed-time
    completions, i.e. exactly the decision state for Produced events."""
    state = initial_state(catalog)
    for event in log.events:
        state = advance(state, event.frame, catalog)
        yield state, event
        state = apply_event(state, event, catalog)


def extract_pairs(log: EventLog, catalog: BuildCatalog) -> list[StateActionPair]:
    """One pair per Produced event, in frame order."""
    return [
        StateActionPair(state=state, action=event.type_id)
        for state, event in replay(log, catalog)
        if event.kind is EventKind.PRODUCED
    ]
