import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macronet.errors import ConsistencyError
from macronet.events import EventKind, EventLog, GameEvent
from macronet.forward import (
    advance,
    apply_event,
    extract_pairs,
    initial_state,
    replay,
)


def test_initial_state(catalog):
    s = initial_state(catalog)
    assert s.frame == 0
    assert s.own_count[catalog.worker_id] == 4
    assert s.own_count[catalog.main_building_id] == 1
    assert int(s.own_count.sum()) == 5
    assert s.production == ()
    assert s.supply_used == 8
    assert s.supply_max == 18
    assert s.supply_left == 10


def test_advance_zero_is_identity(catalog):
    s = initial_state(catalog)
    assert advance(s, 0, catalog) == s


def test_advance_backwards_rejected(catalog):
    s = advance(initial_state(catalog), 100, catalog)
    with pytest.raises(ValueError):
        advance(s, 50, catalog)


def test_linear_progress(catalog):
    pylon = catalog.build_id("pylon")
    frames = catalog.build(pylon).build_frames
    s = apply_event(
        initial_state(catalog), GameEvent(0, EventKind.PRODUCED, pylon), catalog
    )
    half = advance(s, frames // 2, catalog)
    assert half.production_progress(catalog)[pylon] == pytest.approx(
        (frames // 2) / frames
    )
    assert half.in_production_count()[pylon] == 1


def test_advance_composition(catalog):
    pylon = catalog.build_id("pylon")
    s = apply_event(
        initial_state(catalog), GameEvent(0, EventKind.PRODUCED, pylon), catalog
    )
    assert advance(advance(s, 200, catalog), 900, catalog) == advance(s, 900, catalog)


def test_completion_moves_counts_and_supply(catalog):
    pylon = catalog.build_id("pylon")
    spec = catalog.build(pylon)
    s = apply_event(
        initial_state(catalog), GameEvent(0, EventKind.PRODUCED, pylon), catalog
    )
    done = advance(s, spec.build_frames, catalog)
    assert done.own_count[pylon] == 1
    assert done.production == ()
    assert done.supply_max == 18 + spec.supply_provided


def test_soonest_finishing_instance_progress(catalog):
    probe = catalog.worker_id
    frames = catalog.build(probe).build_frames
    s = initial_state(catalog)
    s = apply_event(s, GameEvent(0, EventKind.PRODUCED, probe), catalog)
    s = advance(s, 100, catalog)
    s = apply_event(s, GameEvent(100, EventKind.PRODUCED, probe), catalog)
    s = advance(s, 150, catalog)
    # two probes queued; the one started at frame 0 is further along
    assert s.in_production_count()[probe] == 2
    assert s.production_progress(catalog)[probe] == pytest.approx(150 / frames)


def test_produced_consumes_supply(catalog):
    probe = catalog.worker_id
    s = apply_event(
        initial_state(catalog), GameEvent(0, EventKind.PRODUCED, probe), catalog
    )
    assert s.supply_used == 8 + catalog.build(probe).supply_cost
    assert s.in_production_count()[probe] == 1
    assert s.own_count[probe] == 4


def test_enemy_observed_accumulates(catalog):
    marine = catalog.enemy_id("marine")
    s = initial_state(catalog)
    s = apply_event(s, GameEvent(0, EventKind.ENEMY_OBSERVED, marine), catalog)
    s = apply_event(s, GameEvent(5, EventKind.ENEMY_OBSERVED, marine), catalog)
    assert s.enemy_count[marine] == 2


def test_destroy_without_owning_names_frame_and_build(catalog):
    zealot = catalog.build_id("zealot")
    with pytest.raises(ConsistencyError) as err:
        apply_event(
            initial_state(catalog), GameEvent(77, EventKind.DESTROYED, zealot), catalog
        )
    assert "77" in str(err.value)
    assert "zealot" in str(err.value)


def test_destroyed_reverses_supply(catalog):
    probe = catalog.worker_id
    s = initial_state(catalog)
    before = s.supply_used
    s = apply_event(s, GameEvent(10, EventKind.DESTROYED, probe), catalog)
    assert s.own_count[probe] == 3
    assert s.supply_used == before - catalog.build(probe).supply_cost


def test_one_time_build_cannot_repeat(catalog):
    storm = catalog.build_id("psionic_storm")
    s = apply_event(
        initial_state(catalog), GameEvent(0, EventKind.PRODUCED, storm), catalog
    )
    with pytest.raises(ConsistencyError):
        apply_event(s, GameEvent(10, EventKind.PRODUCED, storm), catalog)
    finished = advance(s, 10_000, catalog)
    assert finished.own_count[storm] == 1
    with pytest.raises(ConsistencyError):
        apply_event(finished, GameEvent(10_001, EventKind.PRODUCED, storm), catalog)


def _five_event_log(catalog):
    pylon = catalog.build_id("pylon")
    probe = catalog.worker_id
    gateway = catalog.build_id("gateway")
    marine = catalog.enemy_id("marine")
    return EventLog(
        game_id="hand-trace",
        events=(
            GameEvent(0, EventKind.PRODUCED, pylon),
            GameEvent(100, EventKind.PRODUCED, probe),
            GameEvent(200, EventKind.ENEMY_OBSERVED, marine),
            GameEvent(300, EventKind.PRODUCED, gateway),
            GameEvent(500, EventKind.DESTROYED, pylon),  # pylon completed at 450
        ),
    )


def test_hand_traced_five_event_log(catalog):
    """Every snapshot checked against a worked-by-hand simulation."""
    pylon = catalog.build_id("pylon")
    probe = catalog.worker_id
    gateway = catalog.build_id("gateway")
    marine = catalog.enemy_id("marine")
    pairs = extract_pairs(_five_event_log(catalog), catalog)
    assert [p.action for p in pairs] == [pylon, probe, gateway]

    s0 = pairs[0].state  # before anything happens
    assert s0 == initial_state(catalog)

    s1 = pairs[1].state  # frame 100: pylon 100/450 done
    assert s1.frame == 100
    assert s1.in_production_count()[pylon] == 1
    assert s1.production_progress(catalog)[pylon] == pytest.approx(100 / 450)
    assert s1.supply_used == 8 and s1.supply_max == 18

    s2 = pairs[2].state  # frame 300: pylon 300/450, probe (started @100) 200/300
    assert s2.frame == 300
    assert s2.own_count[probe] == 4
    assert s2.production_progress(catalog)[pylon] == pytest.approx(300 / 450)
    assert s2.production_progress(catalog)[probe] == pytest.approx(200 / 300)
    assert s2.enemy_count[marine] == 1
    assert s2.supply_used == 10  # the queued probe costs supply up front

    # replay to the end: probe done @400, pylon done @450 then destroyed @500
    final = None
    for state, event in replay(_five_event_log(catalog), catalog):
        final = apply_event(state, event, catalog)
    assert final.own_count[probe] == 5
    assert final.own_count[pylon] == 0
    assert final.supply_max == 18  # pylon's supply revoked on destruction
    assert final.supply_used == 10
    assert final.in_production_count()[gateway] == 1


def test_pair_count_equals_produced_count(catalog, small_logs):
    for log in small_logs[:10]:
        assert len(extract_pairs(log, catalog)) == log.produced_count()


def test_pairs_reconstructible_from_prefix(catalog, small_logs):
    """Replaying the event prefix by hand reproduces each emitted snapshot."""
    log = small_logs[0]
    pairs = extract_pairs(log, catalog)
    produced = [e for e in log.events if e.kind is EventKind.PRODUCED]
    for pair, event in zip(pairs[:20], produced[:20]):
        state = initial_state(catalog)
        for prior in log.events:
            if prior is event:
                break
            state = advance(state, prior.frame, catalog)
            state = apply_event(state, prior, catalog)
        state = advance(state, event.frame, catalog)
        assert state == pair.state


def test_counts_never_negative_along_replay(catalog, small_logs):
    for log in small_logs[:5]:
        for state, _ in replay(log, catalog):
            assert (state.own_count >= 0).all()
            assert (state.enemy_count >= 0).all()
            assert state.supply_used >= 0


def test_supply_accounting_invariant(catalog, small_logs):
    """supply_used = initial + supply cost of everything produced minus
    everything destroyed, at every point of the replay."""
    log = small_logs[1]
    expected = initial_state(catalog).supply_used
    for state, event in replay(log, catalog):
        assert state.supply_used == expected
        cost = catalog.build(event.type_id).supply_cost if event.kind in (
            EventKind.PRODUCED,
            EventKind.DESTROYED,
        ) else 0
        if event.kind is EventKind.PRODUCED:
            expected += cost
        elif event.kind is EventKind.DESTROYED:
            expected -= cost


@settings(max_examples=30, deadline=None)
@given(
    frames=st.lists(st.integers(min_value=0, max_value=2000), min_size=1, max_size=8),
    split=st.integers(min_value=0, max_value=3000),
)
def test_advance_composition_property(catalog, frames, split):
    probe = catalog.worker_id
    s = initial_state(catalog)
    t = 0
    for gap in frames:
        t += gap
        s = apply_event(advance(s, t, catalog), GameEvent(t, EventKind.PRODUCED, probe), catalog)
    end = t + 3000
    mid = min(t + split, end)
    assert advance(advance(s, mid, catalog), end, catalog) == advance(s, end, catalog)
