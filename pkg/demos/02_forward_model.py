"""Replay a game through the forward model and watch the macro state evolve.

python3 demos/02_forward_model.py
"""

from macronet import (
    EventKind,
    ReactiveScript,
    apply_event,
    generate_synthetic_corpus,
    initial_state,
    load_default_catalog,
    replay,
)

catalog = load_default_catalog()

state = initial_state(catalog)
print("frame 0 opening position:")
print(f"  probes={state.own_count[catalog.worker_id]}")
print(f"  nexus={state.own_count[catalog.main_building_id]}")
print(f"  supply {state.supply_used}/{state.supply_max} (left {state.supply_left})")
print()

# One synthetic game gives us a realistic event stream to replay.
script = ReactiveScript(catalog)
(log,) = generate_synthetic_corpus(script, 1, seed=42)
print(f"replaying {log.game_id}: {len(log.events)} events, "
      f"{log.produced_count()} of them production decisions")
print()

# replay() yields the state as it looked the instant before each event was
# applied. That pre-decision snapshot is exactly what becomes a training
# example when the event is a Produced.
shown = 0
final = None
for state, event in replay(log, catalog):
    final = apply_event(state, event, catalog)
    if event.kind is not EventKind.PRODUCED or shown >= 8:
        continue
    shown += 1
    name = catalog.build(event.type_id).name
    in_prod = len(state.production)
    print(
        f"  frame {event.frame:>5}: supply {state.supply_used:>3}/{state.supply_max:<3}"
        f" in-production={in_prod}  decided -> {name}"
    )

print("  ...")
print()
print(f"end of game at frame {final.frame}:")
worker = catalog.worker_id
print(f"  probes completed: {final.own_count[worker]}")
army = {
    n: int(final.own_count[catalog.build_id(n)]) for n in ("zealot", "dragoon")
}
print(f"  army on hand: {army}")
print(f"  enemy material seen: {int(final.enemy_count.sum())} sightings")
print(f"  supply {final.supply_used}/{final.supply_max}")

# Progress features come from the soonest-finishing instance of each build.
if final.production:
    build_id, done_at = min(final.production, key=lambda bf: bf[1])
    total = catalog.build(build_id).build_frames
    frac = 1.0 - (done_at - final.frame) / total
    print(
        f"  still building: {catalog.build(build_id).name} "
        f"({100 * frac:.0f}% done, finishes at frame {done_at})"
    )
