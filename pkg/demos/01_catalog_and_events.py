"""Walk through the build catalog and the event-log format.

Run me from the repository root:  python3 demos/01_catalog_and_events.py
"""

import io

from macronet import (
    EventKind,
    GameEvent,
    EventLog,
    load_default_catalog,
    parse_event_log,
    write_event_log,
)
from macronet.errors import ValidationError

catalog = load_default_catalog()

# The catalog enumerates everything one side can produce. Indices are dense
# and stable, so they double as network output classes.
print(f"{len(catalog.builds)} own builds:")
print(f"  units and buildings: {len(catalog.units_buildings)}")
print(f"  technologies:        {len(catalog.technologies)}")
print(f"  upgrades:            {len(catalog.upgrades)}")
print(f"{len(catalog.enemy_types)} observable enemy types")
print(f"catalog content hash: {catalog.content_hash()}")
print()

# A few entries, to show what a spec carries.
for name in ("probe", "nexus", "pylon", "dragoon", "psionic_storm"):
    spec = catalog.build(catalog.build_id(name))
    print(
        f"  {spec.name:<14} id={spec.id:<3} minerals={spec.mineral_cost:<4}"
        f" gas={spec.gas_cost:<4} frames={spec.build_frames:<5}"
        f" supply_cost={spec.supply_cost} provides={spec.supply_provided}"
        f" prereqs={[catalog.build(p).name for p in spec.prerequisites]}"
    )
print()

# Event logs are plain text: a header line, then frame/kind/name rows.
# Frames may repeat but never go backwards.
probe = "probe"
log = EventLog(
    game_id="demo-0001",
    events=(
        GameEvent(0, EventKind.PRODUCED, catalog.build_id("pylon")),
        GameEvent(120, EventKind.PRODUCED, catalog.build_id(probe)),
        GameEvent(300, EventKind.ENEMY_OBSERVED, catalog.enemy_id("marine")),
        GameEvent(450, EventKind.PRODUCED, catalog.build_id("gateway")),
        GameEvent(700, EventKind.DESTROYED, catalog.build_id("pylon")),
    ),
)

buf = io.StringIO()
write_event_log(log, buf, catalog)
text = buf.getvalue()
print("serialized log:")
print(text)

# Parsing is strict. The same text round-trips to the same log.
again = parse_event_log(io.StringIO(text), catalog)
assert again.events == log.events
print("round-trip ok:", again.game_id, f"({len(again.events)} events)")

# Off-race names are rejected outright; one bad line voids the whole file.
bad = text.replace("gateway", "barracks")
try:
    parse_event_log(io.StringIO(bad), catalog)
except ValidationError as e:
    print("rejected off-race log:", e)
