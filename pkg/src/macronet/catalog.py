"""Build catalog: the closed universe of producible and observable types.

A catalog fixes the layout of everything downstream: the 58 own builds
(32 units/buildings, 7 technologies, 19 upgrades, in that order) define
both the own-count blocks of the state vector and the 58 classes of the
output layer; the 33 enemy types define the observed-opponent block.

Catalogs are data, not code. The packaged default is a Protoss-vs-Terran
enumeration; other matchups are a data file away.
"""

from __future__ import annotations

import enum
import hashlib
import io
from dataclasses import dataclass, field

from .errors import ParseError, SchemaError

# Group sizes are part of the contract, not a tunable.
N_UNITS_BUILDINGS = 32
N_TECHNOLOGIES = 7
N_UPGRADES = 19
N_OWN_BUILDS = N_UNITS_BUILDINGS + N_TECHNOLOGIES + N_UPGRADES  # 58
N_ENEMY_TYPES = 33

_SECTIONS = ("units_buildings", "technologies", "upgrades", "enemy_types")
_GROUP_SIZES = {
    "units_buildings": N_UNITS_BUILDINGS,
    "technologies": N_TECHNOLOGIES,
    "upgrades": N_UPGRADES,
    "enemy_types": N_ENEMY_TYPES,
}

DEFAULT_CATALOG_RESOURCE = "protoss_vs_terran.catalog"


class BuildKind(enum.Enum):
    UNIT_OR_BUILDING = "unit_or_building"
    TECHNOLOGY = "technology"
    UPGRADE = "upgrade"


@dataclass(frozen=True)
class BuildSpec:
    """One producible type and the economic attributes the forward model needs."""

    id: int
    name: str
    kind: BuildKind
    mineral_cost: int
    gas_cost: int
    build_frames: int
    supply_cost: int
    supply_provided: int
    prerequisites: tuple[int, ...] = ()


@dataclass(frozen=True)
class EnemySpec:
    id: int
    name: str


@dataclass(frozen=True)
class BuildCatalog:
    """Immutable after load; safe to share across threads."""

    builds: tuple[BuildSpec, ...]
    enemy_types: tuple[EnemySpec, ...]
    _build_index: dict[str, int] = field(repr=False, default_factory=dict)
    _enemy_index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "_build_index", {b.name: b.id for b in self.builds}
        )
        object.__setattr__(
            self, "_enemy_index", {e.name: e.id for e in self.enemy_types}
        )

    def __eq__(self, other):
        if not isinstance(other, BuildCatalog):
            return NotImplemented
        return self.builds == other.builds and self.enemy_types == other.enemy_types

    # -- lookups ------------------------------------------------------------

    def build(self, build_id: int) -> BuildSpec:
        if not 0 <= build_id < len(self.builds):
            raise KeyError(f"unknown build id {build_id}")
        return self.builds[build_id]

    def build_id(self, name: str) -> int:
        try:
            return self._build_index[name]
        except KeyError:
            raise KeyError(f"unknown build name {name!r}") from None

    def enemy_id(self, name: str) -> int:
        try:
            return self._enemy_index[name]
        except KeyError:
            raise KeyError(f"unknown enemy type {name!r}") from None

    def has_build(self, name: str) -> bool:
        return name in self._build_index

    def has_enemy(self, name: str) -> bool:
        return name in self._enemy_index

    # -- derived groups -----------------------------------------------------

    @property
    def units_buildings(self) -> tuple[BuildSpec, ...]:
        return self.builds[:N_UNITS_BUILDINGS]

    @property
    def technologies(self) -> tuple[BuildSpec, ...]:
        return self.builds[N_UNITS_BUILDINGS : N_UNITS_BUILDINGS + N_TECHNOLOGIES]

    @property
    def upgrades(self) -> tuple[BuildSpec, ...]:
        return self.builds[N_UNITS_BUILDINGS + N_TECHNOLOGIES :]

    @property
    def worker_id(self) -> int:
        """By convention the first units_buildings entry is the race's worker."""
        return 0

    @property
    def main_building_id(self) -> int:
        """First entry that provides supply; the race's headquarters building."""
        for b in self.builds:
            if b.supply_provided > 0:
                return b.id
        raise SchemaError("catalog has no supply-providing build")

    def is_one_time(self, build_id: int) -> bool:
        """Technologies and upgrades can be owned at most once."""
        return self.build(build_id).kind is not BuildKind.UNIT_OR_BUILDING

    def content_hash(self) -> str:
        """Hash of the canonical serialization; stable across loads."""
        buf = io.BytesIO()
        write_catalog(self, buf)
        return hashlib.sha256(buf.getvalue()).hexdigest()[:16]


def output_index(catalog: BuildCatalog, build_id: int) -> int:
    """Position of a build in the state vector's own-count block and in the
    network's output layer. Ids are dense and assigned in file order, so this
    is the identity on valid ids; kept as a function for the lookup guard."""
    if not 0 <= build_id < len(catalog.builds):
        raise KeyError(f"unknown build id {build_id}")
    return build_id


# ---------------------------------------------------------------------------
# File format
#
# UTF-8, line oriented. Four sections, each introduced by a bracketed header:
#   [units_buildings] / [technologies] / [upgrades] / [enemy_types]
# Own-build entry (one per line):
#   name, mineral, gas, frames, supply_cost, supply_provided, prereq1|prereq2
# The prerequisite field may be empty. Enemy entries carry a name only.
# Blank lines and lines starting with '#' are ignored.
# ---------------------------------------------------------------------------


def _decode_lines(source) -> list[str]:
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.split("\n")


def load_catalog(source) -> BuildCatalog:
    """Parse a catalog file from a readable (byte or text) stream.

    Raises ParseError for malformed syntax (with the line number) and
    SchemaError when a group has the wrong number of entries.
    """
    sections: dict[str, list[tuple[int, str]]] = {s: [] for s in _SECTIONS}
    current: str | None = None
    seen: list[str] = []
    lines = _decode_lines(source)
    any_content = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        any_content = True
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno)
            if name in seen:
                raise ParseError(f"duplicate section [{name}]", lineno)
            seen.append(name)
            current = name
            continue
        if current is None:
            raise ParseError("entry before any section header", lineno)
        sections[current].append((lineno, line))
    if not any_content:
        raise ParseError("empty catalog file")
    for name in _SECTIONS:
        if name not in seen:
            raise SchemaError(f"{name}: missing section")
        got = len(sections[name])
        want = _GROUP_SIZES[name]
        if got != want:
            raise SchemaError(f"{name}: expected {want} entries, got {got}")

    # First pass: names and ids, so prerequisites can be resolved in pass two.
    kinds = (
        [(BuildKind.UNIT_OR_BUILDING, "units_buildings")]
        + [(BuildKind.TECHNOLOGY, "technologies")]
        + [(BuildKind.UPGRADE, "upgrades")]
    )
    own_rows: list[tuple[int, str, BuildKind, list[str]]] = []
    names: dict[str, int] = {}
    next_id = 0
    for kind, section in kinds:
        for lineno, line in sections[section]:
            fields = [f.strip() for f in line.split(",")]
            if len(fields) not in (6, 7):
                raise ParseError(
                    f"expected 6 or 7 comma-separated fields, got {len(fields)}",
                    lineno,
                )
            name = fields[0]
            if not name:
                raise ParseError("empty build name", lineno)
            if name in names:
                raise ParseError(f"duplicate build name {name!r}", lineno)
            names[name] = next_id
            own_rows.append((lineno, line, kind, fields))
            next_id += 1

    builds: list[BuildSpec] = []
    for build_id, (lineno, line, kind, fields) in enumerate(own_rows):
        try:
            mineral, gas, frames, sup_cost, sup_prov = (int(f) for f in fields[1:6])
        except ValueError:
            raise ParseError(f"non-integer numeric field in {line!r}", lineno) from None
        if mineral < 0 or gas < 0 or sup_prov < 0:
            raise SchemaError(f"line {lineno}: negative cost for {fields[0]!r}")
        if frames < 1:
            raise SchemaError(f"line {lineno}: build_frames must be >= 1 for {fields[0]!r}")
        if kind is not BuildKind.UNIT_OR_BUILDING and sup_cost != 0:
            raise SchemaError(
                f"line {lineno}: {fields[0]!r} is a {kind.value} and must have supply_cost 0"
            )
        prereqs: list[int] = []
        if len(fields) == 7 and fields[6]:
            for pname in fields[6].split("|"):
                pname = pname.strip()
                if pname not in names:
                    raise SchemaError(
                        f"line {lineno}: unknown prerequisite {pname!r} for {fields[0]!r}"
                    )
                prereqs.append(names[pname])
        builds.append(
            BuildSpec(
                id=build_id,
                name=fields[0],
                kind=kind,
                mineral_cost=mineral,
                gas_cost=gas,
                build_frames=frames,
                supply_cost=sup_cost,
                supply_provided=sup_prov,
                prerequisites=tuple(prereqs),
            )
        )

    enemies: list[EnemySpec] = []
    enemy_names: set[str] = set()
    for enemy_id, (lineno, line) in enumerate(sections["enemy_types"]):
        name = line.strip()
        if "," in name:
            raise ParseError("enemy entries carry a name only", lineno)
        if name in enemy_names:
            raise ParseError(f"duplicate enemy type {name!r}", lineno)
        enemy_names.add(name)
        enemies.append(EnemySpec(id=enemy_id, name=name))

    return BuildCatalog(builds=tuple(builds), enemy_types=tuple(enemies))


def write_catalog(catalog: BuildCatalog, sink) -> None:
    """Serialize in the canonical form load_catalog parses. Deterministic."""
    out = io.StringIO()
    for section, group in (
        ("units_buildings", catalog.units_buildings),
        ("technologies", catalog.technologies),
        ("upgrades", catalog.upgrades),
    ):
        out.write(f"[{section}]\n")
        for b in group:
            prereqs = "|".join(catalog.builds[p].name for p in b.prerequisites)
            out.write(
                f"{b.name}, {b.mineral_cost}, {b.gas_cost}, {b.build_frames}, "
                f"{b.supply_cost}, {b.supply_provided}, {prereqs}\n"
            )
    out.write("[enemy_types]\n")
    for e in catalog.enemy_types:
        out.write(f"{e.name}\n")
    data = out.getvalue().encode("utf-8")
    try:
        sink.write(data)
    except TypeError:
        sink.write(data.decode("utf-8"))


def load_default_catalog() -> BuildCatalog:
    """The packaged Protoss-vs-Terran catalog."""
    from importlib import resources

    ref = resources.files(__package__) / "data" / DEFAULT_CATALOG_RESOURCE
    with ref.open("rb") as f:
        return load_catalog(f)
