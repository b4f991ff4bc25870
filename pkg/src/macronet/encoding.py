"""State vectorization: macro states to normalized 210-entry feature vectors.

Fixed layout (all values in [0, 1]):

====== ======================================= ==========================
index  contents                                normalization
====== ======================================= ==========================
0-31   own units/buildings, completed          per-type cap
32-38  own technologies (one-time)             cap 1
39-57  own upgrades (one-time)                 cap 1
58-115 in-production counts, per own build     per-type cap (same table)
116-173 production progress, per own build     already a fraction
174-206 observed enemy material                per-type cap
207-209 supply used / supply max / supply left shared supply cap
====== ======================================= ==========================

Counts above their cap clamp to 1.0 (logged once per feature). Caps live in
a normalization table file so the encoding is corpus independent and other
matchups can retune without code changes.
"""

from __future__ import annotations

import hashlib
import io
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .catalog import (
    N_ENEMY_TYPES,
    N_OWN_BUILDS,
    N_TECHNOLOGIES,
    N_UNITS_BUILDINGS,
    N_UPGRADES,
    BuildCatalog,
)
from .errors import FormatError, ParseError, SchemaError
from .forward import MacroState, extract_pairs

logger = logging.getLogger(__name__)

N_FEATURES = 210
N_CLASSES = N_OWN_BUILDS

OWN_SLICE = slice(0, 58)
TECH_SLICE = slice(N_UNITS_BUILDINGS, N_UNITS_BUILDINGS + N_TECHNOLOGIES)
UPGRADE_SLICE = slice(N_UNITS_BUILDINGS + N_TECHNOLOGIES, N_OWN_BUILDS)
IN_PRODUCTION_SLICE = slice(58, 116)
PROGRESS_SLICE = slice(116, 174)
ENEMY_SLICE = slice(174, 207)
SUPPLY_SLICE = slice(207, 210)

DEFAULT_NORMS_RESOURCE = "default.norms"


# ---------------------------------------------------------------------------
# Normalization table
# ---------------------------------------------------------------------------


@dataclass
class NormalizationTable:
    """Per-feature caps. Same own-build caps apply to completed and
    in-production counts; technologies and upgrades should cap at 1."""

    own_caps: np.ndarray  # (58,) float64, > 0
    enemy_caps: np.ndarray  # (33,) float64, > 0
    supply_cap: float
    _warned: set = field(default_factory=set, repr=False, compare=False)

    def content_hash(self) -> str:
        payload = (
            self.own_caps.astype(">f8").tobytes()
            + self.enemy_caps.astype(">f8").tobytes()
            + struct.pack(">d", self.supply_cap)
        )
        return hashlib.sha256(payload).hexdigest()[:16]

    def _warn_clamp(self, feature_index: int, value: float) -> None:
        if feature_index not in self._warned:
            self._warned.add(feature_index)
            logger.warning(
                "feature %d exceeds its normalization cap (value %s); clamping to 1.0",
                feature_index,
                value,
            )


_NORM_SECTIONS = ("units_buildings", "technologies", "upgrades", "enemy_types", "supply")


def load_norms(source, catalog: BuildCatalog) -> NormalizationTable:
    """Parse a normalization table and check it covers the whole catalog.

    Format mirrors the catalog file: sections ``[units_buildings]``,
    ``[technologies]``, ``[upgrades]``, ``[enemy_types]`` with ``name, cap``
    lines, plus ``[supply]`` with a single ``supply, <cap>`` line.
    """
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    entries: dict[str, dict[str, float]] = {s: {} for s in _NORM_SECTIONS}
    current: str | None = None
    for lineno, raw in enumerate(data.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _NORM_SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno)
            current = name
            continue
        if current is None:
            raise ParseError("entry before any section header", lineno)
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ParseError(f"expected 'name, cap', got {line!r}", lineno)
        try:
            cap = float(parts[1])
        except ValueError:
            raise ParseError(f"bad cap {parts[1]!r}", lineno) from None
        if cap <= 0:
            raise SchemaError(f"line {lineno}: cap must be positive, got {cap}")
        if parts[0] in entries[current]:
            raise ParseError(f"duplicate entry {parts[0]!r}", lineno)
        entries[current][parts[0]] = cap

    own_caps = np.zeros(N_OWN_BUILDS, dtype=np.float64)
    for section, group in (
        ("units_buildings", catalog.units_buildings),
        ("technologies", catalog.technologies),
        ("upgrades", catalog.upgrades),
    ):
        table = entries[section]
        for spec in group:
            if spec.name not in table:
                raise SchemaError(f"{section}: missing cap for {spec.name!r}")
            own_caps[spec.id] = table[spec.name]
        extra = set(table) - {spec.name for spec in group}
        if extra:
            raise SchemaError(f"{section}: caps for unknown names {sorted(extra)}")
    enemy_caps = np.zeros(N_ENEMY_TYPES, dtype=np.float64)
    table = entries["enemy_types"]
    for spec in catalog.enemy_types:
        if spec.name not in table:
            raise SchemaError(f"enemy_types: missing cap for {spec.name!r}")
        enemy_caps[spec.id] = table[spec.name]
    extra = set(table) - {spec.name for spec in catalog.enemy_types}
    if extra:
        raise SchemaError(f"enemy_types: caps for unknown names {sorted(extra)}")
    if "supply" not in entries["supply"]:
        raise SchemaError("supply: missing 'supply, <cap>' entry")
    return NormalizationTable(
        own_caps=own_caps,
        enemy_caps=enemy_caps,
        supply_cap=entries["supply"]["supply"],
    )


def write_norms(norms: NormalizationTable, catalog: BuildCatalog, sink) -> None:
    """Canonical serialization; load_norms(write_norms(t)) == t."""

    def fmt(x: float) -> str:
        return repr(int(x)) if float(x).is_integer() else repr(float(x))

    out = io.StringIO()
    for section, group in (
        ("units_buildings", catalog.units_buildings),
        ("technologies", catalog.technologies),
        ("upgrades", catalog.upgrades),
    ):
        out.write(f"[{section}]\n")
        for spec in group:
            out.write(f"{spec.name}, {fmt(norms.own_caps[spec.id])}\n")
    out.write("[enemy_types]\n")
    for spec in catalog.enemy_types:
        out.write(f"{spec.name}, {fmt(norms.enemy_caps[spec.id])}\n")
    out.write("[supply]\n")
    out.write(f"supply, {fmt(norms.supply_cap)}\n")
    data = out.getvalue().encode("utf-8")
    try:
        sink.write(data)
    except TypeError:
        sink.write(data.decode("utf-8"))


def load_default_norms(catalog: BuildCatalog) -> NormalizationTable:
    from importlib import resources

    ref = resources.files(__package__) / "data" / DEFAULT_NORMS_RESOURCE
    with ref.open("rb") as f:
        return load_norms(f, catalog)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


def encode(state: MacroState, catalog: BuildCatalog, norms: NormalizationTable) -> np.ndarray:
    """Vectorize one macro state. Deterministic; output in [0, 1]^210."""
    v = np.zeros(N_FEATURES, dtype=np.float64)
    own = state.own_count / norms.own_caps
    in_prod = state.in_production_count() / norms.own_caps
    enemy = state.enemy_count / norms.enemy_caps
    for offset, block in ((0, own), (58, in_prod), (174, enemy)):
        over = np.nonzero(block > 1.0)[0]
        for i in over:
            norms._warn_clamp(offset + int(i), float(block[i]))
    v[OWN_SLICE] = np.clip(own, 0.0, 1.0)
    v[IN_PRODUCTION_SLICE] = np.clip(in_prod, 0.0, 1.0)
    v[PROGRESS_SLICE] = state.production_progress(catalog)
    v[ENEMY_SLICE] = np.clip(enemy, 0.0, 1.0)
    cap = norms.supply_cap
    for offset, raw in ((207, state.supply_used), (208, state.supply_max)):
        if raw > cap:
            norms._warn_clamp(offset, raw)
    v[207] = min(1.0, state.supply_used / cap)
    v[208] = min(1.0, state.supply_max / cap)
    v[209] = min(1.0, max(0.0, state.supply_left / cap))
    return v


# ---------------------------------------------------------------------------
# Feature-group masks
# ---------------------------------------------------------------------------

GROUP_SLICES = {
    "a": OWN_SLICE,  # own material
    "b": IN_PRODUCTION_SLICE,  # material under construction
    "c": PROGRESS_SLICE,  # construction progress
    "d": ENEMY_SLICE,  # opponent material
    "e": SUPPLY_SLICE,  # supply
}


@dataclass(frozen=True)
class FeatureGroupMask:
    """Which feature groups stay live. Excluded groups are zero-filled so one
    210-wide network topology serves every ablation and the blind policy."""

    own_material: bool = True  # group a
    in_production: bool = True  # group b
    progress: bool = True  # group c
    opponent: bool = True  # group d
    supply: bool = True  # group e

    def __post_init__(self):
        if not self.own_material:
            raise ValueError("own material (group a) cannot be masked out")

    def included(self) -> dict[str, bool]:
        return {
            "a": self.own_material,
            "b": self.in_production,
            "c": self.progress,
            "d": self.opponent,
            "e": self.supply,
        }

    def label(self) -> str:
        return "+".join(g for g, on in self.included().items() if on)

    def to_bits(self) -> int:
        return sum(1 << i for i, on in enumerate(self.included().values()) if on)

    @classmethod
    def from_bits(cls, bits: int) -> "FeatureGroupMask":
        return cls(*(bool(bits >> i & 1) for i in range(5)))


FULL_MASK = FeatureGroupMask()


def parse_mask(label: str) -> FeatureGroupMask:
    """Parse the compact group grammar, e.g. ``a+b+c+d+e`` or ``a+d``."""
    groups = {g.strip() for g in label.split("+") if g.strip()}
    unknown = groups - set(GROUP_SLICES)
    if unknown:
        raise ValueError(f"unknown feature groups {sorted(unknown)} in {label!r}")
    if "a" not in groups:
        raise ValueError("mask must include group a (own material)")
    return FeatureGroupMask(
        own_material=True,
        in_production="b" in groups,
        progress="c" in groups,
        opponent="d" in groups,
        supply="e" in groups,
    )


def apply_mask(vector: np.ndarray, mask: FeatureGroupMask) -> np.ndarray:
    """Zero out excluded groups; included coordinates pass through unchanged.
    Accepts a single vector or a (n, 210) batch; returns a copy."""
    out = np.array(vector, dtype=np.float64, copy=True)
    for group, on in mask.included().items():
        if not on:
            out[..., GROUP_SLICES[group]] = 0.0
    return out


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameRecord:
    game_id: str
    vectors: np.ndarray  # (n, 210) float64
    actions: np.ndarray  # (n,) int64 in [0, 58)

    def __eq__(self, other):
        if not isinstance(other, GameRecord):
            return NotImplemented
        return (
            self.game_id == other.game_id
            and np.array_equal(self.vectors, other.vectors)
            and np.array_equal(self.actions, other.actions)
        )


@dataclass(frozen=True)
class Dataset:
    """Ordered per-game records plus the hashes of the artifacts that encoded
    them, carried along so trained models can record their pipeline."""

    games: tuple[GameRecord, ...]
    catalog_hash: str = ""
    norms_hash: str = ""

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.catalog_hash == other.catalog_hash
            and self.norms_hash == other.norms_hash
            and self.games == other.games
        )

    @property
    def n_pairs(self) -> int:
        return sum(len(g.actions) for g in self.games)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All pairs concatenated in game order: (X, y)."""
        if not self.games:
            return (
                np.zeros((0, N_FEATURES), dtype=np.float64),
                np.zeros(0, dtype=np.int64),
            )
        X = np.concatenate([g.vectors for g in self.games], axis=0)
        y = np.concatenate([g.actions for g in self.games], axis=0)
        return X, y


def build_dataset(logs, catalog: BuildCatalog, norms: NormalizationTable) -> Dataset:
    """Extract and encode a corpus of event logs, preserving game order."""
    games = []
    for log in logs:
        pairs = extract_pairs(log, catalog)
        vectors = np.zeros((len(pairs), N_FEATURES), dtype=np.float64)
        actions = np.zeros(len(pairs), dtype=np.int64)
        for i, pair in enumerate(pairs):
            vectors[i] = encode(pair.state, catalog, norms)
            actions[i] = pair.action
        games.append(GameRecord(game_id=log.game_id, vectors=vectors, actions=actions))
    return Dataset(
        games=tuple(games),
        catalog_hash=catalog.content_hash(),
        norms_hash=norms.content_hash(),
    )


_DATASET_MAGIC = b"MNDS"
_DATASET_VERSION = 1


def _write_str(out, s: str) -> None:
    data = s.encode("utf-8")
    out.write(struct.pack(">H", len(data)))
    out.write(data)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated dataset file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def read_str(self) -> str:
        (n,) = self.unpack(">H")
        return self.take(n).decode("utf-8")

    def done(self) -> bool:
        return self.pos == len(self.data)


def write_dataset(dataset: Dataset, sink) -> None:
    """Binary dataset file: header, then per-game actions and full-precision
    vectors. Deterministic; round-trips through read_dataset."""
    sink.write(_DATASET_MAGIC)
    sink.write(struct.pack(">III", _DATASET_VERSION, N_FEATURES, N_CLASSES))
    _write_str(sink, dataset.catalog_hash)
    _write_str(sink, dataset.norms_hash)
    sink.write(struct.pack(">I", len(dataset.games)))
    for game in dataset.games:
        _write_str(sink, game.game_id)
        n = len(game.actions)
        if game.vectors.shape != (n, N_FEATURES):
            raise FormatError(
                f"game {game.game_id!r}: vector block shape {game.vectors.shape} "
                f"does not match {n} pairs x {N_FEATURES} features"
            )
        sink.write(struct.pack(">I", n))
        sink.write(game.actions.astype(">u2").tobytes())
        sink.write(game.vectors.astype(">f8").tobytes())


def read_dataset(source) -> Dataset:
    cur = _Cursor(source.read())
    if cur.take(4) != _DATASET_MAGIC:
        raise FormatError("not a dataset file (bad magic)")
    version, n_features, n_classes = cur.unpack(">III")
    if version != _DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    if n_features != N_FEATURES or n_classes != N_CLASSES:
        raise FormatError(
            f"dataset declares {n_features} features / {n_classes} classes, "
            f"expected {N_FEATURES} / {N_CLASSES}"
        )
    catalog_hash = cur.read_str()
    norms_hash = cur.read_str()
    (n_games,) = cur.unpack(">I")
    games = []
    for _ in range(n_games):
        game_id = cur.read_str()
        (n,) = cur.unpack(">I")
        actions = np.frombuffer(cur.take(n * 2), dtype=">u2").astype(np.int64)
        if np.any(actions >= N_CLASSES):
            raise FormatError(f"game {game_id!r}: action index out of range")
        vectors = (
            np.frombuffer(cur.take(n * N_FEATURES * 8), dtype=">f8")
            .reshape(n, N_FEATURES)
            .astype(np.float64)
        )
        games.append(GameRecord(game_id=game_id, vectors=vectors, actions=actions))
    if not cur.done():
        raise FormatError("trailing bytes after last game record")
    return Dataset(games=tuple(games), catalog_hash=catalog_hash, norms_hash=norms_hash)


def export_dataset_text(dataset: Dataset, sink) -> None:
    """Plain-text debugging dump: one 'game' header per game, then one line
    per pair with the action index followed by all 210 feature values."""
    write = sink.write
    write(f"# dataset: {len(dataset.games)} games, {dataset.n_pairs} pairs\n")
    write(f"# catalog_hash: {dataset.catalog_hash} norms_hash: {dataset.norms_hash}\n")
    for game in dataset.games:
        write(f"game {game.game_id} {len(game.actions)}\n")
        for action, row in zip(game.actions, game.vectors):
            write(str(int(action)))
            write(" ")
            write(" ".join(repr(float(x)) for x in row))
            write("\n")
