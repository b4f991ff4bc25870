"""Framed request/response prediction service.

Wire protocol, version 1: each message is a 4-byte big-endian length prefix
followed by that many bytes of UTF-8 JSON. One request, one response.

Request fields:
    request_id  string, echoed back
    vector      raw encoded state: 210 floats in [0, 1]; or instead
    state       structured macro state (see _state_from_json for the schema)
    policy      optional overrides: mode / blind / exclusions (names) / seed

Response fields:
    request_id, build {name, index}, distribution {name: probability},
    model_version, latency_micros
Errors come back as {request_id, error: {kind, message}} and leave the
connection usable.

The model is immutable and shared across connections; the only per-request
state is each connection's rng stream, seeded from (server seed,
connection id) so sampled decisions are reproducible from logs.
"""

from __future__ import annotations

import itertools
import json
import socket
import socketserver
import struct
import threading
import time

import numpy as np

from .catalog import BuildCatalog
from .encoding import N_FEATURES, NormalizationTable, encode
from .errors import (
    ClientTimeout,
    CompatibilityError,
    DegenerateDistributionError,
    ProtocolError,
)
from .forward import MacroState
from .net import Network
from .policy import DecisionPolicy, Mode, decide_from_vector

MAX_MESSAGE_BYTES = 1 << 20
DEFAULT_TIMEOUT = 0.1


def write_frame(stream, payload: bytes) -> None:
    if len(payload) > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message of {len(payload)} bytes exceeds the frame limit")
    stream.write(struct.pack(">I", len(payload)))
    stream.write(payload)
    stream.flush()


def read_frame(stream) -> bytes | None:
    """One framed payload, or None on clean end-of-stream. A stream that
    ends mid-frame is a protocol error."""
    header = stream.read(4)
    if header == b"":
        return None
    if len(header) < 4:
        raise ProtocolError("stream ended inside a frame header")
    (length,) = struct.unpack(">I", header)
    if length > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"frame of {length} bytes exceeds the frame limit")
    payload = stream.read(length)
    if len(payload) < length:
        raise ProtocolError("stream ended inside a frame body")
    return payload


class _RequestError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _policy_from_json(base: DecisionPolicy, spec, catalog: BuildCatalog) -> DecisionPolicy:
    if spec is None:
        return base
    if not isinstance(spec, dict):
        raise _RequestError("bad-request", "policy must be an object")
    mode = base.mode
    if "mode" in spec:
        try:
            mode = Mode(spec["mode"])
        except ValueError:
            raise _RequestError("bad-request", f"unknown policy mode {spec['mode']!r}")
    blind = bool(spec.get("blind", base.blind))
    exclusions = base.exclusions
    if "exclusions" in spec:
        if not isinstance(spec["exclusions"], list):
            raise _RequestError("bad-request", "exclusions must be a list of names")
        try:
            exclusions = frozenset(catalog.build_id(n) for n in spec["exclusions"])
        except KeyError as e:
            raise _RequestError("bad-request", str(e))
    seed = spec.get("seed", base.seed)
    if not isinstance(seed, int) or seed < 0:
        raise _RequestError("bad-request", "policy seed must be a non-negative integer")
    return DecisionPolicy(mode=mode, blind=blind, exclusions=exclusions, seed=seed)


def _counts_from_json(obj, size: int, lookup, what: str) -> np.ndarray:
    counts = np.zeros(size, dtype=np.int64)
    if obj is None:
        return counts
    if not isinstance(obj, dict):
        raise _RequestError("invalid-state", f"{what} must be a name->count object")
    for name, count in obj.items():
        try:
            idx = lookup(name)
        except KeyError:
            raise _RequestError("invalid-state", f"unknown {what} name {name!r}")
        if not isinstance(count, int) or count < 0:
            raise _RequestError(
                "invalid-state", f"{what} count for {name!r} must be a non-negative integer"
            )
        counts[idx] = count
    return counts


def _state_from_json(obj, catalog: BuildCatalog) -> MacroState:
    """Schema: {frame, own: {build: count}, production: [{name, done_at}],
    enemy: {type: count}, supply_used, supply_max}. Missing sections default
    to empty."""
    if not isinstance(obj, dict):
        raise _RequestError("invalid-state", "state must be an object")
    frame = obj.get("frame", 0)
    supply_used = obj.get("supply_used", 0)
    supply_max = obj.get("supply_max", 0)
    for label, value in (("frame", frame), ("supply_used", supply_used), ("supply_max", supply_max)):
        if not isinstance(value, int) or value < 0:
            raise _RequestError("invalid-state", f"{label} must be a non-negative integer")
    own = _counts_from_json(obj.get("own"), len(catalog.builds), catalog.build_id, "build")
    enemy = _counts_from_json(
        obj.get("enemy"), len(catalog.enemy_types), catalog.enemy_id, "enemy"
    )
    production = []
    for entry in obj.get("production", []):
        if not isinstance(entry, dict) or "name" not in entry or "done_at" not in entry:
            raise _RequestError(
                "invalid-state", "production entries need name and done_at"
            )
        try:
            build_id = catalog.build_id(entry["name"])
        except KeyError as e:
            raise _RequestError("invalid-state", str(e))
        done_at = entry["done_at"]
        if not isinstance(done_at, int) or done_at < 0:
            raise _RequestError("invalid-state", "done_at must be a non-negative integer")
        production.append((build_id, done_at))
    return MacroState(
        frame=frame,
        own_count=own,
        enemy_count=enemy,
        production=tuple(production),
        supply_used=supply_used,
        supply_max=supply_max,
    )


def _vector_from_json(obj) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != N_FEATURES:
        got = len(obj) if isinstance(obj, list) else type(obj).__name__
        raise _RequestError(
            "bad-request", f"vector must be a list of {N_FEATURES} numbers, got {got}"
        )
    try:
        vec = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError):
        raise _RequestError("bad-request", "vector entries must be numbers")
    if not np.isfinite(vec).all() or vec.min() < 0.0 or vec.max() > 1.0:
        raise _RequestError("bad-request", "vector values must lie in [0, 1]")
    return vec


class _Handler(socketserver.StreamRequestHandler):
    # Nagle + delayed ACK stalls the two-write frame pattern by ~40ms
    disable_nagle_algorithm = True

    def handle(self):
        server: PredictionServer = self.server  # type: ignore[assignment]
        rng = np.random.default_rng([server.seed, server.next_connection_id()])
        self.connection.settimeout(0.5)
        while True:
            try:
                payload = read_frame(self.rfile)
            except socket.timeout:
                if server.stopping:
                    break
                continue
            except (ProtocolError, OSError):
                break
            if payload is None:
                break
            try:
                write_frame(self.wfile, server.answer(payload, rng))
            except OSError:
                break


class PredictionServer(socketserver.ThreadingTCPServer):
    """Serves one immutable model over the framed protocol."""

    allow_reuse_address = True
    daemon_threads = False
    block_on_close = True

    def __init__(
        self,
        net: Network,
        catalog: BuildCatalog,
        norms: NormalizationTable,
        policy: DecisionPolicy = DecisionPolicy(),
        address: tuple[str, int] = ("127.0.0.1", 0),
        seed: int = 0,
    ):
        if net.meta.catalog_hash and net.meta.catalog_hash != catalog.content_hash():
            raise CompatibilityError("model was trained with a different catalog")
        if net.meta.norms_hash and net.meta.norms_hash != norms.content_hash():
            raise CompatibilityError(
                "model was trained with a different normalization table"
            )
        self.net = net
        self.catalog = catalog
        self.norms = norms
        self.policy = policy
        self.seed = seed
        self.model_version = net.model_version()
        self.stopping = False
        self._conn_counter = itertools.count()
        self._conn_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        super().__init__(address, _Handler)

    def next_connection_id(self) -> int:
        with self._conn_lock:
            return next(self._conn_counter)

    def answer(self, payload: bytes, rng: np.random.Generator) -> bytes:
        """One response frame for one request frame; never raises on bad
        input, so one malformed request cannot kill a connection."""
        request_id = ""
        try:
            try:
                request = json.loads(payload.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise _RequestError("bad-json", str(e))
            if not isinstance(request, dict):
                raise _RequestError("bad-request", "request must be an object")
            request_id = str(request.get("request_id", ""))
            has_vector = "vector" in request
            has_state = "state" in request
            if has_vector == has_state:
                raise _RequestError(
                    "bad-request", "request needs exactly one of vector or state"
                )
            started = time.perf_counter_ns()
            if has_vector:
                vec = _vector_from_json(request["vector"])
            else:
                state = _state_from_json(request["state"], self.catalog)
                vec = encode(state, self.catalog, self.norms)
            policy = _policy_from_json(self.policy, request.get("policy"), self.catalog)
            if "seed" in (request.get("policy") or {}):
                rng = np.random.default_rng([self.seed, policy.seed])
            try:
                index, dist = decide_from_vector(self.net, vec, policy, rng)
            except DegenerateDistributionError as e:
                raise _RequestError("degenerate-distribution", str(e))
            latency = (time.perf_counter_ns() - started) // 1000
            body = {
                "request_id": request_id,
                "build": {"name": self.catalog.build(index).name, "index": index},
                "distribution": {
                    spec.name: float(p) for spec, p in zip(self.catalog.builds, dist)
                },
                "model_version": self.model_version,
                "latency_micros": int(latency),
            }
        except _RequestError as e:
            body = {"request_id": request_id, "error": {"kind": e.kind, "message": str(e)}}
        except Exception as e:  # pragma: no cover - defensive
            body = {
                "request_id": request_id,
                "error": {"kind": "internal", "message": f"{type(e).__name__}: {e}"},
            }
        return json.dumps(body).encode("utf-8")

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> None:
        """Serve on a background thread until stop()."""
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        """Graceful shutdown: stop accepting, finish in-flight requests."""
        self.stopping = True
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    def __enter__(self) -> "PredictionServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


class PredictionClient:
    """Reference client holding one persistent connection."""

    def __init__(self, address: tuple[str, int], timeout: float = DEFAULT_TIMEOUT):
        self.timeout = timeout
        try:
            self._sock = socket.create_connection(address, timeout=timeout)
        except socket.timeout as e:
            raise ClientTimeout(f"connect to {address} timed out") from e
        self._sock.settimeout(timeout)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._stream = self._sock.makefile("rwb")

    def predict(self, request: dict) -> dict:
        try:
            write_frame(self._stream, json.dumps(request).encode("utf-8"))
            payload = read_frame(self._stream)
        except socket.timeout as e:
            raise ClientTimeout(f"no response within {self.timeout}s") from e
        if payload is None:
            raise ProtocolError("server closed the connection")
        try:
            response = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ProtocolError(f"malformed response: {e}") from e
        if not isinstance(response, dict):
            raise ProtocolError("response is not an object")
        return response

    def close(self) -> None:
        try:
            self._stream.close()
        finally:
            self._sock.close()

    def __enter__(self) -> "PredictionClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def client_predict(
    address: tuple[str, int], request: dict, timeout: float = DEFAULT_TIMEOUT
) -> dict:
    """One-shot convenience wrapper: connect, ask, disconnect."""
    try:
        with PredictionClient(address, timeout=timeout) as client:
            return client.predict(request)
    except OSError as e:
        raise ProtocolError(f"connection to {address} failed: {e}") from e
