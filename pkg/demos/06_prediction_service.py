"""The prediction service end to end on loopback.

Frames are a 4-byte big-endian length followed by UTF-8 JSON. One request
per frame, one response per frame, connections stay up across requests,
and a bad request gets an error response instead of a dropped socket.

python3 demos/06_prediction_service.py
"""

import json

from macronet import (
    PredictionClient,
    PredictionServer,
    ReactiveScript,
    TrainConfig,
    build_dataset,
    encode,
    generate_synthetic_corpus,
    initial_state,
    load_default_catalog,
    load_default_norms,
    train,
)

catalog = load_default_catalog()
norms = load_default_norms(catalog)

print("training a small model to serve...")
logs = generate_synthetic_corpus(ReactiveScript(catalog), 40, seed=2)
dataset = build_dataset(logs, catalog, norms)
model, _ = train(dataset, TrainConfig(epochs=3, seed=0))
print(f"model {model.model_version()} ready")
print()

with PredictionServer(model, catalog, norms, seed=0) as server:
    host, port = server.server_address
    print(f"serving on {host}:{port}")
    with PredictionClient((host, port), timeout=2.0) as client:

        # Request form 1: a pre-encoded feature vector.
        vector = encode(initial_state(catalog), catalog, norms).tolist()
        response = client.predict({"request_id": "demo-1", "vector": vector})
        print(
            f"vector request  -> {response['build']['name']}"
            f" (index {response['build']['index']},"
            f" {response['latency_micros']} us)"
        )

        # Request form 2: a structured state the server encodes itself.
        response = client.predict(
            {
                "request_id": "demo-2",
                "state": {
                    "frame": 2400,
                    "own": {"probe": 12, "nexus": 1, "pylon": 2, "gateway": 1},
                    "production": [{"name": "zealot", "done_at": 2800}],
                    "enemy": {"marine": 4},
                    "supply_used": 30,
                    "supply_max": 50,
                },
                "policy": {"mode": "probabilistic", "seed": 11},
            }
        )
        top = sorted(
            response["distribution"].items(), key=lambda kv: kv[1], reverse=True
        )[:4]
        print(f"state request   -> {response['build']['name']}, favorites:")
        for name, p in top:
            print(f"                   {name:<12} {p:.3f}")

        # A malformed request gets a typed error and the connection lives on.
        response = client.predict({"request_id": "demo-3", "vector": [1, 2, 3]})
        print(f"bad request     -> error kind {response['error']['kind']!r}")

        response = client.predict({"request_id": "demo-4", "vector": vector})
        print(f"same connection -> {response['build']['name']} (still serving)")

print()
print("server stopped cleanly")
