"""How a probability vector becomes a single build decision.

python3 demos/05_policy_selection.py
"""

import numpy as np

from macronet import (
    DecisionPolicy,
    Mode,
    apply_exclusions,
    decide,
    default_exclusions,
    initial_state,
    load_default_catalog,
    load_default_norms,
    select_greedy,
    select_probabilistic,
    train,
    TrainConfig,
    TwoBranchScript,
    build_dataset,
    generate_synthetic_corpus,
)

catalog = load_default_catalog()
norms = load_default_norms(catalog)
rng = np.random.default_rng(0)

# Exclusion zeroes the unwanted classes and rescales the rest, so the
# surviving builds keep their exact relative proportions.
dist = np.array([0.50, 0.25, 0.25])
out = apply_exclusions(dist, {2})
print("exclude class 2 from", dist, "->", out)
print("ratio 0:1 before", dist[0] / dist[1], "after", out[0] / out[1])
print()

# Greedy takes the argmax. Probabilistic samples the distribution, which
# keeps behavior varied across games without leaving the learned policy.
weighted = np.zeros(58)
weighted[6] = 0.26            # a zealot-heavy moment
weighted[0] = 0.74 / 2
weighted[17] = 0.74 / 2
print("greedy pick:", catalog.build(select_greedy(weighted)).name)
draws = [select_probabilistic(weighted, rng) for _ in range(10_000)]
share = np.mean([d == 6 for d in draws])
print(f"probabilistic picks zealot {100 * share:.1f}% of 10k draws (true 26%)")
print()

# A quick model so decide() has something to work with.
script = TwoBranchScript(catalog)
logs = generate_synthetic_corpus(script, 120, seed=1)
dataset = build_dataset(logs, catalog, norms)
model, _ = train(dataset, TrainConfig(epochs=8, learning_rate=0.001, seed=0))

state = initial_state(catalog)
for mode in (Mode.GREEDY, Mode.PROBABILISTIC, Mode.RANDOM):
    policy = DecisionPolicy(mode=mode, seed=3)
    idx, d = decide(model, state, catalog, norms, policy)
    print(f"{mode.value:>13}: {catalog.build(idx).name:<10} (p={d[idx]:.3f})")
print()

# The stock exclusion list drops micro-dependent builds from selection.
names = sorted(catalog.build(i).name for i in default_exclusions(catalog))
print("default exclusions:", ", ".join(names))
policy = DecisionPolicy(mode=Mode.GREEDY, exclusions=default_exclusions(catalog))
idx, _ = decide(model, state, catalog, norms, policy)
print("greedy with exclusions still legal:", catalog.build(idx).name)

# Blind mode zeroes the opponent features at inference time, the cheap way
# to ask what scouting information was worth.
blind = DecisionPolicy(mode=Mode.GREEDY, blind=True)
idx_blind, _ = decide(model, state, catalog, norms, blind)
print("blind greedy pick:", catalog.build(idx_blind).name)
