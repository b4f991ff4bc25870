"""Train a policy network on a corpus with a known answer key.

The two-branch generator flips one weighted coin per game (gateway 70% /
forge 30%) and then plays deterministically, so the best possible top-1
error is exactly 0.3 / 6 = 5%: one unpredictable decision out of six.
A trained network should approach that floor, and crush the single-guess
baseline.

python3 demos/04_train_and_evaluate.py   (takes a few seconds)
"""

from macronet import (
    TrainConfig,
    TwoBranchScript,
    baseline_most_frequent,
    baseline_uniform_random,
    bayes_top1_error,
    build_dataset,
    evaluate_topk,
    generate_synthetic_corpus,
    load_default_catalog,
    load_default_norms,
    split_dataset,
    train,
    uniform_random_error,
)

catalog = load_default_catalog()
norms = load_default_norms(catalog)

script = TwoBranchScript(catalog, p_first=0.7)
logs = generate_synthetic_corpus(script, 300, seed=5)
dataset = build_dataset(logs, catalog, norms)
train_set, test_set = split_dataset(dataset, fraction=0.8)
print(
    f"corpus: {dataset.n_pairs} pairs, split {train_set.n_pairs} train"
    f" / {test_set.n_pairs} test (whole games only)"
)

test_logs = logs[len(train_set.games):]
bayes = bayes_top1_error(test_logs, script)
print(f"Bayes-optimal top-1 error on the test games: {100 * bayes:.2f}%")
print()

config = TrainConfig(epochs=15, batch_size=100, learning_rate=0.001, seed=0)
model, history = train(train_set, config, eval_set=test_set)

print("epoch  train loss   train top-1   test top-1")
for stats in history[::3] + [history[-1]]:
    print(
        f"{stats.epoch:>5}  {stats.train_loss:>10.4f}"
        f"   {100 * stats.train_top1_error:>10.2f}%"
        f"  {100 * stats.eval_errors[1]:>10.2f}%"
    )
print(f"model version {model.model_version()}")
print()

errors = evaluate_topk(model, test_set)
frequent = baseline_most_frequent(train_set, test_set)
rand = baseline_uniform_random(test_set)
print("held-out comparison:")
print(f"{'':>16}  top-1    top-3    top-10")
for name, row in (
    ("model", errors),
    ("most-frequent", frequent),
    ("uniform-random", rand),
):
    print(
        f"{name:>16}"
        + "".join(f"  {100 * row[k]:>6.2f}%" for k in (1, 3, 10))
    )
print(
    f"{'analytic random':>16}"
    + "".join(f"  {100 * uniform_random_error(k):>6.2f}%" for k in (1, 3, 10))
)
print()
print(f"gap to Bayes floor: {100 * (errors[1] - bayes):+.2f} points")
