"""Command-line front end: one binary, eight subcommands.

    extract   event logs -> encoded dataset
    synth     stochastic script -> synthetic event-log corpus
    train     dataset -> model file
    eval      model + dataset -> top-k error report with baselines
    ablate    dataset -> feature-group ablation grid
    analyze   model + dataset -> expansion-probability CSV
    simulate  model/script vs script -> win/loss/draw table
    serve     model -> framed prediction service

Every command is deterministic given its flags and seeds. Flag values
override --config file entries, which override built-in defaults. Exit
codes: 0 success, 1 rejected input or runtime failure, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from pathlib import Path

import numpy as np

from . import encoding, net, policy, service, simulate, training
from .catalog import BuildCatalog, load_catalog, load_default_catalog
from .errors import MacronetError
from .events import EVENT_FILE_SUFFIX, parse_event_log, write_event_log
from .forward import extract_pairs
from .net import load_model, save_model
from .training import TrainConfig

EXPANSION_CSV_HEADER = "probe_count,n_states,mean_probability"


def _load_catalog(path: str | None) -> BuildCatalog:
    if path is None:
        return load_default_catalog()
    with open(path, "r", encoding="utf-8") as f:
        return load_catalog(f)


def _load_norms(path: str | None, catalog: BuildCatalog):
    if path is None:
        return encoding.load_default_norms(catalog)
    with open(path, "r", encoding="utf-8") as f:
        return encoding.load_norms(f, catalog)


def _load_dataset(path: str) -> encoding.Dataset:
    with open(path, "rb") as f:
        return encoding.read_dataset(f)


def _load_model(path: str) -> net.Network:
    with open(path, "rb") as f:
        return load_model(f)


def _parse_policy(args, catalog: BuildCatalog) -> policy.DecisionPolicy:
    """Policy block from flags: --mode, --blind, --exclude (comma-separated
    names, or 'default' for the standard exclusion list), --policy-seed."""
    exclusions: frozenset[int] = frozenset()
    if args.exclude:
        names = [n.strip() for n in args.exclude.split(",") if n.strip()]
        ids = set()
        for name in names:
            if name == "default":
                ids |= policy.default_exclusions(catalog)
            else:
                ids.add(catalog.build_id(name))
        exclusions = frozenset(ids)
    return policy.DecisionPolicy(
        mode=policy.Mode(args.mode),
        blind=args.blind,
        exclusions=exclusions,
        seed=args.policy_seed,
    )


def _emit(args, human: str, machine: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(machine, indent=2, sort_keys=True))
    else:
        print(human)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_extract(args) -> int:
    catalog = _load_catalog(args.catalog)
    norms = _load_norms(args.norms, catalog)
    events_dir = Path(args.events)
    if not events_dir.is_dir():
        raise MacronetError(f"{events_dir} is not a directory")
    paths = sorted(events_dir.glob(f"*{EVENT_FILE_SUFFIX}"))
    if not paths:
        raise MacronetError(f"no {EVENT_FILE_SUFFIX} files in {events_dir}")
    logs, rejections = [], []
    for path in paths:
        try:
            with open(path, "r", encoding="utf-8") as f:
                log = parse_event_log(f, catalog)
            extract_pairs(log, catalog)
        except MacronetError as e:
            rejections.append((path.name, f"{type(e).__name__}: {e}"))
            continue
        logs.append(log)
    dataset = encoding.build_dataset(logs, catalog, norms)
    with open(args.out, "wb") as f:
        encoding.write_dataset(dataset, f)
    lines = [
        f"games accepted: {len(dataset.games)}",
        f"pairs: {dataset.n_pairs}",
        f"rejected: {len(rejections)}",
    ]
    lines += [f"  {name}: {reason}" for name, reason in rejections]
    lines.append(f"dataset written to {args.out}")
    _emit(
        args,
        "\n".join(lines),
        {
            "games": len(dataset.games),
            "pairs": dataset.n_pairs,
            "rejections": [{"file": n, "reason": r} for n, r in rejections],
            "out": str(args.out),
        },
    )
    return 0


def _make_generator(args, catalog: BuildCatalog):
    if args.generator == "reactive":
        return simulate.ReactiveScript(catalog)
    if args.generator == "two-branch":
        return simulate.TwoBranchScript(catalog, p_first=args.p_first)
    if args.generator == "fixed":
        if not args.script:
            raise MacronetError("--script is required for the fixed generator")
        names = [n.strip() for n in args.script.split(",") if n.strip()]
        return simulate.FixedScript(catalog, names)
    raise MacronetError(f"unknown generator {args.generator!r}")


def cmd_synth(args) -> int:
    catalog = _load_catalog(args.catalog)
    generator = _make_generator(args, catalog)
    logs = simulate.generate_synthetic_corpus(generator, args.games, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_events = 0
    for log in logs:
        n_events += len(log.events)
        with open(out_dir / f"{log.game_id}{EVENT_FILE_SUFFIX}", "w", encoding="utf-8") as f:
            write_event_log(log, f, catalog)
    _emit(
        args,
        f"wrote {len(logs)} games ({n_events} events) to {out_dir}",
        {"games": len(logs), "events": n_events, "out": str(out_dir)},
    )
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        mask=encoding.parse_mask(args.mask),
    )


def cmd_train(args) -> int:
    dataset = _load_dataset(args.dataset)
    config = _train_config(args)
    if args.no_split:
        train_set, test_set = dataset, None
    else:
        train_set, test_set = training.split_dataset(dataset, args.split_fraction)
    model, history = training.train(train_set, config)
    with open(args.out, "wb") as f:
        save_model(model, f)
    report = {
        "model_version": model.model_version(),
        "epochs": len(history),
        "train_pairs": train_set.n_pairs,
        "final_train_loss": history[-1].train_loss,
        "final_train_top1_error": history[-1].train_top1_error,
        "out": str(args.out),
    }
    lines = [
        f"trained on {train_set.n_pairs} pairs for {len(history)} epochs",
        f"final train loss {history[-1].train_loss:.4f}, "
        f"top-1 error {100 * history[-1].train_top1_error:.2f}%",
    ]
    if test_set is not None:
        errors = training.evaluate_topk(model, test_set)
        report["test_pairs"] = test_set.n_pairs
        report["test_errors"] = {str(k): v for k, v in errors.items()}
        lines.append(
            f"held-out ({test_set.n_pairs} pairs): "
            + ", ".join(f"top-{k} {100 * v:.2f}%" for k, v in sorted(errors.items()))
        )
    lines.append(f"model {report['model_version']} written to {args.out}")
    _emit(args, "\n".join(lines), report)
    return 0


def cmd_eval(args) -> int:
    dataset = _load_dataset(args.dataset)
    model = _load_model(args.model)
    if args.all:
        train_set, test_set = dataset, dataset
    else:
        train_set, test_set = training.split_dataset(dataset, args.split_fraction)
    errors = training.evaluate_topk(model, test_set)
    frequent = training.baseline_most_frequent(train_set, test_set)
    rand = training.baseline_uniform_random(test_set, seed=args.seed)
    ks = sorted(errors)
    width = 24
    lines = [
        "predictor".ljust(width) + "".join(f"top-{k} error".rjust(14) for k in ks),
        "model".ljust(width) + "".join(f"{100 * errors[k]:13.2f}%" for k in ks),
        "most-frequent".ljust(width) + "".join(f"{100 * frequent[k]:13.2f}%" for k in ks),
        "uniform-random".ljust(width) + "".join(f"{100 * rand[k]:13.2f}%" for k in ks),
        f"({test_set.n_pairs} pairs)",
    ]
    _emit(
        args,
        "\n".join(lines),
        {
            "pairs": test_set.n_pairs,
            "model": {str(k): errors[k] for k in ks},
            "most_frequent": {str(k): frequent[k] for k in ks},
            "uniform_random": {str(k): rand[k] for k in ks},
        },
    )
    return 0


def cmd_ablate(args) -> int:
    dataset = _load_dataset(args.dataset)
    masks = [encoding.parse_mask(m.strip()) for m in args.masks.split(",") if m.strip()]
    if not masks:
        raise MacronetError("no masks given")
    base = _train_config(args)
    report = training.run_ablation_grid(
        dataset, masks, base, repeats=args.repeats, fraction=args.split_fraction
    )
    machine = {
        "repeats": report.repeats,
        "rows": [
            {
                "mask": row.label,
                "errors": {
                    str(k): {"mean": row.mean(k), "std": row.std(k)} for k in report.ks
                },
            }
            for row in report.rows
        ],
    }
    _emit(args, training.format_ablation_report(report), machine)
    return 0


def expansion_curve(model: net.Network, dataset: encoding.Dataset, catalog, norms):
    """Mean predicted probability of the expansion build (a second main
    building) per worker count, over states owning exactly one completed
    main building and none in production. Counts are decoded back out of
    the normalized vectors."""
    worker = catalog.worker_id
    main = catalog.main_building_id
    X, _ = dataset.stacked()
    if len(X) == 0:
        return []
    own_main = np.rint(X[:, main] * norms.own_caps[main]).astype(int)
    inprod_main = np.rint(
        X[:, encoding.N_CLASSES + main] * norms.own_caps[main]
    ).astype(int)
    keep = (own_main == 1) & (inprod_main == 0)
    if not keep.any():
        return []
    X = X[keep]
    workers = np.rint(X[:, worker] * norms.own_caps[worker]).astype(int)
    probs = net.forward_batch(model, encoding.apply_mask(X, model.meta.mask))[:, main]
    rows = []
    for count in sorted(set(workers.tolist())):
        sel = workers == count
        rows.append((int(count), int(sel.sum()), float(probs[sel].mean())))
    return rows


def cmd_analyze(args) -> int:
    catalog = _load_catalog(args.catalog)
    norms = _load_norms(args.norms, catalog)
    dataset = _load_dataset(args.dataset)
    model = _load_model(args.model)
    rows = expansion_curve(model, dataset, catalog, norms)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(EXPANSION_CSV_HEADER + "\n")
        for count, n_states, mean_p in rows:
            f.write(f"{count},{n_states},{mean_p:.6f}\n")
    _emit(
        args,
        f"wrote {len(rows)} rows to {args.out}",
        {
            "rows": [
                {"probe_count": c, "n_states": n, "mean_probability": p}
                for c, n, p in rows
            ],
            "out": str(args.out),
        },
    )
    return 0


_SCRIPTED = {
    "worker-then-army": simulate.worker_then_army_player,
    "worker-only": simulate.worker_only_player,
    "random": simulate.random_player,
}


def _make_player(spec: str, args, catalog, norms):
    if spec in _SCRIPTED:
        return _SCRIPTED[spec](catalog)
    model = _load_model(spec)
    return simulate.NetworkPlayer(
        name=f"model:{Path(spec).name}",
        net=model,
        policy=_parse_policy(args, catalog),
        catalog=catalog,
        norms=norms,
    )


def cmd_simulate(args) -> int:
    catalog = _load_catalog(args.catalog)
    norms = _load_norms(args.norms, catalog)
    player_a = _make_player(args.a, args, catalog, norms)
    player_b = _make_player(args.b, args, catalog, norms)
    rules = simulate.MatchRules(frame_cap=args.frame_cap)
    series = simulate.run_matches(
        player_a, player_b, catalog, args.matches, rules, seed=args.seed
    )
    lines = [
        f"A = {player_a.name}, B = {player_b.name}, {series.n} matches",
        f"A wins: {series.wins_a} ({100 * series.wins_a / series.n:.1f}%)",
        f"B wins: {series.wins_b} ({100 * series.wins_b / series.n:.1f}%)",
        f"draws:  {series.draws} ({100 * series.draws / series.n:.1f}%)",
    ]
    _emit(
        args,
        "\n".join(lines),
        {
            "a": player_a.name,
            "b": player_b.name,
            "matches": series.n,
            "wins_a": series.wins_a,
            "wins_b": series.wins_b,
            "draws": series.draws,
        },
    )
    return 0


def cmd_serve(args) -> int:
    catalog = _load_catalog(args.catalog)
    norms = _load_norms(args.norms, catalog)
    model = _load_model(args.model)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise MacronetError(f"--bind must be host:port, got {args.bind!r}")
    try:
        server = service.PredictionServer(
            model,
            catalog,
            norms,
            policy=_parse_policy(args, catalog),
            address=(host, int(port)),
            seed=args.seed,
        )
    except OSError as e:
        raise MacronetError(f"cannot bind {args.bind}: {e}")
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    with server:
        bound = server.server_address
        print(f"serving model {server.model_version} on {bound[0]}:{bound[1]}", flush=True)
        stop.wait()
    print("shut down")
    return 0


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------

_DEFAULTS: dict[str, dict] = {
    "extract": {"catalog": None, "norms": None, "json": False},
    "synth": {
        "catalog": None,
        "generator": "reactive",
        "games": 100,
        "seed": 0,
        "p_first": 0.7,
        "script": "",
        "json": False,
    },
    "train": {
        "epochs": 50,
        "batch_size": 100,
        "learning_rate": 0.0001,
        "seed": 0,
        "mask": "a+b+c+d+e",
        "split_fraction": 0.8,
        "no_split": False,
        "json": False,
    },
    "eval": {"split_fraction": 0.8, "all": False, "seed": 0, "json": False},
    "ablate": {
        "masks": "a,a+d,a+b+c+e,a+b+c+d+e",
        "repeats": 5,
        "epochs": 50,
        "batch_size": 100,
        "learning_rate": 0.0001,
        "seed": 0,
        "mask": "a+b+c+d+e",
        "split_fraction": 0.8,
        "json": False,
    },
    "analyze": {"catalog": None, "norms": None, "json": False},
    "simulate": {
        "catalog": None,
        "norms": None,
        "a": "worker-then-army",
        "b": "worker-then-army",
        "matches": 20,
        "seed": 0,
        "frame_cap": 28800,
        "mode": "greedy",
        "blind": False,
        "exclude": "",
        "policy_seed": 0,
        "json": False,
    },
    "serve": {
        "catalog": None,
        "norms": None,
        "bind": "127.0.0.1:7777",
        "seed": 0,
        "mode": "greedy",
        "blind": False,
        "exclude": "",
        "policy_seed": 0,
    },
}

_REQUIRED: dict[str, tuple[str, ...]] = {
    "extract": ("events", "out"),
    "synth": ("out",),
    "train": ("dataset", "out"),
    "eval": ("dataset", "model"),
    "ablate": ("dataset",),
    "analyze": ("dataset", "model", "out"),
    "simulate": (),
    "serve": ("model",),
}


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["greedy", "probabilistic", "random"])
    p.add_argument("--blind", action="store_true")
    p.add_argument("--exclude", help="comma-separated build names, or 'default'")
    p.add_argument("--policy-seed", type=int, dest="policy_seed")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--seed", type=int)
    p.add_argument("--mask", help="feature groups, e.g. a+b+c+d+e")
    p.add_argument("--split-fraction", type=float, dest="split_fraction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macronet", description="build-order prediction toolkit"
    )
    parser.add_argument("--version", action="version", version="macronet 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="encode event logs into a dataset")
    p.add_argument("--events")
    p.add_argument("--catalog")
    p.add_argument("--norms")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--generator", choices=["reactive", "two-branch", "fixed"])
    p.add_argument("--games", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p-first", type=float, dest="p_first")
    p.add_argument("--script", help="comma-separated build names (fixed generator)")
    p.add_argument("--catalog")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--dataset")
    p.add_argument("--out")
    _add_train_flags(p)
    p.add_argument("--no-split", action="store_true", dest="no_split",
                   help="train on every game, no held-out report")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="top-k error of a model with baselines")
    p.add_argument("--dataset")
    p.add_argument("--model")
    p.add_argument("--split-fraction", type=float, dest="split_fraction")
    p.add_argument("--all", action="store_true", help="evaluate on every pair")
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="feature-group ablation grid")
    p.add_argument("--dataset")
    p.add_argument("--masks", help="comma-separated mask labels")
    p.add_argument("--repeats", type=int)
    _add_train_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("analyze", help="expansion probability by worker count")
    p.add_argument("--dataset")
    p.add_argument("--model")
    p.add_argument("--catalog")
    p.add_argument("--norms")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="abstract matches between policies")
    p.add_argument("--a", help="side A: model file path or a script name")
    p.add_argument("--b", help="side B: model file path or a script name")
    p.add_argument("--matches", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--frame-cap", type=int, dest="frame_cap")
    p.add_argument("--catalog")
    p.add_argument("--norms")
    _add_policy_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve", help="run the prediction service")
    p.add_argument("--model")
    p.add_argument("--catalog")
    p.add_argument("--norms")
    p.add_argument("--bind", help="host:port")
    p.add_argument("--seed", type=int)
    _add_policy_flags(p)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_serve)

    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """flags > config file > defaults."""
    merged = dict(_DEFAULTS[args.command])
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            loaded = json.load(f)
        if not isinstance(loaded, dict):
            raise MacronetError("config file must hold a JSON object")
        unknown = set(loaded) - set(merged) - set(_REQUIRED[args.command])
        if unknown:
            raise MacronetError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key, value in vars(args).items():
        if key in ("fn", "command", "config"):
            continue
        if value is not None and value is not False:
            merged[key] = value
        elif key not in merged:
            merged[key] = value
    missing = [k for k in _REQUIRED[args.command] if not merged.get(k)]
    if missing:
        raise MacronetError(
            f"missing required options: {', '.join('--' + m for m in missing)}"
        )
    merged["fn"] = args.fn
    merged["command"] = args.command
    return argparse.Namespace(**merged)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return args.fn(args)
    except MacronetError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
