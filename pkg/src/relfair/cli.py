"""Command-line experiment runner.

Subcommands: ``train`` (one variant, several seeds), ``sweep`` (eta x beta
grid), ``compare`` (several variants under shared seeds) and ``evaluate``
(metrics for an existing checkpoint).  Every run directory gets a
``manifest.json`` declaring the files written; timestamps live only in the
manifest's metadata block so re-running a config reproduces every other
payload byte for byte.

The default data directory comes from the RELFAIR_DATA_DIR environment
variable (falling back to the working directory); ``--data-dir`` overrides.
"""

import argparse
import concurrent.futures
import dataclasses
import datetime
import json
import os
import sys

import yaml

from relfair.data import (
    builtin_config,
    drop_features,
    encode,
    load_dataset_config,
    load_from_config,
    split,
)
from relfair.metrics import (
    SeedResult,
    accuracy,
    aggregate,
    delta_dp,
    delta_eo,
    format_comparison_table,
)
from relfair.models import forward, load_checkpoint, save_checkpoint
from relfair.training import VARIANTS, TrainConfig, run_single

MODEL_KINDS = ("lr", "svm", "mlp")

TRAIN_KEYS = (
    "eta",
    "beta",
    "learning_rate",
    "pretrain_epochs",
    "max_epochs",
    "batch_size",
    "model_train_steps",
    "learn_lambda",
    "early_stop_patience",
)

EXPERIMENT_KEYS = (
    "dataset",
    "variant",
    "model",
    "hidden_dims",
    "related",
    "seeds",
    "output_dir",
    "allow_sensitive_in_training",
    "train",
)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    dataset: object  # DatasetConfig
    dataset_ref: str
    variant: str
    model_kind: str
    hidden_dims: tuple
    related: tuple
    seeds: tuple
    output_dir: str
    allow_sensitive_in_training: bool
    train: TrainConfig


def _reject_unknown(mapping, allowed, where):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ValueError(f"unknown key(s) {unknown} in {where}")


def parse_experiment_config(doc, where="experiment config", config_dir="."):
    if not isinstance(doc, dict):
        raise ValueError(f"{where}: expected a mapping at top level")
    _reject_unknown(doc, EXPERIMENT_KEYS, where)
    for key in ("dataset", "variant", "model", "seeds", "output_dir"):
        if key not in doc:
            raise ValueError(f"{where}: missing required key {key!r}")

    dataset_ref = str(doc["dataset"])
    if dataset_ref.endswith((".yaml", ".yml")):
        path = dataset_ref
        if not os.path.isabs(path):
            path = os.path.join(config_dir, path)
        dataset = load_dataset_config(path)
    else:
        dataset = builtin_config(dataset_ref)

    variant = str(doc["variant"])
    if variant not in VARIANTS:
        raise ValueError(f"{where}: unknown variant {variant!r}; expected one of {VARIANTS}")
    model_kind = str(doc["model"])
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"{where}: unknown model {model_kind!r}; expected one of {MODEL_KINDS}")

    hidden_dims = tuple(int(h) for h in doc.get("hidden_dims", ()))
    if hidden_dims and model_kind != "mlp":
        raise ValueError(f"{where}: hidden_dims only applies to the mlp model")

    related = tuple(str(n) for n in doc.get("related", dataset.related))
    if not related:
        raise ValueError(f"{where}: no related features given (and none in the dataset config)")
    input_names = {f.name for f in dataset.schema if f.role == "input"}
    for name in related:
        if name not in input_names:
            raise ValueError(f"{where}: related feature {name!r} is not an input column")

    seeds = tuple(int(s) for s in doc["seeds"])
    if not seeds:
        raise ValueError(f"{where}: seeds list is empty")
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"{where}: duplicate seeds")

    train_doc = doc.get("train", {}) or {}
    _reject_unknown(train_doc, TRAIN_KEYS, f"{where}: train")
    train = TrainConfig(**train_doc)

    return ExperimentConfig(
        dataset=dataset,
        dataset_ref=dataset_ref,
        variant=variant,
        model_kind=model_kind,
        hidden_dims=hidden_dims,
        related=related,
        seeds=seeds,
        output_dir=str(doc["output_dir"]),
        allow_sensitive_in_training=bool(doc.get("allow_sensitive_in_training", False)),
        train=train,
    )


def load_experiment_config(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return parse_experiment_config(
        doc, where=str(path), config_dir=os.path.dirname(os.path.abspath(path))
    )


# ---------------------------------------------------------------------------
# artifacts


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, command, files, extra_metadata=None):
    manifest = {
        "files": sorted(files),
        "metadata": {
            "command": command,
            "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            **(extra_metadata or {}),
        },
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _load_raw(cfg, data_dir):
    raw = load_from_config(cfg.dataset, data_dir=data_dir)
    return raw


# ---------------------------------------------------------------------------
# seed jobs (module level so worker processes can unpickle them)


def _seed_job(payload):
    (raw, related, variant, model_kind, cfg, seed, hidden_dims,
     allow_sensitive, run_dir, keep_checkpoint) = payload
    result, metrics = run_single(
        raw, related, variant, model_kind, cfg, seed,
        hidden_dims=hidden_dims,
        allow_sensitive_in_training=allow_sensitive,
    )
    files = []
    if run_dir is not None:
        os.makedirs(run_dir, exist_ok=True)
        trace_path = os.path.join(run_dir, "trace.jsonl")
        result.trace.write(trace_path)
        files.append(trace_path)
        if keep_checkpoint:
            ckpt_path = os.path.join(run_dir, "checkpoint.npz")
            save_checkpoint(ckpt_path, result.params, result.spec)
            files.append(ckpt_path)
    return dataclasses.asdict(metrics), files


def _run_jobs(jobs, workers):
    if workers <= 1:
        return [_seed_job(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_seed_job, jobs))


def _seed_results(rows):
    return [SeedResult(**row) for row in rows]


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args):
    exp = load_experiment_config(args.config)
    out_dir = args.output_dir or exp.output_dir
    seeds = _parse_seeds(args.seeds) or exp.seeds
    raw = _load_raw(exp, args.data_dir)

    os.makedirs(out_dir, exist_ok=True)
    jobs = [
        (raw, exp.related, exp.variant, exp.model_kind, exp.train, seed,
         exp.hidden_dims, exp.allow_sensitive_in_training,
         os.path.join(out_dir, f"seed_{seed}"), True)
        for seed in seeds
    ]
    outputs = _run_jobs(jobs, args.workers)

    rows = [row for row, _ in outputs]
    files = [p for _, paths in outputs for p in paths]
    report = aggregate(_seed_results(rows))
    report_path = os.path.join(out_dir, "report.json")
    _write_json(report_path, report.to_dict())
    table_path = os.path.join(out_dir, "report.txt")
    with open(table_path, "w") as fh:
        fh.write(format_comparison_table({exp.variant: report}) + "\n")
    files += [report_path, table_path]

    _write_manifest(
        out_dir, "train",
        [os.path.relpath(p, out_dir) for p in files],
        {"config": args.config, "variant": exp.variant, "seeds": list(seeds)},
    )
    print(format_comparison_table({exp.variant: report}))
    return 0


def _parse_seeds(text):
    if not text:
        return None
    return tuple(int(v) for v in text.split(","))


def _parse_grid(text):
    return [float(v) for v in text.split(",")] if text else None


def cmd_sweep(args):
    exp = load_experiment_config(args.config)
    out_dir = args.output_dir or exp.output_dir
    seeds = _parse_seeds(args.seeds) or exp.seeds
    etas = _parse_grid(args.eta_grid) or [exp.train.eta]
    betas = _parse_grid(args.beta_grid) or [exp.train.beta]
    raw = _load_raw(exp, args.data_dir)

    os.makedirs(out_dir, exist_ok=True)
    jobs, keys = [], []
    for eta in etas:
        for beta in betas:
            cell_cfg = dataclasses.replace(exp.train, eta=eta, beta=beta)
            cell_dir = os.path.join(out_dir, "cells", f"eta_{eta:g}__beta_{beta:g}")
            for seed in seeds:
                keys.append((eta, beta, seed, cell_dir))
                jobs.append(
                    (raw, exp.related, exp.variant, exp.model_kind, cell_cfg,
                     seed, exp.hidden_dims, exp.allow_sensitive_in_training,
                     os.path.join(cell_dir, f"seed_{seed}"), False)
                )

    table_rows, failures, files = [], [], []
    if args.workers <= 1:
        results = []
        for job in jobs:
            try:
                results.append(_seed_job(job))
            except Exception as exc:  # record and keep sweeping
                results.append(exc)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = [pool.submit(_seed_job, job) for job in jobs]
            results = []
            for fut in futures:
                try:
                    results.append(fut.result())
                except Exception as exc:
                    results.append(exc)

    for (eta, beta, seed, cell_dir), outcome in zip(keys, results):
        if isinstance(outcome, Exception):
            failures.append(
                {"eta": eta, "beta": beta, "seed": seed, "error": str(outcome)}
            )
            continue
        row, paths = outcome
        files += paths
        table_rows.append((eta, beta, seed, row["accuracy"], row["delta_eo"], row["delta_dp"]))

    table_rows.sort()
    sweep_path = os.path.join(out_dir, "sweep.csv")
    with open(sweep_path, "w") as fh:
        fh.write("eta,beta,seed,accuracy,delta_eo,delta_dp\n")
        for row in table_rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    files.append(sweep_path)

    if failures:
        failures_path = os.path.join(out_dir, "failures.json")
        _write_json(failures_path, failures)
        files.append(failures_path)

    _write_manifest(
        out_dir, "sweep",
        [os.path.relpath(p, out_dir) for p in files],
        {"config": args.config, "eta_grid": etas, "beta_grid": betas,
         "seeds": list(seeds), "n_failures": len(failures)},
    )
    print(f"sweep: {len(table_rows)} rows, {len(failures)} failed cells -> {sweep_path}")
    return 0 if table_rows else 1


def cmd_compare(args):
    exp = load_experiment_config(args.config)
    out_dir = args.output_dir or exp.output_dir
    seeds = _parse_seeds(args.seeds) or exp.seeds
    variants = tuple(v.strip() for v in args.variants.split(","))
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}; expected one of {VARIANTS}")
    raw = _load_raw(exp, args.data_dir)

    os.makedirs(out_dir, exist_ok=True)
    jobs = [
        (raw, exp.related, variant, exp.model_kind, exp.train, seed,
         exp.hidden_dims, exp.allow_sensitive_in_training,
         os.path.join(out_dir, variant, f"seed_{seed}"), False)
        for variant in variants
        for seed in seeds
    ]
    outputs = _run_jobs(jobs, args.workers)

    files = [p for _, paths in outputs for p in paths]
    reports = {}
    it = iter(outputs)
    for variant in variants:
        rows = [next(it)[0] for _ in seeds]
        reports[variant] = aggregate(_seed_results(rows))

    comparison_path = os.path.join(out_dir, "comparison.json")
    _write_json(
        comparison_path, {v: r.to_dict() for v, r in reports.items()}
    )
    table = format_comparison_table(reports)
    table_path = os.path.join(out_dir, "comparison.txt")
    with open(table_path, "w") as fh:
        fh.write(table + "\n")
    files += [comparison_path, table_path]

    _write_manifest(
        out_dir, "compare",
        [os.path.relpath(p, out_dir) for p in files],
        {"config": args.config, "variants": list(variants), "seeds": list(seeds)},
    )
    print(table)
    return 0


def cmd_evaluate(args):
    exp = load_experiment_config(args.config)
    params, spec = load_checkpoint(args.checkpoint)
    raw = _load_raw(exp, args.data_dir)
    seed = args.seed if args.seed is not None else exp.seeds[0]

    train_raw, eval_raw, test_raw = split(raw, seed=seed)
    if exp.variant == "remove_related":
        train_raw = drop_features(train_raw, exp.related)
        eval_raw = drop_features(eval_raw, exp.related)
        test_raw = drop_features(test_raw, exp.related)
    encoded = dict(
        zip(("train", "eval", "test"), encode(train_raw, [eval_raw, test_raw]))
    )
    enc = encoded[args.split]
    if spec.input_dim != enc.n_columns:
        raise ValueError(
            f"checkpoint expects {spec.input_dim} input columns but the "
            f"{args.split} split encodes to {enc.n_columns}; check that the "
            "config and split seed match the training run"
        )
    yhat = forward(params, spec, enc.X)
    payload = {
        "checkpoint": args.checkpoint,
        "split": args.split,
        "seed": seed,
        "accuracy": accuracy(yhat, enc.y),
    }
    if enc.s is not None:
        payload["delta_eo"] = delta_eo(yhat, enc.y, enc.s)
        payload["delta_dp"] = delta_dp(yhat, enc.s)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(
        prog="relfair",
        description="Train and evaluate fairness-regularized classifiers "
                    "driven by related features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="experiment config YAML")
        p.add_argument("--data-dir", default=os.environ.get("RELFAIR_DATA_DIR", "."),
                       help="directory holding dataset CSVs "
                            "(default: $RELFAIR_DATA_DIR or '.')")
        p.add_argument("--output-dir", default=None, help="override the config's output_dir")
        p.add_argument("--seeds", default=None, help="comma-separated seed override")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes (default 1)")

    p_train = sub.add_parser("train", help="train one variant over the configured seeds")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep", help="grid sweep over eta and beta")
    common(p_sweep)
    p_sweep.add_argument("--eta-grid", default=None, help="comma-separated eta values")
    p_sweep.add_argument("--beta-grid", default=None, help="comma-separated beta values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="run several variants under shared seeds")
    common(p_cmp)
    p_cmp.add_argument("--variants", default="vanilla,fairrf",
                       help="comma-separated variant tags")
    p_cmp.set_defaults(func=cmd_compare)

    p_eval = sub.add_parser("evaluate", help="metrics for an existing checkpoint")
    p_eval.add_argument("-c", "--config", required=True, help="experiment config YAML")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data-dir", default=os.environ.get("RELFAIR_DATA_DIR", "."))
    p_eval.add_argument("--seed", type=int, default=None,
                        help="split seed (default: first configured seed)")
    p_eval.add_argument("--split", choices=("train", "eval", "test"), default="test")
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
