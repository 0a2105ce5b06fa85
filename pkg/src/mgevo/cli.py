"""Command-line front end.

    mgevo evolve  --config exp.yaml [--seed N] [--repeats R] [--out-dir D] [--threads T]
    mgevo predict --model run_000/best_network.json --data rows.csv
    mgevo analyze {invalidity,locality,scalability} [--config exp.yaml] [--out-dir D]

The default worker count comes from the ``MGEVO_THREADS`` environment variable.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (grammar_for, invalidity_rate, locality_experiment, rows_to_csv,
                       scalability_experiment, scalability_rows)
from .config import ConfigError, ExperimentConfig, config_from_dict, dump_config, load_config
from .data import (DatasetError, Dataset, apply_minmax, load_csv, make_blobs, make_two_moons,
                   minmax_params, split)
from .evolution import accuracy, evolve, rmse
from .genome import dump_genotype
from .grammar import GrammarError, build_network_grammar, build_neuron_grammar, parse_bnf
from .mapping import Variant
from .network import Network

THREADS_ENV = "MGEVO_THREADS"
REPORT_FIELDS = ["run", "seed", "rmse_n", "rmse_t", "acc_n", "acc_t", "layers", "neurons",
                 "features", "connections", "flops", "evaluations"]
HISTORY_FIELDS = ["generation", "best_loss", "mean_loss", "best_neurons", "best_connections",
                  "mean_connections", "invalid"]


def repeat_seed(master: int, i: int) -> int:
    """Independent, reproducible seed of repeat ``i``."""
    return int(np.random.SeedSequence([master, i]).generate_state(1)[0])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(fields, rows) -> str:
    lines = [",".join(fields)]
    lines += [",".join(_fmt(r[f]) for f in fields) for r in rows]
    return "\n".join(lines) + "\n"


# --- evolve ---------------------------------------------------------------------


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    ds = cfg.dataset
    if ds.kind == "csv":
        if not ds.path:
            raise ConfigError(["dataset.path: required when dataset.kind is csv"])
        return load_csv(ds.path, ds.label_column, ds.has_header)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xDA7A]))
    if ds.kind == "blobs":
        return make_blobs(ds.n, ds.d, ds.c, ds.separation, rng, ds.noise)
    return make_two_moons(ds.n, ds.noise, rng)


def build_grammar(cfg: ExperimentConfig, d: int, c: int):
    if cfg.grammar.file:
        return parse_bnf(Path(cfg.grammar.file).read_text())
    if cfg.evolution.variant == Variant.GE_BASELINE.value:
        return build_network_grammar(d, c, cfg.grammar.weight_digits)
    return build_neuron_grammar(d, c, cfg.evolution.variant, cfg.grammar.weight_digits)


def run_repeat(cfg: ExperimentConfig, data: Dataset, i: int, out_dir: Path) -> tuple[dict, float]:
    """One independent run: fresh split and seed. Writes its artifacts, returns its report row."""
    t0 = time.perf_counter()
    seed = repeat_seed(cfg.seed, i)
    parts = split(data, cfg.dataset.train_fraction, np.random.default_rng([seed, 1]),
                  cfg.dataset.stratify)
    norm = None
    if cfg.dataset.normalize:
        lo, span = minmax_params(parts.train.features)
        parts = dataclasses.replace(
            parts,
            train=dataclasses.replace(parts.train, features=apply_minmax(parts.train.features, lo, span)),
            test=dataclasses.replace(parts.test, features=apply_minmax(parts.test.features, lo, span)),
        )
        norm = {"lo": lo.tolist(), "span": span.tolist()}
    grammar = build_grammar(cfg, data.d, data.c)
    result = evolve(cfg.evolution.with_(seed=seed), grammar, parts.train)

    run_dir = out_dir / f"run_{i:03d}"
    history = [dataclasses.asdict(h) for h in result.history]
    _write_atomic(run_dir / "history.csv", _csv_text(HISTORY_FIELDS, history))
    net = result.best.network
    row = {"run": i, "seed": seed, "evaluations": result.evaluations}
    if net is None:
        row.update(rmse_n=math.nan, rmse_t=math.nan, acc_n=math.nan, acc_t=math.nan,
                   layers=0, neurons=0, features=0, connections=0, flops=0)
    else:
        m = net.metrics()
        row.update(rmse_n=rmse(net, parts.train), rmse_t=rmse(net, parts.test),
                   acc_n=accuracy(net, parts.train), acc_t=accuracy(net, parts.test),
                   layers=m.layers, neurons=m.neurons, features=m.features_used,
                   connections=m.connections, flops=m.flops)
        model = {"network": net.to_dict(), "normalization": norm,
                 "class_names": list(data.class_names), "train_loss": result.best.fitness}
        _write_atomic(run_dir / "best_network.json", json.dumps(model, indent=2) + "\n")
        _write_atomic(run_dir / "best_network.txt", net.dump() + "\n")
    _write_atomic(run_dir / "best_genotype.json", dump_genotype(result.best.genotype) + "\n")
    return row, time.perf_counter() - t0


def aggregate(rows: list[dict]) -> dict:
    out = {}
    for f in REPORT_FIELDS[2:]:
        vals = np.array([r[f] for r in rows], dtype=float)
        out[f] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
    return out


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    overrides = {k: v for k, v in (("seed", args.seed), ("repeats", args.repeats),
                                   ("out_dir", args.out_dir)) if v is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
        if cfg.repeats < 1:
            raise ConfigError(["repeats: must be >= 1"])
    data = load_dataset(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows, timings, failed = {}, {}, []
    threads = max(1, args.threads)
    if threads == 1 or cfg.repeats == 1:
        for i in range(cfg.repeats):
            try:
                rows[i], timings[i] = run_repeat(cfg, data, i, out_dir)
            except Exception as exc:  # one broken repeat must not hide the others
                failed.append(f"run {i}: {exc}")
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {i: pool.submit(run_repeat, cfg, data, i, out_dir) for i in range(cfg.repeats)}
            for i, fut in futures.items():
                try:
                    rows[i], timings[i] = fut.result()
                except Exception as exc:
                    failed.append(f"run {i}: {exc}")

    ordered = [rows[i] for i in sorted(rows)]
    _write_atomic(out_dir / "report.csv", _csv_text(REPORT_FIELDS, ordered))
    summary = {
        "master_seed": cfg.seed,
        # out_dir is left out so that the same experiment written elsewhere reads the same
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out_dir"},
        "dataset": {"name": data.name, "n": data.n, "d": data.d, "c": data.c},
        "runs": ordered,
        "aggregate": aggregate(ordered) if ordered else {},
        "completed": len(ordered),
        "requested": cfg.repeats,
    }
    _write_atomic(out_dir / "summary.json", json.dumps(summary, indent=2, default=_fmt) + "\n")
    _write_atomic(out_dir / "config.yaml", dump_config(cfg, include_out_dir=False))
    # wall-clock varies between executions, so it stays out of the report files
    _write_atomic(out_dir / "timing.json",
                  json.dumps({f"run_{i:03d}": t for i, t in sorted(timings.items())}, indent=2) + "\n")

    if ordered:
        agg = summary["aggregate"]
        for f in ("rmse_n", "rmse_t", "acc_t", "layers", "neurons", "features", "flops"):
            print(f"{f:>8}: {agg[f]['mean']:.4f} +- {agg[f]['std']:.4f}")
    print(f"{len(ordered)}/{cfg.repeats} runs completed; reports in {out_dir}")
    for msg in failed:
        print("error:", msg, file=sys.stderr)
    return 0 if not failed else 1


# --- predict --------------------------------------------------------------------


def _read_rows(path: Path, header: str) -> list[list[str]]:
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if rows and header != "no":
        numeric = True
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            numeric = False
        if header == "yes" or not numeric:
            rows = rows[1:]
    return rows


def cmd_predict(args) -> int:
    doc = json.loads(Path(args.model).read_text())
    net = Network.from_dict(doc["network"] if "network" in doc else doc)
    names = doc.get("class_names") or [str(k) for k in range(1, net.c + 1)]
    norm = doc.get("normalization")
    rows = _read_rows(Path(args.data), args.header)
    if not rows:
        return 0
    if args.label_column is not None:
        col = args.label_column % len(rows[0])
        rows = [r[:col] + r[col + 1:] for r in rows]
    try:
        X = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if X.ndim != 2 or X.shape[1] != net.d:
        width = X.shape[1] if X.ndim == 2 else "ragged"
        print(f"error: model expects {net.d} features, data rows have {width}", file=sys.stderr)
        return 1
    if norm:
        X = apply_minmax(X, np.asarray(norm["lo"]), np.asarray(norm["span"]))
    probs = net.forward_batch(X)
    classes = net.predict_batch(X)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["row", "class"] + [f"p_{n}" for n in names])
    for i, (k, p) in enumerate(zip(classes, probs)):
        out.writerow([i, names[k - 1]] + [f"{v:.6f}" for v in p])
    print(f"# flops per prediction: {net.metrics().flops}")
    return 0


# --- analyze --------------------------------------------------------------------


def cmd_analyze(args) -> int:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    a = cfg.analysis
    out_dir = Path(args.out_dir or cfg.out_dir)
    evo = cfg.evolution.with_(seed=cfg.seed)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xA2A1]))

    if args.kind == "invalidity":
        rows = []
        for method in a.methods:
            grammar = grammar_for(method, a.d, a.c, a.weight_digits)
            # GE strings keep their own default initial length here; matched
            # lengths are the fairness condition of the scalability run only
            rate = invalidity_rate(method, a.samples, evo, rng, a.d, a.c, grammar)
            rows.append({"method": Variant.parse(method).value, "samples": a.samples,
                         "invalid": round(rate * a.samples), "rate": rate})
        files = {"invalidity.csv": rows}
    elif args.kind == "locality":
        report = locality_experiment(a.methods, a.neuron_counts, a.per_cell_samples, evo, rng,
                                     a.hamming, a.d, a.c, a.weight_digits, a.invalid_mutants,
                                     a.max_attempts, a.ge_tail)
        files = {"locality.csv": report.rows(), "locality_summary.csv": report.summary_rows()}
    else:
        curves = scalability_experiment(a.methods, a.generations, a.mu, rng, a.repeats, evo,
                                        a.d, a.c, a.weight_digits)
        files = {"scalability.csv": scalability_rows(curves)}

    for name, rows in files.items():
        _write_atomic(out_dir / name, rows_to_csv(rows))
        print(f"wrote {out_dir / name} ({len(rows)} rows)")
    return 0


# --- entry point ----------------------------------------------------------------


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgevo", description="Modular grammatical evolution of neural networks")
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evolve", help="run seeded evolution repeats from a config file")
    ev.add_argument("--config", required=True)
    ev.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ev.add_argument("--repeats", type=int)
    ev.add_argument("--out-dir")
    ev.add_argument("--threads", type=int, default=_default_threads(),
                    help=f"parallel repeats (default: ${THREADS_ENV} or 1)")
    ev.set_defaults(func=cmd_evolve)

    pr = sub.add_parser("predict", help="classify CSV rows with a saved network")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    pr.add_argument("--label-column", type=int, help="column to drop before predicting")
    pr.set_defaults(func=cmd_predict)

    an = sub.add_parser("analyze", help="representation analyses")
    an.add_argument("kind", choices=("invalidity", "locality", "scalability"))
    an.add_argument("--config")
    an.add_argument("--seed", type=int)
    an.add_argument("--out-dir")
    an.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, GrammarError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
