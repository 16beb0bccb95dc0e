"""Command-line entry point.

Subcommands:

    gen-dataset   synthesize a labeled pose dataset (hand log + .labels sidecar)
    train         train the finger-count classifier from a labeled dataset
    run           execute a batch manifest of closed-loop trials
    replay        re-run a recorded input log through a controller
    report        compute metrics CSVs from existing trial records

Exit codes: 0 ok, 1 validation error (all problems listed), 2 runtime error.
All randomness flows from explicit seeds; reruns are byte-identical, and the
run directory name is derived from the manifest content hash so repeating a
run rewrites the same files. Outputs are written atomically
(write-temp-then-rename) so parallel jobs never interleave partial files.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import classifier
from .config import (PilotConfig, SimConfig, load_sim_config,
                     pilot_config_from_dict, sim_config_from_dict)
from .errors import ConfigError, GestlocoError
from .features import stack_features
from .gestures import INTERFACES
from .handmodel import parse_gamepad_log, parse_hand_log, write_gamepad_log, \
    write_hand_log
from .metrics import (PursuitMetrics, WaypointMetrics, aggregate,
                      compute_metrics)
from .pilot import generate_dataset
from .sim import trial_record_from_csv, trial_record_to_csv
from .trial import replay_trial, run_trial

_METRIC_FIELDS = [f.name for f in dataclasses.fields(PursuitMetrics)] + \
    [f.name for f in dataclasses.fields(WaypointMetrics)]


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _load_model(path: str | Path) -> classifier.ClassifierModel:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError([f"cannot read model file {path}: {exc}"]) from None
    return classifier.load_model(data)


# --- gen-dataset ---------------------------------------------------------------

def cmd_gen_dataset(args) -> int:
    if args.n_per_class < 1:
        raise ConfigError(["empty dataset: --n-per-class must be >= 1"])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    frames, labels = generate_dataset(args.n_per_class, args.sigma, rng,
                                      hand_scale=args.hand_scale)
    out = Path(args.out)
    _atomic_write(out, write_hand_log(frames))
    _atomic_write(out.with_suffix(out.suffix + ".labels"),
                  ("\n".join(str(l) for l in labels) + "\n").encode())
    counts = {c: labels.count(c) for c in sorted(set(labels))}
    for c, n in counts.items():
        print(f"class {c}: {n} samples")
    print(f"wrote {out} and {out}.labels")
    return 0


# --- train -----------------------------------------------------------------------

def _hash_to_train(record_id: int, train_fraction: float) -> bool:
    digest = hashlib.sha256(str(record_id).encode()).digest()
    value = int.from_bytes(digest[:8], "big") / 2**64
    return value < train_fraction


def cmd_train(args) -> int:
    dataset = Path(args.dataset)
    labels_path = Path(args.labels) if args.labels else \
        dataset.with_suffix(dataset.suffix + ".labels")
    problems = []
    if not dataset.exists():
        problems.append(f"dataset file not found: {dataset}")
    if not labels_path.exists():
        problems.append(f"labels file not found: {labels_path}")
    if not 0.0 < args.split <= 1.0:
        problems.append(f"--split must be in (0, 1], got {args.split}")
    if problems:
        raise ConfigError(problems)

    frames = parse_hand_log(dataset.read_bytes())
    label_lines = labels_path.read_text().split()
    if len(label_lines) != len(frames):
        raise ConfigError([f"{len(frames)} frames but {len(label_lines)} labels"])
    samples = []
    for i, (frame, text) in enumerate(zip(frames, label_lines)):
        try:
            label = int(text)
        except ValueError:
            raise ConfigError([f"labels line {i + 1}: not an integer: {text!r}"]) from None
        samples.append(classifier.LabeledSample(
            stack_features(frame.left, frame.right), label))

    train_set = [s for i, s in enumerate(samples) if _hash_to_train(i, args.split)]
    test_set = [s for i, s in enumerate(samples) if not _hash_to_train(i, args.split)]
    model = classifier.train(train_set, rbf_gamma=args.gamma, c_reg=args.c_reg)
    _atomic_write(Path(args.out), classifier.save_model(model))
    print(f"trained on {len(train_set)} samples "
          f"({len(model.machines)} binary machines); wrote {args.out}")
    if test_set:
        x = np.stack([s.features for s in test_set])
        y = np.array([s.label for s in test_set])
        accuracy = float(np.mean(classifier.predict_batch(model, x) == y))
        print(f"held-out accuracy: {accuracy:.4f} ({len(test_set)} samples)")
    else:
        print("warning: no held-out evaluation (split leaves no test samples)",
              file=sys.stderr)
    return 0


# --- run --------------------------------------------------------------------------

def _expand_manifest(manifest: dict, manifest_dir: Path) -> list[dict]:
    problems: list[str] = []
    rows = manifest.get("rows")
    if not isinstance(rows, list) or not rows:
        raise ConfigError(["manifest must contain a non-empty 'rows' list"])
    tasks = []
    for idx, row in enumerate(rows):
        where = f"rows[{idx}]"
        if not isinstance(row, dict):
            problems.append(f"{where}: must be an object")
            continue
        interface = row.get("interface")
        if interface not in INTERFACES:
            problems.append(f"{where}: interface must be one of {INTERFACES}, "
                            f"got {interface!r}")
        scenario = row.get("scenario")
        sim_cfg = None
        try:
            if isinstance(scenario, str):
                sim_cfg = load_sim_config(manifest_dir / scenario)
            elif isinstance(scenario, dict):
                sim_cfg = sim_config_from_dict(scenario)
            else:
                problems.append(f"{where}: 'scenario' must be a path or object")
        except ConfigError as exc:
            problems.extend(f"{where}: {p}" for p in exc.problems)
        pilot = row.get("pilot")
        pilot_cfg = None
        try:
            if pilot is None:
                pilot_cfg = PilotConfig()
            elif isinstance(pilot, dict):
                pilot_cfg = pilot_config_from_dict(pilot)
            elif isinstance(pilot, str):
                pilot_cfg = pilot_config_from_dict(
                    json.loads((manifest_dir / pilot).read_text()))
            else:
                problems.append(f"{where}: 'pilot' must be a path or object")
        except (ConfigError, OSError, json.JSONDecodeError) as exc:
            problems.append(f"{where}: pilot profile: {exc}")
        seed = row.get("seed")
        if not isinstance(seed, int) or seed < 0:
            problems.append(f"{where}: 'seed' must be a non-negative integer")
            seed = 0
        repeats = row.get("repeats", 1)
        if not isinstance(repeats, int) or repeats < 1:
            problems.append(f"{where}: 'repeats' must be a positive integer")
            repeats = 1
        model_path = row.get("model")
        if interface == "finger-number":
            if not model_path:
                problems.append(f"{where}: finger-number requires a 'model' file")
            elif not (manifest_dir / model_path).exists():
                problems.append(f"{where}: model file not found: "
                                f"{manifest_dir / model_path}")
        for rep in range(repeats):
            tasks.append({"row": idx, "rep": rep, "interface": interface,
                          "sim_cfg": sim_cfg, "pilot_cfg": pilot_cfg,
                          "seed": seed + rep,
                          "model_path": str(manifest_dir / model_path)
                          if model_path else None})
    seen: dict[tuple, str] = {}
    for task in tasks:
        key = (task["row"], task["seed"])
        if key in seen:
            problems.append(f"rows[{task['row']}]: duplicate seed {task['seed']}")
        seen[key] = ""
    if problems:
        raise ConfigError(problems)
    return tasks


def _run_one_task(task: dict, run_dir: str) -> dict:
    sim_cfg: SimConfig = task["sim_cfg"]
    model = _load_model(task["model_path"]) if task["model_path"] else None
    rec, inputs = run_trial(sim_cfg, task["interface"], task["pilot_cfg"],
                            task["seed"], model=model, record_inputs=True)
    stem = (f"row{task['row']:03d}-rep{task['rep']:02d}-"
            f"{task['interface']}-seed{task['seed']}")
    run_path = Path(run_dir)
    _atomic_write(run_path / "records" / f"{stem}.csv",
                  trial_record_to_csv(rec).encode())
    if task["interface"] == "gamepad":
        _atomic_write(run_path / "inputs" / f"{stem}.gamepadlog",
                      write_gamepad_log(inputs))
    else:
        _atomic_write(run_path / "inputs" / f"{stem}.handlog",
                      write_hand_log(inputs))
    metrics = compute_metrics(rec)
    return {"row": task["row"], "rep": task["rep"], "kind": rec.kind,
            "interface": task["interface"], "seed": task["seed"],
            "metrics": dataclasses.asdict(metrics)}


def _metrics_csv(results: list[dict]) -> str:
    header = ["row", "rep", "scenario_kind", "interface", "seed"] + _METRIC_FIELDS
    lines = [",".join(header)]
    for r in results:
        cells = [str(r["row"]), str(r["rep"]), r["kind"], r["interface"],
                 str(r["seed"])]
        cells += [repr(r["metrics"][f]) if f in r["metrics"] else ""
                  for f in _METRIC_FIELDS]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _aggregate_csv(results: list[dict]) -> str:
    lines = ["scenario_kind,interface,n_trials,field,mean,sem"]
    groups: dict[tuple[str, str], list[dict]] = {}
    for r in results:
        groups.setdefault((r["kind"], r["interface"]), []).append(r)
    for (kind, interface), rows in sorted(groups.items()):
        cls = PursuitMetrics if kind == "pursuit" else WaypointMetrics
        metric_rows = [cls(**r["metrics"]) for r in rows]
        for field, (mean, sem) in aggregate(metric_rows).items():
            lines.append(f"{kind},{interface},{len(rows)},{field},{mean!r},{sem!r}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    manifest_path = Path(args.manifest)
    try:
        manifest_bytes = manifest_path.read_bytes()
        manifest = json.loads(manifest_bytes)
    except OSError as exc:
        raise ConfigError([f"cannot read manifest {manifest_path}: {exc}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"manifest is not valid JSON: {exc}"]) from None
    tasks = _expand_manifest(manifest, manifest_path.parent)

    out_root = Path(args.out or manifest.get("output_dir") or ".")
    run_id = "run-" + hashlib.sha256(manifest_bytes).hexdigest()[:12]
    run_dir = out_root / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(run_dir / "manifest.json", manifest_bytes)

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one_task, tasks,
                                    [str(run_dir)] * len(tasks)))
    else:
        results = [_run_one_task(task, str(run_dir)) for task in tasks]
    results.sort(key=lambda r: (r["row"], r["rep"]))

    _atomic_write(run_dir / "metrics.csv", _metrics_csv(results).encode())
    _atomic_write(run_dir / "aggregate.csv", _aggregate_csv(results).encode())
    print(f"{len(results)} trials -> {run_dir}")
    return 0


# --- replay ------------------------------------------------------------------------

def cmd_replay(args) -> int:
    sim_cfg = load_sim_config(args.config)
    if args.interface == "finger-number" and not args.model:
        raise ConfigError(["finger-number replay requires --model"])
    model = _load_model(args.model) if args.model else None
    try:
        log_bytes = Path(args.log).read_bytes()
    except OSError as exc:
        raise ConfigError([f"cannot read log {args.log}: {exc}"]) from None
    if args.interface == "gamepad":
        frames = parse_gamepad_log(log_bytes)
    else:
        frames = parse_hand_log(log_bytes)
    if not frames:
        raise ConfigError([f"replay log {args.log} is empty"])

    expected_ticks = round((sim_cfg.pursuit.duration_s if sim_cfg.kind == "pursuit"
                            else sim_cfg.waypoints.max_duration_s) / sim_cfg.dt_s)
    if len(frames) < expected_ticks and sim_cfg.kind == "pursuit":
        print(f"warning: log has {len(frames)} frames, trial wants "
              f"{expected_ticks}; truncating", file=sys.stderr)

    rec = replay_trial(sim_cfg, args.interface, frames, args.seed, model=model)
    out = Path(args.out)
    _atomic_write(out, trial_record_to_csv(rec).encode())
    print(f"wrote {out}")
    try:
        metrics = compute_metrics(rec)
        for field, value in dataclasses.asdict(metrics).items():
            print(f"{field}: {value}")
    except ValueError as exc:
        print(f"metrics unavailable: {exc}", file=sys.stderr)
    return 0


# --- report ------------------------------------------------------------------------

def cmd_report(args) -> int:
    results = []
    problems = []
    for idx, path in enumerate(args.records):
        try:
            rec = trial_record_from_csv(Path(path).read_text())
        except (OSError, GestlocoError) as exc:
            problems.append(f"{path}: {exc}")
            continue
        metrics = compute_metrics(rec)
        results.append({"row": idx, "rep": 0, "kind": rec.kind,
                        "interface": rec.interface, "seed": rec.seed,
                        "metrics": dataclasses.asdict(metrics)})
    if problems:
        raise ConfigError(problems)
    out = Path(args.out)
    _atomic_write(out / "metrics.csv", _metrics_csv(results).encode())
    _atomic_write(out / "aggregate.csv", _aggregate_csv(results).encode())
    print(f"{len(results)} records -> {out}/metrics.csv, {out}/aggregate.csv")
    return 0


# --- entry point ---------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors: exit 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gestloco",
                     description="Gesture-driven virtual locomotion benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="synthesize a labeled pose dataset")
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--sigma", type=float, default=0.005,
                   help="fingertip noise std in metres")
    p.add_argument("--hand-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="dataset.handlog")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="train the finger-count classifier")
    p.add_argument("--dataset", required=True, help="hand-frame log file")
    p.add_argument("--labels", help="label sidecar (default: <dataset>.labels)")
    p.add_argument("--gamma", type=float, default=None,
                   help="RBF gamma (default: variance-scaled heuristic)")
    p.add_argument("--c-reg", type=float, default=classifier.DEFAULT_C_REG)
    p.add_argument("--split", type=float, default=0.5,
                   help="training fraction; deterministic hash split")
    p.add_argument("--out", default="model.svm")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="execute a batch manifest")
    p.add_argument("manifest", help="JSON manifest file")
    p.add_argument("--out", help="output root (default: manifest output_dir)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-run a recorded input log")
    p.add_argument("--log", required=True)
    p.add_argument("--interface", required=True, choices=INTERFACES)
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--model", help="classifier model (finger-number)")
    p.add_argument("--out", default="replay.csv")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="metrics CSVs from trial records")
    p.add_argument("records", nargs="+")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    except GestlocoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
