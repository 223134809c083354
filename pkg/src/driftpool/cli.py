"""Command-line surface: dataset generation, single runs, and seed sweeps.

Exit codes: 0 success, 2 usage error, 1 runtime failure.
Config precedence: built-in defaults < ``--config`` file (flat key=value
lines) < explicit flags / ``--param`` overrides.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
from pathlib import Path

from .baselines import SYSTEM_NAMES, make_system
from .engine import SelectParams
from .evaluation import aggregate, prequential_run, write_summary_csv, write_summary_json
from .generators import DATASET_DEFAULTS, build_benchmark_stream, default_stream_spec
from .stream import load_csv_stream, write_csv_stream

STREAM_KEYS = ("dataset", "seed", "segments", "segment_length", "drift_width",
               "noise", "transition_noise", "complexity")


def read_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {text!r}")
        key, _, value = text.partition("=")
        values[key.strip()] = value.strip()
    return values


def resolve_params(config_values: dict[str, str], param_flags: list[str],
                   error) -> SelectParams:
    overrides = {}
    known = set(SelectParams.field_names())
    for key, value in config_values.items():
        if key in known:
            overrides[key] = SelectParams.parse_override(key, value)
    for flag in param_flags or []:
        if "=" not in flag:
            error(f"--param expects key=value, got {flag!r}")
        key, _, value = flag.partition("=")
        key = key.strip()
        if key not in known:
            error(f"unknown --param key {key!r}; valid keys: {', '.join(sorted(known))}")
        try:
            overrides[key] = SelectParams.parse_override(key, value.strip())
        except ValueError:
            error(f"--param {key}: cannot parse {value!r}")
    return SelectParams().with_overrides(**overrides)


def _resolve_stream_args(args, config_values: dict[str, str]):
    """Merge generator settings: defaults < config file < explicit flags."""
    merged = {}
    for key in STREAM_KEYS:
        if key in config_values:
            merged[key] = config_values[key]
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    dataset = str(merged.get("dataset", "")).lower()
    if dataset not in DATASET_DEFAULTS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {sorted(DATASET_DEFAULTS)}")
    return dict(
        dataset=dataset,
        seed=int(merged.get("seed", 1)),
        segments=None if merged.get("segments") is None else int(merged["segments"]),
        segment_length=None if merged.get("segment_length") is None else int(merged["segment_length"]),
        drift_width=int(merged.get("drift_width", 0)),
        noise=float(merged.get("noise", 0.0)),
        transition_noise=float(merged.get("transition_noise", 0.0)),
        complexity=int(merged.get("complexity", 3)),
    )


def _build_stream(resolved: dict):
    spec = default_stream_spec(
        resolved["dataset"], resolved["seed"], segments=resolved["segments"],
        segment_length=resolved["segment_length"], drift_width=resolved["drift_width"],
        noise_fraction=resolved["noise"], transition_noise=resolved["transition_noise"],
        complexity=resolved["complexity"])
    stream, segments = build_benchmark_stream(spec)
    return spec, stream, segments


def cmd_generate(args, parser) -> int:
    config_values = read_config_file(args.config) if args.config else {}
    resolved = _resolve_stream_args(args, config_values)
    spec, stream, _ = _build_stream(resolved)
    write_csv_stream(stream, args.out)
    manifest = {
        **resolved,
        "segments": spec.segment_count(),
        "segment_length": spec.segment_length,
        "length": len(stream),
        "n_features": stream.n_features,
        "n_concepts": spec.n_concepts,
        "out": str(args.out),
    }
    Path(str(args.out) + ".manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"dataset={resolved['dataset']} seed={resolved['seed']} length={len(stream)} "
          f"features={stream.n_features} concepts={spec.n_concepts}")
    return 0


def _run_once(system_name: str, stream, seed: int, dataset: str, params: SelectParams,
              ub_delay: int, trace_path=None):
    system = make_system(system_name, stream.n_features, stream.n_classes,
                         params, ub_delay=ub_delay)
    config = {"params": params.__dict__, "dataset": dataset, "ub_delay": ub_delay}
    return prequential_run(system, stream, seed=seed, system_name=system_name,
                           dataset_name=dataset, config=config, trace_path=trace_path)


def cmd_run(args, parser) -> int:
    config_values = read_config_file(args.config) if args.config else {}
    params = resolve_params(config_values, args.param, parser.error)
    stream = load_csv_stream(args.input)
    dataset = args.dataset or Path(args.input).stem
    result = _run_once(args.system, stream, args.seed, dataset, params,
                       args.ub_delay, trace_path=args.trace)
    payload = result.to_json()
    if args.out:
        Path(args.out).write_text(payload)
    print(payload, end="")
    return 0


def _parse_seed_range(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _sweep_seed_task(task):
    """Worker: generate the seed's dataset once, run every system on it."""
    resolved, systems, params_dict, ub_delay = task
    params = SelectParams().with_overrides(**params_dict)
    _, stream, _ = _build_stream(resolved)
    out = []
    for system_name in systems:
        try:
            result = _run_once(system_name, stream, resolved["seed"],
                               resolved["dataset"], params, ub_delay)
            summary = result.summary()
            summary["config"] = result.config
            out.append((system_name, summary, None))
        except Exception as exc:  # recorded per (seed, system), sweep continues
            out.append((system_name, None, f"{type(exc).__name__}: {exc}"))
    return resolved["seed"], out


def cmd_sweep(args, parser) -> int:
    config_values = read_config_file(args.config) if args.config else {}
    params = resolve_params(config_values, args.param, parser.error)
    systems = [s.strip() for s in args.systems.split(",") if s.strip()]
    for name in systems:
        if name not in SYSTEM_NAMES:
            parser.error(f"unknown system {name!r}; choose from {SYSTEM_NAMES}")
    seeds = _parse_seed_range(args.seeds)
    if not seeds:
        parser.error("empty seed range")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for seed in seeds:
        resolved = _resolve_stream_args(args, config_values)
        resolved["seed"] = seed
        tasks.append((resolved, systems, params.__dict__, args.ub_delay))

    if args.jobs > 1:
        with multiprocessing.Pool(processes=args.jobs) as pool:
            raw = pool.map(_sweep_seed_task, tasks)
    else:
        raw = [_sweep_seed_task(t) for t in tasks]

    raw.sort(key=lambda item: item[0])
    summaries = []
    failures = []
    dataset = tasks[0][0]["dataset"]
    for seed, entries in raw:
        for system_name, summary, error_text in entries:
            if error_text is not None:
                failures.append({"seed": seed, "system": system_name, "error": error_text})
                continue
            run_path = out_dir / f"{dataset}_{system_name}_seed{seed}.json"
            run_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
            summaries.append(summary)

    if summaries:
        rows = aggregate(summaries)
        write_summary_csv(rows, out_dir / "summary.csv")
        write_summary_json(rows, out_dir / "summary.json")
    if failures:
        (out_dir / "failures.json").write_text(
            json.dumps(failures, sort_keys=True, indent=2) + "\n")
        print(f"{len(failures)} run(s) failed; see failures.json", file=sys.stderr)
    print(f"wrote {len(summaries)} run summaries to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driftpool",
                                     description="Streaming drift adaptation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stream_flags(p):
        p.add_argument("--dataset", choices=sorted(DATASET_DEFAULTS), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--segments", type=int, default=None)
        p.add_argument("--segment-length", dest="segment_length", type=int, default=None)
        p.add_argument("--drift-width", dest="drift_width", type=int, default=None)
        p.add_argument("--noise", type=float, default=None)
        p.add_argument("--transition-noise", dest="transition_noise", type=float, default=None)
        p.add_argument("--complexity", type=int, default=None)
        p.add_argument("--config", default=None, help="flat key=value config file")

    gen = sub.add_parser("generate", help="write a synthetic dataset CSV")
    add_stream_flags(gen)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="one prequential run over a dataset CSV")
    run.add_argument("--input", required=True)
    run.add_argument("--system", required=True, choices=SYSTEM_NAMES)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default=None)
    run.add_argument("--dataset", default=None, help="dataset name for reporting")
    run.add_argument("--trace", default=None, help="write the per-timestep trace CSV here")
    run.add_argument("--ub-delay", dest="ub_delay", type=int, default=100)
    run.add_argument("--param", action="append", default=[],
                     help="engine parameter override key=value (repeatable)")
    run.add_argument("--config", default=None)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="seed sweep: regenerate, run, aggregate")
    add_stream_flags(sweep)
    sweep.add_argument("--seeds", required=True, help="range A..B or comma list")
    sweep.add_argument("--systems", required=True, help="comma-separated system names")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--ub-delay", dest="ub_delay", type=int, default=100)
    sweep.add_argument("--param", action="append", default=[])
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
