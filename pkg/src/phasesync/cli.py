"""Command-line front end.

::

    phasesync simulate --sim ramp --filter on --seed 42 --out runs/ramp
    phasesync analyze subjects.json --out tensors/
    phasesync states tensors/crp_w28 --k 2 --restarts 200 --out states/crp
    phasesync oracle-check

Exit status: 0 success, 1 compute failure, 2 invalid configuration or input.
Flags override values read from ``--config`` (TOML or JSON; a run manifest
written by ``simulate`` is accepted too).
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import DEFAULT_WINDOW, subject_tensors
from .exceptions import InputError, PhaseSyncError
from .io import (
    _csv_text,
    atomic_write,
    fmt,
    load_subjects,
    read_tensor_csv,
    write_json,
    write_tensor_binary,
    write_tensor_csv,
)
from .psmetrics import ALL_METRICS, Metric
from .signals import BandSpec
from .simharness import SimConfig, SimId, run_simulation

log = logging.getLogger("phasesync")

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2


# --- argument parsing helpers -----------------------------------------------

def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _metric_list(text):
    if isinstance(text, str):
        text = text.split(",")
    return [Metric.parse(m) for m in text if str(m).strip()]


def _band(value):
    if isinstance(value, dict):
        return BandSpec(float(value["low_hz"]), float(value["high_hz"]), int(value.get("order", 5)))
    if isinstance(value, str):
        value = value.split(",")
    try:
        parts = [float(v) for v in value]
    except (TypeError, ValueError):
        raise InputError(f"band must be 'low,high' in Hz, got {value!r}") from None
    if len(parts) not in (2, 3):
        raise InputError(f"band must be 'low,high' in Hz, got {value!r}")
    return BandSpec(parts[0], parts[1], int(parts[2]) if len(parts) == 3 else 5)


def _k_range(text):
    text = str(text)
    sep = ".." if ".." in text else "-"
    try:
        lo, hi = (int(v) for v in text.split(sep))
    except ValueError:
        raise InputError(f"k range must look like '2..6', got {text!r}") from None
    if lo < 2 or hi < lo:
        raise InputError(f"k range must satisfy 2 <= a <= b, got {text!r}")
    return range(lo, hi + 1)


def _on_off(value):
    if isinstance(value, bool):
        return value
    v = str(value).lower()
    if v in ("on", "true", "1", "yes"):
        return True
    if v in ("off", "false", "0", "no"):
        return False
    raise InputError(f"expected on/off, got {value!r}")


def load_config(path):
    """Config mapping from a TOML or JSON file (``None`` gives ``{}``)."""
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such config file: {path}")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
    except ValueError as exc:
        raise InputError(f"{path}: cannot parse config ({exc})") from None
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return dict(doc)


def _section(cfg, name):
    """Top-level keys plus an optional ``[name]`` table overriding them."""
    out = {k: v for k, v in cfg.items() if not isinstance(v, dict) or k == "band"}
    out.update(cfg.get(name, {}))
    return out


# --- simulate ---------------------------------------------------------------

_SIM_ALIASES = {"sim": "sim_id", "reps": "n_realizations", "filter": "filtering"}


def sim_config_from(cfg, args):
    values = {}
    for key, value in _section(cfg, "simulate").items():
        values[_SIM_ALIASES.get(key, key)] = value
    flags = {"sim_id": args.sim, "filtering": args.filter, "seed": args.seed,
             "n_realizations": args.reps, "windows": args.windows, "metrics": args.metrics,
             "band": args.band}
    values.update({k: v for k, v in flags.items() if v is not None})
    known = set(SimConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise InputError(f"unknown simulate config keys: {', '.join(sorted(unknown))}")
    if "sim_id" in values:
        values["sim_id"] = SimId.parse(values["sim_id"])
    if "filtering" in values:
        values["filtering"] = _on_off(values["filtering"])
    if "windows" in values:
        w = values["windows"]
        values["windows"] = tuple(_int_list(w) if isinstance(w, str) else w)
    if "metrics" in values:
        values["metrics"] = tuple(_metric_list(values["metrics"]))
    if "band" in values:
        values["band"] = _band(values["band"])
    for key in ("n_samples", "n_realizations", "seed"):
        if key in values:
            values[key] = int(values[key])
    try:
        config = SimConfig(**values)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid simulate config: {exc}") from None
    return config.validate()


def cmd_simulate(args):
    config = sim_config_from(load_config(args.config), args)
    out = Path(args.out)
    summary = run_simulation(config)
    arm = "filtered" if config.filtering else "unfiltered"
    stem = f"{config.sim_id.value}_{arm}"
    files = []
    for (metric, window), cell in summary.cells.items():
        name = f"{stem}_{metric.value}" + (f"_w{window}" if window else "") + ".csv"
        times = cell.times_s(config.tr_seconds)
        rows = ([fmt(t), fmt(m), fmt(lo), fmt(hi), int(n)]
                for t, m, lo, hi, n in zip(times, cell.mean, cell.lower95, cell.upper95, cell.n_valid))
        atomic_write(out / name, _csv_text(["time_s", "mean", "lower95", "upper95", "n_valid"], rows))
        files.append(name)
    write_json(out / f"{stem}_manifest.json", {
        "command": "simulate",
        "version": __version__,
        "config": config.to_dict(),
        "seed": config.seed,
        "wall_seconds": summary.wall_seconds,
        "surrogate_failures": summary.surrogate_failures,
        "files": files,
    })
    print(f"wrote {len(files)} summaries to {out} ({summary.wall_seconds:.1f} s)")
    return EXIT_OK


# --- analyze ----------------------------------------------------------------

def cmd_analyze(args):
    cfg = _section(load_config(args.config), "analyze")
    manifest = args.manifest or cfg.get("manifest")
    if manifest is None:
        raise InputError("analyze needs a subject manifest")
    metrics = _metric_list(args.metrics or cfg.get("metrics", [m.value for m in ALL_METRICS]))
    windows = args.windows or cfg.get("windows", [DEFAULT_WINDOW])
    windows = _int_list(windows) if isinstance(windows, str) else [int(w) for w in windows]
    band = _band(args.band or cfg.get("band", [0.03, 0.07]))
    out = Path(args.out)
    subjects = load_subjects(manifest)
    first = subjects[0][1]
    band.validate(first.tr_seconds)
    for w in windows:
        if not 3 <= w <= first.n_samples - 1:
            raise InputError(f"window {w} does not fit {first.n_samples} samples")

    written = {}
    for w in windows:
        per_subject = [(sid, subject_tensors(data, metrics, w, band)) for sid, data in subjects]
        for metric in metrics:
            if not metric.windowed and w != windows[0]:
                continue
            folder = metric.value + (f"_w{w}" if metric.windowed else "")
            entries = []
            for sid, tensors in per_subject:
                tensor = tensors[metric]
                write_tensor_csv(out / folder / f"{sid}.csv", tensor)
                write_tensor_binary(out / folder / f"{sid}.pstb", tensor)
                entries.append({"id": sid, "csv": f"{sid}.csv", "binary": f"{sid}.pstb"})
            write_json(out / folder / "tensor_manifest.json", {
                "metric": metric.value,
                "window": w if metric.windowed else None,
                "tr_seconds": first.tr_seconds,
                "n_regions": first.n_regions,
                "region_labels": first.region_labels,
                "band": [band.low_hz, band.high_hz, band.order],
                "window_alignment": "trailing: value at t uses samples t-L+1..t",
                "subjects": entries,
            })
            written[folder] = len(entries)
    write_json(out / "analyze_manifest.json", {
        "command": "analyze",
        "version": __version__,
        "manifest": str(manifest),
        "metrics": [m.value for m in metrics],
        "windows": windows,
        "band": [band.low_hz, band.high_hz, band.order],
        "outputs": written,
    })
    print(f"wrote tensors for {len(subjects)} subjects: {', '.join(sorted(written))}")
    return EXIT_OK


# --- states -----------------------------------------------------------------

def _load_tensor_dir(folder, metric=None):
    folder = Path(folder)
    if not folder.is_dir():
        raise InputError(f"no such tensor directory: {folder}")
    manifest = folder / "tensor_manifest.json"
    if manifest.is_file():
        doc = json.loads(manifest.read_text())
        metric = Metric.parse(doc["metric"])
        labels = doc.get("region_labels")
        entries = [(e["id"], folder / e["csv"]) for e in doc["subjects"]]
        tr = doc.get("tr_seconds")
        window = doc.get("window")
    else:
        entries = [(p.stem, p) for p in sorted(folder.glob("*.csv"))]
        labels, tr, window = None, None, None
        if entries and metric is None:
            raise InputError(f"{folder}: no tensor_manifest.json; pass --metrics to name the metric")
    if not entries:
        raise InputError(f"{folder}: no tensor files found")
    tensors = []
    for sid, path in entries:
        if not path.is_file():
            raise InputError(f"missing tensor file {path}")
        t = read_tensor_csv(path, metric, window, tr, labels)
        if tensors and (t.n_regions != tensors[0].n_regions):
            raise InputError(f"{path}: {t.n_regions} regions, expected {tensors[0].n_regions}")
        tensors.append(t)
    return [sid for sid, _ in entries], tensors


def cmd_states(args):
    from .states import run_state_pipeline

    cfg = _section(load_config(args.config), "states")
    folder = args.input or cfg.get("input")
    if folder is None:
        raise InputError("states needs a tensor directory")
    metric = _metric_list(args.metrics)[0] if args.metrics else None
    k_range = _k_range(args.k_range or cfg.get("k_range", "2..6"))
    force_k = args.k if args.k is not None else cfg.get("k")
    restarts = int(args.restarts if args.restarts is not None else cfg.get("restarts", 200))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    if force_k is not None and int(force_k) < 2:
        raise InputError("--k must be >= 2")
    if restarts < 1:
        raise InputError("--restarts must be >= 1")
    ids, tensors = _load_tensor_dir(folder, metric)
    res = run_state_pipeline(tensors, k_range=k_range, restarts=restarts, seed=seed,
                             force_k=force_k)
    out = Path(args.out)
    labels = tensors[0].region_labels
    files = []
    for n, mat in enumerate(res.state_matrices, start=1):
        rows = ([lab] + [fmt(v) for v in row] for lab, row in zip(labels, mat))
        name = f"state_{n}.csv"
        atomic_write(out / name, _csv_text(["region"] + list(labels), rows))
        files.append(name)
    g = res.group
    rows = ([ids[s], int(t), int(lab)] for s, t, lab in zip(g.subject_index, g.time_index, res.result.labels))
    atomic_write(out / "labels.csv", _csv_text(["subject", "time_index", "state"], rows))
    write_json(out / "states_report.json", {
        "command": "states",
        "version": __version__,
        "metric": g.metric.value,
        "k": res.result.k,
        "forced_k": force_k,
        "k_sweep": [{"k": k, "dbi": (None if not np.isfinite(v) else v),
                     "inertia": res.sweep[k].inertia} for k, v in sorted(res.result.dbi_by_k.items())],
        "inertia": res.result.inertia,
        "restarts": restarts,
        "seed": seed,
        "n_columns": g.n_columns,
        "dropped_columns": len(g.dropped),
        "subjects": ids,
        "files": files + ["labels.csv"],
    })
    print(f"{g.metric.value}: k = {res.result.k}, {g.n_columns} columns, wrote {len(files)} state matrices to {out}")
    return EXIT_OK


# --- oracle-check -----------------------------------------------------------

def cmd_oracle_check(args):
    from .oracles import run_oracle_check

    report = run_oracle_check(seed=args.seed or 0)
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name:24s} {detail}")
    failed = [name for name, ok, _ in report if not ok]
    if failed:
        print(f"{len(failed)} oracle(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


# --- entry point ------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="phasesync", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--metrics", help="comma-separated metric names")
        p.add_argument("--windows", help="comma-separated window lengths (samples)")
        p.add_argument("--band", help="band edges in Hz, 'low,high'")

    p = sub.add_parser("simulate", help="run a Monte-Carlo simulation study")
    common(p, "phasesync_sim")
    p.add_argument("--sim", choices=["null", "ramp", "sigmoid"])
    p.add_argument("--filter", choices=["on", "off"])
    p.add_argument("--reps", type=int, help="number of replicates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="pairwise tensors for recorded subjects")
    common(p, "phasesync_tensors")
    p.add_argument("manifest", nargs="?", help="subject manifest (JSON)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("states", help="cluster tensors into recurring states")
    common(p, "phasesync_states")
    p.add_argument("input", nargs="?", help="directory of tensors for one metric")
    p.add_argument("--k", type=int, help="force the number of states")
    p.add_argument("--k-range", dest="k_range", help="k sweep, e.g. 2..6")
    p.add_argument("--restarts", type=int)
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("oracle-check", help="compare kernels against reference oracles")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        code = args.func(args)
    except InputError as exc:
        print(f"phasesync {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"phasesync {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhaseSyncError, ArithmeticError, MemoryError) as exc:
        print(f"phasesync {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    log.debug("%s finished in %.2f s", args.command, time.perf_counter() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
