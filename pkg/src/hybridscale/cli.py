"""Command-line entry point.

Exit codes: 0 success, 2 usage or validation error, 3 data error at runtime.
All durations are given in seconds.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .catalog import Allocation, default_catalog, load_catalog
from .coordinator import load_config, validate_and_build
from .dco import solve_scale_in, solve_scale_out
from .errors import (
    ConfigError,
    DomainError,
    HybridScaleError,
    InsufficientDataError,
    OrderingError,
    ParseError,
    UnknownInstanceError,
)
from .forecast import Estimator, Window, make_forecaster, rolling_evaluate
from .sim import parse_mode, run
from .trace import Spike, SyntheticProfile, bin_max, generate_synthetic, ingest_counts, read_series, write_series

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


def _fail(code: int, msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def parse_model(text: str) -> dict[str, Any]:
    """``name`` | ``name:key=val,key=val`` | a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    name, _, rest = text.partition(":")
    spec: dict[str, Any] = {"model": name}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        try:
            spec[k] = json.loads(v)
        except json.JSONDecodeError:
            spec[k] = v
    return spec


def parse_counts(text: str | None) -> Allocation:
    if not text:
        return Allocation()
    counts = {}
    for item in text.split(","):
        name, _, n = item.partition("=")
        if not n.isdigit():
            raise ConfigError(f"bad allocation entry {item!r} (expected name=count)")
        counts[name.strip()] = int(n)
    return Allocation(counts)


def _need_file(path: str, what: str = "input") -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {path}")
    return p


def cmd_preprocess(args) -> int:
    if args.bin < 1:
        raise ConfigError(f"--bin must be a positive number of seconds, got {args.bin}")
    series = ingest_counts(_need_file(args.input))
    binned = bin_max(series, args.bin)
    write_series(binned, args.output)
    print(f"wrote {len(binned)} points (lag {binned.lag} s) to {args.output}")
    return EXIT_OK


def _seconds_to_points(name: str, seconds: int, lag: int) -> int:
    if seconds < 1 or seconds % lag:
        raise ConfigError(f"--{name}={seconds} must be a positive multiple of the series lag ({lag} s)")
    return seconds // lag


def cmd_forecast_eval(args) -> int:
    series = read_series(_need_file(args.series, "series"))
    win = Window(
        _seconds_to_points("lookback", args.lookback, series.lag),
        _seconds_to_points("horizon", args.horizon, series.lag),
        _seconds_to_points("slide", args.slide, series.lag),
    )
    if win.lookback + win.horizon > len(series):
        raise ConfigError(
            f"lookback + horizon ({(win.lookback + win.horizon) * series.lag} s) exceeds the series "
            f"({len(series) * series.lag} s)"
        )
    phi = Estimator.parse(args.phi)
    models = args.model or ["seasonal_naive:season_length=1440"]
    results = {}
    for text in models:
        spec = parse_model(text)
        fc = make_forecaster(spec)
        if spec["model"] == "oracle":
            fc = fc.bind(series.values)
        results[text] = rolling_evaluate(series, fc, win, phi, workers=args.workers)

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            multi = len(results) > 1
            w.writerow((["model"] if multi else []) + ["window_index", "omega_hat", "actual_max", "rmse"])
            for name, recs in results.items():
                for r in recs:
                    w.writerow(([name] if multi else [])
                               + [r.window_index, f"{r.omega_hat:.6g}", f"{r.actual_max:.6g}", f"{r.rmse:.6g}"])

    bwe = {k: 0 for k in results}
    if len(results) > 1:
        n = len(next(iter(results.values())))
        for i in range(n):
            d = {k: abs(v[i].omega_hat - v[i].actual_max) for k, v in results.items()}
            best = min(d.values())
            winners = [k for k, x in d.items() if x == best]
            if len(winners) < len(d):
                for k in winners:
                    bwe[k] += 1
    print("model,windows,mean_rmse" + (",bwe" if len(results) > 1 else ""))
    for name, recs in results.items():
        mean = sum(r.rmse for r in recs) / len(recs)
        print(f"{name},{len(recs)},{mean:.4f}" + (f",{bwe[name]}" if len(results) > 1 else ""))
    return EXIT_OK


def cmd_dco(args) -> int:
    catalog = load_catalog(_need_file(args.catalog, "catalog")) if args.catalog else default_catalog()
    if args.direction == "out":
        sol = solve_scale_out(args.delta, catalog)
    else:
        current = parse_counts(args.current)
        for name in current:
            catalog[name]
        if not current:
            raise ConfigError("--current is required for scale-in")
        sol = solve_scale_in(args.delta, current, catalog)
    print(json.dumps({
        "direction": sol.direction,
        "delta": args.delta,
        "change": sol.change.to_dict(),
        "capacity_change": sol.capacity_change,
        "cost_per_hour": str(sol.objective_cost),
        "instances": sol.instance_count,
    }, sort_keys=True))
    return EXIT_OK


def synthetic_trace(hours: int, seed: int, base_rate: float = 1500.0, amplitude: float = 500.0,
                    noise_std: float = 30.0, spikes_per_day: int = 12, spike_height: float = 600.0):
    """Seeded demo trace: day cycle, noise, and random rectangular spikes."""
    import numpy as np

    rng = np.random.default_rng(seed)
    n = hours * 3600
    k = max(0, int(spikes_per_day * hours / 24))
    offsets = np.sort(rng.integers(0, max(n - 600, 1), size=k))
    spikes = tuple(Spike(int(o), int(rng.integers(30, 301)), float(rng.uniform(0.3, 1.0) * spike_height))
                   for o in offsets)
    prof = SyntheticProfile(base_rate=base_rate, diurnal_amplitude=amplitude, spike_schedule=spikes,
                            noise_seed=seed, noise_std=noise_std)
    return generate_synthetic(prof, hours / 24)


def cmd_synth(args) -> int:
    series = synthetic_trace(args.hours, args.seed, args.base_rate, args.amplitude, args.noise, args.spikes_per_day,
                             args.spike_height)
    write_series(series, args.output)
    print(f"wrote {len(series)} s of synthetic trace to {args.output}")
    return EXIT_OK


def _summary(label: str, report) -> str:
    a = report.aggregates
    rec = "n/a" if a["recovery_pct"] is None else f"{a['recovery_pct']:.2f}%"
    return (f"{label}: hours={a['hours']} TAC={a['tac_exact']} requests={a['requests']:.0f} "
            f"dropped={a['dropped']:.0f} above_alpha={a['above_alpha']:.0f} recovery={rec} "
            f"ric_triggers={a['ric_triggers']}")


def _suffixed(path: str | None, tag: str) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{tag}{p.suffix}"))


def cmd_simulate(args) -> int:
    config: dict[str, Any] = {}
    base_dir = None
    if args.config:
        cfg_path = Path(args.config)
        config = load_config(cfg_path)
        base_dir = cfg_path.parent
    mode = parse_mode(args.mode)
    if args.trace:
        series = ingest_counts(_need_file(args.trace, "trace"))
    else:
        series = synthetic_trace(args.synthetic_hours, args.seed)

    phis = [p.strip() for p in args.sweep_phi.split(",")] if args.sweep_phi else [None]

    def one(phi):
        cfg = json.loads(json.dumps(config))
        if phi is not None:
            cfg.setdefault("pic", {})["phi"] = phi
        ctrl = validate_and_build(cfg, base_dir=base_dir)
        return phi, run(series, ctrl, mode)

    # validate every config before doing any work
    for phi in phis:
        cfg = json.loads(json.dumps(config))
        if phi is not None:
            cfg.setdefault("pic", {})["phi"] = phi
        validate_and_build(cfg, base_dir=base_dir)

    if len(phis) > 1:
        with ThreadPoolExecutor(max_workers=min(len(phis), args.workers)) as pool:
            results = list(pool.map(one, phis))
    else:
        results = [one(phis[0])]

    for phi, report in results:
        tag = None if phi is None or len(phis) == 1 else str(Estimator.parse(phi))
        out_json = args.out_json if tag is None else _suffixed(args.out_json, tag)
        out_csv = args.out_csv if tag is None else _suffixed(args.out_csv, tag)
        if out_json:
            report.write_json(out_json)
        if out_csv:
            report.write_csv(out_csv)
        print(_summary(mode if tag is None else f"{mode} phi={tag}", report))
    return EXIT_OK


def cmd_report_diff(args) -> int:
    docs = []
    for path in (args.a, args.b):
        try:
            docs.append(json.loads(_need_file(path, "report").read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from None
    a, b = docs[0]["aggregates"], docs[1]["aggregates"]
    print(f"metric,{docs[0].get('mode', 'a')},{docs[1].get('mode', 'b')},diff")
    for key in sorted(set(a) | set(b)):
        va, vb = a.get(key), b.get(key)
        if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and not isinstance(va, bool):
            print(f"{key},{va},{vb},{vb - va}")
        elif va != vb:
            print(f"{key},{json.dumps(va)},{json.dumps(vb)},")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridscale", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="max-bin a per-second count trace")
    p.add_argument("--input", required=True)
    p.add_argument("--bin", type=int, default=60, help="bin width in seconds")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("forecast-eval", help="sliding-window forecaster evaluation")
    p.add_argument("--series", required=True)
    p.add_argument("--model", action="append",
                   help="forecaster, e.g. holt_winters or seasonal_naive:season_length=1440 (repeatable)")
    p.add_argument("--lookback", type=int, default=86_400)
    p.add_argument("--horizon", type=int, default=3_600)
    p.add_argument("--slide", type=int, default=3_600)
    p.add_argument("--phi", default="max")
    p.add_argument("--output")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_forecast_eval)

    p = sub.add_parser("dco", help="solve one delta capacity optimization")
    p.add_argument("--delta", type=float, required=True, help="capacity delta in Rps")
    p.add_argument("--direction", choices=("out", "in"), default="out")
    p.add_argument("--current", help="current allocation for scale-in, e.g. t2.medium=2,c4.large=1")
    p.add_argument("--catalog", help="catalog JSON (default: built-in EC2 table)")
    p.set_defaults(func=cmd_dco)

    p = sub.add_parser("simulate", help="replay a trace through the controller")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--trace", help="per-second CSV trace")
    src.add_argument("--synthetic-hours", type=int, default=48)
    p.add_argument("--config")
    p.add_argument("--mode", default="pic+rsc+ric", help="pic | pic+rsc | pic+rsc+ric")
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--seed", type=int, default=0, help="seed for the synthetic trace")
    p.add_argument("--sweep-phi", help="comma-separated estimators, e.g. max,p90,p50")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth", help="write a seeded synthetic per-second trace")
    p.add_argument("--hours", type=int, default=48)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-rate", type=float, default=1500.0)
    p.add_argument("--amplitude", type=float, default=500.0)
    p.add_argument("--noise", type=float, default=30.0)
    p.add_argument("--spikes-per-day", type=int, default=12)
    p.add_argument("--spike-height", type=float, default=600.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report-diff", help="compare aggregates of two JSON reports")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_report_diff)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except (ParseError, OrderingError, DomainError) as exc:
        return _fail(EXIT_DATA, str(exc))
    except (ConfigError, UnknownInstanceError, InsufficientDataError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except HybridScaleError as exc:
        return _fail(EXIT_DATA, str(exc))


if __name__ == "__main__":
    sys.exit(main())
