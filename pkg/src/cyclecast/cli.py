"""Command-line entry point: prepare / train / evaluate / baseline /
predict / diagnose / bench / synth, all driven by a JSON config file."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from datetime import date
from pathlib import Path

from . import diagnostics, pipeline, series, synthetic
from .errors import CyclecastError


def _load_config(args) -> pipeline.RunConfig:
    cfg = pipeline.RunConfig.from_file(args.config)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed,
                      train=replace(cfg.train, seed=args.seed))
    if args.deterministic:
        cfg = replace(cfg, train=replace(cfg.train, deterministic=True))
    if getattr(args, "no_residual", False):
        cfg = replace(cfg, residual_mode=False)
    return cfg


def _add_common(parser, config_required=True):
    parser.add_argument("--config", required=config_required,
                        help="path to JSON run config")
    parser.add_argument("--out", help="override output directory")
    parser.add_argument("--seed", type=int, help="override seed")
    parser.add_argument("--deterministic", action="store_true",
                        help="force deterministic training")
    parser.add_argument("--no-residual", action="store_true",
                        help="ablation: train on raw rows with zero RHP")


def cmd_prepare(args) -> int:
    cfg = _load_config(args)
    prepared = pipeline.prepare(cfg)
    for name, ps in prepared.splits.items():
        print(f"{name}: {ps.frame.n_rows} cycles, valid from row "
              f"{ps.valid_from}, {len(ps.samples)} samples")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    result = pipeline.run_train(cfg)
    for name, m in result["metrics"].items():
        print(f"{name}: mse={m['mse']:.6g} mape={m['mape']:.4f}% "
              f"mae={m['mae']:.6g}")
    print(f"checkpoint: {Path(cfg.output_dir) / 'train' / 'checkpoint.json'}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    metrics = pipeline.run_evaluate(cfg, args.checkpoint)
    for name, m in metrics.items():
        print(f"{name}: mse={m['mse']:.6g} mape={m['mape']:.4f}% "
              f"mae={m['mae']:.6g}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _load_config(args)
    result = pipeline.run_baseline(cfg, args.kind)
    m = result["metrics"]
    print(f"{args.kind} test: mse={m.mse:.6g} mape={m.mape:.4f}% "
          f"mae={m.mae:.6g} ({m.n_samples} samples)")
    return 0


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    anchor = date.fromisoformat(args.anchor_date)
    out_path = args.forecast_out or (
        Path(cfg.output_dir) / f"forecast_{anchor.isoformat()}.csv"
    )
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    forecast = pipeline.run_predict(cfg, args.checkpoint, anchor, out_path)
    print(f"wrote {forecast.size} forecast steps to {out_path}")
    return 0


def cmd_diagnose(args) -> int:
    cfg = _load_config(args) if args.config else None
    out_dir = Path(args.out or (cfg.output_dir if cfg else "runs/diagnose"))
    out_dir.mkdir(parents=True, exist_ok=True)
    records = diagnostics.run_breakdown_grid(seeds=range(args.seeds))
    out_path = out_dir / "breakdown.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["activation", "scale", "seed", "rank1_deviation",
                         "bias_fit_residual"])
        for r in records:
            writer.writerow([r.activation, r.scale, r.seed,
                             repr(r.rank1_deviation), repr(r.bias_fit_residual)])
    print(f"wrote {len(records)} rows to {out_path}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    timings = pipeline.run_bench(cfg, repeats=args.repeats,
                                 include_ablation=not args.no_residual)
    print(json.dumps(timings, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    ts = synthetic.generate(
        n_days=args.days,
        pattern_scale=args.pattern_scale,
        noise_sigma=args.noise,
        seed=args.seed if args.seed is not None else 0,
    )
    Path(args.dataset_out).parent.mkdir(parents=True, exist_ok=True)
    series.write_csv(ts, args.dataset_out)
    print(f"wrote {len(ts)} hourly values ({args.days} days) to "
          f"{args.dataset_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclecast",
        description="Cycle-compressed residual forecasting toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("prepare", cmd_prepare), ("train", cmd_train),
                     ("bench", cmd_bench)):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
        if name == "bench":
            p.add_argument("--repeats", type=int, default=3)

    p = sub.add_parser("evaluate")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("baseline")
    _add_common(p)
    p.add_argument("--kind", choices=["rhp", "persistence"], default="rhp")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("predict")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--anchor-date", required=True,
                   help="ISO date of the first forecast cycle")
    p.add_argument("--forecast-out", help="output CSV path")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("diagnose")
    _add_common(p, config_required=False)
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("synth")
    p.add_argument("--dataset-out", required=True, help="CSV output path")
    p.add_argument("--days", type=int, default=400)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--pattern-scale", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CyclecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
