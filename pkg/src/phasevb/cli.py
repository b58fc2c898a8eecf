"""Command-line interface: sweep, decode, and trial subcommands."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .harness import (
    DECODERS,
    SweepConfig,
    _decode_chunk,
    _generate_cell,
    _map_decode,
    load_config,
    run_sweep,
    snr_to_noise_variance,
    write_csv,
)


def _parse_iq_file(path, n: int) -> np.ndarray:
    """Read observations: one period per line, samples as `re,im;re,im;...`."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            samples = []
            for token in line.split(";"):
                parts = token.split(",")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: bad sample {token!r}, expected re,im")
                samples.append(complex(float(parts[0]), float(parts[1])))
            if len(samples) != n:
                raise ValueError(
                    f"{path}:{lineno}: expected {n} samples per period, got {len(samples)}"
                )
            rows.append(samples)
    if not rows:
        raise ValueError(f"{path}: no observations found")
    return np.asarray(rows, dtype=np.complex128)


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    t0 = time.perf_counter()
    result = run_sweep(cfg, workers=args.workers)
    elapsed = time.perf_counter() - t0
    write_csv(result, args.out_csv)
    print(f"sweep: {len(result.cells)} cells in {elapsed:.1f} s -> {args.out_csv}")
    if args.out_svg:
        from .plotting import render_plot

        render_plot(result, args.out_svg)
        print(f"figure -> {args.out_svg}")
    return 0


def _cmd_decode(args) -> int:
    cfg = load_config(args.config)
    c = cfg.constellation_obj()
    pulse = cfg.pulse_obj()
    x = _parse_iq_file(args.input, pulse.n)
    snr_db = args.snr if args.snr is not None else cfg.snr_db_list[0]
    r = snr_to_noise_variance(snr_db, c, pulse)
    decoder = args.decoder or cfg.decoders[0]
    maps, probs = _map_decode(
        decoder, x[None], c, pulse, cfg.prior().kappa, r, {}, cfg.vb_config()
    )
    print(f"# decoder={decoder} snr_db={snr_db:g} r={r:.6g} periods={x.shape[0]}")
    print("# period map " + " ".join(f"p[{m}]" for m in range(c.order)))
    for i in range(x.shape[0]):
        row = " ".join(f"{p:.6f}" for p in probs[0, i])
        print(f"{i} {int(maps[0, i])} {row}")
    return 0


def _cmd_trial(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = SweepConfig(**{**cfg.__dict__, "seed": args.seed})
    snr_list = list(cfg.snr_db_list)
    if args.snr not in snr_list:
        raise SystemExit(f"--snr {args.snr:g} is not a sweep point of this config: {snr_list}")
    snr_index = snr_list.index(args.snr)
    c, pulse, r, pilots, x, truth = _generate_cell(cfg, snr_index, args.decoder, args.trial, args.trial + 1)
    maps, probs = _map_decode(
        args.decoder, x, c, pulse, cfg.prior().kappa, r, pilots, cfg.vb_config()
    )
    correct, _ = _decode_chunk(cfg, snr_index, args.decoder, args.trial, args.trial + 1)
    print(
        f"# decoder={args.decoder} snr_db={args.snr:g} r={r:.6g} seed={cfg.seed} "
        f"trial={args.trial} pilots={sorted(pilots)}"
    )
    print(f"# data-symbol successes: {int(correct.sum())}/{correct.size}")
    print("# period truth map ok " + " ".join(f"p[{m}]" for m in range(c.order)))
    for i in range(x.shape[1]):
        flag = "pilot" if i in pilots else ("ok" if maps[0, i] == truth[0, i] else "err")
        row = " ".join(f"{p:.6f}" for p in probs[0, i])
        print(f"{i} {truth[0, i]} {int(maps[0, i])} {flag} {row}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasevb",
        description="Bayesian symbol/phase decoding simulator for phase-uncertain receivers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo SNR sweep")
    p_sweep.add_argument("--config", required=True, help="key = value sweep config file")
    p_sweep.add_argument("--out-csv", required=True, help="CSV output path")
    p_sweep.add_argument("--out-svg", default=None, help="optional SVG figure path")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel worker count")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_decode = sub.add_parser("decode", help="decode stored IQ observations")
    p_decode.add_argument("--config", required=True)
    p_decode.add_argument("--input", required=True, help="text IQ file, re,im;re,im;... per line")
    p_decode.add_argument("--decoder", choices=DECODERS, default=None,
                          help="decoder to run (default: first in config)")
    p_decode.add_argument("--snr", type=float, default=None,
                          help="operating SNR in dB (default: first sweep point)")
    p_decode.set_defaults(func=_cmd_decode)

    p_trial = sub.add_parser("trial", help="single-trial debug dump")
    p_trial.add_argument("--config", required=True)
    p_trial.add_argument("--snr", type=float, required=True)
    p_trial.add_argument("--decoder", choices=DECODERS, required=True)
    p_trial.add_argument("--seed", type=int, default=None, help="override config seed")
    p_trial.add_argument("--trial", type=int, default=0, help="trial index (default 0)")
    p_trial.set_defaults(func=_cmd_trial)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
