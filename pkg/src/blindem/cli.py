"""Command line interface: `simulate` Monte Carlo campaigns, `replay` runs.

A JSON config file can supply any flag (same keys, dashes replaced by
underscores); flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .harness import (
    SimConfig,
    dump_constellation,
    monte_carlo,
    parse_result_row,
    replay_run,
    write_results_csv,
    write_summary_json,
)
from .ofdm import FrameConfig
from .receiver import ReceiverMode


def _parse_taps(text) -> tuple[complex, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(complex(t) for t in text)
    try:
        return tuple(complex(part.strip()) for part in str(text).split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad tap literal in {text!r}: {exc}") from exc


def _parse_snrs(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(s) for s in text)
    try:
        return tuple(float(part.strip()) for part in str(text).split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}: {exc}") from exc


def _add_frame_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--taps", type=_parse_taps, default=(0.5, 0.7, 0.5),
                        help="channel taps as comma-separated complex literals")
    parser.add_argument("--m", type=int, default=256, help="number of subcarriers")
    parser.add_argument("--n", type=int, default=10, help="OFDM symbols per frame")
    parser.add_argument("--ncp", type=int, default=8, help="cyclic prefix length")
    parser.add_argument("--init-iters", type=int, default=20,
                        help="EM iterations in the initialization stage")
    parser.add_argument("--em-per-turbo", type=int, default=5,
                        help="EM iterations between decoder feedbacks")
    parser.add_argument("--turbo-iters", type=int, default=6,
                        help="number of decoder feedback rounds")


def _frame_from_args(args) -> FrameConfig:
    return FrameConfig(
        num_subcarriers=args.m,
        num_symbols=args.n,
        cp_len=args.ncp,
        channel_len=len(args.taps),
        init_iters=args.init_iters,
        em_per_turbo=args.em_per_turbo,
        turbo_iters=args.turbo_iters,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindem",
        description="Blind EM channel estimation for PSK OFDM, with "
        "decoder-aided phase ambiguity detection.",
    )
    parser.add_argument("--config", help="JSON file of flag defaults", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    sim.add_argument("--mode", choices=[m.value for m in ReceiverMode],
                     default=ReceiverMode.PHASE_AWARE.value)
    sim.add_argument("--snr", type=_parse_snrs, default=(12.0,),
                     help="comma-separated SNR points in dB")
    sim.add_argument("--runs", type=int, default=200)
    sim.add_argument("--seed", type=int, default=42)
    _add_frame_flags(sim)
    sim.add_argument("--workers", type=int, default=1,
                     help="parallel worker processes (results are identical)")
    sim.add_argument("--out", default="results.csv", help="per-iteration results CSV")
    sim.add_argument("--summary", default="summary.json", help="aggregate metrics JSON")
    sim.add_argument("--figures", default=None, metavar="DIR",
                     help="also render MSE and failure-rate figures into DIR")

    rep = sub.add_parser("replay", help="regenerate one run from a results row")
    rep.add_argument("--seed-record", required=True,
                     help="a data row copied from the results CSV")
    rep.add_argument("--dump-constellation", default=None, metavar="CSV",
                     help="write received and equalized points to CSV")
    _add_frame_flags(rep)
    rep.add_argument("--figures", default=None, metavar="DIR",
                     help="also render a constellation figure into DIR")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pre-scan for --config and install its values as parser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    try:
        with open(known.config) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file {known.config}: {exc}")
    if not isinstance(values, dict):
        parser.error(f"config file {known.config} must hold a JSON object")
    converters = {"taps": _parse_taps, "snr": _parse_snrs}
    defaults = {}
    for key, value in values.items():
        name = key.replace("-", "_")
        if name in converters:
            value = converters[name](value)
        defaults[name] = value
    for action in parser._subparsers._group_actions[0].choices.values():
        action.set_defaults(**{k: v for k, v in defaults.items()})
    return argv


def _cmd_simulate(args) -> int:
    cfg = SimConfig(
        frame=_frame_from_args(args),
        taps=args.taps,
        snr_db=args.snr,
        runs=args.runs,
        mode=ReceiverMode(args.mode),
        seed=args.seed,
        workers=args.workers,
    )
    table, records = monte_carlo(cfg)
    write_results_csv(records, args.out)
    write_summary_json(table, cfg, args.summary)
    for snr_db in cfg.snr_db:
        fr = table.final_failure_rate(snr_db)
        print(f"snr={snr_db:g} dB  mode={cfg.mode.value}  final failure rate={100*fr:.1f}%")
    print(f"wrote {args.out} and {args.summary}")
    if args.figures:
        from . import report

        os.makedirs(args.figures, exist_ok=True)
        mse_png = os.path.join(args.figures, f"mse_{cfg.mode.value}.png")
        fr_png = os.path.join(args.figures, f"failure_rate_{cfg.mode.value}.png")
        report.render_mse_figure(table, mse_png)
        report.render_failure_rate_figure(table, fr_png)
        print(f"wrote {mse_png} and {fr_png}")
    errors = sum(table.errors.values())
    if errors:
        print(f"{errors} runs aborted with errors", file=sys.stderr)
        return 1
    return 0


def _cmd_replay(args) -> int:
    row = parse_result_row(args.seed_record)
    cfg = SimConfig(
        frame=_frame_from_args(args),
        taps=args.taps,
        snr_db=(row["snr_db"],),
        runs=1,
        mode=row["mode"],
        seed=0,
    )
    result = replay_run(cfg, row["snr_db"], row["child_seed"], row["mode"])
    rec = result.record
    detected = "" if rec.detected_shift is None else f"  detected shift={rec.detected_shift}"
    print(
        f"replayed seed={rec.child_seed} snr={rec.snr_db:g} dB mode={rec.mode}: "
        f"final mse={rec.mse[-1]:.3e} failed={rec.failed}{detected}"
    )
    if args.dump_constellation:
        rows = dump_constellation(result, args.dump_constellation)
        print(f"wrote {rows} points to {args.dump_constellation}")
    if args.figures:
        from . import report

        os.makedirs(args.figures, exist_ok=True)
        png = os.path.join(args.figures, "constellation.png")
        report.render_constellation_figure(result, png)
        print(f"wrote {png}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    return _cmd_replay(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
