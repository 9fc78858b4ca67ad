"""``bcmsr simulate``: coloring-based key extraction from fed-back channel outputs."""

import argparse
import logging
from typing import Any, Dict

from bcmsr.core.config import DEFAULT_SEED, DEFAULT_TRIALS
from bcmsr.core.errors import InvalidArgumentError
from bcmsr.core.utils import dump_json, load_json, to_csv, write_artifact
from bcmsr.models.schemas import KeySimConfig
from bcmsr.services.keysim import key_rate_frontier, run_key_extraction, run_otp_roundtrip

logger = logging.getLogger(__name__)

CHANNEL_PRESETS = {
    "independent": [[0.25, 0.25], [0.25, 0.25]],
    "identical": [[0.5, 0.0], [0.0, 0.5]],
}


def _channel(text: str):
    if text in CHANNEL_PRESETS:
        return CHANNEL_PRESETS[text]
    value = load_json(text)
    if not isinstance(value, list):
        raise InvalidArgumentError("--channel must be a preset name or a JSON matrix P(y1, y2)")
    return value


def _rates(text: str):
    rates = [float(v) for v in text.split(",") if v.strip()]
    if not rates:
        raise InvalidArgumentError("--frontier needs at least one rate")
    return rates


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("simulate", help="simulate key extraction and the one-time pad")
    parser.add_argument("--blocklength", type=int, default=None)
    parser.add_argument("--rate", type=float, default=None, help="key rate R in bits per symbol")
    parser.add_argument(
        "--channel",
        default=None,
        help=f"per-symbol P(y1, y2) as a JSON matrix, or one of {sorted(CHANNEL_PRESETS)} (default independent)",
    )
    parser.add_argument("--trials", type=int, default=None, help=f"Monte Carlo blocks (default {DEFAULT_TRIALS})")
    parser.add_argument("--seed", type=int, default=None, help=f"default {DEFAULT_SEED}")
    parser.add_argument("--mode", choices=["exhaustive", "monte_carlo"], default=None)
    parser.add_argument("--coloring", choices=["random", "balanced", "universal"], default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--otp-bits", type=int, default=None, help="also run a one-time pad with this many key bits")
    parser.add_argument("--frontier", default=None, help="comma separated key rates; exact entropy along them")
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    parser.add_argument("--out", default=None)
    parser.set_defaults(handler=run)
    return parser


def build_config(args: argparse.Namespace) -> KeySimConfig:
    values: Dict[str, Any] = {
        "blocklength": args.blocklength,
        "key_rate": args.rate,
        "channel": _channel(args.channel or "independent"),
        "trials": args.trials,
        "seed": args.seed,
        "mode": args.mode,
        "coloring": args.coloring,
        "workers": args.workers,
    }
    return KeySimConfig(**{key: value for key, value in values.items() if value is not None})


def run(args: argparse.Namespace) -> int:
    if args.frontier is not None:
        if args.blocklength is None:
            raise InvalidArgumentError("--frontier needs --blocklength")
        rows = key_rate_frontier(
            _channel(args.channel or "independent"),
            args.blocklength,
            _rates(args.frontier),
            seed=DEFAULT_SEED if args.seed is None else args.seed,
            coloring=args.coloring or "random",
        )
        if args.format == "csv":
            columns = ("rate", "gamma", "conditional_key_entropy", "normalized_entropy")
            content = to_csv(columns, ([getattr(row, name) for name in columns] for row in rows))
        else:
            content = dump_json({"blocklength": args.blocklength, "frontier": rows})
        write_artifact(content, args.out)
        return 0

    config = build_config(args)
    report = run_key_extraction(config)
    payload: Dict[str, Any] = {"config": config, "report": report}
    if args.otp_bits is not None:
        payload["otp"] = run_otp_roundtrip(config, args.otp_bits)

    if args.format == "csv":
        fields = list(report.model_dump())
        content = to_csv(fields, [[getattr(report, name) for name in fields]])
    else:
        content = dump_json(payload)
    write_artifact(content, args.out)
    if args.out:
        print(report.summary())
    else:
        logger.info(report.summary())
    return 0
