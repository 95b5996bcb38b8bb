"""Command-line interface: generate, fit, predict, evaluate, tune.

Every option may also come from a JSON file passed with ``--config``; keys
are the option names with dashes replaced by underscores.  Flags given on
the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import formats
from .baselines import GenerativeParams
from .crp import ConcentrationParams
from .errors import BotclustError
from .evaluation import (
    METHODS,
    MethodConfig,
    evaluate_predictions,
    fit_clusterings,
    split_train_test,
    tune_alphas,
)
from .gibbs import ChainConfig
from .predictor import posterior_predict_many
from .synthetic import WorldConfig, generate_trace

log = logging.getLogger("botclust")

DEFAULTS = {
    "seed": 0,
    # world
    "botnets": 5,
    "addresses_per_botnet": 20,
    "campaigns_per_botnet": 3,
    "campaign_sharing": 0.0,
    "churn": 0.0,
    "messages_per_hour": 20.0,
    "duration_hours": 24.0,
    "observation_fraction": 1.0,
    "campaign_skew": 2.0,
    # split
    "train_hours": 16.0,
    "test_hours": 8.0,
    "min_campaign_count": 5,
    # methods
    "method": "mgc",
    "alpha_address": 1.0,
    "alpha_campaign": 1.0,
    "burn_in": 50,
    "thinning": 5,
    "samples": 50,
    "threshold": 0.5,
    "generative_iterations": 20,
    "smoothing": 0.0,
    "grid": "0.1:0.1,0.1:1,1:0.1,1:1",
}


def _add(p, *names, **kw):
    for name in names:
        dest = name.lstrip("-").replace("-", "_")
        p.add_argument(name, dest=dest, default=None, **kw)


def _split_options(p):
    _add(p, "--train-hours", "--test-hours", type=float)
    _add(p, "--min-campaign-count", type=int)


def _chain_options(p):
    _add(p, "--alpha-address", "--alpha-campaign", type=float)
    _add(p, "--burn-in", "--thinning", "--samples", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="botclust", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", type=Path, help="JSON file with option values")
        _add(p, "--seed", type=int)
        return p

    p = command("generate", "write a synthetic message trace and its truth sidecar")
    p.add_argument("--out-dir", type=Path, required=True)
    _add(p, "--botnets", "--addresses-per-botnet", "--campaigns-per-botnet", type=int)
    _add(p, "--campaign-sharing", "--churn", "--messages-per-hour", "--duration-hours",
         "--observation-fraction", "--campaign-skew", type=float)

    p = command("fit", "cluster the training window and write chain samples")
    p.add_argument("--messages", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add(p, "--method", choices=METHODS)
    _add(p, "--threshold", type=float)
    _add(p, "--generative-iterations", type=int)
    _chain_options(p)
    _split_options(p)

    p = command("predict", "campaign distributions for the test-window addresses")
    p.add_argument("--messages", type=Path, required=True)
    p.add_argument("--samples-file", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add(p, "--smoothing", type=float)
    _split_options(p)

    p = command("evaluate", "ROC curve and AUC of a prediction file on the test window")
    p.add_argument("--messages", type=Path, required=True)
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--roc-out", type=Path)
    _split_options(p)

    p = command("tune", "pick the concentration pair with the best AUC")
    p.add_argument("--messages", type=Path, required=True)
    _add(p, "--grid", help="comma-separated alpha_address:alpha_campaign pairs")
    _add(p, "--smoothing", type=float)
    _chain_options(p)
    _split_options(p)
    return parser


def _resolve(args) -> dict:
    config = {}
    if getattr(args, "config", None) is not None:
        config = json.loads(args.config.read_text(encoding="utf-8"))
        if not isinstance(config, dict):
            raise BotclustError(f"{args.config}: config must be a JSON object")
        unknown = set(config) - set(DEFAULTS)
        if unknown:
            raise BotclustError(f"{args.config}: unknown keys {sorted(unknown)}")
    opts = {}
    for key, default in DEFAULTS.items():
        value = getattr(args, key, None)
        if value is None:
            value = config.get(key, default)
        opts[key] = value
    return opts


def _split(messages_path, o):
    messages = formats.read_messages(messages_path)
    return split_train_test(messages, o["train_hours"], o["test_hours"], o["min_campaign_count"])


def _chain(o) -> ChainConfig:
    return ChainConfig(o["burn_in"], o["thinning"], o["samples"], o["seed"])


def _parse_grid(text: str) -> list[tuple[float, float]]:
    try:
        return [tuple(float(x) for x in item.split(":")) for item in text.split(",") if item.strip()]
    except ValueError:
        raise BotclustError(f"bad grid {text!r}; expected a:s,a:s,...") from None


def cmd_generate(args, o):
    cfg = WorldConfig(
        o["botnets"], o["addresses_per_botnet"], o["campaigns_per_botnet"], o["campaign_sharing"], o["churn"],
        o["messages_per_hour"], o["duration_hours"], o["observation_fraction"], o["campaign_skew"], o["seed"],
    )
    trace = generate_trace(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    formats.write_messages(args.out_dir / "messages.jsonl", trace.messages)
    formats.write_truth(args.out_dir / "truth.jsonl", trace.truth_botnet)
    log.info("wrote %d messages to %s", len(trace.messages), args.out_dir)


def cmd_fit(args, o):
    train, _ = _split(args.messages, o)
    config = MethodConfig(
        o["method"],
        ConcentrationParams(o["alpha_address"], o["alpha_campaign"]),
        _chain(o),
        threshold=o["threshold"],
        generative=GenerativeParams(),
        generative_iterations=o["generative_iterations"],
    )
    samples = fit_clusterings(train, config)
    formats.write_samples(args.out, samples)
    log.info("fit %s on %d training messages: %d samples", o["method"], len(train), len(samples))


def cmd_predict(args, o):
    train, test = _split(args.messages, o)
    samples = formats.read_samples(args.samples_file)
    addresses = sorted({m.address_id for m in test})
    predictions = posterior_predict_many(samples, train, addresses, o["smoothing"])
    formats.write_predictions(args.out, predictions)


def cmd_evaluate(args, o):
    train, test = _split(args.messages, o)
    roc = evaluate_predictions(formats.read_predictions(args.predictions), train, test)
    if args.roc_out is not None:
        formats.write_roc(args.roc_out, roc.points)
    print(repr(roc.auc))


def cmd_tune(args, o):
    train, test = _split(args.messages, o)
    grid = _parse_grid(o["grid"])
    a, s = tune_alphas(train, test, grid, _chain(o), o["smoothing"])
    print(f"alpha_address={a!r} alpha_campaign={s!r}")


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "tune": cmd_tune,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args, _resolve(args))
    except (BotclustError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"botclust {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
