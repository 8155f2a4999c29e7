"""Size and fit prediction: prepare data, train, evaluate and predict.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 training
divergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from .errors import CheckpointError, ContractError, EncodingError, IngestionError
from .experiment import ARCHS, ExperimentConfig, cmd_evaluate, cmd_predict, cmd_prepare, cmd_train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed_list(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment config; flags override its values")
    p.add_argument("--dataset", help="JSON-lines dataset file")
    p.add_argument("--dialect", choices=["modcloth", "renttherunway"])
    p.add_argument("--split", choices=["random", "chrono"])
    p.add_argument("--seed-list", type=_seed_list, help="e.g. 0,1,2 or 0..9")
    p.add_argument("--arch", choices=ARCHS)
    p.add_argument("--exclude-feature", action="append", default=None, metavar="NAME",
                   help="feature to leave out, e.g. user_id (repeatable)")
    p.add_argument("--epochs", type=int, help="maximum epochs")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel trial processes")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="serial, single-threaded execution")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sfnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="parse, split, build schemas and caches")
    _experiment_flags(p)
    p = sub.add_parser("train", help="train one model per trial seed")
    _experiment_flags(p)
    p = sub.add_parser("evaluate", help="score test splits and aggregate trials")
    _experiment_flags(p)
    p.add_argument("--checkpoint", action="append", help="explicit model file per seed (repeatable)")
    p.add_argument("--availability-file", help="JSON {article_id: [labels]} to truncate predictions")
    p = sub.add_parser("predict", help="class probabilities for query records")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--query", required=True, help="JSON-lines query file")
    p.add_argument("--availability-file")
    p.add_argument("--output", help="write JSON lines here instead of stdout")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.dataset is not None:
        cfg.dataset = args.dataset
    if args.dialect is not None:
        cfg.dialect = args.dialect
    if args.split is not None:
        cfg.split = {**cfg.split, "mode": args.split}
    if args.seed_list is not None:
        cfg.seeds = args.seed_list
    if args.arch is not None:
        cfg.arch = args.arch
    if args.exclude_feature is not None:
        cfg.exclude_features = list(args.exclude_feature)
    if args.epochs is not None:
        cfg.train = {**cfg.train, "max_epochs": args.epochs,
                     "min_epochs": min(args.epochs, cfg.train.get("min_epochs", 15))}
    if args.batch_size is not None:
        cfg.train = {**cfg.train, "batch_size": args.batch_size}
    if args.out is not None:
        cfg.out = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    if args.deterministic:
        cfg.deterministic = True
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    try:
        if args.command == "predict":
            results = cmd_predict(args.checkpoint, args.query, args.availability_file, args.output)
            if args.output is None:
                for r in results:
                    print(json.dumps(r, sort_keys=True))
            return EXIT_DATA if any("error" in r for r in results) else EXIT_OK
        cfg = resolve_config(args)
        if args.command == "prepare":
            stats = cmd_prepare(cfg)
            print(json.dumps(stats, sort_keys=True, indent=2))
        elif args.command == "train":
            results = cmd_train(cfg)
            for r in results:
                print(json.dumps(r, sort_keys=True))
            if any(r["status"] != "ok" for r in results):
                return EXIT_DIVERGED
        elif args.command == "evaluate":
            summary = cmd_evaluate(cfg, args.checkpoint, args.availability_file)
            if "formatted" in summary:
                print(summary["formatted"])
            else:
                r = summary["reports"][0]
                print(f"AUC {r['micro_auc']:.3f}  Accuracy {r['accuracy']:.3f}  "
                      f"Avg LL {r['avg_log_likelihood']:.3f}")
    except ContractError as exc:
        print(f"sfnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestionError, EncodingError, CheckpointError, OSError) as exc:
        print(f"sfnet: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
