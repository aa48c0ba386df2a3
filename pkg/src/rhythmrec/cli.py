"""``rhythmrec`` command line: stats, synth, train, evaluate, selfcheck.

Machine-readable results go to stdout, progress and errors to stderr.
Exit codes: 0 success, 1 failed self-check, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset, evaluator, selfcheck, synth, trainer
from .config import ConfigError, RunConfig, load_config
from .model import SeqRecModel
from .numerics import checkpoint


class UsageError(Exception):
    pass


def _load_corpus(path: Path | None, header: bool) -> dataset.Corpus:
    if path is None:
        raise UsageError("no corpus_path configured")
    if not Path(path).is_file():
        raise UsageError(f"corpus file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return dataset.build_corpus(dataset.parse_interactions(fh, header=header))
        except dataset.ParseError as exc:
            raise UsageError(f"{path}: {exc}") from None


def _config(args) -> RunConfig:
    if not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    cfg = load_config(args.config)
    if getattr(args, "freeze_zero_rhythm", False):
        cfg.freeze_zero_rhythm = True
    return cfg


def cmd_stats(args) -> int:
    corpus = _load_corpus(Path(args.input), args.header)
    print(json.dumps(dataset.dataset_stats(corpus).to_dict(), indent=2))
    return 0


def cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        num_users=args.users, num_items=args.items, min_len=args.min_len, max_len=args.max_len,
        gap_threshold_days=args.threshold, p_long=args.p_long, noise_prob=args.noise, seed=args.seed,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.writelines(synth.generate_lines(cfg))
    else:
        sys.stdout.writelines(synth.generate_lines(cfg))
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus(cfg.corpus_path, cfg.header)
    split = dataset.leave_one_out_split(corpus, cfg.min_len)
    run_dir = cfg.run_dir or Path("run")
    run_dir.mkdir(parents=True, exist_ok=True)
    model_cfg = cfg.model_config(corpus.vocab_size)
    (run_dir / "model_config.json").write_text(json.dumps(model_cfg.to_dict(), indent=2) + "\n")
    _, report = trainer.train(split, model_cfg, cfg.train_config(), run_dir=run_dir, progress=sys.stderr)
    print(report.to_json())
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    corpus = _load_corpus(cfg.corpus_path, cfg.header)
    split = dataset.leave_one_out_split(corpus, cfg.min_len)
    if args.baseline == "pop":
        scorer = evaluator.pop_scorer(split, corpus.vocab_size)
        tag = "pop"
    else:
        ckpt = Path(args.checkpoint) if args.checkpoint else (cfg.run_dir or Path("run")) / "checkpoint.bin"
        if not ckpt.is_file():
            raise UsageError(f"checkpoint not found: {ckpt}")
        model_cfg = cfg.model_config(corpus.vocab_size)
        try:
            model = SeqRecModel.from_arrays(model_cfg, checkpoint.load(ckpt))
        except (ValueError, checkpoint.CheckpointError) as exc:
            raise UsageError(f"checkpoint {ckpt} does not match config: {exc}") from None
        scorer = evaluator.model_scorer(model, cfg.rhythm, cfg.rhythm_alignment)
        tag = cfg.fusion
    report = evaluator.evaluate(scorer, split, args.split, model_tag=tag, batch_size=cfg.eval_batch_size)
    print(report.to_json())
    return 0


def cmd_selfcheck(args) -> int:
    results = selfcheck.run_selfcheck()
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} max_rel_error={r.max_rel_error:.3e} tol={r.tolerance:.0e} worst={r.worst_param}")
    ok = all(r.passed for r in results)
    print("selfcheck: " + ("all passed" if ok else "FAILED"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rhythmrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset descriptors as JSON")
    p.add_argument("input")
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a synthetic interaction log")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--users", type=int, default=3000)
    p.add_argument("--items", type=int, default=200)
    p.add_argument("--min-len", type=int, default=10)
    p.add_argument("--max-len", type=int, default=30)
    p.add_argument("--threshold", type=float, default=7.0, help="gap threshold in days")
    p.add_argument("--p-long", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("config")
    p.add_argument("--freeze-zero-rhythm", action="store_true",
                   help="zero-initialise and freeze the rhythm table (debug)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="leave-one-out metrics as JSON")
    p.add_argument("config")
    p.add_argument("--checkpoint")
    p.add_argument("--split", choices=("valid", "test"), default="test")
    p.add_argument("--baseline", choices=("pop",))
    p.add_argument("--freeze-zero-rhythm", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("selfcheck", help="finite-difference gradient audit")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"rhythmrec {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
