"""Command-line entry points.

Exit codes: 0 on success, 2 on validation errors (bad inputs, bad files),
3 when a numerical self-check ran but failed its threshold.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .embedder import TrainConfig, init_model, save_model, train_skipgram
from .errors import MarkovecError
from .harness import (
    ExperimentConfig,
    preset_configs,
    run_block_recovery,
    run_identifiability,
    run_losslimit_check,
    run_roundtrip_check,
    write_trace_csv,
)
from .kernel import (
    BlockSpec,
    block_kernel,
    load_matrix,
    random_kernel,
    reference_from_kernel,
    save_matrix,
    stationary,
)
from .polarity import (
    EmbedSettings,
    load_lexicon,
    load_slice,
    polarity_report,
    write_polarity_csv,
)
from .textgen import MarkovModel, load_corpus, sample_corpus, save_corpus

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CHECK_FAILED = 3


def _cmd_gen_kernel(args) -> int:
    if args.blocks is not None:
        spec = BlockSpec(args.blocks, args.block_size)
        kernel = block_kernel(args.V, spec, args.seed)
    else:
        kernel = random_kernel(args.V, args.seed)
    save_matrix(kernel, args.out)
    print(f"wrote {args.V}x{args.V} kernel to {args.out}")
    return EXIT_OK


def _cmd_gen_corpus(args) -> int:
    kernel = load_matrix(args.kernel)
    initial = stationary(kernel) if args.initial == "stationary" else None
    model = MarkovModel(kernel, initial)
    corpus = sample_corpus(model, args.T, args.seed)
    save_corpus(corpus, args.out, vocab_size=kernel.dim, seed=args.seed)
    print(f"wrote {args.T} tokens to {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    corpus, vocab_size = load_corpus(args.corpus)
    if vocab_size is None:
        vocab_size = int(corpus.tokens.max()) + 1
    eval_rm = None
    if args.eval_rm:
        eval_rm = reference_from_kernel(load_matrix(args.eval_rm), args.C)
    model = init_model(vocab_size, args.N, args.C, args.seed)
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        log_every=args.log_every,
    )
    trained, trace = train_skipgram(model, corpus, config, eval_rm=eval_rm)
    save_model(trained, args.model_out)
    if args.trace_out:
        write_trace_csv(args.trace_out, trace, args.N, args.seed)
    last = trace.final()
    print(f"trained {args.epochs} epochs; final mean loss {last.mean_loss:.6f}")
    if last.cosine_distance is not None:
        print(f"final cosine distance {last.cosine_distance:.6f}")
    return EXIT_OK


def _configs_for(args):
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if args.out:
            data["out_dir"] = args.out
        return [("config", ExperimentConfig.from_dict(data))]
    return preset_configs(args.preset, args.out, full=args.full)


def _cmd_identifiability(args) -> int:
    for tag, config in _configs_for(args):
        paths = run_identifiability(config, workers=args.workers)
        print(f"[{tag}] wrote {len(paths)} trace files under {config.out_dir}")
    return EXIT_OK


def _cmd_block_recovery(args) -> int:
    for tag, config in _configs_for(args):
        path = run_block_recovery(config)
        print(f"[{tag}] wrote {path}")
    return EXIT_OK


def _cmd_roundtrip_check(args) -> int:
    report = run_roundtrip_check(args.V, args.C, args.seed)
    status = "PASS" if report.passed else "FAIL"
    print(
        f"{status} roundtrip V={report.vocab_size} C={report.width} "
        f"max_error={report.max_error:.3e} (tolerance {report.tolerance:.0e})"
    )
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_losslimit_check(args) -> int:
    report = run_losslimit_check(args.V, args.T, args.seed)
    for row in report.rows:
        print(
            f"model {row.model_index} T={row.corpus_length}: "
            f"mean loss {row.mean_loss:.6f} vs expected {row.expected:.6f} "
            f"(relative gap {row.relative_gap:.4%})"
        )
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_polarity_report(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    slices = [load_slice(directory) for directory in args.slices]
    settings = EmbedSettings(
        dim=args.N,
        width=args.C,
        min_count=args.min_count,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
    )
    rows = polarity_report(
        slices,
        lexicon,
        categories=args.categories.split(","),
        n_random=args.n_random,
        settings=settings,
        exclude_slices=args.exclude_slices.split(",") if args.exclude_slices else (),
    )
    write_polarity_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovec",
        description="Markov-corpus word2vec identifiability lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-kernel", help="write a random or block kernel")
    p.add_argument("--V", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blocks", type=int, default=None)
    p.add_argument("--block-size", type=int, default=None)
    p.set_defaults(func=_cmd_gen_kernel)

    p = sub.add_parser("gen-corpus", help="sample a token stream from a kernel")
    p.add_argument("--kernel", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--initial", choices=["uniform", "stationary"], default="uniform")
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("train", help="train a skip-gram model on a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--C", type=int, default=1)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-rm", default=None,
                   help="kernel file; its width-C context matrix becomes the eval target")
    p.add_argument("--trace-out", default=None)
    p.add_argument("--model-out", required=True)
    p.add_argument("--log-every", type=int, default=10_000)
    p.set_defaults(func=_cmd_train)

    for name, handler in [
        ("identifiability", _cmd_identifiability),
        ("block-recovery", _cmd_block_recovery),
    ]:
        p = sub.add_parser(name, help=f"run the {name} grid")
        p.add_argument("--preset", choices=["fig1", "fig2", "fig3", "fig4"],
                       default="fig1" if name == "identifiability" else "fig4")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", required=True)
        p.add_argument("--full", action="store_true")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=handler)

    p = sub.add_parser("roundtrip-check", help="kernel -> reference -> kernel")
    p.add_argument("--V", type=int, default=10)
    p.add_argument("--C", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_roundtrip_check)

    p = sub.add_parser("losslimit-check", help="corpus loss vs cross-entropy limit")
    p.add_argument("--V", type=int, default=10)
    p.add_argument("--T", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_losslimit_check)

    p = sub.add_parser("polarity-report", help="per-slice lexicon similarity table")
    p.add_argument("--slices", nargs="+", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--categories", required=True, help="comma-separated names")
    p.add_argument("--n-random", type=int, default=None)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--C", type=int, default=2)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--exclude-slices", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_polarity_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MarkovecError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
