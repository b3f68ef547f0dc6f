"""Command-line entry point wiring the pipeline together:
mine -> split -> bpe -> tokenize/analyze -> train -> eval -> decode.

Every subcommand writes a run manifest next to its outputs recording the
resolved flags, input/output paths, corpus hashes, tool version, and seed.
Exit codes: 0 success, 1 runtime failure (one-line error on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, analyses, bpe, corpus, editcodec, lexer

DEFAULT_RATIOS = (0.9, 0.05, 0.05)


def _seed_default() -> int:
    return int(os.environ.get("PATCHLENS_SEED", "0"))


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios")
    return tuple(parts)  # type: ignore[return-value]


def _parse_klist(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(","))


def _write_manifest(
    out_path: Path, subcommand: str, flags: dict, inputs: list[Path], outputs: list[Path],
    seed: int | None,
) -> None:
    hashes = {}
    for p in inputs:
        p = Path(p)
        if p.is_file():
            hashes[str(p)] = corpus.corpus_sha256(p)
    manifest = {
        "subcommand": subcommand,
        "flags": {k: str(v) for k, v in flags.items()},
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "input_sha256": hashes,
        "tool_version": __version__,
        "seed": seed,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if out_path.is_dir() or not out_path.suffix:
        manifest_path = out_path / "manifest.json"
    else:
        manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _flags(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "command")}


# ---------------------------------------------------------------------------
# mine / split / tokenize
# ---------------------------------------------------------------------------


def cmd_mine(args: argparse.Namespace) -> int:
    repos = corpus.discover_repos(args.repos)
    if not repos:
        raise corpus.CorpusError(f"no git repositories under {args.repos}")
    keywords = frozenset(k.strip() for k in args.keywords.split(",") if k.strip())
    limits = corpus.MiningLimits(max_commits=args.max_commits, max_pairs=args.max_pairs)

    def mine_one(repo: Path) -> tuple[list[corpus.BugFixPair], corpus.MiningStats]:
        stats = corpus.MiningStats()
        found = list(
            corpus.mine_repo(repo, keywords=keywords, lang_ext=args.lang_ext,
                             limits=limits, stats=stats)
        )
        return found, stats

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(mine_one, repos))
    else:
        results = [mine_one(r) for r in repos]

    pairs = [p for found, _ in results for p in found]
    undecodable = sum(s.undecodable_files for _, s in results)
    out = Path(args.out)
    count = corpus.write_corpus(pairs, out)
    _write_manifest(out, "mine", _flags(args), [Path(args.repos)],
                    [out, corpus.files_path_for(out)], seed=None)
    print(f"mined {count} pairs from {len(repos)} repositories "
          f"({undecodable} undecodable files skipped)")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.corpus)
    split = corpus.split_dataset(pairs, ratios=args.ratios, seed=args.seed)
    if args.dedup_test:
        split = corpus.dedup_test(split)
    out_dir = Path(args.out_dir)
    paths = corpus.write_split(split, out_dir)
    _write_manifest(out_dir, "split", _flags(args), [Path(args.corpus)],
                    list(paths.values()), seed=args.seed)
    sizes = {name: len(part) for name, part in split.parts().items()}
    print(f"split {len(pairs)} pairs -> " + ", ".join(f"{k}={v}" for k, v in sizes.items()))
    return 0


def cmd_tokenize(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.input)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            bug = pair.bug_tokens()
            patch = pair.patch_tokens()
            fh.write(json.dumps({
                "pair_id": pair.pair_id,
                "bug_tokens": [t.text for t in bug],
                "bug_kinds": [t.kind.value for t in bug],
                "patch_tokens": [t.text for t in patch],
                "patch_kinds": [t.kind.value for t in patch],
            }, ensure_ascii=False) + "\n")
    _write_manifest(out, "tokenize", _flags(args), [Path(args.input)], [out], seed=None)
    print(f"tokenized {len(pairs)} pairs -> {out}")
    return 0


# ---------------------------------------------------------------------------
# bpe
# ---------------------------------------------------------------------------


def cmd_bpe_train(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.corpus)

    def token_stream():
        for pair in pairs:
            for tok in pair.bug_tokens() + pair.patch_tokens():
                yield tok.text

    model = bpe.train(token_stream(), num_merges=args.merges)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bpe.save(model, out)
    _write_manifest(out, "bpe-train", _flags(args), [Path(args.corpus)], [out], seed=None)
    print(f"trained {len(model.merges)} merges -> {out}")
    return 0


def cmd_bpe_apply(args: argparse.Namespace) -> int:
    model = bpe.load(args.model)
    pairs = corpus.read_corpus(args.input)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps({
                "pair_id": pair.pair_id,
                "bug_subtokens": [
                    s for t in pair.bug_tokens() for s in bpe.encode(model, t.text)
                ],
                "patch_subtokens": [
                    s for t in pair.patch_tokens() for s in bpe.encode(model, t.text)
                ],
            }, ensure_ascii=False) + "\n")
    _write_manifest(out, "bpe-apply", _flags(args), [Path(args.input), Path(args.model)],
                    [out], seed=None)
    print(f"encoded {len(pairs)} pairs -> {out}")
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_analyze_vocab(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.corpus)
    bpe_model = bpe.load(args.bpe) if args.bpe else None
    windows = [int(w) for w in args.windows.split(",") if w]
    modes = [corpus.ContextMode.none()]
    modes += [corpus.ContextMode.lines(w) for w in windows]
    modes.append(corpus.ContextMode.whole_file())

    out_dir = Path(args.out)
    rows = []
    for mode in modes:
        report = analyses.new_vocab_ratio(pairs, mode, None)
        rows.append([report.context_mode, "no", f"{report.ratio_new_vocab:.6f}", report.sample_count])
        if bpe_model is not None:
            report = analyses.new_vocab_ratio(pairs, mode, bpe_model)
            rows.append([report.context_mode, "yes", f"{report.ratio_new_vocab:.6f}", report.sample_count])
    _write_csv(out_dir / "vocab_report.csv",
               ["context_mode", "with_bpe", "ratio_new_vocab", "sample_count"], rows)
    _write_manifest(out_dir, "analyze-vocab", _flags(args), [Path(args.corpus)],
                    [out_dir / "vocab_report.csv"], seed=None)
    print(f"vocab report -> {out_dir / 'vocab_report.csv'}")
    return 0


def cmd_analyze_similarity(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.corpus)
    report = analyses.similarity_report(pairs)
    out_dir = Path(args.out)

    stat_rows = []
    hist_rows = []
    for dist in (report.edit_distance, report.jaccard, report.bleu):
        stat_rows.append([dist.metric, f"{dist.mean:.6f}", f"{dist.median:.6f}", len(dist.values)])
        for lo, hi, count in dist.histogram:
            hist_rows.append([dist.metric, f"{lo:.6f}", f"{hi:.6f}", count])
    _write_csv(out_dir / "similarity_stats.csv", ["metric", "mean", "median", "n"], stat_rows)
    _write_csv(out_dir / "similarity_hist.csv", ["metric", "bin_lo", "bin_hi", "count"], hist_rows)
    _write_manifest(out_dir, "analyze-similarity", _flags(args), [Path(args.corpus)],
                    [out_dir / "similarity_stats.csv", out_dir / "similarity_hist.csv"], seed=None)
    print(f"similarity report -> {out_dir}")
    return 0


def cmd_analyze_ambiguity(args: argparse.Namespace) -> int:
    test_pairs = corpus.read_corpus(args.test)
    train_pairs = corpus.read_corpus(args.train)
    out_dir = Path(args.out)
    outputs = []

    record_rows = []
    for metric in ("jaccard", "bleu"):
        observations = analyses.ambiguity_observations(
            test_pairs, train_pairs, metric=metric, k=args.neighbors, jobs=args.jobs
        )
        grid = analyses.ambiguity_heatmap(observations, metric=metric, bins=args.bins)
        grid_path = out_dir / f"heatmap_{metric}.json"
        grid_path.parent.mkdir(parents=True, exist_ok=True)
        grid_path.write_text(json.dumps({
            "metric": metric,
            "bins": [list(row) for row in grid.bins],
            "normalized": [list(row) for row in grid.normalized],
            "total_observations": grid.total,
        }, indent=2) + "\n", encoding="utf-8")
        outputs.append(grid_path)
        for obs in observations:
            record_rows.append([metric, obs.query_id, obs.neighbor_id,
                                f"{obs.bug_sim:.6f}", f"{obs.patch_sim:.6f}"])
        if metric == "bleu":
            breakdown = analyses.similar_pair_breakdown(observations)
            _write_csv(out_dir / "breakdown.csv",
                       ["bug_bleu_threshold", "n_samples", "pct_patch_below_0.5",
                        "pct_patch_at_or_above_0.5"],
                       [[r.bug_threshold, r.samples, f"{r.pct_below:.2f}",
                         f"{r.pct_at_or_above:.2f}"] for r in breakdown])
            outputs.append(out_dir / "breakdown.csv")

    _write_csv(out_dir / "ambiguity_records.csv",
               ["metric", "query_id", "neighbor_id", "bug_sim", "patch_sim"], record_rows)
    outputs.append(out_dir / "ambiguity_records.csv")
    _write_manifest(out_dir, "analyze-ambiguity", _flags(args),
                    [Path(args.test), Path(args.train)], outputs, seed=None)
    print(f"ambiguity report -> {out_dir}")
    return 0


def cmd_analyze_syntax(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.corpus)
    report = analyses.syntax_invariance_report(pairs)
    ratios = report.ratios()
    out_dir = Path(args.out)
    _write_csv(out_dir / "syntax_invariance.csv",
               ["stratum", "pairs", "syntax_unchanged", "ratio"],
               [["all", report.all_pairs, report.all_unchanged, f"{ratios['all']:.6f}"],
                ["with_new_tokens", report.with_new_tokens, report.with_new_unchanged,
                 f"{ratios['with_new_tokens']:.6f}"],
                ["without_new_tokens", report.without_new_tokens, report.without_new_unchanged,
                 f"{ratios['without_new_tokens']:.6f}"]])
    _write_manifest(out_dir, "analyze-syntax", _flags(args), [Path(args.corpus)],
                    [out_dir / "syntax_invariance.csv"], seed=None)
    print(f"syntax report -> {out_dir / 'syntax_invariance.csv'}")
    return 0


def cmd_analyze_edits(args: argparse.Namespace) -> int:
    pairs = corpus.read_corpus(args.corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scripts_path = out_dir / "edit_scripts.jsonl"
    class_counts: dict[str, int] = {}
    with scripts_path.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            bug = [t.text for t in pair.bug_tokens()]
            patch = [t.text for t in pair.patch_tokens()]
            script = editcodec.diff(bug, patch)
            cls = script.edit_class.value
            class_counts[cls] = class_counts.get(cls, 0) + 1
            fh.write(json.dumps({
                "pair_id": pair.pair_id,
                "insert_ptr": script.insert_ptr,
                "delete_ptr": script.delete_ptr,
                "inserted": list(script.inserted),
                "class": cls,
            }, ensure_ascii=False) + "\n")
    _write_csv(out_dir / "edit_classes.csv", ["class", "count"],
               [[cls, class_counts[cls]] for cls in sorted(class_counts)])
    _write_manifest(out_dir, "analyze-edits", _flags(args), [Path(args.corpus)],
                    [scripts_path, out_dir / "edit_classes.csv"], seed=None)
    print(f"edit scripts -> {scripts_path}")
    return 0


# ---------------------------------------------------------------------------
# train / eval / decode (model imports deferred: torch is heavy)
# ---------------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    from . import model as model_mod

    train_pairs = corpus.read_corpus(args.train)
    valid_pairs = corpus.read_corpus(args.valid)
    bpe_model = bpe.load(args.bpe)

    config_fields: dict = {}
    if args.config:
        config_fields.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    config_fields["variant"] = args.variant
    config_fields.setdefault("seed", args.seed)
    if args.seed_set:
        config_fields["seed"] = args.seed
    config = model_mod.ModelConfig(**config_fields)

    context_mode = corpus.ContextMode.whole_file() if config.uses_context else None
    vocab = model_mod.build_vocab(bpe_model, train_pairs, context_mode)
    encoder = model_mod.ExampleEncoder(config, vocab, bpe_model)
    train_examples = encoder.encode_all(train_pairs)
    valid_examples = encoder.encode_all(valid_pairs)

    model = model_mod.build_model(config, len(vocab))
    settings = model_mod.TrainSettings(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        warmup_steps=args.warmup_steps,
        seed=config.seed,
        target_full_seq_acc=args.target_full_seq_acc,
    )
    out_dir = Path(args.out)
    result = model_mod.train(model, vocab, bpe_model, train_examples, valid_examples,
                             settings, ckpt_dir=out_dir)
    result.curve.to_csv(out_dir / "curve.csv")
    correlations = model_mod.correlate_curve(result.curve) if len(result.curve.records) > 1 else {}
    (out_dir / "correlations.json").write_text(
        json.dumps(correlations, indent=2) + "\n", encoding="utf-8")
    _write_manifest(out_dir, "train", _flags(args),
                    [Path(args.train), Path(args.valid), Path(args.bpe)],
                    [out_dir / "best.npz", out_dir / "last.npz", out_dir / "curve.csv"],
                    seed=config.seed)
    print(f"trained {config.variant}: best full-sequence acc "
          f"{result.best_full_seq_acc:.4f} at epoch {result.best_epoch} -> {out_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from . import model as model_mod

    test_pairs = corpus.read_corpus(args.test)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    k_list = args.k
    for ckpt in args.ckpt:
        model, vocab, bpe_model, _meta = model_mod.load_checkpoint(ckpt)
        encoder = model_mod.ExampleEncoder(model.config, vocab, bpe_model)
        examples = encoder.encode_all(test_pairs, for_training=False)
        report = model_mod.evaluate(model, vocab, bpe_model, examples, k_list=k_list,
                                    pointer_beam=args.pointer_beam)
        row = [report.variant, report.n_pairs, f"{report.token_acc:.6f}",
               f"{report.full_seq_acc:.6f}"]
        for k in sorted(report.topk_acc):
            row.append(f"{report.topk_acc[k]:.6f}")
        for k in sorted(report.new_vocab_rate):
            row.append(f"{report.new_vocab_rate[k]:.6f}")
        rows.append(row)

    header = ["variant", "n_pairs", "token_acc", "full_seq_acc"]
    header += [f"top{k}_acc" for k in sorted(k_list)]
    header += [f"new_vocab_rate_top{k}" for k in sorted(k_list)]
    _write_csv(out, header, rows)
    _write_manifest(out, "eval", _flags(args),
                    [Path(args.test)] + [Path(c) for c in args.ckpt], [out], seed=None)
    print(f"evaluation -> {out}")
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    from . import model as model_mod

    model, vocab, bpe_model, _meta = model_mod.load_checkpoint(args.ckpt)
    file_before = args.line
    line_number = 1
    if args.file:
        file_before = Path(args.file).read_text(encoding="utf-8")
        if args.line_number is None:
            raise corpus.CorpusError("--line-number is required with --file")
        line_number = args.line_number
        lines = file_before.splitlines()
        if not 1 <= line_number <= len(lines):
            raise corpus.CorpusError(f"line {line_number} out of range")
        bug_line = lines[line_number - 1]
    else:
        bug_line = args.line

    pair = corpus.BugFixPair(
        repo_id="adhoc", org_id="adhoc", commit_hash="0" * 8, file_path=args.file or "<stdin>",
        line_number=line_number, bug_line=bug_line, patch_line="",
        file_before=file_before, commit_message="",
    )
    encoder = model_mod.ExampleEncoder(model.config, vocab, bpe_model)
    example = encoder.encode(pair, for_training=False)
    hyps = model_mod.beam_search(
        model, vocab, example, bpe_model.end_marker, k=args.beam,
        pointer_beam=args.pointer_beam if model.config.uses_edit else 1,
    )
    for rank, hyp in enumerate(hyps[: args.beam], start=1):
        print(json.dumps({
            "rank": rank,
            "patch": " ".join(hyp.patch_texts),
            "log_prob": hyp.log_prob,
            "insert_ptr": hyp.insert_ptr,
            "delete_ptr": hyp.delete_ptr,
        }, ensure_ascii=False))
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchlens",
        description="Mine single-line bug fixes and study repair models over them.",
    )
    parser.add_argument("--version", action="version", version=f"patchlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine single-line fixes from git clones")
    p.add_argument("--repos", required=True, help="directory containing git clones")
    p.add_argument("--out", required=True, help="output corpus JSONL path")
    p.add_argument("--keywords", default=",".join(sorted(corpus.DEFAULT_KEYWORDS)))
    p.add_argument("--lang-ext", default=".java")
    p.add_argument("--max-commits", type=int, default=None)
    p.add_argument("--max-pairs", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("split", help="org-disjoint train/valid/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratios", type=_parse_ratios, default=DEFAULT_RATIOS)
    p.add_argument("--seed", type=int, default=_seed_default())
    p.add_argument("--no-dedup-test", dest="dedup_test", action="store_false",
                   help="keep duplicated test pairs")
    p.set_defaults(func=cmd_split, dedup_test=True)

    p = sub.add_parser("tokenize", help="emit per-pair token and kind arrays")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("bpe", help="byte-pair encoding")
    bpe_sub = p.add_subparsers(dest="bpe_command", required=True)
    pt = bpe_sub.add_parser("train", help="learn merges from a corpus")
    pt.add_argument("--corpus", required=True)
    pt.add_argument("--merges", type=int, default=10000)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_bpe_train)
    pa = bpe_sub.add_parser("apply", help="encode a corpus with a trained model")
    pa.add_argument("--model", required=True)
    pa.add_argument("--in", dest="input", required=True)
    pa.add_argument("--out", required=True)
    pa.set_defaults(func=cmd_bpe_apply)

    p = sub.add_parser("analyze", help="corpus studies")
    an = p.add_subparsers(dest="analysis", required=True)

    pv = an.add_parser("vocab", help="new-vocabulary ratio per context mode")
    pv.add_argument("--corpus", required=True)
    pv.add_argument("--bpe", default=None, help="optional BPE model for subtoken rows")
    pv.add_argument("--windows", default="10,20", help="line windows per side")
    pv.add_argument("--out", required=True)
    pv.set_defaults(func=cmd_analyze_vocab)

    ps = an.add_parser("similarity", help="bug/patch similarity distributions")
    ps.add_argument("--corpus", required=True)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_analyze_similarity)

    pa = an.add_parser("ambiguity", help="similar-bug/similar-patch heatmaps")
    pa.add_argument("--test", required=True)
    pa.add_argument("--train", required=True)
    pa.add_argument("--neighbors", type=int, default=analyses.RETRIEVAL_NEIGHBORS)
    pa.add_argument("--bins", type=int, default=analyses.DEFAULT_HEATMAP_BINS)
    pa.add_argument("--jobs", type=int, default=1)
    pa.add_argument("--out", required=True)
    pa.set_defaults(func=cmd_analyze_ambiguity)

    px = an.add_parser("syntax", help="token-kind invariance ratios")
    px.add_argument("--corpus", required=True)
    px.add_argument("--out", required=True)
    px.set_defaults(func=cmd_analyze_syntax)

    pe = an.add_parser("edits", help="pointer edit scripts and class histogram")
    pe.add_argument("--corpus", required=True)
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_analyze_edits)

    p = sub.add_parser("train", help="train a repair model")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--variant", default="baseline",
                   choices=("baseline", "edit", "baseline+context", "edit+context"))
    p.add_argument("--config", default=None, help="JSON file with model config fields")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--warmup-steps", type=int, default=50)
    p.add_argument("--target-full-seq-acc", type=float, default=None)
    p.add_argument("--seed", type=int, default=_seed_default())
    p.add_argument("--out", required=True, help="checkpoint/curve output directory")
    p.set_defaults(func=cmd_train, seed_set=False)

    p = sub.add_parser("eval", help="evaluate checkpoints on a test corpus")
    p.add_argument("--ckpt", required=True, nargs="+")
    p.add_argument("--test", required=True)
    p.add_argument("--k", type=_parse_klist, default=(1, 5, 25))
    p.add_argument("--pointer-beam", type=int, default=None)
    p.add_argument("--out", required=True, help="results CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decode", help="propose patches for one buggy line")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--line", default=None, help="buggy line text")
    p.add_argument("--file", default=None, help="file containing the bug (for context models)")
    p.add_argument("--line-number", type=int, default=None)
    p.add_argument("--beam", type=int, default=5)
    p.add_argument("--pointer-beam", type=int, default=5)
    p.set_defaults(func=cmd_decode)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "decode" and not args.line and not args.file:
        parser.error("decode needs --line or --file")
    if args.command == "train":
        args.seed_set = any(
            a == "--seed" or a.startswith("--seed=") for a in (argv or sys.argv[1:])
        )
    try:
        return args.func(args)
    except (corpus.CorpusError, bpe.BpeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
