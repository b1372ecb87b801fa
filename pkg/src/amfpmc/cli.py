"""Command-line surface.

Every run echoes its full resolved configuration (defaults and seed
included) before doing work. Exit status is 0 only on complete success;
every handled failure prints a one-line machine-parsable cause to stderr.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import formats
from .errors import AmfpmcError, ParseError
from .graph import HOLDOUT, RETROSPECTIVE
from .model import Hyperparameters, export_embeddings, predict_batch
from .phrases import InteractionSentence, build_vocabulary, extract_phrase, load_stoplist, load_verb_forms
from .pipeline import (
    attach_targets,
    grid_search,
    holdout_evaluate,
    reconcile_rosters,
    retrospective_evaluate,
    retrospective_split,
    train,
)
from .synth import SyntheticConfig, generate_synthetic

_FLOAT_FMT = "%.17g"


def _print_config(cmd: str, args: argparse.Namespace) -> None:
    print(f"# amfpmc {cmd}")
    for key in sorted(vars(args)):
        if key in ("func", "command", "eval_kind"):
            continue
        print(f"# {key} = {getattr(args, key)}")


def _add_hp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=512, help="embedding size")
    p.add_argument("--dropout", type=float, default=0.3)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch", type=int, default=256, help="mini-batch size")
    p.add_argument("--lr", type=float, default=0.01, help="learning rate")
    p.add_argument("--alpha", type=float, default=0.6, help="propagation factor in [0, 1]")
    p.add_argument("--seed", type=int, default=0, help="single seed driving all randomness")
    p.add_argument("--no-balance", action="store_true", help="disable class weight balancing")


def _hp_from_args(args: argparse.Namespace) -> Hyperparameters:
    return Hyperparameters(
        embedding_dim=args.dim,
        dropout=args.dropout,
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        alpha=args.alpha,
        seed=args.seed,
        balance_classes=not args.no_balance,
    ).validate()


def _class_names_from_vocab(path: Optional[str]) -> Optional[dict[int, str]]:
    if path is None:
        return None
    vocab = formats.read_vocabulary(path)
    return {idx: vocab.class_label(idx) for idx in range(vocab.n_classes)}


def _emit_report(report, args, class_names=None) -> None:
    sys.stdout.write(formats.format_report_text(report, class_names))
    if getattr(args, "report", None):
        formats.write_report(report, args.report, "text", class_names)
    if getattr(args, "json", None):
        formats.write_report(report, args.json, "structured")


# -- subcommands ---------------------------------------------------------------


def cmd_extract(args) -> int:
    _print_config("extract", args)
    records = formats.parse_interactions_file(args.input, "sentences")
    stoplist = load_stoplist(args.stoplist)
    verb_forms = load_verb_forms(args.verb_table)

    phrases = []
    for r in records:
        sentence = InteractionSentence(
            r.payload,
            r.surface_a or "Drug a",
            r.surface_b or "Drug b",
        )
        try:
            phrases.append(extract_phrase(sentence, stoplist, verb_forms))
        except AmfpmcError as exc:
            raise ParseError(args.input, r.line_no, str(exc)) from None

    vocab = build_vocabulary(phrases, args.mode, top_n=args.top_n, min_count=args.min_count)
    formats.write_vocabulary(vocab, args.out_vocab)

    dropped = 0
    with open(args.out_indexed, "w", encoding="utf-8") as fh:
        for r, phrase in zip(records, phrases):
            try:
                cls = vocab.encode(phrase)
            except AmfpmcError:
                dropped += 1
                continue
            fh.write(f"{r.drug_a}\t{r.drug_b}\t{cls}\n")
    print(f"classes: {vocab.n_classes}  records: {len(records)}  dropped: {dropped}")
    return 0


def cmd_train(args) -> int:
    _print_config("train", args)
    records = formats.parse_interactions_file(args.interactions, "indices")
    graph = formats.graph_from_index_records(records, args.mode, args.classes)
    items = graph.edge_list()
    labeled = attach_targets(items, graph, args.alpha)
    hp = _hp_from_args(args)
    params = train(labeled, hp, graph.n_drugs, graph.n_classes)
    formats.write_model(params, args.out)
    roster_path = args.out_roster or args.out + ".roster"
    formats.write_roster(graph.roster, roster_path)
    print(
        f"trained on {len(items)} edges: n={graph.n_drugs} K={graph.n_classes} "
        f"d={hp.embedding_dim} -> {args.out}"
    )
    return 0


def cmd_evaluate_holdout(args) -> int:
    _print_config("evaluate holdout", args)
    records = formats.parse_interactions_file(args.interactions, "indices")
    graph = formats.graph_from_index_records(records, HOLDOUT, args.classes)
    hp = _hp_from_args(args)
    result = holdout_evaluate(graph, hp, k=args.k, seed=args.seed)
    for f, rep in enumerate(result.folds):
        print(f"fold {f}: accuracy {rep.accuracy:.4f}")
    class_names = _class_names_from_vocab(args.vocab)
    _emit_report(result.mean, args, class_names)
    return 0


def cmd_evaluate_retrospective(args) -> int:
    _print_config("evaluate retrospective", args)
    rec0 = formats.parse_interactions_file(args.t0, "indices")
    rec1 = formats.parse_interactions_file(args.t1, "indices")
    n_classes = args.classes
    if n_classes is None:
        n_classes = max(r.class_index() for r in rec0 + rec1) + 1
    g0 = formats.graph_from_index_records(rec0, RETROSPECTIVE, n_classes)
    g1 = formats.graph_from_index_records(rec1, RETROSPECTIVE, n_classes)
    g0, g1 = reconcile_rosters(g0, g1)
    split = retrospective_split(
        g0, g1, negative_ratio=args.negative_ratio, seed=args.seed, test_pair_cap=args.test_cap
    )
    subset = None
    if args.subset:
        wanted = formats.load_drug_subset(args.subset)
        subset = {g0.roster.index_of(ext) for ext in wanted if ext in g0.roster}
        print(f"subset: {len(subset)} of {len(wanted)} listed drugs are in both snapshots")
    hp = _hp_from_args(args)
    report = retrospective_evaluate(split, hp, subset=subset)
    print(f"train pairs: {len(split.train_items)}  test pairs: {len(split.test_items)}")
    class_names = _class_names_from_vocab(args.vocab)
    _emit_report(report, args, class_names)
    return 0


def cmd_gridsearch(args) -> int:
    _print_config("gridsearch", args)
    records = formats.parse_interactions_file(args.interactions, "indices")
    graph = formats.graph_from_index_records(records, args.mode, args.classes)
    grid = formats.parse_grid_file(args.grid)
    base_hp = _hp_from_args(args)
    best, results = grid_search(
        graph.edge_list(),
        graph.n_drugs,
        graph.n_classes,
        args.mode,
        base_hp,
        grid,
        validation_fraction=args.validation_fraction,
        seed=args.seed,
        objective=args.objective,
        allow_large=args.allow_large,
    )
    for hp_c, score in results:
        print(
            f"dim={hp_c.embedding_dim} dropout={hp_c.dropout} epochs={hp_c.epochs} "
            f"batch={hp_c.batch_size} lr={hp_c.learning_rate} alpha={hp_c.alpha} "
            f"{args.objective}={score:.4f}"
        )
    print(
        f"best: dim={best.embedding_dim} dropout={best.dropout} epochs={best.epochs} "
        f"batch={best.batch_size} lr={best.learning_rate} alpha={best.alpha}"
    )
    return 0


def cmd_predict(args) -> int:
    _print_config("predict", args)
    params = formats.read_model(args.model)
    roster = formats.read_roster(args.roster or args.model + ".roster")
    if len(roster) != params.n_drugs:
        raise AmfpmcError(
            f"roster lists {len(roster)} drugs but the model has {params.n_drugs} rows"
        )
    pairs = formats.parse_pairs_file(args.pairs)
    I = np.array([roster.index_of(a) for a, _ in pairs], dtype=np.int64)
    J = np.array([roster.index_of(b) for _, b in pairs], dtype=np.int64)
    probs = predict_batch(params, I, J)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for (a, b), row in zip(pairs, probs):
            top = np.argsort(-row, kind="mergesort")[: args.top_k]
            for cls in top:
                out.write(f"{a}\t{b}\t{int(cls)}\t{row[cls]:.6f}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_export_embeddings(args) -> int:
    _print_config("export-embeddings", args)
    params = formats.read_model(args.model)
    roster = formats.read_roster(args.roster or args.model + ".roster")
    ids, matrix = export_embeddings(params, roster)
    with open(args.out, "w", encoding="utf-8") as fh:
        header = ["drug_id"] + [f"e{t}" for t in range(matrix.shape[1])]
        fh.write(",".join(header) + "\n")
        for ext, row in zip(ids, matrix):
            fh.write(ext + "," + ",".join(_FLOAT_FMT % v for v in row) + "\n")
    print(f"wrote {len(ids)} x {matrix.shape[1]} embeddings to {args.out}")
    return 0


def cmd_synth(args) -> int:
    _print_config("synth", args)
    cfg = SyntheticConfig(
        n_drugs=args.n,
        n_blocks=args.blocks,
        n_classes=args.k,
        edge_probability=args.p,
        label_noise=args.noise,
        holdout_fraction=args.holdout,
        seed=args.seed,
        mode=args.mode,
    )
    data = generate_synthetic(cfg)
    formats.write_interactions_file(data.graph_t0, args.out_t0)
    if args.out_t1:
        formats.write_interactions_file(data.graph_t1, args.out_t1)
    if args.out_blocks:
        with open(args.out_blocks, "w", encoding="utf-8") as fh:
            roster = data.graph_t0.roster
            for i, blk in enumerate(data.block_of):
                fh.write(f"{roster.external_id(i)}\t{int(blk)}\n")
    print(
        f"snapshot edges: t0={data.graph_t0.num_edges} t1={data.graph_t1.num_edges} "
        f"held out={len(data.held_out)}"
    )
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amfpmc",
        description="Multi-class drug interaction prediction from the interaction graph alone",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="sentences TSV -> vocabulary + indexed TSV")
    p.add_argument("--input", required=True, help="TSV: drug_a, drug_b, sentence[, surface_a, surface_b]")
    p.add_argument("--mode", choices=(RETROSPECTIVE, HOLDOUT), required=True)
    p.add_argument("--top-n", type=int, default=None, help="common phrase count (retrospective)")
    p.add_argument("--min-count", type=int, default=None, help="phrase support floor (holdout)")
    p.add_argument("--stoplist", default=None, help="override the packaged stop list")
    p.add_argument("--verb-table", default=None, help="override the packaged verb table")
    p.add_argument("--out-vocab", required=True)
    p.add_argument("--out-indexed", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train on an indexed interactions TSV")
    p.add_argument("--interactions", required=True)
    p.add_argument("--mode", choices=(RETROSPECTIVE, HOLDOUT), required=True)
    p.add_argument("--classes", type=int, default=None, help="class count (default: max index + 1)")
    _add_hp_flags(p)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--out-roster", default=None, help="roster sidecar (default: <out>.roster)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="holdout or retrospective evaluation")
    esub = p.add_subparsers(dest="eval_kind", required=True)

    ph = esub.add_parser("holdout", help="stratified k-fold over one snapshot")
    ph.add_argument("--interactions", required=True)
    ph.add_argument("--classes", type=int, default=None)
    ph.add_argument("--k", type=int, default=5)
    _add_hp_flags(ph)
    ph.add_argument("--vocab", default=None, help="vocabulary file for per-class names")
    ph.add_argument("--report", default=None, help="write the text report here")
    ph.add_argument("--json", default=None, help="write the structured report here")
    ph.set_defaults(func=cmd_evaluate_holdout)

    pr = esub.add_parser("retrospective", help="train on snapshot T0, test against T1")
    pr.add_argument("--t0", required=True)
    pr.add_argument("--t1", required=True)
    pr.add_argument("--classes", type=int, default=None)
    pr.add_argument("--negative-ratio", type=float, default=1.0)
    pr.add_argument("--test-cap", type=int, default=5_000_000)
    pr.add_argument("--subset", default=None, help="restrict test pairs to these drugs")
    _add_hp_flags(pr)
    pr.add_argument("--vocab", default=None)
    pr.add_argument("--report", default=None)
    pr.add_argument("--json", default=None)
    pr.set_defaults(func=cmd_evaluate_retrospective)

    p = sub.add_parser("gridsearch", help="grid search on a stratified validation split")
    p.add_argument("--interactions", required=True)
    p.add_argument("--mode", choices=(RETROSPECTIVE, HOLDOUT), required=True)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--grid", required=True, help="grid file: '<name> <value> <value> ...' lines")
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--objective", choices=("accuracy", "auroc"), default="accuracy")
    p.add_argument("--allow-large", action="store_true", help="permit grids beyond 1000 points")
    _add_hp_flags(p)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("predict", help="score drug pairs with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--roster", default=None)
    p.add_argument("--pairs", required=True, help="TSV: drug_a, drug_b")
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--out", default=None, help="default: stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("export-embeddings", help="write drug embeddings as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--roster", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_embeddings)

    p = sub.add_parser("synth", help="generate a typed block-model graph")
    p.add_argument("--n", type=int, default=200, help="drug count")
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--k", type=int, default=16, help="class count")
    p.add_argument("--p", type=float, default=0.3, help="edge probability")
    p.add_argument("--noise", type=float, default=0.0, help="wrong-label fraction")
    p.add_argument("--holdout", type=float, default=0.2, help="held-out edge fraction")
    p.add_argument("--mode", choices=(RETROSPECTIVE, HOLDOUT), default=HOLDOUT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-t0", required=True)
    p.add_argument("--out-t1", default=None)
    p.add_argument("--out-blocks", default=None)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AmfpmcError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
