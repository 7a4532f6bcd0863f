"""Command-line surface of the pipeline.

One executable, verb-grouped subcommands, files and stdin as the composition
mechanism.  Every command is a thin adapter over the library modules — flag
defaults mirror the module defaults, and all output bytes are produced by
module code so CLI results match direct API calls exactly.

Exit codes: 0 success, 64 usage/configuration error, 65 malformed input
data, 66 I/O failure, 70 internal invariant breach.  Failures print a single
``error: <ErrorClass>: <message>`` line to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AlignmentError, ConfigError, DecodeError, FormatError
from .heads import cls_forward, cls_nll_and_grad, qa_decode_span, train_head
from .metrics import (QaInstance, ner_macro_f1, qa_exact_match, qa_f1,
                      sentence_char_bounds, sentence_match)
from .normalize import NormalizationConfig, SentenceCorpus
from .pretrain import (PretrainParams, compute_stats, create_examples,
                       deserialize, serialize)
from .segment import (BUILTIN_RULES, RuleTable, marker_word_groups,
                      segment_text)
from .unigram import decode, encode, train_vocab
from .vocab import Vocabulary, VocabConfig

EXIT_OK = 0
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_IO = 66
EXIT_INTERNAL = 70


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 64."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: UsageError: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _emit(lines: list[str]) -> None:
    """Write data lines to stdout as UTF-8, independent of locale."""
    data = "".join(line + "\n" for line in lines)
    sys.stdout.buffer.write(data.encode("utf-8"))
    sys.stdout.buffer.flush()


def _note(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _read_lines(path: str) -> list[str]:
    """Read UTF-8 text lines from a file, or from stdin when path is '-'."""
    if path == "-":
        data = sys.stdin.buffer.read().decode("utf-8")
    else:
        with open(path, "rb") as fh:
            data = fh.read().decode("utf-8")
    return data.splitlines()


def _add_common(parser: argparse.ArgumentParser, seed_default: int | None,
                seed_help: str = "random seed") -> None:
    if seed_default is None:
        parser.add_argument("--seed", type=int, default=0,
                            help="random seed (unused by this command)")
    else:
        parser.add_argument("--seed", type=int, default=seed_default,
                            help=f"{seed_help} (default: {seed_default})")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads; output is identical for any "
                             "value (default: 1)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress the progress note on stderr")


# --- corpus -----------------------------------------------------------------


def _input_files(path: str) -> list[Path]:
    root = Path(path)
    if root.is_dir():
        return sorted(p for p in root.rglob("*") if p.is_file())
    return [root]


def _cmd_corpus_prep(args) -> int:
    config = NormalizationConfig(
        strip_tatweel=not args.keep_tatweel,
        strip_diacritics=not args.keep_diacritics,
        normalize_alef_ya=args.normalize_alef_ya,
        collapse_whitespace=not args.no_collapse_whitespace)
    paths = _input_files(args.infile)
    documents = []
    for p in paths:
        with open(p, "rb") as fh:
            documents.append(fh.read().decode("utf-8"))
    corpus = SentenceCorpus.from_documents(documents, config,
                                           threads=args.threads)
    corpus.save(args.out)
    _note(args, f"{len(corpus)} sentences from {len(paths)} document(s)")
    return EXIT_OK


# --- segment ----------------------------------------------------------------


def _load_rules(value: str) -> RuleTable:
    if value in BUILTIN_RULES:
        return BUILTIN_RULES[value]
    if Path(value).exists():
        return RuleTable.from_file(value)
    raise ConfigError(
        f"rules {value!r} is neither a built-in table "
        f"({sorted(BUILTIN_RULES)}) nor a rule file")


def _cmd_segment(args) -> int:
    rules = _load_rules(args.rules)
    out_lines = []
    for line in _read_lines(args.infile):
        if args.passthrough:
            marker_word_groups(line.split())
            out_lines.append(line)
        else:
            out_lines.append(segment_text(line, rules))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(line + "\n" for line in out_lines)
    _note(args, f"{len(out_lines)} lines")
    return EXIT_OK


# --- vocab ------------------------------------------------------------------


def _cmd_vocab_train(args) -> int:
    corpus = SentenceCorpus.load(args.infile)
    config = VocabConfig(target_size=args.size, unused_count=args.unused,
                         seed_max_piece_len=args.max_piece_len,
                         prune_keep_ratio=args.keep_ratio,
                         em_iters_per_round=args.em_iters)
    vocab = train_vocab(corpus, config, seed=args.seed, threads=args.threads)
    vocab.save(args.out)
    _note(args, f"{len(vocab)} pieces ({len(vocab.learned_items())} learned)")
    return EXIT_OK


# --- tokenize ---------------------------------------------------------------


def _cmd_tokenize_encode(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    out_lines = []
    for line in _read_lines(args.infile):
        enc = encode(vocab, line, mode=args.mode)
        out_lines.append(" ".join(str(i) for i in enc.ids))
    _emit(out_lines)
    _note(args, f"{len(out_lines)} lines")
    return EXIT_OK


def _cmd_tokenize_decode(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    out_lines = []
    for lineno, line in enumerate(_read_lines(args.infile), start=1):
        try:
            ids = [int(tok) for tok in line.split()]
        except ValueError:
            raise FormatError(f"line {lineno}: ids must be decimal integers")
        out_lines.append(decode(vocab, ids))
    _emit(out_lines)
    _note(args, f"{len(out_lines)} lines")
    return EXIT_OK


# --- pretrain ---------------------------------------------------------------


def _cmd_pretrain_build(args) -> int:
    if args.mask_unit == "segment" and args.mode != "segmented":
        raise ConfigError("--mask-unit segment requires --mode segmented")
    vocab = Vocabulary.load(args.vocab)
    corpus = SentenceCorpus.load(args.infile)
    # In segment-unit masking each marker token is its own word, which is
    # exactly what raw-mode encoding of marked text produces.
    enc_mode = "segmented" if args.mask_unit == "word" and args.mode == "segmented" \
        else "raw"
    documents = [[encode(vocab, s, mode=enc_mode) for s in doc]
                 for doc in corpus.documents()]
    params = PretrainParams(max_seq_len=args.max_seq_len,
                            masked_lm_prob=args.masked_lm_prob,
                            max_predictions=args.max_predictions,
                            dup_factor=args.dup_factor,
                            seed=args.seed,
                            random_next_prob=args.random_next_prob,
                            whole_word_unit=args.mask_unit)
    skipped: list[int] = []
    stream = create_examples(documents, params, vocab, threads=args.threads,
                             skipped_docs=skipped)
    with open(args.out, "wb") as fh:
        count = serialize(stream, params, fh)
    _note(args, f"{count} examples from {len(documents) - len(skipped)} "
                f"document(s), {len(skipped)} skipped")
    return EXIT_OK


def _cmd_pretrain_stats(args) -> int:
    with open(args.file, "rb") as fh:
        header, examples = deserialize(fh)
        stats = compute_stats(header, examples,
                              masked_lm_prob=args.masked_lm_prob,
                              mask_id=args.mask_id)
    _emit(stats.report_lines())
    return EXIT_OK


# --- head -------------------------------------------------------------------


def _parse_labeled_features(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    labels: list[int] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) < 2:
            raise FormatError(
                f"line {lineno}: expected 'label v1 v2 ...', got {line!r}")
        try:
            labels.append(int(fields[0]))
            rows.append([float(v) for v in fields[1:]])
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric field")
        if len(rows[-1]) != len(rows[0]):
            raise FormatError(
                f"line {lineno}: {len(rows[-1])} features, expected {len(rows[0])}")
    if not rows:
        raise FormatError("no training rows given")
    if min(labels) < 0:
        raise FormatError("labels must be non-negative integers")
    return np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64)


def _cmd_head_train_cls(args) -> int:
    x, y = _parse_labeled_features(_read_lines(args.infile))
    weights, _ = train_head(x, y, lr=args.lr, epochs=args.epochs,
                            seed=args.seed)
    weights.save(args.out)
    nll = cls_nll_and_grad(x, y, weights)[0]
    acc = float(np.mean(cls_forward(x, weights).argmax(axis=1) == y))
    _emit([f"examples\t{x.shape[0]}",
           f"dim\t{x.shape[1]}",
           f"classes\t{weights.n_classes}",
           f"final_nll\t{nll!r}",
           f"train_accuracy\t{acc!r}"])
    return EXIT_OK


def _parse_score_line(line: str, lineno: int) -> list[float]:
    try:
        return [float(tok) for tok in line.split()]
    except ValueError:
        raise FormatError(f"line {lineno}: scores must be decimal numbers")


def _cmd_head_qa_decode(args) -> int:
    # Blocks of 2 or 3 non-blank lines (start scores, end scores, optional
    # 0/1 validity bits), separated by blank lines; one output line each.
    blocks: list[list[tuple[int, str]]] = [[]]
    for lineno, line in enumerate(_read_lines(args.infile), start=1):
        if line.strip():
            blocks[-1].append((lineno, line))
        elif blocks[-1]:
            blocks.append([])
    if blocks and not blocks[-1]:
        blocks.pop()
    out_lines = []
    for block in blocks:
        if len(block) not in (2, 3):
            raise FormatError(
                f"line {block[0][0]}: expected 2 or 3 score lines per block, "
                f"got {len(block)}")
        start = _parse_score_line(block[0][1], block[0][0])
        end = _parse_score_line(block[1][1], block[1][0])
        valid = None
        if len(block) == 3:
            valid = [v != 0 for v in _parse_score_line(block[2][1], block[2][0])]
        span = qa_decode_span(start, end, valid,
                              max_answer_len=args.max_answer_len)
        out_lines.append(f"{span.start}\t{span.end}\t{span.score!r}")
    _emit(out_lines)
    return EXIT_OK


# --- eval -------------------------------------------------------------------


def _read_conll(path: str) -> tuple[list[list[str]], list[list[str]]]:
    tokens: list[list[str]] = [[]]
    tags: list[list[str]] = [[]]
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            if tokens[-1]:
                tokens.append([])
                tags.append([])
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError(
                f"{path}:{lineno}: expected 'token<TAB>tag', got {line!r}")
        tokens[-1].append(fields[0])
        tags[-1].append(fields[1])
    if not tokens[-1]:
        tokens.pop()
        tags.pop()
    return tokens, tags


def _cmd_eval_ner(args) -> int:
    pred_tokens, pred_tags = _read_conll(args.pred)
    gold_tokens, gold_tags = _read_conll(args.gold)
    if len(pred_tokens) != len(gold_tokens):
        raise AlignmentError(
            f"{len(pred_tokens)} predicted sentences vs {len(gold_tokens)} gold")
    for si, (ptoks, gtoks) in enumerate(zip(pred_tokens, gold_tokens)):
        if ptoks != gtoks:
            raise AlignmentError(f"sentence {si}: token columns differ")
    per_class, macro = ner_macro_f1(pred_tags, gold_tags, level=args.level)
    out_lines = []
    for cls in sorted(per_class):
        p, r, f1 = per_class[cls]
        out_lines.append(f"{cls}_precision\t{p!r}")
        out_lines.append(f"{cls}_recall\t{r!r}")
        out_lines.append(f"{cls}_f1\t{f1!r}")
    out_lines.append(f"macro_f1\t{macro!r}")
    _emit(out_lines)
    return EXIT_OK


def _read_qa_records(path: str) -> dict[str, list[tuple[str, int]]]:
    records: dict[str, list[tuple[str, int]]] = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t", 2)
        if len(fields) != 3:
            raise FormatError(
                f"{path}:{lineno}: expected 'id<TAB>char_start<TAB>text'")
        try:
            start = int(fields[1])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: char_start must be an integer")
        records.setdefault(fields[0], []).append((fields[2], start))
    return records


def _cmd_eval_qa(args) -> int:
    preds = _read_qa_records(args.pred)
    golds = _read_qa_records(args.gold)
    for qid, answers in preds.items():
        if len(answers) > 1:
            raise FormatError(f"multiple predictions for id {qid!r}")
        if qid not in golds:
            raise FormatError(f"no gold answers for id {qid!r}")
    for qid in golds:
        if qid not in preds:
            raise FormatError(f"missing prediction for id {qid!r}")
    contexts = None
    if args.contexts is not None:
        contexts = {}
        for lineno, line in enumerate(_read_lines(args.contexts), start=1):
            if not line.strip():
                continue
            fields = line.split("\t", 1)
            if len(fields) != 2:
                raise FormatError(
                    f"{args.contexts}:{lineno}: expected 'id<TAB>context'")
            contexts[fields[0]] = fields[1]
    em_sum = f1_sum = sm_sum = 0.0
    for qid, [(pred_text, pred_start)] in preds.items():
        gold_texts = [text for text, _ in golds[qid]]
        em_sum += qa_exact_match(pred_text, gold_texts)
        f1_sum += qa_f1(pred_text, gold_texts)
        if contexts is not None:
            if qid not in contexts:
                raise FormatError(f"no context for id {qid!r}")
            instance = QaInstance(
                context=contexts[qid], gold_answers=golds[qid],
                prediction=(pred_text, pred_start),
                sentence_bounds=sentence_char_bounds(contexts[qid]))
            sm_sum += sentence_match(instance)
    n = len(preds)
    if n == 0:
        raise FormatError("no predictions to evaluate")
    out_lines = [f"examples\t{n}",
                 f"exact_match\t{em_sum / n!r}",
                 f"f1\t{f1_sum / n!r}"]
    if contexts is not None:
        out_lines.append(f"sentence_match\t{sm_sum / n!r}")
    _emit(out_lines)
    return EXIT_OK


# --- parser wiring ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arapipe",
                     description="Arabic text pipeline: normalization, "
                                 "segmentation, subword vocabularies, "
                                 "pretraining data, head math and metrics.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>",
                                required=True, parser_class=_Parser)

    corpus = sub.add_parser("corpus", help="corpus preparation")
    corpus_sub = corpus.add_subparsers(dest="subcommand", metavar="<verb>",
                                       required=True, parser_class=_Parser)
    prep = corpus_sub.add_parser(
        "prep", help="normalize, sentence-split and deduplicate raw text")
    prep.add_argument("--in", dest="infile", required=True, metavar="PATH",
                      help="input text file or directory tree")
    prep.add_argument("--out", required=True, metavar="FILE",
                      help="output corpus (one sentence per line)")
    prep.add_argument("--keep-tatweel", action="store_true",
                      help="keep the elongation character (default: strip)")
    prep.add_argument("--keep-diacritics", action="store_true",
                      help="keep harakat diacritics (default: strip)")
    prep.add_argument("--normalize-alef-ya", action="store_true",
                      help="fold alef variants and alef maqsura (default: off)")
    prep.add_argument("--no-collapse-whitespace", action="store_true",
                      help="keep whitespace runs (default: collapse)")
    _add_common(prep, None)
    prep.set_defaults(func=_cmd_corpus_prep)

    seg = sub.add_parser("segment",
                         help="morphological pre-segmentation (marker format)")
    seg.add_argument("--in", dest="infile", required=True, metavar="FILE",
                     help="input text file, one sentence per line ('-' = stdin)")
    seg.add_argument("--out", required=True, metavar="FILE")
    seg.add_argument("--rules", default="arabic", metavar="TABLE",
                     help="built-in table name (arabic, romanized) or rule "
                          "file path (default: arabic)")
    seg.add_argument("--passthrough", action="store_true",
                     help="validate marker structure and copy input through "
                          "(for externally segmented text)")
    _add_common(seg, None)
    seg.set_defaults(func=_cmd_segment)

    vocab = sub.add_parser("vocab", help="subword vocabulary")
    vocab_sub = vocab.add_subparsers(dest="subcommand", metavar="<verb>",
                                     required=True, parser_class=_Parser)
    vtrain = vocab_sub.add_parser("train", help="train a unigram vocabulary")
    vtrain.add_argument("--in", dest="infile", required=True, metavar="FILE",
                        help="prepared corpus, one sentence per line")
    vtrain.add_argument("--out", required=True, metavar="FILE",
                        help="output vocab file (piece<TAB>log_prob)")
    vtrain.add_argument("--size", type=int, default=64000,
                        help="total vocabulary size (default: 64000)")
    vtrain.add_argument("--unused", type=int, default=4000,
                        help="reserved [unusedN] slots (default: 4000)")
    vtrain.add_argument("--max-piece-len", type=int, default=8,
                        help="seed substring length cap (default: 8)")
    vtrain.add_argument("--keep-ratio", type=float, default=0.75,
                        help="pieces kept per pruning round (default: 0.75)")
    vtrain.add_argument("--em-iters", type=int, default=2,
                        help="EM iterations per round (default: 2)")
    _add_common(vtrain, 0)
    vtrain.set_defaults(func=_cmd_vocab_train)

    tok = sub.add_parser("tokenize", help="encode/decode with a vocabulary")
    tok_sub = tok.add_subparsers(dest="subcommand", metavar="<verb>",
                                 required=True, parser_class=_Parser)
    for verb, handler, vhelp in (
            ("encode", _cmd_tokenize_encode,
             "text lines -> space-joined piece ids"),
            ("decode", _cmd_tokenize_decode,
             "space-joined piece ids -> text lines")):
        tp = tok_sub.add_parser(verb, help=vhelp)
        tp.add_argument("--vocab", required=True, metavar="FILE")
        tp.add_argument("--in", dest="infile", default="-", metavar="FILE",
                        help="input file (default: stdin)")
        tp.add_argument("--mode", choices=("raw", "segmented"), default="raw",
                        help="input text form for encoding; decoding is "
                             "mode-independent (default: raw)")
        _add_common(tp, None)
        tp.set_defaults(func=handler)

    pre = sub.add_parser("pretrain", help="pretraining-example records")
    pre_sub = pre.add_subparsers(dest="subcommand", metavar="<verb>",
                                 required=True, parser_class=_Parser)
    pb = pre_sub.add_parser("build",
                            help="build masked/next-sentence example records")
    pb.add_argument("--vocab", required=True, metavar="FILE")
    pb.add_argument("--in", dest="infile", required=True, metavar="FILE",
                    help="prepared corpus; blank lines separate documents")
    pb.add_argument("--out", required=True, metavar="FILE")
    pb.add_argument("--max-seq-len", type=int, default=128,
                    help="tokens per example (default: 128)")
    pb.add_argument("--masked-lm-prob", type=float, default=0.15,
                    help="fraction of tokens to mask (default: 0.15)")
    pb.add_argument("--max-predictions", type=int, default=None,
                    help="masked-position cap (default: "
                         "ceil(masked-lm-prob * max-seq-len))")
    pb.add_argument("--dup-factor", type=int, default=10,
                    help="passes over the corpus (default: 10)")
    pb.add_argument("--random-next-prob", type=float, default=0.5,
                    help="probability of a random second segment (default: 0.5)")
    pb.add_argument("--mode", choices=("raw", "segmented"), default="raw",
                    help="input text form (default: raw)")
    pb.add_argument("--mask-unit", choices=("word", "segment"), default="word",
                    help="whole-word masking unit (default: word)")
    _add_common(pb, 34, seed_help="masking/pairing seed")
    pb.set_defaults(func=_cmd_pretrain_build)
    ps = pre_sub.add_parser("stats",
                            help="masking/NSP statistics of a record file")
    ps.add_argument("file", metavar="FILE")
    ps.add_argument("--masked-lm-prob", type=float, default=0.15,
                    help="masking fraction the file was built with "
                         "(default: 0.15)")
    ps.add_argument("--mask-id", type=int, default=None,
                    help="vocabulary id of the mask token (default: inferred)")
    _add_common(ps, None)
    ps.set_defaults(func=_cmd_pretrain_stats)

    head = sub.add_parser("head", help="classification-head utilities")
    head_sub = head.add_subparsers(dest="subcommand", metavar="<verb>",
                                   required=True, parser_class=_Parser)
    ht = head_sub.add_parser(
        "train-cls", help="train a softmax head on 'label v1 v2 ...' lines")
    ht.add_argument("--in", dest="infile", default="-", metavar="FILE",
                    help="training rows (default: stdin)")
    ht.add_argument("--out", required=True, metavar="FILE",
                    help="output weight file")
    ht.add_argument("--lr", type=float, default=0.5,
                    help="learning rate (default: 0.5)")
    ht.add_argument("--epochs", type=int, default=200,
                    help="full-batch epochs (default: 200)")
    _add_common(ht, 0, seed_help="weight-init seed")
    ht.set_defaults(func=_cmd_head_train_cls)
    hq = head_sub.add_parser(
        "qa-decode", help="decode best answer spans from score vectors")
    hq.add_argument("--in", dest="infile", default="-", metavar="FILE",
                    help="blocks of start/end[/valid] score lines "
                         "(default: stdin)")
    hq.add_argument("--max-answer-len", type=int, default=30,
                    help="span length cap in tokens (default: 30)")
    _add_common(hq, None)
    hq.set_defaults(func=_cmd_head_qa_decode)

    ev = sub.add_parser("eval", help="task metrics")
    ev_sub = ev.add_subparsers(dest="subcommand", metavar="<verb>",
                               required=True, parser_class=_Parser)
    en = ev_sub.add_parser("ner", help="entity-level P/R/F1 report")
    en.add_argument("--pred", required=True, metavar="FILE",
                    help="token<TAB>tag lines, blank line between sentences")
    en.add_argument("--gold", required=True, metavar="FILE")
    en.add_argument("--level", choices=("entity", "token"), default="entity",
                    help="matching granularity (default: entity)")
    _add_common(en, None)
    en.set_defaults(func=_cmd_eval_ner)
    eq = ev_sub.add_parser("qa", help="exact-match / F1 / sentence-match report")
    eq.add_argument("--pred", required=True, metavar="FILE",
                    help="id<TAB>char_start<TAB>text lines, one per question")
    eq.add_argument("--gold", required=True, metavar="FILE",
                    help="same format; multiple lines per id allowed")
    eq.add_argument("--contexts", default=None, metavar="FILE",
                    help="id<TAB>context lines; enables the sentence-match row")
    _add_common(eq, None)
    eq.set_defaults(func=_cmd_eval_qa)

    return parser


def _fail(code: int, exc: BaseException) -> int:
    message = " ".join(str(exc).split()) or type(exc).__name__
    print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_USAGE, exc)
    except (FormatError, AlignmentError, DecodeError, UnicodeDecodeError) as exc:
        return _fail(EXIT_DATA, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except Exception as exc:  # remaining ArapipeError kinds + true bugs
        return _fail(EXIT_INTERNAL, exc)


if __name__ == "__main__":
    sys.exit(main())
