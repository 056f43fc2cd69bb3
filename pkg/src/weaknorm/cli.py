"""Command-line entry point: ``weaknorm {gen-corpus,train,label,evaluate}``.

Exit codes: 0 ok, 1 configuration error, 2 data error, 3 runtime failure.
Configuration precedence: RunConfig defaults < ``--config`` JSON < ``WEAKNORM_<KEY>``
environment variables < explicit flags.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .exceptions import (ConfigError, DataError, EmptyDataset, LengthMismatch, MaskOverflow,
                         RowMismatch, SampleTooLarge, UnknownWord, WeakNormError)
from .metrics import evaluate
from .orchestrator import RunConfig, run
from .rules import DictionaryRule, RegexRule, build_default_dictionary, precompute_rule_columns
from .student import load_student, normalize_sentences
from .text_prep import (CorruptionConfig, Lexicon, case_fold_and_separate, generate_corpus,
                        labeled_record, pair_from_record, unlabeled_record)

logger = logging.getLogger("weaknorm")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
ENV_PREFIX = "WEAKNORM_"
GOLD_SIDECAR = "sealed/unlabeled.gold.jsonl"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _jsonl(rows) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: {exc.msg}") from None
    return rows


def _coerce(value: str, kind):
    if kind in (bool, "bool"):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    for name, cast in (("int", int), ("float", float)):
        if kind in (cast, name):
            try:
                return cast(value)
            except ValueError:
                raise ConfigError(f"not a {name}: {value!r}") from None
    return value


def resolve_config(config_path: str | None, overrides: dict, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values: dict = {}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        values.update(loaded)
    for f in fields(RunConfig):
        key = ENV_PREFIX + f.name.upper()
        if key in environ:
            values[f.name] = _coerce(environ[key], f.type)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.from_dict(values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- commands

def cmd_gen_corpus(args) -> int:
    lexicon = Lexicon.load(args.lexicon) if args.lexicon else Lexicon.default()
    corruption = CorruptionConfig(rng_seed=args.seed)
    out = Path(args.out)
    labeled = generate_corpus(args.n, corruption, lexicon)
    gold = generate_corpus(args.n_unlabeled, corruption, lexicon, offset=args.n)
    dictionary = build_default_dictionary(lexicon, coverage=args.dict_coverage, seed=args.seed)
    unlabeled = precompute_rule_columns([unlabeled_record(p, i) for i, p in enumerate(gold)],
                                        RegexRule.default(), dictionary)
    _atomic_write(out / "labeled.jsonl", _jsonl(labeled_record(p) for p in labeled))
    _atomic_write(out / "unlabeled.jsonl", _jsonl(unlabeled))
    _atomic_write(out / GOLD_SIDECAR,
                  _jsonl({"sent_idx": i, "input": list(p.source_words),
                          "output": list(p.target_words)} for i, p in enumerate(gold)))
    _atomic_write(out / "dictionary.json",
                  json.dumps(dictionary.entries, ensure_ascii=False, indent=1, sort_keys=True))
    print(f"wrote {len(labeled)} labeled and {len(unlabeled)} unlabeled rows to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = resolve_config(args.config, {
        "regime": args.regime, "seed": args.seed, "iterations": args.iterations,
        "p_diacritic": args.p_diacritic, "n_downsample": args.n_downsample,
    })
    labeled = [pair_from_record(r) for r in read_jsonl(args.labeled)]
    unlabeled = read_jsonl(args.unlabeled) if args.unlabeled else []
    for i, r in enumerate(unlabeled):
        if "input" not in r:
            raise DataError(f"{args.unlabeled}: row {i} lacks 'input'")
    lexicon = Lexicon.default()
    dictionary = (DictionaryRule.load(args.dictionary, lexicon) if args.dictionary
                  else build_default_dictionary(lexicon))
    regex = RegexRule.load(args.regex) if args.regex else RegexRule.default()
    if args.dictionary or args.regex:
        unlabeled = precompute_rule_columns(unlabeled, regex, dictionary)
    result = run(config, labeled, unlabeled, regex, dictionary, run_dir=args.out,
                 resume=args.resume)
    test = result.report["test"]
    print(json.dumps({"regime": config.regime, "seed": config.seed,
                      **{k: test[k] for k in ("precision", "recall", "f1", "integrity", "accuracy")}},
                     sort_keys=True))
    return EXIT_OK


def _checkpoint_path(path: str) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / "student.pt"
    if not p.exists():
        raise DataError(f"no student checkpoint at {p}")
    return p


def cmd_label(args) -> int:
    model = load_student(_checkpoint_path(args.checkpoint))
    rows = read_jsonl(args.input)
    keep, words = [], []
    for i, row in enumerate(rows):
        if isinstance(row.get("input"), list) and row["input"] and all(
                isinstance(w, str) and w for w in row["input"]):
            ws = row["input"]
        elif isinstance(row.get("original"), str) and case_fold_and_separate(row["original"]):
            ws = case_fold_and_separate(row["original"])
        else:
            print(f"{args.input}: row {i}: needs a non-empty 'input' list or 'original' string",
                  file=sys.stderr)
            continue
        keep.append(row)
        words.append(list(ws))
    preds = normalize_sentences(model, words) if words else []
    out = [{**row, "input": ws, "prediction": p, "normalized": " ".join(p)}
           for row, ws, p in zip(keep, words, preds)]
    _atomic_write(Path(args.output), _jsonl(out))
    print(f"labeled {len(out)} of {len(rows)} rows")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred_rows = read_jsonl(args.pred)
    gold_rows = read_jsonl(args.gold)
    if len(pred_rows) != len(gold_rows):
        raise RowMismatch(f"{len(pred_rows)} prediction rows vs {len(gold_rows)} gold rows")
    sources, targets, preds = [], [], []
    for i, (p, g) in enumerate(zip(pred_rows, gold_rows)):
        try:
            sources.append(g["input"])
            targets.append(g["output"])
            preds.append(p["prediction"] if "prediction" in p else p["output"])
        except KeyError as exc:
            raise DataError(f"row {i} lacks field {exc.args[0]!r}") from None
    report = evaluate(sources, targets, preds)
    text = json.dumps(report, sort_keys=True, indent=1)
    print(text)
    if args.out:
        _atomic_write(Path(args.out), text + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaknorm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-corpus", help="write a synthetic labeled/unlabeled corpus")
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=10463, help="labeled sentences")
    gen.add_argument("--n-unlabeled", type=int, default=20000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--lexicon", help="lexicon JSON (default: bundled)")
    gen.add_argument("--dict-coverage", type=float, default=0.4)
    gen.set_defaults(func=cmd_gen_corpus)

    tr = sub.add_parser("train", help="run one training regime")
    tr.add_argument("--labeled", required=True)
    tr.add_argument("--unlabeled")
    tr.add_argument("--dictionary", help="dictionary JSON (NSW -> standard word)")
    tr.add_argument("--regex", help="regex rules JSON ([{pattern, replacement}])")
    tr.add_argument("--regime", choices=("student", "self_training", "weak_supervision"))
    tr.add_argument("--seed", type=int)
    tr.add_argument("--config")
    tr.add_argument("--out", required=True)
    tr.add_argument("--iterations", type=int)
    tr.add_argument("--p-diacritic", type=float)
    tr.add_argument("--n-downsample", type=int)
    tr.add_argument("--resume", action="store_true", help="continue from the last checkpoint")
    tr.set_defaults(func=cmd_train)

    lb = sub.add_parser("label", help="normalize a JSONL file with a trained student")
    lb.add_argument("--checkpoint", required=True, help="student.pt or a run directory")
    lb.add_argument("--input", required=True)
    lb.add_argument("--output", required=True)
    lb.set_defaults(func=cmd_label)

    ev = sub.add_parser("evaluate", help="score predictions against gold")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--gold", required=True)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SampleTooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, EmptyDataset, UnknownWord, MaskOverflow, RowMismatch, LengthMismatch,
            FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (WeakNormError, RuntimeError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
