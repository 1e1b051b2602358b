"""Command-line front end.

Exit codes: 0 ok, 1 data error, 2 config error, 3 resource refusal.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluation, metafeature, sht
from .bitcode import ContractError
from .datasets import (
    DataError,
    atomic_write,
    iter_lines,
    parse_record,
    read_dataset,
    render_record,
    to_points,
)
from .labels import EmptyDistributionError, render

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _emit(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def _config(args) -> sht.TrainConfig:
    try:
        return sht.TrainConfig(
            args.f,
            args.radius,
            sht.ZetaPolicy.parse(args.zeta),
            storage=args.storage,
            memory_budget=args.memory_budget,
        )
    except ContractError as exc:
        raise ConfigError(str(exc)) from None


def _fallback(text: str) -> sht.Fallback:
    try:
        return sht.Fallback.parse(text)
    except ContractError as exc:
        raise ConfigError(str(exc)) from None


def _load_model(path: str, args) -> sht.SupervisedHashTable:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read model: {exc}") from None
    try:
        return sht.load(data, storage=args.storage, memory_budget=args.memory_budget)
    except sht.ModelLoadError as exc:
        raise DataError(f"{path}: {exc}") from None


# raw CSV labels ----------------------------------------------------------


def _label_parts(value: str) -> list[tuple[str, float]]:
    parts = []
    for item in value.split(","):
        name, sep, w = item.strip().partition(":")
        parts.append((name.strip(), float(w) if sep else 1.0))
    return parts


def _class_names(records, label_col: str, given: str | None) -> list[str]:
    if given:
        return [c.strip() for c in given.split(",")]
    names = set()
    for i, r in enumerate(records, start=2):
        value = r.get(label_col)
        if value is None or not value.strip():
            raise DataError(f"row {i}: empty label column {label_col!r}")
        names.update(n for n, _ in _label_parts(value))
    if all(n.isdigit() for n in names):
        return [str(i) for i in range(max(int(n) for n in names) + 1)]
    return sorted(names)


def _csv_labels(records, label_col: str, classes: list[str]) -> list[list[float]]:
    index = {c: i for i, c in enumerate(classes)}
    out = []
    for i, r in enumerate(records, start=2):
        try:
            w = [0.0] * max(2, len(classes))
            for name, weight in _label_parts(r.get(label_col) or ""):
                w[index[name]] += weight
        except KeyError as exc:
            raise DataError(f"row {i}: unknown class {exc.args[0]!r}") from None
        except ValueError:
            raise DataError(f"row {i}: bad label {r.get(label_col)!r}") from None
        if not any(w):
            raise DataError(f"row {i}: label has no positive weight")
        out.append(w)
    return out


def _read_labeled_csv(args):
    try:
        header, records = metafeature.read_csv(args.input)
    except (OSError, metafeature.EncodingError) as exc:
        raise DataError(str(exc)) from None
    if not records:
        raise DataError(f"{args.input}: no data rows")
    if args.label_col not in header:
        raise DataError(f"label column {args.label_col!r} not in header {header}")
    classes = _class_names(records, args.label_col, args.classes)
    return header, records, classes, _csv_labels(records, args.label_col, classes)


# commands ----------------------------------------------------------------


def cmd_make_template(args) -> int:
    header, records, classes, labels = _read_labeled_csv(args)
    columns = [c for c in header if c != args.label_col]
    candidates = metafeature.auto_candidates(records, columns, top_k=args.top_k)
    try:
        template = metafeature.rank_and_select(candidates, records, labels, args.f, args.tolerance)
    except metafeature.InsufficientFeaturesError as exc:
        raise DataError(str(exc)) from None
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    _emit(args.output, template.to_text())
    print(f"classes: {','.join(classes)}", file=sys.stderr)
    return EXIT_OK


def cmd_encode(args) -> int:
    try:
        template = metafeature.MetaFeatureTemplate.from_text(Path(args.template).read_text())
    except (OSError, metafeature.TemplateFormatError) as exc:
        raise DataError(f"{args.template}: {exc}") from None
    if args.label_col:
        _, records, _, labels = _read_labeled_csv(args)
    else:
        try:
            _, records = metafeature.read_csv(args.input)
        except (OSError, metafeature.EncodingError) as exc:
            raise DataError(str(exc)) from None
        labels = None
    lines = []
    for i, record in enumerate(records):
        try:
            code = metafeature.encode(template, record)
        except metafeature.EncodingError as exc:
            raise DataError(f"row {i + 2}: {exc}") from None
        lines.append(render_record(code, labels[i]) if labels else code.to_binary())
    _emit(args.output, "".join(line + "\n" for line in lines))
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config(args)
    try:
        records = read_dataset(args.input, width=config.f)
    except OSError as exc:
        raise DataError(str(exc)) from None
    if not records:
        raise DataError(f"{args.input}: empty dataset")
    points, k = to_points(records)
    table = sht.build(points, config, n_classes=k, threads=args.threads)
    atomic_write(args.output, sht.save(table))
    print(f"phi={table.trained_count} entries={table.entry_count} "
          f"storage={table.storage} build_seconds={table.build_seconds:.6f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    table = _load_model(args.model, args)
    fallback = _fallback(args.fallback)
    out, errors = [], 0
    try:
        lines = list(iter_lines(args.input))
    except OSError as exc:
        raise DataError(str(exc)) from None
    for lineno, line in lines:
        try:
            code = parse_record(lineno, line, table.f, need_labels=False).code
        except DataError as exc:
            print(f"error: {exc}", file=sys.stderr)
            errors += 1
            continue
        pred = table.query(code, fallback)
        dist = render(pred.distribution) if pred.distribution else "UNMATCHED"
        radius = "-" if pred.fallback_radius_used is None else str(pred.fallback_radius_used)
        out.append(f"{code.to_binary()}\t{int(pred.matched)}\t{dist}\t{radius}\n")
    _emit(args.output, "".join(out))
    return EXIT_DATA if errors else EXIT_OK


def cmd_evaluate(args) -> int:
    table = _load_model(args.model, args)
    fallback = _fallback(args.fallback)
    try:
        records = read_dataset(args.input, width=table.f)
    except OSError as exc:
        raise DataError(str(exc)) from None
    if not records:
        raise DataError(f"{args.input}: empty test set")
    points, _ = to_points(records, k=table.n_classes)
    report = evaluation.evaluate(table, points, fallback, threads=args.threads)
    print(report.to_text())
    if args.csv:
        atomic_write(args.csv, report.to_csv())
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        phis = [int(p) for p in args.phi.split(",")]
    except ValueError:
        raise ConfigError(f"--phi must be comma-separated counts, got {args.phi!r}") from None
    if any(p < 1 for p in phis) or args.queries < 1:
        raise ConfigError("--phi entries and --queries must be positive")
    _config(args)
    rows = evaluation.bench_scaling(
        args.f,
        args.radius,
        phis,
        args.queries,
        seed=args.seed,
        n_classes=args.classes,
        storage=args.storage,
        memory_budget=args.memory_budget,
    )
    _emit(args.output, evaluation.bench_to_csv(rows))
    return EXIT_OK


# parser ------------------------------------------------------------------


def _add_train_flags(p, f_default=None, storage="auto"):
    p.add_argument("--f", type=int, required=f_default is None, default=f_default, help="codeword width in bits")
    p.add_argument("--radius", type=int, default=1, help="Hamming radius e")
    p.add_argument("--zeta", default="const:1", help="const:<v> or decay:<v>")
    _add_storage_flags(p, storage)


def _add_storage_flags(p, storage="auto"):
    p.add_argument("--storage", choices=sht.STORAGE_MODES, default=storage)
    p.add_argument("--memory-budget", type=int, default=sht.DEFAULT_MEMORY_BUDGET, help="bytes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fslbm", description="Fuzzy supervised learning over binary meta-features")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-template", help="rank auto-generated binary rules on a labeled CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=1.0, help="max per-rule error kept when enough rules pass")
    p.add_argument("--top-k", type=int, default=3, help="equality rules per categorical column")
    p.add_argument("--classes", help="comma-separated class names in id order")
    p.add_argument("--output")
    p.set_defaults(func=cmd_make_template)

    p = sub.add_parser("encode", help="turn CSV rows into codewords with a template")
    p.add_argument("--template", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--label-col")
    p.add_argument("--classes", help="comma-separated class names in id order")
    p.add_argument("--output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="build a supervised hash table from a codeword dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_train_flags(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; training is deterministic")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="query a model with codewords")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--fallback", default="none", help="none or expand:N")
    p.add_argument("--output")
    _add_storage_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on a labeled codeword dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--fallback", default="none", help="none or expand:N")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--csv", help="also write the report as CSV")
    _add_storage_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="build/query timing on seeded synthetic data")
    _add_train_flags(p, f_default=24, storage="sparse")
    p.set_defaults(radius=2)
    p.add_argument("--phi", default="1000,2000,4000,8000", help="comma-separated training sizes")
    p.add_argument("--queries", type=int, default=10_000)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except sht.BudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DataError, ContractError, EmptyDistributionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
