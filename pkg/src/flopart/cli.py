"""Command-line interface.

Exit codes: 0 success, 1 validation or usage error, 2 infeasible labels.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from flopart import __version__
from flopart.data import DataFormatError, read_coverage, write_coverage
from flopart.dp_engine import InfeasibleLabelsError, fit
from flopart.evaluation import label_errors, label_errors_genomic, parse_penalty_grid
from flopart.labels import LabelError, LabelKind, LabelSet, read_labels, write_labels

log = logging.getLogger("flopart")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _linear_grid(text):
    try:
        lo, hi, count = text.split(":")
        return np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI:COUNT, got {text!r}")


def _load(args):
    data = read_coverage(args.data, args.format)
    if getattr(args, "labels", None):
        index_mode = args.index_labels or data.coords is None
        labels = read_labels(args.labels, data, index_mode=index_mode)
    else:
        labels = LabelSet.empty(data.n)
    return data, labels


def cmd_fit(args):
    from flopart import plots
    from flopart.report import write_segments

    data, labels = _load(args)
    result = fit(data, labels, args.penalty)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_segments(result, data, out / "segments.tsv")
    if args.plot:
        plots.plot_segmentation(data, result, labels, out / "segments.png",
                                title=f"penalty={args.penalty:g}")
    print(f"{len(result.segments)} segments, {len(result.peaks)} peaks, "
          f"penalized cost {result.penalized_cost:.6f}")
    return EXIT_OK


def cmd_grid(args):
    from flopart import plots
    from flopart.corpus import grid_errors
    from flopart.report import write_grid, write_segments

    data, labels = _load(args)
    penalties = parse_penalty_grid(args.penalties)
    constraint = labels if args.algorithm == "flopart" else None
    out = Path(args.out)
    seg_dir = out / "segments"
    seg_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for k, (lam, result, report) in enumerate(grid_errors(data, labels, penalties, constraint), 1):
        write_segments(result, data, seg_dir / f"penalty_{k:03d}.tsv")
        for metric, value in (("fp", report.fp), ("fn", report.fn),
                              ("errors", report.errors), ("peaks", len(result.peaks))):
            rows.append({"penalty": lam, "metric": metric, "value": value})
    write_grid(rows, out / "grid.tsv")
    if args.plot:
        plots.plot_grid(rows, out / "grid.png")
    best = min((r for r in rows if r["metric"] == "errors"), key=lambda r: r["value"])
    print(f"{len(penalties)} penalties; fewest errors {best['value']} at penalty {best['penalty']:g}")
    return EXIT_OK


def cmd_evaluate(args):
    from flopart.report import read_segments, segment_peaks, write_error_report

    genomic, rows = read_segments(args.segments)
    peaks = segment_peaks(rows)
    if genomic:
        regions = _read_genomic_regions(args.labels)
        report = label_errors_genomic(peaks, regions)
    else:
        report = label_errors(peaks, read_labels(args.labels, index_mode=True, n=rows[-1][2]))
    if args.out:
        write_error_report(report, args.out)
    print(f"fp\t{report.fp}\nfn\t{report.fn}\nerrors\t{report.errors}\n"
          f"possible_fp\t{report.possible_fp}\npossible_fn\t{report.possible_fn}")
    return EXIT_OK


def _read_genomic_regions(path):
    import csv

    regions = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header != ["chrom", "start", "end", "type"]:
            raise LabelError("labels header must be chrom start end type")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                regions.append((rec[0], int(rec[1]), int(rec[2]), LabelKind.parse(rec[3])))
            except (ValueError, IndexError) as err:
                if isinstance(err, LabelError):
                    raise
                raise LabelError(f"malformed line {lineno}") from None
    return regions


def cmd_roc(args):
    from flopart import plots
    from flopart.corpus import penalty_roc, read_manifest
    from flopart.report import write_roc

    corpus = read_manifest(args.manifest, args.format)
    res = penalty_roc(corpus, args.method, seed=args.seed, test_fold=args.test_fold,
                      grid=parse_penalty_grid(args.penalties), constants=args.constants,
                      algorithm=args.algorithm)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_roc(res.curve, out / "roc.tsv")
    with open(out / "predictions.tsv", "w") as fh:
        fh.write("sequence_id\tlog_penalty\n")
        for name, f in res.predictions.items():
            fh.write(f"{name}\t{f!r}\n")
    if args.plot:
        plots.plot_roc(res.curve, out / "roc.png",
                       title=f"{args.method} / {args.algorithm}: AUC = {res.curve.auc:.3f}")
    for name in res.skipped:
        log.warning("skipped %s: a fold has no labels", name)
    print(f"auc\t{res.curve.auc!r}")
    return EXIT_OK


def cmd_bench(args):
    from flopart import plots
    from flopart.bench import bench, loglog_slope
    from flopart.report import write_bench

    records = bench(args.sizes, args.reps, args.seed)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_bench(records, out / "bench.tsv")
        if args.plot:
            plots.plot_bench(records, out / "bench.png")
    print("n\talgorithm\tseconds\tpieces_max")
    for r in records:
        print(f"{r.n}\t{r.algorithm}\t{r.seconds:.6f}\t{r.pieces_max}")
    if len(set(args.sizes)) > 1:
        for name in ("FLOPART", "GFPOP"):
            print(f"# log-log slope {name}: {loglog_slope(records, name):.3f}")
    return EXIT_OK


def cmd_oracle_check(args):
    from flopart.checks import oracle_check

    summary = oracle_check(args.trials, args.n_max, args.seed, args.lambdas)
    for line in summary.failures[:10]:
        print(line, file=sys.stderr)
    print(f"{summary.agree}/{summary.trials} agree")
    return EXIT_OK if summary.agree == summary.trials else EXIT_INVALID


def cmd_synth(args):
    from flopart.corpus import write_manifest
    from flopart.synthetic import generate_synthetic

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(args.count):
        data, labels = generate_synthetic(args.n, args.peaks, args.background_mean,
                                          args.peak_mean, args.seed + k)
        name = f"seq{k + 1:03d}"
        write_coverage(data, out / f"{name}.bedgraph")
        write_labels(labels, out / f"{name}.labels.tsv", data)
        rows.append((name, f"{name}.bedgraph", f"{name}.labels.tsv"))
    write_manifest(rows, out / "manifest.tsv")
    print(f"wrote {args.count} sequence(s) to {out}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="flopart", description="Label-constrained up-down peak detection.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def data_args(sp, labels_required=False):
        sp.add_argument("--data", required=True)
        sp.add_argument("--labels", required=labels_required)
        sp.add_argument("--format", choices=("bedgraph", "counts"), default="bedgraph")
        sp.add_argument("--index-labels", action="store_true",
                        help="labels file uses 1-based lo/hi indices")

    def plot_arg(sp):
        sp.add_argument("--no-plot", dest="plot", action="store_false",
                        help="skip the PNG figure")

    sp = sub.add_parser("fit", help="segment one sequence")
    data_args(sp)
    sp.add_argument("--penalty", type=float, required=True)
    sp.add_argument("--out", required=True)
    plot_arg(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("grid", help="label errors over a penalty grid")
    data_args(sp, labels_required=True)
    sp.add_argument("--penalties", default="1e-5:1e6:23log")
    sp.add_argument("--algorithm", choices=("gfpop", "flopart"), default="gfpop")
    sp.add_argument("--out", required=True)
    plot_arg(sp)
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("evaluate", help="score a segments file against labels")
    sp.add_argument("--segments", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--out", help="write the per-label report here")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("roc", help="penalty learning and ROC analysis over a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--method", choices=("bic", "constant", "linear"), required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=("bedgraph", "counts"), default="bedgraph")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--test-fold", type=int, choices=(1, 2), default=1)
    sp.add_argument("--algorithm", choices=("flopart", "gfpop"), default="flopart")
    sp.add_argument("--penalties", default="1e-5:1e6:23log")
    sp.add_argument("--constants", type=_linear_grid, default=None,
                    help="offsets c as LO:HI:COUNT (default -15:15:61)")
    plot_arg(sp)
    sp.set_defaults(func=cmd_roc)

    sp = sub.add_parser("bench", help="runtime scaling on synthetic data")
    sp.add_argument("--sizes", type=_int_list, default=[1000, 10000, 100000])
    sp.add_argument("--reps", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    plot_arg(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("oracle-check", help="compare against exhaustive search")
    sp.add_argument("--trials", type=int, default=500)
    sp.add_argument("--n-max", type=int, default=10)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--lambdas", type=_float_list, default=[0.0, 0.5, 2.0, 10.0])
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("synth", help="write synthetic coverage, labels and a manifest")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--peaks", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=1, help="number of sequences")
    sp.add_argument("--background-mean", type=float, default=1.0)
    sp.add_argument("--peak-mean", type=float, default=10.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as err:
        # --help / --version
        return int(err.code or 0)
    try:
        return args.func(args)
    except InfeasibleLabelsError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (LabelError, DataFormatError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
