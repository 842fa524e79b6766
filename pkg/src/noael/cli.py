"""Command-line entry point: ``noael analyze | plot | datasets | mvt-check``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, datasets
from .ctp import METHODS, run_analysis
from .datamodel import AnalysisConfig, DataError, EndpointKind, NumericalError, parse_csv
from .mvdist import CorrelationMatrix, NotPSDError, QmcConfig, mvt_cdf

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class _UsageError(Exception):
    pass


def _err(msg: str, code: int) -> int:
    print(json.dumps({"error": msg, "exit_code": code}), file=sys.stderr)
    return code


def _load(args):
    if bool(args.input) == bool(args.dataset):
        raise _UsageError("give exactly one of --input PATH or --dataset NAME")
    if args.dataset:
        name = args.dataset.lower()
        return datasets.load(name), name
    path = Path(args.input)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    if args.endpoint is None:
        raise _UsageError("--endpoint is required with --input")
    ds = parse_csv(path.read_bytes(), args.endpoint, control_label=args.control_label)
    return ds, path.stem


def _add_data_args(p):
    src = p.add_argument_group("data")
    src.add_argument("--input", metavar="PATH", help="CSV file (dose,response or dose,time,status)")
    src.add_argument("--dataset", metavar="NAME", help="bundled dataset: wes, tamh, epi, bronch")
    src.add_argument("--endpoint", choices=[k.value for k in EndpointKind])
    src.add_argument("--control-label", help="dose label coding the control group")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noael", description=__doc__)
    parser.add_argument("--version", action="version", version=f"noael {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="closed-testing NOAEL analysis")
    _add_data_args(a)
    a.add_argument("--method", choices=sorted(METHODS), default=None,
                   help="test family (default: the dataset's own, else ctp-pairwise)")
    a.add_argument("--direction", choices=["greater", "less"], default=None)
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--hc", choices=["none", "hc0", "hc1", "hc2", "hc3"], default="hc3")
    a.add_argument("--k", type=float, default=3.0, help="poly-k exponent")
    a.add_argument("--margin", type=float, default=1.0, help="ratio-to-control margin")
    a.add_argument("--rank-scale", choices=["identity", "logit"], default="identity")
    a.add_argument("--seed", type=int, default=20230101)
    a.add_argument("--qmc-error", type=float, default=1e-5)
    a.add_argument("--output", choices=["json", "tsv"], default="json")
    a.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    a.add_argument("--figure-dir", metavar="DIR",
                   help="also write raw-data and p-value SVG figures into DIR")
    a.add_argument("--full-precision", action="store_true")

    p = sub.add_parser("plot", help="raw-data summary plot (SVG)")
    _add_data_args(p)
    p.add_argument("--out", metavar="PATH", help="SVG path (default: <name>.svg)")

    d = sub.add_parser("datasets", help="list bundled datasets")
    d.add_argument("--json", action="store_true")

    m = sub.add_parser("mvt-check", help="evaluate a multivariate t/normal CDF")
    m.add_argument("--upper", required=True, help="comma-separated upper bounds")
    m.add_argument("--corr", default="0",
                   help="a single equicorrelation, or rows separated by ';'")
    m.add_argument("--df", type=int, default=0, help="0 = multivariate normal")
    m.add_argument("--seed", type=int, default=20230101)
    m.add_argument("--qmc-error", type=float, default=1e-5)
    return parser


def _cmd_analyze(args) -> int:
    ds, name = _load(args)
    info = datasets.BUNDLED.get(name) if args.dataset else None
    method = args.method or (info.method if info else
                             {"score": "ctp-nonparametric", "incidence": "ctp-poly3"}.get(
                                 ds.kind.value, "ctp-pairwise"))
    direction = args.direction or (info.direction if info else "greater")
    cfg = AnalysisConfig(alpha=args.alpha, direction=direction, method=method,
                         qmc_seed=args.seed, qmc_error_target=args.qmc_error,
                         hc_kind=args.hc, poly_k=args.k, margin=args.margin,
                         bm_scale=args.rank_scale)
    result = run_analysis(ds, cfg, dataset_id=name)
    doc = result.report
    text = doc.to_json(args.full_precision) + "\n" if args.output == "json" else doc.to_tsv(args.full_precision)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.figure_dir:
        from .plotting import plot_dataset, plot_pvalues

        fdir = Path(args.figure_dir)
        fdir.mkdir(parents=True, exist_ok=True)
        plot_dataset(ds, fdir / f"{name}_raw.svg", title=name)
        plot_pvalues(doc, fdir / f"{name}_{method}_pvalues.svg")
    return EXIT_OK


def _cmd_plot(args) -> int:
    ds, name = _load(args)
    from .plotting import plot_dataset

    out = Path(args.out or f"{name}.svg")
    plot_dataset(ds, out, title=name)
    print(out)
    return EXIT_OK


def _cmd_datasets(args) -> int:
    items = datasets.available()
    if args.json:
        print(json.dumps([
            {"name": i.name, "endpoint": i.endpoint.value, "n": i.n, "direction": i.direction,
             "method": i.method, "description": i.description, "source": i.source}
            for i in items
        ], indent=2))
    else:
        for i in items:
            print(f"{i.name:8s} n={i.n:<4d} {i.endpoint.value:11s} {i.description}  [{i.source}]")
        if datasets.bronch_path() is None:
            print(f"(bronch: not loaded; set ${datasets.BRONCH_ENV} to its CSV)")
    return EXIT_OK


def _parse_corr(text: str, dim: int) -> CorrelationMatrix:
    if ";" in text:
        rows = [[float(v) for v in r.split(",")] for r in text.split(";")]
        return CorrelationMatrix(np.array(rows))
    return CorrelationMatrix.equicorrelated(dim, float(text))


def _cmd_mvt_check(args) -> int:
    upper = [float(v) for v in args.upper.split(",")]
    corr = _parse_corr(args.corr, len(upper))
    res = mvt_cdf(upper, corr, args.df, QmcConfig(error_target=args.qmc_error, seed=args.seed))
    print(json.dumps({"value": res.value, "error_estimate": res.error_estimate,
                      "points_used": res.points_used, "converged": res.converged}))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    handler = {
        "analyze": _cmd_analyze,
        "plot": _cmd_plot,
        "datasets": _cmd_datasets,
        "mvt-check": _cmd_mvt_check,
    }[args.command]
    try:
        return handler(args)
    except _UsageError as e:
        parser.print_usage(sys.stderr)
        return _err(str(e), EXIT_USAGE)
    except (DataError, OSError) as e:
        return _err(str(e), EXIT_DATA)
    except (NumericalError, NotPSDError) as e:
        return _err(str(e), EXIT_NUMERIC)
    except ValueError as e:
        return _err(str(e), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
