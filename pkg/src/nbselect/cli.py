"""Thin command-line client for the scoring service.

Every command builds a request, sends it to the service (in-process by
default, or a remote base URL via ``--server``), and prints the JSON
response on stdout.  Diagnostics and summaries go to stderr, so stdout is
always one valid JSON document.  Exit codes: 0 success, 1 runtime/data
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_CRITERIA_HELP = "uevi, sevi-approx, sevi-exact, preq, preq10, loocv, fcv, fcv10, trloss, bic"


def _request(server: str | None, path: str, payload: dict) -> tuple[int, dict]:
    if server:
        import httpx

        resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        return resp.status_code, resp.json()
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app

    with TestClient(app, raise_server_exceptions=False) as client:
        resp = client.post(path, json=payload)
        return resp.status_code, resp.json()


def _data_payload(args: argparse.Namespace) -> dict:
    payload = {
        "class_column": args.class_column,
        "bins": args.bins,
        "missing_markers": args.missing_markers.split(",") if args.missing_markers else ["?", ""],
        "discretize_seed": args.discretize_seed,
    }
    if args.server:
        # remote service: ship file content, keep the server stateless
        payload["csv_text"] = Path(args.data).read_text(encoding="utf-8")
    else:
        payload["path"] = args.data
    return payload


def _emit(status: int, body: dict) -> int:
    if status == 200:
        print(json.dumps(body, indent=2))
        return EXIT_OK
    detail = body.get("detail", body)
    print(f"error: {detail}", file=sys.stderr)
    return EXIT_USAGE if status == 422 else EXIT_RUNTIME


def _criterion_options(args: argparse.Namespace) -> dict:
    return {
        "criterion": args.criterion,
        "loss": args.loss,
        "folds": args.folds,
        "orderings": args.orderings,
        "seed": args.seed,
    }


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file (header line first)")
    p.add_argument("--class", "--class-column", dest="class_column", required=True,
                   help="class column name or index")
    p.add_argument("--bins", type=int, default=5, help="k-means bin count for numeric columns")
    p.add_argument("--missing-markers", default="?,",
                   help="comma-separated cell markers treated as missing")
    p.add_argument("--discretize-seed", type=int, default=0)


def _add_criterion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--criterion", required=True, help=f"one of: {_CRITERIA_HELP}")
    p.add_argument("--loss", choices=["zero_one", "log"], default=None,
                   help="loss for loss-parameterized criteria (default: log)")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--orderings", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def _default_workers() -> int | None:
    env = os.environ.get("NBSELECT_WORKERS")
    return int(env) if env else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nbselect",
        description="Feature-subset selection for pruned naive Bayes models",
    )
    parser.add_argument("--version", action="version", version=f"nbselect {__version__}")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    parser.add_argument("--config", default=None,
                        help="flat key=value file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="prepare a dataset and emit the encoded CSV")
    _add_data_flags(p)
    p.add_argument("--out", default=None, help="write the prepared CSV here")

    p = sub.add_parser("score", help="score one structure under a criterion")
    _add_data_flags(p)
    _add_criterion_flags(p)
    p.add_argument("--structure", required=True,
                   help="canonical integer or comma-separated feature names")

    p = sub.add_parser("select", help="score all structures, print the best")
    _add_data_flags(p)
    _add_criterion_flags(p)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--max-features", type=int, default=14)
    p.add_argument("--table-csv", default=None, help="write the full score table CSV here")

    p = sub.add_parser("experiment", help="run the repeated split/select/evaluate protocol")
    _add_data_flags(p)
    p.add_argument("--criteria", required=True,
                   help=f"comma-separated criterion names ({_CRITERIA_HELP})")
    p.add_argument("--loss", choices=["zero_one", "log"], default=None,
                   help="pin the selection loss (default: match the evaluated loss)")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--sample", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--max-features", type=int, default=14)
    p.add_argument("--redraw-sample", action="store_true",
                   help="redraw the subsample each repetition")
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.add_argument("--csv", default=None, help="write a flat criterion,loss,gain CSV here")

    p = sub.add_parser("compare", help="average gains across report files")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--out", default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _apply_defaults(parser: argparse.ArgumentParser, defaults: dict) -> None:
    for action in parser._actions:  # noqa: SLF001 - argparse has no public defaults API
        if action.dest in defaults:
            value = defaults[action.dest]
            if action.type is int:
                action.default = int(value)
            elif isinstance(action.default, bool) or isinstance(action.const, bool):
                action.default = value.lower() in ("1", "true", "yes")
            else:
                action.default = value
            action.required = False


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load key=value defaults from --config into every subcommand; explicit
    flags still win because argparse only falls back to defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    defaults = {}
    for line in Path(argv[idx + 1]).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        defaults[key.strip().replace("-", "_")] = value.strip()
    _apply_defaults(parser, defaults)
    if parser._subparsers:  # noqa: SLF001
        for sub_action in parser._subparsers._group_actions:
            for sub_parser in getattr(sub_action, "choices", {}).values():
                _apply_defaults(sub_parser, defaults)
    return argv


def _print_summary(report: dict) -> None:
    def fmt(x: float | None) -> str:
        return f"{x:>12.2f}" if isinstance(x, (int, float)) and x is not None else f"{'n/a':>12}"

    print(
        f"{'criterion':<14}{'gain 0/1 %':>12}{'gain log %':>12}{'loss 0/1':>12}{'loss log':>12}",
        file=sys.stderr,
    )
    for label, agg in report.get("aggregates", {}).items():
        line = (
            f"{label:<14}"
            + fmt(agg.get("gain_01"))
            + fmt(agg.get("gain_log"))
            + f"{agg.get('mean_loss_01', float('nan')):>12.4f}"
            + f"{agg.get('mean_loss_log', float('nan')):>12.4f}"
        )
        print(line, file=sys.stderr)


def _flat_gain_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["criterion", "loss", "gain"])
    for label, agg in report.get("aggregates", {}).items():
        for loss, tag in (("zero_one", "01"), ("log", "log")):
            gain = agg.get(f"gain_{tag}")
            writer.writerow([label, loss, "" if gain is None else gain])
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(parser, argv)
    except OSError as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    try:
        if args.command == "discretize":
            status, body = _request(args.server, "/discretize", {"data": _data_payload(args)})
            if status == 200 and args.out:
                Path(args.out).write_text(body["csv_text"], encoding="utf-8")
            return _emit(status, body)

        if args.command == "score":
            payload = {
                "data": _data_payload(args),
                "options": _criterion_options(args),
                "structure": args.structure,
            }
            return _emit(*_request(args.server, "/score", payload))

        if args.command == "select":
            payload = {
                "data": _data_payload(args),
                "options": _criterion_options(args),
                "workers": args.workers,
                "top": args.top,
                "max_features": args.max_features,
                "include_table_csv": args.table_csv is not None,
            }
            status, body = _request(args.server, "/select", payload)
            if status == 200 and args.table_csv:
                Path(args.table_csv).write_text(body.get("table_csv") or "", encoding="utf-8")
                body["table_csv"] = args.table_csv
            return _emit(status, body)

        if args.command == "experiment":
            payload = {
                "data": _data_payload(args),
                "criteria": [c for c in args.criteria.split(",") if c.strip()],
                "loss": args.loss,
                "repetitions": args.reps,
                "sample_size": args.sample,
                "seed": args.seed,
                "workers": args.workers,
                "max_features": args.max_features,
                "redraw_per_repetition": args.redraw_sample,
            }
            status, body = _request(args.server, "/experiment", payload)
            if status == 200:
                if args.out:
                    Path(args.out).write_text(json.dumps(body, indent=2), encoding="utf-8")
                if args.csv:
                    Path(args.csv).write_text(_flat_gain_csv(body), encoding="utf-8")
                _print_summary(body)
            return _emit(status, body)

        if args.command == "compare":
            reports = [json.loads(Path(p).read_text(encoding="utf-8")) for p in args.reports]
            status, body = _request(args.server, "/compare", {"reports": reports})
            if status == 200 and args.out:
                Path(args.out).write_text(json.dumps(body, indent=2), encoding="utf-8")
            return _emit(status, body)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_RUNTIME
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
