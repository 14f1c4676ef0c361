"""Batch entry points: run one experiment, run replication batches, serve the
HTTP API, and build the per-policy comparison report with SVG charts."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

from . import config as config_mod
from .measurements import MetricsReport, compare_policies, group_reports
from .runner import dump_csv, run_experiment, run_replications

METRIC_COLUMNS = MetricsReport.METRIC_FIELDS


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, config_mod.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caisim",
        description="Collaborative AI system simulator and recovery-policy lab")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and write CSVs")
    run_p.add_argument("-c", "--config", required=True, help="config JSON path")
    run_p.add_argument("-o", "--out", required=True, help="output directory")
    run_p.set_defaults(func=cmd_run)

    rep_p = sub.add_parser("replicate", help="run seeded replications")
    rep_p.add_argument("-c", "--config", required=True)
    rep_p.add_argument("-n", "--count", type=int, required=True)
    rep_p.add_argument("-o", "--out", required=True)
    rep_p.set_defaults(func=cmd_replicate)

    serve_p = sub.add_parser("serve", help="serve the HTTP control plane")
    serve_p.add_argument("-p", "--port", type=int,
                         default=int(os.environ.get("CAISIM_PORT", "8000")))
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--ui", default=None, help="static dashboard directory")
    serve_p.set_defaults(func=cmd_serve)

    report_p = sub.add_parser("report", help="aggregate metrics.csv files into "
                                             "a comparison table and SVG charts")
    report_p.add_argument("-i", "--input", required=True,
                          help="directory searched recursively for metrics.csv")
    report_p.add_argument("-o", "--out", required=True,
                          help="output CSV path (SVGs are written alongside)")
    report_p.set_defaults(func=cmd_report)
    return parser


def _out_dir(args) -> Path:
    return Path(os.environ.get("CAISIM_OUT_DIR", "")) / args.out \
        if os.environ.get("CAISIM_OUT_DIR") else Path(args.out)


def cmd_run(args) -> int:
    cfg = config_mod.load(args.config)
    result = run_experiment(cfg)
    paths = dump_csv(result, _out_dir(args))
    print(f"run finished: {result.completion}, {len(result.records)} iterations")
    for name, path in paths.items():
        print(f"  {path}")
    return 0


def cmd_replicate(args) -> int:
    if args.count < 1:
        print("error: replication count must be >= 1", file=sys.stderr)
        return 2
    cfg = config_mod.load(args.config)
    results, comparison = run_replications(cfg, args.count)
    out = _out_dir(args)
    for i, result in enumerate(results):
        dump_csv(result, out / f"rep_{i:03d}")
    _write_comparison(out / "comparison.csv", comparison)
    print(f"{args.count} replications of policy {cfg.policy!r} written to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    reports = _collect_reports(Path(args.input))
    if not reports:
        print(f"error: no metrics.csv rows found under {args.input}",
              file=sys.stderr)
        return 1
    comparison = compare_policies(group_reports(reports))
    out = Path(args.out)
    _write_comparison(out, comparison)
    for metric in METRIC_COLUMNS:
        svg_path = out.with_name(f"{out.stem}_{metric}.svg")
        svg_path.write_text(_bar_chart(metric, comparison))
    print(f"comparison over {len(reports)} reports written to {out}")
    return 0


def _collect_reports(root: Path) -> list[MetricsReport]:
    reports = []
    candidates = [root] if root.name == "metrics.csv" else \
        sorted(root.rglob("metrics.csv"))
    for path in candidates:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                reports.append(MetricsReport(
                    policy=row["policy"], seed=int(row["seed"]),
                    cycle=int(row["cycle"]),
                    duration_ratio=float(row["duration_ratio"]),
                    fluctuation_ratio=float(row["fluctuation_ratio"]),
                    co2_mean=float(row["co2_mean"]),
                    human_dependency=float(row["human_dependency"])))
    return reports


def _write_comparison(path: Path, comparison: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = ["policy", "runs"] + list(METRIC_COLUMNS)
    extra = sorted({k for row in comparison for k in row} - set(columns))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(columns + extra)
    for row in comparison:
        writer.writerow([_fmt(row.get(c, "")) for c in columns + extra])
    path.write_text(buf.getvalue(), newline="")


def _fmt(value) -> str:
    return f"{value:.9g}" if isinstance(value, float) else str(value)


def _bar_chart(metric: str, comparison: list[dict],
               width: int = 480, height: int = 280) -> str:
    """Minimal standalone SVG bar chart of one metric across policies."""
    margin, bottom = 50, 40
    values = [row[metric] for row in comparison]
    labels = [row["policy"] for row in comparison]
    top = max(values) if values and max(values) > 0 else 1.0
    plot_h = height - bottom - 20
    n = len(values)
    slot = (width - margin - 10) / max(n, 1)
    bars = []
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * (value / top)
        x = margin + i * slot + slot * 0.15
        y = 20 + plot_h - h
        bars.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{slot * 0.7:.1f}" '
                    f'height="{h:.1f}" fill="#4878a8"/>')
        bars.append(f'<text x="{x + slot * 0.35:.1f}" y="{height - 22}" '
                    f'text-anchor="middle" font-size="11">{label}</text>')
        bars.append(f'<text x="{x + slot * 0.35:.1f}" y="{y - 4:.1f}" '
                    f'text-anchor="middle" font-size="10">{value:.3g}</text>')
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}">'
            f'<text x="{width / 2}" y="14" text-anchor="middle" '
            f'font-size="13">{metric}</text>'
            f'<line x1="{margin}" y1="{20 + plot_h}" x2="{width - 10}" '
            f'y2="{20 + plot_h}" stroke="#333"/>'
            + "".join(bars) + "</svg>\n")


if __name__ == "__main__":
    sys.exit(main())
