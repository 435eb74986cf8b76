"""Command-line surface: reproducible file-in/file-out analyses.

Commands: ingest, stats, density, test, appraise, stress, grid, contingency,
report. Every run writes its JSON/CSV artifacts plus a run manifest (command
line, input digests, seed, version, timestamp) into the --out directory.
Exit codes: 0 success, 2 validation error, 3 computation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import secrets
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, charts, datasets
from .cashflow import appraise, load_model, payoff_curve
from .errors import ComputeError, InputError
from .refclass import (
    ReferenceClass,
    cost_overrun_ratio,
    decade_label,
    group_stats,
    read_records_csv,
    schedule_slippage,
    summarize,
)
from .stats import kde, mann_whitney_u, one_way_f, overrun_bias_samples, trend_f
from .stress import StressConfig, run_stress, sensitivity_grid, size_contingency

_GROUP_KEY_MAP = {"region": "region", "type": "project_type", "decade": "decade"}


@dataclass(frozen=True, slots=True)
class RunManifest:
    """Provenance record written next to every command's artifacts."""

    command: tuple[str, ...]
    inputs: dict[str, str]  # path -> sha256 of content
    seed: int | None
    version: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "command": list(self.command),
            "inputs": dict(self.inputs),
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_dict(doc: dict) -> "RunManifest":
        return RunManifest(
            command=tuple(doc["command"]),
            inputs=dict(doc["inputs"]),
            seed=doc["seed"],
            version=doc["version"],
            timestamp=doc["timestamp"],
        )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_manifest(args, command: str, inputs: list[Path], seed: int | None = None) -> None:
    manifest = RunManifest(
        command=tuple(getattr(args, "argv", None) or [command]),
        inputs={str(p): _sha256(p) for p in inputs},
        seed=seed,
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    _write_json(_out_dir(args) / f"manifest-{command}.json", manifest.to_dict())


def _load_records(args) -> tuple[ReferenceClass, Path]:
    path = Path(args.records)
    if not path.is_file():
        raise InputError(f"records file not found: {path}")
    result = read_records_csv(path, strict=args.strict)
    return result.reference_class, path


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args) -> None:
    path = Path(args.records)
    if not path.is_file():
        raise InputError(f"records file not found: {path}")
    result = read_records_csv(path, strict=args.strict)
    out = _out_dir(args)
    _write_json(
        out / "ingest.json",
        {
            "source": str(path),
            "label": result.reference_class.label,
            "n_accepted": result.n_accepted,
            "n_skipped": result.n_skipped,
            "errors": [
                {"row": e.row, "field": e.field, "message": e.message} for e in result.errors
            ],
        },
    )
    _emit_manifest(args, "ingest", [path])
    print(f"ingested {result.n_accepted} records ({result.n_skipped} skipped)")


def cmd_stats(args) -> None:
    ref, path = _load_records(args)
    thresholds = tuple(args.threshold or ())
    out = _out_dir(args)
    doc: dict = {"source": str(path), "metric": args.metric, "thresholds": list(thresholds)}
    if args.group:
        key = _GROUP_KEY_MAP[args.group]
        doc["group_by"] = key
        doc["groups"] = {
            k: s.to_dict() for k, s in group_stats(ref, key, args.metric, thresholds).items()
        }
    else:
        doc["summary"] = summarize(ref, args.metric, thresholds).to_dict()
    _write_json(out / "stats.json", doc)
    _emit_manifest(args, "stats", [path])
    print(f"stats written for {len(ref)} records")


def cmd_density(args) -> None:
    ref, path = _load_records(args)
    trace = kde(ref.ratios(args.metric), bandwidth=args.bandwidth)
    out = _out_dir(args)
    csv_path = out / "density.csv"
    lines = ["value,density"] + [f"{v!r},{d!r}" for v, d in trace.to_csv_rows()]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_json(
        out / "density.json",
        {
            "source": str(path),
            "metric": args.metric,
            "n": len(ref.ratios(args.metric)),
            "bandwidth": trace.bandwidth,
            "grid_points": len(trace.grid),
            "csv": csv_path.name,
        },
    )
    if args.format == "svg":
        svg = charts.line_chart(
            [(f"{args.metric} ratio density", trace.grid, trace.density)],
            title=f"Density trace of {args.metric} ratios",
            x_label="actual / estimated",
            y_label="density",
        )
        (out / "density.svg").write_text(svg, encoding="utf-8")
    _emit_manifest(args, "density", [path])
    print(f"density trace written ({len(trace.grid)} points, h={trace.bandwidth:.6g})")


def cmd_test(args) -> None:
    ref, path = _load_records(args)
    ratios = ref.ratios(args.metric)
    if args.test == "bias":
        over, under = overrun_bias_samples(ratios)
        if not over or not under:
            raise ComputeError(
                "bias test needs both overruns and underruns in the sample"
            )
        result = mann_whitney_u(over, under).to_dict()
        context = {
            "comparison": "overrun magnitudes vs underrun magnitudes",
            "n_over": len(over),
            "n_under": len(under),
        }
    elif args.test == "decades":
        metric_fn = cost_overrun_ratio if args.metric == "cost" else schedule_slippage
        by_decade: dict[str, list[float]] = {}
        for rec in ref.records:
            by_decade.setdefault(decade_label(rec.decision_year), []).append(metric_fn(rec))
        keys = sorted(by_decade)
        result = one_way_f([by_decade[k] for k in keys]).to_dict()
        context = {"groups": keys, "comparison": "ratio means across decades"}
    else:  # trend
        years = [float(r.decision_year) for r in ref.records]
        result = trend_f(years, ratios).to_dict()
        context = {"comparison": "ratio trend over decision year"}
    out = _out_dir(args)
    _write_json(
        out / "test.json",
        {"source": str(path), "metric": args.metric, "test": args.test,
         "result": result, "context": context},
    )
    _emit_manifest(args, "test", [path])
    print(f"{args.test} test: statistic={result['statistic']:.6g} p={result['p_value']:.4g}")


def cmd_appraise(args) -> None:
    path = Path(args.model)
    if not path.is_file():
        raise InputError(f"model file not found: {path}")
    model = load_model(path)
    result = appraise(model, benefit_shortfall=args.shortfall)
    out = _out_dir(args)
    doc = {
        "source": str(path),
        "npv": result.npv,
        "bcr": result.bcr,
        "irr": result.irr,
        "break_even_overrun": result.break_even_overrun,
        "break_even_delay": result.break_even_delay,
        "broken_regardless_of_capex": result.broken_regardless_of_capex,
        "benefit_shortfall": args.shortfall,
    }
    _write_json(out / "appraisal.json", doc)
    if args.format == "svg":
        curve = payoff_curve(model)
        counts_g = list(range(1, len(curve.cum_gain) + 1))
        counts_p = list(range(1, len(curve.cum_pain) + 1))
        svg = charts.line_chart(
            [
                ("cumulative gain", counts_g, curve.cum_gain),
                ("cumulative pain", counts_p, curve.cum_pain),
            ],
            title="Payoff structure: discounted gain vs pain (descending)",
            x_label="cash flows, largest first",
            y_label="cumulative discounted value",
        )
        (out / "payoff.svg").write_text(svg, encoding="utf-8")
    _emit_manifest(args, "appraise", [path])
    print(f"bcr={result.bcr:.6g} npv={result.npv:.6g} k*={result.break_even_overrun:.6g}")


def _dist_inputs(name_or_path: str) -> list[Path]:
    p = Path(name_or_path)
    return [p] if p.is_file() else []


def cmd_stress(args) -> None:
    path = Path(args.model)
    if not path.is_file():
        raise InputError(f"model file not found: {path}")
    model = load_model(path)
    capex_dist = datasets.resolve_dist(args.dist)
    schedule_dist = datasets.resolve_dist(args.schedule_dist) if args.schedule_dist else None
    shortfall = (
        datasets.resolve_dist(args.shortfall_dist) if args.shortfall_dist else args.shortfall
    )
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    config = StressConfig(
        n_trials=args.trials,
        seed=seed,
        capex_dist=capex_dist,
        schedule_dist=schedule_dist,
        est_duration_years=args.duration,
        shortfall=shortfall,
    )
    result = run_stress(model, config, workers=args.workers)
    out = _out_dir(args)
    doc = result.to_dict()
    doc["source"] = str(path)
    doc["capex_dist"] = args.dist
    if args.schedule_dist:
        doc["schedule_dist"] = args.schedule_dist
        doc["est_duration_years"] = args.duration
    _write_json(out / "stress.json", doc)
    (out / "stress-npv-quantiles.csv").write_text(result.quantiles_csv(), encoding="utf-8")
    inputs = [path] + _dist_inputs(args.dist)
    if args.schedule_dist:
        inputs += _dist_inputs(args.schedule_dist)
    _emit_manifest(args, "stress", inputs, seed=seed)
    print(
        f"p_break={result.p_break:.4f} (se {result.p_break_se:.4f}) "
        f"over {result.n_trials} trials, seed {seed}"
    )


def _parse_mults(raw: str, name: str) -> list[float]:
    try:
        values = [float(v) for v in raw.split(",") if v.strip() != ""]
    except ValueError:
        raise InputError(f"{name} must be a comma-separated list of numbers: {raw!r}") from None
    if not values:
        raise InputError(f"{name} must contain at least one multiplier")
    return values


def cmd_grid(args) -> None:
    path = Path(args.model)
    if not path.is_file():
        raise InputError(f"model file not found: {path}")
    model = load_model(path)
    grid = sensitivity_grid(
        model,
        benefit_mults=_parse_mults(args.benefit_mults, "--benefit-mults"),
        cost_mults=_parse_mults(args.cost_mults, "--cost-mults"),
    )
    out = _out_dir(args)
    doc = grid.to_dict()
    doc["source"] = str(path)
    _write_json(out / "grid.json", doc)
    (out / "grid.csv").write_text(grid.to_csv(), encoding="utf-8")
    _emit_manifest(args, "grid", [path])
    print(f"grid written: {len(grid.cost_mults)} cost x {len(grid.benefit_mults)} benefit cells")


def cmd_contingency(args) -> None:
    path = Path(args.model)
    if not path.is_file():
        raise InputError(f"model file not found: {path}")
    model = load_model(path)
    dist = datasets.resolve_dist(args.dist)
    result = size_contingency(model, dist, args.coverage)
    out = _out_dir(args)
    doc = result.to_dict()
    doc["source"] = str(path)
    doc["capex_dist"] = args.dist
    _write_json(out / "contingency.json", doc)
    _emit_manifest(args, "contingency", [path] + _dist_inputs(args.dist))
    print(
        f"contingency {result.contingency:.4f} at p={args.coverage:g}: "
        f"adjusted bcr {result.adjusted_bcr:.4f} -> {doc['decision']}"
    )


_REPORT_SECTIONS = (
    ("appraisal.json", "Appraisal"),
    ("stress.json", "Stress test"),
    ("contingency.json", "Contingency"),
    ("grid.json", "Sensitivity grid"),
    ("stats.json", "Reference-class statistics"),
    ("test.json", "Statistical test"),
    ("density.json", "Density trace"),
    ("ingest.json", "Ingestion"),
)


def _render_value(value, indent: int = 0) -> list[str]:
    # json.dumps of a loaded value reproduces the artifact's literal exactly,
    # so the report can never drift from the numbers on disk
    pad = "  " * indent
    if isinstance(value, dict):
        lines = []
        for key in value:
            sub = value[key]
            if isinstance(sub, (dict, list)):
                lines.append(f"{pad}- {key}:")
                lines.extend(_render_value(sub, indent + 1))
            else:
                lines.append(f"{pad}- {key}: {json.dumps(sub)}")
        return lines
    if isinstance(value, list):
        return [f"{pad}- {json.dumps(value)}"]
    return [f"{pad}- {json.dumps(value)}"]


def cmd_report(args) -> None:
    out = _out_dir(args)
    lines = ["# Fragility analysis report", ""]
    found = []
    for filename, title in _REPORT_SECTIONS:
        path = out / filename
        if not path.is_file():
            continue
        found.append(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        lines.append(f"## {title}")
        lines.append("")
        lines.append(f"Artifact: `{filename}`")
        lines.append("")
        lines.extend(_render_value(doc))
        lines.append("")
    if not found:
        raise InputError(f"no artifacts found in {out}; run an analysis command first")
    (out / "report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit_manifest(args, "report", found)
    print(f"report.md summarizes {len(found)} artifact(s)")


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fragilis",
        description="Investment-fragility appraisal and reference-class stress testing",
    )
    parser.add_argument("--version", action="version", version=f"fragilis {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default="out", help="output directory (default: ./out)")

    def add_records(p):
        p.add_argument("records", help="reference-class CSV file")
        p.add_argument("--strict", action="store_true",
                       help="abort on the first malformed row instead of skipping")
        p.add_argument("--metric", choices=["cost", "schedule"], default="cost")

    p = sub.add_parser("ingest", help="validate a records CSV and report diagnostics")
    p.add_argument("records")
    p.add_argument("--strict", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="summary statistics of a reference class")
    add_records(p)
    p.add_argument("--threshold", action="append", type=float,
                   help="breaking threshold (repeatable)")
    p.add_argument("--group", choices=sorted(_GROUP_KEY_MAP),
                   help="emit per-group statistics instead of one summary")
    add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("density", help="kernel density trace of a ratio metric")
    add_records(p)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--format", choices=["json", "csv", "svg"], default="csv")
    add_common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("test", help="bias / decades / trend tests on a reference class")
    add_records(p)
    p.add_argument("--test", choices=["bias", "decades", "trend"], required=True)
    add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("appraise", help="NPV, BCR, IRR and break-even thresholds")
    p.add_argument("model", help="appraisal model JSON file")
    p.add_argument("--shortfall", type=float, default=0.0,
                   help="benefit shortfall fraction for the break-even overrun")
    p.add_argument("--format", choices=["json", "svg"], default="json")
    add_common(p)
    p.set_defaults(func=cmd_appraise)

    p = sub.add_parser("stress", help="Monte Carlo stress test of a model")
    p.add_argument("model")
    p.add_argument("--dist", required=True,
                   help="capex overrun distribution: bundled name or JSON file")
    p.add_argument("--schedule-dist", default=None,
                   help="schedule slippage distribution: bundled name or JSON file")
    p.add_argument("--duration", type=float, default=None,
                   help="estimated implementation duration in years (with --schedule-dist)")
    p.add_argument("--shortfall", type=float, default=0.0)
    p.add_argument("--shortfall-dist", default=None)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None,
                   help="64-bit seed; generated and recorded when omitted")
    p.add_argument("--workers", type=int, default=1)
    add_common(p)
    p.set_defaults(func=cmd_stress)

    p = sub.add_parser("grid", help="benefit x cost multiplier sensitivity grid")
    p.add_argument("model")
    p.add_argument("--benefit-mults", default="0.85,1.0,1.15")
    p.add_argument("--cost-mults", default="1.0,1.15")
    add_common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("contingency", help="size a contingency at a coverage quantile")
    p.add_argument("model")
    p.add_argument("--dist", required=True)
    p.add_argument("--coverage", type=float, default=0.8)
    add_common(p)
    p.set_defaults(func=cmd_contingency)

    p = sub.add_parser("report", help="summarize artifacts in the output directory")
    add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    effective = list(sys.argv[1:]) if argv is None else list(argv)
    args = parser.parse_args(effective)
    args.argv = effective
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputeError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
