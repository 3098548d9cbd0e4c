"""Batch command-line entry point.

Subcommands: simulate (plan + draw + measure one shape under one or both
brushes), compare (difference tables + paired summaries), replay (rebuild a
session from its event log), export (OBJ/CSV from saved artifacts), and
serve (the realtime sandbox bridge).

Option precedence is flags > config file > defaults; the config file is
plain key=value lines matching the long flag names (surface params as
param.<name>=<value>). All file outputs are deterministic for a fixed
command line, so reruns are byte-identical.

Exit codes: 0 success, 2 usage, 3 data/contract error, 4 internal error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

from .brush import DEFAULT_EPSILON, DEFAULT_WIDTH, BrushKind, build_ribbon
from .errors import ContractError, ParseError, RibbonLabError
from .metrics import (DEFAULT_WEIGHTS, EffortReport, MetricsRow, accuracy_report,
                      read_metrics_csv, wrist_effort, write_metrics_csv)
from .objio import export_obj
from .planner import (DEFAULT_OVERLAP, DEFAULT_SAMPLES_PER_STROKE, DEFAULT_SPEED,
                      coverage_plan, plan_to_poses)
from .session import (load_session, read_event_log, read_pose_jsonl, replay,
                      save_session, write_pose_jsonl)
from .stats import (PairedSummary, paired_t, summaries_to_json,
                    summary_from_moments, summary_rows)
from .surfaces import create_surface, parse_key_values, surface_names

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

_METRIC_COLUMNS = ["mean_dist", "rms_dist", "max_dist", "mean_normal_dev",
                   "max_normal_dev", "coverage", "pitch_total", "yaw_total",
                   "roll_total", "weighted_total", "stroke_count",
                   "correction_count", "runtime_s"]


@dataclass
class RunConfig:
    """Resolved options for one command invocation."""

    surface: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    brush: str = "strip"
    width: float = DEFAULT_WIDTH
    epsilon: float = DEFAULT_EPSILON
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    spacing: float | None = None
    overlap: float = DEFAULT_OVERLAP
    samples: int = DEFAULT_SAMPLES_PER_STROKE
    speed: float = DEFAULT_SPEED
    seed: int = 0
    out: str = "."
    port: int = 8765


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ContractError("weights must be three numbers: pitch,yaw,roll")
    w = tuple(float(p) for p in parts)
    if min(w) < 0:
        raise ContractError("weights must be >= 0")
    return w  # type: ignore[return-value]


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return parse_key_values(fh.read())


def _resolve(args: argparse.Namespace) -> RunConfig:
    """flags > config file > defaults."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    cfg = RunConfig()

    def pick(flag_name: str, file_key: str, convert, default):
        flag_val = getattr(args, flag_name, None)
        if flag_val is not None:
            return convert(flag_val) if isinstance(flag_val, str) else flag_val
        if file_key in file_cfg:
            return convert(file_cfg[file_key])
        return default

    cfg.surface = pick("surface", "surface", str, None)
    cfg.brush = pick("brush", "brush", str, "strip")
    cfg.width = pick("width", "width", float, DEFAULT_WIDTH)
    cfg.epsilon = pick("epsilon", "epsilon", float, DEFAULT_EPSILON)
    cfg.weights = pick("weights", "weights", _parse_weights, DEFAULT_WEIGHTS)
    cfg.spacing = pick("spacing", "spacing", float, None)
    cfg.overlap = pick("overlap", "overlap", float, DEFAULT_OVERLAP)
    cfg.samples = pick("samples", "samples", int, DEFAULT_SAMPLES_PER_STROKE)
    cfg.speed = pick("speed", "speed", float, DEFAULT_SPEED)
    cfg.seed = pick("seed", "seed", int, 0)
    cfg.out = pick("out", "out", str, ".")
    cfg.port = pick("port", "port", int, 8765)

    params: dict[str, float] = {}
    for key, val in file_cfg.items():
        if key.startswith("param."):
            params[key[len("param."):]] = float(val)
    for item in getattr(args, "param", None) or []:
        if "=" not in item:
            raise ContractError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = float(v)
    cfg.params = params
    return cfg


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _simulate_one(cfg: RunConfig, brush: BrushKind) -> tuple[MetricsRow, list, list]:
    """Plan, draw, and measure one (surface, brush) drawing.

    Returns (metrics row, pose streams, ribbons).
    """
    surface = create_surface(cfg.surface, cfg.params)
    plan = coverage_plan(surface, cfg.width, overlap=cfg.overlap, brush=brush,
                         samples_per_stroke=cfg.samples, spacing=cfg.spacing)
    streams = plan_to_poses(plan, surface, speed=cfg.speed, weights=cfg.weights)
    if not streams:
        raise ContractError(f"planner produced no strokes on {cfg.surface}")
    strips = [build_ribbon(s, brush, cfg.width, cfg.epsilon) for s in streams]
    effort = EffortReport.zero(cfg.weights)
    for s in streams:
        effort = effort + wrist_effort(s, cfg.weights)
    drawn = [s for s in strips if s.quad_count > 0]
    accuracy = accuracy_report(drawn, surface, tau=cfg.width / 2.0)
    runtime = streams[-1][-1].timestamp - streams[0][0].timestamp
    row = MetricsRow(shape=cfg.surface, brush=brush.value, accuracy=accuracy,
                     effort=effort, stroke_count=len(streams),
                     correction_count=0, runtime_s=runtime)
    return row, streams, strips


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    if not cfg.surface:
        raise ContractError("simulate requires --surface")
    brushes = ([BrushKind.NORMAL, BrushKind.STRIP] if cfg.brush == "both"
               else [BrushKind(cfg.brush)])
    os.makedirs(cfg.out, exist_ok=True)
    rows = []
    for brush in brushes:
        row, streams, strips = _simulate_one(cfg, brush)
        rows.append(row)
        stroke_dir = os.path.join(cfg.out, f"poses_{cfg.surface}_{brush.value}")
        os.makedirs(stroke_dir, exist_ok=True)
        for i, stream in enumerate(streams):
            write_pose_jsonl(stream, os.path.join(stroke_dir, f"stroke_{i:04d}.jsonl"))
        export_obj(strips, os.path.join(cfg.out, f"{cfg.surface}_{brush.value}.obj"))
        print(f"{cfg.surface} {brush.value}: {len(streams)} strokes, "
              f"mean_dist {row.accuracy.mean_dist * 1000:.3f} mm, "
              f"coverage {row.accuracy.coverage_fraction:.3f}, "
              f"weighted effort {row.effort.weighted_total:.2f}")
    write_metrics_csv(rows, os.path.join(cfg.out, "metrics.csv"))
    print(f"wrote {os.path.join(cfg.out, 'metrics.csv')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _load_rows(path: str) -> dict[tuple[str, str], dict[str, str]]:
    rows = read_metrics_csv(path)
    return {(r["shape"], r["brush"]): r for r in rows}


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    os.makedirs(cfg.out, exist_ok=True)

    if getattr(args, "from_summary", None):
        return _compare_from_summary(args.from_summary, cfg)

    if getattr(args, "a", None) and getattr(args, "b", None):
        table = {**_load_rows(args.a), **_load_rows(args.b)}
    elif getattr(args, "metrics", None):
        table = _load_rows(args.metrics)
    else:
        raise ContractError("compare needs --metrics CSV, --a/--b CSVs, or --from-summary")

    shapes = sorted({shape for shape, brush in table})
    missing = [s for s in shapes
               if (s, "strip") not in table or (s, "normal") not in table]
    if missing:
        raise ContractError(f"shapes lacking both brushes: {', '.join(missing)}")

    diff_rows: list[list[str]] = [["shape"] + _METRIC_COLUMNS]
    diffs_by_metric: dict[str, list[float]] = {c: [] for c in _METRIC_COLUMNS}
    for shape in shapes:
        strip_row = table[(shape, "strip")]
        normal_row = table[(shape, "normal")]
        out_row = [shape]
        for col in _METRIC_COLUMNS:
            d = float(strip_row[col]) - float(normal_row[col])
            diffs_by_metric[col].append(d)
            out_row.append(repr(d))
        diff_rows.append(out_row)

    import csv as _csv
    diff_path = os.path.join(cfg.out, "comparison.csv")
    with open(diff_path, "w", newline="", encoding="utf-8") as fh:
        _csv.writer(fh).writerows(diff_rows)

    summaries: dict[str, PairedSummary] = {}
    if len(shapes) >= 2:
        for col, diffs in diffs_by_metric.items():
            summaries[col] = paired_t(diffs, direction="less")
        summary_path = os.path.join(cfg.out, "summary.csv")
        with open(summary_path, "w", newline="", encoding="utf-8") as fh:
            _csv.writer(fh).writerows(summary_rows(summaries))
        with open(os.path.join(cfg.out, "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(summaries_to_json(summaries))

    print(f"per-shape strip-normal differences -> {diff_path}")
    for shape in shapes:
        i = shapes.index(shape)
        w = diffs_by_metric["weighted_total"][i]
        y = diffs_by_metric["yaw_total"][i]
        print(f"  {shape}: weighted_total diff {w:+.3f} rad "
              f"({math.degrees(w):+.1f} deg), yaw diff {y:+.3e} rad")
    return EXIT_OK


def _compare_from_summary(path: str, cfg: RunConfig) -> int:
    """Recompute t/p/CI from published (mean, std, n) summary rows."""
    import csv as _csv
    summaries: dict[str, PairedSummary] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        needed = {"measure", "mean_diff", "std_diff", "n"}
        if not needed.issubset(set(reader.fieldnames or [])):
            raise ParseError(f"summary CSV needs columns {sorted(needed)}")
        for i, row in enumerate(reader, start=2):
            try:
                summaries[row["measure"]] = summary_from_moments(
                    float(row["mean_diff"]), float(row["std_diff"]), int(row["n"]),
                    direction=row.get("direction", "less") or "less")
            except (ValueError, KeyError) as exc:
                raise ParseError(f"bad summary row: {exc}", line=i)
    if not summaries:
        raise ContractError("summary CSV contains no rows")
    out_path = os.path.join(cfg.out, "summary.csv")
    import csv as _csv2
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        _csv2.writer(fh).writerows(summary_rows(summaries))
    with open(os.path.join(cfg.out, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(summaries_to_json(summaries))
    for name in sorted(summaries):
        s = summaries[name]
        print(f"{name}: t={s.t:.3f} p={s.p_one_tailed:.3f} "
              f"ci95=({s.ci95[0]:.3f}, {s.ci95[1]:.3f}) n={s.n}")
    print(f"wrote {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay / export / serve
# ---------------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    if bool(getattr(args, "log", None)) == bool(getattr(args, "session", None)):
        raise ContractError("replay needs exactly one of --log or --session")
    if args.log:
        events = read_event_log(args.log)
        session = replay(events, width=cfg.width, epsilon=cfg.epsilon)
        source = args.log
    else:
        session = load_session(args.session)  # verifies the stored digest
        source = args.session
    print(f"replayed {source}: {len(session.strokes)} strokes, "
          f"{session.correction_count} corrections, "
          f"elapsed {session.elapsed:.3f} s, digest {session.strokes_digest()}")
    if getattr(args, "save", None):
        save_session(session, args.save)
        print(f"wrote {args.save}")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    os.makedirs(cfg.out, exist_ok=True)
    if getattr(args, "poses", None):
        poses = read_pose_jsonl(args.poses)
        brush = BrushKind(cfg.brush if cfg.brush != "both" else "strip")
        strip = build_ribbon(poses, brush, cfg.width, cfg.epsilon)
        obj_path = os.path.join(cfg.out, "drawing.obj")
        export_obj([strip], obj_path)
        print(f"wrote {obj_path} ({strip.quad_count} quads)")
        return EXIT_OK
    if bool(getattr(args, "log", None)) == bool(getattr(args, "session", None)):
        raise ContractError("export needs one of --poses, --log, or --session")
    if args.log:
        session = replay(read_event_log(args.log), width=cfg.width, epsilon=cfg.epsilon)
    else:
        session = load_session(args.session)
    obj_path = os.path.join(cfg.out, "drawing.obj")
    export_obj([s.strip for s in session.strokes], obj_path)
    save_session(session, os.path.join(cfg.out, "session.json"))
    all_poses = [p for s in session.strokes for p in s.poses]
    write_pose_jsonl(all_poses, os.path.join(cfg.out, "poses.jsonl"))
    print(f"wrote {obj_path}, session.json, poses.jsonl "
          f"({len(session.strokes)} strokes)")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    from .service import serve
    print(f"serving on http://127.0.0.1:{cfg.port} (ws at /ws)")
    serve(port=cfg.port, ui_dir=getattr(args, "ui_dir", None))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ribbonlab",
        description="Ribbon-brush drawing simulator and metrics suite")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="key=value config file (flags override it)")
        p.add_argument("--width", type=float, help=f"ribbon width, m (default {DEFAULT_WIDTH})")
        p.add_argument("--epsilon", type=float,
                       help=f"resample gate distance, m (default {DEFAULT_EPSILON})")
        p.add_argument("--weights", help="effort weights pitch,yaw,roll (default 1,3,1)")
        p.add_argument("--seed", type=int, help="seed for randomized fixtures")
        p.add_argument("--out", help="output directory (default .)")

    p_sim = sub.add_parser("simulate", help="plan, draw, and measure a shape")
    common(p_sim)
    p_sim.add_argument("--surface", help=f"one of: {', '.join(surface_names())}")
    p_sim.add_argument("--param", action="append", metavar="k=v",
                       help="surface parameter override (repeatable)")
    p_sim.add_argument("--brush", choices=["normal", "strip", "both"])
    p_sim.add_argument("--spacing", type=float, help="stroke centerline spacing, m")
    p_sim.add_argument("--overlap", type=float,
                       help=f"ribbon overlap fraction (default {DEFAULT_OVERLAP})")
    p_sim.add_argument("--samples", type=int,
                       help=f"samples per stroke (default {DEFAULT_SAMPLES_PER_STROKE})")
    p_sim.add_argument("--speed", type=float,
                       help=f"drawing speed m/s (default {DEFAULT_SPEED})")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="strip-vs-normal difference tables")
    common(p_cmp)
    p_cmp.add_argument("--metrics", help="metrics.csv containing both brushes")
    p_cmp.add_argument("--a", help="metrics CSV for the first tool")
    p_cmp.add_argument("--b", help="metrics CSV for the second tool")
    p_cmp.add_argument("--from-summary", dest="from_summary",
                       help="CSV of measure,mean_diff,std_diff,n[,direction] rows")
    p_cmp.set_defaults(func=cmd_compare)

    p_rep = sub.add_parser("replay", help="rebuild a session from its log")
    common(p_rep)
    p_rep.add_argument("--log", help="event log (JSON lines)")
    p_rep.add_argument("--session", help="saved session.json (digest verified)")
    p_rep.add_argument("--save", help="write the replayed session to this path")
    p_rep.set_defaults(func=cmd_replay)

    p_exp = sub.add_parser("export", help="export OBJ/CSV from saved artifacts")
    common(p_exp)
    p_exp.add_argument("--log", help="event log (JSON lines)")
    p_exp.add_argument("--session", help="saved session.json")
    p_exp.add_argument("--poses", help="pose stream JSONL (single stroke)")
    p_exp.add_argument("--brush", choices=["normal", "strip"],
                       help="brush kind for --poses export")
    p_exp.set_defaults(func=cmd_export)

    p_srv = sub.add_parser("serve", help="run the realtime sandbox service")
    common(p_srv)
    p_srv.add_argument("--port", type=int, help="port (default 8765)")
    p_srv.add_argument("--ui-dir", dest="ui_dir", help="built frontend directory")
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RibbonLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
