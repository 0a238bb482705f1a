"""Command-line interface.

Exit codes: 0 success, 1 validation or parse failure, 2 nothing to report.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .anomaly import DEFAULT_FLIP_TOLERANCE, DEFAULT_JUMP_THRESHOLD, canonicalize, detect_flips
from .config import Config, load_config
from .errors import EmptyResultError, ValidationError
from .io import (
    angle_stream_text,
    events_csv,
    infer_topology,
    read_angle_stream,
    read_euler_stream,
    read_manifest,
    read_skeleton_stream,
    write_angle_stream,
    write_euler_stream,
    write_skeleton_stream,
)
from .kinematics import CHANNEL_ORDER
from .pipeline import GRANULARITIES, compare_channels, native_channels, skeleton_flexion
from .registration import RigidTransform, RotationConvention, axis_rotation
from .report import emit_plot, emit_report
from .skeleton import RecordingMeta
from .sync import COMPARISON_MODES, PAIRING_METHODS, group_report
from .synth import SHAPES, MotionProfile, Perturbation, forward_skeleton, generate_trajectory, perturb

log = logging.getLogger("mocapval")

EXIT_OK, EXIT_INVALID, EXIT_EMPTY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation failures (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _analysis(args, config: Config):
    return config.analysis.updated(
        convention=RotationConvention.parse(args.convention) if args.convention else None,
        mode=args.mode,
        canonicalize=True if args.canonicalize else None,
        group_by=tuple(args.group_by) if args.group_by else None,
        granularity=getattr(args, "granularity", None),
        max_gap=getattr(args, "max_gap", None),
        pairing=getattr(args, "pairing", None),
    )


def _read_skeleton(path, config: Config, meta=None):
    topo = infer_topology(path, config.topologies.values())
    return read_skeleton_stream(path, topo, meta)


def _flexion(seq, config: Config, analysis, reference=None, source="estimated-skeleton"):
    target = config.topology(analysis.reference_topology)
    joint_map = config.joint_map(seq.topology.name, target.name)
    return skeleton_flexion(
        seq, config.channels, reference=reference, joint_map=joint_map, target=target,
        granularity=analysis.granularity, with_scale=analysis.with_scale,
        max_gap=analysis.max_gap, source=source,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args, config: Config) -> int:
    for name in args.files:
        path = Path(name)
        suffix = path.suffix.lower()
        if suffix == ".jsonl":
            seq = _read_skeleton(path, config)
            print(f"ok {path}: skeleton stream, topology {seq.topology.name}, {len(seq)} frames")
        elif suffix == ".csv":
            series = read_angle_stream(path)
            print(f"ok {path}: angle stream, channels {', '.join(s.channel for s in series)}")
        elif suffix in (".yaml", ".yml", ".json"):
            doc = yaml.safe_load(path.read_text(encoding="utf-8")) if path.is_file() else None
            if isinstance(doc, dict) and "recordings" in doc:
                recs = read_manifest(path)
                for rec in recs:
                    for key in ("reference_angles", "reference_skeleton", "estimated_skeleton"):
                        if key in rec and not Path(rec[key]).is_file():
                            raise ValidationError(f"{path}: {key} file not found: {rec[key]}")
                print(f"ok {path}: manifest, {len(recs)} recording(s)")
            else:
                cfg = load_config(path)
                print(f"ok {path}: config, topologies {', '.join(cfg.topologies)}, "
                      f"{len(cfg.channels)} channel(s)")
        else:
            raise ValidationError(f"{path}: unknown file type {suffix!r}")
    return EXIT_OK


def cmd_synth(args, config: Config) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    channels = tuple(c.strip() for c in args.channels.split(",") if c.strip())
    profile = MotionProfile(args.shape, args.amplitude, args.period, args.repetitions, args.rate, channels)
    truth = generate_trajectory(profile)
    meta = RecordingMeta(args.subject, args.exercise, args.perspective, args.clothing, args.repetitions)
    topology = config.topology(config.analysis.reference_topology)
    reference = forward_skeleton(truth, topology=topology, meta=meta)
    rotation = axis_rotation(2, np.radians(args.yaw_deg))
    p = Perturbation(
        RigidTransform(rotation, np.array(args.offset, dtype=float)),
        args.scale, args.noise_mm / 1000.0, args.dropout,
    )
    estimated = perturb(reference, p, seed=args.seed)

    write_angle_stream(list(truth.values()), out / "truth.csv")
    write_skeleton_stream(reference, out / "reference.jsonl")
    write_skeleton_stream(estimated, out / "estimated.jsonl")
    manifest = {
        "recordings": [{
            "reference_angles": "truth.csv",
            "reference_skeleton": "reference.jsonl",
            "estimated_skeleton": "estimated.jsonl",
            "subject": args.subject,
            "exercise": args.exercise,
            "perspective": args.perspective,
            "clothing": args.clothing,
            "repetitions": args.repetitions,
        }]
    }
    (out / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=False), encoding="utf-8")
    print(f"wrote {len(reference)} frames of {', '.join(channels)} to {out}")
    return EXIT_OK


def cmd_angles(args, config: Config) -> int:
    analysis = _analysis(args, config)
    seq = _read_skeleton(args.skeleton, config)
    reference = _read_skeleton(args.reference, config) if args.reference else None
    source = "estimated-skeleton" if reference is not None else "reference-skeleton"
    series = _flexion(seq, config, analysis, reference, source)
    if args.out:
        write_angle_stream(series, args.out)
        print(f"wrote {', '.join(s.channel for s in series)} to {args.out}")
    else:
        sys.stdout.write(angle_stream_text(series))
    return EXIT_OK


def _recordings(args):
    if args.manifest:
        return read_manifest(args.manifest)
    if not args.reference_angles:
        raise ValidationError("compare needs --manifest or --reference-angles")
    rec = {"reference_angles": args.reference_angles}
    if args.reference_skeleton:
        rec["reference_skeleton"] = args.reference_skeleton
    if args.estimated:
        rec["estimated_skeleton"] = args.estimated
    rec["meta"] = RecordingMeta(args.subject, args.exercise, args.perspective, args.clothing)
    return [rec]


def cmd_compare(args, config: Config) -> int:
    analysis = _analysis(args, config)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    pooled, repairs = [], 0
    wanted = [s.channel for s in config.channels]
    for k, rec in enumerate(_recordings(args)):
        meta = rec["meta"]
        native, n_rep = native_channels(
            read_angle_stream(rec["reference_angles"]), wanted,
            analysis.euler_component, analysis.convention, analysis.canonicalize,
        )
        repairs += n_rep
        ref_skel = _read_skeleton(rec["reference_skeleton"], config, meta) if "reference_skeleton" in rec else None
        if analysis.mode == "self-consistency":
            if ref_skel is None:
                raise ValidationError("self-consistency mode needs the reference skeleton")
            computed = _flexion(ref_skel, config, analysis, None, "reference-skeleton")
        else:
            if "estimated_skeleton" not in rec:
                raise ValidationError("cross-system mode needs the estimated skeleton")
            est = _read_skeleton(rec["estimated_skeleton"], config, meta)
            if ref_skel is None:
                log.warning("no reference skeleton: angles measured in the estimated frame as recorded")
            computed = _flexion(est, config, analysis, ref_skel)
        results = compare_channels(native, computed, analysis.max_gap, analysis.pairing, analysis.interpolate)
        for c in results:
            pooled.append((meta, c.channel, c.deviations, c.paired.gaps))
        if args.plot and out is not None and results:
            name = f"deviation_{k:03d}_{meta.subject}_{meta.exercise}.svg"
            emit_plot({c.channel: (c.paired.t, c.deviations) for c in results}, out / name,
                      title=f"{meta.subject} {meta.exercise}")
    header = {
        "canonicalized": "yes" if analysis.canonicalize else "no",
        "repaired_transitions": str(repairs),
        "convention": str(analysis.convention),
        "granularity": analysis.granularity,
        "pairing": f"{analysis.pairing} (max gap {analysis.max_gap:g} s)",
    }
    report = group_report(pooled, analysis.group_by, analysis.mode, header)
    text = emit_report(report, "text")
    if out is not None:
        (out / "report.csv").write_bytes(emit_report(report, "csv"))
        (out / "report.txt").write_bytes(text)
    sys.stdout.write(text.decode("utf-8"))
    return EXIT_OK


def cmd_anomalies(args, config: Config) -> int:
    analysis = _analysis(args, config)
    series = read_euler_stream(args.euler, analysis.convention)
    events = detect_flips(series, args.jump_threshold, args.flip_tolerance)
    repaired, changed = canonicalize(series)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "events.csv").write_bytes(events_csv(events))
        write_euler_stream(repaired, out / "repaired.csv")
    sys.stdout.write(events_csv(events).decode("utf-8"))
    flips = sum(e.kind == "representation-flip" for e in events)
    print(f"# {len(events)} event(s), {flips} representation flip(s); "
          f"canonicalization changed {changed} sample(s)", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="topology / map / channel document (default: bundled)")
    shared.add_argument("--convention", help="Euler convention, e.g. intrinsic:ZXY")
    shared.add_argument("--mode", choices=COMPARISON_MODES)
    shared.add_argument("--canonicalize", action="store_true",
                        help="repair Euler representation flips in reference angles")
    shared.add_argument("--group-by", action="append", metavar="KEY[=VALUE]",
                        help="perspective, clothing or subject; repeatable")
    shared.add_argument("--out", help="output file or directory")
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="mocapval", description="Joint-angle validation of motion-capture skeletons.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[shared], help="check files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", parents=[shared], help="generate oracle data")
    p.add_argument("--shape", choices=SHAPES, default="sinusoidal")
    p.add_argument("--amplitude", type=float, default=90.0)
    p.add_argument("--period", type=float, default=2.0)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--rate", type=float, default=60.0)
    p.add_argument("--channels", default="knee_right,knee_left",
                   help=f"comma-separated subset of {','.join(CHANNEL_ORDER)}")
    p.add_argument("--noise-mm", type=float, default=0.0)
    p.add_argument("--yaw-deg", type=float, default=0.0)
    p.add_argument("--offset", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("X", "Y", "Z"))
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subject", default="synthetic")
    p.add_argument("--exercise", default="squat")
    p.add_argument("--perspective", type=float, default=0.0)
    p.add_argument("--clothing", default="")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("angles", parents=[shared], help="flexion series from a skeleton stream")
    p.add_argument("skeleton")
    p.add_argument("--reference", help="reference skeleton to align onto")
    p.add_argument("--granularity", choices=GRANULARITIES)
    p.add_argument("--max-gap", type=float)
    p.set_defaults(func=cmd_angles)

    p = sub.add_parser("compare", parents=[shared], help="deviation report")
    p.add_argument("--manifest")
    p.add_argument("--reference-angles")
    p.add_argument("--reference-skeleton")
    p.add_argument("--estimated")
    p.add_argument("--subject", default="unknown")
    p.add_argument("--exercise", default="other")
    p.add_argument("--perspective", type=float, default=0.0)
    p.add_argument("--clothing", default="")
    p.add_argument("--granularity", choices=GRANULARITIES)
    p.add_argument("--pairing", choices=PAIRING_METHODS)
    p.add_argument("--max-gap", type=float)
    p.add_argument("--plot", action="store_true", help="write SVG deviation plots to --out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("anomalies", parents=[shared], help="Euler representation flips")
    p.add_argument("euler", help="CSV with time_s,x,y,z")
    p.add_argument("--jump-threshold", type=float, default=DEFAULT_JUMP_THRESHOLD)
    p.add_argument("--flip-tolerance", type=float, default=DEFAULT_FLIP_TOLERANCE)
    p.set_defaults(func=cmd_anomalies)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except EmptyResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
