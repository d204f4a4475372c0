"""Command-line entry point: dataset generation, benchmark runs, ablations, images and audio."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import yaml

log = logging.getLogger("fallsim")

# flags that may also come from a config file; None means "not given on the command line"
CONFIG_KEYS = ("manifest", "split", "agent", "oracle", "seed", "out_dir", "episodes", "resolution")


class CliError(RuntimeError):
    pass


def load_config(path) -> dict:
    """Read a YAML or JSON mapping; dashes in keys become underscores."""
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}")
    text = p.read_text()
    doc = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise CliError(f"{p}: config must be a mapping")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from defaults."""
    cfg = load_config(args.config)
    defaults = {"split": "test", "agent": "modular", "oracle": [], "seed": 0,
                "out_dir": "out", "episodes": None, "resolution": 128, "manifest": None}
    for key in CONFIG_KEYS:
        if getattr(args, key, None) in (None, []):
            setattr(args, key, cfg.get(key, defaults[key]))
    if isinstance(args.oracle, str):
        args.oracle = [s for s in args.oracle.replace(",", " ").split() if s]
    args.extra = {k: v for k, v in cfg.items() if k not in CONFIG_KEYS}
    return args


def _need_manifest(args):
    from .datasetgen import load_manifest

    if not args.manifest:
        raise CliError("--manifest is required")
    return load_manifest(args.manifest)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    from .datasetgen import DatasetConfig, build_dataset, load_manifest

    fields = {k: v for k, v in args.extra.items() if k in DatasetConfig.__dataclass_fields__}
    if args.episodes is not None:
        fields["n_instances"] = args.episodes
    fields["master_seed"] = args.seed
    if "split_fractions" in fields:
        fields["split_fractions"] = tuple(fields["split_fractions"])
    cfg = DatasetConfig(**fields)
    path = build_dataset(cfg, args.out_dir)
    m = load_manifest(path)
    counts = {s: sum(e["split"] == s for e in m["episodes"]) for s in ("train", "val", "test")}
    print(json.dumps({"manifest": str(path), "episodes": len(m["episodes"]), "splits": counts,
                      "keep_rate": round(m["generation"]["keep_rate"], 4)}, indent=1))
    return 0 if len(m["episodes"]) == cfg.n_instances else 1


def _report_doc(name, rep) -> dict:
    return {"name": name, **rep.summary(), "per_category": rep.per_category, "per_room": rep.per_room}


def cmd_run(args) -> int:
    from .eval import AgentSpec, format_table, run_benchmark

    manifest = _need_manifest(args)
    out = _out_dir(args)
    spec = AgentSpec.parse(args.agent, args.oracle, args.seed)
    logs = out / "logs"
    logs.mkdir(exist_ok=True)
    rep = run_benchmark(spec, manifest, args.split, args.episodes, args.resolution, log_dir=logs, seed=args.seed)
    doc = _report_doc(spec.label, rep)
    doc["results"] = [r.__dict__ for r in rep.results]
    (out / "report.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(json.dumps(rep.summary()))
    print(format_table([(spec.label, rep)]))
    return 0


def cmd_ablate(args) -> int:
    from .eval import ablation_suite, format_table

    manifest = _need_manifest(args)
    out = _out_dir(args)
    rows = ablation_suite(manifest, args.split, args.episodes, args.resolution, args.seed)
    table = format_table(rows)
    (out / "ablation.json").write_text(json.dumps([_report_doc(n, r) for n, r in rows], indent=1) + "\n")
    (out / "ablation.txt").write_text(table + "\n")
    for name, rep in rows:
        print(json.dumps({"name": name, **rep.summary()}))
    print(table)
    return 0


def cmd_viz(args) -> int:
    from .env import read_log
    from .eval import visualize_trajectory
    from .scenes import load_scene

    manifest = _need_manifest(args)
    root = Path(manifest["root"])
    by_id = {e["id"]: e for e in manifest["episodes"]}
    if args.episode_id not in by_id:
        raise CliError(f"episode {args.episode_id!r} not in manifest")
    entry = by_id[args.episode_id]
    scene = load_scene(root / entry["scene"])
    log_path = Path(args.log) if args.log else root / entry["trajectory"]
    try:
        records = read_log(log_path)
    except (OSError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read trajectory log {log_path}: {e}") from e
    goal = None
    if args.show_goal:
        from .audio import read_wav, room_acoustics
        from .perception import audio_goal, default_library

        clip = read_wav(root / entry["audio"])
        goal = audio_goal(clip, scene.agent_spawn, room_acoustics(scene.room), default_library()).position
    out = _out_dir(args) / f"trajectory_{args.episode_id}.ppm"
    visualize_trajectory(scene, records, out, goal, args.scale)
    print(out)
    return 0


def cmd_synth_audio(args) -> int:
    from .audio import render_episode_audio, write_wav
    from .physics import ImpactEvent
    from .world import Pose, category, standard_variants

    rooms = {r.id: r for r in standard_variants(args.seed)}
    room = rooms.get(args.room) if args.room else next(iter(rooms.values()))
    if room is None:
        raise CliError(f"unknown room {args.room!r}; choose from {sorted(rooms)}")
    cat = category(args.category)
    W, D, _ = room.dims
    lx, ly = W / 2, D / 2
    a = math.radians(args.azimuth)
    sx = min(max(lx + args.distance * math.cos(a), 0.1), W - 0.1)
    sy = min(max(ly + args.distance * math.sin(a), 0.1), D - 0.1)
    ev = ImpactEvent(0.0, (sx, sy, 0.05), args.speed, args.surface or room.floor_material,
                     cat.default_material, cat.mass)
    clip = render_episode_audio([ev], room, Pose((lx, ly, 0.0), 0.0), seed=args.seed, reverb=not args.dry)
    out = _out_dir(args) / args.name
    write_wav(clip, out)
    print(json.dumps({"wav": str(out), "room": room.id, "duration": clip.duration, "scale": clip.scale}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fallsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML or JSON file with defaults for any flag")
        sp.add_argument("--manifest")
        sp.add_argument("--split", choices=("train", "val", "test"))
        sp.add_argument("--agent", help="modular, random or greedy-audio")
        sp.add_argument("--oracle", nargs="*", choices=("seg", "object", "location"), default=[])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--episodes", type=int)
        sp.add_argument("--resolution", type=int)
        return sp

    common(sub.add_parser("generate", help="build a dataset and its manifests")).set_defaults(func=cmd_generate)
    common(sub.add_parser("run", help="evaluate one agent on a manifest split")).set_defaults(func=cmd_run)
    common(sub.add_parser("ablate", help="run the oracle-swap ablation table")).set_defaults(func=cmd_ablate)
    v = common(sub.add_parser("viz", help="draw a top-down trajectory image"))
    v.add_argument("--episode-id", required=True)
    v.add_argument("--log", help="trajectory log; defaults to the expert log in the dataset")
    v.add_argument("--scale", type=int, default=4)
    v.add_argument("--show-goal", action="store_true", help="mark the audio goal estimate")
    v.set_defaults(func=cmd_viz)
    s = common(sub.add_parser("synth-audio", help="render one impact to a binaural WAV"))
    s.add_argument("--category", default="fork")
    s.add_argument("--room")
    s.add_argument("--surface")
    s.add_argument("--speed", type=float, default=3.0)
    s.add_argument("--distance", type=float, default=2.0)
    s.add_argument("--azimuth", type=float, default=0.0, help="degrees, CCW from +x")
    s.add_argument("--dry", action="store_true")
    s.add_argument("--name", default="impact.wav")
    s.set_defaults(func=cmd_synth_audio)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(resolve(args))
    except Exception as e:  # report and fail with a nonzero code
        print(f"error: {e}", file=sys.stderr)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
