"""Command-line entry point: `l2i <subcommand> ...`.

Every subcommand that is given `--out DIR` writes its artifacts into DIR
together with config.json, the full effective configuration of the run.
Without `--out` the primary artifact goes to standard output.

Exit status: 0 success, 1 validation or infeasibility, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .codetext import FORMAT as CODE_FORMAT
from .codetext import emit_code, parse_code
from .compiler import compile_script
from .errors import FormatVersionError, L2IError
from .evaluation import DEFAULT_W, PROTOCOLS, EvalReport, build_splits, score_scene
from .evaluation.report import FORMAT as EVAL_FORMAT
from .evaluation.splits import FORMAT as SPLIT_FORMAT
from .nl import FORMAT as NL_FORMAT
from .nl import paraphrase, parse_description, scene_text
from .road import KINDS, build_topology, build_variant, emit_topology_file, parse_topology_file
from .road.xodr import FORMAT as XODR_FORMAT
from .scenario import DatasetManifest, default_plan, generate_dataset, plan_from_json
from .scenario.dataset import FORMAT as MANIFEST_FORMAT
from .script import DEFAULT_FOOTPRINTS, GtInteraction, ObjectSpec, SceneScript, load_script, validate_script
from .script import FORMAT as SCRIPT_FORMAT
from .sim import DT_DEFAULT, dump_trajectories, listen, load_trajectories, simulate
from .sim.trajdump import FORMAT as TRAJ_FORMAT

FORMATS = {"script": SCRIPT_FORMAT, "code": CODE_FORMAT, "traj": TRAJ_FORMAT, "eval": EVAL_FORMAT,
           "split": SPLIT_FORMAT, "manifest": MANIFEST_FORMAT, "nl": NL_FORMAT, "topology": XODR_FORMAT}


# ------------------------------------------------------------------ helpers

def _read(path, mode="r"):
    with open(path, mode, **({} if "b" in mode else {"encoding": "utf-8"})) as fh:
        return fh.read()


def _write(out_dir, name, data):
    path = os.path.join(out_dir, name)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as fh:
        fh.write(data)
    return path


def _emit(args, name, data):
    """Primary artifact: into --out when given, else to stdout."""
    if args.out:
        _write(args.out, name, data)
    elif isinstance(data, bytes):
        sys.stdout.buffer.write(data)
    else:
        sys.stdout.write(data)


def _config(args):
    skip = {"func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["version"] = __version__
    cfg["formats"] = FORMATS
    return cfg


def _record_config(args):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(args.out, "config.json", json.dumps(_config(args), indent=1, sort_keys=True) + "\n")


def load_topology(ref):
    """A built-in reference such as 'cross/a', or a path to a topology file."""
    if os.path.exists(ref):
        return parse_topology_file(_read(ref, "rb"))
    if "/" not in ref:
        raise L2IError(f"{ref!r} is neither a topology file nor a kind/variant reference")
    kind, variant = ref.split("/", 1)
    return build_variant(kind, variant)


_TOPOS = {}


def _topology(ref):
    if ref not in _TOPOS:
        _TOPOS[ref] = load_topology(ref)
    return _TOPOS[ref]


def _load_script(path, strict):
    script = load_script(_read(path, "rb"), strict=strict)
    topo = _topology(script.topology_ref)
    report = validate_script(script, topo)
    if report.violations:
        lines = [f"{v.code}: {v.message}" for v in report.violations]
        raise L2IError(f"{path}: script failed validation\n  " + "\n  ".join(lines))
    return script, topo


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(x) for x in items]


def _dataset_scenes(path):
    manifest = DatasetManifest.from_json(_read(os.path.join(path, "manifest.json")))
    return [(s["id"], os.path.join(path, s["file"])) for s in manifest.scenes]


def _check_header(text, fmt, what):
    first = text.lstrip().split("\n", 1)[0].strip()
    if first != f"# {fmt}":
        raise FormatVersionError(f"{what}: expected header '# {fmt}', found {first[:40]!r}")


# -------------------------------------------------------------- subcommands

def cmd_topology(args):
    if args.lane_count is None and args.scale is None:
        topo = build_variant(args.kind, args.variant)
    else:
        topo = build_topology(args.kind, args.lane_count or 2, args.lane_width, args.scale, args.seed)
    data = emit_topology_file(topo)
    _record_config(args)
    _emit(args, f"{topo.kind}-{topo.ref.split('/')[-1]}.xodr", data)
    if args.summary:
        print(f"{topo.ref}: {len(topo.lane_list)} lanes, lane count {topo.lane_count}, "
              f"lane width {topo.lane_width:g} m", file=sys.stderr)
    return 0


def cmd_generate(args):
    if args.plan:
        plan = plan_from_json(json.loads(_read(args.plan)))
    else:
        kinds = tuple(args.kinds.split(",")) if args.kinds else KINDS
        plan = default_plan(args.scenes_per_bucket, args.seed, kinds=kinds, retry_budget=args.retry_budget)
    out = args.out or "dataset"
    manifest = generate_dataset(plan, out, jobs=args.jobs)
    args.out = out
    _record_config(args)
    if args.summary:
        print(f"{'bucket':<24} {'requested':>9} {'generated':>9}")
        for b in manifest.buckets:
            print(f"{b['bucket']:<24} {b['requested']:>9} {b['generated']:>9}")
    for s in manifest.shortfalls:
        print(f"shortfall {s['scene']}: " + "; ".join(s["reasons"][:3]), file=sys.stderr)
    print(f"{len(manifest.scenes)} scenes written to {out} ({manifest.status})", file=sys.stderr)
    return 0 if manifest.status == "complete" else 1


def cmd_compile(args):
    script, topo = _load_script(args.script, args.strict)
    _record_config(args)
    _emit(args, "code.txt", emit_code(compile_script(script, topo)))
    return 0


def cmd_describe(args):
    script, topo = _load_script(args.script, args.strict)
    progs = compile_script(script, topo)
    text = scene_text(progs, script, topo)
    if args.paraphrase_seed:
        text = paraphrase(text, args.paraphrase_seed)
    _record_config(args)
    _emit(args, "description.txt", text + "\n")
    return 0


def cmd_parse_nl(args):
    parsed = parse_description(_read(args.text))
    if not parsed.programs:
        raise L2IError("description holds only a summary; detailed sentences are needed to recover programs")
    _record_config(args)
    _emit(args, "code.txt", emit_code(parsed.programs))
    return 0


def _simulate_input(path, topology_ref, dt, strict):
    """(trajectories, interactions, safety, topology, classes) for a script or a code text."""
    raw = _read(path)
    if raw.lstrip().startswith("{"):
        script, topo = _load_script(path, strict)
        progs = compile_script(script, topo)
    else:
        _check_header(raw, CODE_FORMAT, path)
        if not topology_ref:
            raise L2IError("simulating a code text needs --topology")
        topo = _topology(topology_ref)
        progs = parse_code(raw)
        objects = tuple(ObjectSpec(p.object_index, p.object_class, DEFAULT_FOOTPRINTS[p.object_class])
                        for p in progs)
        script = SceneScript(topo.ref, "", objects)
    trajs = simulate(progs, topo, dt=dt)
    events, safety = listen(trajs, script, topo)
    return trajs, events, safety, topo, {o.index: o.cls for o in script.objects}


def _sim_job(job):
    sid, path, out, dt, strict = job
    trajs, events, safety, _, _ = _simulate_input(path, None, dt, strict)
    _write(out, f"trajs/{sid}.traj", dump_trajectories(trajs, events, safety))
    return sid, len(safety)


def cmd_simulate(args):
    if os.path.isdir(args.input):
        if not args.out:
            raise L2IError("simulating a dataset needs --out")
        _record_config(args)
        jobs = [(sid, p, args.out, args.dt, args.strict) for sid, p in _dataset_scenes(args.input)]
        done = _map(_sim_job, jobs, args.jobs)
        flagged = sum(1 for _, n in done if n)
        print(f"{len(done)} scenes simulated, {flagged} with safety events", file=sys.stderr)
        return 0
    trajs, events, safety, topo, classes = _simulate_input(args.input, args.topology, args.dt, args.strict)
    _record_config(args)
    _emit(args, "trajectories.traj", dump_trajectories(trajs, events, safety))
    if args.plot:
        from .figures import plot_scene
        plot_scene(topo, trajs, args.plot, classes)
    if args.summary:
        for ev in events:
            print(f"object {ev.obstacle_index}: {ev.type} completed at t={ev.t_complete:.2f}", file=sys.stderr)
        for ev in safety:
            print(f"{ev.kind} {ev.objects} at t={ev.t:.2f}", file=sys.stderr)
    return 0


def _load_dump(path):
    text = _read(path)
    _check_header(text, TRAJ_FORMAT, path)
    return load_trajectories(text)


def _eval_job(job):
    sid, gen_path, gt_path, W, penalize = job
    gen, gen_events, gen_safety = _load_dump(gen_path)
    gt, gt_events, _ = _load_dump(gt_path)
    gts = [GtInteraction(e.obstacle_index, e.type, e.ego_pos, e.obstacle_pos) for e in gt_events]
    return score_scene(sid, gen, gen_events, gen_safety, gt, gts, W, penalize)


def _pairs(gen, gt):
    if os.path.isdir(gen) != os.path.isdir(gt):
        raise L2IError("gen and gt must both be files or both be directories")
    if not os.path.isdir(gen):
        return [(os.path.splitext(os.path.basename(gt))[0], gen, gt)]
    names = sorted(n for n in os.listdir(gt) if n.endswith(".traj"))
    missing = [n for n in names if not os.path.exists(os.path.join(gen, n))]
    if missing:
        raise L2IError(f"{len(missing)} gt dump(s) have no generated counterpart, first {missing[0]}")
    return [(n[:-5], os.path.join(gen, n), os.path.join(gt, n)) for n in names]


def cmd_evaluate(args):
    jobs = [(sid, g, t, args.resample_points, not args.no_penalty) for sid, g, t in _pairs(args.gen, args.gt)]
    scores = _map(_eval_job, jobs, args.jobs)
    report = EvalReport(scores, {"W": args.resample_points, "penalize_missing": not args.no_penalty})
    _record_config(args)
    _emit(args, "report.json", report.to_json())
    if args.summary:
        print(report.summary_table(), file=sys.stderr)
    if args.figures:
        from .figures import plot_report
        plot_report(report, args.figures)
    return 0


def cmd_split(args):
    manifest = DatasetManifest.from_json(_read(args.manifest))
    params = {"k": args.k} if args.protocol == "obstacle_count" else {}
    split = build_splits(manifest.scenes, args.protocol, params, seed=args.seed)
    _record_config(args)
    _emit(args, f"split-{args.protocol}.json", split.to_json())
    if args.summary:
        c = split.counts
        print(f"{args.protocol}: train {c['train']}, test {c['test']}", file=sys.stderr)
        print(f"  train types {c['train_types']}\n  test types  {c['test_types']}", file=sys.stderr)
    return 0


def baseline_scene(sid, path, paraphrase_seed=0, dt=DT_DEFAULT, W=DEFAULT_W, strict=False):
    """describe, paraphrase, parse, simulate and score one scene: (score, text, code)."""
    script, topo = _load_script(path, strict)
    gt_progs = compile_script(script, topo)
    text = paraphrase(scene_text(gt_progs, script, topo), paraphrase_seed)
    progs = parse_description(text).programs
    gen = simulate(progs, topo, dt=dt)
    gt = simulate(gt_progs, topo, dt=dt)
    events, safety = listen(gen, script, topo)
    score = score_scene(sid, gen, events, safety, gt, script.gt_interactions, W)
    return score, text, emit_code(progs)


def _baseline_job(job):
    sid, path, out, seed, dt, W, strict = job
    score, text, code = baseline_scene(sid, path, seed, dt, W, strict)
    if out:
        _write(out, f"texts/{sid}.txt", text + "\n")
        _write(out, f"code/{sid}.code", code)
    return score


def cmd_baseline(args):
    jobs = [(sid, p, args.out, args.paraphrase_seed, args.dt, args.resample_points, args.strict)
            for sid, p in _dataset_scenes(args.dataset)]
    scores = _map(_baseline_job, jobs, args.jobs)
    report = EvalReport(scores, {"W": args.resample_points, "dt": args.dt, "paraphrase_seed": args.paraphrase_seed})
    _record_config(args)
    _emit(args, "report.json", report.to_json())
    agg = report.aggregate
    if args.summary:
        print(report.summary_table(), file=sys.stderr)
    else:
        print(f"{agg['scenes']} scenes: T={agg['T']:.6g} D={agg['D']:.6g} R={agg['R']:.4f}", file=sys.stderr)
    if args.figures:
        from .figures import plot_report
        plot_report(report, args.figures)
    return 0


# ------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    # usage mistakes are user errors (status 1); status 2 is kept for bugs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for every random choice")
    common.add_argument("--dt", type=float, default=DT_DEFAULT, help="simulation tick in seconds")
    common.add_argument("--resample-points", type=int, default=DEFAULT_W, metavar="W",
                        help="points per trajectory for the discrepancy metric")
    common.add_argument("--strict", action="store_true", help="reject unknown fields in scene scripts")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for per-scene work")
    common.add_argument("--out", help="output directory (stdout when omitted)")
    common.add_argument("--summary", action="store_true", help="print a human-readable table to stderr")

    p = _Parser(prog="l2i", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("topology", parents=[common], help="build a road topology and emit its file")
    s.add_argument("kind", choices=KINDS)
    s.add_argument("variant", nargs="?", default="a")
    s.add_argument("--lane-count", type=int)
    s.add_argument("--lane-width", type=float, default=3.5)
    s.add_argument("--scale", type=float)
    s.set_defaults(func=cmd_topology)

    s = sub.add_parser("generate", parents=[common], help="sample a dataset plan into scenes plus a manifest")
    s.add_argument("--plan", help="plan document (JSON); default is the balanced desk plan")
    s.add_argument("--scenes-per-bucket", type=int, default=20)
    s.add_argument("--kinds", help="comma-separated topology kinds for the default plan")
    s.add_argument("--retry-budget", type=int, default=1000)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("compile", parents=[common], help="scene script to code text")
    s.add_argument("script")
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("describe", parents=[common], help="scene script to detailed description and summary")
    s.add_argument("script")
    s.add_argument("--paraphrase-seed", type=int, default=0)
    s.set_defaults(func=cmd_describe)

    s = sub.add_parser("parse-nl", parents=[common], help="description text to code text")
    s.add_argument("text")
    s.set_defaults(func=cmd_parse_nl)

    s = sub.add_parser("simulate", parents=[common], help="script, code text or dataset to trajectory dumps")
    s.add_argument("input")
    s.add_argument("--topology", help="topology reference or file, needed for code text input")
    s.add_argument("--plot", metavar="PNG", help="render the simulated scene to an image file")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("evaluate", parents=[common], help="score generated against ground-truth dumps")
    s.add_argument("gen")
    s.add_argument("gt")
    s.add_argument("--no-penalty", action="store_true", help="skip, rather than penalize, missing objects")
    s.add_argument("--figures", metavar="DIR", help="render report figures into DIR")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("split", parents=[common], help="dataset manifest to a train/test split")
    s.add_argument("manifest")
    s.add_argument("--protocol", choices=PROTOCOLS, required=True)
    s.add_argument("--k", type=int, default=1, help="obstacle-count threshold")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("baseline", parents=[common], help="describe, parse, simulate and evaluate a dataset")
    s.add_argument("dataset")
    s.add_argument("--paraphrase-seed", type=int, default=0)
    s.add_argument("--figures", metavar="DIR", help="render report figures into DIR")
    s.set_defaults(func=cmd_baseline)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except L2IError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # noqa: BLE001 - anything else is a bug
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
