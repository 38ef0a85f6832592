"""``tactile-har`` command line.

Every stage command wraps a single library operation with file I/O; ``run``
chains them into the full pipeline. Exit codes: 0 success, 1 input or
configuration error, 2 processing error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import depth as dstream
from . import fusion, graph, skeleton, tactile
from .config import PipelineConfig, load_config
from .errors import ConfigError, InputError, StageError, TactileHarError
from .gcn import G3DLayer, infer
from .pgm import encode_pgm, read_pgm
from .pipeline import Pipeline, discover_inputs
from .scores import format_scores, parse_scores
from .weights import read_weights_file

log = logging.getLogger("tactile_har")


# ---------------------------------------------------------------------------
# helpers

def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg.with_overrides(
        model_path=getattr(args, "model", None),
        registry_path=getattr(args, "registry", None),
        centroids_path=getattr(args, "centroids", None),
        frames=getattr(args, "frames", None),
        alpha=getattr(args, "alpha", None),
        fusion_rule=getattr(args, "rule", None),
        roi_threshold=getattr(args, "threshold", None),
        temperature=getattr(args, "temperature", None),
        depth_near=getattr(args, "near", None),
        depth_far=getattr(args, "far", None),
    )


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_bytes(args, data: bytes) -> None:
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


def _read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_graph(args) -> graph.SkeletonGraph:
    if not getattr(args, "edges", None):
        return graph.SkeletonGraph.default()
    edges = []
    num = 0
    for line in _read_text(args.edges).splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            i, j = (int(t) for t in line.split())
        except ValueError:
            raise ConfigError(f"bad edge line {line!r} in {args.edges}") from None
        edges.append((i, j))
        num = max(num, i, j)
    return graph.SkeletonGraph(args.joints or num, tuple(edges))


def _load_dmi(path) -> dstream.DepthMotionImage:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P5":
        pixels, _ = read_pgm(path)
        return dstream.DepthMotionImage(pixels.astype(np.float64))
    values, roi = graph.parse_matrix(data.decode("utf-8"))
    return dstream.DepthMotionImage(values, roi)


def _glyph_from_args(args) -> tactile.TactileGlyph:
    if args.glyph:
        return tactile.parse_glyph(args.glyph)
    if args.class_id is not None:
        registry = tactile.read_registry_file(_config(args).registry)
        return tactile.lookup_label(args.class_id, registry)
    raise ConfigError("give a glyph as nine node tokens or --class-id")


# ---------------------------------------------------------------------------
# skel

def cmd_skel_parse(args):
    seq = skeleton.read_skeleton_file(args.input)
    valid = int(seq.validity().sum())
    total = len(seq) * seq.num_joints
    if args.format == "tsv":
        _emit(args, "frames\tjoints\tframe_rate_hz\tvalid_joints\n"
                    f"{len(seq)}\t{seq.num_joints}\t{seq.frame_rate_hz:.9g}\t{valid}\n")
    else:
        _emit(args, f"frames: {len(seq)}\njoints: {seq.num_joints}\n"
                    f"frame rate: {seq.frame_rate_hz:.9g} Hz\nvalid joints: {valid}/{total}\n")


def cmd_skel_remap(args):
    seq = skeleton.read_skeleton_file(args.input)
    _emit(args, skeleton.serialize_skeleton(skeleton.remap_sequence(seq)))


def cmd_skel_preprocess(args):
    cfg = _config(args)
    seq = skeleton.read_skeleton_file(args.input)
    seq = skeleton.preprocess(seq, cfg.frames, args.ref_joint or cfg.ref_joint)
    _emit(args, skeleton.serialize_skeleton(seq))


# ---------------------------------------------------------------------------
# graph

def cmd_graph_build(args):
    A = graph.base_adjacency(_load_graph(args))
    st = graph.st_graph(A, args.frames_graph)
    _emit(args, graph.format_matrix(st.toarray()))


def cmd_graph_khop(args):
    A = graph.base_adjacency(_load_graph(args))
    M = graph.k_hop_adjacency(A, args.k)
    if args.normalize:
        M = graph.normalize_adjacency(M, args.self_loops)
    _emit(args, graph.format_matrix(M))


def cmd_graph_window(args):
    A = graph.base_adjacency(_load_graph(args))
    block = graph.window_adjacency(graph.k_hop_adjacency(A, args.k), args.tau).block
    if args.normalize:
        block = graph.normalize_adjacency(block)
    _emit(args, graph.format_matrix(block))


def cmd_graph_dump(args):
    adj = graph.MultiScaleAdjacency.build(graph.base_adjacency(_load_graph(args)), args.hops)
    parts = ["# base\n" + graph.format_matrix(adj.base)]
    for k, (h, n) in enumerate(zip(adj.hops, adj.normalized)):
        parts.append(f"# hop {k}\n" + graph.format_matrix(h))
        parts.append(f"# normalized {k}\n" + graph.format_matrix(n))
    _emit(args, "".join(parts))


# ---------------------------------------------------------------------------
# model

def cmd_model_load_check(args):
    path = args.input or _config(args).model_path
    if path is None:
        raise ConfigError("no model file given")
    model = read_weights_file(path)
    rows = []
    for n, layer in enumerate(model.layers):
        kind = "g3d" if isinstance(layer, G3DLayer) else "ms-gcn"
        tau = layer.tau if isinstance(layer, G3DLayer) else ""
        rows.append((str(n), kind, str(layer.in_channels), str(layer.out_channels),
                     str(layer.num_scales - 1), str(tau)))
    rows.append((str(len(model.layers)), "head", str(model.head.in_channels), str(model.num_classes), "", ""))
    header = ("layer", "kind", "in", "out", "hops", "tau")
    if args.format == "tsv":
        _emit(args, "\n".join("\t".join(r) for r in [header, *rows]) + "\n")
    else:
        widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header, *rows]]
        _emit(args, f"{path}: ok\n" + "\n".join(lines) + "\n")


def cmd_model_infer(args):
    cfg = _config(args)
    pipe = Pipeline.load(cfg)
    rows = []
    for path in args.inputs:
        seq = skeleton.read_skeleton_file(path)
        rows.append((Path(path).stem, infer(seq, pipe.model, pipe.adjacency, pipe.class_ids, pipe.class_names)))
    _emit(args, format_scores(rows))


# ---------------------------------------------------------------------------
# dmi

def _maybe_figure(args, img: dstream.DepthMotionImage, title: str):
    if getattr(args, "figure", None):
        from .plotting import save_dmi

        save_dmi(args.figure, img.values, img.roi, title)


def cmd_dmi_compute(args):
    cfg = _config(args)
    stack = dstream.load_depth_directory(args.input, cfg.depth_near, cfg.depth_far)
    if args.start or args.count:
        stack = dstream.DepthSequence(stack.frames, args.start or 0, args.count)
    img = dstream.compute_dmi(stack)
    _maybe_figure(args, img, "DMI")
    if args.output and str(args.output).endswith(".pgm"):
        _emit_bytes(args, encode_pgm(img.values.astype(np.uint8), 255))
    else:
        _emit(args, graph.format_matrix(img.values))


def cmd_dmi_normalize(args):
    img = dstream.normalize_dmi(_load_dmi(args.input))
    _maybe_figure(args, img, "normalized DMI")
    _emit(args, graph.format_matrix(img.values, img.roi))


def cmd_dmi_crop(args):
    cfg = _config(args)
    img = dstream.crop_roi(_load_dmi(args.input), cfg.roi_threshold)
    _maybe_figure(args, img, "cropped DMI")
    _emit(args, graph.format_matrix(img.values, img.roi))


def cmd_dmi_classify(args):
    cfg = _config(args)
    if cfg.centroids_path is None:
        raise ConfigError("no centroids file given")
    centroids = dstream.Centroids.load(cfg.centroids_path)
    side = None if args.side == 0 else (args.side or cfg.centroid_side)
    scores = dstream.nearest_centroid_classify(_load_dmi(args.input), centroids, cfg.temperature, side)
    _emit(args, format_scores([(args.id or Path(args.input).stem, scores)]))


# ---------------------------------------------------------------------------
# fuse / eval

def cmd_fuse(args):
    cfg = _config(args)
    skel = parse_scores(_read_text(args.skeleton_scores))
    dep = dict(parse_scores(_read_text(args.depth_scores)))
    rows = []
    for sid, sv in skel:
        if sid not in dep:
            raise InputError(f"sequence {sid!r} has no depth scores")
        rows.append((sid, fusion.fuse_scores(sv, dep[sid], fusion.FusionConfig(cfg.alpha, cfg.fusion_rule))))
    _emit(args, format_scores(rows))


def _eval_inputs(args):
    records = fusion.parse_records(_read_text(args.input))
    if args.classes:
        classes = fusion.parse_class_list(_read_text(args.classes))
    else:
        classes = list(tactile.read_registry_file(_config(args).registry).class_names)
    return records, classes


def cmd_eval_tally(args):
    records, classes = _eval_inputs(args)
    table = fusion.trial_tally(records, classes)
    _emit(args, table.to_tsv() if args.format == "tsv" else table.render())


def cmd_eval_confusion(args):
    records, classes = _eval_inputs(args)
    M = fusion.confusion_matrix(records, classes)
    if args.figure:
        from .plotting import save_confusion_matrix

        save_confusion_matrix(args.figure, M, classes, "confusion matrix")
    lines = ["true\\predicted\t" + "\t".join(classes)]
    lines += [name + "\t" + "\t".join(str(v) for v in row) for name, row in zip(classes, M)]
    _emit(args, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# glyph

def cmd_glyph_validate(args):
    g = _glyph_from_args(args)
    report = tactile.validate_glyph(g, registry_mode=not args.relaxed)
    _emit(args, f"{report}\n")
    return 0 if report.ok else 1


def cmd_glyph_encode(args):
    frame = tactile.encode_frame(_glyph_from_args(args))
    if args.output and args.format != "text":
        _emit_bytes(args, frame)
    else:
        _emit(args, frame.hex() + "\n")


def cmd_glyph_decode(args):
    src = Path(args.input)
    if src.is_file():
        data = src.read_bytes()
        if len(data) != tactile.FRAME_SIZE:
            data = bytes.fromhex(data.decode("ascii").strip())
    else:
        try:
            data = bytes.fromhex(args.input)
        except ValueError:
            raise InputError(f"{args.input!r} is neither a file nor a hex frame") from None
    g = tactile.decode_frame(data)
    if args.format == "tsv":
        _emit(args, tactile.format_glyph(g) + "\n")
    else:
        _emit(args, tactile.format_glyph(g) + "\n\n" + tactile.render_ascii(g))


def cmd_glyph_render(args):
    g = _glyph_from_args(args)
    if args.figure:
        from .plotting import save_glyph

        save_glyph(args.figure, g)
    _emit(args, tactile.render_ascii(g))


def cmd_glyph_registry_check(args):
    path = args.input or _config(args).registry
    registry = tactile.read_registry_file(path)
    if args.format == "tsv":
        _emit(args, "".join(f"{e.class_id}\t{e.name}\t{tactile.encode_frame(e.glyph).hex()}\n" for e in registry))
    else:
        _emit(args, f"{path}: {len(registry)} entries ok\n")


# ---------------------------------------------------------------------------
# run / fixtures

def cmd_run(args):
    cfg = _config(args)
    pipeline = Pipeline.load(cfg)
    depth_scores = None
    if args.depth_scores:
        depth_scores = dict(parse_scores(_read_text(args.depth_scores), pipeline.class_names))
    skel_input = args.skeleton
    depth_input = args.depth
    if skel_input is None and args.config:
        base = Path(args.config).parent
        skel_input = base / "skeleton"
        if depth_input is None and (base / "depth").is_dir():
            depth_input = base / "depth"
    if skel_input is None:
        raise ConfigError("no skeleton input given")
    items = discover_inputs(Path(skel_input), None if depth_input is None else Path(depth_input), depth_scores)
    results = pipeline.run(items, args.jobs)
    if args.format == "text":
        blocks = []
        for r in results:
            block = f"{r.sequence_id}: {r.class_name} (class {r.class_id}, score {r.score:.6f})\n" \
                    f"frame {r.frame.hex()}\n"
            if args.preview:
                block += tactile.render_ascii(r.glyph)
            blocks.append(block)
        _emit(args, "\n".join(blocks))
    else:
        _emit(args, "".join(r.to_record() + "\n" for r in results))


def cmd_fixtures_make(args):
    from .fixtures import make_fixtures

    out = make_fixtures(args.directory, args.seed)
    _emit(args, f"fixtures written to {out}\n")


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML pipeline configuration")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--format", choices=("text", "tsv"), default="tsv")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(
        prog="tactile-har", description="Skeleton and depth action recognition with tactile glyph output.")
    groups = parser.add_subparsers(dest="group", required=True)

    def group(name, help_):
        return groups.add_parser(name, help=help_).add_subparsers(dest="command", required=True)

    def command(sub, name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    skel = group("skel", "skeleton files")
    p = command(skel, "parse", cmd_skel_parse, "parse an SKL1 file and summarise it")
    p.add_argument("input")
    p = command(skel, "remap", cmd_skel_remap, "fill in the v2-only joints of a 20-joint file")
    p.add_argument("input")
    p = command(skel, "preprocess", cmd_skel_preprocess, "remap, center, scale and resample")
    p.add_argument("input")
    p.add_argument("--frames", type=int)
    p.add_argument("--ref-joint", type=int)

    g = group("graph", "skeleton graph matrices")
    graph_cmds = [
        ("build", cmd_graph_build, "dump the spatio-temporal graph adjacency"),
        ("khop", cmd_graph_khop, "dump the exact k-hop adjacency"),
        ("window", cmd_graph_window, "dump the tiled window adjacency"),
        ("dump", cmd_graph_dump, "dump base, hop and normalized matrices"),
    ]
    for name, fn, help_ in graph_cmds:
        p = command(g, name, fn, help_)
        p.add_argument("--edges", help="edge list file, one 'i j' pair per line (1-based)")
        p.add_argument("--joints", type=int, help="joint count for --edges (default: largest index)")
        if name == "build":
            p.add_argument("--frames", dest="frames_graph", type=int, default=1)
        if name in ("khop", "window"):
            p.add_argument("--k", type=int, required=True)
            p.add_argument("--normalize", action="store_true")
        if name == "khop":
            p.add_argument("--self-loops", action="store_true")
        if name == "window":
            p.add_argument("--tau", type=int, default=3)
        if name == "dump":
            p.add_argument("--hops", type=int, default=3)

    m = group("model", "model weights and inference")
    p = command(m, "load-check", cmd_model_load_check, "validate an MSW1 weights file")
    p.add_argument("input", nargs="?")
    p = command(m, "infer", cmd_model_infer, "score preprocessed skeleton files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--model")
    p.add_argument("--registry")

    d = group("dmi", "depth motion images")
    p = command(d, "compute", cmd_dmi_compute, "DMI of a directory of PGM frames")
    p.add_argument("input")
    p.add_argument("--near", type=float)
    p.add_argument("--far", type=float)
    p.add_argument("--start", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--figure")
    p = command(d, "normalize", cmd_dmi_normalize, "divide a DMI by its maximum")
    p.add_argument("input")
    p.add_argument("--figure")
    p = command(d, "crop", cmd_dmi_crop, "crop a DMI to its informative region")
    p.add_argument("input")
    p.add_argument("--threshold", type=float)
    p.add_argument("--figure")
    p = command(d, "classify", cmd_dmi_classify, "nearest-centroid depth scores")
    p.add_argument("input")
    p.add_argument("--centroids")
    p.add_argument("--temperature", type=float)
    p.add_argument("--side", type=int, help="resize side (0 = no resize)")
    p.add_argument("--id", help="sequence id (default: input file stem)")

    p = groups.add_parser("fuse", parents=[common], help="fuse skeleton and depth score files")
    p.set_defaults(func=cmd_fuse)
    p.add_argument("skeleton_scores")
    p.add_argument("depth_scores")
    p.add_argument("--alpha", type=float)
    p.add_argument("--rule", choices=("sum", "product"))

    e = group("eval", "trial evaluation")
    for name, fn, help_ in (("tally", cmd_eval_tally, "per-action score table"),
                            ("confusion", cmd_eval_confusion, "confusion matrix")):
        p = command(e, name, fn, help_)
        p.add_argument("input", help="prediction records (TSV)")
        p.add_argument("--classes", help="class list file, one name per line")
        p.add_argument("--registry")
        if name == "confusion":
            p.add_argument("--figure")

    gl = group("glyph", "tactile glyphs")
    for name, fn, help_ in (("validate", cmd_glyph_validate, "check glyph rules"),
                            ("encode", cmd_glyph_encode, "encode a TGF1 wire frame"),
                            ("render", cmd_glyph_render, "ASCII preview")):
        p = command(gl, name, fn, help_)
        p.add_argument("glyph", nargs="?", help="nine node tokens, e.g. '00 F 00 00 11 00 00 28 00'")
        p.add_argument("--class-id", type=int)
        p.add_argument("--registry")
        if name == "validate":
            p.add_argument("--relaxed", action="store_true", help="allow any number of FULL nodes")
        if name == "render":
            p.add_argument("--figure")
    p = command(gl, "decode", cmd_glyph_decode, "decode a TGF1 frame (file or hex)")
    p.add_argument("input")
    p = command(gl, "registry-check", cmd_glyph_registry_check, "validate a TGR1 registry")
    p.add_argument("input", nargs="?")
    p.add_argument("--registry")

    p = groups.add_parser("run", parents=[common], help="full pipeline")
    p.set_defaults(func=cmd_run)
    p.add_argument("--skeleton", help="SKL1 file or directory of .skl files")
    p.add_argument("--depth", help="directory with one PGM frame directory per sequence id")
    p.add_argument("--depth-scores", help="external depth score file (replaces the baseline)")
    p.add_argument("--model")
    p.add_argument("--registry")
    p.add_argument("--centroids")
    p.add_argument("--frames", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rule", choices=("sum", "product"))
    p.add_argument("--preview", action="store_true", help="append ASCII glyph previews (text format)")

    f = group("fixtures", "fixture management")
    p = command(f, "make", cmd_fixtures_make, "regenerate the end-to-end fixture set")
    p.add_argument("directory")
    p.add_argument("--seed", type=int, default=20211)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = args.group if args.group in ("fuse", "run") else f"{args.group} {args.command}"
    try:
        status = args.func(args)
    except StageError as exc:
        print(f"error: [{stage}] {exc}", file=sys.stderr)
        return exc.exit_code
    except TactileHarError as exc:
        print(f"error: [{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: [{stage}] {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: [{stage}] {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
