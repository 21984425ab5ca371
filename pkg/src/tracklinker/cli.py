"""Command-line pipeline: synth, train, link, color, associate, eval."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import colorxfer, defaults, ict, metrics, synth, trackio
from .globallink import GateConfig, candidate_pairs, link, score_pairs
from .linker import (TrainConfig, generate_samples, load_params, save_params,
                     train)


def _read_trackset(path: Path, camera_id: str = "") -> trackio.TrackSet:
    with open(path, "r", encoding="utf-8") as fh:
        return trackio.parse_mot(fh, camera_id=camera_id or path.stem)


def _write_trackset(trackset: trackio.TrackSet, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        trackio.write_mot(trackset, fh)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return (int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"image size must look like 1920x1080, got {text!r}") from None


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(open(path, "r", encoding="utf-8"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = synth.SceneConfig(num_identities=args.identities, cameras=args.cameras,
                               frames=args.frames, image_size=args.image_size,
                               walk_step_std=args.walk_step,
                               occlusion_rate=args.occlusion_rate,
                               embedding_intra_std=args.intra_std,
                               embedding_inter_separation=args.inter_separation,
                               camera_bias_std=args.camera_bias, seed=args.seed)
    scene = synth.gen_scene(config)
    for cam, gt in scene.gt.items():
        _write_trackset(gt, out / f"gt_{cam}.txt")
        result = synth.fragment(gt, config)
        _write_trackset(result.trackset, out / f"pred_{cam}.txt")
        with open(out / f"emb_{cam}.txt", "w", encoding="utf-8", newline="\n") as fh:
            trackio.write_embeddings(scene.embeddings[cam], fh)
        with open(out / f"cuts_{cam}.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("original_id,head_id,tail_id,gap,cut_frame\n")
            for cut in result.cuts:
                fh.write(f"{cut.original_id},{cut.head_id},{cut.tail_id},"
                         f"{cut.gap},{cut.cut_frame}\n")
    print(f"wrote scene with {len(scene.gt)} camera(s) to {out}")
    return 0


def cmd_train(args) -> int:
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                         batch_size=args.batch_size,
                         label_smoothing=args.label_smoothing,
                         neg_pos_ratio=args.neg_pos_ratio, seed=args.seed,
                         image_size=args.image_size)
    samples = []
    per_file = None
    if args.samples is not None:
        total_positives = max(1, int(round(args.samples / (1.0 + config.neg_pos_ratio))))
        per_file = max(1, total_positives // len(args.gt))
    for path in args.gt:
        gt = _read_trackset(Path(path))
        samples.extend(generate_samples(gt, config, num_positives=per_file))
    params, history = train(samples, config)
    Path(args.out).write_bytes(save_params(params))
    if args.history:
        with open(args.history, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,loss\n")
            for epoch, value in enumerate(history, start=1):
                fh.write(f"{epoch},{value:.6f}\n")
    for epoch, value in enumerate(history, start=1):
        print(f"epoch {epoch}: loss {value:.6f}")
    print(f"saved weights to {args.out} ({params.num_learnable()} learnable parameters)")
    return 0


def cmd_link(args) -> int:
    params = load_params(Path(args.weights).read_bytes())
    trackset = _read_trackset(Path(args.input))
    gate = GateConfig(temporal_gap=(0, args.max_gap), spatial_radius=args.radius,
                      score_threshold=args.sigma_a)
    pairs = candidate_pairs(trackset, gate)
    scored = score_pairs(params, pairs, trackset, image_size=args.image_size)
    linked = link(trackset, scored, gate)
    _write_trackset(linked, Path(args.output))
    print(f"{len(trackset)} tracklets in, {len(linked)} out "
          f"({len(scored)} candidates scored)")
    return 0


def cmd_color(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reference = []
    for path in args.reference[::args.stride] if args.stride > 1 else args.reference:
        with open(path, "rb") as fh:
            reference.append(colorxfer.read_ppm(fh))
    stats_ref = colorxfer.channel_stats(reference)
    for path in args.content:
        with open(path, "rb") as fh:
            image = colorxfer.read_ppm(fh)
        stats_content = colorxfer.channel_stats([image])
        result = colorxfer.transfer(image, stats_content, stats_ref)
        target = out / Path(path).name
        with open(target, "wb") as fh:
            colorxfer.write_ppm(result, fh)
    print(f"transferred {len(args.content)} image(s) to {out}")
    return 0


def cmd_associate(args) -> int:
    if len(args.mot) != len(args.emb):
        raise ValueError("need one embedding file per MOT file")
    alpha = args.alpha if args.alpha is not None else defaults.PROFILE_ALPHA[args.profile]
    per_camera = []
    for mot_path, emb_path in zip(args.mot, args.emb):
        trackset = _read_trackset(Path(mot_path))
        with open(emb_path, "r", encoding="utf-8") as fh:
            embeddings = trackio.parse_embeddings(fh)
        per_camera.append((trackset, embeddings))
    mapping = ict.assign_global_ids(per_camera, ict.AssocConfig(alpha=alpha),
                                    last_k=args.last_k)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        ict.write_global_ids(mapping, fh)
    n_global = len(set(mapping.values()))
    print(f"assigned {n_global} global ids over {len(mapping)} tracklets "
          f"(alpha {alpha})")
    return 0


def cmd_eval(args) -> int:
    if args.mtmc:
        gt = {Path(p).stem: _read_trackset(Path(p)) for p in args.gt}
        pred = {Path(p).stem: _read_trackset(Path(p)) for p in args.pred}
        if len(args.gt) != len(args.pred):
            raise ValueError("need matching numbers of gt and pred files")
        mapping = None
        if args.idmap:
            with open(args.idmap, "r", encoding="utf-8") as fh:
                mapping = ict.read_global_ids(fh)
        idf1, idp, idr = metrics.evaluate_mtmc(gt, pred, mapping,
                                               iou_threshold=args.iou)
        rows = [("IDF1", idf1), ("IDP", idp), ("IDR", idr)]
        print(f"{'metric':<8}{'value':>10}")
        for name, value in rows:
            print(f"{name:<8}{value:>10.4f}")
        if args.csv:
            with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("metric,value\n")
                for name, value in rows:
                    fh.write(f"{name},{value:.6f}\n")
        return 0
    if len(args.gt) != 1 or len(args.pred) != 1:
        raise ValueError("single-camera eval takes exactly one gt and one pred file")
    gt = _read_trackset(Path(args.gt[0]))
    pred = _read_trackset(Path(args.pred[0]))
    gt_range = gt.frame_range
    pred_range = pred.frame_range
    if pred_range is not None and gt_range is not None:
        if pred_range[0] < gt_range[0] or pred_range[1] > gt_range[1]:
            raise ValueError(f"prediction frames {pred_range} fall outside the "
                             f"ground-truth range {gt_range}")
    report = metrics.evaluate(gt, pred, iou_threshold=args.iou)
    print(metrics.format_report(report))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(metrics.report_csv_rows(report)) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracklinker",
        description="Post-processing toolkit for multi-camera tracking output")
    parser.add_argument("--config", help="key = value file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cameras", type=int, default=1)
    p.add_argument("--identities", type=int, default=20)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--image-size", type=_parse_size, default=defaults.IMAGE_SIZE)
    p.add_argument("--walk-step", type=float, default=5.0)
    p.add_argument("--occlusion-rate", type=float, default=0.5)
    p.add_argument("--intra-std", type=float, default=0.05)
    p.add_argument("--inter-separation", type=float, default=0.6)
    p.add_argument("--camera-bias", type=float, default=0.05)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the link network on MOT ground truth")
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--out", required=True, help="weights file to write")
    p.add_argument("--history", help="per-epoch loss CSV")
    p.add_argument("--epochs", type=int, default=defaults.EPOCHS)
    p.add_argument("--lr", type=float, default=defaults.LEARNING_RATE)
    p.add_argument("--batch-size", type=int, default=defaults.BATCH_SIZE)
    p.add_argument("--label-smoothing", type=float, default=defaults.LABEL_SMOOTHING)
    p.add_argument("--neg-pos-ratio", type=float, default=defaults.NEG_POS_RATIO)
    p.add_argument("--samples", type=int, help="approximate corpus size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=_parse_size, default=defaults.IMAGE_SIZE)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("link", help="repair identity switches in a MOT file")
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--max-gap", type=int, default=defaults.MAX_GAP)
    p.add_argument("--radius", type=float, default=defaults.SPATIAL_RADIUS)
    p.add_argument("--sigma-a", type=float, default=defaults.SCORE_THRESHOLD)
    p.add_argument("--image-size", type=_parse_size, default=defaults.IMAGE_SIZE)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("color", help="transfer reference color statistics onto frames")
    p.add_argument("--reference", nargs="+", required=True, help="PPM style donors")
    p.add_argument("--content", nargs="+", required=True, help="PPM frames to re-stat")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stride", type=int, default=1,
                   help="pool reference stats over every k-th file")
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("associate", help="assign global ids across cameras")
    p.add_argument("--mot", nargs="+", required=True)
    p.add_argument("--emb", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--profile", choices=sorted(defaults.PROFILE_ALPHA), default="mmct")
    p.add_argument("--alpha", type=float, help="override the profile threshold")
    p.add_argument("--last-k", type=int, default=defaults.MEAN_EMBED_FRAMES)
    p.set_defaults(func=cmd_associate)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--mtmc", action="store_true")
    p.add_argument("--idmap", help="global-id CSV from 'associate'")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--csv", help="write metric,value rows here")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # pre-scan for --config so file values become flag defaults
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            config_path = argv[idx + 1]
        except IndexError:
            parser.error("--config needs a path")
        try:
            file_values = _load_config_file(config_path)
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        for action in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
            known = {a.dest for a in action._actions}  # noqa: SLF001
            action.set_defaults(**{k: _coerce(action, k, v)
                                   for k, v in file_values.items() if k in known})
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _coerce(subparser, dest: str, value: str):
    for action in subparser._actions:  # noqa: SLF001
        if action.dest == dest and action.type is not None:
            return action.type(value)
        if action.dest == dest and isinstance(action.default, bool):
            return value.lower() in ("1", "true", "yes")
        if action.dest == dest and isinstance(action.default, int):
            return int(value)
        if action.dest == dest and isinstance(action.default, float):
            return float(value)
    return value


if __name__ == "__main__":
    sys.exit(main())
