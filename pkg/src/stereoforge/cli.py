"""Batch command-line driver.

Subcommands operate on a scene bundle directory:

    <bundle>/calib.txt            camera/rig calibration
    <bundle>/scene_spec.txt       synthetic scene description (synth bundles)
    <bundle>/frames/              L_tNN.png / R_tNN.png / C_tNN.png
    <bundle>/gt/                  disp_L.pfm, disp_R.pfm, disp_LC.pfm,
                                  occ_L.png, occ_R.png, material.png
    <bundle>/match/               dstar.pfm, ustar.pfm, cons_L.png, cons_R.png
    <bundle>/postprocess/         disp_final.pfm, cloud.ply
    <bundle>/warp/                disp_LC.pfm, material_LC.png
    <bundle>/eval/                report.txt

All outputs are deterministic: rerunning a command with identical inputs
produces byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imio, kvtext, labels, matcher, metrics, rectify, synth
from .camera import (
    Calibration,
    DisparityMap,
    PinholeCamera,
    RigidTransform,
    StereoRig,
    disparity_to_depth,
    load_calibration,
    save_calibration,
)
from .errors import StereoforgeError


@dataclass
class PipelineConfig:
    """Tunable knobs shared by the pipeline commands; CLI flags override file values."""

    census_w: int = 9
    census_h: int = 7
    d_max: int = 64
    p1: float | None = None
    p2: float | None = None
    paths: int = 8
    tau_var: float = 1.0
    bilateral: bool = True
    eval_mode: str = "full"
    align_space: str = "depth"

    @classmethod
    def load(cls, path: str | None) -> "PipelineConfig":
        cfg = cls()
        if path is None:
            return cfg
        p = Path(path)
        if not p.exists():
            raise StereoforgeError(f"config file not found: {p}")
        kv = kvtext.load_kv(p)
        conv = {
            "matcher.census_w": ("census_w", int),
            "matcher.census_h": ("census_h", int),
            "matcher.d_max": ("d_max", int),
            "matcher.p1": ("p1", float),
            "matcher.p2": ("p2", float),
            "matcher.paths": ("paths", int),
            "fusion.tau_var": ("tau_var", float),
            "fusion.bilateral": ("bilateral", lambda s: s not in ("0", "false", "no")),
            "eval.mode": ("eval_mode", str),
            "eval.align_space": ("align_space", str),
        }
        for key, value in kv.items():
            if key not in conv:
                raise StereoforgeError(f"{p}: unknown config key {key!r}")
            attr, fn = conv[key]
            setattr(cfg, attr, fn(value))
        return cfg

    def matcher_params(self) -> matcher.MatcherParams:
        return matcher.MatcherParams(
            d_max=self.d_max,
            census_window=(self.census_w, self.census_h),
            p1=self.p1,
            p2=self.p2,
            paths=self.paths,
        )


def _bundle(path: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise StereoforgeError(f"bundle directory not found: {p}")
    return p


def _load_frames(bundle: Path, prefix: str) -> list[np.ndarray]:
    frames_dir = bundle / "frames"
    paths = sorted(frames_dir.glob(f"{prefix}_t*.png"))
    if not paths:
        raise StereoforgeError(f"no {prefix}_t*.png frames under {frames_dir}")
    return [imio.load_gray8(p).astype(np.float32) for p in paths]


def _calibration_from_spec(spec: synth.SceneSpec) -> Calibration:
    cam_l = spec.cam_l()
    cam_r = spec.cam_l()
    cam_c = spec.cam_c()
    rig_lr = StereoRig(cam_l, cam_r, RigidTransform(np.eye(3), np.array([-spec.baseline_lr, 0.0, 0.0])))
    rig_lc = StereoRig(cam_l, cam_c, RigidTransform(np.eye(3), np.array([-spec.baseline_lc, 0.0, 0.0])))
    return Calibration(cam_l=cam_l, cam_r=cam_r, rig_lr=rig_lr, cam_c=cam_c, rig_lc=rig_lc)


def _is_prerectified(rig: StereoRig) -> bool:
    t = rig.ref_to_tgt.t
    return (
        np.abs(rig.ref_to_tgt.r - np.eye(3)).max() < 1e-12
        and abs(t[1]) < 1e-12
        and abs(t[2]) < 1e-12
        and t[0] < 0
    )


def _identity_setup(kind: str, cam_ref: PinholeCamera, cam_tgt: PinholeCamera, baseline: float) -> rectify.RectifiedSetup:
    return rectify.RectifiedSetup(
        kind=kind,
        a_ref=cam_ref.matrix, a_tgt=cam_tgt.matrix,
        r_ref=np.eye(3), r_tgt=np.eye(3),
        size_ref=(cam_ref.width, cam_ref.height),
        size_tgt=(cam_tgt.width, cam_tgt.height),
        baseline=baseline,
    )


def _setups_for(calib: Calibration) -> tuple[rectify.RectifiedSetup, rectify.RectifiedSetup]:
    """LR and LC rectification setups; already-rectified rigs pass through untouched."""
    if _is_prerectified(calib.rig_lr):
        setup_lr = _identity_setup(rectify.BALANCED, calib.cam_l, calib.cam_r, calib.rig_lr.baseline)
    else:
        setup_lr = rectify.rectify_balanced(calib.rig_lr)
    if calib.rig_lc is None:
        raise StereoforgeError("calibration has no L-C rig")
    if _is_prerectified(calib.rig_lc):
        setup_lc = _identity_setup(rectify.UNBALANCED, calib.cam_l, calib.cam_c, calib.rig_lc.baseline)
    else:
        setup_lc = rectify.rectify_unbalanced(calib.rig_lc)
    return setup_lr, setup_lc


# --- subcommands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(args.out)
    kind = args.scene
    common = dict(
        width=args.width, height=args.height, d_max=args.d_max,
        seed=args.seed, frames=args.frames, noise_sigma=args.noise,
    )
    if kind == "plane":
        spec = synth.plane_scene(**common)
    elif kind == "occlusion":
        spec = synth.occlusion_scene(**common)
    elif kind == "ambiguous":
        spec = synth.ambiguous_scene(**common)
    else:
        raise StereoforgeError(f"unknown scene kind {kind!r}")

    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    kvtext.save_kv(out / "scene_spec.txt", synth.spec_to_kv(spec))
    save_calibration(out / "calib.txt", _calibration_from_spec(spec))

    for t in range(spec.frames):
        fr = synth.render_scene(spec, t)
        imio.save_gray8(out / "frames" / f"L_t{t:02d}.png", fr.img_l)
        imio.save_gray8(out / "frames" / f"R_t{t:02d}.png", fr.img_r)
        un = synth.render_unbalanced(spec, t)
        imio.save_gray8(out / "frames" / f"C_t{t:02d}.png", un.img_c)
        if t == 0:
            imio.disparity_to_pfm(out / "gt" / "disp_L.pfm", fr.disp_l)
            imio.disparity_to_pfm(out / "gt" / "disp_R.pfm", fr.disp_r)
            imio.disparity_to_pfm(out / "gt" / "disp_LC.pfm", un.disp_lc)
            imio.save_bool_png(out / "gt" / "occ_L.png", fr.occ_l)
            imio.save_bool_png(out / "gt" / "occ_R.png", fr.occ_r)
            imio.save_material_png(out / "gt" / "material.png", fr.material)
    print(f"synth: wrote {spec.frames} frame(s) to {out}")
    return 0


def cmd_rectify(args) -> int:
    cfg_bundle = _bundle(args.bundle)
    calib = load_calibration(cfg_bundle / "calib.txt")
    setup_lr, setup_lc = _setups_for(calib)
    out = Path(args.out) if args.out else cfg_bundle / "rectified"
    out.mkdir(parents=True, exist_ok=True)

    kv = {}
    kv.update(rectify.setup_to_kv(setup_lr, "rect_lr"))
    kv.update(rectify.setup_to_kv(setup_lc, "rect_lc"))
    kvtext.save_kv(out / "rect.txt", kv)

    frames_l = sorted((cfg_bundle / "frames").glob("L_t*.png"))
    frames_r = sorted((cfg_bundle / "frames").glob("R_t*.png"))
    for path, cam, r_new, a_new, size in (
        *[(p, calib.cam_l, setup_lr.r_ref, setup_lr.a_ref, setup_lr.size_ref) for p in frames_l],
        *[(p, calib.cam_r, setup_lr.r_tgt, setup_lr.a_tgt, setup_lr.size_tgt) for p in frames_r],
    ):
        img = imio.load_gray8(path).astype(np.float64)
        field = rectify.rectification_warp(cam, r_new, a_new, size)
        warped, _ = rectify.warp_image(img, field, interp="bilinear")
        imio.save_gray8(out / path.name, warped)
    print(f"rectify: wrote setups and {len(frames_l) + len(frames_r)} rectified frames to {out}")
    return 0


def cmd_match(args) -> int:
    bundle = _bundle(args.bundle)
    cfg = PipelineConfig.load(args.config)
    if args.d_max is not None:
        cfg.d_max = args.d_max
    frames_l = _load_frames(bundle, "L")
    frames_r = _load_frames(bundle, "R")
    if len(frames_l) != len(frames_r):
        raise StereoforgeError("unequal L/R frame counts")
    if cfg.d_max >= frames_l[0].shape[1]:
        raise StereoforgeError(f"d_max={cfg.d_max} must be below image width {frames_l[0].shape[1]}")
    params = cfg.matcher_params()
    fused_l, fused_r = matcher.spacetime_match_bidirectional(frames_l, frames_r, params)
    cons_l, cons_r = matcher.lr_consistency(fused_l.mean, fused_r.mean)

    out = bundle / "match"
    out.mkdir(exist_ok=True)
    imio.disparity_to_pfm(out / "dstar.pfm", fused_l.mean)
    imio.disparity_to_pfm(out / "dstar_R.pfm", fused_r.mean)
    imio.pfm_write(out / "ustar.pfm", fused_l.variance.astype(np.float32))
    imio.save_bool_png(out / "cons_L.png", cons_l)
    imio.save_bool_png(out / "cons_R.png", cons_r)
    print(f"match: fused {len(frames_l)} frame(s); "
          f"valid px {int(fused_l.mean.valid.sum())}/{fused_l.mean.valid.size}")
    return 0


def cmd_postprocess(args) -> int:
    bundle = _bundle(args.bundle)
    cfg = PipelineConfig.load(args.config)
    if args.tau_var is not None:
        cfg.tau_var = args.tau_var
    if args.no_bilateral:
        cfg.bilateral = False
    match_dir = bundle / "match"
    disp = imio.disparity_from_pfm(match_dir / "dstar.pfm")
    variance, _ = imio.pfm_read(match_dir / "ustar.pfm")
    fused = matcher.FusedDisparity(
        mean=DisparityMap(values=disp.values, valid=disp.valid, variance=variance.astype(np.float64)),
        variance=variance.astype(np.float64),
        per_frame_count=np.full(disp.values.shape, 1, dtype=np.int64),
    )
    keep = labels.variance_filter(fused, cfg.tau_var)
    disp = DisparityMap(values=disp.values, valid=keep, variance=fused.variance)

    mask_path = Path(args.mask) if args.mask else bundle / "manual_mask.rle"
    if mask_path.exists():
        removal = imio.rle_decode(mask_path.read_text(encoding="utf-8"), source=str(mask_path))
        if removal.shape != disp.values.shape:
            raise StereoforgeError(f"{mask_path}: mask size {removal.shape} does not match disparity")
        disp = labels.apply_manual_mask(disp, removal)

    guide_paths = sorted((bundle / "frames").glob("L_t*.png"))
    if not guide_paths:
        raise StereoforgeError(f"no guide frames under {bundle / 'frames'}")
    guide = imio.load_gray8(guide_paths[0]).astype(np.float64)
    if cfg.bilateral:
        disp = labels.bilateral_smooth(disp, guide)

    calib = load_calibration(bundle / "calib.txt")
    out = bundle / "postprocess"
    out.mkdir(exist_ok=True)
    imio.disparity_to_pfm(out / "disp_final.pfm", disp)
    cloud = labels.export_point_cloud(
        disp, guide, calib.cam_l, calib.rig_lr.baseline, variance=fused.variance
    )
    labels.save_ply(out / "cloud.ply", cloud)
    print(f"postprocess: kept {int(disp.valid.sum())} px; cloud has {cloud.count} points")
    return 0


def cmd_warp(args) -> int:
    bundle = _bundle(args.bundle)
    calib = load_calibration(bundle / "calib.txt")
    setup_lr, setup_lc = _setups_for(calib)
    src = bundle / "postprocess" / "disp_final.pfm"
    if not src.exists():
        src = bundle / "gt" / "disp_L.pfm"
    disp_lr = imio.disparity_from_pfm(src)
    out = bundle / "warp"
    out.mkdir(exist_ok=True)
    disp_lc = labels.warp_disparity_lr_to_lc(disp_lr, setup_lr, setup_lc)
    imio.disparity_to_pfm(out / "disp_LC.pfm", disp_lc)
    material_path = bundle / "gt" / "material.png"
    if material_path.exists():
        mask = imio.load_material_png(material_path)
        warped = labels.warp_mask_lr_to_lc(mask, setup_lr, setup_lc)
        imio.save_material_png(out / "material_LC.png", warped)
    print(f"warp: {src.name} -> disp_LC.pfm ({int(disp_lc.valid.sum())} valid px)")
    return 0


def cmd_eval(args) -> int:
    pred = imio.disparity_from_pfm(Path(args.pred))
    gt = imio.disparity_from_pfm(Path(args.gt))
    material = imio.load_material_png(Path(args.material)) if args.material else None
    consistency = imio.load_bool_png(Path(args.cons)) if args.cons else None
    mode = "quarter" if args.quarter else "full"

    if args.mono:
        if not args.calib:
            raise StereoforgeError("--mono evaluation needs --calib to convert disparity to depth")
        calib = load_calibration(Path(args.calib))
        f = calib.cam_l.fx
        b = calib.rig_lr.baseline
        pred_q, gt_q = metrics.prepare_resolutions(pred, gt, mode=mode, is_disparity=True)
        gt_depth = disparity_to_depth(gt_q, f * (0.25 if mode == "quarter" else 1.0), b)
        pred_depth = disparity_to_depth(pred_q, f * (0.25 if mode == "quarter" else 1.0), b)
        pred_vals = np.where(pred_depth.valid, pred_depth.values, np.nan)
        aligned, _ = metrics.align_prediction(pred_vals, gt_depth, space=args.align_space)
        report = metrics.stratify(aligned, gt_depth, material=_crop_mask(material, gt_q),
                                  consistency=_crop_cons(consistency, gt_q), kind="mono")
    else:
        pred_q, gt_q = metrics.prepare_resolutions(pred, gt, mode=mode, is_disparity=True)
        report = metrics.stratify(pred_q, gt_q, material=_crop_mask(material, gt_q),
                                  consistency=_crop_cons(consistency, gt_q), kind="stereo")

    out_dir = Path(args.out) if args.out else Path(args.pred).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(metrics.report_to_text(report), encoding="utf-8")
    sys.stdout.write(metrics.report_to_table(report))
    return 0


def _crop_mask(material, gt) -> labels.MaterialMask | None:
    if material is None:
        return None
    if material.labels.shape != gt.values.shape:
        material = labels.MaterialMask(labels=material.labels[::4, ::4])
        if material.labels.shape != gt.values.shape:
            raise StereoforgeError("material mask resolution matches neither full nor quarter grid")
    return material


def _crop_cons(consistency, gt):
    if consistency is None:
        return None
    if consistency.shape != gt.values.shape:
        consistency = consistency[::4, ::4]
        if consistency.shape != gt.values.shape:
            raise StereoforgeError("consistency mask resolution matches neither full nor quarter grid")
    return consistency


def cmd_serve(args) -> int:
    from .server import serve_forever

    serve_forever(Path(args.scenes), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stereoforge", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic scene bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--scene", default="plane", choices=("plane", "occlusion", "ambiguous"))
    p.add_argument("--width", type=int, default=160)
    p.add_argument("--height", type=int, default=120)
    p.add_argument("--d-max", dest="d_max", type=int, default=48)
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--noise", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("rectify", help="emit rectified setups and frames for a bundle")
    p.add_argument("bundle")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_rectify)

    p = sub.add_parser("match", help="run the space-time matcher over a bundle")
    p.add_argument("bundle")
    p.add_argument("--config", default=None)
    p.add_argument("--d-max", dest="d_max", type=int, default=None)
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("postprocess", help="variance filter, manual mask, bilateral, cloud export")
    p.add_argument("bundle")
    p.add_argument("--config", default=None)
    p.add_argument("--tau-var", dest="tau_var", type=float, default=None)
    p.add_argument("--mask", default=None, help="RLE removal mask (default: <bundle>/manual_mask.rle)")
    p.add_argument("--no-bilateral", action="store_true")
    p.set_defaults(fn=cmd_postprocess)

    p = sub.add_parser("warp", help="warp labels from the balanced to the unbalanced rig")
    p.add_argument("bundle")
    p.set_defaults(fn=cmd_warp)

    p = sub.add_parser("eval", help="evaluate a prediction against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--material", default=None)
    p.add_argument("--cons", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--quarter", action="store_true")
    p.add_argument("--mono", action="store_true")
    p.add_argument("--calib", default=None)
    p.add_argument("--align-space", dest="align_space", default="depth",
                   choices=("depth", "invdepth"))
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="serve scene bundles to the cleaning UI")
    p.add_argument("--scenes", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except StereoforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
