import math

import numpy as np
import pytest

from stereoforge.camera import DepthMap, DisparityMap
from stereoforge.errors import (
    DegenerateRegionError,
    EmptyStratumError,
    ResolutionError,
)
from stereoforge.labels import MaterialMask
from stereoforge.metrics import (
    align_prediction,
    depth_inlier_compare,
    mono_metrics,
    plane_fit_residual,
    prepare_resolutions,
    report_to_text,
    scale_shift_align,
    stereo_metrics,
    stratify,
)

RNG = np.random.default_rng(17)


# --- naive reference implementations (plain loops, no numpy reductions) -----------

def stereo_oracle(pred_v, pred_ok, gt_v, gt_ok, mask=None):
    n = 0
    missing = 0
    errs = []
    h, w = gt_v.shape
    for y in range(h):
        for x in range(w):
            if not gt_ok[y][x]:
                continue
            if mask is not None and not mask[y][x]:
                continue
            n += 1
            if not pred_ok[y][x]:
                missing += 1
            else:
                errs.append(abs(pred_v[y][x] - gt_v[y][x]))
    bads = []
    for tau in (2.0, 4.0, 6.0, 8.0):
        cnt = sum(1 for e in errs if e > tau) + missing
        bads.append(100.0 * cnt / n)
    mae = sum(errs) / len(errs) if errs else float("nan")
    rmse = math.sqrt(sum(e * e for e in errs) / len(errs)) if errs else float("nan")
    return bads, mae, rmse, n, missing


def mono_oracle(pred, gt_v, gt_ok, mask=None):
    sel_p, sel_g = [], []
    n = 0
    excluded = 0
    h, w = gt_v.shape
    for y in range(h):
        for x in range(w):
            if not gt_ok[y][x]:
                continue
            if mask is not None and not mask[y][x]:
                continue
            n += 1
            p = pred[y][x]
            if not math.isfinite(p) or p <= 0:
                excluded += 1
                continue
            sel_p.append(p)
            sel_g.append(gt_v[y][x])
    deltas = []
    for t in (1.05, 1.15, 1.25):
        cnt = sum(1 for p, g in zip(sel_p, sel_g) if max(p / g, g / p) < t)
        deltas.append(100.0 * cnt / len(sel_p))
    mae = sum(abs(p - g) for p, g in zip(sel_p, sel_g)) / len(sel_p)
    abs_rel = sum(abs(p - g) / g for p, g in zip(sel_p, sel_g)) / len(sel_p)
    rmse = math.sqrt(sum((p - g) ** 2 for p, g in zip(sel_p, sel_g)) / len(sel_p))
    return deltas, mae, abs_rel, rmse, n, excluded


def lsq_oracle(p, g):
    n = len(p)
    sp = sum(p)
    spp = sum(x * x for x in p)
    spg = sum(x * y for x, y in zip(p, g))
    sg = sum(g)
    det = n * spp - sp * sp
    s = (n * spg - sp * sg) / det
    t = (spp * sg - sp * spg) / det
    return s, t


def plane_oracle(us, vs, ds):
    a = np.stack([us, vs, np.ones_like(us)], axis=-1).astype(np.float64)
    coef, *_ = np.linalg.lstsq(a, ds, rcond=None)
    res = a @ coef - ds
    return math.sqrt(float((res * res).mean()))


def _random_pair(shape=(24, 31), integer=False):
    if integer:
        gt_v = RNG.integers(1, 40, size=shape).astype(np.float64)
        pr_v = (gt_v + RNG.integers(-9, 10, size=shape)).clip(1, None).astype(np.float64)
    else:
        gt_v = RNG.uniform(1, 40, size=shape)
        pr_v = gt_v + RNG.normal(scale=3.0, size=shape)
        pr_v = np.clip(pr_v, 0.01, None)
    gt_ok = RNG.uniform(size=shape) > 0.2
    pr_ok = RNG.uniform(size=shape) > 0.15
    return pr_v, pr_ok, gt_v, gt_ok


class TestStereoMetrics:
    def test_perfect_prediction(self):
        gt = DisparityMap(values=np.full((5, 5), 7.0), valid=np.ones((5, 5), bool))
        s = stereo_metrics(gt, gt)
        assert s.bad2 == s.bad4 == s.bad6 == s.bad8 == 0.0
        assert s.mae == 0.0 and s.rmse == 0.0

    def test_four_pixel_hand_computation(self):
        gt = DisparityMap(values=np.full((1, 4), 10.0), valid=np.ones((1, 4), bool))
        pred = DisparityMap(values=np.array([[11.0, 13.0, 15.0, 19.0]]),
                            valid=np.ones((1, 4), bool))
        s = stereo_metrics(pred, gt)
        assert (s.bad2, s.bad4, s.bad6, s.bad8) == (75.0, 50.0, 25.0, 25.0)
        assert s.mae == 4.5
        assert np.isclose(s.rmse, math.sqrt(29.0))

    def test_matches_naive_oracle(self):
        for trial in range(100):
            integer = trial % 2 == 0
            pr_v, pr_ok, gt_v, gt_ok = _random_pair(integer=integer)
            mask = RNG.uniform(size=gt_v.shape) > 0.1 if trial % 3 == 0 else None
            gt = DisparityMap(values=gt_v, valid=gt_ok)
            pred = DisparityMap(values=pr_v, valid=pr_ok)
            try:
                s = stereo_metrics(pred, gt, mask)
            except EmptyStratumError:
                continue
            bads, mae, rmse, n, missing = stereo_oracle(pr_v, pred.valid, gt_v, gt.valid, mask)
            if integer:
                assert (s.bad2, s.bad4, s.bad6, s.bad8) == tuple(bads)
            else:
                assert np.allclose((s.bad2, s.bad4, s.bad6, s.bad8), bads, rtol=1e-12, atol=1e-12)
            assert np.isclose(s.mae, mae, rtol=1e-12, atol=1e-12)
            assert np.isclose(s.rmse, rmse, rtol=1e-12, atol=1e-12)
            assert (s.count, s.pred_invalid) == (n, missing)

    def test_invalid_prediction_counts_as_bad(self):
        gt = DisparityMap(values=np.full((1, 4), 10.0), valid=np.ones((1, 4), bool))
        pred = DisparityMap(values=np.full((1, 4), 10.0),
                            valid=np.array([[True, True, False, False]]))
        s = stereo_metrics(pred, gt)
        assert s.bad2 == 50.0 and s.bad8 == 50.0
        assert s.pred_invalid == 2

    def test_empty_stratum_raises(self):
        gt = DisparityMap(values=np.ones((2, 2)), valid=np.zeros((2, 2), bool))
        pred = DisparityMap(values=np.ones((2, 2)), valid=np.ones((2, 2), bool))
        with pytest.raises(EmptyStratumError):
            stereo_metrics(pred, gt)

    def test_bad_tau_monotone(self):
        for _ in range(20):
            pr_v, pr_ok, gt_v, gt_ok = _random_pair()
            try:
                s = stereo_metrics(DisparityMap(values=pr_v, valid=pr_ok),
                                   DisparityMap(values=gt_v, valid=gt_ok))
            except EmptyStratumError:
                continue
            assert s.bad2 >= s.bad4 >= s.bad6 >= s.bad8
            assert s.rmse >= s.mae >= 0


class TestMonoMetrics:
    def test_perfect_prediction(self):
        gt = DepthMap(values=np.full((4, 4), 2.0), valid=np.ones((4, 4), bool))
        m = mono_metrics(gt.values, gt)
        assert m.delta105 == m.delta115 == m.delta125 == 100.0
        assert m.abs_rel == 0.0

    def test_uniform_ratio(self):
        gt = DepthMap(values=np.full((4, 4), 2.0), valid=np.ones((4, 4), bool))
        m = mono_metrics(gt.values * 1.1, gt)
        assert m.delta105 == 0.0
        assert m.delta115 == 100.0 and m.delta125 == 100.0
        assert np.isclose(m.abs_rel, 0.1)

    def test_matches_naive_oracle(self):
        for trial in range(100):
            pr_v, _, gt_v, gt_ok = _random_pair()
            if trial % 4 == 0:
                pr_v[0, 0] = -1.0  # exercise the exclusion path
            gt = DepthMap(values=gt_v, valid=gt_ok)
            try:
                m = mono_metrics(pr_v, gt)
            except EmptyStratumError:
                continue
            deltas, mae, abs_rel, rmse, n, excluded = mono_oracle(pr_v, gt_v, gt.valid)
            assert np.allclose((m.delta105, m.delta115, m.delta125), deltas, rtol=1e-12, atol=1e-12)
            assert np.isclose(m.mae, mae, rtol=1e-12, atol=1e-12)
            assert np.isclose(m.abs_rel, abs_rel, rtol=1e-12, atol=1e-12)
            assert np.isclose(m.rmse, rmse, rtol=1e-12, atol=1e-12)
            assert (m.count, m.excluded_nonpositive) == (n, excluded)


class TestScaleShiftAlign:
    def test_identity(self):
        gt = DepthMap(values=RNG.uniform(1, 5, (8, 8)), valid=np.ones((8, 8), bool))
        s, t, aligned, degenerate = scale_shift_align(gt.values, gt)
        assert np.isclose(s, 1.0) and np.isclose(t, 0.0, atol=1e-12)
        assert not degenerate

    def test_exact_affine(self):
        gt_v = RNG.uniform(1, 5, (8, 8))
        gt = DepthMap(values=gt_v, valid=np.ones((8, 8), bool))
        pred = (gt_v - 3.0) / 2.0
        s, t, aligned, _ = scale_shift_align(pred, gt)
        assert np.isclose(s, 2.0) and np.isclose(t, 3.0)
        m = mono_metrics(aligned, gt)
        assert m.abs_rel < 1e-9

    def test_matches_lsq_oracle(self):
        for _ in range(100):
            gt_v = RNG.uniform(1, 5, (10, 10))
            pr_v = 0.7 * gt_v + RNG.normal(scale=0.2, size=gt_v.shape) + 1.0
            ok = RNG.uniform(size=gt_v.shape) > 0.25
            gt = DepthMap(values=gt_v, valid=ok)
            s, t, _, _ = scale_shift_align(pr_v, gt)
            so, to = lsq_oracle(list(pr_v[ok]), list(gt_v[ok]))
            assert np.isclose(s, so, rtol=1e-9, atol=1e-9)
            assert np.isclose(t, to, rtol=1e-9, atol=1e-9)

    def test_degenerate_constant_prediction(self):
        gt = DepthMap(values=RNG.uniform(1, 5, (6, 6)), valid=np.ones((6, 6), bool))
        s, t, aligned, degenerate = scale_shift_align(np.full((6, 6), 2.5), gt)
        assert degenerate and s == 0.0
        assert np.isclose(t, gt.values.mean())

    def test_prescale_invariance(self):
        gt_v = RNG.uniform(1, 5, (8, 8))
        gt = DepthMap(values=gt_v, valid=np.ones((8, 8), bool))
        pred = 0.4 * gt_v + RNG.normal(scale=0.1, size=gt_v.shape) + 0.8
        s1, _, a1, _ = scale_shift_align(pred, gt)
        s2, _, a2, _ = scale_shift_align(5.0 * pred, gt)
        assert np.isclose(s2, s1 / 5.0, rtol=1e-9)
        assert np.abs(a1 - a2).max() < 1e-9

    def test_alignment_then_metrics_property(self):
        for _ in range(10):
            a = RNG.uniform(0.2, 4.0)
            b = RNG.uniform(-1.0, 1.0)
            gt_v = RNG.uniform(1.5, 6, (10, 10))
            gt = DepthMap(values=gt_v, valid=np.ones((10, 10), bool))
            aligned, _ = align_prediction(a * gt_v + b, gt)
            m = mono_metrics(aligned, gt)
            assert m.delta105 == 100.0
            assert m.abs_rel < 1e-9

    def test_invdepth_space(self):
        # a prediction affine in inverse depth: invdepth alignment nails it,
        # plain depth alignment cannot
        gt_v = RNG.uniform(1.5, 6, (10, 10))
        gt = DepthMap(values=gt_v, valid=np.ones((10, 10), bool))
        pred = 1.0 / (2.0 / gt_v + 0.1)
        aligned_inv, _ = align_prediction(pred, gt, space="invdepth")
        aligned_dep, _ = align_prediction(pred, gt, space="depth")
        assert mono_metrics(aligned_inv, gt).abs_rel < 1e-9
        assert mono_metrics(aligned_dep, gt).abs_rel > 1e-4


class TestStratify:
    def test_uniform_class_equals_all(self):
        pr_v, pr_ok, gt_v, gt_ok = _random_pair()
        material = MaterialMask(labels=np.zeros(gt_v.shape, dtype=np.uint8))
        rep = stratify(DisparityMap(values=pr_v, valid=pr_ok),
                       DisparityMap(values=gt_v, valid=gt_ok), material=material)
        all_rec = rep.find("All")
        cls0 = rep.find("Class 0")
        assert all_rec.stereo == cls0.stereo
        assert rep.find("Class 3").empty

    def test_class_counts_partition_all(self):
        pr_v, pr_ok, gt_v, gt_ok = _random_pair()
        labels = RNG.integers(0, 4, size=gt_v.shape).astype(np.uint8)
        rep = stratify(DisparityMap(values=pr_v, valid=pr_ok),
                       DisparityMap(values=gt_v, valid=gt_ok),
                       material=MaterialMask(labels=labels))
        total = sum(rep.find(f"Class {c}").stereo.count
                    for c in range(4) if not rep.find(f"Class {c}").empty)
        assert total == rep.find("All").stereo.count

    def test_class_metrics_equal_crop_oracle(self):
        pr_v, pr_ok, gt_v, gt_ok = _random_pair()
        labels = np.zeros(gt_v.shape, dtype=np.uint8)
        labels[:, 16:] = 2
        rep = stratify(DisparityMap(values=pr_v, valid=pr_ok),
                       DisparityMap(values=gt_v, valid=gt_ok),
                       material=MaterialMask(labels=labels))
        crop = stereo_metrics(DisparityMap(values=pr_v[:, 16:], valid=pr_ok[:, 16:]),
                              DisparityMap(values=gt_v[:, 16:], valid=gt_ok[:, 16:]))
        assert rep.find("Class 2").stereo == crop

    def test_cons_stratum(self):
        pr_v, pr_ok, gt_v, gt_ok = _random_pair()
        cons = RNG.uniform(size=gt_v.shape) > 0.5
        rep = stratify(DisparityMap(values=pr_v, valid=pr_ok),
                       DisparityMap(values=gt_v, valid=gt_ok), consistency=cons)
        direct = stereo_metrics(DisparityMap(values=pr_v, valid=pr_ok),
                                DisparityMap(values=gt_v, valid=gt_ok), cons)
        assert rep.find("Cons").stereo == direct

    def test_report_text_round_shape(self):
        pr_v, pr_ok, gt_v, gt_ok = _random_pair()
        rep = stratify(DisparityMap(values=pr_v, valid=pr_ok),
                       DisparityMap(values=gt_v, valid=gt_ok))
        text = report_to_text(rep)
        assert text.startswith("stratum=All kind=stereo bad2=")


class TestPrepareResolutions:
    def test_same_resolution_unchanged(self):
        d = DisparityMap(values=np.full((8, 8), 5.0), valid=np.ones((8, 8), bool))
        pred, gt = prepare_resolutions(d, d, mode="full")
        assert np.array_equal(pred.values, d.values)

    def test_upsample_scales_disparity(self):
        pred = DisparityMap(values=np.full((4, 4), 10.0), valid=np.ones((4, 4), bool))
        gt = DisparityMap(values=np.full((8, 8), 20.0), valid=np.ones((8, 8), bool))
        up, gt2 = prepare_resolutions(pred, gt, mode="full")
        assert up.values.shape == (8, 8)
        assert (up.values == 20.0).all()

    def test_depth_values_not_rescaled(self):
        pred = DepthMap(values=np.full((4, 4), 2.0), valid=np.ones((4, 4), bool))
        gt = DepthMap(values=np.full((8, 8), 2.0), valid=np.ones((8, 8), bool))
        up, _ = prepare_resolutions(pred, gt, mode="full", is_disparity=False)
        assert (up.values == 2.0).all()

    def test_quarter_mode_downscales_gt(self):
        gt = DisparityMap(values=np.full((16, 16), 8.0), valid=np.ones((16, 16), bool))
        pred = DisparityMap(values=np.full((4, 4), 2.0), valid=np.ones((4, 4), bool))
        p2, g2 = prepare_resolutions(pred, gt, mode="quarter")
        assert g2.values.shape == (4, 4)
        assert (g2.values == 2.0).all()
        assert np.array_equal(p2.values, pred.values)

    def test_non_integer_ratio_rejected(self):
        pred = DisparityMap(values=np.ones((3, 3)), valid=np.ones((3, 3), bool))
        gt = DisparityMap(values=np.ones((8, 8)), valid=np.ones((8, 8), bool))
        with pytest.raises(ResolutionError):
            prepare_resolutions(pred, gt, mode="full")

    def test_quarter_metrics_not_worse_on_plane(self):
        # quarter-resolution evaluation forgives what full resolution punishes
        v, u = np.mgrid[0:64, 0:64]
        gt_v = 10.0 + 0.05 * u + 0.02 * v
        gt = DisparityMap(values=gt_v, valid=np.ones_like(gt_v, bool))
        pred_q = DisparityMap(values=gt_v[::4, ::4] / 4.0 + RNG.normal(scale=0.6, size=(16, 16)),
                              valid=np.ones((16, 16), bool))
        p_full, g_full = prepare_resolutions(pred_q, gt, mode="full")
        p_q, g_q = prepare_resolutions(pred_q, gt, mode="quarter")
        full = stereo_metrics(p_full, g_full)
        quarter = stereo_metrics(p_q, g_q)
        assert quarter.bad2 <= full.bad2
        assert quarter.mae <= full.mae


class TestPlaneFit:
    def test_exact_plane(self):
        v, u = np.mgrid[0:32, 0:32]
        d = 4.0 + 0.1 * u - 0.05 * v
        disp = DisparityMap(values=d, valid=np.ones_like(d, bool))
        assert plane_fit_residual(disp, np.ones_like(d, bool)) < 1e-6

    def test_uniform_noise_residual(self):
        v, u = np.mgrid[0:64, 0:64]
        d = 4.0 + 0.1 * u - 0.05 * v + RNG.uniform(-0.1, 0.1, size=(64, 64))
        disp = DisparityMap(values=d, valid=np.ones_like(d, bool))
        res = plane_fit_residual(disp, np.ones_like(d, bool))
        expected = 0.1 / math.sqrt(3.0)  # std of U(-0.1, 0.1)
        assert abs(res - expected) / expected < 0.1

    def test_matches_lstsq_oracle(self):
        for _ in range(50):
            vals = RNG.uniform(3, 30, size=(12, 12))
            sel = RNG.uniform(size=(12, 12)) > 0.4
            if sel.sum() < 4:
                continue
            disp = DisparityMap(values=vals, valid=np.ones((12, 12), bool))
            res = plane_fit_residual(disp, sel)
            ys, xs = np.nonzero(sel)
            expected = plane_oracle(xs - xs.mean(), ys - ys.mean(), vals[ys, xs])
            assert np.isclose(res, expected, rtol=1e-9, atol=1e-12)

    def test_degenerate_region(self):
        vals = np.ones((8, 8))
        disp = DisparityMap(values=vals, valid=np.ones((8, 8), bool))
        line = np.zeros((8, 8), bool)
        line[3, :] = True  # collinear pixels
        with pytest.raises(DegenerateRegionError):
            plane_fit_residual(disp, line)
        tiny = np.zeros((8, 8), bool)
        tiny[0, 0] = True
        with pytest.raises(DegenerateRegionError):
            plane_fit_residual(disp, tiny)


class TestDepthInliers:
    def test_identical_maps(self):
        d = DepthMap(values=RNG.uniform(1, 3, (10, 10)), valid=np.ones((10, 10), bool))
        pct, rmse = depth_inlier_compare(d, d, 0.01)
        assert pct == 100.0 and rmse == 0.0

    def test_half_offset(self):
        a_v = np.full((2, 10), 2.0)
        b_v = a_v.copy()
        b_v[:, 5:] += 0.02
        a = DepthMap(values=a_v, valid=np.ones((2, 10), bool))
        b = DepthMap(values=b_v, valid=np.ones((2, 10), bool))
        pct, rmse = depth_inlier_compare(a, b, 0.01)
        assert pct == 50.0 and rmse == 0.0

    def test_matches_naive_oracle(self):
        for _ in range(100):
            a_v = RNG.uniform(1, 3, (9, 13))
            b_v = a_v + RNG.normal(scale=0.01, size=(9, 13))
            a_ok = RNG.uniform(size=(9, 13)) > 0.2
            b_ok = RNG.uniform(size=(9, 13)) > 0.2
            a = DepthMap(values=a_v, valid=a_ok)
            b = DepthMap(values=b_v, valid=b_ok)
            try:
                pct, rmse = depth_inlier_compare(a, b, 0.01)
            except EmptyStratumError:
                continue
            diffs = [abs(a_v[y][x] - b_v[y][x])
                     for y in range(9) for x in range(13)
                     if a.valid[y][x] and b.valid[y][x]]
            inl = [d for d in diffs if d < 0.01]
            assert np.isclose(pct, 100.0 * len(inl) / len(diffs), rtol=1e-12)
            if inl:
                assert np.isclose(rmse, math.sqrt(sum(d * d for d in inl) / len(inl)),
                                  rtol=1e-12, atol=1e-15)

    def test_no_mutual_pixels(self):
        a = DepthMap(values=np.ones((2, 2)), valid=np.array([[True, False], [True, False]]))
        b = DepthMap(values=np.ones((2, 2)), valid=np.array([[False, True], [False, True]]))
        with pytest.raises(EmptyStratumError):
            depth_inlier_compare(a, b, 0.01)
