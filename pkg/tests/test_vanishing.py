import numpy as np
import pytest

from oracles import point_in_triangle, raster_bf
from snowroad.errors import DegenerateBase, DimensionMismatch, InvalidParameter, NoRoadDetected
from snowroad.imagecore import BinaryMask, RgbImage
from snowroad.pipeline import run_pipeline
from snowroad.synthgen import SceneSpec, generate_scene
from snowroad.vanishing import Triangle, extract_road, fit_triangle, iou, rasterize_triangle


def random_triangle(rng, w=128, h=96):
    bl = int(rng.integers(0, w // 3))
    br = int(rng.integers(2 * w // 3, w))
    return Triangle(float(rng.integers(w // 4, 3 * w // 4)), float(rng.integers(2, h // 2)), bl, br, h - 1)


class TestIou:
    def test_examples(self):
        a = BinaryMask(np.array([[True, True]]))
        b = BinaryMask(np.array([[True, False]]))
        assert iou(a, a) == 1.0
        assert iou(a, b) == 0.5
        assert iou(b, BinaryMask(np.array([[False, True]]))) == 0.0
        assert iou(BinaryMask.zeros(2, 1), BinaryMask.zeros(2, 1)) == 0.0

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            iou(BinaryMask.zeros(2, 2), BinaryMask.zeros(3, 2))

    def test_symmetric_and_one_iff_equal(self, rng):
        for _ in range(50):
            a = BinaryMask(rng.random((8, 8)) < 0.5)
            b = BinaryMask(rng.random((8, 8)) < 0.5)
            assert iou(a, b) == iou(b, a)
            assert (iou(a, b) == 1.0) == (a == b)


class TestRasterize:
    def test_full_frame_4x4(self):
        t = Triangle(1.5, 0.0, 0, 3, 3)
        expected = np.array(
            [
                [0, 0, 0, 0],
                [0, 1, 1, 0],
                [0, 1, 1, 0],
                [1, 1, 1, 1],
            ],
            dtype=bool,
        )
        assert (rasterize_triangle(t, 4, 4).bits == expected).all()
        assert (raster_bf(t.vertices(), 4, 4) == expected).all()

    def test_thin_wedge(self):
        t = Triangle(10.0, 2.0, 9, 10, 19)
        m = rasterize_triangle(t, 20, 20).bits
        assert (m == raster_bf(t.vertices(), 20, 20)).all()
        widths = m.sum(axis=1)[m.any(axis=1)]
        assert widths.min() >= 1 and widths.max() <= 2

    def test_random_against_point_test(self, rng):
        for _ in range(20):
            t = Triangle(float(rng.uniform(0, 39)), float(rng.uniform(0, 25)), int(rng.integers(0, 15)), int(rng.integers(20, 40)), 29)
            assert (rasterize_triangle(t, 40, 30).bits == raster_bf(t.vertices(), 40, 30)).all()

    def test_apex_on_base_row_not_representable(self):
        with pytest.raises(InvalidParameter):
            Triangle(5.0, 9.0, 0, 9, 9)
        with pytest.raises(InvalidParameter):
            Triangle(5.0, 1.0, 6, 6, 9)


class TestFit:
    def test_recovers_generating_triangle(self):
        truth = Triangle(64.0, 10.0, 10, 118, 95)
        fit = fit_triangle(rasterize_triangle(truth, 128, 96))
        assert abs(fit.apex_x - 64) <= 1 and abs(fit.apex_y - 10) <= 1
        assert fit.base_y == 95

    def test_no_road(self):
        with pytest.raises(NoRoadDetected):
            fit_triangle(BinaryMask.zeros(64, 48))
        sparse = np.zeros((48, 64), bool)
        sparse[40:42, 10:12] = True
        with pytest.raises(NoRoadDetected):
            fit_triangle(BinaryMask(sparse))

    def test_degenerate_base(self):
        m = np.zeros((48, 64), bool)
        m[10:30, 10:50] = True
        m[43:, 20] = True
        with pytest.raises(DegenerateBase):
            fit_triangle(BinaryMask(m))

    def test_narrow_base_rejected(self):
        t = Triangle(32.0, 5.0, 30, 34, 47)
        with pytest.raises(NoRoadDetected):
            fit_triangle(rasterize_triangle(t, 64, 48), min_coverage=0.0)

    def test_full_mask_matches_brute_force(self):
        w, h = 32, 24
        full = BinaryMask(np.ones((h, w), bool))
        fit = fit_triangle(full)
        assert (fit.base_left, fit.base_right) == (0, w - 1)
        best, arg = -1.0, None
        for ay in range(h - 1):
            for ax in range(w):
                verts = [(ax, ay), (0, h - 1), (w - 1, h - 1)]
                score = raster_bf(verts, w, h).mean()
                if score > best + 1e-12:
                    best, arg = score, (ax, ay)
        assert (fit.apex_x, fit.apex_y) == arg
        assert fit_triangle(full) == fit

    @pytest.mark.parametrize("dx", [8, 16, 3])
    def test_translation(self, dx):
        base = Triangle(50.0, 12.0, 20, 80, 95)
        m = rasterize_triangle(base, 128, 96).bits
        shifted = np.zeros_like(m)
        shifted[:, dx:] = m[:, :-dx]
        f0 = fit_triangle(BinaryMask(m))
        f1 = fit_triangle(BinaryMask(shifted))
        assert f1.apex_x - f0.apex_x == pytest.approx(dx, abs=0 if dx % 8 == 0 else 1)
        assert f1.base_left - f0.base_left == pytest.approx(dx, abs=0 if dx % 8 == 0 else 1)
        assert f1.apex_y == pytest.approx(f0.apex_y, abs=0 if dx % 8 == 0 else 1)

    def test_random_triangles(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            t = random_triangle(rng)
            fit = fit_triangle(rasterize_triangle(t, 128, 96))
            assert abs(fit.apex_x - t.apex_x) <= 1 and abs(fit.apex_y - t.apex_y) <= 1

    def test_survives_stray_specks(self):
        t = Triangle(64.0, 20.0, 20, 108, 95)
        m = rasterize_triangle(t, 128, 96).bits.copy()
        m[90:92, 0:2] = True
        m[88:90, 125:127] = True
        fit = fit_triangle(BinaryMask(m))
        assert abs(fit.apex_x - 64) <= 1 and abs(fit.apex_y - 20) <= 1
        assert abs(fit.base_left - 20) <= 1 and abs(fit.base_right - 108) <= 1


class TestExtractRoad:
    def test_snow_equal_to_raster(self):
        t = Triangle(40.0, 8.0, 5, 70, 59)
        tri = rasterize_triangle(t, 80, 60)
        road = extract_road(tri, t)
        assert road.mask == tri
        assert (road.vanishing_point.x, road.vanishing_point.y) == (40, 8)

    def test_empty_snow(self):
        t = Triangle(40.0, 8.0, 5, 70, 59)
        assert extract_road(BinaryMask.zeros(80, 60), t).mask.count() == 0

    def test_vanishing_point_rounds_half_up(self):
        t = Triangle(40.5, 8.5, 5, 70, 59)
        vp = extract_road(BinaryMask.zeros(80, 60), t).vanishing_point
        assert (vp.x, vp.y) == (41, 9)

    def test_subset_of_snow_and_triangle(self, rng):
        for _ in range(10):
            snow = BinaryMask(rng.random((60, 80)) < 0.5)
            t = Triangle(float(rng.integers(10, 70)), float(rng.integers(0, 40)), int(rng.integers(0, 30)), int(rng.integers(40, 80)), 59)
            road = extract_road(snow, t).mask.bits
            assert (road <= snow.bits).all()
            for y, x in np.argwhere(road):
                assert point_in_triangle(x, y, t.vertices())

    def test_trapezoid_scene_coverage(self):
        spec = SceneSpec(speck_count=0, streak_alpha=0.0, seed=21)
        img, truth = generate_scene(spec)
        data, road = img.data.copy(), truth.bits.copy()
        cut = int(spec.road.apex_y) + 40
        top = road[:cut]
        data[:cut][top] = np.round(spec.foliage_mean).astype(np.uint8)
        road[:cut] = False
        pred = run_pipeline(RgbImage(data)).mask.bits
        assert (pred & road).sum() / road.sum() >= 0.90
