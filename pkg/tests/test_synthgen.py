import json
from dataclasses import replace

import numpy as np
import pytest

from oracles import raster_bf
from snowroad.colorspace import rgb_to_hsv
from snowroad.errors import InvalidSpec
from snowroad.segmentation import classify_snow, open_close
from snowroad.synthgen import (
    SceneSpec,
    corpus_scene_spec,
    generate_corpus,
    generate_scene,
    load_spec,
    road_mask,
    write_corpus,
)
from snowroad.vanishing import Triangle, fit_triangle, iou, rasterize_triangle

QUIET = dict(snow_std=(0.0, 0.0, 0.0), foliage_std=(0.0, 0.0, 0.0), speck_count=0, streak_alpha=0.0)


@pytest.fixture
def quiet_spec():
    return SceneSpec(**QUIET)


class TestScene:
    def test_zero_noise_is_exact(self, quiet_spec):
        img, truth = generate_scene(quiet_spec)
        assert (truth.bits == raster_bf(quiet_spec.road.vertices(), 320, 240)).all()
        assert (img.data[truth.bits] == [232, 236, 242]).all()
        assert (img.data[~truth.bits] == [62, 84, 52]).all()

    def test_road_pixels_within_three_sigma(self):
        spec = SceneSpec(speck_count=0, streak_alpha=0.0)
        img, truth = generate_scene(spec)
        dev = np.abs(img.data[truth.bits].astype(float) - spec.snow_mean)
        assert (dev <= 3 * np.asarray(spec.snow_std) + 0.5).mean() > 0.99

    def test_deterministic(self):
        a = generate_scene(SceneSpec(seed=11))
        b = generate_scene(SceneSpec(seed=11))
        assert a[0] == b[0] and a[1] == b[1]
        assert generate_scene(SceneSpec(seed=12))[0] != a[0]

    def test_curvature_breaks_triangle(self):
        spec = replace(SceneSpec(**QUIET), curvature=0.4)
        truth = road_mask(spec)
        fit = fit_triangle(truth)
        assert iou(truth, rasterize_triangle(fit, 320, 240)) < 1.0

    def test_zero_curvature_matches_raster(self, quiet_spec):
        assert road_mask(quiet_spec) == rasterize_triangle(quiet_spec.road, 320, 240)

    def test_classification_agrees_with_truth(self, quiet_spec):
        img, truth = generate_scene(quiet_spec)
        snow = classify_snow(rgb_to_hsv(img))
        assert (snow.bits == truth.bits).mean() >= 0.99

    def test_specks_removed_by_morphology(self):
        spec = replace(SceneSpec(**QUIET), speck_count=30)
        img, truth = generate_scene(spec)
        snow = classify_snow(rgb_to_hsv(img))
        specks = snow.bits & ~truth.bits
        assert specks.sum() == 30 * 9
        assert not (open_close(snow).bits & specks).any()

    def test_streaks_brighten_pixels(self):
        clean, _ = generate_scene(replace(SceneSpec(), streak_alpha=0.0))
        rainy, _ = generate_scene(SceneSpec())
        diff = rainy.data.astype(int) - clean.data.astype(int)
        assert (diff >= 0).all() and (diff > 0).any()


class TestSpecValidation:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(snow_mean=(120.0, 120.0, 120.0)),
            dict(snow_mean=(250.0, 150.0, 150.0)),
            dict(streak_alpha=1.5),
            dict(speck_count=-1),
            dict(road=Triangle(160.0, 80.0, 40, 280, 200)),
            dict(road=Triangle(160.0, 80.0, 40, 400, 239)),
            dict(foliage_std=(1.0, -1.0, 1.0)),
        ],
    )
    def test_rejected(self, kw):
        with pytest.raises(InvalidSpec):
            generate_scene(replace(SceneSpec(), **kw))

    def test_unknown_key(self):
        with pytest.raises(InvalidSpec):
            SceneSpec.from_dict({"widht": 10})

    def test_dict_round_trip(self):
        spec = SceneSpec(curvature=0.2, seed=9)
        assert SceneSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec

    def test_load_spec_rejects_garbage(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text("[1, 2]")
        with pytest.raises(InvalidSpec):
            load_spec(p)
        p.write_text("{not json")
        with pytest.raises(InvalidSpec):
            load_spec(p)


class TestCorpus:
    def test_single_scene(self):
        base = SceneSpec()
        [(img, truth, image_id)] = generate_corpus(base, 1, seed=40)
        ref = generate_scene(corpus_scene_spec(base, 40, 0))
        assert image_id == "scene_0000"
        assert img == ref[0] and truth == ref[1]

    def test_derived_seed(self):
        assert corpus_scene_spec(SceneSpec(), 40, 3).seed == 43

    def test_twenty_distinct(self):
        imgs = [img.data for img, _, _ in generate_corpus(SceneSpec(), 20, seed=0)]
        for i in range(20):
            for j in range(i + 1, 20):
                assert not np.array_equal(imgs[i], imgs[j])

    def test_jitter_stays_valid(self):
        for i in range(200):
            corpus_scene_spec(SceneSpec(), 0, i).validate()

    def test_bad_size(self):
        with pytest.raises(InvalidSpec):
            generate_corpus(SceneSpec(), 0, 0)

    def test_written_layout_reproducible(self, tmp_path):
        base = SceneSpec.from_dict({"width": 80, "height": 60})
        write_corpus(tmp_path / "a", base, 3, 5)
        write_corpus(tmp_path / "b", base, 3, 5)
        files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        assert len(files) == 7
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        meta = json.loads((tmp_path / "a" / "corpus.json").read_text())
        assert meta["seed"] == 5 and meta["ids"] == ["scene_0000", "scene_0001", "scene_0002"]
