import shutil
from dataclasses import replace

import numpy as np
import pytest

from oracles import argmax_scan, bbox_oracle, centroid_oracle, dmi_oracle, g3d_oracle, head_oracle, ms_gcn_oracle
from tactile_har.config import PipelineConfig, load_config
from tactile_har.depth import Centroids
from tactile_har.errors import ConfigError, StageError
from tactile_har.gcn import G3DLayer, infer
from tactile_har.pgm import read_pgm
from tactile_har.pipeline import Pipeline, discover_inputs, run_pipeline
from tactile_har.scores import ScoreVector
from tactile_har.skeleton import file_precision, preprocess, read_skeleton_file
from tactile_har.tactile import read_registry_file


@pytest.fixture(scope="module")
def cfg(fixture_dir):
    return load_config(fixture_dir / "config.yaml")


@pytest.fixture(scope="module")
def pipeline(cfg):
    return Pipeline.load(cfg)


def _skeleton_oracle(pipe, path):
    seq = file_precision(preprocess(read_skeleton_file(path), pipe.cfg.frames))
    h = seq.coordinates().tolist()
    for layer in pipe.model.layers:
        hops = [x.tolist() for x in pipe.adjacency.hops[:layer.num_scales]]
        ws = [w.tolist() for w in layer.weights]
        if isinstance(layer, G3DLayer):
            h = g3d_oracle(h, hops, layer.tau, ws, layer.bias.tolist())
        else:
            norms = [[[v / sum(r) if sum(r) else 0.0 for v in r] for r in x] for x in hops]
            h = ms_gcn_oracle(h, norms, ws, layer.bias.tolist())
    return head_oracle(np.asarray(h).tolist(), pipe.model.head.weights.tolist())


def _depth_oracle(pipe, ddir):
    frames = []
    for f in sorted(ddir.glob("*.pgm")):
        px, maxval = read_pgm(f)
        if maxval > 255:
            raw = px.astype(float)
            q = [[255 if r == 0 else min(255, max(0, int(np.floor((r - 500) * 255 / 4000 + 0.5)))) for r in row]
                 for row in raw]
            frames.append(q)
        else:
            frames.append(px.tolist())
    img = dmi_oracle(frames)
    img = img / img.max()
    x0, y0, x1, y1 = bbox_oracle(img.tolist(), pipe.cfg.roi_threshold)
    img = img[y0:y1 + 1, x0:x1 + 1]
    side = pipe.cfg.centroid_side
    h, w = img.shape
    small = [[img[min(int((i + 0.5) * h / side), h - 1)][min(int((j + 0.5) * w / side), w - 1)]
              for j in range(side)] for i in range(side)]
    return centroid_oracle(small, pipe.centroids.images.tolist(), pipe.cfg.temperature)


class TestRun:
    def test_fixture_matches_chained_oracles(self, cfg, pipeline, fixture_dir):
        results = run_pipeline(cfg, fixture_dir / "skeleton", fixture_dir / "depth")
        assert [r.sequence_id for r in results] == ["seq01", "seq02", "seq03", "seq04"]
        for r in results:
            skel = _skeleton_oracle(pipeline, fixture_dir / "skeleton" / f"{r.sequence_id}.skl")
            ddir = fixture_dir / "depth" / r.sequence_id
            fused = 0.5 * skel + 0.5 * _depth_oracle(pipeline, ddir) if ddir.is_dir() else skel
            np.testing.assert_allclose(r.scores.scores, fused, rtol=0, atol=1e-7)
            class_id = pipeline.class_ids[argmax_scan(list(fused))]
            assert r.class_id == class_id
            glyph = read_registry_file(cfg.registry)[class_id].glyph
            assert r.glyph == glyph
            payload = b"".join(
                ((n.segments | (0x100 if n.full else 0)).to_bytes(2, "little")) for n in glyph.nodes)
            x = 0
            for b in payload:
                x ^= b
            assert r.frame == b"TG\x01" + payload + bytes([x])

    def test_deterministic_and_order_preserving(self, cfg, fixture_dir):
        a = run_pipeline(cfg, fixture_dir / "skeleton", fixture_dir / "depth")
        b = run_pipeline(cfg, fixture_dir / "skeleton", fixture_dir / "depth", jobs=4)
        assert [r.to_record() for r in a] == [r.to_record() for r in b]

    def test_skeleton_only_equals_alpha_one(self, cfg, pipeline, fixture_dir):
        skel_only = run_pipeline(cfg, fixture_dir / "skeleton")
        alpha1 = run_pipeline(replace(cfg, alpha=1.0), fixture_dir / "skeleton", fixture_dir / "depth")
        assert [r.to_record() for r in skel_only] == [r.to_record() for r in alpha1]
        for r in skel_only:
            path = fixture_dir / "skeleton" / f"{r.sequence_id}.skl"
            seq = file_precision(preprocess(read_skeleton_file(path), cfg.frames))
            s = infer(seq, pipeline.model, pipeline.adjacency, pipeline.class_ids)
            assert r.class_id == pipeline.class_ids[int(np.argmax(s.scores))]
            assert r.scores.scores.tobytes() == s.scores.tobytes()

    def test_external_depth_scores(self, cfg, pipeline, fixture_dir):
        n = len(pipeline.class_ids)
        onehot = np.zeros(n)
        onehot[n - 1] = 1.0
        ext = {"seq03": ScoreVector(onehot, pipeline.class_ids)}
        (r,) = [x for x in run_pipeline(replace(cfg, alpha=0.0), fixture_dir / "skeleton", None, ext)
                if x.sequence_id == "seq03"]
        assert r.class_id == pipeline.class_ids[-1]

    def test_record_format(self, cfg, fixture_dir):
        rec = run_pipeline(cfg, fixture_dir / "skeleton" / "seq03.skl")[0].to_record().split("\t")
        assert rec[0] == "seq03" and len(rec) == 5
        assert int(rec[1]) >= 1 and len(bytes.fromhex(rec[4])) == 22


class TestErrors:
    def test_missing_model(self, cfg, fixture_dir, tmp_path):
        missing = tmp_path / "nope.msw"
        with pytest.raises(StageError) as err:
            run_pipeline(replace(cfg, model_path=missing), fixture_dir / "skeleton")
        assert err.value.stage == "load-model" and str(missing) in str(err.value)
        assert err.value.exit_code == 1

    def test_no_model(self, fixture_dir):
        with pytest.raises(StageError, match="load-model"):
            run_pipeline(PipelineConfig(), fixture_dir / "skeleton")

    def test_stage_and_sequence_in_message(self, cfg, fixture_dir, tmp_path):
        (tmp_path / "bad.skl").write_text("skl 1 2 25\n")
        with pytest.raises(StageError) as err:
            run_pipeline(cfg, tmp_path)
        assert err.value.stage == "parse" and err.value.sequence_id == "bad"
        assert "'bad'" in str(err.value) and err.value.exit_code == 1

    def test_processing_error_exit_code(self, cfg, fixture_dir, tmp_path):
        seq = (fixture_dir / "skeleton" / "seq04.skl").read_text().splitlines()
        header = seq[0].split()
        n = int(header[3])
        body = seq[1:]
        # collapse joints 1 and 2 so the scale bone is degenerate
        for f in range(int(header[2])):
            body[f * n + 1] = body[f * n]
        (tmp_path / "flat.skl").write_text("\n".join([seq[0], *body]) + "\n")
        with pytest.raises(StageError) as err:
            run_pipeline(cfg, tmp_path)
        assert err.value.stage == "scale" and err.value.exit_code == 2

    def test_class_count_mismatch(self, cfg):
        with pytest.raises(StageError, match="configure"):
            Pipeline.load(replace(cfg, classes=(1, 2, 3)))

    def test_window_mismatch(self, cfg):
        with pytest.raises(StageError, match="window"):
            Pipeline.load(replace(cfg, window=5))

    def test_centroid_class_mismatch(self, cfg, tmp_path):
        c = Centroids.load(cfg.centroids_path)
        Centroids(c.images, tuple(i + 100 for i in c.class_ids)).save(tmp_path / "c.npz")
        with pytest.raises(StageError, match="load-centroids"):
            Pipeline.load(replace(cfg, centroids_path=tmp_path / "c.npz"))

    def test_depth_without_centroids(self, cfg, fixture_dir):
        with pytest.raises(StageError, match="classify"):
            run_pipeline(replace(cfg, centroids_path=None), fixture_dir / "skeleton", fixture_dir / "depth")

    def test_discover_errors(self, tmp_path):
        with pytest.raises(StageError, match="discover"):
            discover_inputs(tmp_path)
        with pytest.raises(StageError, match="discover"):
            discover_inputs(tmp_path / "missing.skl")


class TestConfig:
    def test_fixture_config(self, cfg, fixture_dir):
        assert cfg.model_path == fixture_dir / "model.msw"
        assert (cfg.frames, cfg.scales, cfg.window, cfg.alpha) == (16, 3, 3, 0.5)

    def test_overrides_win(self, cfg):
        assert cfg.with_overrides(alpha=0.25, frames=None).alpha == 0.25
        assert cfg.with_overrides(frames=None).frames == 16

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("alfa: 0.3\n")
        with pytest.raises(ConfigError):
            load_config(p)

    @pytest.mark.parametrize("text", ["alpha: 2\n", "frames: 0\n", "depth_near: 10\ndepth_far: 5\n", "- a\n"])
    def test_range_checks(self, tmp_path, text):
        p = tmp_path / "c.yaml"
        p.write_text(text)
        with pytest.raises(ConfigError):
            load_config(p)

    def test_relative_paths(self, fixture_dir, tmp_path):
        shutil.copy(fixture_dir / "model.msw", tmp_path / "m.msw")
        (tmp_path / "c.yaml").write_text("model: m.msw\n")
        assert load_config(tmp_path / "c.yaml").model_path == tmp_path / "m.msw"
