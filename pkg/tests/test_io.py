"""Tests for text formats: layout TSV, CSV reports, checkpoints."""

import json

import numpy as np
import pytest

from gdlab import errors, io
from gdlab.descent import Trajectory, TrajectoryRow
from gdlab.graphs import generate_synthetic
from gdlab.metrics import ParetoPoint
from gdlab.model import EpochRecord, LayoutModelParams, ModelConfig, TrainConfig, TrainHistory, infer, train
from gdlab.graphs import synthetic_dataset


class TestLayoutTsv:
    def test_round_trip_exact(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 2)) * np.pi
        text = io.format_layout(x)
        back = io.parse_layout(text)
        assert np.array_equal(back, x)

    def test_format_shape(self):
        x = np.array([[0.5, -1.25], [3.0, 2.0]])
        lines = io.format_layout(x).splitlines()
        assert lines == ["0\t0.5\t-1.25", "1\t3.0\t2.0"]

    def test_parse_ignores_comments_blanks_and_order(self):
        text = "# layout\n1\t3.0\t4.0\n\n0\t1.0\t2.0\n"
        x = io.parse_layout(text)
        assert np.array_equal(x, np.array([[1.0, 2.0], [3.0, 4.0]]))

    def test_malformed_lines_rejected(self):
        with pytest.raises(errors.MalformedLine, match="line 1"):
            io.parse_layout("0\t1.0\n")
        with pytest.raises(errors.MalformedLine):
            io.parse_layout("0\tx\t1.0\n")
        with pytest.raises(errors.MalformedLine, match="duplicate"):
            io.parse_layout("0\t1.0\t1.0\n0\t2.0\t2.0\n")

    def test_gapped_ids_rejected(self):
        with pytest.raises(errors.UnknownNodeRef):
            io.parse_layout("0\t1.0\t1.0\n2\t2.0\t2.0\n")

    def test_empty_rejected(self):
        with pytest.raises(errors.EmptyInput):
            io.parse_layout("# nothing\n")


class TestCsvFormats:
    def test_history_csv_layout(self):
        h = TrainHistory(
            criteria=("stress", "angle"),
            rows=(
                EpochRecord(epoch=0, mean_losses=(2.5, 0.5), alpha=(0.5, 0.5), lr=0.01),
                EpochRecord(epoch=1, mean_losses=(2.0, 0.25), alpha=(0.25, 0.75), lr=0.0099),
            ),
        )
        lines = io.format_history_csv(h).splitlines()
        assert lines[0] == "epoch,loss_stress,loss_angle,alpha_stress,alpha_angle,lr"
        assert lines[1] == "0,2.5,0.5,0.5,0.5,0.01"
        assert lines[2] == "1,2.0,0.25,0.25,0.75,0.0099"

    def test_trajectory_csv_layout(self):
        t = Trajectory(
            criteria=("stress",),
            rows=(
                TrajectoryRow(step=0, values=(4.0,), composite=4.0, alpha=(1.0,)),
                TrajectoryRow(step=1, values=(3.5,), composite=3.5, alpha=(1.0,)),
            ),
        )
        lines = io.format_trajectory_csv(t).splitlines()
        assert lines[0] == "step,loss_stress,composite,alpha_stress"
        assert lines[1] == "0,4.0,4.0,1.0"

    def test_pareto_csv_header_and_rows(self):
        pts = [
            ParetoPoint("fixed", 0.9, 0.1, 1.5, 2.5),
            ParetoPoint("fixed", 0.5, 0.5, 2.0, 2.0),
        ]
        lines = io.format_pareto_csv(pts).splitlines()
        assert lines[0] == "strategy,gamma_a,gamma_b,mean_loss_a,mean_loss_b"
        assert lines[1] == "fixed,0.9,0.1,1.5,2.5"
        assert len(lines) == 3

    def test_floats_round_trip_through_repr(self):
        v = 0.1 + 0.2  # 0.30000000000000004
        h = TrainHistory(
            criteria=("stress",),
            rows=(EpochRecord(epoch=0, mean_losses=(v,), alpha=(1.0,), lr=v),),
        )
        cell = io.format_history_csv(h).splitlines()[1].split(",")[1]
        assert float(cell) == v

    def test_metrics_json_deterministic(self):
        doc = {"b": [1.0, 2.0], "a": {"nested": 0.5}}
        one = io.format_metrics_json(doc)
        two = io.format_metrics_json({"a": {"nested": 0.5}, "b": [1.0, 2.0]})
        assert one == two
        assert json.loads(one) == doc


def tiny_params(seed=0):
    cfg = ModelConfig(n_interior_blocks=1, layers_per_block=2, hidden_dim=4, edge_hidden=4)
    return LayoutModelParams.create(cfg, seed=seed)


class TestCheckpoint:
    def test_round_trip_bit_exact(self):
        p = tiny_params()
        text = io.format_checkpoint(p)
        q = io.parse_checkpoint(text)
        assert q.config == p.config
        ta, tb = p.tensors(), q.tensors()
        assert len(ta) == len(tb)
        for a, b in zip(ta, tb):
            assert np.array_equal(a.data, b.data)
        assert io.format_checkpoint(q) == text

    def test_round_trip_after_training_preserves_inference(self, tmp_path):
        ds = synthetic_dataset(("random_tree",), 4, 8, 12, seed=3)
        cfg = TrainConfig(
            epochs=2,
            batch_size=4,
            model=ModelConfig(n_interior_blocks=1, layers_per_block=2, hidden_dim=4, edge_hidden=4),
        )
        params, _ = train(ds, cfg)
        path = tmp_path / "ck.json"
        io.save_checkpoint(params, path)
        loaded = io.load_checkpoint(path)
        g = generate_synthetic("cycle", 9, seed=0)
        x1 = infer(g, params, init="pivotmds", seed=0)
        x2 = infer(g, loaded, init="pivotmds", seed=0)
        assert np.array_equal(x1, x2)

    def test_document_header(self):
        doc = json.loads(io.format_checkpoint(tiny_params()))
        assert doc["format"] == "gdlab-checkpoint"
        assert doc["version"] == 1

    def test_non_json_rejected(self):
        with pytest.raises(errors.ConfigError, match="JSON"):
            io.parse_checkpoint("not json at all {")

    def test_wrong_format_tag_rejected(self):
        with pytest.raises(errors.ConfigError, match="checkpoint"):
            io.parse_checkpoint(json.dumps({"format": "something-else", "version": 1}))

    def test_wrong_version_rejected(self):
        text = io.format_checkpoint(tiny_params())
        doc = json.loads(text)
        doc["version"] = 99
        with pytest.raises(errors.ConfigError, match="version"):
            io.parse_checkpoint(json.dumps(doc))

    def test_truncated_document_rejected(self):
        doc = json.loads(io.format_checkpoint(tiny_params()))
        del doc["blocks"]["output"]
        with pytest.raises(errors.ConfigError, match="malformed"):
            io.parse_checkpoint(json.dumps(doc))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(errors.ConfigError, match="cannot read"):
            io.load_checkpoint(tmp_path / "absent.json")
