"""Tensor records, dataset containers and checkpoints."""
import io
import json

import numpy as np
import pytest

from sdci.io.checkpoints import load_checkpoint, save_checkpoint
from sdci.io.datasets import MANIFEST, read_dataset, read_manifest, tensor_path, write_dataset
from sdci.io.tensor_files import read_tensor, write_tensor
from sdci.tensor.random import RngStreams
from sdci.training.trainer import Trainer
from sdci.utils.error_handling import CheckpointError, DatasetCorruptionError, SDCIError, UnsupportedVersionError
from tests.test_utils import assert_dataset_equal, read_checkpoint_records, rewrite_checkpoint


@pytest.mark.unit
class TestTensorRecords:
    def test_float32_payload_is_little_endian(self):
        fh = io.BytesIO()
        write_tensor(fh, "one", np.array([1.0], dtype=np.float32))
        header_line, payload = fh.getvalue().split(b"\n", 1)
        assert json.loads(header_line)["dtype"] == "<f4"
        assert payload == bytes([0x00, 0x00, 0x80, 0x3F])

    def test_header_and_array(self, rng):
        fh = io.BytesIO()
        array = rng.normal(size=(2, 3)).astype(np.float64)
        write_tensor(fh, "x", array)
        fh.seek(0)
        header, restored = read_tensor(fh)
        assert header.name == "x"
        assert header.shape == [2, 3]
        np.testing.assert_array_equal(restored, array)

    def test_bools_are_stored_as_bytes(self):
        fh = io.BytesIO()
        write_tensor(fh, "flags", np.array([True, False]))
        fh.seek(0)
        header, restored = read_tensor(fh)
        assert header.dtype == "|u1"
        np.testing.assert_array_equal(restored, [1, 0])

    def test_unsupported_dtype(self):
        with pytest.raises(SDCIError):
            write_tensor(io.BytesIO(), "c", np.array([1j]))

    def test_truncated_payload_names_tensor(self):
        fh = io.BytesIO()
        write_tensor(fh, "train.p", np.zeros(4, dtype=np.float32))
        truncated = io.BytesIO(fh.getvalue()[:-3])
        with pytest.raises(DatasetCorruptionError) as exc_info:
            read_tensor(truncated)
        assert exc_info.value.tensor == "train.p"

    def test_newer_major_version_is_rejected(self):
        header = {"name": "x", "dtype": "<f4", "shape": [1], "format_version": "2.0"}
        fh = io.BytesIO((json.dumps(header) + "\n").encode() + b"\x00" * 4)
        with pytest.raises(UnsupportedVersionError):
            read_tensor(fh)

    def test_newer_minor_version_is_accepted(self):
        header = {"name": "x", "dtype": "<f4", "shape": [1], "format_version": "1.7"}
        fh = io.BytesIO((json.dumps(header) + "\n").encode() + bytes([0x00, 0x00, 0x80, 0x3F]))
        _, array = read_tensor(fh)
        assert array[0] == 1.0


@pytest.mark.integration
class TestDatasetContainer:
    def test_round_trip(self, tiny_dataset, tmp_path):
        write_dataset(tiny_dataset, tmp_path)
        assert (tmp_path / MANIFEST).exists()
        assert tensor_path(tmp_path, "train", "p").exists()
        assert_dataset_equal(read_dataset(tmp_path), tiny_dataset)

    def test_manifest_records_generation(self, tiny_dataset, tiny_experiment, tmp_path):
        write_dataset(tiny_dataset, tmp_path)
        manifest = read_manifest(tmp_path)
        assert manifest.splits == {"train": 8, "valid": 4, "test": 4}
        assert manifest.seed == tiny_experiment.seed
        assert manifest.config == tiny_experiment

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetCorruptionError):
            read_dataset(tmp_path)

    def test_truncated_tensor_file(self, tiny_dataset, tmp_path):
        write_dataset(tiny_dataset, tmp_path)
        path = tensor_path(tmp_path, "valid", "p")
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(DatasetCorruptionError) as exc_info:
            read_dataset(tmp_path)
        assert exc_info.value.tensor == "valid.p"

    def test_shape_disagreeing_with_manifest(self, tiny_dataset, tmp_path):
        write_dataset(tiny_dataset, tmp_path)
        path = tensor_path(tmp_path, "test", "s")
        with open(path, "wb") as fh:
            write_tensor(fh, "test.s", np.zeros((3, 10, 3), dtype=np.uint8))
        with pytest.raises(DatasetCorruptionError, match="manifest implies"):
            read_dataset(tmp_path)

    def test_newer_manifest_version(self, tiny_dataset, tmp_path):
        write_dataset(tiny_dataset, tmp_path)
        raw = json.loads((tmp_path / MANIFEST).read_text())
        raw["format_version"] = "2.0"
        (tmp_path / MANIFEST).write_text(json.dumps(raw))
        with pytest.raises(UnsupportedVersionError):
            read_dataset(tmp_path)


@pytest.fixture
def trained_checkpoint(tiny_experiment, tiny_dataset, tmp_path):
    trainer = Trainer(tiny_experiment, out_dir=tmp_path)
    trainer.train_epoch(tiny_dataset["train"])
    trainer.epoch = 1
    trainer.best_score = 62.5
    trainer.best_epoch = 0
    path = trainer.save()
    return trainer, path


@pytest.mark.integration
class TestCheckpoints:
    def test_round_trip(self, trained_checkpoint):
        trainer, path = trained_checkpoint
        loaded = load_checkpoint(path)

        assert loaded.epoch == 1
        assert loaded.meta.best_score == 62.5
        assert loaded.meta.best_epoch == 0
        assert loaded.experiment == trainer.experiment
        for group, store in trainer.model.stores.items():
            restored = loaded.model.stores[group]
            for name, tensor in store.items():
                np.testing.assert_array_equal(restored[name].data, tensor.data)
            for name, buffer in store.buffers.items():
                np.testing.assert_array_equal(restored.buffers[name], buffer)
            state, restored_state = trainer.optimizers[group], loaded.optimizers[group]
            assert restored_state.step == state.step
            assert restored_state.lr == state.lr
            for name in state.m:
                np.testing.assert_array_equal(restored_state.m[name], state.m[name])
                np.testing.assert_array_equal(restored_state.v[name], state.v[name])

    def test_rng_position_survives(self, trained_checkpoint):
        trainer, path = trained_checkpoint
        loaded = load_checkpoint(path)
        expected = trainer.streams.stream("gumbel").uniform(size=5)
        np.testing.assert_array_equal(loaded.rng.stream("gumbel").uniform(size=5), expected)

    def test_deleted_record_is_named(self, trained_checkpoint):
        _, path = trained_checkpoint
        meta_line, records = read_checkpoint_records(path)
        victim = records[3][0]
        rewrite_checkpoint(path, meta_line, [record for record in records if record[0] != victim])
        with pytest.raises(CheckpointError) as exc_info:
            load_checkpoint(path)
        assert exc_info.value.tensor == victim
        assert victim in str(exc_info.value)

    def test_architecture_mismatch_reports_shapes(self, trained_checkpoint):
        trainer, path = trained_checkpoint
        wider = trainer.experiment.model_copy(update={"hidden": trainer.experiment.hidden + 4})
        with pytest.raises(CheckpointError) as exc_info:
            load_checkpoint(path, experiment=wider)
        error = exc_info.value
        assert error.tensor.startswith("param/")
        assert error.details["stored"] != error.details["expected"]
        assert "expects" in str(error)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.ckpt")

    def test_save_is_atomic(self, tiny_experiment, model_factory, tmp_path):
        model = model_factory(tiny_experiment)
        path = save_checkpoint(tmp_path / "a.ckpt", tiny_experiment, model, {}, 0, RngStreams(0))
        assert path.exists()
        assert not (tmp_path / "a.ckpt.tmp").exists()
        assert load_checkpoint(path).optimizers == {}
