import struct

import numpy as np
import pytest

from src.business.models import RegistrationModel
from src.business.services import make_pair
from src.data.repositories import (
    load_dataset,
    load_run_config,
    read_checkpoint,
    read_volume,
    save_dataset,
    write_checkpoint,
    write_effective_config,
    write_loss_history,
    write_volume,
)
from src.data.repositories.checkpoint import decode_checkpoint, encode_checkpoint
from src.data.repositories.reports import read_rows
from src.data.repositories.run_config import run_config_text
from src.data.repositories.volume import HEADER_SIZE, decode_volume, encode_volume
from src.data.schemas import EpochRecord, RVFKind
from src.errors import ConfigException, FormatException, ResourceNotFoundException, TruncatedFileException


def random_volume(rng, kind):
    dims = tuple(int(d) for d in rng.integers(1, 7, size=3))
    if kind == RVFKind.LABELS:
        return rng.integers(0, 65536, size=dims).astype(np.uint16)
    if kind == RVFKind.FIELD:
        return rng.standard_normal((3,) + dims).astype(np.float32)
    return rng.standard_normal(dims).astype(np.float32)


class TestVolumeFiles:
    def test_random_round_trips_are_exact(self, rng, tmp_path):
        kinds = list(RVFKind)
        for position in range(50):
            kind = kinds[position % len(kinds)]
            data = random_volume(rng, kind)
            path = write_volume(tmp_path / f"v{position}.rvf", data, kind)
            restored = read_volume(path, kind)
            assert restored.dtype == data.dtype
            np.testing.assert_array_equal(restored, data)

    def test_header_layout(self):
        raw = encode_volume(np.zeros((2, 3, 4), dtype=np.uint16))
        assert HEADER_SIZE == 33
        assert raw[:4] == b"RVF1"
        assert raw[4] == int(RVFKind.LABELS)
        assert struct.unpack("<3I", raw[5:17]) == (2, 3, 4)
        assert raw[17:33] == b"\x00" * 16
        assert len(raw) == 33 + 2 * 24

    def test_kind_is_inferred(self):
        assert decode_volume(encode_volume(np.zeros((3, 2, 2, 2))))[0].kind == RVFKind.FIELD
        assert decode_volume(encode_volume(np.zeros((2, 2, 2), dtype=np.int64)))[0].kind == RVFKind.LABELS
        assert decode_volume(encode_volume(np.zeros((2, 2, 2))))[0].kind == RVFKind.INTENSITY

    def test_bad_magic(self):
        raw = bytearray(encode_volume(np.zeros((2, 2, 2))))
        raw[:4] = b"RVF2"
        with pytest.raises(FormatException, match="magic"):
            decode_volume(bytes(raw))

    def test_unknown_kind(self):
        raw = bytearray(encode_volume(np.zeros((2, 2, 2))))
        raw[4] = 9
        with pytest.raises(FormatException, match="kind"):
            decode_volume(bytes(raw))

    def test_truncated_payload_reports_offsets(self):
        raw = encode_volume(np.zeros((2, 2, 2), dtype=np.float32))
        with pytest.raises(TruncatedFileException) as info:
            decode_volume(raw[:-5])
        assert info.value.expected_end == 33 + 32
        assert info.value.actual_end == 33 + 27

    def test_truncated_header(self):
        with pytest.raises(TruncatedFileException):
            decode_volume(b"RVF1\x00")

    def test_trailing_bytes_are_rejected(self):
        raw = encode_volume(np.zeros((2, 2, 2), dtype=np.float32))
        with pytest.raises(FormatException, match="byte offset 65"):
            decode_volume(raw + b"\x00\x00")

    def test_wrong_kind_is_rejected(self, tmp_path):
        path = write_volume(tmp_path / "labels.rvf", np.zeros((2, 2, 2), dtype=np.uint16))
        with pytest.raises(FormatException):
            read_volume(path, RVFKind.FIELD)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ResourceNotFoundException):
            read_volume(tmp_path / "nope.rvf")

    def test_labels_outside_u16_are_rejected(self):
        with pytest.raises(FormatException):
            encode_volume(np.array([[[70000]]]), RVFKind.LABELS)


class TestCheckpoints:
    def test_round_trip_is_bit_exact(self, tiny_config, tmp_path, rng):
        model = RegistrationModel(tiny_config)
        for param in model.parameters():
            param.data = rng.standard_normal(param.shape)
        restored = read_checkpoint(write_checkpoint(tmp_path / "model.hsgk", model))
        assert restored.config == model.config
        assert restored.param_count() == model.param_count()
        for (name, original), (restored_name, value) in zip(model.named_parameters(), restored.named_parameters()):
            assert name == restored_name
            np.testing.assert_array_equal(value.data, original.data)

    def test_missing_tensor_is_named(self, tiny_config, tmp_path):
        raw = encode_checkpoint(RegistrationModel(tiny_config))
        # last record: name length, "flow_head.bias", rank, one dim, three f64 values
        last_record = 4 + len("flow_head.bias") + 4 + 4 + 3 * 8
        assert decode_checkpoint(raw[:-last_record])[1].get("flow_head.bias") is None
        path = tmp_path / "partial.hsgk"
        path.write_bytes(raw[:-last_record])
        with pytest.raises(ResourceNotFoundException, match="flow_head"):
            read_checkpoint(path)

    def test_bad_magic(self, tiny_config, tmp_path):
        path = tmp_path / "model.hsgk"
        path.write_bytes(b"XXXX" + encode_checkpoint(RegistrationModel(tiny_config))[4:])
        with pytest.raises(FormatException, match="magic"):
            read_checkpoint(path)

    def test_truncated_checkpoint(self, tiny_config):
        raw = encode_checkpoint(RegistrationModel(tiny_config))
        with pytest.raises(TruncatedFileException):
            decode_checkpoint(raw[:-3])

    def test_tensor_name_must_be_utf8(self, tiny_config, tmp_path):
        raw = bytearray(encode_checkpoint(RegistrationModel(tiny_config)))
        last_record = 4 + len("flow_head.bias") + 4 + 4 + 3 * 8
        raw[len(raw) - last_record + 4] = 0xFF
        path = tmp_path / "model.hsgk"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatException, match=r"model\.hsgk: tensor name .* not valid UTF-8"):
            read_checkpoint(path)

    def test_huge_tensor_dims_are_truncation_not_overflow(self, tiny_config):
        raw = encode_checkpoint(RegistrationModel(tiny_config))
        huge = 2**32 - 1
        record = struct.pack("<I", 1) + b"x" + struct.pack("<4I", 3, huge, huge, huge)
        with pytest.raises(TruncatedFileException) as excinfo:
            decode_checkpoint(raw + record)
        assert excinfo.value.expected_end == len(raw) + len(record) + 8 * huge**3

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(ResourceNotFoundException):
            read_checkpoint(tmp_path / "absent.hsgk")


class TestRunConfig:
    def test_file_values_and_overrides(self, tmp_path, tiny_config_text):
        path = tmp_path / "run.txt"
        path.write_text(tiny_config_text + "epochs=5\nlambda_reg=0.5\n", encoding="utf-8")
        config = load_run_config(path, {"epochs": 7, "lr": None})
        assert config.epochs == 7
        assert config.network.lambda_reg == 0.5
        assert config.network.channels == [4, 8]
        assert config.network.lr == 1e-4

    def test_effective_config_round_trips(self, tmp_path, tiny_config_text):
        source = tmp_path / "run.txt"
        source.write_text(tiny_config_text + "use_ffn=false\n", encoding="utf-8")
        config = load_run_config(source)
        written = write_effective_config(tmp_path / "out", run_config_text(config))
        assert written.name == "config.txt"
        assert load_run_config(written) == config

    def test_unknown_key_is_named(self, tmp_path):
        path = tmp_path / "run.txt"
        path.write_text("stagse=2\n", encoding="utf-8")
        with pytest.raises(ConfigException, match="stagse"):
            load_run_config(path)

    @pytest.mark.parametrize(
        "text", ["lncc_window=4\n", "stages=2\nchannels=4,8,16\n", "bottleneck_mixer=mha\nmha_heads=5\n"]
    )
    def test_invalid_values_are_config_errors(self, tmp_path, text):
        path = tmp_path / "run.txt"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigException):
            load_run_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ResourceNotFoundException):
            load_run_config(tmp_path / "absent.txt")


class TestDatasets:
    def test_saved_dataset_loads_back(self, tmp_path):
        pairs = [make_pair(seed, (8, 8, 8), amplitude=1.0, smoothness=2.0, num_labels=2) for seed in (1, 2)]
        save_dataset(tmp_path / "data", pairs)
        loaded = load_dataset(tmp_path / "data")
        assert [pair.pair_id for pair in loaded] == ["pair_001", "pair_002"]
        for original, restored in zip(pairs, loaded):
            np.testing.assert_array_equal(restored.moving_labels, original.moving_labels)
            np.testing.assert_array_equal(restored.moving, original.moving.astype(np.float32))
            np.testing.assert_array_equal(restored.gt_field, original.gt_field.astype(np.float32))
            assert restored.baseline_dice == pytest.approx(original.baseline_dice)

    def test_empty_directory_has_no_pairs(self, tmp_path):
        with pytest.raises(ResourceNotFoundException):
            load_dataset(tmp_path)

    def test_loss_history_csv(self, tmp_path):
        history = [EpochRecord(epoch=1, sim_loss=0.5, reg_loss=0.1, total=0.6)]
        rows = read_rows(write_loss_history(tmp_path / "loss.csv", history))
        assert rows == [{"epoch": "1", "sim_loss": "0.5", "reg_loss": "0.1", "total": "0.6"}]
