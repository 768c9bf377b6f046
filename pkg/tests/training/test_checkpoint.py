import numpy as np
import pytest

from nethermind.labelprop.episodes import sample_episode, stream_rng
from nethermind.labelprop.exceptions import FormatError
from nethermind.labelprop.propagation import build_label_matrix
from nethermind.labelprop.training import Trainer, load_checkpoint, save_checkpoint
from nethermind.labelprop.training.checkpoint import decode_checkpoint, encode_checkpoint
from nethermind.labelprop.types import RngStream


@pytest.fixture(name="trained_checkpoint")
def fixture_trained_checkpoint(blobs_dataset, tiny_config):
    trainer = Trainer.from_config(tiny_config(max_episodes=2), blobs_dataset())
    return trainer.run()


class TestCheckpointEncoding:
    def test_bytes_are_stable(self, trained_checkpoint):
        encoded = encode_checkpoint(trained_checkpoint)
        assert encode_checkpoint(decode_checkpoint(encoded)) == encoded

    def test_decoded_state(self, trained_checkpoint):
        decoded = decode_checkpoint(encode_checkpoint(trained_checkpoint))
        assert decoded.config == trained_checkpoint.config
        assert decoded.episodes_seen == 2
        assert decoded.adam.step == 2
        assert decoded.in_shape == (2,)
        assert decoded.rng_counters == trained_checkpoint.rng_counters
        assert list(decoded.params) == list(trained_checkpoint.params)
        for name, array in trained_checkpoint.params.items():
            np.testing.assert_array_equal(decoded.params[name], array)

    def test_name_table_order(self, trained_checkpoint):
        names = [name for name, _ in trained_checkpoint.name_table()]
        param_count = len(trained_checkpoint.params)
        assert names[:param_count] == list(trained_checkpoint.params)
        assert all(name.startswith("adam.m.") for name in names[param_count : 2 * param_count])
        assert all(name.startswith("adam.v.") for name in names[2 * param_count :])

    def test_bad_magic(self, trained_checkpoint):
        encoded = bytearray(encode_checkpoint(trained_checkpoint))
        encoded[:4] = b"XXXX"
        with pytest.raises(FormatError) as exc:
            decode_checkpoint(bytes(encoded))
        assert exc.value.offset == 0

    def test_unsupported_version(self, trained_checkpoint):
        encoded = bytearray(encode_checkpoint(trained_checkpoint))
        encoded[4] = 9
        with pytest.raises(FormatError) as exc:
            decode_checkpoint(bytes(encoded))
        assert exc.value.offset == 4

    def test_fingerprint_mismatch(self, trained_checkpoint):
        encoded = bytearray(encode_checkpoint(trained_checkpoint))
        encoded[6] ^= 0xFF
        with pytest.raises(FormatError) as exc:
            decode_checkpoint(bytes(encoded))
        assert exc.value.offset == 6

    def test_checksum_mismatch(self, trained_checkpoint):
        encoded = bytearray(encode_checkpoint(trained_checkpoint))
        encoded[-10] ^= 0x01
        with pytest.raises(FormatError) as exc:
            decode_checkpoint(bytes(encoded))
        assert exc.value.offset == len(encoded) - 4

    def test_truncated(self, trained_checkpoint):
        encoded = encode_checkpoint(trained_checkpoint)
        with pytest.raises(FormatError, match="Truncated"):
            decode_checkpoint(encoded[: len(encoded) // 2])

    def test_trailing_bytes(self, trained_checkpoint):
        with pytest.raises(FormatError, match="trailing"):
            decode_checkpoint(encode_checkpoint(trained_checkpoint) + b"\x00")


class TestCheckpointFiles:
    def test_save_and_load(self, tmp_path, trained_checkpoint):
        path = tmp_path / "model.tpnc"
        save_checkpoint(trained_checkpoint, path)
        assert not (tmp_path / "model.tpnc.tmp").exists()
        assert load_checkpoint(path).fingerprint == trained_checkpoint.fingerprint

    def test_rebuilt_model_predicts_identically(self, blobs_dataset, trained_checkpoint):
        dataset = blobs_dataset()
        episode = sample_episode(dataset, 3, 1, 3, stream_rng(1, RngStream.sampling, 0))
        labels = build_label_matrix(episode.support_labels, episode.n_way, episode.size)

        first = trained_checkpoint.to_model().predict(episode.batch(), labels)
        second = decode_checkpoint(encode_checkpoint(trained_checkpoint)).to_model().predict(episode.batch(), labels)
        np.testing.assert_array_equal(first.probs, second.probs)
