import numpy as np
import pytest

from nethermind.labelprop.episodes import stream_rng
from nethermind.labelprop.exceptions import ConfigError, DimensionError
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.networks import conv4_output_shape, embed, init_embedding, init_sigma_net, parameter_count
from nethermind.labelprop.tensor import Tensor
from nethermind.labelprop.types import EmbeddingVariant, RngStream


class TestConv4:
    def test_parameter_count(self):
        params = init_embedding(EmbeddingVariant.conv4, (3, 84, 84), 16, stream_rng(0, RngStream.init))
        assert params.parameter_count == 113_088
        assert list(params)[:4] == ["block1.conv.weight", "block1.conv.bias", "block1.bn.gamma", "block1.bn.beta"]

    def test_output_shape(self):
        assert conv4_output_shape((3, 84, 84)) == (64, 5, 5)

        params = init_embedding(EmbeddingVariant.conv4, (3, 84, 84), 16, stream_rng(0, RngStream.init))
        batch = Tensor(np.random.default_rng(0).normal(size=(2, 3, 84, 84)))
        assert embed(params, batch).shape == (2, 64, 5, 5)

    def test_rejects_small_or_flat_inputs(self):
        with pytest.raises(ConfigError):
            init_embedding(EmbeddingVariant.conv4, (3, 8, 8), 16, stream_rng(0, RngStream.init))
        with pytest.raises(ConfigError):
            init_embedding(EmbeddingVariant.conv4, (12,), 16, stream_rng(0, RngStream.init))

    def test_wrong_input_rank(self):
        params = init_embedding(EmbeddingVariant.conv4, (1, 16, 16), 16, stream_rng(0, RngStream.init))
        with pytest.raises(DimensionError):
            embed(params, Tensor(np.zeros((2, 256))))


class TestMLP:
    def test_output_shape(self):
        params = init_embedding(EmbeddingVariant.mlp, (2,), 16, stream_rng(0, RngStream.init))
        assert embed(params, Tensor(np.ones((5, 2)))).shape == (5, 16)
        assert params.parameter_count == (2 * 64 + 64) + (64 * 64 + 64) + (64 * 16 + 16)

    def test_identical_inputs_embed_identically(self):
        params = init_embedding(EmbeddingVariant.mlp, (3,), 8, stream_rng(1, RngStream.init), hidden_dim=16)
        rows = embed(params, Tensor(np.array([[0.3, -1.0, 2.0], [0.3, -1.0, 2.0], [1.0, 0.0, 0.0]]))).data
        np.testing.assert_array_equal(rows[0], rows[1])

    def test_wrong_input_rank(self):
        params = init_embedding(EmbeddingVariant.mlp, (2,), 16, stream_rng(0, RngStream.init))
        with pytest.raises(DimensionError):
            embed(params, Tensor(np.zeros((2, 1, 2))))
        with pytest.raises(DimensionError):
            embed(params, Tensor(np.zeros((2, 3))))

    def test_initialization_is_seeded(self):
        first = init_embedding(EmbeddingVariant.mlp, (2,), 4, stream_rng(5, RngStream.init))
        second = init_embedding(EmbeddingVariant.mlp, (2,), 4, stream_rng(5, RngStream.init))
        other = init_embedding(EmbeddingVariant.mlp, (2,), 4, stream_rng(6, RngStream.init))
        for name, tensor in first.items():
            np.testing.assert_array_equal(tensor.data, second[name].data)
        assert not np.array_equal(first["fc1.weight"].data, other["fc1.weight"].data)


def test_model_parameter_names():
    model = PropagationNetwork.initialize(
        EmbeddingVariant.mlp, (2,), stream_rng(0, RngStream.init), embed_dim=8, hidden_dim=16
    )
    names = list(model.parameters())
    assert names[0] == "embedding.fc1.weight"
    assert names[-1] == "sigma.fc2.bias"
    assert model.parameter_count == parameter_count(model.embedding, model.sigma_net)
    assert model.parameter_count < 2_000


def test_conv_model_parameter_total():
    rng = stream_rng(0, RngStream.init)
    embedding = init_embedding(EmbeddingVariant.conv4, (3, 84, 84), 16, rng)
    sigma_net = init_sigma_net(EmbeddingVariant.conv4, (64, 5, 5), rng)
    assert parameter_count(embedding, sigma_net) == 113_088 + 37_660
