import numpy as np
import pytest

from nethermind.labelprop.episodes import stream_rng
from nethermind.labelprop.exceptions import DimensionError
from nethermind.labelprop.networks import init_sigma_net, sigma, sigma_raw, zero_final_layer
from nethermind.labelprop.tensor import Tensor, ops
from nethermind.labelprop.types import EmbeddingVariant, RngStream

from ..utils import assert_grads_match


class TestSigmaNet:
    def test_conv_pairing(self):
        params = init_sigma_net(EmbeddingVariant.conv4, (64, 5, 5), stream_rng(0, RngStream.init))
        assert params.parameter_count == 37_660
        features = Tensor(np.random.default_rng(0).normal(size=(3, 64, 5, 5)))
        assert sigma(params, features).shape == (3,)

    def test_mlp_pairing(self):
        params = init_sigma_net(EmbeddingVariant.mlp, (16,), stream_rng(0, RngStream.init))
        assert params.parameter_count == (16 * 8 + 8) + (8 + 1)
        values = sigma(params, Tensor(np.random.default_rng(1).normal(size=(6, 16)))).data
        assert values.shape == (6,)
        assert (values > 0.01).all()

    def test_zero_raw_output(self):
        params = init_sigma_net(EmbeddingVariant.mlp, (4,), stream_rng(0, RngStream.init))
        zero_final_layer(params)
        features = Tensor(np.random.default_rng(2).normal(size=(5, 4)))
        np.testing.assert_array_equal(sigma_raw(params, features).data, np.zeros(5))
        np.testing.assert_allclose(sigma(params, features).data, np.full(5, np.log(2.0) + 0.01), rtol=1e-12)
        assert sigma(params, features).data[0] == pytest.approx(0.70315, abs=1e-5)

    def test_initial_scales_are_near_one(self):
        params = init_sigma_net(EmbeddingVariant.mlp, (4,), stream_rng(0, RngStream.init))
        raw = sigma_raw(params, Tensor(np.random.default_rng(3).normal(size=(10, 4)))).data
        assert np.median(np.abs(raw - 1.0)) < 1.0

    def test_wrong_feature_rank(self):
        params = init_sigma_net(EmbeddingVariant.mlp, (4,), stream_rng(0, RngStream.init))
        with pytest.raises(DimensionError):
            sigma(params, Tensor(np.zeros((2, 1, 2, 2))))

    def test_gradients(self):
        params = init_sigma_net(EmbeddingVariant.mlp, (3,), stream_rng(4, RngStream.init))
        features = Tensor(np.random.default_rng(5).normal(size=(4, 3)), requires_grad=True)
        weights = np.random.default_rng(6).normal(size=4)
        assert_grads_match(
            lambda: ops.sum(sigma(params, features) * weights), features, params["fc1.weight"], params["fc2.bias"]
        )
