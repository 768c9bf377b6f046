import pytest

from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.training import TrainConfig, resolve_config
from nethermind.labelprop.types import EmbeddingVariant, LossScope, PropagationMode


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert (config.alpha, config.k_graph, config.lr0, config.query) == (0.99, 20, 1e-3, 15)
        assert config.loss_scope == LossScope.union
        assert config.train_n_way == 5
        assert config.train_query_per_class == 15

    def test_higher_shot_is_a_config_relation(self):
        config = TrainConfig(k_train=5, k_test=1, n_way_train=20, train_query=5)
        assert config.train_n_way == 20
        assert config.train_query_per_class == 5

    def test_json_round_trip(self):
        config = TrainConfig(embedding="conv4", loss_scope="query_only", propagation="iterative", seed=3)
        restored = TrainConfig.from_json(config.to_json())
        assert restored == config
        assert restored.embedding == EmbeddingVariant.conv4
        assert restored.propagation == PropagationMode.iterative
        assert restored.fingerprint() == config.fingerprint()

    def test_fingerprint_tracks_values(self):
        assert TrainConfig(seed=1).fingerprint() != TrainConfig(seed=2).fingerprint()

    @pytest.mark.parametrize(
        "values",
        [{"alpha": 1.0}, {"n_way": 1}, {"k_graph": 0}, {"embedding": "resnet"}, {"nonsense": 3}, {"seed": "abc"}],
    )
    def test_invalid_values(self, values):
        with pytest.raises(ConfigError):
            TrainConfig.from_mapping(values)

    def test_replace_validates(self):
        with pytest.raises(ConfigError):
            TrainConfig().replace(alpha=0.0)
        with pytest.raises(ConfigError):
            TrainConfig().replace(unknown=1)


class TestConfigFile:
    def test_file_with_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# desk run\nn_way = 3\nk_train = 2  # higher shot\nembedding = mlp\n\ntrain_query = none\nalpha = 0.9\n",
            encoding="utf-8",
        )
        config = resolve_config(path, alpha=0.5, seed=None)
        assert config.n_way == 3
        assert config.k_train == 2
        assert config.train_query is None
        assert config.alpha == 0.5
        assert config.seed == 0

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("learning_rate = 0.1\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            resolve_config(path)

    def test_overrides_without_file(self):
        assert resolve_config(None, k_test=5, query=None).k_test == 5

    def test_layering_order(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n_way = 3\nquery = 2\n", encoding="utf-8")
        defaults = {"n_way": 2, "query": 1, "embed_dim": 8}

        config = resolve_config(path, defaults=defaults, query=4, embed_dim=None)
        assert (config.n_way, config.query, config.embed_dim) == (3, 4, 8)
        assert resolve_config(None, defaults=defaults).n_way == 2
        assert resolve_config(None, defaults=defaults, n_way=6).n_way == 6
