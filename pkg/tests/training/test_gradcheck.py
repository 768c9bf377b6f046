import pytest

from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.training import TrainConfig, gradcheck


@pytest.fixture(name="gradcheck_config")
def fixture_gradcheck_config():
    return TrainConfig(n_way=2, k_test=1, query=1, embed_dim=8, hidden_dim=16, k_graph=20)


@pytest.mark.slow
def test_gradients_agree(gradcheck_config):
    report = gradcheck(gradcheck_config)
    assert report.passed
    assert sum(check.size for check in report.checks) == 537
    assert set(report.groups()) == {"embedding", "sigma"}
    assert all(error < 1e-4 for error in report.groups().values())


@pytest.mark.slow
def test_zero_sigma_head_is_flagged_not_failed(gradcheck_config):
    report = gradcheck(gradcheck_config, zero_sigma_head=True)
    assert report.passed
    assert report.table().row_count == len(report.checks)


def test_conv_embedding_is_rejected():
    with pytest.raises(ConfigError):
        gradcheck(TrainConfig(embedding="conv4"))
