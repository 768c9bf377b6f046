import pandas as pd
import pytest

from nethermind.labelprop.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE, exit_code_for
from nethermind.labelprop.episodes import load_fsds
from nethermind.labelprop.exceptions import FormatError, NumericalError
from nethermind.labelprop.training import GradcheckReport, Trainer, load_checkpoint

from .utils import TINY_TRAINING, read_report_header

TINY_CONFIG_FILE = (
    "# tiny run\nn_way = 3\nk_train = 1\nquery = 2\nk_graph = 5\nembed_dim = 4\nhidden_dim = 8\n"
    "max_episodes = 1\nseed = 4\n"
)


class TestGenData:
    def test_writes_dataset_and_manifest(self, invoke, tmp_path):
        path = tmp_path / "arcs.fsds"
        result = invoke("gen-data", "--kind", "noisy-arcs", "--classes", "10", "--per-class", "20", "-o", path)
        assert path.exists()
        assert (tmp_path / "arcs.split").exists()
        assert "noisy-arcs" in result.output

        dataset = load_fsds(path)
        assert len(dataset) == 10
        assert dataset.example_shape == (2,)

    def test_same_seed_same_bytes(self, invoke, tmp_path):
        for name in ("a.fsds", "b.fsds"):
            invoke("gen-data", "--kind", "gaussian-blobs", "--seed", "5", "--dim", "3", "-o", tmp_path / name)
        assert (tmp_path / "a.fsds").read_bytes() == (tmp_path / "b.fsds").read_bytes()

    def test_invalid_fractions(self, invoke, tmp_path):
        invoke(
            "gen-data", "--kind", "gaussian-blobs", "--splits", "0.5,0.5", "-o", tmp_path / "x.fsds",
            expected_exit=EXIT_USAGE,
        )  # fmt: skip

    def test_invalid_kind(self, invoke, tmp_path):
        invoke("gen-data", "--kind", "spirals", "-o", tmp_path / "x.fsds", expected_exit=EXIT_USAGE)


class TestTrain:
    def test_checkpoint_and_metrics(self, invoke, tmp_path, rings_file):
        checkpoint, metrics = tmp_path / "run.tpnc", tmp_path / "run.csv"
        result = invoke(
            "train", "--dataset", rings_file, "--checkpoint", checkpoint, "--metrics", metrics,
            "--max-episodes", "3", *TINY_TRAINING,
        )  # fmt: skip
        assert "Training complete" in result.output
        assert load_checkpoint(checkpoint).episodes_seen == 3
        assert pd.read_csv(metrics)["episode"].tolist() == [0, 1, 2]

    def test_resume(self, invoke, tmp_path, rings_file):
        straight, partial = tmp_path / "straight.tpnc", tmp_path / "partial.tpnc"
        invoke("train", "--dataset", rings_file, "--checkpoint", straight, "--max-episodes", "4", *TINY_TRAINING)
        invoke("train", "--dataset", rings_file, "--checkpoint", partial, "--max-episodes", "2", *TINY_TRAINING)
        invoke(
            "train", "--dataset", rings_file, "--checkpoint", partial, "--resume", partial,
            "--max-episodes", "4", "--no-interaction",
        )  # fmt: skip
        assert straight.read_bytes() == partial.read_bytes()

    def test_config_file(self, invoke, tmp_path, rings_file):
        config = tmp_path / "tiny.cfg"
        config.write_text("# tiny run\nn_way = 3\nk_train = 1\nquery = 2\nembed_dim = 4\nhidden_dim = 8\n")
        checkpoint = tmp_path / "cfg.tpnc"
        invoke(
            "train", "--dataset", rings_file, "--config", config, "--checkpoint", checkpoint,
            "--max-episodes", "1", "--no-interaction",
        )  # fmt: skip
        assert load_checkpoint(checkpoint).config.k_train == 1

    def test_unknown_config_key(self, invoke, tmp_path, rings_file):
        config = tmp_path / "bad.cfg"
        config.write_text("learning_rate = 0.1\n")
        invoke(
            "train", "--dataset", rings_file, "--config", config, "--checkpoint", tmp_path / "x.tpnc",
            expected_exit=EXIT_USAGE,
        )  # fmt: skip

    def test_numerical_failure(self, invoke, tmp_path, rings_file, mocker):
        mocker.patch.object(Trainer, "run", side_effect=NumericalError("Non-finite loss nan", {"episode": 0}))
        invoke(
            "train", "--dataset", rings_file, "--checkpoint", tmp_path / "x.tpnc", *TINY_TRAINING,
            expected_exit=EXIT_NUMERICAL,
        )  # fmt: skip


class TestEvaluation:
    def test_eval_report(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        output = tmp_path / "eval.csv"
        invoke(
            "eval", "--checkpoint", tiny_checkpoint, "--dataset", rings_file, "--episodes", "6",
            "--no-interaction", "-o", output,
        )  # fmt: skip
        lines = output.read_text().splitlines()
        assert lines[0] == "# command = eval"
        header = read_report_header(output)
        assert (header["config.k_graph"], header["config.alpha"], header["config.embed_dim"]) == ("5", "0.99", "4")
        assert header["n_way"] == "3"
        frame = pd.read_csv(output, comment="#")
        assert list(frame.columns) == ["tag", "n_way", "k_shot", "query", "episodes", "mean_acc", "ci95", "seconds"]
        assert frame.loc[0, "tag"] == "tpn"
        assert (frame.loc[0, "n_way"], frame.loc[0, "k_shot"], frame.loc[0, "episodes"]) == (3, 1, 6)
        assert frame["seconds"].isna().all()

    def test_eval_is_reproducible(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        for name in ("a.csv", "b.csv"):
            invoke(
                "eval", "--checkpoint", tiny_checkpoint, "--dataset", rings_file, "--episodes", "5",
                "--workers", "2", "--no-interaction", "-o", tmp_path / name,
            )  # fmt: skip
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_eval_with_label_noise(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        output = tmp_path / "noisy.csv"
        invoke(
            "eval", "--checkpoint", tiny_checkpoint, "--dataset", rings_file, "--episodes", "4", "--k-shot", "2",
            "--label-init", "uniform", "--incorrect-labels", "1", "--timing", "--no-interaction", "-o", output,
        )  # fmt: skip
        frame = pd.read_csv(output, comment="#")
        assert frame["seconds"].notna().all()

    @pytest.mark.parametrize("kind", ["prototype", "fixed_sigma_lp"])
    def test_eval_baseline(self, invoke, tmp_path, rings_file, kind):
        output = tmp_path / f"{kind}.csv"
        invoke(
            "eval-baseline", "--kind", kind, "--dataset", rings_file, "--n-way", "3", "--k-shot", "1",
            "--query", "3", "--episodes", "5", "--no-interaction", "-o", output,
        )  # fmt: skip
        assert pd.read_csv(output, comment="#").loc[0, "tag"] == kind

    def test_eval_baseline_in_embedding_space(self, invoke, rings_file, tiny_checkpoint):
        invoke(
            "eval-baseline", "--kind", "fixed_sigma_lp", "--checkpoint", tiny_checkpoint, "--dataset", rings_file,
            "--sigma", "0.5", "--episodes", "3", "--no-interaction",
        )  # fmt: skip

    def test_too_many_ways(self, invoke, rings_file):
        # 20 classes leave 4 in the test split, the default 5-way episodes cannot be drawn
        invoke(
            "eval-baseline", "--kind", "prototype", "--dataset", rings_file, "--episodes", "2", "--no-interaction",
            expected_exit=EXIT_DATA,
        )  # fmt: skip

    def test_semi_eval(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        output = tmp_path / "semi.csv"
        invoke(
            "semi-eval", "--checkpoint", tiny_checkpoint, "--dataset", rings_file, "--pool-size", "2",
            "--splits", "2", "--episodes", "3", "--no-interaction", "-o", output,
        )  # fmt: skip
        frame = pd.read_csv(output, comment="#")
        assert frame.loc[0, "tag"] == "tpn-semi-m2"
        assert read_report_header(output)["config.k_graph"] == "5"
        assert frame.loc[0, "episodes"] == 6
        assert frame.columns[-1] == "stderr"

    def test_sweep(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        output = tmp_path / "sweep.csv"
        invoke(
            "sweep", "--dataset", rings_file, "--checkpoint", tiny_checkpoint, "--param", "query",
            "--values", "2,3", "--episodes", "3", "-o", output,
        )  # fmt: skip
        frame = pd.read_csv(output, comment="#")
        assert list(frame.columns[:2]) == ["param", "value"]
        assert frame["value"].tolist() == [2, 3]
        assert frame["query"].tolist() == [2, 3]

    def test_sweep_unknown_param(self, invoke, rings_file, tiny_checkpoint):
        invoke(
            "sweep", "--dataset", rings_file, "--checkpoint", tiny_checkpoint, "--param", "temperature",
            "--values", "1,2", expected_exit=EXIT_USAGE,
        )  # fmt: skip


class TestConfigPrecedence:
    @pytest.fixture(name="config_file")
    def fixture_config_file(self, tmp_path):
        path = tmp_path / "tiny.cfg"
        path.write_text(TINY_CONFIG_FILE)
        return path

    def test_train_file_values_and_flag_overrides(self, invoke, tmp_path, rings_file, config_file):
        from_file, overridden = tmp_path / "file.tpnc", tmp_path / "flags.tpnc"
        invoke("train", "--dataset", rings_file, "--config", config_file, "--checkpoint", from_file, "--no-interaction")
        invoke(
            "train", "--dataset", rings_file, "--config", config_file, "--checkpoint", overridden,
            "--query", "3", "--seed", "2", "--no-interaction",
        )  # fmt: skip

        config = load_checkpoint(from_file).config
        assert (config.n_way, config.k_train, config.query, config.seed, config.max_episodes) == (3, 1, 2, 4, 1)
        config = load_checkpoint(overridden).config
        assert (config.n_way, config.k_train, config.query, config.seed, config.max_episodes) == (3, 1, 3, 2, 1)

    @pytest.mark.parametrize("seed_flag, expected_seed", [((), "4"), (("--seed", "2"), "2")])
    def test_sweep_base_config(self, invoke, tmp_path, rings_file, config_file, seed_flag, expected_seed):
        output = tmp_path / "sweep.csv"
        invoke(
            "sweep", "--dataset", rings_file, "--config", config_file, "--param", "query", "--values", "2",
            "--episodes", "2", *seed_flag, "-o", output,
        )  # fmt: skip
        header = read_report_header(output)
        assert header["config.seed"] == expected_seed
        assert (header["config.n_way"], header["config.k_graph"], header["config.embed_dim"]) == ("3", "5", "4")
        assert header["seed"] == expected_seed

    def test_gradcheck_file_values_and_flag_overrides(self, invoke, tmp_path, mocker):
        path = tmp_path / "gradcheck.cfg"
        path.write_text("n_way = 3\nquery = 2\nembed_dim = 4\n")
        received = []

        def _capture(config, zero_sigma_head=False):  # pylint: disable=unused-argument
            received.append(config)
            return GradcheckReport()

        mocker.patch("nethermind.labelprop.training.gradcheck", side_effect=_capture)
        invoke("gradcheck")
        invoke("gradcheck", "--config", path)
        invoke("gradcheck", "--config", path, "--query", "3", "--k-shot", "2")

        shapes = [(c.n_way, c.k_test, c.query, c.embed_dim, c.hidden_dim, c.embedding.value) for c in received]
        assert shapes == [(2, 1, 1, 8, 16, "mlp"), (3, 1, 2, 4, 16, "mlp"), (3, 2, 3, 4, 16, "mlp")]


class TestTools:
    def test_gradcheck(self, invoke):
        result = invoke("gradcheck")
        assert "tensors agree with finite differences" in result.output
        assert "embedding" in result.output

    def test_gradcheck_zero_sigma_head(self, invoke):
        invoke("gradcheck", "--zero-sigma-head")

    def test_inspect_checkpoint(self, invoke, tiny_checkpoint):
        result = invoke("inspect-checkpoint", tiny_checkpoint)
        assert "Stored Blobs" in result.output
        assert "episodes seen" in result.output

    def test_inspect_missing_file(self, invoke, tmp_path):
        invoke("inspect-checkpoint", tmp_path / "missing.tpnc", expected_exit=EXIT_USAGE)


class TestExitCodes:
    def test_help(self, invoke):
        assert "semi-eval" in invoke("--help").output

    def test_unknown_command(self, invoke):
        invoke("distill", expected_exit=EXIT_USAGE)

    def test_bad_option_value(self, invoke, rings_file, tiny_checkpoint):
        invoke(
            "eval", "--checkpoint", tiny_checkpoint, "--dataset", rings_file, "--episodes", "many",
            expected_exit=EXIT_USAGE,
        )  # fmt: skip

    def test_corrupted_dataset(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        corrupted = tmp_path / "corrupted.fsds"
        corrupted.write_bytes(b"XXXX" + rings_file.read_bytes()[4:])
        invoke(
            "eval", "--checkpoint", tiny_checkpoint, "--dataset", corrupted, "--episodes", "2",
            expected_exit=EXIT_DATA,
        )  # fmt: skip

    def test_missing_dataset(self, invoke, tmp_path, tiny_checkpoint):
        invoke(
            "eval", "--checkpoint", tiny_checkpoint, "--dataset", tmp_path / "missing.fsds", "--episodes", "2",
            expected_exit=EXIT_DATA,
        )  # fmt: skip

    def test_corrupted_checkpoint(self, invoke, tmp_path, rings_file, tiny_checkpoint):
        corrupted = tmp_path / "corrupted.tpnc"
        corrupted.write_bytes(tiny_checkpoint.read_bytes()[:-1])
        invoke("eval", "--checkpoint", corrupted, "--dataset", rings_file, expected_exit=EXIT_DATA)

    def test_exception_mapping(self):
        assert exit_code_for(FormatError("bad magic", offset=0)) == EXIT_DATA
        assert exit_code_for(NumericalError("nan")) == EXIT_NUMERICAL
