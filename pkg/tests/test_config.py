import pytest

from tweetxfer.config import RunConfig, load_config
from tweetxfer.errors import DataError


class TestDefaults:
    def test_defaults_are_valid(self):
        cfg = load_config()
        assert cfg == RunConfig()

    def test_network_shape_defaults(self):
        cfg = RunConfig()
        assert cfg.embed_dim == 300
        assert cfg.lstm_units == 100
        assert cfg.filters == 200
        assert cfg.kernel_sizes == (3, 4, 5)
        assert cfg.dense_units == 100
        assert cfg.max_len == 100

    def test_optimizer_defaults(self):
        cfg = RunConfig()
        assert cfg.lr == 0.002
        assert cfg.beta1 == 0.99
        assert cfg.beta2 == 0.999
        assert cfg.schedule_decay == 0.004

    def test_alpha_for_defaults_to_ten_over_k(self):
        cfg = RunConfig()
        assert cfg.alpha_for(20) == pytest.approx(0.5)
        assert cfg.alpha_for(2) == pytest.approx(5.0)
        cfg.lda_alpha = 1.5
        assert cfg.alpha_for(20) == 1.5


class TestFileParsing:
    def test_values_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# experiment\n"
            "seed = 7\n"
            "lr = 0.01   # bigger steps\n"
            "\n"
            "kernel_sizes = 2,3,4\n"
            "dropout = 0.25\n",
            encoding="utf-8",
        )
        cfg = load_config(str(path))
        assert cfg.seed == 7
        assert cfg.lr == 0.01
        assert cfg.kernel_sizes == (2, 3, 4)
        assert cfg.dropout == 0.25
        # untouched keys keep defaults
        assert cfg.filters == 200

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("learning_rate = 0.1\n", encoding="utf-8")
        with pytest.raises(DataError, match="learning_rate"):
            load_config(str(path))

    def test_missing_equals_sign(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed 7\n", encoding="utf-8")
        with pytest.raises(DataError, match=r":1:"):
            load_config(str(path))

    def test_bad_int(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = sieben\n", encoding="utf-8")
        with pytest.raises(DataError, match="integer"):
            load_config(str(path))

    def test_bad_kernel_list(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("kernel_sizes = 3;4;5\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_config(str(path))


class TestOverrides:
    def test_overrides_win_over_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = 7\nlr = 0.01\n", encoding="utf-8")
        cfg = load_config(str(path), overrides={"seed": 9})
        assert cfg.seed == 9
        assert cfg.lr == 0.01

    def test_none_overrides_skipped(self):
        cfg = load_config(overrides={"seed": None})
        assert cfg.seed == 0

    def test_unknown_override_rejected(self):
        with pytest.raises(DataError, match="mystery"):
            load_config(overrides={"mystery": 1})


class TestValidation:
    @pytest.mark.parametrize(
        "key,value",
        [
            ("embed_dim", 0),
            ("lstm_units", -5),
            ("dropout", 1.0),
            ("dropout", -0.1),
            ("beta1", 1.5),
            ("lr", 0.0),
            ("lda_beta", -0.01),
            ("tail", 0),
            ("k_topics", 1),
            ("k_users", 1),
            ("min_user_freq", -1),
            ("kernel_sizes", (3, 3)),
            ("kernel_sizes", (4, 3)),
            ("kernel_sizes", ()),
        ],
    )
    def test_out_of_range_rejected(self, key, value):
        with pytest.raises(DataError):
            load_config(overrides={key: value})

    def test_ngram_range_consistency(self):
        with pytest.raises(DataError, match="ngram"):
            load_config(overrides={"ngram_min": 5, "ngram_max": 3})

    def test_in_range_values_accepted(self):
        cfg = load_config(
            overrides={"dropout": 0.0, "leaky_slope": 0.0, "lda_alpha": 0.0}
        )
        assert cfg.dropout == 0.0
