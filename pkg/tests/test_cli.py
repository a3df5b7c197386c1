import contextlib
import io
import os

import numpy as np
import pytest

from tweetxfer import corpus, lda, net
from tweetxfer.cli import main
from tweetxfer.fixtures import (
    clique_mentions,
    comment_records,
    emoji_tweets,
    planted_topic_docs,
    raw_from_docs,
    save_comments,
    separable_labeled,
)

# Small dimensions keep every CLI run under a second without changing
# any code path.
_CFG = """
embed_dim = 12
lstm_units = 6
filters = 5
dense_units = 8
kernel_sizes = 2,3
k_users = 2
k_topics = 2
lda_iterations = 40
infer_iterations = 10
pretrain_epochs = 2
pretrain_batch = 16
finetune_epochs = 2
finetune_batch = 8
baseline_epochs = 10
tail = 8
"""


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """A workspace with input corpora and the config file written once."""
    root = tmp_path_factory.mktemp("cli")
    paths = {"root": root, "cfg": str(root / "run.cfg")}
    (root / "run.cfg").write_text(_CFG, encoding="utf-8")

    labeled = separable_labeled(40, seed=0)
    paths["labeled"] = str(root / "labeled.tsv")
    corpus.save_labeled(labeled, paths["labeled"])

    docs, _ = planted_topic_docs(60, seed=1)
    paths["topic_corpus"] = str(root / "topics.txt")
    corpus.save_token_lines(docs, paths["topic_corpus"])
    paths["topic_tweets"] = str(root / "topic_tweets.jsonl")
    corpus.save_raw(raw_from_docs(docs), paths["topic_tweets"])

    tweets, truth = clique_mentions(n_cliques=2, users_per_clique=5, n_tweets=80, seed=2)
    lists = corpus.extract_mention_lists(tweets, min_mentions=2, min_user_freq=1)
    paths["mentions"] = str(root / "mentions.txt")
    corpus.save_token_lines(lists, paths["mentions"])
    paths["mention_tweets"] = str(root / "mention_tweets.jsonl")
    corpus.save_raw(tweets, paths["mention_tweets"])

    emos, _ = emoji_tweets(40, seed=3)
    paths["emoji"] = str(root / "emoji.jsonl")
    corpus.save_raw(emos, paths["emoji"])

    paths["comments"] = str(root / "comments.jsonl")
    save_comments(comment_records(30, seed=4), paths["comments"])
    return paths


class TestPrepare:
    def test_splits_and_reports(self, ws, tmp_path):
        out = tmp_path / "split"
        code, stdout, _ = _run([
            "prepare", "--labeled", ws["labeled"], "--out", str(out),
            "--config", ws["cfg"],
        ])
        assert code == 0
        assert stdout.strip() == "train 32 validation 8"
        train = corpus.load_labeled(str(out / "train.tsv"))
        valid = corpus.load_labeled(str(out / "valid.tsv"))
        assert len(train) == 32 and len(valid) == 8
        full = corpus.load_labeled(ws["labeled"])
        assert [t.text for t in train + valid] == [t.text for t in full]

    def test_rerun_is_byte_identical(self, ws, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            code, _, _ = _run([
                "prepare", "--labeled", ws["labeled"], "--out", str(out),
                "--tail", "8",
            ])
            assert code == 0
        assert (a / "train.tsv").read_bytes() == (b / "train.tsv").read_bytes()
        assert (a / "valid.tsv").read_bytes() == (b / "valid.tsv").read_bytes()

    def test_tokenized_corpus_written(self, ws, tmp_path):
        out = tmp_path / "split"
        tok = tmp_path / "tokens.txt"
        code, _, _ = _run([
            "prepare", "--labeled", ws["labeled"], "--out", str(out),
            "--tail", "8", "--tokenized", str(tok),
        ])
        assert code == 0
        lines = corpus.load_token_lines(str(tok))
        assert len(lines) == 40

    def test_oversized_tail_is_a_data_error(self, ws, tmp_path):
        code, _, err = _run([
            "prepare", "--labeled", ws["labeled"], "--out", str(tmp_path / "x"),
            "--tail", "1000",
        ])
        assert code == 2
        assert "data error" in err


class TestLdaTrainCli:
    def test_trains_and_saves(self, ws, tmp_path):
        out = tmp_path / "model.json"
        code, stdout, _ = _run([
            "lda-train", "--corpus", ws["topic_corpus"], "--k", "2",
            "--iters", "30", "--out", str(out),
        ])
        assert code == 0
        assert "trained 2 topics on 60 documents" in stdout
        model = lda.load_model(str(out))
        assert model.k == 2

    def test_rerun_is_byte_identical(self, ws, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            code, _, _ = _run([
                "lda-train", "--corpus", ws["topic_corpus"], "--k", "2",
                "--iters", "20", "--out", str(out), "--seed", "3",
            ])
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_empty_corpus_rejected(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("", encoding="utf-8")
        code, _, err = _run([
            "lda-train", "--corpus", str(empty), "--k", "2", "--out",
            str(tmp_path / "m.json"),
        ])
        assert code == 2


class TestClusterUsersCli:
    def test_from_mention_lists(self, ws, tmp_path):
        out = tmp_path / "clusters.tsv"
        code, stdout, _ = _run([
            "cluster-users", "--mentions", ws["mentions"], "--k", "2",
            "--iters", "30", "--out", str(out),
        ])
        assert code == 0
        clusters = lda.load_clusters(str(out))
        assert clusters.k == 2
        assert "clustered" in stdout

    def test_from_raw_tweets(self, ws, tmp_path):
        out = tmp_path / "clusters.tsv"
        code, _, _ = _run([
            "cluster-users", "--raw", ws["mention_tweets"], "--k", "2",
            "--iters", "30", "--min-user-freq", "1", "--out", str(out),
        ])
        assert code == 0
        assert lda.load_clusters(str(out)).k == 2

    def test_rerun_is_byte_identical(self, ws, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        for out in (a, b):
            code, _, _ = _run([
                "cluster-users", "--mentions", ws["mentions"], "--k", "2",
                "--iters", "20", "--out", str(out),
            ])
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sources_are_mutually_exclusive(self, ws, tmp_path):
        code, _, _ = _run([
            "cluster-users", "--mentions", ws["mentions"], "--raw",
            ws["mention_tweets"], "--out", str(tmp_path / "c.tsv"),
        ])
        assert code == 1


@pytest.fixture(scope="module")
def trained(ws, tmp_path_factory):
    """Checkpoints and clusters produced once through the CLI."""
    root = tmp_path_factory.mktemp("trained")
    arts = {"root": root}

    arts["clusters"] = str(root / "clusters.tsv")
    code, _, _ = _run([
        "cluster-users", "--mentions", ws["mentions"], "--k", "2",
        "--iters", "30", "--out", arts["clusters"], "--config", ws["cfg"],
    ])
    assert code == 0

    arts["lda"] = str(root / "model.json")
    code, _, _ = _run([
        "lda-train", "--corpus", ws["topic_corpus"], "--out", arts["lda"],
        "--config", ws["cfg"],
    ])
    assert code == 0

    arts["pre_emoji"] = str(root / "pre_emoji.ckpt")
    code, _, _ = _run([
        "pretrain", "--task", "emoji", "--corpus", ws["emoji"],
        "--config", ws["cfg"], "--out", arts["pre_emoji"],
    ])
    assert code == 0

    split = root / "split"
    code, _, _ = _run([
        "prepare", "--labeled", ws["labeled"], "--out", str(split),
        "--config", ws["cfg"],
    ])
    assert code == 0
    arts["train"] = str(split / "train.tsv")
    arts["valid"] = str(split / "valid.tsv")

    arts["ft"] = str(root / "ft.ckpt")
    code, stdout, _ = _run([
        "finetune", "--ckpt", arts["pre_emoji"], "--strategy", "none",
        "--task", "coarse", "--train", arts["train"], "--valid", arts["valid"],
        "--config", ws["cfg"], "--out", arts["ft"],
    ])
    assert code == 0
    arts["ft_stdout"] = stdout
    return arts


class TestPretrainCli:
    def test_emoji_checkpoint_shape(self, ws, trained):
        params, state = net.load_checkpoint(trained["pre_emoji"])
        assert state is None
        assert params.cluster_width == 3  # k_users + 1
        assert params.embed_dim == 12

    def test_category_task(self, ws, tmp_path):
        out = tmp_path / "pre.ckpt"
        code, stdout, _ = _run([
            "pretrain", "--task", "category", "--corpus", ws["comments"],
            "--config", ws["cfg"], "--epochs", "1", "--out", str(out),
        ])
        assert code == 0
        assert "pretrained category" in stdout
        params, _ = net.load_checkpoint(str(out))
        assert params.n_classes == 2

    def test_topic_task_requires_lda(self, ws, trained, tmp_path):
        code, _, err = _run([
            "pretrain", "--task", "topic", "--corpus", ws["topic_tweets"],
            "--config", ws["cfg"], "--epochs", "1",
            "--out", str(tmp_path / "x.ckpt"),
        ])
        assert code == 1
        assert "--lda" in err

    def test_topic_task_with_model(self, ws, trained, tmp_path):
        out = tmp_path / "pre.ckpt"
        code, _, _ = _run([
            "pretrain", "--task", "topic", "--corpus", ws["topic_tweets"],
            "--lda", trained["lda"], "--config", ws["cfg"], "--epochs", "1",
            "--out", str(out),
        ])
        assert code == 0
        params, _ = net.load_checkpoint(str(out))
        assert params.n_classes == 2

    def test_rerun_is_byte_identical(self, ws, tmp_path):
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        for out in (a, b):
            code, _, _ = _run([
                "pretrain", "--task", "category", "--corpus", ws["comments"],
                "--config", ws["cfg"], "--epochs", "1", "--out", str(out),
            ])
            assert code == 0
        assert a.read_bytes() == b.read_bytes()


class TestFinetuneCli:
    def test_reports_metric(self, trained):
        assert trained["ft_stdout"].startswith("binary_f1 ")
        value = float(trained["ft_stdout"].split()[1])
        assert 0.0 <= value <= 1.0

    def test_checkpoint_head_replaced(self, trained):
        params, _ = net.load_checkpoint(trained["ft"])
        assert params.n_classes == 2

    def test_cold_start_with_clusters(self, ws, trained, tmp_path):
        out = tmp_path / "cold.ckpt"
        code, stdout, _ = _run([
            "finetune", "--ckpt", "none", "--strategy", "none", "--task", "fine",
            "--train", trained["train"], "--valid", trained["valid"],
            "--clusters", trained["clusters"], "--config", ws["cfg"],
            "--epochs", "1", "--out", str(out),
        ])
        assert code == 0
        assert stdout.startswith("macro_f1 ")
        params, _ = net.load_checkpoint(str(out))
        assert params.n_classes == 4
        assert params.cluster_width == 3  # clusters.k + 1

    def test_incompatible_checkpoint_rejected(self, ws, trained, tmp_path):
        """A checkpoint whose cluster width cannot fit the cluster file."""
        wrong = tmp_path / "wrong.cfg"
        wrong.write_text(_CFG.replace("k_users = 2", "k_users = 5"), encoding="utf-8")
        code, _, err = _run([
            "finetune", "--ckpt", trained["pre_emoji"], "--strategy", "none",
            "--task", "coarse", "--train", trained["train"],
            "--valid", trained["valid"], "--config", str(wrong),
            "--out", str(tmp_path / "x.ckpt"),
        ])
        assert code == 2
        assert "cluster width" in err

    def test_unknown_strategy_is_usage_error(self, ws, trained, tmp_path):
        code, _, _ = _run([
            "finetune", "--ckpt", "none", "--strategy", "slowly",
            "--task", "coarse", "--train", trained["train"],
            "--valid", trained["valid"], "--out", str(tmp_path / "x.ckpt"),
        ])
        assert code == 1


class TestEvaluateCli:
    def test_report_written_and_deterministic(self, ws, trained, tmp_path):
        rep_a, rep_b = tmp_path / "a.txt", tmp_path / "b.txt"
        for rep in (rep_a, rep_b):
            code, stdout, _ = _run([
                "evaluate", "--ckpt", trained["ft"], "--data", trained["valid"],
                "--task", "coarse", "--config", ws["cfg"], "--report", str(rep),
            ])
            assert code == 0
            assert "accuracy" in stdout and "runs 1" in stdout
            assert rep.read_text(encoding="utf-8") == stdout
        assert rep_a.read_bytes() == rep_b.read_bytes()

    def test_multiple_checkpoints_aggregate(self, ws, trained, tmp_path):
        code, stdout, _ = _run([
            "evaluate", "--ckpt", trained["ft"], trained["ft"],
            "--data", trained["valid"], "--task", "coarse",
            "--config", ws["cfg"], "--runs", "2",
        ])
        assert code == 0
        assert "runs 2" in stdout

    def test_runs_mismatch_is_usage_error(self, ws, trained):
        code, _, err = _run([
            "evaluate", "--ckpt", trained["ft"], "--data", trained["valid"],
            "--task", "coarse", "--config", ws["cfg"], "--runs", "3",
        ])
        assert code == 1
        assert "disagrees" in err

    def test_errors_file(self, ws, trained, tmp_path):
        errs = tmp_path / "errors.tsv"
        code, stdout, _ = _run([
            "evaluate", "--ckpt", trained["ft"], "--data", trained["valid"],
            "--task", "coarse", "--config", ws["cfg"], "--errors", str(errs),
        ])
        assert code == 0
        lines = errs.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "type\tgold\tpred\ttext"
        for line in lines[1:]:
            kind, gold, pred, _ = line.split("\t")
            assert kind in ("fp", "fn")
            assert gold != pred

    def test_task_head_mismatch(self, ws, trained, tmp_path):
        code, _, err = _run([
            "evaluate", "--ckpt", trained["ft"], "--data", trained["valid"],
            "--task", "fine", "--config", ws["cfg"],
        ])
        assert code == 2
        assert "classes" in err


class TestBaselineCli:
    def test_reports_table_and_terms(self, ws, trained):
        code, stdout, _ = _run([
            "baseline", "--train", trained["train"], "--valid", trained["valid"],
            "--task", "coarse", "--config", ws["cfg"], "--top-terms", "3",
        ])
        assert code == 0
        assert "accuracy" in stdout
        assert "top[offense]" in stdout and "top[other]" in stdout

    def test_fine_task(self, ws, trained):
        code, stdout, _ = _run([
            "baseline", "--train", trained["train"], "--valid", trained["valid"],
            "--task", "fine", "--config", ws["cfg"],
        ])
        assert code == 0
        assert "average" in stdout


class TestGradcheckCli:
    def test_passes_at_default_tolerance(self, ws):
        code, stdout, _ = _run([
            "gradcheck", "--config", ws["cfg"], "--samples", "3", "--seed", "1",
        ])
        assert code == 0
        assert stdout.startswith("max relative error ")

    def test_impossible_tolerance_fails(self, ws):
        code, _, err = _run([
            "gradcheck", "--config", ws["cfg"], "--samples", "2",
            "--tolerance", "1e-18",
        ])
        assert code == 2
        assert "exceeds tolerance" in err


class TestMakeFixturesCli:
    def test_writes_corpora(self, tmp_path):
        out = tmp_path / "fx"
        code, stdout, _ = _run(["make-fixtures", "--out", str(out)])
        assert code == 0
        assert "wrote" in stdout
        names = sorted(os.listdir(out))
        assert "labeled.tsv" in names
        assert "vectors.txt" in names
        assert len(names) >= 10


class TestExitCodes:
    def test_no_command_is_usage_error(self):
        code, _, _ = _run([])
        assert code == 1

    def test_unknown_flag_is_usage_error(self):
        code, _, _ = _run(["prepare", "--nope"])
        assert code == 1

    def test_help_exits_zero(self):
        code, stdout, _ = _run(["--help"])
        assert code == 0

    def test_missing_file_is_data_error(self, tmp_path):
        code, _, err = _run([
            "prepare", "--labeled", str(tmp_path / "absent.tsv"),
            "--out", str(tmp_path / "o"),
        ])
        assert code == 2

    def test_malformed_labels_are_data_error(self, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("nur ein feld\n", encoding="utf-8")
        code, _, err = _run([
            "prepare", "--labeled", str(bad), "--out", str(tmp_path / "o"),
            "--tail", "1",
        ])
        assert code == 2
        assert "data error" in err

    def test_bad_config_value_is_data_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dropout = 2.0\n", encoding="utf-8")
        code, _, _ = _run(["gradcheck", "--config", str(cfg)])
        assert code == 2
