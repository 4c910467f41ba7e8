import json

import pytest

from cantolex.cli import main


def run_cli(*argv):
    return main(["--quiet", *argv])


class TestMineTerms:
    def test_writes_ranked_tsv(self, tmp_path, fixtures_dir):
        out = tmp_path / "terms.tsv"
        code = run_cli(
            "mine-terms",
            "--corpus", str(fixtures_dir / "threads.jsonl"),
            "--dict", str(fixtures_dir / "dict.tsv"),
            "--top-k", "5",
            "--out", str(out),
        )
        assert code == 0
        lines = out.read_text("utf-8").splitlines()
        assert len(lines) == 5
        assert all(len(line.split("\t")) == 3 for line in lines)

    def test_idempotent_rerun(self, tmp_path, fixtures_dir):
        out1, out2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
        for out in (out1, out2):
            assert run_cli(
                "mine-terms",
                "--corpus", str(fixtures_dir / "threads.jsonl"),
                "--dict", str(fixtures_dir / "dict.tsv"),
                "--out", str(out),
            ) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_corpus_is_stage_error(self, tmp_path, capsys):
        code = run_cli(
            "mine-terms",
            "--corpus", str(tmp_path / "nope.jsonl"),
            "--dict", str(tmp_path / "nope.tsv"),
            "--out", str(tmp_path / "out.tsv"),
        )
        assert code == 1
        assert "mine-terms" in capsys.readouterr().err


class TestUsage:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_no_subcommand_exits_2(self):
        assert main([]) == 2

    @pytest.mark.parametrize(
        "subcommand",
        [
            "mine-terms", "lexicon-stats", "make-tasks", "serve", "llm-annotate",
            "aggregate", "alpha", "kappa", "build-lexicon", "extract", "evaluate",
        ],
    )
    def test_every_subcommand_has_help(self, subcommand, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main([subcommand, "--help"])
        assert excinfo.value.code == 0
        out = capsys.readouterr().out
        assert "--" in out

    def test_mine_terms_help_documents_defaults(self, capsys):
        with pytest.raises(SystemExit):
            main(["mine-terms", "--help"])
        out = capsys.readouterr().out
        assert "20000" in out
        assert "vn" in out  # default POS set spelled out


class TestMakeTasks:
    def test_portion_size_rule(self, tmp_path):
        words = tmp_path / "words.txt"
        words.write_text("".join(f"w{i}\n" for i in range(10)), "utf-8")
        code = run_cli(
            "make-tasks",
            "--words", str(words),
            "--portions", "3",
            "--groups", "A,B",
            "--seed", "7",
            "--out-tasks", str(tmp_path / "tasks.jsonl"),
            "--out-assignments", str(tmp_path / "assign.json"),
        )
        assert code == 0
        manifest = json.loads((tmp_path / "assign.json").read_text("utf-8"))
        sizes = {
            row["portion_index"]: len(row["task_ids"])
            for row in manifest
            if row["group"] == "A"
        }
        assert sorted(sizes.values(), reverse=True) == [4, 3, 3]
        assert len(manifest) == 6  # 3 portions x 2 groups

    def test_translation_tasks(self, tmp_path):
        translations = tmp_path / "trans.tsv"
        translations.write_text("pretty\t漂亮\nhappy\t開心\n", "utf-8")
        code = run_cli(
            "make-tasks",
            "--kind", "translation-validation",
            "--translations", str(translations),
            "--portions", "2",
            "--groups", "A",
            "--seed", "3",
            "--out-tasks", str(tmp_path / "tasks.jsonl"),
            "--out-assignments", str(tmp_path / "assign.json"),
        )
        assert code == 0
        tasks = [json.loads(l) for l in (tmp_path / "tasks.jsonl").read_text().splitlines()]
        assert tasks[0]["payload"] == {"source_word": "pretty", "given_translation": "漂亮"}


class TestKappaAlpha:
    def test_kappa_subcommand(self, tmp_path, capsys):
        (tmp_path / "a.txt").write_text("y\n" * 60 + "n\n" * 40, "utf-8")
        (tmp_path / "b.txt").write_text("y\n" * 40 + "n\n" * 20 + "y\n" * 10 + "n\n" * 30, "utf-8")
        code = run_cli("kappa", "--a", str(tmp_path / "a.txt"), "--b", str(tmp_path / "b.txt"))
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["kappa"] == pytest.approx(0.4)

    def test_alpha_subcommand_on_matrix(self, fixtures_dir, capsys):
        code = run_cli("alpha", "--matrix", str(fixtures_dir / "matrix_12x3.tsv"))
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert -1.0 <= report["alpha"] <= 1.0
        assert report["n_units"] == 12

    def test_alpha_from_records(self, tmp_path, capsys):
        records = [
            {"annotator_id": a, "task_id": w, "kind": "emotion-annotation",
             "response": {"labels": ["joy"] if a != "c" or w != "w2" else ["fear"],
                          "wrong_word": False, "better_expression": None}}
            for a in ("a", "b", "c") for w in ("w1", "w2")
        ]
        path = tmp_path / "r.jsonl"
        path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), "utf-8")
        code = run_cli(
            "alpha", "--records", str(path), "--raters", "a,b,c",
            "--write-matrix", str(tmp_path / "m.tsv"),
        )
        assert code == 0
        assert (tmp_path / "m.tsv").exists()
        report = json.loads(capsys.readouterr().out)
        assert report["method"] == "krippendorff_alpha"


class TestExtract:
    def test_single_text(self, fixtures_dir, capsys):
        code = run_cli(
            "extract",
            "--lexicon", str(fixtures_dir / "toy-en.tsv"),
            "--mode", "token",
            "--text", "What a happy, happy day",
        )
        assert code == 0
        profile = json.loads(capsys.readouterr().out)
        assert profile["counts"]["joy"] == 2

    def test_batch_mode(self, fixtures_dir, tmp_path):
        docs = tmp_path / "docs.jsonl"
        docs.write_text(
            json.dumps({"id": "d1", "text": "awful gross"}) + "\n"
            + json.dumps({"id": "d2", "text": "nothing here"}) + "\n",
            "utf-8",
        )
        out = tmp_path / "profiles.jsonl"
        code = run_cli(
            "extract",
            "--lexicon", str(fixtures_dir / "toy-en.tsv"),
            "--mode", "token",
            "--in", str(docs),
            "--out", str(out),
        )
        assert code == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert rows[0]["presence"]["disgust"] is True
        assert rows[1]["counts"] == {d: 0 for d in rows[1]["counts"]}


class TestBuildAndStats:
    def test_build_then_stats(self, fixtures_dir, tmp_path, capsys):
        aggregated = tmp_path / "agg.jsonl"
        aggregated.write_text(
            json.dumps({"word": "好正", "labels": ["joy", "positive"], "dropped": False}) + "\n"
            + json.dumps({"word": "廢", "labels": ["negative"], "dropped": False}) + "\n"
            + json.dumps({"word": "錯字", "labels": ["joy"], "dropped": True}) + "\n",
            "utf-8",
        )
        out = tmp_path / "lex.tsv"
        code = run_cli(
            "build-lexicon",
            "--name", "combined",
            "--base", str(fixtures_dir / "base-yue.tsv"),
            "--tmap", str(fixtures_dir / "tmap.json"),
            "--aggregated", str(aggregated),
            "--out", str(out),
        )
        assert code == 0
        content = out.read_text("utf-8")
        assert "好正\tjoy\t1" in content
        assert "錯字" not in content  # dropped by wrong-word majority
        assert "餐廳" not in content  # neutral filtered

        code = run_cli(
            "lexicon-stats",
            "--lexicon", str(out),
            "--base", str(fixtures_dir / "base-yue.tsv"),
            "--tmap", str(fixtures_dir / "tmap.json"),
            "--json", str(tmp_path / "stats.json"),
        )
        assert code == 0
        stats = json.loads((tmp_path / "stats.json").read_text("utf-8"))
        assert stats["expansion"]["base_words"] == 10  # two base entries are neutral
        table = capsys.readouterr().out
        assert "Emotion label" in table

    def test_keep_neutral_round_trips_base(self, fixtures_dir, tmp_path):
        out = tmp_path / "lex.tsv"
        code = run_cli(
            "build-lexicon",
            "--name", "base-copy",
            "--base", str(fixtures_dir / "base-yue.tsv"),
            "--keep-neutral",
            "--out", str(out),
        )
        assert code == 0
        assert out.read_bytes() == (fixtures_dir / "base-yue.tsv").read_bytes()


class TestEvaluate:
    def test_grid_and_reference(self, fixtures_dir, tmp_path):
        code = run_cli(
            "evaluate",
            "--datasets", str(fixtures_dir / "trilingual.jsonl"),
            "--lexicon", f"toy-zh={fixtures_dir / 'toy-zh.tsv'}:zh:substring",
            "--baseline", f"toy-en={fixtures_dir / 'toy-en.tsv'}:en:token",
            "--reference", "toy-zh",
            "--out-json", str(tmp_path / "report.json"),
            "--out-table", str(tmp_path / "report.txt"),
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text("utf-8"))
        assert "toy-zh" in report["kappa"]
        assert report["relative_change_pct"]["toy-zh"]["trilingual"] == 0.0

    def test_bad_lexicon_spec(self, fixtures_dir, tmp_path, capsys):
        code = run_cli(
            "evaluate",
            "--datasets", str(fixtures_dir / "trilingual.jsonl"),
            "--lexicon", "whoops",
            "--baseline", f"toy-en={fixtures_dir / 'toy-en.tsv'}:en:token",
        )
        assert code == 1
        assert "NAME=PATH:LANG:MODE" in capsys.readouterr().err


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(self, tmp_path, fixtures_dir):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "corpus": str(fixtures_dir / "threads.jsonl"),
            "dict": str(fixtures_dir / "dict.tsv"),
            "top_k": 3,
        }), "utf-8")
        out = tmp_path / "terms.tsv"
        code = main([
            "--quiet", "--config", str(config),
            "mine-terms", "--top-k", "2", "--out", str(out),
        ])
        assert code == 0
        assert len(out.read_text("utf-8").splitlines()) == 2  # flag beat config
