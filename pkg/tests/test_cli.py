import pytest

from genret.cli import BEAM_SWEEP_WIDTHS, IDLEN_SWEEP_KS, main

from _synth import synth_corpus, write_corpus


@pytest.fixture
def corpus_files(tmp_path):
    docs, pairs = synth_corpus(16, seed=5, dev_docs=6)
    return write_corpus(tmp_path, docs, pairs)


def run_cli(*args):
    return main([str(a) for a in args])


def base_flags(corpus_files, out):
    d, p = corpus_files
    return ["--documents", d, "--pairs", p, "--out", out]


class TestCommands:
    def test_stats(self, corpus_files, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli("stats", *base_flags(corpus_files, out)) == 0
        lines = (out / "stats.tsv").read_text().splitlines()
        assert lines[0].startswith("corpus\t")
        assert any(row.startswith("train\t") for row in lines)
        assert "stats:" in capsys.readouterr().out

    def test_dedup(self, corpus_files, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli("dedup", *base_flags(corpus_files, out)) == 0
        assert (out / "documents.dedup.jsonl").exists()
        assert "kept" in capsys.readouterr().out

    def test_build_ids_then_trie_then_train_then_retrieve(self, corpus_files, tmp_path, capsys):
        out = tmp_path / "out"
        flags = base_flags(corpus_files, out)
        assert run_cli("build-ids", *flags, "--id-scheme", "first_k") == 0
        assert run_cli("build-trie", *flags) == 0
        assert run_cli("augment", *flags) == 0
        assert run_cli("train", *flags, "--scorer", "overlap") == 0
        capsys.readouterr()

        docs, pairs = synth_corpus(16, seed=5, dev_docs=6)
        query = pairs[0].query_text
        gold = pairs[0].doc_key
        assert run_cli("retrieve", *flags, "--scorer", "overlap", "--query", query) == 0
        printed = capsys.readouterr().out
        ranked_lines = [l for l in printed.splitlines() if "\t" in l]
        assert ranked_lines
        top_key, top_id_text, top_score = ranked_lines[0].split("\t")
        assert top_key == gold
        float(top_score)
        assert (out / "retrieval.tsv").exists()

    def test_evaluate_memorization_fixture(self, corpus_files, tmp_path, capsys):
        out = tmp_path / "out"
        code = run_cli(
            "evaluate", *base_flags(corpus_files, out),
            "--scorer", "memorizing", "--eval-split", "train", "--no-figures",
        )
        assert code == 0
        assert "r@1=100.0" in capsys.readouterr().out
        report = (out / "report.tsv").read_text().splitlines()
        assert report[1].split("\t")[-3:] == ["100.0", "100.0", "100.0"]

    def test_rerun_reproduces_identical_outputs(self, corpus_files, tmp_path):
        out = tmp_path / "out"
        flags = base_flags(corpus_files, out) + ["--scorer", "overlap", "--seed", "7", "--no-figures"]
        assert run_cli("evaluate", *flags) == 0
        first = (out / "report.tsv").read_bytes(), (out / "rankings.ndjson").read_bytes()
        assert run_cli("evaluate", *flags) == 0
        second = (out / "report.tsv").read_bytes(), (out / "rankings.ndjson").read_bytes()
        assert first == second

    def test_failure_exits_nonzero_with_stage(self, tmp_path, capsys):
        code = run_cli(
            "evaluate", "--documents", tmp_path / "nope.jsonl",
            "--pairs", tmp_path / "nope.tsv", "--out", tmp_path / "out",
        )
        assert code == 1
        assert "load" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, corpus_files, tmp_path, capsys):
        d, p = corpus_files
        out = tmp_path / "out"
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            f"documents_path={d}\npairs_path={p}\noutput_dir={out}\n"
            "scorer=overlap\nbeam_width=5\nfigures=false\n# comment line\n",
            encoding="utf-8",
        )
        assert run_cli("evaluate", "--config", cfg_file, "--beam-width", "10") == 0
        report = (out / "report.tsv").read_text().splitlines()[1]
        assert report.split("\t")[3] == "10"

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("nonsense=1\n", encoding="utf-8")
        assert run_cli("evaluate", "--config", cfg_file) == 1
        assert "nonsense" in capsys.readouterr().err


class TestRemoteScorerPath:
    def test_train_and_retrieve_through_a_remote_server(self, corpus_files, tmp_path, capsys):
        from genret.scorer import UniformScorer

        from _wire_server import FakeScorerServer

        out = tmp_path / "out"
        flags = base_flags(corpus_files, out)
        assert run_cli("build-ids", *flags) == 0
        assert run_cli("build-trie", *flags) == 0
        with FakeScorerServer(UniformScorer()) as server:
            remote_flags = flags + ["--scorer", "remote", "--remote-addr", server.address]
            assert run_cli("train", *remote_flags) == 0
            assert run_cli("retrieve", *remote_flags, "--query", "anything", "--top", "2") == 0
            logprob_requests = [r for r in server.requests_seen if r.get("type") == "logprobs"]
            assert logprob_requests
            assert all("exemplars" in r for r in logprob_requests)
        printed = capsys.readouterr().out
        assert len([l for l in printed.splitlines() if "\t" in l]) == 2

    def test_retrieve_fails_cleanly_when_server_is_down(self, corpus_files, tmp_path, capsys):
        out = tmp_path / "out"
        flags = base_flags(corpus_files, out)
        assert run_cli("build-ids", *flags) == 0
        assert run_cli("build-trie", *flags) == 0
        assert run_cli("train", *flags, "--scorer", "remote", "--remote-addr", "127.0.0.1:1") == 0
        code = run_cli("retrieve", *flags, "--scorer", "remote", "--remote-addr", "127.0.0.1:1",
                       "--query", "anything")
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestSweeps:
    def test_sweep_beam_grid(self, corpus_files, tmp_path, capsys):
        out = tmp_path / "out"
        flags = base_flags(corpus_files, out) + ["--scorer", "overlap", "--queries-per-doc", "1"]
        assert run_cli("sweep-beam", *flags) == 0
        rows = (out / "beam_width.tsv").read_text().splitlines()
        assert rows[0] == "beam_width\tr@1\tr@10\tr@20"
        widths = [int(r.split("\t")[0]) for r in rows[1:]]
        assert widths == list(BEAM_SWEEP_WIDTHS)
        assert len(widths) == 9
        for row in rows[1:]:
            r1, r10, r20 = map(float, row.split("\t")[1:])
            assert r1 <= r10 <= r20
        assert (out / "beam_width.png").exists()

    def test_sweep_idlen_grid(self, corpus_files, tmp_path):
        out = tmp_path / "out"
        flags = base_flags(corpus_files, out) + ["--scorer", "overlap", "--queries-per-doc", "1", "--no-figures"]
        assert run_cli("sweep-idlen", *flags) == 0
        rows = (out / "id_length.tsv").read_text().splitlines()
        ks = [int(r.split("\t")[0]) for r in rows[1:]]
        assert ks == list(IDLEN_SWEEP_KS)
        for row in rows[1:]:
            r1, r10, r20 = map(float, row.split("\t")[1:])
            assert r1 <= r10 <= r20
