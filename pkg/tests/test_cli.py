import json

import numpy as np
import pytest

from foilgen import cli, dataset as ds, vae


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def small_data_file(workdir):
    path = workdir / "jouk.txt"
    rc = cli.main(["gen-data", "--family", "joukowski", "--out", str(path),
                   "--stride-a", "25", "--stride-b", "30"])
    assert rc == 0
    return path


@pytest.fixture(scope="module")
def trained_ckpt(workdir, small_data_file):
    path = workdir / "model.ckpt.json"
    rc = cli.main(["train", "--model", "s-cvae", "--latent-dim", "2",
                   "--data", str(small_data_file), "--out", str(path),
                   "--epochs", "2", "--batch-size", "16", "--seed", "3"])
    assert rc == 0
    return path


class TestGenData:
    def test_header_count_matches(self, small_data_file):
        data = ds.load(small_data_file)
        header = json.loads(small_data_file.read_text().splitlines()[0])
        assert header["count"] == len(data)
        assert all(it.family == ds.FAMILY_JOUKOWSKI for it in data.items)

    def test_manifest_written(self, small_data_file):
        with open(str(small_data_file) + ".manifest.json") as fh:
            manifest = json.load(fh)
        assert manifest["command"] == "gen-data"
        assert str(small_data_file) in manifest["outputs"]

    def test_missing_out_is_usage_error(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["gen-data", "--family", "naca"])

    def test_mixed_duplication(self, workdir):
        # tiny strides keep this quick; duplication triples one family
        out = workdir / "mixed_dup.txt"
        rc = cli.main(["gen-data", "--family", "joukowski", "--out", str(out),
                       "--stride-a", "50", "--stride-b", "100"])
        assert rc == 0
        base = ds.load(out)
        dup = ds.duplicate_family(base, ds.FAMILY_JOUKOWSKI, 3)
        assert len(dup) == 3 * len(base)


class TestTrain:
    def test_checkpoint_kind(self, trained_ckpt):
        model, extra = vae.load_checkpoint(trained_ckpt)
        assert model.kind == "sphere" and model.d == 2
        assert extra["model_tag"] == "s-cvae"

    def test_unconditional_variant(self, workdir, small_data_file):
        path = workdir / "nvae.ckpt.json"
        rc = cli.main(["train", "--model", "n-vae", "--latent-dim", "2",
                       "--data", str(small_data_file), "--out", str(path),
                       "--epochs", "1", "--batch-size", "16", "--seed", "1"])
        assert rc == 0
        model, _ = vae.load_checkpoint(path)
        assert model.kind == "gauss" and not model.conditional

    def test_unknown_model_tag(self):
        with pytest.raises(SystemExit):
            cli.main(["train", "--model", "gan", "--data", "x", "--out", "y"])

    def test_trace_written(self, trained_ckpt):
        trace = open(str(trained_ckpt) + ".trace.tsv").read().splitlines()
        assert trace[0].startswith("epoch")
        assert len(trace) == 3   # header + 2 epochs


class TestGenerate:
    def test_sphere_random(self, workdir, trained_ckpt):
        out = workdir / "gen.txt"
        rc = cli.main(["generate", "--checkpoint", str(trained_ckpt),
                       "--count", "3", "--labels-sweep", "4",
                       "--out", str(out), "--seed", "5"])
        assert rc == 0
        gen = ds.load(out)
        assert len(gen) == 12
        for it in gen.items:
            z = np.array(it.params["z"])
            assert abs(np.linalg.norm(z) - 1.0) < 1e-9

    def test_label_sweep_default(self):
        from foilgen.pipeline import label_sweep
        sweep = label_sweep()
        assert len(sweep) == 100
        assert sweep[0] == 0.0
        assert sweep[1] == pytest.approx(0.016)
        assert sweep[-1] == pytest.approx(1.584)

    def test_envelope_needs_data(self, workdir, trained_ckpt):
        rc = cli.main(["generate", "--checkpoint", str(trained_ckpt),
                       "--sampling", "envelope", "--out", str(workdir / "x.txt")])
        assert rc == 2


class TestEvaluate:
    def test_report_columns(self, workdir, trained_ckpt, small_data_file):
        gen = workdir / "gen_eval.txt"
        cli.main(["generate", "--checkpoint", str(trained_ckpt), "--count", "2",
                  "--labels-sweep", "3", "--out", str(gen), "--seed", "6"])
        out = workdir / "eval"
        rc = cli.main(["evaluate", "--shapes", str(gen),
                       "--dataset", str(small_data_file), "--out", str(out)])
        assert rc == 0
        rows = (str(out) + ".rows.tsv")
        header = open(rows).read().splitlines()[0].split("\t")
        from foilgen.metrics import REPORT_COLUMNS
        assert header == REPORT_COLUMNS
        summary = open(str(out) + ".summary.tsv").read()
        assert "L_CL" in summary and "epsilon" in summary

    def test_epsilon_flag(self, workdir, trained_ckpt, small_data_file):
        gen = workdir / "gen_eval2.txt"
        cli.main(["generate", "--checkpoint", str(trained_ckpt), "--count", "1",
                  "--labels-sweep", "2", "--out", str(gen), "--seed", "7"])
        out = workdir / "eval2"
        rc = cli.main(["evaluate", "--shapes", str(gen), "--epsilon", "0.5",
                       "--out", str(out)])
        assert rc == 0
        assert "0.5" in open(str(out) + ".summary.tsv").read()


class TestLatentMap:
    def test_rows_and_norms(self, workdir, trained_ckpt, small_data_file):
        out = workdir / "lmap.tsv"
        rc = cli.main(["latent-map", "--checkpoint", str(trained_ckpt),
                       "--data", str(small_data_file), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        data = ds.load(small_data_file)
        assert len(lines) == len(data) + 1
        for line in lines[1:]:
            parts = line.split("\t")
            z = np.array(parts[1:4], dtype=float)
            assert abs(np.linalg.norm(z) - 1.0) < 1e-9


class TestRerun:
    def test_gen_data_bit_identical(self, workdir, small_data_file):
        manifest = str(small_data_file) + ".manifest.json"
        rc = cli.main(["rerun", "--manifest", manifest,
                       "--workdir", str(workdir / "replay")])
        assert rc == 0

    def test_generate_bit_identical(self, workdir, trained_ckpt):
        out = workdir / "gen_rerun.txt"
        cli.main(["generate", "--checkpoint", str(trained_ckpt), "--count", "2",
                  "--labels-sweep", "2", "--out", str(out), "--seed", "9"])
        rc = cli.main(["rerun", "--manifest", str(out) + ".manifest.json",
                       "--workdir", str(workdir / "replay2")])
        assert rc == 0
