import csv
import json

import numpy as np
import pytest

from blindmask import read_wav
from blindmask.cli import cli_dispatch
from blindmask.experiment import write_desk_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    write_desk_corpus(root, n_utterances=2, seed=2, duration=2.0, noise_duration=4.0)
    return root


def run(*argv):
    return cli_dispatch([str(a) for a in argv])


def test_usage_errors(capsys):
    assert run("nope") == 2
    assert run("bam", "--bogus", "1") == 2
    assert run() == 2
    assert run("--version") == 0


def test_runtime_error_is_reported(tmp_path, capsys):
    assert run("bam", "--in", tmp_path / "missing.wav", "--out", tmp_path / "o.wav") == 1
    assert "error" in capsys.readouterr().err


def test_file_pipeline(corpus, tmp_path, capsys):
    clean = corpus / "clean" / "utt000.wav"
    mix, noise = tmp_path / "x.wav", tmp_path / "n.wav"
    assert run("mix", "--clean", clean, "--noise", corpus / "noise" / "babble.wav", "--snr", -6,
               "--out", mix, "--noise-out", noise) == 0
    c, n = read_wav(clean).samples, read_wav(noise).samples
    assert 10 * np.log10(np.sum(c ** 2) / np.sum(n ** 2)) == pytest.approx(-6, abs=0.01)

    assert run("bam", "--in", mix, "--out", tmp_path / "e.wav", "--alpha", 0.35, "--beta", 0.65) == 0
    with open(tmp_path / "e.csv") as fh:
        assert next(csv.reader(fh))[:3] == ["frame_index", "sigma_ny", "sigma_hat"]

    assert run("ibm", "--in", mix, "--clean", clean, "--noise", noise, "--snr", -6,
               "--out", tmp_path / "i.wav", "--mask-out", tmp_path / "m.txt") == 0
    assert (tmp_path / "m.txt").read_text().startswith("# n_channels=64")
    assert run("tbm", "--in", mix, "--clean", clean, "--out", tmp_path / "t.wav", "--seed", 3) == 0

    capsys.readouterr()
    assert run("stoi", "--clean", clean, "--in", tmp_path / "i.wav") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metric"] == "stoi" and set(doc) == {"metric", "value", "params", "seed"}
    assert run("stoi", "--clean", clean, "--in", mix, "--normalized", "--out", tmp_path / "s.json") == 0
    assert json.loads((tmp_path / "s.json").read_text())["metric"] == "stoi_norm"

    assert run("ins", "--in", mix, "--surrogates", 20, "--seed", 7, "--scales", "0.1,0.3",
               "--out", tmp_path / "p.csv") == 0
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "scale,ins,gamma,verdict" and len(lines) == 3


def test_config_section_supplies_defaults(corpus, tmp_path):
    clean = corpus / "clean" / "utt000.wav"
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bam": {"beta": 0.0, "alpha": 0.0}}))
    assert run("bam", "--in", clean, "--out", tmp_path / "a.wav", "--config", cfg) == 0
    assert run("bam", "--in", clean, "--out", tmp_path / "b.wav", "--config", cfg, "--beta", 1.0) == 0
    a, b = read_wav(tmp_path / "a.wav").samples, read_wav(tmp_path / "b.wav").samples
    assert np.sum(a == 0) > np.sum(b == 0)


def test_eval_batch_and_bench(corpus, tmp_path):
    cfg = json.loads((corpus / "config.json").read_text())
    cfg.update(snrs_db=[0], methods=["unp", "bam"])
    path = corpus / "small.json"
    path.write_text(json.dumps(cfg))
    assert run("eval-batch", "--config", path, "--out", tmp_path / "res") == 0
    assert len((tmp_path / "res" / "report.csv").read_text().splitlines()) == 1 + 2 * 2 * 2
    assert run("eval-batch") == 1
    assert run("bench", "--out", tmp_path / "b.json", "--repetitions", 30) == 0
    assert json.loads((tmp_path / "b.json").read_text())["normalized"]["bam"] == 1.0
