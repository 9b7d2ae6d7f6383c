import numpy as np
import pytest

from blockcrack.cipher import CipherParams, KeyPair, decrypt, encrypt
from blockcrack.cli import main
from blockcrack.dataio import read_image, write_image
from blockcrack.experiment import (
    ExperimentConfig,
    image_keys,
    load_config,
    parse_key,
    run_experiment,
)
from blockcrack.jigsaw import parse_assembly
from blockcrack.unshuffle import SubBlockPlacement

from conftest import FIXTURE_BATCH, textured_image

FAST = dict(population=40, generations=8, elites=2, size=64)


def test_parse_key():
    assert parse_key("identity") is None and parse_key(None) is None
    assert parse_key("42") == 42 and parse_key("0x10") == 16


def test_per_image_keys_differ_and_repeat():
    cfg = ExperimentConfig(seed=3)
    assert image_keys(cfg, 0) == image_keys(cfg, 0)
    assert image_keys(cfg, 0) != image_keys(cfg, 1)
    fixed = ExperimentConfig(key1="5", key2="identity")
    assert image_keys(fixed, 7) == (5, None)


def test_identity_keys_mode_none_is_perfect():
    cfg = ExperimentConfig(dataset=str(FIXTURE_BATCH), count=3, key1="identity",
                           key2="identity", mode="none", size=64)
    rep = run_experiment(cfg)
    assert rep.mean_ssim("none") == 1.0
    assert len(rep.results) == 3


def test_small_run_deterministic(tmp_path):
    cfg = ExperimentConfig(dataset=str(FIXTURE_BATCH), count=2, **FAST)
    a, b = run_experiment(cfg).to_text(), run_experiment(cfg).to_text()
    assert a == b
    assert "summary\tconventional" in a and "summary\tproposed" in a


def test_bad_image_is_isolated():
    images = [np.zeros((32, 32, 3), np.uint8), np.zeros((5, 5, 3), np.uint8)]
    cfg = ExperimentConfig(count=2, mode="none", size=64)
    rep = run_experiment(cfg, images=images)
    assert rep.results[0].error is None
    # 40 is not a multiple of the block size: every image fails, none raises
    ga = {k: v for k, v in FAST.items() if k != "size"}
    cfg = ExperimentConfig(count=2, mode="proposed", size=40, **ga)
    rep = run_experiment(cfg, images=images)
    assert all(r.error and "GeometryError" in r.error for r in rep.results)
    assert "failed=2" in rep.to_text()


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(mode="bogus")
    with pytest.raises(ValueError):
        ExperimentConfig(block_size=7)


def test_config_file_and_override(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text("# comment\ncount = 2\nblock-size = 16\nmode = none\nsize=64\n"
                        f"dataset = {FIXTURE_BATCH}\nkey1 = identity\nkey2 = identity\n")
    cfg = load_config(cfg_file)
    assert (cfg.count, cfg.mode, cfg.key1) == (2, "none", "identity")
    report = tmp_path / "r.txt"
    assert main(["evaluate", "--config", str(cfg_file), "--count", "1",
                 "--report", str(report)]) == 0
    text = report.read_text()
    assert "# count=1" in text and text.count("\n0\tnone\t") == 1 and "\n1\tnone" not in text
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    with pytest.raises(ValueError):
        load_config(bad)


def test_cli_encrypt_decrypt(tmp_path):
    img = textured_image(64, 64, seed=1)
    write_image(tmp_path / "x.ppm", img)
    assert main(["encrypt", str(tmp_path / "x.ppm"), str(tmp_path / "y.ppm"),
                 "--key1", "3", "--key2", "4"]) == 0
    y = read_image(tmp_path / "y.ppm")
    assert np.array_equal(y, encrypt(img, CipherParams(16, KeyPair(3, 4))))
    assert main(["decrypt", str(tmp_path / "y.ppm"), str(tmp_path / "z.png"),
                 "--key1", "3", "--key2", "4"]) == 0
    assert np.array_equal(read_image(tmp_path / "z.png"), img)
    assert np.array_equal(decrypt(y, CipherParams(16, KeyPair(3, 4))), img)


def test_cli_attack_and_solve(tmp_path, cifar224, capsys):
    x = cifar224[0][:64, :64]
    write_image(tmp_path / "x.ppm", x)
    main(["encrypt", str(tmp_path / "x.ppm"), str(tmp_path / "e.ppm"),
          "--key1", "7", "--key2", "8"])
    ga = ["--population", "40", "--generations", "5", "--elites", "2"]
    assert main(["attack", str(tmp_path / "e.ppm"), str(tmp_path / "a.ppm"),
                 "--placement-dump", str(tmp_path / "p.txt"),
                 "--assembly-dump", str(tmp_path / "s.txt")] + ga) == 0
    assert "fitness=" in capsys.readouterr().out
    assert SubBlockPlacement.parse((tmp_path / "p.txt").read_text()).complete
    assert sorted(parse_assembly((tmp_path / "s.txt").read_text(), 4, 4)) == list(range(16))
    main(["encrypt", str(tmp_path / "x.ppm"), str(tmp_path / "b.ppm"), "--blocks-only",
          "--key1", "7"])
    assert main(["solve", str(tmp_path / "b.ppm"), str(tmp_path / "s.ppm")] + ga) == 0
    assert read_image(tmp_path / "s.ppm").shape == (64, 64, 3)


def test_cli_dataset_import(tmp_path):
    out = tmp_path / "imgs"
    assert main(["dataset", "import", "--dataset", str(FIXTURE_BATCH), "--out-dir", str(out),
                 "--count", "3", "--size", "224"]) == 0
    files = sorted(out.iterdir())
    assert [f.name for f in files] == ["00000_label3.ppm", "00001_label8.ppm", "00002_label8.ppm"]
    assert read_image(files[0]).shape == (224, 224, 3)
