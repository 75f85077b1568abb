"""Shared fixtures: the toy corpus and one fully trained toy experiment.

The expensive work (training a translator, running the k-sweep) happens once
per session; acceptance and integration tests read the resulting artifacts.
"""

from __future__ import annotations

import contextlib
import csv
import io
from pathlib import Path

import pytest

import toygen
from nightseg.cli import main as cli_main
from nightseg.config import ExperimentConfig
from nightseg.datasets import build_manifest
from nightseg.segmentation import SegTrainConfig
from nightseg.translation import GanTrainConfig

# Small enough to train in seconds, big enough that the day/night gap and
# its closure by mixing are unmistakable (validated against toygen margins).
TOY_GAN = dict(epochs=6, batch_size=1, image_size=(64, 64), base_channels=16,
               n_res_blocks=2, disc_base_channels=16, disc_layers=2,
               buffer_size=50, cache_images=True)
TOY_SEG = dict(epochs=14, batch_size=8, learning_rate=2e-3,
               image_size=(64, 64), num_classes=toygen.NUM_CLASSES,
               widths=(8, 24, 48), mid_blocks=2, late_repeats=1,
               cache_images=True)
TOY_K_VALUES = (0, 50, 100, 150, 200)


def quiet_cli(argv) -> tuple:
    """Run the CLI in-process, capturing stdout; returns (exit_code, text)."""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main([str(a) for a in argv])
    return code, buf.getvalue()


@pytest.fixture
def run_cli():
    return quiet_cli


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory) -> dict:
    """Rendered two-domain corpus plus a saved manifest per split."""
    root = tmp_path_factory.mktemp("toycorpus")
    dirs = toygen.write_corpus(root, seed=7)
    out = {"root": root, "dirs": dirs, "manifests": {}}
    for name, split in dirs.items():
        labels = split / "labels"
        m = build_manifest(
            split / "images",
            labels if labels.is_dir() else None,
            domain_rule="fixed-night" if "night" in name else "fixed-day",
        )
        path = split / "manifest.jsonl"
        m.save(path)
        out["manifests"][name] = path
    return out


@pytest.fixture(scope="session")
def toy_experiment(toy_corpus, tmp_path_factory) -> dict:
    """Translator training plus the full k-sweep, driven through the CLI."""
    exp_root = tmp_path_factory.mktemp("toyexp")
    cfg = ExperimentConfig(
        name="toy",
        output_root=str(exp_root / "runs"),
        seed=0,
        train_manifest=str(toy_corpus["manifests"]["train_day"]),
        day_images=str(toy_corpus["manifests"]["train_day"]),
        night_images=str(toy_corpus["manifests"]["gan_night"]),
        eval_day_manifest=str(toy_corpus["manifests"]["eval_day"]),
        eval_night_manifest=str(toy_corpus["manifests"]["eval_night"]),
        k_values=TOY_K_VALUES,
        gan=GanTrainConfig(**TOY_GAN),
        seg=SegTrainConfig(**TOY_SEG),
    )
    config_path = exp_root / "toy.yaml"
    cfg.save_yaml(config_path)

    code, gan_out = quiet_cli(["train-gan", "--config", config_path])
    assert code == 0, f"train-gan failed:\n{gan_out}"
    code, sweep_out = quiet_cli(["sweep", "--config", config_path])
    assert code == 0, f"sweep failed:\n{sweep_out}"

    paths = cfg.experiment_paths()
    sweep_rows = {
        int(row["k"]): {col: float(row[col]) for col in row if col != "k"}
        for row in read_csv(paths.reports / "sweep" / "sweep.csv")
    }
    return {
        "config": cfg,
        "config_path": config_path,
        "paths": paths,
        "corpus": toy_corpus,
        "translator_weights": paths.weights / "translator.weights",
        "sweep_dir": paths.reports / "sweep",
        "sweep": sweep_rows,
        "stdout": {"train-gan": gan_out, "sweep": sweep_out},
    }
