"""Experiment configuration: one YAML document driving every command.

The file carries the experiment identity (name, output root, global seed),
the dataset locations, and the per-stage training configs. Keys are
written in sorted order when dumped, and the hash of the canonical JSON
form is stable under key reordering of the input. Relative dataset paths
are resolved against the config file's own directory at load time, so the
resolved copy echoed next to a run's outputs reproduces that run from
anywhere.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import DecodeError, MissingFile
from .segmentation import SegTrainConfig
from .translation import GanTrainConfig

_PATH_FIELDS = (
    "train_manifest",
    "day_images",
    "night_images",
    "eval_day_manifest",
    "eval_night_manifest",
    "translator_weights",
    "segmenter_weights",
    "output_root",
)


@dataclass
class ExperimentPaths:
    """The on-disk layout of one experiment."""

    root: Path

    @property
    def config(self) -> Path:
        return self.root / "config"

    @property
    def weights(self) -> Path:
        return self.root / "weights"

    @property
    def logs(self) -> Path:
        return self.root / "logs"

    @property
    def images(self) -> Path:
        return self.root / "images"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def ensure(self) -> "ExperimentPaths":
        for d in (self.config, self.weights, self.logs, self.images, self.reports):
            d.mkdir(parents=True, exist_ok=True)
        return self


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    output_root: str = "runs"
    seed: int = 0
    train_manifest: str = None
    day_images: str = None
    night_images: str = None
    eval_day_manifest: str = None
    eval_night_manifest: str = None
    translator_weights: str = None
    segmenter_weights: str = None
    k: int = 0
    k_values: tuple = ()
    gan: GanTrainConfig = field(default_factory=GanTrainConfig)
    seg: SegTrainConfig = field(default_factory=SegTrainConfig)

    def to_dict(self) -> dict:
        def plain(value):
            if isinstance(value, tuple):
                return [plain(v) for v in value]
            if isinstance(value, list):
                return [plain(v) for v in value]
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            return value

        return plain(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise DecodeError(f"unknown config keys: {sorted(unknown)}")
        gan = d.pop("gan", {}) or {}
        seg = d.pop("seg", {}) or {}
        if not isinstance(gan, dict) or not isinstance(seg, dict):
            raise DecodeError("'gan' and 'seg' must be mappings")
        bad_gan = set(gan) - set(GanTrainConfig.__dataclass_fields__)
        bad_seg = set(seg) - set(SegTrainConfig.__dataclass_fields__)
        if bad_gan or bad_seg:
            raise DecodeError(
                f"unknown config keys: {sorted(bad_gan | bad_seg)}"
            )
        cfg = cls(gan=GanTrainConfig(**gan), seg=SegTrainConfig(**seg), **d)
        if cfg.k_values:
            cfg.k_values = tuple(int(k) for k in cfg.k_values)
        # YAML carries tuples as lists; restore them so round-trips compare equal
        for stage, names in ((cfg.gan, ("image_size", "adam_betas")),
                             (cfg.seg, ("image_size", "widths", "dilations",
                                        "pool_bins", "class_weights"))):
            for name in names:
                value = getattr(stage, name)
                if isinstance(value, list):
                    setattr(stage, name, tuple(value))
        return cfg

    def resolve_paths(self, base: Path) -> None:
        """Make every path field absolute, interpreting it against `base`."""
        base = Path(base)
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            p = Path(value)
            if not p.is_absolute():
                setattr(self, name, str((base / p).resolve()))

    @classmethod
    def load_yaml(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"config file {path} does not exist")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise DecodeError(f"{path} is not valid YAML: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise DecodeError(f"{path} must contain a mapping at top level")
        cfg = cls.from_dict(raw)
        cfg.resolve_paths(path.parent)
        return cfg

    def save_yaml(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = yaml.safe_dump(self.to_dict(), sort_keys=True,
                              default_flow_style=False)
        path.write_text(text, encoding="utf-8")

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def experiment_paths(self) -> ExperimentPaths:
        return ExperimentPaths(Path(self.output_root) / self.name)
