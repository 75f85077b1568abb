"""Dataset manifests, day/night bookkeeping, and mixed-set synthesis.

A manifest is a JSON-lines file: a header line naming the dataset and its
nominal resolution, then one record per line. Paths are stored relative to
the manifest's directory when possible and resolved against it on load.
The mixing machinery selects k labeled real-day records, converts them to
synthetic night images, and REPLACES them in the manifest — the record
count never changes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    DuplicateStem,
    EmptyDirectory,
    KTooLarge,
    LabelShapeMismatch,
    MissingFile,
    ResolutionMismatch,
)
from .imaging import load_image, resize_image, save_image, to_signed, to_unit
from .translation.convert import generator_forward

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

DOMAINS = ("day", "night")
PROVENANCES = ("real", "synthetic")
DOMAIN_RULES = ("fixed-day", "fixed-night", "filename-tag")


@dataclass
class ManifestRecord:
    image_path: str
    label_path: str = None
    domain: str = "day"
    provenance: str = "real"
    source_id: str = None

    def to_dict(self) -> dict:
        d = {"image_path": self.image_path, "domain": self.domain,
             "provenance": self.provenance}
        if self.label_path is not None:
            d["label_path"] = self.label_path
        if self.source_id is not None:
            d["source_id"] = self.source_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestRecord":
        return cls(
            image_path=d["image_path"],
            label_path=d.get("label_path"),
            domain=d["domain"],
            provenance=d["provenance"],
            source_id=d.get("source_id"),
        )


@dataclass
class DatasetManifest:
    name: str
    resolution: tuple  # (w, h)
    records: list = field(default_factory=list)
    base_dir: Path = field(default_factory=Path.cwd)

    def __len__(self):
        return len(self.records)

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def image_paths(self) -> list:
        return [self.resolve(r.image_path) for r in self.records]

    def labeled_pairs(self, require_all: bool = False) -> list:
        pairs = []
        for r in self.records:
            if r.label_path is None:
                if require_all:
                    raise LabelShapeMismatch(f"record {r.image_path} has no label")
                continue
            pairs.append((self.resolve(r.image_path), self.resolve(r.label_path)))
        return pairs

    def subset(self, domain=None, provenance=None, labeled=None) -> "DatasetManifest":
        """A filtered copy sharing the same base directory."""
        recs = []
        for r in self.records:
            if domain is not None and r.domain != domain:
                continue
            if provenance is not None and r.provenance != provenance:
                continue
            if labeled is not None and (r.label_path is not None) != labeled:
                continue
            recs.append(replace(r))
        return DatasetManifest(name=self.name, resolution=self.resolution,
                               records=recs, base_dir=self.base_dir)

    def count(self, domain=None, provenance=None) -> int:
        return len(self.subset(domain=domain, provenance=provenance).records)

    def validate(self) -> None:
        seen = set()
        real_images = set()
        by_image = {}
        for r in self.records:
            if r.image_path in seen:
                raise ValueError(f"duplicate image path {r.image_path!r} in manifest")
            seen.add(r.image_path)
            by_image[r.image_path] = r
            if r.domain not in DOMAINS:
                raise ValueError(f"bad domain {r.domain!r} for {r.image_path!r}")
            if r.provenance not in PROVENANCES:
                raise ValueError(f"bad provenance {r.provenance!r} for {r.image_path!r}")
            if r.provenance == "real":
                real_images.add(r.image_path)
        for r in self.records:
            if r.provenance != "synthetic":
                continue
            if r.source_id is None:
                raise ValueError(
                    f"synthetic record {r.image_path!r} lacks a source_id"
                )
            # The source usually left the manifest when it was replaced; if a
            # record with that path is still present, it must be consistent.
            src = by_image.get(r.source_id)
            if src is not None:
                if src.provenance != "real":
                    raise ValueError(
                        f"synthetic record {r.image_path!r} points at a "
                        f"non-real source"
                    )
                mine = None if r.label_path is None else self.resolve(r.label_path)
                theirs = None if src.label_path is None else self.resolve(src.label_path)
                if mine != theirs:
                    raise ValueError(
                        f"synthetic record {r.image_path!r} does not share "
                        f"its source's label"
                    )

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        base = path.parent.resolve()

        def portable(p):
            if p is None:
                return None
            p = Path(p)
            if not p.is_absolute():
                return p.as_posix()
            try:
                return p.resolve().relative_to(base).as_posix()
            except ValueError:
                return p.as_posix()

        lines = [json.dumps({"name": self.name,
                             "resolution": list(self.resolution)},
                            sort_keys=True)]
        for r in self.records:
            d = r.to_dict()
            d["image_path"] = portable(self.resolve(r.image_path))
            if r.label_path is not None:
                d["label_path"] = portable(self.resolve(r.label_path))
            lines.append(json.dumps(d, sort_keys=True))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"no manifest at {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise DecodeError(f"{path} is empty, expected a manifest header")
        try:
            header = json.loads(lines[0])
            records = [ManifestRecord.from_dict(json.loads(ln))
                       for ln in lines[1:] if ln.strip()]
        except (json.JSONDecodeError, KeyError) as exc:
            raise DecodeError(f"{path} is not a valid manifest: {exc}") from exc
        manifest = cls(
            name=header["name"],
            resolution=tuple(header["resolution"]),
            records=records,
            base_dir=path.parent,
        )
        manifest.validate()
        return manifest


def _scan_by_stem(directory: Path, what: str) -> dict:
    found = {}
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() not in IMAGE_SUFFIXES or not p.is_file():
            continue
        if p.stem in found:
            raise DuplicateStem(
                f"{what} stem {p.stem!r} appears twice: {found[p.stem].name} "
                f"and {p.name}"
            )
        found[p.stem] = p
    return found


def _decodable(path: Path) -> bool:
    try:
        with Image.open(path) as im:
            im.verify()
        return True
    except (UnidentifiedImageError, OSError):
        return False


def _domain_for(stem: str, rule: str) -> str:
    if rule == "fixed-day":
        return "day"
    if rule == "fixed-night":
        return "night"
    tokens = stem.lower().replace("-", "_").split("_")
    return "night" if "night" in tokens else "day"


def build_manifest(image_dir, label_dir=None, domain_rule: str = "fixed-day",
                   name: str = None, resolution: tuple = None) -> DatasetManifest:
    """Scan a directory into a manifest, matching labels by filename stem."""
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise MissingFile(f"image directory {image_dir} does not exist")
    if domain_rule not in DOMAIN_RULES:
        raise ValueError(f"domain_rule must be one of {DOMAIN_RULES}, got {domain_rule!r}")

    images = _scan_by_stem(image_dir, "image")
    if not images:
        raise EmptyDirectory(f"{image_dir} contains no image files")
    labels = {}
    if label_dir is not None:
        label_dir = Path(label_dir)
        if not label_dir.is_dir():
            raise MissingFile(f"label directory {label_dir} does not exist")
        labels = _scan_by_stem(label_dir, "label")

    records = []
    unlabeled, undecodable = [], []
    for stem, img_path in images.items():
        if not _decodable(img_path):
            undecodable.append(img_path.name)
            continue
        label = labels.pop(stem, None)
        if label_dir is not None and label is None:
            unlabeled.append(stem)
        records.append(ManifestRecord(
            image_path=str(img_path.resolve()),
            label_path=None if label is None else str(label.resolve()),
            domain=_domain_for(stem, domain_rule),
        ))
    if undecodable:
        log.warning("skipped %d undecodable file(s): %s",
                    len(undecodable), ", ".join(undecodable))
    if unlabeled:
        log.warning("%d image(s) have no label: %s",
                    len(unlabeled), ", ".join(unlabeled))
    if labels:
        log.warning("%d label(s) match no image: %s",
                    len(labels), ", ".join(p.name for p in labels.values()))
    if not records:
        raise EmptyDirectory(f"{image_dir} contains no decodable images")

    if resolution is None:
        with Image.open(records[0].image_path) as im:
            resolution = im.size
    manifest = DatasetManifest(
        name=name or image_dir.name,
        resolution=tuple(resolution),
        records=records,
        base_dir=image_dir,
    )
    manifest.validate()
    return manifest


@dataclass
class MixPlan:
    total_day: int
    convert_count: int
    seed: int
    selection: list = field(default_factory=list)

    def validate(self) -> None:
        if not 0 <= self.convert_count <= self.total_day:
            raise KTooLarge(
                f"k={self.convert_count} outside [0, {self.total_day}]"
            )
        if len(self.selection) != self.convert_count:
            raise ValueError("selection size differs from convert_count")
        if len(set(self.selection)) != len(self.selection):
            raise ValueError("selection contains repeated indices")
        if sorted(self.selection) != list(self.selection):
            raise ValueError("selection must be sorted")


def eligible_indices(manifest: DatasetManifest) -> list:
    """Record indices that may be converted: real, day, labeled."""
    return [i for i, r in enumerate(manifest.records)
            if r.provenance == "real" and r.domain == "day"
            and r.label_path is not None]


def plan_mix(manifest: DatasetManifest, k: int, seed: int) -> MixPlan:
    """Choose k of the eligible day records uniformly, deterministic in seed."""
    eligible = eligible_indices(manifest)
    n = len(eligible)
    if k < 0 or k > n:
        raise KTooLarge(f"k={k} but only {n} labeled real day records exist")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=k, replace=False)
    plan = MixPlan(
        total_day=n,
        convert_count=k,
        seed=seed,
        selection=sorted(int(eligible[i]) for i in chosen),
    )
    plan.validate()
    return plan


def synthesize_mixed_dataset(manifest: DatasetManifest, plan: MixPlan,
                             weights, out_dir) -> DatasetManifest:
    """Replace the planned records with freshly converted synthetic-night ones.

    Selected images are downscaled to the translator's working size,
    converted day->night, upsampled back to the manifest resolution and
    written under out_dir. Records that fail to convert stay real and are
    listed in the sidecar report. The output record count always equals the
    input record count.
    """
    plan.validate()
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    eligible = set(eligible_indices(manifest))
    for idx in plan.selection:
        if idx not in eligible:
            raise ValueError(
                f"plan selects record {idx}, which is not a labeled real day "
                f"record of this manifest"
            )

    gen_w, gen_h = weights.arch.image_size
    out_w, out_h = manifest.resolution
    new_records = [replace(r) for r in manifest.records]
    skipped = []
    written = []
    for idx in plan.selection:
        record = manifest.records[idx]
        src = manifest.resolve(record.image_path)
        try:
            img = load_image(src)
        except (MissingFile, DecodeError) as exc:
            skipped.append({"record": record.image_path, "reason": str(exc)})
            continue
        if (img.width, img.height) != (out_w, out_h):
            raise ResolutionMismatch(
                f"{src} is {img.width}x{img.height}, manifest says {out_w}x{out_h}"
            )
        small = to_signed(resize_image(img, gen_w, gen_h))
        night = to_unit(generator_forward(weights, small, "day2night"))
        full = resize_image(night, out_w, out_h)
        out_path = images_dir / f"{src.stem}_synth_night.png"
        save_image(full, out_path)
        new_records[idx] = ManifestRecord(
            image_path=str(out_path.resolve()),
            label_path=str(manifest.resolve(record.label_path)),
            domain="night",
            provenance="synthetic",
            source_id=record.image_path,
        )
        written.append(out_path.name)

    report = {"written": len(written), "skipped": skipped}
    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if skipped:
        log.warning("conversion skipped %d record(s); see %s",
                    len(skipped), out_dir / "report.json")

    mixed = DatasetManifest(
        name=f"{manifest.name}-mixed-k{plan.convert_count}",
        resolution=manifest.resolution,
        records=new_records,
        base_dir=manifest.base_dir,
    )
    mixed.validate()
    return mixed
