"""Pipeline configuration: JSON (canonical) or TOML, plus run manifests."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .features import FeatureConfig
from .models import FAMILIES, ModelSpec
from .preprocess import PreprocessConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class ModelConfig:
    family: str = "ert"
    profile: str = "default"
    params: dict = field(default_factory=dict)

    def spec(self, family: str | None = None) -> ModelSpec:
        family = family or self.family
        # explicit params only apply to the configured family
        overrides = self.params if family == self.family else {}
        return ModelSpec.default(family, self.profile, **overrides)


@dataclass(frozen=True)
class EvalConfig:
    k: int = 10
    seed: int = 0
    stratify: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    manifest: str | None = None
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    out: str = "out"

    @classmethod
    def from_dict(cls, raw: dict | None) -> "PipelineConfig":
        raw = dict(raw or {})
        unknown = set(raw) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        model = ModelConfig(**raw.get("model", {}))
        if model.family not in FAMILIES:
            raise ValueError(f"unknown model {model.family!r}; expected one of {FAMILIES}")
        model.spec()  # validates profile and params
        return cls(
            manifest=raw.get("manifest"),
            preprocess=PreprocessConfig.from_dict(raw.get("preprocess")),
            features=FeatureConfig.from_dict(raw.get("features")),
            model=model,
            eval=EvalConfig(**raw.get("eval", {})),
            out=raw.get("out", "out"),
        )

    def to_dict(self) -> dict:
        pre = self.preprocess
        return {
            "manifest": self.manifest,
            "preprocess": {
                "epoch_len_s": pre.epoch_len_s,
                "overlap_s": pre.overlap_s,
                "modalities": {k: dataclasses.asdict(v) for k, v in pre.modalities.items()},
            },
            "features": self.features.to_dict(),
            "model": dataclasses.asdict(self.model),
            "eval": dataclasses.asdict(self.eval),
            "out": self.out,
        }

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        raw = tomllib.loads(text)
    else:
        raw = json.loads(text)
    cfg = PipelineConfig.from_dict(raw)
    # a relative manifest path is taken relative to the config file
    if cfg.manifest and not Path(cfg.manifest).is_absolute():
        cfg = cfg.replace(manifest=str(path.parent / cfg.manifest))
    return cfg


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def config_hash(cfg: PipelineConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.to_dict()).encode()).hexdigest()


def write_run_files(cfg: PipelineConfig, out_dir, command: str) -> None:
    """Echo the effective config and a run manifest (no timestamps, so reruns
    with the same inputs leave byte-identical files)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(canonical_json(cfg.to_dict()), encoding="utf-8")
    runs_path = out_dir / "run_manifest.json"
    runs = json.loads(runs_path.read_text(encoding="utf-8")) if runs_path.is_file() else {}
    runs.setdefault("layout_version", 1)
    runs.setdefault("commands", {})
    runs["commands"][command] = {
        "config_sha256": config_hash(cfg),
        "version": __version__,
        "seed": cfg.eval.seed,
    }
    runs_path.write_text(canonical_json(runs), encoding="utf-8")
