import json

import pytest

from hdsignals.config import EvalConfig, ModelConfig, PipelineConfig, config_hash, load_config, write_run_files


def test_defaults_round_trip():
    cfg = PipelineConfig()
    again = PipelineConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    assert config_hash(again) == config_hash(cfg)


def test_defaults_mirror_pipeline_parameters():
    d = PipelineConfig().to_dict()
    assert d["preprocess"]["epoch_len_s"] == 5.0 and d["preprocess"]["overlap_s"] == 1.0
    assert d["eval"] == {"k": 10, "seed": 0, "stratify": True}
    assert d["model"]["family"] == "ert"
    assert d["features"]["wavelets"] == {"eeg": "coif1", "ecg": "db4", "fnirs": "coif1"}


def test_toml_and_json_agree(tmp_path):
    (tmp_path / "c.toml").write_text(
        'manifest = "data/manifest.json"\nout = "runs/a"\n'
        '[model]\nfamily = "rf"\nprofile = "tuned"\n'
        '[eval]\nk = 5\nseed = 3\n'
        '[features]\nmodalities = ["eeg", "ecg"]\n'
    )
    (tmp_path / "c.json").write_text(json.dumps({
        "manifest": "data/manifest.json",
        "out": "runs/a",
        "model": {"family": "rf", "profile": "tuned"},
        "eval": {"k": 5, "seed": 3},
        "features": {"modalities": ["eeg", "ecg"]},
    }))
    a, b = load_config(tmp_path / "c.toml"), load_config(tmp_path / "c.json")
    assert a.to_dict() == b.to_dict()
    assert a.manifest == str(tmp_path / "data" / "manifest.json")
    assert a.model.spec().resolved()["n_estimators"] == 1000
    assert a.features.modalities == ("eeg", "ecg")


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"model": {"family": "svm"}},
    {"model": {"family": "lda", "params": {"n_estimators": 3}}},
    {"model": {"profile": "fast"}},
    {"eval": {"folds": 3}},
])
def test_invalid_configs(raw):
    with pytest.raises((ValueError, TypeError)):
        PipelineConfig.from_dict(raw)


def test_params_apply_only_to_configured_family():
    m = ModelConfig("ert", "default", {"n_estimators": 7})
    assert m.spec().resolved()["n_estimators"] == 7
    assert m.spec("rf").resolved()["n_estimators"] == 100


def test_hash_tracks_changes():
    base = PipelineConfig()
    assert config_hash(base.replace(eval=EvalConfig(k=5))) != config_hash(base)


def test_run_files_are_stable(tmp_path):
    cfg = PipelineConfig(out=str(tmp_path))
    write_run_files(cfg, tmp_path, "extract")
    first = (tmp_path / "run_manifest.json").read_bytes()
    write_run_files(cfg, tmp_path, "extract")
    assert (tmp_path / "run_manifest.json").read_bytes() == first
    runs = json.loads(first)
    assert runs["layout_version"] == 1
    assert runs["commands"]["extract"]["config_sha256"] == config_hash(cfg)
    assert json.loads((tmp_path / "config.json").read_text()) == cfg.to_dict()
