"""Command-line entry point: synth, preprocess, extract, evaluate, report."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, canonical_json, load_config, write_run_files
from .errors import HDSignalsError, MissingPreprocessOutput
from .evaluation import cross_validate
from .features import extract_feature_matrix, load_feature_matrix, save_feature_matrix
from .models import FAMILIES, ModelSpec, feature_importances, fit_model
from .preprocess import load_epochset, preprocess_recording, save_epochset
from .signal_io import MODALITIES, load_manifest, load_recording
from .stats import (
    BASES,
    basis_filename,
    grouped_importance,
    ols_fit_pruned,
    ols_summary,
    p_value_buckets,
    write_buckets_csv,
    write_importance_csv,
    write_significance_csv,
)
from .synth import DEFAULT_DURATION_S, cmd_synth


def _log(msg: str) -> None:
    print(msg, flush=True)


class _EpochIndex:
    """Patient order and labels recorded at preprocessing time."""

    def __init__(self, patients: list[dict]):
        self.patients = patients
        self._labels = {p["id"]: int(p["label"]) for p in patients}

    @property
    def patient_ids(self) -> list[str]:
        return [p["id"] for p in self.patients]

    def label_of(self, pid: str) -> int:
        return self._labels[pid]


# -----------------------------------------------------------------------------
# commands
# -----------------------------------------------------------------------------
def cmd_preprocess(cfg: PipelineConfig, threads: int = 1) -> Path:
    if not cfg.manifest:
        raise MissingPreprocessOutput("no manifest configured; pass --manifest or set 'manifest' in the config")
    manifest = load_manifest(cfg.manifest)
    out = Path(cfg.out) / "epochs"
    index = []
    total = {m: 0 for m in MODALITIES}
    for entry in manifest.entries:
        pid = entry.patient_id
        for key in MODALITIES:
            try:
                rec = load_recording(entry.paths[key], key, patient_id=pid)
                es = preprocess_recording(rec, cfg.preprocess)
            except HDSignalsError as exc:
                raise type(exc)(f"patient {pid}, {MODALITIES[key].name}: {exc}") from exc
            save_epochset(es, out / pid)
            total[key] += es.n_epochs
        index.append({"id": pid, "diagnosis": entry.diagnosis.value, "label": manifest.label_of(pid)})
    (out / "index.json").write_text(canonical_json({"patients": index}), encoding="utf-8")
    write_run_files(cfg, cfg.out, "preprocess")
    counts = ", ".join(f"{MODALITIES[k].name} {v}" for k, v in total.items())
    _log(f"preprocess: {len(index)} patients, epochs kept: {counts}")
    return out


def _load_epochs(cfg: PipelineConfig):
    root = Path(cfg.out) / "epochs"
    index_path = root / "index.json"
    if not index_path.is_file():
        raise MissingPreprocessOutput(f"no preprocessed epochs under {root}; run 'preprocess' first")
    index = _EpochIndex(json.loads(index_path.read_text(encoding="utf-8"))["patients"])
    if not index.patients:
        raise MissingPreprocessOutput(f"epoch index {index_path} lists no patients")
    sets = {}
    for pid in index.patient_ids:
        try:
            sets[pid] = {m: load_epochset(root / pid, m) for m in cfg.features.modalities}
        except HDSignalsError as exc:
            raise MissingPreprocessOutput(f"patient {pid}: {exc}") from exc
    return index, sets


def cmd_extract(cfg: PipelineConfig, threads: int = 1) -> Path:
    index, sets = _load_epochs(cfg)
    fm = extract_feature_matrix(sets, index, cfg.features, threads=threads)
    out = Path(cfg.out) / "features"
    save_feature_matrix(fm, out)
    write_run_files(cfg, cfg.out, "extract")
    _log(f"extract: {fm.shape[0]} rows x {fm.shape[1]} features")
    return out


def _load_features(cfg: PipelineConfig):
    path = Path(cfg.out) / "features"
    if not (path / "features.npy").is_file():
        raise MissingPreprocessOutput(f"no feature matrix under {path}; run 'extract' first")
    return load_feature_matrix(path)


def cmd_evaluate(cfg: PipelineConfig, families=None, threads: int = 1) -> dict:
    fm = _load_features(cfg)
    families = families or [cfg.model.family]
    reports = {}
    for fam in families:
        spec = cfg.model.spec(fam)
        report = cross_validate(
            spec, fm.values, fm.labels, fm.groups, cfg.eval.k, cfg.eval.seed, threads, cfg.eval.stratify
        )
        report.write(Path(cfg.out) / "eval" / fam)
        reports[fam] = report
        p = report.pooled
        _log(
            f"evaluate {fam}: accuracy {p['accuracy']:.4f} precision {p['precision']:.4f} "
            f"recall {p['recall']:.4f} f1 {p['f1']:.4f} roc_auc {p['roc_auc']:.4f}"
        )
    write_run_files(cfg, cfg.out, "evaluate")
    return reports


def cmd_report(cfg: PipelineConfig, threads: int = 1) -> Path:
    fm = _load_features(cfg)
    out = Path(cfg.out) / "report"
    out.mkdir(parents=True, exist_ok=True)
    names = [d.name for d in fm.descriptors]

    result, dropped = ols_fit_pruned(fm.values, fm.labels.astype(np.float64), names)
    write_significance_csv(result, out / "significance.csv")
    buckets = p_value_buckets(result)
    write_buckets_csv(buckets, out / "buckets.csv")
    summary = {**ols_summary(result), "features": len(names), "dropped_collinear": [names[j] for j in dropped]}
    (out / "ols_summary.json").write_text(canonical_json(summary), encoding="utf-8")

    # importances from a forest fit on every row
    spec = ModelSpec.default("ert", cfg.model.profile, **(cfg.model.params if cfg.model.family == "ert" else {}))
    forest = fit_model(spec, fm.values, fm.labels, seed=cfg.eval.seed, threads=threads)
    mean_imp, _ = feature_importances(forest)
    for basis in BASES:
        write_importance_csv(grouped_importance(mean_imp, fm.descriptors, basis), out / basis_filename(basis))
    write_run_files(cfg, cfg.out, "report")
    if dropped:
        _log(f"report: {len(dropped)} collinear column(s) dropped from OLS: {', '.join(names[j] for j in dropped)}")
    _log(f"report: r_squared {result.r_squared:.4f}, F {result.f_statistic:.4g}, buckets " +
         ", ".join(f"{b.label}: {b.count}" for b in buckets))
    return out


# -----------------------------------------------------------------------------
# argument parsing
# -----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline config (.json or .toml)")
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="seed (overrides config eval.seed)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--json", action="store_true", help="machine-readable errors on stderr")

    parser = argparse.ArgumentParser(prog="hdsignals", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hdsignals {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--n-patients", type=int, default=40)
    p.add_argument("--effect-size", type=float, default=1.0)
    p.add_argument("--duration", type=float, default=DEFAULT_DURATION_S, help="seconds per recording")

    p = sub.add_parser("preprocess", parents=[common], help="filter, epoch and clean recordings")
    p.add_argument("--manifest", type=Path, help="dataset manifest (overrides config)")

    sub.add_parser("extract", parents=[common], help="compute the feature matrix")

    p = sub.add_parser("evaluate", parents=[common], help="group k-fold cross-validation")
    p.add_argument("--model", choices=FAMILIES, help="model family (overrides config)")
    p.add_argument("--all", action="store_true", help="evaluate every model family")
    p.add_argument("--profile", choices=("default", "tuned"), help="hyperparameter profile")
    p.add_argument("--k", type=int, help="number of folds (overrides config)")
    p.add_argument("--unstratified", action="store_true", help="deal groups to folds ignoring their class")

    sub.add_parser("report", parents=[common], help="OLS significance and grouped importances")
    return parser


def _effective_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.out is not None:
        cfg = cfg.replace(out=str(args.out))
    if args.seed is not None:
        cfg = cfg.replace(eval=dataclasses.replace(cfg.eval, seed=args.seed))
    if getattr(args, "manifest", None) is not None:
        cfg = cfg.replace(manifest=str(args.manifest))
    if getattr(args, "model", None):
        cfg = cfg.replace(model=type(cfg.model)(args.model, cfg.model.profile, {}))
    if getattr(args, "profile", None):
        cfg = cfg.replace(model=type(cfg.model)(cfg.model.family, args.profile, cfg.model.params))
    if getattr(args, "k", None):
        cfg = cfg.replace(eval=dataclasses.replace(cfg.eval, k=args.k))
    if getattr(args, "unstratified", False):
        cfg = cfg.replace(eval=dataclasses.replace(cfg.eval, stratify=False))
    return cfg


def run(args) -> None:
    if args.command == "synth":
        out = args.out or Path("synth")
        path = cmd_synth(out, seed=args.seed or 0, n_patients=args.n_patients,
                         effect_size=args.effect_size, duration_s=args.duration)
        _log(f"synth: wrote {args.n_patients} patients, manifest {path}")
        return
    cfg = _effective_config(args)
    if args.command == "preprocess":
        cmd_preprocess(cfg, args.threads)
    elif args.command == "extract":
        cmd_extract(cfg, args.threads)
    elif args.command == "evaluate":
        cmd_evaluate(cfg, list(FAMILIES) if args.all else None, args.threads)
    elif args.command == "report":
        cmd_report(cfg, args.threads)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run(args)
    except (HDSignalsError, ValueError, OSError) as exc:
        if args.json:
            payload = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
            print(json.dumps(payload), file=sys.stderr)
        else:
            print(f"hdsignals {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0
