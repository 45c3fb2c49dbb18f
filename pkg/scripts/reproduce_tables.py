#!/usr/bin/env python3
"""Model comparison, tuned-ERT and significance tables for a dataset manifest.

Runs preprocess and extract once, then default-profile CV for every model
family, tuned ERT, and the OLS/importance report, and writes markdown tables
to <out>/tables.md. Works on the clinical dataset or on a synthetic manifest
(use --duration 120 or more with synth so the OLS design has enough rows).

    python3 scripts/reproduce_tables.py --manifest data/manifest.json --out runs/tables
"""
import argparse
import csv
from pathlib import Path

from hdsignals.cli import cmd_evaluate, cmd_extract, cmd_preprocess, cmd_report
from hdsignals.config import EvalConfig, ModelConfig, PipelineConfig
from hdsignals.errors import TooFewRows

ORDER = ("ert", "rf", "lda", "qda", "logreg")
NAMES = {"ert": "Extra Trees", "rf": "Random Forest", "lda": "LDA", "qda": "QDA", "logreg": "Logistic Regression"}
COLUMNS = ("accuracy", "precision", "recall", "f1", "roc_auc")


def metric_table(reports, view: str) -> list[str]:
    lines = ["| Model | Accuracy (%) | Precision (%) | Recall (%) | F1 | ROC-AUC |", "|---|---|---|---|---|---|"]
    for fam, rep in reports.items():
        m = getattr(rep, view)
        lines.append(
            f"| {NAMES[fam]} | {100 * m['accuracy']:.3f} | {100 * m['precision']:.3f} | "
            f"{100 * m['recall']:.3f} | {m['f1']:.3f} | {m['roc_auc']:.3f} |"
        )
    return lines


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--manifest", type=Path, required=True)
    ap.add_argument("--out", type=Path, default=Path("runs/tables"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--skip-tuned", action="store_true", help="skip the 1000-tree ERT run")
    args = ap.parse_args()

    cfg = PipelineConfig(manifest=str(args.manifest), out=str(args.out), eval=EvalConfig(k=args.k, seed=args.seed))
    cmd_preprocess(cfg, args.threads)
    cmd_extract(cfg, args.threads)

    out = ["## Default hyperparameters (pooled out-of-fold)", ""]
    defaults = cmd_evaluate(cfg, list(ORDER), args.threads)
    out += metric_table(defaults, "pooled") + ["", "## Default hyperparameters (mean over folds)", ""]
    out += metric_table(defaults, "fold_mean")
    if not args.skip_tuned:
        tuned_cfg = cfg.replace(model=ModelConfig("ert", "tuned"), out=str(args.out / "tuned"))
        # reuse the extracted features
        (args.out / "tuned").mkdir(parents=True, exist_ok=True)
        link = args.out / "tuned" / "features"
        if not link.exists():
            link.symlink_to((args.out / "features").resolve(), target_is_directory=True)
        tuned = cmd_evaluate(tuned_cfg, ["ert"], args.threads)
        out += ["", "## Tuned Extra Trees (1000 estimators, pooled)", ""] + metric_table(tuned, "pooled")

    try:
        report_dir = cmd_report(cfg, args.threads)
    except TooFewRows as exc:
        out += ["", f"OLS significance skipped: {exc}"]
    else:
        out += ["", "## OLS significance buckets", "", "| Range | Count | p mean | t mean | SE mean |", "|---|---|---|---|---|"]
        with open(report_dir / "buckets.csv", newline="") as fh:
            for r in csv.DictReader(fh):
                out.append(f"| {r['range']} | {r['count']} | {r['p_mean']} | {r['t_mean']} | {r['se_mean']} |")
        with open(report_dir / "importance_by_signal.csv", newline="") as fh:
            out += ["", "## Importance by signal", "", "| Signal | Mean | SE |", "|---|---|---|"]
            out += [f"| {r['group']} | {float(r['mean_importance']):.3e} | {float(r['se']):.1e} |" for r in csv.DictReader(fh)]

    (args.out / "tables.md").write_text("\n".join(out) + "\n")
    print("\n".join(out))


if __name__ == "__main__":
    main()
