"""Acceptance criteria, one PASS/FAIL line each (see the terminal summary)."""
import os
import time
from pathlib import Path

import numpy as np
import pytest

from hdsignals.cli import cmd_evaluate, cmd_extract, cmd_preprocess
from hdsignals.config import EvalConfig, ModelConfig, PipelineConfig
from hdsignals.evaluation import group_kfold_split, roc_auc
from hdsignals.features import FeatureConfig, descriptors_for, dwt_level1, higuchi_fd, hjorth, welch_psd
from hdsignals.features import WelchConfig
from hdsignals.signal_io import MODALITIES
from hdsignals.stats import ols_fit, t_two_sided_p
from hdsignals.synth import cmd_synth

pytestmark = pytest.mark.slow

NULL_SEEDS = range(5)


def run_pipeline(root: Path, seed: int, effect: float) -> dict:
    manifest = cmd_synth(root / "synth", seed=seed, n_patients=40, effect_size=effect)
    cfg = PipelineConfig(manifest=str(manifest), out=str(root / "run"), eval=EvalConfig(k=10, seed=seed))
    cmd_preprocess(cfg)
    cmd_extract(cfg)
    return cmd_evaluate(cfg, ["ert"])["ert"]


# -- feature count -------------------------------------------------------------
def test_feature_count_identity(verdict):
    names = {k: m.default_channel_names for k, m in MODALITIES.items()}
    desc = descriptors_for(names, FeatureConfig())
    per_mod = {m: sum(d.modality == m for d in desc) for m in ("EEG", "ECG", "FNIRS")}

    def families(mod):
        count = lambda fams: sum(d.modality == mod and d.family in fams for d in desc)  # noqa: E731
        return (count({"Statistical", "Slope"}), count({"Hjorth"}), count({"Wavelet"}), count({"PSD"}))

    ok = (
        len(desc) == 948
        and per_mod == {"EEG": 416, "ECG": 26, "FNIRS": 506}
        and families("EEG") == (160, 48, 128, 80)
        and families("ECG") == (10, 3, 8, 5)
        and families("FNIRS") == (220, 66, 176, 44)
    )
    verdict("feature count 948 = 416 + 26 + 506 with family subtotals", ok, f"{len(desc)}, {per_mod}")


# -- synthetic end to end ------------------------------------------------------
@pytest.fixture(scope="module")
def effect_run(tmp_path_factory):
    start = time.perf_counter()
    report = run_pipeline(tmp_path_factory.mktemp("effect1"), seed=0, effect=1.0)
    return report, time.perf_counter() - start


def test_synthetic_effect_detected(verdict, effect_run):
    report, elapsed = effect_run
    auc = report.pooled["roc_auc"]
    verdict("synthetic effect 1: ERT group-CV ROC-AUC >= 0.95", auc >= 0.95,
            f"pooled {auc:.4f}, fold mean {report.fold_mean['roc_auc']:.4f}")


def test_synthetic_runtime(verdict, effect_run):
    _, elapsed = effect_run
    verdict("synthetic end-to-end runtime < 10 minutes", elapsed < 600, f"{elapsed:.0f} s")


def test_synthetic_null_at_chance(verdict, tmp_path_factory):
    pooled, fold_mean = [], []
    for seed in NULL_SEEDS:
        report = run_pipeline(tmp_path_factory.mktemp(f"null{seed}"), seed=seed, effect=0.0)
        pooled.append(report.pooled["roc_auc"])
        fold_mean.append(report.fold_mean["roc_auc"])
    mean = float(np.mean(pooled))
    verdict("synthetic effect 0: mean ERT ROC-AUC over 5 seeds in [0.45, 0.55]", 0.45 <= mean <= 0.55,
            f"mean {mean:.4f}; per seed {[round(a, 3) for a in pooled]}; fold-mean view {np.mean(fold_mean):.4f}")


# -- oracle suites -------------------------------------------------------------
def concordance(y, s):
    pos, neg = s[y == 1], s[y == 0]
    diff = pos[:, None] - neg[None, :]
    return (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (len(pos) * len(neg))


def test_auc_oracle(verdict):
    rng = np.random.default_rng(0)
    start, worst = time.perf_counter(), 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, n)
        y[:2] = (0, 1)
        s = rng.integers(0, 20, n) / 4.0 if rng.random() < 0.5 else rng.standard_normal(n)
        worst = max(worst, abs(roc_auc(y, s) - concordance(y, s)))
    elapsed = time.perf_counter() - start
    verdict("AUC equals pairwise concordance on 1000 instances (1e-12)", worst <= 1e-12 and elapsed < 60,
            f"max error {worst:.1e}, {elapsed:.1f} s")


def test_ols_oracle(verdict):
    from scipy import stats as sps

    rng = np.random.default_rng(1)
    start, orth, tp = time.perf_counter(), 0.0, 0.0
    for _ in range(100):
        n, p = int(rng.integers(10, 400)), int(rng.integers(1, 8))
        X = rng.standard_normal((n, p)) * rng.uniform(1e-3, 1e3, p) + rng.uniform(-10, 10, p)
        y = X @ rng.standard_normal(p) * rng.uniform(0, 1) + rng.standard_normal(n)
        r = ols_fit(X, y)
        scale = np.abs(X).max(axis=0) * np.abs(r.residuals).max() * n
        orth = max(orth, float(np.max(np.abs(X.T @ r.residuals) / scale)))
        for t, pv in zip(r.t_values, r.p_values):
            tp = max(tp, abs(pv - 2 * sps.t.sf(abs(t), r.df_resid)), abs(t_two_sided_p(t, r.df_resid) - pv))
    elapsed = time.perf_counter() - start
    ok = orth < 1e-6 and tp < 1e-9 and elapsed < 60
    verdict("OLS residual orthogonality and t<->p consistency on 100 regressions", ok,
            f"orthogonality {orth:.1e} (< 1e-6), t/p {tp:.1e} (< 1e-9)")


def test_dwt_energy_oracle(verdict):
    rng = np.random.default_rng(2)
    start, worst = time.perf_counter(), 0.0
    for i in range(1000):
        n = 2 * int(rng.integers(8, 2000))  # energy is exact for even lengths
        x = rng.standard_normal(n) * 10 ** rng.uniform(-6, 3)
        c = dwt_level1(x, ("coif1", "db4")[i % 2])
        e = x @ x
        worst = max(worst, abs(c.approx @ c.approx + c.detail @ c.detail - e) / e)
    elapsed = time.perf_counter() - start
    verdict("DWT energy conservation on 1000 signals (1e-8 relative)", worst <= 1e-8 and elapsed < 60,
            f"max relative error {worst:.1e}")


def test_welch_parseval_oracle(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for fs, seg in ((1000.0, 1000), (1200.0, 1200), (31.25, 62)):
        n = int(5 * fs) * 4
        t = np.arange(n) / fs
        for _ in range(20):
            f0 = rng.uniform(0.1, 0.4) * fs
            sig = rng.uniform(0.5, 5) * np.sin(2 * np.pi * f0 * t + rng.uniform(0, 6.3))
            for x in (sig, rng.standard_normal(n) * rng.uniform(0.1, 10)):
                s = welch_psd(x, fs, WelchConfig(seg, 0.5))
                power = np.sum(s.power) * s.resolution_hz
                worst = max(worst, abs(power / x.var() - 1))
    verdict("Welch Parseval power within 10% (sinusoids, white noise)", worst <= 0.10, f"max deviation {worst:.3f}")


def test_hjorth_sinusoid_oracle(verdict):
    worst_m, worst_c = 0.0, 0.0
    fs = 1000.0
    t = np.arange(5000) / fs
    for f in (1.0, 4.0, 10.0, 25.0, 40.0):
        _, mob, comp = hjorth(np.sin(2 * np.pi * f * t + 0.3), fs)
        worst_m = max(worst_m, abs(mob / (2 * np.pi * f) - 1))
        worst_c = max(worst_c, abs(comp - 1))
    verdict("Hjorth sinusoid: mobility ~ omega, complexity ~ 1 (1%)", worst_m < 0.01 and worst_c < 0.01,
            f"mobility {worst_m:.1e}, complexity {worst_c:.1e}")


def test_higuchi_range_oracle(verdict):
    rng = np.random.default_rng(4)
    lines = [higuchi_fd(a * np.arange(4000.0) + b, 10) for a, b in rng.uniform(-5, 5, (20, 2)) if a != 0]
    noise = [higuchi_fd(rng.standard_normal(4000), 10) for _ in range(20)]
    # a perfect line gives 1 - 2e-16 from the log-log slope; allow for rounding only
    rounding = 1e-12
    ok = all(1.0 - rounding <= v <= 1.05 for v in lines) and all(1.9 <= v <= 2.05 for v in noise)
    verdict("HFD in [1.0, 1.05] for lines and [1.9, 2.05] for white noise", ok,
            f"lines {min(lines):.16f}-{max(lines):.4f}, noise {min(noise):.4f}-{max(noise):.4f}")


# -- group leakage -------------------------------------------------------------
def test_group_leakage_fuzz(verdict):
    rng = np.random.default_rng(5)
    leaks = 0
    for i in range(10_000):
        n_groups = int(rng.integers(2, 80))
        k = int(rng.integers(2, n_groups + 1)) if n_groups > 2 else 2
        sizes = rng.integers(1, 40, n_groups)
        ids = rng.permutation(n_groups)
        groups = np.repeat([f"p{j}" for j in ids], sizes)
        labels = np.repeat(rng.integers(0, 2, n_groups), sizes) if i % 2 else None
        plan = group_kfold_split(groups, min(k, n_groups), int(rng.integers(0, 2**32)), labels=labels)
        seen = sorted(g for fold in plan.test_groups for g in fold)
        leaks += seen != sorted(set(groups.tolist()))
        for f in range(plan.k):
            leaks += bool(set(plan.test_groups[f]) & set(plan.train_groups(f)))
    verdict("group-leakage fuzz: 10,000 FoldPlans with no shared train/test group", leaks == 0, f"{leaks} violations")


# -- determinism ---------------------------------------------------------------
def test_pipeline_determinism(verdict, tmp_path):
    artifacts = []
    for name in ("a", "b"):
        report = run_pipeline(tmp_path / name, seed=11, effect=1.0)
        features = (tmp_path / name / "run" / "features" / "features.npy").read_bytes()
        artifacts.append((features, report.to_json()))
    same = artifacts[0] == artifacts[1]
    verdict("determinism: identical seeds give byte-identical features and EvalReports", same)


# -- published numbers (needs the clinical dataset) ----------------------------
DATASET = os.environ.get("HDSIGNALS_DATASET")


@pytest.mark.skipif(not DATASET, reason="set HDSIGNALS_DATASET to a manifest of the clinical dataset")
def test_published_numbers(verdict, tmp_path):
    base = PipelineConfig(manifest=DATASET, out=str(tmp_path), eval=EvalConfig(k=10, seed=0))
    cmd_preprocess(base)
    cmd_extract(base)
    tuned = cmd_evaluate(base.replace(model=ModelConfig("ert", "tuned")), ["ert"])["ert"].pooled
    verdict("tuned ERT accuracy within 4 points of 91.353%", abs(100 * tuned["accuracy"] - 91.353) <= 4,
            f"{100 * tuned['accuracy']:.3f}%")
    verdict("tuned ERT ROC-AUC within 0.04 of 0.963", abs(tuned["roc_auc"] - 0.963) <= 0.04, f"{tuned['roc_auc']:.4f}")
    reports = cmd_evaluate(base, ["ert", "rf", "lda", "qda", "logreg"])
    auc = {f: r.pooled["roc_auc"] for f, r in reports.items()}
    order = auc["ert"] >= auc["rf"] > auc["lda"] > auc["qda"] > auc["logreg"]
    verdict("default-profile ranking ERT >= RF > LDA > QDA > LogReg", order,
            ", ".join(f"{k} {v:.3f}" for k, v in auc.items()))
