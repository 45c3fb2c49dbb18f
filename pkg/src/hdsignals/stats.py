"""Linear-probability OLS significance tables and grouped feature importance."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import LengthMismatch, RankDeficient, TooFewRows

# -----------------------------------------------------------------------------
# Student-t and F tails via the regularized incomplete beta function
# -----------------------------------------------------------------------------
_FPMIN = 1e-300
_EPS = 1e-16


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    max_iter = 10000 + int(20 * math.sqrt(max(a, b)))
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _stirling_remainder(z: float) -> float:
    # lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2], asymptotic series, z >= 10
    inv = 1.0 / z
    inv2 = inv * inv
    return inv * (1 / 12 - inv2 * (1 / 360 - inv2 * (1 / 1260 - inv2 * (1 / 1680 - inv2 / 1188))))


def log_beta(a: float, b: float) -> float:
    """``ln B(a, b)``; stays accurate when one argument is huge and the other small."""
    small, big = min(a, b), max(a, b)
    if big < 10:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(big) - lgamma(big + small) without subtracting two large numbers
    diff = (
        -(big - 0.5) * math.log1p(small / big)
        - small * math.log(big + small)
        + small
        + _stirling_remainder(big)
        - _stirling_remainder(big + small)
    )
    return math.lgamma(small) + diff


def betainc(a: float, b: float, x: float, x_complement: float | None = None) -> float:
    """Regularized incomplete beta ``I_x(a, b)``.

    ``x_complement`` (= 1 - x) can be supplied when the caller knows it more
    accurately than the subtraction would give.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    xc = 1.0 - x if x_complement is None else x_complement
    if x == 0.0 or xc == 0.0:
        return 0.0 if x == 0.0 else 1.0
    log_x = math.log1p(-xc) if xc < 0.5 else math.log(x)
    log_xc = math.log1p(-x) if x < 0.5 else math.log(xc)
    log_bt = -log_beta(a, b) + a * log_x + b * log_xc
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_bt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_bt) * _betacf(b, a, xc) / b


def t_two_sided_p(t: float, df: float) -> float:
    """``2 * (1 - CDF_t(|t|, df))``."""
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    denom = df + t * t
    return betainc(0.5 * df, 0.5, df / denom, t * t / denom)


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - tail if t >= 0 else tail


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail ``P(F > f)`` of the F(d1, d2) distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    denom = d2 + d1 * f
    return betainc(0.5 * d2, 0.5 * d1, d2 / denom, d1 * f / denom)


# -----------------------------------------------------------------------------
# OLS
# -----------------------------------------------------------------------------
@dataclass
class OlsResult:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    intercept: float
    intercept_se: float
    intercept_t: float
    intercept_p: float
    r_squared: float
    f_statistic: float
    prob_f: float
    log_likelihood: float
    n: int
    p: int
    df_resid: int
    residuals: np.ndarray = field(repr=False)
    degenerate: bool = False
    names: list[str] | None = None


def ols_fit(X, y, add_intercept: bool = True, names: Sequence[str] | None = None, rcond: float = 1e-10) -> OlsResult:
    """Least squares via pivoted QR of the column-standardized design.

    Coefficients and standard errors are mapped back to the original column
    scale. When the residual sum of squares is zero the fit is exact:
    ``degenerate`` is set and t/p values are NaN.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if len(y) != n:
        raise LengthMismatch(f"X has {n} rows, y has {len(y)}")
    df = n - p - (1 if add_intercept else 0)
    if df <= 0:
        raise TooFewRows(f"{n} rows leave no residual degrees of freedom for {p} regressors")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("X and y must be finite")
    label = (lambda j: names[j]) if names is not None else (lambda j: f"x{j}")

    if add_intercept:
        center = X.mean(axis=0)
        scale = X.std(axis=0)
        y_bar = y.mean()
    else:
        center = np.zeros(p)
        scale = np.sqrt(np.mean(X**2, axis=0))
        y_bar = 0.0
    flat = np.flatnonzero(scale == 0)
    if flat.size:
        raise RankDeficient(
            f"constant column(s) collinear with the intercept: {[label(j) for j in flat]}",
            [label(j) for j in flat],
            flat,
        )
    Z = (X - center) / scale
    yc = y - y_bar

    Q, R, piv = linalg.qr(Z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rcond * diag[0])) if p else 0
    if rank < p:
        bad = sorted(int(j) for j in piv[rank:])
        raise RankDeficient(
            f"design is rank deficient; dependent column(s): {[label(j) for j in bad]}",
            [label(j) for j in bad],
            bad,
        )

    beta_piv = linalg.solve_triangular(R, Q.T @ yc)
    beta_std = np.empty(p)
    beta_std[piv] = beta_piv
    resid = yc - Z @ beta_std
    sse = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2)) if add_intercept else float(y @ y)

    r_inv = linalg.solve_triangular(R, np.eye(p))
    xtx_inv_piv = r_inv @ r_inv.T
    xtx_inv = np.empty_like(xtx_inv_piv)
    xtx_inv[np.ix_(piv, piv)] = xtx_inv_piv

    sigma2 = sse / df
    coef = beta_std / scale
    se = np.sqrt(sigma2 * np.diag(xtx_inv)) / scale
    if add_intercept:
        a = center / scale
        intercept = float(y_bar - coef @ center)
        intercept_se = float(math.sqrt(sigma2 / n + sigma2 * a @ xtx_inv @ a))
    else:
        intercept, intercept_se = 0.0, 0.0

    degenerate = sse <= (np.finfo(float).eps * n) ** 2 * max(sst, 1.0)
    if degenerate:
        t = np.full(p, np.nan)
        pv = np.full(p, np.nan)
        it, ip = math.nan, math.nan
        f_stat, prob_f = math.inf, 0.0
        loglik = math.inf
    else:
        t = coef / se
        pv = np.array([t_two_sided_p(v, df) for v in t])
        if add_intercept:
            it = intercept / intercept_se
            ip = t_two_sided_p(it, df)
        else:
            it, ip = math.nan, math.nan
        f_stat = ((sst - sse) / p) / sigma2
        prob_f = f_sf(f_stat, p, df)
        loglik = -0.5 * n * (math.log(2 * math.pi) + math.log(sse / n) + 1.0)

    return OlsResult(
        coefficients=coef,
        standard_errors=se,
        t_values=t,
        p_values=pv,
        intercept=intercept,
        intercept_se=intercept_se,
        intercept_t=it,
        intercept_p=ip,
        r_squared=1.0 - sse / sst if sst > 0 else 1.0,
        f_statistic=float(f_stat),
        prob_f=float(prob_f),
        log_likelihood=float(loglik),
        n=n,
        p=p,
        df_resid=df,
        residuals=resid,
        degenerate=bool(degenerate),
        names=list(names) if names is not None else None,
    )


def ols_fit_pruned(X, y, names: Sequence[str] | None = None) -> tuple[OlsResult, list[int]]:
    """Fit OLS, dropping constant or linearly dependent columns until the design
    has full rank. Returns a full-width result (NaN for dropped columns) and the
    sorted indices that were dropped."""
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]
    keep = np.arange(p)
    dropped: list[int] = []
    while True:
        try:
            r = ols_fit(X[:, keep], y, names=[names[j] for j in keep])
            break
        except RankDeficient as exc:
            bad = keep[exc.indices]
            dropped.extend(int(j) for j in bad)
            keep = np.setdiff1d(keep, bad)
    if not dropped:
        return r, []

    def widen(v):
        out = np.full(p, np.nan)
        out[keep] = v
        return out

    r.coefficients = widen(r.coefficients)
    r.standard_errors = widen(r.standard_errors)
    r.t_values = widen(r.t_values)
    r.p_values = widen(r.p_values)
    r.names = names
    return r, sorted(dropped)


# -----------------------------------------------------------------------------
# p-value buckets
# -----------------------------------------------------------------------------
ZERO_P = 1e-300


@dataclass(frozen=True)
class Bucket:
    label: str
    low: float
    high: float
    count: int
    p_mean: float
    p_sd: float
    t_mean: float
    t_sd: float
    se_mean: float
    se_sd: float


NOT_ESTIMABLE = "not estimable"


def p_value_buckets(r: OlsResult, thresholds: Sequence[float] = (0.0, 0.001, 0.01, 0.05)) -> list[Bucket]:
    """Partition features by p-value: ``p = 0`` (below 1e-300), ``p < t`` for each
    further threshold, and a final ``p > last`` bucket. Buckets are half-open
    ``[low, high)``; each reports count and mean/SD of p, t and SE.

    Features whose p-value is NaN (dropped as collinear, or a degenerate fit)
    land in an extra ``not estimable`` bucket, emitted only when non-empty, so
    the counts always sum to the feature count.
    """
    cuts = [ZERO_P if th == 0 else float(th) for th in thresholds]
    labels = [("p = 0" if th == 0 else f"p < {th:g}") for th in thresholds] + [f"p > {thresholds[-1]:g}"]
    edges = [0.0] + cuts + [math.inf]
    p = np.asarray(r.p_values)
    t = np.asarray(r.t_values)
    se = np.asarray(r.standard_errors)
    ok = np.isfinite(p)
    masks = [(label, lo, hi, ok & (p >= lo) & (p < hi)) for label, lo, hi in zip(labels, edges[:-1], edges[1:])]
    if not ok.all():
        masks.append((NOT_ESTIMABLE, math.nan, math.nan, ~ok))
    out = []
    for label, lo, hi, m in masks:
        cnt = int(m.sum())

        def ms(v):
            v = v[m]
            return (float(v.mean()), float(v.std())) if cnt and np.isfinite(v).all() else (math.nan, math.nan)

        out.append(Bucket(label, lo, hi, cnt, *ms(p), *ms(t), *ms(se)))
    return out


# -----------------------------------------------------------------------------
# grouped importance
# -----------------------------------------------------------------------------
BASES = ("FeatureFamily", "Signal", "EegChannel", "EegPsdBand")


@dataclass(frozen=True)
class GroupStat:
    key: str
    mean: float
    se: float
    count: int


@dataclass(frozen=True)
class ImportanceGroupReport:
    basis: str
    groups: tuple[GroupStat, ...]


def _basis_key(d, basis: str):
    if basis == "FeatureFamily":
        return d.family
    if basis == "Signal":
        return d.modality
    if basis == "EegChannel":
        return d.channel if d.modality == "EEG" else None
    if basis == "EegPsdBand":
        return d.detail if d.modality == "EEG" and d.family == "PSD" else None
    raise ValueError(f"basis must be one of {BASES}, got {basis!r}")


def grouped_importance(importances, descriptors, basis: str) -> ImportanceGroupReport:
    """Mean importance and SE (population SD / sqrt(count)) per group, sorted
    by mean, largest first. EEG-only bases ignore non-EEG columns."""
    imp = np.asarray(importances, dtype=np.float64)
    if len(imp) != len(descriptors):
        raise LengthMismatch(f"{len(imp)} importances for {len(descriptors)} descriptors")
    members: dict[str, list[int]] = {}
    for i, d in enumerate(descriptors):
        key = _basis_key(d, basis)
        if key is not None:
            members.setdefault(key, []).append(i)
    stats = []
    for key, idx in members.items():
        v = imp[idx]
        stats.append(GroupStat(key, float(v.mean()), float(v.std() / math.sqrt(len(v))), len(v)))
    stats.sort(key=lambda s: (-s.mean, s.key))
    return ImportanceGroupReport(basis, tuple(stats))


# -----------------------------------------------------------------------------
# CSV writers
# -----------------------------------------------------------------------------
def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v)) if isinstance(v, float) else v


def write_significance_csv(r: OlsResult, path) -> None:
    width = len(r.coefficients)
    names = r.names or [f"x{j}" for j in range(width)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "name", "coef", "se", "t", "p"])
        w.writerow(["", "intercept", *map(_fmt, (r.intercept, r.intercept_se, r.intercept_t, r.intercept_p))])
        for j in range(width):
            vals = (r.coefficients[j], r.standard_errors[j], r.t_values[j], r.p_values[j])
            w.writerow([j, names[j], *(_fmt(float(v)) for v in vals)])


def write_buckets_csv(buckets: Sequence[Bucket], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["range", "count", "p_mean", "p_sd", "t_mean", "t_sd", "se_mean", "se_sd"])
        for b in buckets:
            w.writerow([b.label, b.count, *(_fmt(v) for v in (b.p_mean, b.p_sd, b.t_mean, b.t_sd, b.se_mean, b.se_sd))])


def write_importance_csv(report: ImportanceGroupReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "mean_importance", "se", "count"])
        for g in report.groups:
            w.writerow([g.key, repr(g.mean), repr(g.se), g.count])


def ols_summary(r: OlsResult) -> dict:
    return {
        "n": r.n,
        "p": r.p,
        "df_resid": r.df_resid,
        "r_squared": r.r_squared,
        "f_statistic": r.f_statistic,
        "prob_f": r.prob_f,
        "log_likelihood": r.log_likelihood,
        "degenerate": r.degenerate,
    }


def basis_filename(basis: str) -> str:
    snake = "".join("_" + c.lower() if c.isupper() else c for c in basis).lstrip("_")
    return f"importance_by_{snake}.csv"
