"""Dataset-level validation: correlation statistics against mean-opinion
scores, the four-parameter logistic mapping from raw scores to the MOS
scale, its goodness of fit, and a PSNR baseline.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize, stats
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import DegenerateDataError, DimensionError, FitConvergenceError
from .validation import as_1d_float, check_equal_length


@dataclass(frozen=True)
class ScoredPair:
    """One dataset row: a scored reference/distorted pair with its MOS."""

    ref_id: str
    dist_id: str
    raw_score: float
    mos: float


@dataclass(frozen=True)
class LogisticParams:
    a1: float
    a2: float
    a3: float
    a4: float

    def curve(self, d) -> np.ndarray:
        """Evaluate the fitted logistic at raw scores ``d``."""
        return logistic_curve(np.asarray(d, dtype=np.float64), *self)

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3, self.a4))


@dataclass(frozen=True)
class EvalReport:
    plcc_raw: float
    plcc_fitted: float
    srcc: float
    krcc: float
    r_fit: float
    params: LogisticParams
    n_pairs: int

    def to_dict(self) -> dict:
        return {
            "plcc_raw": self.plcc_raw,
            "plcc_fitted": self.plcc_fitted,
            "srcc": self.srcc,
            "krcc": self.krcc,
            "r_fit": self.r_fit,
            "params": {
                "a1": self.params.a1,
                "a2": self.params.a2,
                "a3": self.params.a3,
                "a4": self.params.a4,
            },
            "n_pairs": self.n_pairs,
        }


def _check_pair(x, y, min_n: int = 3) -> tuple[np.ndarray, np.ndarray]:
    x = as_1d_float(x, "x")
    y = as_1d_float(y, "y")
    check_equal_length(x, y, min_n=min_n)
    if np.ptp(x) == 0:
        raise DegenerateDataError("first array is constant")
    if np.ptp(y) == 0:
        raise DegenerateDataError("second array is constant")
    return x, y


def plcc(x, y) -> float:
    """Sample Pearson linear correlation coefficient."""
    x, y = _check_pair(x, y)
    return float(stats.pearsonr(x, y).statistic)


def srcc(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of mid-ranks
    (ties get average rank)."""
    x, y = _check_pair(x, y)
    return float(stats.spearmanr(x, y).statistic)


def _tie_term(values: np.ndarray) -> int:
    """Sum of t*(t-1)/2 over groups of tied values."""
    _, counts = np.unique(values, return_counts=True)
    return int(np.sum(counts * (counts - 1)) // 2)


def _count_inversions(a: list) -> int:
    """Pairs (i < j) with a[i] > a[j], by merge sort; ties are not inversions."""
    n = len(a)
    if n < 2:
        return 0
    mid = n // 2
    left, right = a[:mid], a[mid:]
    inversions = _count_inversions(left) + _count_inversions(right)
    merged = []
    li = ri = 0
    while li < len(left) and ri < len(right):
        if left[li] <= right[ri]:
            merged.append(left[li])
            li += 1
        else:
            inversions += len(left) - li
            merged.append(right[ri])
            ri += 1
    merged.extend(left[li:])
    merged.extend(right[ri:])
    a[:] = merged
    return inversions


def krcc(x, y) -> float:
    """Kendall tau-b: concordant minus discordant pairs over the
    tie-corrected normalizer.

    Counts are exact integers from an O(n log n) merge-count (sort by x,
    then count strict inversions of y), so small inputs agree bit for bit
    with direct pair enumeration.
    """
    x, y = _check_pair(x, y)
    n = len(x)
    order = np.lexsort((y, x))
    y_sorted = y[order]
    discordant = _count_inversions(list(y_sorted))

    n0 = n * (n - 1) // 2
    xtie = _tie_term(x)
    ytie = _tie_term(y)
    joint = np.rec.fromarrays([x, y])
    ntie = _tie_term(joint)
    con_minus_dis = n0 - xtie - ytie + ntie - 2 * discordant
    return con_minus_dis / math.sqrt(n0 - xtie) / math.sqrt(n0 - ytie)


def logistic_curve(d, a1, a2, a3, a4) -> np.ndarray:
    """Four-parameter monotone regression from raw score to the MOS scale:

        (a1 - a2) / (1 + exp(-(d - a3) / |a4|)) + a2
    """
    z = np.clip(-(np.asarray(d, dtype=np.float64) - a3) / abs(a4), -500.0, 500.0)
    return (a1 - a2) / (1.0 + np.exp(z)) + a2


def fit_logistic(scores, mos, max_iter: int = 20000, trace=None):
    """Least-squares fit of the four-parameter logistic.

    Derivative-free simplex search.  The first start is the standard
    initialization (a1 = max MOS, a2 = min MOS, a3 = median score,
    a4 = stdev/4); a fixed set of scale-aware a3/a4 variants guards
    against the local minima the logistic landscape is known for, and the
    best start is polished with a tight restart.  Deterministic for fixed
    input.  Returns ``(LogisticParams, fitted)``.

    ``trace``, when a list, receives the best-vertex objective after each
    accepted iteration of the polish run (non-increasing by construction).

    Raises FitConvergenceError (carrying the best-so-far params) when the
    iteration budget runs out, DegenerateDataError when MOS or scores are
    constant.
    """
    d = as_1d_float(scores, "scores")
    m = as_1d_float(mos, "mos")
    check_equal_length(d, m, min_n=5)
    if np.ptp(m) == 0:
        raise DegenerateDataError("MOS is constant; nothing to fit")
    if np.ptp(d) == 0:
        raise DegenerateDataError("raw scores are constant; nothing to fit")

    def objective(a) -> float:
        r = logistic_curve(d, *a) - m
        return float(r @ r)

    def simplex(x0, budget, callback=None):
        return optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            callback=callback,
            options={
                "maxiter": budget,
                "maxfev": 2 * budget,
                "xatol": 1e-12,
                "fatol": 1e-14,
            },
        )

    hi, lo = float(m.max()), float(m.min())
    med, spread = float(np.median(d)), float(np.std(d))
    starts = [
        np.array([hi, lo, med, spread / 4.0]),  # standard initialization
        np.array([hi, lo, float(np.mean(d)), spread / 4.0]),
        np.array([hi, lo, med + spread / 2.0, spread / 4.0]),
        np.array([hi, lo, med - spread / 2.0, spread / 4.0]),
        np.array([hi, lo, med, spread]),
    ]
    candidates = [simplex(x0, max(20, max_iter // 10)).x for x0 in starts]
    best = min(candidates, key=objective)

    if trace is not None:
        callback = lambda xk: trace.append(objective(xk))  # noqa: E731
    else:
        callback = None
    # Polish the winning start with restarts: a restart recovers precision
    # when the simplex has collapsed, and a plateaued objective across
    # restarts counts as converged (uncorrelated data pushes the
    # parametrization toward its affine limit, |a4| -> inf, while the
    # fitted curve itself stabilizes).
    converged = False
    prev_objective = None
    for _ in range(4):
        result = simplex(best, max_iter, callback=callback)
        best = result.x
        value = float(result.fun)
        if result.success or (
            prev_objective is not None
            and prev_objective - value <= 1e-8 * max(1.0, abs(value))
        ):
            converged = True
            break
        prev_objective = value
    if not converged:
        raise FitConvergenceError(
            f"logistic fit did not converge within {max_iter} iterations",
            params=LogisticParams(*map(float, best)),
        )
    params = LogisticParams(*map(float, best))
    return params, params.curve(d)


def goodness_r(fitted, mos) -> float:
    """Goodness of fit R = sqrt(1 - RSS/TSS), clamped at 0 for negative
    radicands."""
    fitted = as_1d_float(fitted, "fitted")
    m = as_1d_float(mos, "mos")
    check_equal_length(fitted, m)
    tss = float(np.sum((m - m.mean()) ** 2))
    if tss == 0:
        raise DegenerateDataError("MOS is constant; TSS is zero")
    rss = float(np.sum((m - fitted) ** 2))
    return math.sqrt(max(0.0, 1.0 - rss / tss))


def psnr(ref, dist) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit-range images
    (peak 255).  Identical images return +inf."""
    ref = np.asarray(ref, dtype=np.float64)
    dist = np.asarray(dist, dtype=np.float64)
    if ref.shape != dist.shape:
        raise DimensionError(f"shape mismatch {ref.shape} vs {dist.shape}")
    mse = float(np.mean((ref - dist) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def evaluate_scored(pairs) -> EvalReport:
    """Fit the logistic mapping, then compute all correlations and R."""
    pairs = list(pairs)
    d = np.array([p.raw_score for p in pairs], dtype=np.float64)
    m = np.array([p.mos for p in pairs], dtype=np.float64)
    params, fitted = fit_logistic(d, m)
    return EvalReport(
        plcc_raw=plcc(d, m),
        plcc_fitted=plcc(fitted, m),
        srcc=srcc(d, m),
        krcc=krcc(d, m),
        r_fit=goodness_r(fitted, m),
        params=params,
        n_pairs=len(pairs),
    )


class LogisticMOSFit(BaseEstimator, RegressorMixin):
    """Regressor wrapping :func:`fit_logistic`.

    ``fit(X, y)`` takes raw metric scores and MOS values; ``predict``
    maps raw scores through the fitted curve.
    """

    def __init__(self, max_iter=20000):
        self.max_iter = max_iter

    def fit(self, X, y):
        d = as_1d_float(X, "X")
        self.params_, self.fitted_ = fit_logistic(d, y, max_iter=self.max_iter)
        return self

    def predict(self, X):
        return self.params_.curve(as_1d_float(X, "X"))


# -- manifest / scores / report file formats ---------------------------------

MANIFEST_HEADER = ["ref_path", "dist_path", "mos"]
SCORES_HEADER = ["ref_path", "dist_path", "mos", "score", "error"]


def read_manifest(path) -> list[tuple[Path, Path, float]]:
    """Read a dataset manifest CSV (header ``ref_path,dist_path,mos``);
    paths are resolved relative to the manifest's directory."""
    path = Path(path)
    base = path.parent
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != MANIFEST_HEADER:
            raise ValueError(
                f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{line_no}: expected 3 columns, got {len(row)}")
            try:
                mos = float(row[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: bad MOS value {row[2]!r}") from exc
            rows.append((base / row[0], base / row[1], mos))
    return rows


def write_scores_csv(path, rows) -> None:
    """Write scored rows; ``rows`` holds (ref, dist, mos, score_or_None,
    error_message) tuples.  Scores print with 9 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORES_HEADER)
        for ref, dist, mos, score, error in rows:
            score_text = "" if score is None else f"{score:.9g}"
            writer.writerow([str(ref), str(dist), f"{mos:.9g}", score_text, error])


def read_scores_csv(path) -> list[ScoredPair]:
    """Read scored rows back, skipping rows marked failed."""
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"ref_path", "dist_path", "mos", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: scores CSV must carry columns {sorted(required)}")
        for row in reader:
            if row.get("error") or not row["score"]:
                continue
            pairs.append(
                ScoredPair(
                    ref_id=row["ref_path"],
                    dist_id=row["dist_path"],
                    raw_score=float(row["score"]),
                    mos=float(row["mos"]),
                )
            )
    return pairs


def write_report_json(path, report: EvalReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
