"""The DeepWSD metric: patchwise 1D Wasserstein distances over the six
comparison stages (raw pixels plus five backbone feature stages), an
adaptively weighted Euclidean term, and the log-combined final score.

Higher scores mean worse predicted quality; identical inputs score
``log(log_epsilon)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .backbone import FeatureStack, VGG16Features
from .exceptions import DimensionError
from .validation import as_chw, check_same_shape

N_STAGES = 6


@dataclass(frozen=True)
class MetricConfig:
    """Knobs of the metric.

    ``order`` is the exponent of the Wasserstein distance (1 or 2);
    ``patch_size`` the side of the square pixel/feature patches.  The
    ``use_*`` flags switch individual terms off: disabling the pixel
    stage drops stage 0, disabling feature stages drops stages 1-5, and
    disabling both feature stages and the Euclidean term reduces the
    metric to pixel-domain Wasserstein only.
    """

    order: int = 2
    patch_size: int = 4
    use_adaptive_weight: bool = True
    use_pixel_stage: bool = True
    use_feature_stages: bool = True
    use_euclidean_term: bool = True
    log_epsilon: float = 1e-12

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.patch_size < 1:
            raise ValueError(f"patch_size must be positive, got {self.patch_size}")
        if not (self.use_pixel_stage or self.use_feature_stages):
            raise ValueError("at least one of pixel stage / feature stages must be active")
        if not self.log_epsilon > 0:
            raise ValueError(f"log_epsilon must be positive, got {self.log_epsilon}")

    def active_stages(self) -> tuple[int, ...]:
        stages = ()
        if self.use_pixel_stage:
            stages += (0,)
        if self.use_feature_stages:
            stages += (1, 2, 3, 4, 5)
        return stages


@dataclass(frozen=True)
class ScoreBreakdown:
    """Per-stage terms and aggregates of one metric evaluation.

    Inactive stages report zeros.  ``d_wsd`` is the sum of active
    per-stage Wasserstein values, ``d_eul`` the sum of active weighted
    Euclidean products, and ``score = log(max(eps, (d_wsd + d_eul)/6))``.
    """

    per_stage_wsd: tuple[float, ...]
    per_stage_eul: tuple[float, ...]
    per_stage_g: tuple[float, ...]
    d_wsd: float
    d_eul: float
    score: float
    active_stages: tuple[int, ...] = field(default=tuple(range(N_STAGES)))


def wasserstein_1d(a, b, order: int = 2) -> float:
    """Closed-form 1D Wasserstein distance between two equal-size samples.

    Both samples are sorted internally, so the raw sample order never
    matters.  With sorted values a_(i), b_(i) the distance is

        ((1/n) * sum_i |a_(i) - b_(i)|**order) ** (1/order)

    which is the L^order distance between the two empirical quantile
    functions over the unit interval, and equals the minimum over all
    pairings of the samples.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size != b.size:
        raise DimensionError(f"sample counts differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise DimensionError("empty samples")
    d = np.abs(a - b)
    if order == 1:
        return float(np.mean(d))
    return float(np.sqrt(np.mean(d * d)))


def _patch_matrix(x: np.ndarray, patch_size: int) -> np.ndarray:
    """Tile each channel into non-overlapping patches, one row per patch.

    Bottom/right remainders that do not fill a whole patch are dropped.
    Returns shape (channels * blocks_y * blocks_x, patch_size**2).
    """
    c, h, w = x.shape
    p = patch_size
    nh, nw = h // p, w // p
    if nh < 1 or nw < 1:
        raise DimensionError(f"stage is {h}x{w}, smaller than patch size {p}")
    x = x[:, : nh * p, : nw * p]
    return (
        x.reshape(c, nh, p, nw, p)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c * nh * nw, p * p)
    )


def stage_wsd(p: np.ndarray, q: np.ndarray, config: MetricConfig | None = None) -> float:
    """Mean patchwise Wasserstein distance between two same-shape stages.

    Each channel is tiled into ``patch_size`` x ``patch_size`` blocks and
    corresponding (channel, block) patches are compared; the result is
    the unweighted mean over all pairs.  Reduction order is fixed, so the
    value is reproducible bit for bit.
    """
    config = config or MetricConfig()
    p = as_chw(p, "stage p")
    q = as_chw(q, "stage q")
    check_same_shape(p, q, "stage_wsd")
    a = np.sort(_patch_matrix(p, config.patch_size), axis=1)
    b = np.sort(_patch_matrix(q, config.patch_size), axis=1)
    d = np.abs(a - b)
    if config.order == 1:
        per_patch = np.mean(d, axis=1, dtype=np.float64)
    else:
        # squares in float32, accumulation in float64 (pairwise, fixed order)
        per_patch = np.sqrt(np.mean(d * d, axis=1, dtype=np.float64))
    return float(np.mean(per_patch))


def g_weight(s):
    """Adaptive weight g(s) = 1 / ((s+10)^2 * sqrt(exp(-1/(s+10)))).

    Strictly positive and strictly decreasing for s >= 0: large
    Wasserstein distances (severe distortion) suppress the Euclidean
    fidelity term, small ones let it contribute.  Accepts scalars or
    arrays.
    """
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0):
        raise ValueError("g_weight is defined for s >= 0")
    t = s_arr + 10.0
    out = 1.0 / (t * t * np.sqrt(np.exp(-1.0 / t)))
    return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out


def euclidean_norm(p: np.ndarray, q: np.ndarray) -> float:
    """Plain L2 norm of the flattened elementwise difference.

    No normalization by element count: the adaptive weight and the final
    log absorb the scale.
    """
    p = as_chw(p, "tensor p")
    q = as_chw(q, "tensor q")
    check_same_shape(p, q, "euclidean_norm")
    d = (p - q).ravel()
    return float(np.sqrt(np.sum(d * d, dtype=np.float64)))


def deepwsd_score(
    ref_stack: FeatureStack,
    dist_stack: FeatureStack,
    config: MetricConfig | None = None,
) -> ScoreBreakdown:
    """Combine per-stage Wasserstein and weighted Euclidean terms into the
    final score.

    For each active stage i: w_i = stage_wsd, e_i = euclidean_norm and
    g_i = g_weight(w_i) (or 1 with the adaptive weight disabled).  Then
    D_wsd = sum(w_i), D_eul = sum(g_i * e_i) and

        score = log(max(log_epsilon, (D_wsd + D_eul) / 6))

    The divisor stays 6 regardless of which stages are active, so the
    ablation flags only remove terms and never rescale the others.
    """
    config = config or MetricConfig()
    w = [0.0] * N_STAGES
    e = [0.0] * N_STAGES
    g = [0.0] * N_STAGES
    active = config.active_stages()
    for i in active:
        p, q = ref_stack.stages[i], dist_stack.stages[i]
        if p.shape != q.shape:
            raise DimensionError(
                f"stage {i} ({ref_stack.stage_names[i]}): shape mismatch "
                f"{p.shape} vs {q.shape}"
            )
        w[i] = stage_wsd(p, q, config)
        g[i] = g_weight(w[i]) if config.use_adaptive_weight else 1.0
        if config.use_euclidean_term:
            e[i] = euclidean_norm(p, q)
    d_wsd = float(sum(w[i] for i in active))
    d_eul = float(sum(g[i] * e[i] for i in active))
    score = math.log(max(config.log_epsilon, (d_wsd + d_eul) / 6.0))
    return ScoreBreakdown(
        per_stage_wsd=tuple(w),
        per_stage_eul=tuple(e),
        per_stage_g=tuple(g),
        d_wsd=d_wsd,
        d_eul=d_eul,
        score=score,
        active_stages=active,
    )


class DeepWSD(BaseEstimator):
    """Estimator-style front end for the metric.

    Parameters mirror :class:`MetricConfig` plus the weight source.
    ``fit`` loads and validates the weight archive; ``score_pair``
    returns the full :class:`ScoreBreakdown` for one image pair and
    ``predict`` maps ``(ref, dist)`` pairs to final scores (higher means
    worse predicted quality).
    """

    def __init__(
        self,
        weights_path=None,
        archive=None,
        order=2,
        patch_size=4,
        use_adaptive_weight=True,
        use_pixel_stage=True,
        use_feature_stages=True,
        use_euclidean_term=True,
        log_epsilon=1e-12,
    ):
        self.weights_path = weights_path
        self.archive = archive
        self.order = order
        self.patch_size = patch_size
        self.use_adaptive_weight = use_adaptive_weight
        self.use_pixel_stage = use_pixel_stage
        self.use_feature_stages = use_feature_stages
        self.use_euclidean_term = use_euclidean_term
        self.log_epsilon = log_epsilon

    def config(self) -> MetricConfig:
        return MetricConfig(
            order=self.order,
            patch_size=self.patch_size,
            use_adaptive_weight=self.use_adaptive_weight,
            use_pixel_stage=self.use_pixel_stage,
            use_feature_stages=self.use_feature_stages,
            use_euclidean_term=self.use_euclidean_term,
            log_epsilon=self.log_epsilon,
        )

    def fit(self, X=None, y=None):
        self.extractor_ = VGG16Features(
            weights_path=self.weights_path, archive=self.archive
        ).fit()
        return self

    def _ensure_fitted(self):
        if not hasattr(self, "extractor_"):
            self.fit()

    def score_pair(self, ref, dist) -> ScoreBreakdown:
        self._ensure_fitted()
        ref_stack = self.extractor_.transform(np.asarray(ref))
        dist_stack = self.extractor_.transform(np.asarray(dist))
        return deepwsd_score(ref_stack, dist_stack, self.config())

    def predict(self, pairs) -> np.ndarray:
        return np.array([self.score_pair(r, d).score for r, d in pairs], dtype=np.float64)
