"""End-to-end tone mapping: global, conventional and proposed methods."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import exposure as exp_
from .fusion import WeightMaps, auto_levels, fuse, max_levels, mertens_weights, proposed_weights
from .image_io import HdrImage, LdrImage
from .metrics import RegionReport, clipped_fraction, region_stats
from .radiometry import GRAY, LuminanceMap, geometric_mean, log_luminance, luminance_of, normalize_to_zero_ev
from .segmentation import EMConfig, Segmentation, assign_regions, fit_gmm, labels_monotone, select_reference
from .tone_curve import ToneCurveParams, global_tonemap

logger = logging.getLogger(__name__)

METHODS = ("global", "conventional", "proposed")

# how each method weights its exposure stack, echoed in the JSON report
WEIGHTING = {
    "global": None,
    "conventional": "contrast x saturation x well-exposedness, all exponents 1",
    "proposed": "exp(-d^2) softmax, d = srgb(exposure luminance) - srgb(f(exp(target)))",
}


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "proposed"
    segments: int = 4
    v_min: float = -3.0
    v_max: float = 1.5
    v_white: float = 2.5
    key: float = GRAY
    levels: int | None = None
    seed: int | None = None
    restarts: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 1 <= self.segments <= 8:
            raise ValueError("segments must lie in [1, 8]")
        if not self.v_min < 0 < self.v_max:
            raise ValueError("need v_min < 0 < v_max")
        if not 0 < self.key <= 1:
            raise ValueError("key must lie in (0, 1]")
        if self.levels is not None and self.levels < 1:
            raise ValueError("levels must be positive")

    @property
    def tone_params(self) -> ToneCurveParams:
        return ToneCurveParams.from_ev(self.v_white, self.key)

    def em_config(self) -> EMConfig:
        return EMConfig(restarts=self.restarts, seed=self.seed)


@dataclass
class PipelineResult:
    image: LdrImage
    report: RegionReport
    stack: exp_.ExposureStack | None = None
    segmentation: Segmentation | None = None

    def report_dict(self, config: PipelineConfig) -> dict:
        out = {"method": config.method, "config": asdict(config), "weighting": WEIGHTING[config.method]}
        out.update(self.report.to_dict())
        return _json_safe(out)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _levels(cfg: PipelineConfig, image: HdrImage) -> int:
    if cfg.levels is None:
        return auto_levels(image.height, image.width)
    return min(cfg.levels, max_levels(image.height, image.width))


def _segment(scaled: LuminanceMap, cfg: PipelineConfig):
    samples = log_luminance(scaled.values)
    model = fit_gmm(samples, cfg.segments, cfg.em_config())
    seg = assign_regions(scaled, model)
    notes = []
    if not labels_monotone(model, samples.min(), samples.max()):
        notes.append("region labels are not monotone in luminance; a wide component owns both tails")
    return model, seg, notes


def _fallback(image: HdrImage, cfg: PipelineConfig, seg: Segmentation, reason: str) -> PipelineResult:
    logger.warning("%s; falling back to global tone mapping", reason)
    fused = global_tonemap(image, cfg.tone_params)
    low, high = clipped_fraction(fused)
    report = RegionReport([], low, high, None,
                          [f"{reason}; fell back to global tone mapping"])
    return PipelineResult(fused, report, segmentation=seg)


def run_global(image: HdrImage, cfg: PipelineConfig = PipelineConfig(method="global")) -> PipelineResult:
    fused = global_tonemap(image, cfg.tone_params)
    low, high = clipped_fraction(fused)
    return PipelineResult(fused, RegionReport([], low, high, None))


def run_proposed(image: HdrImage, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Segment, plan region exposures, synthesise the stack and fuse it.

    Falls back to :func:`global_tonemap` when ``segments >= 2`` but fewer
    than two regions receive pixels.
    """
    world = luminance_of(image)
    scaled, _ = normalize_to_zero_ev(world)
    model, seg, notes = _segment(scaled, cfg)
    if cfg.segments > 1 and np.count_nonzero(seg.counts()) < 2:
        return _fallback(image, cfg, seg, "segmentation collapsed to a single region")

    seg.m_ref = select_reference(model)
    plan = exp_.plan_exposures(model.mu, seg.m_ref, cfg.v_min, cfg.v_max, cfg.v_white)
    plan.warnings[:0] = notes
    params = plan.tone_params
    lum = [exp_.render_exposure(scaled, dt, params) for dt in plan.dt]
    stack = exp_.build_stack(image, world, lum, plan)
    stack.weights = proposed_weights(lum, plan.mu_target, params)
    fused = fuse(stack.images, stack.weights, _levels(cfg, image))
    return PipelineResult(fused, region_stats(fused, seg, plan), stack, seg)


def run_conventional(image: HdrImage, cfg: PipelineConfig = PipelineConfig(method="conventional")) -> PipelineResult:
    """Expose every region to middle gray and fuse with exposure-quality weights."""
    world = luminance_of(image)
    scaled, _ = normalize_to_zero_ev(world)
    model, seg, notes = _segment(scaled, cfg)
    if cfg.segments > 1 and np.count_nonzero(seg.counts()) < 2:
        return _fallback(image, cfg, seg, "segmentation collapsed to a single region")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", exp_.EmptyRegionWarning)
        dt = exp_.conventional_factors(world, seg)
    notes.extend(str(w.message) for w in caught)

    mu = np.array([np.log(geometric_mean(world.values, seg.region(m))) if np.isfinite(dt[m]) else np.nan
                   for m in range(seg.n_regions)])
    plan = exp_.ExposurePlan(mu=mu, mu_target=np.full(len(mu), np.log(GRAY)), dt=dt,
                             v_min=cfg.v_min, v_max=cfg.v_max, v_white=cfg.v_white,
                             warnings=notes)
    params = plan.tone_params
    kept = [m for m in range(len(dt)) if np.isfinite(dt[m])]
    lum = [exp_.render_exposure(world, dt[m], params) for m in kept]
    stack = exp_.build_stack(image, world, lum, plan)
    stack.weights = mertens_weights(stack.images)
    fused = fuse(stack.images, stack.weights, _levels(cfg, image))
    return PipelineResult(fused, region_stats(fused, seg, plan), stack, seg)


def run(image: HdrImage, cfg: PipelineConfig) -> PipelineResult:
    runner = {"global": run_global, "conventional": run_conventional, "proposed": run_proposed}
    return runner[cfg.method](image, cfg)


def weight_images(weights: WeightMaps) -> list:
    """Gray display images of each weight map, for debug dumps."""
    return [LdrImage(np.repeat(w[..., None], 3, axis=2)) for w in weights.weights]
