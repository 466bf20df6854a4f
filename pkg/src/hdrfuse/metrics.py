"""Region statistics and clipping counts for fused results."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .exposure import ExposurePlan
from .image_io import LdrImage
from .radiometry import REC709, log_luminance, srgb_decode
from .segmentation import Segmentation
from .tone_curve import reinhard

CLIP_LOW = 1 / 255
CLIP_HIGH = 254 / 255


@dataclass
class RegionStat:
    m: int
    pixels: int
    mu: float
    mu_target: float
    dt: float
    target_log_mean: float
    achieved_log_mean: float | None
    achieved_srgb_mean: float | None

    @property
    def deviation(self) -> float | None:
        if self.achieved_log_mean is None:
            return None
        return self.achieved_log_mean - self.target_log_mean


@dataclass
class RegionReport:
    regions: list
    clipped_low: float
    clipped_high: float
    ordering_preserved: bool | None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        regions = []
        for r in self.regions:
            entry = asdict(r)
            entry["m"] = r.m + 1  # 1-based in the serialised report
            entry["deviation"] = r.deviation
            regions.append(entry)
        return {
            "regions": regions,
            "clipped": {"low": self.clipped_low, "high": self.clipped_high},
            "ordering_preserved": self.ordering_preserved,
            "warnings": list(self.warnings),
        }


def display_luminance(image: LdrImage) -> np.ndarray:
    """Linear display luminance of an sRGB-encoded image."""
    return srgb_decode(image.data) @ REC709


def clipped_fraction(image: LdrImage) -> tuple[float, float]:
    """Fractions of pixels crushed to black / blown to white in every channel."""
    data = image.data
    low = np.all(data <= CLIP_LOW, axis=2).mean()
    high = np.all(data >= CLIP_HIGH, axis=2).mean()
    return float(low), float(high)


def region_stats(fused: LdrImage, seg: Segmentation, plan: ExposurePlan) -> RegionReport:
    """Compare each region's achieved display mean against its tone-mapped target.

    Achieved means are geometric means of sRGB-decoded luminance; targets are
    ``f(exp(mu_target))``. ``ordering_preserved`` is true when the achieved
    means rise strictly with region index (empty regions skipped).
    """
    if seg.labels.shape != fused.data.shape[:2]:
        raise ValueError("segmentation and image differ in size")
    lum = display_luminance(fused)
    log_lum = log_luminance(lum)
    srgb_luma = fused.data.astype(np.float64) @ REC709
    params = plan.tone_params
    counts = seg.counts()

    regions = []
    for m in range(plan.n_regions):
        mask = seg.region(m)
        n = int(counts[m]) if m < len(counts) else 0
        target = float(np.log(max(reinhard(np.exp(plan.mu_target[m]), params), 1e-9)))
        regions.append(RegionStat(
            m=m,
            pixels=n,
            mu=float(plan.mu[m]),
            mu_target=float(plan.mu_target[m]),
            dt=float(plan.dt[m]),
            target_log_mean=target,
            achieved_log_mean=float(log_lum[mask].mean()) if n else None,
            achieved_srgb_mean=float(srgb_luma[mask].mean()) if n else None,
        ))

    achieved = [r.achieved_log_mean for r in regions if r.achieved_log_mean is not None]
    ordering = bool(np.all(np.diff(achieved) > 0))
    low, high = clipped_fraction(fused)
    return RegionReport(regions, low, high, ordering, list(plan.warnings))
