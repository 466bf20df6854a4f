"""Exposure planning and synthesis of the multi-exposure stack."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .image_io import HdrImage, LdrImage
from .radiometry import GRAY, LuminanceMap, geometric_mean
from .segmentation import Segmentation
from .tone_curve import ToneCurveParams, recolor, reinhard


class EmptyRegionWarning(UserWarning):
    pass


@dataclass
class ExposurePlan:
    """Per-region log means, log targets and exposure factors.

    ``mu`` and ``mu_target`` are natural-log luminances; ``m_ref`` is 0-based
    (``None`` when no reference region is used).
    """

    mu: np.ndarray
    mu_target: np.ndarray
    dt: np.ndarray
    m_ref: int | None = None
    v_min: float = -3.0
    v_max: float = 1.5
    v_white: float = 2.5
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.mu_target = np.asarray(self.mu_target, dtype=np.float64)
        self.dt = np.asarray(self.dt, dtype=np.float64)
        if not len(self.mu) == len(self.mu_target) == len(self.dt):
            raise ValueError("mu, mu_target and dt must have equal length")

    @property
    def n_regions(self) -> int:
        return len(self.mu)

    @property
    def tone_params(self) -> ToneCurveParams:
        return ToneCurveParams.from_ev(self.v_white)


@dataclass
class ExposureStack:
    images: list
    lum: list
    plan: ExposurePlan
    weights: object = None


def target_means(mu, m_ref: int, v_min: float = -3.0, v_max: float = 1.5,
                 gray: float = GRAY) -> np.ndarray:
    """Log-domain target mean for every region.

    The darkest and brightest regions are pinned at ``v_min`` and ``v_max``
    EV around middle gray, the reference region keeps its own mean, and the
    regions in between are spaced evenly on either side of the reference.
    If the reference is itself the darkest or brightest region, its own mean
    replaces the pinned endpoint on that side.

    Parameters
    ----------
    mu : array_like
        Ascending region means (natural-log luminance).
    m_ref : int
        0-based index of the reference region.
    v_min, v_max : float
        Endpoint exposures in EV relative to ``gray``.

    Returns
    -------
    ndarray
        Targets, same length as ``mu``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    m = len(mu)
    if m == 0:
        raise ValueError("no regions")
    if np.any(np.diff(mu) < 0):
        raise ValueError("region means must be sorted ascending")
    if not 0 <= m_ref < m:
        raise ValueError(f"reference index {m_ref} out of range for {m} regions")

    low = np.log(2.0 ** v_min * gray)
    high = np.log(2.0 ** v_max * gray)
    anchor = mu[m_ref]
    target = np.empty(m)
    target[m_ref] = anchor
    if m_ref > 0:
        step = (anchor - low) / m_ref
        for k in range(m_ref):
            target[k] = step * k + low
    if m_ref < m - 1:
        step = (high - anchor) / (m - 1 - m_ref)
        for k in range(m_ref + 1, m):
            target[k] = step * (k - m_ref) + anchor
        target[m - 1] = high
    return target


def exposure_factors(mu, mu_target) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    mu_target = np.asarray(mu_target, dtype=np.float64)
    if mu.shape != mu_target.shape:
        raise ValueError("mu and mu_target differ in length")
    return np.exp(mu_target - mu)


def plan_exposures(mu, m_ref: int, v_min: float = -3.0, v_max: float = 1.5,
                   v_white: float = 2.5) -> ExposurePlan:
    """Targets and factors for the proposed compensation, with sanity warnings."""
    mu = np.asarray(mu, dtype=np.float64)
    target = target_means(mu, m_ref, v_min, v_max)
    notes = []
    if len(mu) > 1 and m_ref in (0, len(mu) - 1):
        side = "darkest" if m_ref == 0 else "brightest"
        notes.append(f"reference region is the {side}; its own mean replaces the "
                     f"{'v_min' if m_ref == 0 else 'v_max'} endpoint")
    if np.any(np.diff(target) <= 0):
        notes.append("target means are not strictly ascending; region order may invert")
    return ExposurePlan(mu=mu, mu_target=target, dt=exposure_factors(mu, target),
                        m_ref=m_ref, v_min=v_min, v_max=v_max, v_white=v_white,
                        warnings=notes)


def conventional_factors(world: LuminanceMap, seg: Segmentation, gray: float = GRAY) -> np.ndarray:
    """Per-region factors that bring each region's geometric mean to ``gray``.

    Empty regions get ``nan`` and raise an :class:`EmptyRegionWarning`; the
    caller drops them from the stack.
    """
    dt = np.full(seg.n_regions, np.nan)
    for m in range(seg.n_regions):
        mask = seg.region(m)
        if not mask.any():
            warnings.warn(f"region {m} is empty; its exposure is dropped",
                          EmptyRegionWarning, stacklevel=2)
            continue
        dt[m] = gray / geometric_mean(world.values, mask)
    return dt


def render_exposure(lum: LuminanceMap, dt: float, params: ToneCurveParams) -> LuminanceMap:
    """Display luminance of one exposure: ``f(l * dt)``."""
    if lum.domain == "display":
        raise ValueError("cannot re-expose display luminance")
    if not dt > 0:
        raise ValueError("exposure factor must be positive")
    return LuminanceMap(reinhard(lum.values * dt, params), "display")


def build_stack(image: HdrImage, world: LuminanceMap, lum_m, plan: ExposurePlan) -> ExposureStack:
    """sRGB exposure images carrying each display luminance in the source colours."""
    images = []
    for lum in lum_m:
        if lum.shape != world.shape or world.shape != image.data.shape[:2]:
            raise ValueError("stack inputs disagree in size")
        images.append(LdrImage(recolor(image.data, world.values, lum.values)))
    return ExposureStack(images=images, lum=list(lum_m), plan=plan)
