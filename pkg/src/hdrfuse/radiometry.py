"""Luminance, log-domain statistics and the sRGB transfer curve."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .image_io import HdrImage

GRAY = 0.18
LOG_EPS = 1e-9
REC709 = np.array([0.2126, 0.7152, 0.0722])

# Crossing point of the linear and power segments. The rounded 0.0031308
# leaves a 3e-8 downward step there, so the curve would not be invertible.
SRGB_LINEAR_BREAK = 0.0031306684425005393
SRGB_ENCODED_BREAK = 12.92 * SRGB_LINEAR_BREAK

_DOMAINS = ("world", "scaled", "display")


class DegenerateInputWarning(UserWarning):
    """Input carries no usable luminance (e.g. an all-black frame)."""


@dataclass
class LuminanceMap:
    """Per-pixel luminance tagged with the pipeline stage it belongs to."""

    values: np.ndarray
    domain: str = "world"

    def __post_init__(self):
        if self.domain not in _DOMAINS:
            raise ValueError(f"unknown luminance domain {self.domain!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("luminance map must be 2-D")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("luminance must be finite and non-negative")
        self.values = values

    @property
    def shape(self):
        return self.values.shape


def luminance_of(image: HdrImage) -> LuminanceMap:
    """Rec. 709 luminance of a linear RGB image."""
    rgb = image.data.astype(np.float64)
    return LuminanceMap(rgb @ REC709, "world")


def log_luminance(values) -> np.ndarray:
    return np.log(np.maximum(np.asarray(values, dtype=np.float64), LOG_EPS))


def geometric_mean(values, region=None) -> float:
    """Geometric mean of luminance over an optional pixel subset.

    Parameters
    ----------
    values : LuminanceMap or array_like
        Luminance samples.
    region : array_like of bool, optional
        Mask selecting the pixels to average. All pixels when omitted.

    Returns
    -------
    float
        ``exp(mean(log(max(l, 1e-9))))`` over the region.
    """
    if isinstance(values, LuminanceMap):
        values = values.values
    values = np.asarray(values, dtype=np.float64)
    if region is not None:
        values = values[np.asarray(region, dtype=bool)]
    if values.size == 0:
        raise ValueError("geometric mean of an empty region")
    return float(np.exp(np.mean(log_luminance(values))))


def normalize_to_zero_ev(lum: LuminanceMap, gray: float = GRAY) -> tuple[LuminanceMap, float]:
    """Scale world luminance so its geometric mean sits at middle gray."""
    if lum.domain != "world":
        raise ValueError(f"expected world luminance, got {lum.domain}")
    if not np.any(lum.values > 0):
        warnings.warn("all-zero luminance; exposure normalisation is degenerate",
                      DegenerateInputWarning, stacklevel=2)
    scale = gray / geometric_mean(lum.values)
    return LuminanceMap(lum.values * scale, "scaled"), scale


def srgb_encode(linear):
    """Linear [0, 1] to sRGB-encoded [0, 1]; inputs are clipped first."""
    v = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    out = np.where(v <= SRGB_LINEAR_BREAK, 12.92 * v,
                   1.055 * np.power(v, 1 / 2.4) - 0.055)
    return out if out.ndim else float(out)


def srgb_decode(encoded):
    """Inverse of :func:`srgb_encode`."""
    v = np.clip(np.asarray(encoded, dtype=np.float64), 0.0, 1.0)
    out = np.where(v <= SRGB_ENCODED_BREAK, v / 12.92,
                   np.power((v + 0.055) / 1.055, 2.4))
    return out if out.ndim else float(out)
