"""Global photographic tone curve with a white point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_io import HdrImage, LdrImage
from .radiometry import GRAY, geometric_mean, luminance_of, srgb_encode


@dataclass(frozen=True)
class ToneCurveParams:
    """White point (scaled-luminance units) and key value of the curve."""

    l_white: float = 2.0 ** 2.5 * GRAY
    key: float = GRAY

    def __post_init__(self):
        if not self.l_white > 0:
            raise ValueError("l_white must be positive")
        if not 0 < self.key <= 1:
            raise ValueError("key must lie in (0, 1]")

    @classmethod
    def from_ev(cls, v_white: float = 2.5, key: float = GRAY) -> "ToneCurveParams":
        return cls(l_white=2.0 ** v_white * GRAY, key=key)


def reinhard(l, params: ToneCurveParams = ToneCurveParams()):
    """Evaluate ``l / (1 + l) * (1 + l / l_white**2)`` clipped to [0, 1].

    Samples at or above the white point return exactly 1.
    """
    l = np.asarray(l, dtype=np.float64)
    lw2 = params.l_white * params.l_white
    out = l / (1.0 + l) * (1.0 + l / lw2)
    out = np.where(l >= params.l_white, 1.0, np.clip(out, 0.0, 1.0))
    return out if out.ndim else float(out)


def recolor(rgb: np.ndarray, world: np.ndarray, display: np.ndarray) -> np.ndarray:
    """Scale linear RGB by ``display / world`` per pixel, then gamma-encode.

    Pixels with zero world luminance come out black. Channels are clipped to
    [0, 1] before encoding.
    """
    ratio = np.divide(display, world, out=np.zeros_like(display), where=world > 0)
    linear = rgb.astype(np.float64) * ratio[..., None]
    return srgb_encode(linear)


def global_tonemap(image: HdrImage, params: ToneCurveParams = ToneCurveParams()) -> LdrImage:
    """Single-curve tone mapping with key-value auto exposure."""
    world = luminance_of(image).values
    dt = params.key / geometric_mean(world)
    display = reinhard(world * dt, params)
    return LdrImage(recolor(image.data, world, display))
