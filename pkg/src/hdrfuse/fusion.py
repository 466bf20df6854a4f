"""Gaussian and Laplacian pyramids and weighted multi-exposure fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_io import LdrImage
from .radiometry import REC709, srgb_encode
from .tone_curve import ToneCurveParams, reinhard

KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
MERTENS_EPS = 1e-12
_LAPLACE_3X3 = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass
class Pyramid:
    levels: list
    kind: str


@dataclass
class WeightMaps:
    """``weights`` has shape ``(M, height, width)`` and sums to one over M."""

    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


def auto_levels(height: int, width: int) -> int:
    """Default depth, ``floor(log2(min(height, width)))`` (at least 1)."""
    return max(1, int(np.floor(np.log2(min(height, width)))))


def max_levels(height: int, width: int) -> int:
    return int(np.floor(np.log2(min(height, width)))) + 1


def _check_levels(raster: np.ndarray, levels: int) -> None:
    limit = max_levels(*raster.shape[:2])
    if not 1 <= levels <= limit:
        raise ValueError(f"levels must be in [1, {limit}] for a {raster.shape[:2]} raster, got {levels}")


def _blur(raster: np.ndarray, kernel: np.ndarray = KERNEL) -> np.ndarray:
    out = ndimage.correlate1d(raster, kernel, axis=0, mode="mirror")
    return ndimage.correlate1d(out, kernel, axis=1, mode="mirror")


def reduce(raster: np.ndarray) -> np.ndarray:
    return _blur(raster)[::2, ::2]


def expand(raster: np.ndarray, shape) -> np.ndarray:
    """Upsample to ``shape`` (rows, cols) by zero insertion and interpolation."""
    up = np.zeros(tuple(shape[:2]) + raster.shape[2:], dtype=raster.dtype)
    up[::2, ::2] = raster
    return _blur(up, 2.0 * KERNEL)


def gaussian_pyramid(raster, levels: int) -> Pyramid:
    raster = np.asarray(raster, dtype=np.float64)
    _check_levels(raster, levels)
    out = [raster]
    for _ in range(levels - 1):
        out.append(reduce(out[-1]))
    return Pyramid(out, "gaussian")


def laplacian_pyramid(raster, levels: int) -> Pyramid:
    gauss = gaussian_pyramid(raster, levels).levels
    bands = [fine - expand(coarse, fine.shape) for fine, coarse in zip(gauss, gauss[1:])]
    bands.append(gauss[-1])
    return Pyramid(bands, "laplacian")


def collapse(pyramid: Pyramid) -> np.ndarray:
    if pyramid.kind != "laplacian":
        raise ValueError("only Laplacian pyramids can be collapsed")
    out = pyramid.levels[-1]
    for band in reversed(pyramid.levels[:-1]):
        out = band + expand(out, band.shape)
    return out


def _softmax_neg_sq(d: np.ndarray) -> np.ndarray:
    logits = -d * d
    logits -= logits.max(axis=0)
    w = np.exp(logits)
    return w / w.sum(axis=0)


def proposed_weights(lum, mu_target, params: ToneCurveParams) -> WeightMaps:
    """Weights favouring pixels that land near their exposure's target.

    ``lum`` are the display luminances of the exposures (already tone mapped),
    so only the gamma curve is applied to them; the targets go through the
    tone curve and then gamma.
    """
    lum = np.stack([np.asarray(getattr(l, "values", l), dtype=np.float64) for l in lum])
    target = srgb_encode(reinhard(np.exp(np.asarray(mu_target, dtype=np.float64)), params))
    target = np.atleast_1d(target).reshape(-1, 1, 1)
    d = srgb_encode(lum) - target
    return WeightMaps(_softmax_neg_sq(d))


def contrast(rgb: np.ndarray) -> np.ndarray:
    gray = rgb @ REC709
    return np.abs(ndimage.correlate(gray, _LAPLACE_3X3, mode="mirror"))


def saturation(rgb: np.ndarray) -> np.ndarray:
    return rgb.std(axis=2)


def well_exposedness(rgb: np.ndarray, sigma: float = 0.2) -> np.ndarray:
    return np.exp(-((rgb - 0.5) ** 2) / (2 * sigma * sigma)).prod(axis=2)


def mertens_weights(stack) -> WeightMaps:
    """Contrast x saturation x well-exposedness, normalised across the stack."""
    raw = []
    for image in stack:
        rgb = np.asarray(getattr(image, "data", image), dtype=np.float64)
        raw.append(contrast(rgb) * saturation(rgb) * well_exposedness(rgb) + MERTENS_EPS)
    raw = np.stack(raw)
    return WeightMaps(raw / raw.sum(axis=0))


def fuse(stack, weights: WeightMaps, levels: int | None = None) -> LdrImage:
    """Blend the stack band by band with Gaussian-smoothed weights.

    Parameters
    ----------
    stack : sequence of LdrImage or array_like
        Exposure images in the sRGB domain, all the same size.
    weights : WeightMaps
        Normalised per-pixel weights, one map per image.
    levels : int, optional
        Pyramid depth; defaults to ``floor(log2(min(height, width)))``.

    Returns
    -------
    LdrImage
        The collapsed blend, clipped to [0, 1].
    """
    images = [np.asarray(getattr(x, "data", x), dtype=np.float64) for x in stack]
    if len(images) != len(weights):
        raise ValueError("stack and weights differ in length")
    shape = images[0].shape
    if any(x.shape != shape for x in images) or weights.weights.shape[1:] != shape[:2]:
        raise ValueError("stack images and weights must share dimensions")
    if levels is None:
        levels = auto_levels(*shape[:2])

    blended = None
    for image, w in zip(images, weights.weights):
        bands = laplacian_pyramid(image, levels).levels
        gauss = gaussian_pyramid(w, levels).levels
        terms = [g[..., None] * b for g, b in zip(gauss, bands)]
        blended = terms if blended is None else [acc + t for acc, t in zip(blended, terms)]
    out = collapse(Pyramid(blended, "laplacian"))
    return LdrImage(np.clip(out, 0.0, 1.0))
