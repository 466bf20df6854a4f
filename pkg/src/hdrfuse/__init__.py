"""Segmentation-based exposure compensation and multi-exposure fusion for HDR tone mapping."""

from .image_io import HdrImage, LdrImage, read_pfm, read_radiance_hdr, write_ldr, write_pfm
from .pipeline import PipelineConfig, run, run_conventional, run_global, run_proposed
from .tone_curve import ToneCurveParams, global_tonemap

__version__ = "0.1.0"

__all__ = [
    "HdrImage",
    "LdrImage",
    "PipelineConfig",
    "ToneCurveParams",
    "global_tonemap",
    "read_pfm",
    "read_radiance_hdr",
    "run",
    "run_conventional",
    "run_global",
    "run_proposed",
    "write_ldr",
    "write_pfm",
]
