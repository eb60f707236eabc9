"""Python bindings for the JPEG amplification detector."""

from ._core import (
    DimensionError,
    Error,
    FormatError,
    Network,
    NumericError,
    ParameterError,
    auroc,
    calibrate_threshold,
    certify_beta,
    jad_score,
    jpeg_roundtrip,
    pgd,
    quant_tables,
)

__all__ = [
    "DimensionError",
    "Error",
    "FormatError",
    "Network",
    "NumericError",
    "ParameterError",
    "auroc",
    "calibrate_threshold",
    "certify_beta",
    "jad_score",
    "jpeg_roundtrip",
    "pgd",
    "quant_tables",
]
