"""Dermoscopy lesion analysis."""

from ._lesionkit import (
    LesionkitError,
    border_irregularity,
    classify,
    confidence,
    confidence_pct,
    evaluate,
    extract_features,
    feature_names,
    jaccard,
    raw_features,
    read_image,
    rise,
    segment,
    train,
    write_png,
)

__all__ = [
    "LesionkitError",
    "border_irregularity",
    "classify",
    "confidence",
    "confidence_pct",
    "evaluate",
    "extract_features",
    "feature_names",
    "jaccard",
    "raw_features",
    "read_image",
    "rise",
    "segment",
    "train",
    "write_png",
]
