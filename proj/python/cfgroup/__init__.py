"""Correspondence grouping with compatibility features."""

from ._core import (
    MODEL_FORMAT_VERSION,
    CfgroupError,
    Model,
    cloud_resolution,
    estimate_normals,
    estimate_rigid_transform,
    extract_cf,
    group_gc,
    group_nnsr,
    group_ransac,
    group_ss,
    label_inliers,
    read_ply,
    score,
    synthesize,
    write_ply,
)

__version__ = "0.1.0"

__all__ = [
    "MODEL_FORMAT_VERSION",
    "CfgroupError",
    "Model",
    "cloud_resolution",
    "estimate_normals",
    "estimate_rigid_transform",
    "extract_cf",
    "group_gc",
    "group_nnsr",
    "group_ransac",
    "group_ss",
    "label_inliers",
    "read_ply",
    "score",
    "synthesize",
    "write_ply",
]
