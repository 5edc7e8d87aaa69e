from .fpfh import DESCRIPTOR_DIM, FpfhDescriptor, FpfhEstimator, fpfh_at, pair_features
from .geodesic import GenderRatios, SurfaceGraph, gender_ratios, geodesic_distance
from .vector import (
    GENDER,
    GLOBAL,
    LOCAL,
    FeatureConfig,
    FeatureVector,
    GenderClassifier,
    GroupWeights,
    assemble_feature_vector,
    balanced_weights,
    extract_features,
    format_feature_vector,
    oriented_cloud,
    parse_feature_vector,
    read_feature_vector,
    write_feature_vector,
)

__all__ = (
    "DESCRIPTOR_DIM",
    "GENDER",
    "GLOBAL",
    "LOCAL",
    "FeatureConfig",
    "FeatureVector",
    "FpfhDescriptor",
    "FpfhEstimator",
    "GenderClassifier",
    "GenderRatios",
    "GroupWeights",
    "SurfaceGraph",
    "assemble_feature_vector",
    "balanced_weights",
    "extract_features",
    "format_feature_vector",
    "fpfh_at",
    "gender_ratios",
    "geodesic_distance",
    "oriented_cloud",
    "pair_features",
    "parse_feature_vector",
    "read_feature_vector",
    "write_feature_vector",
)
