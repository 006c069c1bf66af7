"""Structural geospatial attribute extraction from patch-embedding grids."""

from .kmeans import ClusterModel, kmeans
from .visual import ClusterDescriptor, cluster_descriptor, sobel_edge_mask, upsample_labels
from .pseudo import CLASS_NAMES, pseudo_label, pseudo_label_scores
from .descriptor import (
    GeoDescriptor,
    aggregate_attributes,
    extract_geo_descriptor,
    shannon_entropy,
)

__all__ = [
    "CLASS_NAMES",
    "ClusterDescriptor",
    "ClusterModel",
    "GeoDescriptor",
    "aggregate_attributes",
    "cluster_descriptor",
    "extract_geo_descriptor",
    "kmeans",
    "pseudo_label",
    "pseudo_label_scores",
    "shannon_entropy",
    "sobel_edge_mask",
    "upsample_labels",
]
