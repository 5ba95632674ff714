"""Computable coarse geometry: controlled products, witness envelopes, boundary shadows."""

__version__ = "0.1.0"

from .spaces import (GraphSpace, MetricSpace, NormedSpace, PaperGrid, PaperGridSubspace, SampleSpec,
                     SpaceError, annulus_sample, build_fixture, build_space, grid_graph, rooted_tree,
                     star_graph, star_vertex)
from .products import (BusemannProduct, CompactificationProduct, CompactModelEmbedding, FamilyProduct,
                       GromovProduct, ProductError, ProductOracle, QuasiGeodesicFamily,
                       RestrictedProduct, TrivialProduct, build_graph_family, build_product,
                       restrict_product)
from .envelopes import MonotoneEnvelope1D, MonotoneEnvelope2D, envelope_1d, envelope_2d

__all__ = [
    "GraphSpace", "MetricSpace", "NormedSpace", "PaperGrid", "PaperGridSubspace", "SampleSpec",
    "SpaceError", "annulus_sample", "build_fixture", "build_space", "grid_graph", "rooted_tree",
    "star_graph", "star_vertex", "BusemannProduct", "CompactificationProduct", "CompactModelEmbedding",
    "FamilyProduct", "GromovProduct", "ProductError", "ProductOracle", "QuasiGeodesicFamily",
    "RestrictedProduct", "TrivialProduct", "build_graph_family", "build_product", "restrict_product",
    "MonotoneEnvelope1D", "MonotoneEnvelope2D", "envelope_1d", "envelope_2d",
]
