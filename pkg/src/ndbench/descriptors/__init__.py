"""Descriptor extraction and post-processing."""
from .core import Descriptor, FeatureMap, as_descriptor, l2_normalize
from .gist import GistConfig, block_pool, gabor_bank, gabor_responses, gist_extract, load_gray
from .loss import triplet_loss
from .pca import PcaModel, pca_train, pca_whiten, whiten_raw
from .pooling import Region, RmacConfig, regional_max, rmac_aggregate, rmac_regions, spoc_aggregate

__all__ = [
    "Descriptor", "FeatureMap", "as_descriptor", "l2_normalize",
    "GistConfig", "block_pool", "gabor_bank", "gabor_responses", "gist_extract", "load_gray",
    "triplet_loss",
    "PcaModel", "pca_train", "pca_whiten", "whiten_raw",
    "Region", "RmacConfig", "regional_max", "rmac_aggregate", "rmac_regions", "spoc_aggregate",
]
