"""Category Trees clustering with secondary clusters and variance reports."""

from .core_model import CategoryClassifier, DataRow, compute_exemplar, compute_weights, row_error
from .ingest import Dataset, DatasetSpec, load_dataset
from .recluster import ClusterSet, recursive_recluster, secondary_clusters
from .tree import BuildConfig, Forest, build_forest, classify

__version__ = "0.1.0"
