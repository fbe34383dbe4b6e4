"""Updatable adaptive learned index with a B+tree baseline."""

from .btree import BPlusTree
from .cost_model import CostWeights, ExpectedStats, NodeStats
from .gapped_array import GappedArray
from .index import AlexConfig, AlexIndex, DataNode, DuplicateKeyError, IndexReport, InternalNode
from .linear_model import LinearModel, fit, fit_progressive

__all__ = [
    "AlexConfig", "AlexIndex", "BPlusTree", "CostWeights", "DataNode", "DuplicateKeyError",
    "ExpectedStats", "GappedArray", "IndexReport", "InternalNode", "LinearModel", "NodeStats",
    "fit", "fit_progressive",
]
