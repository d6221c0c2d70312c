"""Entity type prediction for knowledge bases from short descriptions and links."""

__version__ = "0.1.0"

from .baselines import BM25TypeRanker, SDTypePredictor
from .embeddings import WordVectorTable, load_word_vectors
from .features import EntityFeaturizer, InputMask
from .kb import KnowledgeBase, TypeTaxonomy, ingest_dump
from .nn import NeuTypeClassifier

__all__ = [
    "BM25TypeRanker",
    "EntityFeaturizer",
    "InputMask",
    "KnowledgeBase",
    "NeuTypeClassifier",
    "SDTypePredictor",
    "TypeTaxonomy",
    "WordVectorTable",
    "ingest_dump",
    "load_word_vectors",
]
