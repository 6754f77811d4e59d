"""Context-aware city layout synthesis on block-adjacency graphs."""

__version__ = "0.1.0"
