"""PGLEE-style liberal event extraction: prompt-based candidate generation,
heterogeneous event graphs, attention encoding, clustering and schema
induction."""

__version__ = "0.1.0"
