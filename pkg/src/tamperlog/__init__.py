"""Tamper-evident log integrity: adaptive-chunk ingestion, Merkle commitment
with a root anchor, and inclusion-proof verification."""

__version__ = "0.1.0"
