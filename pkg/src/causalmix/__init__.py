"""Causal-structure-aware synthetic tabular data generation and mixed
real/synthetic fine-tuning, with a benchmark harness and HTTP/CLI surfaces."""

__all__ = ["__version__"]

__version__ = "0.1.0"
