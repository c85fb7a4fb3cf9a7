"""Commit-size-aware process metrics and hyper co-change centralities."""

__version__ = "0.1.0"
