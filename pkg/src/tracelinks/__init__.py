"""Typed query calculus with self-tracing, trace-analysis provenance,
NRC normalization, and flat SQL emission."""

__version__ = "0.1.0"
