"""Benchmark harness for simulating biased data-erasure requests on tabular classifiers."""

__version__ = "0.1.0"
