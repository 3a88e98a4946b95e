"""HTTP service exposing the benchmark harness."""

from .app import create_app

__all__ = ["create_app"]
