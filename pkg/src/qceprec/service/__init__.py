"""FastAPI service exposing the precoder and the sweep harness."""

from .app import app

__all__ = ["app"]
