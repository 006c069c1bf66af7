"""HTTP service wrapping the pipeline (``uvicorn geo2sound.service:app``)."""

from .app import app, create_app

__all__ = ["app", "create_app"]
