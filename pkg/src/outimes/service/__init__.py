"""FastAPI service wrapping the occupation-time library."""

from .app import app, create_app

__all__ = ["app", "create_app"]
