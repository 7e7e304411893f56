"""Session-oriented HTTP + WebSocket server around the deformation solver."""

from .app import create_app

__all__ = ["create_app"]
