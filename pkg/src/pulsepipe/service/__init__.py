"""HTTP/WebSocket gateway around a live pipeline session."""

from .app import SessionHub, build_app, serve
from .sources import FileSource, SynthSource

__all__ = ["SessionHub", "SynthSource", "FileSource", "build_app", "serve"]
