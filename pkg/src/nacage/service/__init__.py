"""HTTP service layer: pydantic request/response models and the FastAPI app.

The service exposes one POST endpoint per analysis command.  The command-line
client in :mod:`nacage.cli` talks to this app, either in-process (default) or
over the network against a running server.
"""

from .app import create_app

__all__ = ["create_app"]
