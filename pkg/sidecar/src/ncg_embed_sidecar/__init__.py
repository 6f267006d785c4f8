"""Sentence embedding sidecar: a minimal HTTP service producing fixed
768-dimensional vectors with deterministic, order-preserving batches."""

__version__ = "0.1.0"

from .app import create_app
from .encoder import EMBED_DIM, HashedNgramEncoder, load_encoder

__all__ = ["create_app", "load_encoder", "HashedNgramEncoder", "EMBED_DIM", "__version__"]
