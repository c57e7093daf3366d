"""docrestore: restoration toolkit for degraded handwritten document images."""

__version__ = "0.1.0"
