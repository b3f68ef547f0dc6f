"""patchlens: mine single-line bug fixes, quantify them, and train repair models."""

__version__ = "0.1.0"
