"""Deterministic simulator for multi-threaded coordinated atomic actions
mapped onto a nested-transaction substrate over crash-stop nodes."""

__version__ = "0.1.0"
