"""Shared helpers."""

from .io import load_json, save_json
from .log import init_logging

__all__ = ["save_json", "load_json", "init_logging"]
