"""Sine-Gordon and nonlinear Klein-Gordon dynamics on metric graphs."""

from pathlib import Path

__version__ = "0.1.0"

DATA_DIR = Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    """Path of a bundled graph or run file, e.g. ``data_path("g0.json")``."""
    return DATA_DIR / name
