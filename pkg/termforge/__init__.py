from __future__ import annotations

__version__ = "0.1.0"
DATASET_SCHEMA_VERSION = "1"

__all__ = ["__version__", "DATASET_SCHEMA_VERSION"]
