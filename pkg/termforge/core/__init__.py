"""Core utilities shared by every stage (config, logging, errors, storage, manifests, workers)."""
