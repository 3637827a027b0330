"""spatialmem: per-user spatial memory engine with verified writes."""

__version__ = "0.1.0"
