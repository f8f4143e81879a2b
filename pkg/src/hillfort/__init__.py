"""hillfort: elevation-aware micro-combat with cooperative Q learners."""

__version__ = "0.1.0"
