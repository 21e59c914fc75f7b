"""Staged intent classification and slot tagging engine."""

__version__ = "0.1.0"
