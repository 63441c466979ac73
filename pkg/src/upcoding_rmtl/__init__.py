"""Restricted mean time lost estimators for incident diagnostic coding."""

__version__ = "0.1.0"
