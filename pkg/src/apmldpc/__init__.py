"""Certified distance upper bounds for APM-LDPC CSS codes."""

__version__ = "0.1.0"
