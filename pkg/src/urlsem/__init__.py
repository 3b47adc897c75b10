"""Semantic annotation of Web-archive CDX indexes from URLs alone."""

__version__ = "0.1.0"
