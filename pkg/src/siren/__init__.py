"""Deception toolkit: lexical URL classifier, honeypot and weather-seeded RSA."""

__version__ = "0.1.0"
