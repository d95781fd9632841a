"""Breach-likelihood models for defense in depth against many independent attackers."""

__version__ = "0.1.0"
