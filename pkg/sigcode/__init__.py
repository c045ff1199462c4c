"""Randomized signature codes for decentralized interference networks"""

__version__ = "1.0.0"
