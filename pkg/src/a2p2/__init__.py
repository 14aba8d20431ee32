"""A2P2: an AI-assisted provider platform for text-based protocolized therapy."""

__version__ = "0.1.0"
