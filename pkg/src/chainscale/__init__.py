"""chainscale: hybrid sidechain-sharding simulator for a file-storage market."""

__version__ = "0.1.0"
